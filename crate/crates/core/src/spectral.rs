//! Fourier transform of the extension and the smoothed and truncated
//! surrogates built from it.
//!
//! With `F` the transform of `f~` and `Psi` the kernel cap,
//!
//! ```text
//! g(x) = (2 pi)^{-m} lambda^m int F(lambda n) e^{i lambda <n, x>} e^{-|n|^2 / 2} Psi(n) dn
//! h(x) = same integral restricted to |n| > theta sqrt(m)
//! ```
//!
//! `g` is evaluated by tensor Gauss-Legendre quadrature over `[-sqrt m, sqrt m]^m`,
//! by Monte Carlo over `n ~ N(0, I)`, or (m = 1) as the convolution
//! `E f~(x - (z + xi) / lambda)` with `z` normal and `xi ~ psi`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Arc, OnceLock};

use lru::LruCache;
use num_complex::{Complex, Complex64};
use parking_lot::Mutex;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::kernel::{PsiSampler, SmoothingKernel};
use crate::lipschitz::ExtendedFunction;
use crate::quad::gauss_legendre_f64;
use crate::rng::{chunked, merge_all, Estimate, MeanVar};
use crate::scalar::Scalar;

/// Target for twice the estimated quadrature error of `F`, relative to `||f~||_1`.
pub const F_RTOL: f64 = 1e-6;
/// Nodes per axis of the first trapezoid level.
pub const F_START_NODES: usize = 33;
/// Largest dimension with tensor quadrature.
pub const MAX_QUAD_DIM: usize = 3;
/// Capacity of the exact-evaluation cache of `F`.
pub const F_CACHE_CAPACITY: usize = 1 << 16;
/// Support samples used when `F` is itself a Monte Carlo estimate (m > 3).
pub const MC_TRANSFORM_SAMPLES: usize = 1 << 17;
/// Smallest sample count accepted by the Monte Carlo estimators.
pub const MIN_MC_SAMPLES: usize = 10_000;
/// Below `ZERO_PHASE_RTOL * ||f~||_1` the phase of `F` is reported as 0.
pub const ZERO_PHASE_RTOL: f64 = 1e-12;
/// Half-width of the tabulated `psi` used by [`SpectralSurrogate::g_convolution`].
pub const PSI_EXTENT: f64 = 200.0;
pub const PSI_STEP: f64 = 0.02;

/// Table spacing times support half-width.
const TABLE_STEP: f64 = 0.25;
const STENCIL: usize = 12;
const MAX_TABLE_ENTRIES: usize = 1 << 22;
const MAX_RULE_NODES: usize = 1 << 22;
const PANEL_NODES: usize = 12;
const CHECK_NODES: usize = 8;
const GAP_NODES: usize = 24;
const GAP_CHECK_NODES: usize = 16;
const RESEED: usize = 64;

/// Largest trapezoid node count per axis for tensor quadrature of `F`.
pub fn node_cap(m: usize) -> usize {
    match m {
        1 => 8193,
        2 => 257,
        3 => 65,
        _ => 0,
    }
}

#[inline]
fn cis(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, t)
}

/// `e^{i s u_j}` for `u_j = u_0 + j h`, by recurrence with periodic reseeding.
fn phase_vector(axis: &[f64], s: f64) -> Vec<Complex64> {
    let n = axis.len();
    if n < 2 {
        return axis.iter().map(|&u| cis(s * u)).collect();
    }
    let step = cis(s * (axis[1] - axis[0]));
    let mut out = Vec::with_capacity(n);
    let mut z = Complex64::new(1.0, 0.0);
    for (j, &u) in axis.iter().enumerate() {
        if j % RESEED == 0 {
            z = cis(s * u);
        }
        out.push(z);
        z *= step;
    }
    out
}

/// Replaces axis `axis` of a row-major tensor by `rows` new entries:
/// `out[.., r, ..] = sum_c mat[r * cols + c] data[.., c, ..]`.
fn mode_product(
    data: &[Complex64],
    shape: &[usize],
    axis: usize,
    mat: &[Complex64],
    rows: usize,
) -> (Vec<Complex64>, Vec<usize>) {
    let cols = shape[axis];
    debug_assert_eq!(mat.len(), rows * cols);
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * rows * inner];
    out.par_chunks_mut(inner).enumerate().for_each(|(or, dst)| {
        let (o, r) = (or / rows, or % rows);
        let mrow = &mat[r * cols..(r + 1) * cols];
        for (c, &a) in mrow.iter().enumerate() {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            let src = &data[(o * cols + c) * inner..(o * cols + c + 1) * inner];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += a * s;
            }
        }
    });
    let mut new_shape = shape.to_vec();
    new_shape[axis] = rows;
    (out, new_shape)
}

/// Contracts every axis of a square tensor against one vector per axis.
fn contract_vectors(data: &[Complex64], n: usize, vecs: &[Vec<Complex64>]) -> Complex64 {
    let mut cur: Vec<Complex64> = data.to_vec();
    for v in vecs.iter().rev() {
        cur = cur
            .chunks_exact(n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect();
    }
    cur[0]
}

#[derive(Debug, Clone)]
enum Nodes {
    /// Trapezoid tensor grid: node offsets per axis and `weight * f~` row-major.
    Tensor {
        n: usize,
        axes: Vec<Vec<f64>>,
        mass: Vec<f64>,
        live: Vec<bool>,
    },
    /// Uniform samples of the support box, `mass = volume * f~ / N`.
    Sampled {
        points: Vec<f64>,
        mass: Vec<f64>,
        mean_sq: f64,
    },
}

/// Numerical Fourier transform `F(v) = int f(u) e^{-i <v, u>} du` of a function
/// supported in a box.
#[derive(Debug, Clone)]
pub struct FourierTransform {
    m: usize,
    center: Vec<f64>,
    half_width: Vec<f64>,
    nodes: Nodes,
    l1: f64,
    error: f64,
}

impl FourierTransform {
    /// Tensor trapezoid rule for `f` on `[lo, hi]`, refined by node doubling until
    /// the Richardson estimate at probe frequencies up to `vmax` is below
    /// `F_RTOL * ||f||_1` or the per-axis cap is reached.
    pub fn from_fn<F>(lo: &[f64], hi: &[f64], vmax: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let m = lo.len();
        if m == 0 || m > MAX_QUAD_DIM || hi.len() != m {
            return Err(Error::Dimension {
                m,
                reason: "tensor quadrature of F needs 1 <= m <= 3".into(),
            });
        }
        if lo
            .iter()
            .zip(hi)
            .any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite())
        {
            return invalid("support box must satisfy lo <= hi");
        }
        let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
        let probes = probe_frequencies(m, vmax);
        let cap = node_cap(m);
        let mut n = F_START_NODES;
        loop {
            let values = sample_tensor(&center, &half, n, &f);
            let fine = tensor_nodes(&half, n, &values, 1);
            let coarse = tensor_nodes(&half, n, &values, 2);
            let mut t = Self {
                m,
                center: center.clone(),
                half_width: half.clone(),
                nodes: fine,
                l1: 0.0,
                error: 0.0,
            };
            t.l1 = t.mass_l1();
            let c = Self {
                nodes: coarse,
                ..t.clone()
            };
            let err = probes
                .iter()
                .map(|v| (t.eval_demod(v) - c.eval_demod(v)).norm())
                .fold(0.0, f64::max)
                / 3.0;
            t.error = err;
            let next = 2 * n - 1;
            if 2.0 * err <= F_RTOL * t.l1 || next > cap {
                if 2.0 * err > F_RTOL * t.l1 {
                    log::warn!(
                        "F quadrature at the m = {m} cap of {n} nodes per axis: estimated error {err:.3e} = {:.3e} of ||f||_1",
                        err / t.l1
                    );
                }
                return Ok(t);
            }
            n = next;
        }
    }

    /// Tensor quadrature of the extension over its support box.
    pub fn tensor<T: Scalar>(ext: &ExtendedFunction<T>, vmax: f64) -> Result<Self> {
        let (lo, hi) = ext.support_box();
        let lo: Vec<f64> = lo.iter().map(|v| v.as_f64()).collect();
        let hi: Vec<f64> = hi.iter().map(|v| v.as_f64()).collect();
        Self::from_fn(&lo, &hi, vmax, |x| {
            let xt: Vec<T> = x.iter().map(|&v| T::of(v)).collect();
            ext.eval(&xt).as_f64()
        })
    }

    /// Monte Carlo transform from `samples` uniform points of the support box.
    pub fn monte_carlo<T: Scalar>(
        ext: &ExtendedFunction<T>,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if samples < 2 {
            return invalid("Monte Carlo transform needs at least 2 samples");
        }
        let m = ext.dim();
        let (lo, hi) = ext.support_box();
        let center: Vec<f64> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| 0.5 * (a.as_f64() + b.as_f64()))
            .collect();
        let half: Vec<f64> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| 0.5 * (b.as_f64() - a.as_f64()))
            .collect();
        let volume: f64 = half.iter().map(|h| 2.0 * h).product();
        let parts = chunked(seed, samples, |rng, _, len| {
            let mut pts = Vec::with_capacity(len * m);
            let mut vals = Vec::with_capacity(len);
            let mut x = vec![T::zero(); m];
            for _ in 0..len {
                for k in 0..m {
                    let u = 2.0 * f64::unit_uniform(rng) - 1.0;
                    let off = u * half[k];
                    pts.push(off);
                    x[k] = T::of(center[k] + off);
                }
                vals.push(ext.eval(&x).as_f64());
            }
            (pts, vals)
        });
        let mut points = Vec::with_capacity(samples * m);
        let mut mass = Vec::with_capacity(samples);
        let mut mean_sq = 0.0;
        for (p, v) in parts {
            points.extend(p);
            for f in v {
                mean_sq += (volume * f).powi(2);
                mass.push(volume * f / samples as f64);
            }
        }
        mean_sq /= samples as f64;
        let mut t = Self {
            m,
            center,
            half_width: half,
            nodes: Nodes::Sampled {
                points,
                mass,
                mean_sq,
            },
            l1: 0.0,
            error: (mean_sq / samples as f64).sqrt(),
        };
        t.l1 = t.mass_l1();
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Quadrature approximation of `||f||_1`.
    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    /// Richardson error estimate (tensor) or worst-case standard error (sampled).
    pub fn error_estimate(&self) -> f64 {
        self.error
    }

    /// Nodes per axis, `None` for the sampled transform.
    pub fn nodes_per_axis(&self) -> Option<usize> {
        match &self.nodes {
            Nodes::Tensor { n, .. } => Some(*n),
            Nodes::Sampled { .. } => None,
        }
    }

    pub fn is_tensor(&self) -> bool {
        matches!(self.nodes, Nodes::Tensor { .. })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_width(&self) -> &[f64] {
        &self.half_width
    }

    fn mass_l1(&self) -> f64 {
        match &self.nodes {
            Nodes::Tensor { mass, .. } | Nodes::Sampled { mass, .. } => {
                mass.iter().map(|v| v.abs()).sum()
            }
        }
    }

    /// `F(v)`.
    pub fn eval(&self, v: &[f64]) -> Complex64 {
        let shift: f64 = v.iter().zip(&self.center).map(|(a, b)| a * b).sum();
        cis(-shift) * self.eval_demod(v)
    }

    /// `F(v)` together with its Monte Carlo standard error (zero for tensor rules).
    pub fn eval_with_stderr(&self, v: &[f64]) -> (Complex64, f64) {
        let f = self.eval(v);
        let se = match &self.nodes {
            Nodes::Tensor { .. } => 0.0,
            Nodes::Sampled { mass, mean_sq, .. } => {
                let n = mass.len() as f64;
                ((mean_sq - f.norm_sqr()).max(0.0) / n).sqrt()
            }
        };
        (f, se)
    }

    /// `e^{i <v, c>} F(v)` with `c` the box center.
    fn eval_demod(&self, v: &[f64]) -> Complex64 {
        match &self.nodes {
            Nodes::Tensor {
                n,
                axes,
                mass,
                live,
            } => {
                let n = *n;
                let m = self.m;
                let phases: Vec<Vec<Complex64>> =
                    (0..m).map(|k| phase_vector(&axes[k], -v[k])).collect();
                let last = &phases[m - 1];
                let mut cur: Vec<Complex64> = mass
                    .chunks_exact(n)
                    .zip(live)
                    .map(|(row, &alive)| {
                        if !alive {
                            return Complex64::new(0.0, 0.0);
                        }
                        row.iter().zip(last).map(|(&a, &p)| p * a).sum()
                    })
                    .collect();
                for k in (0..m - 1).rev() {
                    let p = &phases[k];
                    cur = cur
                        .chunks_exact(n)
                        .map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum())
                        .collect();
                }
                cur[0]
            }
            Nodes::Sampled { points, mass, .. } => points
                .chunks_exact(self.m)
                .zip(mass)
                .filter(|(_, &w)| w != 0.0)
                .map(|(u, &w)| {
                    let t: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                    cis(-t) * w
                })
                .sum(),
        }
    }

    /// `e^{i <v, c>} F(v)` on the tensor grid `v = (s_{a_1}, ..., s_{a_m})`,
    /// row-major in `a`.
    fn demod_on_grid(&self, freqs: &[f64]) -> Option<Vec<Complex64>> {
        let Nodes::Tensor { n, axes, mass, .. } = &self.nodes else {
            return None;
        };
        let rows = freqs.len();
        let mut data: Vec<Complex64> = mass.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let mut shape = vec![*n; self.m];
        for k in 0..self.m {
            let mat: Vec<Complex64> = freqs
                .iter()
                .flat_map(|&s| phase_vector(&axes[k], -s))
                .collect();
            let (d, s) = mode_product(&data, &shape, k, &mat, rows);
            data = d;
            shape = s;
        }
        Some(data)
    }
}

fn probe_frequencies(m: usize, vmax: f64) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = (0..m)
        .map(|k| (0..m).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
        .collect();
    if m > 1 {
        let d = 1.0 / (m as f64).sqrt();
        dirs.push(vec![d; m]);
        dirs.push((0..m).map(|j| if j % 2 == 0 { d } else { -d }).collect());
    }
    let mut out = vec![vec![0.0; m]];
    for d in &dirs {
        for s in [0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 1.0] {
            out.push(d.iter().map(|c| c * s * vmax).collect());
        }
    }
    out
}

fn axis_offsets(half: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

fn sample_tensor<F>(center: &[f64], half: &[f64], n: usize, f: &F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let m = center.len();
    let axes: Vec<Vec<f64>> = (0..m).map(|k| axis_offsets(half[k], n)).collect();
    let total = n.pow(m as u32);
    (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut x = vec![0.0; m];
            let mut r = idx;
            for k in (0..m).rev() {
                x[k] = center[k] + axes[k][r % n];
                r /= n;
            }
            f(&x)
        })
        .collect()
}

/// Trapezoid weights times values on every `stride`-th node of an `n`-grid.
fn tensor_nodes(half: &[f64], n: usize, values: &[f64], stride: usize) -> Nodes {
    let m = half.len();
    let nc = (n - 1) / stride + 1;
    let axes: Vec<Vec<f64>> = (0..m).map(|k| axis_offsets(half[k], nc)).collect();
    let weights: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let h = 2.0 * half[k] / (nc - 1) as f64;
            (0..nc)
                .map(|i| if i == 0 || i == nc - 1 { 0.5 * h } else { h })
                .collect()
        })
        .collect();
    let total = nc.pow(m as u32);
    let mut mass = Vec::with_capacity(total);
    for idx in 0..total {
        let mut r = idx;
        let mut fine = 0;
        let mut scale = 1.0;
        let mut mult = 1;
        for k in (0..m).rev() {
            let i = r % nc;
            r /= nc;
            fine += i * stride * mult;
            mult *= n;
            scale *= weights[k][i];
        }
        mass.push(values[fine] * scale);
    }
    let live = mass
        .chunks_exact(nc)
        .map(|row| row.iter().any(|&v| v != 0.0))
        .collect();
    Nodes::Tensor {
        n: nc,
        axes,
        mass,
        live,
    }
}

/// Equispaced table of the demodulated transform with 12-point Lagrange
/// interpolation per axis.
#[derive(Debug, Clone)]
struct SpectralTable {
    counts: Vec<usize>,
    step: Vec<f64>,
    origin: Vec<f64>,
    limit: Vec<f64>,
    values: Vec<Complex64>,
    weights: [f64; STENCIL],
}

impl SpectralTable {
    fn build(t: &FourierTransform, vmax: f64) -> Option<Self> {
        if !t.is_tensor() || t.m > 2 || t.l1 == 0.0 {
            return None;
        }
        let m = t.m;
        let mut counts = Vec::new();
        let mut step = Vec::new();
        let mut origin = Vec::new();
        let mut limit = Vec::new();
        for k in 0..m {
            let d = TABLE_STEP / t.half_width[k].max(1e-300);
            let half_count = ((vmax + STENCIL as f64 * d) / d).ceil() as usize;
            counts.push(2 * half_count + 1);
            step.push(d);
            origin.push(-(half_count as f64) * d);
            limit.push((half_count as f64 - (STENCIL / 2) as f64) * d);
        }
        if counts.iter().product::<usize>() > MAX_TABLE_ENTRIES {
            return None;
        }
        let values = if m == 1 {
            (0..counts[0])
                .into_par_iter()
                .map(|j| t.eval_demod(&[origin[0] + j as f64 * step[0]]))
                .collect()
        } else {
            let Nodes::Tensor { n, axes, mass, .. } = &t.nodes else {
                return None;
            };
            let mut data: Vec<Complex64> = mass.iter().map(|&a| Complex64::new(a, 0.0)).collect();
            let mut shape = vec![*n; m];
            for k in 0..m {
                let mat: Vec<Complex64> = (0..counts[k])
                    .flat_map(|j| phase_vector(&axes[k], -(origin[k] + j as f64 * step[k])))
                    .collect();
                let (d, s) = mode_product(&data, &shape, k, &mat, counts[k]);
                data = d;
                shape = s;
            }
            data
        };
        let mut weights = [0.0; STENCIL];
        let mut binom = 1.0;
        for (k, w) in weights.iter_mut().enumerate() {
            *w = if k % 2 == 0 { binom } else { -binom };
            binom = binom * (STENCIL - 1 - k) as f64 / (k + 1) as f64;
        }
        Some(Self {
            counts,
            step,
            origin,
            limit,
            values,
            weights,
        })
    }

    fn lagrange(&self, k: usize, v: f64) -> (usize, [f64; STENCIL]) {
        let pos = (v - self.origin[k]) / self.step[k];
        let j0 = (pos.floor() as isize - (STENCIL / 2 - 1) as isize)
            .clamp(0, (self.counts[k] - STENCIL) as isize) as usize;
        let t = pos - j0 as f64;
        let mut l = [0.0; STENCIL];
        let nearest = t.round();
        if (t - nearest).abs() < 1e-14 && nearest >= 0.0 && (nearest as usize) < STENCIL {
            l[nearest as usize] = 1.0;
            return (j0, l);
        }
        let mut total = 0.0;
        for (i, li) in l.iter_mut().enumerate() {
            *li = self.weights[i] / (t - i as f64);
            total += *li;
        }
        l.iter_mut().for_each(|li| *li /= total);
        (j0, l)
    }

    fn interpolate(&self, v: &[f64]) -> Option<Complex64> {
        if v.iter().zip(&self.limit).any(|(a, b)| !(a.abs() <= *b)) {
            return None;
        }
        match v.len() {
            1 => {
                let (j0, l) = self.lagrange(0, v[0]);
                Some(
                    l.iter()
                        .zip(&self.values[j0..j0 + STENCIL])
                        .map(|(&a, &b)| b * a)
                        .sum(),
                )
            }
            2 => {
                let (j0, l0) = self.lagrange(0, v[0]);
                let (j1, l1) = self.lagrange(1, v[1]);
                let c1 = self.counts[1];
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, &wa) in l0.iter().enumerate() {
                    let row = &self.values[(j0 + a) * c1 + j1..(j0 + a) * c1 + j1 + STENCIL];
                    let s: Complex64 = l1.iter().zip(row).map(|(&b, &z)| z * b).sum();
                    acc += s * wa;
                }
                Some(acc)
            }
            _ => None,
        }
    }
}

/// Quadrature value with its error estimate and the discarded imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate<T> {
    pub value: T,
    pub error: T,
    pub imag_residue: T,
}

impl<T: Scalar> QuadEstimate<T> {
    fn exact(value: T) -> Self {
        Self {
            value,
            error: T::zero(),
            imag_residue: T::zero(),
        }
    }
}

/// Monte Carlo estimates of `g`, `h` and `g - h` from shared draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedEstimate<T> {
    pub g: Estimate<T>,
    pub h: Estimate<T>,
    pub gap: Estimate<T>,
}

#[derive(Debug)]
struct GRule {
    nodes: Vec<f64>,
    weights: Vec<Complex64>,
    check_nodes: Vec<f64>,
    check_weights: Vec<Complex64>,
    reach: Vec<f64>,
}

type Lazy<V> = Arc<OnceLock<std::result::Result<V, String>>>;

/// `F`, `g` and `h` for one extension, kernel, `lambda` and `theta`.
#[derive(Debug, Clone)]
pub struct SpectralSurrogate<T> {
    ext: Arc<ExtendedFunction<T>>,
    kernel: Arc<SmoothingKernel<T>>,
    lambda: f64,
    theta: f64,
    transform: Arc<FourierTransform>,
    cache: Arc<Mutex<LruCache<Vec<u64>, Complex64>>>,
    table: Arc<OnceLock<Option<SpectralTable>>>,
    rule: Lazy<GRule>,
    sampler: Lazy<PsiSampler>,
}

impl<T: Scalar> SpectralSurrogate<T> {
    /// Builds the surrogate; `F` uses tensor quadrature for m <= 3 and a seeded
    /// Monte Carlo estimate above.
    pub fn new(
        ext: ExtendedFunction<T>,
        kernel: Arc<SmoothingKernel<T>>,
        lambda: T,
        theta: T,
    ) -> Result<Self> {
        let m = ext.dim();
        let vmax = lambda.as_f64() * (m as f64).sqrt();
        let transform = if m <= MAX_QUAD_DIM {
            FourierTransform::tensor(&ext, vmax)?
        } else {
            FourierTransform::monte_carlo(&ext, MC_TRANSFORM_SAMPLES, 0)?
        };
        Self::with_transform(Arc::new(ext), kernel, Arc::new(transform), lambda, theta)
    }

    /// Builds the surrogate around an existing transform of `ext`.
    pub fn with_transform(
        ext: Arc<ExtendedFunction<T>>,
        kernel: Arc<SmoothingKernel<T>>,
        transform: Arc<FourierTransform>,
        lambda: T,
        theta: T,
    ) -> Result<Self> {
        let m = ext.dim();
        if kernel.dim() != m || transform.dim() != m {
            return invalid(format!(
                "dimension mismatch: extension {m}, kernel {}, transform {}",
                kernel.dim(),
                transform.dim()
            ));
        }
        let (lambda, theta) = (lambda.as_f64(), theta.as_f64());
        if !(lambda > 0.0) || !lambda.is_finite() {
            return invalid(format!("lambda must be positive, got {lambda}"));
        }
        if !(theta >= 0.0) || !theta.is_finite() {
            return invalid(format!("theta must be >= 0, got {theta}"));
        }
        Ok(Self {
            ext,
            kernel,
            lambda,
            theta,
            transform,
            cache: Arc::new(Mutex::new(LruCache::new(
                NonZeroUsize::new(F_CACHE_CAPACITY).unwrap(),
            ))),
            table: Arc::default(),
            rule: Arc::default(),
            sampler: Arc::default(),
        })
    }

    /// Same `F` and `lambda`, different truncation level.
    pub fn with_theta(&self, theta: T) -> Result<Self> {
        let theta = theta.as_f64();
        if !(theta >= 0.0) || !theta.is_finite() {
            return invalid(format!("theta must be >= 0, got {theta}"));
        }
        Ok(Self {
            theta,
            ..self.clone()
        })
    }

    /// Same `F`, different `lambda`.
    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        let mut s = Self::with_transform(
            self.ext.clone(),
            self.kernel.clone(),
            self.transform.clone(),
            lambda,
            T::of(self.theta),
        )?;
        s.cache = self.cache.clone();
        s.sampler = self.sampler.clone();
        Ok(s)
    }

    pub fn ext(&self) -> &ExtendedFunction<T> {
        &self.ext
    }

    pub fn kernel(&self) -> &SmoothingKernel<T> {
        &self.kernel
    }

    pub fn transform(&self) -> &FourierTransform {
        &self.transform
    }

    pub fn dim(&self) -> usize {
        self.ext.dim()
    }

    pub fn lambda(&self) -> T {
        T::of(self.lambda)
    }

    pub fn theta(&self) -> T {
        T::of(self.theta)
    }

    /// Quadrature `||f~||_1`.
    pub fn l1_norm(&self) -> T {
        T::of(self.transform.l1)
    }

    /// `F(v)` from the quadrature rule, cached.
    pub fn fourier(&self, v: &[T]) -> Complex<T> {
        let vf: Vec<f64> = v.iter().map(|a| a.as_f64()).collect();
        let z = self.fourier_exact(&vf);
        Complex::new(T::of(z.re), T::of(z.im))
    }

    /// `(|F(v)|, arg F(v))`, with the phase set to 0 where `|F|` is below
    /// `ZERO_PHASE_RTOL * ||f~||_1`.
    pub fn fourier_polar(&self, v: &[T]) -> (T, T) {
        let vf: Vec<f64> = v.iter().map(|a| a.as_f64()).collect();
        let (r, phi) = self.polar_f64(&vf);
        (T::of(r), T::of(phi))
    }

    /// `F(v)` from the interpolation table where available (m <= 2, `|v_k|`
    /// within the table), otherwise as [`Self::fourier`].
    pub fn fourier_fast(&self, v: &[T]) -> Complex<T> {
        let vf: Vec<f64> = v.iter().map(|a| a.as_f64()).collect();
        let z = self.fourier_f64(&vf);
        Complex::new(T::of(z.re), T::of(z.im))
    }

    pub(crate) fn polar_f64(&self, v: &[f64]) -> (f64, f64) {
        let z = self.fourier_f64(v);
        let r = z.norm();
        if r < ZERO_PHASE_RTOL * self.transform.l1 {
            (r, 0.0)
        } else {
            (r, z.arg())
        }
    }

    pub(crate) fn fourier_exact(&self, v: &[f64]) -> Complex64 {
        let key: Vec<u64> = v.iter().map(|a| a.to_bits()).collect();
        if let Some(z) = self.cache.lock().get(&key) {
            return *z;
        }
        let z = self.transform.eval(v);
        self.cache.lock().put(key, z);
        z
    }

    pub(crate) fn fourier_f64(&self, v: &[f64]) -> Complex64 {
        let table = self.table.get_or_init(|| {
            let vmax = self.lambda * (self.dim() as f64).sqrt();
            SpectralTable::build(&self.transform, vmax)
        });
        if let Some(tab) = table {
            if let Some(z) = tab.interpolate(v) {
                let shift: f64 = v
                    .iter()
                    .zip(&self.transform.center)
                    .map(|(a, b)| a * b)
                    .sum();
                return cis(-shift) * z;
            }
        }
        self.fourier_exact(v)
    }

    /// `(2 pi)^{-m/2} lambda^m`, the prefactor of the Gaussian-expectation form.
    pub(crate) fn gauss_prefactor(&self) -> f64 {
        let m = self.dim() as f64;
        (m * self.lambda.ln() - 0.5 * m * (2.0 * PI).ln()).exp()
    }

    fn psi_radial(&self, r: f64) -> f64 {
        self.kernel.psi_cap_radial(T::of(r)).as_f64()
    }

    /// Per-axis bound on `|u|` over the support box.
    fn support_reach(&self) -> Vec<f64> {
        let (lo, hi) = self.ext.support_box();
        lo.iter()
            .zip(hi)
            .map(|(a, b)| a.as_f64().abs().max(b.as_f64().abs()))
            .collect()
    }

    fn build_rule(&self, reach: Vec<f64>) -> Result<GRule> {
        let m = self.dim();
        if !self.transform.is_tensor() {
            return Err(Error::Dimension {
                m,
                reason: "quadrature of g needs the tensor transform (m <= 3)".into(),
            });
        }
        let root = (m as f64).sqrt();
        let u = self.support_reach();
        let rate = (0..m).map(|k| u[k] + reach[k]).fold(0.0, f64::max) * self.lambda;
        let panels = (rate * root / (2.0 * PI)).ceil() as usize + 2;
        let (nodes, nw) = split_rule(root, panels, PANEL_NODES);
        let (check_nodes, cw) = split_rule(root, panels, CHECK_NODES);
        if (nodes.len() as f64).powi(m as i32) > MAX_RULE_NODES as f64 {
            return Err(Error::Quadrature(format!(
                "tensor rule for g would need {}^{m} nodes; use the Monte Carlo estimators",
                nodes.len()
            )));
        }
        let weights = self.rule_weights(&nodes, &nw)?;
        let check_weights = self.rule_weights(&check_nodes, &cw)?;
        Ok(GRule {
            nodes,
            weights,
            check_nodes,
            check_weights,
            reach,
        })
    }

    /// `W[a] = (2 pi)^{-m} lambda^m prod w e^{-|n|^2/2} Psi(n) F(lambda n)` on the tensor grid.
    fn rule_weights(&self, nodes: &[f64], w: &[f64]) -> Result<Vec<Complex64>> {
        let m = self.dim();
        let lam = self.lambda;
        let freqs: Vec<f64> = nodes.iter().map(|&s| lam * s).collect();
        let demod = self
            .transform
            .demod_on_grid(&freqs)
            .ok_or_else(|| Error::Quadrature("tensor transform required".into()))?;
        let shifts: Vec<Vec<Complex64>> = (0..m)
            .map(|k| {
                freqs
                    .iter()
                    .map(|&s| cis(-s * self.transform.center[k]))
                    .collect()
            })
            .collect();
        let pre = (m as f64 * (lam.ln() - (2.0 * PI).ln())).exp();
        let na = nodes.len();
        let out: Vec<Complex64> = (0..demod.len())
            .into_par_iter()
            .map(|idx| {
                let mut r = idx;
                let mut r2 = 0.0;
                let mut weight = pre;
                let mut shift = Complex64::new(1.0, 0.0);
                for k in (0..m).rev() {
                    let a = r % na;
                    r /= na;
                    r2 += nodes[a] * nodes[a];
                    weight *= w[a];
                    shift *= shifts[k][a];
                }
                let psi = self.psi_radial(r2.sqrt());
                if psi == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                demod[idx] * shift * (weight * (-0.5 * r2).exp() * psi)
            })
            .collect();
        if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("quadrature weights of g".into()));
        }
        Ok(out)
    }

    fn rule(&self) -> Result<&GRule> {
        let r = self.rule.get_or_init(|| {
            self.build_rule(self.support_reach())
                .map_err(|e| e.to_string())
        });
        r.as_ref().map_err(|e| Error::Quadrature(e.clone()))
    }

    fn apply_rule(&self, rule: &GRule, x: &[f64]) -> (Complex64, Complex64) {
        let lam = self.lambda;
        let main: Vec<Vec<Complex64>> = x
            .iter()
            .map(|&xk| rule.nodes.iter().map(|&s| cis(lam * s * xk)).collect())
            .collect();
        let check: Vec<Vec<Complex64>> = x
            .iter()
            .map(|&xk| {
                rule.check_nodes
                    .iter()
                    .map(|&s| cis(lam * s * xk))
                    .collect()
            })
            .collect();
        (
            contract_vectors(&rule.weights, rule.nodes.len(), &main),
            contract_vectors(&rule.check_weights, rule.check_nodes.len(), &check),
        )
    }

    fn check_point(&self, x: &[T]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return invalid(format!(
                "point of dimension {} for m = {}",
                x.len(),
                self.dim()
            ));
        }
        let xf: Vec<f64> = x.iter().map(|a| a.as_f64()).collect();
        if xf.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("evaluation point".into()));
        }
        Ok(xf)
    }

    /// `g(x)` by tensor Gauss-Legendre quadrature over `[-sqrt m, sqrt m]^m`
    /// (m <= 3). The error estimate compares 12- and 8-node panels.
    pub fn g_spectral(&self, x: &[T]) -> Result<QuadEstimate<T>> {
        let xf = self.check_point(x)?;
        if self.dim() > MAX_QUAD_DIM {
            return Err(Error::Dimension {
                m: self.dim(),
                reason: "g quadrature needs m <= 3; use g_mc".into(),
            });
        }
        if self.ext.is_zero() {
            return Ok(QuadEstimate::exact(T::zero()));
        }
        let rule = self.rule()?;
        let (main, check) = if xf.iter().zip(&rule.reach).all(|(a, r)| a.abs() <= *r) {
            self.apply_rule(rule, &xf)
        } else {
            let reach: Vec<f64> = xf
                .iter()
                .zip(&rule.reach)
                .map(|(a, r)| a.abs().max(*r))
                .collect();
            let local = self.build_rule(reach)?;
            self.apply_rule(&local, &xf)
        };
        Ok(QuadEstimate {
            value: T::of(main.re),
            error: T::of((main.re - check.re).abs()),
            imag_residue: T::of(main.im.abs()),
        })
    }

    pub fn g_spectral_many(&self, xs: &[Vec<T>]) -> Result<Vec<QuadEstimate<T>>> {
        if !self.ext.is_zero() && self.dim() <= MAX_QUAD_DIM {
            self.rule()?;
        }
        xs.par_iter().map(|x| self.g_spectral(x)).collect()
    }

    /// `g(x) - h(x)`: the integral over the ball `|n| <= theta sqrt m`.
    pub fn gap_quadrature(&self, x: &[T]) -> Result<QuadEstimate<T>> {
        let xf = self.check_point(x)?;
        let m = self.dim();
        if m > MAX_QUAD_DIM {
            return Err(Error::Dimension {
                m,
                reason: "gap quadrature needs m <= 3".into(),
            });
        }
        if self.theta == 0.0 || self.ext.is_zero() {
            return Ok(QuadEstimate::exact(T::zero()));
        }
        if self.theta >= 1.0 {
            return self.g_spectral(x);
        }
        let main = self.ball_integral(&xf, GAP_NODES, 1.0);
        let check = self.ball_integral(&xf, GAP_CHECK_NODES, 0.75);
        Ok(QuadEstimate {
            value: T::of(main.re),
            error: T::of((main.re - check.re).abs()),
            imag_residue: T::of(main.im.abs()),
        })
    }

    fn ball_integral(&self, x: &[f64], order: usize, angular_scale: f64) -> Complex64 {
        let m = self.dim();
        let lam = self.lambda;
        let rmax = self.theta * (m as f64).sqrt();
        let u: f64 = self
            .support_reach()
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt();
        let xr: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rate = lam * (u + xr);
        let panels = (rate * rmax / (2.0 * PI)).ceil() as usize + 1;
        let pre = (m as f64 * (lam.ln() - (2.0 * PI).ln())).exp();
        let term = |n: &[f64]| -> Complex64 {
            let r2: f64 = n.iter().map(|a| a * a).sum();
            let psi = self.psi_radial(r2.sqrt());
            if psi == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let v: Vec<f64> = n.iter().map(|a| lam * a).collect();
            let phase: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
            self.fourier_f64(&v) * cis(phase) * ((-0.5 * r2).exp() * psi)
        };
        let (rn, rw) = panel_rule(0.0, rmax, panels, order);
        let angular = (((2.0 * rate * rmax).ceil() as usize + 48) as f64 * angular_scale) as usize;
        let sum: Complex64 = match m {
            1 => rn
                .iter()
                .zip(&rw)
                .map(|(&r, &w)| (term(&[r]) + term(&[-r])) * w)
                .sum(),
            2 => {
                let k = angular.max(8);
                let dphi = 2.0 * PI / k as f64;
                rn.par_iter()
                    .zip(&rw)
                    .map(|(&r, &w)| {
                        let ring: Complex64 = (0..k)
                            .map(|j| {
                                let phi = j as f64 * dphi;
                                term(&[r * phi.cos(), r * phi.sin()])
                            })
                            .sum();
                        ring * (w * r * dphi)
                    })
                    .sum()
            }
            _ => {
                let k = angular.max(8);
                let dphi = 2.0 * PI / k as f64;
                let (cn, cw) = panel_rule(-1.0, 1.0, 1, (k / 2).max(8));
                rn.par_iter()
                    .zip(&rw)
                    .map(|(&r, &w)| {
                        let mut shell = Complex64::new(0.0, 0.0);
                        for (&c, &wc) in cn.iter().zip(&cw) {
                            let s = (1.0 - c * c).max(0.0).sqrt();
                            for j in 0..k {
                                let phi = j as f64 * dphi;
                                shell += term(&[r * s * phi.cos(), r * s * phi.sin(), r * c])
                                    * (wc * dphi);
                            }
                        }
                        shell * (w * r * r)
                    })
                    .sum()
            }
        };
        sum * pre
    }

    /// `h(x) = g(x) - gap(x)` by quadrature (m <= 3); exactly 0 when `theta >= 1`.
    pub fn h_quadrature(&self, x: &[T]) -> Result<QuadEstimate<T>> {
        self.check_point(x)?;
        if self.theta >= 1.0 {
            return Ok(QuadEstimate::exact(T::zero()));
        }
        let g = self.g_spectral(x)?;
        let gap = self.gap_quadrature(x)?;
        Ok(QuadEstimate {
            value: g.value - gap.value,
            error: g.error + gap.error,
            imag_residue: g.imag_residue + gap.imag_residue,
        })
    }

    /// Monte Carlo `g`, `h` and `g - h` at every point of `xs` from the same
    /// `samples` draws of `n ~ N(0, I_m)`.
    pub fn paired_mc(
        &self,
        xs: &[Vec<T>],
        samples: usize,
        seed: u64,
    ) -> Result<Vec<PairedEstimate<T>>> {
        if samples < MIN_MC_SAMPLES {
            return invalid(format!(
                "Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {samples}"
            ));
        }
        let pts: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| self.check_point(x))
            .collect::<Result<_>>()?;
        let m = self.dim();
        let root = (m as f64).sqrt();
        let cut = self.theta * root;
        let lam = self.lambda;
        let pre = self.gauss_prefactor();
        let parts = chunked(seed, samples, |rng, _, len| {
            let mut acc = vec![[MeanVar::new(); 3]; pts.len()];
            let mut n = vec![0.0; m];
            let mut v = vec![0.0; m];
            for _ in 0..len {
                for k in 0..m {
                    n[k] = f64::standard_normal(rng);
                }
                let r = n.iter().map(|a| a * a).sum::<f64>().sqrt();
                let psi = if r <= root { self.psi_radial(r) } else { 0.0 };
                if psi == 0.0 {
                    for a in acc.iter_mut() {
                        a.iter_mut().for_each(|s| s.push(0.0));
                    }
                    continue;
                }
                for k in 0..m {
                    v[k] = lam * n[k];
                }
                let f = self.fourier_f64(&v) * (pre * psi);
                let kept = r > cut;
                for (a, x) in acc.iter_mut().zip(&pts) {
                    let phase: f64 = v.iter().zip(x).map(|(p, q)| p * q).sum();
                    let val = (f * cis(phase)).re;
                    a[0].push(val);
                    if kept {
                        a[1].push(val);
                        a[2].push(0.0);
                    } else {
                        a[1].push(0.0);
                        a[2].push(val);
                    }
                }
            }
            acc
        });
        Ok((0..pts.len())
            .map(|i| {
                let pick =
                    |j: usize| Estimate::from_mean_var(&merge_all(parts.iter().map(|p| &p[i][j])));
                PairedEstimate {
                    g: pick(0),
                    h: pick(1),
                    gap: pick(2),
                }
            })
            .collect())
    }

    /// Monte Carlo `h(x)`.
    pub fn h_truncated(&self, x: &[T], samples: usize, seed: u64) -> Result<Estimate<T>> {
        Ok(self.paired_mc(std::slice::from_ref(&x.to_vec()), samples, seed)?[0].h)
    }

    pub fn h_truncated_many(
        &self,
        xs: &[Vec<T>],
        samples: usize,
        seed: u64,
    ) -> Result<Vec<Estimate<T>>> {
        Ok(self
            .paired_mc(xs, samples, seed)?
            .into_iter()
            .map(|p| p.h)
            .collect())
    }

    /// Monte Carlo `g(x)` from the Gaussian-expectation form.
    pub fn g_mc(&self, x: &[T], samples: usize, seed: u64) -> Result<Estimate<T>> {
        Ok(self.paired_mc(std::slice::from_ref(&x.to_vec()), samples, seed)?[0].g)
    }

    /// `g(x) = E f~(x - (z + xi) / lambda)` with `z ~ N(0, 1)` and `xi ~ psi`
    /// (m = 1 only).
    pub fn g_convolution(&self, x: &[T], samples: usize, seed: u64) -> Result<Estimate<T>> {
        if self.dim() != 1 {
            return Err(Error::Dimension {
                m: self.dim(),
                reason: "the convolution form needs psi, available at m = 1".into(),
            });
        }
        if samples < MIN_MC_SAMPLES {
            return invalid(format!(
                "Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {samples}"
            ));
        }
        let x0 = self.check_point(x)?[0];
        if self.ext.is_zero() {
            return Ok(Estimate::exact(T::zero()));
        }
        let sampler = self
            .sampler
            .get_or_init(|| {
                PsiSampler::new(&self.kernel, PSI_EXTENT, PSI_STEP).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| Error::Quadrature(e.clone()))?;
        let lam = self.lambda;
        let parts = chunked(seed, samples, |rng, _, len| {
            let mut acc = MeanVar::new();
            for _ in 0..len {
                let z = f64::standard_normal(rng);
                let xi = sampler.quantile(f64::unit_uniform(rng));
                let y = T::of(x0 - (z + xi) / lam);
                acc.push(self.ext.eval(&[y]).as_f64());
            }
            acc
        });
        Ok(Estimate::from_mean_var(&merge_all(&parts)))
    }
}

/// Composite Gauss-Legendre nodes on `[-root, 0]` and `[0, root]`.
fn split_rule(root: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut n, mut w) = panel_rule(-root, 0.0, panels, order);
    let (n2, w2) = panel_rule(0.0, root, panels, order);
    n.extend(n2);
    w.extend(w2);
    (n, w)
}

fn panel_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre_f64(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lipschitz::{extend, recenter};
    use crate::targets::{sample, Target};

    fn surrogate(target: Target, m: usize, lambda: f64, theta: f64) -> SpectralSurrogate<f64> {
        let f = recenter(&sample::<f64>(target, m).unwrap());
        let ext = extend(&f).unwrap();
        let kernel = Arc::new(SmoothingKernel::new(m).unwrap());
        SpectralSurrogate::new(ext, kernel, lambda, theta).unwrap()
    }

    fn tent_1d(v: f64) -> f64 {
        // recentered tent: 1/2 - |x| on [-1, 1], -(3/2 - |x|) on 1 <= |x| <= 3/2
        if v == 0.0 {
            return -0.25;
        }
        (2.0 - 4.0 * v.cos() + 2.0 * (1.5 * v).cos()) / (v * v)
    }

    #[test]
    fn pure_tent_transform() {
        let t = FourierTransform::from_fn(&[-1.0], &[1.0], 20.0, |x| (1.0 - x[0].abs()).max(0.0))
            .unwrap();
        let f = t.eval(&[PI]);
        assert!((f.re - 4.0 / (PI * PI)).abs() < 1e-6, "{f}");
        assert!(f.im.abs() < 1e-12);
        assert!(t.error_estimate() <= F_RTOL * t.l1_norm());
    }

    #[test]
    fn extension_transform_matches_closed_form() {
        let s = surrogate(Target::Tent, 1, 20.0, 0.05);
        let l1 = s.transform().l1_norm();
        for &v in &[0.0, 0.5, 1.0, 3.7, 10.0, 19.0, -7.3] {
            let f = s.fourier(&[v]);
            assert!(
                (f.re - tent_1d(v)).abs() < 1e-6 * l1,
                "v = {v}: {} vs {}",
                f.re,
                tent_1d(v)
            );
            assert!(f.im.abs() < 1e-9);
        }
    }

    #[test]
    fn transform_symmetries_and_bound() {
        use rand::Rng;
        let s = surrogate(Target::Sin3, 2, 10.0, 0.05);
        let l1 = s.transform().l1_norm();
        let f0 = s.fourier(&[0.0, 0.0]);
        assert!(f0.im.abs() < 1e-12);
        let mut rng = crate::rng::substream(3, 0);
        for _ in 0..100 {
            let v = [rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0)];
            let f = s.fourier(&v);
            let g = s.fourier(&[-v[0], -v[1]]);
            assert!((f - g.conj()).norm() < 1e-9);
            assert!(f.norm() <= l1 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        use rand::Rng;
        for m in [1, 2] {
            let s = surrogate(Target::Tent, m, 20.0, 0.05);
            let l1 = s.transform().l1_norm();
            let mut rng = crate::rng::substream(11, m as u64);
            let vmax = 20.0 * (m as f64).sqrt();
            for _ in 0..200 {
                let v: Vec<f64> = (0..m).map(|_| rng.random_range(-vmax..vmax)).collect();
                let a = s.fourier_f64(&v);
                let b = s.transform().eval(&v);
                assert!((a - b).norm() < 1e-9 * l1, "m = {m}, v = {v:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn g_is_close_to_extension() {
        let s = surrogate(Target::Tent, 1, 20.0, 0.05);
        let g = s.g_spectral(&[0.0]).unwrap();
        let bound = (2.0 - 2f64.cbrt() * crate::specfun::AIRY_A) / 20.0;
        assert!((g.value - 0.5).abs() <= bound);
        assert!(g.error < 1e-8);
        assert!(g.imag_residue < 1e-9);
    }

    #[test]
    fn dual_representations_agree() {
        let s = surrogate(Target::Tent, 1, 5.0, 0.05);
        for &x in &[-0.8, 0.0, 0.3] {
            let a = s.g_spectral(&[x]).unwrap().value;
            let b = s.g_convolution(&[x], 200_000, 7).unwrap();
            assert!(
                (a - b.value).abs() <= 3.0 * b.stderr + 1e-3,
                "x = {x}: {a} vs {:?}",
                b
            );
        }
    }

    #[test]
    fn degenerate_truncations() {
        let s = surrogate(Target::Tent, 1, 10.0, 0.0);
        let g = s.g_spectral(&[0.2]).unwrap().value;
        let h = s.h_quadrature(&[0.2]).unwrap().value;
        assert_eq!(g, h);
        let s1 = s.with_theta(1.0).unwrap();
        assert_eq!(s1.h_quadrature(&[0.2]).unwrap().value, 0.0);
        assert_eq!(s1.h_truncated(&[0.2], 20_000, 1).unwrap().value, 0.0);
    }

    #[test]
    fn monte_carlo_matches_quadrature() {
        let s = surrogate(Target::Tent, 2, 5.0, 0.1);
        let xs = vec![vec![0.0, 0.0], vec![0.5, -0.25]];
        let mc = s.paired_mc(&xs, 200_000, 5).unwrap();
        for (x, e) in xs.iter().zip(&mc) {
            let g = s.g_spectral(x).unwrap();
            let h = s.h_quadrature(x).unwrap();
            assert!(
                (e.g.value - g.value).abs() < 4.0 * e.g.stderr + 1e-6,
                "{e:?} vs {g:?}"
            );
            assert!(
                (e.h.value - h.value).abs() < 4.0 * e.h.stderr + 1e-6,
                "{e:?} vs {h:?}"
            );
        }
    }

    #[test]
    fn zero_extension_gives_zero() {
        use crate::geometry::Compactum;
        use crate::lipschitz::SampledFunction;
        let k = Compactum::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let f = SampledFunction::new(k, vec![5.0, 5.0], Some(1.0)).unwrap();
        let ext = extend(&recenter(&f)).unwrap();
        let s = SpectralSurrogate::new(ext, Arc::new(SmoothingKernel::new(1).unwrap()), 10.0, 0.05)
            .unwrap();
        assert_eq!(s.g_spectral(&[0.3]).unwrap().value, 0.0);
        assert_eq!(s.h_truncated(&[0.3], 10_000, 0).unwrap().value, 0.0);
        assert_eq!(s.g_convolution(&[0.3], 10_000, 0).unwrap().value, 0.0);
    }
}
