//! Random-feature ReLU networks: hidden-layer sampling, constructive outer
//! weights from the weight density `G`, least-squares outer weights,
//! evaluation, sup-norm errors and the Hoeffding tail.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::minkowski_ball_volume;
use crate::linalg::{lstsq_min_norm, lstsq_ridge, Mat};
use crate::lipschitz::ExtendedFunction;
use crate::rng::{chunked, Estimate};
use crate::scalar::{dot, relu, Scalar};
use crate::spectral::SpectralSurrogate;

/// Format tag of serialized networks.
pub const FORMAT: &str = "rvfl-network";
pub const FORMAT_VERSION: u32 = 1;

/// Random hidden layer: `w_j` with i.i.d. `N(0, sigma^2)` coordinates and
/// `b_j ~ U[-sigma R sqrt(m), sigma R sqrt(m)]`.
///
/// Unit `j` is drawn from stream `j / CHUNK` of the seed, so the first `n`
/// units of a wider layer equal the layer of width `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer<T> {
    m: usize,
    sigma: T,
    radius: T,
    seed: u64,
    weights: Vec<T>,
    biases: Vec<T>,
}

impl<T: Scalar> HiddenLayer<T> {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn width(&self) -> usize {
        self.biases.len()
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `sigma R sqrt(m)`.
    pub fn bias_bound(&self) -> T {
        self.sigma * self.radius * T::of_usize(self.m).sqrt()
    }

    pub fn weight(&self, j: usize) -> &[T] {
        &self.weights[j * self.m..(j + 1) * self.m]
    }

    pub fn bias(&self, j: usize) -> T {
        self.biases[j]
    }

    /// Row-major `n x m` weights.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn biases(&self) -> &[T] {
        &self.biases
    }

    /// `rho(<w_j, x> + b_j)` for every unit.
    pub fn features(&self, x: &[T]) -> Vec<T> {
        self.weights
            .chunks_exact(self.m)
            .zip(&self.biases)
            .map(|(w, &b)| relu(dot(w, x) + b))
            .collect()
    }
}

/// `n` units with `w ~ N(0, sigma^2 I_m)` and `b ~ U[-sigma R sqrt(m), sigma R sqrt(m)]`.
///
/// Unit `j` depends only on `(seed, j)`, so a wider layer extends a narrower
/// one. Draws are made in `f64`, so a seed gives the same layer in every
/// precision.
pub fn sample_hidden<T: Scalar>(
    n: usize,
    m: usize,
    sigma: T,
    radius: T,
    seed: u64,
) -> Result<HiddenLayer<T>> {
    if n == 0 || m == 0 {
        return invalid("hidden layer needs n >= 1 and m >= 1");
    }
    if !(sigma > T::zero()) || !sigma.is_finite() || !(radius > T::zero()) || !radius.is_finite() {
        return invalid(format!(
            "sigma and R must be positive, got {sigma} and {radius}"
        ));
    }
    let bound = sigma * radius * T::of_usize(m).sqrt();
    let parts = chunked(seed, n, |rng, _, len| {
        let mut w = Vec::with_capacity(len * m);
        let mut b = Vec::with_capacity(len);
        for _ in 0..len {
            for _ in 0..m {
                w.push(sigma * T::of(f64::standard_normal(rng)));
            }
            let u = f64::unit_uniform(rng);
            b.push(T::of(2.0 * u - 1.0) * bound);
        }
        (w, b)
    });
    let mut weights = Vec::with_capacity(n * m);
    let mut biases = Vec::with_capacity(n);
    for (w, b) in parts {
        weights.extend(w);
        biases.extend(b);
    }
    Ok(HiddenLayer {
        m,
        sigma,
        radius,
        seed,
        weights,
        biases,
    })
}

/// How outer weights were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// `a_j = G(w_j, b_j) / n` plus the boundary terms as a direct link and bias.
    Constructive,
    /// `a_j = G(w_j, b_j) / n` only.
    ConstructiveLiteral,
    LeastSquares,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Constructive => "constructive",
            Provenance::ConstructiveLiteral => "constructive-literal",
            Provenance::LeastSquares => "least-squares",
        })
    }
}

/// Choice of constructive outer weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Construction {
    /// Boundary terms `D (<w, x> + B) + E` restored, so `E[H] = h` on `K`.
    #[default]
    BoundaryCompensated,
    /// Outer weights `G / n` exactly as in the integration-by-parts formula.
    Literal,
}

impl FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "compensated" | "boundary-compensated" => Ok(Construction::BoundaryCompensated),
            "literal" => Ok(Construction::Literal),
            other => invalid(format!(
                "unknown construction '{other}' (expected compensated or literal)"
            )),
        }
    }
}

/// `N(x) = sum_j a_j rho(<w_j, x - p> + b_j) + <c, x - p> + zeta`.
///
/// `p` is the recentering offset; `c` is zero except for compensated
/// constructive and direct-link least-squares networks.
#[derive(Debug, Clone, PartialEq)]
pub struct RvflNetwork<T> {
    pub layer: HiddenLayer<T>,
    pub outer: Vec<T>,
    pub direct: Vec<T>,
    pub zeta: T,
    pub offset: Vec<T>,
    pub provenance: Provenance,
}

impl<T: Scalar> RvflNetwork<T> {
    pub fn dim(&self) -> usize {
        self.layer.m
    }

    pub fn width(&self) -> usize {
        self.outer.len()
    }

    /// Evaluates at a point given in the original coordinates.
    pub fn eval(&self, x: &[T]) -> T {
        let local: Vec<T> = x.iter().zip(&self.offset).map(|(&a, &p)| a - p).collect();
        self.eval_local(&local)
    }

    /// Evaluates at `x - p`.
    pub fn eval_local(&self, x: &[T]) -> T {
        let hidden: T = self
            .layer
            .weights
            .chunks_exact(self.layer.m)
            .zip(&self.layer.biases)
            .zip(&self.outer)
            .map(|((w, &b), &a)| a * relu(dot(w, x) + b))
            .sum();
        hidden + dot(&self.direct, x) + self.zeta
    }

    pub fn eval_many(&self, xs: &[Vec<T>]) -> Vec<T> {
        xs.par_iter().map(|x| self.eval(x)).collect()
    }

    /// `sum_j |a_j| |w_j| + |c|`, a Lipschitz constant of `N`.
    pub fn lipschitz_bound(&self) -> T {
        let hidden: T = self
            .layer
            .weights
            .chunks_exact(self.layer.m)
            .zip(&self.outer)
            .map(|(w, &a)| a.abs() * dot(w, w).sqrt())
            .sum();
        hidden + dot(&self.direct, &self.direct).sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(
            &NetworkDocument::from_network(self),
        )?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDocument = serde_json::from_str(text)?;
        doc.into_network()
    }
}

/// Serialized network; arrays are base64 of little-endian `dtype` values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub format: String,
    pub version: u32,
    pub dtype: String,
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub seed: u64,
    pub zeta: String,
    pub provenance: Provenance,
    pub offset: String,
    pub direct: String,
    pub w: String,
    pub b: String,
    pub a: String,
}

fn encode<T: Scalar>(values: &[T]) -> String {
    let mut buf = Vec::with_capacity(values.len() * T::BYTES);
    for &v in values {
        v.write_le(&mut buf);
    }
    B64.encode(buf)
}

fn decode<T: Scalar>(text: &str, expected: usize, field: &str) -> Result<Vec<T>> {
    let bytes = B64
        .decode(text)
        .map_err(|e| Error::Format(format!("field {field}: {e}")))?;
    if bytes.len() != expected * T::BYTES {
        return Err(Error::Format(format!(
            "field {field}: {} bytes, expected {}",
            bytes.len(),
            expected * T::BYTES
        )));
    }
    Ok(bytes.chunks_exact(T::BYTES).map(T::read_le).collect())
}

impl NetworkDocument {
    pub fn from_network<T: Scalar>(net: &RvflNetwork<T>) -> Self {
        Self {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            dtype: T::DTYPE.into(),
            m: net.layer.m,
            n: net.width(),
            sigma: net.layer.sigma.as_f64(),
            radius: net.layer.radius.as_f64(),
            seed: net.layer.seed,
            zeta: encode(&[net.zeta]),
            provenance: net.provenance,
            offset: encode(&net.offset),
            direct: encode(&net.direct),
            w: encode(&net.layer.weights),
            b: encode(&net.layer.biases),
            a: encode(&net.outer),
        }
    }

    pub fn into_network<T: Scalar>(self) -> Result<RvflNetwork<T>> {
        if self.format != FORMAT || self.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported document {} v{}",
                self.format, self.version
            )));
        }
        if self.dtype != T::DTYPE {
            return Err(Error::Format(format!(
                "dtype {} read as {}",
                self.dtype,
                T::DTYPE
            )));
        }
        let (m, n) = (self.m, self.n);
        if m == 0 || n == 0 {
            return Err(Error::Format("m and n must be positive".into()));
        }
        let layer = HiddenLayer {
            m,
            sigma: T::of(self.sigma),
            radius: T::of(self.radius),
            seed: self.seed,
            weights: decode(&self.w, n * m, "w")?,
            biases: decode(&self.b, n, "b")?,
        };
        Ok(RvflNetwork {
            layer,
            outer: decode(&self.a, n, "a")?,
            direct: decode(&self.direct, m, "direct")?,
            zeta: decode::<T>(&self.zeta, 1, "zeta")?[0],
            offset: decode(&self.offset, m, "offset")?,
            provenance: self.provenance,
        })
    }
}

/// `|K~| = |K + (M / ell) B|` by Monte Carlo (zero when `M = 0`).
pub fn support_volume<T: Scalar>(
    ext: &ExtendedFunction<T>,
    samples: usize,
    seed: u64,
) -> Result<Estimate<T>> {
    if ext.is_zero() {
        return Ok(Estimate::exact(T::zero()));
    }
    minkowski_ball_volume(ext.base().domain().points(), ext.reach(), samples, seed)
}

/// Per-unit contributions `G rho(<w, x> + b) + D (<w, x> + B) + E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitTerms<T> {
    pub g: T,
    pub d: T,
    pub e: T,
}

/// The outer-weight density `G(w, b)` for one surrogate and `sigma`, with
/// `Lambda = lambda / sigma` and `B = sigma R sqrt(m)`.
#[derive(Debug, Clone)]
pub struct WeightDensity<T> {
    surrogate: SpectralSurrogate<T>,
    sigma: f64,
    big_lambda: f64,
    radius: f64,
    support_volume: f64,
}

impl<T: Scalar> WeightDensity<T> {
    /// `support_volume` is `|K~|`, used only by the bounds.
    pub fn new(surrogate: SpectralSurrogate<T>, sigma: T, support_volume: T) -> Result<Self> {
        let sigma = sigma.as_f64();
        if !(sigma > 0.0) || !sigma.is_finite() {
            return invalid(format!("sigma must be positive, got {sigma}"));
        }
        let vol = support_volume.as_f64();
        if !(vol >= 0.0) || !vol.is_finite() {
            return invalid(format!("support volume must be >= 0, got {vol}"));
        }
        let radius = surrogate.ext().radius().as_f64();
        let big_lambda = surrogate.lambda().as_f64() / sigma;
        Ok(Self {
            surrogate,
            sigma,
            big_lambda,
            radius,
            support_volume: vol,
        })
    }

    pub fn surrogate(&self) -> &SpectralSurrogate<T> {
        &self.surrogate
    }

    pub fn sigma(&self) -> T {
        T::of(self.sigma)
    }

    /// `Lambda = lambda / sigma`.
    pub fn big_lambda(&self) -> T {
        T::of(self.big_lambda)
    }

    pub fn radius(&self) -> T {
        T::of(self.radius)
    }

    pub fn support_volume(&self) -> T {
        T::of(self.support_volume)
    }

    /// `B = sigma R sqrt(m)`.
    pub fn bias_bound(&self) -> T {
        T::of(self.bias_bound_f64())
    }

    fn bias_bound_f64(&self) -> f64 {
        self.sigma * self.radius * (self.surrogate.dim() as f64).sqrt()
    }

    /// `ln A(w)` with `A = (2 pi)^{-m/2} lambda^m Psi(w / sigma) [|w| >= theta sigma sqrt m]`,
    /// `None` where `A = 0`.
    fn ln_amplitude(&self, w: &[f64]) -> Option<f64> {
        let m = self.surrogate.dim() as f64;
        let r = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        let theta = self.surrogate.theta().as_f64();
        if r < theta * self.sigma * m.sqrt() {
            return None;
        }
        let psi = self
            .surrogate
            .kernel()
            .psi_cap_radial(T::of(r / self.sigma))
            .as_f64();
        if psi <= 0.0 {
            return None;
        }
        let lam = self.surrogate.lambda().as_f64();
        Some(m * lam.ln() - 0.5 * m * (2.0 * PI).ln() + psi.ln())
    }

    /// `(|F(Lambda w)|, arg F(Lambda w))`.
    fn spectrum(&self, w: &[f64]) -> (f64, f64) {
        let v: Vec<f64> = w.iter().map(|a| self.big_lambda * a).collect();
        self.surrogate.polar_f64(&v)
    }

    /// `G(w, b) = -2 sigma R sqrt(m) Lambda^2 (2 pi)^{-m/2} lambda^m |F(Lambda w)|
    /// Psi(w / sigma) [|w| >= theta sigma sqrt m] cos(Lambda b - arg F(Lambda w))`.
    pub fn weight_density(&self, w: &[T], b: T) -> Result<T> {
        Ok(self.unit_terms(w, b)?.g)
    }

    /// `G`, `D` and `E` at `(w, b)`, assembled from logarithms of the factors.
    pub fn unit_terms(&self, w: &[T], b: T) -> Result<UnitTerms<T>> {
        if w.len() != self.surrogate.dim() {
            return invalid(format!(
                "weight of dimension {} for m = {}",
                w.len(),
                self.surrogate.dim()
            ));
        }
        let wf: Vec<f64> = w.iter().map(|a| a.as_f64()).collect();
        let zero = UnitTerms {
            g: T::zero(),
            d: T::zero(),
            e: T::zero(),
        };
        let Some(ln_a) = self.ln_amplitude(&wf) else {
            return Ok(zero);
        };
        let (mag, phi) = self.spectrum(&wf);
        if mag == 0.0 {
            return Ok(zero);
        }
        let ln_af = ln_a + mag.ln();
        let lam = self.big_lambda;
        let bb = self.bias_bound_f64();
        let ln_g = LN_2 + bb.ln() + 2.0 * lam.ln() + ln_af;
        let g = -signed_exp(ln_g, (lam * b.as_f64() - phi).cos(), "G(w, b)")?;
        let e = signed_exp(ln_af, (phi - lam * bb).cos(), "E(w)")?;
        let d = -signed_exp(lam.ln() + ln_af, (phi - lam * bb).sin(), "D(w)")?;
        Ok(UnitTerms {
            g: T::of(g),
            d: T::of(d),
            e: T::of(e),
        })
    }

    /// `ln B_H` with `B_H = 2 R^2 sqrt(m) (2 pi)^{-m/2} lambda^{m+1} (1 + 1/theta) ell |K~|`.
    pub fn ln_bound(&self) -> f64 {
        let m = self.surrogate.dim() as f64;
        let lam = self.surrogate.lambda().as_f64();
        let theta = self.surrogate.theta().as_f64();
        let ell = self.surrogate.ext().ell().as_f64();
        LN_2 + 2.0 * self.radius.ln() + 0.5 * m.ln() - 0.5 * m * (2.0 * PI).ln()
            + (m + 1.0) * lam.ln()
            + (1.0 + 1.0 / theta).ln()
            + ell.ln()
            + self.support_volume.ln()
    }

    /// The almost-sure bound on `|G(w, b) rho(<w, x> + b)|` for `x` in `K`.
    pub fn bound(&self) -> T {
        T::of(self.ln_bound().exp())
    }

    /// `ln` of the bound on the compensated per-unit term
    /// `(2 pi)^{-m/2} lambda^m ell |K~| (2 R^2 sqrt(m) lambda (1 + 1/theta)
    /// + R (1 + 1/theta) + min(R, 1 / (lambda theta sqrt m)))`.
    pub fn ln_compensated_bound(&self) -> f64 {
        let m = self.surrogate.dim() as f64;
        let lam = self.surrogate.lambda().as_f64();
        let theta = self.surrogate.theta().as_f64();
        let ell = self.surrogate.ext().ell().as_f64();
        let r = self.radius;
        let inv = 1.0 + 1.0 / theta;
        let tail = r.min(1.0 / (lam * theta * m.sqrt()));
        let bracket = 2.0 * r * r * m.sqrt() * lam * inv + r * inv + tail;
        m * lam.ln() - 0.5 * m * (2.0 * PI).ln()
            + ell.ln()
            + self.support_volume.ln()
            + bracket.ln()
    }

    pub fn ln_bound_for(&self, construction: Construction) -> f64 {
        match construction {
            Construction::Literal => self.ln_bound(),
            Construction::BoundaryCompensated => self.ln_compensated_bound(),
        }
    }

    /// `2 exp(-(n/2) (t / B)^2)` with `B` from [`Self::ln_bound`].
    pub fn hoeffding_envelope(&self, n: usize, t: T) -> T {
        T::of(hoeffding_ln_tail(self.ln_bound(), n, t.as_f64()).exp())
    }

    pub fn hoeffding_envelope_for(&self, construction: Construction, n: usize, t: T) -> T {
        T::of(hoeffding_ln_tail(self.ln_bound_for(construction), n, t.as_f64()).exp())
    }
}

fn signed_exp(ln_mag: f64, factor: f64, what: &str) -> Result<f64> {
    if factor == 0.0 {
        return Ok(0.0);
    }
    let ln = ln_mag + factor.abs().ln();
    if ln > f64::MAX.ln() {
        return Err(Error::Overflow(what.into()));
    }
    Ok(ln.exp() * factor.signum())
}

/// `ln(2 exp(-(n/2)(t/B)^2))` from `ln B`.
pub fn hoeffding_ln_tail(ln_bound: f64, n: usize, t: f64) -> f64 {
    if n == 0 || t == 0.0 {
        return LN_2;
    }
    if t.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let ln_ratio = 2.0 * (t.abs().ln() - ln_bound);
    LN_2 - 0.5 * n as f64 * ln_ratio.exp()
}

/// Constructive network on `layer`: `a_j = G(w_j, b_j) / n`, plus for the
/// compensated construction the direct link `c = sum_j D_j w_j / n` and the bias
/// shift `sum_j (E_j + D_j B) / n`.
pub fn build_constructive<T: Scalar>(
    layer: &HiddenLayer<T>,
    density: &WeightDensity<T>,
    construction: Construction,
) -> Result<RvflNetwork<T>> {
    let m = layer.m;
    if m != density.surrogate.dim() {
        return invalid(format!(
            "layer has m = {m}, density m = {}",
            density.surrogate.dim()
        ));
    }
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if !rel(layer.sigma.as_f64(), density.sigma) || !rel(layer.radius.as_f64(), density.radius) {
        return invalid("layer and density must share sigma and R");
    }
    let n = layer.width();
    let terms: Vec<UnitTerms<T>> = (0..n)
        .into_par_iter()
        .map(|j| density.unit_terms(layer.weight(j), layer.bias(j)))
        .collect::<Result<_>>()?;
    let inv_n = T::one() / T::of_usize(n);
    let outer: Vec<T> = terms.iter().map(|t| t.g * inv_n).collect();
    let base = density.surrogate.ext().base();
    let mut direct = vec![T::zero(); m];
    let mut zeta = base.zeta();
    if construction == Construction::BoundaryCompensated {
        let bb = layer.bias_bound();
        let mut shift = T::zero();
        for (j, t) in terms.iter().enumerate() {
            for (c, &w) in direct.iter_mut().zip(layer.weight(j)) {
                *c += t.d * w * inv_n;
            }
            shift += (t.e + t.d * bb) * inv_n;
        }
        zeta += shift;
    }
    Ok(RvflNetwork {
        layer: layer.clone(),
        outer,
        direct,
        zeta,
        offset: base.offset().to_vec(),
        provenance: match construction {
            Construction::BoundaryCompensated => Provenance::Constructive,
            Construction::Literal => Provenance::ConstructiveLiteral,
        },
    })
}

/// Extra columns of the least-squares design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LsDesign {
    /// Columns `x_k - p_k`.
    pub direct_link: bool,
    /// Constant column.
    pub intercept: bool,
}

impl Default for LsDesign {
    fn default() -> Self {
        Self {
            direct_link: true,
            intercept: true,
        }
    }
}

impl LsDesign {
    /// ReLU columns only.
    pub fn plain() -> Self {
        Self {
            direct_link: false,
            intercept: false,
        }
    }
}

/// Least-squares outer weights on `layer` for data `(xs, ys)` in original
/// coordinates, with the layer applied to `x - offset`.
///
/// Solves `min |Phi a - y|^2 + ridge |a|^2` by pivoted QR (minimum-norm
/// solution when rank deficient).
pub fn fit_least_squares<T: Scalar>(
    layer: &HiddenLayer<T>,
    xs: &[Vec<T>],
    ys: &[T],
    offset: &[T],
    ridge: T,
    design: LsDesign,
) -> Result<RvflNetwork<T>> {
    let m = layer.m;
    if xs.is_empty() || xs.len() != ys.len() {
        return invalid(format!("{} points and {} values", xs.len(), ys.len()));
    }
    if offset.len() != m || xs.iter().any(|x| x.len() != m) {
        return invalid("points and offset must have the layer dimension");
    }
    if !(ridge >= T::zero()) || !ridge.is_finite() {
        return invalid(format!("ridge must be >= 0, got {ridge}"));
    }
    let n = layer.width();
    let extra = if design.direct_link { m } else { 0 } + usize::from(design.intercept);
    let locals: Vec<Vec<T>> = xs
        .iter()
        .map(|x| x.iter().zip(offset).map(|(&a, &p)| a - p).collect())
        .collect();
    let rows: Vec<Vec<T>> = locals
        .par_iter()
        .map(|x| {
            let mut row = layer.features(x);
            if design.direct_link {
                row.extend_from_slice(x);
            }
            if design.intercept {
                row.push(T::one());
            }
            row
        })
        .collect();
    let phi = Mat::from_fn(xs.len(), n + extra, |i, j| rows[i][j]);
    if !phi.all_finite() || ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite("least-squares design".into()));
    }
    let coef = if ridge > T::zero() {
        lstsq_ridge(&phi, ys, ridge)?
    } else {
        lstsq_min_norm(&phi, ys)?
    };
    let outer = coef[..n].to_vec();
    let mut k = n;
    let direct = if design.direct_link {
        k += m;
        coef[n..n + m].to_vec()
    } else {
        vec![T::zero(); m]
    };
    let zeta = if design.intercept { coef[k] } else { T::zero() };
    Ok(RvflNetwork {
        layer: layer.clone(),
        outer,
        direct,
        zeta,
        offset: offset.to_vec(),
        provenance: Provenance::LeastSquares,
    })
}

/// Grid sup-norm error with its Lipschitz inflation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupError<T> {
    /// `max_grid |reference - net|`.
    pub max: T,
    pub argmax: usize,
    /// Covering radius proxy `sqrt(m) / 2 * max nearest-neighbour distance`.
    pub spacing: T,
    /// `sum |a_j| |w_j| + |c|`.
    pub net_lipschitz: T,
    /// `max + net_lipschitz * spacing`.
    pub inflated: T,
}

/// `max |reference(x) - net(x)|` over `grid` (original coordinates).
pub fn sup_error<T: Scalar, F>(
    net: &RvflNetwork<T>,
    reference: F,
    grid: &[Vec<T>],
) -> Result<SupError<T>>
where
    F: Fn(&[T]) -> T + Sync,
{
    if grid.is_empty() {
        return invalid("sup error needs a non-empty grid");
    }
    let errs: Vec<T> = grid
        .par_iter()
        .map(|x| (reference(x) - net.eval(x)).abs())
        .collect();
    let (argmax, &max) =
        errs.iter().enumerate().fold(
            (0, &errs[0]),
            |best, (i, e)| if *e > *best.1 { (i, e) } else { best },
        );
    let spacing = grid_spacing(grid);
    let lip = net.lipschitz_bound();
    Ok(SupError {
        max,
        argmax,
        spacing,
        net_lipschitz: lip,
        inflated: max + lip * spacing,
    })
}

/// `sqrt(m) / 2` times the largest nearest-neighbour distance (0 for one point).
pub fn grid_spacing<T: Scalar>(grid: &[Vec<T>]) -> T {
    if grid.len() < 2 {
        return T::zero();
    }
    let m = grid[0].len();
    let worst = grid
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            grid.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, y)| crate::scalar::dist_sq(x, y))
                .fold(T::infinity(), T::min)
        })
        .reduce(|| T::zero(), T::max);
    worst.sqrt() * T::of_usize(m).sqrt() * T::of(0.5)
}
