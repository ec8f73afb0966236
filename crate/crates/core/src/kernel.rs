//! Bessel-window smoothing kernel: the radial window `omega`, its scaled
//! autoconvolution `Psi(x) = (omega * omega)(x / sqrt(m))`, and (at m = 1) the
//! density `psi` whose Fourier transform is `Psi`.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::quad::GaussLegendre;
use crate::scalar::{norm, Scalar};
use crate::specfun::{bessel_j_f64, first_bessel_zero_f64, ln_gamma, sphere_area};

/// Intervals in the radial table of `Psi`.
pub const TABLE_RESOLUTION: usize = 4096;
/// Below this radius `omega` uses its limit value.
pub const OMEGA_ORIGIN: f64 = 1e-8;

/// Kernel for dimension `m`: `omega`, tabulated `Psi`, and helpers.
#[derive(Debug, Clone)]
pub struct SmoothingKernel<T> {
    m: usize,
    nu: T,
    j_nu: T,
    c_norm: T,
    /// `omega(r) = sum_k coef[k] r^{2k}` on `r <= 1/2`.
    coef: Vec<f64>,
    /// `(omega * omega)(s)` at `s = i / TABLE_RESOLUTION`, `i = 0..=TABLE_RESOLUTION`.
    table: Vec<T>,
}

impl<T: Scalar> SmoothingKernel<T> {
    /// Builds the kernel and its `Psi` table.
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return invalid("kernel dimension must be >= 1");
        }
        let nu = m as f64 / 2.0 - 1.0;
        let j = first_bessel_zero_f64(nu);
        let c = normalize_f64(m)?;
        let coef = omega_coefficients(nu, j, c);
        let mut kernel = Self {
            m,
            nu: T::of(nu),
            j_nu: T::of(j),
            c_norm: T::of(c),
            coef,
            table: Vec::new(),
        };
        kernel.table = kernel.build_table()?;
        Ok(kernel)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Bessel order `m/2 - 1`.
    pub fn nu(&self) -> T {
        self.nu
    }

    /// First positive zero of `J_nu`.
    pub fn j_nu(&self) -> T {
        self.j_nu
    }

    /// Normalization constant of `omega` (so that `int omega^2 = 1`).
    pub fn c_norm(&self) -> T {
        self.c_norm
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    /// `omega(x) = c [|x| <= 1/2] J_nu(2 j_nu |x|) / |x|^nu`.
    pub fn omega(&self, x: &[T]) -> T {
        self.omega_radial(norm(x))
    }

    pub fn omega_radial(&self, r: T) -> T {
        T::of(self.omega_radial_f64(r.as_f64()))
    }

    fn omega_radial_f64(&self, r: f64) -> f64 {
        let r = r.abs();
        if r > 0.5 {
            return 0.0;
        }
        if r < OMEGA_ORIGIN {
            return self.coef[0];
        }
        let r2 = r * r;
        self.coef.iter().rev().fold(0.0, |acc, &c| acc * r2 + c)
    }

    /// Direct Bessel evaluation of `omega`, without the series.
    pub fn omega_bessel(&self, r: T) -> T {
        let r = r.as_f64().abs();
        if r > 0.5 {
            return T::zero();
        }
        if r < OMEGA_ORIGIN {
            return T::of(self.coef[0]);
        }
        let (nu, j, c) = (self.nu.as_f64(), self.j_nu.as_f64(), self.c_norm.as_f64());
        T::of(c * bessel_j_f64(nu, 2.0 * j * r) / r.powf(nu))
    }

    /// `Psi(x)`: table lookup of `(omega * omega)(|x| / sqrt(m))`, zero beyond `sqrt(m)`.
    pub fn psi_cap(&self, x: &[T]) -> T {
        self.profile(norm(x) / T::of_usize(self.m).sqrt())
    }

    /// `Psi` as a function of the radius `|x|`.
    pub fn psi_cap_radial(&self, r: T) -> T {
        self.profile(r.abs() / T::of_usize(self.m).sqrt())
    }

    /// Radial profile `(omega * omega)(s)`, cubic (Catmull-Rom) interpolation.
    pub fn profile(&self, s: T) -> T {
        let s = s.abs();
        if s >= T::one() {
            return T::zero();
        }
        let n = TABLE_RESOLUTION;
        let u = s * T::of_usize(n);
        let i = u.floor().to_usize().unwrap_or(0).min(n - 1);
        let t = u - T::of_usize(i);
        let at = |k: isize| -> T {
            if k < 0 {
                self.table[(-k) as usize]
            } else if k as usize > n {
                T::zero()
            } else {
                self.table[k as usize]
            }
        };
        let i = i as isize;
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        let half = T::of(0.5);
        let a = -p0 * half + p1 * T::of(1.5) - p2 * T::of(1.5) + p3 * half;
        let b = p0 - p1 * T::of(2.5) + p2 * T::of(2.0) - p3 * half;
        let c = (p2 - p0) * half;
        ((a * t + b) * t + c) * t + p1
    }

    fn build_table(&self) -> Result<Vec<T>> {
        let n = TABLE_RESOLUTION;
        let mut out = Vec::with_capacity(n + 1);
        if self.m == 1 {
            let rule = GaussLegendre::<f64>::new(24);
            for i in 0..=n {
                let s = i as f64 / n as f64;
                let v = rule.composite(s - 0.5, 0.5, 2, |y| {
                    self.omega_radial_f64(y) * self.omega_radial_f64(s - y)
                });
                out.push(T::of(v));
            }
        } else {
            let outer = GaussLegendre::<f64>::new(32);
            let inner = GaussLegendre::<f64>::new(32);
            let area = sphere_area::<f64>(self.m - 1)?;
            let inner_std: Vec<(f64, f64)> = inner.cosine_mapped(0.0, 1.0);
            for i in 0..=n {
                let s = i as f64 / n as f64;
                if i == 0 {
                    let full = sphere_area::<f64>(self.m)?;
                    let v = GaussLegendre::<f64>::new(64).integrate(0.0, 0.5, |r| {
                        let w = self.omega_radial_f64(r);
                        r.powi(self.m as i32 - 1) * w * w
                    });
                    out.push(T::of(full * v));
                    continue;
                }
                let v = self.convolve_radial(s, &outer, &inner_std, area);
                out.push(T::of(v));
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Quadrature("non-finite Psi table entry".into()));
        }
        let p0 = out[0].as_f64();
        if (p0 - 1.0).abs() > 1e-9 {
            return Err(Error::Quadrature(format!("Psi(0) = {p0}, expected 1")));
        }
        Ok(out)
    }

    /// `(omega * omega)(s e)` for `m >= 2` in polar coordinates about the origin.
    fn convolve_radial(
        &self,
        s: f64,
        outer: &GaussLegendre<f64>,
        inner01: &[(f64, f64)],
        area_m2: f64,
    ) -> f64 {
        let m = self.m as i32;
        let mut breaks = vec![0.0, 0.5];
        for b in [0.5 - s, s - 0.5, s + 0.5] {
            if b > 0.0 && b < 0.5 {
                breaks.push(b);
            }
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        let mut total = 0.0;
        for w in breaks.windows(2) {
            for (rho, wr) in outer.cosine_mapped(w[0], w[1]) {
                if rho <= 0.0 {
                    continue;
                }
                let c = (s * s + rho * rho - 0.25) / (2.0 * s * rho);
                if c >= 1.0 {
                    continue;
                }
                let phi_max = if c <= -1.0 {
                    std::f64::consts::PI
                } else {
                    c.acos()
                };
                let mut acc = 0.0;
                for &(tau, wt) in inner01 {
                    let phi = phi_max * tau;
                    let d2 = s * s + rho * rho - 2.0 * s * rho * phi.cos();
                    let om = self.omega_radial_f64(d2.max(0.0).sqrt());
                    acc += wt * om * phi.sin().powi(m - 2);
                }
                total += wr * rho.powi(m - 1) * self.omega_radial_f64(rho) * acc * phi_max;
            }
        }
        area_m2 * total
    }

    /// Second moment `int |x|^2 psi(x) dx = 4 j_nu^2 / m` of the density `psi`.
    pub fn second_moment(&self) -> T {
        T::of(4.0) * self.j_nu * self.j_nu / T::of_usize(self.m)
    }

    /// `psi(x) = (2 pi)^{-1} int Psi(v) e^{i v x} dv` at m = 1.
    pub fn psi_pdf_1d(&self, x: T) -> Result<T> {
        if self.m != 1 {
            return Err(Error::Dimension {
                m: self.m,
                reason: "psi is only available at m = 1".into(),
            });
        }
        Ok(self.psi_pdf_unchecked(x))
    }

    fn psi_pdf_unchecked(&self, x: T) -> T {
        // Psi is even and real, so the imaginary part vanishes identically.
        let xf = x.as_f64().abs();
        let panels = (xf / 2.0).ceil() as usize + 4;
        let rule = GaussLegendre::<f64>::new(16);
        let v = rule.composite(0.0, 1.0, panels, |v| {
            self.profile(T::of(v)).as_f64() * (v * xf).cos()
        });
        T::of(v / std::f64::consts::PI)
    }

    /// Writes the `Psi` table as CSV (`radius,value`, radius in `|x|` units).
    pub fn write_table_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["radius", "value"])?;
        let root = T::of_usize(self.m).sqrt();
        for (i, v) in self.table.iter().enumerate() {
            let r = T::of_usize(i) / T::of_usize(TABLE_RESOLUTION) * root;
            w.write_record([format!("{r:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Negative-control hook: rewrites the `Psi` table through `f(s, value)`.
    pub fn tamper_table<F: FnMut(T, T) -> T>(&mut self, mut f: F) {
        let n = T::of_usize(TABLE_RESOLUTION);
        for (i, v) in self.table.iter_mut().enumerate() {
            *v = f(T::of_usize(i) / n, *v);
        }
    }
}

fn omega_coefficients(nu: f64, j: f64, c: f64) -> Vec<f64> {
    // J_nu(2 j r) / r^nu = j^nu sum_k (-1)^k (j r)^{2k} / (k! Gamma(k + nu + 1)).
    let mut coef = Vec::new();
    let lead = c * (nu * j.ln() - ln_gamma(nu + 1.0)).exp();
    let mut a = lead;
    coef.push(a);
    for k in 1..200 {
        let kf = k as f64;
        a *= -j * j / (kf * (kf + nu));
        coef.push(a);
        if a.abs() * 0.25f64.powi(k) < 1e-18 * lead.abs() {
            break;
        }
    }
    coef
}

fn raw_omega_sq_integral(m: usize, nodes: usize) -> Result<f64> {
    let nu = m as f64 / 2.0 - 1.0;
    let j = first_bessel_zero_f64(nu);
    let coef = omega_coefficients(nu, j, 1.0);
    let rule = GaussLegendre::<f64>::new(nodes);
    let radial = rule.integrate(0.0, 0.5, |r| {
        let w = coef.iter().rev().fold(0.0, |acc, &c| acc * r * r + c);
        r.powi(m as i32 - 1) * w * w
    });
    Ok(sphere_area::<f64>(m)? * radial)
}

fn normalize_f64(m: usize) -> Result<f64> {
    let coarse = raw_omega_sq_integral(m, 32)?;
    let fine = raw_omega_sq_integral(m, 64)?;
    if !fine.is_finite() || fine <= 0.0 || ((coarse - fine) / fine).abs() > 1e-12 {
        return Err(Error::Quadrature(format!(
            "normalization integral unstable for m = {m}: {coarse} vs {fine}"
        )));
    }
    Ok(1.0 / fine.sqrt())
}

/// Normalization constant `c` with `int omega^2 = 1` over `R^m`.
pub fn normalize<T: Scalar>(m: usize) -> Result<T> {
    if m == 0 {
        return invalid("kernel dimension must be >= 1");
    }
    Ok(T::of(normalize_f64(m)?))
}

/// Inverse-CDF sampler for `psi` at m = 1, tabulated on `[-extent, extent]`.
#[derive(Debug, Clone)]
pub struct PsiSampler {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    /// Probability mass inside the table before renormalization.
    pub mass: f64,
}

impl PsiSampler {
    pub fn new<T: Scalar>(kernel: &SmoothingKernel<T>, extent: f64, step: f64) -> Result<Self> {
        if kernel.dim() != 1 {
            return Err(Error::Dimension {
                m: kernel.dim(),
                reason: "psi sampling is only available at m = 1".into(),
            });
        }
        let n = (extent / step).round() as usize;
        let xs: Vec<f64> = (0..=2 * n).map(|i| -extent + i as f64 * step).collect();
        let pdf: Vec<f64> = xs
            .iter()
            .map(|&x| kernel.psi_pdf_unchecked(T::of(x)).as_f64().max(0.0))
            .collect();
        let mut cdf = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cdf[i] = cdf[i - 1] + 0.5 * step * (pdf[i] + pdf[i - 1]);
        }
        let mass = *cdf.last().unwrap();
        cdf.iter_mut().for_each(|c| *c /= mass);
        Ok(Self { xs, cdf, mass })
    }

    /// Maps `u` in `[0, 1)` to a variate.
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self
            .cdf
            .partition_point(|&c| c <= u)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.xs[i - 1] + t * (self.xs[i] - self.xs[i - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn m1_reduces_to_cosine() {
        let k = SmoothingKernel::<f64>::new(1).unwrap();
        assert!((k.c_norm() - PI).abs() < 1e-10);
        for i in 0..=50 {
            let x = i as f64 / 100.0;
            let w = k.omega(&[x]);
            assert!((w - 2f64.sqrt() * (PI * x).cos()).abs() < 1e-12, "{x}");
        }
        assert_eq!(k.omega(&[0.5 + 1e-9]), 0.0);
    }

    #[test]
    fn m1_profile_closed_form() {
        let k = SmoothingKernel::<f64>::new(1).unwrap();
        for i in 0..=40 {
            let s = i as f64 / 40.0 + 0.0123;
            let exact = if s >= 1.0 {
                0.0
            } else {
                (1.0 - s) * (PI * s).cos() + (PI * s).sin() / PI
            };
            assert!((k.profile(s) - exact).abs() < 1e-10, "{s}");
        }
        assert!((k.psi_cap(&[0.5]) - 1.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn closed_form_normalization() {
        for m in 1..=6 {
            let nu = m as f64 / 2.0 - 1.0;
            let j = first_bessel_zero_f64(nu);
            let jp = bessel_j_f64(nu + 1.0, j);
            let c2 = 8.0 / (sphere_area::<f64>(m).unwrap() * jp * jp);
            let c = normalize::<f64>(m).unwrap();
            assert!((c * c - c2).abs() < 1e-9 * c2, "m={m}");
        }
    }

    #[test]
    fn series_matches_bessel() {
        let k = SmoothingKernel::<f64>::new(3).unwrap();
        for i in 1..50 {
            let r = i as f64 / 100.0;
            assert!((k.omega_radial(r) - k.omega_bessel(r)).abs() < 1e-11);
        }
        assert!(k.omega_radial(0.5).abs() < 1e-9);
    }

    #[test]
    fn m2_profile_bounds() {
        let k = SmoothingKernel::<f64>::new(2).unwrap();
        assert!((k.psi_cap(&[0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((k.profile(1e-4) - 1.0).abs() < 1e-6);
        assert_eq!(k.psi_cap(&[1.5, 0.1]), 0.0);
        assert!(k.table().iter().all(|v| v.abs() <= 1.0 + 1e-12));
        assert!(k.table()[TABLE_RESOLUTION].abs() < 1e-8);
    }

    #[test]
    fn m2_profile_matches_cartesian_oracle() {
        // Nested adaptive quadrature over the lens-shaped overlap, frozen.
        let k = SmoothingKernel::<f64>::new(2).unwrap();
        let oracle = [
            (0.1, 0.946212044656997),
            (0.25, 0.715466327209306),
            (0.5, 0.2519915467981406),
            (0.75, 0.025967336403385683),
            (0.9, 0.001046893637270117),
        ];
        for (s, v) in oracle {
            assert!(
                (k.profile(s) - v).abs() < 1e-8,
                "s={s}: {} vs {v}",
                k.profile(s)
            );
        }
    }

    #[test]
    fn psi_only_at_m1() {
        let k = SmoothingKernel::<f64>::new(2).unwrap();
        assert!(k.psi_pdf_1d(0.3).is_err());
    }
}
