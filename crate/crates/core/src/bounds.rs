//! Parameter schedule and width bounds, all in log domain.

use std::f64::consts::{E, LN_2, PI};

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rvfl::hoeffding_ln_tail;
use crate::specfun::{ln_unit_ball_volume, AIRY_A};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            c += (sum - s) + t;
        } else {
            c += (t - s) + sum;
        }
        sum = s;
    }
    sum + c
}

/// `alpha, beta, gamma` as exact fractions of `m^2 + 3m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fractions {
    pub alpha: Ratio<u64>,
    pub beta: Ratio<u64>,
    pub gamma: Ratio<u64>,
}

pub fn fractions(m: u64) -> Result<Fractions> {
    if m == 0 || m > 1 << 30 {
        return invalid(format!("m must be in 1..=2^30, got {m}"));
    }
    let d = m * m + 3 * m + 1;
    Ok(Fractions {
        alpha: Ratio::new(m * (m + 2), d),
        beta: Ratio::new(1, d),
        gamma: Ratio::new(m, d),
    })
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `2 - 2^{1/3} a m^{-2/3}`.
pub fn airy_factor(m: usize) -> f64 {
    2.0 - 2f64.cbrt() * AIRY_A * (m as f64).powf(-2.0 / 3.0)
}

/// Sup-norm bound on `f~ - g`: `(ell / lambda)(2 - 2^{1/3} a m^{-2/3}) sqrt(m)`.
pub fn smoothing_bound(m: usize, ell: f64, lambda: f64) -> f64 {
    ell / lambda * airy_factor(m) * (m as f64).sqrt()
}

/// Sup-norm bound on `g - h`: `(2 ell R / sqrt(pi m)) V_m (R theta lambda / sqrt(2 pi / e))^m`.
pub fn truncation_bound(m: usize, ell: f64, radius: f64, theta: f64, lambda: f64) -> Result<f64> {
    Ok(ln_truncation_bound(m, ell, radius, theta, lambda)?.exp())
}

pub fn ln_truncation_bound(
    m: usize,
    ell: f64,
    radius: f64,
    theta: f64,
    lambda: f64,
) -> Result<f64> {
    let mf = m as f64;
    Ok(compensated_sum([
        (2.0 * ell * radius).ln(),
        -0.5 * (PI * mf).ln(),
        ln_unit_ball_volume::<f64>(m)?,
        mf * (radius * theta * lambda).ln(),
        -0.5 * mf * (2.0 * PI / E).ln(),
    ]))
}

/// Scheduled parameters for given `m, epsilon, ell, R, sigma`.
#[derive(Debug, Clone, Serialize)]
pub struct ParameterSchedule {
    pub m: usize,
    pub epsilon: f64,
    pub ell: f64,
    pub radius: f64,
    pub sigma: f64,
    #[serde(skip)]
    pub fractions: Fractions,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub ln_big_lambda: f64,
    pub big_lambda: f64,
    pub ln_lambda: f64,
    pub lambda: f64,
    /// `ln(1 / theta)`.
    pub ln_inv_theta: f64,
    pub theta: f64,
}

/// `alpha, beta` from [`fractions`], `Lambda = (1/sigma)(ell/(alpha eps))(2 - 2^{1/3} a m^{-2/3}) sqrt m`,
/// `lambda = sigma Lambda` and
/// `1/theta = {(1/(beta eps)) (2 ell R / sqrt(pi m)) V_m R^m}^{1/m} lambda / sqrt(2 pi / e)`.
pub fn schedule(
    m: usize,
    epsilon: f64,
    ell: f64,
    radius: f64,
    sigma: f64,
) -> Result<ParameterSchedule> {
    for (name, v) in [
        ("epsilon", epsilon),
        ("ell", ell),
        ("R", radius),
        ("sigma", sigma),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return invalid(format!("{name} must be positive, got {v}"));
        }
    }
    let fr = fractions(m as u64)?;
    let (alpha, beta, gamma) = (ratio_f64(fr.alpha), ratio_f64(fr.beta), ratio_f64(fr.gamma));
    let mf = m as f64;
    let ln_lambda = compensated_sum([
        ell.ln(),
        -(alpha * epsilon).ln(),
        airy_factor(m).ln(),
        0.5 * mf.ln(),
    ]);
    let ln_big_lambda = ln_lambda - sigma.ln();
    let bracket = compensated_sum([
        -(beta * epsilon).ln(),
        (2.0 * ell * radius).ln(),
        -0.5 * (PI * mf).ln(),
        ln_unit_ball_volume::<f64>(m)?,
        mf * radius.ln(),
    ]);
    let ln_inv_theta = compensated_sum([bracket / mf, ln_lambda, -0.5 * (2.0 * PI / E).ln()]);
    Ok(ParameterSchedule {
        m,
        epsilon,
        ell,
        radius,
        sigma,
        fractions: fr,
        alpha,
        beta,
        gamma,
        ln_big_lambda,
        big_lambda: ln_big_lambda.exp(),
        ln_lambda,
        lambda: ln_lambda.exp(),
        ln_inv_theta,
        theta: (-ln_inv_theta).exp(),
    })
}

impl ParameterSchedule {
    /// `ln` of the smoothing bound at the scheduled `lambda`.
    pub fn ln_smoothing_bound(&self) -> f64 {
        compensated_sum([
            self.ell.ln(),
            -self.ln_lambda,
            airy_factor(self.m).ln(),
            0.5 * (self.m as f64).ln(),
        ])
    }

    /// `ln` of the truncation bound at the scheduled `lambda` and `theta`.
    pub fn ln_truncation_bound_at(&self) -> Result<f64> {
        let mf = self.m as f64;
        Ok(compensated_sum([
            (2.0 * self.ell * self.radius).ln(),
            -0.5 * (PI * mf).ln(),
            ln_unit_ball_volume::<f64>(self.m)?,
            mf * (self.radius.ln() - self.ln_inv_theta + self.ln_lambda),
            -0.5 * mf * (2.0 * PI / E).ln(),
        ]))
    }

    /// `ln B` of the Hoeffding bound with `|K~|` replaced by `V_m R^m 2^{dK}`.
    pub fn ln_hoeffding_bound(&self, d_k: f64) -> Result<f64> {
        let mf = self.m as f64;
        Ok(compensated_sum([
            LN_2,
            2.0 * self.radius.ln(),
            0.5 * mf.ln(),
            -0.5 * mf * (2.0 * PI).ln(),
            (mf + 1.0) * self.ln_lambda,
            (1.0 + self.ln_inv_theta.exp()).ln(),
            self.ell.ln(),
            ln_unit_ball_volume::<f64>(self.m)?,
            mf * self.radius.ln(),
            d_k * LN_2,
        ]))
    }

    /// `ln` of the Hoeffding tail at width `n` and deviation `gamma epsilon`.
    pub fn ln_tail(&self, n: f64, d_k: f64) -> Result<f64> {
        let ln_b = self.ln_hoeffding_bound(d_k)?;
        let ln_ratio = 2.0 * ((self.gamma * self.epsilon).ln() - ln_b);
        Ok(LN_2 - 0.5 * n * ln_ratio.exp())
    }

    /// Same as [`Self::ln_tail`] for an integer width, via [`hoeffding_ln_tail`].
    pub fn ln_tail_at(&self, n: usize, d_k: f64) -> Result<f64> {
        Ok(hoeffding_ln_tail(
            self.ln_hoeffding_bound(d_k)?,
            n,
            self.gamma * self.epsilon,
        ))
    }
}

/// A width bound that may be far beyond machine integers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthBound {
    pub ln_n: f64,
    pub log10_n: f64,
    /// `ceil(n)` when below `2^63`.
    pub n: Option<u64>,
}

impl WidthBound {
    fn from_ln(ln_n: f64) -> Self {
        let n = if ln_n < 63.0 * LN_2 {
            Some(ln_n.exp().ceil().max(0.0) as u64)
        } else {
            None
        };
        Self {
            ln_n,
            log10_n: ln_n / std::f64::consts::LN_10,
            n,
        }
    }
}

fn check_eta_dk(m: usize, eta: f64, d_k: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return invalid(format!("eta must be in (0, 1), got {eta}"));
    }
    if !(d_k >= 1.0 && d_k <= m as f64) {
        return invalid(format!("d(K) must be in [1, {m}], got {d_k}"));
    }
    Ok(())
}

/// Sufficient width:
/// `(1/(8 pi e)) ln(2/eta) (1+theta)^2 {1 + (m+1)/(m(m+2))}^{2(m+2)}
/// (2 - 2^{1/3} a m^{-2/3})^4 (m^2+3m+1)^{2+2/m}
/// exp(2 dK ln 2 - 2^{1/3} a m^{1/3} - ln m) (2 ell R sqrt(e) / eps)^{2m+6+2/m}`.
pub fn n_main(s: &ParameterSchedule, eta: f64, d_k: f64) -> Result<WidthBound> {
    check_eta_dk(s.m, eta, d_k)?;
    let mf = s.m as f64;
    let d = mf * mf + 3.0 * mf + 1.0;
    let ln_base = (2.0 * s.ell * s.radius / s.epsilon).ln() + 0.5;
    let ln_n = compensated_sum([
        -(8.0 * PI * E).ln(),
        (2.0 / eta).ln().ln(),
        2.0 * (1.0 + s.theta).ln(),
        2.0 * (mf + 2.0) * ((mf + 1.0) / (mf * (mf + 2.0))).ln_1p(),
        4.0 * airy_factor(s.m).ln(),
        (2.0 + 2.0 / mf) * d.ln(),
        2.0 * d_k * LN_2,
        -2f64.cbrt() * AIRY_A * mf.cbrt(),
        -mf.ln(),
        (2.0 * mf + 6.0 + 2.0 / mf) * ln_base,
    ]);
    Ok(WidthBound::from_ln(ln_n))
}

/// Approximate width:
/// `(2e/pi) ln(2/eta) (2 ell R sqrt(e)/eps)^{2m+6} exp(2 dK ln 2 - 2^{1/3} a m^{1/3} + 3 ln m)`.
pub fn n_approx(
    m: usize,
    epsilon: f64,
    eta: f64,
    ell: f64,
    radius: f64,
    d_k: f64,
) -> Result<WidthBound> {
    check_eta_dk(m, eta, d_k)?;
    for (name, v) in [("epsilon", epsilon), ("ell", ell), ("R", radius)] {
        if !(v > 0.0) || !v.is_finite() {
            return invalid(format!("{name} must be positive, got {v}"));
        }
    }
    let mf = m as f64;
    let ln_base = (2.0 * ell * radius / epsilon).ln() + 0.5;
    let ln_n = compensated_sum([
        (2.0 * E / PI).ln(),
        (2.0 / eta).ln().ln(),
        (2.0 * mf + 6.0) * ln_base,
        2.0 * d_k * LN_2,
        -2f64.cbrt() * AIRY_A * mf.cbrt(),
        3.0 * mf.ln(),
    ]);
    Ok(WidthBound::from_ln(ln_n))
}

/// Large-`m` diagnostics of the truncation level.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaRegime {
    pub m: usize,
    pub inv_theta: f64,
    /// `2 ell R e / eps`.
    pub approximation: f64,
    pub ratio: f64,
    /// `V_m^{1/m} / sqrt(2 pi e / m)`.
    pub stirling_ratio: f64,
    /// Whether the large-`m` approximation is meant to apply (`m >= 10`).
    pub asymptotic: bool,
}

pub fn theta_regime_report(s: &ParameterSchedule) -> Result<ThetaRegime> {
    let mf = s.m as f64;
    let approx = 2.0 * s.ell * s.radius * E / s.epsilon;
    let inv_theta = s.ln_inv_theta.exp();
    let stirling = (ln_unit_ball_volume::<f64>(s.m)? / mf - 0.5 * (2.0 * PI * E / mf).ln()).exp();
    Ok(ThetaRegime {
        m: s.m,
        inv_theta,
        approximation: approx,
        ratio: inv_theta / approx,
        stirling_ratio: stirling,
        asymptotic: s.m >= 10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_sum_to_one() {
        for m in [1u64, 2, 3, 10, 1000, 1_000_000] {
            let f = fractions(m).unwrap();
            assert_eq!(f.alpha + f.beta + f.gamma, Ratio::from_integer(1));
        }
        let f = fractions(1).unwrap();
        assert_eq!(f.alpha, Ratio::new(3, 5));
        assert_eq!(f.beta, Ratio::new(1, 5));
        assert_eq!(f.gamma, Ratio::new(1, 5));
    }

    #[test]
    fn schedule_m1() {
        let s = schedule(1, 0.1, 1.0, 1.0, 1.0).unwrap();
        assert!((s.big_lambda - 82.430_512_389_224_2).abs() < 1e-9);
        let s2 = schedule(1, 0.05, 1.0, 1.0, 1.0).unwrap();
        assert!((s2.lambda / s.lambda - 2.0).abs() < 1e-12);
        let s3 = schedule(1, 0.1, 1.0, 1.0, 4.0).unwrap();
        assert!((s3.lambda - s.lambda).abs() < 1e-12 * s.lambda);
        assert!((s3.big_lambda * 4.0 - s.big_lambda).abs() < 1e-10);
    }

    #[test]
    fn budget_identities() {
        for m in [1, 2, 5, 40] {
            let s = schedule(m, 0.3, 1.7, 0.8, 2.0).unwrap();
            assert!((s.ln_smoothing_bound() - (s.alpha * s.epsilon).ln()).abs() < 1e-10);
            assert!(
                (s.ln_truncation_bound_at().unwrap() - (s.beta * s.epsilon).ln()).abs() < 1e-10
            );
        }
    }

    #[test]
    fn width_monotonicity() {
        let s = schedule(2, 0.1, 1.0, 1.0, 1.0).unwrap();
        let a = n_main(&s, 0.1, 1.5).unwrap();
        let b = n_main(&s, 0.01, 1.5).unwrap();
        assert!(b.ln_n > a.ln_n);
        let s2 = schedule(2, 0.05, 1.0, 1.0, 1.0).unwrap();
        assert!(n_main(&s2, 0.1, 1.5).unwrap().ln_n > a.ln_n);
        assert!(n_main(&s, 2.0, 1.5).is_err());
        assert!(n_main(&s, 0.1, 2.5).is_err());
    }

    #[test]
    fn approx_power_law() {
        let a = n_approx(3, 0.1, 0.1, 1.0, 1.0, 2.0).unwrap();
        let b = n_approx(3, 0.1, 0.1, 2.0, 1.0, 2.0).unwrap();
        assert!((b.ln_n - a.ln_n - 12.0 * LN_2).abs() < 1e-10);
    }

    #[test]
    fn main_width_meets_confidence() {
        for (m, eps, ell, r, eta, dk) in [
            (1, 0.1, 1.0, 1.0, 0.05, 1.0),
            (3, 0.2, 2.0, 0.7, 0.01, 2.5),
            (8, 0.5, 1.0, 1.0, 0.1, 8.0),
        ] {
            let s = schedule(m, eps, ell, r, 1.3).unwrap();
            let n = n_main(&s, eta, dk).unwrap();
            let tail = s.ln_tail(n.ln_n.exp(), dk).unwrap();
            assert!(
                tail <= eta.ln() + 1e-6 * eta.ln().abs(),
                "m={m}: {tail} vs {}",
                eta.ln()
            );
        }
    }

    #[test]
    fn regime_report() {
        let s = schedule(100, 0.5, 1.0, 1.0, 1.0).unwrap();
        let r = theta_regime_report(&s).unwrap();
        assert!(r.ratio > 0.5 && r.ratio < 2.0);
        let s = schedule(200, 0.5, 1.0, 1.0, 1.0).unwrap();
        assert!((theta_regime_report(&s).unwrap().stirling_ratio - 1.0).abs() < 0.02);
    }
}
