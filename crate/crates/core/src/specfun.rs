//! Special functions: Gamma, Bessel J and its first zero, regularized lower
//! incomplete gamma, chi distribution helpers, unit-ball volume.

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// First negative zero of the Airy function Ai.
pub const AIRY_A: f64 = -2.338_107_410_459_767;

/// Bessel power series is used up to this argument.
pub const BESSEL_SERIES_MAX: f64 = 12.0;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    let mut s = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    s
}

fn ln_gamma_f64(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma_f64(1.0 - x);
    }
    let z = x - 1.0;
    let w = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * w.ln() - w + lanczos_sum(z).ln()
}

fn gamma_f64(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    if x < 0.5 {
        return pi / ((pi * x).sin() * gamma_f64(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let z = x - 1.0;
    let w = z + LANCZOS_G + 0.5;
    (2.0 * pi).sqrt() * w.powf(z + 0.5) * (-w).exp() * lanczos_sum(z)
}

/// Gamma function (Lanczos, g = 7).
pub fn gamma<T: Scalar>(x: T) -> T {
    T::of(gamma_f64(x.as_f64()))
}

/// `ln |Gamma(x)|`.
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    T::of(ln_gamma_f64(x.as_f64()))
}

/// `ln V_m`, the log-volume of the unit ball in `R^m`.
pub fn ln_unit_ball_volume<T: Scalar>(m: usize) -> Result<T> {
    if m == 0 {
        return invalid("dimension must be >= 1");
    }
    let h = m as f64 / 2.0;
    Ok(T::of(h * std::f64::consts::PI.ln() - ln_gamma_f64(h + 1.0)))
}

/// Volume of the unit ball, `pi^{m/2} / Gamma(m/2 + 1)`.
pub fn unit_ball_volume<T: Scalar>(m: usize) -> Result<T> {
    Ok(ln_unit_ball_volume::<T>(m)?.exp())
}

/// Surface area of the unit sphere `S^{m-1}`, i.e. `m V_m`.
pub fn sphere_area<T: Scalar>(m: usize) -> Result<T> {
    Ok(T::of_usize(m) * unit_ball_volume::<T>(m)?)
}

fn check_bessel_args(nu: f64, t: f64) -> Result<()> {
    if t.is_nan() || nu.is_nan() {
        return Err(Error::NonFinite("bessel_j argument".into()));
    }
    if t < 0.0 {
        return invalid(format!("bessel_j needs t >= 0, got {t}"));
    }
    if nu < -0.5 {
        return invalid(format!("bessel_j needs nu >= -1/2, got {nu}"));
    }
    Ok(())
}

/// Bessel function of the first kind `J_nu(t)` for `nu >= -1/2`, `t >= 0`.
pub fn bessel_j<T: Scalar>(nu: T, t: T) -> Result<T> {
    let (nu, t) = (nu.as_f64(), t.as_f64());
    check_bessel_args(nu, t)?;
    Ok(T::of(bessel_j_f64(nu, t)))
}

pub(crate) fn bessel_j_f64(nu: f64, t: f64) -> f64 {
    if t == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    if !t.is_finite() {
        return 0.0;
    }
    if t <= BESSEL_SERIES_MAX {
        bessel_series(nu, t)
    } else {
        bessel_miller(nu, t)
    }
}

fn bessel_series(nu: f64, t: f64) -> f64 {
    let half = 0.5 * t;
    let q = -half * half;
    let lead = nu * half.ln() - ln_gamma_f64(nu + 1.0);
    // 1/Gamma(nu+1) is positive for nu > -1.
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && kf > half {
            break;
        }
    }
    lead.exp() * sum
}

/// Hankel asymptotic expansion, valid for large `t` and moderate `nu`.
fn bessel_hankel(nu: f64, t: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (kf * 8.0 * t);
        if a.abs() >= prev || a == 0.0 {
            break;
        }
        prev = a.abs();
        // P collects even powers, Q odd, with alternating signs.
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = t - (0.5 * nu + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * t)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Backward recurrence from high order, normalized against the asymptotic
/// values at the base orders `nu0`, `nu0 + 1` with `nu0` in `[-1/2, 1/2)`.
fn bessel_miller(nu: f64, t: f64) -> f64 {
    let shift = (nu + 0.5).floor();
    let nu0 = nu - shift;
    let target = shift as usize;
    let top = target.max(t as usize) + 40 + (2.0 * t.sqrt()) as usize;
    let mut hi = 0.0f64;
    let mut cur = 1e-300f64;
    let mut at_target = 0.0;
    let mut v1 = 0.0;
    let mut k = top;
    loop {
        // cur = J_{nu0+k}, hi = J_{nu0+k+1}, both up to a common scale.
        if k == target {
            at_target = cur;
        }
        if k == 1 {
            v1 = cur;
        }
        if k == 0 {
            break;
        }
        let order = nu0 + k as f64;
        let lo = 2.0 * order / t * cur - hi;
        hi = cur;
        cur = lo;
        k -= 1;
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            hi *= s;
            at_target *= s;
            v1 *= s;
        }
    }
    let big = cur.abs().max(v1.abs());
    let (v0, v1) = (cur / big, v1 / big);
    let j0 = bessel_hankel(nu0, t);
    let j1 = bessel_hankel(nu0 + 1.0, t);
    let scale = (v0 * j0 + v1 * j1) / (v0 * v0 + v1 * v1);
    at_target / big * scale
}

/// First positive zero `j_nu` of `J_nu`, bracketed by a forward scan and
/// refined by bisection to a bracket width of 1e-12.
pub fn first_bessel_zero<T: Scalar>(nu: T) -> Result<T> {
    let nu = nu.as_f64();
    check_bessel_args(nu, 0.0)?;
    Ok(T::of(first_bessel_zero_f64(nu)))
}

pub(crate) fn first_bessel_zero_f64(nu: f64) -> f64 {
    // J_nu > 0 on (0, j_nu) and j_nu > nu.
    let step = 0.1;
    let mut lo = nu.max(0.0) + 1e-3;
    let mut flo = bessel_j_f64(nu, lo);
    let mut hi = lo + step;
    let mut fhi = bessel_j_f64(nu, hi);
    while flo * fhi > 0.0 {
        lo = hi;
        flo = fhi;
        hi += step;
        fhi = bessel_j_f64(nu, hi);
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let fm = bessel_j_f64(nu, mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_lower_gamma<T: Scalar>(a: T, x: T) -> Result<T> {
    let (a, x) = (a.as_f64(), x.as_f64());
    if a.is_nan() || x.is_nan() {
        return Err(Error::NonFinite("incomplete gamma argument".into()));
    }
    if a <= 0.0 {
        return invalid(format!("incomplete gamma needs a > 0, got {a}"));
    }
    if x < 0.0 {
        return invalid(format!("incomplete gamma needs x >= 0, got {x}"));
    }
    Ok(T::of(lower_gamma_p(a, x)))
}

fn lower_gamma_p(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let log_pref = a * x.ln() - x - ln_gamma_f64(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        (sum * log_pref.exp()).min(1.0)
    } else {
        // Modified Lentz for the continued fraction of Q(a, x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-17 {
                break;
            }
        }
        (1.0 - log_pref.exp() * h).max(0.0)
    }
}

/// CDF of the chi distribution with `m` degrees of freedom.
pub fn chi_cdf<T: Scalar>(m: usize, r: T) -> Result<T> {
    if m == 0 {
        return invalid("chi distribution needs m >= 1");
    }
    if r < T::zero() {
        return invalid(format!("chi_cdf needs r >= 0, got {r}"));
    }
    regularized_lower_gamma(T::of_usize(m) * T::of(0.5), r * r * T::of(0.5))
}

/// Mean of the chi distribution, `sqrt(2) Gamma((m+1)/2) / Gamma(m/2)`.
pub fn chi_mean<T: Scalar>(m: usize) -> Result<T> {
    if m == 0 {
        return invalid("chi distribution needs m >= 1");
    }
    let h = m as f64 / 2.0;
    Ok(T::of(
        std::f64::consts::SQRT_2 * (ln_gamma_f64(h + 0.5) - ln_gamma_f64(h)).exp(),
    ))
}
