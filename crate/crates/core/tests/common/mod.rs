//! Extended-precision reference evaluator for the width formulas.
#![allow(dead_code)]

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

/// Working precision in bits (about 77 decimal digits).
pub const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;
const AIRY: &str = "-2.3381074104597670384891972524467354406385401456723878524838544";

pub fn num(v: f64) -> BigFloat {
    BigFloat::from_f64(v, PREC)
}

pub fn int(v: u64) -> BigFloat {
    BigFloat::from_u64(v, PREC)
}

pub fn sqrt(x: &BigFloat) -> BigFloat {
    x.sqrt(PREC, RM)
}

pub fn mul(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.mul(b, PREC, RM)
}

pub fn div(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.div(b, PREC, RM)
}

pub fn add(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.add(b, PREC, RM)
}

pub fn sub(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.sub(b, PREC, RM)
}

pub fn to_f64(x: &BigFloat) -> f64 {
    x.to_string().parse().expect("decimal rendering")
}

pub struct Oracle {
    cc: Consts,
}

impl Default for Oracle {
    fn default() -> Self {
        Self::new()
    }
}

impl Oracle {
    pub fn new() -> Self {
        Self {
            cc: Consts::new().expect("constants cache"),
        }
    }

    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(PREC, RM)
    }

    pub fn e(&mut self) -> BigFloat {
        self.cc.e(PREC, RM)
    }

    pub fn airy(&mut self) -> BigFloat {
        BigFloat::parse(AIRY, Radix::Dec, PREC, RM, &mut self.cc)
    }

    pub fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(PREC, RM, &mut self.cc)
    }

    pub fn exp(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(PREC, RM, &mut self.cc)
    }

    /// `x^y` for `x > 0`.
    pub fn pow(&mut self, x: &BigFloat, y: &BigFloat) -> BigFloat {
        let l = self.ln(x);
        self.exp(&mul(&l, y))
    }

    /// `Gamma(m/2 + 1)` from factorials.
    pub fn gamma_half_plus_one(&mut self, m: u64) -> BigFloat {
        if m % 2 == 0 {
            (1..=m / 2).fold(int(1), |acc, k| mul(&acc, &int(k)))
        } else {
            // Gamma(k + 3/2) = (2k + 1)!! sqrt(pi) / 2^{k+1}
            let k = (m - 1) / 2;
            let mut acc = sqrt(&self.pi());
            for j in 0..=k {
                let f = div(&int(2 * j + 1), &int(2));
                acc = mul(&acc, &f);
            }
            acc
        }
    }

    /// `V_m = pi^{m/2} / Gamma(m/2 + 1)`.
    pub fn ball_volume(&mut self, m: u64) -> BigFloat {
        let pi = self.pi();
        let half = div(&int(m), &int(2));
        let top = self.pow(&pi, &half);
        let den = self.gamma_half_plus_one(m);
        div(&top, &den)
    }

    /// `2 - 2^{1/3} a m^{-2/3}`.
    pub fn airy_factor(&mut self, m: u64) -> BigFloat {
        let third = div(&int(1), &int(3));
        let c = self.pow(&int(2), &third);
        let a = self.airy();
        let mm = self.pow(&int(m), &div(&int(2), &int(3)));
        let t = div(&mul(&c, &a), &mm);
        sub(&int(2), &t)
    }

    /// `(lambda, theta)` from the schedule.
    pub fn schedule(&mut self, m: u64, eps: f64, ell: f64, r: f64) -> (BigFloat, BigFloat) {
        let d = int(m * m + 3 * m + 1);
        let alpha = div(&int(m * (m + 2)), &d);
        let beta = div(&int(1), &d);
        let (eps, ell, r) = (num(eps), num(ell), num(r));
        let mb = int(m);
        let lam = {
            let a = div(&ell, &mul(&alpha, &eps));
            let b = self.airy_factor(m);
            mul(&mul(&a, &b), &sqrt(&mb))
        };
        let pi = self.pi();
        let e = self.e();
        let vm = self.ball_volume(m);
        let two_l_r = mul(&int(2), &mul(&ell, &r));
        let bracket = {
            let a = div(&int(1), &mul(&beta, &eps));
            let b = div(&two_l_r, &sqrt(&mul(&pi, &mb)));
            let rm = self.pow(&r, &mb);
            mul(&mul(&a, &b), &mul(&vm, &rm))
        };
        let root = self.pow(&bracket, &div(&int(1), &mb));
        let scale = sqrt(&div(&mul(&int(2), &pi), &e));
        let inv_theta = div(&mul(&root, &lam), &scale);
        let theta = div(&int(1), &inv_theta);
        (lam, theta)
    }

    /// Natural log of the sufficient width, evaluated as a plain product.
    pub fn ln_n_main(&mut self, m: u64, eps: f64, eta: f64, ell: f64, r: f64, dk: f64) -> f64 {
        let (_, theta) = self.schedule(m, eps, ell, r);
        let mb = int(m);
        let pi = self.pi();
        let e = self.e();
        let mut prod = div(&int(1), &mul(&int(8), &mul(&pi, &e)));
        let l2 = self.ln(&div(&int(2), &num(eta)));
        prod = mul(&prod, &l2);
        let one_theta = add(&int(1), &theta);
        prod = mul(&prod, &mul(&one_theta, &one_theta));
        let frac = div(&int(m + 1), &int(m * (m + 2)));
        let base = add(&int(1), &frac);
        let p1 = self.pow(&base, &int(2 * (m + 2)));
        prod = mul(&prod, &p1);
        let af = self.airy_factor(m);
        prod = mul(&prod, &self.pow(&af, &int(4)));
        let d = int(m * m + 3 * m + 1);
        let ex = add(&int(2), &div(&int(2), &mb));
        prod = mul(&prod, &self.pow(&d, &ex));
        let arg = {
            let ln2 = self.ln(&int(2));
            let t1 = mul(&mul(&int(2), &num(dk)), &ln2);
            let third = div(&int(1), &int(3));
            let c = self.pow(&int(2), &third);
            let t2 = mul(&mul(&c, &self.airy()), &self.pow(&mb, &third));
            let t3 = self.ln(&mb);
            sub(&sub(&t1, &t2), &t3)
        };
        prod = mul(&prod, &self.exp(&arg));
        let core = self.core_base(eps, ell, r);
        let ex = add(&int(2 * m + 6), &div(&int(2), &mb));
        prod = mul(&prod, &self.pow(&core, &ex));
        to_f64(&self.ln(&prod))
    }

    /// `2 ell R sqrt(e) / eps`.
    fn core_base(&mut self, eps: f64, ell: f64, r: f64) -> BigFloat {
        let e = self.e();
        let top = mul(&mul(&int(2), &mul(&num(ell), &num(r))), &sqrt(&e));
        div(&top, &num(eps))
    }

    /// Natural log of the approximate width.
    pub fn ln_n_approx(&mut self, m: u64, eps: f64, eta: f64, ell: f64, r: f64, dk: f64) -> f64 {
        let mb = int(m);
        let pi = self.pi();
        let e = self.e();
        let mut prod = div(&mul(&int(2), &e), &pi);
        let l2 = self.ln(&div(&int(2), &num(eta)));
        prod = mul(&prod, &l2);
        let core = self.core_base(eps, ell, r);
        prod = mul(&prod, &self.pow(&core, &int(2 * m + 6)));
        let arg = {
            let ln2 = self.ln(&int(2));
            let t1 = mul(&mul(&int(2), &num(dk)), &ln2);
            let third = div(&int(1), &int(3));
            let c = self.pow(&int(2), &third);
            let t2 = mul(&mul(&c, &self.airy()), &self.pow(&mb, &third));
            let t3 = mul(&int(3), &self.ln(&mb));
            add(&sub(&t1, &t2), &t3)
        };
        prod = mul(&prod, &self.exp(&arg));
        to_f64(&self.ln(&prod))
    }

    /// `Lambda` of the schedule.
    pub fn big_lambda(&mut self, m: u64, eps: f64, ell: f64, r: f64, sigma: f64) -> f64 {
        let (lam, _) = self.schedule(m, eps, ell, r);
        to_f64(&div(&lam, &num(sigma)))
    }

    /// `G = -2 sigma R sqrt(m) Lambda^2 (2 pi)^{-m/2} lambda^m |F| Psi cos(Lambda b - arg F)`.
    #[allow(clippy::too_many_arguments)]
    pub fn weight_density(
        &mut self,
        m: u64,
        sigma: f64,
        r: f64,
        big_lambda: f64,
        f_abs: f64,
        psi: f64,
        cos_term: f64,
    ) -> f64 {
        let mb = int(m);
        let pi = self.pi();
        let lam_small = mul(&num(sigma), &num(big_lambda));
        let mut prod = mul(&int(2), &mul(&num(sigma), &num(r)));
        prod = mul(&prod, &sqrt(&mb));
        prod = mul(&prod, &mul(&num(big_lambda), &num(big_lambda)));
        let two_pi = mul(&int(2), &pi);
        let half = div(&mb, &int(2));
        prod = div(&prod, &self.pow(&two_pi, &half));
        prod = mul(&prod, &self.pow(&lam_small, &mb));
        prod = mul(&prod, &mul(&num(f_abs), &num(psi)));
        prod = mul(&prod, &num(cos_term));
        -to_f64(&prod)
    }
}
