mod common;

use std::sync::Arc;

use common::{div, mul, num, sub, to_f64, Oracle};
use rvfl_core::bounds::{n_approx, n_main, schedule};
use rvfl_core::kernel::SmoothingKernel;
use rvfl_core::lipschitz::{extend, recenter};
use rvfl_core::rng::substream;
use rvfl_core::rvfl::{hoeffding_ln_tail, WeightDensity};
use rvfl_core::spectral::{SpectralSurrogate, F_RTOL};
use rvfl_core::targets::{sample, Target};
use rvfl_core::validation::random_tuple;

#[test]
fn big_lambda_matches_oracle() {
    let mut o = Oracle::new();
    let s = schedule(1, 0.1, 1.0, 1.0, 1.0).unwrap();
    let want = o.big_lambda(1, 0.1, 1.0, 1.0, 1.0);
    assert!(
        (s.big_lambda / want - 1.0).abs() < 1e-13,
        "{} vs {want}",
        s.big_lambda
    );
    assert!((want - 82.43).abs() < 0.01);
    for &(m, eps, ell, r, sigma) in &[
        (2, 0.3, 2.0, 0.5, 0.7),
        (7, 0.05, 1.0, 3.0, 4.0),
        (30, 0.5, 1.0, 1.0, 1.0),
    ] {
        let s = schedule(m, eps, ell, r, sigma).unwrap();
        let want = o.big_lambda(m as u64, eps, ell, r, sigma);
        assert!((s.big_lambda / want - 1.0).abs() < 1e-13);
        let (_, theta) = o.schedule(m as u64, eps, ell, r);
        let theta = to_f64(&theta);
        assert!(
            (s.theta / theta - 1.0).abs() < 1e-12,
            "m={m}: {} vs {theta}",
            s.theta
        );
    }
}

#[test]
fn reference_width_at_unit_parameters() {
    let mut o = Oracle::new();
    let s = schedule(1, 0.1, 1.0, 1.0, 1.0).unwrap();
    let n = n_main(&s, 0.1, 1.0).unwrap();
    let want = o.ln_n_main(1, 0.1, 0.1, 1.0, 1.0, 1.0);
    assert!((n.ln_n - want).abs() < 1e-12, "{} vs {want}", n.ln_n);
    assert!(n.log10_n > 15.0);
}

#[test]
fn widths_match_oracle_on_random_tuples() {
    let mut o = Oracle::new();
    let mut rng = substream(2024, 0);
    for _ in 0..50 {
        let (m, eps, eta, ell, r, sigma, dk) = random_tuple(&mut rng, 10);
        let s = schedule(m, eps, ell, r, sigma).unwrap();
        let main = n_main(&s, eta, dk).unwrap().ln_n;
        let approx = n_approx(m, eps, eta, ell, r, dk).unwrap().ln_n;
        let want_main = o.ln_n_main(m as u64, eps, eta, ell, r, dk);
        let want_approx = o.ln_n_approx(m as u64, eps, eta, ell, r, dk);
        assert!(
            (main - want_main).abs() < 1e-12,
            "m={m}: {main} vs {want_main}"
        );
        assert!(
            (approx - want_approx).abs() < 1e-12,
            "m={m}: {approx} vs {want_approx}"
        );
    }
}

#[test]
fn approximate_width_is_consistent_at_large_m() {
    let mut gaps = Vec::new();
    for m in [20, 50, 100] {
        let s = schedule(m, 0.5, 1.0, 1.0, 1.0).unwrap();
        let main = n_main(&s, 0.1, m as f64).unwrap().log10_n;
        let approx = n_approx(m, 0.5, 0.1, 1.0, 1.0, m as f64).unwrap().log10_n;
        gaps.push((main - approx).abs() / main);
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 0.05, "{gaps:?}");
}

#[test]
fn hoeffding_tail_in_log_domain() {
    let ln_b = 20107.0f64.ln();
    let t = 20107.0 / 10.0;
    let got = hoeffding_ln_tail(ln_b, 10_000, t);
    assert!((got - (2f64.ln() - 50.0)).abs() < 1e-12);
    let mut o = Oracle::new();
    let ratio = div(&num(t), &num(20107.0));
    let arg = mul(&mul(&ratio, &ratio), &num(5000.0));
    let want = sub(&o.ln(&num(2.0)), &arg);
    assert!((got - to_f64(&want)).abs() < 1e-12);
}

#[test]
fn weight_density_matches_oracle() {
    let f = sample::<f64>(Target::Tent, 1).unwrap();
    let ext = extend(&recenter(&f)).unwrap();
    let kernel = Arc::new(SmoothingKernel::new(1).unwrap());
    let surrogate = SpectralSurrogate::new(ext, kernel.clone(), 20.0, 0.05).unwrap();
    let density = WeightDensity::new(surrogate.clone(), 1.0, 3.0).unwrap();
    let (w, b) = (0.5, 0.0);
    let g = density.weight_density(&[w], b).unwrap();

    // Assembly: the same |F| and phase through the extended-precision product.
    let (mag, phase) = surrogate.fourier_polar(&[20.0 * w]);
    let psi = kernel.psi_cap(&[w]);
    let mut o = Oracle::new();
    let want = o.weight_density(1, 1.0, 1.0, 20.0, mag, psi, (20.0 * b - phase).cos());
    assert!((g / want - 1.0).abs() < 1e-9, "{g} vs {want}");

    // Closed forms: F(v) = (2 - 4 cos v + 2 cos 1.5 v) / v^2 and
    // Psi(s) = (1 - s) cos(pi s) + sin(pi s) / pi at m = 1.
    let v = 10.0f64;
    let f_closed = (2.0 - 4.0 * v.cos() + 2.0 * (1.5 * v).cos()) / (v * v);
    assert!(
        (mag - f_closed.abs()).abs() <= F_RTOL * 3.0,
        "{mag} vs {f_closed}"
    );
    let pi = std::f64::consts::PI;
    let psi_closed = (1.0 - w) * (pi * w).cos() + (pi * w).sin() / pi;
    assert!((psi - psi_closed).abs() < 1e-6);
    let closed = o.weight_density(
        1,
        1.0,
        1.0,
        20.0,
        f_closed.abs(),
        psi_closed,
        if f_closed < 0.0 { -1.0 } else { 1.0 },
    );
    assert!((g / closed - 1.0).abs() < 1e-5, "{g} vs {closed}");
}
