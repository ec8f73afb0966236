use std::sync::Arc;

use num_rational::Ratio;
use proptest::prelude::*;

use rvfl_core::bounds::{fractions, n_main, schedule};
use rvfl_core::geometry::{min_enclosing_ball, Compactum};
use rvfl_core::kernel::SmoothingKernel;
use rvfl_core::lipschitz::{extend, recenter, ExtendedFunction, SampledFunction};
use rvfl_core::rvfl::sample_hidden;
use rvfl_core::scalar::{dist, dot, relu};
use rvfl_core::spectral::SpectralSurrogate;

fn cloud(m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, m), 3..25)
}

fn extended(points: Vec<Vec<f64>>, values: Vec<f64>) -> Option<ExtendedFunction<f64>> {
    let k = Compactum::new(points).ok()?;
    let f = SampledFunction::new(k, values, None).ok()?;
    extend(&recenter(&f)).ok()
}

fn params() -> impl Strategy<Value = (usize, f64, f64, f64, f64)> {
    (
        1usize..=12,
        0.01f64..1.0,
        0.3f64..5.0,
        0.3f64..3.0,
        0.1f64..10.0,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fractions_are_an_exact_partition(m in 1u64..=1_000_000) {
        let f = fractions(m).unwrap();
        prop_assert_eq!(f.alpha + f.beta + f.gamma, Ratio::from_integer(1));
        let d = m * m + 3 * m + 1;
        prop_assert_eq!(f.beta, Ratio::new(1, d));
        prop_assert_eq!(f.gamma, Ratio::new(m, d));
    }

    #[test]
    fn schedule_spends_the_budget((m, eps, ell, r, sigma) in params()) {
        let s = schedule(m, eps, ell, r, sigma).unwrap();
        let smooth = s.ln_smoothing_bound();
        let trunc = s.ln_truncation_bound_at().unwrap();
        prop_assert!((smooth - (s.alpha * eps).ln()).abs() < 1e-10);
        prop_assert!((trunc - (s.beta * eps).ln()).abs() < 1e-10);
        prop_assert!((s.big_lambda * sigma / s.lambda - 1.0).abs() < 1e-13);
        prop_assert!(s.theta > 0.0);
    }

    #[test]
    fn lambda_ignores_sigma_and_scales_with_inverse_eps((m, eps, ell, r, sigma) in params()) {
        let a = schedule(m, eps, ell, r, sigma).unwrap();
        let b = schedule(m, eps, ell, r, 2.5 * sigma).unwrap();
        let c = schedule(m, eps / 2.0, ell, r, sigma).unwrap();
        prop_assert!((a.lambda / b.lambda - 1.0).abs() < 1e-13);
        prop_assert!((c.lambda / a.lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn width_moves_with_confidence_and_accuracy(
        (m, eps, ell, r, sigma) in params(),
        eta in 0.001f64..0.5,
        frac in 0.0f64..1.0,
    ) {
        let dk = 1.0 + frac * (m as f64 - 1.0);
        let s = schedule(m, eps, ell, r, sigma).unwrap();
        let base = n_main(&s, eta, dk).unwrap().ln_n;
        let looser = n_main(&s, (eta * 1.5).min(0.99), dk).unwrap().ln_n;
        let finer = n_main(&schedule(m, eps * 0.8, ell, r, sigma).unwrap(), eta, dk).unwrap().ln_n;
        prop_assert!(looser < base);
        prop_assert!(finer > base);
    }

    #[test]
    fn enclosing_ball_covers_and_is_small(points in cloud(2)) {
        let (c, r) = min_enclosing_ball(&points).unwrap();
        for p in &points {
            prop_assert!(dist(p, &c) <= r * (1.0 + 1e-9) + 1e-12);
        }
        let diam = points
            .iter()
            .flat_map(|a| points.iter().map(move |b| dist(a, b)))
            .fold(0.0, f64::max);
        prop_assert!(r <= diam + 1e-12);
        prop_assert!(r >= diam / 2.0 - 1e-12);
    }

    #[test]
    fn extension_is_lipschitz_and_bounded(
        points in cloud(2),
        values in prop::collection::vec(-1.0f64..1.0, 25),
        probes in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 40),
    ) {
        let values = values[..points.len()].to_vec();
        let ext = extended(points, values);
        prop_assume!(ext.is_some());
        let ext = ext.unwrap();
        let base = ext.base();
        for (x, &v) in base.domain().points().iter().zip(base.values()) {
            prop_assert!((ext.eval(x) - v).abs() <= 1e-12);
        }
        let ell = ext.ell();
        let half = ext.half_range();
        for pair in probes.chunks_exact(2) {
            let (x, y) = (&pair[0], &pair[1]);
            let (fx, fy) = (ext.eval(x), ext.eval(y));
            prop_assert!(fx.abs() <= half * (1.0 + 1e-12));
            prop_assert!((fx - fy).abs() <= ell * dist(x, y) + 1e-9);
        }
    }

    #[test]
    fn hidden_layer_respects_bias_support(
        n in 1usize..200, m in 1usize..6, sigma in 0.1f64..5.0, r in 0.1f64..5.0, seed in any::<u64>(),
    ) {
        let a = sample_hidden(n, m, sigma, r, seed).unwrap();
        let b = sample_hidden(n, m, sigma, r, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let bound = sigma * r * (m as f64).sqrt();
        prop_assert!(a.biases().iter().all(|x| x.abs() <= bound));
        let x: Vec<f64> = (0..m).map(|k| 0.1 * k as f64).collect();
        let feats = a.features(&x);
        for j in 0..n {
            prop_assert_eq!(feats[j], relu(dot(a.weight(j), &x) + a.bias(j)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn transform_is_hermitian_and_bounded(
        points in cloud(1),
        values in prop::collection::vec(-1.0f64..1.0, 25),
        freqs in prop::collection::vec(-60.0f64..60.0, 20),
    ) {
        let values = values[..points.len()].to_vec();
        let ext = extended(points, values);
        prop_assume!(ext.is_some());
        let ext = ext.unwrap();
        let kernel = Arc::new(SmoothingKernel::new(1).unwrap());
        let s = SpectralSurrogate::new(ext, kernel, 20.0, 0.05).unwrap();
        let l1 = s.l1_norm();
        for &v in &freqs {
            let a = s.fourier(&[v]);
            let b = s.fourier(&[-v]);
            prop_assert!((a - b.conj()).norm() <= 1e-9 * (1.0 + l1));
            prop_assert!(a.norm() <= l1 * (1.0 + 1e-6) + 1e-12);
        }
        let z = s.fourier(&[0.0]);
        prop_assert!(z.im.abs() <= 1e-12 * (1.0 + l1));
    }
}
