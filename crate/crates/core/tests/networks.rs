use std::sync::Arc;

use rand::Rng;

use rvfl_core::kernel::SmoothingKernel;
use rvfl_core::pipeline::{run_cell, GridReference, Pipeline, PipelineConfig};
use rvfl_core::rng::{substream, MeanVar};
use rvfl_core::rvfl::{fit_least_squares, sample_hidden, sup_error, Construction, LsDesign};
use rvfl_core::targets::{sample_on, Target};

fn random_points(count: usize, m: usize, half: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = substream(seed, 0);
    (0..count)
        .map(|_| {
            (0..m)
                .map(|_| half * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn tent_pipeline(per_axis: usize) -> Pipeline<f64> {
    let f = sample_on::<f64>(Target::Tent, 1, per_axis).unwrap();
    let kernel = Arc::new(SmoothingKernel::new(1).unwrap());
    Pipeline::new(f, kernel, PipelineConfig::default()).unwrap()
}

#[test]
fn least_squares_matches_normal_equations() {
    let layer = sample_hidden(20, 2, 1.0, 1.0, 4).unwrap();
    let xs = random_points(50, 2, 5.0, 5);
    let ys: Vec<f64> = xs.iter().map(|x| (x[0] - 0.5 * x[1]).sin()).collect();
    let net = fit_least_squares(&layer, &xs, &ys, &[0.0, 0.0], 0.0, LsDesign::plain()).unwrap();

    let phi: Vec<Vec<f64>> = xs.iter().map(|x| layer.features(x)).collect();
    let n = 20;
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| phi.iter().map(|r| r[i] * r[j]).sum())
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| phi.iter().zip(&ys).map(|(r, y)| r[i] * y).sum())
        .collect();
    let want = solve_dense(gram, rhs);
    let scale = want.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    for (a, b) in net.outer.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
    }
}

#[test]
fn wide_layer_interpolates() {
    let layer = sample_hidden(60, 2, 1.0, 1.0, 8).unwrap();
    let xs = random_points(30, 2, 5.0, 9);
    let ys: Vec<f64> = xs.iter().map(|x| x[0] * x[1] - 1.0).collect();
    let net = fit_least_squares(&layer, &xs, &ys, &[0.0, 0.0], 0.0, LsDesign::plain()).unwrap();
    let res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (net.eval(x) - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = ys.iter().map(|y| y * y).sum::<f64>().sqrt();
    assert!(res <= 1e-8 * norm, "{res} vs {norm}");
}

#[test]
fn network_is_piecewise_linear_along_segments() {
    for n in [5, 20, 50] {
        let layer = sample_hidden(n, 2, 2.0, 1.0, n as u64).unwrap();
        let xs = random_points(200, 2, 1.0, 100 + n as u64);
        let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x[0]).cos() + x[1]).collect();
        let net =
            fit_least_squares(&layer, &xs, &ys, &[0.0, 0.0], 1e-6, LsDesign::default()).unwrap();
        let (p, d) = ([-1.0, -0.7], [2.0, 1.3]);
        let steps = 20_000;
        let h = 1.0 / steps as f64;
        let vals: Vec<f64> = (0..=steps)
            .map(|i| {
                let t = i as f64 * h;
                net.eval(&[p[0] + t * d[0], p[1] + t * d[1]])
            })
            .collect();
        let scale = vals.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
        let kinks: Vec<bool> = vals
            .windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]).abs() > 1e-9 * scale)
            .collect();
        let clusters = kinks.windows(2).filter(|w| w[1] && !w[0]).count() + usize::from(kinks[0]);
        assert!(
            clusters >= 1 && clusters <= n,
            "n={n}: {clusters} breakpoints"
        );
    }
}

#[test]
fn sup_error_of_a_network_against_itself_is_zero() {
    let layer = sample_hidden(10, 1, 1.0, 1.0, 2).unwrap();
    let xs = random_points(30, 1, 1.0, 3);
    let ys: Vec<f64> = xs.iter().map(|x| x[0].abs()).collect();
    let net = fit_least_squares(&layer, &xs, &ys, &[0.0], 0.0, LsDesign::default()).unwrap();
    let err = sup_error(&net, |x| net.eval(x), &xs).unwrap();
    assert_eq!(err.max, 0.0);
}

#[test]
fn single_unit_networks_average_to_h() {
    let p = tent_pipeline(101);
    let x = vec![0.3];
    let h = p.h_on(std::slice::from_ref(&x), 0, 0).unwrap()[0] + p.zeta();
    let mut comp = MeanVar::new();
    let mut lit = MeanVar::new();
    for seed in 0..100_000 {
        let layer = p.layer(1, seed).unwrap();
        comp.push(
            p.constructive(&layer, Construction::BoundaryCompensated)
                .unwrap()
                .eval(&x),
        );
        lit.push(
            p.constructive(&layer, Construction::Literal)
                .unwrap()
                .eval(&x),
        );
    }
    let z = (comp.mean - h) / comp.stderr();
    assert!(
        z.abs() <= 3.0,
        "compensated mean {} +- {} vs h = {h}",
        comp.mean,
        comp.stderr()
    );
    // Outer weights G/n alone drop the boundary terms of the integration by parts.
    let z_lit = (lit.mean - h) / lit.stderr();
    assert!(
        z_lit.abs() > 5.0,
        "literal mean {} +- {} vs h = {h}",
        lit.mean,
        lit.stderr()
    );
}

#[test]
fn doubling_width_halves_the_variance() {
    let p = tent_pipeline(101);
    let x = [0.0];
    let var = |n: usize, offset: u64| {
        let mut acc = MeanVar::new();
        for seed in 0..20_000 {
            let layer = p.layer(n, offset + seed).unwrap();
            acc.push(
                p.constructive(&layer, Construction::BoundaryCompensated)
                    .unwrap()
                    .eval(&x),
            );
        }
        acc.variance()
    };
    let ratio = var(8, 0) / var(16, 1_000_000);
    assert!((ratio - 2.0).abs() <= 0.2, "{ratio}");
}

#[test]
fn least_squares_never_loses_on_its_training_grid() {
    let p = tent_pipeline(101);
    let reference = GridReference::on_samples(&p, 0, 0).unwrap();
    for seed in 0..5 {
        for n in [10, 100, 1000] {
            let cell = run_cell(&p, &reference, n, seed, 0.0).unwrap();
            assert!(cell.ls_vs_f <= cell.constructive_vs_f, "{cell:?}");
        }
    }
}

#[test]
fn single_precision_pipeline_tracks_double() {
    let cfg = PipelineConfig {
        lambda: 5.0,
        volume_samples: 20_000,
        ..Default::default()
    };
    let p32 = Pipeline::new(
        sample_on::<f32>(Target::Tent, 1, 41).unwrap(),
        Arc::new(SmoothingKernel::new(1).unwrap()),
        cfg,
    )
    .unwrap();
    let p64 = Pipeline::new(
        sample_on::<f64>(Target::Tent, 1, 41).unwrap(),
        Arc::new(SmoothingKernel::new(1).unwrap()),
        cfg,
    )
    .unwrap();
    let n32 = p32
        .constructive(
            &p32.layer(200, 3).unwrap(),
            Construction::BoundaryCompensated,
        )
        .unwrap();
    let n64 = p64
        .constructive(
            &p64.layer(200, 3).unwrap(),
            Construction::BoundaryCompensated,
        )
        .unwrap();
    for i in 0..=10 {
        let x = -1.0 + 0.2 * i as f64;
        let (a, b) = (n32.eval(&[x as f32]) as f64, n64.eval(&[x]));
        assert!(
            (a - b).abs() <= 1e-3 * (1.0 + b.abs()),
            "x = {x}: {a} vs {b}"
        );
    }
}
