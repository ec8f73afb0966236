//! Desk-scale acceptance suite: one verdict line per criterion on stderr.
//!
//! Run with `cargo test -p rvfl-core --test acceptance -- --nocapture`.

mod common;

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use common::Oracle;
use rvfl_core::bounds::{n_approx, n_main, schedule, smoothing_bound, truncation_bound};
use rvfl_core::kernel::SmoothingKernel;
use rvfl_core::lipschitz::{extend, recenter};
use rvfl_core::pipeline::{median, run_cell, CellResult, GridReference, Pipeline, PipelineConfig};
use rvfl_core::rng::substream;
use rvfl_core::rvfl::Construction;
use rvfl_core::spectral::SpectralSurrogate;
use rvfl_core::targets::{sample, Target};
use rvfl_core::validation::{
    concentration, dual_representation, envelope_grid, geometry_checks, kernel_checks, line_points,
    random_tuple, smoothing_envelope, specfun_checks, trend_checks, truncation_envelope,
    unbiasedness, width_algebra, Check, Status,
};

/// Criteria known to fail, each with its analysis in the README.
const EXPECTED_RED: &[u8] = &[6];

const SEED: u64 = 20_240_611;

fn emit(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

struct Outcome {
    id: u8,
    title: &'static str,
    checks: Vec<Check>,
    supplementary: Vec<Check>,
    seconds: f64,
    target_seconds: f64,
}

impl Outcome {
    fn pass(&self) -> bool {
        self.checks.iter().any(|c| c.status != Status::Skipped)
            && self.checks.iter().all(|c| !c.failed())
    }

    fn report(&self) {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        emit(&format!(
            "criterion {:>2} {verdict} {} ({:.1} s, target {:.0} s)",
            self.id, self.title, self.seconds, self.target_seconds
        ));
        for c in &self.checks {
            emit(&format!("    {c}"));
        }
        for c in &self.supplementary {
            emit(&format!("    supplementary {c}"));
        }
    }
}

fn run(
    id: u8,
    title: &'static str,
    target_seconds: f64,
    body: impl FnOnce() -> (Vec<Check>, Vec<Check>),
) -> Outcome {
    let start = Instant::now();
    let (checks, supplementary) = body();
    let out = Outcome {
        id,
        title,
        checks,
        supplementary,
        seconds: start.elapsed().as_secs_f64(),
        target_seconds,
    };
    out.report();
    out
}

fn kernel(m: usize) -> Arc<SmoothingKernel<f64>> {
    Arc::new(SmoothingKernel::new(m).unwrap())
}

fn surrogate(target: Target, m: usize, lambda: f64, theta: f64) -> SpectralSurrogate<f64> {
    let ext = extend(&recenter(&sample::<f64>(target, m).unwrap())).unwrap();
    SpectralSurrogate::new(ext, kernel(m), lambda, theta).unwrap()
}

fn tent_pipeline(m: usize) -> Pipeline<f64> {
    let cfg = PipelineConfig {
        lambda: 20.0,
        theta: 0.05,
        ..Default::default()
    };
    Pipeline::new(sample::<f64>(Target::Tent, m).unwrap(), kernel(m), cfg).unwrap()
}

fn c1() -> (Vec<Check>, Vec<Check>) {
    (specfun_checks().unwrap(), vec![])
}

fn c2() -> (Vec<Check>, Vec<Check>) {
    (
        kernel_checks(&SmoothingKernel::new(1).unwrap()).unwrap(),
        vec![],
    )
}

fn c3() -> (Vec<Check>, Vec<Check>) {
    let checks = [5.0, 20.0]
        .iter()
        .map(|&lambda| {
            let s = surrogate(Target::Tent, 1, lambda, 0.05);
            dual_representation(&s, &line_points(1, 11, 1.0), 100_000, SEED).unwrap()
        })
        .collect();
    (checks, vec![])
}

fn sweep(
    per_axis: [usize; 2],
    mut check: impl FnMut(&SpectralSurrogate<f64>, &[Vec<f64>], String),
) {
    for m in [1, 2] {
        for target in [Target::Tent, Target::Sin3] {
            let base = surrogate(target, m, 5.0, 0.05);
            let grid = envelope_grid(base.ext(), per_axis[m - 1]).unwrap();
            for lambda in [5.0, 10.0, 20.0] {
                let s = base.with_lambda(lambda).unwrap();
                check(&s, &grid, format!("{target}-m{m}-lambda{lambda}"));
            }
        }
    }
}

fn c4() -> (Vec<Check>, Vec<Check>) {
    let mut out = Vec::new();
    sweep([81, 21], |s, grid, label| {
        out.push(smoothing_envelope(s, grid, &label).unwrap())
    });
    (out, vec![])
}

fn c5() -> (Vec<Check>, Vec<Check>) {
    let mut out = Vec::new();
    sweep([81, 21], |s, grid, label| {
        for theta in [0.02, 0.05] {
            let s = s.with_theta(theta).unwrap();
            out.push(truncation_envelope(&s, grid, &format!("{label}-theta{theta}")).unwrap());
        }
    });
    (out, vec![])
}

fn c6(pipelines: &[&Pipeline<f64>]) -> (Vec<Check>, Vec<Check>) {
    let mut literal = Vec::new();
    let mut compensated = Vec::new();
    for p in pipelines {
        let pts = line_points(p.dim(), 11, 1.0);
        let d = p.density();
        literal.push(unbiasedness(d, &pts, 1_000_000, SEED, Construction::Literal).unwrap());
        compensated.push(
            unbiasedness(d, &pts, 1_000_000, SEED, Construction::BoundaryCompensated).unwrap(),
        );
    }
    (literal, compensated)
}

fn c7(p: &Pipeline<f64>, reference: &GridReference<f64>) -> (Vec<Check>, Vec<Check>) {
    let seeds: Vec<u64> = (1..=200).collect();
    let (checks, _) = concentration(p, reference, 10_000, &seeds, 0.25, &[0.0]).unwrap();
    (checks, vec![])
}

fn c8() -> (Vec<Check>, Vec<Check>) {
    (vec![width_algebra(20, SEED).unwrap()], vec![])
}

fn c9() -> (Vec<Check>, Vec<Check>) {
    let mut o = Oracle::new();
    let mut rng = substream(SEED, 9);
    let (mut main_err, mut approx_err) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let (m, eps, eta, ell, r, sigma, dk) = random_tuple(&mut rng, 10);
        let s = schedule(m, eps, ell, r, sigma).unwrap();
        let main = n_main(&s, eta, dk).unwrap().ln_n;
        let approx = n_approx(m, eps, eta, ell, r, dk).unwrap().ln_n;
        main_err = main_err.max((main - o.ln_n_main(m as u64, eps, eta, ell, r, dk)).abs());
        approx_err = approx_err.max((approx - o.ln_n_approx(m as u64, eps, eta, ell, r, dk)).abs());
    }
    let reference = "relative error of n against a 256-bit evaluation";
    (
        vec![
            Check::upper(
                "n-main-oracle",
                reference,
                main_err,
                1e-12,
                "max |ln n - ln n_ref| over 50 tuples",
            ),
            Check::upper(
                "n-approx-oracle",
                reference,
                approx_err,
                1e-12,
                "max |ln n - ln n_ref| over 50 tuples",
            ),
        ],
        vec![],
    )
}

fn c10(p: &Pipeline<f64>, reference: &GridReference<f64>) -> (Vec<Check>, Vec<Check>) {
    let mut cells: Vec<CellResult> = Vec::new();
    for n in [100, 1_000, 10_000, 100_000] {
        for seed in 1..=20 {
            cells.push(run_cell(p, reference, n, seed, 0.0).unwrap());
        }
    }
    let c = p.config();
    let ext = p.surrogate().ext();
    let budget = smoothing_bound(1, ext.ell(), c.lambda)
        + truncation_bound(1, ext.ell(), ext.radius(), c.theta, c.lambda).unwrap();
    let checks = trend_checks(&cells, budget);
    let literal: Vec<CellResult> = cells
        .iter()
        .map(|c| CellResult {
            constructive_vs_f: c.literal_vs_f,
            ..*c
        })
        .collect();
    let mut supplementary: Vec<Check> = trend_checks(&literal, budget)
        .into_iter()
        .take(2)
        .map(|mut c| {
            c.check_id = format!("literal-{}", c.check_id);
            c
        })
        .collect();
    let widths = [100usize, 1_000, 10_000, 100_000];
    let medians: Vec<f64> = widths
        .iter()
        .map(|&n| {
            median(
                &cells
                    .iter()
                    .filter(|c| c.n == n)
                    .map(|c| c.constructive_vs_h)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let xs: Vec<f64> = widths.iter().map(|&n| (n as f64).log10()).collect();
    let ys: Vec<f64> = medians.iter().map(|v| v.log10()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let per_n: Vec<String> = widths
        .iter()
        .zip(&medians)
        .map(|(n, v)| format!("n = {n}: {v:.3e}"))
        .collect();
    supplementary.push(Check::upper(
        "deviation-rate",
        "median ||N_n - h|| ~ n^{-1/2}",
        (slope + 0.5).abs(),
        0.15,
        format!("log-log slope {slope:.3}; {}", per_n.join(", ")),
    ));
    (checks, supplementary)
}

fn c11() -> (Vec<Check>, Vec<Check>) {
    (geometry_checks(20, 1_000_000, SEED).unwrap(), vec![])
}

#[test]
fn acceptance_criteria() {
    emit("acceptance criteria");
    let start = Instant::now();
    let mut outcomes = vec![
        run(1, "special-function identities", 10.0, c1),
        run(2, "kernel identities at m = 1", 60.0, c2),
        run(3, "dual representation of g", 120.0, c3),
        run(4, "smoothing envelope", 300.0, c4),
        run(5, "truncation envelope", 300.0, c5),
    ];
    let p1 = tent_pipeline(1);
    let p2 = tent_pipeline(2);
    outcomes.push(run(
        6,
        "unbiased units (outer weights G / n)",
        300.0,
        || c6(&[&p1, &p2]),
    ));
    let reference = GridReference::on_samples(&p1, 0, SEED).unwrap();
    outcomes.push(run(7, "concentration", 300.0, || c7(&p1, &reference)));
    outcomes.push(run(8, "width algebra", 10.0, c8));
    outcomes.push(run(9, "width oracles", 10.0, c9));
    outcomes.push(run(10, "end-to-end approximation trend", 600.0, || {
        c10(&p1, &reference)
    }));
    outcomes.push(run(11, "geometry", 120.0, c11));

    let red: Vec<u8> = outcomes
        .iter()
        .filter(|o| !o.pass())
        .map(|o| o.id)
        .collect();
    let green = outcomes.len() - red.len();
    emit(&format!(
        "summary: {green} of {} criteria pass, red {red:?}, expected red {EXPECTED_RED:?}, {:.0} s total",
        outcomes.len(),
        start.elapsed().as_secs_f64()
    ));
    assert_eq!(
        red, EXPECTED_RED,
        "red criteria differ from the documented set"
    );
}
