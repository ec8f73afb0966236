use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use rvfl_core::bounds::{
    n_approx, n_main, schedule, theta_regime_report, ParameterSchedule, ThetaRegime,
};
use rvfl_core::geometry::{effective_dimension, Compactum};
use rvfl_core::io::read_points_file;
use rvfl_core::targets::cube_grid;

use crate::config::parse_list;
use crate::{fail, CliResult};

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Input dimensions: `a..b`, `a,b,c` or `a`.
    #[arg(long, value_parser = parse_list)]
    m: std::vec::Vec<u64>,
    #[arg(long)]
    eps: f64,
    /// Failure probability.
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    ell: f64,
    /// Circumradius of the domain.
    #[arg(long = "R", default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Effective dimension of the domain, or `auto` to estimate it.
    #[arg(long = "dK", default_value = "auto")]
    d_k: String,
    /// Domain samples for `--dK auto` (default: a cube grid of circumradius R).
    #[arg(long)]
    points: Option<PathBuf>,
    /// Monte Carlo draws for `--dK auto`.
    #[arg(long, default_value_t = 1_000_000)]
    volume_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Serialize)]
struct Params {
    m: usize,
    eps: f64,
    eta: f64,
    ell: f64,
    #[serde(rename = "R")]
    radius: f64,
    sigma: f64,
    #[serde(rename = "dK")]
    d_k: f64,
    #[serde(rename = "dK_stderr")]
    d_k_stderr: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Row {
    params: Params,
    schedule: ParameterSchedule,
    log10_n_main: f64,
    log10_n_approx: f64,
    n_main: Option<u64>,
    regime: ThetaRegime,
}

fn dimension(args: &BoundsArgs, m: usize) -> CliResult<(f64, Option<f64>, f64)> {
    if args.d_k != "auto" {
        let d: f64 = args
            .d_k
            .parse()
            .map_err(|_| fail(format!("--dK: expected a number or auto, got {}", args.d_k)))?;
        return Ok((d, None, args.radius));
    }
    let points = match &args.points {
        Some(p) => read_points_file::<f64>(p)?,
        None => {
            let per_axis = match m {
                1 => 201,
                2 => 41,
                3 => 11,
                _ => 3,
            };
            cube_grid::<f64>(m, per_axis, args.radius / (m as f64).sqrt())?
        }
    };
    let k = Compactum::new(points)?;
    if k.dim() != m {
        return Err(fail(format!(
            "--points has dimension {}, but m = {m}",
            k.dim()
        )));
    }
    let d = effective_dimension(&k, args.volume_samples, args.seed)?;
    let radius = if args.points.is_some() {
        k.radius()
    } else {
        args.radius
    };
    Ok((d.value, Some(d.stderr), radius))
}

pub fn run(args: BoundsArgs) -> CliResult<()> {
    if args.m.is_empty() {
        return Err(fail("--m is empty"));
    }
    let mut rows = Vec::new();
    for &m in &args.m {
        let m = usize::try_from(m).map_err(|e| fail(e.to_string()))?;
        let (d_k, d_k_stderr, radius) = dimension(&args, m)?;
        let s = schedule(m, args.eps, args.ell, radius, args.sigma)?;
        let main = n_main(&s, args.eta, d_k)?;
        let approx = n_approx(m, args.eps, args.eta, args.ell, radius, d_k)?;
        rows.push(Row {
            params: Params {
                m,
                eps: args.eps,
                eta: args.eta,
                ell: args.ell,
                radius,
                sigma: args.sigma,
                d_k,
                d_k_stderr,
            },
            regime: theta_regime_report(&s)?,
            schedule: s,
            log10_n_main: main.log10_n,
            log10_n_approx: approx.log10_n,
            n_main: main.n,
        });
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if args.json {
        serde_json::to_writer_pretty(&mut out, &rows)?;
        writeln!(out)?;
    } else if args.csv {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "m",
            "eps",
            "eta",
            "ell",
            "R",
            "sigma",
            "dK",
            "dK_stderr",
            "lambda",
            "Lambda",
            "theta",
            "log10_n_main",
            "log10_n_approx",
        ])?;
        for r in &rows {
            let p = &r.params;
            w.write_record([
                p.m.to_string(),
                p.eps.to_string(),
                p.eta.to_string(),
                p.ell.to_string(),
                p.radius.to_string(),
                p.sigma.to_string(),
                p.d_k.to_string(),
                p.d_k_stderr.map(|v| v.to_string()).unwrap_or_default(),
                r.schedule.lambda.to_string(),
                r.schedule.big_lambda.to_string(),
                r.schedule.theta.to_string(),
                r.log10_n_main.to_string(),
                r.log10_n_approx.to_string(),
            ])?;
        }
        w.flush()?;
    } else {
        writeln!(
            out,
            "{:>4} {:>16} {:>11} {:>11} {:>16} {:>14} {:>14}",
            "m", "dK", "lambda", "theta", "1/theta / approx", "log10 n_main", "log10 n_approx"
        )?;
        for r in &rows {
            let dk = match r.params.d_k_stderr {
                Some(se) => format!("{:.4} +- {:.1e}", r.params.d_k, se),
                None => format!("{:.3}", r.params.d_k),
            };
            writeln!(
                out,
                "{:>4} {:>16} {:>11.4e} {:>11.4e} {:>16.4} {:>14.4} {:>14.4}",
                r.params.m,
                dk,
                r.schedule.lambda,
                r.schedule.theta,
                r.regime.ratio,
                r.log10_n_main,
                r.log10_n_approx
            )?;
        }
    }
    Ok(())
}
