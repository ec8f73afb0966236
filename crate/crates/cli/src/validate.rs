use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use log::info;
use serde::Serialize;

use rvfl_core::kernel::SmoothingKernel;
use rvfl_core::pipeline::GridReference;
use rvfl_core::rvfl::Construction;
use rvfl_core::validation::{
    boundedness, concentration, dual_representation, envelope_grid, extension_checks,
    geometry_checks, kernel_checks, line_points, smoothing_envelope, specfun_checks,
    truncation_envelope, unbiasedness, width_algebra, Check, Status,
};

use crate::config::{ConfigArgs, ExperimentConfig, RunOverrides};
use crate::{CliResult, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    Specfun,
    Kernel,
    Extension,
    Dual,
    Envelopes,
    Units,
    Concentration,
    Widths,
    Geometry,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Check groups to run (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    only: Vec<Group>,
    /// Construction whose units are tested for unbiasedness and boundedness.
    #[arg(long, default_value = "compensated")]
    construction: String,
    /// Monte Carlo draws for the unit and dual-representation checks.
    #[arg(long, default_value_t = 200_000)]
    draws: usize,
    /// Width for the concentration checks.
    #[arg(long, default_value_t = 10_000)]
    concentration_n: usize,
    /// Seeds for the concentration checks.
    #[arg(long, default_value_t = 100)]
    concentration_seeds: u64,
    /// Random point clouds for the geometry checks.
    #[arg(long, default_value_t = 10)]
    geometry_clouds: usize,
    /// Grid points per axis for the envelope checks.
    #[arg(long)]
    envelope_per_axis: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the JSON report instead of one line per check.
    #[arg(long)]
    json: bool,
    /// Scales the tabulated Psi by this factor before running (negative control).
    #[arg(long, hide = true)]
    corrupt_psi: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    version: &'a str,
    config_hash: String,
    master_seed: u64,
    config: &'a ExperimentConfig,
    counts: BTreeMap<&'static str, usize>,
    checks: Vec<GroupCheck>,
}

#[derive(Debug, Serialize)]
struct GroupCheck {
    group: Group,
    #[serde(flatten)]
    check: Check,
}

fn enabled(only: &[Group], g: Group) -> bool {
    only.is_empty() || only.contains(&g)
}

/// Runs the selected groups; returns 1 when any check fails.
pub fn run(args: ValidateArgs) -> CliResult<u8> {
    let (cfg, _) = ExperimentConfig::resolve(&args.config, &RunOverrides::default())?;
    let construction: Construction = args.construction.parse()?;
    let seed = cfg.master_seed;
    let f = cfg.sampled()?;
    let m = f.dim();
    let mut kernel = SmoothingKernel::new(m)?;
    if let Some(factor) = args.corrupt_psi {
        kernel.tamper_table(|_, v| v * factor);
    }
    let p = cfg.pipeline_with_kernel(Some(Arc::new(kernel)))?;
    let only = &args.only;
    let mut checks: Vec<GroupCheck> = Vec::new();
    let mut push = |group: Group, list: Vec<Check>| {
        for check in list {
            info!("{check}");
            checks.push(GroupCheck { group, check });
        }
    };

    if enabled(only, Group::Specfun) {
        push(Group::Specfun, specfun_checks()?);
    }
    if enabled(only, Group::Kernel) {
        push(Group::Kernel, kernel_checks(p.surrogate().kernel())?);
    }
    if enabled(only, Group::Extension) {
        push(
            Group::Extension,
            extension_checks(p.surrogate().ext(), 20_000, seed)?,
        );
    }
    let s = p.surrogate();
    if enabled(only, Group::Dual) {
        let pts = line_points(m, 11, 1.0);
        push(
            Group::Dual,
            vec![dual_representation(s, &pts, args.draws, seed)?],
        );
    }
    if enabled(only, Group::Envelopes) {
        if m <= 2 {
            let per_axis = args
                .envelope_per_axis
                .unwrap_or(if m == 1 { 81 } else { 21 });
            let grid = envelope_grid(s.ext(), per_axis)?;
            let label = format!("m{m}-lambda{}", s.lambda());
            push(
                Group::Envelopes,
                vec![
                    smoothing_envelope(s, &grid, &label)?,
                    truncation_envelope(s, &grid, &label)?,
                ],
            );
        } else {
            push(
                Group::Envelopes,
                vec![
                    Check::skipped(
                        "smoothing-envelope",
                        "sup |f~ - g|",
                        format!("grid too large at m = {m}"),
                    ),
                    Check::skipped(
                        "truncation-envelope",
                        "sup |g - h|",
                        format!("grid too large at m = {m}"),
                    ),
                ],
            );
        }
    }
    if enabled(only, Group::Units) {
        let pts = line_points(m, 11, 1.0);
        push(
            Group::Units,
            vec![
                unbiasedness(p.density(), &pts, args.draws, seed, construction)?,
                boundedness(p.density(), &pts, args.draws, seed, construction)?,
            ],
        );
    }
    if enabled(only, Group::Concentration) {
        let reference = GridReference::on_samples(&p, cfg.h_samples, seed)?;
        let seeds: Vec<u64> = (1..=args.concentration_seeds).collect();
        let x0 = vec![0.0; m];
        let (list, _) = concentration(&p, &reference, args.concentration_n, &seeds, 0.25, &x0)?;
        push(Group::Concentration, list);
    }
    if enabled(only, Group::Widths) {
        push(Group::Widths, vec![width_algebra(20, seed)?]);
    }
    if enabled(only, Group::Geometry) {
        push(
            Group::Geometry,
            geometry_checks(args.geometry_clouds, cfg.volume_samples, seed)?,
        );
    }

    let mut counts = BTreeMap::new();
    for key in ["pass", "fail", "skipped"] {
        counts.insert(key, 0);
    }
    for c in &checks {
        let key = match c.check.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        };
        *counts.get_mut(key).expect("key present") += 1;
    }
    let failed = counts["fail"] > 0;
    let report = Report {
        version: VERSION,
        config_hash: cfg.hash(),
        master_seed: seed,
        config: &cfg,
        counts,
        checks,
    };
    if let Some(path) = &args.report {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        w.flush()?;
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if args.json {
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
    } else {
        for c in &report.checks {
            writeln!(
                out,
                "{:<13} {}",
                format!("{:?}", c.group).to_lowercase(),
                c.check
            )?;
        }
        writeln!(
            out,
            "{} pass, {} fail, {} skipped",
            report.counts["pass"], report.counts["fail"], report.counts["skipped"]
        )?;
    }
    Ok(u8::from(failed))
}
