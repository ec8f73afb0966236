use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::mpsc;
use std::time::Instant;

use clap::Args;
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use rvfl_core::pipeline::{run_cell, CellResult, GridReference};

use crate::config::{parse_list, parse_widths, ConfigArgs, ExperimentConfig, RunOverrides};
use crate::{fail, CliResult, VERSION};

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Widths: `a..b`, `a,b,c` or `a`.
    #[arg(long, value_parser = parse_widths)]
    n: Option<std::vec::Vec<usize>>,
    /// Seeds: `a..b`, `a,b,c` or `a`.
    #[arg(long, value_parser = parse_list)]
    seeds: Option<std::vec::Vec<u64>>,
    /// Monte Carlo draws for h when m > 3.
    #[arg(long)]
    h_samples: Option<usize>,
    /// Ridge penalty for the least-squares fit.
    #[arg(long)]
    ridge: Option<f64>,
    /// Output directory for `results.csv` and `manifest.json`.
    #[arg(long, env = "RVFL_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

pub const COLUMNS: [&str; 11] = [
    "config_hash",
    "version",
    "master_seed",
    "n",
    "seed",
    "layer_seed",
    "constructive_vs_f",
    "constructive_vs_h",
    "literal_vs_f",
    "ls_vs_f",
    "seconds",
];

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'a str,
    config_hash: String,
    config: &'a ExperimentConfig,
    lambda: f64,
    theta: f64,
    zeta: f64,
    support_volume: f64,
    support_volume_stderr: f64,
    results: &'a str,
    columns: [&'static str; 11],
    cells: usize,
    wall_seconds: f64,
}

/// SplitMix64 finalizer of `master ^ seed * golden`, so `(master, seed)` pairs give unrelated layers.
pub fn mix(master: u64, seed: u64) -> u64 {
    let mut z = master ^ seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn row(hash: &str, master: u64, seed: u64, c: &CellResult) -> Vec<String> {
    vec![
        hash.to_string(),
        VERSION.to_string(),
        master.to_string(),
        c.n.to_string(),
        seed.to_string(),
        c.seed.to_string(),
        format!("{:e}", c.constructive_vs_f),
        format!("{:e}", c.constructive_vs_h),
        format!("{:e}", c.literal_vs_f),
        format!("{:e}", c.ls_vs_f),
        format!("{:.6}", c.seconds),
    ]
}

pub fn run(args: ExperimentArgs) -> CliResult<()> {
    let start = Instant::now();
    let overrides = RunOverrides {
        n: args.n,
        seeds: args.seeds,
        h_samples: args.h_samples,
        ridge: args.ridge,
    };
    let (cfg, file_out) = ExperimentConfig::resolve(&args.config, &overrides)?;
    let out_dir = args
        .out_dir
        .or(file_out)
        .unwrap_or_else(|| PathBuf::from("runs"));
    fs::create_dir_all(&out_dir).map_err(|e| fail(format!("{}: {e}", out_dir.display())))?;
    let hash = cfg.hash();
    let p = cfg.pipeline()?;
    let reference = GridReference::on_samples(&p, cfg.h_samples, cfg.master_seed)?;
    let pc = *p.config();
    info!(
        "lambda = {}, theta = {}, {} grid points",
        pc.lambda,
        pc.theta,
        reference.points.len()
    );

    let cells: Vec<(usize, u64)> = cfg
        .n
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let results_path = out_dir.join("results.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&results_path)?));
    w.write_record(COLUMNS)?;
    w.flush()?;

    let (tx, rx) = mpsc::channel();
    let master = cfg.master_seed;
    let ridge = cfg.ridge;
    let written = std::thread::scope(|scope| -> CliResult<usize> {
        let p = &p;
        let reference = &reference;
        let cells = &cells;
        scope.spawn(move || {
            cells
                .par_iter()
                .enumerate()
                .for_each_with(tx, |tx, (i, &(n, seed))| {
                    let r = run_cell(p, reference, n, mix(master, seed), ridge);
                    let _ = tx.send((i, r));
                });
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (i, r) in rx {
            pending.insert(i, r?);
            while let Some(c) = pending.remove(&next) {
                let (n, seed) = cells[next];
                debug_assert_eq!(c.n, n);
                w.write_record(row(&hash, master, seed, &c))?;
                w.flush()?;
                info!(
                    "n = {n}, seed = {seed}: constructive {:.4e}, ls {:.4e}",
                    c.constructive_vs_f, c.ls_vs_f
                );
                next += 1;
            }
        }
        Ok(next)
    })?;
    if written != cells.len() {
        return Err(fail(format!(
            "only {written} of {} cells completed",
            cells.len()
        )));
    }

    let vol = p.support_volume();
    let manifest = Manifest {
        version: VERSION,
        config_hash: hash,
        config: &cfg,
        lambda: pc.lambda,
        theta: pc.theta,
        zeta: p.zeta(),
        support_volume: vol.value,
        support_volume_stderr: vol.stderr,
        results: "results.csv",
        columns: COLUMNS,
        cells: cells.len(),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let mut mw = BufWriter::new(File::create(out_dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut mw, &manifest)?;
    writeln!(mw)?;
    mw.flush()?;
    println!("{}", results_path.display());
    Ok(())
}
