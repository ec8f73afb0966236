use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;

use rvfl_core::io::{read_points_file, write_values};
use rvfl_core::pipeline::GridReference;
use rvfl_core::rvfl::{fit_least_squares, Construction, LsDesign, RvflNetwork};

use crate::config::{ConfigArgs, ExperimentConfig, RunOverrides};
use crate::experiment::mix;
use crate::{fail, CliResult};

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Hidden units.
    #[arg(long)]
    width: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Outer weights from the weight density: `compensated` or `literal`.
    #[arg(long, default_value = "compensated", conflicts_with = "least_squares")]
    construction: String,
    /// Fit the outer weights by least squares on the sample grid instead.
    #[arg(long)]
    least_squares: bool,
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    /// Output JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Network JSON written by `build`.
    #[arg(long)]
    network: PathBuf,
    /// CSV of points, one per row.
    #[arg(long)]
    points: PathBuf,
    /// Output CSV `x1,...,xm,value` (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn build(args: BuildArgs) -> CliResult<()> {
    if args.width == 0 {
        return Err(fail("--width must be positive"));
    }
    let (cfg, _) = ExperimentConfig::resolve(&args.config, &RunOverrides::default())?;
    let p = cfg.pipeline()?;
    let layer = p.layer(args.width, mix(cfg.master_seed, args.seed))?;
    let net = if args.least_squares {
        let reference = GridReference::on_samples(&p, cfg.h_samples, cfg.master_seed)?;
        fit_least_squares(
            &layer,
            &reference.points,
            &reference.f,
            p.offset(),
            args.ridge,
            LsDesign::default(),
        )?
    } else {
        let c: Construction = args.construction.parse()?;
        p.constructive(&layer, c)?
    };
    let json = net.to_json()?;
    match &args.out {
        Some(path) => fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(())
}

pub fn eval(args: EvalArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.network)
        .map_err(|e| fail(format!("{}: {e}", args.network.display())))?;
    let net = RvflNetwork::<f64>::from_json(&text)?;
    let points = read_points_file::<f64>(&args.points)?;
    let m = net.layer.dim();
    if let Some(bad) = points.iter().find(|x| x.len() != m) {
        return Err(fail(format!(
            "network expects {m} coordinates, got a row with {}",
            bad.len()
        )));
    }
    let values = net.eval_many(&points);
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_values(&mut w, &points, &values)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            write_values(stdout.lock(), &points, &values)?;
        }
    }
    Ok(())
}
