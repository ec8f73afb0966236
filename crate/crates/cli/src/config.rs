//! Run configuration: a TOML document with flag overrides.
//!
//! ```toml
//! [target]
//! name = "tent"        # or path = "samples.csv"
//! m = 1
//! per_axis = 201
//!
//! [model]
//! sigma = 1.0
//! lambda = 20.0        # or eps = 0.1
//! theta = 0.05
//!
//! [run]
//! n = [100, 1000, 10000]
//! seeds = [1, 2, 3]
//! master_seed = 0
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rvfl_core::bounds::schedule;
use rvfl_core::geometry::Compactum;
use rvfl_core::io::read_samples_file;
use rvfl_core::kernel::SmoothingKernel;
use rvfl_core::lipschitz::SampledFunction;
use rvfl_core::pipeline::{Pipeline, PipelineConfig, VOLUME_SAMPLES};
use rvfl_core::targets::{default_points_per_axis, sample_on, Target};

use crate::{fail, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub target: TargetSection,
    pub model: ModelSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    pub name: Option<String>,
    pub path: Option<PathBuf>,
    pub m: Option<usize>,
    pub per_axis: Option<usize>,
    pub ell: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub eps: Option<f64>,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub n: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub master_seed: Option<u64>,
    pub volume_samples: Option<usize>,
    pub h_samples: Option<usize>,
    pub ridge: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

/// Flags shared by every subcommand that builds a pipeline.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML config, or the manifest JSON of an earlier experiment.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in target (tent, sin3, radial-bump) or a CSV of points with the value in the last column.
    #[arg(long)]
    pub target: Option<String>,
    /// Input dimension for built-in targets.
    #[arg(long)]
    pub m: Option<usize>,
    /// Grid points per axis for built-in targets.
    #[arg(long)]
    pub per_axis: Option<usize>,
    /// Lipschitz constant (default: nominal for built-ins, estimated for CSV).
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Smoothing scale lambda = sigma Lambda.
    #[arg(long, conflicts_with = "eps")]
    pub lambda: Option<f64>,
    /// Target accuracy; derives lambda and theta from the parameter schedule.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Truncation radius (default 0.05, or the schedule's value with --eps).
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    /// Monte Carlo draws for |K~|.
    #[arg(long)]
    pub volume_samples: Option<usize>,
}

/// Target function source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetSpec {
    Builtin {
        name: String,
        m: usize,
        per_axis: usize,
    },
    Csv {
        path: PathBuf,
        sha256: String,
    },
}

/// Smoothing scale, given directly or derived from a target accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Lambda(f64),
    Epsilon(f64),
}

/// Fully resolved configuration; its JSON form is hashed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub ell: Option<f64>,
    pub sigma: f64,
    pub scale: Scale,
    pub theta: Option<f64>,
    pub n: Vec<usize>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub volume_samples: usize,
    pub h_samples: usize,
    pub ridge: f64,
}

/// Experiment-only overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub n: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub h_samples: Option<usize>,
    pub ridge: Option<f64>,
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: ExperimentConfig,
}

fn read_file_config(path: &Path) -> CliResult<Result<FileConfig, ExperimentConfig>> {
    let text = fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let m: ManifestConfig =
            serde_json::from_str(&text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
        return Ok(Err(m.config));
    }
    let cfg: FileConfig =
        toml::from_str(&text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    Ok(Ok(cfg))
}

fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(fail(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    /// Merges file values, then flags, then defaults.
    pub fn resolve(args: &ConfigArgs, run: &RunOverrides) -> CliResult<(Self, Option<PathBuf>)> {
        let (file, base) = match &args.config {
            Some(p) => match read_file_config(p)? {
                Ok(f) => (f, None),
                Err(c) => (FileConfig::default(), Some(c)),
            },
            None => (FileConfig::default(), None),
        };
        if let Some(mut cfg) = base {
            cfg.apply(args, run)?;
            return Ok((cfg, None));
        }

        let name = args.target.clone().or(file.target.name.clone());
        let path = file.target.path.clone();
        let m = args.m.or(file.target.m);
        let per_axis = args.per_axis.or(file.target.per_axis);
        let target = match (name, path) {
            (Some(n), _) if n.parse::<Target>().is_ok() => {
                let m = m.unwrap_or(1);
                TargetSpec::Builtin {
                    name: n,
                    m,
                    per_axis: per_axis.unwrap_or_else(|| default_points_per_axis(m)),
                }
            }
            (Some(p), _) => csv_target(PathBuf::from(p))?,
            (None, Some(p)) => csv_target(p)?,
            (None, None) => {
                let m = m.unwrap_or(1);
                TargetSpec::Builtin {
                    name: "tent".into(),
                    m,
                    per_axis: per_axis.unwrap_or_else(|| default_points_per_axis(m)),
                }
            }
        };
        let scale = match (args.lambda, args.eps, file.model.lambda, file.model.eps) {
            (Some(l), _, _, _) => Scale::Lambda(l),
            (None, Some(e), _, _) => Scale::Epsilon(e),
            (None, None, Some(_), Some(_)) => return Err(fail("config sets both lambda and eps")),
            (None, None, Some(l), None) => Scale::Lambda(l),
            (None, None, None, Some(e)) => Scale::Epsilon(e),
            (None, None, None, None) => Scale::Lambda(20.0),
        };
        let cfg = Self {
            target,
            ell: args.ell.or(file.target.ell),
            sigma: args.sigma.or(file.model.sigma).unwrap_or(1.0),
            scale,
            theta: args.theta.or(file.model.theta),
            n: run
                .n
                .clone()
                .or(file.run.n)
                .unwrap_or_else(|| vec![100, 1_000, 10_000]),
            seeds: run
                .seeds
                .clone()
                .or(file.run.seeds)
                .unwrap_or_else(|| (1..=20).collect()),
            master_seed: args.master_seed.or(file.run.master_seed).unwrap_or(0),
            volume_samples: args
                .volume_samples
                .or(file.run.volume_samples)
                .unwrap_or(VOLUME_SAMPLES),
            h_samples: run.h_samples.or(file.run.h_samples).unwrap_or(100_000),
            ridge: run.ridge.or(file.run.ridge).unwrap_or(0.0),
        };
        cfg.validate()?;
        Ok((cfg, file.run.out_dir))
    }

    /// Flag overrides on top of a manifest's configuration.
    fn apply(&mut self, args: &ConfigArgs, run: &RunOverrides) -> CliResult<()> {
        if args.target.is_some() || args.m.is_some() || args.per_axis.is_some() {
            return Err(fail("target flags cannot override a manifest"));
        }
        if let Some(l) = args.lambda {
            self.scale = Scale::Lambda(l);
        }
        if let Some(e) = args.eps {
            self.scale = Scale::Epsilon(e);
        }
        self.ell = args.ell.or(self.ell);
        self.sigma = args.sigma.unwrap_or(self.sigma);
        self.theta = args.theta.or(self.theta);
        self.master_seed = args.master_seed.unwrap_or(self.master_seed);
        self.volume_samples = args.volume_samples.unwrap_or(self.volume_samples);
        if let Some(n) = &run.n {
            self.n = n.clone();
        }
        if let Some(s) = &run.seeds {
            self.seeds = s.clone();
        }
        self.h_samples = run.h_samples.unwrap_or(self.h_samples);
        self.ridge = run.ridge.unwrap_or(self.ridge);
        if let TargetSpec::Csv { path, sha256 } = &self.target {
            let now = sha256_file(path)?;
            if &now != sha256 {
                return Err(fail(format!(
                    "{} changed since the manifest was written",
                    path.display()
                )));
            }
        }
        self.validate()
    }

    fn validate(&self) -> CliResult<()> {
        positive("sigma", self.sigma)?;
        match self.scale {
            Scale::Lambda(l) => positive("lambda", l)?,
            Scale::Epsilon(e) => positive("eps", e)?,
        };
        if let Some(t) = self.theta {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(fail(format!("theta must be >= 0, got {t}")));
            }
        }
        if let Some(l) = self.ell {
            positive("ell", l)?;
        }
        if self.seeds.is_empty() {
            return Err(fail("seeds list is empty"));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(fail("widths must be a non-empty list of positive integers"));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(fail(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        if let TargetSpec::Builtin { m, per_axis, .. } = self.target {
            if m == 0 || per_axis < 2 {
                return Err(fail("built-in targets need m >= 1 and per_axis >= 2"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn sampled(&self) -> CliResult<SampledFunction<f64>> {
        let f = match &self.target {
            TargetSpec::Builtin { name, m, per_axis } => {
                let t: Target = name.parse()?;
                sample_on::<f64>(t, *m, *per_axis)?
            }
            TargetSpec::Csv { path, .. } => {
                let (points, values) = read_samples_file::<f64>(path)?;
                SampledFunction::new(Compactum::new(points)?, values, self.ell)?
            }
        };
        Ok(match (self.ell, &self.target) {
            (Some(l), TargetSpec::Builtin { .. }) => f.with_ell(l)?,
            _ => f,
        })
    }

    /// `(lambda, theta)` after resolving an accuracy target through the schedule.
    pub fn lambda_theta(&self, f: &SampledFunction<f64>) -> CliResult<(f64, f64)> {
        match self.scale {
            Scale::Lambda(l) => Ok((l, self.theta.unwrap_or(0.05))),
            Scale::Epsilon(e) => {
                let s = schedule(f.dim(), e, f.ell(), f.domain().radius(), self.sigma)?;
                Ok((s.lambda, self.theta.unwrap_or(s.theta)))
            }
        }
    }

    pub fn pipeline(&self) -> CliResult<Pipeline<f64>> {
        self.pipeline_with_kernel(None)
    }

    pub fn pipeline_with_kernel(
        &self,
        kernel: Option<Arc<SmoothingKernel<f64>>>,
    ) -> CliResult<Pipeline<f64>> {
        let f = self.sampled()?;
        let (lambda, theta) = self.lambda_theta(&f)?;
        let kernel = match kernel {
            Some(k) => k,
            None => Arc::new(SmoothingKernel::new(f.dim())?),
        };
        let cfg = PipelineConfig {
            lambda,
            theta,
            sigma: self.sigma,
            volume_samples: self.volume_samples,
            volume_seed: self.master_seed,
        };
        Ok(Pipeline::new(f, kernel, cfg)?)
    }
}

fn csv_target(path: PathBuf) -> CliResult<TargetSpec> {
    let sha256 = sha256_file(&path)?;
    Ok(TargetSpec::Csv { path, sha256 })
}

/// Parses `a..b` (inclusive), `a..=b`, `a,b,c` or `a`.
pub fn parse_list(text: &str) -> Result<Vec<u64>, String> {
    let p = |s: &str| s.trim().parse::<u64>().map_err(|e| format!("'{s}': {e}"));
    if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (p(a)?, p(b)?);
        if a > b {
            return Err(format!("empty range {text}"));
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(p).collect()
}

pub fn parse_widths(text: &str) -> Result<Vec<usize>, String> {
    parse_list(text)?
        .into_iter()
        .map(|v| usize::try_from(v).map_err(|e| e.to_string()))
        .collect()
}
