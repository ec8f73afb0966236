//! End-to-end wiring from samples of `f` to constructive and trained networks.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::kernel::SmoothingKernel;
use crate::lipschitz::{extend, recenter, SampledFunction};
use crate::rng::Estimate;
use crate::rvfl::{
    build_constructive, fit_least_squares, grid_spacing, sample_hidden, support_volume,
    Construction, HiddenLayer, LsDesign, RvflNetwork, WeightDensity,
};
use crate::scalar::Scalar;
use crate::spectral::{SpectralSurrogate, MAX_QUAD_DIM};

/// Default draws for `|K~|`.
pub const VOLUME_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub lambda: f64,
    pub theta: f64,
    pub sigma: f64,
    pub volume_samples: usize,
    pub volume_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lambda: 20.0,
            theta: 0.05,
            sigma: 1.0,
            volume_samples: VOLUME_SAMPLES,
            volume_seed: 0,
        }
    }
}

/// Samples of `f` with every derived object of the construction.
#[derive(Debug, Clone)]
pub struct Pipeline<T> {
    sampled: SampledFunction<T>,
    density: WeightDensity<T>,
    volume: Estimate<T>,
    config: PipelineConfig,
}

impl<T: Scalar> Pipeline<T> {
    pub fn new(
        sampled: SampledFunction<T>,
        kernel: Arc<SmoothingKernel<T>>,
        config: PipelineConfig,
    ) -> Result<Self> {
        if kernel.dim() != sampled.dim() {
            return invalid(format!(
                "kernel has m = {}, samples m = {}",
                kernel.dim(),
                sampled.dim()
            ));
        }
        let ext = extend(&recenter(&sampled))?;
        let volume = support_volume(&ext, config.volume_samples, config.volume_seed)?;
        let surrogate =
            SpectralSurrogate::new(ext, kernel, T::of(config.lambda), T::of(config.theta))?;
        let density = WeightDensity::new(surrogate, T::of(config.sigma), volume.value)?;
        Ok(Self {
            sampled,
            density,
            volume,
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// The samples in their original coordinates.
    pub fn sampled(&self) -> &SampledFunction<T> {
        &self.sampled
    }

    pub fn surrogate(&self) -> &SpectralSurrogate<T> {
        self.density.surrogate()
    }

    pub fn density(&self) -> &WeightDensity<T> {
        &self.density
    }

    /// `|K~|` estimate.
    pub fn support_volume(&self) -> Estimate<T> {
        self.volume
    }

    pub fn dim(&self) -> usize {
        self.sampled.dim()
    }

    pub fn zeta(&self) -> T {
        self.surrogate().ext().base().zeta()
    }

    pub fn offset(&self) -> &[T] {
        self.surrogate().ext().base().offset()
    }

    pub fn to_local(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(self.offset()).map(|(&a, &p)| a - p).collect()
    }

    pub fn layer(&self, n: usize, seed: u64) -> Result<HiddenLayer<T>> {
        let ext = self.surrogate().ext();
        sample_hidden(n, self.dim(), self.density.sigma(), ext.radius(), seed)
    }

    pub fn constructive(
        &self,
        layer: &HiddenLayer<T>,
        construction: Construction,
    ) -> Result<RvflNetwork<T>> {
        build_constructive(layer, &self.density, construction)
    }

    /// `h` at points given in original coordinates: quadrature for m <= 3,
    /// otherwise Monte Carlo with `samples` draws.
    pub fn h_on(&self, xs: &[Vec<T>], samples: usize, seed: u64) -> Result<Vec<T>> {
        let local: Vec<Vec<T>> = xs.iter().map(|x| self.to_local(x)).collect();
        if self.dim() <= MAX_QUAD_DIM {
            local
                .par_iter()
                .map(|x| Ok(self.surrogate().h_quadrature(x)?.value))
                .collect()
        } else {
            Ok(self
                .surrogate()
                .h_truncated_many(&local, samples, seed)?
                .into_iter()
                .map(|e| e.value)
                .collect())
        }
    }
}

/// Values of `f` and `h + zeta` on an evaluation grid.
#[derive(Debug, Clone)]
pub struct GridReference<T> {
    pub points: Vec<Vec<T>>,
    pub f: Vec<T>,
    /// `h(x - p) + zeta`, the mean of the compensated network.
    pub h: Vec<T>,
}

impl<T: Scalar> GridReference<T> {
    /// Uses the sample points of `f` as the grid.
    pub fn on_samples(pipeline: &Pipeline<T>, h_samples: usize, seed: u64) -> Result<Self> {
        let points = pipeline.sampled().domain().points().to_vec();
        let f = pipeline.sampled().values().to_vec();
        let zeta = pipeline.zeta();
        let h = pipeline
            .h_on(&points, h_samples, seed)?
            .into_iter()
            .map(|v| v + zeta)
            .collect();
        Ok(Self { points, f, h })
    }

    /// `max |f - N|` over the grid.
    pub fn error_vs_f(&self, net: &RvflNetwork<T>) -> T {
        max_abs_diff(&self.f, &net.eval_many(&self.points))
    }

    /// `max |h + zeta - N|` over the grid.
    pub fn error_vs_h(&self, net: &RvflNetwork<T>) -> T {
        max_abs_diff(&self.h, &net.eval_many(&self.points))
    }

    /// `max |f - N|` plus the network's Lipschitz bound times the grid spacing.
    pub fn inflated_vs_f(&self, net: &RvflNetwork<T>) -> T {
        self.error_vs_f(net) + net.lipschitz_bound() * grid_spacing(&self.points)
    }
}

fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs())
        .fold(T::zero(), T::max)
}

/// One `(n, seed)` run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellResult {
    pub n: usize,
    pub seed: u64,
    pub constructive_vs_f: f64,
    pub constructive_vs_h: f64,
    pub literal_vs_f: f64,
    pub ls_vs_f: f64,
    pub seconds: f64,
}

/// Builds the compensated and literal constructive networks and the
/// least-squares network on one hidden layer and measures grid errors.
pub fn run_cell<T: Scalar>(
    pipeline: &Pipeline<T>,
    reference: &GridReference<T>,
    n: usize,
    seed: u64,
    ridge: T,
) -> Result<CellResult> {
    let start = Instant::now();
    let layer = pipeline.layer(n, seed)?;
    let comp = pipeline.constructive(&layer, Construction::BoundaryCompensated)?;
    let lit = pipeline.constructive(&layer, Construction::Literal)?;
    let ls = fit_least_squares(
        &layer,
        &reference.points,
        &reference.f,
        pipeline.offset(),
        ridge,
        LsDesign::default(),
    )?;
    Ok(CellResult {
        n,
        seed,
        constructive_vs_f: reference.error_vs_f(&comp).as_f64(),
        constructive_vs_h: reference.error_vs_h(&comp).as_f64(),
        literal_vs_f: reference.error_vs_f(&lit).as_f64(),
        ls_vs_f: reference.error_vs_f(&ls).as_f64(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Median of a non-empty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{sample_on, Target};

    #[test]
    fn small_pipeline_runs() {
        let f = sample_on::<f64>(Target::Tent, 1, 21).unwrap();
        let kernel = Arc::new(SmoothingKernel::new(1).unwrap());
        let cfg = PipelineConfig {
            lambda: 5.0,
            volume_samples: 20_000,
            ..Default::default()
        };
        let p = Pipeline::new(f, kernel, cfg).unwrap();
        assert!((p.zeta() - 0.5).abs() < 1e-12);
        assert!((p.support_volume().value - 3.0).abs() < 0.05);
        let r = GridReference::on_samples(&p, 10_000, 1).unwrap();
        let cell = run_cell(&p, &r, 50, 3, 0.0).unwrap();
        assert!(cell.ls_vs_f <= cell.constructive_vs_f);
        assert!(cell.constructive_vs_f.is_finite() && cell.literal_vs_f.is_finite());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
