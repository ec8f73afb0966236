//! Sampled Lipschitz targets, recentering and the compactly supported
//! Lipschitz extension.

use crate::error::{invalid, Error, Result};
use crate::geometry::Compactum;
use crate::rng::substream;
use crate::scalar::{dist, relu, sign, Scalar};

/// Relative slack used when checking sample Lipschitz consistency.
const LIP_SLACK: f64 = 1e-9;

/// Values of a Lipschitz target on a point cloud.
#[derive(Debug, Clone)]
pub struct SampledFunction<T> {
    domain: Compactum<T>,
    values: Vec<T>,
    ell: T,
    half_range: T,
    zeta: T,
    offset: Vec<T>,
    recentered: bool,
}

impl<T: Scalar> SampledFunction<T> {
    /// Builds the sample; `ell = None` uses [`estimate_lipschitz`].
    pub fn new(domain: Compactum<T>, values: Vec<T>, ell: Option<T>) -> Result<Self> {
        if values.len() != domain.len() {
            return invalid(format!(
                "{} values for {} points",
                values.len(),
                domain.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("function values".into()));
        }
        let estimated = estimate_lipschitz(domain.points(), &values)?;
        let ell = match ell {
            Some(l) if !(l >= T::zero()) || !l.is_finite() => {
                return invalid(format!("Lipschitz constant must be >= 0, got {l}"))
            }
            Some(l) => {
                if estimated > l * T::of(1.0 + LIP_SLACK) + T::of(1e-12) {
                    return Err(Error::Inconsistent(format!(
                        "samples need Lipschitz constant {estimated}, supplied {l}"
                    )));
                }
                l
            }
            None => estimated,
        };
        let (lo, hi) = min_max(&values);
        let half_range = (hi - lo) * T::of(0.5);
        let bound = ell * domain.radius();
        if half_range > bound * T::of(1.0 + LIP_SLACK) + T::of(1e-12) {
            return Err(Error::Inconsistent(format!(
                "half-range {half_range} exceeds ell * R = {bound}"
            )));
        }
        let m = domain.dim();
        Ok(Self {
            domain,
            values,
            ell,
            half_range,
            zeta: half_range + lo,
            offset: vec![T::zero(); m],
            recentered: false,
        })
    }

    pub fn domain(&self) -> &Compactum<T> {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn ell(&self) -> T {
        self.ell
    }

    /// Half-range `M = (max f - min f) / 2`.
    pub fn half_range(&self) -> T {
        self.half_range
    }

    /// Output shift `zeta = M + min f` (of the original values).
    pub fn zeta(&self) -> T {
        self.zeta
    }

    /// Circumcenter removed by [`recenter`]; zero before recentering.
    pub fn offset(&self) -> &[T] {
        &self.offset
    }

    pub fn is_recentered(&self) -> bool {
        self.recentered
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Maps original coordinates into the recentered frame.
    pub fn to_local(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.offset).map(|(&a, &p)| a - p).collect()
    }

    /// Replaces the Lipschitz constant (must still dominate the samples).
    pub fn with_ell(mut self, ell: T) -> Result<Self> {
        let est = estimate_lipschitz(self.domain.points(), &self.values)?;
        if !(ell >= T::zero()) || est > ell * T::of(1.0 + LIP_SLACK) + T::of(1e-12) {
            return Err(Error::Inconsistent(format!(
                "samples need Lipschitz constant {est}, supplied {ell}"
            )));
        }
        self.ell = ell;
        Ok(self)
    }
}

fn min_max<T: Scalar>(v: &[T]) -> (T, T) {
    v.iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Smallest `ell` consistent with the samples: max of `|df| / |dx|` over pairs.
pub fn estimate_lipschitz<T: Scalar>(points: &[Vec<T>], values: &[T]) -> Result<T> {
    if points.len() != values.len() {
        return invalid("points and values differ in length");
    }
    if points.len() < 2 {
        return Err(Error::Degenerate("need at least two points".into()));
    }
    let mut best = T::zero();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dx = dist(&points[i], &points[j]);
            let df = (values[i] - values[j]).abs();
            if dx == T::zero() {
                if df != T::zero() {
                    return Err(Error::Inconsistent(format!(
                        "points {i} and {j} coincide but carry different values"
                    )));
                }
                continue;
            }
            best = best.max(df / dx);
        }
    }
    Ok(best)
}

/// Translates the domain by `-p` (circumcenter) and the values by `-zeta`, so
/// the recentered values span exactly `[-M, M]`.
pub fn recenter<T: Scalar>(f: &SampledFunction<T>) -> SampledFunction<T> {
    if f.recentered {
        return f.clone();
    }
    let p: Vec<T> = f.domain.center().to_vec();
    let neg: Vec<T> = p.iter().map(|&v| -v).collect();
    let domain = f.domain.translated(&neg);
    let values: Vec<T> = f.values.iter().map(|&v| v - f.zeta).collect();
    SampledFunction {
        domain,
        values,
        ell: f.ell,
        half_range: f.half_range,
        zeta: f.zeta,
        offset: p,
        recentered: true,
    }
}

/// The extension `x -> rho(|f(a)| - ell |x - a|) sg f(a)` with `a` maximizing
/// `|f(u)| - ell |x - u|` over the samples (lowest index on ties).
#[derive(Debug, Clone)]
pub struct ExtendedFunction<T> {
    base: SampledFunction<T>,
    lo: Vec<T>,
    hi: Vec<T>,
}

/// Extends a recentered sample.
pub fn extend<T: Scalar>(recentered: &SampledFunction<T>) -> Result<ExtendedFunction<T>> {
    if !recentered.recentered {
        return invalid("extension expects a recentered sample");
    }
    if !(recentered.ell > T::zero()) {
        return invalid("extension needs ell > 0");
    }
    let reach = recentered.half_range / recentered.ell;
    let (mut lo, mut hi) = recentered.domain.bounding_box();
    for k in 0..lo.len() {
        lo[k] -= reach;
        hi[k] += reach;
    }
    Ok(ExtendedFunction {
        base: recentered.clone(),
        lo,
        hi,
    })
}

impl<T: Scalar> ExtendedFunction<T> {
    pub fn base(&self) -> &SampledFunction<T> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn ell(&self) -> T {
        self.base.ell
    }

    /// `M`, also the sup of `|f~|`.
    pub fn half_range(&self) -> T {
        self.base.half_range
    }

    /// Circumradius of the (recentered) domain.
    pub fn radius(&self) -> T {
        self.base.domain.radius()
    }

    /// Bounding box of `K + (M / ell) B`.
    pub fn support_box(&self) -> (&[T], &[T]) {
        (&self.lo, &self.hi)
    }

    /// Reach `M / ell` of the support beyond `K`.
    pub fn reach(&self) -> T {
        self.base.half_range / self.base.ell
    }

    pub fn is_zero(&self) -> bool {
        self.base.half_range == T::zero()
    }

    pub fn eval(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.lo.len());
        for k in 0..x.len() {
            if x[k] < self.lo[k] || x[k] > self.hi[k] {
                return T::zero();
            }
        }
        let ell = self.base.ell;
        let mut best = T::neg_infinity();
        let mut arg = 0;
        for (i, (u, &fu)) in self
            .base
            .domain
            .points()
            .iter()
            .zip(&self.base.values)
            .enumerate()
        {
            let s = fu.abs() - ell * dist(x, u);
            if s > best {
                best = s;
                arg = i;
            }
        }
        relu(best) * sign(self.base.values[arg])
    }

    /// Midpoint-rule approximation of the L1 norm over the support box with
    /// `cells` cells per axis.
    pub fn l1_norm_grid(&self, cells: usize) -> T {
        let m = self.dim();
        let h: Vec<T> = (0..m)
            .map(|k| (self.hi[k] - self.lo[k]) / T::of_usize(cells))
            .collect();
        let cell_vol = h.iter().fold(T::one(), |a, &b| a * b);
        let mut idx = vec![0usize; m];
        let mut x = vec![T::zero(); m];
        let mut total = T::zero();
        loop {
            for k in 0..m {
                x[k] = self.lo[k] + h[k] * (T::of_usize(idx[k]) + T::of(0.5));
            }
            total += self.eval(&x).abs();
            let mut k = 0;
            loop {
                if k == m {
                    return total * cell_vol;
                }
                idx[k] += 1;
                if idx[k] < cells {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Step used by [`gradient_sup_check`].
pub const GRADIENT_STEP: f64 = 1e-5;

/// Largest difference quotient `|f~(x + du) - f~(x)| / d` over random points in
/// the support box and random unit directions.
pub fn gradient_sup_check<T: Scalar>(
    ext: &ExtendedFunction<T>,
    trials: usize,
    seed: u64,
) -> Result<T> {
    if trials < 1000 {
        return invalid(format!("need at least 1000 trials, got {trials}"));
    }
    let m = ext.dim();
    let delta = T::of(GRADIENT_STEP);
    let mut rng = substream(seed, 0);
    let mut worst = T::zero();
    let mut x = vec![T::zero(); m];
    let mut u = vec![T::zero(); m];
    for _ in 0..trials {
        for k in 0..m {
            x[k] = ext.lo[k] + (ext.hi[k] - ext.lo[k]) * T::unit_uniform(&mut rng);
        }
        loop {
            for uk in u.iter_mut() {
                *uk = T::standard_normal(&mut rng);
            }
            let n = crate::scalar::norm(&u);
            if n > T::of(1e-12) {
                u.iter_mut().for_each(|v| *v /= n);
                break;
            }
        }
        let y: Vec<T> = x.iter().zip(&u).map(|(&a, &b)| a + delta * b).collect();
        let q = (ext.eval(&y) - ext.eval(&x)).abs() / delta;
        worst = worst.max(q);
    }
    Ok(worst)
}
