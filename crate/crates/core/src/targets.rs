//! Built-in Lipschitz targets sampled on cube grids.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::geometry::Compactum;
use crate::lipschitz::SampledFunction;
use crate::scalar::{norm, relu, Scalar};

/// Largest grid produced by [`cube_grid`].
pub const MAX_GRID_POINTS: usize = 1_000_000;

/// Named analytic targets on `[-1, 1]^m`.
///
/// * `tent`: `1 - |x|`, `ell = 1`
/// * `sin3`: `sin(3 <x, 1> / sqrt(m))`, `ell = 3`
/// * `radial-bump`: `max(1 - |x|^2, 0)`, `ell = 2`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Tent,
    Sin3,
    RadialBump,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Tent, Target::Sin3, Target::RadialBump];

    pub fn name(self) -> &'static str {
        match self {
            Target::Tent => "tent",
            Target::Sin3 => "sin3",
            Target::RadialBump => "radial-bump",
        }
    }

    /// Lipschitz constant on `[-1, 1]^m`.
    pub fn ell<T: Scalar>(self) -> T {
        match self {
            Target::Tent => T::one(),
            Target::Sin3 => T::of(3.0),
            Target::RadialBump => T::of(2.0),
        }
    }

    pub fn eval<T: Scalar>(self, x: &[T]) -> T {
        match self {
            Target::Tent => T::one() - norm(x),
            Target::Sin3 => {
                let s: T = x.iter().copied().sum();
                (T::of(3.0) * s / T::of_usize(x.len()).sqrt()).sin()
            }
            Target::RadialBump => relu(T::one() - x.iter().map(|&v| v * v).sum::<T>()),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tent" => Ok(Target::Tent),
            "sin3" => Ok(Target::Sin3),
            "radial-bump" | "bump" => Ok(Target::RadialBump),
            other => invalid(format!(
                "unknown target '{other}' (expected tent, sin3 or radial-bump)"
            )),
        }
    }
}

/// Default points per axis: 201, 41, 15 for m = 1, 2, 3, then 7 and 5.
pub fn default_points_per_axis(m: usize) -> usize {
    match m {
        1 => 201,
        2 => 41,
        3 => 15,
        4 => 7,
        _ => 5,
    }
}

/// Tensor grid on `[-half, half]^m`, last coordinate varying fastest.
pub fn cube_grid<T: Scalar>(m: usize, per_axis: usize, half: T) -> Result<Vec<Vec<T>>> {
    if m == 0 || per_axis < 2 {
        return invalid("cube grid needs m >= 1 and at least 2 points per axis");
    }
    let total = (per_axis as f64).powi(m as i32);
    if total > MAX_GRID_POINTS as f64 {
        return invalid(format!("grid with {total} points is too large"));
    }
    let axis: Vec<T> = (0..per_axis)
        .map(|i| -half + T::of(2.0) * half * T::of_usize(i) / T::of_usize(per_axis - 1))
        .collect();
    let mut out = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; m];
    loop {
        out.push(idx.iter().map(|&i| axis[i]).collect());
        let mut k = m;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Samples `target` on the default `[-1, 1]^m` grid with its nominal `ell`.
pub fn sample<T: Scalar>(target: Target, m: usize) -> Result<SampledFunction<T>> {
    sample_on(target, m, default_points_per_axis(m))
}

pub fn sample_on<T: Scalar>(
    target: Target,
    m: usize,
    per_axis: usize,
) -> Result<SampledFunction<T>> {
    let points = cube_grid(m, per_axis, T::one())?;
    let values = points.iter().map(|x| target.eval(x)).collect();
    SampledFunction::new(Compactum::new(points)?, values, Some(target.ell()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for t in Target::ALL {
            assert_eq!(t.name().parse::<Target>().unwrap(), t);
        }
        assert!("nope".parse::<Target>().is_err());
    }

    #[test]
    fn grid_shape() {
        let g = cube_grid::<f64>(2, 3, 1.0).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![-1.0, -1.0]);
        assert_eq!(g[1], vec![-1.0, 0.0]);
        assert_eq!(g[8], vec![1.0, 1.0]);
    }

    #[test]
    fn targets_respect_their_constants() {
        for t in Target::ALL {
            for m in 1..=3 {
                let f = sample::<f64>(t, m).unwrap();
                assert_eq!(f.ell(), t.ell::<f64>());
            }
        }
    }
}
