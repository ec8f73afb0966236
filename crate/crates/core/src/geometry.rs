//! Point-cloud geometry: minimum enclosing ball, diameter, volume of the
//! inflation `K + rB` and the effective dimension built from it.

use std::collections::HashMap;

use log::warn;

use crate::error::{invalid, Error, Result};
use crate::linalg::{solve_small, Mat};
use crate::rng::{chunked, merge_all, Estimate, MeanVar};
use crate::scalar::{dist, dist_sq, Scalar};
use crate::specfun::unit_ball_volume;

/// Largest dimension accepted by [`min_enclosing_ball`].
pub const MAX_BALL_DIM: usize = 16;
/// Relative radius accuracy certified by the iterative ball solver.
pub const BALL_RTOL: f64 = 1e-7;
/// Minimum Monte Carlo sample count for volume estimates.
pub const MIN_VOLUME_SAMPLES: usize = 10_000;

/// Finite point cloud standing in for a compact set.
#[derive(Debug, Clone)]
pub struct Compactum<T> {
    points: Vec<Vec<T>>,
    m: usize,
    center: Vec<T>,
    radius: T,
    diameter: T,
    d_estimate: Option<EffectiveDimension<T>>,
}

/// Effective dimension estimate with its Monte Carlo error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveDimension<T> {
    /// Clamped to `[1, m]`.
    pub value: T,
    /// Before clamping.
    pub raw: T,
    pub stderr: T,
    pub volume: Estimate<T>,
}

impl<T: Scalar> Compactum<T> {
    pub fn new(points: Vec<Vec<T>>) -> Result<Self> {
        let m = check_cloud(&points)?;
        let (center, radius) = min_enclosing_ball(&points)?;
        let diameter = diameter(&points)?;
        Ok(Self {
            points,
            m,
            center,
            radius,
            diameter,
            d_estimate: None,
        })
    }

    /// Attaches an effective-dimension estimate computed with `samples` draws.
    pub fn with_dimension_estimate(mut self, samples: usize, seed: u64) -> Result<Self> {
        self.d_estimate = Some(effective_dimension(&self, samples, seed)?);
        Ok(self)
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Circumcenter `p`.
    pub fn center(&self) -> &[T] {
        &self.center
    }

    /// Circumradius `R`.
    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn diameter(&self) -> T {
        self.diameter
    }

    pub fn dimension_estimate(&self) -> Option<&EffectiveDimension<T>> {
        self.d_estimate.as_ref()
    }

    /// Copy shifted by `shift`; the ball and diameter are moved, not recomputed.
    pub fn translated(&self, shift: &[T]) -> Self {
        assert_eq!(shift.len(), self.m);
        let mv = |p: &[T]| {
            p.iter()
                .zip(shift)
                .map(|(&a, &b)| a + b)
                .collect::<Vec<T>>()
        };
        Self {
            points: self.points.iter().map(|p| mv(p)).collect(),
            m: self.m,
            center: mv(&self.center),
            radius: self.radius,
            diameter: self.diameter,
            d_estimate: self.d_estimate,
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        bounding_box(&self.points)
    }

    /// Distance from `x` to the nearest sample point.
    pub fn distance_to(&self, x: &[T]) -> T {
        self.points
            .iter()
            .map(|p| dist_sq(p, x))
            .fold(T::infinity(), T::min)
            .sqrt()
    }
}

fn check_cloud<T: Scalar>(points: &[Vec<T>]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::Degenerate("empty point cloud".into()))?;
    let m = first.len();
    if m == 0 {
        return Err(Error::Dimension {
            m,
            reason: "points need at least one coordinate".into(),
        });
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != m {
            return Err(Error::Dimension {
                m,
                reason: format!("point {i} has {} coordinates", p.len()),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("point {i}")));
        }
    }
    if !points.iter().any(|p| p != first) {
        return Err(Error::Degenerate(
            "need at least two distinct points".into(),
        ));
    }
    Ok(m)
}

fn bounding_box<T: Scalar>(points: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
    let m = points[0].len();
    let mut lo = vec![T::infinity(); m];
    let mut hi = vec![T::neg_infinity(); m];
    for p in points {
        for k in 0..m {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Maximum pairwise distance.
pub fn diameter<T: Scalar>(points: &[Vec<T>]) -> Result<T> {
    check_cloud(points)?;
    let mut best = T::zero();
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max(dist_sq(p, q));
        }
    }
    Ok(best.sqrt())
}

/// Minimum enclosing ball `(p, R)`: exact move-to-front Welzl for `m <= 3`,
/// away-step Frank-Wolfe with a certified duality gap above.
pub fn min_enclosing_ball<T: Scalar>(points: &[Vec<T>]) -> Result<(Vec<T>, T)> {
    let m = check_cloud(points)?;
    if m > MAX_BALL_DIM {
        return Err(Error::Dimension {
            m,
            reason: format!("enclosing ball supports m <= {MAX_BALL_DIM}"),
        });
    }
    if m <= 3 {
        Ok(welzl(points))
    } else {
        Ok(frank_wolfe_ball(points))
    }
}

#[derive(Clone)]
struct Ball<T> {
    c: Vec<T>,
    r2: T,
}

impl<T: Scalar> Ball<T> {
    fn contains(&self, p: &[T]) -> bool {
        let slack = T::of(1e-12);
        dist_sq(&self.c, p) <= self.r2 * (T::one() + slack) + T::of(1e-24)
    }
}

fn welzl<T: Scalar>(points: &[Vec<T>]) -> (Vec<T>, T) {
    let m = points[0].len();
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut boundary = Vec::with_capacity(m + 1);
    let ball = mtf(points, &mut order, points.len(), &mut boundary, m);
    (ball.c, ball.r2.sqrt())
}

fn mtf<T: Scalar>(
    points: &[Vec<T>],
    order: &mut Vec<usize>,
    end: usize,
    boundary: &mut Vec<usize>,
    m: usize,
) -> Ball<T> {
    let mut ball = ball_on(points, boundary);
    if boundary.len() == m + 1 {
        return ball;
    }
    for i in 0..end {
        let idx = order[i];
        if !ball.contains(&points[idx]) {
            boundary.push(idx);
            ball = mtf(points, order, i, boundary, m);
            boundary.pop();
            order[..=i].rotate_right(1);
        }
    }
    ball
}

/// Smallest ball with every listed point on its boundary (circumsphere in the
/// affine hull); degenerate sets fall back to the best enclosing pair ball.
fn ball_on<T: Scalar>(points: &[Vec<T>], boundary: &[usize]) -> Ball<T> {
    match boundary.len() {
        0 => Ball {
            c: vec![T::zero(); points[0].len()],
            r2: T::neg_infinity(),
        },
        1 => Ball {
            c: points[boundary[0]].clone(),
            r2: T::zero(),
        },
        2 => pair_ball(&points[boundary[0]], &points[boundary[1]]),
        k => {
            let p0 = &points[boundary[0]];
            let vs: Vec<Vec<T>> = boundary[1..]
                .iter()
                .map(|&j| points[j].iter().zip(p0).map(|(&a, &b)| a - b).collect())
                .collect();
            let gram = Mat::from_fn(k - 1, k - 1, |i, j| {
                T::of(2.0) * crate::scalar::dot(&vs[i], &vs[j])
            });
            let rhs: Vec<T> = vs.iter().map(|v| crate::scalar::dot(v, v)).collect();
            match solve_small(&gram, &rhs) {
                Ok(lam) => {
                    let mut c = p0.clone();
                    for (l, v) in lam.iter().zip(&vs) {
                        for (ci, &vi) in c.iter_mut().zip(v) {
                            *ci += *l * vi;
                        }
                    }
                    let r2 = dist_sq(&c, p0);
                    Ball { c, r2 }
                }
                Err(_) => degenerate_ball(points, boundary),
            }
        }
    }
}

fn pair_ball<T: Scalar>(a: &[T], b: &[T]) -> Ball<T> {
    let half = T::of(0.5);
    let c: Vec<T> = a.iter().zip(b).map(|(&x, &y)| (x + y) * half).collect();
    let r2 = dist_sq(&c, a);
    Ball { c, r2 }
}

fn degenerate_ball<T: Scalar>(points: &[Vec<T>], boundary: &[usize]) -> Ball<T> {
    let mut best: Option<Ball<T>> = None;
    for (i, &a) in boundary.iter().enumerate() {
        for &b in &boundary[i + 1..] {
            let ball = pair_ball(&points[a], &points[b]);
            if boundary.iter().all(|&j| ball.contains(&points[j]))
                && best.as_ref().is_none_or(|bb| ball.r2 < bb.r2)
            {
                best = Some(ball);
            }
        }
    }
    best.unwrap_or_else(|| {
        let (lo, hi) = bounding_box(
            &boundary
                .iter()
                .map(|&j| points[j].clone())
                .collect::<Vec<_>>(),
        );
        let c: Vec<T> = lo
            .iter()
            .zip(&hi)
            .map(|(&a, &b)| (a + b) * T::of(0.5))
            .collect();
        let r2 = boundary
            .iter()
            .map(|&j| dist_sq(&c, &points[j]))
            .fold(T::zero(), T::max);
        Ball { c, r2 }
    })
}

/// Yildirim's away-step Frank-Wolfe on the dual of the ball problem.
fn frank_wolfe_ball<T: Scalar>(points: &[Vec<T>]) -> (Vec<T>, T) {
    let n = points.len();
    let m = points[0].len();
    let target = (1.0 + BALL_RTOL).powi(2);
    // Work relative to the centroid for conditioning.
    let mut shift = vec![0.0f64; m];
    for p in points {
        for k in 0..m {
            shift[k] += p[k].as_f64() / n as f64;
        }
    }
    let pts: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            p.iter()
                .zip(&shift)
                .map(|(&a, &s)| a.as_f64() - s)
                .collect()
        })
        .collect();
    let sq: Vec<f64> = pts.iter().map(|p| crate::scalar::dot(p, p)).collect();

    let far = |from: &[f64]| {
        let mut best = 0;
        let mut bd = -1.0;
        for (i, p) in pts.iter().enumerate() {
            let d = dist_sq(p, from);
            if d > bd {
                bd = d;
                best = i;
            }
        }
        best
    };
    let a = far(&pts[0]);
    let b = far(&pts[a]);
    let mut u = vec![0.0f64; n];
    u[a] = 0.5;
    u[b] += 0.5;

    let mut c = vec![0.0f64; m];
    let recompute = |u: &[f64], c: &mut Vec<f64>| {
        c.iter_mut().for_each(|v| *v = 0.0);
        for (i, &ui) in u.iter().enumerate() {
            if ui != 0.0 {
                for k in 0..m {
                    c[k] += ui * pts[i][k];
                }
            }
        }
    };
    recompute(&u, &mut c);
    for it in 0..1_000_000usize {
        let phi = u.iter().zip(&sq).map(|(a, b)| a * b).sum::<f64>() - crate::scalar::dot(&c, &c);
        let d2: Vec<f64> = pts.iter().map(|p| dist_sq(p, &c)).collect();
        let (j, dmax) = d2.iter().enumerate().fold(
            (0, -1.0),
            |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
        );
        if phi > 0.0 && dmax <= target * phi {
            break;
        }
        let (kmin, dmin) = d2.iter().enumerate().filter(|(i, _)| u[*i] > 0.0).fold(
            (0, f64::INFINITY),
            |acc, (i, &d)| if d < acc.1 { (i, d) } else { acc },
        );
        let delta_plus = dmax / phi - 1.0;
        let delta_minus = 1.0 - dmin / phi;
        if delta_plus >= delta_minus {
            let lam = delta_plus / (2.0 * (1.0 + delta_plus));
            u.iter_mut().for_each(|v| *v *= 1.0 - lam);
            u[j] += lam;
        } else {
            let uk = u[kmin];
            let lam = (delta_minus / (2.0 * (1.0 - delta_minus))).min(uk / (1.0 - uk));
            u.iter_mut().for_each(|v| *v *= 1.0 + lam);
            u[kmin] -= lam;
            if u[kmin] < 1e-300 {
                u[kmin] = 0.0;
            }
        }
        if it % 64 == 63 {
            let s: f64 = u.iter().sum();
            u.iter_mut().for_each(|v| *v /= s);
        }
        recompute(&u, &mut c);
    }
    let r = pts
        .iter()
        .map(|p| dist_sq(p, &c))
        .fold(0.0, f64::max)
        .sqrt();
    let center = c
        .iter()
        .zip(&shift)
        .map(|(&a, &s)| T::of(a + s))
        .collect::<Vec<T>>();
    // Report the radius against the original coordinates.
    let r_orig = points
        .iter()
        .map(|p| dist(p, &center))
        .fold(T::zero(), T::max);
    (center, r_orig.max(T::of(r)))
}

/// Uniform spatial hash over the sample points with cell width `r`.
struct CellIndex<'a, T> {
    points: &'a [Vec<T>],
    cells: HashMap<Vec<i64>, Vec<usize>>,
    inv: T,
}

impl<'a, T: Scalar> CellIndex<'a, T> {
    fn new(points: &'a [Vec<T>], r: T) -> Self {
        let inv = T::one() / r;
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, inv)).or_default().push(i);
        }
        Self { points, cells, inv }
    }

    fn key(p: &[T], inv: T) -> Vec<i64> {
        p.iter()
            .map(|&v| (v * inv).floor().to_i64().unwrap_or(i64::MAX))
            .collect()
    }

    fn within(&self, x: &[T], r2: T) -> bool {
        let base = Self::key(x, self.inv);
        let m = base.len();
        let mut offset = vec![-1i64; m];
        loop {
            let key: Vec<i64> = base.iter().zip(&offset).map(|(a, b)| a + b).collect();
            if let Some(list) = self.cells.get(&key) {
                if list.iter().any(|&i| dist_sq(&self.points[i], x) <= r2) {
                    return true;
                }
            }
            let mut k = 0;
            loop {
                if k == m {
                    return false;
                }
                offset[k] += 1;
                if offset[k] <= 1 {
                    break;
                }
                offset[k] = -1;
                k += 1;
            }
        }
    }
}

/// Monte Carlo estimate of `|K + rB|` by uniform sampling over the bounding
/// box of `K` inflated by `r`.
pub fn minkowski_ball_volume<T: Scalar>(
    points: &[Vec<T>],
    r: T,
    samples: usize,
    seed: u64,
) -> Result<Estimate<T>> {
    let m = check_cloud(points)?;
    if !(r > T::zero()) || !r.is_finite() {
        return invalid(format!("inflation radius must be positive, got {r}"));
    }
    if samples < MIN_VOLUME_SAMPLES {
        return invalid(format!(
            "need at least {MIN_VOLUME_SAMPLES} samples, got {samples}"
        ));
    }
    let (mut lo, mut hi) = bounding_box(points);
    for k in 0..m {
        lo[k] -= r;
        hi[k] += r;
    }
    let widths: Vec<T> = lo.iter().zip(&hi).map(|(&a, &b)| b - a).collect();
    let box_volume = widths.iter().fold(T::one(), |acc, &w| acc * w);
    if !(box_volume > T::zero()) || !box_volume.is_finite() {
        return Err(Error::Degenerate(
            "inflated bounding box has no volume".into(),
        ));
    }
    let r2 = r * r;
    let index = (m <= 6).then(|| CellIndex::new(points, r));
    let parts = chunked(seed, samples, |rng, _, len| {
        let mut acc = MeanVar::new();
        let mut x = vec![T::zero(); m];
        for _ in 0..len {
            for k in 0..m {
                x[k] = lo[k] + widths[k] * T::unit_uniform(rng);
            }
            let hit = match &index {
                Some(idx) => idx.within(&x, r2),
                None => points.iter().any(|p| dist_sq(p, &x) <= r2),
            };
            acc.push(if hit { 1.0 } else { 0.0 });
        }
        acc
    });
    let frac = merge_all(&parts);
    let p = frac.mean;
    let bv = box_volume.as_f64();
    Ok(Estimate {
        value: T::of(bv * p),
        stderr: T::of(bv * (p * (1.0 - p) / samples as f64).sqrt()),
    })
}

/// `lg(|K + RB| / (V_m R^m))` with `R` the circumradius, clamped to `[1, m]`.
pub fn effective_dimension<T: Scalar>(
    compactum: &Compactum<T>,
    samples: usize,
    seed: u64,
) -> Result<EffectiveDimension<T>> {
    let m = compactum.dim();
    let r = compactum.radius();
    let volume = minkowski_ball_volume(compactum.points(), r, samples, seed)?;
    let ball = unit_ball_volume::<f64>(m)? * r.as_f64().powi(m as i32);
    let v = volume.value.as_f64();
    let raw = (v / ball).log2();
    let stderr = volume.stderr.as_f64() / (v * std::f64::consts::LN_2);
    let value = raw.clamp(1.0, m as f64);
    if (value - raw).abs() > 3.0 * stderr + 1e-9 {
        warn!("effective dimension {raw:.4} outside [1, {m}], clamped to {value}");
    }
    Ok(EffectiveDimension {
        value: T::of(value),
        raw: T::of(raw),
        stderr: T::of(stderr),
        volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_on_line() {
        let pts = vec![vec![0.0f64], vec![2.0]];
        let (p, r) = min_enclosing_ball(&pts).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
        assert_eq!(diameter(&pts).unwrap(), 2.0);
    }

    #[test]
    fn unit_square() {
        let pts = vec![
            vec![0.0f64, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        let (p, r) = min_enclosing_ball(&pts).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-14 && (p[1] - 0.5).abs() < 1e-14);
        assert!((r - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((diameter(&pts).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_clouds() {
        assert!(min_enclosing_ball::<f64>(&[vec![1.0], vec![1.0]]).is_err());
        assert!(Compactum::<f64>::new(vec![]).is_err());
        assert!(Compactum::new(vec![vec![0.0, 1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn iterative_solver_matches_welzl_on_embedded_cloud() {
        // A 3D cloud embedded in R^5 has the same ball.
        let mut s = 17u64;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let pts3: Vec<Vec<f64>> = (0..60).map(|_| vec![next(), next(), next()]).collect();
        let pts5: Vec<Vec<f64>> = pts3
            .iter()
            .map(|p| vec![p[0], p[1], p[2], 0.0, 0.0])
            .collect();
        let (_, r3) = min_enclosing_ball(&pts3).unwrap();
        let (_, r5) = min_enclosing_ball(&pts5).unwrap();
        assert!((r5 - r3).abs() <= 2e-7 * r3, "{r3} {r5}");
    }

    #[test]
    fn interval_volumes() {
        let pts = vec![vec![0.0f64], vec![1.0]];
        let big = minkowski_ball_volume(&pts, 2.0, 20_000, 1).unwrap();
        assert!((big.value - 5.0).abs() < 1e-12);
        let small = minkowski_ball_volume(&pts, 0.25, 40_000, 2).unwrap();
        assert!((small.value - 1.0).abs() < 4.0 * small.stderr);
        assert!(minkowski_ball_volume(&pts, 0.25, 100, 2).is_err());
    }

    #[test]
    fn dimension_of_two_points() {
        let k = Compactum::new(vec![vec![-1.5f64], vec![1.5]]).unwrap();
        let d = effective_dimension(&k, 20_000, 3).unwrap();
        assert!((d.raw - 1.0).abs() < 1e-12);
    }
}
