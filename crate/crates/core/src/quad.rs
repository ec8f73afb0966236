//! Gauss-Legendre rules and composite variants.

use std::collections::HashMap;
use std::sync::OnceLock;

use parking_lot::Mutex;

use crate::scalar::Scalar;

type RuleCache = Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>;

fn cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// ascending nodes.
pub fn gauss_legendre_f64(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    if let Some(rule) = cache().lock().get(&n) {
        return rule.clone();
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let rule = (x, w);
    cache().lock().insert(n, rule.clone());
    rule
}

/// A Gauss-Legendre rule converted to the working scalar.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre_f64(n);
        Self {
            nodes: x.into_iter().map(T::of).collect(),
            weights: w.into_iter().map(T::of).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::of(0.5);
        let mid = (a + b) * T::of(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal sub-intervals of `[a, b]`.
    pub fn composite<F: FnMut(T) -> T>(&self, a: T, b: T, panels: usize, mut f: F) -> T {
        let h = (b - a) / T::of_usize(panels);
        (0..panels)
            .map(|p| {
                let lo = a + h * T::of_usize(p);
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }

    /// Rule on `[a, b]` after the substitution `s = a + (b - a)(1 - cos(pi tau))/2`,
    /// which clusters nodes at both ends and tames algebraic endpoint behaviour.
    pub fn cosine_mapped(&self, a: T, b: T) -> Vec<(T, T)> {
        let pi = T::PI();
        let half = T::of(0.5);
        self.mapped(T::zero(), T::one())
            .map(|(tau, w)| {
                let s = a + (b - a) * (T::one() - (pi * tau).cos()) * half;
                let ds = (b - a) * half * pi * (pi * tau).sin();
                (s, w * ds)
            })
            .collect()
    }
}

/// Composite Gauss-Legendre nodes covering `[a, b]` with panels broken at `breaks`.
pub fn panel_nodes<T: Scalar>(
    rule: &GaussLegendre<T>,
    a: T,
    b: T,
    breaks: &[T],
    per_unit: T,
) -> Vec<(T, T)> {
    let mut cuts = vec![a];
    let mut inner: Vec<T> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.extend(inner);
    cuts.push(b);
    let mut out = Vec::new();
    for win in cuts.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        if hi <= lo {
            continue;
        }
        let panels = ((hi - lo) * per_unit).ceil().to_usize().unwrap_or(1).max(1);
        let h = (hi - lo) / T::of_usize(panels);
        for p in 0..panels {
            let plo = lo + h * T::of_usize(p);
            out.extend(rule.mapped(plo, plo + h));
        }
    }
    out
}
