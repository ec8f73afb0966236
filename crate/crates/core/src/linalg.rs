//! Dense column-major matrices, column-pivoted Householder QR and
//! least-squares solvers (minimum-norm and ridge).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> T>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from column vectors of equal length.
    pub fn from_columns(rows: usize, columns: Vec<Vec<T>>) -> Self {
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "ragged columns");
            data.extend(c);
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![T::zero(); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == T::zero() {
                continue;
            }
            for (yi, &a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    /// `A^T y`.
    pub fn tr_matvec(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols)
            .map(|j| crate::scalar::dot(self.col(j), y))
            .collect()
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let y = self.matvec(other.col(j));
            out.col_mut(j).copy_from_slice(&y);
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.cols);
        Mat::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j)
            } else {
                other.get(i - self.rows, j)
            }
        })
    }
}

/// `A P = Q R` with column pivoting. Householder vectors are kept below the
/// diagonal of `qr` (implicit leading one); `R` occupies the upper triangle.
#[derive(Debug, Clone)]
pub struct PivotedQr<T> {
    qr: Mat<T>,
    tau: Vec<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Scalar> PivotedQr<T> {
    /// Factorizes `a`; rank is the number of diagonal entries of `R` above
    /// `max(rows, cols) * eps * |R_00|`.
    pub fn new(a: Mat<T>) -> Self {
        let tol = T::of_usize(a.rows.max(a.cols)) * T::epsilon();
        Self::with_tolerance(a, tol)
    }

    pub fn with_tolerance(mut a: Mat<T>, rtol: T) -> Self {
        let (m, n) = (a.rows, a.cols);
        let k = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = vec![T::zero(); k];
        let mut norms: Vec<T> = (0..n).map(|j| crate::scalar::norm(a.col(j))).collect();
        let mut norms_ref = norms.clone();

        for step in 0..k {
            // Largest remaining column; ties go to the lowest index.
            let mut best = step;
            for j in step + 1..n {
                if norms[j] > norms[best] {
                    best = j;
                }
            }
            if best != step {
                for i in 0..m {
                    a.data.swap(step * m + i, best * m + i);
                }
                perm.swap(step, best);
                norms.swap(step, best);
                norms_ref.swap(step, best);
            }

            let (beta, t) = householder(&mut a.col_mut(step)[step..]);
            tau[step] = t;
            if t != T::zero() {
                let (head, tail) = a.data.split_at_mut((step + 1) * m);
                let v = &head[step * m + step..step * m + m];
                for j in 0..n - step - 1 {
                    let col = &mut tail[j * m + step..j * m + m];
                    apply_reflector(v, t, col);
                }
            }
            a.data[step * m + step] = beta;

            for j in step + 1..n {
                if norms[j] == T::zero() {
                    continue;
                }
                let r = a.data[j * m + step].abs() / norms[j];
                let shrink = (T::one() - r * r).max(T::zero());
                let ratio = norms[j] / norms_ref[j];
                if shrink * ratio * ratio <= T::of(1e-3).sqrt() * T::epsilon().sqrt() {
                    let fresh = crate::scalar::norm(&a.data[j * m + step + 1..j * m + m]);
                    norms[j] = fresh;
                    norms_ref[j] = fresh;
                } else {
                    norms[j] = norms[j] * shrink.sqrt();
                }
            }
        }

        let r00 = if k > 0 { a.get(0, 0).abs() } else { T::zero() };
        let rank = if r00 == T::zero() {
            0
        } else {
            (0..k)
                .take_while(|&i| a.get(i, i).abs() > rtol * r00)
                .count()
        };
        Self {
            qr: a,
            tau,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Column permutation: column `j` of `A P` is column `perm[j]` of `A`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    #[inline]
    pub fn r(&self, i: usize, j: usize) -> T {
        debug_assert!(i <= j);
        self.qr.get(i, j)
    }

    pub fn rows(&self) -> usize {
        self.qr.rows
    }

    pub fn cols(&self) -> usize {
        self.qr.cols
    }

    /// `y <- Q^T y`.
    pub fn apply_qt(&self, y: &mut [T]) {
        let m = self.qr.rows;
        assert_eq!(y.len(), m);
        for (k, &t) in self.tau.iter().enumerate() {
            if t != T::zero() {
                apply_reflector(&self.qr.col(k)[k..], t, &mut y[k..]);
            }
        }
    }

    /// `y <- Q y`.
    pub fn apply_q(&self, y: &mut [T]) {
        let m = self.qr.rows;
        assert_eq!(y.len(), m);
        for (k, &t) in self.tau.iter().enumerate().rev() {
            if t != T::zero() {
                apply_reflector(&self.qr.col(k)[k..], t, &mut y[k..]);
            }
        }
    }

    /// Solves `R[..r, ..r] z = c[..r]` by back substitution.
    fn back_substitute(&self, c: &[T], r: usize) -> Vec<T> {
        let mut z = c[..r].to_vec();
        for i in (0..r).rev() {
            let mut s = z[i];
            for j in i + 1..r {
                s -= self.r(i, j) * z[j];
            }
            z[i] = s / self.r(i, i);
        }
        z
    }

    /// Solves `R[..r, ..r]^T z = c` by forward substitution.
    fn forward_substitute_rt(&self, c: &[T], r: usize) -> Vec<T> {
        let mut z = c[..r].to_vec();
        for i in 0..r {
            let mut s = z[i];
            for j in 0..i {
                s -= self.r(j, i) * z[j];
            }
            z[i] = s / self.r(i, i);
        }
        z
    }

    /// Basic least-squares solution using the leading `rank` columns.
    fn basic_solution(&self, y: &[T]) -> Vec<T> {
        let mut c = y.to_vec();
        self.apply_qt(&mut c);
        let z = self.back_substitute(&c, self.rank);
        let mut x = vec![T::zero(); self.qr.cols];
        for (k, &zk) in z.iter().enumerate() {
            x[self.perm[k]] = zk;
        }
        x
    }
}

/// Householder vector for `x` in place: returns `(beta, tau)` with
/// `(I - tau v v^T) x = beta e_1` and `v = (1, x[1..])`.
fn householder<T: Scalar>(x: &mut [T]) -> (T, T) {
    let alpha = x[0];
    let tail = crate::scalar::norm(&x[1..]);
    if tail == T::zero() {
        return (alpha, T::zero());
    }
    let nrm = alpha.hypot(tail);
    let beta = if alpha >= T::zero() { -nrm } else { nrm };
    let scale = T::one() / (alpha - beta);
    for v in x[1..].iter_mut() {
        *v *= scale;
    }
    x[0] = T::one();
    ((beta), (beta - alpha) / beta)
}

#[inline]
fn apply_reflector<T: Scalar>(v: &[T], tau: T, y: &mut [T]) {
    // v[0] is implicitly one; the stored entry holds R's diagonal.
    let mut s = y[0];
    for (a, b) in v[1..].iter().zip(&y[1..]) {
        s += *a * *b;
    }
    s *= tau;
    y[0] -= s;
    for (yi, &vi) in y[1..].iter_mut().zip(&v[1..]) {
        *yi -= s * vi;
    }
}

fn check_inputs<T: Scalar>(a: &Mat<T>, y: &[T]) -> Result<()> {
    if y.len() != a.rows {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has {} entries, matrix has {} rows",
            y.len(),
            a.rows
        )));
    }
    if !a.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares system".into()));
    }
    Ok(())
}

/// Minimum-norm least-squares solution of `A x ~ y`.
pub fn lstsq_min_norm<T: Scalar>(a: &Mat<T>, y: &[T]) -> Result<Vec<T>> {
    check_inputs(a, y)?;
    if a.cols == 0 {
        return Ok(Vec::new());
    }
    if a.rows >= a.cols {
        let qr = PivotedQr::new(a.clone());
        if qr.rank == a.cols {
            return Ok(qr.basic_solution(y));
        }
        let r = qr.rank;
        let mut c = y.to_vec();
        qr.apply_qt(&mut c);
        // Minimum-norm solution of the full-row-rank trapezoid [R11 R12] z = c1.
        let trap = Mat::from_fn(
            r,
            a.cols,
            |i, j| if i <= j { qr.r(i, j) } else { T::zero() },
        );
        let z = min_norm_wide(&trap, &c[..r]);
        let mut x = vec![T::zero(); a.cols];
        for (k, &zk) in z.iter().enumerate() {
            x[qr.perm[k]] = zk;
        }
        Ok(x)
    } else {
        Ok(min_norm_wide(a, y))
    }
}

/// Minimum-norm least squares for `rows < cols` through a pivoted QR of `A^T`.
fn min_norm_wide<T: Scalar>(a: &Mat<T>, y: &[T]) -> Vec<T> {
    let p = a.rows;
    let qr = PivotedQr::new(a.transpose());
    let r = qr.rank;
    let mut x = vec![T::zero(); a.cols];
    if r == 0 {
        return x;
    }
    // P^T A = R^T Q^T, so solve R[..r, :]^T u = P^T y in the least-squares sense.
    let yp: Vec<T> = qr.perm.iter().map(|&i| y[i]).collect();
    let u = if r == p {
        qr.forward_substitute_rt(&yp, r)
    } else {
        let lt = Mat::from_fn(p, r, |i, j| if j <= i { qr.r(j, i) } else { T::zero() });
        PivotedQr::new(lt).basic_solution(&yp)
    };
    x[..r].copy_from_slice(&u);
    qr.apply_q(&mut x);
    x
}

/// Ridge solution `argmin |A x - y|^2 + ridge |x|^2`; `ridge = 0` falls back
/// to the minimum-norm solution.
pub fn lstsq_ridge<T: Scalar>(a: &Mat<T>, y: &[T], ridge: T) -> Result<Vec<T>> {
    check_inputs(a, y)?;
    if !(ridge >= T::zero()) || !ridge.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ridge must be >= 0, got {ridge}"
        )));
    }
    if ridge == T::zero() {
        return lstsq_min_norm(a, y);
    }
    let s = ridge.sqrt();
    if a.rows >= a.cols {
        let aug = a.vstack(&Mat::from_fn(a.cols, a.cols, |i, j| {
            if i == j {
                s
            } else {
                T::zero()
            }
        }));
        let mut rhs = y.to_vec();
        rhs.resize(a.rows + a.cols, T::zero());
        Ok(PivotedQr::new(aug).basic_solution(&rhs))
    } else {
        // Dual form x = A^T (A A^T + ridge I)^{-1} y with A A^T + ridge I = M^T M.
        let p = a.rows;
        let m = a.transpose().vstack(&Mat::from_fn(
            p,
            p,
            |i, j| if i == j { s } else { T::zero() },
        ));
        let qr = PivotedQr::with_tolerance(m, T::zero());
        let yp: Vec<T> = qr.perm.iter().map(|&i| y[i]).collect();
        let z = qr.forward_substitute_rt(&yp, p);
        let w = qr.back_substitute(&z, p);
        let mut alpha = vec![T::zero(); p];
        for (k, &wk) in w.iter().enumerate() {
            alpha[qr.perm[k]] = wk;
        }
        Ok(a.matvec_t_into(&alpha))
    }
}

impl<T: Scalar> Mat<T> {
    /// `A^T`-free product `sum_i alpha_i * row_i(A)`.
    fn matvec_t_into(&self, alpha: &[T]) -> Vec<T> {
        self.tr_matvec(alpha)
    }
}

/// Solves a small square system by Gaussian elimination with partial pivoting.
pub fn solve_small<T: Scalar>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::InvalidArgument("square system expected".into()));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if m.get(i, k).abs() > m.get(piv, k).abs() {
                piv = i;
            }
        }
        if m.get(piv, k).abs() <= scale * T::epsilon() * T::of_usize(n) {
            return Err(Error::Degenerate("singular system".into()));
        }
        if piv != k {
            for j in 0..n {
                let t = m.get(k, j);
                m.set(k, j, m.get(piv, j));
                m.set(piv, j, t);
            }
            x.swap(k, piv);
        }
        for i in k + 1..n {
            let f = m.get(i, k) / m.get(k, k);
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let v = m.get(i, j) - f * m.get(k, j);
                m.set(i, j, v);
            }
            x[i] = x[i] - f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= m.get(i, j) * x[j];
        }
        x[i] = s / m.get(i, i);
    }
    Ok(x)
}
