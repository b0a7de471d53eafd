use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative size below which a diagonal entry of `R` counts as numerically zero.
pub const NEAR_SINGULAR: f64 = 1e-14;

#[derive(Clone, Debug)]
enum Op {
    /// `x[rows] -= tau * v * (v . x[rows])`
    Reflect { rows: Vec<usize>, v: Vec<f64>, tau: f64 },
    Negate(usize),
}

impl Op {
    fn apply(&self, x: &mut [f64]) {
        match self {
            Op::Reflect { rows, v, tau } => {
                let dot: f64 = rows.iter().zip(v).map(|(&r, vi)| vi * x[r]).sum();
                let s = tau * dot;
                if s != 0.0 {
                    for (&r, vi) in rows.iter().zip(v) {
                        x[r] -= s * vi;
                    }
                }
            }
            Op::Negate(r) => x[*r] = -x[*r],
        }
    }
}

/// Householder vector for `x`, mapping it to `beta * e_0`. Returns
/// `(v, tau, beta)` with `v[0] = 1`; `tau = 0` when `x` is already aligned.
fn householder(x: &[f64]) -> (Vec<f64>, f64, f64) {
    let alpha = x[0];
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut v = vec![0.0; x.len()];
    v[0] = 1.0;
    if scale == 0.0 {
        return (v, 0.0, 0.0);
    }
    let tail: f64 = x[1..].iter().map(|t| (t / scale).powi(2)).sum();
    if tail == 0.0 {
        return (v, 0.0, alpha);
    }
    let norm = scale * ((alpha / scale).powi(2) + tail).sqrt();
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let v0 = alpha - beta;
    for (vi, xi) in v.iter_mut().zip(x).skip(1) {
        *vi = xi / v0;
    }
    (v, (beta - alpha) / beta, beta)
}

/// Householder QR of a tall matrix that supports appending columns and rows.
///
/// Rows keep their original positions; `pivots[i]` is the row holding row `i`
/// of the triangular factor. `R` has a non-negative diagonal.
#[derive(Clone, Debug)]
pub struct QrFactor {
    /// `Q^T A`, nonzero only on pivot rows.
    work: DMatrix<f64>,
    ops: Vec<Op>,
    pivots: Vec<usize>,
    is_pivot: Vec<bool>,
}

impl QrFactor {
    /// Factor of an `rows x 0` matrix.
    pub fn empty(rows: usize) -> Self {
        Self { work: DMatrix::zeros(rows, 0), ops: Vec::new(), pivots: Vec::new(), is_pivot: vec![false; rows] }
    }

    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        Self::empty(a.nrows()).append_columns(a)
    }

    pub fn nrows(&self) -> usize {
        self.work.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.work.ncols()
    }

    fn apply_qt(&self, x: &mut [f64]) {
        for op in &self.ops {
            op.apply(x);
        }
    }

    fn apply_q(&self, x: &mut [f64]) {
        for op in self.ops.iter().rev() {
            op.apply(x);
        }
    }

    /// `Q^T x` in original row positions.
    pub fn qt_mul(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_rows(x.len())?;
        let mut y = x.clone();
        self.apply_qt(y.as_mut_slice());
        Ok(y)
    }

    /// `Q x` in original row positions.
    pub fn q_mul(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_rows(x.len())?;
        let mut y = x.clone();
        self.apply_q(y.as_mut_slice());
        Ok(y)
    }

    fn check_rows(&self, len: usize) -> Result<()> {
        if len != self.nrows() {
            return Err(Error::Shape(format!("vector of length {len} against {} rows", self.nrows())));
        }
        Ok(())
    }

    /// Factor of `[A | new_cols]`.
    pub fn append_columns(mut self, new_cols: &DMatrix<f64>) -> Result<Self> {
        let m = self.nrows();
        if new_cols.nrows() != m {
            return Err(Error::Shape(format!("appending columns with {} rows to {m} rows", new_cols.nrows())));
        }
        let n0 = self.ncols();
        let k = new_cols.ncols();
        if n0 + k > m {
            return Err(Error::Shape(format!("factor would have {} columns but only {m} rows", n0 + k)));
        }
        self.work = std::mem::replace(&mut self.work, DMatrix::zeros(0, 0)).resize_horizontally(n0 + k, 0.0);
        for c in 0..k {
            let j = n0 + c;
            let mut col: Vec<f64> = new_cols.column(c).iter().copied().collect();
            self.apply_qt(&mut col);
            self.work.column_mut(j).copy_from_slice(&col);
            let free: Vec<usize> = (0..m).filter(|&r| !self.is_pivot[r]).collect();
            let x: Vec<f64> = free.iter().map(|&r| col[r]).collect();
            let pivot = free[0];
            let (v, tau, beta) = householder(&x);
            if tau != 0.0 {
                self.work[(pivot, j)] = beta;
                for &r in &free[1..] {
                    self.work[(r, j)] = 0.0;
                }
                self.ops.push(Op::Reflect { rows: free, v, tau });
            }
            if beta < 0.0 {
                self.negate_row(pivot, j);
            }
            self.is_pivot[pivot] = true;
            self.pivots.push(pivot);
        }
        Ok(self)
    }

    fn negate_row(&mut self, row: usize, from_col: usize) {
        for j in from_col..self.ncols() {
            self.work[(row, j)] = -self.work[(row, j)];
        }
        self.ops.push(Op::Negate(row));
    }

    /// Factor of `[A; new_rows]`; the new rows take indices after the existing ones.
    pub fn append_rows(mut self, new_rows: &DMatrix<f64>) -> Result<Self> {
        let n = self.ncols();
        if new_rows.ncols() != n {
            return Err(Error::Shape(format!("appending rows with {} columns to {n} columns", new_rows.ncols())));
        }
        let m0 = self.nrows();
        let k = new_rows.nrows();
        self.work = std::mem::replace(&mut self.work, DMatrix::zeros(0, 0)).resize_vertically(m0 + k, 0.0);
        self.work.view_mut((m0, 0), (k, n)).copy_from(new_rows);
        self.is_pivot.resize(m0 + k, false);
        if k == 0 {
            return Ok(self);
        }
        for j in 0..n {
            let pivot = self.pivots[j];
            let mut rows = Vec::with_capacity(k + 1);
            rows.push(pivot);
            rows.extend(m0..m0 + k);
            let x: Vec<f64> = rows.iter().map(|&r| self.work[(r, j)]).collect();
            let (v, tau, beta) = householder(&x);
            if tau != 0.0 {
                let op = Op::Reflect { rows, v, tau };
                for c in j + 1..n {
                    op.apply(self.work.column_mut(c).as_mut_slice());
                }
                self.work[(pivot, j)] = beta;
                for r in m0..m0 + k {
                    self.work[(r, j)] = 0.0;
                }
                self.ops.push(op);
            }
            if beta < 0.0 {
                self.negate_row(pivot, j);
            }
        }
        Ok(self)
    }

    /// Upper-triangular factor `R` (`n x n`).
    pub fn r(&self) -> DMatrix<f64> {
        let n = self.ncols();
        DMatrix::from_fn(n, n, |i, j| if j >= i { self.work[(self.pivots[i], j)] } else { 0.0 })
    }

    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.ncols()).map(|i| self.work[(self.pivots[i], i)]).collect()
    }

    /// `Q_1` with `A = Q_1 R` (`m x n`, orthonormal columns).
    pub fn thin_q(&self) -> DMatrix<f64> {
        let m = self.nrows();
        let mut q = DMatrix::zeros(m, self.ncols());
        for (i, &p) in self.pivots.iter().enumerate() {
            let mut e = vec![0.0; m];
            e[p] = 1.0;
            self.apply_q(&mut e);
            q.column_mut(i).copy_from_slice(&e);
        }
        q
    }

    /// Whether some diagonal entry of `R` is below `NEAR_SINGULAR` times the largest.
    pub fn near_singular(&self) -> bool {
        let diag = self.r_diagonal();
        let max = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        diag.iter().any(|d| d.abs() < NEAR_SINGULAR * max) || (max == 0.0 && !diag.is_empty())
    }

    /// `R[..k, ..k] x = y[..k]` by back substitution; exactly zero pivots give zero.
    pub(crate) fn back_substitute(&self, y: &[f64], k: usize) -> DVector<f64> {
        let mut x = DVector::zeros(k);
        for i in (0..k).rev() {
            let row = self.pivots[i];
            let mut s = y[i];
            for j in i + 1..k {
                s -= self.work[(row, j)] * x[j];
            }
            let d = self.work[(row, i)];
            x[i] = if d == 0.0 { 0.0 } else { s / d };
        }
        x
    }

    /// `Q^T b` restricted to pivot rows, in column order.
    pub(crate) fn projected_rhs(&self, b: &DVector<f64>) -> Result<Vec<f64>> {
        let qtb = self.qt_mul(b)?;
        Ok(self.pivots.iter().map(|&p| qtb[p]).collect())
    }

    /// Least-squares solution of `A x = b`.
    pub fn ls_solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.ls_solve_prefix(b, self.ncols())
    }

    /// Least-squares solution using only the first `k` columns.
    pub fn ls_solve_prefix(&self, b: &DVector<f64>, k: usize) -> Result<DVector<f64>> {
        if k > self.ncols() {
            return Err(Error::Shape(format!("prefix {k} exceeds {} columns", self.ncols())));
        }
        if self.near_singular() {
            log::warn!("least-squares solve with a near-singular triangular factor");
        }
        let y = self.projected_rhs(b)?;
        Ok(self.back_substitute(&y, k))
    }

    /// Minimum-norm solution of the underdetermined system `A^T z = rhs`.
    pub fn minnorm_solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.ncols();
        if rhs.len() != n {
            return Err(Error::Shape(format!("right-hand side of length {} for {n} columns", rhs.len())));
        }
        if self.near_singular() {
            log::warn!("minimum-norm solve with a near-singular triangular factor");
        }
        // R^T w = rhs
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[i];
            for j in 0..i {
                s -= self.work[(self.pivots[j], i)] * w[j];
            }
            let d = self.work[(self.pivots[i], i)];
            w[i] = if d == 0.0 { 0.0 } else { s / d };
        }
        let mut z = vec![0.0; self.nrows()];
        for (i, &p) in self.pivots.iter().enumerate() {
            z[p] = w[i];
        }
        self.apply_q(&mut z);
        Ok(DVector::from_vec(z))
    }
}

/// 2-norm condition number of `R` (equal to that of `A`); infinite when singular.
pub fn cond_estimate(f: &QrFactor) -> f64 {
    cond_of_leading(f, f.ncols())
}

/// Condition number of the first `k` columns of the factored matrix.
pub fn cond_of_leading(f: &QrFactor, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let r = f.r();
    let lead = r.view((0, 0), (k, k)).into_owned();
    if lead.diagonal().iter().any(|&d| d == 0.0) {
        return f64::INFINITY;
    }
    let sv = lead.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}
