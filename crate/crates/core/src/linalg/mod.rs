//! Dense QR machinery for the greedy selector.

mod qr;

pub use qr::{cond_estimate, cond_of_leading, QrFactor, NEAR_SINGULAR};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Least-squares solver with an explicit thin `Q`, for many right-hand sides
/// against one matrix.
#[derive(Clone, Debug)]
pub struct LeastSquaresSolver {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl LeastSquaresSolver {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        Ok(Self::from_factor(&QrFactor::factor(a)?))
    }

    pub fn from_factor(f: &QrFactor) -> Self {
        if f.near_singular() {
            log::warn!("least-squares solver built on a near-singular triangular factor");
        }
        Self { q: f.thin_q(), r: f.r() }
    }

    pub fn nrows(&self) -> usize {
        self.q.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.r.ncols()
    }

    /// `argmin |A x - b|`; exactly zero pivots give zero components.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.nrows() {
            return Err(Error::Shape(format!("right-hand side of length {} for {} rows", b.len(), self.nrows())));
        }
        let mut x = self.q.tr_mul(b);
        let n = self.ncols();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.r[(i, j)] * x[j];
            }
            let d = self.r[(i, i)];
            x[i] = if d == 0.0 { 0.0 } else { s / d };
        }
        Ok(x)
    }
}

/// Residual of the least-squares fit on the first `k` columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrefixResidual {
    pub k: usize,
    pub inf_norm: f64,
    pub two_norm: f64,
}

/// Residuals `b - A[:, ..k] x_k` for `k` in `k_lo..=k_hi`, where `x_k` is the
/// least-squares solution on the first `k` columns. Uses one factorisation of
/// `A[:, ..k_hi]`.
pub fn prefix_residual_scan(a: &DMatrix<f64>, b: &DVector<f64>, k_lo: usize, k_hi: usize) -> Result<Vec<PrefixResidual>> {
    if !(1 <= k_lo && k_lo <= k_hi && k_hi <= a.ncols()) {
        return Err(Error::Precondition(format!(
            "prefix range {k_lo}..={k_hi} invalid for {} columns",
            a.ncols()
        )));
    }
    let lead = a.columns(0, k_hi).into_owned();
    let f = QrFactor::factor(&lead)?;
    prefix_residuals_with_factor(&f, &lead, b, k_lo, k_hi)
}

/// As [`prefix_residual_scan`] with a factor of `a[:, ..k_hi]` supplied by the caller.
pub fn prefix_residuals_with_factor(
    f: &QrFactor,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    k_lo: usize,
    k_hi: usize,
) -> Result<Vec<PrefixResidual>> {
    if k_hi > f.ncols() || k_hi > a.ncols() || a.nrows() != f.nrows() || k_lo == 0 || k_lo > k_hi {
        return Err(Error::Shape(format!(
            "prefix range {k_lo}..={k_hi} against a {}x{} factor and {}x{} matrix",
            f.nrows(),
            f.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    let y = f.projected_rhs(b)?;
    Ok((k_lo..=k_hi)
        .into_par_iter()
        .map(|k| {
            let x = f.back_substitute(&y, k);
            let r = b - a.columns(0, k) * x;
            PrefixResidual { k, inf_norm: r.amax(), two_norm: r.norm() }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut s = seed;
        DMatrix::from_fn(m, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    fn reconstruct(f: &QrFactor) -> DMatrix<f64> {
        f.thin_q() * f.r()
    }

    #[test]
    fn identity_and_column_norm() {
        let f = QrFactor::factor(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(f.r(), DMatrix::identity(3, 3));
        let f = QrFactor::factor(&DMatrix::from_column_slice(2, 1, &[3.0, 4.0])).unwrap();
        assert!((f.r()[(0, 0)] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn wide_matrix_rejected() {
        assert!(matches!(QrFactor::factor(&DMatrix::zeros(2, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn random_reconstruction_and_orthogonality() {
        let a = lcg_matrix(20, 8, 1);
        let f = QrFactor::factor(&a).unwrap();
        assert!((reconstruct(&f) - &a).norm() <= 1e-12 * a.norm());
        let q = f.thin_q();
        assert!((q.transpose() * &q - DMatrix::identity(8, 8)).norm() <= 1e-12);
        assert!(f.r_diagonal().iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn append_columns_matches_batch() {
        let a = lcg_matrix(4, 3, 2);
        let f = QrFactor::factor(&a.columns(0, 2).into_owned()).unwrap();
        let f = f.append_columns(&a.columns(2, 1).into_owned()).unwrap();
        let batch = QrFactor::factor(&a).unwrap();
        assert!((f.r() - batch.r()).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn dependent_column_gives_zero_pivot() {
        let mut a = lcg_matrix(6, 3, 3);
        let dep = a.column(0) * 2.0 - a.column(1) * 0.5;
        a.set_column(2, &dep);
        let f = QrFactor::factor(&a).unwrap();
        assert!(f.r_diagonal()[2] <= 1e-12 * a.norm());
        assert!(f.near_singular());
    }

    #[test]
    fn append_rows_cases() {
        let a = lcg_matrix(8, 4, 4);
        let f = QrFactor::factor(&a).unwrap();
        let r0 = f.r();
        let same = f.clone().append_rows(&DMatrix::zeros(3, 4)).unwrap();
        assert!((same.r() - &r0).norm() <= 1e-15);

        let extra = lcg_matrix(3, 4, 5);
        let grown = f.clone().append_rows(&extra).unwrap();
        let mut stacked = DMatrix::zeros(11, 4);
        stacked.view_mut((0, 0), (8, 4)).copy_from(&a);
        stacked.view_mut((8, 0), (3, 4)).copy_from(&extra);
        let batch = QrFactor::factor(&stacked).unwrap();
        assert!((grown.r() - batch.r()).norm() <= 1e-10 * stacked.norm());

        let dup = f.append_rows(&a.rows(0, 1).into_owned()).unwrap();
        assert!(dup.r().row(0).norm() > r0.row(0).norm() || dup.r().norm() > r0.norm());
    }

    #[test]
    fn solves_small_cases() {
        let f = QrFactor::factor(&DMatrix::identity(3, 3)).unwrap();
        let b = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(f.ls_solve(&b).unwrap(), b);
        assert_eq!(f.minnorm_solve(&b).unwrap(), b);

        let f = QrFactor::factor(&DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
        let x = f.ls_solve(&DVector::from_vec(vec![0.0, 2.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);

        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let f = QrFactor::factor(&a).unwrap();
        let z = f.minnorm_solve(&DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert!((z - DVector::from_vec(vec![1.0, 2.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn condition_numbers() {
        let f = QrFactor::factor(&DMatrix::identity(4, 4)).unwrap();
        assert!((cond_estimate(&f) - 1.0).abs() < 1e-14);
        let f = QrFactor::factor(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-8]))).unwrap();
        assert!((cond_estimate(&f) / 1e8 - 1.0).abs() < 1e-8);
        let f = QrFactor::factor(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0])).unwrap();
        assert_eq!(cond_estimate(&f), f64::INFINITY);
    }

    #[test]
    fn explicit_solver_matches_factor() {
        let a = lcg_matrix(15, 6, 9);
        let b = DVector::from_iterator(15, (0..15).map(|i| (i as f64).sin()));
        let f = QrFactor::factor(&a).unwrap();
        let x = LeastSquaresSolver::from_factor(&f).solve(&b).unwrap();
        assert!((x - f.ls_solve(&b).unwrap()).amax() < 1e-12);
    }

    #[test]
    fn identity_prefix_scan() {
        let a = DMatrix::identity(3, 3);
        let b = DVector::from_element(3, 1.0);
        let scan = prefix_residual_scan(&a, &b, 1, 3).unwrap();
        let inf: Vec<f64> = scan.iter().map(|p| p.inf_norm).collect();
        assert_eq!(inf, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn scan_range_checked() {
        let a = DMatrix::identity(3, 3);
        let b = DVector::from_element(3, 1.0);
        assert!(prefix_residual_scan(&a, &b, 0, 2).is_err());
        assert!(prefix_residual_scan(&a, &b, 2, 4).is_err());
    }
}
