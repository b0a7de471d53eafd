//! Block-greedy selection of a well-conditioned column subset of a
//! collocation matrix.
//!
//! Each iteration solves the selected subsystem `A(rows, cols) eta = b(rows)`
//! in the least-squares sense and the transposed system
//! `A(rows, cols)^T zeta = -eta` in the minimum-norm sense. The primal residual
//! `A(:, cols) eta - b` ranks candidate rows and the dual residual
//! `E eta + A(rows, :)^T zeta` ranks candidate columns; both index sets then
//! roughly double.
//!
//! Two stopping-rule families are provided. The classic one stops when the
//! condition number exceeds `1/tau_kappa` (bisecting back to an acceptable
//! prefix) or when the residual drops below `tau_r`. The time-step-matched one
//! instead searches the full-row residual curve: after ill-conditioning it
//! keeps the residual-minimising prefix of the newly added columns, and after
//! convergence it backtracks to the shortest prefix meeting `tau_r_prime`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{cond_estimate, cond_of_leading, prefix_residuals_with_factor, PrefixResidual, QrFactor};
use crate::MACHINE_EPSILON;

/// Stopping tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Inverse condition-number cap.
    pub tau_kappa: f64,
    /// Residual at which selection stops.
    pub tau_r: f64,
    /// Target residual for backtracking.
    pub tau_r_prime: f64,
}

impl Tolerances {
    pub fn new(tau_kappa: f64, tau_r: f64, tau_r_prime: f64) -> Result<Self> {
        if !(tau_kappa > 0.0 && tau_kappa <= 1.0) {
            return Err(Error::Parameter(format!("tau_kappa must lie in (0, 1], got {tau_kappa}")));
        }
        if !(tau_r > 0.0 && tau_r_prime > 0.0) {
            return Err(Error::Parameter(format!(
                "residual tolerances must be positive, got {tau_r} and {tau_r_prime}"
            )));
        }
        if tau_r_prime > tau_r {
            return Err(Error::Parameter(format!("tau_r_prime = {tau_r_prime} exceeds tau_r = {tau_r}")));
        }
        Ok(Self { tau_kappa, tau_r, tau_r_prime })
    }

    /// `(eps/dt, dt, dt^2)`.
    pub fn from_dt(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(Error::Domain(format!("time step must lie in (0, 1], got {dt}")));
        }
        Self::new(MACHINE_EPSILON / dt, dt, dt * dt)
    }

    /// All three tolerances at machine precision.
    pub fn machine() -> Self {
        Self { tau_kappa: MACHINE_EPSILON, tau_r: MACHINE_EPSILON, tau_r_prime: MACHINE_EPSILON }
    }

    /// Largest admissible condition number.
    pub fn condition_cap(&self) -> f64 {
        1.0 / self.tau_kappa
    }
}

pub fn tolerances_from_dt(dt: f64) -> Result<Tolerances> {
    Tolerances::from_dt(dt)
}

/// Why selection stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    AllColumns,
    SC1,
    SC2,
    SC1Prime,
    SC2Prime,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::AllColumns => "AllColumns",
            Termination::SC1 => "SC1",
            Termination::SC2 => "SC2",
            Termination::SC1Prime => "SC1Prime",
            Termination::SC2Prime => "SC2Prime",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "AllColumns" => Termination::AllColumns,
            "SC1" => Termination::SC1,
            "SC2" => Termination::SC2,
            "SC1Prime" => Termination::SC1Prime,
            "SC2Prime" => Termination::SC2Prime,
            other => return Err(Error::Parameter(format!("unknown termination '{other}'"))),
        })
    }
}

/// Diagnostics of one selection iteration, taken before expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub rows: usize,
    pub cols: usize,
    pub kappa: f64,
    /// `|A(rows, cols) eta - b(rows)|_inf`
    pub res_inf_selected: f64,
    /// `|A(:, cols) eta - b|_inf`
    pub res_inf_fullrow: f64,
    /// 2-norm residual of the least-squares fit over all rows on `cols`.
    pub fullrow_ls_two: f64,
    /// Largest `|dual_j|` over selected columns; zero in exact arithmetic.
    pub dual_selected_max: f64,
    pub eta_inf: f64,
}

/// Outcome of a selection run.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedySelection {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub termination: Termination,
    /// Condition number of `A(rows, cols)`.
    pub final_condition: f64,
    /// `|b - A(:, cols) x|_inf` for the all-rows least-squares `x`.
    pub final_full_row_residual_inf: f64,
    pub iterations: Vec<IterationRecord>,
    /// Prefix residuals examined by the final backtracking step, if any.
    pub scanned: Vec<PrefixResidual>,
    /// Set when bisection met a prefix that broke its monotonicity assumption.
    pub bisection_monotonicity_violated: bool,
}

/// Primal and dual residuals of a selection, with the subsystem solutions.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualPair {
    pub eta: DVector<f64>,
    pub zeta: DVector<f64>,
    pub primal: DVector<f64>,
    pub dual: DVector<f64>,
}

pub(crate) fn submatrix(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

fn column_block(a: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    a.select_columns(cols)
}

fn check_system(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<()> {
    if a.nrows() != b.len() {
        return Err(Error::Shape(format!("{} rows but right-hand side of length {}", a.nrows(), b.len())));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Shape("empty system".into()));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Precondition("system contains non-finite entries".into()));
    }
    Ok(())
}

fn residuals_from_factor(
    a: &DMatrix<f64>,
    a_cols: &DMatrix<f64>,
    b: &DVector<f64>,
    rows: &[usize],
    cols: &[usize],
    f: &QrFactor,
) -> Result<ResidualPair> {
    let b_rows = DVector::from_iterator(rows.len(), rows.iter().map(|&i| b[i]));
    let eta = f.ls_solve(&b_rows)?;
    let zeta = f.minnorm_solve(&(-&eta))?;
    let primal = a_cols * &eta - b;
    let mut dual = DVector::zeros(a.ncols());
    for (pos, &j) in cols.iter().enumerate() {
        dual[j] = eta[pos];
    }
    for (pos, &i) in rows.iter().enumerate() {
        let z = zeta[pos];
        if z != 0.0 {
            for j in 0..a.ncols() {
                dual[j] += a[(i, j)] * z;
            }
        }
    }
    Ok(ResidualPair { eta, zeta, primal, dual })
}

/// Primal and dual residuals for the selection `(rows, cols)`.
pub fn residual_pair(a: &DMatrix<f64>, rows: &[usize], cols: &[usize], b: &DVector<f64>) -> Result<ResidualPair> {
    check_system(a, b)?;
    if cols.is_empty() || rows.len() < cols.len() {
        return Err(Error::Precondition(format!(
            "need |rows| >= |cols| >= 1, got {} rows and {} columns",
            rows.len(),
            cols.len()
        )));
    }
    if rows.iter().any(|&i| i >= a.nrows()) || cols.iter().any(|&j| j >= a.ncols()) {
        return Err(Error::Shape("selection index out of range".into()));
    }
    let f = QrFactor::factor(&submatrix(a, rows, cols))?;
    residuals_from_factor(a, &column_block(a, cols), b, rows, cols, &f)
}

fn argmax_abs<I: Iterator<Item = f64>>(values: I) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        let v = v.abs();
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best
}

/// Starting row `argmax |b_i|` and column `argmax_j |A(row, j) b(row)|`,
/// ties to the smallest index.
pub fn initialize_selection(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(usize, usize)> {
    check_system(a, b)?;
    let (row, bmax) = argmax_abs(b.iter().copied()).expect("non-empty");
    if bmax == 0.0 {
        return Err(Error::Degenerate("right-hand side is identically zero".into()));
    }
    let (col, _) = argmax_abs((0..a.ncols()).map(|j| a[(row, j)] * b[row])).expect("non-empty");
    Ok((row, col))
}

/// Indices not in `taken`, ordered by descending `|scores|`, ties by index.
fn ranked_candidates(scores: &DVector<f64>, taken: &[usize]) -> Vec<usize> {
    let mut used = vec![false; scores.len()];
    for &t in taken {
        used[t] = true;
    }
    let mut cand: Vec<usize> = (0..scores.len()).filter(|&i| !used[i]).collect();
    cand.sort_by(|&x, &y| scores[y].abs().total_cmp(&scores[x].abs()).then(x.cmp(&y)));
    cand
}

/// Rows per selected column that the row batch aims for.
pub const ROW_SURPLUS: usize = 4;

/// Enlarged selection: the column set doubles (capped by the matrix size)
/// with the largest unselected dual residuals, and rows are added by primal
/// residual until there are `max(2|rows|, ROW_SURPLUS |cols'|)` of them
/// (capped at `m`).
pub fn expand_block(
    primal: &DVector<f64>,
    dual: &DVector<f64>,
    rows: &[usize],
    cols: &[usize],
) -> (Vec<usize>, Vec<usize>) {
    let m = primal.len();
    let n = dual.len();
    let col_target = (2 * cols.len()).min(n).min(m);
    let mut new_cols = cols.to_vec();
    new_cols.extend(ranked_candidates(dual, cols).into_iter().take(col_target.saturating_sub(cols.len())));
    let row_target = (2 * rows.len()).max(ROW_SURPLUS * new_cols.len()).min(m);
    let mut new_rows = rows.to_vec();
    new_rows.extend(ranked_candidates(primal, rows).into_iter().take(row_target.saturating_sub(rows.len())));
    (new_rows, new_cols)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rules {
    Original,
    ResidualSearch,
}

/// Classic stopping rules: condition cap with bisection backtracking, or
/// residual below `tau_r`.
pub fn select_subspace_original(a: &DMatrix<f64>, b: &DVector<f64>, tol: &Tolerances) -> Result<GreedySelection> {
    select(a, b, tol, Rules::Original)
}

/// Residual-curve stopping rules: residual-minimising prefix after
/// ill-conditioning, or shortest prefix meeting `tau_r_prime` after convergence.
pub fn select_subspace_new(a: &DMatrix<f64>, b: &DVector<f64>, tol: &Tolerances) -> Result<GreedySelection> {
    select(a, b, tol, Rules::ResidualSearch)
}

struct State<'a> {
    b: &'a DVector<f64>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// `A(:, cols)` in selection order.
    a_cols: DMatrix<f64>,
    selected: QrFactor,
    full: QrFactor,
}

impl State<'_> {
    fn full_row_residual(&self, k: usize) -> Result<PrefixResidual> {
        let scan = prefix_residuals_with_factor(&self.full, &self.a_cols, self.b, k, k)?;
        Ok(scan[0])
    }
}

fn select(a: &DMatrix<f64>, b: &DVector<f64>, tol: &Tolerances, rules: Rules) -> Result<GreedySelection> {
    let (row0, col0) = initialize_selection(a, b)?;
    let m = a.nrows();
    let n = a.ncols();
    let mut st = State {
        b,
        rows: vec![row0],
        cols: vec![col0],
        a_cols: column_block(a, &[col0]),
        selected: QrFactor::factor(&submatrix(a, &[row0], &[col0]))?,
        full: QrFactor::factor(&column_block(a, &[col0]))?,
    };
    let mut iterations = Vec::new();
    let cap = tol.condition_cap();

    loop {
        let kappa = cond_estimate(&st.selected);
        let res = residuals_from_factor(a, &st.a_cols, b, &st.rows, &st.cols, &st.selected)?;
        let res_inf_selected = st.rows.iter().map(|&i| res.primal[i].abs()).fold(0.0, f64::max);
        let res_inf_fullrow = res.primal.amax();
        let dual_selected_max = st.cols.iter().map(|&j| res.dual[j].abs()).fold(0.0, f64::max);
        let full_now = st.full_row_residual(st.cols.len())?;
        iterations.push(IterationRecord {
            iter: iterations.len(),
            rows: st.rows.len(),
            cols: st.cols.len(),
            kappa,
            res_inf_selected,
            res_inf_fullrow,
            fullrow_ls_two: full_now.two_norm,
            dual_selected_max,
            eta_inf: res.eta.amax(),
        });
        log::debug!(
            "greedy iter {}: rows {} cols {} kappa {:.3e} res {:.3e}",
            iterations.len() - 1,
            st.rows.len(),
            st.cols.len(),
            kappa,
            res_inf_fullrow
        );

        if res_inf_fullrow < tol.tau_r {
            return match rules {
                Rules::Original => Ok(GreedySelection {
                    rows: st.rows,
                    cols: st.cols,
                    termination: Termination::SC2,
                    final_condition: kappa,
                    final_full_row_residual_inf: full_now.inf_norm,
                    iterations,
                    scanned: Vec::new(),
                    bisection_monotonicity_violated: false,
                }),
                Rules::ResidualSearch => {
                    let scan = prefix_residuals_with_factor(&st.full, &st.a_cols, b, 1, st.cols.len())?;
                    let chosen = scan
                        .iter()
                        .find(|p| p.inf_norm <= tol.tau_r_prime)
                        .copied()
                        .unwrap_or(*scan.last().expect("non-empty scan"));
                    let k = chosen.k;
                    Ok(GreedySelection {
                        final_condition: cond_of_leading(&st.selected, k),
                        rows: st.rows,
                        cols: st.cols[..k].to_vec(),
                        termination: Termination::SC2Prime,
                        final_full_row_residual_inf: chosen.inf_norm,
                        iterations,
                        scanned: scan,
                        bisection_monotonicity_violated: false,
                    })
                }
            };
        }

        if st.cols.len() >= n.min(m) {
            return Ok(GreedySelection {
                rows: st.rows,
                cols: st.cols,
                termination: Termination::AllColumns,
                final_condition: kappa,
                final_full_row_residual_inf: full_now.inf_norm,
                iterations,
                scanned: Vec::new(),
                bisection_monotonicity_violated: false,
            });
        }

        let (rows_next, cols_next) = expand_block(&res.primal, &res.dual, &st.rows, &st.cols);
        let added_rows = &rows_next[st.rows.len()..];
        let added_cols = &cols_next[st.cols.len()..];
        let prev_cols = st.cols.len();
        st.selected = st.selected.append_rows(&submatrix(a, added_rows, &st.cols))?;
        st.selected = st.selected.append_columns(&submatrix(a, &rows_next, added_cols))?;
        let new_block = column_block(a, added_cols);
        st.full = st.full.append_columns(&new_block)?;
        let mut a_cols = DMatrix::zeros(m, cols_next.len());
        a_cols.columns_mut(0, prev_cols).copy_from(&st.a_cols);
        a_cols.columns_mut(prev_cols, added_cols.len()).copy_from(&new_block);
        st.a_cols = a_cols;
        st.rows = rows_next;
        st.cols = cols_next;

        let kappa_next = cond_estimate(&st.selected);
        if kappa_next > cap {
            return match rules {
                Rules::Original => {
                    let (k, violated) = bisect_condition(&st.selected, prev_cols, st.cols.len(), cap);
                    let full = st.full_row_residual(k)?;
                    Ok(GreedySelection {
                        final_condition: cond_of_leading(&st.selected, k),
                        rows: st.rows,
                        cols: st.cols[..k].to_vec(),
                        termination: Termination::SC1,
                        final_full_row_residual_inf: full.inf_norm,
                        iterations,
                        scanned: Vec::new(),
                        bisection_monotonicity_violated: violated,
                    })
                }
                Rules::ResidualSearch => {
                    let scan = prefix_residuals_with_factor(&st.full, &st.a_cols, b, prev_cols + 1, st.cols.len())?;
                    let best = scan
                        .iter()
                        .copied()
                        .reduce(|best, p| if p.inf_norm < best.inf_norm { p } else { best })
                        .expect("non-empty scan");
                    Ok(GreedySelection {
                        final_condition: cond_of_leading(&st.selected, best.k),
                        rows: st.rows,
                        cols: st.cols[..best.k].to_vec(),
                        termination: Termination::SC1Prime,
                        final_full_row_residual_inf: best.inf_norm,
                        iterations,
                        scanned: scan,
                        bisection_monotonicity_violated: false,
                    })
                }
            };
        }
    }
}

/// Largest prefix length in `1..=hi` whose leading block has condition number
/// at most `cap`, searched by bisection from the known-good length `lo`.
/// Falls back to a downward scan when `lo` itself fails; the flag reports that.
fn bisect_condition(f: &QrFactor, lo: usize, hi: usize, cap: f64) -> (usize, bool) {
    let good = |k: usize| cond_of_leading(f, k) <= cap;
    if !good(lo) {
        let k = (1..lo).rev().find(|&k| good(k)).unwrap_or(1);
        return (k, true);
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if good(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, false)
}

/// Iteration log as CSV: `iter,rows,cols,kappa,res_inf_selected,res_inf_fullrow`.
pub fn write_iteration_log_csv<W: Write>(records: &[IterationRecord], mut out: W) -> Result<()> {
    writeln!(out, "iter,rows,cols,kappa,res_inf_selected,res_inf_fullrow")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{:e},{:e},{:e}",
            r.iter, r.rows, r.cols, r.kappa, r.res_inf_selected, r.res_inf_fullrow
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_rule() {
        let t = Tolerances::from_dt(0.01).unwrap();
        assert!((t.tau_kappa - 2.220446049250313e-14).abs() < 1e-27);
        assert_eq!(t.tau_r, 0.01);
        assert!((t.tau_r_prime - 1e-4).abs() < 1e-18);
        let t = Tolerances::from_dt(1.0).unwrap();
        assert_eq!((t.tau_kappa, t.tau_r, t.tau_r_prime), (MACHINE_EPSILON, 1.0, 1.0));
        let t = Tolerances::from_dt(0.005).unwrap();
        assert!((t.tau_kappa - 4.440892098500626e-14).abs() < 1e-27);
        assert!((t.tau_r_prime - 2.5e-5).abs() < 1e-18);
        assert!(matches!(Tolerances::from_dt(0.0), Err(Error::Domain(_))));
        assert!(Tolerances::new(0.1, 1e-3, 1e-2).is_err());
    }

    #[test]
    fn residual_pair_exact_interpolation() {
        let a = DMatrix::identity(3, 3);
        let b = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let r = residual_pair(&a, &[0], &[0], &b).unwrap();
        assert_eq!(r.eta[0], 1.0);
        assert_eq!(r.zeta[0], -1.0);
        assert!(r.primal.amax() == 0.0);
        assert!(r.dual.amax() == 0.0);
    }

    #[test]
    fn empty_selection_rejected() {
        let a = DMatrix::identity(3, 3);
        let b = DVector::from_element(3, 1.0);
        assert!(matches!(residual_pair(&a, &[0], &[], &b), Err(Error::Precondition(_))));
    }

    #[test]
    fn initial_selection() {
        let a = DMatrix::identity(4, 4);
        let b = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(initialize_selection(&a, &b).unwrap(), (1, 1));
        let a = DMatrix::from_element(3, 3, 1.0);
        let b = DVector::from_vec(vec![2.0, -2.0, 1.0]);
        assert_eq!(initialize_selection(&a, &b).unwrap(), (0, 0));
        assert!(matches!(initialize_selection(&a, &DVector::zeros(3)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn expansion_caps() {
        let primal = DVector::from_vec(vec![0.0, 3.0, 1.0, 2.0]);
        let dual = DVector::from_vec(vec![0.0, 5.0]);
        let (rows, cols) = expand_block(&primal, &dual, &[0], &[0]);
        assert_eq!(cols, vec![0, 1]);
        assert_eq!(rows, vec![0, 1, 3, 2]);

        let (rows, _) = expand_block(&DVector::from_vec(vec![1.0, 2.0, 3.0]), &dual, &[0], &[0]);
        assert_eq!(rows, vec![0, 2, 1]);

        let primal = DVector::from_fn(20, |i, _| i as f64);
        let dual = DVector::from_fn(20, |i, _| (20 - i) as f64);
        let (rows, cols) = expand_block(&primal, &dual, &[0, 1, 2], &[0, 1, 2, 3]);
        assert_eq!(cols, vec![0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(rows.len(), 20);
        assert_eq!(rows[..5], [0, 1, 2, 19, 18]);
    }

    #[test]
    fn orthogonal_matrix_takes_all_columns() {
        let mut s = 7u64;
        let g = DMatrix::from_fn(10, 10, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        });
        let a = g.qr().q();
        let b = DVector::from_fn(10, |i, _| 1.0 + i as f64);
        let sel = select_subspace_original(&a, &b, &Tolerances::machine()).unwrap();
        assert_eq!(sel.cols.len(), 10);
        assert!(matches!(sel.termination, Termination::AllColumns | Termination::SC2));
    }

    #[test]
    fn duplicated_columns_trigger_condition_stop() {
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 0.5]);
        let sel = select_subspace_original(&a, &b, &Tolerances::machine()).unwrap();
        assert_eq!(sel.termination, Termination::SC1);
        assert!(sel.final_condition <= 1.0 / MACHINE_EPSILON);
        assert_eq!(sel.cols, vec![0]);

        let sel = select_subspace_new(&a, &b, &Tolerances::machine()).unwrap();
        assert_eq!(sel.termination, Termination::SC1Prime);
        let best = sel.scanned.iter().map(|p| p.inf_norm).fold(f64::INFINITY, f64::min);
        assert_eq!(sel.final_full_row_residual_inf, best);
    }

    #[test]
    fn diagonal_backtracking() {
        let a = DMatrix::<f64>::identity(4, 4);
        let b = DVector::from_vec(vec![1.0, 0.5, 1e-6, 1e-9]);
        let tol = Tolerances::new(MACHINE_EPSILON, 0.01, 1e-4).unwrap();
        let sel = select_subspace_new(&a, &b, &tol).unwrap();
        assert_eq!(sel.termination, Termination::SC2Prime);
        assert_eq!(sel.cols, vec![0, 1]);
    }

    #[test]
    fn log_csv_header() {
        let a = DMatrix::<f64>::identity(4, 4);
        let b = DVector::from_element(4, 1.0);
        let sel = select_subspace_new(&a, &b, &Tolerances::machine()).unwrap();
        let mut buf = Vec::new();
        write_iteration_log_csv(&sel.iterations, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,rows,cols,kappa,res_inf_selected,res_inf_fullrow\n"));
        assert_eq!(text.lines().count(), sel.iterations.len() + 1);
    }
}
