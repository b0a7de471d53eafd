//! Time discretisation of the heat equation `u_t = D lap u + f` with Dirichlet
//! data, solved by kernel collocation at every step.
//!
//! All schemes lead to a time-independent matrix
//!
//! ```text
//! [ (c0 Phi - c1 dt D lap Phi)(Z_int, Xi) ]
//! [            Phi(Z_bnd, Xi)             ]
//! ```
//!
//! with `(c0, c1) = (2, 1)` for Crank–Nicolson, `(1, 1)` for SBDF1 and
//! `(3, 2)` for SBDF2. It is factored once over all rows and the selected
//! columns, and each step is a least-squares solve.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{
    cube_boundary_grid, fill_bulk, square_boundary_ring, BulkDomain, PointCloud, PointLabel,
};
use crate::greedy::{GreedySelection, Termination};
use crate::kernels::{assemble_matrix, KernelSpec, Operator};
use crate::linalg::{LeastSquaresSolver, QrFactor};

/// Coefficient norm beyond which a run is declared divergent.
pub const BLOWUP_THRESHOLD: f64 = 1e10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    CrankNicolson,
    Sbdf1,
    Sbdf2,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::CrankNicolson => "cn",
            Scheme::Sbdf1 => "sbdf1",
            Scheme::Sbdf2 => "sbdf2",
        }
    }

    /// `(c0, c1)` in the interior operator `c0 Phi - c1 dt D lap Phi`.
    pub fn weights(&self) -> (f64, f64) {
        match self {
            Scheme::CrankNicolson => (2.0, 1.0),
            Scheme::Sbdf1 => (1.0, 1.0),
            Scheme::Sbdf2 => (3.0, 2.0),
        }
    }

    /// Number of previous coefficient vectors the right-hand side needs.
    pub fn history_depth(&self) -> usize {
        match self {
            Scheme::Sbdf2 => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cn" => Ok(Scheme::CrankNicolson),
            "sbdf1" => Ok(Scheme::Sbdf1),
            "sbdf2" => Ok(Scheme::Sbdf2),
            other => Err(Error::Parameter(format!("unknown scheme '{other}' (expected cn, sbdf1 or sbdf2)"))),
        }
    }
}

/// Source, boundary and initial data of a heat problem.
pub trait HeatData: Send + Sync {
    fn source(&self, x: &[f64], t: f64) -> f64;
    fn dirichlet(&self, x: &[f64], t: f64) -> f64;
    fn initial(&self, x: &[f64]) -> f64;
    fn initial_laplacian(&self, x: &[f64]) -> f64;
    fn exact(&self, _x: &[f64], _t: f64) -> Option<f64> {
        None
    }
}

/// `u = S(x) e^{-2 pi^2 t} + (1 - e^{-2 pi^2 t})/2` with
/// `S = sin(2 pi x1) sin(pi x2) [sin(pi x3)]`, and the matching source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedHeat {
    pub dim: usize,
    pub diffusion: f64,
}

impl ManufacturedHeat {
    fn shape(&self, x: &[f64]) -> f64 {
        let mut s = (2.0 * PI * x[0]).sin() * (PI * x[1]).sin();
        if self.dim == 3 {
            s *= (PI * x[2]).sin();
        }
        s
    }

    /// `-lap S / S`
    fn eigenvalue(&self) -> f64 {
        if self.dim == 3 {
            6.0 * PI * PI
        } else {
            5.0 * PI * PI
        }
    }
}

impl HeatData for ManufacturedHeat {
    fn source(&self, x: &[f64], t: f64) -> f64 {
        let e = (-2.0 * PI * PI * t).exp();
        (self.diffusion * self.eigenvalue() - 2.0 * PI * PI) * self.shape(x) * e + PI * PI * e
    }

    fn dirichlet(&self, x: &[f64], t: f64) -> f64 {
        self.exact(x, t).expect("closed form")
    }

    fn initial(&self, x: &[f64]) -> f64 {
        self.shape(x)
    }

    fn initial_laplacian(&self, x: &[f64]) -> f64 {
        -self.eigenvalue() * self.shape(x)
    }

    fn exact(&self, x: &[f64], t: f64) -> Option<f64> {
        let e = (-2.0 * PI * PI * t).exp();
        Some(self.shape(x) * e + 0.5 * (1.0 - e))
    }
}

/// `u = c` everywhere, no source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantHeat {
    pub value: f64,
}

impl HeatData for ConstantHeat {
    fn source(&self, _x: &[f64], _t: f64) -> f64 {
        0.0
    }

    fn dirichlet(&self, _x: &[f64], _t: f64) -> f64 {
        self.value
    }

    fn initial(&self, _x: &[f64]) -> f64 {
        self.value
    }

    fn initial_laplacian(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn exact(&self, _x: &[f64], _t: f64) -> Option<f64> {
        Some(self.value)
    }
}

/// Heat equation with its collocation setup.
#[derive(Clone)]
pub struct HeatProblem {
    pub diffusion: f64,
    pub data: Arc<dyn HeatData>,
    pub interior: PointCloud,
    pub boundary: PointCloud,
    pub centers: PointCloud,
    pub kernel: KernelSpec,
    pub dt: f64,
    pub t_final: f64,
}

impl std::fmt::Debug for HeatProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatProblem")
            .field("diffusion", &self.diffusion)
            .field("interior", &self.interior.len())
            .field("boundary", &self.boundary.len())
            .field("centers", &self.centers.len())
            .field("kernel", &self.kernel)
            .field("dt", &self.dt)
            .field("t_final", &self.t_final)
            .finish()
    }
}

impl HeatProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        diffusion: f64,
        data: Arc<dyn HeatData>,
        interior: PointCloud,
        boundary: PointCloud,
        centers: PointCloud,
        kernel: KernelSpec,
        dt: f64,
        t_final: f64,
    ) -> Result<Self> {
        if !(diffusion >= 0.0) {
            return Err(Error::Parameter(format!("diffusion must be non-negative, got {diffusion}")));
        }
        if !(dt >= 0.0 && t_final >= 0.0) {
            return Err(Error::Parameter(format!("time step {dt} and final time {t_final} must be non-negative")));
        }
        if interior.is_empty() || centers.is_empty() {
            return Err(Error::Precondition("interior points and centres must be non-empty".into()));
        }
        let dim = kernel.dim();
        for cloud in [&interior, &boundary, &centers] {
            if cloud.dim() != dim {
                return Err(Error::Shape(format!("{}D points for a {dim}D kernel", cloud.dim())));
            }
        }
        Ok(Self { diffusion, data, interior, boundary, centers, kernel, dt, t_final })
    }

    /// Unit square: `n` interior Halton points plus a boundary ring with
    /// `ring_per_side` points per edge; the centres are all of them.
    pub fn unit_square(
        n: usize,
        ring_per_side: usize,
        kernel: KernelSpec,
        data: Arc<dyn HeatData>,
        diffusion: f64,
        dt: f64,
        t_final: f64,
    ) -> Result<Self> {
        let interior = fill_bulk(&BulkDomain::UnitSquare, n)?;
        let boundary = square_boundary_ring(ring_per_side)?;
        let centers = interior.concat(&boundary)?;
        Self::new(diffusion, data, interior, boundary, centers, kernel, dt, t_final)
    }

    /// Unit cube: `n` interior Halton points plus a face grid with
    /// `per_edge + 1` nodes per edge.
    pub fn unit_cube(
        n: usize,
        per_edge: usize,
        kernel: KernelSpec,
        data: Arc<dyn HeatData>,
        diffusion: f64,
        dt: f64,
        t_final: f64,
    ) -> Result<Self> {
        let interior = fill_bulk(&BulkDomain::UnitCube, n)?;
        let boundary = cube_boundary_grid(per_edge)?;
        let centers = interior.concat(&boundary)?;
        Self::new(diffusion, data, interior, boundary, centers, kernel, dt, t_final)
    }

    /// Number of steps `K = t_final / dt`, which must be an integer.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) {
            return Err(Error::Parameter("time step must be positive to march".into()));
        }
        let k = self.t_final / self.dt;
        let rounded = k.round();
        if (k - rounded).abs() > 1e-12 * k.max(1.0) * 1e3 || rounded < 1.0 {
            return Err(Error::Parameter(format!(
                "dt = {} does not divide t_final = {}",
                self.dt, self.t_final
            )));
        }
        Ok(rounded as usize)
    }

    /// All collocation points, interior first.
    pub fn collocation_points(&self) -> Result<PointCloud> {
        self.interior.concat(&self.boundary)
    }

    pub fn row_labels(&self) -> Vec<PointLabel> {
        let mut labels = vec![PointLabel::Interior; self.interior.len()];
        labels.extend(std::iter::repeat_n(PointLabel::Boundary, self.boundary.len()));
        labels
    }
}

/// Kernel matrices of a collocation setup, over a fixed column set.
#[derive(Clone, Debug)]
pub struct CollocationMatrices {
    pub value_interior: DMatrix<f64>,
    pub laplacian_interior: DMatrix<f64>,
    pub value_boundary: DMatrix<f64>,
}

impl CollocationMatrices {
    pub fn assemble(kernel: &KernelSpec, interior: &PointCloud, boundary: &PointCloud, centers: &PointCloud) -> Result<Self> {
        Ok(Self {
            value_interior: assemble_matrix(kernel, interior, centers, Operator::Value)?,
            laplacian_interior: assemble_matrix(kernel, interior, centers, Operator::Laplacian)?,
            value_boundary: assemble_matrix(kernel, boundary, centers, Operator::Value)?,
        })
    }

    pub fn for_problem(problem: &HeatProblem) -> Result<Self> {
        Self::assemble(&problem.kernel, &problem.interior, &problem.boundary, &problem.centers)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            value_interior: self.value_interior.select_columns(cols),
            laplacian_interior: self.laplacian_interior.select_columns(cols),
            value_boundary: self.value_boundary.select_columns(cols),
        }
    }

    pub fn ncols(&self) -> usize {
        self.value_interior.ncols()
    }

    /// Stationary system matrix of `scheme`.
    pub fn system(&self, scheme: Scheme, dt: f64, diffusion: f64) -> DMatrix<f64> {
        let (c0, c1) = scheme.weights();
        let interior = &self.value_interior * c0 - &self.laplacian_interior * (c1 * dt * diffusion);
        stack_rows(&interior, &self.value_boundary)
    }

    /// `Phi` at every collocation point, interior first.
    pub fn value_all(&self) -> DMatrix<f64> {
        stack_rows(&self.value_interior, &self.value_boundary)
    }
}

pub(crate) fn stack_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

/// Stationary matrix of `scheme` over all centres, with row labels.
pub fn assemble_stationary_matrix(problem: &HeatProblem, scheme: Scheme) -> Result<(DMatrix<f64>, Vec<PointLabel>)> {
    let mats = CollocationMatrices::for_problem(problem)?;
    Ok((mats.system(scheme, problem.dt, problem.diffusion), problem.row_labels()))
}

/// Previous coefficient vectors, newest first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SchemeState {
    pub history: Vec<DVector<f64>>,
}

impl SchemeState {
    pub fn push(&mut self, lambda: DVector<f64>) {
        self.history.insert(0, lambda);
        self.history.truncate(2);
    }
}

/// Right-hand side for step `k` (time `k dt`) from the coefficient history,
/// expanded with `mats` (which must carry the same columns as the history).
pub fn rhs(problem: &HeatProblem, mats: &CollocationMatrices, scheme: Scheme, state: &SchemeState, k: usize) -> Result<DVector<f64>> {
    if k == 0 {
        return Err(Error::Parameter("step index starts at 1".into()));
    }
    if state.history.len() < scheme.history_depth() || (scheme == Scheme::Sbdf2 && k < 2) {
        return Err(Error::MissingHistory(format!(
            "{scheme} at step {k} needs {} previous levels, have {}; use sbdf1 for the first step",
            scheme.history_depth(),
            state.history.len()
        )));
    }
    for lam in &state.history {
        if lam.len() != mats.ncols() {
            return Err(Error::Shape(format!("history of length {} for {} columns", lam.len(), mats.ncols())));
        }
    }
    let prev = &state.history[0];
    let u1 = &mats.value_interior * prev;
    let (dt, d) = (problem.dt, problem.diffusion);
    let t = |j: usize| j as f64 * dt;
    let f_at = |j: usize| -> DVector<f64> {
        DVector::from_iterator(
            problem.interior.len(),
            (0..problem.interior.len()).map(|i| problem.data.source(problem.interior.coords(i), t(j))),
        )
    };
    let interior = match scheme {
        Scheme::CrankNicolson => {
            let lap1 = &mats.laplacian_interior * prev;
            u1 * 2.0 + (f_at(k) + lap1 * d + f_at(k - 1)) * dt
        }
        Scheme::Sbdf1 => u1 + f_at(k - 1) * dt,
        Scheme::Sbdf2 => {
            let u2 = &mats.value_interior * &state.history[1];
            u1 * 4.0 - u2 + (f_at(k - 1) * 2.0 - f_at(k - 2)) * (2.0 * dt)
        }
    };
    let boundary = DVector::from_iterator(
        problem.boundary.len(),
        (0..problem.boundary.len()).map(|i| problem.data.dirichlet(problem.boundary.coords(i), t(k))),
    );
    Ok(stack_vectors(&interior, &boundary))
}

pub(crate) fn stack_vectors(top: &DVector<f64>, bottom: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom.iter()).copied())
}

/// First-step right-hand side built from the analytic initial data rather than
/// its kernel fit; this is the vector handed to the greedy selector.
pub fn greedy_rhs(problem: &HeatProblem, scheme: Scheme) -> DVector<f64> {
    let (dt, d) = (problem.dt, problem.diffusion);
    let data = &problem.data;
    let interior = DVector::from_iterator(
        problem.interior.len(),
        (0..problem.interior.len()).map(|i| {
            let x = problem.interior.coords(i);
            let u0 = data.initial(x);
            match scheme {
                Scheme::CrankNicolson => {
                    2.0 * u0 + dt * (data.source(x, dt) + d * data.initial_laplacian(x) + data.source(x, 0.0))
                }
                Scheme::Sbdf1 => u0 + dt * data.source(x, 0.0),
                // frozen history U^{-1} = U^0
                Scheme::Sbdf2 => 3.0 * u0 + 2.0 * dt * data.source(x, 0.0),
            }
        }),
    );
    let boundary = DVector::from_iterator(
        problem.boundary.len(),
        (0..problem.boundary.len()).map(|i| data.dirichlet(problem.boundary.coords(i), dt)),
    );
    stack_vectors(&interior, &boundary)
}

/// `|pred - exact|_2 / |exact|_2`.
pub fn relative_rms_error(pred: &[f64], exact: &[f64]) -> Result<f64> {
    if pred.len() != exact.len() {
        return Err(Error::Shape(format!("{} predictions for {} exact values", pred.len(), exact.len())));
    }
    let denom: f64 = exact.iter().map(|v| v * v).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(Error::DivisionByZero("exact values are all zero".into()));
    }
    let num: f64 = pred.iter().zip(exact).map(|(p, e)| (p - e).powi(2)).sum::<f64>().sqrt();
    Ok(num / denom)
}

/// Outcome of a time-stepping run.
#[derive(Clone, Debug)]
pub struct HeatRun {
    pub scheme: Scheme,
    /// Centre indices of the trial space.
    pub cols: Vec<usize>,
    /// `lambda^0, lambda^1, ...` up to the last completed step.
    pub trajectory: Vec<DVector<f64>>,
    /// Relative RMS error at the collocation points per completed step (index 0 is the fit).
    pub errors: Vec<f64>,
    pub blowup: bool,
    pub blowup_step: Option<usize>,
    /// Number of matrix factorisations performed while marching.
    pub factorizations: usize,
    /// Solution at the collocation points after the last completed step.
    pub final_values: DVector<f64>,
}

impl HeatRun {
    pub fn final_error(&self) -> Option<f64> {
        self.errors.last().copied()
    }
}

/// March `problem` with `scheme` on the columns of `selection` (all centres if `None`).
pub fn run(problem: &HeatProblem, scheme: Scheme, selection: Option<&GreedySelection>) -> Result<HeatRun> {
    let full = CollocationMatrices::for_problem(problem)?;
    run_with_matrices(problem, &full, scheme, selection)
}

/// As [`run`] with precomputed full-column matrices.
pub fn run_with_matrices(
    problem: &HeatProblem,
    full: &CollocationMatrices,
    scheme: Scheme,
    selection: Option<&GreedySelection>,
) -> Result<HeatRun> {
    let steps = problem.steps()?;
    let n = problem.centers.len();
    let cols: Vec<usize> = match selection {
        Some(sel) => {
            if let Some(&bad) = sel.cols.iter().find(|&&j| j >= n) {
                return Err(Error::Shape(format!("selected column {bad} out of range for {n} centres")));
            }
            sel.cols.clone()
        }
        None => (0..n).collect(),
    };
    let mats = full.select_columns(&cols);
    let points = problem.collocation_points()?;
    let value_all = mats.value_all();
    let exact_at = |t: f64| -> Option<Vec<f64>> {
        (0..points.len()).map(|i| problem.data.exact(points.coords(i), t)).collect()
    };
    let error_of = |values: &DVector<f64>, t: f64| -> Result<Option<f64>> {
        match exact_at(t) {
            Some(exact) => Ok(Some(relative_rms_error(values.as_slice(), &exact)?)),
            None => Ok(None),
        }
    };

    // lambda^0: least-squares fit of the initial data over all rows
    let fit = QrFactor::factor(&value_all)?;
    let u0 = DVector::from_iterator(points.len(), (0..points.len()).map(|i| problem.data.initial(points.coords(i))));
    let lambda0 = fit.ls_solve(&u0)?;
    let mut values = &value_all * &lambda0;
    let mut errors = Vec::new();
    if let Some(e) = error_of(&values, 0.0)? {
        errors.push(e);
    }

    let system = LeastSquaresSolver::new(&mats.system(scheme, problem.dt, problem.diffusion))?;
    let mut factorizations = 1;
    let starter = if scheme == Scheme::Sbdf2 {
        factorizations += 1;
        Some(LeastSquaresSolver::new(&mats.system(Scheme::Sbdf1, problem.dt, problem.diffusion))?)
    } else {
        None
    };

    let mut state = SchemeState::default();
    state.push(lambda0.clone());
    let mut trajectory = vec![lambda0];
    let mut blowup_step = None;
    for k in 1..=steps {
        let (step_scheme, factor) = match (&starter, k) {
            (Some(first), 1) => (Scheme::Sbdf1, first),
            _ => (scheme, &system),
        };
        let b = rhs(problem, &mats, step_scheme, &state, k)?;
        let lambda = factor.solve(&b)?;
        if !lambda.iter().all(|v| v.is_finite()) || lambda.amax() > BLOWUP_THRESHOLD {
            log::info!("run diverged at step {k} (|lambda| = {:e})", lambda.amax());
            blowup_step = Some(k);
            break;
        }
        values = &value_all * &lambda;
        if let Some(e) = error_of(&values, k as f64 * problem.dt)? {
            errors.push(e);
        }
        state.push(lambda.clone());
        trajectory.push(lambda);
    }

    Ok(HeatRun {
        scheme,
        cols,
        trajectory,
        errors,
        blowup: blowup_step.is_some(),
        blowup_step,
        factorizations,
        final_values: values,
    })
}

/// One row of the error-profile CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorProfileRow {
    pub dt: f64,
    pub n: usize,
    pub epsilon: f64,
    pub scheme: Scheme,
    pub greedy: bool,
    pub termination: Option<Termination>,
    pub selected_cols: usize,
    pub final_rel_rms: f64,
    pub blowup: bool,
}

pub const ERROR_PROFILE_HEADER: &str = "dt,n,epsilon,scheme,greedy,termination,selected_cols,final_rel_rms,blowup";

/// Error profile as CSV: `dt,n,epsilon,scheme,greedy,termination,selected_cols,final_rel_rms,blowup`.
pub fn write_error_profile_csv<W: Write>(rows: &[ErrorProfileRow], mut out: W) -> Result<()> {
    writeln!(out, "{ERROR_PROFILE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:e},{}",
            r.dt,
            r.n,
            r.epsilon,
            r.scheme,
            r.greedy,
            r.termination.map_or("none", |t| t.as_str()),
            r.selected_cols,
            r.final_rel_rms,
            r.blowup
        )?;
    }
    Ok(())
}

/// Field values as CSV: `x,y[,z],value`.
pub fn write_snapshot_csv<W: Write>(points: &PointCloud, values: &[f64], mut out: W) -> Result<()> {
    if values.len() != points.len() {
        return Err(Error::Shape(format!("{} values for {} points", values.len(), points.len())));
    }
    let header = if points.dim() == 3 { "x,y,z,value" } else { "x,y,value" };
    writeln!(out, "{header}")?;
    for (i, v) in values.iter().enumerate() {
        let coords: Vec<String> = points.coords(i).iter().map(|c| c.to_string()).collect();
        writeln!(out, "{},{}", coords.join(","), v)?;
    }
    Ok(())
}
