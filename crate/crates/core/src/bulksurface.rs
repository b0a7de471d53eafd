//! Coupled bulk-surface Schnakenberg system
//!
//! ```text
//! u_t = D_u lap u + f1(u, v),   v_t = D_v lap v + f2(u, v)                 in the bulk
//! w_t = D_w lap_S w + f1(w, s) - h1(u, w),   s_t = D_s lap_S s + f2(w, s) - h2(v, s)   on the surface
//! D_u du/dn = h1(u, w),   D_v dv/dn = h2(v, s)                              on the surface
//! ```
//!
//! marched with SBDF2 (reactions and coupling explicit), which splits every
//! step into four independent collocation solves with fixed matrices.
//!
//! Field history is kept as nodal values at the collocation points; that is
//! all the right-hand sides need.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{fill_bulk, fill_surface, BulkDomain, PointCloud};
use crate::greedy::{select_subspace_new, IterationRecord, Termination, Tolerances};
use crate::kernels::{assemble_matrix, KernelSpec, Operator};
use crate::linalg::LeastSquaresSolver;
use crate::timestep::{stack_rows, stack_vectors, BLOWUP_THRESHOLD};

/// Reaction, coupling and diffusion constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BulkSurfaceParams {
    pub a: f64,
    pub b: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    pub q: f64,
    pub d_v: f64,
    pub d_s: f64,
}

impl BulkSurfaceParams {
    fn table(d: f64, q: f64, gamma: f64) -> Self {
        Self {
            a: 0.1,
            b: 0.9,
            alpha1: 5.0 / 12.0,
            alpha2: 5.0,
            beta1: 5.0 / 12.0,
            beta2: 5.0,
            gamma,
            q,
            d_v: d,
            d_s: d,
        }
    }

    pub fn spots() -> Self {
        Self::table(2.0, 1.0 / 12.0, 30.0)
    }

    pub fn spots_low_diffusion() -> Self {
        Self::table(1.0, 1.0 / 12.0, 30.0)
    }

    pub fn stripes() -> Self {
        Self::table(5.0, 0.1, 500.0)
    }

    pub fn torus() -> Self {
        Self::table(3.0, 1.0 / 12.0, 40.0)
    }

    pub fn cyclide() -> Self {
        Self::table(6.0, 1.0 / 12.0, 30.0)
    }

    pub fn ellipsoid() -> Self {
        Self::table(3.0, 1.0 / 12.0, 30.0)
    }

    pub fn validate(&self) -> Result<()> {
        let values = [self.a, self.b, self.alpha1, self.alpha2, self.beta1, self.beta2, self.gamma, self.q, self.d_v, self.d_s];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite model parameter".into()));
        }
        if !(self.a + self.b > 0.0) {
            return Err(Error::Parameter(format!("a + b must be positive, got {}", self.a + self.b)));
        }
        if !(self.q > 0.0 && self.d_v > 0.0 && self.d_s > 0.0) {
            return Err(Error::Parameter("diffusion coefficients must be positive".into()));
        }
        Ok(())
    }

    pub fn d_u(&self) -> f64 {
        self.q * self.d_v
    }

    pub fn d_w(&self) -> f64 {
        self.q * self.d_s
    }

    /// `(f1, f2)`
    pub fn kinetics(&self, u: f64, v: f64) -> (f64, f64) {
        let u2v = u * u * v;
        (self.gamma * (self.a - u + u2v), self.gamma * (self.b - u2v))
    }

    pub fn h1(&self, u: f64, w: f64) -> f64 {
        self.alpha1 * w - self.beta1 * u
    }

    pub fn h2(&self, v: f64, s: f64) -> f64 {
        self.alpha2 * s - self.beta2 * v
    }

    /// Homogeneous steady state `(u0, v0, w0, s0)`.
    pub fn equilibrium(&self) -> [f64; 4] {
        let u0 = self.a + self.b;
        let v0 = self.b / (u0 * u0);
        [u0, v0, u0, v0]
    }
}

/// Free-function form of [`BulkSurfaceParams::kinetics`].
pub fn kinetics(u: f64, v: f64, params: &BulkSurfaceParams) -> (f64, f64) {
    params.kinetics(u, v)
}

/// Free-function form of [`BulkSurfaceParams::equilibrium`].
pub fn equilibrium(params: &BulkSurfaceParams) -> [f64; 4] {
    params.equilibrium()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmoothnessCondition {
    /// `mu_S >= mu_O + d/2 - 2` and `mu_O >= (9 + d)/2`
    BulkLed,
    /// `mu_O >= mu_S - d/2` and `mu_S >= 3 + d`
    SurfaceLed,
}

impl SmoothnessCondition {
    pub fn as_str(&self) -> &'static str {
        match self {
            SmoothnessCondition::BulkLed => "SO-1",
            SmoothnessCondition::SurfaceLed => "SO-2",
        }
    }
}

/// Which admissible pairing of bulk and surface smoothness orders holds, if any.
pub fn validate_smoothness(mu_bulk: f64, mu_surface: f64, dim: usize) -> Option<SmoothnessCondition> {
    let d = dim as f64;
    if mu_surface >= mu_bulk + d / 2.0 - 2.0 && mu_bulk >= (9.0 + d) / 2.0 {
        Some(SmoothnessCondition::BulkLed)
    } else if mu_bulk >= mu_surface - d / 2.0 && mu_surface >= 3.0 + d {
        Some(SmoothnessCondition::SurfaceLed)
    } else {
        None
    }
}

/// Kernel blocks of the bulk problem over all bulk centres.
#[derive(Clone, Debug)]
pub struct BulkMatrices {
    pub value_interior: DMatrix<f64>,
    pub laplacian_interior: DMatrix<f64>,
    pub value_boundary: DMatrix<f64>,
    pub normal_boundary: DMatrix<f64>,
}

impl BulkMatrices {
    pub fn assemble(kernel: &KernelSpec, interior: &PointCloud, boundary: &PointCloud, centers: &PointCloud) -> Result<Self> {
        Ok(Self {
            value_interior: assemble_matrix(kernel, interior, centers, Operator::Value)?,
            laplacian_interior: assemble_matrix(kernel, interior, centers, Operator::Laplacian)?,
            value_boundary: assemble_matrix(kernel, boundary, centers, Operator::Value)?,
            normal_boundary: assemble_matrix(kernel, boundary, centers, Operator::NormalDerivative)?,
        })
    }

    /// `[3 Phi - 2 dt D lap Phi ; D dPhi/dn]`
    pub fn operator(&self, dt: f64, diffusion: f64) -> DMatrix<f64> {
        let interior = &self.value_interior * 3.0 - &self.laplacian_interior * (2.0 * dt * diffusion);
        stack_rows(&interior, &(&self.normal_boundary * diffusion))
    }

    /// Values at interior then boundary points.
    pub fn evaluation(&self) -> DMatrix<f64> {
        stack_rows(&self.value_interior, &self.value_boundary)
    }
}

/// Kernel blocks of the surface problem.
#[derive(Clone, Debug)]
pub struct SurfaceMatrices {
    pub value: DMatrix<f64>,
    pub surface_laplacian: DMatrix<f64>,
}

impl SurfaceMatrices {
    pub fn assemble(kernel: &KernelSpec, surface: &PointCloud, centers: &PointCloud) -> Result<Self> {
        Ok(Self {
            value: assemble_matrix(kernel, surface, centers, Operator::Value)?,
            surface_laplacian: assemble_matrix(kernel, surface, centers, Operator::SurfaceLaplacian)?,
        })
    }

    /// `3 Phi - 2 dt D lap_S Phi`
    pub fn operator(&self, dt: f64, diffusion: f64) -> DMatrix<f64> {
        &self.value * 3.0 - &self.surface_laplacian * (2.0 * dt * diffusion)
    }
}

/// SBDF2 bulk matrix: interior rows `3 Phi - 2 dt D lap Phi`, boundary rows `D dPhi/dn`.
pub fn assemble_bulk_operator(
    dt: f64,
    diffusion: f64,
    kernel: &KernelSpec,
    interior: &PointCloud,
    boundary: &PointCloud,
    centers: &PointCloud,
) -> Result<DMatrix<f64>> {
    Ok(BulkMatrices::assemble(kernel, interior, boundary, centers)?.operator(dt, diffusion))
}

/// SBDF2 surface matrix `3 Phi - 2 dt D lap_S Phi`.
pub fn assemble_surface_operator(
    dt: f64,
    diffusion: f64,
    kernel: &KernelSpec,
    surface: &PointCloud,
    centers: &PointCloud,
) -> Result<DMatrix<f64>> {
    Ok(SurfaceMatrices::assemble(kernel, surface, centers)?.operator(dt, diffusion))
}

/// Nodal values of the four fields: `u`, `v` at bulk points (interior first,
/// then the surface points), `w`, `s` at surface points.
#[derive(Clone, Debug, PartialEq)]
pub struct FourFields {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    pub s: DVector<f64>,
}

impl FourFields {
    pub fn constant(n_bulk: usize, n_surface: usize, values: [f64; 4]) -> Self {
        Self {
            u: DVector::from_element(n_bulk, values[0]),
            v: DVector::from_element(n_bulk, values[1]),
            w: DVector::from_element(n_surface, values[2]),
            s: DVector::from_element(n_surface, values[3]),
        }
    }

    pub fn fields(&self) -> [(Field, &DVector<f64>); 4] {
        [(Field::U, &self.u), (Field::V, &self.v), (Field::W, &self.w), (Field::S, &self.s)]
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|(_, f)| f.iter().all(|x| x.is_finite()))
    }

    /// Largest relative nodal change against `other`, field by field.
    pub fn max_relative_change(&self, other: &Self) -> f64 {
        self.fields()
            .iter()
            .zip(other.fields().iter())
            .map(|((_, a), (_, b))| (*a - *b).amax() / b.amax().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    U,
    V,
    W,
    S,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::U, Field::V, Field::W, Field::S];

    pub fn as_str(&self) -> &'static str {
        match self {
            Field::U => "u",
            Field::V => "v",
            Field::W => "w",
            Field::S => "s",
        }
    }

    pub fn is_bulk(&self) -> bool {
        matches!(self, Field::U | Field::V)
    }
}

/// Right-hand sides `[b_U, b_V, b_W, b_S]` of the SBDF2 step from the two
/// previous levels (`history[0]` newest). Bulk vectors are interior rows then
/// boundary rows; the boundary block of `u` and `v` must coincide with the
/// surface points.
pub fn step_rhs(history: &[FourFields], params: &BulkSurfaceParams, dt: f64, n_interior: usize) -> Result<[DVector<f64>; 4]> {
    if history.len() < 2 {
        return Err(Error::MissingHistory(format!("SBDF2 needs two previous levels, have {}", history.len())));
    }
    let (new, old) = (&history[0], &history[1]);
    let n_surface = new.w.len();
    for level in [new, old] {
        if level.u.len() != n_interior + n_surface
            || level.v.len() != level.u.len()
            || level.s.len() != n_surface
            || level.w.len() != n_surface
        {
            return Err(Error::Shape("history levels have inconsistent lengths".into()));
        }
    }
    let p = params;

    let mut bu = DVector::zeros(n_interior);
    let mut bv = DVector::zeros(n_interior);
    for i in 0..n_interior {
        let (f1n, f2n) = p.kinetics(new.u[i], new.v[i]);
        let (f1o, f2o) = p.kinetics(old.u[i], old.v[i]);
        bu[i] = 4.0 * new.u[i] - old.u[i] + 2.0 * dt * (2.0 * f1n - f1o);
        bv[i] = 4.0 * new.v[i] - old.v[i] + 2.0 * dt * (2.0 * f2n - f2o);
    }
    let mut gu = DVector::zeros(n_surface);
    let mut gv = DVector::zeros(n_surface);
    let mut bw = DVector::zeros(n_surface);
    let mut bs = DVector::zeros(n_surface);
    for j in 0..n_surface {
        let trace = n_interior + j;
        gu[j] = p.h1(new.u[trace], new.w[j]);
        gv[j] = p.h2(new.v[trace], new.s[j]);
        let (f1n, f2n) = p.kinetics(new.w[j], new.s[j]);
        let (f1o, f2o) = p.kinetics(old.w[j], old.s[j]);
        let src_w_new = f1n - gu[j];
        let src_s_new = f2n - gv[j];
        let src_w_old = f1o - p.h1(old.u[trace], old.w[j]);
        let src_s_old = f2o - p.h2(old.v[trace], old.s[j]);
        bw[j] = 4.0 * new.w[j] - old.w[j] + 2.0 * dt * (2.0 * src_w_new - src_w_old);
        bs[j] = 4.0 * new.s[j] - old.s[j] + 2.0 * dt * (2.0 * src_s_new - src_s_old);
    }
    Ok([stack_vectors(&bu, &gu), stack_vectors(&bv, &gv), bw, bs])
}

/// Bulk and surface node sets with kernels.
#[derive(Clone, Debug)]
pub struct BulkSurfaceGeometry {
    pub interior: PointCloud,
    /// Surface points with normals and mean curvatures; also the bulk boundary.
    pub surface: PointCloud,
    pub bulk_kernel: KernelSpec,
    pub surface_kernel: KernelSpec,
    pub mu_bulk: f64,
    pub mu_surface: f64,
}

impl BulkSurfaceGeometry {
    /// `n_interior` Halton points inside `domain` and `n_surface` points on its
    /// boundary; both trial spaces use the MS kernel of order 6 with `epsilon`.
    pub fn for_domain(domain: &BulkDomain, n_interior: usize, n_surface: usize, epsilon: f64) -> Result<Self> {
        let geom = domain
            .boundary()
            .ok_or_else(|| Error::Geometry("domain has no smooth boundary surface".into()))?;
        let interior = fill_bulk(domain, n_interior)?;
        let surface = fill_surface(&geom, n_surface)?;
        let dim = domain.dim();
        let kernel = KernelSpec::matern_sobolev(6.0, epsilon, dim)?;
        Ok(Self { interior, surface, bulk_kernel: kernel, surface_kernel: kernel, mu_bulk: 6.0, mu_surface: 5.5 })
    }

    pub fn dim(&self) -> usize {
        self.interior.dim()
    }

    /// Bulk collocation points and centres: interior then surface.
    pub fn bulk_points(&self) -> Result<PointCloud> {
        self.interior.concat(&self.surface)
    }
}

/// Options of a pattern-formation run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOptions {
    pub dt: f64,
    pub t_final: f64,
    pub use_greedy: bool,
    /// Greedy tolerances; derived from `dt` when `None`.
    pub tolerances: Option<Tolerances>,
    /// Times at which to keep field snapshots (the final state is always kept).
    pub snapshot_times: Vec<f64>,
}

impl SimulationOptions {
    pub fn new(dt: f64, t_final: f64, use_greedy: bool) -> Self {
        Self { dt, t_final, use_greedy, tolerances: None, snapshot_times: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub step: usize,
    pub fields: FourFields,
}

/// Outcome of the trial-space selection for one field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSelection {
    pub field: Field,
    pub cols: Vec<usize>,
    pub available: usize,
    pub termination: Option<Termination>,
    pub final_condition: Option<f64>,
    /// Selector diagnostics; empty without greedy.
    pub iterations: Vec<IterationRecord>,
}

#[derive(Clone, Debug)]
pub struct BulkSurfaceRun {
    pub selections: Vec<FieldSelection>,
    pub snapshots: Vec<Snapshot>,
    pub final_fields: FourFields,
    pub steps: usize,
    pub blowup: bool,
    pub blowup_step: Option<usize>,
    /// Relative change of the first solved step against the equilibrium.
    pub first_step_change: f64,
}

/// Fixed per-field solvers and evaluation matrices.
struct FieldSystem {
    solver: LeastSquaresSolver,
    evaluation: DMatrix<f64>,
}

impl FieldSystem {
    fn advance(&self, rhs: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let lambda = self.solver.solve(rhs)?;
        let size = if lambda.iter().all(|x| x.is_finite()) { lambda.amax() } else { f64::INFINITY };
        Ok((&self.evaluation * lambda, size))
    }
}

/// Shape of the first solved step's right-hand side: one on value rows and
/// zero on the bulk flux rows, where the coupling vanishes at equilibrium.
pub fn selection_rhs(field: Field, rows: usize, n_interior: usize) -> DVector<f64> {
    let value_rows = if field.is_bulk() { n_interior } else { rows };
    DVector::from_fn(rows, |i, _| if i < value_rows { 1.0 } else { 0.0 })
}

/// Number of steps for `t_final / dt`, which must be a whole number.
fn step_count(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0 && t_final > 0.0) {
        return Err(Error::Parameter(format!("dt = {dt} and t_final = {t_final} must be positive")));
    }
    let k = t_final / dt;
    if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
        return Err(Error::Parameter(format!("dt = {dt} does not divide t_final = {t_final}")));
    }
    Ok(k.round() as usize)
}

/// Pattern formation from the homogeneous equilibrium.
///
/// The first step is taken analytically (the equilibrium is a fixed point of
/// SBDF1). From the second step on, each field is advanced by a least-squares
/// solve over all collocation rows and the selected columns; without greedy
/// all columns are used. With greedy, each operator's columns are selected
/// once against [`selection_rhs`]. Nothing is added to the initial state, so any pattern
/// grows from discretisation and round-off error alone.
pub fn simulate(params: &BulkSurfaceParams, geometry: &BulkSurfaceGeometry, options: &SimulationOptions) -> Result<BulkSurfaceRun> {
    params.validate()?;
    let dim = geometry.dim();
    if validate_smoothness(geometry.mu_bulk, geometry.mu_surface, dim).is_none() {
        return Err(Error::Precondition(format!(
            "smoothness orders ({}, {}) in {dim}D satisfy neither admissible pairing",
            geometry.mu_bulk, geometry.mu_surface
        )));
    }
    if geometry.surface.normals().is_none() || geometry.surface.mean_curvatures().is_none() {
        return Err(Error::Precondition("surface points need normals and mean curvatures".into()));
    }
    let steps = step_count(options.dt, options.t_final)?;
    let dt = options.dt;
    let n_interior = geometry.interior.len();
    let n_surface = geometry.surface.len();
    let centers_bulk = geometry.bulk_points()?;
    let bulk = BulkMatrices::assemble(&geometry.bulk_kernel, &geometry.interior, &geometry.surface, &centers_bulk)?;
    let surf = SurfaceMatrices::assemble(&geometry.surface_kernel, &geometry.surface, &geometry.surface)?;
    let bulk_eval = bulk.evaluation();

    let operators = [
        (Field::U, bulk.operator(dt, params.d_u())),
        (Field::V, bulk.operator(dt, params.d_v)),
        (Field::W, surf.operator(dt, params.d_w())),
        (Field::S, surf.operator(dt, params.d_s)),
    ];
    let tol = match options.tolerances {
        Some(t) => t,
        None => Tolerances::from_dt(dt)?,
    };

    let prepared: Vec<Result<(FieldSelection, FieldSystem)>> = operators
        .par_iter()
        .map(|(field, a)| {
            let n = a.ncols();
            let (cols, termination, final_condition, iterations) = if options.use_greedy {
                let sel = select_subspace_new(a, &selection_rhs(*field, a.nrows(), n_interior), &tol)?;
                log::info!("field {}: {} of {} columns ({})", field.as_str(), sel.cols.len(), n, sel.termination);
                (sel.cols, Some(sel.termination), Some(sel.final_condition), sel.iterations)
            } else {
                ((0..n).collect(), None, None, Vec::new())
            };
            let solver = LeastSquaresSolver::new(&a.select_columns(&cols))?;
            let eval_full = if field.is_bulk() { &bulk_eval } else { &surf.value };
            let evaluation = eval_full.select_columns(&cols);
            let selection = FieldSelection { field: *field, cols, available: n, termination, final_condition, iterations };
            Ok((selection, FieldSystem { solver, evaluation }))
        })
        .collect();
    let mut selections = Vec::with_capacity(4);
    let mut systems = Vec::with_capacity(4);
    for item in prepared {
        let (sel, sys) = item?;
        selections.push(sel);
        systems.push(sys);
    }

    let eq = params.equilibrium();
    let start = FourFields::constant(n_interior + n_surface, n_surface, eq);
    let mut history = vec![start.clone(), start.clone()];
    let mut snapshots = Vec::new();
    let mut pending: Vec<f64> = options.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    let mut pending = pending.into_iter().peekable();
    while pending.peek().is_some_and(|&t| t <= 0.5 * dt) {
        let time = pending.next().expect("peeked");
        snapshots.push(Snapshot { time, step: 0, fields: start.clone() });
    }
    // the SBDF1 step from equilibrium is exact
    while pending.peek().is_some_and(|&t| t <= 1.5 * dt) && steps >= 1 {
        pending.next();
        snapshots.push(Snapshot { time: dt, step: 1, fields: start.clone() });
    }

    let mut blowup_step = None;
    let mut first_step_change = 0.0;
    let mut completed = steps.min(1);
    for k in 2..=steps {
        let rhs = step_rhs(&history, params, dt, n_interior)?;
        let advanced: Vec<Result<(DVector<f64>, f64)>> =
            systems.par_iter().zip(rhs.par_iter()).map(|(sys, b)| sys.advance(b)).collect();
        let mut values = Vec::with_capacity(4);
        let mut diverged = false;
        for item in advanced {
            let (vals, size) = item?;
            diverged |= !(size <= BLOWUP_THRESHOLD) || vals.iter().any(|x| !x.is_finite());
            values.push(vals);
        }
        if diverged {
            log::info!("bulk-surface run diverged at step {k}");
            blowup_step = Some(k);
            break;
        }
        let mut it = values.into_iter();
        let next = FourFields {
            u: it.next().expect("four fields"),
            v: it.next().expect("four fields"),
            w: it.next().expect("four fields"),
            s: it.next().expect("four fields"),
        };
        if k == 2 {
            first_step_change = next.max_relative_change(&start);
        }
        let t = k as f64 * dt;
        while pending.peek().is_some_and(|&ts| ts <= t + 0.5 * dt) {
            pending.next();
            snapshots.push(Snapshot { time: t, step: k, fields: next.clone() });
        }
        history.pop();
        history.insert(0, next);
        completed = k;
    }

    let final_fields = history.swap_remove(0);
    let last_time = completed as f64 * dt;
    if snapshots.last().is_none_or(|s| s.step != completed) {
        snapshots.push(Snapshot { time: last_time, step: completed, fields: final_fields.clone() });
    }
    Ok(BulkSurfaceRun {
        selections,
        snapshots,
        final_fields,
        steps: completed,
        blowup: blowup_step.is_some(),
        blowup_step,
        first_step_change,
    })
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn check_field(points: &PointCloud, values: &[f64]) -> Result<Option<f64>> {
    if values.len() != points.len() {
        return Err(Error::Shape(format!("{} values for {} points", values.len(), points.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("field contains non-finite values".into()));
    }
    if values.len() < 2 {
        return Ok(None);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max - mean <= 1e-12 * mean.abs().max(1.0) {
        return Ok(None);
    }
    Ok(Some(mean + 0.5 * (max - mean)))
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, i: usize) -> usize {
        let mut root = i;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut j = i;
        while self.0[j] != root {
            let next = self.0[j];
            self.0[j] = root;
            j = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn beats(values: &[f64], i: usize, j: usize) -> bool {
    values[i] > values[j] || (values[i] == values[j] && i < j)
}

/// Number of separated high spots in a scattered field.
///
/// A point is a spot centre if it beats every neighbour within `rho` (three
/// times the median nearest-neighbour distance) and lies above
/// `mean + (max - mean)/2`; centres closer than `rho` are merged.
pub fn count_spots(points: &PointCloud, values: &[f64]) -> Result<usize> {
    let Some(threshold) = check_field(points, values)? else {
        return Ok(0);
    };
    let n = points.len();
    let dist = |i: usize, j: usize| -> f64 {
        points.coords(i).iter().zip(points.coords(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };
    let nearest: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).filter(|&j| j != i).map(|j| dist(i, j)).fold(f64::INFINITY, f64::min))
        .collect();
    let rho = 3.0 * median(nearest);
    let peaks: Vec<usize> = (0..n)
        .into_par_iter()
        .filter(|&i| values[i] > threshold && (0..n).all(|j| j == i || dist(i, j) > rho || beats(values, i, j)))
        .collect();
    let mut sets = DisjointSets((0..peaks.len()).collect());
    for a in 0..peaks.len() {
        for b in a + 1..peaks.len() {
            if dist(peaks[a], peaks[b]) <= rho {
                sets.union(a, b);
            }
        }
    }
    Ok((0..peaks.len()).filter(|&a| sets.find(a) == a).count())
}

/// Number of peaks of a field on a closed planar curve, read as a periodic
/// trace in the polar angle about the point-set centroid.
pub fn count_curve_peaks(points: &PointCloud, values: &[f64]) -> Result<usize> {
    if points.dim() != 2 {
        return Err(Error::Shape("curve peaks need planar points".into()));
    }
    let Some(threshold) = check_field(points, values)? else {
        return Ok(0);
    };
    let n = points.len();
    let (cx, cy) = (0..n).fold((0.0, 0.0), |(x, y), i| (x + points.coords(i)[0], y + points.coords(i)[1]));
    let (cx, cy) = (cx / n as f64, cy / n as f64);
    let mut order: Vec<usize> = (0..n).collect();
    let angle = |i: usize| (points.coords(i)[1] - cy).atan2(points.coords(i)[0] - cx);
    order.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
    let trace: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let window = 3usize.min((n - 1) / 2).max(1);
    let at = |i: isize| ((i % n as isize + n as isize) % n as isize) as usize;
    let peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            trace[i] > threshold
                && (1..=window as isize).all(|d| {
                    let (l, r) = (at(i as isize - d), at(i as isize + d));
                    beats(&trace, i, l) && beats(&trace, i, r)
                })
        })
        .collect();
    if peaks.len() <= 1 {
        return Ok(peaks.len());
    }
    // merge cyclically adjacent detections
    let mut count = peaks.len();
    for w in 0..peaks.len() {
        let (a, b) = (peaks[w], peaks[(w + 1) % peaks.len()]);
        let gap = (b + n - a) % n;
        if gap <= window {
            count -= 1;
        }
    }
    Ok(count.max(1))
}
