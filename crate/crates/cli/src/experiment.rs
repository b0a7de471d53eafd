use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use greedy_colloc::bulksurface::{
    count_curve_peaks, count_spots, simulate, BulkSurfaceGeometry, BulkSurfaceRun, SimulationOptions,
};
use greedy_colloc::greedy::{select_subspace_new, select_subspace_original, write_iteration_log_csv, GreedySelection};
use greedy_colloc::timestep::{
    greedy_rhs, run_with_matrices, write_error_profile_csv, write_snapshot_csv, CollocationMatrices, ErrorProfileRow,
    HeatProblem, ManufacturedHeat,
};
use greedy_colloc::{KernelSpec, Tolerances};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ConfigError, ExperimentConfig, ResolvedSize};
use crate::preset::KernelKind;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("output directory {path}: {source}")]
    OutputDir { path: PathBuf, source: std::io::Error },
    #[error("writing {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Solver(#[from] greedy_colloc::Error),
}

impl RunError {
    /// Process exit code: 2 for anything the user can fix in the invocation.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::OutputDir { .. } => 2,
            _ => 1,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path).map(BufWriter::new).map_err(|source| RunError::Write { path: path.into(), source })
}

/// Writes through `f` into a fresh file at `path`.
fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> greedy_colloc::Result<()>,
) -> Result<(), RunError> {
    let mut out = create(path)?;
    f(&mut out)?;
    out.flush().map_err(|source| RunError::Write { path: path.into(), source })
}

fn make_dir(path: &Path) -> Result<(), RunError> {
    fs::create_dir_all(path).map_err(|source| RunError::OutputDir { path: path.into(), source })
}

/// Outcome of one heat cell.
#[derive(Clone, Debug)]
pub struct HeatCell {
    pub row: ErrorProfileRow,
    pub blowup_step: Option<usize>,
    pub boundary: usize,
    pub dir: PathBuf,
}

fn kernel_for(config: &ExperimentConfig, kind: KernelKind) -> greedy_colloc::Result<KernelSpec> {
    let dim = config.experiment.dim();
    match kind {
        KernelKind::Gaussian => KernelSpec::gaussian(config.epsilon, dim),
        KernelKind::MaternSobolev => KernelSpec::matern_sobolev(6.0, config.epsilon, dim),
    }
}

/// Tolerances and selector of a heat experiment: the Gaussian runs use the
/// classic rules at machine precision, the MS runs the time-step-matched ones.
fn select(
    kind: KernelKind,
    a: &nalgebra::DMatrix<f64>,
    b: &nalgebra::DVector<f64>,
    dt: f64,
) -> greedy_colloc::Result<GreedySelection> {
    match kind {
        KernelKind::Gaussian => select_subspace_original(a, b, &Tolerances::machine()),
        KernelKind::MaternSobolev => select_subspace_new(a, b, &Tolerances::from_dt(dt)?),
    }
}

fn heat_problem(config: &ExperimentConfig, n: usize) -> greedy_colloc::Result<HeatProblem> {
    let kind = config.experiment.preset().kernel;
    let kernel = kernel_for(config, kind)?;
    let dim = config.experiment.dim();
    let data = Arc::new(ManufacturedHeat { dim, diffusion: 1.0 });
    let boundary = config.boundary_for(n);
    let dt = config.dt_list[0];
    if dim == 2 {
        HeatProblem::unit_square(n, boundary, kernel, data, 1.0, dt, config.t_final)
    } else {
        HeatProblem::unit_cube(n, boundary, kernel, data, 1.0, dt, config.t_final)
    }
}

fn heat_cells_for_size(config: &ExperimentConfig, n: usize) -> Result<Vec<HeatCell>, RunError> {
    let kind = config.experiment.preset().kernel;
    let problem = heat_problem(config, n)?;
    let mats = CollocationMatrices::for_problem(&problem)?;
    let mut cells = Vec::with_capacity(config.dt_list.len());
    for &dt in &config.dt_list {
        let mut p = problem.clone();
        p.dt = dt;
        let selection = if config.greedy {
            let a = mats.system(config.scheme, dt, p.diffusion);
            Some(select(kind, &a, &greedy_rhs(&p, config.scheme), dt)?)
        } else {
            None
        };
        let run = run_with_matrices(&p, &mats, config.scheme, selection.as_ref())?;

        let dir = config.out.join("cells").join(format!("n{n}_dt{dt}"));
        make_dir(&dir)?;
        let iterations = selection.as_ref().map_or(&[][..], |s| &s.iterations[..]);
        write_file(&dir.join("iterations.csv"), |w| write_iteration_log_csv(iterations, w))?;
        let points = p.collocation_points()?;
        write_file(&dir.join("u.csv"), |w| write_snapshot_csv(&points, run.final_values.as_slice(), w))?;

        cells.push(HeatCell {
            row: ErrorProfileRow {
                dt,
                n,
                epsilon: config.epsilon,
                scheme: config.scheme,
                greedy: config.greedy,
                termination: selection.as_ref().map(|s| s.termination),
                selected_cols: run.cols.len(),
                final_rel_rms: if run.blowup { f64::INFINITY } else { run.final_error().unwrap_or(f64::NAN) },
                blowup: run.blowup,
            },
            blowup_step: run.blowup_step,
            boundary: p.boundary.len(),
            dir,
        });
    }
    Ok(cells)
}

/// Min, median and max of the final errors over the sizes of each time step.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub dt: f64,
    pub cells: usize,
    pub blowups: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

pub const BANDS_HEADER: &str = "dt,scheme,greedy,cells,blowups,min,median,max";

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        k if k % 2 == 1 => v[k / 2],
        k => 0.5 * (v[k / 2 - 1] + v[k / 2]),
    }
}

pub fn bands(rows: &[ErrorProfileRow]) -> Vec<Band> {
    let mut dts: Vec<f64> = Vec::new();
    for r in rows {
        if !dts.contains(&r.dt) {
            dts.push(r.dt);
        }
    }
    dts.into_iter()
        .map(|dt| {
            let errs: Vec<f64> = rows.iter().filter(|r| r.dt == dt).map(|r| r.final_rel_rms).collect();
            Band {
                dt,
                cells: errs.len(),
                blowups: rows.iter().filter(|r| r.dt == dt && r.blowup).count(),
                min: errs.iter().copied().fold(f64::INFINITY, f64::min),
                median: median(&errs),
                max: errs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

fn write_bands(path: &Path, bands: &[Band], config: &ExperimentConfig) -> Result<(), RunError> {
    let mut out = create(path)?;
    let io = |source| RunError::Write { path: path.into(), source };
    writeln!(out, "{BANDS_HEADER}").map_err(io)?;
    for b in bands {
        writeln!(
            out,
            "{},{},{},{},{},{:e},{:e},{:e}",
            b.dt, config.scheme, config.greedy, b.cells, b.blowups, b.min, b.median, b.max
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

fn write_manifest(path: &Path, manifest: &Value) -> Result<(), RunError> {
    let mut out = create(path)?;
    let io = |source| RunError::Write { path: path.into(), source };
    serde_json::to_writer_pretty(&mut out, manifest).map_err(|e| io(e.into()))?;
    writeln!(out).map_err(io)?;
    out.flush().map_err(io)
}

fn number(x: f64) -> Value {
    // JSON has no infinity; keep non-finite values readable.
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

/// Summary printed after a run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub blowup: bool,
}

pub fn run_heat(config: &ExperimentConfig, sweep: bool) -> Result<Outcome, RunError> {
    let started = Instant::now();
    let ResolvedSize::Heat { n_list, .. } = &config.size else {
        return Err(ConfigError::Invalid(format!("{} is not a heat experiment", config.experiment)).into());
    };
    make_dir(&config.out)?;
    let per_size: Vec<Vec<HeatCell>> =
        n_list.par_iter().map(|&n| heat_cells_for_size(config, n)).collect::<Result<_, _>>()?;
    // Rows ordered by dt, then n.
    let mut cells: Vec<HeatCell> = Vec::new();
    for i in 0..config.dt_list.len() {
        cells.extend(per_size.iter().map(|c| c[i].clone()));
    }
    let rows: Vec<ErrorProfileRow> = cells.iter().map(|c| c.row.clone()).collect();
    write_file(&config.out.join("error_profile.csv"), |w| write_error_profile_csv(&rows, w))?;
    let bands = bands(&rows);
    if sweep {
        write_bands(&config.out.join("bands.csv"), &bands, config)?;
    }

    let kind = config.experiment.preset().kernel;
    let tolerances: Vec<Value> = config
        .dt_list
        .iter()
        .map(|&dt| {
            let t = match kind {
                KernelKind::Gaussian => Tolerances::machine(),
                KernelKind::MaternSobolev => Tolerances::from_dt(dt).expect("dt validated"),
            };
            json!({ "dt": dt, "tau_kappa": t.tau_kappa, "tau_r": t.tau_r, "tau_r_prime": t.tau_r_prime })
        })
        .collect();
    let manifest = json!({
        "experiment": config.experiment.name(),
        "command": if sweep { "sweep" } else { "run" },
        "kernel": match kind { KernelKind::Gaussian => "gaussian", KernelKind::MaternSobolev => "matern-sobolev-6" },
        "epsilon": config.epsilon,
        "scheme": config.scheme.as_str(),
        "greedy": config.greedy,
        "selector": match kind { KernelKind::Gaussian => "original", KernelKind::MaternSobolev => "new" },
        "t_final": config.t_final,
        "dt_list": config.dt_list,
        "n_list": n_list,
        "tolerances": if config.greedy { json!(tolerances) } else { Value::Null },
        "cells": cells.iter().map(|c| json!({
            "dt": c.row.dt,
            "n": c.row.n,
            "n_boundary": c.boundary,
            "termination": c.row.termination.map(|t| t.as_str()),
            "selected_cols": c.row.selected_cols,
            "final_rel_rms": number(c.row.final_rel_rms),
            "blowup": c.row.blowup,
            "blowup_step": c.blowup_step,
            "dir": c.dir.strip_prefix(&config.out).unwrap_or(&c.dir),
        })).collect::<Vec<_>>(),
        "blowup": rows.iter().any(|r| r.blowup),
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    write_manifest(&config.out.join("manifest.json"), &manifest)?;

    let mut lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "n={} dt={} {}: {} cols, {}, error {:.3e}{}",
                r.n,
                r.dt,
                r.scheme,
                r.selected_cols,
                r.termination.map_or("all columns", |t| t.as_str()),
                r.final_rel_rms,
                if r.blowup { " (blow-up)" } else { "" }
            )
        })
        .collect();
    if sweep {
        lines.extend(bands.iter().map(|b| {
            format!("dt={}: min {:.3e} median {:.3e} max {:.3e} ({} blow-ups)", b.dt, b.min, b.median, b.max, b.blowups)
        }));
    }
    Ok(Outcome { lines, blowup: rows.iter().any(|r| r.blowup) })
}

fn pattern_counts(geom: &BulkSurfaceGeometry, run: &BulkSurfaceRun) -> (Option<usize>, Option<usize>) {
    if run.blowup {
        return (None, None);
    }
    let spots = geom.bulk_points().ok().and_then(|p| count_spots(&p, run.final_fields.u.as_slice()).ok());
    let peaks = (geom.dim() == 2).then(|| count_curve_peaks(&geom.surface, run.final_fields.w.as_slice()).ok()).flatten();
    (spots, peaks)
}

pub fn run_bulk_surface(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let started = Instant::now();
    let ResolvedSize::BulkSurface { n_bulk, n_surf } = config.size else {
        return Err(ConfigError::Invalid(format!("{} is not a bulk-surface experiment", config.experiment)).into());
    };
    let (params, domain) = config.experiment.pattern_model().expect("bulk-surface experiment");
    make_dir(&config.out)?;
    let geom = BulkSurfaceGeometry::for_domain(&domain, n_bulk, n_surf, config.epsilon)?;
    let dt = config.dt_list[0];
    let run = simulate(&params, &geom, &SimulationOptions::new(dt, config.t_final, config.greedy))?;

    let bulk_points = geom.bulk_points()?;
    let f = &run.final_fields;
    for (name, points, values) in [
        ("u", &bulk_points, &f.u),
        ("v", &bulk_points, &f.v),
        ("w", &geom.surface, &f.w),
        ("s", &geom.surface, &f.s),
    ] {
        write_file(&config.out.join(format!("{name}.csv")), |w| write_snapshot_csv(points, values.as_slice(), w))?;
    }
    for sel in &run.selections {
        let records = &sel.iterations;
        write_file(&config.out.join(format!("iterations_{}.csv", sel.field.as_str())), |w| {
            write_iteration_log_csv(records, w)
        })?;
    }

    let (spots, peaks) = pattern_counts(&geom, &run);
    let tol = Tolerances::from_dt(dt)?;
    let manifest = json!({
        "experiment": config.experiment.name(),
        "command": "run",
        "kernel": "matern-sobolev-6",
        "mu_bulk": geom.mu_bulk,
        "mu_surface": geom.mu_surface,
        "epsilon": config.epsilon,
        "scheme": "sbdf2",
        "greedy": config.greedy,
        "dt": dt,
        "t_final": config.t_final,
        "n_bulk": n_bulk,
        "n_surf": n_surf,
        "params": {
            "a": params.a, "b": params.b, "alpha1": params.alpha1, "alpha2": params.alpha2,
            "beta1": params.beta1, "beta2": params.beta2, "gamma": params.gamma, "q": params.q,
            "d_v": params.d_v, "d_s": params.d_s,
        },
        "tolerances": if config.greedy {
            json!({ "tau_kappa": tol.tau_kappa, "tau_r": tol.tau_r, "tau_r_prime": tol.tau_r_prime })
        } else {
            Value::Null
        },
        "selections": run.selections.iter().map(|s| json!({
            "field": s.field.as_str(),
            "termination": s.termination.map(|t| t.as_str()),
            "selected_cols": s.cols.len(),
            "available": s.available,
            "final_condition": s.final_condition.map(number),
        })).collect::<Vec<_>>(),
        "steps": run.steps,
        "blowup": run.blowup,
        "blowup_step": run.blowup_step,
        "first_step_change": number(run.first_step_change),
        "bulk_spots": spots,
        "surface_peaks": peaks,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    write_manifest(&config.out.join("manifest.json"), &manifest)?;

    let mut lines: Vec<String> = run
        .selections
        .iter()
        .map(|s| {
            format!(
                "{}: {}/{} cols, {}",
                s.field.as_str(),
                s.cols.len(),
                s.available,
                s.termination.map_or("all columns", |t| t.as_str())
            )
        })
        .collect();
    lines.push(match run.blowup_step {
        Some(k) => format!("blow-up at step {k}"),
        None => format!(
            "{} steps, bulk spots {}, surface peaks {}",
            run.steps,
            spots.map_or("-".into(), |s| s.to_string()),
            peaks.map_or("-".into(), |p| p.to_string())
        ),
    });
    Ok(Outcome { lines, blowup: run.blowup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use greedy_colloc::timestep::Scheme;

    fn row(dt: f64, n: usize, err: f64, blowup: bool) -> ErrorProfileRow {
        ErrorProfileRow {
            dt,
            n,
            epsilon: 3.0,
            scheme: Scheme::CrankNicolson,
            greedy: true,
            termination: None,
            selected_cols: n,
            final_rel_rms: err,
            blowup,
        }
    }

    #[test]
    fn median_of_three() {
        assert_eq!(median(&[1.0, 2.0, 9.0]), 2.0);
        assert_eq!(median(&[9.0, 1.0, 2.0, 4.0]), 3.0);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn bands_group_by_time_step() {
        let rows = [
            row(0.02, 500, 1.0, false),
            row(0.02, 550, 9.0, false),
            row(0.02, 600, 2.0, false),
            row(0.01, 500, f64::INFINITY, true),
            row(0.01, 550, 0.5, false),
        ];
        let b = bands(&rows);
        assert_eq!(b.len(), 2);
        assert_eq!((b[0].dt, b[0].cells, b[0].min, b[0].median, b[0].max), (0.02, 3, 1.0, 2.0, 9.0));
        assert_eq!((b[1].blowups, b[1].min, b[1].max), (1, 0.5, f64::INFINITY));
    }
}
