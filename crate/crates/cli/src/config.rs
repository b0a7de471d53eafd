use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use greedy_colloc::timestep::Scheme;
use serde::Deserialize;

use crate::preset::{Experiment, Size};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "greedy-colloc", version, about = "Kernel collocation time stepping with greedy trial spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One run per time step at a single size.
    Run(RunArgs),
    /// Heat runs over a time-step by size grid, with error bands.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Experiment preset.
    #[arg(value_enum)]
    pub experiment: Option<Experiment>,
    #[arg(long, conflicts_with = "dt_list")]
    pub dt: Option<f64>,
    /// Comma-separated time steps.
    #[arg(long, value_delimiter = ',')]
    pub dt_list: Option<Vec<f64>>,
    /// Interior points of a heat run.
    #[arg(long, conflicts_with = "n_list")]
    pub n: Option<usize>,
    /// Comma-separated interior point counts (sweeps).
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub n_bulk: Option<usize>,
    #[arg(long)]
    pub n_surf: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// cn, sbdf1 or sbdf2 (heat runs only).
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub no_greedy: bool,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with the same keys as the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Boundary points per side of the square (cells per edge of the cube).
    #[arg(long)]
    pub boundary_ring: Option<usize>,
}

/// Config file contents: flat keys named like the flags, with underscores.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<Experiment>,
    dt: Option<f64>,
    dt_list: Option<Vec<f64>>,
    n: Option<usize>,
    n_list: Option<Vec<usize>>,
    n_bulk: Option<usize>,
    n_surf: Option<usize>,
    epsilon: Option<f64>,
    scheme: Option<String>,
    no_greedy: Option<bool>,
    t_final: Option<f64>,
    out: Option<PathBuf>,
    boundary_ring: Option<usize>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ResolvedSize {
    Heat { n_list: Vec<usize>, boundary: usize },
    BulkSurface { n_bulk: usize, n_surf: usize },
}

/// Fully resolved and validated settings of a run or sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub size: ResolvedSize,
    pub dt_list: Vec<f64>,
    pub epsilon: f64,
    pub scheme: Scheme,
    pub greedy: bool,
    pub t_final: f64,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn resolve(args: &RunArgs, sweep: bool) -> Result<Self, ConfigError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let experiment = args
            .experiment
            .or(file.experiment)
            .ok_or_else(|| invalid("no experiment given on the command line or in the config"))?;
        let preset = experiment.preset();

        let file_scheme = file
            .scheme
            .as_deref()
            .map(|s| s.parse::<Scheme>().map_err(|e| invalid(format!("config scheme: {e}"))))
            .transpose()?;
        let scheme_given = args.scheme.or(file_scheme);
        let scheme = match (preset.scheme, scheme_given) {
            (None, Some(_)) => return Err(invalid(format!("{experiment} always uses SBDF2; drop --scheme"))),
            (None, None) => Scheme::Sbdf2,
            (Some(default), given) => given.unwrap_or(default),
        };

        // Flags win over the file; an explicit single value wins over a list.
        let dt_list = match (args.dt, &args.dt_list, file.dt, &file.dt_list) {
            (Some(dt), _, _, _) => vec![dt],
            (None, Some(list), _, _) => list.clone(),
            (None, None, Some(dt), _) => vec![dt],
            (None, None, None, Some(list)) => list.clone(),
            (None, None, None, None) if sweep => preset.dt_list.clone(),
            (None, None, None, None) => vec![preset.dt],
        };
        if dt_list.is_empty() {
            return Err(invalid("the time-step list is empty"));
        }
        let t_final = args.t_final.or(file.t_final).unwrap_or(preset.t_final);
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(invalid(format!("t_final must be positive, got {t_final}")));
        }
        for &dt in &dt_list {
            let k = t_final / dt;
            if !(dt > 0.0) || (k - k.round()).abs() > 1e-9 * k.max(1.0) || k.round() < 1.0 {
                return Err(invalid(format!("dt = {dt} must be positive and divide t_final = {t_final}")));
            }
        }

        let epsilon = args.epsilon.or(file.epsilon).unwrap_or(preset.epsilon);
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
        }

        let n_bulk = args.n_bulk.or(file.n_bulk);
        let n_surf = args.n_surf.or(file.n_surf);
        let n_single = args.n.or(file.n);
        let n_multi = args.n_list.clone().or(file.n_list);
        let size = match preset.size {
            Size::Heat { n, n_list } => {
                if n_bulk.is_some() || n_surf.is_some() {
                    return Err(invalid(format!("{experiment} takes --n, not --n-bulk/--n-surf")));
                }
                let list = match (args.n, &args.n_list, n_single, n_multi) {
                    (Some(n), ..) => vec![n],
                    (None, Some(list), ..) => list.clone(),
                    (None, None, Some(n), _) => vec![n],
                    (None, None, None, Some(list)) => list,
                    (None, None, None, None) if sweep => n_list,
                    (None, None, None, None) => vec![n],
                };
                if list.is_empty() || list.contains(&0) {
                    return Err(invalid("point counts must be a non-empty list of positive integers"));
                }
                let boundary = match args.boundary_ring.or(file.boundary_ring) {
                    Some(0) => return Err(invalid("boundary ring must be positive")),
                    Some(k) => k,
                    None => 0,
                };
                ResolvedSize::Heat { n_list: list, boundary }
            }
            Size::BulkSurface { n_bulk: nb, n_surf: ns } => {
                if n_single.is_some() || n_multi.is_some() || args.boundary_ring.or(file.boundary_ring).is_some() {
                    return Err(invalid(format!("{experiment} takes --n-bulk/--n-surf")));
                }
                let (n_bulk, n_surf) = (n_bulk.unwrap_or(nb), n_surf.unwrap_or(ns));
                if n_bulk == 0 || n_surf == 0 {
                    return Err(invalid("bulk and surface point counts must be positive"));
                }
                if sweep {
                    return Err(invalid(format!("sweeps cover the heat experiments only, not {experiment}")));
                }
                if dt_list.len() != 1 {
                    return Err(invalid(format!("{experiment} takes a single time step")));
                }
                ResolvedSize::BulkSurface { n_bulk, n_surf }
            }
        };
        if !sweep {
            if let ResolvedSize::Heat { n_list, .. } = &size {
                if n_list.len() != 1 {
                    return Err(invalid("run takes a single --n; use sweep for a list"));
                }
            }
        }

        let no_greedy = args.no_greedy || file.no_greedy.unwrap_or(false);
        let out = args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(format!("out/{experiment}")));
        Ok(Self { experiment, size, dt_list, epsilon, scheme, greedy: preset.greedy && !no_greedy, t_final, out })
    }

    /// Boundary points per side (2D) or cells per edge (3D) for `n` interior points.
    pub fn boundary_for(&self, n: usize) -> usize {
        match self.size {
            ResolvedSize::Heat { boundary, .. } if boundary > 0 => boundary,
            _ => (n as f64).powf(1.0 / self.experiment.dim() as f64).ceil() as usize,
        }
    }
}
