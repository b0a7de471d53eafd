use std::fmt;

use clap::ValueEnum;
use greedy_colloc::bulksurface::BulkSurfaceParams;
use greedy_colloc::geometry::BulkDomain;
use greedy_colloc::timestep::Scheme;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Heat2dGaussian,
    Heat2dMs,
    Heat3dMs,
    #[value(name = "bs-spots-2d")]
    #[serde(rename = "bs-spots-2d")]
    BsSpots2d,
    #[value(name = "bs-stripes-2d")]
    #[serde(rename = "bs-stripes-2d")]
    BsStripes2d,
    BsTorus,
    BsCyclide,
    BsEllipsoid,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Heat2dGaussian,
        Experiment::Heat2dMs,
        Experiment::Heat3dMs,
        Experiment::BsSpots2d,
        Experiment::BsStripes2d,
        Experiment::BsTorus,
        Experiment::BsCyclide,
        Experiment::BsEllipsoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Heat2dGaussian => "heat2d-gaussian",
            Experiment::Heat2dMs => "heat2d-ms",
            Experiment::Heat3dMs => "heat3d-ms",
            Experiment::BsSpots2d => "bs-spots-2d",
            Experiment::BsStripes2d => "bs-stripes-2d",
            Experiment::BsTorus => "bs-torus",
            Experiment::BsCyclide => "bs-cyclide",
            Experiment::BsEllipsoid => "bs-ellipsoid",
        }
    }

    pub fn is_heat(self) -> bool {
        matches!(self, Experiment::Heat2dGaussian | Experiment::Heat2dMs | Experiment::Heat3dMs)
    }

    pub fn preset(self) -> Preset {
        let heat = |kernel, n, epsilon| Preset {
            kernel,
            size: Size::Heat { n, n_list: (500..=1000).step_by(50).collect() },
            dt: 0.01,
            dt_list: vec![0.02, 0.01, 0.005],
            epsilon,
            scheme: Some(Scheme::CrankNicolson),
            greedy: true,
            t_final: 0.2,
        };
        let bulk = |n_bulk, n_surf, dt, epsilon| Preset {
            kernel: KernelKind::MaternSobolev,
            size: Size::BulkSurface { n_bulk, n_surf },
            dt,
            dt_list: vec![dt],
            epsilon,
            scheme: None,
            greedy: true,
            t_final: 200.0,
        };
        match self {
            Experiment::Heat2dGaussian => Preset {
                size: Size::Heat { n: 300, n_list: vec![300] },
                dt_list: vec![0.02, 0.01, 0.005, 0.0025],
                ..heat(KernelKind::Gaussian, 300, 1.0)
            },
            Experiment::Heat2dMs => heat(KernelKind::MaternSobolev, 700, 3.0),
            Experiment::Heat3dMs => Preset {
                size: Size::Heat { n: 1000, n_list: vec![1000] },
                ..heat(KernelKind::MaternSobolev, 1000, 3.0)
            },
            Experiment::BsSpots2d => bulk(717, 100, 0.005, 6.0),
            Experiment::BsStripes2d => bulk(2869, 200, 0.001, 6.0),
            Experiment::BsTorus => bulk(2644, 1430, 0.005, 1.0),
            Experiment::BsCyclide => bulk(6760, 2956, 0.005, 4.0),
            Experiment::BsEllipsoid => bulk(3395, 1164, 0.005, 6.0),
        }
    }

    /// Reaction parameters and domain of a bulk-surface experiment.
    pub fn pattern_model(self) -> Option<(BulkSurfaceParams, BulkDomain)> {
        let disk = BulkDomain::UnitDisk;
        Some(match self {
            Experiment::BsSpots2d => (BulkSurfaceParams::spots(), disk),
            Experiment::BsStripes2d => (BulkSurfaceParams::stripes(), disk),
            Experiment::BsTorus => (BulkSurfaceParams::torus(), BulkDomain::TorusInterior { major: 1.0, minor: 0.5 }),
            Experiment::BsCyclide => {
                (BulkSurfaceParams::cyclide(), BulkDomain::CyclideInterior { a: 1.0, b: 0.98, d: 0.5 })
            }
            Experiment::BsEllipsoid => {
                (BulkSurfaceParams::ellipsoid(), BulkDomain::EllipsoidInterior { a: 1.0, b: 0.8, c: 0.6 })
            }
            _ => return None,
        })
    }

    pub fn dim(self) -> usize {
        match self {
            Experiment::Heat2dGaussian | Experiment::Heat2dMs | Experiment::BsSpots2d | Experiment::BsStripes2d => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    MaternSobolev,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Size {
    /// Interior point count, plus the default list for sweeps.
    Heat { n: usize, n_list: Vec<usize> },
    BulkSurface { n_bulk: usize, n_surf: usize },
}

/// Defaults of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub kernel: KernelKind,
    pub size: Size,
    pub dt: f64,
    /// Default time steps of a sweep.
    pub dt_list: Vec<f64>,
    pub epsilon: f64,
    /// `None` for the bulk-surface runs, which always use SBDF2.
    pub scheme: Option<Scheme>,
    pub greedy: bool,
    pub t_final: f64,
}
