//! Meshfree kernel collocation for parabolic PDEs with greedy trial-subspace
//! selection.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`] evaluates radial kernels (Matérn–Sobolev, Gaussian) and their
//!   analytic derivatives, and assembles dense collocation matrices.
//! * [`geometry`] generates Halton point clouds in bulk domains and on curves and
//!   surfaces, with normals and mean curvature from implicit definitions.
//! * [`linalg`] holds the updatable Householder QR used by the selector.
//! * [`greedy`] is the block-greedy column selector with both the classic and the
//!   time-step-matched stopping rules.
//! * [`timestep`] discretises the heat equation with Crank–Nicolson or SBDF1/2.
//! * [`bulksurface`] couples four reaction–diffusion fields in a bulk domain and
//!   on its boundary surface.

pub mod bulksurface;
pub mod error;
pub mod geometry;
pub mod greedy;
pub mod kernels;
pub mod linalg;
pub mod timestep;

pub use error::{Error, Result};
pub use geometry::{Point, PointCloud, PointLabel};
pub use greedy::{GreedySelection, Termination, Tolerances};
pub use kernels::{KernelFamily, KernelSpec, Operator};
pub use linalg::{LeastSquaresSolver, QrFactor};

/// Double-precision machine epsilon, 2⁻⁵².
pub const MACHINE_EPSILON: f64 = f64::EPSILON;
