//! Radial kernels, their analytic derivatives, and dense matrix assembly.
//!
//! Every supported kernel is radial, so its derivatives w.r.t. the first argument
//! collapse to two scalar coefficients of `delta = x - y`:
//!
//! ```text
//! grad Phi = a(r) delta,    Hess Phi = a(r) I + c(r) delta delta^T
//! ```
//!
//! For the Matérn–Sobolev kernel `Phi(x) = g_nu(eps |x|)` with
//! `g_alpha(s) = s^alpha K_alpha(s)`, the identity `g_alpha' = -s g_{alpha-1}`
//! gives `a = -eps^2 g_{nu-1}(s)` and `c = eps^4 g_{nu-2}(s)`, both finite at
//! the origin.

mod bessel;

pub use bessel::bessel_k;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Radial kernel family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelFamily {
    /// Whittle–Matérn–Sobolev kernel reproducing `H^mu(R^d)`.
    MaternSobolev { mu: f64 },
    Gaussian,
}

/// A radial kernel with shape parameter and ambient dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    epsilon: f64,
    dim: usize,
}

/// Kernel value and derivatives with respect to the first argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelDerivativeBundle {
    pub dim: usize,
    pub value: f64,
    pub gradient: [f64; 3],
    pub laplacian: f64,
    pub hessian: [[f64; 3]; 3],
}

/// Differential operator applied to the first kernel argument during assembly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    Value,
    Laplacian,
    NormalDerivative,
    SurfaceLaplacian,
}

/// `(value, a, c)` for the radial decomposition described in the module docs.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RadialTerms {
    pub value: f64,
    pub a: f64,
    pub c: f64,
}

impl KernelSpec {
    pub fn matern_sobolev(mu: f64, epsilon: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::MaternSobolev { mu }, epsilon, dim)
    }

    pub fn gaussian(epsilon: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, epsilon, dim)
    }

    pub fn new(family: KernelFamily, epsilon: f64, dim: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidKernel(format!("dimension must be 2 or 3, got {dim}")));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidKernel(format!("shape parameter must be positive, got {epsilon}")));
        }
        if let KernelFamily::MaternSobolev { mu } = family {
            let nu = mu - dim as f64 / 2.0;
            if !(nu > 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "smoothness order {mu} gives nu = {nu} <= 0 in dimension {dim}"
                )));
            }
            if ((2.0 * nu) - (2.0 * nu).round()).abs() > 1e-12 {
                return Err(Error::UnsupportedOrder(nu));
            }
        }
        Ok(Self { family, epsilon, dim })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bessel order `mu - d/2` of a Matérn–Sobolev kernel.
    pub fn nu(&self) -> Option<f64> {
        match self.family {
            KernelFamily::MaternSobolev { mu } => Some(mu - self.dim as f64 / 2.0),
            KernelFamily::Gaussian => None,
        }
    }

    /// Same kernel with a different shape parameter.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.family, epsilon, self.dim)
    }

    /// Kernel value at the origin.
    pub fn diagonal(&self) -> f64 {
        self.radial(0.0).value
    }

    pub(crate) fn radial(&self, r2: f64) -> RadialTerms {
        let eps2 = self.epsilon * self.epsilon;
        match self.family {
            KernelFamily::Gaussian => {
                let value = (-eps2 * r2).exp();
                RadialTerms { value, a: -2.0 * eps2 * value, c: 4.0 * eps2 * eps2 * value }
            }
            KernelFamily::MaternSobolev { mu } => {
                let nu = mu - self.dim as f64 / 2.0;
                let s = self.epsilon * r2.sqrt();
                let value = bessel::scaled_profile(nu, s);
                let a = -eps2 * bessel::scaled_profile(nu - 1.0, s);
                // delta delta^T vanishes at the origin, so c is irrelevant there.
                let c = if s == 0.0 { 0.0 } else { eps2 * eps2 * bessel::scaled_profile(nu - 2.0, s) };
                RadialTerms { value, a, c }
            }
        }
    }

    fn delta(&self, x: &[f64], y: &[f64]) -> Result<([f64; 3], f64)> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(Error::Shape(format!(
                "kernel of dimension {} evaluated at points of length {} and {}",
                self.dim,
                x.len(),
                y.len()
            )));
        }
        let mut delta = [0.0; 3];
        let mut r2 = 0.0;
        for k in 0..self.dim {
            delta[k] = x[k] - y[k];
            r2 += delta[k] * delta[k];
        }
        Ok((delta, r2))
    }

    /// Value, gradient, Hessian and Laplacian of `Phi(x - y)` w.r.t. `x`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<KernelDerivativeBundle> {
        let (delta, r2) = self.delta(x, y)?;
        let t = self.radial(r2);
        if !t.a.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "kernel derivatives are unbounded at the origin for nu = {:?}",
                self.nu()
            )));
        }
        let mut gradient = [0.0; 3];
        let mut hessian = [[0.0; 3]; 3];
        for i in 0..self.dim {
            gradient[i] = t.a * delta[i];
            for j in 0..self.dim {
                hessian[i][j] = t.c * delta[i] * delta[j] + if i == j { t.a } else { 0.0 };
            }
        }
        let laplacian = (0..self.dim).map(|i| hessian[i][i]).sum();
        Ok(KernelDerivativeBundle { dim: self.dim, value: t.value, gradient, laplacian, hessian })
    }

    /// Surface Laplacian of `Phi(. - y)` at a surface point `x`, computed
    /// extrinsically as `tr H - n^T H n - kappa (n . grad Phi)`.
    pub fn surface_laplacian(&self, x: &[f64], normal: &[f64], mean_curvature: f64, y: &[f64]) -> Result<f64> {
        if normal.len() != self.dim {
            return Err(Error::Shape(format!("normal of length {} in dimension {}", normal.len(), self.dim)));
        }
        let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition(format!("normal must have unit length, got {norm}")));
        }
        let (delta, r2) = self.delta(x, y)?;
        let t = self.radial(r2);
        let dn: f64 = (0..self.dim).map(|k| delta[k] * normal[k]).sum();
        Ok(surface_laplacian_terms(&t, self.dim, r2, dn, mean_curvature))
    }
}

#[inline]
fn surface_laplacian_terms(t: &RadialTerms, dim: usize, r2: f64, dn: f64, curvature: f64) -> f64 {
    let laplacian = dim as f64 * t.a + t.c * r2;
    let normal_normal = t.a + t.c * dn * dn;
    laplacian - normal_normal - curvature * t.a * dn
}

/// Free-function form of [`KernelSpec::eval`].
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<KernelDerivativeBundle> {
    spec.eval(x, y)
}

/// Surface Laplacian of the kernel translate centred at `y_center`, evaluated at
/// `x_surface`.
pub fn surface_laplacian_kernel(
    spec: &KernelSpec,
    x_surface: &[f64],
    normal: &[f64],
    mean_curvature: f64,
    y_center: &[f64],
) -> Result<f64> {
    spec.surface_laplacian(x_surface, normal, mean_curvature, y_center)
}

/// Dense matrix with entry `(i, j) = (op Phi)(z_i - xi_j)`.
pub fn assemble_matrix(spec: &KernelSpec, rows: &PointCloud, cols: &PointCloud, op: Operator) -> Result<DMatrix<f64>> {
    let dim = spec.dim();
    if rows.dim() != dim || cols.dim() != dim {
        return Err(Error::Shape(format!(
            "kernel dimension {dim} does not match point clouds of dimension {} and {}",
            rows.dim(),
            cols.dim()
        )));
    }
    let m = rows.len();
    let n = cols.len();
    let normals = match op {
        Operator::NormalDerivative | Operator::SurfaceLaplacian => Some(
            rows.normals()
                .ok_or_else(|| Error::Assembly { row: 0, reason: "row points carry no normals".into() })?,
        ),
        _ => None,
    };
    let curvatures = match op {
        Operator::SurfaceLaplacian => Some(rows.mean_curvatures().ok_or_else(|| Error::Assembly {
            row: 0,
            reason: "row points carry no mean curvature".into(),
        })?),
        _ => None,
    };
    if op != Operator::Value && spec.radial(0.0).a.is_infinite() {
        return Err(Error::InvalidKernel("kernel is not twice differentiable at the origin".into()));
    }
    if let Some(normals) = normals {
        for (i, nrm) in normals.iter().enumerate() {
            let len = nrm[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            if (len - 1.0).abs() > 1e-10 {
                return Err(Error::Assembly { row: i, reason: format!("normal has length {len}") });
            }
        }
    }

    let row_pts = rows.points();
    let col_pts = cols.points();
    let mut data = vec![0.0; m * n];
    // column-major: one chunk per column
    data.par_chunks_mut(m.max(1)).enumerate().take(n).for_each(|(j, column)| {
        let y = &col_pts[j];
        for (i, entry) in column.iter_mut().enumerate() {
            let x = &row_pts[i];
            let mut delta = [0.0; 3];
            let mut r2 = 0.0;
            for k in 0..dim {
                delta[k] = x[k] - y[k];
                r2 += delta[k] * delta[k];
            }
            let t = spec.radial(r2);
            *entry = match op {
                Operator::Value => t.value,
                Operator::Laplacian => dim as f64 * t.a + t.c * r2,
                Operator::NormalDerivative => {
                    let nrm = &normals.unwrap()[i];
                    t.a * (0..dim).map(|k| delta[k] * nrm[k]).sum::<f64>()
                }
                Operator::SurfaceLaplacian => {
                    let nrm = &normals.unwrap()[i];
                    let dn: f64 = (0..dim).map(|k| delta[k] * nrm[k]).sum();
                    surface_laplacian_terms(&t, dim, r2, dn, curvatures.unwrap()[i])
                }
            };
        }
    });
    Ok(DMatrix::from_vec(m, n, data))
}
