use std::f64::consts::PI;

use super::{halton, Point};
use crate::error::{Error, Result};

const ON_SURFACE_TOL: f64 = 1e-8;
const MIN_GRADIENT: f64 = 1e-12;

/// Closed surfaces given as zero sets of an implicit function `F`, with the
/// interior at `F < 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurfaceGeometry {
    Circle { radius: f64 },
    Sphere { radius: f64 },
    /// `(|x|^2 + R^2 - r^2)^2 = 4 R^2 (x^2 + y^2)`
    Torus { major: f64, minor: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// Ring cyclide `(|x|^2 + b^2 - d^2)^2 = 4 (a x - c d)^2 + 4 b^2 y^2`
    /// with `c = sqrt(a^2 - b^2) < d < a`.
    DupinCyclide { a: f64, b: f64, d: f64 },
    /// Boundary of the unit square; smooth except at the corners.
    SquareBoundary,
}

type Hessian = [[f64; 3]; 3];

impl SurfaceGeometry {
    pub fn dim(&self) -> usize {
        match self {
            SurfaceGeometry::Circle { .. } | SurfaceGeometry::SquareBoundary => 2,
            _ => 3,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        match *self {
            SurfaceGeometry::Circle { radius } | SurfaceGeometry::Sphere { radius } if !(radius > 0.0) => {
                bad(format!("radius must be positive, got {radius}"))
            }
            SurfaceGeometry::Torus { major, minor } if !(minor > 0.0 && minor < major) => {
                bad(format!("torus needs 0 < r < R, got R = {major}, r = {minor}"))
            }
            SurfaceGeometry::Ellipsoid { a, b, c } if !(a > 0.0 && b > 0.0 && c > 0.0) => {
                bad(format!("ellipsoid semi-axes must be positive, got ({a}, {b}, {c})"))
            }
            SurfaceGeometry::DupinCyclide { a, b, d } => {
                if !(b > 0.0 && b < a) {
                    return bad(format!("cyclide needs 0 < b < a, got a = {a}, b = {b}"));
                }
                let c = (a * a - b * b).sqrt();
                if !(c < d && d < a) {
                    return bad(format!("ring cyclide needs c < d < a, got c = {c}, d = {d}, a = {a}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `F`, `grad F` and `Hess F` at `p`.
    pub(crate) fn implicit(&self, p: &Point) -> (f64, Point, Hessian) {
        let [x, y, z] = *p;
        let r2 = x * x + y * y + z * z;
        let mut hess = [[0.0; 3]; 3];
        match *self {
            SurfaceGeometry::Circle { radius } | SurfaceGeometry::Sphere { radius } => {
                let dim = self.dim();
                for (k, row) in hess.iter_mut().enumerate().take(dim) {
                    row[k] = 2.0;
                }
                let mut grad = [2.0 * x, 2.0 * y, 2.0 * z];
                if dim == 2 {
                    grad[2] = 0.0;
                }
                let value = grad.iter().map(|g| 0.25 * g * g).sum::<f64>() - radius * radius;
                (value, grad, hess)
            }
            SurfaceGeometry::Torus { major, minor } => {
                let big2 = major * major;
                let s = r2 + big2 - minor * minor;
                let value = s * s - 4.0 * big2 * (x * x + y * y);
                let grad = [4.0 * s * x - 8.0 * big2 * x, 4.0 * s * y - 8.0 * big2 * y, 4.0 * s * z];
                for i in 0..3 {
                    for j in 0..3 {
                        hess[i][j] = 8.0 * p[i] * p[j];
                    }
                    hess[i][i] += 4.0 * s;
                }
                hess[0][0] -= 8.0 * big2;
                hess[1][1] -= 8.0 * big2;
                (value, grad, hess)
            }
            SurfaceGeometry::Ellipsoid { a, b, c } => {
                let inv = [1.0 / (a * a), 1.0 / (b * b), 1.0 / (c * c)];
                let value = x * x * inv[0] + y * y * inv[1] + z * z * inv[2] - 1.0;
                let grad = [2.0 * x * inv[0], 2.0 * y * inv[1], 2.0 * z * inv[2]];
                for k in 0..3 {
                    hess[k][k] = 2.0 * inv[k];
                }
                (value, grad, hess)
            }
            SurfaceGeometry::DupinCyclide { a, b, d } => {
                let c = (a * a - b * b).sqrt();
                let s = r2 + b * b - d * d;
                let lin = a * x - c * d;
                let value = s * s - 4.0 * lin * lin - 4.0 * b * b * y * y;
                let grad = [4.0 * s * x - 8.0 * a * lin, 4.0 * s * y - 8.0 * b * b * y, 4.0 * s * z];
                for i in 0..3 {
                    for j in 0..3 {
                        hess[i][j] = 8.0 * p[i] * p[j];
                    }
                    hess[i][i] += 4.0 * s;
                }
                hess[0][0] -= 8.0 * a * a;
                hess[1][1] -= 8.0 * b * b;
                (value, grad, hess)
            }
            SurfaceGeometry::SquareBoundary => {
                let dx = (x - 0.5).abs();
                let dy = (y - 0.5).abs();
                let grad = if dx >= dy { [(x - 0.5).signum(), 0.0, 0.0] } else { [0.0, (y - 0.5).signum(), 0.0] };
                (dx.max(dy) - 0.5, grad, hess)
            }
        }
    }

    pub(crate) fn implicit_value(&self, p: &Point) -> f64 {
        self.implicit(p).0
    }

    pub(crate) fn bounding_box(&self) -> (Point, Point) {
        match *self {
            SurfaceGeometry::Circle { radius } => ([-radius, -radius, 0.0], [radius, radius, 0.0]),
            SurfaceGeometry::Sphere { radius } => ([-radius; 3], [radius; 3]),
            SurfaceGeometry::Torus { major, minor } => {
                let e = major + minor;
                ([-e, -e, -minor], [e, e, minor])
            }
            SurfaceGeometry::Ellipsoid { a, b, c } => ([-a, -b, -c], [a, b, c]),
            SurfaceGeometry::DupinCyclide { .. } => {
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                let steps = 256;
                for i in 0..steps {
                    for j in 0..steps {
                        let u = 2.0 * PI * i as f64 / steps as f64;
                        let v = 2.0 * PI * j as f64 / steps as f64;
                        let p = self.cyclide_point(u, v);
                        for k in 0..3 {
                            lo[k] = lo[k].min(p[k]);
                            hi[k] = hi[k].max(p[k]);
                        }
                    }
                }
                for k in 0..3 {
                    let pad = 0.02 * (hi[k] - lo[k]);
                    lo[k] -= pad;
                    hi[k] += pad;
                }
                (lo, hi)
            }
            SurfaceGeometry::SquareBoundary => ([0.0; 3], [1.0, 1.0, 0.0]),
        }
    }

    fn cyclide_point(&self, u: f64, v: f64) -> Point {
        let SurfaceGeometry::DupinCyclide { a, b, d } = *self else {
            unreachable!("cyclide parameterisation on another surface")
        };
        let c = (a * a - b * b).sqrt();
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        let den = a - c * cu * cv;
        [
            (d * (c - a * cu * cv) + b * b * cu) / den,
            b * su * (a - d * cv) / den,
            b * sv * (c * cu - d) / den,
        ]
    }

    /// Newton steps along the gradient back onto `F = 0`.
    fn project(&self, mut p: Point) -> Point {
        for _ in 0..4 {
            let (f, g, _) = self.implicit(&p);
            let g2: f64 = g.iter().map(|v| v * v).sum();
            if g2 == 0.0 || f == 0.0 {
                break;
            }
            for k in 0..3 {
                p[k] -= f * g[k] / g2;
            }
        }
        p
    }

    pub(crate) fn sample(&self, count: usize) -> Result<Vec<Point>> {
        let angles = |i: usize| -> Result<(f64, f64)> {
            let h = halton(i as u64 + 1, 2)?;
            Ok((h[0], h[1]))
        };
        let mut points = Vec::with_capacity(count);
        for i in 0..count {
            let p = match *self {
                SurfaceGeometry::Circle { radius } => {
                    let (s, c) = (2.0 * PI * i as f64 / count as f64).sin_cos();
                    [radius * c, radius * s, 0.0]
                }
                SurfaceGeometry::SquareBoundary => {
                    // offset by half a spacing so no sample sits on a corner
                    let t = 4.0 * (i as f64 + 0.5) / count as f64;
                    let side = t.floor();
                    let f = t - side;
                    match side as u32 {
                        0 => [f, 0.0, 0.0],
                        1 => [1.0, f, 0.0],
                        2 => [1.0 - f, 1.0, 0.0],
                        _ => [0.0, 1.0 - f, 0.0],
                    }
                }
                SurfaceGeometry::Sphere { radius } => {
                    let (h0, h1) = angles(i)?;
                    let p = sphere_point(h0, h1);
                    self.project([radius * p[0], radius * p[1], radius * p[2]])
                }
                SurfaceGeometry::Ellipsoid { a, b, c } => {
                    let (h0, h1) = angles(i)?;
                    let p = sphere_point(h0, h1);
                    self.project([a * p[0], b * p[1], c * p[2]])
                }
                SurfaceGeometry::Torus { major, minor } => {
                    let (h0, h1) = angles(i)?;
                    let (st, ct) = (2.0 * PI * h0).sin_cos();
                    let (sp, cp) = (2.0 * PI * h1).sin_cos();
                    let rho = major + minor * cp;
                    self.project([rho * ct, rho * st, minor * sp])
                }
                SurfaceGeometry::DupinCyclide { .. } => {
                    let (h0, h1) = angles(i)?;
                    self.project(self.cyclide_point(2.0 * PI * h0, 2.0 * PI * h1))
                }
            };
            points.push(p);
        }
        Ok(points)
    }

    /// Unit normal `grad F / |grad F|` and mean curvature `div n` at a point
    /// on the surface.
    pub(crate) fn normal_and_curvature(&self, p: &Point) -> Result<(Point, f64)> {
        let (_, g, h) = self.implicit(p);
        let dim = self.dim();
        if let SurfaceGeometry::SquareBoundary = self {
            let dx = (p[0] - 0.5).abs();
            let dy = (p[1] - 0.5).abs();
            if (dx - dy).abs() < 1e-12 {
                return Err(Error::Geometry(format!("normal undefined at square corner ({}, {})", p[0], p[1])));
            }
            return Ok((g, 0.0));
        }
        let g2: f64 = g[..dim].iter().map(|v| v * v).sum();
        let gn = g2.sqrt();
        if gn < MIN_GRADIENT {
            return Err(Error::Geometry(format!("implicit gradient vanishes at {p:?}")));
        }
        let lap: f64 = (0..dim).map(|k| h[k][k]).sum();
        let mut ghg = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                ghg += g[i] * h[i][j] * g[j];
            }
        }
        let mut normal = [0.0; 3];
        for k in 0..dim {
            normal[k] = g[k] / gn;
        }
        Ok((normal, (lap * g2 - ghg) / (g2 * gn)))
    }
}

/// Area-uniform map of the unit square onto the unit sphere.
fn sphere_point(h0: f64, h1: f64) -> Point {
    let z = 1.0 - 2.0 * h0;
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = (2.0 * PI * h1).sin_cos();
    [rho * c, rho * s, z]
}

/// Unit normal and mean curvature of `geom` at `x`, which must lie on the
/// surface (`|F(x)| <= 1e-8`).
pub fn implicit_surface_data(geom: &SurfaceGeometry, x: &[f64]) -> Result<(Point, f64)> {
    let dim = geom.dim();
    if x.len() != dim {
        return Err(Error::Shape(format!("expected a {dim}D point, got length {}", x.len())));
    }
    let mut p = [0.0; 3];
    p[..dim].copy_from_slice(x);
    let f = geom.implicit_value(&p);
    if f.abs() > ON_SURFACE_TOL {
        return Err(Error::Precondition(format!("point {x:?} is off the surface (F = {f:e})")));
    }
    geom.normal_and_curvature(&p)
}
