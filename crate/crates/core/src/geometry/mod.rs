//! Point clouds: Halton bulk fills, parameterised surface samples with
//! analytic normals and mean curvature, and CSV serialisation.

mod csv;
mod halton;
mod surface;

pub use self::csv::{read_point_cloud_csv, write_point_cloud_csv};
pub use halton::halton;
pub use surface::{implicit_surface_data, SurfaceGeometry};

use crate::error::{Error, Result};

/// A point in up to three dimensions; unused trailing coordinates are zero.
pub type Point = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointLabel {
    Interior,
    /// Domain boundary or surface point.
    Boundary,
}

impl PointLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointLabel::Interior => "interior",
            PointLabel::Boundary => "boundary",
        }
    }
}

/// Ordered point set with optional unit normals and mean curvatures.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<Point>,
    labels: Vec<PointLabel>,
    normals: Option<Vec<Point>>,
    mean_curvatures: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<Point>, labels: Vec<PointLabel>) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Shape(format!("point cloud dimension must be 2 or 3, got {dim}")));
        }
        if labels.len() != points.len() {
            return Err(Error::Shape(format!("{} labels for {} points", labels.len(), points.len())));
        }
        if let Some((i, _)) = points.iter().enumerate().find(|(_, p)| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Geometry(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { dim, points, labels, normals: None, mean_curvatures: None })
    }

    /// All points share one label.
    pub fn uniform(dim: usize, points: Vec<Point>, label: PointLabel) -> Result<Self> {
        let labels = vec![label; points.len()];
        Self::new(dim, points, labels)
    }

    pub fn with_normals(mut self, normals: Vec<Point>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(Error::Shape(format!("{} normals for {} points", normals.len(), self.points.len())));
        }
        for (i, n) in normals.iter().enumerate() {
            let len = n.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (len - 1.0).abs() > 1e-10 {
                return Err(Error::Geometry(format!("normal {i} has length {len}")));
            }
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn with_mean_curvatures(mut self, curvatures: Vec<f64>) -> Result<Self> {
        if curvatures.len() != self.points.len() {
            return Err(Error::Shape(format!(
                "{} curvatures for {} points",
                curvatures.len(),
                self.points.len()
            )));
        }
        self.mean_curvatures = Some(curvatures);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// The first `dim` coordinates of point `i`.
    pub fn coords(&self, i: usize) -> &[f64] {
        &self.points[i][..self.dim]
    }

    pub fn labels(&self) -> &[PointLabel] {
        &self.labels
    }

    pub fn normals(&self) -> Option<&[Point]> {
        self.normals.as_deref()
    }

    pub fn mean_curvatures(&self) -> Option<&[f64]> {
        self.mean_curvatures.as_deref()
    }

    /// Points at `indices`, in that order, with their attached data.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Shape(format!("index {bad} out of range for {} points", self.len())));
        }
        Ok(Self {
            dim: self.dim,
            points: indices.iter().map(|&i| self.points[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            normals: self.normals.as_ref().map(|n| indices.iter().map(|&i| n[i]).collect()),
            mean_curvatures: self.mean_curvatures.as_ref().map(|h| indices.iter().map(|&i| h[i]).collect()),
        })
    }

    /// Concatenation; normals and curvatures survive only if both sides carry them.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!("cannot join {}D and {}D clouds", self.dim, other.dim)));
        }
        let join = |a: Option<&[Point]>, b: Option<&[Point]>| match (a, b) {
            (Some(a), Some(b)) => Some([a, b].concat()),
            _ => None,
        };
        Ok(Self {
            dim: self.dim,
            points: [self.points.as_slice(), other.points.as_slice()].concat(),
            labels: [self.labels.as_slice(), other.labels.as_slice()].concat(),
            normals: join(self.normals(), other.normals()),
            mean_curvatures: match (self.mean_curvatures(), other.mean_curvatures()) {
                (Some(a), Some(b)) => Some([a, b].concat()),
                _ => None,
            },
        })
    }

    /// Indices carrying `label`, in order.
    pub fn indices_with(&self, label: PointLabel) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    /// Smallest pairwise distance (infinite for fewer than two points).
    pub fn separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.min(distance(&self.points[i], &self.points[j]));
            }
        }
        best
    }
}

pub(crate) fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Bulk domains filled by bounding-box Halton rejection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BulkDomain {
    UnitSquare,
    UnitCube,
    /// Open unit disk centred at the origin.
    UnitDisk,
    TorusInterior { major: f64, minor: f64 },
    EllipsoidInterior { a: f64, b: f64, c: f64 },
    CyclideInterior { a: f64, b: f64, d: f64 },
}

impl BulkDomain {
    pub fn dim(&self) -> usize {
        match self {
            BulkDomain::UnitSquare | BulkDomain::UnitDisk => 2,
            _ => 3,
        }
    }

    /// Surface bounding the domain, where it is smooth.
    pub fn boundary(&self) -> Option<SurfaceGeometry> {
        match *self {
            BulkDomain::UnitSquare => Some(SurfaceGeometry::SquareBoundary),
            BulkDomain::UnitCube => None,
            BulkDomain::UnitDisk => Some(SurfaceGeometry::Circle { radius: 1.0 }),
            BulkDomain::TorusInterior { major, minor } => Some(SurfaceGeometry::Torus { major, minor }),
            BulkDomain::EllipsoidInterior { a, b, c } => Some(SurfaceGeometry::Ellipsoid { a, b, c }),
            BulkDomain::CyclideInterior { a, b, d } => Some(SurfaceGeometry::DupinCyclide { a, b, d }),
        }
    }

    fn validate(&self) -> Result<()> {
        match self.boundary() {
            Some(surface) => surface.validate(),
            None => Ok(()),
        }
    }

    fn bounding_box(&self) -> (Point, Point) {
        match *self {
            BulkDomain::UnitSquare | BulkDomain::UnitCube => ([0.0; 3], [1.0; 3]),
            BulkDomain::UnitDisk => ([-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]),
            _ => self.boundary().expect("curved domain").bounding_box(),
        }
    }

    /// Strict interior test.
    pub fn contains(&self, p: &Point) -> bool {
        match *self {
            BulkDomain::UnitSquare => p[..2].iter().all(|&v| v > 0.0 && v < 1.0),
            BulkDomain::UnitCube => p.iter().all(|&v| v > 0.0 && v < 1.0),
            BulkDomain::UnitDisk => p[0] * p[0] + p[1] * p[1] < 1.0,
            _ => self.boundary().expect("curved domain").implicit_value(p) < 0.0,
        }
    }
}

/// The first `count` Halton points of the domain's bounding box that lie
/// strictly inside it, labelled interior.
pub fn fill_bulk(domain: &BulkDomain, count: usize) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::Parameter("point count must be at least 1".into()));
    }
    domain.validate()?;
    let dim = domain.dim();
    let (lo, hi) = domain.bounding_box();
    let mut points = Vec::with_capacity(count);
    let mut index = 1u64;
    while points.len() < count {
        let h = halton(index, dim)?;
        let mut p = [0.0; 3];
        for k in 0..dim {
            p[k] = lo[k] + (hi[k] - lo[k]) * h[k];
        }
        if domain.contains(&p) {
            points.push(p);
        }
        index += 1;
        if index > 1_000_000_000 {
            return Err(Error::Geometry("rejection sampling made no progress".into()));
        }
    }
    PointCloud::uniform(dim, points, PointLabel::Interior)
}

/// `count` points sampled on the surface, each with unit outward normal and
/// mean curvature (sum of principal curvatures).
pub fn fill_surface(geom: &SurfaceGeometry, count: usize) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::Parameter("point count must be at least 1".into()));
    }
    geom.validate()?;
    let points = geom.sample(count)?;
    let mut normals = Vec::with_capacity(count);
    let mut curvatures = Vec::with_capacity(count);
    for p in &points {
        let (n, h) = geom.normal_and_curvature(p)?;
        normals.push(n);
        curvatures.push(h);
    }
    PointCloud::uniform(geom.dim(), points, PointLabel::Boundary)?
        .with_normals(normals)?
        .with_mean_curvatures(curvatures)
}

/// `per_side` equally spaced points on each edge of the unit square, corners
/// included once, traversed counter-clockwise from the origin.
pub fn square_boundary_ring(per_side: usize) -> Result<PointCloud> {
    if per_side == 0 {
        return Err(Error::Parameter("boundary ring needs at least one point per side".into()));
    }
    let step = 1.0 / per_side as f64;
    let mut points = Vec::with_capacity(4 * per_side);
    for j in 0..per_side {
        points.push([j as f64 * step, 0.0, 0.0]);
    }
    for j in 0..per_side {
        points.push([1.0, j as f64 * step, 0.0]);
    }
    for j in 0..per_side {
        points.push([1.0 - j as f64 * step, 1.0, 0.0]);
    }
    for j in 0..per_side {
        points.push([0.0, 1.0 - j as f64 * step, 0.0]);
    }
    PointCloud::uniform(2, points, PointLabel::Boundary)
}

/// Tensor grid with `per_edge + 1` nodes per edge on the faces of the unit cube.
pub fn cube_boundary_grid(per_edge: usize) -> Result<PointCloud> {
    if per_edge == 0 {
        return Err(Error::Parameter("cube boundary grid needs at least one cell per edge".into()));
    }
    let step = 1.0 / per_edge as f64;
    let mut points = Vec::new();
    for i in 0..=per_edge {
        for j in 0..=per_edge {
            for k in 0..=per_edge {
                let on_face = [i, j, k].iter().any(|&t| t == 0 || t == per_edge);
                if on_face {
                    points.push([i as f64 * step, j as f64 * step, k as f64 * step]);
                }
            }
        }
    }
    PointCloud::uniform(3, points, PointLabel::Boundary)
}
