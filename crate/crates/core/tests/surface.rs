use greedy_colloc::geometry::{fill_surface, PointCloud, SurfaceGeometry};
use greedy_colloc::kernels::{assemble_matrix, KernelSpec, Operator};
use nalgebra::DVector;

/// `L Phi^{-1} f` at the nodes: the surface Laplacian of the interpolant.
fn applied(spec: &KernelSpec, nodes: &PointCloud, f: &DVector<f64>) -> DVector<f64> {
    let phi = assemble_matrix(spec, nodes, nodes, Operator::Value).unwrap();
    let lap = assemble_matrix(spec, nodes, nodes, Operator::SurfaceLaplacian).unwrap();
    let coeffs = phi.lu().solve(f).expect("interpolation matrix is invertible");
    lap * coeffs
}

fn circle(n: usize) -> PointCloud {
    fill_surface(&SurfaceGeometry::Circle { radius: 1.0 }, n).unwrap()
}

fn sphere(n: usize) -> PointCloud {
    fill_surface(&SurfaceGeometry::Sphere { radius: 1.0 }, n).unwrap()
}

fn angle(nodes: &PointCloud, i: usize) -> f64 {
    let p = nodes.points()[i];
    p[1].atan2(p[0])
}

/// Largest nodal error of the surface Laplacian on the circle eigenfunction `cos k theta`.
fn circle_eigen_error(n: usize, k: u32) -> f64 {
    let spec = KernelSpec::matern_sobolev(6.0, 6.0, 2).unwrap();
    let nodes = circle(n);
    let kf = k as f64;
    let f = DVector::from_fn(n, |i, _| (kf * angle(&nodes, i)).cos());
    (applied(&spec, &nodes, &f) + &f * (kf * kf)).amax() / (kf * kf)
}

/// Same for the degree-one harmonic `z` on the unit sphere (eigenvalue -2).
fn sphere_eigen_error(n: usize) -> f64 {
    let spec = KernelSpec::matern_sobolev(6.0, 2.0, 3).unwrap();
    let nodes = sphere(n);
    let f = DVector::from_fn(n, |i, _| nodes.points()[i][2]);
    (applied(&spec, &nodes, &f) + &f * 2.0).amax() / 2.0
}

#[test]
fn constants_are_annihilated() {
    let spec = KernelSpec::matern_sobolev(6.0, 6.0, 2).unwrap();
    let nodes = circle(100);
    let err = applied(&spec, &nodes, &DVector::from_element(100, 1.0)).amax();
    assert!(err <= 1e-8, "circle: {err}");

    let spec = KernelSpec::matern_sobolev(6.0, 1.0, 3).unwrap();
    let nodes = sphere(400);
    let err = applied(&spec, &nodes, &DVector::from_element(400, 1.0)).amax();
    assert!(err <= 1e-8, "sphere: {err}");
}

#[test]
fn circle_harmonics_converge() {
    for k in 1..=4 {
        let coarse = circle_eigen_error(50, k);
        let fine = circle_eigen_error(100, k);
        assert!(fine < 0.5 * coarse, "k = {k}: {coarse:e} -> {fine:e}");
        assert!(fine < 1e-6, "k = {k}: {fine:e}");
    }
}

#[test]
fn sphere_harmonic_converges() {
    let coarse = sphere_eigen_error(200);
    let fine = sphere_eigen_error(400);
    assert!(fine < 0.5 * coarse, "{coarse:e} -> {fine:e}");
    assert!(fine < 1e-6, "{fine:e}");
}

#[test]
fn torus_constants_nearly_annihilated() {
    let geom = SurfaceGeometry::Torus { major: 1.0, minor: 0.5 };
    let spec = KernelSpec::matern_sobolev(6.0, 1.0, 3).unwrap();
    let nodes = fill_surface(&geom, 500).unwrap();
    let err = applied(&spec, &nodes, &DVector::from_element(500, 1.0)).amax();
    assert!(err <= 1e-4, "{err}");
}
