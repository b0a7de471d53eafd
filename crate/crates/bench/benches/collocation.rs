use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use greedy_colloc::geometry::{fill_bulk, BulkDomain};
use greedy_colloc::greedy::select_subspace_new;
use greedy_colloc::kernels::{assemble_matrix, KernelSpec, Operator};
use greedy_colloc::linalg::QrFactor;
use greedy_colloc::timestep::{greedy_rhs, run_with_matrices, CollocationMatrices, HeatProblem, ManufacturedHeat, Scheme};
use greedy_colloc::Tolerances;
use nalgebra::DMatrix;

fn heat_problem(n: usize, dt: f64, t_final: f64) -> HeatProblem {
    let kernel = KernelSpec::matern_sobolev(6.0, 3.0, 2).unwrap();
    let ring = (n as f64).sqrt().ceil() as usize;
    let data = Arc::new(ManufacturedHeat { dim: 2, diffusion: 1.0 });
    HeatProblem::unit_square(n, ring, kernel, data, 1.0, dt, t_final).unwrap()
}

fn kernel_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    let spec = KernelSpec::matern_sobolev(6.0, 3.0, 2).unwrap();
    for n in [200, 500] {
        let points = fill_bulk(&BulkDomain::UnitSquare, n).unwrap();
        for op in [Operator::Value, Operator::Laplacian] {
            group.bench_with_input(BenchmarkId::new(format!("{op:?}"), n), &points, |b, p| {
                b.iter(|| assemble_matrix(&spec, black_box(p), p, op).unwrap())
            });
        }
    }
    group.finish();
}

fn qr_append(c: &mut Criterion) {
    let a = DMatrix::from_fn(400, 160, |i, j| ((i * 31 + j * 17) % 97) as f64 / 97.0 + if i == j { 2.0 } else { 0.0 });
    c.bench_function("qr_append_columns_400x160_by_32", |b| {
        b.iter(|| {
            let mut f = QrFactor::factor(&a.columns(0, 32).into_owned()).unwrap();
            for k in 1..5 {
                f = f.append_columns(&a.columns(32 * k, 32).into_owned()).unwrap();
            }
            black_box(f)
        })
    });
}

fn greedy_selection(c: &mut Criterion) {
    let problem = heat_problem(500, 0.01, 0.2);
    let mats = CollocationMatrices::for_problem(&problem).unwrap();
    let a = mats.system(Scheme::CrankNicolson, 0.01, 1.0);
    let rhs = greedy_rhs(&problem, Scheme::CrankNicolson);
    let tol = Tolerances::from_dt(0.01).unwrap();
    let mut group = c.benchmark_group("greedy");
    group.sample_size(10);
    group.bench_function("select_heat_n500", |b| b.iter(|| select_subspace_new(black_box(&a), &rhs, &tol).unwrap()));
    group.finish();
}

fn heat_steps(c: &mut Criterion) {
    let problem = heat_problem(300, 0.01, 0.1);
    let mats = CollocationMatrices::for_problem(&problem).unwrap();
    let mut group = c.benchmark_group("heat");
    group.sample_size(10);
    for scheme in [Scheme::CrankNicolson, Scheme::Sbdf2] {
        group.bench_function(format!("ten_steps_{scheme}_n300"), |b| {
            b.iter(|| run_with_matrices(black_box(&problem), &mats, scheme, None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernel_assembly, qr_append, greedy_selection, heat_steps);
criterion_main!(benches);
