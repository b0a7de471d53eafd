use greedy_colloc::linalg::{cond_estimate, prefix_residual_scan, LeastSquaresSolver, QrFactor};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Tall matrix plus a plan of how to grow it: `(initial cols, [(add_rows, add_cols)])`.
#[derive(Debug, Clone)]
struct GrowthPlan {
    entries: Vec<f64>,
    m: usize,
    n: usize,
    start_rows: usize,
    start_cols: usize,
    steps: Vec<(usize, usize)>,
}

fn growth_plan() -> impl Strategy<Value = GrowthPlan> {
    (2usize..8, 1usize..4, prop::collection::vec((0usize..5, 0usize..4), 1..5)).prop_flat_map(
        |(start_cols, start_extra, steps)| {
            let start_rows = start_cols + start_extra;
            // Keep the system tall after every step.
            let mut rows = start_rows;
            let mut cols = start_cols;
            let mut plan = Vec::new();
            for (dr, dc) in steps {
                let dc = dc.min(rows + dr - cols);
                rows += dr;
                cols += dc;
                plan.push((dr, dc));
            }
            let (m, n) = (rows, cols);
            prop::collection::vec(-1.0f64..1.0, m * n).prop_map(move |entries| GrowthPlan {
                entries,
                m,
                n,
                start_rows,
                start_cols,
                steps: plan.clone(),
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn incremental_factor_matches_batch(plan in growth_plan()) {
        let full = DMatrix::from_row_slice(plan.m, plan.n, &plan.entries);
        let (mut rows, mut cols) = (plan.start_rows, plan.start_cols);
        let mut f = QrFactor::factor(&full.view((0, 0), (rows, cols)).into_owned()).unwrap();
        for &(dr, dc) in &plan.steps {
            if dr > 0 {
                f = f.append_rows(&full.view((rows, 0), (dr, cols)).into_owned()).unwrap();
                rows += dr;
            }
            if dc > 0 {
                f = f.append_columns(&full.view((0, cols), (rows, dc)).into_owned()).unwrap();
                cols += dc;
            }
        }
        let a = full.view((0, 0), (rows, cols)).into_owned();
        prop_assume!(cond_estimate(&QrFactor::factor(&a).unwrap()) < 1e6);
        let batch = a.clone().qr();
        let mut r_batch = batch.r();
        for i in 0..cols {
            if r_batch[(i, i)] < 0.0 {
                r_batch.row_mut(i).neg_mut();
            }
        }
        prop_assert!(rel_diff(&f.r(), &r_batch) <= 1e-10, "R differs by {}", rel_diff(&f.r(), &r_batch));
        let q = f.thin_q();
        prop_assert!(rel_diff(&(&q * f.r()), &a) <= 1e-10);
        prop_assert!((q.transpose() * &q - DMatrix::identity(cols, cols)).norm() <= 1e-12 * cols as f64);
    }

    #[test]
    fn prefix_residual_two_norm_never_increases(
        (m, n, entries, rhs) in (3usize..20).prop_flat_map(|m| (Just(m), 1..=m)).prop_flat_map(|(m, n)| {
            (Just(m), Just(n), prop::collection::vec(-1.0f64..1.0, m * n), prop::collection::vec(-1.0f64..1.0, m))
        })
    ) {
        let a = DMatrix::from_row_slice(m, n, &entries);
        let b = DVector::from_vec(rhs);
        let scan = prefix_residual_scan(&a, &b, 1, n).unwrap();
        for w in scan.windows(2) {
            prop_assert!(w[1].two_norm <= w[0].two_norm * (1.0 + 1e-12) + 1e-14);
        }
    }

    #[test]
    fn explicit_solver_agrees_with_factor(
        (m, n, entries, rhs) in (2usize..16).prop_flat_map(|m| (Just(m), 1..=m)).prop_flat_map(|(m, n)| {
            (Just(m), Just(n), prop::collection::vec(-1.0f64..1.0, m * n), prop::collection::vec(-1.0f64..1.0, m))
        })
    ) {
        let a = DMatrix::from_row_slice(m, n, &entries);
        let b = DVector::from_vec(rhs);
        let f = QrFactor::factor(&a).unwrap();
        prop_assume!(cond_estimate(&f) < 1e6);
        let x = f.ls_solve(&b).unwrap();
        let y = LeastSquaresSolver::from_factor(&f).solve(&b).unwrap();
        prop_assert!((&x - &y).norm() <= 1e-10 * x.norm().max(1.0));
        // Normal equations hold at the least-squares solution.
        let normal = a.transpose() * (&a * &x - &b);
        prop_assert!(normal.norm() <= 1e-10 * a.norm() * b.norm().max(1.0));
    }
}

fn oracle_matrix() -> DMatrix<f64> {
    DMatrix::from_fn(9, 5, |i, j| 1.0 / (i + 2 * j + 1) as f64 + ((3 * i + 5 * j) % 7) as f64 / 8.0)
}

// Both solutions from a 50-digit evaluation of the normal equations.
const LS_ORACLE: [f64; 5] = [
    -0.338_834_458_115_308_523_4,
    0.344_729_181_993_122_595_79,
    0.294_892_330_323_820_880_37,
    0.799_503_791_770_749_189_21,
    0.303_503_840_174_633_727_97,
];
const MIN_NORM_ORACLE: [f64; 9] = [
    0.458_345_702_782_439_426_06,
    0.424_869_412_845_986_597,
    0.821_913_159_461_614_320_7,
    0.081_065_648_553_006_538_188,
    0.236_958_328_921_278_559_61,
    0.296_970_536_884_029_792_65,
    0.189_523_295_888_860_655_03,
    -0.844_150_387_332_381_130_25,
    -0.122_337_915_601_222_143_63,
];

#[test]
fn least_squares_matches_oracle() {
    let a = oracle_matrix();
    let b = DVector::from_fn(9, |i, _| (i + 1) as f64 / (i + 3) as f64);
    let x = QrFactor::factor(&a).unwrap().ls_solve(&b).unwrap();
    let want = DVector::from_row_slice(&LS_ORACLE);
    assert!((&x - &want).norm() <= 1e-8 * want.norm(), "{x}");
}

#[test]
fn minimum_norm_matches_oracle() {
    let a = oracle_matrix();
    let rhs = DVector::from_fn(5, |j, _| (j + 2) as f64 / (2 * j + 1) as f64);
    let z = QrFactor::factor(&a).unwrap().minnorm_solve(&rhs).unwrap();
    let want = DVector::from_row_slice(&MIN_NORM_ORACLE);
    assert!((&z - &want).norm() <= 1e-8 * want.norm(), "{z}");
    assert!((a.transpose() * &z - &rhs).norm() <= 1e-12 * rhs.norm());
}

#[test]
fn rows_then_columns_equals_columns_then_rows() {
    let a = oracle_matrix();
    let top = a.view((0, 0), (6, 3)).into_owned();
    let one = QrFactor::factor(&top)
        .unwrap()
        .append_rows(&a.view((6, 0), (3, 3)).into_owned())
        .unwrap()
        .append_columns(&a.view((0, 3), (9, 2)).into_owned())
        .unwrap();
    let two = QrFactor::factor(&a.view((0, 0), (6, 5)).into_owned())
        .unwrap()
        .append_rows(&a.view((6, 0), (3, 5)).into_owned())
        .unwrap();
    assert!(rel_diff(&one.r(), &two.r()) <= 1e-12);
}
