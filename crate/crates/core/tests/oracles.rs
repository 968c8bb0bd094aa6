//! Independent oracles: nalgebra eigendecomposition, brute-force split
//! search, the closed-form rank correlation and a hand-written tree walk.

mod common;

use bvqa::evaluation::{srocc, PredictionPairs};
use bvqa::feature_selection::{label_variance, rft_loss, run_rft, PartitionGrid};
use bvqa::linalg::{covariance, symmetric_eigen};
use bvqa::regression::{train_gbdt, train_gbdt_traced, GbdtModel, Node, TrainConfig};
use bvqa::representations::Kind;
use bvqa::tensor::Matrix;
use bvqa::transforms::saab::{fit_saab, SaabGeometry, Window};
use common::{random_vec, rng};
use nalgebra::DMatrix;
use rand::Rng;

fn random_symmetric(n: usize, seed: u64) -> Matrix<f64> {
    let mut r = rng(seed);
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = r.random_range(-1.0..1.0);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

#[test]
fn eigendecomposition_matches_nalgebra() {
    for (n, seed) in [(1, 0), (2, 1), (5, 2), (17, 3), (40, 4)] {
        let m = random_symmetric(n, seed);
        let ours = symmetric_eigen(&m).unwrap();
        let oracle = DMatrix::from_row_slice(n, n, &m.data).symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            oracle.eigenvalues[b]
                .partial_cmp(&oracle.eigenvalues[a])
                .unwrap()
        });
        for (k, &o) in order.iter().enumerate() {
            assert!((ours.values[k] - oracle.eigenvalues[o]).abs() < 1e-9);
            let dot: f64 = (0..n)
                .map(|i| ours.vectors.get(k, i) * oracle.eigenvectors[(i, o)])
                .sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8, "n={n} k={k} dot={dot}");
        }
    }
}

#[test]
fn saab_ac_kernels_are_covariance_eigenvectors() {
    let g = SaabGeometry::new(Window::square(3), Window::square(1), 1);
    let mut r = rng(9);
    let rows: Vec<Vec<f64>> = (0..400)
        .map(|_| {
            let base = random_vec(&mut r, 9);
            base.iter()
                .enumerate()
                .map(|(i, v)| v * (1.0 + i as f64) + 3.0)
                .collect()
        })
        .collect();
    let patches = Matrix::from_rows(&rows).unwrap();
    let saab = fit_saab(&patches, g, 8).unwrap();

    // Oracle: eigenvectors of the covariance of mean-removed patches.
    let centred: Vec<f64> = rows
        .iter()
        .flat_map(|p| {
            let m = p.iter().sum::<f64>() / 9.0;
            p.iter().map(move |v| v - m)
        })
        .collect();
    let (_, cov) = covariance(&Matrix::from_vec(400, 9, centred).unwrap()).unwrap();
    let oracle = DMatrix::from_row_slice(9, 9, &cov.data).symmetric_eigen();
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&a, &b| {
        oracle.eigenvalues[b]
            .partial_cmp(&oracle.eigenvalues[a])
            .unwrap()
    });
    for k in 0..8 {
        let o = order[k];
        assert!((saab.explained_variance[k] - oracle.eigenvalues[o]).abs() < 1e-9);
        let dot: f64 = (0..9)
            .map(|i| saab.ac.get(k, i) * oracle.eigenvectors[(i, o)])
            .sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8, "kernel {k}: {dot}");
    }

    // AC responses of the training patches are decorrelated.
    let coeffs: Vec<f64> = rows
        .iter()
        .flat_map(|p| {
            let mut out = vec![0.0; 9];
            saab.transform_patch(p, &mut out);
            out.into_iter().skip(1)
        })
        .collect();
    let (_, c) = covariance(&Matrix::from_vec(400, 8, coeffs).unwrap()).unwrap();
    let scale = c.get(0, 0);
    for i in 0..8 {
        for j in 0..8 {
            if i != j {
                assert!(c.get(i, j).abs() <= 1e-6 * scale);
            }
        }
    }
}

/// O(n^2) split search over every distinct value as a `<=` threshold.
fn brute_force_loss(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut best = label_variance(y);
    for &t in x {
        let ly: Vec<f64> = x
            .iter()
            .zip(y)
            .filter(|p| *p.0 <= t)
            .map(|p| *p.1)
            .collect();
        let ry: Vec<f64> = x.iter().zip(y).filter(|p| *p.0 > t).map(|p| *p.1).collect();
        if ly.is_empty() || ry.is_empty() {
            continue;
        }
        let loss =
            (ly.len() as f64 * label_variance(&ly) + ry.len() as f64 * label_variance(&ry)) / n;
        best = best.min(loss);
    }
    best
}

#[test]
fn exhaustive_rft_matches_brute_force() {
    let mut r = rng(21);
    for inst in 0..50 {
        let n = r.random_range(2..=200);
        let cols = 6;
        let y: Vec<f64> = (0..n).map(|_| r.random_range(0.0..100.0)).collect();
        let data: Vec<f64> = (0..n * cols)
            .map(|_| (r.random_range(0.0..20.0f64)).round())
            .collect();
        let m = Matrix::from_vec(n, cols, data).unwrap();
        let res = run_rft(&m, &y, Kind::Spatial, PartitionGrid::Exhaustive).unwrap();
        let oracle: Vec<f64> = (0..cols)
            .map(|j| brute_force_loss(&m.column(j), &y))
            .collect();
        for j in 0..cols {
            assert!(
                (res.losses[j] - oracle[j]).abs() < 1e-9 * (1.0 + oracle[j]),
                "instance {inst}"
            );
        }
        for w in res.ranking.windows(2) {
            assert!(oracle[w[0]] <= oracle[w[1]] + 1e-9);
        }
    }
}

#[test]
fn uniform_grid_is_never_better_than_exhaustive() {
    let mut r = rng(22);
    for _ in 0..100 {
        let n = r.random_range(2..=100);
        let x = random_vec(&mut r, n);
        let y = random_vec(&mut r, n);
        let u = rft_loss(&x, &y, PartitionGrid::Uniform(16));
        let e = rft_loss(&x, &y, PartitionGrid::Exhaustive);
        assert!(e <= u + 1e-12 && u <= label_variance(&y) + 1e-12);
    }
}

#[test]
fn srocc_matches_closed_form_for_distinct_values() {
    let mut r = rng(5);
    for _ in 0..100 {
        let n = r.random_range(3..60);
        let a = random_vec(&mut r, n);
        let b = random_vec(&mut r, n);
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|x| v.iter().filter(|y| *y < x).count() as f64 + 1.0)
                .collect()
        };
        let (ra, rb) = (rank(&a), rank(&b));
        let d2: f64 = ra.iter().zip(&rb).map(|(p, q)| (p - q) * (p - q)).sum();
        let nf = n as f64;
        let closed = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
        let got = srocc(&PredictionPairs::new(a, b).unwrap()).unwrap();
        assert!((got - closed).abs() < 1e-12, "{got} vs {closed}");
    }
}

fn regression_data(n: usize, seed: u64) -> (Matrix<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let data: Vec<f64> = (0..n * 4).map(|_| r.random_range(-1.0..1.0)).collect();
    let x = Matrix::from_vec(n, 4, data).unwrap();
    let y = (0..n)
        .map(|i| {
            let row = x.row(i);
            3.0 * row[0] + (2.0 * row[1]).sin() + row[2] * row[3] + 0.1 * r.random_range(-1.0..1.0)
        })
        .collect();
    (x, y)
}

fn walk(model: &GbdtModel<f64>, x: &[f64]) -> f64 {
    let mut sum = 0.0;
    for tree in &model.trees {
        let mut i = 0;
        loop {
            match tree.nodes[i] {
                Node::Leaf(v) => {
                    sum += v;
                    break;
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
    model.base_score + model.learning_rate * sum
}

#[test]
fn predictions_equal_manual_tree_walk() {
    let (x, y) = regression_data(300, 1);
    let (xv, yv) = regression_data(60, 2);
    let model = train_gbdt(&x, &y, &xv, &yv, &TrainConfig::default()).unwrap();
    assert!(!model.trees.is_empty());
    for i in 0..xv.rows {
        assert_eq!(model.predict(xv.row(i)).unwrap(), walk(&model, xv.row(i)));
    }
}

#[test]
fn label_shift_shifts_predictions() {
    let (x, y) = regression_data(300, 3);
    let (xv, yv) = regression_data(60, 4);
    let c = 17.25;
    let shift = |v: &[f64]| v.iter().map(|a| a + c).collect::<Vec<_>>();
    let cfg = TrainConfig {
        seed: 8,
        ..TrainConfig::default()
    };
    let a = train_gbdt(&x, &y, &xv, &yv, &cfg).unwrap();
    let b = train_gbdt(&x, &shift(&y), &xv, &shift(&yv), &cfg).unwrap();
    assert_eq!(a.trees.len(), b.trees.len());
    for i in 0..xv.rows {
        let d = b.predict(xv.row(i)).unwrap() - a.predict(xv.row(i)).unwrap();
        assert!((d - c).abs() < 1e-9, "{d}");
    }
}

#[test]
fn early_stopped_model_is_val_optimal() {
    let (x, y) = regression_data(200, 5);
    let (xv, yv) = regression_data(40, 6);
    let cfg = TrainConfig {
        early_stop_patience: 10,
        learning_rate: 0.3,
        ..TrainConfig::default()
    };
    let (model, trace) = train_gbdt_traced(&x, &y, &xv, &yv, &cfg).unwrap();
    assert_eq!(model.trees.len(), trace.best_round);
    let best = trace.val_rmse[trace.best_round];
    assert!(trace.val_rmse.iter().all(|&v| best <= v + 1e-12));
    let rmse = (0..xv.rows)
        .map(|i| (model.predict(xv.row(i)).unwrap() - yv[i]).powi(2))
        .sum::<f64>()
        / xv.rows as f64;
    assert!((rmse.sqrt() - best).abs() < 1e-12);
}
