//! Monte-Carlo checks of the sampling distribution.

use ndarray::{Array1, Array2, Axis};
use slopecls::datagen::{generate, stream, ExperimentSpec, Role};

/// Covariance of the rows after removing each row's class mean.
fn within_class_covariance(spec: &ExperimentSpec, count: usize) -> Array2<f64> {
    let data = generate(spec, count, &mut stream(spec.seed, 0, Role::Train)).unwrap();
    let mu = spec.positive_mean();
    let mut centered = data.x().clone();
    for (mut row, &y) in centered.rows_mut().into_iter().zip(data.y().iter()) {
        row.scaled_add(-y, &mu);
    }
    centered.t().dot(&centered) / count as f64
}

#[test]
fn uncorrelated_design_has_identity_covariance() {
    let spec = ExperimentSpec::new(100, 6, 2, 0.0, 31);
    let cov = within_class_covariance(&spec, 100_000);
    let eye = Array2::<f64>::eye(6);
    let worst = (&cov - &eye).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst <= 0.02, "max covariance error {worst}");
}

#[test]
fn equicorrelated_off_diagonals() {
    for rho in [0.1, 0.5] {
        let spec = ExperimentSpec::new(100, 5, 2, rho, 32);
        let cov = within_class_covariance(&spec, 100_000);
        let sd: Array1<f64> = cov.diag().mapv(f64::sqrt);
        for i in 0..5 {
            for j in 0..i {
                let corr = cov[[i, j]] / (sd[i] * sd[j]);
                assert!((corr - rho).abs() <= 0.03, "rho {rho}: corr[{i},{j}] = {corr}");
            }
        }
    }
}

#[test]
fn class_means_converge() {
    let spec = ExperimentSpec::new(100, 8, 3, 0.3, 33);
    let data = generate(&spec, 20_000, &mut stream(spec.seed, 1, Role::Validation)).unwrap();
    let mu = spec.positive_mean();
    for label in [1.0, -1.0] {
        let rows: Vec<usize> = (0..data.n()).filter(|&i| data.y()[i] == label).collect();
        let mean = data.x().select(Axis(0), &rows).mean_axis(Axis(0)).unwrap();
        let worst = (&mean - &(&mu * label)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 0.05, "class {label}: L-inf error {worst}");
    }
}

#[test]
fn identical_seed_gives_identical_data() {
    let spec = ExperimentSpec::new(100, 12, 3, 0.2, 34);
    let a = generate(&spec, 500, &mut stream(spec.seed, 7, Role::Test)).unwrap();
    let b = generate(&spec, 500, &mut stream(spec.seed, 7, Role::Test)).unwrap();
    assert_eq!(a.x(), b.x());
    assert_eq!(a.y(), b.y());
}
