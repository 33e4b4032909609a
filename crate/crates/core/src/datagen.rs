//! Two-class Gaussian designs with equicorrelated features.
//!
//! Half of the rows are labelled +1 with mean `μ₊ = (1_{k*}, 0_{p−k*})`, the
//! other half −1 with mean `−μ₊`. The covariance `Σ = (1−ρ)I + ρ11ᵀ` is
//! sampled exactly as `√(1−ρ)·z + √ρ·g·1` with one shared normal `g` per row.
//!
//! Randomness comes from ChaCha20 seeded with `seed_from_u64(seed)`; each
//! (replication, role) pair reads its own ChaCha stream
//! `3·replication + role` (train 0, validation 1, test 2), so every sample is
//! reproducible on any platform and independent of how many threads ran.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::losses::{Dataset, LossModel};
use crate::prox::RegWeights;
use crate::smoothing::SmoothedLoss;
use crate::solver::{fit, SolverConfig};

pub const DEFAULT_HOLDOUT_SIZE: usize = 10_000;

/// Ridge strength used for the reference minimizer.
pub const REFERENCE_ETA: f64 = 1e-6;
pub const REFERENCE_EPSILON: f64 = 1e-12;
pub const REFERENCE_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentSpec {
    pub n: usize,
    pub p: usize,
    pub k_star: usize,
    pub rho: f64,
    pub seed: u64,
    pub test_size: usize,
    pub val_size: usize,
}

impl ExperimentSpec {
    pub fn new(n: usize, p: usize, k_star: usize, rho: f64, seed: u64) -> Self {
        Self {
            n,
            p,
            k_star,
            rho,
            seed,
            test_size: DEFAULT_HOLDOUT_SIZE,
            val_size: DEFAULT_HOLDOUT_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.k_star == 0 {
            return Err(Error::Config("n, p and k_star must be positive".into()));
        }
        if self.k_star > self.p || self.k_star > self.n {
            return Err(Error::Config(format!(
                "k_star = {} must not exceed p = {} or n = {}",
                self.k_star, self.p, self.n
            )));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho = {} must lie in [0, 1)", self.rho)));
        }
        for (name, size) in [("n", self.n), ("val_size", self.val_size), ("test_size", self.test_size)] {
            if size == 0 || size % 2 != 0 {
                return Err(Error::Config(format!("{name} = {size} must be a positive even number")));
            }
        }
        Ok(())
    }

    /// Mean of the +1 class.
    pub fn positive_mean(&self) -> Array1<f64> {
        (0..self.p).map(|j| if j < self.k_star { 1.0 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Validation,
    Test,
}

impl Role {
    fn index(self) -> u64 {
        match self {
            Role::Train => 0,
            Role::Validation => 1,
            Role::Test => 2,
        }
    }
}

/// The generator for one (replication, role) pair.
pub fn stream(seed: u64, replication: u64, role: Role) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(3 * replication + role.index());
    rng
}

/// Draws `count` labelled rows, half from each class, in shuffled order.
pub fn generate<R: Rng>(spec: &ExperimentSpec, count: usize, rng: &mut R) -> Result<Dataset> {
    if count == 0 || count % 2 != 0 {
        return Err(Error::Domain(format!("sample count {count} must be a positive even number")));
    }
    if spec.k_star > spec.p || !(0.0..1.0).contains(&spec.rho) {
        return Err(Error::Config("invalid experiment spec".into()));
    }
    let p = spec.p;
    let own = (1.0 - spec.rho).sqrt();
    let shared = spec.rho.sqrt();
    let mut x = Array2::zeros((count, p));
    let mut y = Array1::zeros(count);
    for (i, mut row) in x.rows_mut().into_iter().enumerate() {
        let label = if i < count / 2 { 1.0 } else { -1.0 };
        y[i] = label;
        let g: f64 = rng.sample(StandardNormal);
        for (j, v) in row.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let mean = if j < spec.k_star { label } else { 0.0 };
            *v = mean + own * z + shared * g;
        }
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(rng);
    let x = x.select(ndarray::Axis(0), &order);
    let y = order.iter().map(|&i| y[i]).collect();
    Dataset::classification(x, y, spec.seed)
}

/// Reference minimizer fitted on `sample` restricted to its first `k_star`
/// columns, with a negligible ridge penalty, zero-padded back to `p`.
pub fn minimizer_from_sample(
    sample: &Dataset,
    k_star: usize,
    loss: &LossModel,
    tau: f64,
) -> Result<Array1<f64>> {
    if !loss.family().is_classification() {
        return Err(Error::Domain("reference minimizer needs a classification loss".into()));
    }
    let relevant = sample.leading_columns(k_star)?;
    let smoothed = SmoothedLoss::new(*loss, tau)?.calibrated(&relevant)?;
    let cfg = SolverConfig {
        epsilon: REFERENCE_EPSILON,
        t_max: REFERENCE_MAX_ITER,
        tau,
        step_override: None,
    };
    let result = fit(&relevant, &smoothed, &RegWeights::L2(1.0), REFERENCE_ETA, &cfg, None)?;
    let mut full = Array1::zeros(sample.p());
    full.slice_mut(ndarray::s![..k_star]).assign(&result.beta);
    Ok(full)
}

/// Draws a holdout of `spec.test_size` rows from `rng` and returns the
/// reference minimizer fitted on it.
pub fn theoretical_minimizer<R: Rng>(
    spec: &ExperimentSpec,
    loss: &LossModel,
    tau: f64,
    rng: &mut R,
) -> Result<Array1<f64>> {
    let sample = generate(spec, spec.test_size, rng)?;
    minimizer_from_sample(&sample, spec.k_star, loss, tau)
}

/// Writes `y,x1,…,xp` with a header row.
pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string()];
    header.extend((1..=data.p()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (row, yi) in data.x().rows().into_iter().zip(data.y().iter()) {
        let mut record = vec![yi.to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(data: &Dataset, path: &Path) -> Result<()> {
    write_csv(data, std::fs::File::create(path)?)
}
