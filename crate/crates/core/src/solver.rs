//! Accelerated proximal gradient for `g^τ(β) + η·reg(β)` and warm-started
//! regularization paths.
//!
//! The step is fixed at `1/C` where `C` is the gradient Lipschitz constant of
//! the (smoothed) risk. Each iteration takes a prox-gradient step from the
//! extrapolated point `β_T` to get `δ_T`, then extrapolates
//! `β_{T+1} = δ_T + ((q_T − 1)/q_{T+1})(δ_T − δ_{T−1})` with
//! `q_{T+1} = (1 + √(1 + 4q_T²))/2`. Iteration stops once
//! `‖β_{T+1} − β_T‖² ≤ ε` or after `t_max` steps. The returned coefficients
//! are the `δ_T` (or the initial point) with the lowest smoothed objective.

use ndarray::{Array1, ArrayView1};

use crate::error::{check_len, Error, Result};
use crate::linalg::{dist2_sq, mat_t_vec, mat_vec};
use crate::losses::{risk_from_scores, Dataset};
use crate::prox::{apply_prox, dual_norm, RegWeights};
use crate::smoothing::{SmoothedLoss, DEFAULT_TAU};

/// Ratio between the last and first regularization strength on a path.
pub const PATH_RATIO: f64 = 1e-4;
/// Headroom over the zero threshold for the first point of a path.
pub const PATH_HEADROOM: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop once `‖β_{T+1} − β_T‖₂² ≤ epsilon`.
    pub epsilon: f64,
    pub t_max: usize,
    /// Smoothing used when the caller builds a [`SmoothedLoss`] from this config.
    pub tau: f64,
    /// Inverse step `D`; must be at least the Lipschitz constant.
    pub step_override: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { epsilon: 1e-10, t_max: 5000, tau: DEFAULT_TAU, step_override: None }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon {} must be nonnegative", self.epsilon)));
        }
        if self.t_max == 0 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau {} must be positive", self.tau)));
        }
        if let Some(d) = self.step_override {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("step override {d} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Array1<f64>,
    /// Smoothed composite objective at each `δ_T`.
    pub objective_trace: Vec<f64>,
    /// Same points evaluated with the unsmoothed risk.
    pub unsmoothed_trace: Vec<f64>,
    /// Smoothed composite objective at `beta`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub etas: Vec<f64>,
    pub fits: Vec<FitResult>,
}

/// Default sorted-L1 weights `λ_j = √log(2pe/j)`, `j = 1..p`.
pub fn slope_weights_default(p: usize) -> Array1<f64> {
    let two_pe = 2.0 * p as f64 * std::f64::consts::E;
    (1..=p).map(|j| (two_pe / j as f64).ln().sqrt()).collect()
}

/// `q_{T+1} = (1 + √(1 + 4q_T²)) / 2`.
pub fn momentum_next(q: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * q * q).sqrt())
}

fn lipschitz_for(data: &Dataset, loss: &SmoothedLoss) -> Result<f64> {
    match loss.lip_grad() {
        Some(c) => Ok(c),
        None => Ok(loss.calibrated(data)?.lip_grad().expect("calibrated")),
    }
}

/// Smoothed composite objective `g^τ(β) + η·reg(β)`.
pub fn composite_objective(
    data: &Dataset,
    loss: &SmoothedLoss,
    reg: &RegWeights,
    eta: f64,
    beta: ArrayView1<f64>,
) -> Result<f64> {
    reg.check_dim(data.p())?;
    let scores = data.scores(beta)?;
    let (g, _) = loss.eval_scores(data.y().view(), scores.view(), false);
    Ok(g + eta * reg.penalty(beta)?)
}

/// One prox-gradient step `prox_{step·η·reg}(β − step·∇g^τ(β))`.
pub fn prox_gradient_step(
    data: &Dataset,
    loss: &SmoothedLoss,
    reg: &RegWeights,
    eta: f64,
    beta: ArrayView1<f64>,
    step: f64,
) -> Result<Array1<f64>> {
    let scores = data.scores(beta)?;
    let (_, r) = loss.eval_scores(data.y().view(), scores.view(), true);
    let grad = mat_t_vec(data.x().view(), r.expect("gradient requested").view());
    let gamma = &beta - &(grad * step);
    apply_prox(reg, gamma.view(), step, eta)
}

pub fn fit(
    data: &Dataset,
    loss: &SmoothedLoss,
    reg: &RegWeights,
    eta: f64,
    cfg: &SolverConfig,
    init: Option<ArrayView1<f64>>,
) -> Result<FitResult> {
    cfg.validate()?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("regularization strength {eta} must be nonnegative")));
    }
    if loss.base().family().is_classification() && !data.has_binary_labels() {
        return Err(Error::Domain("classification loss needs labels in {-1, +1}".into()));
    }
    let p = data.p();
    reg.check_dim(p)?;
    let c = lipschitz_for(data, loss)?;
    if c <= 0.0 {
        return Err(Error::ZeroLipschitz);
    }
    let inv_step = match cfg.step_override {
        Some(d) if d < c => {
            return Err(Error::Config(format!("step override {d} is below the Lipschitz constant {c}")))
        }
        Some(d) => d,
        None => c,
    };
    let step = 1.0 / inv_step;

    let x = data.x().view();
    let y = data.y().view();
    let start = match init {
        Some(b) => {
            check_len(p, b.len())?;
            b.to_owned()
        }
        None => Array1::zeros(p),
    };

    let objective_at = |scores: ArrayView1<f64>, point: ArrayView1<f64>| -> Result<(f64, f64)> {
        let (g, _) = loss.eval_scores(y, scores, false);
        let pen = eta * reg.penalty(point)?;
        Ok((g + pen, risk_from_scores(loss.base(), y, scores) + pen))
    };

    // X·β is linear, so the extrapolated scores are combined from the
    // scores of the two latest prox points instead of a fresh product.
    let mut beta = start.clone();
    let mut delta_prev = start;
    let mut xdelta_prev = mat_vec(x, delta_prev.view());
    let mut xbeta = xdelta_prev.clone();
    let (init_obj, _) = objective_at(xdelta_prev.view(), delta_prev.view())?;
    if !init_obj.is_finite() {
        return Err(Error::Divergence { iteration: 0 });
    }
    let mut best_obj = init_obj;
    let mut best = delta_prev.clone();

    let mut objective_trace = Vec::new();
    let mut unsmoothed_trace = Vec::new();
    let mut q = 1.0;
    let mut iterations = 0;
    let mut converged = false;

    for t in 1..=cfg.t_max {
        iterations = t;
        let (_, r) = loss.eval_scores(y, xbeta.view(), true);
        let grad = mat_t_vec(x, r.expect("gradient requested").view());
        let mut gamma = beta.clone();
        gamma.scaled_add(-step, &grad);
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration: t });
        }
        let delta = apply_prox(reg, gamma.view(), step, eta)?;
        let xdelta = mat_vec(x, delta.view());

        let (obj, raw) = objective_at(xdelta.view(), delta.view())?;
        if !obj.is_finite() || delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration: t });
        }
        objective_trace.push(obj);
        unsmoothed_trace.push(raw);
        if obj <= best_obj {
            best_obj = obj;
            best.assign(&delta);
        }

        let q_next = momentum_next(q);
        let mom = (q - 1.0) / q_next;
        let beta_next = &delta + &((&delta - &delta_prev) * mom);
        let xbeta_next = &xdelta + &((&xdelta - &xdelta_prev) * mom);

        let moved = dist2_sq(beta_next.view(), beta.view());
        beta = beta_next;
        xbeta = xbeta_next;
        delta_prev = delta;
        xdelta_prev = xdelta;
        q = q_next;
        if moved <= cfg.epsilon {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        beta: best,
        objective_trace,
        unsmoothed_trace,
        objective: best_obj,
        iterations,
        converged,
    })
}

/// Smallest `η` (up to the ridge convention) at which the zero vector solves
/// the penalized problem: the penalty's dual norm of `∇g^τ(0)`. For the ridge
/// penalty this is replaced by `max_i ‖x_i‖₂²`.
pub fn eta_max(data: &Dataset, loss: &SmoothedLoss, reg: &RegWeights) -> Result<f64> {
    reg.check_dim(data.p())?;
    match reg {
        RegWeights::L2(_) => Ok(data
            .x()
            .rows()
            .into_iter()
            .map(|row| row.dot(&row))
            .fold(0.0, f64::max)),
        _ => {
            let zero = Array1::zeros(data.p());
            let grad = crate::smoothing::smoothed_gradient(loss, data, zero.view())?;
            dual_norm(reg, grad.view())
        }
    }
}

/// Geometric grid from `eta0` down to `PATH_RATIO · eta0`.
pub fn geometric_grid(eta0: f64, grid_size: usize) -> Vec<f64> {
    let last = (grid_size - 1) as f64;
    (0..grid_size)
        .map(|m| eta0 * PATH_RATIO.powf(m as f64 / last))
        .collect()
}

/// Fits a decreasing geometric grid of strengths, each fit warm-started from
/// the previous solution.
pub fn fit_path(
    data: &Dataset,
    loss: &SmoothedLoss,
    reg: &RegWeights,
    grid_size: usize,
    cfg: &SolverConfig,
) -> Result<PathResult> {
    if grid_size < 2 {
        return Err(Error::Config(format!("grid size {grid_size} must be at least 2")));
    }
    let loss = if loss.lip_grad().is_some() { *loss } else { loss.calibrated(data)? };
    let top = eta_max(data, &loss, reg)?;
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::Domain(format!("cannot build a path from zero threshold {top}")));
    }
    let etas = geometric_grid(top * PATH_HEADROOM, grid_size);
    let mut fits: Vec<FitResult> = Vec::with_capacity(grid_size);
    for &eta in &etas {
        let init = fits.last().map(|f| f.beta.view());
        let fit = fit(data, &loss, reg, eta, cfg, init)?;
        fits.push(fit);
    }
    Ok(PathResult { etas, fits })
}
