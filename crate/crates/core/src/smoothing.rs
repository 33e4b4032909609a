//! Nesterov smoothing of the hinge and check losses.
//!
//! Both losses are maxima over the unit `L∞` ball,
//! `max(0, z) = max_{|w|≤1} ½(z + wz)` and `ρ_θ(z) = max_{|w|≤1} ½((2θ−1)z + wz)`,
//! so subtracting `(τ/2) w²` inside the max gives a differentiable surrogate
//! whose gradient is `Xᵀ` applied to a vector of per-row dual weights. For the
//! hinge `z_i = 1 − y_i⟨x_i, β⟩`; for the check loss `z_i = y_i − ⟨x_i, β⟩`.
//! The logistic loss is already smooth and passes through unchanged.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg::{gram_top_eigenvalue, mat_t_vec};
use crate::losses::{
    empirical_risk, log1p_exp_neg, logistic_weight, Dataset, LossFamily, LossModel,
};

pub const DEFAULT_TAU: f64 = 0.2;

/// Inflation applied to the estimated gradient Lipschitz constant so that the
/// step `1/C` stays admissible under power-iteration error.
pub const LIPSCHITZ_SAFETY: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedLoss {
    base: LossModel,
    tau: f64,
    lip_grad: Option<f64>,
}

impl SmoothedLoss {
    pub fn new(base: LossModel, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("smoothing parameter {tau} must be positive")));
        }
        Ok(Self { base, tau, lip_grad: None })
    }

    pub fn with_default_tau(base: LossModel) -> Self {
        Self { base, tau: DEFAULT_TAU, lip_grad: None }
    }

    /// Returns a copy with the gradient Lipschitz constant for `data` cached.
    pub fn calibrated(mut self, data: &Dataset) -> Result<Self> {
        self.lip_grad = Some(lipschitz_constant(data, self.tau, self.base.family())?);
        Ok(self)
    }

    pub fn base(&self) -> &LossModel {
        &self.base
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lip_grad(&self) -> Option<f64> {
        self.lip_grad
    }

    pub fn is_smoothed(&self) -> bool {
        self.base.family() != LossFamily::Logistic
    }

    /// Smoothed risk and its gradient with respect to the scores `Xβ`.
    /// The parameter gradient is `Xᵀ r`.
    pub(crate) fn eval_scores(
        &self,
        y: ArrayView1<f64>,
        scores: ArrayView1<f64>,
        want_grad: bool,
    ) -> (f64, Option<Array1<f64>>) {
        let n = y.len() as f64;
        let tau = self.tau;
        let mut total = 0.0;
        let mut r = if want_grad { Some(Array1::zeros(y.len())) } else { None };
        for (i, (&yi, &si)) in y.iter().zip(scores.iter()).enumerate() {
            let (value, dscore) = match self.base.family() {
                LossFamily::Hinge => {
                    let z = 1.0 - yi * si;
                    let w = dual_weight(z, tau);
                    (0.5 * (z + w * z) - 0.5 * tau * w * w, -0.5 * (1.0 + w) * yi)
                }
                LossFamily::Quantile => {
                    let skew = 2.0 * self.base.theta().unwrap_or(0.5) - 1.0;
                    let z = yi - si;
                    let w = dual_weight(z, tau);
                    (0.5 * (skew * z + w * z) - 0.5 * tau * w * w, -0.5 * (skew + w))
                }
                LossFamily::Logistic => {
                    let m = yi * si;
                    (log1p_exp_neg(m), -yi * logistic_weight(m))
                }
            };
            total += value;
            if let Some(r) = r.as_mut() {
                r[i] = dscore / n;
            }
        }
        (total / n, r)
    }
}

#[inline]
fn dual_weight(z: f64, tau: f64) -> f64 {
    (z.abs() / (2.0 * tau)).min(1.0) * sign(z)
}

#[inline]
fn sign(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Maximizer of `½(z + wz) − (τ/2)w²` over `|w| ≤ 1`: `min(1, |z|/2τ)·sign(z)`.
pub fn dual_w(z: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("smoothing parameter {tau} must be positive")));
    }
    if !z.is_finite() {
        return Err(Error::Domain(format!("non-finite dual argument {z}")));
    }
    Ok(dual_weight(z, tau))
}

fn check_labels(s: &SmoothedLoss, data: &Dataset) -> Result<()> {
    if s.base.family().is_classification() && !data.has_binary_labels() {
        return Err(Error::Domain("classification loss needs labels in {-1, +1}".into()));
    }
    Ok(())
}

/// The smoothed empirical risk `g^τ(β)`; the logistic risk is returned as is.
pub fn smoothed_risk(s: &SmoothedLoss, data: &Dataset, beta: ArrayView1<f64>) -> Result<f64> {
    if !s.is_smoothed() {
        return empirical_risk(s.base(), data, beta);
    }
    check_labels(s, data)?;
    let scores = data.scores(beta)?;
    Ok(s.eval_scores(data.y().view(), scores.view(), false).0)
}

pub fn smoothed_gradient(
    s: &SmoothedLoss,
    data: &Dataset,
    beta: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_labels(s, data)?;
    let scores = data.scores(beta)?;
    let (_, r) = s.eval_scores(data.y().view(), scores.view(), true);
    Ok(mat_t_vec(data.x().view(), r.expect("gradient requested").view()))
}

/// Lipschitz constant of the risk gradient: `μ_max(XᵀX/n) / 4τ` for the
/// smoothed losses and `μ_max(XᵀX/n) / 4` for the logistic loss, inflated by
/// [`LIPSCHITZ_SAFETY`]. An all-zero design yields 0, which the solver rejects.
pub fn lipschitz_constant(data: &Dataset, tau: f64, family: LossFamily) -> Result<f64> {
    let mu = gram_top_eigenvalue(data.x().view(), data.seed());
    let c = match family {
        LossFamily::Logistic => mu / 4.0,
        LossFamily::Hinge | LossFamily::Quantile => {
            if !(tau > 0.0) {
                return Err(Error::Domain(format!("smoothing parameter {tau} must be positive")));
            }
            mu / (4.0 * tau)
        }
    };
    Ok(c * LIPSCHITZ_SAFETY)
}
