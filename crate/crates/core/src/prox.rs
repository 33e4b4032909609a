//! Proximal operators for the L1, ridge, and sorted-L1 penalties.
//!
//! The sorted-L1 prox reduces to an isotone problem on the magnitudes sorted
//! in decreasing order: strip the signs of `γ`, sort `|γ|` descending, solve
//!
//! ```text
//! min ½‖b − |γ|↓‖² + Σ λ_j b_j   s.t.  b_1 ≥ … ≥ b_p ≥ 0
//! ```
//!
//! with a stack of averaged blocks, then scatter back through the permutation
//! and restore the signs.

use std::cmp::Ordering;

use ndarray::{Array1, ArrayView1};

use crate::error::{check_len, Error, Result};

/// Nonincreasing, strictly positive sorted-L1 weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeWeights(Array1<f64>);

impl SlopeWeights {
    pub fn new(weights: Array1<f64>) -> Result<Self> {
        validate_slope_weights(weights.view())?;
        Ok(Self(weights))
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn validate_slope_weights(w: ArrayView1<f64>) -> Result<()> {
    if w.is_empty() {
        return Err(Error::InvalidWeights("empty weight vector".into()));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidWeights("non-finite weight".into()));
    }
    if w.windows(2).into_iter().any(|pair| pair[1] > pair[0]) {
        return Err(Error::InvalidWeights("weights must be nonincreasing".into()));
    }
    if w[w.len() - 1] <= 0.0 {
        return Err(Error::InvalidWeights("weights must be strictly positive".into()));
    }
    Ok(())
}

/// Penalty shape; its strength is the separate multiplier `η`.
#[derive(Debug, Clone, PartialEq)]
pub enum RegWeights {
    /// `λ‖β‖₁`
    L1(f64),
    /// `(λ/2)‖β‖₂²`
    L2(f64),
    /// `Σ λ_j |β|_(j)`
    Slope(SlopeWeights),
}

impl RegWeights {
    pub fn l1(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self::L1(lambda))
    }

    pub fn l2(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self::L2(lambda))
    }

    pub fn slope(weights: Array1<f64>) -> Result<Self> {
        Ok(Self::Slope(SlopeWeights::new(weights)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::L1(_) => "l1",
            Self::L2(_) => "l2",
            Self::Slope(_) => "slope",
        }
    }

    /// Penalty value at `beta` (without `η`).
    pub fn penalty(&self, beta: ArrayView1<f64>) -> Result<f64> {
        match self {
            Self::L1(l) => Ok(l * beta.iter().map(|b| b.abs()).sum::<f64>()),
            Self::L2(l) => Ok(0.5 * l * beta.dot(&beta)),
            Self::Slope(w) => slope_norm(w.as_array().view(), beta),
        }
    }

    pub(crate) fn check_dim(&self, p: usize) -> Result<()> {
        match self {
            Self::Slope(w) => check_len(p, w.len()),
            _ => Ok(()),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWeights(format!("penalty weight {lambda} must be nonnegative")))
    }
}

fn check_finite(v: ArrayView1<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain("non-finite entry in prox argument".into()))
    }
}

/// Indices sorting `|v|` in decreasing order; ties keep index order.
pub(crate) fn order_by_magnitude(v: ArrayView1<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().partial_cmp(&v[a].abs()).unwrap_or(Ordering::Equal));
    idx
}

/// Sorted-L1 norm `Σ_j λ_j |β|_(j)` with `|β|_(1) ≥ … ≥ |β|_(p)`.
pub fn slope_norm(weights: ArrayView1<f64>, beta: ArrayView1<f64>) -> Result<f64> {
    check_len(weights.len(), beta.len())?;
    let mut mags: Vec<f64> = beta.iter().map(|b| b.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    Ok(weights.iter().zip(mags).map(|(w, m)| w * m).sum())
}

pub fn soft_threshold(gamma: ArrayView1<f64>, lambda: f64) -> Result<Array1<f64>> {
    check_lambda(lambda)?;
    check_finite(gamma)?;
    Ok(gamma.mapv(|g| g.signum() * (g.abs() - lambda).max(0.0)))
}

/// Prox of `(λ/2)‖·‖₂²`.
pub fn l2_shrink(gamma: ArrayView1<f64>, lambda: f64) -> Result<Array1<f64>> {
    check_lambda(lambda)?;
    check_finite(gamma)?;
    Ok(gamma.mapv(|g| g / (1.0 + lambda)))
}

/// Work counters of the block stack, for termination checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StackStats {
    pub pushes: usize,
    pub merges: usize,
}

struct Block {
    start: usize,
    len: usize,
    sum: f64,
}

impl Block {
    fn value(&self) -> f64 {
        self.sum / self.len as f64
    }
}

/// Solves the isotone problem for `mags` sorted decreasingly and nonnegative
/// weights, writing the solution into `out`.
fn isotone_stack(mags: &[f64], weights: &[f64], out: &mut [f64]) -> StackStats {
    let mut stack: Vec<Block> = Vec::with_capacity(mags.len());
    let mut stats = StackStats::default();
    for (i, (&g, &w)) in mags.iter().zip(weights).enumerate() {
        stack.push(Block { start: i, len: 1, sum: g - w });
        stats.pushes += 1;
        while stack.len() > 1 {
            let top = &stack[stack.len() - 1];
            let below = &stack[stack.len() - 2];
            if top.value() < below.value() {
                break;
            }
            let top = stack.pop().expect("stack has two blocks");
            let below = stack.last_mut().expect("stack has a block");
            below.len += top.len;
            below.sum += top.sum;
            stats.merges += 1;
        }
    }
    for block in &stack {
        let v = block.value().max(0.0);
        out[block.start..block.start + block.len].fill(v);
    }
    stats
}

fn sorted_l1_unchecked(gamma: ArrayView1<f64>, weights: ArrayView1<f64>) -> (Array1<f64>, StackStats) {
    let p = gamma.len();
    let order = order_by_magnitude(gamma);
    let mags: Vec<f64> = order.iter().map(|&j| gamma[j].abs()).collect();
    let w: Vec<f64> = weights.iter().copied().collect();
    let mut sorted = vec![0.0; p];
    let stats = isotone_stack(&mags, &w, &mut sorted);
    let mut out = Array1::zeros(p);
    for (rank, &j) in order.iter().enumerate() {
        out[j] = gamma[j].signum() * sorted[rank];
    }
    // signum(±0.0) is ±1; an exact zero input stays zero
    out.zip_mut_with(&gamma, |o, &g| {
        if g == 0.0 {
            *o = 0.0
        }
    });
    (out, stats)
}

/// `argmin_β ½‖β − γ‖² + Σ λ_j |β|_(j)`.
pub fn prox_sorted_l1(gamma: ArrayView1<f64>, weights: ArrayView1<f64>) -> Result<Array1<f64>> {
    prox_sorted_l1_traced(gamma, weights).map(|(b, _)| b)
}

/// [`prox_sorted_l1`] that also reports the stack work done.
pub fn prox_sorted_l1_traced(
    gamma: ArrayView1<f64>,
    weights: ArrayView1<f64>,
) -> Result<(Array1<f64>, StackStats)> {
    check_len(gamma.len(), weights.len())?;
    validate_slope_weights(weights)?;
    check_finite(gamma)?;
    Ok(sorted_l1_unchecked(gamma, weights))
}

/// Prox of `step · η · reg` at `gamma`: the penalty weights are scaled by
/// `η · step`, i.e. `η/D` with `D = 1/step`.
pub fn apply_prox(reg: &RegWeights, gamma: ArrayView1<f64>, step: f64, eta: f64) -> Result<Array1<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("step {step} must be positive")));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("regularization strength {eta} must be nonnegative")));
    }
    let scale = eta * step;
    match reg {
        RegWeights::L1(l) => soft_threshold(gamma, scale * l),
        RegWeights::L2(l) => l2_shrink(gamma, scale * l),
        RegWeights::Slope(w) => {
            check_len(gamma.len(), w.len())?;
            check_finite(gamma)?;
            let scaled = w.as_array() * scale;
            Ok(sorted_l1_unchecked(gamma, scaled.view()).0)
        }
    }
}

/// Dual norm of the penalty evaluated at `v`. For L1 this is `‖v‖∞ / λ`; for
/// sorted-L1 it is `max_k Σ_{j≤k} |v|_(j) / Σ_{j≤k} λ_j`. Zero is a minimizer
/// of `g + η·reg` whenever `η` is at least the dual norm of `∇g(0)`.
pub fn dual_norm(reg: &RegWeights, v: ArrayView1<f64>) -> Result<f64> {
    match reg {
        RegWeights::L1(l) => {
            let inf = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if *l == 0.0 {
                return Ok(if inf == 0.0 { 0.0 } else { f64::INFINITY });
            }
            Ok(inf / l)
        }
        RegWeights::L2(_) => Err(Error::Domain("ridge penalty has no finite zero threshold".into())),
        RegWeights::Slope(w) => {
            check_len(w.len(), v.len())?;
            let order = order_by_magnitude(v);
            let (mut num, mut den, mut best) = (0.0, 0.0, 0.0f64);
            for (&j, &lam) in order.iter().zip(w.as_array().iter()) {
                num += v[j].abs();
                den += lam;
                best = best.max(num / den);
            }
            Ok(best)
        }
    }
}
