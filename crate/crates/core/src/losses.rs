//! Scalar losses for linear classification and quantile regression.
//!
//! Hinge and logistic losses take the raw score `t = ⟨x, β⟩` together with a
//! label `y ∈ {−1, +1}`. The quantile (check) loss takes the residual
//! `t = y − ⟨x, β⟩`; the response is already folded into `t` and the `y`
//! argument is ignored. [`empirical_risk`] resolves that convention per row.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{check_len, Error, Result};
use crate::linalg::mat_vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossFamily {
    Hinge,
    Logistic,
    Quantile,
}

impl LossFamily {
    pub fn is_classification(self) -> bool {
        matches!(self, LossFamily::Hinge | LossFamily::Logistic)
    }
}

/// A loss family with its parameter and the Lipschitz constant `L` of
/// `t ↦ f(t, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    family: LossFamily,
    theta: Option<f64>,
    lipschitz: f64,
}

impl LossModel {
    pub fn hinge() -> Self {
        Self { family: LossFamily::Hinge, theta: None, lipschitz: 1.0 }
    }

    pub fn logistic() -> Self {
        Self { family: LossFamily::Logistic, theta: None, lipschitz: 1.0 }
    }

    /// Check loss at level `theta`, which must lie strictly inside (0, 1).
    pub fn quantile(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Domain(format!("quantile level {theta} outside (0, 1)")));
        }
        Ok(Self {
            family: LossFamily::Quantile,
            theta: Some(theta),
            lipschitz: theta.max(1.0 - theta),
        })
    }

    pub fn family(&self) -> LossFamily {
        self.family
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn quantile_level(&self) -> f64 {
        self.theta.expect("quantile model carries theta")
    }
}

/// Training data: an `n × p` design and a response of length `n`.
///
/// `seed` is provenance metadata; it also seeds the power iteration that
/// estimates the gradient Lipschitz constant, so repeated runs on the same
/// data take identical step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    seed: u64,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>, seed: u64) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::Domain(format!("empty design matrix ({n} x {p})")));
        }
        check_len(n, y.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("design matrix has non-finite entries".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("response has non-finite entries".into()));
        }
        Ok(Self { x, y, seed })
    }

    /// Like [`Dataset::new`], but additionally requires labels in {−1, +1}.
    pub fn classification(x: Array2<f64>, y: Array1<f64>, seed: u64) -> Result<Self> {
        if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::Domain(format!("label {bad} is not in {{-1, +1}}")));
        }
        Self::new(x, y, seed)
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn has_binary_labels(&self) -> bool {
        self.y.iter().all(|&v| v == 1.0 || v == -1.0)
    }

    /// Keep only the first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.p() {
            return Err(Error::Domain(format!("cannot keep {k} of {} columns", self.p())));
        }
        let x = self.x.slice(ndarray::s![.., ..k]).to_owned();
        Ok(Self { x, y: self.y.clone(), seed: self.seed })
    }

    /// Linear scores `X β`.
    pub fn scores(&self, beta: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len(self.p(), beta.len())?;
        Ok(mat_vec(self.x.view(), beta))
    }
}

fn check_args(model: &LossModel, t: f64, y: f64) -> Result<()> {
    if !t.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!("non-finite loss argument (t = {t}, y = {y})")));
    }
    if model.family.is_classification() && y != 1.0 && y != -1.0 {
        return Err(Error::Domain(format!("label {y} is not in {{-1, +1}}")));
    }
    Ok(())
}

/// `log(1 + exp(−m))` without overflow.
pub(crate) fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// `1 / (1 + exp(m))` without overflow.
pub(crate) fn logistic_weight(m: f64) -> f64 {
    if m > 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

pub(crate) fn value_unchecked(model: &LossModel, t: f64, y: f64) -> f64 {
    match model.family {
        LossFamily::Hinge => (1.0 - y * t).max(0.0),
        LossFamily::Logistic => log1p_exp_neg(y * t),
        LossFamily::Quantile => {
            let theta = model.quantile_level();
            let indicator = if t <= 0.0 { 1.0 } else { 0.0 };
            (theta - indicator) * t
        }
    }
}

pub fn loss_value(model: &LossModel, t: f64, y: f64) -> Result<f64> {
    check_args(model, t, y)?;
    Ok(value_unchecked(model, t, y))
}

/// A subgradient of `t ↦ f(t, y)`. At the hinge kink `y t = 1` the active
/// branch is taken (`−y`); the check loss at `t = 0` returns `θ − 1`.
pub fn loss_subgradient(model: &LossModel, t: f64, y: f64) -> Result<f64> {
    check_args(model, t, y)?;
    Ok(match model.family {
        LossFamily::Hinge => {
            if 1.0 - y * t >= 0.0 {
                -y
            } else {
                0.0
            }
        }
        LossFamily::Logistic => -y * logistic_weight(y * t),
        LossFamily::Quantile => {
            let theta = model.quantile_level();
            if t <= 0.0 {
                theta - 1.0
            } else {
                theta
            }
        }
    })
}

/// Mean loss from precomputed scores `X β`.
pub(crate) fn risk_from_scores(model: &LossModel, y: ArrayView1<f64>, scores: ArrayView1<f64>) -> f64 {
    let n = y.len() as f64;
    let total: f64 = match model.family {
        LossFamily::Quantile => y
            .iter()
            .zip(scores.iter())
            .map(|(&yi, &si)| value_unchecked(model, yi - si, yi))
            .sum(),
        _ => y
            .iter()
            .zip(scores.iter())
            .map(|(&yi, &si)| value_unchecked(model, si, yi))
            .sum(),
    };
    total / n
}

/// `(1/n) Σ f(⟨x_i, β⟩; y_i)`.
pub fn empirical_risk(model: &LossModel, data: &Dataset, beta: ArrayView1<f64>) -> Result<f64> {
    if model.family.is_classification() && !data.has_binary_labels() {
        return Err(Error::Domain("classification loss needs labels in {-1, +1}".into()));
    }
    let scores = data.scores(beta)?;
    Ok(risk_from_scores(model, data.y().view(), scores.view()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn models() -> Vec<LossModel> {
        vec![
            LossModel::hinge(),
            LossModel::logistic(),
            LossModel::quantile(0.3).unwrap(),
            LossModel::quantile(0.5).unwrap(),
            LossModel::quantile(0.9).unwrap(),
        ]
    }

    #[test]
    fn point_values() {
        assert_eq!(loss_value(&LossModel::hinge(), 0.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            loss_value(&LossModel::logistic(), 0.0, 1.0).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        let q = LossModel::quantile(0.5).unwrap();
        assert_eq!(loss_value(&q, 2.0, 0.0).unwrap(), 1.0);
        assert_eq!(loss_value(&q, -2.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn point_subgradients() {
        let h = LossModel::hinge();
        assert_eq!(loss_subgradient(&h, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(loss_subgradient(&h, 0.0, 1.0).unwrap(), -1.0);
        assert_eq!(loss_subgradient(&LossModel::logistic(), 0.0, 1.0).unwrap(), -0.5);
    }

    #[test]
    fn hinge_kink_sign_agrees_with_secants() {
        // at t = 0 the loss is on the active branch: both secants have slope −1
        let h = LossModel::hinge();
        let eps = 1e-6;
        for y in [1.0, -1.0] {
            let g = loss_subgradient(&h, 0.0, y).unwrap();
            let f0 = loss_value(&h, 0.0, y).unwrap();
            let right = (loss_value(&h, eps, y).unwrap() - f0) / eps;
            let left = (f0 - loss_value(&h, -eps, y).unwrap()) / eps;
            assert_abs_diff_eq!(g, right, epsilon = 1e-8);
            assert_abs_diff_eq!(g, left, epsilon = 1e-8);
        }
        // exactly at margin 1 the active convention returns −y, the left secant
        let g = loss_subgradient(&h, 1.0, 1.0).unwrap();
        let left = (loss_value(&h, 1.0, 1.0).unwrap() - loss_value(&h, 1.0 - eps, 1.0).unwrap()) / eps;
        assert_abs_diff_eq!(g, left, epsilon = 1e-8);
    }

    #[test]
    fn errors() {
        assert!(loss_value(&LossModel::hinge(), f64::NAN, 1.0).is_err());
        assert!(loss_value(&LossModel::hinge(), 0.0, f64::INFINITY).is_err());
        assert!(loss_subgradient(&LossModel::logistic(), 0.0, 0.5).is_err());
        assert!(LossModel::quantile(0.0).is_err());
        assert!(LossModel::quantile(1.0).is_err());
        assert!(LossModel::quantile(f64::NAN).is_err());
    }

    #[test]
    fn lipschitz_constants() {
        assert_eq!(LossModel::hinge().lipschitz(), 1.0);
        assert_eq!(LossModel::logistic().lipschitz(), 1.0);
        assert_eq!(LossModel::quantile(0.3).unwrap().lipschitz(), 0.7);
        assert_eq!(LossModel::quantile(0.9).unwrap().lipschitz(), 0.9);
    }

    #[test]
    fn risk_at_zero() {
        let x = array![[1.0, -2.0], [0.5, 3.0], [-1.0, 1.0]];
        let y = array![1.0, -1.0, 1.0];
        let data = Dataset::classification(x, y, 0).unwrap();
        let zero = Array1::zeros(2);
        assert_eq!(empirical_risk(&LossModel::hinge(), &data, zero.view()).unwrap(), 1.0);
        assert_abs_diff_eq!(
            empirical_risk(&LossModel::logistic(), &data, zero.view()).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn risk_single_row_outside_margin() {
        let data = Dataset::classification(array![[1.0]], array![1.0], 0).unwrap();
        let r = empirical_risk(&LossModel::hinge(), &data, array![2.0].view()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn risk_dimension_mismatch() {
        let data = Dataset::classification(array![[1.0, 2.0]], array![1.0], 0).unwrap();
        let err = empirical_risk(&LossModel::hinge(), &data, array![1.0].view());
        assert!(matches!(err, Err(Error::DimensionMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(array![[f64::NAN]], array![1.0], 0).is_err());
        assert!(Dataset::new(array![[1.0], [2.0]], array![1.0], 0).is_err());
        assert!(Dataset::classification(array![[1.0]], array![0.0], 0).is_err());
        assert!(Dataset::new(Array2::zeros((0, 2)), Array1::zeros(0), 0).is_err());
        // real responses are fine for regression
        assert!(Dataset::new(array![[1.0]], array![0.3], 0).is_ok());
    }

    #[test]
    fn logistic_is_stable_for_extreme_scores() {
        let l = LossModel::logistic();
        assert_abs_diff_eq!(loss_value(&l, 800.0, 1.0).unwrap(), 0.0, epsilon = 1e-300);
        assert_abs_diff_eq!(loss_value(&l, -800.0, 1.0).unwrap(), 800.0, epsilon = 1e-12);
        assert_abs_diff_eq!(loss_subgradient(&l, -800.0, 1.0).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn hinge_is_a_translated_check_loss_at_level_zero() {
        // check-loss formula at θ = 0: ρ₀(t) = (0 − 1(t ≤ 0))·t = max(0, −t)
        let rho0 = |t: f64| (0.0 - if t <= 0.0 { 1.0 } else { 0.0 }) * t;
        let h = LossModel::hinge();
        for k in -40..=40 {
            let margin = k as f64 * 0.1;
            let expected = rho0(margin - 1.0);
            assert_abs_diff_eq!(loss_value(&h, margin, 1.0).unwrap(), expected, epsilon = 1e-12);
            // sign split: zero above the margin, linear below it
            if margin >= 1.0 {
                assert_eq!(expected.abs(), 0.0);
            } else {
                assert!(expected > 0.0);
            }
        }
    }

    fn label() -> impl Strategy<Value = f64> {
        prop_oneof![Just(1.0), Just(-1.0)]
    }

    proptest! {
        #[test]
        fn convex_in_score(t1 in -10.0..10.0f64, t2 in -10.0..10.0f64, a in 0.0..=1.0f64, y in label()) {
            for m in models() {
                let mid = loss_value(&m, a * t1 + (1.0 - a) * t2, y).unwrap();
                let chord = a * loss_value(&m, t1, y).unwrap() + (1.0 - a) * loss_value(&m, t2, y).unwrap();
                prop_assert!(mid <= chord + 1e-12);
            }
        }

        #[test]
        fn lipschitz_in_score(t1 in -10.0..10.0f64, t2 in -10.0..10.0f64, y in label()) {
            for m in models() {
                let d = (loss_value(&m, t1, y).unwrap() - loss_value(&m, t2, y).unwrap()).abs();
                prop_assert!(d <= m.lipschitz() * (t1 - t2).abs() + 1e-12);
                prop_assert!(loss_subgradient(&m, t1, y).unwrap().abs() <= m.lipschitz());
            }
        }

        #[test]
        fn subgradient_inequality(t1 in -10.0..10.0f64, t2 in -10.0..10.0f64, y in label()) {
            for m in models() {
                let lhs = loss_value(&m, t2, y).unwrap() - loss_value(&m, t1, y).unwrap();
                let rhs = loss_subgradient(&m, t1, y).unwrap() * (t2 - t1);
                prop_assert!(lhs >= rhs - 1e-12);
            }
        }

        #[test]
        fn nonnegative(t in -50.0..50.0f64, y in label()) {
            for m in models() {
                prop_assert!(loss_value(&m, t, y).unwrap() >= 0.0);
            }
        }
    }
}
