//! The two risks the trainer balances.
//!
//! Classification risk is the usual exponential surrogate. Complexity risk
//! charges each example the cost its evaluation incurs, pushed through a
//! margin-style loss so that only examples we want to reject early (the
//! negatives) generate pressure.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

/// Margin weight of one example: `exp(-y * F(x))`.
#[inline]
pub fn exp_weight(label: Label, score: f64) -> f64 {
    (-label.sign() * score).exp()
}

/// Mean exponential loss over `(labels, scores)` pairs.
pub fn empirical_risk(labels: &[f64], scores: &[f64]) -> f64 {
    assert_eq!(labels.len(), scores.len());
    let n = labels.len() as f64;
    labels
        .iter()
        .zip(scores)
        .map(|(y, f)| (-y * f).exp())
        .sum::<f64>()
        / n
}

/// Loss applied to the signed complexity margin `y * omega`.
///
/// The enum exists so alternative shapes can slot in later; the trainer only
/// relies on the loss value and its (sub)gradient indicator `psi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComplexityLoss {
    Hinge,
}

impl ComplexityLoss {
    /// Loss value at signed margin `v`.
    pub fn value(self, v: f64) -> f64 {
        match self {
            ComplexityLoss::Hinge => (-v).max(0.0),
        }
    }

    /// Negated (sub)derivative indicator at the example's current margin.
    ///
    /// For the hinge this depends only on the label: the cost of a negative
    /// always counts (we take the left derivative at zero, so an example with
    /// zero accumulated cost still pushes), the cost of a positive never does.
    pub fn psi(self, label: Label) -> f64 {
        match self {
            ComplexityLoss::Hinge => match label {
                Label::Negative => 1.0,
                Label::Positive => 0.0,
            },
        }
    }
}

/// Mean complexity loss: `(1/n) * sum tau(y_i * omega_i)`.
///
/// `omegas` are per-example evaluation costs, which are nonnegative, so with
/// the hinge only negatives contribute.
pub fn complexity_risk(loss: ComplexityLoss, labels: &[f64], omegas: &[f64]) -> f64 {
    assert_eq!(labels.len(), omegas.len());
    let n = labels.len() as f64;
    labels
        .iter()
        .zip(omegas)
        .map(|(y, om)| loss.value(y * om))
        .sum::<f64>()
        / n
}

/// Weighting of the two risks: `L = R_E + eta * R_C`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LagrangianConfig {
    pub eta: f64,
    pub loss: ComplexityLoss,
}

impl LagrangianConfig {
    pub fn new(eta: f64, loss: ComplexityLoss) -> Result<LagrangianConfig> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::Config(format!(
                "eta must be finite and nonnegative, got {eta}"
            )));
        }
        Ok(LagrangianConfig { eta, loss })
    }

    pub fn lagrangian(&self, labels: &[f64], scores: &[f64], omegas: &[f64]) -> f64 {
        let r_e = empirical_risk(labels, scores);
        if self.eta == 0.0 {
            // Exact reduction: the complexity term is not even evaluated.
            return r_e;
        }
        r_e + self.eta * complexity_risk(self.loss, labels, omegas)
    }
}
