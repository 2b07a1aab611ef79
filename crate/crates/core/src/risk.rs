//! Losses, the plain empirical risk, and the non-negative PU risk with its
//! analytic gradient for a logistic linear scorer.
//!
//! With `n_p` positive scores and `n_u` unlabeled scores the PU risk is
//!
//! ```text
//! R = 1/n_p Σ l(ŷp, 1) + max(0, 1/n_u Σ l(ŷu, 0) − π/n_p Σ l(ŷp, 0))
//! ```
//!
//! When the max selects 0 the bracketed term contributes no gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// Mean absolute error: `l(ŷ,1) = 1 − ŷ`, `l(ŷ,0) = ŷ`.
    #[default]
    Mae,
    /// Binary cross-entropy.
    Bce,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Loss {
    pub fn value(self, score: f64, positive: bool) -> f64 {
        match (self, positive) {
            (Loss::Mae, true) => 1.0 - score,
            (Loss::Mae, false) => score,
            (Loss::Bce, true) => -score.ln(),
            (Loss::Bce, false) => -(1.0 - score).ln(),
        }
    }

    /// Loss as a function of the logit `z`, with `ŷ = sigmoid(z)`.
    pub fn value_at_logit(self, z: f64, positive: bool) -> f64 {
        match (self, positive) {
            (Loss::Mae, p) => self.value(sigmoid(z), p),
            (Loss::Bce, true) => softplus(-z),
            (Loss::Bce, false) => softplus(z),
        }
    }

    /// `d l(sigmoid(z), y) / dz`.
    pub fn derivative_at_logit(self, z: f64, positive: bool) -> f64 {
        let s = sigmoid(z);
        match (self, positive) {
            (Loss::Mae, true) => -s * (1.0 - s),
            (Loss::Mae, false) => s * (1.0 - s),
            (Loss::Bce, true) => s - 1.0,
            (Loss::Bce, false) => s,
        }
    }
}

fn check_score(score: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::OutOfRange(format!("score {score} outside [0, 1]")));
    }
    Ok(())
}

fn check_prior(prior: f64) -> Result<()> {
    // 0 is accepted: it turns the PU risk into the positive/negative risk.
    if !(0.0..1.0).contains(&prior) {
        return Err(Error::OutOfRange(format!("class prior {prior} outside [0, 1)")));
    }
    Ok(())
}

/// Mean loss over `(score, is_positive)` pairs.
pub fn empirical_risk(pairs: &[(f64, bool)], loss: Loss) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("empirical risk needs at least one example"));
    }
    let mut sum = 0.0;
    for &(score, positive) in pairs {
        check_score(score)?;
        sum += loss.value(score, positive);
    }
    Ok(sum / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuRisk {
    pub risk: f64,
    /// `1/n_p Σ l(ŷp, 1)`.
    pub positive_term: f64,
    /// The argument of the max: `1/n_u Σ l(ŷu, 0) − π/n_p Σ l(ŷp, 0)`.
    pub correction: f64,
    pub clamp_active: bool,
}

impl PuRisk {
    fn from_terms(positive_term: f64, unlabeled_negative: f64, positive_negative: f64, prior: f64) -> Self {
        let correction = unlabeled_negative - prior * positive_negative;
        let clamp_active = correction < 0.0;
        PuRisk {
            risk: positive_term + if clamp_active { 0.0 } else { correction },
            positive_term,
            correction,
            clamp_active,
        }
    }
}

pub fn pu_risk(pos_scores: &[f64], unl_scores: &[f64], prior: f64, loss: Loss) -> Result<PuRisk> {
    if pos_scores.is_empty() {
        return Err(Error::Empty("PU risk needs at least one positive score"));
    }
    if unl_scores.is_empty() {
        return Err(Error::Empty("PU risk needs at least one unlabeled score"));
    }
    check_prior(prior)?;
    let np = pos_scores.len() as f64;
    let nu = unl_scores.len() as f64;
    let (mut pos1, mut pos0, mut unl0) = (0.0, 0.0, 0.0);
    for &s in pos_scores {
        check_score(s)?;
        pos1 += loss.value(s, true);
        pos0 += loss.value(s, false);
    }
    for &s in unl_scores {
        check_score(s)?;
        unl0 += loss.value(s, false);
    }
    Ok(PuRisk::from_terms(pos1 / np, unl0 / nu, pos0 / np, prior))
}

/// PU risk from logits; both slices must be non-empty.
pub(crate) fn pu_risk_from_logits(pos_z: &[f64], unl_z: &[f64], prior: f64, loss: Loss) -> PuRisk {
    let np = pos_z.len() as f64;
    let nu = unl_z.len() as f64;
    let pos1 = pos_z.iter().map(|&z| loss.value_at_logit(z, true)).sum::<f64>() / np;
    let pos0 = pos_z.iter().map(|&z| loss.value_at_logit(z, false)).sum::<f64>() / np;
    let unl0 = unl_z.iter().map(|&z| loss.value_at_logit(z, false)).sum::<f64>() / nu;
    PuRisk::from_terms(pos1, unl0, pos0, prior)
}

/// A logistic linear scorer the gradient code can read weights from.
pub(crate) trait LinearScorer {
    fn weight(&self, id: u32) -> f64;
    fn bias(&self) -> f64;

    fn logit(&self, x: &FeatureVector) -> f64 {
        self.bias() + x.entries().iter().map(|&(id, v)| self.weight(id) * v).sum::<f64>()
    }
}

/// Computes the PU risk of a batch from logits and streams the gradient:
/// `emit(id, g)` is called once per (example, feature) pair with the weight
/// gradient contribution. Returns the risk and the bias gradient.
pub(crate) fn pu_risk_and_gradient<S: LinearScorer>(
    scorer: &S,
    pos: &[&FeatureVector],
    unl: &[&FeatureVector],
    prior: f64,
    loss: Loss,
    mut emit: impl FnMut(u32, f64),
) -> Result<(PuRisk, f64)> {
    if pos.is_empty() {
        return Err(Error::Empty("PU risk needs at least one positive example"));
    }
    if unl.is_empty() {
        return Err(Error::Empty("PU risk needs at least one unlabeled example"));
    }
    check_prior(prior)?;
    let np = pos.len() as f64;
    let nu = unl.len() as f64;

    let pos_z: Vec<f64> = pos.iter().map(|x| scorer.logit(x)).collect();
    let unl_z: Vec<f64> = unl.iter().map(|x| scorer.logit(x)).collect();
    let risk = pu_risk_from_logits(&pos_z, &unl_z, prior, loss);

    let mut bias_grad = 0.0;
    for (x, &z) in pos.iter().zip(&pos_z) {
        let mut coef = loss.derivative_at_logit(z, true) / np;
        if !risk.clamp_active {
            coef -= prior * loss.derivative_at_logit(z, false) / np;
        }
        bias_grad += coef;
        for &(id, v) in x.entries() {
            emit(id, coef * v);
        }
    }
    if !risk.clamp_active {
        for (x, &z) in unl.iter().zip(&unl_z) {
            let coef = loss.derivative_at_logit(z, false) / nu;
            bias_grad += coef;
            for &(id, v) in x.entries() {
                emit(id, coef * v);
            }
        }
    }
    Ok((risk, bias_grad))
}
