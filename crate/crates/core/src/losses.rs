//! Loss functions shared by all objectives.
//!
//! Each loss returns its value together with the derivative with respect to
//! the score it consumes, so callers can chain into model gradients.

use crate::numerics::{sigmoid, softplus};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    NonRelevant,
    Relevant,
}

impl Label {
    pub fn target(self) -> f64 {
        match self {
            Label::Relevant => 1.0,
            Label::NonRelevant => 0.0,
        }
    }
}

/// Loss value plus `d loss / d input`, where the input is a score (pointwise),
/// a score difference (pairwise) or the perturbed logit (KL).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: f64,
}

/// `-log p(y | score)` with `p(y = 1) = sigmoid(score)`.
pub fn pointwise_ce(score: f64, label: Label) -> LossValue {
    let value = match label {
        Label::Relevant => softplus(-score),
        Label::NonRelevant => softplus(score),
    };
    LossValue {
        value,
        grad: sigmoid(score) - label.target(),
    }
}

/// `-log sigmoid(score_plus - score_minus)`; the derivative is taken with
/// respect to the difference `score_plus - score_minus`.
pub fn pairwise_loss(score_plus: f64, score_minus: f64) -> LossValue {
    let diff = score_plus - score_minus;
    LossValue {
        value: softplus(-diff),
        grad: sigmoid(diff) - 1.0,
    }
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `KL[Bernoulli(p) || Bernoulli(p_prime)]` after clamping both arguments.
pub fn bernoulli_kl(p: f64, p_prime: f64) -> f64 {
    let p = clamp_prob(p);
    let q = clamp_prob(p_prime);
    // log ratios through ln_1p of the exact difference; the two first-order
    // terms cancel, leaving O(d^2), so plain logs lose everything below ~1e-8.
    let d = p - q;
    let kl = p * (d / q).ln_1p() + (1.0 - p) * (-d / (1.0 - q)).ln_1p();
    kl.max(0.0)
}

/// KL between the clean relevance distribution `p_clean` (held constant) and
/// the one induced by `perturbed_score`. The derivative is with respect to
/// `perturbed_score`.
pub fn kl_to_perturbed(p_clean: f64, perturbed_score: f64) -> LossValue {
    let q = sigmoid(perturbed_score);
    LossValue {
        value: bernoulli_kl(p_clean, q),
        grad: clamp_prob(q) - clamp_prob(p_clean),
    }
}
