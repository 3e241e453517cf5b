//! Norm-bounded adversarial and virtual-adversarial input perturbations.
//!
//! All functions take the model by shared reference: the gradient used to
//! build a perturbation comes from a read-only snapshot of the parameters,
//! and callers hold the result fixed while computing parameter updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{kl_to_perturbed, pairwise_loss, pointwise_ce, Label};
use crate::models::{Input, InputGrad, Perturbation, ScoreModel};
use crate::numerics::{check_len, l2_normalize, sigmoid, sign_scale, standard_normal_vec, Mat64, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    L2,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbConfig {
    pub epsilon: f64,
    pub norm: Norm,
    /// VAT probe radius as a fraction of `epsilon`.
    pub xi: f64,
    pub power_iters: usize,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            norm: Norm::L2,
            xi: 0.01,
            power_iters: 1,
        }
    }
}

impl PerturbConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    /// `epsilon = 0` is accepted and turns every perturbation off.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(Error::Config(format!("xi must be > 0, got {}", self.xi)));
        }
        if self.power_iters == 0 {
            return Err(Error::Config("power_iters must be >= 1".into()));
        }
        Ok(())
    }

    /// Project a gradient onto the boundary of the epsilon ball.
    pub fn project(&self, g: &[f64]) -> Vec<f64> {
        match self.norm {
            Norm::L2 => l2_normalize(g, self.epsilon),
            Norm::Max => sign_scale(g, self.epsilon),
        }
    }

    fn project_grad(&self, g: InputGrad) -> Perturbation {
        Perturbation {
            query: g.query.map(|q| self.project(&q)),
            doc: Some(self.project(&g.doc)),
        }
    }
}

/// Perturbations for the two documents of a pair; the query offset is shared.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairPerturbation {
    pub query: Option<Vec<f64>>,
    pub pos: Option<Vec<f64>>,
    pub neg: Option<Vec<f64>>,
}

impl PairPerturbation {
    pub fn for_pos(&self) -> Perturbation {
        Perturbation {
            query: self.query.clone(),
            doc: self.pos.clone(),
        }
    }

    pub fn for_neg(&self) -> Perturbation {
        Perturbation {
            query: self.query.clone(),
            doc: self.neg.clone(),
        }
    }
}

/// Fast-gradient perturbation of the pointwise cross-entropy for `label`.
pub fn adversarial_perturbation<M: ScoreModel>(
    model: &M,
    input: &Input,
    label: Label,
    cfg: &PerturbConfig,
) -> Result<Perturbation> {
    cfg.validate()?;
    if cfg.epsilon == 0.0 {
        model.slot_dims(input)?;
        return Ok(Perturbation::none());
    }
    let s = model.score_clean(input)?;
    let up = pointwise_ce(s, label).grad;
    let g = model.input_grad(input, &Perturbation::none(), up)?;
    Ok(cfg.project_grad(g))
}

/// Fast-gradient perturbation of the pairwise loss, one epsilon ball per vector.
pub fn pairwise_adversarial_perturbation<M: ScoreModel>(
    model: &M,
    pos: &Input,
    neg: &Input,
    cfg: &PerturbConfig,
) -> Result<PairPerturbation> {
    cfg.validate()?;
    if cfg.epsilon == 0.0 {
        model.slot_dims(pos)?;
        model.slot_dims(neg)?;
        return Ok(PairPerturbation::default());
    }
    let none = Perturbation::none();
    let up = pairwise_loss(model.score(pos, &none)?, model.score(neg, &none)?).grad;
    let gp = model.input_grad(pos, &none, up)?;
    let gn = model.input_grad(neg, &none, -up)?;
    let query = match (gp.query, gn.query) {
        (Some(a), Some(b)) => {
            check_len(a.len(), b.len())?;
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            Some(cfg.project(&sum))
        }
        _ => None,
    };
    Ok(PairPerturbation {
        query,
        pos: Some(cfg.project(&gp.doc)),
        neg: Some(cfg.project(&gn.doc)),
    })
}

/// Virtual adversarial perturbation by power iteration on the KL curvature.
///
/// All slots are probed together: a random offset of radius `xi * epsilon`
/// per slot is applied at once, and the KL gradient at that point is split
/// back into slots and projected onto each slot's epsilon ball.
pub fn vat_perturbation<M: ScoreModel>(
    model: &M,
    input: &Input,
    cfg: &PerturbConfig,
    rng: &mut Rng,
) -> Result<Perturbation> {
    cfg.validate()?;
    let (qdim, ddim) = model.slot_dims(input)?;
    if cfg.epsilon == 0.0 {
        return Ok(Perturbation::none());
    }
    let radius = cfg.xi * cfg.epsilon;
    let mut probe = Perturbation {
        query: qdim.map(|n| l2_normalize(&standard_normal_vec(rng, n), radius)),
        doc: Some(l2_normalize(&standard_normal_vec(rng, ddim), radius)),
    };
    let p_clean = sigmoid(model.score_clean(input)?);
    let mut g = InputGrad {
        query: None,
        doc: Vec::new(),
    };
    for it in 0..cfg.power_iters {
        let s = model.score(input, &probe)?;
        let up = kl_to_perturbed(p_clean, s).grad;
        g = model.input_grad(input, &probe, up)?;
        if it + 1 < cfg.power_iters {
            probe = Perturbation {
                query: g.query.as_ref().map(|q| l2_normalize(q, radius)),
                doc: Some(l2_normalize(&g.doc, radius)),
            };
        }
    }
    Ok(cfg.project_grad(g))
}

/// `x + eta`
pub fn apply_continuous(x: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
    check_len(x.len(), eta.len())?;
    Ok(x.iter().zip(eta).map(|(a, b)| a + b).collect())
}

/// Perturbed embedding `(x + eta)^T Z` of a one-hot (or mixed) input.
pub fn apply_discrete(x: &[f64], eta: &[f64], z: &Mat64) -> Result<Vec<f64>> {
    check_len(z.rows(), x.len())?;
    check_len(z.rows(), eta.len())?;
    z.t_matvec(&apply_continuous(x, eta)?)
}
