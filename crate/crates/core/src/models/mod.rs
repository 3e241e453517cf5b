//! Differentiable scorers.
//!
//! Every model scores a `(query, document)` input and exposes two kinds of
//! gradient: with respect to its perturbable inputs (used to build
//! adversarial perturbations) and with respect to its parameters (used by
//! SGD). Perturbable inputs come in at most two slots: an optional query slot
//! shared by both documents of a pair, and a document slot.
//!
//! | model | query slot | document slot |
//! |---|---|---|
//! | [`RankMlp`] | none | joint feature vector |
//! | [`MatFac`] | user latent vector | item latent vector |
//! | [`EmbedCosine`] | vocabulary mixing weights of the query | vocabulary mixing weights of the document |

mod checkpoint;
mod cosine;
mod matfac;
mod mlp;

pub use checkpoint::{load_checkpoint, save_checkpoint, AnyModel, Checkpoint};
pub use cosine::EmbedCosine;
pub use matfac::{MatFac, SparseGrad};
pub use mlp::RankMlp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the uniform initialization range for weight matrices.
pub const INIT_HALF_WIDTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RankMlp,
    MatFac,
    EmbedCosine,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::RankMlp => "rank_mlp",
            ModelKind::MatFac => "mat_fac",
            ModelKind::EmbedCosine => "embed_cosine",
        }
    }
}

/// One `(query, document)` pair in the representation a model consumes.
#[derive(Debug, Clone, Copy)]
pub enum Input<'a> {
    /// Joint query-document feature vector.
    Features(&'a [f64]),
    /// User and item ids.
    Ids { query: usize, doc: usize },
    /// Query and document token ids.
    Tokens { query: &'a [usize], doc: &'a [usize] },
}

impl Input<'_> {
    pub fn repr_name(&self) -> &'static str {
        match self {
            Input::Features(_) => "features",
            Input::Ids { .. } => "ids",
            Input::Tokens { .. } => "tokens",
        }
    }
}

/// Offsets added to a model's perturbable inputs. Absent slots are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Perturbation {
    pub query: Option<Vec<f64>>,
    pub doc: Option<Vec<f64>>,
}

impl Perturbation {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        let zero = |v: &Option<Vec<f64>>| v.as_ref().is_none_or(|v| v.iter().all(|&x| x == 0.0));
        zero(&self.query) && zero(&self.doc)
    }
}

/// Gradient of a scalar with respect to each perturbable slot.
#[derive(Debug, Clone, PartialEq)]
pub struct InputGrad {
    pub query: Option<Vec<f64>>,
    pub doc: Vec<f64>,
}

/// Gradient accumulator for a model's parameters.
pub trait ParamGrad: Clone + Send {
    /// `self += alpha * other`
    fn add_scaled(&mut self, other: &Self, alpha: f64);
}

/// Dense gradient in a model's flat parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad(pub Vec<f64>);

impl ParamGrad for DenseGrad {
    fn add_scaled(&mut self, other: &Self, alpha: f64) {
        crate::numerics::axpy(alpha, &other.0, &mut self.0);
    }
}

pub trait ScoreModel: Clone + Send + Sync {
    type Grad: ParamGrad;

    fn kind(&self) -> ModelKind;

    /// Dimensions of the (query, document) perturbation slots for `input`.
    fn slot_dims(&self, input: &Input) -> Result<(Option<usize>, usize)>;

    /// Score of `input` with `eta` added to its perturbable slots.
    fn score(&self, input: &Input, eta: &Perturbation) -> Result<f64>;

    fn score_clean(&self, input: &Input) -> Result<f64> {
        self.score(input, &Perturbation::none())
    }

    /// `upstream * d score / d slot`, evaluated at the perturbed input.
    fn input_grad(&self, input: &Input, eta: &Perturbation, upstream: f64) -> Result<InputGrad>;

    fn zero_grad(&self) -> Self::Grad;

    /// `acc += upstream * d score / d theta`, with `eta` held constant.
    fn accumulate_param_grad(
        &self,
        input: &Input,
        eta: &Perturbation,
        upstream: f64,
        acc: &mut Self::Grad,
    ) -> Result<()>;

    /// `theta -= lr * (grad + weight_decay * theta)`; the decay touches only
    /// parameters present in `grad` for sparse gradients.
    fn apply_grad(&mut self, grad: &Self::Grad, lr: f64, weight_decay: f64);

    /// All parameters in a fixed flat order.
    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, flat: &[f64]) -> Result<()>;

    /// `grad` laid out like [`ScoreModel::params`].
    fn flat_grad(&self, grad: &Self::Grad) -> Vec<f64>;
}

pub(crate) fn mismatch(expected: ModelKind, input: &Input) -> Error {
    Error::RepresentationMismatch {
        expected: expected.name(),
        got: input.repr_name(),
    }
}

pub(crate) fn slot<'a>(v: &'a Option<Vec<f64>>, dim: usize) -> Result<Option<&'a [f64]>> {
    match v {
        Some(v) => {
            crate::numerics::check_len(dim, v.len())?;
            Ok(Some(v.as_slice()))
        }
        None => Ok(None),
    }
}

pub(crate) fn apply_dense(params: &mut [f64], grad: &[f64], lr: f64, weight_decay: f64) {
    if weight_decay == 0.0 {
        for (p, g) in params.iter_mut().zip(grad) {
            *p -= lr * g;
        }
    } else {
        for (p, g) in params.iter_mut().zip(grad) {
            *p -= lr * (g + weight_decay * *p);
        }
    }
}
