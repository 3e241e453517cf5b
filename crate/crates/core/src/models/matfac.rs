use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{mismatch, slot, Input, InputGrad, ModelKind, ParamGrad, Perturbation, ScoreModel, INIT_HALF_WIDTH};
use crate::error::{Error, Result};
use crate::numerics::{axpy, check_len, dot, Mat64, Rng};

/// Matrix factorization with item bias: `v_u . v_i + b_i`.
///
/// Perturbations act on the latent vectors: the query slot offsets `v_u`,
/// the document slot offsets `v_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatFac {
    pub user_vecs: Mat64,
    pub item_vecs: Mat64,
    pub item_bias: Vec<f64>,
}

/// Row-sparse gradient for [`MatFac`]; only rows touched by a step are stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseGrad {
    pub users: BTreeMap<usize, Vec<f64>>,
    pub items: BTreeMap<usize, Vec<f64>>,
    pub bias: BTreeMap<usize, f64>,
}

impl ParamGrad for SparseGrad {
    fn add_scaled(&mut self, other: &Self, alpha: f64) {
        for (u, g) in &other.users {
            let row = self.users.entry(*u).or_insert_with(|| vec![0.0; g.len()]);
            axpy(alpha, g, row);
        }
        for (i, g) in &other.items {
            let row = self.items.entry(*i).or_insert_with(|| vec![0.0; g.len()]);
            axpy(alpha, g, row);
        }
        for (i, g) in &other.bias {
            *self.bias.entry(*i).or_insert(0.0) += alpha * g;
        }
    }
}

impl MatFac {
    pub fn new(num_users: usize, num_items: usize, dim: usize, rng: &mut Rng) -> Self {
        let user_vecs = Mat64::uniform(num_users, dim, INIT_HALF_WIDTH, rng);
        let item_vecs = Mat64::uniform(num_items, dim, INIT_HALF_WIDTH, rng);
        Self {
            user_vecs,
            item_vecs,
            item_bias: vec![0.0; num_items],
        }
    }

    pub fn dim(&self) -> usize {
        self.user_vecs.cols()
    }

    pub fn num_users(&self) -> usize {
        self.user_vecs.rows()
    }

    pub fn num_items(&self) -> usize {
        self.item_vecs.rows()
    }

    fn ids(&self, input: &Input) -> Result<(usize, usize)> {
        match *input {
            Input::Ids { query, doc } => {
                self.check_ids(query, doc)?;
                Ok((query, doc))
            }
            _ => Err(mismatch(ModelKind::MatFac, input)),
        }
    }

    fn check_ids(&self, user: usize, item: usize) -> Result<()> {
        if user >= self.num_users() {
            return Err(Error::IdOutOfRange {
                what: "user",
                id: user,
                size: self.num_users(),
            });
        }
        if item >= self.num_items() {
            return Err(Error::IdOutOfRange {
                what: "item",
                id: item,
                size: self.num_items(),
            });
        }
        Ok(())
    }

    /// Clean score `v_u . v_i + b_i`.
    pub fn score_ids(&self, user: usize, item: usize) -> Result<f64> {
        self.check_ids(user, item)?;
        Ok(dot(self.user_vecs.row(user), self.item_vecs.row(item)) + self.item_bias[item])
    }

    /// `(d score / d v_u, d score / d v_i) = (v_i, v_u)`.
    pub fn input_grads(&self, user: usize, item: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_ids(user, item)?;
        Ok((self.item_vecs.row(item).to_vec(), self.user_vecs.row(user).to_vec()))
    }

    /// Perturbed latent vectors `(v_u + eta_q, v_i + eta_d)`.
    fn effective(&self, user: usize, item: usize, eta: &Perturbation) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.dim();
        let mut vu = self.user_vecs.row(user).to_vec();
        let mut vi = self.item_vecs.row(item).to_vec();
        if let Some(e) = slot(&eta.query, k)? {
            axpy(1.0, e, &mut vu);
        }
        if let Some(e) = slot(&eta.doc, k)? {
            axpy(1.0, e, &mut vi);
        }
        Ok((vu, vi))
    }
}

impl ScoreModel for MatFac {
    type Grad = SparseGrad;

    fn kind(&self) -> ModelKind {
        ModelKind::MatFac
    }

    fn slot_dims(&self, input: &Input) -> Result<(Option<usize>, usize)> {
        self.ids(input)?;
        Ok((Some(self.dim()), self.dim()))
    }

    fn score(&self, input: &Input, eta: &Perturbation) -> Result<f64> {
        let (u, i) = self.ids(input)?;
        if eta.query.is_none() && eta.doc.is_none() {
            return Ok(dot(self.user_vecs.row(u), self.item_vecs.row(i)) + self.item_bias[i]);
        }
        let (vu, vi) = self.effective(u, i, eta)?;
        Ok(dot(&vu, &vi) + self.item_bias[i])
    }

    fn input_grad(&self, input: &Input, eta: &Perturbation, upstream: f64) -> Result<InputGrad> {
        let (u, i) = self.ids(input)?;
        let (vu, vi) = self.effective(u, i, eta)?;
        Ok(InputGrad {
            query: Some(vi.iter().map(|v| upstream * v).collect()),
            doc: vu.iter().map(|v| upstream * v).collect(),
        })
    }

    fn zero_grad(&self) -> SparseGrad {
        SparseGrad::default()
    }

    fn accumulate_param_grad(
        &self,
        input: &Input,
        eta: &Perturbation,
        upstream: f64,
        acc: &mut SparseGrad,
    ) -> Result<()> {
        let (u, i) = self.ids(input)?;
        let (vu, vi) = self.effective(u, i, eta)?;
        if upstream == 0.0 {
            return Ok(());
        }
        let k = self.dim();
        axpy(upstream, &vi, acc.users.entry(u).or_insert_with(|| vec![0.0; k]));
        axpy(upstream, &vu, acc.items.entry(i).or_insert_with(|| vec![0.0; k]));
        *acc.bias.entry(i).or_insert(0.0) += upstream;
        Ok(())
    }

    fn apply_grad(&mut self, grad: &SparseGrad, lr: f64, weight_decay: f64) {
        for (&u, g) in &grad.users {
            super::apply_dense(self.user_vecs.row_mut(u), g, lr, weight_decay);
        }
        for (&i, g) in &grad.items {
            super::apply_dense(self.item_vecs.row_mut(i), g, lr, weight_decay);
        }
        for (&i, &g) in &grad.bias {
            super::apply_dense(std::slice::from_mut(&mut self.item_bias[i]), &[g], lr, weight_decay);
        }
    }

    fn params(&self) -> Vec<f64> {
        let mut p = self.user_vecs.as_slice().to_vec();
        p.extend_from_slice(self.item_vecs.as_slice());
        p.extend_from_slice(&self.item_bias);
        p
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        let nu = self.user_vecs.as_slice().len();
        let ni = self.item_vecs.as_slice().len();
        check_len(nu + ni + self.num_items(), flat.len())?;
        self.user_vecs.as_mut_slice().copy_from_slice(&flat[..nu]);
        self.item_vecs.as_mut_slice().copy_from_slice(&flat[nu..nu + ni]);
        self.item_bias.copy_from_slice(&flat[nu + ni..]);
        Ok(())
    }

    fn flat_grad(&self, grad: &SparseGrad) -> Vec<f64> {
        let k = self.dim();
        let nu = self.user_vecs.as_slice().len();
        let ni = self.item_vecs.as_slice().len();
        let mut out = vec![0.0; nu + ni + self.num_items()];
        for (&u, g) in &grad.users {
            out[u * k..(u + 1) * k].copy_from_slice(g);
        }
        for (&i, g) in &grad.items {
            out[nu + i * k..nu + (i + 1) * k].copy_from_slice(g);
        }
        for (&i, &g) in &grad.bias {
            out[nu + ni + i] = g;
        }
        out
    }
}
