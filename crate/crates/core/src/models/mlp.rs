use serde::{Deserialize, Serialize};

use super::{apply_dense, mismatch, slot, DenseGrad, Input, InputGrad, ModelKind, Perturbation, ScoreModel, INIT_HALF_WIDTH};
use crate::error::Result;
use crate::numerics::{check_len, dot, uniform_vec, Mat64, Rng};

/// Two-layer ReLU network over a joint query-document feature vector:
/// `w2 . relu(W1 x + b1) + b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMlp {
    pub w1: Mat64,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl RankMlp {
    pub fn new(input_dim: usize, hidden: usize, rng: &mut Rng) -> Self {
        let w1 = Mat64::uniform(hidden, input_dim, INIT_HALF_WIDTH, rng);
        let w2 = uniform_vec(rng, hidden, INIT_HALF_WIDTH);
        Self {
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: 0.0,
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w1: Mat64::zeros(hidden, input_dim),
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows()
    }

    fn features<'a>(&self, input: &Input<'a>) -> Result<&'a [f64]> {
        match *input {
            Input::Features(x) => {
                check_len(self.input_dim(), x.len())?;
                Ok(x)
            }
            _ => Err(mismatch(ModelKind::RankMlp, input)),
        }
    }

    /// Perturbed input `x + eta` (or `x` when no document perturbation is set).
    fn effective_input(&self, input: &Input, eta: &Perturbation) -> Result<Vec<f64>> {
        let x = self.features(input)?;
        Ok(match slot(&eta.doc, self.input_dim())? {
            Some(e) => x.iter().zip(e).map(|(a, b)| a + b).collect(),
            None => x.to_vec(),
        })
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden())
            .map(|j| dot(self.w1.row(j), x) + self.b1[j])
            .collect()
    }

    /// Score of a raw feature vector.
    pub fn score_features(&self, x: &[f64]) -> Result<f64> {
        check_len(self.input_dim(), x.len())?;
        let h = self.pre_activation(x);
        Ok(h.iter().zip(&self.w2).map(|(&hj, &w)| w * hj.max(0.0)).sum::<f64>() + self.b2)
    }

    /// `upstream * W1^T (w2 * 1[W1 x + b1 > 0])`
    pub fn input_grad_features(&self, x: &[f64], upstream: f64) -> Result<Vec<f64>> {
        check_len(self.input_dim(), x.len())?;
        let h = self.pre_activation(x);
        let delta: Vec<f64> = h
            .iter()
            .zip(&self.w2)
            .map(|(&hj, &w)| if hj > 0.0 { upstream * w } else { 0.0 })
            .collect();
        self.w1.t_matvec(&delta)
    }
}

impl ScoreModel for RankMlp {
    type Grad = DenseGrad;

    fn kind(&self) -> ModelKind {
        ModelKind::RankMlp
    }

    fn slot_dims(&self, input: &Input) -> Result<(Option<usize>, usize)> {
        self.features(input)?;
        Ok((None, self.input_dim()))
    }

    fn score(&self, input: &Input, eta: &Perturbation) -> Result<f64> {
        let x = self.effective_input(input, eta)?;
        self.score_features(&x)
    }

    fn input_grad(&self, input: &Input, eta: &Perturbation, upstream: f64) -> Result<InputGrad> {
        let x = self.effective_input(input, eta)?;
        Ok(InputGrad {
            query: None,
            doc: self.input_grad_features(&x, upstream)?,
        })
    }

    fn zero_grad(&self) -> DenseGrad {
        DenseGrad(vec![0.0; self.w1.as_slice().len() + 2 * self.hidden() + 1])
    }

    fn accumulate_param_grad(
        &self,
        input: &Input,
        eta: &Perturbation,
        upstream: f64,
        acc: &mut DenseGrad,
    ) -> Result<()> {
        let x = self.effective_input(input, eta)?;
        if upstream == 0.0 {
            return Ok(());
        }
        let (k, l) = (self.input_dim(), self.hidden());
        let h = self.pre_activation(&x);
        let g = &mut acc.0;
        let (gw1, rest) = g.split_at_mut(k * l);
        let (gb1, rest) = rest.split_at_mut(l);
        let (gw2, gb2) = rest.split_at_mut(l);
        for j in 0..l {
            if h[j] > 0.0 {
                let d = upstream * self.w2[j];
                for (gw, xm) in gw1[j * k..(j + 1) * k].iter_mut().zip(&x) {
                    *gw += d * xm;
                }
                gb1[j] += d;
                gw2[j] += upstream * h[j];
            }
        }
        gb2[0] += upstream;
        Ok(())
    }

    fn apply_grad(&mut self, grad: &DenseGrad, lr: f64, weight_decay: f64) {
        let (k, l) = (self.input_dim(), self.hidden());
        let g = &grad.0;
        apply_dense(self.w1.as_mut_slice(), &g[..k * l], lr, weight_decay);
        apply_dense(&mut self.b1, &g[k * l..k * l + l], lr, weight_decay);
        apply_dense(&mut self.w2, &g[k * l + l..k * l + 2 * l], lr, weight_decay);
        apply_dense(std::slice::from_mut(&mut self.b2), &g[k * l + 2 * l..], lr, weight_decay);
    }

    fn params(&self) -> Vec<f64> {
        let mut p = self.w1.as_slice().to_vec();
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        let (k, l) = (self.input_dim(), self.hidden());
        check_len(k * l + 2 * l + 1, flat.len())?;
        self.w1.as_mut_slice().copy_from_slice(&flat[..k * l]);
        self.b1.copy_from_slice(&flat[k * l..k * l + l]);
        self.w2.copy_from_slice(&flat[k * l + l..k * l + 2 * l]);
        self.b2 = flat[k * l + 2 * l];
        Ok(())
    }

    fn flat_grad(&self, grad: &DenseGrad) -> Vec<f64> {
        grad.0.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, seeded_rng, standard_normal_vec, FD_STEP};

    /// Straight-line forward pass written independently of the model code.
    fn reference_score(m: &RankMlp, x: &[f64]) -> f64 {
        let mut out = m.b2;
        for j in 0..m.hidden() {
            let mut a = m.b1[j];
            for i in 0..m.input_dim() {
                a += m.w1.get(j, i) * x[i];
            }
            if a > 0.0 {
                out += m.w2[j] * a;
            }
        }
        out
    }

    fn random_model(seed: u64, k: usize, l: usize) -> RankMlp {
        let mut rng = seeded_rng(seed);
        let mut m = RankMlp::new(k, l, &mut rng);
        let p = standard_normal_vec(&mut rng, m.params().len());
        m.set_params(&p).unwrap();
        m
    }

    #[test]
    fn zero_model_scores_zero() {
        let m = RankMlp::zeros(4, 4);
        assert_eq!(m.score_features(&[1.0, -2.0, 3.0, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn dead_unit() {
        let m = RankMlp {
            w1: Mat64::from_rows(&[vec![1.0]]).unwrap(),
            b1: vec![-2.0],
            w2: vec![1.0],
            b2: 0.0,
        };
        assert_eq!(m.score_features(&[1.0]).unwrap(), 0.0);
        assert_eq!(m.input_grad_features(&[1.0], 1.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn matches_reference_forward_pass() {
        for seed in 0..20 {
            let m = random_model(seed, 7, 5);
            let x = standard_normal_vec(&mut seeded_rng(seed + 100), 7);
            let a = m.score_features(&x).unwrap();
            assert!((a - reference_score(&m, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn upstream_zero_gives_zero_gradient() {
        let m = random_model(3, 6, 6);
        let x = standard_normal_vec(&mut seeded_rng(4), 6);
        assert!(m.input_grad_features(&x, 0.0).unwrap().iter().all(|&v| v == 0.0));
        let mut acc = m.zero_grad();
        m.accumulate_param_grad(&Input::Features(&x), &Perturbation::none(), 0.0, &mut acc)
            .unwrap();
        assert_eq!(acc, m.zero_grad());
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        for seed in 0..30 {
            let m = random_model(seed, 8, 8);
            let x = standard_normal_vec(&mut seeded_rng(seed + 7), 8);
            let a = m.input_grad_features(&x, 1.0).unwrap();
            let n = finite_diff_grad(|z| m.score_features(z).unwrap(), &x, FD_STEP).unwrap();
            for (ai, ni) in a.iter().zip(&n) {
                assert!((ai - ni).abs() <= 1e-6 * ai.abs().max(1.0), "{ai} vs {ni}");
            }
        }
    }

    #[test]
    fn dimension_and_representation_errors() {
        let m = RankMlp::zeros(3, 3);
        assert!(m.score_features(&[1.0]).is_err());
        assert!(m.score_clean(&Input::Ids { query: 0, doc: 0 }).is_err());
    }

    #[test]
    fn piecewise_linear_along_a_direction() {
        let m = random_model(9, 5, 5);
        let mut rng = seeded_rng(10);
        let x = standard_normal_vec(&mut rng, 5);
        let v = standard_normal_vec(&mut rng, 5);
        let at = |a: f64| {
            let z: Vec<f64> = x.iter().zip(&v).map(|(xi, vi)| xi + a * vi).collect();
            m.score_features(&z).unwrap()
        };
        // tiny steps stay inside one activation region for a generic x
        let (a, b, c) = (at(0.0), at(1e-6), at(2e-6));
        assert!(((c - b) - (b - a)).abs() < 1e-9);
    }
}
