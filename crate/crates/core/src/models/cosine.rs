use serde::{Deserialize, Serialize};

use super::{mismatch, slot, DenseGrad, Input, InputGrad, ModelKind, Perturbation, ScoreModel, INIT_HALF_WIDTH};
use crate::error::{Error, Result};
use crate::numerics::{axpy, check_len, dot, norm2, Mat64, Rng, ZERO_NORM};

/// Cosine similarity of mean-pooled token embeddings.
///
/// Perturbations live in vocabulary space: a slot offset `eta` is added to
/// every token's one-hot before the embedding lookup, so the pooled vector
/// becomes `mean(Z[t]) + Z^T eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedCosine {
    pub embeddings: Mat64,
}

impl EmbedCosine {
    pub fn new(vocab: usize, dim: usize, rng: &mut Rng) -> Self {
        Self {
            embeddings: Mat64::uniform(vocab, dim, INIT_HALF_WIDTH, rng),
        }
    }

    pub fn vocab(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    /// Mean of the token embeddings, plus `Z^T eta` when `eta` is given.
    pub fn pooled(&self, tokens: &[usize], eta: Option<&[f64]>) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut v = vec![0.0; self.dim()];
        for &t in tokens {
            if t >= self.vocab() {
                return Err(Error::IdOutOfRange {
                    what: "token",
                    id: t,
                    size: self.vocab(),
                });
            }
            axpy(1.0, self.embeddings.row(t), &mut v);
        }
        let inv = 1.0 / tokens.len() as f64;
        v.iter_mut().for_each(|x| *x *= inv);
        if let Some(eta) = eta {
            axpy(1.0, &self.embeddings.t_matvec(eta)?, &mut v);
        }
        Ok(v)
    }

    /// Cosine of two token sequences.
    pub fn cosine_score(&self, query: &[usize], doc: &[usize]) -> Result<f64> {
        let vq = self.pooled(query, None)?;
        let vd = self.pooled(doc, None)?;
        cosine(&vq, &vd)
    }

    /// Gradients of the cosine with respect to each pooled vector.
    pub fn cosine_input_grads(&self, query: &[usize], doc: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
        let vq = self.pooled(query, None)?;
        let vd = self.pooled(doc, None)?;
        cosine_grads(&vq, &vd)
    }

    fn tokens<'a>(&self, input: &Input<'a>) -> Result<(&'a [usize], &'a [usize])> {
        match *input {
            Input::Tokens { query, doc } => Ok((query, doc)),
            _ => Err(mismatch(ModelKind::EmbedCosine, input)),
        }
    }

    fn pooled_pair(&self, input: &Input, eta: &Perturbation) -> Result<(Vec<f64>, Vec<f64>)> {
        let (q, d) = self.tokens(input)?;
        let eq = slot(&eta.query, self.vocab())?;
        let ed = slot(&eta.doc, self.vocab())?;
        Ok((self.pooled(q, eq)?, self.pooled(d, ed)?))
    }
}

fn nonzero_norm(v: &[f64]) -> Result<f64> {
    let n = norm2(v);
    if n <= ZERO_NORM {
        return Err(Error::ZeroNorm);
    }
    Ok(n)
}

/// `a . b / (|a| |b|)`
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    let (na, nb) = (nonzero_norm(a)?, nonzero_norm(b)?);
    Ok(dot(a, b) / (na * nb))
}

/// `(d cos / d a, d cos / d b)`
pub fn cosine_grads(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(a.len(), b.len())?;
    let (na, nb) = (nonzero_norm(a)?, nonzero_norm(b)?);
    let c = dot(a, b) / (na * nb);
    let ga = a
        .iter()
        .zip(b)
        .map(|(x, y)| y / (na * nb) - c * x / (na * na))
        .collect();
    let gb = a
        .iter()
        .zip(b)
        .map(|(x, y)| x / (na * nb) - c * y / (nb * nb))
        .collect();
    Ok((ga, gb))
}

impl ScoreModel for EmbedCosine {
    type Grad = DenseGrad;

    fn kind(&self) -> ModelKind {
        ModelKind::EmbedCosine
    }

    fn slot_dims(&self, input: &Input) -> Result<(Option<usize>, usize)> {
        self.tokens(input)?;
        Ok((Some(self.vocab()), self.vocab()))
    }

    fn score(&self, input: &Input, eta: &Perturbation) -> Result<f64> {
        let (vq, vd) = self.pooled_pair(input, eta)?;
        cosine(&vq, &vd)
    }

    fn input_grad(&self, input: &Input, eta: &Perturbation, upstream: f64) -> Result<InputGrad> {
        let (vq, vd) = self.pooled_pair(input, eta)?;
        let (gq, gd) = cosine_grads(&vq, &vd)?;
        let lift = |g: &[f64]| -> Vec<f64> { self.embeddings.matvec(g).unwrap().into_iter().map(|v| upstream * v).collect() };
        Ok(InputGrad {
            query: Some(lift(&gq)),
            doc: lift(&gd),
        })
    }

    fn zero_grad(&self) -> DenseGrad {
        DenseGrad(vec![0.0; self.embeddings.as_slice().len()])
    }

    fn accumulate_param_grad(
        &self,
        input: &Input,
        eta: &Perturbation,
        upstream: f64,
        acc: &mut DenseGrad,
    ) -> Result<()> {
        let (q, d) = self.tokens(input)?;
        let (vq, vd) = self.pooled_pair(input, eta)?;
        if upstream == 0.0 {
            return Ok(());
        }
        let (gq, gd) = cosine_grads(&vq, &vd)?;
        let k = self.dim();
        for (tokens, g, e) in [(q, &gq, &eta.query), (d, &gd, &eta.doc)] {
            let w = upstream / tokens.len() as f64;
            for &t in tokens {
                axpy(w, g, &mut acc.0[t * k..(t + 1) * k]);
            }
            if let Some(e) = e {
                for (j, &ej) in e.iter().enumerate() {
                    if ej != 0.0 {
                        axpy(upstream * ej, g, &mut acc.0[j * k..(j + 1) * k]);
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_grad(&mut self, grad: &DenseGrad, lr: f64, weight_decay: f64) {
        super::apply_dense(self.embeddings.as_mut_slice(), &grad.0, lr, weight_decay);
    }

    fn params(&self) -> Vec<f64> {
        self.embeddings.as_slice().to_vec()
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        check_len(self.embeddings.as_slice().len(), flat.len())?;
        self.embeddings.as_mut_slice().copy_from_slice(flat);
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

    fn random_model(seed: u64, vocab: usize, dim: usize) -> EmbedCosine {
        let mut rng = seeded_rng(seed);
        EmbedCosine {
            embeddings: Mat64::from_vec(vocab, dim, standard_normal_vec(&mut rng, vocab * dim)).unwrap(),
        }
    }

    fn straight_line_cosine(m: &EmbedCosine, q: &[usize], d: &[usize]) -> f64 {
        let k = m.dim();
        let mut a = vec![0.0; k];
        let mut b = vec![0.0; k];
        for f in 0..k {
            for &t in q {
                a[f] += m.embeddings.get(t, f) / q.len() as f64;
            }
            for &t in d {
                b[f] += m.embeddings.get(t, f) / d.len() as f64;
            }
        }
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for f in 0..k {
            ab += a[f] * b[f];
            aa += a[f] * a[f];
            bb += b[f] * b[f];
        }
        ab / (aa.sqrt() * bb.sqrt())
    }

    #[test]
    fn identical_sequences_score_one() {
        let m = random_model(1, 10, 6);
        let s = m.cosine_score(&[1, 4, 4, 7], &[1, 4, 4, 7]).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_embeddings_score_zero() {
        let m = EmbedCosine {
            embeddings: Mat64::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap(),
        };
        assert_eq!(m.cosine_score(&[0], &[1]).unwrap(), 0.0);
    }

    #[test]
    fn matches_straight_line_implementation() {
        for seed in 0..20 {
            let m = random_model(seed, 12, 5);
            let (q, d) = ([0, 3, 3, 11], [2, 5, 9]);
            let s = m.cosine_score(&q, &d).unwrap();
            assert!((s - straight_line_cosine(&m, &q, &d)).abs() < 1e-12);
            assert!((-1.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn errors() {
        let m = random_model(2, 4, 3);
        assert!(matches!(m.cosine_score(&[], &[1]), Err(Error::EmptySequence)));
        let z = EmbedCosine {
            embeddings: Mat64::zeros(3, 2),
        };
        assert!(matches!(z.cosine_score(&[0], &[1]), Err(Error::ZeroNorm)));
        assert!(m.cosine_score(&[9], &[1]).is_err());
    }

    #[test]
    fn gradient_vanishes_at_maximum() {
        let v = [0.3, -1.2, 2.0];
        let (a, b) = cosine_grads(&v, &v).unwrap();
        assert!(a.iter().chain(&b).all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn gradient_of_orthogonal_unit_vectors() {
        let (a, b) = cosine_grads(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(a, vec![0.0, 1.0]);
        assert_eq!(b, vec![1.0, 0.0]);
    }

    #[test]
    fn pooled_gradients_match_finite_differences() {
        for seed in 0..30 {
            let mut rng = seeded_rng(seed);
            let a = standard_normal_vec(&mut rng, 6);
            let b = standard_normal_vec(&mut rng, 6);
            let (ga, gb) = cosine_grads(&a, &b).unwrap();
            let na = finite_diff_grad(|z| cosine(z, &b).unwrap(), &a, FD_STEP).unwrap();
            let nb = finite_diff_grad(|z| cosine(&a, z).unwrap(), &b, FD_STEP).unwrap();
            for (x, y) in ga.iter().zip(&na).chain(gb.iter().zip(&nb)) {
                assert!((x - y).abs() <= 1e-4 * x.abs().max(1e-4), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn scale_invariant_per_side() {
        let m = random_model(3, 8, 4);
        let (q, d) = ([0usize, 1, 2], [5usize, 6]);
        let s = m.cosine_score(&q, &d).unwrap();
        let mut scaled = m.clone();
        for &t in &q {
            scaled.embeddings.row_mut(t).iter_mut().for_each(|v| *v *= 7.5);
        }
        assert!((scaled.cosine_score(&q, &d).unwrap() - s).abs() < 1e-9);
    }

    #[test]
    fn vocabulary_perturbation_mixes_rows() {
        let m = random_model(4, 5, 3);
        let mut eta = vec![0.0; 5];
        eta[0] = 0.25;
        let p = m.pooled(&[2], Some(&eta)).unwrap();
        for f in 0..3 {
            let want = m.embeddings.get(2, f) + 0.25 * m.embeddings.get(0, f);
            assert!((p[f] - want).abs() < 1e-15);
        }
    }
}
