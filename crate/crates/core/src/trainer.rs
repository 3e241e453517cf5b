//! Training objectives and the SGD loop.
//!
//! Each update processes one labeled positive and one sampled negative. The
//! clean loss terms and the perturbed (adversarial or KL) terms accumulate
//! into separate gradient buffers that are combined as `clean + alpha * adv`
//! just before the update. Perturbations and the clean probabilities used by
//! KL terms come from the parameters as they were before the step and are
//! held fixed while gradients are taken.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::RankingDataset;
use crate::error::{Error, Result};
use crate::losses::{kl_to_perturbed, pairwise_loss, pointwise_ce, Label};
use crate::models::{Input, ParamGrad, Perturbation, ScoreModel};
use crate::numerics::{derive_seed, seeded_rng, sigmoid, Rng};
use crate::perturb::{adversarial_perturbation, pairwise_adversarial_perturbation, vat_perturbation, PerturbConfig};
use crate::sampling::{NegativeSampler, SamplerConfig};

/// RNG stream ids derived from the master seed.
pub const STREAM_INIT: u64 = 0;
pub const STREAM_SHUFFLE: u64 = 1;
pub const STREAM_SAMPLER: u64 = 2;
pub const STREAM_PERTURB: u64 = 3;
pub const STREAM_UNLABELED: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Cross-entropy on the positive and the sampled negative.
    PlainPointwise,
    /// Pairwise logistic loss on (positive, sampled negative).
    PlainPairwise,
    PointwiseAt,
    PairwiseAt,
    /// Cross-entropy plus KL on labeled pairs and KL on every unlabeled pair.
    FullVat,
    PointwiseSvat,
    PairwiseSvat,
}

impl Objective {
    pub const ALL: [Objective; 7] = [
        Objective::PlainPointwise,
        Objective::PlainPairwise,
        Objective::PointwiseAt,
        Objective::PairwiseAt,
        Objective::FullVat,
        Objective::PointwiseSvat,
        Objective::PairwiseSvat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Objective::PlainPointwise => "plain_pointwise",
            Objective::PlainPairwise => "plain_pairwise",
            Objective::PointwiseAt => "pointwise_at",
            Objective::PairwiseAt => "pairwise_at",
            Objective::FullVat => "full_vat",
            Objective::PointwiseSvat => "pointwise_svat",
            Objective::PairwiseSvat => "pairwise_svat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }

    pub fn is_pairwise(self) -> bool {
        matches!(self, Objective::PlainPairwise | Objective::PairwiseAt | Objective::PairwiseSvat)
    }

    fn uses_vat(self) -> bool {
        matches!(self, Objective::FullVat | Objective::PointwiseSvat | Objective::PairwiseSvat)
    }

    fn uses_at(self) -> bool {
        matches!(self, Objective::PointwiseAt | Objective::PairwiseAt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub objective: Objective,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Positives per SGD update.
    pub batch_size: usize,
    pub alpha: f64,
    pub seed: u64,
    pub perturb: PerturbConfig,
    pub sampler: SamplerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: Objective::PairwiseAt,
            epochs: 100,
            learning_rate: 0.05,
            weight_decay: 0.0,
            batch_size: 1,
            alpha: 1.0,
            seed: 0,
            perturb: PerturbConfig::default(),
            sampler: SamplerConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Checks every field and reports all problems in one message.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.epochs == 0 {
            problems.push("epochs must be >= 1".to_string());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            problems.push(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            problems.push(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be >= 1".to_string());
        }
        if !self.alpha.is_finite() {
            problems.push(format!("alpha must be finite, got {}", self.alpha));
        }
        if let Err(e) = self.perturb.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.sampler.validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Metric means recorded alongside an epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSnapshot {
    pub cutoffs: Vec<usize>,
    pub precision: Vec<f64>,
    pub ndcg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub seconds: f64,
    pub positives: usize,
    pub negatives_sampled: usize,
    pub eval: Option<EvalSnapshot>,
}

/// Fixed quantities of one training example: perturbations for the positive
/// and negative inputs and, for KL terms, their clean relevance probabilities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepEta {
    pub pos: Perturbation,
    pub neg: Perturbation,
    pub p_pos: f64,
    pub p_neg: f64,
}

/// Computes the perturbations an objective needs, from the current parameters.
pub fn prepare_eta<M: ScoreModel>(
    model: &M,
    objective: Objective,
    pos: &Input,
    neg: &Input,
    cfg: &PerturbConfig,
    rng: &mut Rng,
) -> Result<StepEta> {
    let mut eta = StepEta::default();
    match objective {
        Objective::PointwiseAt => {
            eta.pos = adversarial_perturbation(model, pos, Label::Relevant, cfg)?;
            eta.neg = adversarial_perturbation(model, neg, Label::NonRelevant, cfg)?;
        }
        Objective::PairwiseAt => {
            let pp = pairwise_adversarial_perturbation(model, pos, neg, cfg)?;
            eta.pos = pp.for_pos();
            eta.neg = pp.for_neg();
        }
        o if o.uses_vat() => {
            eta.pos = vat_perturbation(model, pos, cfg, rng)?;
            eta.neg = vat_perturbation(model, neg, cfg, rng)?;
            eta.p_pos = sigmoid(model.score_clean(pos)?);
            eta.p_neg = sigmoid(model.score_clean(neg)?);
        }
        _ => {}
    }
    Ok(eta)
}

/// `acc += d CE / d theta`; returns the loss.
pub fn ce_term<M: ScoreModel>(model: &M, input: &Input, eta: &Perturbation, label: Label, acc: &mut M::Grad) -> Result<f64> {
    let lv = pointwise_ce(model.score(input, eta)?, label);
    model.accumulate_param_grad(input, eta, lv.grad, acc)?;
    Ok(lv.value)
}

pub fn pairwise_term<M: ScoreModel>(
    model: &M,
    pos: &Input,
    neg: &Input,
    eta_pos: &Perturbation,
    eta_neg: &Perturbation,
    acc: &mut M::Grad,
) -> Result<f64> {
    let lv = pairwise_loss(model.score(pos, eta_pos)?, model.score(neg, eta_neg)?);
    model.accumulate_param_grad(pos, eta_pos, lv.grad, acc)?;
    model.accumulate_param_grad(neg, eta_neg, -lv.grad, acc)?;
    Ok(lv.value)
}

/// KL between the fixed clean probability `p_clean` and the model at the
/// perturbed input; gradients flow through the perturbed side only.
pub fn kl_term<M: ScoreModel>(model: &M, input: &Input, eta: &Perturbation, p_clean: f64, acc: &mut M::Grad) -> Result<f64> {
    let lv = kl_to_perturbed(p_clean, model.score(input, eta)?);
    model.accumulate_param_grad(input, eta, lv.grad, acc)?;
    Ok(lv.value)
}

/// Loss contributions of one (positive, negative) example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermLosses {
    pub clean: f64,
    pub perturbed: f64,
}

impl TermLosses {
    pub fn total(&self, alpha: f64) -> f64 {
        self.clean + alpha * self.perturbed
    }
}

/// Accumulates the clean terms of `objective` into `clean` and the perturbed
/// terms into `adv`, with perturbations held at `eta`. Perturbed terms are
/// skipped when their perturbations are absent (zero epsilon).
pub fn example_terms<M: ScoreModel>(
    model: &M,
    objective: Objective,
    pos: &Input,
    neg: &Input,
    eta: &StepEta,
    clean: &mut M::Grad,
    adv: &mut M::Grad,
) -> Result<TermLosses> {
    let none = Perturbation::none();
    let active = !(eta.pos.query.is_none() && eta.pos.doc.is_none() && eta.neg.query.is_none() && eta.neg.doc.is_none());
    let clean_loss = if objective.is_pairwise() {
        pairwise_term(model, pos, neg, &none, &none, clean)?
    } else {
        ce_term(model, pos, &none, Label::Relevant, clean)? + ce_term(model, neg, &none, Label::NonRelevant, clean)?
    };
    let perturbed = match objective {
        Objective::PlainPointwise | Objective::PlainPairwise => 0.0,
        Objective::PointwiseAt if active => {
            ce_term(model, pos, &eta.pos, Label::Relevant, adv)? + ce_term(model, neg, &eta.neg, Label::NonRelevant, adv)?
        }
        Objective::PairwiseAt if active => pairwise_term(model, pos, neg, &eta.pos, &eta.neg, adv)?,
        // zero epsilon: the perturbed terms equal the clean ones
        Objective::PointwiseAt | Objective::PairwiseAt => {
            debug_assert!(objective.uses_at());
            if objective.is_pairwise() {
                pairwise_term(model, pos, neg, &none, &none, adv)?
            } else {
                ce_term(model, pos, &none, Label::Relevant, adv)? + ce_term(model, neg, &none, Label::NonRelevant, adv)?
            }
        }
        _ if active => kl_term(model, pos, &eta.pos, eta.p_pos, adv)? + kl_term(model, neg, &eta.neg, eta.p_neg, adv)?,
        // zero epsilon: KL(p || p) = 0 with zero gradient
        _ => 0.0,
    };
    Ok(TermLosses {
        clean: clean_loss,
        perturbed,
    })
}

fn non_finite(loss: f64, epoch: usize, what: impl FnOnce() -> String) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("loss {loss} at epoch {epoch}, {}", what())))
    }
}

/// Runs `cfg.epochs` epochs of SGD. After each epoch `on_epoch(log, model)`
/// may return an evaluation snapshot to attach to that epoch's log.
pub fn train<M, F>(model: &mut M, data: &RankingDataset, cfg: &TrainConfig, mut on_epoch: F) -> Result<Vec<EpochLog>>
where
    M: ScoreModel,
    F: FnMut(&EpochLog, &M) -> Result<Option<EvalSnapshot>>,
{
    cfg.validate()?;
    let positives = data.labeled_pairs();
    if positives.is_empty() {
        return Err(Error::Data("training set has no labeled pairs".into()));
    }
    let unlabeled: Vec<Vec<usize>> = data.queries.iter().map(|q| q.unlabeled.clone()).collect();
    let labeled: Vec<Vec<usize>> = data.queries.iter().map(|q| q.labeled.clone()).collect();
    let mut sampler = NegativeSampler::new(cfg.sampler, &unlabeled, &labeled)?;
    let mut shuffle_rng = seeded_rng(derive_seed(cfg.seed, STREAM_SHUFFLE));
    let mut sample_rng = seeded_rng(derive_seed(cfg.seed, STREAM_SAMPLER));
    let mut perturb_rng = seeded_rng(derive_seed(cfg.seed, STREAM_PERTURB));
    let mut unlabeled_rng = seeded_rng(derive_seed(cfg.seed, STREAM_UNLABELED));
    let full_vat = cfg.objective == Objective::FullVat && cfg.perturb.epsilon > 0.0;
    let mut logs = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let mut order = positives.clone();
        order.shuffle(&mut shuffle_rng);
        let mut extra = if full_vat {
            let mut u = data.unlabeled_pairs();
            u.shuffle(&mut unlabeled_rng);
            u
        } else {
            Vec::new()
        };
        let mut extra_done = 0;
        let mut loss_sum = 0.0;
        let mut negatives = 0;

        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut clean = model.zero_grad();
            let mut adv = model.zero_grad();
            let mut adv_used = false;
            for &(q, d) in batch {
                let query_id = &data.queries[q].id;
                let neg = {
                    let m: &M = model;
                    sampler.sample(q, |n| m.score_clean(&data.input(q, n)), &mut sample_rng)?
                };
                negatives += 1;
                let (pos_in, neg_in) = (data.input(q, d), data.input(q, neg));
                let eta = prepare_eta(&*model, cfg.objective, &pos_in, &neg_in, &cfg.perturb, &mut perturb_rng)?;
                adv_used |= cfg.objective.uses_at() || eta.pos.doc.is_some();
                let t = example_terms(&*model, cfg.objective, &pos_in, &neg_in, &eta, &mut clean, &mut adv)?;
                let loss = t.total(cfg.alpha);
                non_finite(loss, epoch, || format!("query {query_id}, positive {d}, negative {neg}"))?;
                loss_sum += loss;
            }
            if full_vat {
                // spread the unlabeled pass evenly over the updates
                let n_batches = order.len().div_ceil(cfg.batch_size);
                let upto = extra.len() * (b + 1) / n_batches;
                for &(q, d) in &extra[extra_done..upto] {
                    let input = data.input(q, d);
                    let eta = vat_perturbation(&*model, &input, &cfg.perturb, &mut perturb_rng)?;
                    let p = sigmoid(model.score_clean(&input)?);
                    let kl = kl_term(&*model, &input, &eta, p, &mut adv)?;
                    non_finite(kl, epoch, || format!("query {}, unlabeled {d}", data.queries[q].id))?;
                    loss_sum += cfg.alpha * kl;
                    adv_used = true;
                }
                extra_done = upto;
            }
            if adv_used {
                clean.add_scaled(&adv, cfg.alpha);
            }
            model.apply_grad(&clean, cfg.learning_rate, cfg.weight_decay);
            sampler.end_batch();
        }
        extra.clear();

        let mut log = EpochLog {
            epoch,
            mean_loss: loss_sum / order.len() as f64,
            seconds: started.elapsed().as_secs_f64(),
            positives: order.len(),
            negatives_sampled: negatives,
            eval: None,
        };
        log.eval = on_epoch(&log, model)?;
        logs.push(log);
    }
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DocStore, QueryPool};
    use crate::models::{EmbedCosine, MatFac, RankMlp};
    use crate::numerics::{standard_normal_vec, Mat64};
    use crate::sampling::SamplerKind;
    use rand::Rng as _;

    fn mf_data(users: usize, items: usize, rng: &mut Rng) -> RankingDataset {
        let mut queries = Vec::new();
        for u in 0..users {
            let mut q = QueryPool::new(u.to_string(), u);
            for i in 0..items {
                if rng.random_bool(0.3) {
                    q.labeled.push(i);
                } else {
                    q.unlabeled.push(i);
                }
            }
            if q.labeled.is_empty() {
                q.unlabeled.retain(|&i| i != 0);
                q.labeled.push(0);
            }
            queries.push(q);
        }
        RankingDataset {
            docs: DocStore::Items {
                num_users: users,
                num_items: items,
            },
            queries,
        }
    }

    fn random_mf(rng: &mut Rng, users: usize, items: usize) -> MatFac {
        let mut m = MatFac::new(users, items, 5, rng);
        let p = standard_normal_vec(rng, m.params().len());
        m.set_params(&p).unwrap();
        m
    }

    fn cfg(objective: Objective, epsilon: f64) -> TrainConfig {
        TrainConfig {
            objective,
            epochs: 3,
            learning_rate: 0.05,
            perturb: PerturbConfig::with_epsilon(epsilon),
            seed: 17,
            ..TrainConfig::default()
        }
    }

    fn bits<M: ScoreModel>(m: &M) -> Vec<u64> {
        m.params().iter().map(|v| v.to_bits()).collect()
    }

    fn no_eval<M>(_: &EpochLog, _: &M) -> Result<Option<EvalSnapshot>> {
        Ok(None)
    }

    /// Total loss of one example as a function of the parameters, with the
    /// perturbations held fixed.
    fn total_loss<M: ScoreModel>(m: &M, obj: Objective, pos: &Input, neg: &Input, eta: &StepEta, alpha: f64) -> f64 {
        let (mut c, mut a) = (m.zero_grad(), m.zero_grad());
        example_terms(m, obj, pos, neg, eta, &mut c, &mut a).unwrap().total(alpha)
    }

    fn check_param_grad<M: ScoreModel>(m: &M, obj: Objective, pos: &Input, neg: &Input, eps: f64, seed: u64) {
        let mut rng = seeded_rng(seed);
        let eta = prepare_eta(m, obj, pos, neg, &PerturbConfig::with_epsilon(eps), &mut rng).unwrap();
        let (mut c, mut a) = (m.zero_grad(), m.zero_grad());
        example_terms(m, obj, pos, neg, &eta, &mut c, &mut a).unwrap();
        c.add_scaled(&a, 1.0);
        let analytic = m.flat_grad(&c);
        let theta = m.params();
        let h = 1e-5;
        for k in 0..theta.len() {
            let mut tp = theta.clone();
            tp[k] += h;
            let mut mp = m.clone();
            mp.set_params(&tp).unwrap();
            let up = total_loss(&mp, obj, pos, neg, &eta, 1.0);
            tp[k] -= 2.0 * h;
            mp.set_params(&tp).unwrap();
            let dn = total_loss(&mp, obj, pos, neg, &eta, 1.0);
            let num = (up - dn) / (2.0 * h);
            let an = analytic[k];
            let ok = if an.abs() < 1e-6 { (an - num).abs() < 1e-8 } else { (an - num).abs() <= 1e-4 * an.abs() };
            assert!(ok, "{obj:?} param {k}: analytic {an} numeric {num}");
        }
    }

    #[test]
    fn objective_gradients_match_finite_differences_on_mf() {
        let mut rng = seeded_rng(40);
        let m = random_mf(&mut rng, 3, 4);
        for obj in Objective::ALL {
            for s in 0..10 {
                let u = rng.random_range(0..3);
                let pos = Input::Ids { query: u, doc: rng.random_range(0..4) };
                let neg = Input::Ids { query: u, doc: rng.random_range(0..4) };
                check_param_grad(&m, obj, &pos, &neg, 0.3, s);
            }
        }
    }

    #[test]
    fn objective_gradients_match_finite_differences_on_cosine() {
        let mut rng = seeded_rng(41);
        let m = EmbedCosine {
            embeddings: Mat64::from_vec(6, 3, standard_normal_vec(&mut rng, 18)).unwrap(),
        };
        let (q, d1, d2) = (vec![0, 1], vec![2, 3, 3], vec![4, 5]);
        let pos = Input::Tokens { query: &q, doc: &d1 };
        let neg = Input::Tokens { query: &q, doc: &d2 };
        for obj in Objective::ALL {
            check_param_grad(&m, obj, &pos, &neg, 0.05, 3);
        }
    }

    #[test]
    fn objective_gradients_match_finite_differences_on_mlp() {
        let mut rng = seeded_rng(42);
        let mut m = RankMlp::new(4, 5, &mut rng);
        let p = standard_normal_vec(&mut rng, m.params().len());
        m.set_params(&p).unwrap();
        let x1 = standard_normal_vec(&mut rng, 4);
        let x2 = standard_normal_vec(&mut rng, 4);
        for obj in Objective::ALL {
            check_param_grad(&m, obj, &Input::Features(&x1), &Input::Features(&x2), 1e-3, 4);
        }
    }

    #[test]
    fn zero_epsilon_losses() {
        let mut rng = seeded_rng(43);
        let m = random_mf(&mut rng, 4, 6);
        let pos = Input::Ids { query: 1, doc: 2 };
        let neg = Input::Ids { query: 1, doc: 5 };
        let zero = PerturbConfig::with_epsilon(0.0);
        let run = |obj| {
            let eta = prepare_eta(&m, obj, &pos, &neg, &zero, &mut seeded_rng(0)).unwrap();
            let (mut c, mut a) = (m.zero_grad(), m.zero_grad());
            example_terms(&m, obj, &pos, &neg, &eta, &mut c, &mut a).unwrap()
        };
        let pw = run(Objective::PlainPointwise).total(1.0);
        let pr = run(Objective::PlainPairwise).total(1.0);
        assert_eq!(run(Objective::PointwiseAt).total(1.0), 2.0 * pw);
        assert_eq!(run(Objective::PairwiseAt).total(1.0), 2.0 * pr);
        assert_eq!(run(Objective::PointwiseSvat).total(1.0), pw);
        assert_eq!(run(Objective::PairwiseSvat).total(1.0), pr);
        assert_eq!(run(Objective::FullVat).total(1.0), pw);
    }

    #[test]
    fn one_small_step_lowers_the_example_loss() {
        let mut rng = seeded_rng(44);
        for _ in 0..100 {
            let m = random_mf(&mut rng, 3, 5);
            let pos = Input::Ids { query: 0, doc: 1 };
            let neg = Input::Ids { query: 0, doc: 3 };
            let eta = prepare_eta(&m, Objective::PointwiseAt, &pos, &neg, &PerturbConfig::with_epsilon(0.01), &mut rng)
                .unwrap();
            let before = total_loss(&m, Objective::PointwiseAt, &pos, &neg, &eta, 1.0);
            let (mut c, mut a) = (m.zero_grad(), m.zero_grad());
            example_terms(&m, Objective::PointwiseAt, &pos, &neg, &eta, &mut c, &mut a).unwrap();
            c.add_scaled(&a, 1.0);
            let mut next = m.clone();
            next.apply_grad(&c, 1e-4, 0.0);
            assert!(total_loss(&next, Objective::PointwiseAt, &pos, &neg, &eta, 1.0) < before);
        }
    }

    #[test]
    fn training_is_deterministic_and_counts_negatives() {
        let mut rng = seeded_rng(45);
        let data = mf_data(8, 12, &mut rng);
        for obj in Objective::ALL {
            let c = cfg(obj, 0.05);
            let run = || {
                let mut m = MatFac::new(8, 12, 5, &mut seeded_rng(1));
                let logs = train(&mut m, &data, &c, no_eval).unwrap();
                (bits(&m), logs)
            };
            let (a, la) = run();
            let (b, lb) = run();
            assert_eq!(a, b, "{obj:?}");
            for (x, y) in la.iter().zip(&lb) {
                assert_eq!(x.mean_loss.to_bits(), y.mean_loss.to_bits());
                assert_eq!(x.positives, data.num_labeled());
                assert_eq!(x.negatives_sampled, x.positives);
            }
        }
    }

    #[test]
    fn zero_epsilon_trajectories_are_bit_identical() {
        let mut rng = seeded_rng(46);
        let data = mf_data(6, 10, &mut rng);
        let run = |obj, lr| {
            let mut c = cfg(obj, 0.0);
            c.learning_rate = lr;
            let mut m = MatFac::new(6, 10, 5, &mut seeded_rng(2));
            let logs = train(&mut m, &data, &c, no_eval).unwrap();
            (bits(&m), logs.iter().map(|l| l.mean_loss).collect::<Vec<_>>())
        };
        let (plain_pw2, lpw2) = run(Objective::PlainPointwise, 0.1);
        let (plain_pr2, lpr2) = run(Objective::PlainPairwise, 0.1);
        let (plain_pw, _) = run(Objective::PlainPointwise, 0.05);
        let (plain_pr, _) = run(Objective::PlainPairwise, 0.05);
        let (at_pw, lat_pw) = run(Objective::PointwiseAt, 0.05);
        let (at_pr, lat_pr) = run(Objective::PairwiseAt, 0.05);
        // doubling the gradient is exact, so AT at lr equals plain at 2 lr
        assert_eq!(at_pw, plain_pw2);
        assert_eq!(at_pr, plain_pr2);
        for (a, p) in lat_pw.iter().zip(&lpw2).chain(lat_pr.iter().zip(&lpr2)) {
            assert_eq!(*a, 2.0 * p);
        }
        assert_eq!(run(Objective::PointwiseSvat, 0.05).0, plain_pw);
        assert_eq!(run(Objective::PairwiseSvat, 0.05).0, plain_pr);
        assert_eq!(run(Objective::FullVat, 0.05).0, plain_pw);
    }

    #[test]
    fn sampled_negatives_are_never_labeled() {
        let mut rng = seeded_rng(47);
        let data = mf_data(5, 9, &mut rng);
        let unl: Vec<Vec<usize>> = data.queries.iter().map(|q| q.unlabeled.clone()).collect();
        let lab: Vec<Vec<usize>> = data.queries.iter().map(|q| q.labeled.clone()).collect();
        let m = random_mf(&mut rng, 5, 9);
        for kind in [SamplerKind::Uniform, SamplerKind::Adversarial] {
            let mut s = NegativeSampler::new(SamplerConfig { kind, ..SamplerConfig::default() }, &unl, &lab).unwrap();
            for _ in 0..2000 {
                let q = rng.random_range(0..5);
                let d = s.sample(q, |n| m.score_clean(&data.input(q, n)), &mut rng).unwrap();
                assert!(!lab[q].contains(&d));
                s.end_batch();
            }
        }
    }

    #[test]
    fn adversarial_negatives_score_higher() {
        let mut rng = seeded_rng(48);
        let data = mf_data(5, 40, &mut rng);
        let m = random_mf(&mut rng, 5, 40);
        let unl: Vec<Vec<usize>> = data.queries.iter().map(|q| q.unlabeled.clone()).collect();
        let lab: Vec<Vec<usize>> = data.queries.iter().map(|q| q.labeled.clone()).collect();
        let mean = |kind| {
            let mut s = NegativeSampler::new(SamplerConfig { kind, ..SamplerConfig::default() }, &unl, &lab).unwrap();
            let mut r = seeded_rng(9);
            let mut total = 0.0;
            for k in 0..10_000 {
                let q = k % 5;
                let d = s.sample(q, |n| m.score_clean(&data.input(q, n)), &mut r).unwrap();
                total += m.score_clean(&data.input(q, d)).unwrap();
                s.end_batch();
            }
            total / 10_000.0
        };
        assert!(mean(SamplerKind::Adversarial) >= mean(SamplerKind::Uniform));
    }

    #[test]
    fn rejects_bad_configs_and_empty_data() {
        let mut c = cfg(Objective::PairwiseAt, 0.1);
        c.epochs = 0;
        c.learning_rate = -1.0;
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("epochs") && err.contains("learning_rate"), "{err}");

        let data = RankingDataset {
            docs: DocStore::Items {
                num_users: 1,
                num_items: 2,
            },
            queries: vec![QueryPool::new("0", 0)],
        };
        let mut m = MatFac::new(1, 2, 5, &mut seeded_rng(0));
        assert!(train(&mut m, &data, &cfg(Objective::PairwiseAt, 0.1), no_eval).is_err());
    }

    #[test]
    fn non_finite_loss_names_the_example() {
        let mut rng = seeded_rng(49);
        let data = mf_data(2, 4, &mut rng);
        let mut m = MatFac::new(2, 4, 5, &mut rng);
        m.item_bias[0] = f64::NAN;
        m.item_bias[1] = f64::NAN;
        m.item_bias[2] = f64::NAN;
        m.item_bias[3] = f64::NAN;
        let mut c = cfg(Objective::PlainPointwise, 0.0);
        c.sampler = SamplerConfig::uniform();
        let err = train(&mut m, &data, &c, no_eval).unwrap_err().to_string();
        assert!(err.contains("query") && err.contains("positive"), "{err}");
    }

    #[test]
    fn objective_names_round_trip() {
        for o in Objective::ALL {
            assert_eq!(Objective::parse(o.name()), Some(o));
        }
        assert_eq!(Objective::parse("nope"), None);
    }
}
