//! Negative sampling from per-query unlabeled pools.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{softmax_with_temperature, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Uniform,
    #[default]
    Adversarial,
}

/// Size of the random candidate subset scored by the adversarial sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CandidatesRepr", into = "CandidatesRepr")]
pub enum Candidates {
    All,
    Count(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CandidatesRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<CandidatesRepr> for Candidates {
    type Error = String;

    fn try_from(r: CandidatesRepr) -> std::result::Result<Self, String> {
        match r {
            CandidatesRepr::Count(n) => Ok(Candidates::Count(n)),
            CandidatesRepr::Word(w) if w == "all" => Ok(Candidates::All),
            CandidatesRepr::Word(w) => Err(format!("candidates must be a count or \"all\", got {w:?}")),
        }
    }
}

impl From<Candidates> for CandidatesRepr {
    fn from(c: Candidates) -> Self {
        match c {
            Candidates::All => CandidatesRepr::Word("all".into()),
            Candidates::Count(n) => CandidatesRepr::Count(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub tau: f64,
    pub candidates: Candidates,
    /// Cached scores older than this many batches are recomputed.
    pub refresh_every: u64,
    pub exclude_labeled: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            kind: SamplerKind::Adversarial,
            tau: 1.0,
            candidates: Candidates::Count(64),
            refresh_every: 1,
            exclude_labeled: true,
        }
    }
}

impl SamplerConfig {
    pub fn uniform() -> Self {
        Self {
            kind: SamplerKind::Uniform,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.candidates == Candidates::Count(0) {
            return Err(Error::Config("candidates must be >= 1".into()));
        }
        if self.refresh_every == 0 {
            return Err(Error::Config("refresh_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Negative candidates of one query with their cached model scores.
#[derive(Debug, Clone, Default)]
pub struct NegativePool {
    pub docs: Vec<usize>,
    scores: Vec<f64>,
    /// Batch at which each cached score was computed.
    stamps: Vec<Option<u64>>,
    refreshed_at: Option<u64>,
}

impl NegativePool {
    pub fn new(docs: Vec<usize>) -> Self {
        let n = docs.len();
        Self {
            docs,
            scores: vec![0.0; n],
            stamps: vec![None; n],
            refreshed_at: None,
        }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Cached score of the pool entry at `slot`, if one was ever computed.
    pub fn cached(&self, slot: usize) -> Option<f64> {
        self.stamps[slot].map(|_| self.scores[slot])
    }
}

/// Per-query negative pools plus a batch clock that drives cache staleness.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    pub cfg: SamplerConfig,
    pools: Vec<NegativePool>,
    batch: u64,
}

impl NegativeSampler {
    /// `unlabeled[q]` and `labeled[q]` are the document ids of query `q`;
    /// labeled documents join the pool only when `exclude_labeled` is off.
    pub fn new(cfg: SamplerConfig, unlabeled: &[Vec<usize>], labeled: &[Vec<usize>]) -> Result<Self> {
        cfg.validate()?;
        let pools = unlabeled
            .iter()
            .enumerate()
            .map(|(q, u)| {
                let mut docs = u.clone();
                if !cfg.exclude_labeled {
                    docs.extend(labeled.get(q).into_iter().flatten());
                }
                NegativePool::new(docs)
            })
            .collect();
        Ok(Self { cfg, pools, batch: 0 })
    }

    pub fn pool(&self, q: usize) -> &NegativePool {
        &self.pools[q]
    }

    pub fn num_queries(&self) -> usize {
        self.pools.len()
    }

    pub fn batch(&self) -> u64 {
        self.batch
    }

    /// Advances the batch clock.
    pub fn end_batch(&mut self) {
        self.batch += 1;
    }

    /// Batches since the last full refresh of `q`'s pool.
    pub fn staleness(&self, q: usize) -> Option<u64> {
        self.pools[q].refreshed_at.map(|t| self.batch - t)
    }

    fn non_empty(&self, q: usize, query_name: impl FnOnce() -> String) -> Result<&NegativePool> {
        let pool = &self.pools[q];
        if pool.is_empty() {
            return Err(Error::EmptyPool { query: query_name() });
        }
        Ok(pool)
    }

    /// Draws according to the configured kind.
    pub fn sample<F>(&mut self, q: usize, score: F, rng: &mut Rng) -> Result<usize>
    where
        F: Fn(usize) -> Result<f64>,
    {
        match self.cfg.kind {
            SamplerKind::Uniform => self.sample_uniform(q, rng),
            SamplerKind::Adversarial => self.sample_adversarial(q, score, rng),
        }
    }

    pub fn sample_uniform(&self, q: usize, rng: &mut Rng) -> Result<usize> {
        let pool = self.non_empty(q, || q.to_string())?;
        Ok(pool.docs[rng.random_range(0..pool.len())])
    }

    /// Softmax-of-score draw over a uniformly chosen candidate subset.
    /// `score(d)` evaluates the current model on `(q, d)`.
    pub fn sample_adversarial<F>(&mut self, q: usize, score: F, rng: &mut Rng) -> Result<usize>
    where
        F: Fn(usize) -> Result<f64>,
    {
        let n = self.non_empty(q, || q.to_string())?.len();
        let c = match self.cfg.candidates {
            Candidates::All => n,
            Candidates::Count(c) => c.min(n),
        };
        let slots: Vec<usize> = if c == n {
            (0..n).collect()
        } else {
            index::sample(rng, n, c).into_vec()
        };
        if c == 1 {
            return Ok(self.pools[q].docs[slots[0]]);
        }
        let (batch, k) = (self.batch, self.cfg.refresh_every);
        let pool = &mut self.pools[q];
        let mut scores = Vec::with_capacity(c);
        for &s in &slots {
            let fresh = pool.stamps[s].is_some_and(|t| batch - t < k);
            if !fresh {
                pool.scores[s] = score(pool.docs[s])?;
                pool.stamps[s] = Some(batch);
            }
            scores.push(pool.scores[s]);
        }
        let probs = softmax_with_temperature(&scores, self.cfg.tau)?;
        Ok(pool.docs[slots[draw_categorical(&probs, rng)]])
    }

    /// Rescores every document of `q`'s pool and resets its staleness.
    pub fn refresh_scores<F>(&mut self, q: usize, score: F) -> Result<()>
    where
        F: Fn(usize) -> Result<f64>,
    {
        let batch = self.batch;
        let pool = &mut self.pools[q];
        if pool.is_empty() {
            return Ok(());
        }
        for s in 0..pool.len() {
            pool.scores[s] = score(pool.docs[s])?;
            pool.stamps[s] = Some(batch);
        }
        pool.refreshed_at = Some(batch);
        Ok(())
    }
}

/// Inverse-CDF draw from a probability vector.
pub fn draw_categorical(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left the total a hair below 1; fall back to the last positive entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}
