//! Ranking datasets: per-query labeled and unlabeled pools over a shared
//! document store, plus parsers for LETOR and MovieLens files.

mod cache;
mod letor;
mod movielens;

pub use cache::{load_cache, save_cache, CachedSplit, CACHE_VERSION};
pub use letor::{compile_letor_dataset, parse_letor, parse_letor_file, write_letor, LetorRecord, LETOR_FEATURES};
pub use movielens::{
    compile_movielens_dataset, parse_movielens, parse_movielens_file, IdMap, Interaction, MovieLensSplit,
};

use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Input;
use crate::numerics::Rng;

/// Document representations, indexed by the document references stored in
/// [`QueryPool`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DocStore {
    /// One joint query-document feature vector per reference.
    Features { dim: usize, rows: Vec<Vec<f64>> },
    /// References are item ids; the query key is a user id.
    Items { num_users: usize, num_items: usize },
    /// References index `docs`; the query key indexes `queries`.
    Tokens {
        vocab: usize,
        queries: Vec<Vec<usize>>,
        docs: Vec<Vec<usize>>,
    },
}

/// One query with its pools. Document references index the [`DocStore`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPool {
    pub id: String,
    /// User id or query-token row, depending on the store.
    pub key: usize,
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    /// Evaluation candidates and their graded relevance.
    pub candidates: Vec<usize>,
    pub grades: Vec<u8>,
}

impl QueryPool {
    pub fn new(id: impl Into<String>, key: usize) -> Self {
        Self {
            id: id.into(),
            key,
            labeled: Vec::new(),
            unlabeled: Vec::new(),
            candidates: Vec::new(),
            grades: Vec::new(),
        }
    }

    pub fn has_relevant(&self) -> bool {
        self.grades.iter().any(|&g| g > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDataset {
    pub docs: DocStore,
    pub queries: Vec<QueryPool>,
}

impl RankingDataset {
    /// Model input for document `doc` of query `q`.
    pub fn input(&self, q: usize, doc: usize) -> Input<'_> {
        let key = self.queries[q].key;
        match &self.docs {
            DocStore::Features { rows, .. } => Input::Features(&rows[doc]),
            DocStore::Items { .. } => Input::Ids { query: key, doc },
            DocStore::Tokens { queries, docs, .. } => Input::Tokens {
                query: &queries[key],
                doc: &docs[doc],
            },
        }
    }

    pub fn num_labeled(&self) -> usize {
        self.queries.iter().map(|q| q.labeled.len()).sum()
    }

    /// All `(query, doc)` labeled pairs in query order.
    pub fn labeled_pairs(&self) -> Vec<(usize, usize)> {
        self.queries
            .iter()
            .enumerate()
            .flat_map(|(q, p)| p.labeled.iter().map(move |&d| (q, d)))
            .collect()
    }

    pub fn unlabeled_pairs(&self) -> Vec<(usize, usize)> {
        self.queries
            .iter()
            .enumerate()
            .flat_map(|(q, p)| p.unlabeled.iter().map(move |&d| (q, d)))
            .collect()
    }

    /// Drops queries that cannot produce a training pair (no positives or no
    /// negatives) and returns their ids.
    pub fn retain_trainable(&mut self) -> Vec<String> {
        let mut dropped = Vec::new();
        self.queries.retain(|q| {
            let keep = !q.labeled.is_empty() && !q.unlabeled.is_empty();
            if !keep {
                dropped.push(q.id.clone());
            }
            keep
        });
        dropped
    }

    /// Every query's labeled and unlabeled pools are disjoint.
    pub fn pools_disjoint(&self) -> bool {
        self.queries.iter().all(|q| {
            let l: BTreeSet<_> = q.labeled.iter().collect();
            q.unlabeled.iter().all(|d| !l.contains(d))
        })
    }
}

/// Keeps `ceil(fraction * N)` labeled pairs chosen uniformly at random;
/// queries left without positives are dropped.
pub fn subsample_labels(dataset: &RankingDataset, fraction: f64, rng: &mut Rng) -> Result<RankingDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("label fraction must be in (0, 1], got {fraction}")));
    }
    if fraction == 1.0 {
        return Ok(dataset.clone());
    }
    let pairs = dataset.labeled_pairs();
    let keep_n = (fraction * pairs.len() as f64).ceil() as usize;
    let mut keep = index::sample(rng, pairs.len(), keep_n).into_vec();
    keep.sort_unstable();
    let mut out = dataset.clone();
    for q in &mut out.queries {
        q.labeled.clear();
    }
    for i in keep {
        let (q, d) = pairs[i];
        out.queries[q].labeled.push(d);
    }
    out.queries.retain(|q| !q.labeled.is_empty());
    Ok(out)
}
