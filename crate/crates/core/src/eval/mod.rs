//! Ranking metrics, significance testing and report files.

mod metrics;
mod stats;

pub use metrics::{dcg_at, ndcg_at, precision_at};
pub use stats::{paired_t_test, Degenerate, TTest};

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::RankingDataset;
use crate::error::{Error, Result};
use crate::models::ScoreModel;

pub const DEFAULT_CUTOFFS: [usize; 4] = [1, 3, 5, 10];

/// Positions of `ids` ordered by descending score, ties by ascending id.
pub fn rank_by_scores(ids: &[usize], scores: &[f64]) -> Result<Vec<usize>> {
    if ids.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: ids.len(),
            got: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score of document {}", ids[i])));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| match scores[b].partial_cmp(&scores[a]) {
        Some(Ordering::Equal) | None => ids[a].cmp(&ids[b]),
        Some(o) => o,
    });
    Ok(order)
}

/// Candidate document ids of query `q` in ranked order.
pub fn rank_documents<M: ScoreModel>(model: &M, data: &RankingDataset, q: usize, candidates: &[usize]) -> Result<Vec<usize>> {
    let scores = candidates
        .iter()
        .map(|&d| model.score_clean(&data.input(q, d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_by_scores(candidates, &scores)?.into_iter().map(|i| candidates[i]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query: String,
    /// One value per cutoff.
    pub precision: Vec<f64>,
    pub ndcg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub method: String,
    pub config_hash: String,
    pub seed: u64,
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: ReportMeta,
    pub cutoffs: Vec<usize>,
    pub mean_precision: Vec<f64>,
    pub mean_ndcg: Vec<f64>,
    /// Queries without any relevant candidate; not part of the means.
    pub skipped_queries: usize,
    pub per_query: Vec<QueryMetrics>,
}

impl EvalReport {
    fn index(&self, n: usize) -> Option<usize> {
        self.cutoffs.iter().position(|&c| c == n)
    }

    pub fn precision(&self, n: usize) -> Option<f64> {
        self.index(n).map(|i| self.mean_precision[i])
    }

    pub fn ndcg(&self, n: usize) -> Option<f64> {
        self.index(n).map(|i| self.mean_ndcg[i])
    }

    /// Per-query values of one metric, in query order.
    pub fn per_query_values(&self, metric: Metric, n: usize) -> Option<Vec<f64>> {
        let i = self.index(n)?;
        Some(
            self.per_query
                .iter()
                .map(|q| match metric {
                    Metric::Precision => q.precision[i],
                    Metric::Ndcg => q.ndcg[i],
                })
                .collect(),
        )
    }

    pub fn tsv_header() -> &'static str {
        "method\tmetric\tvalue\n"
    }

    /// Rows `method, metric, value` (without header).
    pub fn tsv_rows(&self) -> String {
        let mut s = String::new();
        for (metric, vals) in [("P", &self.mean_precision), ("NDCG", &self.mean_ndcg)] {
            for (n, v) in self.cutoffs.iter().zip(vals.iter()) {
                writeln!(s, "{}\t{metric}@{n}\t{}", self.meta.method, fmt_g9(*v)).unwrap();
            }
        }
        s
    }

    pub fn to_tsv(&self) -> String {
        format!("{}{}", Self::tsv_header(), self.tsv_rows())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Precision,
    Ndcg,
}

/// Scores every query's candidates and averages P@n and NDCG@n over queries
/// with at least one relevant candidate.
pub fn evaluate<M: ScoreModel>(model: &M, data: &RankingDataset, cutoffs: &[usize], meta: ReportMeta) -> Result<EvalReport> {
    let rows: Vec<Option<QueryMetrics>> = (0..data.queries.len())
        .into_par_iter()
        .map(|q| -> Result<Option<QueryMetrics>> {
            let pool = &data.queries[q];
            if !pool.has_relevant() {
                return Ok(None);
            }
            let scores = pool
                .candidates
                .iter()
                .map(|&d| model.score_clean(&data.input(q, d)))
                .collect::<Result<Vec<_>>>()?;
            let ranked: Vec<u8> = rank_by_scores(&pool.candidates, &scores)?
                .into_iter()
                .map(|i| pool.grades[i])
                .collect();
            Ok(Some(QueryMetrics {
                query: pool.id.clone(),
                precision: cutoffs.iter().map(|&n| precision_at(&ranked, n)).collect(),
                ndcg: cutoffs.iter().map(|&n| ndcg_at(&ranked, &pool.grades, n)).collect(),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    let per_query: Vec<QueryMetrics> = rows.into_iter().flatten().collect();
    let mean = |f: &dyn Fn(&QueryMetrics) -> &Vec<f64>| -> Vec<f64> {
        (0..cutoffs.len())
            .map(|i| {
                if per_query.is_empty() {
                    0.0
                } else {
                    per_query.iter().map(|q| f(q)[i]).sum::<f64>() / per_query.len() as f64
                }
            })
            .collect()
    };
    Ok(EvalReport {
        meta,
        cutoffs: cutoffs.to_vec(),
        mean_precision: mean(&|q| &q.precision),
        mean_ndcg: mean(&|q| &q.ndcg),
        skipped_queries: skipped,
        per_query,
    })
}

/// `printf("%.9g")`.
pub fn fmt_g9(x: f64) -> String {
    fmt_g(x, 9)
}

fn fmt_g(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
