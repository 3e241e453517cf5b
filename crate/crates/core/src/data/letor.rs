use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{DocStore, QueryPool, RankingDataset};
use crate::error::{Error, Result};

pub const LETOR_FEATURES: usize = 46;

/// One line of a LETOR file.
#[derive(Debug, Clone, PartialEq)]
pub struct LetorRecord {
    pub relevance: i8,
    pub query_id: String,
    pub features: Vec<f64>,
    /// Value of the `docid = ...` field of the trailing comment, if any.
    pub doc_id: String,
    /// Text after `#`, kept verbatim for round trips.
    pub comment: Option<String>,
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn doc_id_from_comment(comment: &str) -> String {
    let mut toks = comment.split_whitespace();
    while let Some(t) = toks.next() {
        if t == "docid" {
            if toks.next() == Some("=") {
                return toks.next().unwrap_or("").to_string();
            }
        } else if let Some(v) = t.strip_prefix("docid=") {
            return v.to_string();
        }
    }
    String::new()
}

fn parse_line(src: &str, lineno: usize, line: &str) -> Result<LetorRecord> {
    let (body, comment) = match line.split_once('#') {
        Some((b, c)) => (b, Some(c.to_string())),
        None => (line, None),
    };
    let mut toks = body.split_whitespace();
    let rel_tok = toks.next().ok_or_else(|| parse_err(src, lineno, "missing relevance"))?;
    let relevance: i8 = rel_tok
        .parse()
        .map_err(|_| parse_err(src, lineno, format!("bad relevance {rel_tok:?}")))?;
    if !(-1..=2).contains(&relevance) {
        return Err(parse_err(src, lineno, format!("relevance {relevance} outside -1..=2")));
    }
    let qtok = toks.next().ok_or_else(|| parse_err(src, lineno, "missing qid"))?;
    let query_id = qtok
        .strip_prefix("qid:")
        .ok_or_else(|| parse_err(src, lineno, format!("expected qid:<id>, got {qtok:?}")))?
        .to_string();
    let mut features = vec![f64::NAN; LETOR_FEATURES];
    let mut seen = [false; LETOR_FEATURES];
    for tok in toks {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(src, lineno, format!("expected <index>:<value>, got {tok:?}")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| parse_err(src, lineno, format!("bad feature index {idx:?}")))?;
        if idx == 0 || idx > LETOR_FEATURES {
            return Err(parse_err(src, lineno, format!("feature index {idx} outside 1..={LETOR_FEATURES}")));
        }
        let v: f64 = val
            .parse()
            .map_err(|_| parse_err(src, lineno, format!("bad value {val:?} for feature {idx}")))?;
        if seen[idx - 1] {
            return Err(parse_err(src, lineno, format!("feature {idx} repeated")));
        }
        seen[idx - 1] = true;
        features[idx - 1] = v;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(parse_err(src, lineno, format!("missing feature {}", missing + 1)));
    }
    let doc_id = comment.as_deref().map(doc_id_from_comment).unwrap_or_default();
    Ok(LetorRecord {
        relevance,
        query_id,
        features,
        doc_id,
        comment,
    })
}

/// Parses LETOR lines (`<rel> qid:<id> 1:<v> ... 46:<v> [# comment]`).
/// `src` names the input in error messages.
pub fn parse_letor<R: BufRead>(reader: R, src: &str) -> Result<Vec<LetorRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(src, i + 1, &line)?);
    }
    Ok(out)
}

pub fn parse_letor_file(path: &Path) -> Result<Vec<LetorRecord>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    parse_letor(BufReader::new(File::open(path)?), &path.display().to_string())
}

/// Canonical LETOR text: features in index order, shortest round-trip floats.
pub fn write_letor(records: &[LetorRecord]) -> String {
    let mut s = String::new();
    for r in records {
        write!(s, "{} qid:{}", r.relevance, r.query_id).unwrap();
        for (i, v) in r.features.iter().enumerate() {
            write!(s, " {}:{}", i + 1, v).unwrap();
        }
        if let Some(c) = &r.comment {
            write!(s, " #{c}").unwrap();
        }
        s.push('\n');
    }
    s
}

/// Groups records by query in first-appearance order. Relevance 1 and 2 go
/// to the labeled pool, -1 and 0 to the unlabeled pool; every record is an
/// evaluation candidate with grade `max(relevance, 0)`.
pub fn compile_letor_dataset(records: &[LetorRecord]) -> RankingDataset {
    let mut order: Vec<String> = Vec::new();
    let mut by_query: BTreeMap<&str, usize> = BTreeMap::new();
    let mut queries: Vec<QueryPool> = Vec::new();
    let mut rows = Vec::with_capacity(records.len());
    for (doc, r) in records.iter().enumerate() {
        let q = *by_query.entry(&r.query_id).or_insert_with(|| {
            order.push(r.query_id.clone());
            queries.push(QueryPool::new(r.query_id.clone(), queries.len()));
            queries.len() - 1
        });
        rows.push(r.features.clone());
        let pool = &mut queries[q];
        if r.relevance >= 1 {
            pool.labeled.push(doc);
        } else {
            pool.unlabeled.push(doc);
        }
        pool.candidates.push(doc);
        pool.grades.push(r.relevance.max(0) as u8);
    }
    RankingDataset {
        docs: DocStore::Features {
            dim: LETOR_FEATURES,
            rows,
        },
        queries,
    }
}
