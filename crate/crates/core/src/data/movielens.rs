use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DocStore, QueryPool, RankingDataset};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// A rating with densely re-indexed user and item ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interaction {
    pub user: usize,
    pub item: usize,
    pub rating: u8,
    pub timestamp: i64,
}

/// Dense index to raw file id, for users and items. Dense ids follow
/// ascending raw id.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IdMap {
    pub users: Vec<u64>,
    pub items: Vec<u64>,
}

/// Parses `user \t item \t rating \t timestamp` lines.
pub fn parse_movielens<R: BufRead>(reader: R, src: &str) -> Result<(Vec<Interaction>, IdMap)> {
    let err = |line: usize, msg: String| Error::Parse {
        path: src.to_string(),
        line,
        msg,
    };
    let mut raw = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(i + 1, format!("expected 4 tab-separated fields, got {}", fields.len())));
        }
        let int = |s: &str, what: &str| -> Result<i64> {
            s.trim()
                .parse::<i64>()
                .map_err(|_| err(i + 1, format!("bad {what} {s:?}")))
        };
        let user = int(fields[0], "user id")?;
        let item = int(fields[1], "item id")?;
        let rating = int(fields[2], "rating")?;
        let timestamp = int(fields[3], "timestamp")?;
        if user < 0 || item < 0 {
            return Err(err(i + 1, "negative id".into()));
        }
        if !(1..=5).contains(&rating) {
            return Err(err(i + 1, format!("rating {rating} outside 1..=5")));
        }
        raw.push((user as u64, item as u64, rating as u8, timestamp));
    }
    let users: Vec<u64> = raw.iter().map(|r| r.0).collect::<BTreeSet<_>>().into_iter().collect();
    let items: Vec<u64> = raw.iter().map(|r| r.1).collect::<BTreeSet<_>>().into_iter().collect();
    let uidx: BTreeMap<u64, usize> = users.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let iidx: BTreeMap<u64, usize> = items.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let interactions = raw
        .into_iter()
        .map(|(u, i, rating, timestamp)| Interaction {
            user: uidx[&u],
            item: iidx[&i],
            rating,
            timestamp,
        })
        .collect();
    Ok((interactions, IdMap { users, items }))
}

pub fn parse_movielens_file(path: &Path) -> Result<(Vec<Interaction>, IdMap)> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    parse_movielens(BufReader::new(File::open(path)?), &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovieLensSplit {
    pub train: RankingDataset,
    pub test: RankingDataset,
    /// Raw ids of users with no training positive.
    pub excluded_users: Vec<u64>,
}

/// Splits ratings >= 4 into train/test at `train_ratio` with a seeded
/// shuffle. Each user's unlabeled pool (and test candidate set) is every item
/// except the user's training positives; test grades mark held-out positives.
pub fn compile_movielens_dataset(
    interactions: &[Interaction],
    ids: &IdMap,
    train_ratio: f64,
    rng: &mut Rng,
) -> Result<MovieLensSplit> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::Config(format!("split ratio must be in (0, 1), got {train_ratio}")));
    }
    let (num_users, num_items) = (ids.users.len(), ids.items.len());
    let mut positives: Vec<(usize, usize)> = interactions
        .iter()
        .filter(|r| r.rating >= 4)
        .map(|r| (r.user, r.item))
        .collect();
    positives.shuffle(rng);
    let n_train = (train_ratio * positives.len() as f64).round() as usize;
    let mut train_pos = vec![BTreeSet::new(); num_users];
    let mut test_pos = vec![BTreeSet::new(); num_users];
    for (k, &(u, i)) in positives.iter().enumerate() {
        if k < n_train {
            train_pos[u].insert(i);
        } else {
            test_pos[u].insert(i);
        }
    }
    let docs = DocStore::Items { num_users, num_items };
    let mut train_q = Vec::new();
    let mut test_q = Vec::new();
    let mut excluded_users = Vec::new();
    for u in 0..num_users {
        let unlabeled: Vec<usize> = (0..num_items).filter(|i| !train_pos[u].contains(i)).collect();
        let id = ids.users[u].to_string();
        if train_pos[u].is_empty() {
            excluded_users.push(ids.users[u]);
        } else {
            let mut q = QueryPool::new(id.clone(), u);
            q.labeled = train_pos[u].iter().copied().collect();
            q.unlabeled = unlabeled.clone();
            train_q.push(q);
        }
        if !test_pos[u].is_empty() {
            let mut q = QueryPool::new(id, u);
            q.grades = unlabeled.iter().map(|i| test_pos[u].contains(i) as u8).collect();
            q.candidates = unlabeled;
            test_q.push(q);
        }
    }
    Ok(MovieLensSplit {
        train: RankingDataset {
            docs: docs.clone(),
            queries: train_q,
        },
        test: RankingDataset { docs, queries: test_q },
        excluded_users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    #[test]
    fn parses_a_line() {
        let (r, ids) = parse_movielens("196\t242\t3\t881250949\n".as_bytes(), "u").unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(ids.users[r[0].user], 196);
        assert_eq!(ids.items[r[0].item], 242);
        assert_eq!(r[0].rating, 3);
        assert_eq!(r[0].timestamp, 881250949);
    }

    #[test]
    fn rejects_bad_lines() {
        let err = parse_movielens("1\t2\t4\t5\n1\t2\t6\t5\n".as_bytes(), "u").unwrap_err();
        assert!(err.to_string().contains("u:2"), "{err}");
        assert!(parse_movielens("1 2 4 5\n".as_bytes(), "u").is_err());
        assert!(parse_movielens("1\tx\t4\t5\n".as_bytes(), "u").is_err());
    }

    #[test]
    fn dense_ids_follow_raw_order() {
        let (r, ids) = parse_movielens("9\t30\t1\t0\n2\t10\t1\t0\n9\t10\t1\t0\n".as_bytes(), "u").unwrap();
        assert_eq!(ids.users, vec![2, 9]);
        assert_eq!(ids.items, vec![10, 30]);
        assert_eq!((r[0].user, r[0].item), (1, 1));
    }

    fn fixture() -> (Vec<Interaction>, IdMap) {
        let mut text = String::new();
        for u in 1..=20 {
            for i in 1..=15 {
                let rating = 1 + (u * 7 + i * 3) % 5;
                text.push_str(&format!("{u}\t{i}\t{rating}\t0\n"));
            }
        }
        parse_movielens(text.as_bytes(), "fixture").unwrap()
    }

    #[test]
    fn split_rules() {
        let (r, ids) = fixture();
        let s = compile_movielens_dataset(&r, &ids, 0.8, &mut seeded_rng(1)).unwrap();
        let n_pos = r.iter().filter(|x| x.rating >= 4).count();
        let n_test: usize = s.test.queries.iter().map(|q| q.grades.iter().filter(|&&g| g > 0).count()).sum();
        assert_eq!(s.train.num_labeled() + n_test, n_pos);
        assert_eq!(s.train.num_labeled(), (0.8 * n_pos as f64).round() as usize);
        assert!(s.train.pools_disjoint());
        for q in &s.train.queries {
            assert_eq!(q.labeled.len() + q.unlabeled.len(), 15);
        }
        // a rating-3 item is never a training positive
        let three = r.iter().find(|x| x.rating == 3).unwrap();
        let q = s.train.queries.iter().find(|q| q.key == three.user).unwrap();
        assert!(q.unlabeled.contains(&three.item));
    }

    #[test]
    fn split_is_deterministic() {
        let (r, ids) = fixture();
        let a = compile_movielens_dataset(&r, &ids, 0.8, &mut seeded_rng(5)).unwrap();
        let b = compile_movielens_dataset(&r, &ids, 0.8, &mut seeded_rng(5)).unwrap();
        let c = compile_movielens_dataset(&r, &ids, 0.8, &mut seeded_rng(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn users_without_train_positives_are_reported() {
        let text = "1\t1\t5\t0\n1\t2\t5\t0\n1\t3\t5\t0\n1\t4\t5\t0\n2\t1\t1\t0\n";
        let (r, ids) = parse_movielens(text.as_bytes(), "u").unwrap();
        let s = compile_movielens_dataset(&r, &ids, 0.75, &mut seeded_rng(0)).unwrap();
        assert_eq!(s.excluded_users, vec![2]);
        assert_eq!(s.train.queries.len(), 1);
    }
}
