#![allow(dead_code)]

use std::fmt::Write as _;

use advrank::numerics::seeded_rng;
use rand::Rng as _;

/// Canonical LETOR text with `queries` queries of `docs` documents each.
/// Features carry a weak linear relevance signal.
pub fn letor_fixture(queries: usize, docs: usize, seed: u64) -> String {
    let mut rng = seeded_rng(seed);
    let mut s = String::new();
    for q in 0..queries {
        for d in 0..docs {
            let rel: i8 = [-1, 0, 0, 1, 2][rng.random_range(0..5)];
            write!(s, "{rel} qid:{}", 100 + q).unwrap();
            for f in 0..46 {
                let noise: f64 = rng.random();
                let v = if f < 5 { (0.5 * noise + 0.2 * f64::from(rel.max(0))).min(1.0) } else { noise };
                let v = (v * 1000.0).round() / 1000.0;
                write!(s, " {}:{v}", f + 1).unwrap();
            }
            writeln!(s, " #docid = D{q}-{d} inc = 1 prob = 0.5").unwrap();
        }
    }
    s
}

/// MovieLens `u.data` text: tab-separated user, item, rating, timestamp.
/// Users prefer items whose id shares their parity.
pub fn movielens_fixture(users: u32, items: u32, per_user: u32, seed: u64) -> String {
    let mut rng = seeded_rng(seed);
    let mut s = String::new();
    for u in 1..=users {
        let mut seen = std::collections::BTreeSet::new();
        while seen.len() < per_user as usize {
            seen.insert(rng.random_range(1..=items));
        }
        for i in seen {
            let liked = (i + u) % 2 == 0;
            let rating = if liked { rng.random_range(4..=5) } else { rng.random_range(1..=3) };
            writeln!(s, "{u}\t{i}\t{rating}\t{}", 880_000_000 + u * 1000 + i).unwrap();
        }
    }
    s
}
