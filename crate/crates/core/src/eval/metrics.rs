/// Fraction of the top `n` entries with grade > 0. Short lists count as
/// padded with irrelevant entries.
pub fn precision_at(ranked: &[u8], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    ranked.iter().take(n).filter(|&&g| g > 0).count() as f64 / n as f64
}

/// `sum_{r <= n} (2^g_r - 1) / log2(r + 1)`
pub fn dcg_at(ranked: &[u8], n: usize) -> f64 {
    ranked
        .iter()
        .take(n)
        .enumerate()
        .map(|(i, &g)| (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// DCG of `ranked` over the DCG of `ideal` sorted descending; 0 when the
/// ideal DCG is 0.
pub fn ndcg_at(ranked: &[u8], ideal: &[u8], n: usize) -> f64 {
    let mut best = ideal.to_vec();
    best.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg_at(&best, n);
    if idcg == 0.0 {
        return 0.0;
    }
    dcg_at(ranked, n) / idcg
}
