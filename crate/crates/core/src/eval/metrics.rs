use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::benchmark::Benchmark;
use crate::explain::{fidelity_r2, Path};
use crate::kg::Triple;

/// NDCG gain applied to a relevance value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gain {
    /// `rel`
    #[default]
    Linear,
    /// `2^rel - 1`
    Exponential,
}

impl Gain {
    pub fn apply(self, rel: f64) -> f64 {
        match self {
            Gain::Linear => rel,
            Gain::Exponential => rel.exp2() - 1.0,
        }
    }
}

/// `sum_{i<k} gain(rel_i) / log2(i + 2)` over the first `k` entries.
pub fn dcg_at_k(relevances: &[f64], k: usize, gain: Gain) -> f64 {
    relevances.iter().take(k).enumerate().map(|(i, &r)| gain.apply(r) / ((i + 2) as f64).log2()).sum()
}

/// NDCG@k of a ranking's relevances against the full reference multiset.
/// Returns `(0, true)` when the ideal DCG is zero.
pub fn ndcg_at_k(ranked: &[f64], ideal: &[f64], k: usize, gain: Gain) -> (f64, bool) {
    assert!(k >= 1, "NDCG needs k >= 1");
    let mut sorted = ideal.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg_at_k(&sorted, k, gain);
    if idcg == 0.0 {
        return (0.0, true);
    }
    (dcg_at_k(ranked, k, gain) / idcg, false)
}

/// Benchmark relevance of each ranked path. Paths match entries in either
/// reading direction and each entry is matched at most once, so the
/// credited values are a sub-multiset of the ideal ones.
pub fn ranking_relevances<'a>(
    benchmark: &Benchmark,
    query: &Triple,
    ranked: impl IntoIterator<Item = &'a Path>,
) -> Vec<f64> {
    let mut remaining: HashMap<Path, usize> = HashMap::new();
    for e in benchmark.entries_for(query) {
        *remaining.entry(benchmark.canonical(&e.path)).or_insert(0) += 1;
    }
    ranked
        .into_iter()
        .map(|p| match remaining.get_mut(&benchmark.canonical(p)) {
            Some(n) if *n > 0 => {
                *n -= 1;
                benchmark.relevance_of(query, p)
            }
            _ => 0.0,
        })
        .collect()
}

/// Coefficient of determination about the mean of `y_true`; 0 for
/// constant labels.
pub fn r_squared(y_true: &[f64], y_pred: &[f64]) -> f64 {
    fidelity_r2(y_true, y_pred).0
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { count: n, mean, std }
    }
}

/// Welch's unequal-variance t statistic and its degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    let (sa, sb) = (Stat::of(a), Stat::of(b));
    if sa.count < 2 || sb.count < 2 {
        return None;
    }
    let va = sa.std * sa.std / sa.count as f64;
    let vb = sb.std * sb.std / sb.count as f64;
    if va + vb == 0.0 {
        return None;
    }
    let t = (sa.mean - sb.mean) / (va + vb).sqrt();
    let df = (va + vb).powi(2) / (va * va / (sa.count - 1) as f64 + vb * vb / (sb.count - 1) as f64);
    Some((t, df))
}

/// Mann-Whitney U of `a` against `b` with average ranks for ties.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mut all: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut rank_sum_a = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_a += all[i..=j].iter().filter(|x| x.1).count() as f64 * avg;
        i = j + 1;
    }
    let na = a.len() as f64;
    Some(rank_sum_a - na * (na + 1.0) / 2.0)
}
