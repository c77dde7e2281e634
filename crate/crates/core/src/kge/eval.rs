use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EmbeddingStore;
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationMrr {
    pub mrr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrrReport {
    pub overall: f64,
    pub count: usize,
    pub per_relation: BTreeMap<RelationId, RelationMrr>,
}

/// Filtered rank of `truth` among `scores`: candidates that form a known
/// triple are skipped, ties are broken by ascending id.
fn filtered_rank(scores: &[f64], truth: EntityId, known: impl Fn(EntityId) -> bool) -> usize {
    let s_true = scores[truth.index()];
    let mut rank = 1;
    for (i, &s) in scores.iter().enumerate() {
        let e = EntityId(i as u32);
        if e == truth || known(e) {
            continue;
        }
        if s > s_true || (s == s_true && e < truth) {
            rank += 1;
        }
    }
    rank
}

/// Filtered MRR averaged over head and tail corruption, overall and per
/// relation. Triples in `filter` other than the one being ranked are
/// removed from the candidate lists.
pub fn evaluate_mrr(store: &EmbeddingStore, test: &[Triple], filter: &KnowledgeGraph) -> Result<MrrReport> {
    if test.is_empty() {
        return Err(Error::Config("MRR evaluation needs at least one test triple".into()));
    }
    for t in test {
        store.check_triple(t)?;
    }
    let reciprocal: Vec<f64> = test
        .par_iter()
        .map(|t| {
            let tails = store.tail_scores(store.entity(t.head), t.relation);
            let rt = filtered_rank(&tails, t.tail, |e| filter.has_edge(t.head, t.relation, e));
            let heads = store.head_scores(t.relation, store.entity(t.tail));
            let rh = filtered_rank(&heads, t.head, |e| filter.has_edge(e, t.relation, t.tail));
            0.5 * (1.0 / rt as f64 + 1.0 / rh as f64)
        })
        .collect();

    let mut sums: BTreeMap<RelationId, (f64, usize)> = BTreeMap::new();
    for (t, rr) in test.iter().zip(&reciprocal) {
        let entry = sums.entry(t.relation).or_default();
        entry.0 += rr;
        entry.1 += 1;
    }
    Ok(MrrReport {
        overall: reciprocal.iter().sum::<f64>() / test.len() as f64,
        count: test.len(),
        per_relation: sums
            .into_iter()
            .map(|(r, (sum, count))| (r, RelationMrr { mrr: sum / count as f64, count }))
            .collect(),
    })
}
