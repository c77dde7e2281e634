use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kg::{EntityId, Triple};
use crate::kge::{ComplexView, EmbeddingStore};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigmas {
    pub sigma_h: f64,
    pub sigma_t: f64,
}

/// `k^2` neighbours of the query head: the top-`k` tails `e_i` of
/// `(h, r, ?)`, then the top-`k` heads of each `(?, r, e_i)`. Multiplicity
/// is kept and `h` itself counts when ranked.
pub fn head_neighbors(store: &EmbeddingStore, query: &Triple, k: usize) -> Result<Vec<EntityId>> {
    let mut out = Vec::with_capacity(k * k);
    for (e, _) in store.top_k_tails(query.head, query.relation, k)? {
        out.extend(store.top_k_heads(query.relation, e, k)?.into_iter().map(|(n, _)| n));
    }
    Ok(out)
}

/// Mirror of [`head_neighbors`] for the tail: top-`k` heads of `(?, r, t)`,
/// then the top-`k` tails of each `(e_i, r, ?)`.
pub fn tail_neighbors(store: &EmbeddingStore, query: &Triple, k: usize) -> Result<Vec<EntityId>> {
    let mut out = Vec::with_capacity(k * k);
    for (e, _) in store.top_k_heads(query.relation, query.tail, k)? {
        out.extend(store.top_k_tails(e, query.relation, k)?.into_iter().map(|(n, _)| n));
    }
    Ok(out)
}

/// Root mean square distance between `center` and the neighbours, taken over
/// all `2d` real components of every neighbour.
pub fn rms_distance(store: &EmbeddingStore, center: ComplexView<'_>, neighbors: &[EntityId]) -> f64 {
    if neighbors.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for &n in neighbors {
        let v = store.entity(n);
        for (a, b) in v.real_components().zip(center.real_components()) {
            sum += (a - b) * (a - b);
        }
    }
    (sum / (neighbors.len() * 2 * store.dim()) as f64).sqrt()
}

/// Per-component noise scales for the query head and tail.
pub fn compute_sigmas(store: &EmbeddingStore, query: &Triple, k: usize) -> Result<Sigmas> {
    store.check_triple(query)?;
    let nh = head_neighbors(store, query, k)?;
    let nt = tail_neighbors(store, query, k)?;
    Ok(Sigmas {
        sigma_h: rms_distance(store, store.entity(query.head), &nh),
        sigma_t: rms_distance(store, store.entity(query.tail), &nt),
    })
}
