//! ComplEx embedding store, scoring and top-k prediction.

mod eval;
mod io;
mod train;

use std::cmp::Ordering;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId, Triple};

pub use eval::{evaluate_mrr, MrrReport, RelationMrr};
pub use io::{
    decode_embeddings, load_embeddings, load_embeddings_for, save_embeddings, EmbeddingSidecar, FORMAT_VERSION, MAGIC,
};
pub use train::{logistic_example_loss, train, ExampleGradient, TrainingConfig, TrainingLog};

/// Plausibilities are clamped to `[EPS, 1 - EPS]` so that `-ln(1 - f)` stays finite.
pub const PLAUSIBILITY_EPS: f64 = 1e-12;

/// Borrowed complex vector: real and imaginary parts of equal length.
#[derive(Clone, Copy, Debug)]
pub struct ComplexView<'a> {
    pub re: &'a [f64],
    pub im: &'a [f64],
}

/// Owned complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingVector {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl EmbeddingVector {
    pub fn zeros(dim: usize) -> Self {
        Self { re: vec![0.0; dim], im: vec![0.0; dim] }
    }

    pub fn from_view(v: ComplexView<'_>) -> Self {
        Self { re: v.re.to_vec(), im: v.im.to_vec() }
    }

    pub fn view(&self) -> ComplexView<'_> {
        ComplexView { re: &self.re, im: &self.im }
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }
}

impl ComplexView<'_> {
    pub fn dim(&self) -> usize {
        self.re.len()
    }

    /// Components in the real layout `[re_0.., im_0..]`.
    pub fn real_components(&self) -> impl Iterator<Item = f64> + '_ {
        self.re.iter().chain(self.im.iter()).copied()
    }
}

/// ComplEx score `Re(<h, r, conj(t)>)`, expanded over real components.
///
/// Grouped by relation component so that a relation with zero imaginary
/// part scores `(h, r, t)` and `(t, r, h)` bit-identically.
#[inline]
pub fn complex_score(h: ComplexView<'_>, r: ComplexView<'_>, t: ComplexView<'_>) -> f64 {
    let d = h.re.len();
    debug_assert!(r.re.len() == d && t.re.len() == d);
    let mut s = 0.0;
    for i in 0..d {
        let (hr, hi) = (h.re[i], h.im[i]);
        let (tr, ti) = (t.re[i], t.im[i]);
        s += r.re[i] * (hr * tr + hi * ti) + r.im[i] * (hr * ti - hi * tr);
    }
    s
}

/// Logistic sigmoid, clamped to `[PLAUSIBILITY_EPS, 1 - PLAUSIBILITY_EPS]`.
#[inline]
pub fn plausibility_of_score(score: f64) -> f64 {
    let p = if score >= 0.0 {
        1.0 / (1.0 + (-score).exp())
    } else {
        let e = score.exp();
        e / (1.0 + e)
    };
    p.clamp(PLAUSIBILITY_EPS, 1.0 - PLAUSIBILITY_EPS)
}

/// `-ln(1 - f)` for a clamped plausibility `f`: the per-hop path-score term.
#[inline]
pub fn hop_score(plausibility: f64) -> f64 {
    -(-plausibility).ln_1p()
}

/// Entity and relation embeddings of a ComplEx model.
///
/// Vectors are stored row-major in four flat buffers (entity real/imag,
/// relation real/imag), each row of length `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    num_entities: usize,
    num_relations: usize,
    entity_re: Vec<f64>,
    entity_im: Vec<f64>,
    relation_re: Vec<f64>,
    relation_im: Vec<f64>,
}

impl EmbeddingStore {
    pub fn zeros(num_entities: usize, num_relations: usize, dim: usize) -> Self {
        Self {
            dim,
            num_entities,
            num_relations,
            entity_re: vec![0.0; num_entities * dim],
            entity_im: vec![0.0; num_entities * dim],
            relation_re: vec![0.0; num_relations * dim],
            relation_im: vec![0.0; num_relations * dim],
        }
    }

    /// Every component drawn uniformly from `[-bound, bound]`.
    pub fn random_uniform(
        num_entities: usize,
        num_relations: usize,
        dim: usize,
        bound: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut store = Self::zeros(num_entities, num_relations, dim);
        for buf in [&mut store.entity_re, &mut store.entity_im, &mut store.relation_re, &mut store.relation_im] {
            for x in buf.iter_mut() {
                *x = rng.random_range(-bound..=bound);
            }
        }
        store
    }

    /// Build from raw buffers (entity re, entity im, relation re, relation im).
    pub fn from_parts(
        num_entities: usize,
        num_relations: usize,
        dim: usize,
        entity_re: Vec<f64>,
        entity_im: Vec<f64>,
        relation_re: Vec<f64>,
        relation_im: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("embedding dimension must be positive".into()));
        }
        if entity_re.len() != num_entities * dim
            || entity_im.len() != num_entities * dim
            || relation_re.len() != num_relations * dim
            || relation_im.len() != num_relations * dim
        {
            return Err(Error::Format("buffer sizes do not match counts".into()));
        }
        let store = Self { dim, num_entities, num_relations, entity_re, entity_im, relation_re, relation_im };
        if !store.all_finite() {
            return Err(Error::Numeric("embedding contains non-finite values".into()));
        }
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub(crate) fn buffers(&self) -> [&[f64]; 4] {
        [&self.entity_re, &self.entity_im, &self.relation_re, &self.relation_im]
    }

    pub fn all_finite(&self) -> bool {
        self.buffers().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    /// # Panics
    ///
    /// If `e` is not registered. Use [`EmbeddingStore::try_entity`] for
    /// untrusted ids.
    #[inline]
    pub fn entity(&self, e: EntityId) -> ComplexView<'_> {
        let a = e.index() * self.dim;
        ComplexView { re: &self.entity_re[a..a + self.dim], im: &self.entity_im[a..a + self.dim] }
    }

    #[inline]
    pub fn relation(&self, r: RelationId) -> ComplexView<'_> {
        let a = r.index() * self.dim;
        ComplexView { re: &self.relation_re[a..a + self.dim], im: &self.relation_im[a..a + self.dim] }
    }

    pub fn try_entity(&self, e: EntityId) -> Result<ComplexView<'_>> {
        if e.index() >= self.num_entities {
            return Err(Error::Lookup(format!("entity id {} not in store of {} entities", e.0, self.num_entities)));
        }
        Ok(self.entity(e))
    }

    pub fn try_relation(&self, r: RelationId) -> Result<ComplexView<'_>> {
        if r.index() >= self.num_relations {
            return Err(Error::Lookup(format!("relation id {} not in store of {} relations", r.0, self.num_relations)));
        }
        Ok(self.relation(r))
    }

    pub fn check_triple(&self, t: &Triple) -> Result<()> {
        self.try_entity(t.head)?;
        self.try_relation(t.relation)?;
        self.try_entity(t.tail)?;
        Ok(())
    }

    pub(crate) fn entity_mut(&mut self, e: EntityId) -> (&mut [f64], &mut [f64]) {
        let a = e.index() * self.dim;
        (&mut self.entity_re[a..a + self.dim], &mut self.entity_im[a..a + self.dim])
    }

    pub(crate) fn relation_mut(&mut self, r: RelationId) -> (&mut [f64], &mut [f64]) {
        let a = r.index() * self.dim;
        (&mut self.relation_re[a..a + self.dim], &mut self.relation_im[a..a + self.dim])
    }

    pub fn set_entity(&mut self, e: EntityId, v: &EmbeddingVector) {
        let (re, im) = self.entity_mut(e);
        re.copy_from_slice(&v.re);
        im.copy_from_slice(&v.im);
    }

    pub fn set_relation(&mut self, r: RelationId, v: &EmbeddingVector) {
        let (re, im) = self.relation_mut(r);
        re.copy_from_slice(&v.re);
        im.copy_from_slice(&v.im);
    }

    /// Raw ComplEx score of a registered triple.
    pub fn score_raw(&self, h: EntityId, r: RelationId, t: EntityId) -> Result<f64> {
        Ok(complex_score(self.try_entity(h)?, self.try_relation(r)?, self.try_entity(t)?))
    }

    /// Sigmoid of the raw score, clamped away from 0 and 1.
    pub fn plausibility(&self, h: EntityId, r: RelationId, t: EntityId) -> Result<f64> {
        Ok(plausibility_of_score(self.score_raw(h, r, t)?))
    }

    /// Raw scores of `(h, r, e)` for every entity `e`.
    pub fn tail_scores(&self, h: ComplexView<'_>, r: RelationId) -> Vec<f64> {
        let r = self.relation(r);
        (0..self.num_entities).map(|e| complex_score(h, r, self.entity(EntityId(e as u32)))).collect()
    }

    /// Raw scores of `(e, r, t)` for every entity `e`.
    pub fn head_scores(&self, r: RelationId, t: ComplexView<'_>) -> Vec<f64> {
        let r = self.relation(r);
        (0..self.num_entities).map(|e| complex_score(self.entity(EntityId(e as u32)), r, t)).collect()
    }

    /// The `k` best tails for `(h, r, ?)`, score descending, ties by id.
    pub fn top_k_tails(&self, h: EntityId, r: RelationId, k: usize) -> Result<Vec<(EntityId, f64)>> {
        let hv = self.try_entity(h)?;
        self.try_relation(r)?;
        Ok(top_k(self.tail_scores(hv, r), k))
    }

    /// The `k` best heads for `(?, r, t)`, score descending, ties by id.
    pub fn top_k_heads(&self, r: RelationId, t: EntityId, k: usize) -> Result<Vec<(EntityId, f64)>> {
        let tv = self.try_entity(t)?;
        self.try_relation(r)?;
        Ok(top_k(self.head_scores(r, tv), k))
    }
}

fn rank_order(a: &(EntityId, f64), b: &(EntityId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Select the `k` highest scores (descending, ties by ascending id).
pub(crate) fn top_k(scores: Vec<f64>, k: usize) -> Vec<(EntityId, f64)> {
    let mut items: Vec<(EntityId, f64)> =
        scores.into_iter().enumerate().map(|(i, s)| (EntityId(i as u32), s)).collect();
    let k = k.min(items.len());
    if k == 0 {
        return Vec::new();
    }
    if k < items.len() {
        items.select_nth_unstable_by(k - 1, rank_order);
        items.truncate(k);
    }
    items.sort_by(rank_order);
    items
}
