use std::collections::{BTreeMap, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kg::{EntityId, EntityType, KnowledgeGraph, RelationId, Triple};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TruthCategory {
    True,
    False,
    Nonsense,
}

impl TruthCategory {
    pub const ALL: [TruthCategory; 3] = [TruthCategory::True, TruthCategory::False, TruthCategory::Nonsense];

    pub fn as_str(self) -> &'static str {
        match self {
            TruthCategory::True => "True",
            TruthCategory::False => "False",
            TruthCategory::Nonsense => "Nonsense",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthQuery {
    pub triple: Triple,
    pub category: TruthCategory,
    /// The observed triple this one was derived from.
    pub source: Triple,
}

/// Up to `per_relation` observed triples of every relation of `graph`,
/// each paired with a same-type corruption (False) and an any-type
/// corruption (Nonsense) of its tail.
///
/// Corrupted tails never form a triple of `known`, and Nonsense triples
/// never repeat a False one, so the three sets are disjoint. Relations
/// with fewer triples contribute all of them. A corruption is skipped when
/// no admissible tail exists. Output is grouped by relation, then
/// category, in sampling order.
pub fn sample_truth_queries(
    graph: &KnowledgeGraph,
    known: &KnowledgeGraph,
    entity_types: &[EntityType],
    per_relation: usize,
    seed_value: u64,
) -> Vec<TruthQuery> {
    let mut by_relation: BTreeMap<RelationId, Vec<Triple>> = BTreeMap::new();
    for t in graph.triples() {
        by_relation.entry(t.relation).or_default().push(*t);
    }
    let n = graph.num_entities();
    let mut by_type: BTreeMap<EntityType, Vec<EntityId>> = BTreeMap::new();
    for e in 0..n {
        let ty = entity_types.get(e).copied().unwrap_or(EntityType::Unknown);
        by_type.entry(ty).or_default().push(EntityId(e as u32));
    }
    let type_of = |e: EntityId| entity_types.get(e.index()).copied().unwrap_or(EntityType::Unknown);

    let mut out = Vec::new();
    for (r, mut triples) in by_relation {
        triples.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed_value, r.0 as u64));
        let chosen: Vec<Triple> = if triples.len() <= per_relation {
            if triples.len() < per_relation {
                log::warn!("relation {} has {} triples, fewer than {per_relation}; using all", r.0, triples.len());
            }
            triples
        } else {
            let mut picked: Vec<Triple> = triples.choose_multiple(&mut rng, per_relation).copied().collect();
            picked.shuffle(&mut rng);
            picked
        };

        let mut false_set: HashSet<Triple> = HashSet::new();
        let mut falses = Vec::new();
        for t in &chosen {
            let pool: Vec<EntityId> = by_type[&type_of(t.tail)]
                .iter()
                .copied()
                .filter(|&e| !known.has_edge(t.head, r, e) && !false_set.contains(&Triple::new(t.head, r, e)))
                .collect();
            if let Some(&e) = pool.choose(&mut rng) {
                let c = Triple::new(t.head, r, e);
                false_set.insert(c);
                falses.push(TruthQuery { triple: c, category: TruthCategory::False, source: *t });
            } else {
                log::warn!("no same-type corruption for triple {:?}", t);
            }
        }
        let mut nonsense_set: HashSet<Triple> = HashSet::new();
        let mut nonsense = Vec::new();
        for t in &chosen {
            let pool: Vec<EntityId> = (0..n as u32)
                .map(EntityId)
                .filter(|&e| {
                    let c = Triple::new(t.head, r, e);
                    !known.contains(&c) && !false_set.contains(&c) && !nonsense_set.contains(&c)
                })
                .collect();
            if let Some(&e) = pool.choose(&mut rng) {
                let c = Triple::new(t.head, r, e);
                nonsense_set.insert(c);
                nonsense.push(TruthQuery { triple: c, category: TruthCategory::Nonsense, source: *t });
            } else {
                log::warn!("no corruption for triple {:?}", t);
            }
        }
        out.extend(chosen.iter().map(|&t| TruthQuery { triple: t, category: TruthCategory::True, source: t }));
        out.extend(falses);
        out.extend(nonsense);
    }
    out
}
