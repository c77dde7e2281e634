//! Knowledge graph data model and dataset preparation.

mod dataset;
mod family;
mod io;
mod split;
mod types;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use dataset::{prepare_dataset, prepare_from_triples, Dataset, Manifest, PrepareOptions};
pub use family::{build_fb14, infer_siblings, FamilyRelations, SiblingReport};
pub use io::{load_triples, parse_triples, write_triples};
pub use split::{
    filter_to_largest_component, largest_remainder, random_split, ComponentStats, DatasetSplit, SplitTag,
    DEFAULT_PROPORTIONS,
};
pub use types::{assign_entity_types, relation_group, EntityType, RelationGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bidirectional string <-> dense id table. Ids are assigned in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameTable {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl NameTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Entity and relation name tables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub entities: NameTable,
    pub relations: NameTable,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_entity(&mut self, name: &str) -> EntityId {
        EntityId(self.entities.intern(name))
    }

    pub fn intern_relation(&mut self, name: &str) -> RelationId {
        RelationId(self.relations.intern(name))
    }

    pub fn entity(&self, name: &str) -> Result<EntityId> {
        self.entities.get(name).map(EntityId).ok_or_else(|| Error::UnknownEntity(name.to_owned()))
    }

    pub fn relation(&self, name: &str) -> Result<RelationId> {
        self.relations.get(name).map(RelationId).ok_or_else(|| Error::UnknownRelation(name.to_owned()))
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        self.entities.name(id.0).unwrap_or("<unknown-entity>")
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        self.relations.name(id.0).unwrap_or("<unknown-relation>")
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    /// Resolve a `(head, relation, tail)` name triple.
    pub fn triple(&self, head: &str, relation: &str, tail: &str) -> Result<Triple> {
        Ok(Triple::new(self.entity(head)?, self.relation(relation)?, self.entity(tail)?))
    }

    pub fn triple_names(&self, t: &Triple) -> [String; 3] {
        [
            self.entity_name(t.head).to_owned(),
            self.relation_name(t.relation).to_owned(),
            self.entity_name(t.tail).to_owned(),
        ]
    }

    /// SHA-256 over both name tables, hex encoded. Used to tie an embedding
    /// file to the dataset it was trained on.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (tag, table) in [(b'E', &self.entities), (b'R', &self.relations)] {
            hasher.update([tag]);
            hasher.update((table.len() as u64).to_le_bytes());
            for name in table.names() {
                hasher.update((name.len() as u64).to_le_bytes());
                hasher.update(name.as_bytes());
            }
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self { head, relation, tail }
    }
}

/// An immutable set of triples with per-entity adjacency indexes.
///
/// Triples are stored sorted and duplicate free; `outgoing[e]` and
/// `incoming[e]` hold indexes into the triple vector.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    num_entities: usize,
    num_relations: usize,
    triples: Vec<Triple>,
    lookup: HashSet<Triple>,
    outgoing: Vec<Vec<u32>>,
    incoming: Vec<Vec<u32>>,
}

impl KnowledgeGraph {
    /// Build a graph over `num_entities` / `num_relations` ids. Duplicate
    /// triples are dropped.
    ///
    /// # Panics
    ///
    /// If a triple references an id outside the given ranges.
    pub fn new(num_entities: usize, num_relations: usize, triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut triples: Vec<Triple> = triples.into_iter().collect();
        triples.sort_unstable();
        triples.dedup();
        let mut outgoing = vec![Vec::new(); num_entities];
        let mut incoming = vec![Vec::new(); num_entities];
        for (i, t) in triples.iter().enumerate() {
            assert!(
                t.head.index() < num_entities && t.tail.index() < num_entities,
                "triple {t:?} references an entity outside 0..{num_entities}"
            );
            assert!(
                t.relation.index() < num_relations,
                "triple {t:?} references a relation outside 0..{num_relations}"
            );
            outgoing[t.head.index()].push(i as u32);
            incoming[t.tail.index()].push(i as u32);
        }
        let lookup = triples.iter().copied().collect();
        Self { num_entities, num_relations, triples, lookup, outgoing, incoming }
    }

    pub fn empty(num_entities: usize, num_relations: usize) -> Self {
        Self::new(num_entities, num_relations, std::iter::empty())
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.lookup.contains(t)
    }

    pub fn has_edge(&self, head: EntityId, relation: RelationId, tail: EntityId) -> bool {
        self.lookup.contains(&Triple::new(head, relation, tail))
    }

    pub fn outgoing(&self, e: EntityId) -> impl Iterator<Item = &Triple> + '_ {
        self.outgoing.get(e.index()).into_iter().flatten().map(move |&i| &self.triples[i as usize])
    }

    pub fn incoming(&self, e: EntityId) -> impl Iterator<Item = &Triple> + '_ {
        self.incoming.get(e.index()).into_iter().flatten().map(move |&i| &self.triples[i as usize])
    }

    /// Entities incident to at least one triple.
    pub fn active_entities(&self) -> BTreeSet<EntityId> {
        self.triples.iter().flat_map(|t| [t.head, t.tail]).collect()
    }

    /// Same graph with the id space widened (e.g. after new relations were
    /// registered in the vocabulary).
    pub fn with_capacity(&self, num_entities: usize, num_relations: usize) -> Self {
        Self::new(
            num_entities.max(self.num_entities),
            num_relations.max(self.num_relations),
            self.triples.iter().copied(),
        )
    }

    /// Whether the stored adjacency indexes are exactly those a fresh
    /// rebuild from the triple set would produce.
    pub fn adjacency_consistent(&self) -> bool {
        let rebuilt = Self::new(self.num_entities, self.num_relations, self.triples.iter().copied());
        rebuilt.triples == self.triples
            && rebuilt.outgoing == self.outgoing
            && rebuilt.incoming == self.incoming
            && self.lookup.len() == self.triples.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(h: u32, r: u32, tl: u32) -> Triple {
        Triple::new(EntityId(h), RelationId(r), EntityId(tl))
    }

    #[test]
    fn graph_dedups_and_indexes() {
        let g = KnowledgeGraph::new(3, 2, [t(0, 0, 1), t(0, 0, 1), t(1, 1, 2)]);
        assert_eq!(g.len(), 2);
        assert_eq!(g.outgoing(EntityId(0)).count(), 1);
        assert_eq!(g.incoming(EntityId(2)).count(), 1);
        assert_eq!(g.incoming(EntityId(0)).count(), 0);
        assert!(g.adjacency_consistent());
        assert!(g.has_edge(EntityId(1), RelationId(1), EntityId(2)));
    }

    #[test]
    fn name_table_is_a_bijection() {
        let mut table = NameTable::new();
        assert_eq!(table.intern("a"), 0);
        assert_eq!(table.intern("b"), 1);
        assert_eq!(table.intern("a"), 0);
        assert_eq!(table.name(1), Some("b"));
        assert_eq!(table.get("b"), Some(1));
        assert_eq!(table.len(), 2);
    }

    #[test]
    fn fingerprint_depends_on_names() {
        let mut a = Vocabulary::new();
        a.intern_entity("x");
        let mut b = Vocabulary::new();
        b.intern_entity("y");
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
    }
}
