use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::split::{shuffle_split, DEFAULT_PROPORTIONS};
use super::types::normalize_relation_name;
use super::{DatasetSplit, EntityId, KnowledgeGraph, RelationId, Triple, Vocabulary};
use crate::error::{Error, Result};

const PARENT_NAMES: [&str; 2] = ["parent", "parents"];
const CHILD_NAMES: [&str; 2] = ["child", "children"];
const SPOUSE_NAMES: [&str; 1] = ["spouse"];
const SIBLING_NAMES: [&str; 2] = ["sibling", "siblings"];

/// The family relations of a vocabulary, resolved by name. Both the
/// singular and the FB13 plural spellings are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyRelations {
    pub parent: RelationId,
    pub child: Option<RelationId>,
    pub spouse: Option<RelationId>,
    pub sibling: Option<RelationId>,
}

fn find_relation(vocab: &Vocabulary, names: &[&str]) -> Option<RelationId> {
    (0..vocab.num_relations() as u32)
        .map(RelationId)
        .find(|&r| names.contains(&normalize_relation_name(vocab.relation_name(r)).as_str()))
}

impl FamilyRelations {
    pub fn resolve(vocab: &Vocabulary) -> Result<Self> {
        let parent = find_relation(vocab, &PARENT_NAMES)
            .ok_or_else(|| Error::Input("vocabulary has no parent relation".into()))?;
        Ok(Self {
            parent,
            child: find_relation(vocab, &CHILD_NAMES),
            spouse: find_relation(vocab, &SPOUSE_NAMES),
            sibling: find_relation(vocab, &SIBLING_NAMES),
        })
    }

    /// Inverse relation: parent <-> child; spouse and sibling are their own
    /// inverse.
    pub fn inverse(&self, r: RelationId) -> Option<RelationId> {
        if r == self.parent {
            self.child
        } else if Some(r) == self.child {
            Some(self.parent)
        } else if Some(r) == self.spouse || Some(r) == self.sibling {
            Some(r)
        } else {
            None
        }
    }

    pub fn is_symmetric(&self, r: RelationId) -> bool {
        Some(r) == self.spouse || Some(r) == self.sibling
    }

    /// All inverse pairs, for feature exclusion rules.
    pub fn inverse_pairs(&self) -> Vec<(RelationId, RelationId)> {
        let mut pairs = Vec::new();
        if let Some(child) = self.child {
            pairs.push((self.parent, child));
            pairs.push((child, self.parent));
        }
        for r in [self.spouse, self.sibling].into_iter().flatten() {
            pairs.push((r, r));
        }
        pairs
    }

    /// Parents of `c` as recorded by `(c, parent, p)` edges.
    pub fn parents_of(&self, graph: &KnowledgeGraph, c: EntityId) -> BTreeSet<EntityId> {
        graph.outgoing(c).filter(|t| t.relation == self.parent).map(|t| t.tail).collect()
    }
}

/// Sibling triples implied by shared parents.
///
/// Two distinct entities are siblings when each has exactly two parent
/// out-edges and the two parent sets are identical. Both directions are
/// emitted; the output is sorted and duplicate free.
pub fn infer_siblings(graph: &KnowledgeGraph, parent: RelationId, sibling: RelationId) -> Vec<Triple> {
    let mut by_parents: BTreeMap<(EntityId, EntityId), Vec<EntityId>> = BTreeMap::new();
    for e in graph.active_entities() {
        let parents: BTreeSet<EntityId> = graph.outgoing(e).filter(|t| t.relation == parent).map(|t| t.tail).collect();
        if parents.len() == 2 {
            let mut it = parents.into_iter();
            let key = (it.next().unwrap(), it.next().unwrap());
            by_parents.entry(key).or_default().push(e);
        }
    }
    let mut out = Vec::new();
    for children in by_parents.values() {
        for &a in children {
            for &b in children {
                if a != b {
                    out.push(Triple::new(a, sibling, b));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiblingReport {
    pub sibling_triples: usize,
    pub appended_train: usize,
    pub appended_valid: usize,
    pub appended_test: usize,
}

/// Infer sibling triples over the union of all three parts, split them with
/// the standard proportions and append them to the respective parts.
/// Registers a `sibling` relation in `vocab` if none exists.
pub fn build_fb14(split: &DatasetSplit, vocab: &mut Vocabulary, seed: u64) -> Result<(DatasetSplit, SiblingReport)> {
    let family = FamilyRelations::resolve(vocab)?;
    let sibling = family.sibling.unwrap_or_else(|| vocab.intern_relation("sibling"));
    let combined = split.combined();
    let siblings: Vec<Triple> =
        infer_siblings(&combined, family.parent, sibling).into_iter().filter(|t| !combined.contains(t)).collect();
    let [train_add, valid_add, test_add] = shuffle_split(&siblings, DEFAULT_PROPORTIONS, seed)?;
    let report = SiblingReport {
        sibling_triples: siblings.len(),
        appended_train: train_add.len(),
        appended_valid: valid_add.len(),
        appended_test: test_add.len(),
    };

    let train = KnowledgeGraph::new(
        vocab.num_entities().max(split.train.num_entities()),
        vocab.num_relations(),
        split.train.triples().iter().copied().chain(train_add),
    );
    let mut valid = split.valid.clone();
    valid.extend(valid_add);
    valid.sort_unstable();
    let mut test = split.test.clone();
    test.extend(test_add);
    test.sort_unstable();
    Ok((DatasetSplit { train, valid, test, seed: split.seed }, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixture {
        vocab: Vocabulary,
        triples: Vec<Triple>,
    }

    impl Fixture {
        fn new(named: &[(&str, &str, &str)]) -> Self {
            let mut vocab = Vocabulary::new();
            let triples = named
                .iter()
                .map(|(h, r, t)| Triple::new(vocab.intern_entity(h), vocab.intern_relation(r), vocab.intern_entity(t)))
                .collect();
            Self { vocab, triples }
        }

        fn graph(&self) -> KnowledgeGraph {
            KnowledgeGraph::new(self.vocab.num_entities(), self.vocab.num_relations(), self.triples.iter().copied())
        }
    }

    fn mozart() -> Fixture {
        Fixture::new(&[
            ("maria", "parent", "leopold"),
            ("maria", "parent", "anna"),
            ("wolfgang", "parent", "leopold"),
            ("wolfgang", "parent", "anna"),
            ("leopold", "child", "maria"),
            ("leopold", "child", "wolfgang"),
            ("anna", "spouse", "leopold"),
            ("leopold", "spouse", "anna"),
        ])
    }

    #[test]
    fn mozart_siblings() {
        let mut fx = mozart();
        let sibling = fx.vocab.intern_relation("sibling");
        let g = fx.graph();
        let family = FamilyRelations::resolve(&fx.vocab).unwrap();
        let sibs = infer_siblings(&g, family.parent, sibling);
        assert_eq!(sibs.len(), 2);
        let maria = fx.vocab.entity("maria").unwrap();
        let wolfgang = fx.vocab.entity("wolfgang").unwrap();
        assert!(sibs.contains(&Triple::new(maria, sibling, wolfgang)));
        assert!(sibs.contains(&Triple::new(wolfgang, sibling, maria)));
    }

    #[test]
    fn three_parents_excluded() {
        let mut fx = Fixture::new(&[
            ("a", "parent", "p"),
            ("a", "parent", "q"),
            ("a", "parent", "z"),
            ("b", "parent", "p"),
            ("b", "parent", "q"),
            ("c", "parent", "p"),
            ("c", "parent", "q"),
        ]);
        let sibling = fx.vocab.intern_relation("sibling");
        let g = fx.graph();
        let family = FamilyRelations::resolve(&fx.vocab).unwrap();
        let sibs = infer_siblings(&g, family.parent, sibling);
        let a = fx.vocab.entity("a").unwrap();
        assert_eq!(sibs.len(), 2);
        assert!(sibs.iter().all(|t| t.head != a && t.tail != a));
    }

    #[test]
    fn fb14_without_siblings_only_registers_relation() {
        let mut fx = Fixture::new(&[("a", "parent", "p"), ("p", "spouse", "q")]);
        let g = fx.graph();
        let split = DatasetSplit { train: g, valid: vec![], test: vec![], seed: 1 };
        let (out, report) = build_fb14(&split, &mut fx.vocab, 5).unwrap();
        assert_eq!(report.sibling_triples, 0);
        assert_eq!(out.train.triples(), split.train.triples());
        assert!(fx.vocab.relation("sibling").is_ok());
        assert_eq!(out.train.num_relations(), 3);
    }

    #[test]
    fn fb14_is_deterministic() {
        let mut named = Vec::new();
        let names: Vec<(String, String, String)> = (0..20)
            .flat_map(|f| {
                (0..3).flat_map(move |c| {
                    [
                        (format!("c{f}_{c}"), "parent".to_owned(), format!("pa{f}")),
                        (format!("c{f}_{c}"), "parent".to_owned(), format!("pb{f}")),
                    ]
                })
            })
            .collect();
        for (h, r, t) in &names {
            named.push((h.as_str(), r.as_str(), t.as_str()));
        }
        let fx = Fixture::new(&named);
        let split = DatasetSplit { train: fx.graph(), valid: vec![], test: vec![], seed: 0 };
        let mut v1 = fx.vocab.clone();
        let mut v2 = fx.vocab.clone();
        let (a, ra) = build_fb14(&split, &mut v1, 42).unwrap();
        let (b, rb) = build_fb14(&split, &mut v2, 42).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(ra.sibling_triples, 20 * 6);
        assert_eq!([ra.appended_train, ra.appended_valid, ra.appended_test], [96, 12, 12]);
        assert_eq!(a.train.triples(), b.train.triples());
        assert_eq!(a.valid, b.valid);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn inverse_map() {
        let fx = mozart();
        let family = FamilyRelations::resolve(&fx.vocab).unwrap();
        let child = fx.vocab.relation("child").unwrap();
        let spouse = fx.vocab.relation("spouse").unwrap();
        assert_eq!(family.inverse(family.parent), Some(child));
        assert_eq!(family.inverse(child), Some(family.parent));
        assert_eq!(family.inverse(spouse), Some(spouse));
        assert!(family.is_symmetric(spouse));
    }

    #[test]
    fn plural_names_resolve() {
        let fx = Fixture::new(&[("a", "parents", "b"), ("b", "children", "a")]);
        let family = FamilyRelations::resolve(&fx.vocab).unwrap();
        assert_eq!(family.parent, fx.vocab.relation("parents").unwrap());
        assert_eq!(family.child, Some(fx.vocab.relation("children").unwrap()));
    }

    #[test]
    fn missing_parent_is_input_error() {
        let fx = Fixture::new(&[("a", "likes", "b")]);
        assert!(matches!(FamilyRelations::resolve(&fx.vocab), Err(Error::Input(_))));
    }
}
