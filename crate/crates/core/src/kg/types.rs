use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EntityId, KnowledgeGraph, RelationId, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityType {
    Person,
    Location,
    Institution,
    Profession,
    Ethnicity,
    CauseOfDeath,
    Religion,
    Gender,
    Unknown,
}

impl EntityType {
    pub const ALL: [EntityType; 9] = [
        EntityType::Person,
        EntityType::Location,
        EntityType::Institution,
        EntityType::Profession,
        EntityType::Ethnicity,
        EntityType::CauseOfDeath,
        EntityType::Religion,
        EntityType::Gender,
        EntityType::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Person => "Person",
            EntityType::Location => "Location",
            EntityType::Institution => "Institution",
            EntityType::Profession => "Profession",
            EntityType::Ethnicity => "Ethnicity",
            EntityType::CauseOfDeath => "CauseOfDeath",
            EntityType::Religion => "Religion",
            EntityType::Gender => "Gender",
            EntityType::Unknown => "Unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

/// Coarse relation grouping used when breaking down results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationGroup {
    Family,
    Location,
    Other,
}

impl RelationGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationGroup::Family => "Family",
            RelationGroup::Location => "Location",
            RelationGroup::Other => "Other",
        }
    }
}

/// Lowercase, with `-` and spaces folded to `_`.
pub(crate) fn normalize_relation_name(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace(['-', ' '], "_")
}

pub(crate) fn is_family_relation(name: &str) -> bool {
    matches!(
        normalize_relation_name(name).as_str(),
        "parent" | "parents" | "child" | "children" | "spouse" | "sibling" | "siblings"
    )
}

pub fn relation_group(name: &str) -> RelationGroup {
    if is_family_relation(name) {
        return RelationGroup::Family;
    }
    match normalize_relation_name(name).as_str() {
        "location" | "place_of_birth" | "place_of_death" | "nationality" => RelationGroup::Location,
        _ => RelationGroup::Other,
    }
}

/// Tail-type rules in precedence order.
const TAIL_RULES: [(&[&str], EntityType); 7] = [
    (&["gender"], EntityType::Gender),
    (&["religion"], EntityType::Religion),
    (&["cause_of_death"], EntityType::CauseOfDeath),
    (&["ethnicity"], EntityType::Ethnicity),
    (&["profession"], EntityType::Profession),
    (&["institution"], EntityType::Institution),
    (&["location", "place_of_birth", "place_of_death", "nationality"], EntityType::Location),
];

fn tail_rule_rank(relation_name: &str) -> Option<usize> {
    let name = normalize_relation_name(relation_name);
    TAIL_RULES.iter().position(|(names, _)| names.contains(&name.as_str()))
}

/// Assign one type per entity id from the positions in which it appears.
///
/// Rules, first match wins: being the tail of gender, religion,
/// cause_of_death, ethnicity, profession, institution, then any location
/// relation gives the matching type; otherwise being the head of any triple
/// or an endpoint of a family relation gives `Person`; otherwise `Unknown`.
pub fn assign_entity_types(graph: &KnowledgeGraph, vocab: &Vocabulary) -> Vec<EntityType> {
    let rel_rank: Vec<Option<usize>> = (0..vocab.num_relations().max(graph.num_relations()))
        .map(|r| tail_rule_rank(vocab.relation_name(RelationId(r as u32))))
        .collect();
    let rel_family: Vec<bool> =
        (0..rel_rank.len()).map(|r| is_family_relation(vocab.relation_name(RelationId(r as u32)))).collect();

    let n = graph.num_entities().max(vocab.num_entities());
    (0..n)
        .map(|e| {
            let e = EntityId(e as u32);
            let best_tail_rule = graph.incoming(e).filter_map(|t| rel_rank[t.relation.index()]).min();
            if let Some(rank) = best_tail_rule {
                return TAIL_RULES[rank].1;
            }
            let is_head = graph.outgoing(e).next().is_some();
            let family_endpoint = graph.incoming(e).any(|t| rel_family[t.relation.index()]);
            if is_head || family_endpoint {
                EntityType::Person
            } else {
                EntityType::Unknown
            }
        })
        .collect()
}

pub(crate) fn type_histogram(types: &[EntityType]) -> BTreeMap<String, usize> {
    let mut hist = BTreeMap::new();
    for t in types {
        *hist.entry(t.as_str().to_owned()).or_insert(0) += 1;
    }
    hist
}
