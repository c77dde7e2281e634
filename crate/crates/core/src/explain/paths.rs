use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FeatureSpec, PerturbationConfig};
use crate::error::Result;
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple, Vocabulary};
use crate::kge::{hop_score, EmbeddingStore};

/// An entity-relation chain `e0 r0 e1 [r1 e2]`. Every hop `(e_j, r_j, e_j+1)`
/// is read in the forward direction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path {
    pub entities: Vec<EntityId>,
    pub relations: Vec<RelationId>,
}

impl Path {
    pub fn one_hop(a: EntityId, r: RelationId, b: EntityId) -> Self {
        Self { entities: vec![a, b], relations: vec![r] }
    }

    pub fn two_hop(a: EntityId, r1: RelationId, x: EntityId, r2: RelationId, b: EntityId) -> Self {
        Self { entities: vec![a, x, b], relations: vec![r1, r2] }
    }

    /// Number of hops.
    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn first(&self) -> EntityId {
        self.entities[0]
    }

    pub fn last(&self) -> EntityId {
        *self.entities.last().expect("path has entities")
    }

    pub fn hops(&self) -> impl Iterator<Item = Triple> + '_ {
        self.relations.iter().enumerate().map(|(j, &r)| Triple::new(self.entities[j], r, self.entities[j + 1]))
    }

    pub fn is_well_formed(&self) -> bool {
        !self.relations.is_empty() && self.entities.len() == self.relations.len() + 1
    }

    /// Alternating entity/relation names.
    pub fn names(&self, vocab: &Vocabulary) -> Vec<String> {
        let mut out = Vec::with_capacity(self.entities.len() + self.relations.len());
        for (j, e) in self.entities.iter().enumerate() {
            out.push(vocab.entity_name(*e).to_owned());
            if let Some(r) = self.relations.get(j) {
                out.push(vocab.relation_name(*r).to_owned());
            }
        }
        out
    }

    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Path, &'a Vocabulary);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{{{}}}", self.0.names(self.1).join(", "))
            }
        }
        D(self, vocab)
    }
}

/// Which candidate set produced a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathRole {
    /// One hop touching the query head; `outgoing` if the head is the first entity.
    HeadOneHop { outgoing: bool },
    /// One hop touching the query tail; `outgoing` if the tail is the first entity.
    TailOneHop { outgoing: bool },
    /// Two hops linking head and tail; `from_head` if the path starts at the head.
    BridgeTwoHop { from_head: bool },
}

/// Role without direction flags, for exclusion patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleKind {
    HeadOneHop,
    TailOneHop,
    BridgeTwoHop,
}

impl PathRole {
    pub fn kind(self) -> RoleKind {
        match self {
            PathRole::HeadOneHop { .. } => RoleKind::HeadOneHop,
            PathRole::TailOneHop { .. } => RoleKind::TailOneHop,
            PathRole::BridgeTwoHop { .. } => RoleKind::BridgeTwoHop,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidatePath {
    pub path: Path,
    pub role: PathRole,
    /// `S(P)` at the unperturbed query.
    pub score: f64,
    /// Plausibility of each hop.
    pub hop_plausibility: Vec<f64>,
}

/// Mean over hops of `-ln(1 - f)`.
pub fn path_score(store: &EmbeddingStore, path: &Path) -> Result<f64> {
    let mut sum = 0.0;
    for hop in path.hops() {
        sum += hop_score(store.plausibility(hop.head, hop.relation, hop.tail)?);
    }
    Ok(sum / path.len() as f64)
}

/// Descending score, then ascending path.
pub(crate) fn rank_cmp(a_score: f64, a: &Path, b_score: f64, b: &Path) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a.cmp(b))
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Group {
    One(RelationId),
    Two(RelationId, RelationId),
}

fn group_of(path: &Path) -> Group {
    match path.relations[..] {
        [r] => Group::One(r),
        [r1, r2] => Group::Two(r1, r2),
        _ => unreachable!("paths have one or two hops"),
    }
}

/// One-hop neighbours of `anchor`: KGE top-`fanout` in both directions for
/// every relation, plus the observed edges of `anchor`. Self loops are
/// skipped. Returned in a deterministic order with duplicates removed.
fn one_hop_candidates(
    store: &EmbeddingStore,
    graph: &KnowledgeGraph,
    anchor: EntityId,
    fanout: usize,
) -> Result<Vec<Path>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |p: Path, out: &mut Vec<Path>| {
        if p.first() != p.last() && seen.insert(p.clone()) {
            out.push(p);
        }
    };
    for r in 0..store.num_relations() as u32 {
        let r = RelationId(r);
        for (e, _) in store.top_k_tails(anchor, r, fanout)? {
            push(Path::one_hop(anchor, r, e), &mut out);
        }
        for (e, _) in store.top_k_heads(r, anchor, fanout)? {
            push(Path::one_hop(e, r, anchor), &mut out);
        }
    }
    let observed: Vec<Path> = graph
        .outgoing(anchor)
        .chain(graph.incoming(anchor))
        .map(|t| Path::one_hop(t.head, t.relation, t.tail))
        .collect();
    for p in observed {
        push(p, &mut out);
    }
    Ok(out)
}

/// Candidate explanation paths for `query`, scored and truncated to the top
/// `m` per relation group (one-hop: relation; two-hop: ordered relation
/// pair). Exclusions from `spec` and the query itself are removed before
/// truncation. Sorted by score descending, then path.
pub fn select_paths(
    store: &EmbeddingStore,
    graph: &KnowledgeGraph,
    query: &Triple,
    config: &PerturbationConfig,
    spec: &FeatureSpec,
) -> Result<Vec<CandidatePath>> {
    store.check_triple(query)?;
    let (h, t) = (query.head, query.tail);
    let query_path = Path::one_hop(h, query.relation, t);
    let excluded = |p: &Path, role: PathRole| *p == query_path || spec.excludes(query, p, role);

    let mut pool: Vec<CandidatePath> = Vec::new();
    let mut seen: HashSet<Path> = HashSet::new();
    let mut intermediates: BTreeSet<EntityId> = BTreeSet::new();
    for (anchor, is_head) in [(h, true), (t, false)] {
        for p in one_hop_candidates(store, graph, anchor, config.candidate_fanout)? {
            let other = if p.first() == anchor { p.last() } else { p.first() };
            if other != h && other != t {
                intermediates.insert(other);
            }
            let outgoing = p.first() == anchor;
            let role = if is_head { PathRole::HeadOneHop { outgoing } } else { PathRole::TailOneHop { outgoing } };
            if excluded(&p, role) || seen.contains(&p) {
                continue;
            }
            let f = store.plausibility(p.first(), p.relations[0], p.last())?;
            seen.insert(p.clone());
            pool.push(CandidatePath { path: p, role, score: hop_score(f), hop_plausibility: vec![f] });
        }
    }

    // Bridges: hop tables per intermediate, then every relation pair.
    let nr = store.num_relations();
    let mut bridges: Vec<(f64, [EntityId; 3], [RelationId; 2])> = Vec::new();
    let mut first_f = vec![0.0; nr];
    let mut second_f = vec![0.0; nr];
    for &x in &intermediates {
        for (from_head, start, end) in [(true, h, t), (false, t, h)] {
            for r in 0..nr {
                let rid = RelationId(r as u32);
                first_f[r] = store.plausibility(start, rid, x)?;
                second_f[r] = store.plausibility(x, rid, end)?;
            }
            for r1 in 0..nr {
                let a = hop_score(first_f[r1]);
                for r2 in 0..nr {
                    let s = (a + hop_score(second_f[r2])) / 2.0;
                    let rels = [RelationId(r1 as u32), RelationId(r2 as u32)];
                    let path = Path::two_hop(start, rels[0], x, rels[1], end);
                    if spec.is_empty() || !excluded(&path, PathRole::BridgeTwoHop { from_head }) {
                        bridges.push((s, [start, x, end], rels));
                    }
                }
            }
        }
    }

    let m = config.per_group;
    let mut by_group: BTreeMap<Group, Vec<CandidatePath>> = BTreeMap::new();
    for c in pool {
        by_group.entry(group_of(&c.path)).or_default().push(c);
    }
    // Bridges stay compact until truncation: group, score desc, entities.
    bridges.sort_by(|a, b| a.2.cmp(&b.2).then_with(|| b.0.total_cmp(&a.0)).then_with(|| a.1.cmp(&b.1)));
    bridges.dedup_by(|a, b| a.1 == b.1 && a.2 == b.2);
    let mut bridge_paths: Vec<CandidatePath> = Vec::new();
    for group in bridges.chunk_by(|a, b| a.2 == b.2) {
        for &(score, ents, rels) in group.iter().take(m) {
            let hop_plausibility =
                vec![store.plausibility(ents[0], rels[0], ents[1])?, store.plausibility(ents[1], rels[1], ents[2])?];
            bridge_paths.push(CandidatePath {
                path: Path::two_hop(ents[0], rels[0], ents[1], rels[1], ents[2]),
                role: PathRole::BridgeTwoHop { from_head: ents[0] == h },
                score,
                hop_plausibility,
            });
        }
    }

    let mut out: Vec<CandidatePath> = Vec::new();
    for (_, mut group) in by_group {
        group.sort_by(|a, b| rank_cmp(a.score, &a.path, b.score, &b.path));
        group.truncate(m);
        out.extend(group);
    }
    out.extend(bridge_paths);
    out.sort_by(|a, b| rank_cmp(a.score, &a.path, b.score, &b.path));
    Ok(out)
}
