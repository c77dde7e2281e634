//! The Parents benchmark: reference explanation paths for `(c, parent, p)`
//! queries with confidence 1 (deterministic) or 0.5 (supportive).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::explain::Path;
use crate::kg::{DatasetSplit, EntityId, FamilyRelations, KnowledgeGraph, RelationId, SplitTag, Triple, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    /// `{p, child, c}`
    QueryInverse,
    /// `{c, sibling, s, parent, p}`
    SiblingParent,
    /// `{p, child, s}`
    ParentChildSibling,
    /// `{c, sibling, s}`
    Sibling,
    /// `{c, parent, p2, spouse, p}`
    CoParentSpouse,
    /// `{c, parent, p2}`
    CoParent,
    /// `{p, spouse, p2}`
    Spouse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetRelevance {
    #[serde(rename = "fb13+fb14")]
    Both,
    #[serde(rename = "fb14")]
    Fb14Only,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::QueryInverse,
        Category::SiblingParent,
        Category::ParentChildSibling,
        Category::Sibling,
        Category::CoParentSpouse,
        Category::CoParent,
        Category::Spouse,
    ];

    pub fn confidence(self) -> f64 {
        match self {
            Category::QueryInverse | Category::SiblingParent | Category::ParentChildSibling | Category::Sibling => 1.0,
            Category::CoParentSpouse | Category::CoParent | Category::Spouse => 0.5,
        }
    }

    pub fn dataset(self) -> DatasetRelevance {
        match self {
            Category::SiblingParent | Category::Sibling => DatasetRelevance::Fb14Only,
            _ => DatasetRelevance::Both,
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            Category::QueryInverse => "{p, child, c}",
            Category::SiblingParent => "{c, sibling, s, parent, p}",
            Category::ParentChildSibling => "{p, child, s}",
            Category::Sibling => "{c, sibling, s}",
            Category::CoParentSpouse => "{c, parent, p2, spouse, p}",
            Category::CoParent => "{c, parent, p2}",
            Category::Spouse => "{p, spouse, p2}",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub query: Triple,
    pub path: Path,
    pub category: Category,
    pub confidence: f64,
    pub dataset: DatasetRelevance,
    /// Split membership of each hop.
    pub split_tags: Vec<SplitTag>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub include_query_inverse: bool,
    pub entries: usize,
    /// Queries with at least one entry.
    pub queries: usize,
    /// Queries with at least one entry other than the query inverse.
    pub queries_without_inverse_only: usize,
    pub category_counts: BTreeMap<Category, usize>,
    /// Entries per query -> number of queries.
    pub entries_per_query_histogram: BTreeMap<usize, usize>,
    /// Sibling count -> number of queries.
    pub sibling_histogram: BTreeMap<usize, usize>,
}

/// Entries grouped by query with an orientation-normalized relevance index.
#[derive(Clone, Debug)]
pub struct Benchmark {
    family: FamilyRelations,
    include_query_inverse: bool,
    entries: Vec<BenchmarkEntry>,
    by_query: BTreeMap<Triple, Vec<usize>>,
    siblings: BTreeMap<Triple, usize>,
    relevance: HashMap<(Triple, Path), f64>,
}

/// The path read backwards with every relation replaced by its inverse, or
/// `None` if some relation has no known inverse.
pub fn reverse_path(path: &Path, family: &FamilyRelations) -> Option<Path> {
    let relations = path.relations.iter().rev().map(|&r| family.inverse(r)).collect::<Option<Vec<RelationId>>>()?;
    Some(Path { entities: path.entities.iter().rev().copied().collect(), relations })
}

/// The smaller of a path and its reversal.
pub fn canonical_path(path: &Path, family: &FamilyRelations) -> Path {
    match reverse_path(path, family) {
        Some(rev) if rev < *path => rev,
        _ => path.clone(),
    }
}

/// Siblings of `c`: entities with exactly the same two parents, plus
/// explicit sibling edges in either direction.
pub fn siblings_of(graph: &KnowledgeGraph, family: &FamilyRelations, c: EntityId) -> BTreeSet<EntityId> {
    let mut out = BTreeSet::new();
    let parents = family.parents_of(graph, c);
    if parents.len() == 2 {
        let p = *parents.iter().next().expect("two parents");
        let candidates: BTreeSet<EntityId> = graph
            .incoming(p)
            .filter(|t| t.relation == family.parent)
            .map(|t| t.head)
            .chain(
                family
                    .child
                    .into_iter()
                    .flat_map(|ch| graph.outgoing(p).filter(move |t| t.relation == ch).map(|t| t.tail)),
            )
            .collect();
        for s in candidates {
            if s != c && family.parents_of(graph, s) == parents {
                out.insert(s);
            }
        }
    }
    if let Some(sib) = family.sibling {
        for t in graph.outgoing(c).filter(|t| t.relation == sib) {
            out.insert(t.tail);
        }
        for t in graph.incoming(c).filter(|t| t.relation == sib) {
            out.insert(t.head);
        }
    }
    out.remove(&c);
    out
}

fn path_present(graph: &KnowledgeGraph, path: &Path) -> bool {
    path.hops().all(|h| graph.contains(&h))
}

/// Build the benchmark over all three parts of `split`.
pub fn build_benchmark(split: &DatasetSplit, vocab: &Vocabulary, include_query_inverse: bool) -> Result<Benchmark> {
    let family = FamilyRelations::resolve(vocab)?;
    let graph = split.combined();
    let membership = split.membership();
    if !graph.triples().iter().any(|t| t.relation == family.parent) {
        return Err(Error::Input("the parent relation has no triples".into()));
    }

    let mut bench = Benchmark {
        family,
        include_query_inverse,
        entries: Vec::new(),
        by_query: BTreeMap::new(),
        siblings: BTreeMap::new(),
        relevance: HashMap::new(),
    };
    let queries: Vec<Triple> = graph.triples().iter().filter(|t| t.relation == family.parent).copied().collect();

    for q in queries {
        let (c, p) = (q.head, q.tail);
        let co_parents: Vec<EntityId> = family.parents_of(&graph, c).into_iter().filter(|&x| x != p).collect();
        let sibs = siblings_of(&graph, &family, c);
        let mut instances: Vec<(Category, Path)> = Vec::new();
        if include_query_inverse {
            if let Some(child) = family.child {
                instances.push((Category::QueryInverse, Path::one_hop(p, child, c)));
            }
        }
        for &s in &sibs {
            if let Some(sib) = family.sibling {
                instances.push((Category::SiblingParent, Path::two_hop(c, sib, s, family.parent, p)));
            }
            if let Some(child) = family.child {
                instances.push((Category::ParentChildSibling, Path::one_hop(p, child, s)));
            }
            if let Some(sib) = family.sibling {
                instances.push((Category::Sibling, Path::one_hop(c, sib, s)));
            }
        }
        for &p2 in &co_parents {
            if let Some(spouse) = family.spouse {
                instances.push((Category::CoParentSpouse, Path::two_hop(c, family.parent, p2, spouse, p)));
            }
            instances.push((Category::CoParent, Path::one_hop(c, family.parent, p2)));
            if let Some(spouse) = family.spouse {
                instances.push((Category::Spouse, Path::one_hop(p, spouse, p2)));
            }
        }

        let mut idx = Vec::new();
        for (category, path) in instances {
            let mut variants = vec![path.clone()];
            if let Some(rev) = reverse_path(&path, &family) {
                if rev != path {
                    variants.push(rev);
                }
            }
            for v in variants {
                if !path_present(&graph, &v) {
                    continue;
                }
                let key = (q, canonical_path(&v, &family));
                let conf = category.confidence();
                let slot = bench.relevance.entry(key).or_insert(0.0);
                *slot = slot.max(conf);
                idx.push(bench.entries.len());
                bench.entries.push(BenchmarkEntry {
                    query: q,
                    split_tags: v.hops().map(|h| membership[&h]).collect(),
                    path: v,
                    category,
                    confidence: conf,
                    dataset: category.dataset(),
                });
            }
        }
        if !idx.is_empty() {
            bench.by_query.insert(q, idx);
            bench.siblings.insert(q, sibs.len());
        }
    }
    Ok(bench)
}

impl Benchmark {
    pub fn family(&self) -> &FamilyRelations {
        &self.family
    }

    pub fn include_query_inverse(&self) -> bool {
        self.include_query_inverse
    }

    pub fn entries(&self) -> &[BenchmarkEntry] {
        &self.entries
    }

    /// Queries with at least one entry, in triple order.
    pub fn queries(&self) -> impl Iterator<Item = &Triple> + '_ {
        self.by_query.keys()
    }

    pub fn num_queries(&self) -> usize {
        self.by_query.len()
    }

    pub fn entries_for(&self, query: &Triple) -> impl Iterator<Item = &BenchmarkEntry> + '_ {
        self.by_query.get(query).into_iter().flatten().map(move |&i| &self.entries[i])
    }

    pub fn sibling_count(&self, query: &Triple) -> usize {
        self.siblings.get(query).copied().unwrap_or(0)
    }

    /// Confidence of `path` for `query`, matching either reading direction.
    pub fn relevance_of(&self, query: &Triple, path: &Path) -> f64 {
        self.relevance.get(&(*query, canonical_path(path, &self.family))).copied().unwrap_or(0.0)
    }

    /// Canonical key of a path, for de-duplicating rankings.
    pub fn canonical(&self, path: &Path) -> Path {
        canonical_path(path, &self.family)
    }

    /// Confidences of all entries for `query`, descending.
    pub fn ideal_relevances(&self, query: &Triple) -> Vec<f64> {
        let mut rels: Vec<f64> = self.entries_for(query).map(|e| e.confidence).collect();
        rels.sort_by(|a, b| b.total_cmp(a));
        rels
    }

    pub fn summary(&self) -> BenchmarkSummary {
        let mut category_counts = BTreeMap::new();
        for e in &self.entries {
            *category_counts.entry(e.category).or_insert(0) += 1;
        }
        let mut hist = BTreeMap::new();
        let mut sib_hist = BTreeMap::new();
        let mut without_inverse_only = 0;
        for (q, idx) in &self.by_query {
            *hist.entry(idx.len()).or_insert(0) += 1;
            *sib_hist.entry(self.sibling_count(q)).or_insert(0) += 1;
            if idx.iter().any(|&i| self.entries[i].category != Category::QueryInverse) {
                without_inverse_only += 1;
            }
        }
        BenchmarkSummary {
            include_query_inverse: self.include_query_inverse,
            entries: self.entries.len(),
            queries: self.by_query.len(),
            queries_without_inverse_only: without_inverse_only,
            category_counts,
            entries_per_query_histogram: hist,
            sibling_histogram: sib_hist,
        }
    }

    pub fn write_jsonl(&self, vocab: &Vocabulary, mut out: impl Write) -> Result<()> {
        for e in &self.entries {
            let line = json!({
                "query": vocab.triple_names(&e.query),
                "path": e.path.names(vocab),
                "category": e.category,
                "template": e.category.template(),
                "confidence": e.confidence,
                "dataset": e.dataset,
                "split_tags": e.split_tags,
            });
            writeln!(out, "{line}").map_err(|err| Error::io("<benchmark>", err))?;
        }
        Ok(())
    }

    pub fn write_histogram_csv(&self, mut out: impl Write) -> Result<()> {
        let s = self.summary();
        let mut text = String::from("entries_per_query,queries\n");
        for (k, v) in &s.entries_per_query_histogram {
            text.push_str(&format!("{k},{v}\n"));
        }
        out.write_all(text.as_bytes()).map_err(|err| Error::io("<histogram>", err))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fx {
        vocab: Vocabulary,
        split: DatasetSplit,
    }

    fn fixture(named: &[(&str, &str, &str)]) -> Fx {
        let mut vocab = Vocabulary::new();
        for r in ["parent", "child", "spouse", "sibling"] {
            vocab.intern_relation(r);
        }
        let triples: Vec<Triple> = named
            .iter()
            .map(|(h, r, t)| Triple::new(vocab.intern_entity(h), vocab.intern_relation(r), vocab.intern_entity(t)))
            .collect();
        let split = DatasetSplit {
            train: KnowledgeGraph::new(vocab.num_entities(), vocab.num_relations(), triples),
            valid: vec![],
            test: vec![],
            seed: 0,
        };
        Fx { vocab, split }
    }

    fn mozart() -> Fx {
        fixture(&[
            ("maria", "parent", "leopold"),
            ("maria", "parent", "anna"),
            ("wolfgang", "parent", "leopold"),
            ("wolfgang", "parent", "anna"),
            ("leopold", "child", "maria"),
            ("leopold", "child", "wolfgang"),
            ("anna", "child", "maria"),
            ("anna", "child", "wolfgang"),
            ("anna", "spouse", "leopold"),
            ("leopold", "spouse", "anna"),
            ("maria", "sibling", "wolfgang"),
            ("wolfgang", "sibling", "maria"),
        ])
    }

    fn q(fx: &Fx, c: &str, p: &str) -> Triple {
        fx.vocab.triple(c, "parent", p).unwrap()
    }

    #[test]
    fn mozart_has_every_category() {
        let fx = mozart();
        let b = build_benchmark(&fx.split, &fx.vocab, true).unwrap();
        let query = q(&fx, "maria", "leopold");
        let cats: BTreeSet<Category> = b.entries_for(&query).map(|e| e.category).collect();
        assert_eq!(cats, Category::ALL.into_iter().collect());
        assert_eq!(b.sibling_count(&query), 1);
        let two_hop = Path::two_hop(
            fx.vocab.entity("maria").unwrap(),
            fx.vocab.relation("parent").unwrap(),
            fx.vocab.entity("anna").unwrap(),
            fx.vocab.relation("spouse").unwrap(),
            fx.vocab.entity("leopold").unwrap(),
        );
        assert_eq!(b.relevance_of(&query, &two_hop), 0.5);
    }

    #[test]
    fn excluding_inverse_drops_its_entries() {
        let fx = mozart();
        let b = build_benchmark(&fx.split, &fx.vocab, false).unwrap();
        assert!(b.entries().iter().all(|e| e.category != Category::QueryInverse));
        let query = q(&fx, "maria", "leopold");
        let inv = Path::one_hop(
            fx.vocab.entity("leopold").unwrap(),
            fx.vocab.relation("child").unwrap(),
            fx.vocab.entity("maria").unwrap(),
        );
        assert_eq!(b.relevance_of(&query, &inv), 0.0);
    }

    #[test]
    fn lone_child_without_coparent() {
        let fx = fixture(&[("c", "parent", "p"), ("p", "child", "c")]);
        let with = build_benchmark(&fx.split, &fx.vocab, true).unwrap();
        let query = q(&fx, "c", "p");
        let cats: Vec<Category> = with.entries_for(&query).map(|e| e.category).collect();
        assert!(cats.iter().all(|&c| c == Category::QueryInverse));
        assert!(!cats.is_empty());
        let without = build_benchmark(&fx.split, &fx.vocab, false).unwrap();
        assert_eq!(without.num_queries(), 0);
        let s = with.summary();
        assert_eq!((s.queries, s.queries_without_inverse_only), (1, 0));
    }

    #[test]
    fn relevance_matches_brute_force_both_orientations() {
        let fx = mozart();
        let b = build_benchmark(&fx.split, &fx.vocab, true).unwrap();
        let query = q(&fx, "maria", "leopold");
        let ents: Vec<EntityId> =
            ["maria", "leopold", "anna", "wolfgang"].iter().map(|n| fx.vocab.entity(n).unwrap()).collect();
        for &a in &ents {
            for &c in &ents {
                for r in 0..4 {
                    let path = Path::one_hop(a, RelationId(r), c);
                    let brute = b
                        .entries_for(&query)
                        .filter(|e| e.path == path || reverse_path(&e.path, b.family()).as_ref() == Some(&path))
                        .map(|e| e.confidence)
                        .fold(0.0, f64::max);
                    assert_eq!(b.relevance_of(&query, &path), brute, "{path:?}");
                }
            }
        }
        // flipped spouse edge
        let flipped = Path::one_hop(ents[2], fx.vocab.relation("spouse").unwrap(), ents[1]);
        assert_eq!(b.relevance_of(&query, &flipped), 0.5);
    }

    #[test]
    fn emitted_edges_exist_and_confidences_are_valid() {
        let fx = mozart();
        let b = build_benchmark(&fx.split, &fx.vocab, true).unwrap();
        let g = fx.split.combined();
        for e in b.entries() {
            assert!(e.path.hops().all(|h| g.contains(&h)));
            assert!(e.confidence == 1.0 || e.confidence == 0.5);
            assert_eq!(e.confidence, e.category.confidence());
        }
    }

    #[test]
    fn adding_a_sibling_adds_only_sibling_entries() {
        let base = mozart();
        let mut named = vec![
            ("maria", "parent", "leopold"),
            ("maria", "parent", "anna"),
            ("wolfgang", "parent", "leopold"),
            ("wolfgang", "parent", "anna"),
            ("leopold", "child", "maria"),
            ("leopold", "child", "wolfgang"),
            ("anna", "child", "maria"),
            ("anna", "child", "wolfgang"),
            ("anna", "spouse", "leopold"),
            ("leopold", "spouse", "anna"),
            ("maria", "sibling", "wolfgang"),
            ("wolfgang", "sibling", "maria"),
        ];
        named.extend([
            ("nannerl", "parent", "leopold"),
            ("nannerl", "parent", "anna"),
            ("leopold", "child", "nannerl"),
            ("anna", "child", "nannerl"),
            ("maria", "sibling", "nannerl"),
            ("nannerl", "sibling", "maria"),
        ]);
        let grown = fixture(&named);
        let b0 = build_benchmark(&base.split, &base.vocab, true).unwrap();
        let b1 = build_benchmark(&grown.split, &grown.vocab, true).unwrap();
        let count = |b: &Benchmark, fx: &Fx| -> BTreeMap<Category, usize> {
            let mut m = BTreeMap::new();
            for e in b.entries_for(&q(fx, "maria", "leopold")) {
                *m.entry(e.category).or_insert(0) += 1;
            }
            m
        };
        let (c0, c1) = (count(&b0, &base), count(&b1, &grown));
        for cat in Category::ALL {
            let (a, b) = (c0.get(&cat).copied().unwrap_or(0), c1.get(&cat).copied().unwrap_or(0));
            match cat {
                Category::SiblingParent | Category::ParentChildSibling | Category::Sibling => {
                    assert_eq!(b, 2 * a, "{cat:?}")
                }
                _ => assert_eq!(a, b, "{cat:?}"),
            }
        }
    }

    #[test]
    fn ideal_relevances_cover_both_directions() {
        let fx = mozart();
        let b = build_benchmark(&fx.split, &fx.vocab, true).unwrap();
        let ideal = b.ideal_relevances(&q(&fx, "maria", "leopold"));
        // 7 categories, each present in both reading directions
        assert_eq!(ideal, vec![1.0; 8].into_iter().chain(vec![0.5; 6]).collect::<Vec<_>>());
    }
}
