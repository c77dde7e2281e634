use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EntityId, KnowledgeGraph, Triple};
use crate::error::{Error, Result};

pub const DEFAULT_PROPORTIONS: [f64; 3] = [0.8, 0.1, 0.1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Valid,
    Test,
}

/// Train graph plus held-out valid/test triples.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: KnowledgeGraph,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub seed: u64,
}

impl DatasetSplit {
    /// All triples from the three parts as one graph.
    pub fn combined(&self) -> KnowledgeGraph {
        KnowledgeGraph::new(
            self.train.num_entities(),
            self.train.num_relations(),
            self.train.triples().iter().chain(&self.valid).chain(&self.test).copied(),
        )
    }

    /// Which part each triple belongs to. Train wins if a triple occurs in
    /// more than one part.
    pub fn membership(&self) -> HashMap<Triple, SplitTag> {
        let mut tags = HashMap::new();
        for t in &self.test {
            tags.insert(*t, SplitTag::Test);
        }
        for t in &self.valid {
            tags.insert(*t, SplitTag::Valid);
        }
        for t in self.train.triples() {
            tags.insert(*t, SplitTag::Train);
        }
        tags
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.train.len(), self.valid.len(), self.test.len()]
    }
}

/// Split `n` items by largest-remainder rounding of `n * p_i`. Ties on the
/// fractional part go to the earlier part.
pub fn largest_remainder(n: usize, proportions: [f64; 3]) -> [usize; 3] {
    let quotas: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, q) in sizes.iter_mut().zip(&quotas) {
        *s = q.floor() as usize;
    }
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

fn check_proportions(p: [f64; 3]) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Config(format!("invalid split proportions {p:?}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split proportions must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Shuffle `items` with a seeded ChaCha8 stream and cut it into three parts.
pub(crate) fn shuffle_split<T: Clone>(items: &[T], proportions: [f64; 3], seed: u64) -> Result<[Vec<T>; 3]> {
    check_proportions(proportions)?;
    let mut shuffled = items.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let [a, b, _] = largest_remainder(shuffled.len(), proportions);
    let test = shuffled.split_off(a + b);
    let valid = shuffled.split_off(a);
    Ok([shuffled, valid, test])
}

/// Seeded random split into train/valid/test. The input order matters, so
/// callers should pass triples in a canonical (sorted) order.
pub fn random_split(
    triples: &[Triple],
    num_entities: usize,
    num_relations: usize,
    proportions: [f64; 3],
    seed: u64,
) -> Result<DatasetSplit> {
    let [train, mut valid, mut test] = shuffle_split(triples, proportions, seed)?;
    valid.sort_unstable();
    test.sort_unstable();
    Ok(DatasetSplit { train: KnowledgeGraph::new(num_entities, num_relations, train), valid, test, seed })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub components: usize,
    pub largest_component_entities: usize,
    pub largest_component_triples: usize,
    pub dropped_train: usize,
    pub dropped_valid: usize,
    pub dropped_test: usize,
}

struct DisjointSet {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            std::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
    }
}

/// Keep only the largest weakly connected component of the train graph
/// (largest by triple count; ties go to the component holding the smallest
/// entity id) and drop valid/test triples that touch removed entities.
pub fn filter_to_largest_component(split: &DatasetSplit) -> (DatasetSplit, ComponentStats) {
    let train = &split.train;
    if train.is_empty() {
        return (
            DatasetSplit { train: train.clone(), valid: Vec::new(), test: Vec::new(), seed: split.seed },
            ComponentStats { dropped_valid: split.valid.len(), dropped_test: split.test.len(), ..Default::default() },
        );
    }

    let mut dsu = DisjointSet::new(train.num_entities());
    for t in train.triples() {
        dsu.union(t.head.0, t.tail.0);
    }
    // root -> (triple count, entities)
    let mut comp: HashMap<u32, (usize, BTreeSet<EntityId>)> = HashMap::new();
    for t in train.triples() {
        let root = dsu.find(t.head.0);
        let entry = comp.entry(root).or_default();
        entry.0 += 1;
        entry.1.insert(t.head);
        entry.1.insert(t.tail);
    }
    let (&best_root, (best_triples, best_entities)) = comp
        .iter()
        .max_by(|(_, (ta, ea)), (_, (tb, eb))| ta.cmp(tb).then_with(|| eb.first().cmp(&ea.first())))
        .expect("non-empty train graph has a component");
    let keep = |e: EntityId, dsu: &mut DisjointSet| dsu.find(e.0) == best_root;

    let kept_train: Vec<Triple> = train.triples().iter().filter(|t| keep(t.head, &mut dsu)).copied().collect();
    let in_train = |e: EntityId| best_entities.contains(&e);
    let valid: Vec<Triple> = split.valid.iter().filter(|t| in_train(t.head) && in_train(t.tail)).copied().collect();
    let test: Vec<Triple> = split.test.iter().filter(|t| in_train(t.head) && in_train(t.tail)).copied().collect();

    let stats = ComponentStats {
        components: comp.len(),
        largest_component_entities: best_entities.len(),
        largest_component_triples: *best_triples,
        dropped_train: train.len() - kept_train.len(),
        dropped_valid: split.valid.len() - valid.len(),
        dropped_test: split.test.len() - test.len(),
    };
    (
        DatasetSplit {
            train: KnowledgeGraph::new(train.num_entities(), train.num_relations(), kept_train),
            valid,
            test,
            seed: split.seed,
        },
        stats,
    )
}
