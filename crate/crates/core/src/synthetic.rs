//! Seeded synthetic family corpus used by tests and the desk-scale sweeps.
//!
//! Each family has two spouses and a cycling number of children. Every
//! person also gets a gender, a profession and a location, the latter
//! usually shared by the whole family.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{infer_siblings, KnowledgeGraph, Triple, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub families: usize,
    /// Family `f` has `min_children + f % (max_children - min_children + 1)` children.
    pub min_children: usize,
    pub max_children: usize,
    pub locations: usize,
    pub professions: usize,
    /// Probability that a person lives at the family home location.
    pub home_location_prob: f64,
    /// Add `sibling` edges between children sharing both parents.
    #[serde(default)]
    pub sibling_edges: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            families: 60,
            min_children: 1,
            max_children: 5,
            locations: 20,
            professions: 12,
            home_location_prob: 0.85,
            sibling_edges: false,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn children_in_family(&self, family: usize) -> usize {
        self.min_children + family % (self.max_children - self.min_children + 1)
    }

    fn validate(&self) -> Result<()> {
        if self.families == 0 || self.locations == 0 || self.professions == 0 {
            return Err(Error::Config("synthetic corpus needs families, locations and professions".into()));
        }
        if self.min_children > self.max_children {
            return Err(Error::Config("min_children exceeds max_children".into()));
        }
        if !(0.0..=1.0).contains(&self.home_location_prob) {
            return Err(Error::Config("home_location_prob must be in [0, 1]".into()));
        }
        Ok(())
    }
}

pub fn child_name(family: usize, i: usize) -> String {
    format!("f{family:03}_child{i}")
}

pub fn parent_names(family: usize) -> [String; 2] {
    [format!("f{family:03}_father"), format!("f{family:03}_mother")]
}

/// Generate the corpus. Triples are returned in generation order; names
/// are interned deterministically.
pub fn family_corpus(config: &SyntheticConfig) -> Result<(Vocabulary, Vec<Triple>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut vocab = Vocabulary::new();
    let parent = vocab.intern_relation("parent");
    let child = vocab.intern_relation("child");
    let spouse = vocab.intern_relation("spouse");
    let gender = vocab.intern_relation("gender");
    let location = vocab.intern_relation("location");
    let profession = vocab.intern_relation("profession");
    let male = vocab.intern_entity("male");
    let female = vocab.intern_entity("female");
    let locations: Vec<_> = (0..config.locations).map(|i| vocab.intern_entity(&format!("location_{i:02}"))).collect();
    let professions: Vec<_> =
        (0..config.professions).map(|i| vocab.intern_entity(&format!("profession_{i:02}"))).collect();

    let mut triples = Vec::new();
    for f in 0..config.families {
        let home = *locations.choose(&mut rng).expect("locations non-empty");
        let [father_name, mother_name] = parent_names(f);
        let father = vocab.intern_entity(&father_name);
        let mother = vocab.intern_entity(&mother_name);
        triples.push(Triple::new(father, spouse, mother));
        triples.push(Triple::new(mother, spouse, father));
        let mut people = vec![(father, male), (mother, female)];
        for i in 0..config.children_in_family(f) {
            let c = vocab.intern_entity(&child_name(f, i));
            for p in [father, mother] {
                triples.push(Triple::new(c, parent, p));
                triples.push(Triple::new(p, child, c));
            }
            let g = if rng.random_bool(0.5) { male } else { female };
            people.push((c, g));
        }
        for (person, g) in people {
            triples.push(Triple::new(person, gender, g));
            let loc = if rng.random_bool(config.home_location_prob) {
                home
            } else {
                *locations.choose(&mut rng).expect("locations non-empty")
            };
            triples.push(Triple::new(person, location, loc));
            let prof = *professions.choose(&mut rng).expect("professions non-empty");
            triples.push(Triple::new(person, profession, prof));
        }
    }
    if config.sibling_edges {
        let sibling = vocab.intern_relation("sibling");
        let graph = KnowledgeGraph::new(vocab.num_entities(), vocab.num_relations(), triples.iter().copied());
        triples.extend(infer_siblings(&graph, parent, sibling));
    }
    Ok((vocab, triples))
}
