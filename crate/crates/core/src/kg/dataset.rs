use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::family::{build_fb14, SiblingReport};
use super::io::{load_triples, parse_triples, write_triples};
use super::split::{filter_to_largest_component, random_split, ComponentStats, DatasetSplit, DEFAULT_PROPORTIONS};
use super::types::{assign_entity_types, type_histogram, EntityType};
use super::{EntityId, KnowledgeGraph, Triple, Vocabulary};
use crate::error::{Error, Result};

pub const DATASET_FORMAT: &str = "linklogic-dataset/1";

/// A prepared dataset: name tables, the split, and entity types.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub vocab: Vocabulary,
    pub split: DatasetSplit,
    pub entity_types: Vec<EntityType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub seed: u64,
    pub fb14: bool,
    pub raw_files: Vec<String>,
    pub raw_triples: usize,
    pub duplicates_dropped: usize,
    pub pre_filter_counts: [usize; 3],
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub num_entities: usize,
    pub num_relations: usize,
    pub components: ComponentStats,
    pub siblings: Option<SiblingReport>,
    pub entity_type_histogram: BTreeMap<String, usize>,
    pub vocabulary_sha256: String,
}

#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub proportions: [f64; 3],
    pub seed: u64,
    pub fb14: bool,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self { proportions: DEFAULT_PROPORTIONS, seed: 0, fb14: false }
    }
}

impl Dataset {
    /// Wrap an existing split, assigning entity types from the combined graph.
    pub fn from_split(vocab: Vocabulary, split: DatasetSplit) -> Self {
        let entity_types = assign_entity_types(&split.combined(), &vocab);
        Self { vocab, split, entity_types }
    }

    /// Everything goes to train; valid and test are empty.
    pub fn unsplit(vocab: Vocabulary, triples: Vec<Triple>) -> Self {
        let train = KnowledgeGraph::new(vocab.num_entities(), vocab.num_relations(), triples);
        Self::from_split(vocab, DatasetSplit { train, valid: Vec::new(), test: Vec::new(), seed: 0 })
    }

    pub fn combined(&self) -> KnowledgeGraph {
        self.split.combined()
    }

    pub fn entity_type(&self, e: EntityId) -> EntityType {
        self.entity_types.get(e.index()).copied().unwrap_or(EntityType::Unknown)
    }

    /// Write name tables, split TSVs and the manifest into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut ents = String::new();
        for (i, name) in self.vocab.entities.names().iter().enumerate() {
            let ty = self.entity_type(EntityId(i as u32));
            ents.push_str(&format!("{i}\t{name}\t{}\n", ty.as_str()));
        }
        write_file(&dir.join("entities.tsv"), &ents)?;
        let mut rels = String::new();
        for (i, name) in self.vocab.relations.names().iter().enumerate() {
            rels.push_str(&format!("{i}\t{name}\n"));
        }
        write_file(&dir.join("relations.tsv"), &rels)?;
        write_triples(dir.join("train.tsv"), self.split.train.triples(), &self.vocab)?;
        write_triples(dir.join("valid.tsv"), &self.split.valid, &self.vocab)?;
        write_triples(dir.join("test.tsv"), &self.split.test, &self.vocab)?;
        let json = serde_json::to_string_pretty(manifest)?;
        write_file(&dir.join("manifest.json"), &(json + "\n"))
    }

    /// Load a directory written by [`Dataset::write`].
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut vocab = Vocabulary::new();
        let mut types = Vec::new();
        for (lineno, fields) in read_table(&dir.join("entities.tsv"), 3)? {
            let id = vocab.entities.intern(&fields[1]);
            check_id(&dir.join("entities.tsv"), lineno, &fields[0], id)?;
            let ty = EntityType::parse(&fields[2]).ok_or_else(|| Error::Parse {
                source_name: dir.join("entities.tsv").display().to_string(),
                line: lineno,
                message: format!("unknown entity type `{}`", fields[2]),
            })?;
            types.push(ty);
        }
        for (lineno, fields) in read_table(&dir.join("relations.tsv"), 2)? {
            let id = vocab.relations.intern(&fields[1]);
            check_id(&dir.join("relations.tsv"), lineno, &fields[0], id)?;
        }
        let load = |name: &str, vocab: &mut Vocabulary| -> Result<Vec<Triple>> {
            let path = dir.join(name);
            let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            parse_triples(BufReader::new(file), &path.display().to_string(), vocab, false)
        };
        let train = load("train.tsv", &mut vocab)?;
        let mut valid = load("valid.tsv", &mut vocab)?;
        let mut test = load("test.tsv", &mut vocab)?;
        valid.sort_unstable();
        test.sort_unstable();
        let seed = match fs::read_to_string(dir.join("manifest.json")) {
            Ok(s) => serde_json::from_str::<Manifest>(&s)?.seed,
            Err(_) => 0,
        };
        let split = DatasetSplit {
            train: KnowledgeGraph::new(vocab.num_entities(), vocab.num_relations(), train),
            valid,
            test,
            seed,
        };
        Ok(Self { vocab, split, entity_types: types })
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn check_id(path: &Path, lineno: usize, field: &str, id: u32) -> Result<()> {
    if field.parse::<u32>().ok() != Some(id) {
        return Err(Error::Parse {
            source_name: path.display().to_string(),
            line: lineno,
            message: format!("expected id {id}, found `{field}` (ids must be dense and unique)"),
        });
    }
    Ok(())
}

fn read_table(path: &Path, width: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        if fields.len() != width {
            return Err(Error::Parse {
                source_name: path.display().to_string(),
                line: i + 1,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        rows.push((i + 1, fields));
    }
    Ok(rows)
}

/// Triple files in `raw_dir` (`*.tsv` / `*.txt`), sorted by file name.
fn raw_files(raw_dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(raw_dir).map_err(|e| Error::io(raw_dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(raw_dir, e))?;
        let path = entry.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && (ext == "tsv" || ext == "txt") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Input(format!("no triple files (*.tsv, *.txt) found in {}", raw_dir.display())));
    }
    Ok(files)
}

/// Load raw triple files, split, filter to the largest component and
/// optionally append inferred sibling triples.
pub fn prepare_dataset(raw_dir: impl AsRef<Path>, opts: &PrepareOptions) -> Result<(Dataset, Manifest)> {
    let raw_dir = raw_dir.as_ref();
    let files = raw_files(raw_dir)?;
    let mut vocab = Vocabulary::new();
    let mut triples = Vec::new();
    for f in &files {
        triples.extend(load_triples(f, &mut vocab)?);
    }
    let names =
        files.iter().map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()).collect();
    prepare_from_triples(vocab, triples, names, opts)
}

/// Same as [`prepare_dataset`] for triples already in memory.
pub fn prepare_from_triples(
    mut vocab: Vocabulary,
    mut triples: Vec<Triple>,
    raw_files: Vec<String>,
    opts: &PrepareOptions,
) -> Result<(Dataset, Manifest)> {
    let raw_count = triples.len();
    triples.sort_unstable();
    triples.dedup();
    let duplicates = raw_count - triples.len();
    if duplicates > 0 {
        log::info!("dropped {duplicates} duplicate triples");
    }

    let split = random_split(&triples, vocab.num_entities(), vocab.num_relations(), opts.proportions, opts.seed)?;
    let pre_filter_counts = split.counts();
    let (mut split, components) = filter_to_largest_component(&split);
    let mut siblings = None;
    if opts.fb14 {
        let (augmented, report) = build_fb14(&split, &mut vocab, opts.seed)?;
        log::info!("inferred {} sibling triples", report.sibling_triples);
        split = augmented;
        siblings = Some(report);
    }
    let (vocab, split) = compact_entities(&vocab, &split);
    let dataset = Dataset::from_split(vocab, split);
    let manifest = Manifest {
        format: DATASET_FORMAT.to_owned(),
        seed: opts.seed,
        fb14: opts.fb14,
        raw_files,
        raw_triples: raw_count,
        duplicates_dropped: duplicates,
        pre_filter_counts,
        train: dataset.split.train.len(),
        valid: dataset.split.valid.len(),
        test: dataset.split.test.len(),
        num_entities: dataset.vocab.num_entities(),
        num_relations: dataset.vocab.num_relations(),
        components,
        siblings,
        entity_type_histogram: type_histogram(&dataset.entity_types),
        vocabulary_sha256: dataset.vocab.fingerprint(),
    };
    Ok((dataset, manifest))
}

/// Renumber entities so only those present in the split keep an id, in
/// their original relative order. Relations are kept as registered.
fn compact_entities(vocab: &Vocabulary, split: &DatasetSplit) -> (Vocabulary, DatasetSplit) {
    let mut present = vec![false; vocab.num_entities()];
    for t in split.train.triples().iter().chain(&split.valid).chain(&split.test) {
        present[t.head.index()] = true;
        present[t.tail.index()] = true;
    }
    let mut out = Vocabulary::new();
    let mut remap = vec![None; vocab.num_entities()];
    for (i, keep) in present.iter().enumerate() {
        if *keep {
            remap[i] = Some(out.intern_entity(vocab.entity_name(EntityId(i as u32))));
        }
    }
    for name in vocab.relations.names() {
        out.intern_relation(name);
    }
    let map = |t: &Triple| {
        Triple::new(remap[t.head.index()].expect("present"), t.relation, remap[t.tail.index()].expect("present"))
    };
    let mut valid: Vec<Triple> = split.valid.iter().map(map).collect();
    let mut test: Vec<Triple> = split.test.iter().map(map).collect();
    valid.sort_unstable();
    test.sort_unstable();
    let train = KnowledgeGraph::new(out.num_entities(), out.num_relations(), split.train.triples().iter().map(map));
    (out, DatasetSplit { train, valid, test, seed: split.seed })
}
