//! Binary embedding files.
//!
//! Layout (little endian): magic `LLKE`, format version `u32`, then
//! `|E|`, `|R|`, `d` as `u64`, then entity reals, entity imaginaries,
//! relation reals and relation imaginaries as `f64`, then a CRC32 of
//! everything before it. A JSON sidecar `<path>.json` records the counts,
//! the vocabulary fingerprint and the training config.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EmbeddingStore, TrainingConfig};
use crate::error::{Error, Result};
use crate::kg::Vocabulary;

pub const MAGIC: &[u8; 4] = b"LLKE";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 3 * 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSidecar {
    pub format_version: u32,
    pub num_entities: usize,
    pub num_relations: usize,
    pub dim: usize,
    pub name_table_sha256: Option<String>,
    pub training: Option<TrainingConfig>,
}

impl EmbeddingSidecar {
    pub fn new(store: &EmbeddingStore, vocab: Option<&Vocabulary>, training: Option<&TrainingConfig>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            num_entities: store.num_entities(),
            num_relations: store.num_relations(),
            dim: store.dim(),
            name_table_sha256: vocab.map(Vocabulary::fingerprint),
            training: training.cloned(),
        }
    }

    pub fn path_for(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    pub fn read(path: &Path) -> Result<Option<Self>> {
        let side = Self::path_for(path);
        if !side.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        Ok(Some(serde_json::from_str(&text)?))
    }
}

pub fn save_embeddings(store: &EmbeddingStore, path: &Path, sidecar: &EmbeddingSidecar) -> Result<()> {
    let floats: usize = store.buffers().iter().map(|b| b.len()).sum();
    let mut bytes = Vec::with_capacity(HEADER_LEN + floats * 8 + 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for n in [store.num_entities(), store.num_relations(), store.dim()] {
        bytes.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for buf in store.buffers() {
        for x in buf {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = EmbeddingSidecar::path_for(path);
    fs::write(&side, serde_json::to_string_pretty(sidecar)? + "\n").map_err(|e| Error::io(&side, e))
}

fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

/// Decode an embedding file from memory.
pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingStore> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(Error::Format(format!(
            "embedding file truncated: {} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("not an embedding file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported embedding format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let counts = [read_u64(bytes, 8), read_u64(bytes, 16), read_u64(bytes, 24)];
    let [ne, nr, d] = counts.map(|c| usize::try_from(c).unwrap_or(usize::MAX));
    let floats = ne.checked_add(nr).and_then(|n| n.checked_mul(d)).and_then(|n| n.checked_mul(2));
    let expected = floats.and_then(|f| f.checked_mul(8)).and_then(|b| b.checked_add(HEADER_LEN + 4));
    match expected {
        Some(len) if len == bytes.len() => {}
        Some(len) if len > bytes.len() => {
            return Err(Error::Format(format!("embedding file truncated: expected {len} bytes, found {}", bytes.len())))
        }
        Some(len) => {
            return Err(Error::Format(format!(
                "embedding file has trailing data: expected {len} bytes, found {}",
                bytes.len()
            )))
        }
        None => return Err(Error::Format("embedding header counts overflow".into())),
    }
    let body_end = bytes.len() - 4;
    let stored_crc = u32::from_le_bytes(bytes[body_end..].try_into().expect("4 bytes"));
    if crc32fast::hash(&bytes[..body_end]) != stored_crc {
        return Err(Error::Format("embedding file checksum mismatch".into()));
    }
    let mut values =
        bytes[HEADER_LEN..body_end].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
    let entity_re = take(ne * d);
    let entity_im = take(ne * d);
    let relation_re = take(nr * d);
    let relation_im = take(nr * d);
    EmbeddingStore::from_parts(ne, nr, d, entity_re, entity_im, relation_re, relation_im)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingStore> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Load embeddings and check them against a vocabulary: the entity and
/// relation counts must match, and so must the sidecar fingerprint when
/// one is recorded.
pub fn load_embeddings_for(path: &Path, vocab: &Vocabulary) -> Result<EmbeddingStore> {
    let store = load_embeddings(path)?;
    if store.num_entities() != vocab.num_entities() || store.num_relations() != vocab.num_relations() {
        return Err(Error::Format(format!(
            "{}: embeddings cover {} entities / {} relations but the dataset has {} / {}",
            path.display(),
            store.num_entities(),
            store.num_relations(),
            vocab.num_entities(),
            vocab.num_relations()
        )));
    }
    if let Some(side) = EmbeddingSidecar::read(path)? {
        if let Some(hash) = side.name_table_sha256 {
            if hash != vocab.fingerprint() {
                return Err(Error::Format(format!(
                    "{}: embeddings were trained on a different vocabulary",
                    path.display()
                )));
            }
        }
    }
    Ok(store)
}
