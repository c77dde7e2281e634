use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Triple, Vocabulary};
use crate::error::{Error, Result};

/// Read a `head\trelation\ttail` file, interning names into `vocab` in
/// first-seen order. Blank lines are skipped; anything else that is not
/// exactly three non-empty tab-separated fields is a parse error.
pub fn load_triples(path: impl AsRef<Path>, vocab: &mut Vocabulary) -> Result<Vec<Triple>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_triples(BufReader::new(file), &path.display().to_string(), vocab, true)
}

/// Parse triples from any reader. With `intern == false` every name must
/// already be registered in `vocab`.
pub fn parse_triples(
    reader: impl BufRead,
    source_name: &str,
    vocab: &mut Vocabulary,
    intern: bool,
) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            source_name: source_name.to_owned(),
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                source_name: source_name.to_owned(),
                line: lineno,
                message: format!("expected 3 non-empty tab-separated fields, found {}", fields.len()),
            });
        }
        let triple = if intern {
            Triple::new(
                vocab.intern_entity(fields[0]),
                vocab.intern_relation(fields[1]),
                vocab.intern_entity(fields[2]),
            )
        } else {
            vocab.triple(fields[0], fields[1], fields[2]).map_err(|e| Error::Parse {
                source_name: source_name.to_owned(),
                line: lineno,
                message: e.to_string(),
            })?
        };
        out.push(triple);
    }
    Ok(out)
}

pub fn write_triples<'a>(
    path: impl AsRef<Path>,
    triples: impl IntoIterator<Item = &'a Triple>,
    vocab: &Vocabulary,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in triples {
        writeln!(
            w,
            "{}\t{}\t{}",
            vocab.entity_name(t.head),
            vocab.relation_name(t.relation),
            vocab.entity_name(t.tail)
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
