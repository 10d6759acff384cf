//! JSON Lines manifest reading and writing.
//!
//! One [`CharacterInstance`] object per line. Unknown fields are rejected,
//! `bbox` may be absent or `null`, and output lines use the struct field order
//! so that write → read → write is byte-identical.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use super::{CharacterInstance, Corpus};

const REQUIRED_FIELDS: [&str; 7] = [
    "id",
    "image_path",
    "source",
    "document",
    "slip",
    "reading_index",
    "label",
];

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("line {line}: missing field {field}")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate id {id} on lines {first} and {second}")]
    DuplicateId {
        id: String,
        first: usize,
        second: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Corpus, ManifestError> {
    let file = File::open(path)?;
    read_manifest(BufReader::new(file))
}

/// Parses a manifest from any reader. Whitespace-only lines are skipped; line
/// numbers in errors are 1-based physical lines.
pub fn read_manifest<R: BufRead>(reader: R) -> Result<Corpus, ManifestError> {
    let mut instances = Vec::new();
    let mut first_seen: HashMap<String, usize> = HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let instance = parse_line(&line, line_no)?;
        if let Some(&first) = first_seen.get(&instance.id) {
            return Err(ManifestError::DuplicateId {
                id: instance.id,
                first,
                second: line_no,
            });
        }
        first_seen.insert(instance.id.clone(), line_no);
        instances.push(instance);
    }

    Ok(Corpus::new(instances))
}

fn parse_line(line: &str, line_no: usize) -> Result<CharacterInstance, ManifestError> {
    let malformed = |e: serde_json::Error| ManifestError::Malformed {
        line: line_no,
        message: e.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(line).map_err(malformed)?;
    let Some(object) = value.as_object() else {
        return Err(ManifestError::Malformed {
            line: line_no,
            message: "expected a JSON object".to_string(),
        });
    };
    if let Some(field) = REQUIRED_FIELDS.iter().find(|f| !object.contains_key(**f)) {
        return Err(ManifestError::MissingField {
            line: line_no,
            field,
        });
    }
    serde_json::from_value(value).map_err(malformed)
}

pub fn write_manifest<W: Write>(corpus: &Corpus, mut out: W) -> io::Result<()> {
    for inst in &corpus.instances {
        serde_json::to_writer(&mut out, inst)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_manifest(corpus: &Corpus, path: impl AsRef<Path>) -> io::Result<()> {
    let mut out = io::BufWriter::new(File::create(path)?);
    write_manifest(corpus, &mut out)?;
    out.flush()
}
