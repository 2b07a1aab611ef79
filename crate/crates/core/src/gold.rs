//! Line-delimited tag records: `{"doc_id": .., "tokens": [..], "tags": [..]}`
//! with an optional `provenance` array. Used for gold annotations and for
//! the label/predict outputs.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{string_to_tag, Document, IoTag, Provenance, Sentence, TagAssignment, TypeSet};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct TagRecord {
    doc_id: String,
    tokens: Vec<String>,
    tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Vec<Provenance>>,
}

/// Reads tag records, keeping provenance when present (absent means gold).
/// Each record becomes a single-sentence document without dependency
/// information.
pub fn read_tag_records<R: BufRead>(input: R, types: &TypeSet) -> Result<Vec<(Document, TagAssignment)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TagRecord = serde_json::from_str(&line).map_err(|e| Error::parse(n + 1, e.to_string()))?;
        if record.tags.len() != record.tokens.len() {
            return Err(Error::LengthMismatch {
                doc_id: record.doc_id,
                expected: record.tokens.len(),
                found: record.tags.len(),
            });
        }
        if !seen.insert(record.doc_id.clone()) {
            return Err(Error::DuplicateDocument(record.doc_id));
        }
        let tags = record
            .tags
            .iter()
            .map(|t| string_to_tag(t, types))
            .collect::<Result<Vec<IoTag>>>()?;
        let sentences = if record.tokens.is_empty() {
            Vec::new()
        } else {
            vec![Sentence::from_surfaces(&record.tokens)
                .map_err(|e| Error::parse(n + 1, format!("{}: {e}", record.doc_id)))?]
        };
        let assignment = match record.provenance {
            Some(prov) => TagAssignment::from_parts(record.doc_id.clone(), tags, prov)?,
            None => TagAssignment::gold(record.doc_id.clone(), tags),
        };
        out.push((Document::new(record.doc_id, sentences), assignment));
    }
    Ok(out)
}

/// Reads gold annotations; every token gets provenance `gold`.
pub fn read_gold<R: BufRead>(input: R, types: &TypeSet) -> Result<Vec<(Document, TagAssignment)>> {
    Ok(read_tag_records(input, types)?
        .into_iter()
        .map(|(d, t)| (d, t.into_gold()))
        .collect())
}

pub fn write_tag_records<W: Write>(
    mut out: W,
    documents: &[Document],
    assignments: &[TagAssignment],
    with_provenance: bool,
) -> Result<()> {
    for (doc, tags) in documents.iter().zip(assignments) {
        if doc.token_count() != tags.len() {
            return Err(Error::LengthMismatch {
                doc_id: doc.doc_id.clone(),
                expected: doc.token_count(),
                found: tags.len(),
            });
        }
        let record = TagRecord {
            doc_id: doc.doc_id.clone(),
            tokens: doc.surfaces(),
            tags: tags.tags().iter().map(IoTag::to_string).collect(),
            provenance: with_provenance.then(|| tags.provenance().to_vec()),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Orders `records` to follow `documents` by doc_id and checks token counts.
pub fn align_to_corpus(documents: &[Document], records: Vec<(Document, TagAssignment)>) -> Result<Vec<TagAssignment>> {
    let mut by_id: HashMap<String, TagAssignment> = records.into_iter().map(|(d, t)| (d.doc_id, t)).collect();
    documents
        .iter()
        .map(|doc| {
            let tags = by_id
                .remove(&doc.doc_id)
                .ok_or_else(|| Error::MissingDocument(doc.doc_id.clone()))?;
            if tags.len() != doc.token_count() {
                return Err(Error::LengthMismatch {
                    doc_id: doc.doc_id.clone(),
                    expected: doc.token_count(),
                    found: tags.len(),
                });
            }
            Ok(tags)
        })
        .collect()
}
