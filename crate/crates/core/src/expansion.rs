//! Label expansion along dependency relations.
//!
//! For every edge whose relation is in the configured set, a type is copied
//! from a labeled endpoint to an unlabeled one, in either direction, until
//! nothing changes. Labeled tokens are never overwritten. Edges joining two
//! different types propagate nothing and are counted as conflicts.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::corpus::{Document, IoTag, Provenance, TagAssignment};
use crate::error::{Error, Result};

pub const DEFAULT_RELATIONS: [&str; 1] = ["compound"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSet(BTreeSet<String>);

impl RelationSet {
    pub fn new<S: AsRef<str>>(relations: &[S]) -> Self {
        RelationSet(relations.iter().map(|r| r.as_ref().to_string()).collect())
    }

    pub fn contains(&self, rel: &str) -> bool {
        self.0.contains(rel)
    }
}

impl Default for RelationSet {
    fn default() -> Self {
        RelationSet::new(&DEFAULT_RELATIONS)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExpansionStats {
    /// Tokens newly labeled.
    pub expanded: usize,
    /// Qualifying edges whose endpoints carry different types at the fixpoint.
    pub type_conflicts: usize,
}

impl std::ops::AddAssign for ExpansionStats {
    fn add_assign(&mut self, rhs: Self) {
        self.expanded += rhs.expanded;
        self.type_conflicts += rhs.type_conflicts;
    }
}

pub fn expand_labels(
    tags: &TagAssignment,
    doc: &Document,
    relations: &RelationSet,
) -> Result<(TagAssignment, ExpansionStats)> {
    if tags.len() != doc.token_count() {
        return Err(Error::LengthMismatch {
            doc_id: doc.doc_id.clone(),
            expected: doc.token_count(),
            found: tags.len(),
        });
    }
    let mut out = tags.clone();
    let mut stats = ExpansionStats::default();

    for (sentence, offset) in doc.sentences.iter().zip(doc.sentence_offsets()) {
        let edges: Vec<(usize, usize)> = sentence
            .tokens()
            .iter()
            .filter(|t| relations.contains(&t.deprel))
            .filter_map(|t| t.head.map(|h| (offset + t.index, offset + h)))
            .collect();
        if edges.is_empty() {
            continue;
        }

        // Each pass labels at least one token or ends the loop, so the number
        // of passes is bounded by the sentence length, cycles included.
        loop {
            let mut changed = false;
            for &(dep, head) in &edges {
                let (from, to) = match (out.tag(dep), out.tag(head)) {
                    (IoTag::I(_), IoTag::O) => (dep, head),
                    (IoTag::O, IoTag::I(_)) => (head, dep),
                    _ => continue,
                };
                let ty = out.tag(from).entity_type().cloned().expect("labeled endpoint");
                out.label(to, ty, Provenance::Expansion);
                stats.expanded += 1;
                changed = true;
            }
            if !changed {
                break;
            }
        }

        stats.type_conflicts += edges
            .iter()
            .filter(|&&(d, h)| match (out.tag(d), out.tag(h)) {
                (IoTag::I(a), IoTag::I(b)) => a != b,
                _ => false,
            })
            .count();
    }
    Ok((out, stats))
}

/// Expands every document; conflicts are summed over the corpus.
pub fn expand_corpus(
    tags: &[TagAssignment],
    corpus: &[Document],
    relations: &RelationSet,
) -> Result<(Vec<TagAssignment>, ExpansionStats)> {
    if tags.len() != corpus.len() {
        return Err(Error::Config(format!(
            "{} tag assignments for {} documents",
            tags.len(),
            corpus.len()
        )));
    }
    let results: Vec<(TagAssignment, ExpansionStats)> = tags
        .par_iter()
        .zip(corpus.par_iter())
        .map(|(t, d)| expand_labels(t, d, relations))
        .collect::<Result<_>>()?;
    let mut total = ExpansionStats::default();
    let mut out = Vec::with_capacity(results.len());
    for (t, s) in results {
        total += s;
        out.push(t);
    }
    if total.type_conflicts > 0 {
        log::warn!(
            "{} dependency edges join tokens of different types",
            total.type_conflicts
        );
    }
    Ok((out, total))
}
