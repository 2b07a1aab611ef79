//! Hashed indicator features for a token in its sentence context.

use std::hash::Hasher;

use fnv::FnvHasher;
use rayon::prelude::*;

use crate::corpus::{Document, Sentence};
use crate::error::{Error, Result};

pub const HASH_BITS: u32 = 22;
pub const DIMENSION: u32 = 1 << HASH_BITS;

const BOS: &str = "<s>";
const EOS: &str = "</s>";

/// Sparse feature vector with ids in `[0, DIMENSION)`, sorted, without
/// duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector(Vec<(u32, f64)>);

impl FeatureVector {
    /// Sorts and sums duplicate ids.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Result<Self> {
        if let Some(&(id, _)) = pairs.iter().find(|(id, _)| *id >= DIMENSION) {
            return Err(Error::OutOfRange(format!("feature id {id} >= {DIMENSION}")));
        }
        pairs.sort_by_key(|&(id, _)| id);
        let mut out: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (id, v) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == id => last.1 += v,
                _ => out.push((id, v)),
            }
        }
        Ok(FeatureVector(out))
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|&(id, _)| id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn hash_feature(name: &str) -> u32 {
    let mut h = FnvHasher::default();
    h.write(name.as_bytes());
    (h.finish() & u64::from(DIMENSION - 1)) as u32
}

pub fn word_shape(surface: &str) -> String {
    surface
        .chars()
        .map(|c| {
            if c.is_uppercase() {
                'X'
            } else if c.is_lowercase() {
                'x'
            } else if c.is_numeric() {
                'd'
            } else {
                c
            }
        })
        .collect()
}

fn is_title(surface: &str) -> bool {
    let mut chars = surface.chars();
    match chars.next() {
        Some(first) if first.is_uppercase() => chars.all(|c| !c.is_uppercase()),
        _ => false,
    }
}

fn is_all_caps(surface: &str) -> bool {
    surface.chars().any(char::is_alphabetic) && !surface.chars().any(char::is_lowercase)
}

/// Feature template strings for one token. Exposed for inspection and tests;
/// [`featurize_sentence_token`] hashes them.
pub fn feature_names(sentence: &Sentence, token_idx: usize) -> Vec<String> {
    let tokens = sentence.tokens();
    let token = &tokens[token_idx];
    let surface = token.surface.as_str();
    let lower = surface.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();

    let mut names = Vec::with_capacity(24);
    names.push(format!("w={lower}"));
    names.push(format!("shape={}", word_shape(surface)));
    for n in 2..=4 {
        if chars.len() >= n {
            names.push(format!("p{n}={}", chars[..n].iter().collect::<String>()));
            names.push(format!("s{n}={}", chars[chars.len() - n..].iter().collect::<String>()));
        }
    }
    if surface.chars().any(|c| c.is_ascii_digit() || c.is_numeric()) {
        names.push("has_digit".into());
    }
    if is_all_caps(surface) {
        names.push("all_caps".into());
    }
    if is_title(surface) {
        names.push("is_title".into());
    }
    for offset in [-2isize, -1, 1, 2] {
        let pos = token_idx as isize + offset;
        let word = if pos < 0 {
            BOS.to_string()
        } else if pos as usize >= tokens.len() {
            EOS.to_string()
        } else {
            tokens[pos as usize].surface.to_lowercase()
        };
        names.push(format!("w[{offset:+}]={word}"));
    }
    names.push(format!("dep={}", token.deprel));
    names
}

pub fn featurize_sentence_token(sentence: &Sentence, token_idx: usize) -> FeatureVector {
    let pairs = feature_names(sentence, token_idx)
        .iter()
        .map(|n| (hash_feature(n), 1.0))
        .collect();
    FeatureVector::from_pairs(pairs).expect("hashed ids are in range")
}

pub fn featurize(doc: &Document, sentence_idx: usize, token_idx: usize) -> Result<FeatureVector> {
    let sentence = doc
        .sentences
        .get(sentence_idx)
        .ok_or_else(|| Error::OutOfRange(format!("sentence {sentence_idx} in document `{}`", doc.doc_id)))?;
    if token_idx >= sentence.len() {
        return Err(Error::OutOfRange(format!(
            "token {token_idx} in sentence {sentence_idx} of document `{}`",
            doc.doc_id
        )));
    }
    Ok(featurize_sentence_token(sentence, token_idx))
}

/// Feature vectors for every token of a document, in flat token order.
pub fn featurize_document(doc: &Document) -> Vec<FeatureVector> {
    doc.sentences
        .iter()
        .flat_map(|s| (0..s.len()).map(move |i| featurize_sentence_token(s, i)))
        .collect()
}

pub fn featurize_corpus(corpus: &[Document]) -> Vec<Vec<FeatureVector>> {
    corpus.par_iter().map(featurize_document).collect()
}
