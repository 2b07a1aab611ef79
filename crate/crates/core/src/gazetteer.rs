//! Per-type phrase dictionaries and single-token regex rules, and the
//! dictionary labeling pass.
//!
//! Phrase matching is case-insensitive and token-aligned. When candidate
//! matches overlap, the longest wins, ties go to the leftmost, and a token
//! consumed by an accepted match is unavailable to every later candidate.
//! Regex rules then run over tokens that are still `O`: each pattern must
//! match the whole token surface (anchors are implied) and types are tried
//! in type-set order, rules in file order.
//!
//! Seed files are line-delimited JSON:
//!
//! ```text
//! {"type": "Component", "phrase": "hard drive"}
//! {"type": "Attribute", "regex": "[0-9]+(GB|TB)"}
//! ```
//!
//! Patterns use the syntax of the `regex` crate (character classes,
//! alternation, bounded and unbounded quantifiers); there are no
//! look-arounds or backreferences.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EntityType, Provenance, Sentence, TagAssignment, TypeSet};
use crate::error::{Error, Result};

pub type Phrase = Vec<String>;

/// Lowercases and splits nothing: each element is one token.
pub fn normalize_phrase<S: AsRef<str>>(tokens: &[S]) -> Phrase {
    tokens.iter().map(|t| t.as_ref().to_lowercase()).collect()
}

pub fn phrase_to_string(phrase: &[String]) -> String {
    phrase.join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchSource {
    Dictionary,
    Regex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchSpan {
    pub sentence: usize,
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub entity_type: EntityType,
    pub source: MatchSource,
}

#[derive(Debug, Clone)]
struct RegexRule {
    pattern: String,
    compiled: Regex,
}

impl RegexRule {
    fn new(pattern: &str) -> Result<Self> {
        let compiled = Regex::new(&format!("^(?:{pattern})$")).map_err(|e| Error::Regex {
            pattern: pattern.to_string(),
            message: e.to_string(),
        })?;
        Ok(RegexRule {
            pattern: pattern.to_string(),
            compiled,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    Added,
    AlreadyPresent,
}

#[derive(Debug, Default)]
pub struct BatchReport {
    pub added: Vec<(Phrase, EntityType)>,
    pub already_present: usize,
    /// Phrases rejected because they already belong to another type.
    pub conflicts: Vec<Error>,
}

#[derive(Debug, Clone)]
pub struct Gazetteer {
    types: TypeSet,
    entries: Vec<BTreeSet<Phrase>>,
    rules: Vec<Vec<RegexRule>>,
    index: HashMap<Phrase, usize>,
    max_phrase_len: usize,
    version: u64,
}

impl PartialEq for Gazetteer {
    fn eq(&self, other: &Self) -> bool {
        self.types == other.types
            && self.entries == other.entries
            && self.version == other.version
            && self.rules.len() == other.rules.len()
            && self
                .rules
                .iter()
                .zip(&other.rules)
                .all(|(a, b)| a.iter().map(|r| &r.pattern).eq(b.iter().map(|r| &r.pattern)))
    }
}

#[derive(Serialize, Deserialize)]
struct SeedRecord {
    #[serde(rename = "type")]
    entity_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phrase: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regex: Option<String>,
}

impl Gazetteer {
    pub fn new(types: TypeSet) -> Self {
        let n = types.len();
        Gazetteer {
            types,
            entries: vec![BTreeSet::new(); n],
            rules: vec![Vec::new(); n],
            index: HashMap::new(),
            max_phrase_len: 0,
            version: 0,
        }
    }

    pub fn types(&self) -> &TypeSet {
        &self.types
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty() && self.rules.iter().all(Vec::is_empty)
    }

    pub fn phrase_count(&self) -> usize {
        self.index.len()
    }

    pub fn entries(&self, ty: &EntityType) -> Option<&BTreeSet<Phrase>> {
        self.types.position(ty).map(|i| &self.entries[i])
    }

    pub fn regex_patterns(&self, ty: &EntityType) -> Vec<&str> {
        self.types
            .position(ty)
            .map(|i| self.rules[i].iter().map(|r| r.pattern.as_str()).collect())
            .unwrap_or_default()
    }

    /// Type under which the (already lowercased) phrase is stored.
    pub fn lookup(&self, phrase: &[String]) -> Option<&EntityType> {
        self.index.get(phrase).map(|&i| &self.types.as_slice()[i])
    }

    pub fn contains(&self, phrase: &[String]) -> bool {
        self.index.contains_key(phrase)
    }

    fn type_index(&self, ty: &EntityType) -> Result<usize> {
        self.types
            .position(ty)
            .ok_or_else(|| Error::UnknownType(ty.name().to_string()))
    }

    fn insert(&mut self, phrase: &[impl AsRef<str>], ty: &EntityType) -> Result<AddOutcome> {
        if phrase.is_empty() || phrase.iter().any(|t| t.as_ref().is_empty()) {
            return Err(Error::EmptyPhrase);
        }
        let ti = self.type_index(ty)?;
        let key = normalize_phrase(phrase);
        if let Some(&existing) = self.index.get(&key) {
            if existing == ti {
                return Ok(AddOutcome::AlreadyPresent);
            }
            return Err(Error::PhraseConflict {
                phrase: phrase_to_string(&key),
                existing: self.types.as_slice()[existing].to_string(),
                requested: ty.to_string(),
            });
        }
        self.max_phrase_len = self.max_phrase_len.max(key.len());
        self.entries[ti].insert(key.clone());
        self.index.insert(key, ti);
        Ok(AddOutcome::Added)
    }

    /// Adds one phrase as a batch of its own.
    pub fn add_entity(&mut self, phrase: &[impl AsRef<str>], ty: &EntityType) -> Result<AddOutcome> {
        let outcome = self.insert(phrase, ty)?;
        if outcome == AddOutcome::Added {
            self.version += 1;
        }
        Ok(outcome)
    }

    /// Adds a batch of phrases; the version is bumped once if anything was
    /// added. Conflicting phrases are reported and skipped.
    pub fn add_batch<I, P>(&mut self, items: I) -> BatchReport
    where
        I: IntoIterator<Item = (P, EntityType)>,
        P: AsRef<[String]>,
    {
        let mut report = BatchReport::default();
        for (phrase, ty) in items {
            let phrase = phrase.as_ref();
            match self.insert(phrase, &ty) {
                Ok(AddOutcome::Added) => report.added.push((normalize_phrase(phrase), ty)),
                Ok(AddOutcome::AlreadyPresent) => report.already_present += 1,
                Err(e) => report.conflicts.push(e),
            }
        }
        if !report.added.is_empty() {
            self.version += 1;
        }
        report
    }

    pub fn add_regex(&mut self, ty: &EntityType, pattern: &str) -> Result<()> {
        let ti = self.type_index(ty)?;
        self.rules[ti].push(RegexRule::new(pattern)?);
        Ok(())
    }

    pub fn read<R: BufRead>(input: R, types: &TypeSet) -> Result<Self> {
        let mut gaz = Gazetteer::new(types.clone());
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: SeedRecord = serde_json::from_str(&line).map_err(|e| Error::parse(n + 1, e.to_string()))?;
            let ty = types.get(&record.entity_type)?;
            match (record.phrase, record.regex) {
                (Some(phrase), None) => {
                    let tokens: Vec<&str> = phrase.split_whitespace().collect();
                    gaz.insert(&tokens, &ty)?;
                }
                (None, Some(pattern)) => gaz.add_regex(&ty, &pattern)?,
                _ => return Err(Error::parse(n + 1, "record needs exactly one of `phrase` or `regex`")),
            }
        }
        Ok(gaz)
    }

    pub fn load_seed(path: impl AsRef<Path>, types: &TypeSet) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Gazetteer::read(std::io::BufReader::new(file), types)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (ti, ty) in self.types.iter().enumerate() {
            for phrase in &self.entries[ti] {
                let rec = SeedRecord {
                    entity_type: ty.to_string(),
                    phrase: Some(phrase_to_string(phrase)),
                    regex: None,
                };
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
            }
            for rule in &self.rules[ti] {
                let rec = SeedRecord {
                    entity_type: ty.to_string(),
                    phrase: None,
                    regex: Some(rule.pattern.clone()),
                };
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Sets the version after loading a snapshot whose version is tracked
    /// elsewhere.
    pub fn with_version(mut self, version: u64) -> Self {
        self.version = version;
        self
    }

    /// Phrase and regex matches for one sentence, in token order.
    pub fn match_sentence(&self, sentence_idx: usize, sentence: &Sentence) -> Vec<MatchSpan> {
        let n = sentence.len();
        let lower: Vec<String> = sentence.tokens().iter().map(|t| t.surface.to_lowercase()).collect();

        let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
        for start in 0..n {
            let longest = self.max_phrase_len.min(n - start);
            for len in 1..=longest {
                if let Some(&ti) = self.index.get(&lower[start..start + len]) {
                    candidates.push((start, len, ti));
                }
            }
        }
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut taken = vec![false; n];
        let mut spans = Vec::new();
        for (start, len, ti) in candidates {
            if taken[start..start + len].iter().any(|&t| t) {
                continue;
            }
            taken[start..start + len].iter_mut().for_each(|t| *t = true);
            spans.push(MatchSpan {
                sentence: sentence_idx,
                start,
                end: start + len - 1,
                entity_type: self.types.as_slice()[ti].clone(),
                source: MatchSource::Dictionary,
            });
        }

        if self.rules.iter().any(|r| !r.is_empty()) {
            for (i, token) in sentence.tokens().iter().enumerate() {
                if taken[i] {
                    continue;
                }
                let hit = self
                    .rules
                    .iter()
                    .enumerate()
                    .find(|(_, rules)| rules.iter().any(|r| r.compiled.is_match(&token.surface)));
                if let Some((ti, _)) = hit {
                    spans.push(MatchSpan {
                        sentence: sentence_idx,
                        start: i,
                        end: i,
                        entity_type: self.types.as_slice()[ti].clone(),
                        source: MatchSource::Regex,
                    });
                }
            }
        }
        spans.sort_by_key(|s| s.start);
        spans
    }

    pub fn label_document(&self, doc: &Document) -> TagAssignment {
        let mut tags = TagAssignment::for_document(doc);
        for (si, (sentence, offset)) in doc.sentences.iter().zip(doc.sentence_offsets()).enumerate() {
            for span in self.match_sentence(si, sentence) {
                let prov = match span.source {
                    MatchSource::Dictionary => Provenance::Dictionary,
                    MatchSource::Regex => Provenance::Regex,
                };
                for i in span.start..=span.end {
                    tags.label(offset + i, span.entity_type.clone(), prov);
                }
            }
        }
        tags
    }
}

/// Dictionary and regex labeling of every document.
pub fn label_corpus(corpus: &[Document], gaz: &Gazetteer) -> Vec<TagAssignment> {
    corpus.par_iter().map(|doc| gaz.label_document(doc)).collect()
}
