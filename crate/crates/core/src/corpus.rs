//! Corpus data model: tokens with dependency attachments, documents, the
//! closed set of entity types, IO tags, and per-token tag assignments.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    /// 0-based index of the dependency head, `None` for the root.
    pub head: Option<usize>,
    pub deprel: String,
}

impl Token {
    pub fn new(index: usize, surface: impl Into<String>, head: Option<usize>, deprel: impl Into<String>) -> Self {
        Token {
            index,
            surface: surface.into(),
            head,
            deprel: deprel.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence, checking index consecutiveness, non-empty surfaces
    /// and in-range, non-reflexive heads. Cycles are allowed.
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        let len = tokens.len();
        for (i, token) in tokens.iter().enumerate() {
            if token.index != i {
                return Err(Error::InvalidSentence(format!(
                    "token at position {i} has index {}",
                    token.index
                )));
            }
            if token.surface.is_empty() {
                return Err(Error::InvalidSentence(format!("token {i} has an empty surface")));
            }
            if let Some(head) = token.head {
                if head >= len {
                    return Err(Error::InvalidSentence(format!(
                        "token {i} has head {head} outside a sentence of {len} tokens"
                    )));
                }
                if head == i {
                    return Err(Error::InvalidSentence(format!("token {i} is its own head")));
                }
            }
        }
        Ok(Sentence { tokens })
    }

    /// Sentence without dependency information.
    pub fn from_surfaces<S: AsRef<str>>(surfaces: &[S]) -> Result<Self> {
        Sentence::new(
            surfaces
                .iter()
                .enumerate()
                .map(|(i, s)| Token::new(i, s.as_ref(), None, "_"))
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Document {
            doc_id: doc_id.into(),
            sentences,
        }
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Offset of each sentence's first token in the flat document token order.
    pub fn sentence_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.sentences.len());
        let mut acc = 0;
        for s in &self.sentences {
            offsets.push(acc);
            acc += s.len();
        }
        offsets
    }

    /// Tokens in flat document order.
    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn surfaces(&self) -> Vec<String> {
        self.tokens().map(|t| t.surface.clone()).collect()
    }
}

/// An entity type name. Cheap to clone; compared by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityType(Arc<str>);

impl EntityType {
    pub fn new(name: &str) -> Self {
        EntityType(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for EntityType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

pub const DEFAULT_TYPES: [&str; 4] = ["Product", "Component", "Brand", "Attribute"];

/// The closed, ordered set of entity types for a run. The order is the
/// tie-breaking order used at prediction time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSet {
    types: Vec<EntityType>,
}

impl TypeSet {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut types: Vec<EntityType> = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("invalid entity type name `{name}`")));
            }
            if types.iter().any(|t| t.name() == name) {
                return Err(Error::Config(format!("duplicate entity type `{name}`")));
            }
            types.push(EntityType::new(name));
        }
        if types.is_empty() {
            return Err(Error::Config("at least one entity type is required".into()));
        }
        Ok(TypeSet { types })
    }

    pub fn get(&self, name: &str) -> Result<EntityType> {
        self.types
            .iter()
            .find(|t| t.name() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    pub fn position(&self, ty: &EntityType) -> Option<usize> {
        self.types.iter().position(|t| t == ty)
    }

    pub fn contains(&self, ty: &EntityType) -> bool {
        self.position(ty).is_some()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, EntityType> {
        self.types.iter()
    }

    pub fn as_slice(&self) -> &[EntityType] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.types.iter().map(|t| t.name().to_string()).collect()
    }
}

impl Default for TypeSet {
    fn default() -> Self {
        TypeSet::new(&DEFAULT_TYPES).expect("default types are valid")
    }
}

/// Inside/Outside tag. There is no Begin tag: adjacent entities of the same
/// type merge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IoTag {
    O,
    I(EntityType),
}

impl IoTag {
    pub fn entity_type(&self) -> Option<&EntityType> {
        match self {
            IoTag::O => None,
            IoTag::I(t) => Some(t),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, IoTag::O)
    }
}

impl fmt::Display for IoTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoTag::O => f.write_str("O"),
            IoTag::I(t) => write!(f, "I-{t}"),
        }
    }
}

pub fn tag_to_string(tag: &IoTag) -> String {
    tag.to_string()
}

pub fn string_to_tag(s: &str, types: &TypeSet) -> Result<IoTag> {
    if s == "O" {
        return Ok(IoTag::O);
    }
    match s.strip_prefix("I-") {
        Some(name) if !name.is_empty() => types.get(name).map(IoTag::I),
        _ => Err(Error::InvalidTag(s.to_string())),
    }
}

/// Where a token's tag came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Dictionary,
    Regex,
    Expansion,
    Prediction,
    Gold,
    Unlabeled,
}

impl Provenance {
    /// Provenances that can only accompany an `I-` tag.
    pub fn implies_entity(self) -> bool {
        matches!(
            self,
            Provenance::Dictionary | Provenance::Regex | Provenance::Expansion | Provenance::Prediction
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Dictionary => "dictionary",
            Provenance::Regex => "regex",
            Provenance::Expansion => "expansion",
            Provenance::Prediction => "prediction",
            Provenance::Gold => "gold",
            Provenance::Unlabeled => "unlabeled",
        }
    }
}

/// Per-token IO tags for one document, in flat token order, with the source
/// of each tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagAssignment {
    doc_id: String,
    tags: Vec<IoTag>,
    provenance: Vec<Provenance>,
}

impl TagAssignment {
    pub fn unlabeled(doc_id: impl Into<String>, len: usize) -> Self {
        TagAssignment {
            doc_id: doc_id.into(),
            tags: vec![IoTag::O; len],
            provenance: vec![Provenance::Unlabeled; len],
        }
    }

    pub fn for_document(doc: &Document) -> Self {
        TagAssignment::unlabeled(doc.doc_id.clone(), doc.token_count())
    }

    pub fn gold(doc_id: impl Into<String>, tags: Vec<IoTag>) -> Self {
        let provenance = vec![Provenance::Gold; tags.len()];
        TagAssignment {
            doc_id: doc_id.into(),
            tags,
            provenance,
        }
    }

    pub fn from_parts(doc_id: impl Into<String>, tags: Vec<IoTag>, provenance: Vec<Provenance>) -> Result<Self> {
        let doc_id = doc_id.into();
        if tags.len() != provenance.len() {
            return Err(Error::LengthMismatch {
                doc_id,
                expected: tags.len(),
                found: provenance.len(),
            });
        }
        for (i, (tag, prov)) in tags.iter().zip(&provenance).enumerate() {
            let consistent = match tag {
                IoTag::O => matches!(prov, Provenance::Unlabeled | Provenance::Gold),
                IoTag::I(_) => *prov != Provenance::Unlabeled,
            };
            if !consistent {
                return Err(Error::InvalidTag(format!(
                    "{doc_id}: token {i} tagged {tag} with provenance {}",
                    prov.as_str()
                )));
            }
        }
        Ok(TagAssignment {
            doc_id,
            tags,
            provenance,
        })
    }

    /// Tags token `i` as `ty`. `provenance` must be an entity provenance.
    pub fn label(&mut self, i: usize, ty: EntityType, provenance: Provenance) {
        debug_assert!(provenance.implies_entity() || provenance == Provenance::Gold);
        self.tags[i] = IoTag::I(ty);
        self.provenance[i] = provenance;
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn tags(&self) -> &[IoTag] {
        &self.tags
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn tag(&self, i: usize) -> &IoTag {
        &self.tags[i]
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn labeled_count(&self) -> usize {
        self.tags.iter().filter(|t| !t.is_outside()).count()
    }

    /// Same tags, every provenance replaced by `gold`.
    pub fn into_gold(self) -> Self {
        TagAssignment::gold(self.doc_id, self.tags)
    }
}
