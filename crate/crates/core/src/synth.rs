//! Seeded synthetic corpora with a planted entity vocabulary, exact gold tags
//! and known per-type token priors.
//!
//! Sentences are built from units. A unit is either one filler token or an
//! entity block: an optional type cue word, the entity phrase, for
//! `Component` optionally a head noun joined by a `compound` edge, and one
//! trailing filler. Filler words follow a Zipf distribution. Every word
//! belongs to exactly one pool, so entity vocabularies are type-disjoint.

use std::collections::{BTreeMap, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EntityType, IoTag, Sentence, TagAssignment, Token, TypeSet};
use crate::error::{Error, Result};
use crate::gazetteer::{Gazetteer, Phrase};

const CUE_PROBABILITY: f64 = 0.8;
const CUE_NOISE: f64 = 0.05;
const FILLER_VOCABULARY: usize = 400;
const ZIPF_EXPONENT: f64 = 1.1;
const CUES_PER_TYPE: usize = 4;
const HEAD_NOUNS: usize = 8;
const UNITS: [&str; 8] = ["gb", "mhz", "tb", "mm", "w", "v", "mah", "rpm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSizes {
    pub product: usize,
    pub component: usize,
    pub brand: usize,
    pub attribute: usize,
}

impl Default for VocabSizes {
    fn default() -> Self {
        VocabSizes {
            product: 20,
            component: 40,
            brand: 20,
            attribute: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub vocab: VocabSizes,
    pub documents: usize,
    pub test_documents: usize,
    pub sentences_per_document: usize,
    /// Target sentence length; a sentence ends at the first unit boundary at
    /// or after a length drawn uniformly from this range.
    pub min_sentence_length: usize,
    pub max_sentence_length: usize,
    /// Expected fraction of entity tokens, all types together.
    pub entity_rate: f64,
    /// Fraction of `Component` mentions followed by a compound head noun.
    pub compound_rate: f64,
    /// Relative frequency of the four types' mentions, in type order.
    pub type_weights: [f64; 4],
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            vocab: VocabSizes::default(),
            documents: 1000,
            test_documents: 0,
            sentences_per_document: 5,
            min_sentence_length: 8,
            max_sentence_length: 16,
            entity_rate: 0.2,
            compound_rate: 0.3,
            type_weights: [0.15, 0.5, 0.2, 0.15],
            seed: 0,
        }
    }
}

/// The planted phrases per type, in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    types: TypeSet,
    phrases: Vec<Vec<Phrase>>,
}

impl Vocabulary {
    pub fn types(&self) -> &TypeSet {
        &self.types
    }

    pub fn phrases(&self, ty: &EntityType) -> &[Phrase] {
        self.types.position(ty).map_or(&[], |i| &self.phrases[i])
    }

    pub fn len(&self) -> usize {
        self.phrases.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gazetteer(&self) -> Gazetteer {
        self.seed(1.0)
    }

    /// Gazetteer with the first `ceil(coverage * n)` phrases of each type.
    pub fn seed(&self, coverage: f64) -> Gazetteer {
        let coverage = coverage.clamp(0.0, 1.0);
        let mut gaz = Gazetteer::new(self.types.clone());
        for (ty, phrases) in self.types.iter().zip(&self.phrases) {
            let n = (coverage * phrases.len() as f64).ceil() as usize;
            for p in &phrases[..n] {
                gaz.add_entity(p, ty).expect("vocabulary phrases are type-disjoint");
            }
        }
        gaz
    }

    /// Fraction of the planted phrases of `ty` (or of all types) that `gaz`
    /// lists under the planted type.
    pub fn coverage(&self, gaz: &Gazetteer, ty: Option<&EntityType>) -> f64 {
        let mut found = 0;
        let mut total = 0;
        for (t, phrases) in self.types.iter().zip(&self.phrases) {
            if ty.is_some_and(|ty| ty != t) {
                continue;
            }
            total += phrases.len();
            found += phrases.iter().filter(|p| gaz.lookup(p) == Some(t)).count();
        }
        if total == 0 {
            0.0
        } else {
            found as f64 / total as f64
        }
    }
}

/// One generated corpus with its gold tags.
#[derive(Debug, Clone)]
pub struct Split {
    pub documents: Vec<Document>,
    pub gold: Vec<TagAssignment>,
    /// Exact token-level prior per type name.
    pub priors: BTreeMap<String, f64>,
}

impl Split {
    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Document::token_count).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub vocabulary: Vocabulary,
    pub train: Split,
    /// Held-out documents drawn from the same vocabulary; empty unless
    /// `test_documents > 0`.
    pub test: Split,
}

struct Pools {
    fillers: Vec<String>,
    cues: Vec<Vec<String>>,
    heads: Vec<String>,
}

struct WordMaker {
    used: HashSet<String>,
}

impl WordMaker {
    fn word(&mut self, rng: &mut ChaCha8Rng) -> String {
        const CONSONANTS: &[u8] = b"bcdfghklmnprstvz";
        const VOWELS: &[u8] = b"aeiou";
        loop {
            let syllables = rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(*CONSONANTS.choose(rng).unwrap() as char);
                w.push(*VOWELS.choose(rng).unwrap() as char);
                if rng.random_bool(0.3) {
                    w.push(*CONSONANTS.choose(rng).unwrap() as char);
                }
            }
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn make_vocabulary(sizes: &VocabSizes, rng: &mut ChaCha8Rng, words: &mut WordMaker) -> Result<Vocabulary> {
    let types = TypeSet::default();
    let max_attributes = UNITS.len() * 64;
    if sizes.attribute > max_attributes {
        return Err(Error::Infeasible(format!(
            "at most {max_attributes} attribute phrases can be generated, {} requested",
            sizes.attribute
        )));
    }
    let mut seen: HashSet<Phrase> = HashSet::new();
    let fresh = |p: Phrase, seen: &mut HashSet<Phrase>| seen.insert(p);

    let mut product = Vec::with_capacity(sizes.product);
    while product.len() < sizes.product {
        let name = capitalize(&words.word(rng));
        let letter = (b'A' + rng.random_range(0..26u8)) as char;
        let code = if rng.random_bool(0.5) {
            format!("{letter}{}", rng.random_range(100..1000))
        } else {
            format!("{letter}-{}", rng.random_range(10..100))
        };
        let p = vec![name.to_lowercase(), code.to_lowercase()];
        if fresh(p.clone(), &mut seen) {
            product.push(p);
        }
    }

    let pool_size = (sizes.component * 6 / 5).max(1);
    let pool: Vec<String> = (0..pool_size).map(|_| words.word(rng)).collect();
    let mut component = Vec::with_capacity(sizes.component);
    let mut attempts = 0;
    while component.len() < sizes.component {
        attempts += 1;
        let len = if attempts > 100 * sizes.component {
            3
        } else {
            [1, 2, 2, 2, 3][rng.random_range(0..5)]
        };
        let p: Phrase = pool.choose_multiple(rng, len.min(pool.len())).cloned().collect();
        if fresh(p.clone(), &mut seen) {
            component.push(p);
        }
    }

    let brand: Vec<Phrase> = (0..sizes.brand).map(|_| vec![words.word(rng)]).collect();

    let mut attribute = Vec::with_capacity(sizes.attribute);
    while attribute.len() < sizes.attribute {
        let n = 1u32 << rng.random_range(0..6);
        let n = n * rng.random_range(1..=9);
        let p = vec![format!("{n}{}", UNITS.choose(rng).unwrap())];
        if fresh(p.clone(), &mut seen) {
            attribute.push(p);
        }
    }

    Ok(Vocabulary {
        types,
        phrases: vec![product, component, brand, attribute],
    })
}

/// Surface form of a vocabulary token: brands and product names are
/// capitalized, model codes upper-cased.
fn surface(type_index: usize, position: usize, word: &str) -> String {
    match (type_index, position) {
        (0, 0) | (2, _) => capitalize(word),
        (0, _) => word.to_uppercase(),
        _ => word.to_string(),
    }
}

struct Generator<'a> {
    spec: &'a SynthSpec,
    vocab: &'a Vocabulary,
    pools: &'a Pools,
    zipf: Zipf<f64>,
    block_probability: f64,
    type_cdf: [f64; 4],
}

struct Slot {
    surface: String,
    tag: IoTag,
    /// Offset of the governing token within the sentence, `None` for the
    /// root candidate.
    head: Option<usize>,
    deprel: &'static str,
}

impl Generator<'_> {
    fn filler(&self, rng: &mut ChaCha8Rng) -> String {
        if rng.random_bool(CUE_NOISE) {
            let t = rng.random_range(0..self.pools.cues.len());
            return self.pools.cues[t].choose(rng).unwrap().clone();
        }
        let rank = self.zipf.sample(rng) as usize;
        self.pools.fillers[rank.saturating_sub(1).min(self.pools.fillers.len() - 1)].clone()
    }

    fn filler_deprel(rng: &mut ChaCha8Rng) -> &'static str {
        match rng.random_range(0..10) {
            0 => "obj",
            1 => "nmod",
            2 => "advmod",
            _ => "dep",
        }
    }

    fn pick_type(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        self.type_cdf.iter().position(|&c| u < c).unwrap_or(3)
    }

    fn sentence(&self, rng: &mut ChaCha8Rng) -> Result<(Sentence, Vec<IoTag>)> {
        let target = rng.random_range(self.spec.min_sentence_length..=self.spec.max_sentence_length);
        let mut slots: Vec<Slot> = Vec::new();
        while slots.len() < target {
            let prev = slots.len().checked_sub(1);
            if !rng.random_bool(self.block_probability) {
                slots.push(Slot {
                    surface: self.filler(rng),
                    tag: IoTag::O,
                    head: prev,
                    deprel: Self::filler_deprel(rng),
                });
                continue;
            }
            let ti = self.pick_type(rng);
            let ty = self.vocab.types.as_slice()[ti].clone();
            let phrase = self.vocab.phrases[ti].choose(rng).expect("non-empty vocabulary");
            let with_cue = rng.random_bool(CUE_PROBABILITY);
            let with_head = ti == 1 && rng.random_bool(self.spec.compound_rate);

            let cue_at = with_cue.then_some(slots.len());
            let start = slots.len() + usize::from(with_cue);
            let last = start + phrase.len() - 1;
            let governor = if with_head { last + 1 } else { last };
            let governor_rel = if rng.random_bool(0.7) { "obj" } else { "nmod" };
            if let Some(at) = cue_at {
                slots.push(Slot {
                    surface: self.pools.cues[ti].choose(rng).unwrap().clone(),
                    tag: IoTag::O,
                    head: Some(governor),
                    deprel: "case",
                });
                debug_assert_eq!(at + 1, start);
            }
            for (k, word) in phrase.iter().enumerate() {
                let is_last = start + k == last;
                let (head, deprel) = if !is_last || with_head {
                    (Some(if is_last { last + 1 } else { last }), "compound")
                } else {
                    (prev, governor_rel)
                };
                slots.push(Slot {
                    surface: surface(ti, k, word),
                    tag: IoTag::I(ty.clone()),
                    head,
                    deprel,
                });
            }
            if with_head {
                slots.push(Slot {
                    surface: self.pools.heads.choose(rng).unwrap().clone(),
                    tag: IoTag::I(ty.clone()),
                    head: prev,
                    deprel: governor_rel,
                });
            }
            slots.push(Slot {
                surface: self.filler(rng),
                tag: IoTag::O,
                head: Some(governor),
                deprel: Self::filler_deprel(rng),
            });
        }

        // the first token is the root; tokens that would attach to a
        // missing predecessor attach to it instead
        let mut tokens = Vec::with_capacity(slots.len());
        let mut tags = Vec::with_capacity(slots.len());
        for (i, slot) in slots.into_iter().enumerate() {
            let (head, deprel) = match slot.head {
                _ if i == 0 => (None, "root"),
                Some(h) if h != i => (Some(h), slot.deprel),
                _ => (Some(0), slot.deprel),
            };
            tokens.push(Token::new(i, slot.surface, head, deprel));
            tags.push(slot.tag);
        }
        Ok((Sentence::new(tokens)?, tags))
    }

    fn split(&self, prefix: &str, documents: usize, rng: &mut ChaCha8Rng) -> Result<Split> {
        let mut docs = Vec::with_capacity(documents);
        let mut gold = Vec::with_capacity(documents);
        for d in 0..documents {
            let mut sentences = Vec::with_capacity(self.spec.sentences_per_document);
            let mut tags = Vec::new();
            for _ in 0..self.spec.sentences_per_document {
                let (s, t) = self.sentence(rng)?;
                sentences.push(s);
                tags.extend(t);
            }
            let id = format!("{prefix}-{d:05}");
            docs.push(Document::new(id.clone(), sentences));
            gold.push(TagAssignment::gold(id, tags));
        }
        let priors = priors(&self.vocab.types, &gold);
        Ok(Split {
            documents: docs,
            gold,
            priors,
        })
    }
}

/// Token-level prior of each type, counted from tags.
pub fn priors(types: &TypeSet, tags: &[TagAssignment]) -> BTreeMap<String, f64> {
    let mut counts = vec![0usize; types.len()];
    let mut total = 0usize;
    for t in tags.iter().flat_map(|a| a.tags()) {
        total += 1;
        if let Some(i) = t.entity_type().and_then(|ty| types.position(ty)) {
            counts[i] += 1;
        }
    }
    types
        .iter()
        .zip(counts)
        .map(|(ty, c)| (ty.to_string(), if total == 0 { 0.0 } else { c as f64 / total as f64 }))
        .collect()
}

/// Probability that a unit is an entity block so that the expected share of
/// entity tokens is `rate`.
fn block_probability(spec: &SynthSpec, vocab: &Vocabulary) -> Result<f64> {
    if !(0.0..1.0).contains(&spec.entity_rate) {
        return Err(Error::Infeasible(format!(
            "entity rate {} outside [0, 1)",
            spec.entity_rate
        )));
    }
    if spec.entity_rate == 0.0 {
        return Ok(0.0);
    }
    let weight_sum: f64 = spec.type_weights.iter().sum();
    let mut entity_tokens = 0.0;
    for (ti, phrases) in vocab.phrases.iter().enumerate() {
        let w = spec.type_weights[ti] / weight_sum;
        let mean = phrases.iter().map(Vec::len).sum::<usize>() as f64 / phrases.len() as f64;
        let head = if ti == 1 { spec.compound_rate } else { 0.0 };
        entity_tokens += w * (mean + head);
    }
    let block_tokens = entity_tokens + CUE_PROBABILITY + 1.0;
    let rate = spec.entity_rate;
    let q = rate / (entity_tokens - rate * (block_tokens - 1.0));
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Infeasible(format!(
            "entity rate {rate} needs more than one entity block per unit (at most {:.3} is reachable)",
            entity_tokens / block_tokens
        )));
    }
    Ok(q)
}

fn check(spec: &SynthSpec) -> Result<()> {
    let v = &spec.vocab;
    if spec.entity_rate > 0.0 {
        for (name, n, w) in [
            ("product", v.product, spec.type_weights[0]),
            ("component", v.component, spec.type_weights[1]),
            ("brand", v.brand, spec.type_weights[2]),
            ("attribute", v.attribute, spec.type_weights[3]),
        ] {
            if w > 0.0 && n == 0 {
                return Err(Error::Infeasible(format!(
                    "{name} has weight {w} but an empty vocabulary"
                )));
            }
        }
    }
    if spec.type_weights.iter().any(|w| w.is_nan() || *w < 0.0) || spec.type_weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Infeasible(
            "type weights must be non-negative with a positive sum".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.compound_rate) {
        return Err(Error::Infeasible(format!(
            "compound rate {} outside [0, 1]",
            spec.compound_rate
        )));
    }
    if spec.min_sentence_length == 0 || spec.min_sentence_length > spec.max_sentence_length {
        return Err(Error::Infeasible(format!(
            "sentence length range {}..={} is empty",
            spec.min_sentence_length, spec.max_sentence_length
        )));
    }
    if spec.sentences_per_document == 0 {
        return Err(Error::Infeasible("documents need at least one sentence".into()));
    }
    Ok(())
}

pub fn generate(spec: &SynthSpec) -> Result<Synthetic> {
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut words = WordMaker { used: HashSet::new() };
    let vocabulary = make_vocabulary(&spec.vocab, &mut rng, &mut words)?;
    let pools = Pools {
        fillers: (0..FILLER_VOCABULARY).map(|_| words.word(&mut rng)).collect(),
        cues: (0..4)
            .map(|_| (0..CUES_PER_TYPE).map(|_| words.word(&mut rng)).collect())
            .collect(),
        heads: (0..HEAD_NOUNS).map(|_| words.word(&mut rng)).collect(),
    };
    let weight_sum: f64 = spec.type_weights.iter().sum();
    let mut type_cdf = [0.0; 4];
    let mut acc = 0.0;
    for (c, w) in type_cdf.iter_mut().zip(spec.type_weights) {
        acc += w / weight_sum;
        *c = acc;
    }
    let generator = Generator {
        spec,
        vocab: &vocabulary,
        pools: &pools,
        zipf: Zipf::new(FILLER_VOCABULARY as f64, ZIPF_EXPONENT).expect("valid Zipf parameters"),
        block_probability: block_probability(spec, &vocabulary)?,
        type_cdf,
    };
    let train = generator.split("train", spec.documents, &mut rng)?;
    let test = generator.split("test", spec.test_documents, &mut rng)?;
    Ok(Synthetic {
        vocabulary,
        train,
        test,
    })
}
