//! Mini-batch SGD on the PU risk, one binary classifier per entity type, and
//! argmax-over-types prediction.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EntityType, IoTag, Provenance, TagAssignment, TypeSet};
use crate::error::{Error, Result};
use crate::features::{featurize_corpus, FeatureVector};
use crate::model::{PuModel, TypeClassifier};
use crate::risk::{pu_risk_and_gradient, pu_risk_from_logits, LinearScorer, Loss};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Non-negative PU risk.
    #[default]
    Pu,
    /// Unlabeled tokens treated as negatives (the PU risk with a zero prior).
    Pn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub loss: Loss,
    pub batch: usize,
    pub seed: u64,
    /// Decision threshold τ used at prediction time.
    pub tau: f64,
    /// Class prior π_p for types without an entry in `priors`.
    pub prior: f64,
    pub priors: BTreeMap<String, f64>,
    pub objective: Objective,
    /// One batch holding every token, for exact-risk runs.
    pub full_batch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 20,
            loss: Loss::Mae,
            batch: 64,
            seed: 0,
            tau: 0.5,
            prior: 0.01,
            priors: BTreeMap::new(),
            objective: Objective::Pu,
            full_batch: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be >= 1".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau must be in (0, 1), got {}", self.tau)));
        }
        for (name, &p) in std::iter::once((&"default".to_string(), &self.prior)).chain(self.priors.iter()) {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!("prior for {name} must be in (0, 1), got {p}")));
            }
        }
        Ok(())
    }

    pub fn prior_for(&self, ty: &EntityType) -> f64 {
        self.priors.get(ty.name()).copied().unwrap_or(self.prior)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PuModel,
    /// Full-data risk after each epoch, per trained type.
    pub risk_traces: Vec<(EntityType, Vec<f64>)>,
    pub skipped: Vec<EntityType>,
}

/// Feature ids actually present in a corpus, remapped to a dense range so
/// that training can use flat weight vectors.
struct CompactFeatures {
    ids: Vec<u32>,
    vectors: Vec<FeatureVector>,
}

impl CompactFeatures {
    fn new(features: &[Vec<FeatureVector>]) -> Self {
        let mut ids: Vec<u32> = features.iter().flatten().flat_map(|v| v.ids()).collect();
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<u32, u32> = ids.iter().enumerate().map(|(i, &id)| (id, i as u32)).collect();
        let vectors = features
            .iter()
            .flatten()
            .map(|v| {
                let pairs = v.entries().iter().map(|&(id, x)| (index[&id], x)).collect();
                FeatureVector::from_pairs(pairs).expect("compact ids are in range")
            })
            .collect();
        CompactFeatures { ids, vectors }
    }
}

struct DenseScorer {
    weights: Vec<f64>,
    bias: f64,
}

impl LinearScorer for DenseScorer {
    fn weight(&self, id: u32) -> f64 {
        self.weights[id as usize]
    }

    fn bias(&self) -> f64 {
        self.bias
    }
}

fn type_seed(seed: u64, type_index: usize) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(type_index as u64 + 1)
}

/// A trained classifier and its per-epoch risk, or None for a skipped type.
type TypeFit = Option<(TypeClassifier, Vec<f64>)>;

/// Trains one classifier. `positive[i]` marks the positives among the
/// compacted vectors; everything else is unlabeled.
fn train_type(
    data: &CompactFeatures,
    positive: &[bool],
    prior: f64,
    risk_prior: f64,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(TypeClassifier, Vec<f64>)> {
    let mut pos: Vec<usize> = Vec::new();
    let mut unl: Vec<usize> = Vec::new();
    for (i, &p) in positive.iter().enumerate() {
        if p {
            pos.push(i)
        } else {
            unl.push(i)
        }
    }
    let mut scorer = DenseScorer {
        weights: vec![0.0; data.ids.len()],
        bias: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (pos_per_batch, unl_per_batch) = if cfg.full_batch {
        (pos.len(), unl.len())
    } else {
        let ratio = pos.len() as f64 / (pos.len() + unl.len()) as f64;
        let p = ((cfg.batch as f64 * ratio).ceil() as usize).clamp(1, pos.len());
        (p, cfg.batch.saturating_sub(p).max(1))
    };

    let mut grad = vec![0.0; data.ids.len()];
    let mut touched: Vec<u32> = Vec::new();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut pos_order = pos.clone();
    pos_order.shuffle(&mut rng);
    let mut pos_cursor = 0;

    for _ in 0..cfg.epochs {
        unl.shuffle(&mut rng);
        for chunk in unl.chunks(unl_per_batch) {
            let mut pos_batch: Vec<&FeatureVector> = Vec::with_capacity(pos_per_batch);
            while pos_batch.len() < pos_per_batch {
                if pos_cursor == pos_order.len() {
                    pos_order.shuffle(&mut rng);
                    pos_cursor = 0;
                }
                pos_batch.push(&data.vectors[pos_order[pos_cursor]]);
                pos_cursor += 1;
            }
            let unl_batch: Vec<&FeatureVector> = chunk.iter().map(|&i| &data.vectors[i]).collect();

            let (_, bias_grad) =
                pu_risk_and_gradient(&scorer, &pos_batch, &unl_batch, risk_prior, cfg.loss, |id, g| {
                    let slot = &mut grad[id as usize];
                    if *slot == 0.0 {
                        touched.push(id);
                    }
                    *slot += g;
                })?;
            for &id in &touched {
                let g = std::mem::take(&mut grad[id as usize]);
                scorer.weights[id as usize] -= cfg.learning_rate * g;
            }
            touched.clear();
            scorer.bias -= cfg.learning_rate * bias_grad;
        }

        let pos_z: Vec<f64> = pos.iter().map(|&i| scorer.logit(&data.vectors[i])).collect();
        let unl_z: Vec<f64> = unl.iter().map(|&i| scorer.logit(&data.vectors[i])).collect();
        let risk = pu_risk_from_logits(&pos_z, &unl_z, risk_prior, cfg.loss).risk;
        if !risk.is_finite() || scorer.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::TrainingAborted("weights diverged".into()));
        }
        trace.push(risk);
    }

    let mut clf = TypeClassifier::new(prior)?;
    clf.bias = scorer.bias;
    for (i, &w) in scorer.weights.iter().enumerate() {
        if w != 0.0 {
            clf.set_weight(data.ids[i], w);
        }
    }
    Ok((clf, trace))
}

/// Trains on precomputed features. For each type, tokens tagged with that
/// type are positives and every other token is unlabeled; a type without
/// positives (or without unlabeled tokens) is skipped with a warning.
pub fn train_features(
    types: &TypeSet,
    features: &[Vec<FeatureVector>],
    labels: &[TagAssignment],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if features.len() != labels.len() {
        return Err(Error::Config(format!(
            "{} feature documents for {} tag assignments",
            features.len(),
            labels.len()
        )));
    }
    for (f, l) in features.iter().zip(labels) {
        if f.len() != l.len() {
            return Err(Error::LengthMismatch {
                doc_id: l.doc_id().to_string(),
                expected: f.len(),
                found: l.len(),
            });
        }
    }
    let total: usize = features.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::Empty("training corpus has no tokens"));
    }

    let data = CompactFeatures::new(features);
    let flat_tags: Vec<&IoTag> = labels.iter().flat_map(|l| l.tags()).collect();

    let results: Vec<Result<TypeFit>> = types
        .as_slice()
        .par_iter()
        .enumerate()
        .map(|(ti, ty)| {
            let positive: Vec<bool> = flat_tags.iter().map(|t| t.entity_type() == Some(ty)).collect();
            let np = positive.iter().filter(|&&p| p).count();
            if np == 0 || np == total {
                log::warn!("skipping {ty}: {np} positive and {} unlabeled tokens", total - np);
                return Ok(None);
            }
            let prior = cfg.prior_for(ty);
            let risk_prior = match cfg.objective {
                Objective::Pu => prior,
                Objective::Pn => 0.0,
            };
            train_type(&data, &positive, prior, risk_prior, cfg, type_seed(cfg.seed, ti)).map(Some)
        })
        .collect();

    let mut model = PuModel::new(types.clone());
    let mut risk_traces = Vec::new();
    let mut skipped = Vec::new();
    for (ty, result) in types.iter().zip(results) {
        match result? {
            Some((clf, trace)) => {
                model.insert(ty, clf)?;
                risk_traces.push((ty.clone(), trace));
            }
            None => skipped.push(ty.clone()),
        }
    }
    Ok(TrainOutcome {
        model,
        risk_traces,
        skipped,
    })
}

pub fn train(
    types: &TypeSet,
    corpus: &[Document],
    labels: &[TagAssignment],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if corpus.is_empty() {
        return Err(Error::Empty("training corpus has no documents"));
    }
    train_features(types, &featurize_corpus(corpus), labels, cfg)
}

/// Best type for one token: the highest score among trained types, ties to
/// the earlier type, `O` below `tau`.
pub fn decide(model: &PuModel, x: &FeatureVector, tau: f64) -> IoTag {
    let mut best: Option<(&EntityType, f64)> = None;
    for (ty, clf) in model.trained() {
        let s = clf.score(x);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((ty, s));
        }
    }
    match best {
        Some((ty, s)) if s >= tau => IoTag::I(ty.clone()),
        _ => IoTag::O,
    }
}

pub fn predict_features(
    model: &PuModel,
    corpus: &[Document],
    features: &[Vec<FeatureVector>],
    tau: f64,
) -> Vec<TagAssignment> {
    corpus
        .par_iter()
        .zip(features.par_iter())
        .map(|(doc, feats)| {
            let mut tags = TagAssignment::for_document(doc);
            for (i, x) in feats.iter().enumerate() {
                if let IoTag::I(ty) = decide(model, x, tau) {
                    tags.label(i, ty, Provenance::Prediction);
                }
            }
            tags
        })
        .collect()
}

pub fn predict(model: &PuModel, corpus: &[Document], tau: f64) -> Vec<TagAssignment> {
    predict_features(model, corpus, &featurize_corpus(corpus), tau)
}
