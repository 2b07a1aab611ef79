//! The iterative loop: label with the gazetteer, expand along dependencies,
//! train, predict, and harvest frequent predicted entities into the
//! gazetteer. Stops when an iteration harvests nothing or after
//! `max_iterations` iterations.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EntityType, IoTag, TagAssignment};
use crate::error::{Error, Result};
use crate::expansion::{expand_corpus, RelationSet};
use crate::features::{featurize_corpus, FeatureVector};
use crate::gazetteer::{label_corpus, normalize_phrase, phrase_to_string, Gazetteer, Phrase};
use crate::model::PuModel;
use crate::train::{predict_features, train_features, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    /// Harvest threshold: a phrase needs strictly more than `k` predicted
    /// occurrences.
    pub k: usize,
    pub max_iterations: usize,
    pub max_phrase_len: usize,
    pub relations: RelationSet,
    /// Skip the dependency expansion step.
    pub expand: bool,
    pub trainer: TrainConfig,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            k: 5,
            max_iterations: 10,
            max_phrase_len: 4,
            relations: RelationSet::default(),
            expand: true,
            trainer: TrainConfig::default(),
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.max_phrase_len == 0 {
            return Err(Error::Config("max_phrase_len must be >= 1".into()));
        }
        self.trainer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarvestCandidate {
    pub phrase: Phrase,
    pub entity_type: EntityType,
    pub frequency: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Harvest {
    /// New phrases above the threshold: descending frequency, then phrase,
    /// then type name.
    pub entities: Vec<HarvestCandidate>,
    /// Frequent phrases predicted as a type other than the one they already
    /// have in the gazetteer.
    pub cross_type: Vec<HarvestCandidate>,
}

/// Counts maximal same-type runs of predicted tokens within sentences.
pub fn count_runs(corpus: &[Document], predictions: &[TagAssignment]) -> HashMap<(Phrase, EntityType), usize> {
    let mut counts: HashMap<(Phrase, EntityType), usize> = HashMap::new();
    for (doc, pred) in corpus.iter().zip(predictions) {
        let tags = pred.tags();
        for (sentence, offset) in doc.sentences.iter().zip(doc.sentence_offsets()) {
            let toks = sentence.tokens();
            let mut i = 0;
            while i < toks.len() {
                let IoTag::I(ty) = &tags[offset + i] else {
                    i += 1;
                    continue;
                };
                let start = i;
                while i < toks.len() && tags[offset + i].entity_type() == Some(ty) {
                    i += 1;
                }
                let phrase = normalize_phrase(&toks[start..i].iter().map(|t| t.surface.as_str()).collect::<Vec<_>>());
                *counts.entry((phrase, ty.clone())).or_insert(0) += 1;
            }
        }
    }
    counts
}

pub fn harvest_entities(
    corpus: &[Document],
    predictions: &[TagAssignment],
    gaz: &Gazetteer,
    k: usize,
    max_phrase_len: usize,
) -> Harvest {
    let mut harvest = Harvest::default();
    for ((phrase, entity_type), frequency) in count_runs(corpus, predictions) {
        if frequency <= k || phrase.len() > max_phrase_len {
            continue;
        }
        let candidate = HarvestCandidate {
            phrase,
            entity_type,
            frequency,
        };
        match gaz.lookup(&candidate.phrase) {
            None => harvest.entities.push(candidate),
            Some(existing) if *existing != candidate.entity_type => harvest.cross_type.push(candidate),
            Some(_) => {}
        }
    }
    let order = |a: &HarvestCandidate, b: &HarvestCandidate| {
        b.frequency
            .cmp(&a.frequency)
            .then_with(|| a.phrase.cmp(&b.phrase))
            .then_with(|| a.entity_type.cmp(&b.entity_type))
    };
    harvest.entities.sort_by(order);
    harvest.cross_type.sort_by(order);
    for c in &harvest.cross_type {
        log::info!(
            "not harvesting `{}` as {}: already listed as {}",
            phrase_to_string(&c.phrase),
            c.entity_type,
            gaz.lookup(&c.phrase).map(|t| t.to_string()).unwrap_or_default()
        );
    }
    harvest
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestRecord {
    pub iteration: usize,
    pub phrase: String,
    #[serde(rename = "type")]
    pub entity_type: String,
    pub frequency: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    /// 1-based.
    pub iteration: usize,
    pub dictionary_tokens: usize,
    pub expanded_tokens: usize,
    pub expansion_conflicts: usize,
    pub predicted_tokens: usize,
    pub risk_traces: Vec<(EntityType, Vec<f64>)>,
    pub skipped_types: Vec<EntityType>,
    pub harvested: Vec<HarvestRecord>,
    pub cross_type_excluded: usize,
    /// Harvest candidates rejected because another candidate claimed the
    /// same phrase for a different type in the same batch.
    pub batch_conflicts: usize,
}

/// Everything an observer may want to persist after one iteration.
pub struct IterationArtifacts<'a> {
    pub report: &'a IterationReport,
    pub labels: &'a [TagAssignment],
    pub predictions: &'a [TagAssignment],
    pub features: &'a [Vec<FeatureVector>],
    pub model: &'a PuModel,
    pub gazetteer: &'a Gazetteer,
}

#[derive(Debug, Clone)]
pub struct BootstrapState {
    /// Completed iterations.
    pub iteration: usize,
    /// `snapshots[i]` is the gazetteer used by iteration `i + 1`; the last one
    /// is the current gazetteer.
    pub snapshots: Vec<Gazetteer>,
    pub harvest_log: Vec<HarvestRecord>,
    pub converged: bool,
    pub reports: Vec<IterationReport>,
}

impl BootstrapState {
    pub fn new(seed: Gazetteer) -> Self {
        BootstrapState {
            iteration: 0,
            snapshots: vec![seed],
            harvest_log: Vec::new(),
            converged: false,
            reports: Vec::new(),
        }
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        self.snapshots.last().expect("at least the seed snapshot")
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    pub gazetteer: Gazetteer,
    pub model: PuModel,
    pub state: BootstrapState,
}

pub fn run_bootstrap(corpus: &[Document], seed: &Gazetteer, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    run_bootstrap_with(corpus, seed, cfg, |_| Ok(()))
}

pub fn run_bootstrap_with<F>(
    corpus: &[Document],
    seed: &Gazetteer,
    cfg: &BootstrapConfig,
    observer: F,
) -> Result<BootstrapResult>
where
    F: FnMut(&IterationArtifacts<'_>) -> Result<()>,
{
    if seed.is_empty() {
        return Err(Error::Empty("seed gazetteer has no phrases or rules"));
    }
    let (state, model) = continue_bootstrap(corpus, BootstrapState::new(seed.clone()), cfg, observer)?;
    let model = model.expect("a fresh run trains at least once");
    Ok(BootstrapResult {
        gazetteer: state.gazetteer().clone(),
        model,
        state,
    })
}

/// Runs the remaining iterations of `state`. Returns the model of the last
/// iteration run here, `None` if the state was already finished.
pub fn continue_bootstrap<F>(
    corpus: &[Document],
    mut state: BootstrapState,
    cfg: &BootstrapConfig,
    mut observer: F,
) -> Result<(BootstrapState, Option<PuModel>)>
where
    F: FnMut(&IterationArtifacts<'_>) -> Result<()>,
{
    cfg.validate()?;
    if corpus.iter().all(|d| d.token_count() == 0) {
        return Err(Error::Empty("corpus has no tokens"));
    }
    let types = state.gazetteer().types().clone();
    // computed once, like the dependency parses
    let features = featurize_corpus(corpus);
    let mut model = None;

    while !state.converged && state.iteration < cfg.max_iterations {
        let iteration = state.iteration + 1;
        let gaz = state.gazetteer().clone();

        let labeled = label_corpus(corpus, &gaz);
        let dictionary_tokens = labeled.iter().map(TagAssignment::labeled_count).sum();
        let (labels, stats) = if cfg.expand {
            expand_corpus(&labeled, corpus, &cfg.relations)?
        } else {
            (labeled, Default::default())
        };

        let trainer = TrainConfig {
            seed: cfg.trainer.seed.wrapping_add(state.iteration as u64),
            ..cfg.trainer.clone()
        };
        let trained = train_features(&types, &features, &labels, &trainer)?;
        if trained.model.trained_count() == 0 {
            return Err(Error::TrainingAborted(format!(
                "iteration {iteration}: no entity type has both positive and unlabeled tokens"
            )));
        }
        let predictions = predict_features(&trained.model, corpus, &features, trainer.tau);
        let harvest = harvest_entities(corpus, &predictions, &gaz, cfg.k, cfg.max_phrase_len);

        let mut next = gaz.clone();
        let frequencies: HashMap<(Phrase, EntityType), usize> = harvest
            .entities
            .iter()
            .map(|c| ((c.phrase.clone(), c.entity_type.clone()), c.frequency))
            .collect();
        let batch = next.add_batch(
            harvest
                .entities
                .iter()
                .map(|c| (c.phrase.clone(), c.entity_type.clone())),
        );
        let harvested: Vec<HarvestRecord> = batch
            .added
            .iter()
            .map(|(phrase, ty)| HarvestRecord {
                iteration,
                phrase: phrase_to_string(phrase),
                entity_type: ty.to_string(),
                frequency: frequencies[&(phrase.clone(), ty.clone())],
            })
            .collect();

        let report = IterationReport {
            iteration,
            dictionary_tokens,
            expanded_tokens: stats.expanded,
            expansion_conflicts: stats.type_conflicts,
            predicted_tokens: predictions.iter().map(TagAssignment::labeled_count).sum(),
            risk_traces: trained.risk_traces,
            skipped_types: trained.skipped,
            harvested: harvested.clone(),
            cross_type_excluded: harvest.cross_type.len(),
            batch_conflicts: batch.conflicts.len(),
        };
        log::info!(
            "iteration {iteration}: {} dictionary + {} expanded tokens, {} predicted, {} harvested",
            report.dictionary_tokens,
            report.expanded_tokens,
            report.predicted_tokens,
            harvested.len()
        );

        state.iteration = iteration;
        state.converged = harvested.is_empty();
        state.harvest_log.extend(harvested);
        state.snapshots.push(next);

        observer(&IterationArtifacts {
            report: &report,
            labels: &labels,
            predictions: &predictions,
            features: &features,
            model: &trained.model,
            gazetteer: state.gazetteer(),
        })?;
        state.reports.push(report);
        model = Some(trained.model);
    }
    Ok((state, model))
}
