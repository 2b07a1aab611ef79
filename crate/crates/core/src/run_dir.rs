//! Layout and writers for bootstrap run directories.
//!
//! ```text
//! <root>/
//!   config.json              effective configuration
//!   seed.jsonl               gazetteer snapshot 0
//!   iter-01/
//!     gazetteer.jsonl        snapshot after iteration 1
//!     labels.jsonl           dictionary + expansion labels used for training
//!     predictions.jsonl
//!     harvest.jsonl          entities added in this iteration
//!     risk.jsonl             per-type risk trace
//!     model.txt
//!     eval.jsonl, eval.txt   only with gold annotations
//!   iter-02/ ...
//!   harvest_log.jsonl        all harvested entities, in order
//!   state.json               progress marker used for resuming
//!   final_gazetteer.jsonl
//!   final_model.txt
//!   recall_curve.tsv         only with gold annotations
//!   report.txt
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bootstrap::{BootstrapState, HarvestRecord, IterationArtifacts};
use crate::corpus::{Document, TagAssignment, TypeSet};
use crate::error::{Error, Result};
use crate::evaluation::{recall_curve, token_prf, Report};
use crate::gazetteer::Gazetteer;
use crate::gold::write_tag_records;

pub const CONFIG: &str = "config.json";
pub const SEED: &str = "seed.jsonl";
pub const HARVEST_LOG: &str = "harvest_log.jsonl";
pub const STATE: &str = "state.json";
pub const FINAL_GAZETTEER: &str = "final_gazetteer.jsonl";
pub const FINAL_MODEL: &str = "final_model.txt";
pub const RECALL_CURVE: &str = "recall_curve.tsv";
pub const REPORT: &str = "report.txt";

pub fn iteration_dir(root: &Path, iteration: usize) -> PathBuf {
    root.join(format!("iter-{iteration:02}"))
}

pub fn predictions_path(root: &Path, iteration: usize) -> PathBuf {
    iteration_dir(root, iteration).join("predictions.jsonl")
}

pub fn snapshot_path(root: &Path, iteration: usize) -> PathBuf {
    if iteration == 0 {
        root.join(SEED)
    } else {
        iteration_dir(root, iteration).join("gazetteer.jsonl")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_string(path: &Path, s: &str) -> Result<()> {
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunState {
    pub iteration: usize,
    pub converged: bool,
    /// Gazetteer version of every snapshot, 0..=iteration.
    pub versions: Vec<u64>,
}

#[derive(Serialize)]
struct RiskRecord<'a> {
    #[serde(rename = "type")]
    entity_type: &'a str,
    epoch_risk: &'a [f64],
}

/// Writes per-iteration artifacts as a bootstrap run progresses.
pub struct RunWriter<'a> {
    root: PathBuf,
    corpus: &'a [Document],
    types: TypeSet,
    gold: Option<&'a [TagAssignment]>,
    versions: Vec<u64>,
    reports: Vec<Report>,
    predictions: Vec<Vec<TagAssignment>>,
}

impl<'a> RunWriter<'a> {
    /// Prepares `root` for a fresh run: writes the config and snapshot 0.
    pub fn create(
        root: &Path,
        corpus: &'a [Document],
        seed: &Gazetteer,
        config_json: &str,
        gold: Option<&'a [TagAssignment]>,
    ) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        write_string(&root.join(CONFIG), config_json)?;
        seed.save(snapshot_path(root, 0))?;
        write_string(&root.join(HARVEST_LOG), "")?;
        let writer = RunWriter {
            root: root.to_path_buf(),
            corpus,
            types: seed.types().clone(),
            gold,
            versions: vec![seed.version()],
            reports: Vec::new(),
            predictions: Vec::new(),
        };
        writer.write_state(0, false)?;
        Ok(writer)
    }

    /// Reopens a run directory for resuming, returning the writer and the
    /// bootstrap state recorded there.
    pub fn resume(
        root: &Path,
        corpus: &'a [Document],
        types: &TypeSet,
        gold: Option<&'a [TagAssignment]>,
    ) -> Result<(Self, BootstrapState)> {
        let state = load_state(root, types)?;
        let run_state = read_run_state(root)?;
        let mut writer = RunWriter {
            root: root.to_path_buf(),
            corpus,
            types: types.clone(),
            gold,
            versions: run_state.versions,
            reports: Vec::new(),
            predictions: Vec::new(),
        };
        if let Some(gold) = gold {
            for i in 1..=state.iteration {
                let path = predictions_path(root, i);
                let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
                let records = crate::gold::read_tag_records(std::io::BufReader::new(file), types)?;
                let pred = crate::gold::align_to_corpus(corpus, records)?;
                writer.reports.push(token_prf(gold, &pred, types)?);
                writer.predictions.push(pred);
            }
        }
        Ok((writer, state))
    }

    fn write_state(&self, iteration: usize, converged: bool) -> Result<()> {
        let state = RunState {
            iteration,
            converged,
            versions: self.versions.clone(),
        };
        write_string(&self.root.join(STATE), &serde_json::to_string_pretty(&state)?)
    }

    pub fn record_iteration(&mut self, art: &IterationArtifacts<'_>) -> Result<()> {
        let i = art.report.iteration;
        let dir = iteration_dir(&self.root, i);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

        art.gazetteer.save(dir.join("gazetteer.jsonl"))?;
        let path = dir.join("labels.jsonl");
        let mut w = create(&path)?;
        write_tag_records(&mut w, self.corpus, art.labels, true)?;
        finish(&path, w)?;
        let path = dir.join("predictions.jsonl");
        let mut w = create(&path)?;
        write_tag_records(&mut w, self.corpus, art.predictions, true)?;
        finish(&path, w)?;
        write_jsonl(&dir.join("harvest.jsonl"), &art.report.harvested)?;
        let risks: Vec<RiskRecord<'_>> = art
            .report
            .risk_traces
            .iter()
            .map(|(t, r)| RiskRecord {
                entity_type: t.name(),
                epoch_risk: r,
            })
            .collect();
        write_jsonl(&dir.join("risk.jsonl"), &risks)?;
        art.model.save(dir.join("model.txt"))?;

        if let Some(gold) = self.gold {
            let report = token_prf(gold, art.predictions, &self.types)?;
            let path = dir.join("eval.jsonl");
            let mut w = create(&path)?;
            report.write_records(&mut w)?;
            finish(&path, w)?;
            write_string(&dir.join("eval.txt"), &report.table())?;
            self.reports.push(report);
            self.predictions.push(art.predictions.to_vec());
        }

        let log_path = self.root.join(HARVEST_LOG);
        let mut log = fs::OpenOptions::new()
            .append(true)
            .open(&log_path)
            .map_err(|e| Error::io(&log_path, e))?;
        for rec in &art.report.harvested {
            let line = serde_json::to_string(rec)?;
            writeln!(log, "{line}").map_err(|e| Error::io(&log_path, e))?;
        }

        self.versions.push(art.gazetteer.version());
        self.write_state(i, art.report.harvested.is_empty())
    }

    /// Writes the final gazetteer, model, recall curve and summary report.
    pub fn finish(&self, state: &BootstrapState, model: Option<&crate::model::PuModel>) -> Result<()> {
        state.gazetteer().save(self.root.join(FINAL_GAZETTEER))?;
        if let Some(model) = model {
            model.save(self.root.join(FINAL_MODEL))?;
        } else if state.iteration > 0 {
            let from = iteration_dir(&self.root, state.iteration).join("model.txt");
            let to = self.root.join(FINAL_MODEL);
            fs::copy(&from, &to).map_err(|e| Error::io(&from, e))?;
        }

        let mut report = String::new();
        report.push_str(&format!(
            "iterations: {}\nconverged: {}\nharvested entities: {}\n",
            state.iteration,
            state.converged,
            state.harvest_log.len()
        ));
        for ty in self.types.iter() {
            let n = state.gazetteer().entries(ty).map_or(0, |e| e.len());
            report.push_str(&format!("gazetteer {ty}: {n} phrases\n"));
        }
        if self.gold.is_some() && !self.predictions.is_empty() {
            let curve = recall_curve(&self.predictions, self.gold.unwrap_or_default(), &self.types)?;
            write_string(&self.root.join(RECALL_CURVE), &curve.table())?;
            let best = self
                .reports
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.micro.f1.total_cmp(&b.1.micro.f1).then(b.0.cmp(&a.0)))
                .expect("non-empty");
            report.push_str(&format!("\nbest iteration by micro F1: {}\n", best.0 + 1));
            report.push_str(&best.1.table());
            report.push_str("\nrecall per iteration:\n");
            report.push_str(&curve.table());
        }
        write_string(&self.root.join(REPORT), &report)
    }
}

pub fn read_run_state(root: &Path) -> Result<RunState> {
    let path = root.join(STATE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reconstructs the bootstrap state recorded in a run directory.
pub fn load_state(root: &Path, types: &TypeSet) -> Result<BootstrapState> {
    let run = read_run_state(root)?;
    if run.versions.len() != run.iteration + 1 {
        return Err(Error::Config(format!(
            "{}: {} versions recorded for {} iterations",
            root.join(STATE).display(),
            run.versions.len(),
            run.iteration
        )));
    }
    let mut snapshots = Vec::with_capacity(run.iteration + 1);
    for (i, &version) in run.versions.iter().enumerate() {
        snapshots.push(Gazetteer::load_seed(snapshot_path(root, i), types)?.with_version(version));
    }
    let log_path = root.join(HARVEST_LOG);
    let text = fs::read_to_string(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let harvest_log = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str::<HarvestRecord>)
        .filter(|r| r.as_ref().map_or(true, |r| r.iteration <= run.iteration))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(BootstrapState {
        iteration: run.iteration,
        snapshots,
        harvest_log,
        converged: run.converged,
        reports: Vec::new(),
    })
}
