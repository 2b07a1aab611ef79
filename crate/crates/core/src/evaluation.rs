//! Token-level precision, recall and F1 per type, with micro and macro
//! averages over entity types (`O` is never a class of its own).

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::corpus::{Document, EntityType, IoTag, TagAssignment, TypeSet};
use crate::error::{Error, Result};
use crate::gold::{align_to_corpus, read_tag_records};
use crate::run_dir;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    #[serde(rename = "type")]
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// A ratio had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

fn ratio(num: usize, den: usize, zero_division: &mut bool) -> f64 {
    if den == 0 {
        *zero_division = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    fn from_counts(label: &str, c: Counts) -> Self {
        let mut zero_division = false;
        let precision = ratio(c.tp, c.tp + c.fp, &mut zero_division);
        let recall = ratio(c.tp, c.tp + c.fn_, &mut zero_division);
        let f1 = if precision + recall == 0.0 {
            zero_division = true;
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            label: label.to_string(),
            precision,
            recall,
            f1,
            support: c.support(),
            zero_division,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub per_type: Vec<(Metrics, Counts)>,
    pub micro: Metrics,
    pub micro_counts: Counts,
    /// Unweighted mean over types that occur in gold or predictions.
    pub macro_avg: Metrics,
}

impl Report {
    pub fn get(&self, ty: &EntityType) -> Option<&Metrics> {
        self.per_type.iter().map(|(m, _)| m).find(|m| m.label == ty.name())
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>9} {:>9} {:>9} {:>9}",
            "type", "precision", "recall", "f1", "support"
        );
        let row = |out: &mut String, m: &Metrics| {
            let flag = if m.zero_division { " *" } else { "" };
            let _ = writeln!(
                out,
                "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>9}{flag}",
                m.label, m.precision, m.recall, m.f1, m.support
            );
        };
        for (m, _) in &self.per_type {
            row(&mut out, m);
        }
        row(&mut out, &self.micro);
        row(&mut out, &self.macro_avg);
        if self.per_type.iter().any(|(m, _)| m.zero_division) || self.micro.zero_division {
            let _ = writeln!(out, "* zero denominator reported as 0");
        }
        out
    }

    pub fn write_records<W: Write>(&self, mut out: W) -> Result<()> {
        for m in self
            .per_type
            .iter()
            .map(|(m, _)| m)
            .chain([&self.micro, &self.macro_avg])
        {
            serde_json::to_writer(&mut out, m)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn token_prf(gold: &[TagAssignment], pred: &[TagAssignment], types: &TypeSet) -> Result<Report> {
    if gold.len() != pred.len() {
        return Err(Error::Config(format!(
            "{} gold documents but {} predicted documents",
            gold.len(),
            pred.len()
        )));
    }
    let mut counts = vec![Counts::default(); types.len()];
    for (g, p) in gold.iter().zip(pred) {
        if g.doc_id() != p.doc_id() {
            return Err(Error::MissingDocument(g.doc_id().to_string()));
        }
        if g.len() != p.len() {
            return Err(Error::LengthMismatch {
                doc_id: g.doc_id().to_string(),
                expected: g.len(),
                found: p.len(),
            });
        }
        for (gt, pt) in g.tags().iter().zip(p.tags()) {
            if gt == pt {
                if let IoTag::I(t) = gt {
                    counts[index(types, t)?].tp += 1;
                }
                continue;
            }
            if let IoTag::I(t) = gt {
                counts[index(types, t)?].fn_ += 1;
            }
            if let IoTag::I(t) = pt {
                counts[index(types, t)?].fp += 1;
            }
        }
    }

    let mut micro_counts = Counts::default();
    let mut per_type = Vec::with_capacity(types.len());
    for (ty, c) in types.iter().zip(&counts) {
        micro_counts += *c;
        per_type.push((Metrics::from_counts(ty.name(), *c), *c));
    }
    let active: Vec<&Metrics> = per_type
        .iter()
        .filter(|(_, c)| c.tp + c.fp + c.fn_ > 0)
        .map(|(m, _)| m)
        .collect();
    let macro_avg = if active.is_empty() {
        Metrics {
            label: "macro".into(),
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            support: 0,
            zero_division: true,
        }
    } else {
        let n = active.len() as f64;
        Metrics {
            label: "macro".into(),
            precision: active.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: active.iter().map(|m| m.recall).sum::<f64>() / n,
            f1: active.iter().map(|m| m.f1).sum::<f64>() / n,
            support: micro_counts.support(),
            zero_division: active.iter().any(|m| m.zero_division),
        }
    };
    Ok(Report {
        per_type,
        micro: Metrics::from_counts("micro", micro_counts),
        micro_counts,
        macro_avg,
    })
}

fn index(types: &TypeSet, t: &EntityType) -> Result<usize> {
    types.position(t).ok_or_else(|| Error::UnknownType(t.to_string()))
}

/// Recall per type (and micro) for each iteration, in iteration order.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallCurve {
    pub types: Vec<EntityType>,
    /// `series[t][i]`: recall of type `t` after iteration `i + 1`.
    pub series: Vec<Vec<f64>>,
    pub micro: Vec<f64>,
}

impl RecallCurve {
    pub fn iterations(&self) -> usize {
        self.micro.len()
    }

    pub fn for_type(&self, ty: &EntityType) -> Option<&[f64]> {
        self.types
            .iter()
            .position(|t| t == ty)
            .map(|i| self.series[i].as_slice())
    }

    pub fn table(&self) -> String {
        let mut out = String::from("iteration");
        for t in &self.types {
            let _ = write!(out, "\t{t}");
        }
        out.push_str("\tmicro\n");
        for i in 0..self.iterations() {
            let _ = write!(out, "{}", i + 1);
            for s in &self.series {
                let _ = write!(out, "\t{:.4}", s[i]);
            }
            let _ = writeln!(out, "\t{:.4}", self.micro[i]);
        }
        out
    }
}

pub fn recall_curve(
    per_iteration: &[Vec<TagAssignment>],
    gold: &[TagAssignment],
    types: &TypeSet,
) -> Result<RecallCurve> {
    if per_iteration.is_empty() {
        return Err(Error::Empty("recall curve needs at least one iteration"));
    }
    let mut series = vec![Vec::with_capacity(per_iteration.len()); types.len()];
    let mut micro = Vec::with_capacity(per_iteration.len());
    for pred in per_iteration {
        let report = token_prf(gold, pred, types)?;
        for (s, (m, _)) in series.iter_mut().zip(&report.per_type) {
            s.push(m.recall);
        }
        micro.push(report.micro.recall);
    }
    Ok(RecallCurve {
        types: types.as_slice().to_vec(),
        series,
        micro,
    })
}

/// Recall curve from the prediction files of a run directory, iterations
/// `1..=iterations`. Gold is aligned to `corpus` by document id.
pub fn recall_curve_from_run(
    root: &Path,
    iterations: usize,
    corpus: &[Document],
    gold: &[TagAssignment],
    types: &TypeSet,
) -> Result<RecallCurve> {
    let mut per_iteration = Vec::with_capacity(iterations);
    for i in 1..=iterations {
        let path = run_dir::predictions_path(root, i);
        let file = match std::fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingIteration(i)),
            Err(e) => return Err(Error::io(path, e)),
        };
        let records = read_tag_records(std::io::BufReader::new(file), types)?;
        per_iteration.push(align_to_corpus(corpus, records)?);
    }
    recall_curve(&per_iteration, gold, types)
}
