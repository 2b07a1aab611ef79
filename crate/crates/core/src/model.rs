//! Per-type logistic scorers and their text persistence format.
//!
//! Format (line oriented, UTF-8):
//!
//! ```text
//! pu-ner-model 1
//! dimension 4194304
//! types Product Component Brand Attribute
//! classifier Component prior 0.01 bias -0.5 weights 2
//! 17 0.25
//! 4093 -1.5
//! end
//! ```
//!
//! `types` lists the full type set in tie-break order; one `classifier`
//! block follows for every trained type, each weight line being
//! `<feature id> <value>` in ascending id order. Reals are written in their
//! shortest round-trip decimal form, so save/load is exact.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::corpus::{EntityType, TypeSet};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, DIMENSION};
use crate::risk::{pu_risk_and_gradient, sigmoid, LinearScorer, Loss, PuRisk};

const MAGIC: &str = "pu-ner-model";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TypeClassifier {
    prior: f64,
    pub bias: f64,
    weights: HashMap<u32, f64>,
}

impl TypeClassifier {
    pub fn new(prior: f64) -> Result<Self> {
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::Config(format!("class prior {prior} outside (0, 1)")));
        }
        Ok(TypeClassifier {
            prior,
            bias: 0.0,
            weights: HashMap::new(),
        })
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn set_weight(&mut self, id: u32, value: f64) {
        if value == 0.0 {
            self.weights.remove(&id);
        } else {
            self.weights.insert(id, value);
        }
    }

    /// Non-zero weights in ascending id order.
    pub fn weights(&self) -> Vec<(u32, f64)> {
        let mut w: Vec<(u32, f64)> = self.weights.iter().map(|(&k, &v)| (k, v)).collect();
        w.sort_by_key(|&(k, _)| k);
        w
    }

    pub fn score(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.logit(x))
    }
}

impl LinearScorer for TypeClassifier {
    fn weight(&self, id: u32) -> f64 {
        self.weights.get(&id).copied().unwrap_or(0.0)
    }

    fn bias(&self) -> f64 {
        self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PuModel {
    types: TypeSet,
    classifiers: Vec<Option<TypeClassifier>>,
}

impl PuModel {
    pub fn new(types: TypeSet) -> Self {
        let n = types.len();
        PuModel {
            types,
            classifiers: vec![None; n],
        }
    }

    pub fn types(&self) -> &TypeSet {
        &self.types
    }

    pub fn insert(&mut self, ty: &EntityType, clf: TypeClassifier) -> Result<()> {
        let i = self
            .types
            .position(ty)
            .ok_or_else(|| Error::UnknownType(ty.to_string()))?;
        self.classifiers[i] = Some(clf);
        Ok(())
    }

    pub fn classifier(&self, ty: &EntityType) -> Option<&TypeClassifier> {
        self.types.position(ty).and_then(|i| self.classifiers[i].as_ref())
    }

    /// Trained types in type-set order.
    pub fn trained(&self) -> impl Iterator<Item = (&EntityType, &TypeClassifier)> {
        self.types
            .iter()
            .zip(&self.classifiers)
            .filter_map(|(t, c)| c.as_ref().map(|c| (t, c)))
    }

    pub fn trained_count(&self) -> usize {
        self.classifiers.iter().filter(|c| c.is_some()).count()
    }

    pub fn score(&self, ty: &EntityType, x: &FeatureVector) -> Result<f64> {
        self.classifier(ty)
            .map(|c| c.score(x))
            .ok_or_else(|| Error::UnknownType(ty.to_string()))
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{MAGIC} {FORMAT_VERSION}")?;
        writeln!(out, "dimension {DIMENSION}")?;
        writeln!(out, "types {}", self.types.names().join(" "))?;
        for (ty, clf) in self.trained() {
            let weights = clf.weights();
            writeln!(
                out,
                "classifier {ty} prior {} bias {} weights {}",
                clf.prior,
                clf.bias,
                weights.len()
            )?;
            for (id, v) in weights {
                writeln!(out, "{id} {v}")?;
            }
        }
        writeln!(out, "end")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().map(|(i, l)| l.map(|l| (i + 1, l)));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some(r) => Ok(r?),
                None => Err(Error::parse(
                    0,
                    format!("unexpected end of model file, expected {what}"),
                )),
            }
        };

        let (n, header) = next("header")?;
        if header.trim() != format!("{MAGIC} {FORMAT_VERSION}") {
            return Err(Error::parse(n, format!("not a model file (header `{header}`)")));
        }
        let (n, dim) = next("dimension")?;
        if dim.trim() != format!("dimension {DIMENSION}") {
            return Err(Error::parse(n, format!("unsupported `{dim}`")));
        }
        let (n, types_line) = next("types")?;
        let names: Vec<&str> = match types_line.strip_prefix("types ") {
            Some(rest) => rest.split_whitespace().collect(),
            None => return Err(Error::parse(n, "expected `types`")),
        };
        let types = TypeSet::new(&names).map_err(|e| Error::parse(n, e.to_string()))?;
        let mut model = PuModel::new(types);

        loop {
            let (n, line) = next("classifier or end")?;
            let line = line.trim();
            if line == "end" {
                break;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 8 || f[0] != "classifier" || f[2] != "prior" || f[4] != "bias" || f[6] != "weights" {
                return Err(Error::parse(n, format!("malformed classifier line `{line}`")));
            }
            let ty = model.types.get(f[1]).map_err(|e| Error::parse(n, e.to_string()))?;
            let real = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(n, format!("invalid number `{s}`")))
            };
            let mut clf = TypeClassifier::new(real(f[3])?).map_err(|e| Error::parse(n, e.to_string()))?;
            clf.bias = real(f[5])?;
            let count: usize = f[7]
                .parse()
                .map_err(|_| Error::parse(n, format!("invalid weight count `{}`", f[7])))?;
            for _ in 0..count {
                let (n, wl) = next("weight")?;
                let mut parts = wl.split_whitespace();
                let (Some(id), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(Error::parse(n, format!("malformed weight line `{wl}`")));
                };
                let id: u32 = id
                    .parse()
                    .ok()
                    .filter(|&id| id < DIMENSION)
                    .ok_or_else(|| Error::parse(n, format!("invalid feature id `{id}`")))?;
                let v = v
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(n, format!("invalid weight `{v}`")))?;
                clf.set_weight(id, v);
            }
            model.insert(&ty, clf)?;
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        PuModel::read(std::io::BufReader::new(file))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskGradient {
    pub risk: PuRisk,
    /// Gradient for every touched weight, ascending id order.
    pub weights: Vec<(u32, f64)>,
    pub bias: f64,
}

/// Analytic gradient of the PU risk of one type's classifier on a batch.
pub fn pu_risk_gradient(
    model: &PuModel,
    ty: &EntityType,
    pos_batch: &[&FeatureVector],
    unl_batch: &[&FeatureVector],
    prior: f64,
    loss: Loss,
) -> Result<RiskGradient> {
    let clf = model.classifier(ty).ok_or_else(|| Error::UnknownType(ty.to_string()))?;
    let mut grad: BTreeMap<u32, f64> = BTreeMap::new();
    let (risk, bias) = pu_risk_and_gradient(clf, pos_batch, unl_batch, prior, loss, |id, g| {
        *grad.entry(id).or_insert(0.0) += g;
    })?;
    Ok(RiskGradient {
        risk,
        weights: grad.into_iter().collect(),
        bias,
    })
}
