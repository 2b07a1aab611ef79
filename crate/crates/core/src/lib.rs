//! Dictionary-bootstrapped named entity recognition.
//!
//! A seed gazetteer labels a dependency-parsed corpus, labels are expanded
//! along `compound` relations, per-type token classifiers are trained under a
//! non-negative positive-unlabeled risk, and frequent predicted entities are
//! harvested back into the gazetteer until nothing new is found.

pub mod bootstrap;
pub mod config;
pub mod conllu;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod expansion;
pub mod features;
pub mod gazetteer;
pub mod gold;
pub mod model;
pub mod risk;
pub mod run_dir;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
