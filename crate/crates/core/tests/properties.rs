use std::collections::BTreeMap;
use std::path::Path;

use proptest::prelude::*;

use pu_ner::bootstrap::{run_bootstrap, BootstrapConfig};
use pu_ner::conllu::{read_conllu, write_conllu};
use pu_ner::corpus::{Document, IoTag, Sentence, TagAssignment, Token, TypeSet};
use pu_ner::evaluation::token_prf;
use pu_ner::gazetteer::{label_corpus, Gazetteer};
use pu_ner::risk::{pu_risk, Loss};
use pu_ner::synth::{generate, SynthSpec, Synthetic};
use pu_ner::train::{predict, train, TrainConfig};

fn small_synth(seed: u64, documents: usize) -> Synthetic {
    generate(&SynthSpec {
        documents,
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

fn bootstrap_config(data: &Synthetic, k: usize, max_iterations: usize) -> BootstrapConfig {
    BootstrapConfig {
        k,
        max_iterations,
        trainer: TrainConfig {
            priors: data.train.priors.clone(),
            ..TrainConfig::default()
        },
        ..BootstrapConfig::default()
    }
}

#[test]
fn shipped_seed_gazetteer_loads() {
    let types = TypeSet::default();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/seed_example.jsonl");
    let gaz = Gazetteer::load_seed(path, &types).unwrap();
    let count = |name: &str| gaz.entries(&types.get(name).unwrap()).map_or(0, |e| e.len());
    assert_eq!((count("Product"), count("Component"), count("Brand")), (6, 60, 13));
    assert_eq!(gaz.regex_patterns(&types.get("Attribute").unwrap()).len(), 8);
}

#[test]
fn bootstrap_snapshots_only_grow() {
    let data = small_synth(3, 200);
    let seed = data.vocabulary.seed(0.25);
    let result = run_bootstrap(&data.train.documents, &seed, &bootstrap_config(&data, 3, 4)).unwrap();
    let state = &result.state;
    assert_eq!(state.snapshots.len(), state.iteration + 1);
    assert!(state.iteration >= 1 && state.iteration <= 4);
    for rec in &state.harvest_log {
        let phrase: Vec<String> = rec.phrase.split(' ').map(str::to_string).collect();
        assert!(!state.snapshots[rec.iteration - 1].contains(&phrase), "{rec:?}");
        assert!(state.snapshots[rec.iteration].contains(&phrase), "{rec:?}");
        assert!(rec.frequency > 3);
    }
    for pair in state.snapshots.windows(2) {
        assert!(pair[0].phrase_count() <= pair[1].phrase_count());
    }
    let covered = |g: &Gazetteer| data.vocabulary.coverage(g, None);
    assert!(covered(&result.gazetteer) > covered(&seed));
}

#[test]
fn full_seed_converges_after_one_iteration() {
    let data = small_synth(4, 100);
    let cfg = bootstrap_config(&data, 1000, 10);
    let result = run_bootstrap(&data.train.documents, &data.vocabulary.gazetteer(), &cfg).unwrap();
    assert_eq!(result.state.iteration, 1);
    assert!(result.state.converged);
    assert!(result.state.harvest_log.is_empty());
}

#[test]
fn single_iteration_limit() {
    let data = small_synth(5, 100);
    let result = run_bootstrap(
        &data.train.documents,
        &data.vocabulary.seed(0.5),
        &bootstrap_config(&data, 3, 1),
    )
    .unwrap();
    assert_eq!(result.state.iteration, 1);
    assert_eq!(result.state.snapshots.len(), 2);
}

#[test]
fn higher_threshold_predicts_fewer_entities() {
    let data = small_synth(6, 100);
    let types = data.vocabulary.types().clone();
    let labels = label_corpus(&data.train.documents, &data.vocabulary.seed(0.5));
    let cfg = TrainConfig {
        priors: data.train.priors.clone(),
        ..TrainConfig::default()
    };
    let model = train(&types, &data.train.documents, &labels, &cfg).unwrap().model;
    let count = |tau: f64| {
        predict(&model, &data.train.documents, tau)
            .iter()
            .map(TagAssignment::labeled_count)
            .sum::<usize>()
    };
    let counts: Vec<usize> = [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|&t| count(t)).collect();
    assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
}

#[test]
fn conllu_round_trip() {
    let data = small_synth(7, 20);
    let mut buf = Vec::new();
    write_conllu(&mut buf, &data.train.documents).unwrap();
    let back = read_conllu(buf.as_slice()).unwrap();
    assert_eq!(back, data.train.documents);
}

fn arb_tags(types: TypeSet, len: usize) -> impl Strategy<Value = Vec<IoTag>> {
    let n = types.len();
    prop::collection::vec(0..=n, len).prop_map(move |ix| {
        ix.into_iter()
            .map(|i| {
                if i == n {
                    IoTag::O
                } else {
                    IoTag::I(types.as_slice()[i].clone())
                }
            })
            .collect()
    })
}

fn arb_docs() -> impl Strategy<Value = Vec<(Vec<IoTag>, Vec<IoTag>)>> {
    prop::collection::vec(
        (1usize..15).prop_flat_map(|len| (arb_tags(TypeSet::default(), len), arb_tags(TypeSet::default(), len))),
        1..6,
    )
}

fn assignments(docs: &[(Vec<IoTag>, Vec<IoTag>)]) -> (Vec<TagAssignment>, Vec<TagAssignment>) {
    docs.iter()
        .enumerate()
        .map(|(i, (g, p))| {
            (
                TagAssignment::gold(format!("d{i}"), g.clone()),
                TagAssignment::gold(format!("d{i}"), p.clone()),
            )
        })
        .unzip()
}

proptest! {
    #[test]
    fn micro_counts_are_sums_of_type_counts(docs in arb_docs()) {
        let types = TypeSet::default();
        let (gold, pred) = assignments(&docs);
        let report = token_prf(&gold, &pred, &types).unwrap();
        let mut sum = BTreeMap::new();
        for (m, c) in &report.per_type {
            prop_assert!((0.0..=1.0).contains(&m.f1));
            *sum.entry("tp").or_insert(0) += c.tp;
            *sum.entry("fp").or_insert(0) += c.fp;
            *sum.entry("fn").or_insert(0) += c.fn_;
        }
        prop_assert_eq!(sum["tp"], report.micro_counts.tp);
        prop_assert_eq!(sum["fp"], report.micro_counts.fp);
        prop_assert_eq!(sum["fn"], report.micro_counts.fn_);
    }

    #[test]
    fn metrics_ignore_document_order(docs in arb_docs()) {
        let types = TypeSet::default();
        let (gold, pred) = assignments(&docs);
        let a = token_prf(&gold, &pred, &types).unwrap();
        let (mut rg, mut rp) = (gold.clone(), pred.clone());
        rg.reverse();
        rp.reverse();
        let b = token_prf(&rg, &rp, &types).unwrap();
        prop_assert_eq!(a.micro_counts, b.micro_counts);
        prop_assert!((a.macro_avg.f1 - b.macro_avg.f1).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_scores_one(docs in arb_docs()) {
        let types = TypeSet::default();
        let (gold, _) = assignments(&docs);
        let report = token_prf(&gold, &gold, &types).unwrap();
        prop_assert_eq!(report.micro_counts.fp + report.micro_counts.fn_, 0);
    }

    #[test]
    fn risk_is_non_negative_and_bounded_by_pn(
        pos in prop::collection::vec(1e-6f64..1.0 - 1e-6, 1..30),
        unl in prop::collection::vec(1e-6f64..1.0 - 1e-6, 1..60),
        prior in 0.0f64..0.99,
        bce in any::<bool>(),
    ) {
        let loss = if bce { Loss::Bce } else { Loss::Mae };
        let r = pu_risk(&pos, &unl, prior, loss).unwrap();
        let pn = pu_risk(&pos, &unl, 0.0, loss).unwrap();
        prop_assert!(r.risk >= 0.0);
        prop_assert!(r.risk >= r.positive_term);
        prop_assert!(r.risk <= pn.risk + 1e-12);
    }

    #[test]
    fn only_tokens_inside_phrase_occurrences_are_labeled(words in prop::collection::vec(prop::sample::select(vec!["hard", "drive", "dock", "usb", "cable"]), 1..20)) {
        let types = TypeSet::default();
        let comp = types.get("Component").unwrap();
        let mut gaz = Gazetteer::new(types);
        gaz.add_entity(&["hard", "drive"], &comp).unwrap();
        gaz.add_entity(&["hard", "drive", "dock"], &comp).unwrap();
        gaz.add_entity(&["usb", "cable"], &comp).unwrap();
        let tokens: Vec<Token> = words.iter().enumerate().map(|(i, w)| Token::new(i, *w, None, "dep")).collect();
        let doc = Document::new("d", vec![Sentence::new(tokens).unwrap()]);
        let tags = label_corpus(std::slice::from_ref(&doc), &gaz).remove(0);
        for i in 0..words.len() {
            let inside_match = words[i..].starts_with(&["hard", "drive"])
                || (i >= 1 && words[i - 1..].starts_with(&["hard", "drive"]))
                || (i >= 2 && words[i - 2..].starts_with(&["hard", "drive", "dock"]))
                || words[i..].starts_with(&["usb", "cable"])
                || (i >= 1 && words[i - 1..].starts_with(&["usb", "cable"]));
            if !inside_match {
                prop_assert!(tags.tag(i).is_outside());
            }
        }
    }
}
