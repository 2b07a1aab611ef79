use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pu_ner::bootstrap::continue_bootstrap;
use pu_ner::bootstrap::BootstrapState;
use pu_ner::config::Config;
use pu_ner::conllu::{read_conllu, write_conllu};
use pu_ner::corpus::{Document, TagAssignment, TypeSet};
use pu_ner::evaluation::token_prf;
use pu_ner::expansion::expand_corpus;
use pu_ner::gazetteer::{label_corpus, Gazetteer};
use pu_ner::gold::{align_to_corpus, read_gold, read_tag_records, write_tag_records};
use pu_ner::model::PuModel;
use pu_ner::risk::Loss;
use pu_ner::run_dir::{self, RunWriter};
use pu_ner::synth::{generate, SynthSpec};
use pu_ner::train::{predict, train, Objective};
use pu_ner::Error;

#[derive(Parser, Debug)]
#[command(
    name = "pu-ner",
    version,
    about = "Dictionary-bootstrapped NER with positive-unlabeled learning"
)]
struct Cli {
    /// JSON configuration file; missing keys take their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the effective configuration and exit
    #[arg(long)]
    show_config: bool,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Option<Command>,
}

/// Flags that override configuration values.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// Harvest threshold K
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Maximum bootstrap iterations I
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
    /// Class prior for every type without its own entry
    #[arg(long, global = true)]
    prior: Option<f64>,
    /// `mae` or `bce`
    #[arg(long, global = true, value_parser = parse_loss)]
    loss: Option<Loss>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    #[arg(long, global = true)]
    batch: Option<usize>,
    /// Trainer random seed
    #[arg(long, global = true)]
    train_seed: Option<u64>,
    /// `pu` or `pn`
    #[arg(long, global = true, value_parser = parse_objective)]
    objective: Option<Objective>,
}

fn parse_loss(s: &str) -> Result<Loss, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown loss `{s}` (mae, bce)"))
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown objective `{s}` (pu, pn)"))
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tag a corpus with a gazetteer, optionally expanding along dependencies
    Label {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        gazetteer: PathBuf,
        #[arg(long, overrides_with = "no_expand")]
        expand: bool,
        #[arg(long)]
        no_expand: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the label, expand, train, predict, harvest loop
    Bootstrap {
        #[arg(long)]
        corpus: PathBuf,
        /// Seed gazetteer
        #[arg(long)]
        seed: PathBuf,
        #[arg(long)]
        run_dir: PathBuf,
        /// Gold tags for per-iteration evaluation
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Continue a partial run in --run-dir
        #[arg(long)]
        resume: bool,
    },
    /// Train a model from tag records (labels count as positives)
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Per-type risk traces as JSON lines
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Tag a corpus with a trained model
    Predict {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Decision threshold (default from the configuration)
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Token-level precision, recall and F1 of predictions against gold
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Also write the report as JSON lines
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with gold tags and a seed gazetteer
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON generator spec; flags below override it
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        documents: Option<usize>,
        #[arg(long)]
        test_documents: Option<usize>,
        #[arg(long)]
        entity_rate: Option<f64>,
        #[arg(long)]
        compound_rate: Option<f64>,
        /// Fraction of each type's vocabulary put in seed.jsonl
        #[arg(long, default_value_t = 0.5)]
        coverage: f64,
    },
}

/// A failed command: message and process exit code.
struct Failure {
    message: String,
    code: u8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. }
            | Error::Stream(_)
            | Error::Parse { .. }
            | Error::UnknownType(_)
            | Error::InvalidTag(_)
            | Error::LengthMismatch { .. }
            | Error::DuplicateDocument(_)
            | Error::MissingDocument(_)
            | Error::InvalidSentence(_)
            | Error::EmptyPhrase
            | Error::PhraseConflict { .. }
            | Error::Regex { .. }
            | Error::Config(_)
            | Error::Json(_) => 2,
            _ => 1,
        };
        Failure {
            message: e.to_string(),
            code,
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Attaches the path to errors that do not already name it.
fn in_file<T>(path: &Path, r: pu_ner::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let named = matches!(e, Error::Io { .. });
        let mut f = Failure::from(e);
        if !named {
            f.message = format!("{}: {}", path.display(), f.message);
        }
        f
    })
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    in_file(
        path,
        File::open(path).map(BufReader::new).map_err(|e| pu_ner::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
    )
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_failure(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        message: format!("{}: {e}", path.display()),
        code: 2,
    }
}

fn flush(path: &Path, mut w: BufWriter<File>) -> CliResult<()> {
    w.flush().map_err(|e| io_failure(path, e))
}

fn load_corpus(path: &Path) -> CliResult<Vec<Document>> {
    let corpus = in_file(path, read_conllu(open(path)?))?;
    if corpus.is_empty() {
        return Err(Failure {
            message: format!("{}: no documents", path.display()),
            code: 2,
        });
    }
    Ok(corpus)
}

fn load_gazetteer(path: &Path, types: &TypeSet) -> CliResult<Gazetteer> {
    in_file(path, Gazetteer::read(open(path)?, types))
}

fn load_tags(path: &Path, corpus: &[Document], types: &TypeSet, gold: bool) -> CliResult<Vec<TagAssignment>> {
    let records = if gold {
        in_file(path, read_gold(open(path)?, types))?
    } else {
        in_file(path, read_tag_records(open(path)?, types))?
    };
    in_file(path, align_to_corpus(corpus, records))
}

fn write_tags(path: &Path, corpus: &[Document], tags: &[TagAssignment]) -> CliResult<()> {
    let mut w = create(path)?;
    in_file(path, write_tag_records(&mut w, corpus, tags, true))?;
    flush(path, w)
}

fn effective_config(cli: &Cli) -> CliResult<Config> {
    let mut cfg = match &cli.config {
        Some(path) => in_file(path, Config::load(path))?,
        None => Config::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.k {
        cfg.bootstrap.k = v;
    }
    if let Some(v) = o.max_iterations {
        cfg.bootstrap.max_iterations = v;
    }
    if let Some(v) = o.prior {
        cfg.train.prior = v;
    }
    if let Some(v) = o.loss {
        cfg.train.loss = v;
    }
    if let Some(v) = o.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = o.learning_rate {
        cfg.train.learning_rate = v;
    }
    if let Some(v) = o.batch {
        cfg.train.batch = v;
    }
    if let Some(v) = o.train_seed {
        cfg.train.seed = v;
    }
    if let Some(v) = o.objective {
        cfg.train.objective = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn label(cfg: &Config, corpus: &Path, gazetteer: &Path, expand: bool, out: &Path) -> CliResult<()> {
    let types = cfg.type_set()?;
    let docs = load_corpus(corpus)?;
    let gaz = load_gazetteer(gazetteer, &types)?;
    let mut tags = label_corpus(&docs, &gaz);
    if expand {
        let (expanded, stats) = expand_corpus(&tags, &docs, &cfg.relations())?;
        log::info!(
            "expanded {} tokens, {} type conflicts",
            stats.expanded,
            stats.type_conflicts
        );
        tags = expanded;
    }
    write_tags(out, &docs, &tags)
}

fn bootstrap(
    cfg: &Config,
    corpus: &Path,
    seed: &Path,
    root: &Path,
    gold: Option<&Path>,
    resume: bool,
) -> CliResult<()> {
    let types = cfg.type_set()?;
    let docs = load_corpus(corpus)?;
    let gold_tags = gold.map(|g| load_tags(g, &docs, &types, true)).transpose()?;
    let config_json = cfg.to_json();
    let state_path = root.join(run_dir::STATE);

    let (mut writer, state) = if resume && state_path.exists() {
        let recorded = root.join(run_dir::CONFIG);
        let mut previous = in_file(&recorded, Config::load(&recorded))?;
        // only the iteration limit may change between invocations
        previous.bootstrap.max_iterations = cfg.bootstrap.max_iterations;
        if previous != *cfg {
            return Err(Failure {
                message: format!(
                    "{}: configuration differs from the one recorded in the run",
                    recorded.display()
                ),
                code: 2,
            });
        }
        fs::write(&recorded, &config_json).map_err(|e| io_failure(&recorded, e))?;
        RunWriter::resume(root, &docs, &types, gold_tags.as_deref())?
    } else {
        if state_path.exists() {
            return Err(Failure {
                message: format!("{}: run directory already holds a run (use --resume)", root.display()),
                code: 2,
            });
        }
        let seed_gaz = load_gazetteer(seed, &types)?;
        if seed_gaz.is_empty() {
            return Err(Failure {
                message: format!("{}: seed gazetteer is empty", seed.display()),
                code: 2,
            });
        }
        let writer = RunWriter::create(root, &docs, &seed_gaz, &config_json, gold_tags.as_deref())?;
        (writer, BootstrapState::new(seed_gaz))
    };

    let (state, model) = continue_bootstrap(&docs, state, &cfg.bootstrap_config(), |art| {
        writer.record_iteration(art)
    })?;
    writer.finish(&state, model.as_ref())?;
    eprintln!(
        "{} iterations, {}, {} phrases harvested; results in {}",
        state.iteration,
        if state.converged {
            "converged"
        } else {
            "iteration limit reached"
        },
        state.harvest_log.len(),
        root.display()
    );
    Ok(())
}

fn train_cmd(cfg: &Config, corpus: &Path, labels: &Path, model: &Path, trace: Option<&Path>) -> CliResult<()> {
    let types = cfg.type_set()?;
    let docs = load_corpus(corpus)?;
    let tags = load_tags(labels, &docs, &types, false)?;
    let outcome = train(&types, &docs, &tags, &cfg.train)?;
    for ty in &outcome.skipped {
        eprintln!("warning: no classifier trained for {ty}");
    }
    if outcome.model.trained_count() == 0 {
        return Err(Failure {
            message: format!("{}: no entity type has labeled tokens", labels.display()),
            code: 1,
        });
    }
    in_file(model, outcome.model.save(model))?;
    if let Some(path) = trace {
        let mut w = create(path)?;
        for (ty, risks) in &outcome.risk_traces {
            let line = serde_json::json!({"type": ty.name(), "epoch_risk": risks});
            writeln!(w, "{line}").map_err(|e| io_failure(path, e))?;
        }
        flush(path, w)?;
    }
    Ok(())
}

fn predict_cmd(cfg: &Config, corpus: &Path, model: &Path, tau: Option<f64>, out: &Path) -> CliResult<()> {
    let tau = tau.unwrap_or(cfg.train.tau);
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Failure {
            message: format!("--tau must be in (0, 1), got {tau}"),
            code: 2,
        });
    }
    let docs = load_corpus(corpus)?;
    let m = in_file(model, PuModel::load(model))?;
    let tags = predict(&m, &docs, tau);
    write_tags(out, &docs, &tags)
}

fn eval(cfg: &Config, gold: &Path, pred: &Path, out: Option<&Path>) -> CliResult<()> {
    let types = cfg.type_set()?;
    let gold_records = in_file(gold, read_gold(open(gold)?, &types))?;
    let docs: Vec<Document> = gold_records.iter().map(|(d, _)| d.clone()).collect();
    let gold_tags: Vec<TagAssignment> = gold_records.into_iter().map(|(_, t)| t).collect();
    let pred_tags = load_tags(pred, &docs, &types, false)?;
    let report = in_file(pred, token_prf(&gold_tags, &pred_tags, &types))?;
    print!("{}", report.table());
    if let Some(path) = out {
        let mut w = create(path)?;
        in_file(path, report.write_records(&mut w))?;
        flush(path, w)?;
    }
    Ok(())
}

fn write_split(dir: &Path, corpus_name: &str, gold_name: &str, split: &pu_ner::synth::Split) -> CliResult<()> {
    let path = dir.join(corpus_name);
    let mut w = create(&path)?;
    write_conllu(&mut w, &split.documents).map_err(|e| io_failure(&path, e))?;
    flush(&path, w)?;
    let path = dir.join(gold_name);
    let mut w = create(&path)?;
    in_file(&path, write_tag_records(&mut w, &split.documents, &split.gold, false))?;
    flush(&path, w)
}

#[allow(clippy::too_many_arguments)]
fn synth(
    out_dir: &Path,
    seed: u64,
    spec_path: Option<&Path>,
    documents: Option<usize>,
    test_documents: Option<usize>,
    entity_rate: Option<f64>,
    compound_rate: Option<f64>,
    coverage: f64,
) -> CliResult<()> {
    let mut spec = match spec_path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
            in_file(p, serde_json::from_str::<SynthSpec>(&text).map_err(Error::from))?
        }
        None => SynthSpec::default(),
    };
    spec.seed = seed;
    if let Some(v) = documents {
        spec.documents = v;
    }
    if let Some(v) = test_documents {
        spec.test_documents = v;
    }
    if let Some(v) = entity_rate {
        spec.entity_rate = v;
    }
    if let Some(v) = compound_rate {
        spec.compound_rate = v;
    }
    if !(0.0..=1.0).contains(&coverage) {
        return Err(Failure {
            message: format!("--coverage must be in [0, 1], got {coverage}"),
            code: 2,
        });
    }
    let data = generate(&spec)?;
    fs::create_dir_all(out_dir).map_err(|e| io_failure(out_dir, e))?;
    write_split(out_dir, "corpus.conllu", "gold.jsonl", &data.train)?;
    if spec.test_documents > 0 {
        write_split(out_dir, "test.conllu", "test_gold.jsonl", &data.test)?;
    }
    let path = out_dir.join("vocabulary.jsonl");
    in_file(&path, data.vocabulary.gazetteer().save(&path))?;
    let path = out_dir.join("seed.jsonl");
    in_file(&path, data.vocabulary.seed(coverage).save(&path))?;

    // a configuration with the exact priors of the generated corpus; a prior
    // of zero (type absent) falls back to the default
    let mut cfg = Config::default();
    cfg.train.priors = data.train.priors.into_iter().filter(|(_, p)| *p > 0.0).collect();
    let path = out_dir.join("config.json");
    fs::write(&path, cfg.to_json()).map_err(|e| io_failure(&path, e))?;
    let path = out_dir.join("spec.json");
    let spec_json = serde_json::to_string_pretty(&spec).map_err(|e| Failure::from(Error::from(e)))?;
    fs::write(&path, spec_json + "\n").map_err(|e| io_failure(&path, e))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                message: format!("--threads {n}: {e}"),
                code: 2,
            })?;
    }
    let cfg = effective_config(&cli)?;
    if cli.show_config {
        print!("{}", cfg.to_json());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Failure {
            message: "no command given (see --help)".into(),
            code: 2,
        });
    };
    match command {
        Command::Label {
            corpus,
            gazetteer,
            expand,
            no_expand,
            out,
        } => {
            let expand = if expand || no_expand {
                expand
            } else {
                cfg.expansion.enabled
            };
            label(&cfg, &corpus, &gazetteer, expand, &out)
        }
        Command::Bootstrap {
            corpus,
            seed,
            run_dir,
            gold,
            resume,
        } => bootstrap(&cfg, &corpus, &seed, &run_dir, gold.as_deref(), resume),
        Command::Train {
            corpus,
            labels,
            model,
            trace,
        } => train_cmd(&cfg, &corpus, &labels, &model, trace.as_deref()),
        Command::Predict {
            corpus,
            model,
            tau,
            out,
        } => predict_cmd(&cfg, &corpus, &model, tau, &out),
        Command::Eval { gold, pred, out } => eval(&cfg, &gold, &pred, out.as_deref()),
        Command::Synth {
            out_dir,
            seed,
            spec,
            documents,
            test_documents,
            entity_rate,
            compound_rate,
            coverage,
        } => synth(
            &out_dir,
            seed,
            spec.as_deref(),
            documents,
            test_documents,
            entity_rate,
            compound_rate,
            coverage,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
