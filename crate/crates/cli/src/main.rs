//! `juriscat` command line: every stage of the pipeline, driven by one TOML
//! configuration file with command-line overrides.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use juriscat::anonymise::{anonymize, AnonymisationReport};
use juriscat::corpus::{corpus_stats, load_corpus, Corpus, Judgement};
use juriscat::entities::{extract_entities, ENTITY_FIELDS, UNKNOWN};
use juriscat::eval::{
    cross_validate, grid_search, model_grid, render_report, sample_fraction, vectorizer_grid, Scoring,
};
use juriscat::explain::{
    explain_document, export_tree_graph, extract_path, render_explanation, tree_class_names, DEFAULT_PERTURBATIONS,
    DEFAULT_TEMPLATE,
};
use juriscat::features::{encode_categoricals, fit_vectorizer};
use juriscat::forest::{Catalogs, Strategy, Variant};
use juriscat::lexica::Lexica;
use juriscat::pipeline::{fit_pipeline, full_matrix, prepare, prepare_judgement, FittedPipeline, PipelineConfig};
use juriscat::synth::{generate, SynthConfig};

const DEFAULT_FOLDS: usize = 10;

#[derive(Parser, Debug)]
#[command(name = "juriscat", version, about = "Explainable multi-label classification of legal judgements")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Judgement corpus (JSON lines).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Directory overriding the bundled lexica.
    #[arg(long, global = true)]
    lexica: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StrategyArg {
    Bts,
    Mts,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModelArg {
    Dt,
    Etc,
    Eetc,
    Rf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Anonymise, tokenise and detect entities; writes one prepared document per line.
    Preprocess,
    /// Replace personal references; writes the anonymised corpus.
    Anonymize,
    /// Detect the seven judicial entities; writes a TSV table.
    Entities,
    /// Build the full candidate feature matrix; writes a TSV table.
    Featurize,
    /// Fit the whole pipeline; writes the model as JSON.
    Train,
    /// Cross-validate and write the metrics report.
    Evaluate(EvaluateArgs),
    /// Cross-validated grid search over a parameter space.
    Gridsearch(GridArgs),
    /// Explain the decision for one document.
    Explain(ExplainArgs),
    /// Write one tree of a trained model as a Graphviz DOT graph.
    ExportTree(ExportArgs),
    /// Generate a synthetic labelled corpus.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Evaluate every strategy and model combination.
    #[arg(long)]
    all: bool,
    /// Append the mean fitting time per fold (makes the report run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Space {
    Vectorizer,
    Model,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ScoringArg {
    MicroF,
    MacroF,
    MicroPrecision,
    ExactMatch,
    Accuracy,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_enum, default_value = "vectorizer")]
    space: Space,
    /// Fraction of the corpus used for the search.
    #[arg(long, default_value_t = 0.2)]
    fraction: f64,
    #[arg(long, value_enum, default_value = "micro-f")]
    scoring: ScoringArg,
}

#[derive(Args, Debug)]
struct ExplainArgs {
    /// Trained model written by `train`.
    #[arg(long)]
    pipeline: PathBuf,
    /// Document id to explain.
    #[arg(long)]
    sample: String,
    #[arg(long, default_value_t = DEFAULT_PERTURBATIONS)]
    perturbations: usize,
    /// Template file with `{name}` placeholders.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Also write the first consulted tree as a DOT graph here.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    graph_depth: usize,
    /// Write the decision paths as JSON here.
    #[arg(long)]
    paths: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    pipeline: PathBuf,
    /// Forest index (one per class under BTS, a single one under MTS).
    #[arg(long, default_value_t = 0)]
    forest: usize,
    #[arg(long, default_value_t = 0)]
    tree: usize,
    #[arg(long, default_value_t = 4)]
    max_depth: usize,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    docs: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
}

/// Contents of the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    corpus: Option<PathBuf>,
    lexica: Option<PathBuf>,
    out: Option<PathBuf>,
    folds: Option<usize>,
    pipeline: PipelineConfig,
    synth: Option<SynthConfig>,
}

/// Error classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl From<juriscat::Error> for Failure {
    fn from(e: juriscat::Error) -> Self {
        match e {
            juriscat::Error::Config(_) => Failure::Usage(e.into()),
            other => Failure::Data(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

/// Settings after merging file and flags.
struct Settings {
    corpus: Option<PathBuf>,
    lexica: Option<PathBuf>,
    out: Option<PathBuf>,
    folds: usize,
    pipeline: PipelineConfig,
    synth: SynthConfig,
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_relative() {
        base.join(p)
    } else {
        p
    }
}

fn settings(cli: &Cli) -> Outcome<Settings> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            let mut parsed: FileConfig =
                toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
            // paths in the file are relative to the file
            let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            parsed.corpus = parsed.corpus.map(|p| resolve(&base, p));
            parsed.lexica = parsed.lexica.map(|p| resolve(&base, p));
            parsed.out = parsed.out.map(|p| resolve(&base, p));
            parsed
        }
        None => FileConfig::default(),
    };
    let mut pipeline = file.pipeline;
    let mut synth = file.synth.unwrap_or_default();
    if let Some(seed) = cli.seed {
        pipeline.seed = seed;
        synth.seed = seed;
    }
    if let Some(s) = cli.strategy {
        pipeline.strategy = match s {
            StrategyArg::Bts => Strategy::Bts,
            StrategyArg::Mts => Strategy::Mts,
        };
    }
    if let Some(m) = cli.model {
        pipeline.variant = variant_of(m);
    }
    pipeline.validate()?;
    let folds = cli.folds.or(file.folds).unwrap_or(DEFAULT_FOLDS);
    if folds < 2 {
        return Err(usage(format!("folds: need at least 2, got {folds}")));
    }
    let s = Settings {
        corpus: cli.corpus.clone().or(file.corpus),
        lexica: cli.lexica.clone().or(file.lexica),
        out: cli.out.clone().or(file.out),
        folds,
        pipeline,
        synth,
    };
    for (field, path) in [("corpus", &s.corpus), ("lexica", &s.lexica)] {
        if let Some(p) = path {
            if !p.exists() {
                return Err(usage(format!("{field}: {} does not exist", p.display())));
            }
        }
    }
    Ok(s)
}

fn variant_of(m: ModelArg) -> Variant {
    match m {
        ModelArg::Dt => Variant::Dt,
        ModelArg::Etc => Variant::Etc,
        ModelArg::Eetc => Variant::Eetc,
        ModelArg::Rf => Variant::Rf,
    }
}

impl Settings {
    fn corpus(&self) -> Outcome<Corpus> {
        let path = self
            .corpus
            .as_ref()
            .ok_or_else(|| usage("corpus: no corpus given (--corpus or `corpus` in the config file)"))?;
        Ok(load_corpus(path)?)
    }

    fn lexica(&self) -> Outcome<Lexica> {
        match &self.lexica {
            Some(dir) => Ok(Lexica::load(dir)?),
            None => Ok(Lexica::bundled()),
        }
    }

    /// Writes `content` to the output path through a temporary file in the
    /// same directory, or to standard output.
    fn emit(&self, content: &str) -> Outcome<()> {
        match &self.out {
            Some(path) => write_atomic(path, content),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(content.as_bytes())
                    .and_then(|_| stdout.flush())
                    .context("writing to standard output")?;
                Ok(())
            }
        }
    }
}

fn write_atomic(path: &Path, content: &str) -> Outcome<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    tmp.write_all(content.as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;
    // temporary files are created private; published artifacts are not
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .with_context(|| format!("setting permissions on {}", path.display()))?;
    }
    tmp.persist(path)
        .map_err(|e| anyhow!("replacing {}: {}", path.display(), e.error))?;
    Ok(())
}

fn load_pipeline(path: &Path) -> Outcome<FittedPipeline> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    Ok(FittedPipeline::from_json(&text).with_context(|| format!("model {}", path.display()))?)
}

fn run(cli: &Cli) -> Outcome<()> {
    let s = settings(cli)?;
    match &cli.command {
        Command::Synth(args) => {
            let mut config = s.synth.clone();
            if let Some(n) = args.docs {
                config.n_docs = n;
            }
            if let Some(noise) = args.noise {
                config.noise = noise;
            }
            let corpus = generate(&config)?;
            let stats = corpus_stats(&corpus);
            log::info!(
                "{} documents, {} classes, label cardinality {:.3}",
                corpus.n(),
                stats.class_count,
                stats.label_cardinality
            );
            s.emit(&corpus.to_jsonl()?)
        }
        Command::Preprocess => {
            let corpus = s.corpus()?;
            let docs = prepare(&corpus, &s.lexica()?, &s.pipeline);
            let mut out = String::new();
            for d in &docs {
                out.push_str(&serde_json::to_string(d).context("serialising a prepared document")?);
                out.push('\n');
            }
            s.emit(&out)
        }
        Command::Anonymize => {
            let corpus = s.corpus()?;
            let lexica = s.lexica()?;
            let mut total = AnonymisationReport::default();
            let docs: Vec<Judgement> = corpus
                .documents()
                .iter()
                .map(|d| {
                    let (text, report) = anonymize(&d.raw_text, &lexica.anon, s.pipeline.jaro_threshold);
                    total.merge(&report);
                    Judgement {
                        raw_text: text,
                        ..d.clone()
                    }
                })
                .collect();
            for (tag, n) in &total.counts {
                log::info!("{n} reference(s) replaced by @{}", tag.as_str());
            }
            s.emit(&Corpus::new(docs)?.to_jsonl()?)
        }
        Command::Entities => {
            let corpus = s.corpus()?;
            let lexica = s.lexica()?;
            let mut out = format!("id\t{}\n", ENTITY_FIELDS.join("\t"));
            for d in corpus.documents() {
                let values = extract_entities(d, &lexica.entities).values();
                let cells: Vec<&str> = values.iter().map(|v| v.as_deref().unwrap_or(UNKNOWN)).collect();
                let _ = writeln!(out, "{}\t{}", d.id, cells.join("\t"));
            }
            s.emit(&out)
        }
        Command::Featurize => {
            let corpus = s.corpus()?;
            let docs = prepare(&corpus, &s.lexica()?, &s.pipeline);
            let v = &s.pipeline.vectorizer;
            let streams: Vec<_> = docs.iter().map(|d| d.tokens.clone()).collect();
            let vectorizer = fit_vectorizer(&streams, v.max_df, v.min_df, v.ngram_range)?;
            let records: Vec<_> = docs.iter().map(|d| d.entities.clone()).collect();
            let (encoder, _) = encode_categoricals(&records);
            s.emit(&full_matrix(&docs, &vectorizer, &encoder)?.to_tsv())
        }
        Command::Train => {
            let corpus = s.corpus()?;
            let docs = prepare(&corpus, &s.lexica()?, &s.pipeline);
            let catalogs = Catalogs::from_label_sets(&corpus.label_sets());
            let fitted = fit_pipeline(&docs, &catalogs, &s.pipeline)?;
            log::info!(
                "{} features kept, {} trees",
                fitted.model.n_features(),
                fitted.model.trees().count()
            );
            s.emit(&fitted.to_json()?)
        }
        Command::Evaluate(args) => {
            let corpus = s.corpus()?;
            let docs = prepare(&corpus, &s.lexica()?, &s.pipeline);
            let runs: Vec<(Strategy, Variant)> = if args.all {
                [Strategy::Bts, Strategy::Mts]
                    .into_iter()
                    .flat_map(|st| Variant::ALL.into_iter().map(move |v| (st, v)))
                    .collect()
            } else {
                vec![(s.pipeline.strategy, s.pipeline.variant)]
            };
            let mut reports = Vec::new();
            for (strategy, variant) in runs {
                let mut config = s.pipeline.clone();
                if args.all || config.strategy != strategy || config.variant != variant {
                    config.hyperparams = None;
                }
                config.strategy = strategy;
                config.variant = variant;
                log::info!("evaluating {strategy}-{variant}");
                reports.push(cross_validate(&docs, &config, s.folds, s.pipeline.seed)?);
            }
            s.emit(&render_report(&reports, args.timing))
        }
        Command::Gridsearch(args) => {
            if !(args.fraction > 0.0 && args.fraction <= 1.0) {
                return Err(usage("fraction: must lie in (0, 1]"));
            }
            let corpus = s.corpus()?;
            let docs = prepare(&corpus, &s.lexica()?, &s.pipeline);
            let slice = sample_fraction(&docs, args.fraction, s.pipeline.seed);
            let grid = match args.space {
                Space::Vectorizer => vectorizer_grid(),
                Space::Model => model_grid(s.pipeline.variant),
            };
            let scoring = match args.scoring {
                ScoringArg::MicroF => Scoring::MicroF,
                ScoringArg::MacroF => Scoring::MacroF,
                ScoringArg::MicroPrecision => Scoring::MicroPrecision,
                ScoringArg::ExactMatch => Scoring::ExactMatch,
                ScoringArg::Accuracy => Scoring::Accuracy,
            };
            let result = grid_search(&slice, &s.pipeline, &grid, s.folds, scoring, s.pipeline.seed)?;
            s.emit(&result.to_tsv())
        }
        Command::Explain(args) => {
            let fitted = load_pipeline(&args.pipeline)?;
            let corpus = s.corpus()?;
            let judgement = corpus
                .documents()
                .iter()
                .find(|d| d.id == args.sample)
                .ok_or_else(|| Failure::Data(anyhow!("sample {:?} is not in the corpus", args.sample)))?;
            let lexica = s.lexica()?;
            let (doc, _) = prepare_judgement(judgement, &lexica, &fitted.config);
            let explanation = explain_document(&fitted, &doc, args.perturbations, s.pipeline.seed)
                .with_context(|| format!("explaining document {}", doc.id))?;
            let template = match &args.template {
                Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading template {}", p.display()))?,
                None => DEFAULT_TEMPLATE.to_string(),
            };
            let text = render_explanation(&explanation, &template)
                .with_context(|| format!("rendering document {}", doc.id))?;
            if let Some(path) = &args.graph {
                let row = fitted.featurize(std::slice::from_ref(&doc))?.row(0);
                let model = &fitted.model;
                let forest = model
                    .predict_indices(&row)?
                    .into_iter()
                    .next()
                    .filter(|_| model.strategy == Strategy::Bts)
                    .unwrap_or(0);
                let tree = &model.forests[forest].trees[0];
                // check the path is walkable before drawing the tree
                extract_path(tree, &row, &model.feature_names)?;
                let dot = export_tree_graph(tree, args.graph_depth, &model.feature_names, &tree_class_names(model, forest));
                write_atomic(path, &dot)?;
            }
            if let Some(path) = &args.paths {
                let json = serde_json::to_string_pretty(&explanation.paths).context("serialising paths")?;
                write_atomic(path, &(json + "\n"))?;
            }
            s.emit(&text)
        }
        Command::ExportTree(args) => {
            let fitted = load_pipeline(&args.pipeline)?;
            let model = &fitted.model;
            let forest = model.forests.get(args.forest).ok_or_else(|| {
                usage(format!("forest: index {} out of range (model has {})", args.forest, model.forests.len()))
            })?;
            let tree = forest.trees.get(args.tree).ok_or_else(|| {
                usage(format!("tree: index {} out of range (forest has {})", args.tree, forest.trees.len()))
            })?;
            s.emit(&export_tree_graph(
                tree,
                args.max_depth,
                &model.feature_names,
                &tree_class_names(model, args.forest),
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(failure)) => {
            let (Failure::Usage(e) | Failure::Data(e)) = &failure;
            eprintln!("error: {e:#}");
            ExitCode::from(failure.code())
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
