use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use flowrec_core::corpus::{self, Corpus, ServiceToken, Strategy};
use flowrec_core::embed::{self, EmbeddingModel};
use flowrec_core::eval::{self, Arm};
use flowrec_core::ingest::{load_repository, Repository};
use flowrec_core::recommend::{recommend_top_k, Session};
use flowrec_core::synthetic::{self, SyntheticConfig};
use flowrec_core::wskg::Wskg;

use crate::config::AppConfig;
use crate::error::CliError;
use crate::http::{self, AppState, Engine, EntryView};

#[derive(Debug, Parser)]
#[command(
    name = "flowrec",
    version,
    about = "Workflow service embeddings and next-service recommendation"
)]
pub struct Cli {
    /// JSON config file (defaults to $FLOWREC_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a directory of workflow files and report what loaded.
    Ingest(IngestArgs),
    /// Merge a repository into a labelled service graph (edge list).
    BuildGraph(BuildGraphArgs),
    /// Generate a token-sequence corpus from a repository or graph.
    GenCorpus(GenCorpusArgs),
    /// Train skip-gram embeddings on a corpus file.
    Train(TrainArgs),
    /// Split, train and score a repository.
    Evaluate(EvaluateArgs),
    /// Evaluate a grid of walk lengths and walks per vertex.
    SweepPw(SweepArgs),
    /// Rank next services for a saved session.
    Recommend(RecommendArgs),
    /// Serve the session API over HTTP.
    Serve(ServeArgs),
    /// Write a seeded synthetic repository.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub dir: Option<PathBuf>,
    /// Write each parsed workflow as canonical JSON into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphSource {
    #[arg(long)]
    pub repo: Option<PathBuf>,
    /// Edge list written by `build-graph`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[arg(long)]
    pub repo: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub dedup: bool,
    #[arg(long)]
    pub walk_len: Option<usize>,
    #[arg(long)]
    pub walks_per_vertex: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap DFS paths per start service.
    #[arg(long)]
    pub max_paths_per_start: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Parallel unsynchronized updates; results vary between runs.
    #[arg(long)]
    pub throughput: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct EvalFlags {
    #[arg(long)]
    pub repo: Option<PathBuf>,
    /// Cutoff; repeat for several.
    #[arg(long = "k")]
    pub k: Vec<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub eval: EvalFlags,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub dedup: bool,
    #[arg(long)]
    pub no_dedup: bool,
    #[arg(long)]
    pub walk_len: Option<usize>,
    #[arg(long)]
    pub walks_per_vertex: Option<usize>,
    #[arg(long)]
    pub max_paths_per_start: Option<usize>,
    /// Score with untrained vectors instead.
    #[arg(long)]
    pub untrained: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub eval: EvalFlags,
    #[arg(long = "l", value_delimiter = ',', default_values_t = [3, 5, 10, 15, 20])]
    pub l: Vec<usize>,
    #[arg(long = "theta", value_delimiter = ',', default_values_t = [1, 5, 10])]
    pub theta: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub source: GraphSource,
    /// Selected tokens: a JSON array of keys or whitespace-separated keys.
    #[arg(long)]
    pub session_file: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long)]
    pub listen: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub workflows: usize,
    #[arg(long, default_value_t = 60)]
    pub services: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

/// Parses `argv` and runs the command. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn need<'a>(
    flag: Option<&'a PathBuf>,
    fallback: Option<&'a PathBuf>,
    what: &str,
) -> Result<&'a Path, CliError> {
    flag.or(fallback)
        .map(PathBuf::as_path)
        .ok_or_else(|| CliError::Usage(format!("missing {what}")))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load_repo(dir: &Path) -> Result<Repository, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Io(format!("{}: not a directory", dir.display())));
    }
    let report = load_repository(dir)?;
    for s in &report.skipped {
        log::warn!("skipped {}: {}", s.path.display(), s.reason);
    }
    Ok(report.repository)
}

fn load_graph(src: &GraphSource, cfg: &AppConfig) -> Result<Wskg, CliError> {
    if let Some(g) = src.graph.as_ref() {
        return Ok(Wskg::from_edge_list(&read_text(g)?)?);
    }
    if let Some(r) = src.repo.as_ref() {
        return Ok(Wskg::build(&load_repo(r)?));
    }
    if let Some(g) = cfg.graph_path.as_ref() {
        return Ok(Wskg::from_edge_list(&read_text(g)?)?);
    }
    let repo = need(None, cfg.repo_path.as_ref(), "--repo or --graph")?;
    Ok(Wskg::build(&load_repo(repo)?))
}

fn apply_train_flags(cfg: &mut AppConfig, t: &TrainFlags) {
    if let Some(v) = t.dim {
        cfg.train.dim = v;
    }
    if let Some(v) = t.window {
        cfg.train.window = v;
    }
    if let Some(v) = t.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = t.learning_rate {
        cfg.train.initial_learning_rate = v;
    }
    if t.throughput {
        cfg.train.deterministic = false;
    }
}

/// `--seed` reseeds every random stage: walks, initialization and the split.
fn apply_seed(cfg: &mut AppConfig, seed: Option<u64>) {
    if let Some(s) = seed {
        cfg.pw.rng_seed = s;
        cfg.train.rng_seed = s;
        cfg.eval.split_seed = s;
    }
}

fn apply_eval_flags(cfg: &mut AppConfig, e: &EvalFlags) {
    apply_seed(cfg, e.seed);
    apply_train_flags(cfg, &e.train);
    if !e.k.is_empty() {
        cfg.eval.k_values = e.k.clone();
    }
    if let Some(f) = e.train_fraction {
        cfg.eval.train_fraction = f;
    }
}

fn read_session_tokens(path: &Path) -> Result<Vec<ServiceToken>, CliError> {
    let text = read_text(path)?;
    let keys: Vec<String> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
    } else {
        text.split_whitespace().map(str::to_string).collect()
    };
    keys.iter()
        .map(|k| ServiceToken::parse(k).map_err(|e| CliError::Validation(e.to_string())))
        .collect()
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let mut cfg = AppConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(a) => {
            let dir = need(
                a.dir.as_ref(),
                cfg.repo_path.as_ref(),
                "repository directory",
            )?;
            if !dir.is_dir() {
                return Err(CliError::Io(format!("{}: not a directory", dir.display())));
            }
            let report = load_repository(dir)?;
            println!(
                "loaded {} workflow(s), {} service(s), {} link(s); skipped {}",
                report.loaded,
                report.repository.catalog().len(),
                report.repository.total_links(),
                report.skipped.len()
            );
            for s in &report.skipped {
                println!("skipped {}: {}", s.path.display(), s.reason);
            }
            if let Some(out) = a.out {
                fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
                for w in report.repository.workflows() {
                    let p = out.join(format!("{}.json", w.id()));
                    fs::write(&p, w.to_canonical_json()).map_err(|e| CliError::io(&p, e))?;
                }
            }
        }
        Command::BuildGraph(a) => {
            let repo = need(a.repo.as_ref(), cfg.repo_path.as_ref(), "--repo")?;
            let g = Wskg::build(&load_repo(repo)?);
            let out = a.out.as_deref().or(cfg.graph_path.as_deref());
            write_output(out, &g.to_edge_list())?;
            log::info!("{} services, {} edges", g.services().len(), g.edges().len());
        }
        Command::GenCorpus(a) => {
            apply_seed(&mut cfg, a.seed);
            if let Some(v) = a.walk_len {
                cfg.pw.walk_length = v;
            }
            if let Some(v) = a.walks_per_vertex {
                cfg.pw.walks_per_vertex = v;
            }
            let strategy = a.strategy.unwrap_or(cfg.strategy);
            let dedup = a.dedup || cfg.dedupe;
            cfg.validate()?;
            let g = load_graph(&a.source, &cfg)?;
            let (c, truncated) = match strategy {
                Strategy::Dfs => corpus::generate_dfs_capped(&g, a.max_paths_per_start),
                _ => (corpus::generate(&g, strategy, &cfg.pw, false, None)?, 0),
            };
            if truncated > 0 {
                log::warn!("{truncated} DFS start(s) hit the path cap");
            }
            let c = if dedup { corpus::dedupe(&c) } else { c };
            let out = a.out.as_deref().or(cfg.corpus_path.as_deref());
            write_output(out, &c.to_text())?;
            log::info!("{} sequences, {} tokens", c.len(), c.vocabulary().len());
        }
        Command::Train(a) => {
            apply_seed(&mut cfg, a.seed);
            apply_train_flags(&mut cfg, &a.train);
            cfg.validate()?;
            let corpus_path = need(a.corpus.as_ref(), cfg.corpus_path.as_ref(), "--corpus")?;
            let c = Corpus::from_text(&read_text(corpus_path)?)?;
            let m = embed::train(&c, &cfg.train)?;
            let out = need(a.out.as_ref(), cfg.model_path.as_ref(), "--out")?;
            embed::save_model(&m, out)?;
            log::info!(
                "trained {} tokens, mean log-likelihood {:.4}",
                m.len(),
                m.mean_log_likelihood(&c)
            );
        }
        Command::Evaluate(a) => {
            apply_eval_flags(&mut cfg, &a.eval);
            let mut ec = cfg.eval.clone();
            ec.strategy = a.strategy.unwrap_or(ec.strategy);
            if a.dedup {
                ec.dedupe = true;
            }
            if a.no_dedup {
                ec.dedupe = false;
            }
            if let Some(v) = a.walk_len {
                cfg.pw.walk_length = v;
            }
            if let Some(v) = a.walks_per_vertex {
                cfg.pw.walks_per_vertex = v;
            }
            ec.pw = cfg.pw;
            ec.train = cfg.train.clone();
            ec.max_paths_per_start = a.max_paths_per_start.or(ec.max_paths_per_start);
            cfg.eval = ec;
            cfg.validate()?;
            let repo = load_repo(need(
                a.eval.repo.as_ref(),
                cfg.repo_path.as_ref(),
                "--repo",
            )?)?;
            let arm = if a.untrained {
                Arm::Untrained
            } else {
                Arm::Trained
            };
            let report = eval::run_evaluation_arm(&repo, &cfg.eval, arm)?;
            eprint!("{}", report.table());
            write_output(a.json.as_deref(), &format!("{}\n", report.to_json()))?;
        }
        Command::SweepPw(a) => {
            apply_eval_flags(&mut cfg, &a.eval);
            cfg.eval.pw = cfg.pw;
            cfg.eval.train = cfg.train.clone();
            cfg.validate()?;
            let repo = load_repo(need(
                a.eval.repo.as_ref(),
                cfg.repo_path.as_ref(),
                "--repo",
            )?)?;
            let cells = eval::sweep_pw(&repo, &a.l, &a.theta, &cfg.eval)?;
            write_output(a.out.as_deref(), &eval::sweep_csv(&cells))?;
        }
        Command::Recommend(a) => {
            cfg.validate()?;
            let model =
                embed::load_model(need(a.model.as_ref(), cfg.model_path.as_ref(), "--model")?)?;
            let g = load_graph(&a.source, &cfg)?;
            let tokens = read_session_tokens(&a.session_file)?;
            let session = Session::with_tokens("cli", &model, &tokens);
            let entries = recommend_top_k(&model, &g, &session, a.k.unwrap_or(cfg.default_k))?;
            let view: Vec<EntryView> = entries.iter().map(EntryView::from).collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&view).expect("entries serialize")
            );
        }
        Command::Serve(a) => {
            cfg.validate()?;
            let listen = a.listen.unwrap_or_else(|| cfg.listen_address.clone());
            let model_path =
                need(a.model.as_ref(), cfg.model_path.as_ref(), "--model")?.to_path_buf();
            serve(listen, model_path, a.source, cfg)?;
        }
        Command::Synth(a) => {
            let repo = synthetic::generate(&SyntheticConfig {
                workflows: a.workflows,
                services: a.services,
                seed: a.seed,
                ..SyntheticConfig::default()
            });
            fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
            for w in repo.workflows() {
                let p = a.out.join(format!("{}.json", w.id()));
                fs::write(&p, w.to_canonical_json()).map_err(|e| CliError::io(&p, e))?;
            }
            println!("wrote {} workflow(s) to {}", repo.len(), a.out.display());
        }
    }
    Ok(())
}

fn load_engine(
    model_path: &Path,
    source: &GraphSource,
    cfg: &AppConfig,
) -> Result<Engine, CliError> {
    let model: EmbeddingModel = embed::load_model(model_path)?;
    let graph = load_graph(source, cfg)?;
    Ok(Engine { model, graph })
}

fn serve(
    listen: String,
    model_path: PathBuf,
    source: GraphSource,
    cfg: AppConfig,
) -> Result<(), CliError> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    rt.block_on(async move {
        let state = AppState::loading(cfg.default_k, Duration::from_secs(cfg.session_ttl_secs));
        let listener = tokio::net::TcpListener::bind(&listen)
            .await
            .map_err(|e| CliError::Io(format!("{listen}: {e}")))?;
        log::info!("listening on {listen}");
        let loader = state.clone();
        tokio::task::spawn_blocking(move || {
            let result = load_engine(&model_path, &source, &cfg).map_err(|e| e.to_string());
            match &result {
                Ok(e) => log::info!("model ready: {} tokens", e.model.len()),
                Err(msg) => log::error!("model load failed: {msg}"),
            }
            loader.set_engine(result);
        });
        axum::serve(listener, http::router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Io(e.to_string()))
    })
}
