// SPDX-License-Identifier: Apache-2.0

//! `pixie`: compile graphs, serve and query them, generate synthetic data and run the
//! evaluation experiments. Tables go to stdout as TSV or CSV, diagnostics to stderr.
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pixie_core::compiler::{compile, PruneConfig};
use pixie_core::{BipartiteGraph, WalkConfig};
use pixie_eval::bias::{bias_eval, BiasConfig};
use pixie_eval::earlystop::{early_stop_eval, EarlyStopConfig, DESK_OPERATING_POINT};
use pixie_eval::linkpred::{link_prediction_eval, LinkPredConfig};
use pixie_eval::runtime::{runtime_bench, RuntimeConfig};
use pixie_eval::stability::{stability_eval, StabilityConfig};
use pixie_eval::{generate_synthetic_graph, sample_query_pins, EvalReport, SynthConfig, SynthGraph};
use pixie_server::api::{handle_recommend, QueryEntry, RecommendRequest};
use pixie_server::graph::ServedGraph;
use pixie_server::ServerConfig;

#[derive(Parser)]
#[command(
    name = "pixie",
    version,
    about = "Random-walk recommendations over a pin/board graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prune a raw edge list and write the binary graph plus its `.ids` map.
    Compile(CompileArgs),
    /// Serve recommendations over HTTP, hot-swapping newer graphs from --graph-dir.
    Serve(ServeArgs),
    /// Run one query against a compiled graph and print `pinKey<TAB>score` lines.
    Query(QueryArgs),
    /// Write a planted-community edge file and topic file.
    Synth(SynthArgs),
    /// Run an experiment and write its CSV table.
    Eval(EvalArgs),
    /// Runtime experiment (query time against steps and query size).
    Bench(BenchArgs),
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long, env = "PIXIE_EDGES")]
    edges: PathBuf,
    #[arg(long, env = "PIXIE_TOPICS")]
    topics: PathBuf,
    #[arg(long, env = "PIXIE_OUT")]
    out: PathBuf,
    #[arg(long, env = "PIXIE_DELTA", default_value_t = 1.0)]
    delta: f64,
    #[arg(long, env = "PIXIE_ENTROPY_QUANTILE", default_value_t = 0.10)]
    entropy_quantile: f64,
    /// Latest pins per board used for its topic distribution.
    #[arg(long, env = "PIXIE_LATEST_M", default_value_t = 20)]
    latest_m: usize,
    #[arg(long, env = "PIXIE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct WalkArgs {
    #[arg(long, env = "PIXIE_STEPS", default_value_t = 100_000)]
    steps: u64,
    #[arg(long, env = "PIXIE_ALPHA", default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, env = "PIXIE_NP", default_value_t = 2_000)]
    np: u64,
    #[arg(long, env = "PIXIE_NV", default_value_t = 4)]
    nv: u64,
    #[arg(long, env = "PIXIE_BETA", default_value_t = 0.5)]
    beta: f64,
    #[arg(long, env = "PIXIE_MAX_WALK_LENGTH", default_value_t = 100)]
    max_walk_length: u32,
}

impl WalkArgs {
    fn config(&self) -> WalkConfig {
        WalkConfig {
            alpha: self.alpha,
            total_steps: self.steps,
            early_stop_pins: self.np,
            early_stop_visits: self.nv,
            bias_strength: self.beta,
            max_walk_length: self.max_walk_length,
            ..WalkConfig::default()
        }
    }
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "PIXIE_GRAPH_DIR")]
    graph_dir: PathBuf,
    #[arg(long, env = "PIXIE_PORT", default_value_t = 8080)]
    port: u16,
    /// Concurrent walks; defaults to the number of CPUs.
    #[arg(long, env = "PIXIE_WORKERS")]
    workers: Option<usize>,
    #[command(flatten)]
    walk: WalkArgs,
    #[arg(long, env = "PIXIE_HALF_LIFE_SECONDS", default_value_t = 86_400.0)]
    half_life_seconds: f64,
    #[arg(long, env = "PIXIE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "PIXIE_POLL_MILLIS", default_value_t = 1_000)]
    poll_millis: u64,
}

#[derive(Args)]
struct QueryArgs {
    /// Compiled graph; its `.ids` file must sit next to it.
    #[arg(long, env = "PIXIE_GRAPH")]
    graph: PathBuf,
    #[arg(long, env = "PIXIE_PIN", value_delimiter = ',', required = true)]
    pin: Vec<String>,
    /// One weight per pin; all 1 when omitted.
    #[arg(long, env = "PIXIE_WEIGHTS", value_delimiter = ',')]
    weights: Vec<f64>,
    /// Attribute IDs to bias towards.
    #[arg(long, env = "PIXIE_FEATURES", value_delimiter = ',')]
    features: Vec<String>,
    #[command(flatten)]
    walk: WalkArgs,
    #[arg(long, env = "PIXIE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "PIXIE_TOP", default_value_t = 1000)]
    top: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Default,
    Noisy,
    Bilingual,
}

#[derive(Args, Clone)]
struct SynthFlags {
    /// Starting point; the flags below override its fields.
    #[arg(long, env = "PIXIE_PRESET", value_enum)]
    preset: Option<Preset>,
    #[arg(long, env = "PIXIE_COMMUNITIES")]
    communities: Option<u32>,
    #[arg(long, env = "PIXIE_PINS_PER_COMMUNITY")]
    pins_per_community: Option<u32>,
    #[arg(long, env = "PIXIE_BOARDS_PER_COMMUNITY")]
    boards_per_community: Option<u32>,
    #[arg(long, env = "PIXIE_EDGES_PER_BOARD")]
    edges_per_board: Option<u32>,
    #[arg(long, env = "PIXIE_NOISE")]
    noise: Option<f64>,
    /// Attribute per community, comma separated.
    #[arg(long, env = "PIXIE_COMMUNITY_ATTRS", value_delimiter = ',')]
    community_attrs: Vec<u16>,
    #[arg(long, env = "PIXIE_SYNTH_SEED")]
    synth_seed: Option<u64>,
}

impl SynthFlags {
    fn config(&self, fallback: Preset) -> SynthConfig {
        let mut c = match self.preset.unwrap_or(fallback) {
            Preset::Default => SynthConfig::default(),
            Preset::Noisy => SynthConfig::noisy(),
            Preset::Bilingual => SynthConfig::bilingual(),
        };
        if let Some(v) = self.communities {
            c.communities = v;
            if c.community_attrs.len() != v as usize {
                c.community_attrs.clear();
            }
        }
        c.pins_per_community = self.pins_per_community.unwrap_or(c.pins_per_community);
        c.boards_per_community = self.boards_per_community.unwrap_or(c.boards_per_community);
        c.edges_per_board = self.edges_per_board.unwrap_or(c.edges_per_board);
        c.noise = self.noise.unwrap_or(c.noise);
        if !self.community_attrs.is_empty() {
            c.community_attrs = self.community_attrs.clone();
        }
        c.seed = self.synth_seed.unwrap_or(c.seed);
        c
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    synth: SynthFlags,
    #[arg(long, env = "PIXIE_EDGES_OUT")]
    edges_out: PathBuf,
    #[arg(long, env = "PIXIE_TOPICS_OUT")]
    topics_out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Linkpred,
    Stability,
    Earlystop,
    Bias,
    Runtime,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, env = "PIXIE_EXPERIMENT", value_enum)]
    experiment: Experiment,
    /// CSV table; stdout when omitted.
    #[arg(long, env = "PIXIE_OUT")]
    out: Option<PathBuf>,
    /// JSON summary file.
    #[arg(long, env = "PIXIE_SUMMARY")]
    summary: Option<PathBuf>,
    /// Raw edge file to use instead of a synthetic graph (needs --topics).
    #[arg(long, env = "PIXIE_EDGES", requires = "topics")]
    edges: Option<PathBuf>,
    #[arg(long, env = "PIXIE_TOPICS", requires = "edges")]
    topics: Option<PathBuf>,
    #[command(flatten)]
    synth: SynthFlags,
    /// Query pins (boards for linkpred, queries per point for runtime).
    #[arg(long, env = "PIXIE_QUERIES")]
    queries: Option<usize>,
    #[arg(long, env = "PIXIE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Compiled graph; a default synthetic graph when omitted.
    #[arg(long, env = "PIXIE_GRAPH")]
    graph: Option<PathBuf>,
    #[arg(long, env = "PIXIE_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "PIXIE_SUMMARY")]
    summary: Option<PathBuf>,
    #[arg(long, env = "PIXIE_QUERIES", default_value_t = 200)]
    queries: usize,
    #[arg(long, env = "PIXIE_SEED", default_value_t = 0)]
    seed: u64,
}

type Failure = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Compile(a) => run_compile(a),
        Command::Serve(a) => run_serve(a),
        Command::Query(a) => run_query(a),
        Command::Synth(a) => run_synth(a),
        Command::Eval(a) => run_eval(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pixie: {e}");
            ExitCode::from(2)
        }
    }
}

fn run_compile(a: CompileArgs) -> Result<(), Failure> {
    let cfg = PruneConfig {
        entropy_quantile: a.entropy_quantile,
        delta: a.delta,
        latest_m: a.latest_m,
        seed: a.seed,
    };
    let report = compile(&a.edges, &a.topics, &cfg, &a.out)?;
    let value = serde_json::to_value(&report)?;
    let mut out = std::io::stdout().lock();
    for (k, v) in value.as_object().into_iter().flatten() {
        writeln!(out, "{k}\t{v}")?;
    }
    Ok(())
}

fn run_serve(a: ServeArgs) -> Result<(), Failure> {
    let defaults = ServerConfig::default();
    let cfg = ServerConfig {
        graph_dir: a.graph_dir,
        port: a.port,
        workers: a.workers.unwrap_or(defaults.workers),
        walk: a.walk.config(),
        half_life_seconds: a.half_life_seconds,
        seed: a.seed,
        poll_interval: std::time::Duration::from_millis(a.poll_millis),
        ..defaults
    };
    cfg.validate()?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(pixie_server::run(cfg))?;
    Ok(())
}

fn run_query(a: QueryArgs) -> Result<(), Failure> {
    if !a.weights.is_empty() && a.weights.len() != a.pin.len() {
        return Err(format!("{} weights given for {} pins", a.weights.len(), a.pin.len()).into());
    }
    let served = ServedGraph::load(&a.graph)?;
    let cfg = ServerConfig {
        walk: a.walk.config(),
        ..ServerConfig::default()
    };
    let req = RecommendRequest {
        query: a
            .pin
            .iter()
            .enumerate()
            .map(|(i, k)| QueryEntry {
                pin_key: k.clone(),
                weight: a.weights.get(i).copied().unwrap_or(1.0),
            })
            .collect(),
        user_features: a.features.clone(),
        top_k: Some(a.top),
        seed: Some(a.seed),
        ..RecommendRequest::default()
    };
    let resp = handle_recommend(&served, &cfg, req, a.seed)?;
    for w in &resp.warnings {
        eprintln!("pixie: {w}");
    }
    eprintln!(
        "pixie: {} steps, early stopped: {}, graph {}",
        resp.stats.steps_used, resp.stats.early_stopped, resp.stats.graph_version
    );
    let mut out = std::io::stdout().lock();
    for r in &resp.results {
        writeln!(out, "{}\t{}", r.pin_key, r.score)?;
    }
    Ok(())
}

fn run_synth(a: SynthArgs) -> Result<(), Failure> {
    let g = generate_synthetic_graph(&a.synth.config(Preset::Default))?;
    g.write_edges(&a.edges_out)?;
    g.write_topics(&a.topics_out)?;
    eprintln!(
        "pixie: {} draws, {} distinct edges, {} pins, {} boards",
        g.draws.len(),
        g.raw.edges.len(),
        g.raw.pin_keys.len(),
        g.raw.board_keys.len()
    );
    Ok(())
}

/// Raw data for an experiment: the given files or a synthetic graph.
fn eval_data(
    a: &EvalArgs,
    preset: Preset,
) -> Result<(pixie_core::compiler::RawGraph, pixie_core::compiler::TopicTable), Failure> {
    match (&a.edges, &a.topics) {
        (Some(e), Some(t)) => Ok((
            pixie_core::compiler::parse_edge_file(e)?,
            pixie_core::compiler::parse_topic_file(t)?,
        )),
        _ => {
            let SynthGraph { raw, topics, .. } = generate_synthetic_graph(&a.synth.config(preset))?;
            Ok((raw, topics))
        }
    }
}

fn compiled(
    raw: &pixie_core::compiler::RawGraph,
    topics: &pixie_core::compiler::TopicTable,
) -> Result<BipartiteGraph, Failure> {
    Ok(pixie_core::compiler::compile_raw(raw, topics, &PruneConfig::noop())?.graph)
}

fn emit(report: &EvalReport, out: Option<&PathBuf>, summary: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(p) => report.save_csv(p)?,
        None => report.write_csv(std::io::stdout().lock())?,
    }
    if let Some(p) = summary {
        report.save_json(p)?;
    }
    for (k, v) in &report.summary {
        eprintln!("pixie: {k}\t{v}");
    }
    eprintln!(
        "pixie: {} finished in {:.1}s",
        report.experiment, report.runtime_seconds
    );
    Ok(())
}

fn run_eval(a: EvalArgs) -> Result<(), Failure> {
    let report = match a.experiment {
        Experiment::Linkpred => {
            let (raw, topics) = eval_data(&a, Preset::Noisy)?;
            let defaults = LinkPredConfig::default();
            let cfg = LinkPredConfig {
                boards: a.queries.unwrap_or(defaults.boards),
                seed: a.seed,
                ..defaults
            };
            link_prediction_eval(&raw, &topics, &cfg)?
        }
        Experiment::Stability => {
            let (raw, topics) = eval_data(&a, Preset::Default)?;
            let g = compiled(&raw, &topics)?;
            let qs = sample_query_pins(&g, a.queries.unwrap_or(20), a.seed, |_| true);
            let cfg = StabilityConfig {
                seed: a.seed,
                ..StabilityConfig::default()
            };
            stability_eval(&g, &qs, &cfg)?
        }
        Experiment::Earlystop => {
            let (raw, topics) = eval_data(&a, Preset::Default)?;
            let g = compiled(&raw, &topics)?;
            let qs = sample_query_pins(&g, a.queries.unwrap_or(50), a.seed, |_| true);
            let mut cfg = EarlyStopConfig {
                seed: a.seed,
                ..EarlyStopConfig::default()
            };
            if !cfg.grid.contains(&DESK_OPERATING_POINT) {
                cfg.grid.push(DESK_OPERATING_POINT);
            }
            early_stop_eval(&g, &qs, &cfg)?
        }
        Experiment::Bias => {
            let (raw, topics) = eval_data(&a, Preset::Bilingual)?;
            let g = compiled(&raw, &topics)?;
            let cfg = BiasConfig {
                seed: a.seed,
                ..BiasConfig::default()
            };
            let target = pixie_core::AttributeId(cfg.target);
            let qs = sample_query_pins(&g, a.queries.unwrap_or(50), a.seed, |p| {
                g.attr(p)
                    .map(|x| x != target && x != pixie_core::AttributeId::UNLABELED)
                    .unwrap_or(false)
            });
            bias_eval(&g, &qs, &cfg)?
        }
        Experiment::Runtime => {
            let (raw, topics) = eval_data(&a, Preset::Default)?;
            let g = compiled(&raw, &topics)?;
            let defaults = RuntimeConfig::default();
            let cfg = RuntimeConfig {
                queries_per_point: a.queries.unwrap_or(defaults.queries_per_point),
                seed: a.seed,
                ..defaults
            };
            runtime_bench(&g, &cfg)?
        }
    };
    emit(&report, a.out.as_ref(), a.summary.as_ref())
}

fn run_bench(a: BenchArgs) -> Result<(), Failure> {
    let g = match &a.graph {
        Some(p) => BipartiteGraph::load_binary(p)?,
        None => {
            let s = generate_synthetic_graph(&SynthConfig::default())?;
            compiled(&s.raw, &s.topics)?
        }
    };
    let cfg = RuntimeConfig {
        queries_per_point: a.queries,
        seed: a.seed,
        ..RuntimeConfig::default()
    };
    emit(&runtime_bench(&g, &cfg)?, a.out.as_ref(), a.summary.as_ref())
}
