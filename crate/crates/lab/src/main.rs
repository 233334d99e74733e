use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wpl::experiments::{self, GameCell, GameKind, StrategyKind};
use wpl::formats::{self, FormatError, PathResultFile};
use wpl_core::ctqw::{Backend, ComponentPropagator};
use wpl_core::graph::{GraphParams, LabeledGraph, VertexId, VertexName, VertexRole, WeldedTree, WeldedTreePathGraph};
use wpl_core::{find_path, measure, verify_path, Hamiltonian, PathfinderConfig, PropagatorConfig};

#[derive(Parser)]
#[command(name = "wpl", version, about = "Welded-tree-path graphs, quantum-walk pathfinding and classical query games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a welded-tree-path graph and write it as JSON.
    Generate(GenerateArgs),
    /// Find the x-y path of a graph file with the quantum-walk algorithm.
    Pathfind(PathfindArgs),
    /// Run one quantum walk and report the outcome distribution.
    Walk(WalkArgs),
    /// Play classical query games and write one CSV row per strategy.
    Classical(ClassicalArgs),
    /// Run a parameter sweep and write one CSV row per cell.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Auto,
    Dense,
    Krylov,
}

#[derive(Args)]
struct PropagatorArgs {
    #[arg(long, value_enum, default_value = "auto")]
    backend: BackendArg,
    /// Target error of a single propagation.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl PropagatorArgs {
    fn config(&self) -> PropagatorConfig {
        let backend = match self.backend {
            BackendArg::Auto => Backend::Auto,
            BackendArg::Dense => Backend::Dense,
            BackendArg::Krylov => Backend::Krylov,
        };
        PropagatorConfig { backend, tolerance: self.tol, ..PropagatorConfig::default() }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Name width in bits; the smallest safe width by default.
    #[arg(long)]
    name_bits: Option<u32>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathfindArgs {
    /// Graph file written by `generate`.
    graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Walks per iteration (default n^2).
    #[arg(long)]
    repetitions: Option<usize>,
    #[command(flatten)]
    propagator: PropagatorArgs,
    /// Result JSON; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Query transcript as JSON lines.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct WalkArgs {
    /// Graph file; otherwise a graph is built from --n and --seed.
    #[arg(long, conflicts_with = "n")]
    graph: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// With --n: a single welded tree of height n instead of the path graph.
    #[arg(long, requires = "n")]
    tree: bool,
    /// Walk on the matrix with edges at degree-2 vertices removed.
    #[arg(long)]
    restricted: bool,
    /// Start vertex, as a role (`p:1`, `s:2`, ...) or a hex name. Defaults
    /// to x, or s for a single tree.
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    time: f64,
    /// Measurements to sample from the final state.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    /// Most likely vertices to list.
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[command(flatten)]
    propagator: PropagatorArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    RandomWalk,
    Bfs,
    All,
}

impl StrategyArg {
    fn kinds(self) -> Vec<StrategyKind> {
        match self {
            StrategyArg::RandomWalk => vec![StrategyKind::RandomWalk],
            StrategyArg::Bfs => vec![StrategyKind::Bfs],
            StrategyArg::All => StrategyKind::ALL.to_vec(),
        }
    }
}

#[derive(Args)]
struct ClassicalArgs {
    /// Tree height, or the path-graph parameter with --game path.
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 64)]
    budget: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, value_enum, default_value = "all")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "tree")]
    game: GameKind,
    /// Cell seed; trial t uses the split of this seed at index t.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Hitting,
    Pathfind,
    Classical,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(value_enum)]
    kind: SweepKind,
    /// Values of n (heights for hitting and classical sweeps).
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    /// Master seed; drawn from the system when absent, unless
    /// --deterministic is given, in which case it is 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Query budgets for classical sweeps.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    budget: Vec<usize>,
    #[arg(long, value_enum, default_value = "all")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "tree")]
    game: GameKind,
    /// Grid points for hitting sweeps.
    #[arg(long, default_value_t = 4096)]
    points: usize,
    #[command(flatten)]
    propagator: PropagatorArgs,
    /// One worker thread and a fixed default seed.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum InputError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
}

fn invalid(e: impl ToString) -> InputError {
    InputError::Invalid(e.to_string())
}

fn display(path: &Option<PathBuf>) -> String {
    path.as_ref().map_or_else(|| String::from("<stdout>"), |p| p.display().to_string())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, InputError> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|source| InputError::Io { path: p.display().to_string(), source }),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_json<T: Serialize>(value: &T, path: &Option<PathBuf>) -> Result<(), InputError> {
    let mut out = output(path)?;
    let io_error = |e: io::Error| InputError::Io { path: display(path), source: e };
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| io_error(e.into()))?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(io_error)
}

fn write_rows<T: Serialize>(rows: &[T], path: &Option<PathBuf>) -> Result<(), InputError> {
    experiments::write_csv(rows, output(path)?)?;
    Ok(())
}

fn load_graph(path: &Path) -> Result<WeldedTreePathGraph, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io { path: path.display().to_string(), source })?;
    formats::parse_graph(&text).map_err(|source| InputError::Format { path: path.display().to_string(), source })
}

/// Loads a graph and insists it has the documented structure.
fn load_valid_graph(path: &Path) -> Result<WeldedTreePathGraph, InputError> {
    let g = load_graph(path)?;
    let violations = g.validate();
    if let Some(first) = violations.first() {
        return Err(InputError::Invalid(format!(
            "{}: not a welded-tree-path graph ({} violations, first: {first})",
            path.display(),
            violations.len()
        )));
    }
    Ok(g)
}

fn resolve_vertex(graph: &LabeledGraph, text: &str) -> Result<VertexId, InputError> {
    if let Ok(role) = text.parse::<VertexRole>() {
        return graph.vertex_by_role(role).ok_or_else(|| invalid(format!("no vertex with role {role}")));
    }
    let name = VertexName::parse_hex(text, graph.name_bits()).map_err(|e| invalid(format!("--start {text}: {e}")))?;
    graph.vertex_by_name(name).ok_or_else(|| invalid(format!("no vertex named {text}")))
}

/// An algorithmic failure: the command ran, the result is negative.
struct Failed;

fn generate(args: GenerateArgs) -> Result<(), InputError> {
    let mut params = GraphParams::new(args.n, args.seed).map_err(invalid)?;
    if let Some(bits) = args.name_bits {
        params = params.with_name_bits(bits).map_err(invalid)?;
    }
    let g = WeldedTreePathGraph::build(params).map_err(invalid)?;
    let mut out = output(&args.out)?;
    formats::write_graph(&g, &mut out).map_err(|source| InputError::Format { path: display(&args.out), source })?;
    out.flush().map_err(|source| InputError::Io { path: display(&args.out), source })?;
    let graph = g.graph();
    let mut counts = std::collections::BTreeMap::new();
    for v in graph.vertices() {
        *counts.entry(graph.neighbors(v).len()).or_insert(0usize) += 1;
    }
    let signature: Vec<String> = counts.iter().map(|(d, c)| format!("{c}x{d}")).collect();
    eprintln!(
        "n = {}: {} vertices, {} edges, {}-bit names, degrees {}",
        params.n,
        graph.vertex_count(),
        graph.edge_count(),
        params.name_bits,
        signature.join(" ")
    );
    Ok(())
}

fn pathfind(args: PathfindArgs) -> Result<Result<(), Failed>, InputError> {
    let g = load_valid_graph(&args.graph)?;
    let config = PathfinderConfig {
        propagator: args.propagator.config(),
        repetitions: args.repetitions,
        max_iterations: args.max_iterations,
        tau_max: None,
    };
    config.resolve(g.n()).map_err(invalid)?;
    let bits = g.graph().name_bits();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (file, ledger) = match find_path(&g, &mut rng, &config) {
        Ok(result) => {
            let verdict = verify_path(&g, &result.vertices);
            let failure = verdict.err().map(|d| d.to_string());
            (PathResultFile::new(&result, bits, failure.is_none(), failure), result.ledger)
        }
        Err(failure) => (PathResultFile::from_failure(&failure, bits), failure.partial.ledger),
    };
    write_json(&file, &args.out)?;
    if let Some(path) = &args.transcript {
        let out = output(&Some(path.clone()))?;
        let mut out = out;
        formats::write_transcript(&ledger, bits, &mut out)
            .and_then(|_| out.flush().map_err(FormatError::from))
            .map_err(|source| InputError::Format { path: path.display().to_string(), source })?;
    }
    match &file.failure {
        None => {
            eprintln!(
                "found a path of {} vertices with {} walks and {} queries",
                file.vertices.len(),
                file.propagator_applications,
                file.queries
            );
            Ok(Ok(()))
        }
        Some(reason) => {
            eprintln!("pathfinding failed: {reason}");
            Ok(Err(Failed))
        }
    }
}

#[derive(Serialize)]
struct VertexProbability {
    name_hex: String,
    role: String,
    probability: f64,
}

#[derive(Serialize)]
struct SampleCount {
    name_hex: String,
    role: String,
    count: usize,
}

#[derive(Serialize)]
struct WalkReport {
    start: String,
    start_role: String,
    time: f64,
    restricted: bool,
    component_size: usize,
    norm: f64,
    top: Vec<VertexProbability>,
    samples: Vec<SampleCount>,
}

fn walk(args: WalkArgs) -> Result<(), InputError> {
    if !args.time.is_finite() {
        return Err(invalid("--time must be finite"));
    }
    let (graph, default_start) = match (&args.graph, args.n) {
        (Some(path), _) => {
            let g = load_graph(path)?;
            let x = g.x();
            (g.graph().clone(), x)
        }
        (None, Some(n)) if args.tree => {
            let tree = WeldedTree::build(n, args.seed).map_err(invalid)?;
            let s = tree.s();
            (tree.graph().clone(), s)
        }
        (None, Some(n)) => {
            let g = GraphParams::new(n, args.seed).and_then(WeldedTreePathGraph::build).map_err(invalid)?;
            let x = g.x();
            (g.graph().clone(), x)
        }
        (None, None) => return Err(invalid("give --graph or --n")),
    };
    let start = match &args.start {
        Some(text) => resolve_vertex(&graph, text)?,
        None => default_start,
    };
    let config = args.propagator.config();
    let hamiltonian = Hamiltonian::from_graph(&graph, args.restricted);
    let propagator = ComponentPropagator::new(&hamiltonian, start, &config).map_err(invalid)?;
    let state = propagator.evolve_basis(start, args.time).map_err(invalid)?;
    let bits = graph.name_bits();
    let describe = |v: VertexId| (graph.name(v).hex(bits).to_string(), graph.role(v).to_string());

    let mut ranked: Vec<VertexId> = propagator.vertices().to_vec();
    ranked.sort_by(|a, b| state.probability(*b).total_cmp(&state.probability(*a)).then(a.cmp(b)));
    let top = ranked
        .iter()
        .take(args.top)
        .map(|&v| {
            let (name_hex, role) = describe(v);
            VertexProbability { name_hex, role, probability: state.probability(v) }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..args.samples {
        *counts.entry(measure(&state, &mut rng).map_err(invalid)?).or_insert(0usize) += 1;
    }
    let mut samples: Vec<SampleCount> = counts
        .into_iter()
        .map(|(v, count)| {
            let (name_hex, role) = describe(v);
            SampleCount { name_hex, role, count }
        })
        .collect();
    samples.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.name_hex.cmp(&b.name_hex)));

    let (start_hex, start_role) = describe(start);
    let report = WalkReport {
        start: start_hex,
        start_role,
        time: args.time,
        restricted: args.restricted,
        component_size: propagator.vertices().len(),
        norm: state.norm(),
        top,
        samples,
    };
    write_json(&report, &args.out)
}

fn classical(args: ClassicalArgs) -> Result<(), InputError> {
    if args.game == GameKind::Path {
        GraphParams::new(args.n, 0).map_err(invalid)?;
    }
    let pool = experiments::worker_pool(args.deterministic)?;
    let rows: Vec<_> = args
        .strategy
        .kinds()
        .into_iter()
        .map(|strategy| {
            let cell = GameCell { game: args.game, n: args.n, budget: args.budget, strategy };
            experiments::classical_cell(cell, args.trials, args.seed, &pool)
        })
        .collect();
    for row in &rows {
        eprintln!(
            "{} n={} budget={}: {}/{} wins ({:.4} +- {:.4})",
            row.strategy.label(),
            row.n,
            row.budget,
            row.wins,
            row.trials,
            row.win_rate,
            row.stderr
        );
    }
    write_rows(&rows, &args.out)
}

fn sweep(args: SweepArgs) -> Result<(), InputError> {
    let master = match (args.seed, args.deterministic) {
        (Some(seed), _) => seed,
        (None, true) => 0,
        (None, false) => rand::random(),
    };
    eprintln!("master seed {master}");
    let pool = experiments::worker_pool(args.deterministic)?;
    let propagator = args.propagator.config();
    propagator.validate().map_err(invalid)?;
    match args.kind {
        SweepKind::Hitting => {
            write_rows(&experiments::hitting_sweep(&args.n, args.points, master, &propagator, &pool), &args.out)
        }
        SweepKind::Pathfind => {
            for &n in &args.n {
                GraphParams::new(n, 0).map_err(invalid)?;
            }
            let config = PathfinderConfig { propagator, ..PathfinderConfig::default() };
            write_rows(&experiments::pathfind_sweep(&args.n, args.trials, master, &config, &pool), &args.out)
        }
        SweepKind::Classical => write_rows(
            &experiments::classical_sweep(
                args.game,
                &args.n,
                &args.budget,
                &args.strategy.kinds(),
                args.trials,
                master,
                &pool,
            ),
            &args.out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a).map(Ok),
        Command::Pathfind(a) => pathfind(a),
        Command::Walk(a) => walk(a).map(Ok),
        Command::Classical(a) => classical(a).map(Ok),
        Command::Sweep(a) => sweep(a).map(Ok),
    };
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failed)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
