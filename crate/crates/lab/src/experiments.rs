//! Monte Carlo cells and sweeps.
//!
//! A cell is one parameter combination run for a number of trials. Trials
//! are independent, each driven by its own generator from
//! [`seeds::trial_rng`], and results are collected in trial order, so a row
//! depends only on its parameters and cell seed, never on the thread count.

use std::io::Write;

use rand::RngCore;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use serde::Serialize;
use wpl_core::classical::{play_game, BfsFrontier, GameContext, RandomWalk};
use wpl_core::ctqw::ComponentPropagator;
use wpl_core::graph::{GraphParams, WeldedTree, WeldedTreePathGraph};
use wpl_core::{find_path, verify_path, Hamiltonian, Oracle, PathfinderConfig, PropagatorConfig, Referee, Strategy};

use crate::seeds::{cell_seed, trial_rng};

pub const THREADS_VAR: &str = "WPL_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("{THREADS_VAR} must be a positive integer, found {0:?}")]
    Threads(String),
    #[error("could not start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Worker pool for trials. Deterministic mode uses one worker; otherwise
/// `WPL_THREADS` caps the count, defaulting to rayon's choice.
pub fn worker_pool(deterministic: bool) -> Result<ThreadPool, ExperimentError> {
    let threads = if deterministic {
        1
    } else {
        match std::env::var(THREADS_VAR) {
            Ok(text) => match text.trim().parse::<usize>() {
                Ok(k) if k > 0 => k,
                _ => return Err(ExperimentError::Threads(text)),
            },
            Err(_) => 0,
        }
    };
    Ok(ThreadPoolBuilder::new().num_threads(threads).build()?)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

fn status(errors: &[String]) -> String {
    match errors.first() {
        None => String::from("ok"),
        Some(first) if errors.len() == 1 => first.clone(),
        Some(first) => format!("{} errors, first: {first}", errors.len()),
    }
}

/// Time-averaged probability of reaching `t` from `s` on a single welded
/// tree of height `n`, over the midpoint grid on `[0, n^5]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingRow {
    pub n: u32,
    pub tau_max: f64,
    pub points: usize,
    pub p_hit: Option<f64>,
    pub stderr: Option<f64>,
    pub p_hit_times_n: Option<f64>,
    pub seed: u64,
    pub status: String,
}

pub fn hitting_cell(n: u32, points: usize, seed: u64, propagator: &PropagatorConfig, pool: &ThreadPool) -> HittingRow {
    let tau_max = n.pow(5) as f64;
    let failed = |message: String| HittingRow {
        n,
        tau_max,
        points,
        p_hit: None,
        stderr: None,
        p_hit_times_n: None,
        seed,
        status: message,
    };
    if points == 0 {
        return failed(String::from("points must be positive"));
    }
    let tree = match WeldedTree::build(n, seed) {
        Ok(t) => t,
        Err(e) => return failed(e.to_string()),
    };
    let hamiltonian = Hamiltonian::from_graph(tree.graph(), false);
    let propagator = match ComponentPropagator::new(&hamiltonian, tree.s(), propagator) {
        Ok(p) => p,
        Err(e) => return failed(e.to_string()),
    };
    let (s, t) = (tree.s(), tree.t());
    let values: Result<Vec<f64>, _> = pool.install(|| {
        (0..points)
            .into_par_iter()
            .map(|j| propagator.target_probability(s, &[t], (j as f64 + 0.5) * tau_max / points as f64))
            .collect()
    });
    match values {
        Ok(values) => {
            let (mean, stderr) = mean_and_stderr(&values);
            HittingRow {
                n,
                tau_max,
                points,
                p_hit: Some(mean),
                stderr: Some(stderr),
                p_hit_times_n: Some(mean * n as f64),
                seed,
                status: String::from("ok"),
            }
        }
        Err(e) => failed(e.to_string()),
    }
}

pub fn hitting_sweep(
    heights: &[u32],
    points: usize,
    master: u64,
    propagator: &PropagatorConfig,
    pool: &ThreadPool,
) -> Vec<HittingRow> {
    heights
        .iter()
        .enumerate()
        .map(|(cell, &n)| hitting_cell(n, points, cell_seed(master, cell), propagator, pool))
        .collect()
}

/// One pathfinding trial: a fresh graph and a full run.
#[derive(Clone, Debug, PartialEq)]
pub struct PathTrial {
    pub graph_seed: u64,
    pub success: bool,
    pub propagator_applications: usize,
    pub queries: usize,
    /// Set when the run stopped early or returned a wrong path.
    pub failure: Option<String>,
    /// Set when the trial could not run at all.
    pub error: Option<String>,
}

pub fn pathfind_trial(n: u32, cell_seed: u64, trial: usize, config: &PathfinderConfig) -> PathTrial {
    let mut rng = trial_rng(cell_seed, trial);
    let graph_seed = rng.next_u64();
    let mut out =
        PathTrial { graph_seed, success: false, propagator_applications: 0, queries: 0, failure: None, error: None };
    let g = match GraphParams::new(n, graph_seed).and_then(WeldedTreePathGraph::build) {
        Ok(g) => g,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    match find_path(&g, &mut rng, config) {
        Ok(result) => {
            out.propagator_applications = result.propagator_applications;
            out.queries = result.ledger.count();
            let expected: Vec<_> = (1..=n).map(|i| g.graph().name(g.path_vertex(i))).collect();
            match verify_path(&g, &result.vertices) {
                Ok(()) if result.vertices == expected => out.success = true,
                Ok(()) => out.failure = Some(String::from("valid path but not the path p_1 .. p_n")),
                Err(defect) => out.failure = Some(defect.to_string()),
            }
        }
        Err(failure) => {
            out.propagator_applications = failure.partial.propagator_applications;
            out.queries = failure.partial.ledger.count();
            match failure.kind {
                wpl_core::pathfinder::FailureKind::Step { error: wpl_core::pathfinder::StepError::Walk(ref e), .. } => {
                    out.error = Some(e.to_string())
                }
                _ => out.failure = Some(failure.to_string()),
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathfindRow {
    pub n: u32,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub stderr: f64,
    pub mean_applications: f64,
    pub mean_queries: f64,
    pub seed: u64,
    pub status: String,
}

pub fn pathfind_cell(
    n: u32,
    trials: usize,
    seed: u64,
    config: &PathfinderConfig,
    pool: &ThreadPool,
) -> (PathfindRow, Vec<PathTrial>) {
    let runs: Vec<PathTrial> =
        pool.install(|| (0..trials).into_par_iter().map(|t| pathfind_trial(n, seed, t, config)).collect());
    let successes: Vec<f64> = runs.iter().map(|r| if r.success { 1.0 } else { 0.0 }).collect();
    let (rate, stderr) = if runs.is_empty() { (0.0, 0.0) } else { mean_and_stderr(&successes) };
    let mean = |f: fn(&PathTrial) -> usize| {
        if runs.is_empty() {
            0.0
        } else {
            runs.iter().map(f).sum::<usize>() as f64 / runs.len() as f64
        }
    };
    let errors: Vec<String> = runs.iter().filter_map(|r| r.error.clone()).collect();
    let row = PathfindRow {
        n,
        trials,
        successes: runs.iter().filter(|r| r.success).count(),
        success_rate: rate,
        stderr,
        mean_applications: mean(|r| r.propagator_applications),
        mean_queries: mean(|r| r.queries),
        seed,
        status: status(&errors),
    };
    (row, runs)
}

pub fn pathfind_sweep(
    ns: &[u32],
    trials: usize,
    master: u64,
    config: &PathfinderConfig,
    pool: &ThreadPool,
) -> Vec<PathfindRow> {
    ns.iter()
        .enumerate()
        .map(|(cell, &n)| pathfind_cell(n, trials, cell_seed(master, cell), config, pool).0)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    RandomWalk,
    Bfs,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 2] = [StrategyKind::RandomWalk, StrategyKind::Bfs];

    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::RandomWalk => "random-walk",
            StrategyKind::Bfs => "bfs",
        }
    }

    fn make(self, budget: usize) -> Box<dyn Strategy> {
        match self {
            StrategyKind::RandomWalk => Box::new(RandomWalk { steps: budget }),
            StrategyKind::Bfs => Box::new(BfsFrontier { budget }),
        }
    }
}

/// Which hidden graph a classical game is played on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    /// A single welded tree of height `n`; printing `t` or closing a cycle
    /// wins.
    Tree,
    /// The welded-tree-path graph with parameter `n`, Game B rules.
    Path,
}

impl GameKind {
    pub fn label(self) -> &'static str {
        match self {
            GameKind::Tree => "tree",
            GameKind::Path => "path",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameTrial {
    pub won: bool,
    pub queries: usize,
    pub error: Option<String>,
}

pub fn classical_trial(game: GameKind, n: u32, budget: usize, strategy: StrategyKind, cell_seed: u64, trial: usize) -> GameTrial {
    let mut rng = trial_rng(cell_seed, trial);
    let graph_seed = rng.next_u64();
    let mut player = strategy.make(budget);
    let outcome = match game {
        GameKind::Tree => WeldedTree::build(n, graph_seed).map(|tree| {
            let mut oracle = Oracle::new(tree.graph()).with_budget(budget);
            play_game(
                player.as_mut(),
                &mut oracle,
                &GameContext::for_welded_tree(&tree),
                &Referee::welded_tree(&tree),
                &mut rng,
            )
        }),
        GameKind::Path => GraphParams::new(n, graph_seed).and_then(WeldedTreePathGraph::build).map(|g| {
            let mut oracle = Oracle::new(g.graph()).with_budget(budget);
            play_game(player.as_mut(), &mut oracle, &GameContext::for_path_graph(&g), &Referee::game_b(&g), &mut rng)
        }),
    };
    match outcome {
        Ok(o) => GameTrial { won: o.won(), queries: o.queries_used, error: None },
        Err(e) => GameTrial { won: false, queries: 0, error: Some(e.to_string()) },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameRow {
    pub game: GameKind,
    pub n: u32,
    pub budget: usize,
    pub strategy: StrategyKind,
    pub trials: usize,
    pub wins: usize,
    pub win_rate: f64,
    pub stderr: f64,
    pub mean_queries: f64,
    pub seed: u64,
    pub status: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameCell {
    pub game: GameKind,
    pub n: u32,
    pub budget: usize,
    pub strategy: StrategyKind,
}

pub fn classical_cell(cell: GameCell, trials: usize, seed: u64, pool: &ThreadPool) -> GameRow {
    let runs: Vec<GameTrial> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| classical_trial(cell.game, cell.n, cell.budget, cell.strategy, seed, t))
            .collect()
    });
    let wins: Vec<f64> = runs.iter().map(|r| if r.won { 1.0 } else { 0.0 }).collect();
    let (rate, stderr) = if runs.is_empty() { (0.0, 0.0) } else { mean_and_stderr(&wins) };
    let mean_queries =
        if runs.is_empty() { 0.0 } else { runs.iter().map(|r| r.queries).sum::<usize>() as f64 / runs.len() as f64 };
    let errors: Vec<String> = runs.iter().filter_map(|r| r.error.clone()).collect();
    GameRow {
        game: cell.game,
        n: cell.n,
        budget: cell.budget,
        strategy: cell.strategy,
        trials,
        wins: runs.iter().filter(|r| r.won).count(),
        win_rate: rate,
        stderr,
        mean_queries,
        seed,
        status: status(&errors),
    }
}

/// Every combination of `ns`, `budgets` and `strategies`, in that nesting
/// order; the cell index used for seeding is the position in this list.
pub fn classical_sweep(
    game: GameKind,
    ns: &[u32],
    budgets: &[usize],
    strategies: &[StrategyKind],
    trials: usize,
    master: u64,
    pool: &ThreadPool,
) -> Vec<GameRow> {
    let mut cells = Vec::new();
    for &n in ns {
        for &budget in budgets {
            for &strategy in strategies {
                cells.push(GameCell { game, n, budget, strategy });
            }
        }
    }
    cells
        .into_iter()
        .enumerate()
        .map(|(index, cell)| classical_cell(cell, trials, cell_seed(master, index), pool))
        .collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), ExperimentError> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
