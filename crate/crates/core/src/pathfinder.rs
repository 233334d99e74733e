//! Quantum-walk pathfinding on the welded-tree-path graph.
//!
//! Starting from `x = p_1`, each iteration looks at the two current
//! neighbours of `x`, walks on the filtered adjacency matrix `A'` from one of
//! them and measures. Seeing a vertex of degree `i + 3` (only `t_i` has it)
//! means the walk started inside welded tree `W^i`, so the other neighbour
//! continues the path. The chosen edge is then deleted and `x` advances.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::ctqw::{measure, ComponentPropagator, Hamiltonian, PropagatorConfig, WalkError};
use crate::graph::{LabeledGraph, VertexName, WeldedTreePathGraph};
use crate::oracle::{Oracle, OracleError, QueryLedger, Response};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathfinderConfig {
    pub propagator: PropagatorConfig,
    /// Walks per iteration; `n^2` when unset.
    pub repetitions: Option<usize>,
    /// Iteration guard; `n` when unset.
    pub max_iterations: Option<usize>,
    /// Walk times are drawn from `[0, tau_max]`; `n^5` when unset.
    pub tau_max: Option<f64>,
}

impl Default for PathfinderConfig {
    fn default() -> Self {
        PathfinderConfig {
            propagator: PropagatorConfig::default(),
            repetitions: None,
            max_iterations: None,
            tau_max: None,
        }
    }
}

/// [`PathfinderConfig`] with every default filled in for a given `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSettings {
    pub propagator: PropagatorConfig,
    pub repetitions: usize,
    pub max_iterations: usize,
    pub tau_max: f64,
}

impl PathfinderConfig {
    pub fn resolve(&self, n: u32) -> Result<StepSettings, WalkError> {
        self.propagator.validate()?;
        let n = n as usize;
        let tau_max = self.tau_max.unwrap_or((n * n * n * n * n) as f64);
        if !(tau_max >= 0.0 && tau_max.is_finite()) {
            return Err(WalkError::InvalidTime);
        }
        Ok(StepSettings {
            propagator: self.propagator,
            repetitions: self.repetitions.unwrap_or(n * n),
            max_iterations: self.max_iterations.unwrap_or(n),
            tau_max,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub tau: f64,
    pub vertex: VertexName,
    pub degree: usize,
}

/// What one iteration did.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace {
    pub iteration: usize,
    pub x: VertexName,
    /// The neighbour the walk started from.
    pub u1: VertexName,
    pub u2: VertexName,
    /// Size of the `A'` component of `u1`.
    pub component_size: usize,
    pub measurements: Vec<Measurement>,
    pub detected: bool,
    pub selected: (VertexName, VertexName),
}

impl StepTrace {
    pub fn repetitions(&self) -> usize {
        self.measurements.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub vertices: Vec<VertexName>,
    pub edges: Vec<(VertexName, VertexName)>,
    pub iterations: Vec<StepTrace>,
    pub propagator_applications: usize,
    pub ledger: QueryLedger,
}

impl PathResult {
    fn new(x: VertexName) -> Self {
        PathResult {
            vertices: alloc::vec![x],
            edges: Vec::new(),
            iterations: Vec::new(),
            propagator_applications: 0,
            ledger: QueryLedger::new(),
        }
    }

    /// Names obtained by measurement, which the algorithm may legitimately
    /// query.
    pub fn measured_names(&self) -> Vec<VertexName> {
        self.iterations.iter().flat_map(|t| t.measurements.iter().map(|m| m.vertex)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepError {
    /// `x` does not have exactly two neighbours (`None`: not a vertex).
    WrongDegree { vertex: VertexName, degree: Option<usize> },
    Walk(WalkError),
    Oracle(OracleError),
}

impl From<WalkError> for StepError {
    fn from(e: WalkError) -> Self {
        StepError::Walk(e)
    }
}

impl From<OracleError> for StepError {
    fn from(e: OracleError) -> Self {
        StepError::Oracle(e)
    }
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::WrongDegree { vertex, degree: Some(d) } => {
                write!(f, "vertex {:#x} has {d} neighbours, expected 2", vertex.bits())
            }
            StepError::WrongDegree { vertex, degree: None } => {
                write!(f, "{:#x} is not a vertex", vertex.bits())
            }
            StepError::Walk(e) => write!(f, "{e}"),
            StepError::Oracle(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for StepError {}

#[derive(Clone, Debug, PartialEq)]
pub enum FailureKind {
    InvalidConfig(WalkError),
    GuardExceeded { limit: usize },
    Step { iteration: usize, error: StepError },
}

/// A failed run with everything recorded up to the failure.
#[derive(Clone, Debug, PartialEq)]
pub struct PathfindFailure {
    pub kind: FailureKind,
    pub partial: Box<PathResult>,
}

impl fmt::Display for PathfindFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FailureKind::InvalidConfig(e) => write!(f, "invalid configuration: {e}"),
            FailureKind::GuardExceeded { limit } => {
                write!(f, "did not reach y within {limit} iterations")
            }
            FailureKind::Step { iteration, error } => write!(f, "iteration {iteration}: {error}"),
        }
    }
}

impl core::error::Error for PathfindFailure {}

/// One iteration: picks the path edge leaving `x`.
///
/// `x` must have exactly two neighbours in the oracle's current graph. The
/// walk runs on `A'` of that graph from `u1`, with a fresh uniform time per
/// repetition, until a vertex of degree `iteration + 3` is measured or the
/// repetitions run out.
pub fn select_step<R: Rng + ?Sized>(
    oracle: &mut Oracle<'_>,
    x: VertexName,
    iteration: usize,
    settings: &StepSettings,
    rng: &mut R,
) -> Result<((VertexName, VertexName), StepTrace), StepError> {
    let neighbors = match oracle.neighbors(x)? {
        Response::Neighbors(list) if list.len() == 2 => list,
        other => return Err(StepError::WrongDegree { vertex: x, degree: other.degree() }),
    };
    let (u1, u2) = if rng.gen::<bool>() { (neighbors[0], neighbors[1]) } else { (neighbors[1], neighbors[0]) };

    let graph = oracle.graph();
    let start = graph.vertex_by_name(u1).expect("oracle returned a valid name");
    let hamiltonian = Hamiltonian::from_graph(graph, true);
    let propagator = ComponentPropagator::new(&hamiltonian, start, &settings.propagator)?;

    let target_degree = iteration + 3;
    let mut measurements = Vec::new();
    let mut detected = false;
    for _ in 0..settings.repetitions {
        let tau = rng.gen::<f64>() * settings.tau_max;
        let state = propagator.evolve_basis(start, tau)?;
        let outcome = graph.name(measure(&state, rng)?);
        let degree = oracle.neighbors(outcome)?.degree().unwrap_or(0);
        measurements.push(Measurement { tau, vertex: outcome, degree });
        if degree == target_degree {
            detected = true;
            break;
        }
    }
    let selected = if detected { (x, u2) } else { (x, u1) };
    let trace = StepTrace {
        iteration,
        x,
        u1,
        u2,
        component_size: propagator.vertices().len(),
        measurements,
        detected,
        selected,
    };
    Ok((selected, trace))
}

/// Runs the full algorithm on a private copy of `pristine`.
pub fn find_path<R: Rng + ?Sized>(
    pristine: &WeldedTreePathGraph,
    rng: &mut R,
    config: &PathfinderConfig,
) -> Result<PathResult, PathfindFailure> {
    let graph = pristine.graph();
    let x = graph.name(pristine.x());
    let y = graph.name(pristine.y());
    let mut result = PathResult::new(x);
    let settings = match config.resolve(pristine.n()) {
        Ok(s) => s,
        Err(e) => return Err(PathfindFailure { kind: FailureKind::InvalidConfig(e), partial: Box::new(result) }),
    };

    let mut working = graph.clone();
    let mut current = x;
    let mut iteration = 1;
    while current != y {
        if iteration > settings.max_iterations {
            return Err(PathfindFailure {
                kind: FailureKind::GuardExceeded { limit: settings.max_iterations },
                partial: Box::new(result),
            });
        }
        let mut oracle = Oracle::new(&working).with_ledger(core::mem::take(&mut result.ledger));
        let step = select_step(&mut oracle, current, iteration, &settings, rng);
        result.ledger = oracle.into_ledger();
        let (edge, trace) = match step {
            Ok(ok) => ok,
            Err(error) => {
                return Err(PathfindFailure {
                    kind: FailureKind::Step { iteration, error },
                    partial: Box::new(result),
                })
            }
        };
        result.propagator_applications += trace.repetitions();
        result.iterations.push(trace);
        let from = working.vertex_by_name(edge.0).expect("known name");
        let to = working.vertex_by_name(edge.1).expect("known name");
        working.delete_edge(from, to).expect("selected edge exists");
        result.edges.push(edge);
        result.vertices.push(edge.1);
        current = edge.1;
        iteration += 1;
    }
    Ok(result)
}

/// Why a name sequence is not an `x`-`y` path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathDefect {
    Empty,
    InvalidName { index: usize },
    WrongStart,
    WrongEnd,
    NotAdjacent { index: usize },
    RepeatedVertex { index: usize },
}

impl fmt::Display for PathDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathDefect::Empty => f.write_str("empty path"),
            PathDefect::InvalidName { index } => write!(f, "entry {index} is not a vertex name"),
            PathDefect::WrongStart => f.write_str("path does not start at x"),
            PathDefect::WrongEnd => f.write_str("path does not end at y"),
            PathDefect::NotAdjacent { index } => write!(f, "entries {} and {index} are not adjacent", index - 1),
            PathDefect::RepeatedVertex { index } => write!(f, "entry {index} repeats a vertex"),
        }
    }
}

/// Checks a name sequence is a simple `x`-`y` path of the pristine graph,
/// `x` first.
pub fn verify_path(pristine: &WeldedTreePathGraph, path: &[VertexName]) -> Result<(), PathDefect> {
    let graph = pristine.graph();
    verify_path_in(graph, graph.name(pristine.x()), graph.name(pristine.y()), path)
}

pub fn verify_path_in(
    graph: &LabeledGraph,
    x: VertexName,
    y: VertexName,
    path: &[VertexName],
) -> Result<(), PathDefect> {
    if path.is_empty() {
        return Err(PathDefect::Empty);
    }
    let mut ids = Vec::with_capacity(path.len());
    for (index, &name) in path.iter().enumerate() {
        ids.push(graph.vertex_by_name(name).ok_or(PathDefect::InvalidName { index })?);
    }
    if path[0] != x {
        return Err(PathDefect::WrongStart);
    }
    if path[path.len() - 1] != y {
        return Err(PathDefect::WrongEnd);
    }
    for index in 1..ids.len() {
        if !graph.has_edge(ids[index - 1], ids[index]) {
            return Err(PathDefect::NotAdjacent { index });
        }
    }
    let mut seen = BTreeSet::new();
    for (index, id) in ids.iter().enumerate() {
        if !seen.insert(*id) {
            return Err(PathDefect::RepeatedVertex { index });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture(n: u32, seed: u64) -> WeldedTreePathGraph {
        WeldedTreePathGraph::build(GraphParams::new(n, seed).unwrap()).unwrap()
    }

    fn path_names(g: &WeldedTreePathGraph) -> Vec<VertexName> {
        (1..=g.n()).map(|i| g.graph().name(g.path_vertex(i))).collect()
    }

    #[test]
    fn n2_finds_the_only_path_edge() {
        let g = fixture(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Enough repetitions that a missed detection is negligible.
        let config = PathfinderConfig { repetitions: Some(200), ..Default::default() };
        let result = find_path(&g, &mut rng, &config).unwrap();
        assert_eq!(result.vertices, path_names(&g));
        assert!(verify_path(&g, &result.vertices).is_ok());
    }

    #[test]
    fn verify_path_contract() {
        let g = fixture(4, 8);
        let names = path_names(&g);
        assert_eq!(verify_path(&g, &names), Ok(()));
        let mut reversed = names.clone();
        reversed.reverse();
        assert_eq!(verify_path(&g, &reversed), Err(PathDefect::WrongStart));
        let unused = (1u128..).map(VertexName::from_bits).find(|n| g.graph().vertex_by_name(*n).is_none()).unwrap();
        let mut tampered = names.clone();
        tampered[2] = unused;
        assert_eq!(verify_path(&g, &tampered), Err(PathDefect::InvalidName { index: 2 }));
        assert_eq!(verify_path(&g, &[]), Err(PathDefect::Empty));
        let skip = [names[0], names[2], names[3]];
        assert_eq!(verify_path(&g, &skip), Err(PathDefect::NotAdjacent { index: 1 }));
        let back_and_forth = [names[0], names[1], names[0], names[1], names[2], names[3]];
        assert_eq!(verify_path(&g, &back_and_forth), Err(PathDefect::RepeatedVertex { index: 2 }));
    }

    #[test]
    fn guard_stops_the_run() {
        let g = fixture(4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let config = PathfinderConfig { max_iterations: Some(1), ..Default::default() };
        let failure = find_path(&g, &mut rng, &config).unwrap_err();
        assert_eq!(failure.kind, FailureKind::GuardExceeded { limit: 1 });
        assert_eq!(failure.partial.iterations.len(), 1);
    }

    #[test]
    fn select_step_rejects_a_branching_vertex() {
        let g = fixture(4, 2);
        let graph = g.graph();
        let mut oracle = Oracle::new(graph);
        let settings = PathfinderConfig::default().resolve(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p2 = graph.name(g.path_vertex(2));
        let err = select_step(&mut oracle, p2, 1, &settings, &mut rng).unwrap_err();
        assert_eq!(err, StepError::WrongDegree { vertex: p2, degree: Some(3) });
    }
}
