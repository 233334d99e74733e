//! Classical side: oracle games, strategies, random tree embeddings and the
//! closed-form win-probability bound.
//!
//! Game A is won by printing the names of an `x`-`y` path. Game B is the
//! relaxation used for the lower bound: it is won by printing the name of a
//! degree >= 4 vertex (a root `t_i`) or of `p_{n/2}`, or by having found a
//! cycle among the visited vertices. On a single welded tree the critical
//! vertex is the far root `t`.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, RngCore};

use crate::graph::{LabeledGraph, VertexId, VertexName, VertexRole, WeldedTree, WeldedTreePathGraph};
use crate::oracle::{Oracle, OracleError, QueryLedger, Response};
use crate::pathfinder::verify_path_in;
use crate::union_find::UnionFind;

/// `8 (n + 1) 2^(-n/6)`: the bound on winning with `2^(n/6)` queries.
pub fn theoretical_bound(n: u32) -> f64 {
    8.0 * (n as f64 + 1.0) * libm::exp2(-(n as f64) / 6.0)
}

/// Incremental cycle detection over discovered edges.
#[derive(Clone, Debug, Default)]
pub struct CycleDetector {
    index: BTreeMap<VertexName, usize>,
    sets: UnionFind,
    edges: BTreeSet<(VertexName, VertexName)>,
}

impl CycleDetector {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&mut self, name: VertexName) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.sets.push();
        self.index.insert(name, i);
        i
    }

    /// Records edge `a-b`; true iff it is new and closes a cycle. Seeing a
    /// known edge again is not a cycle.
    pub fn observe(&mut self, a: VertexName, b: VertexName) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        if !self.edges.insert(key) {
            return false;
        }
        let (ia, ib) = (self.slot(a), self.slot(b));
        !self.sets.union(ia, ib)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// True iff adding `new_edge` to the discovered edge set closes a cycle.
pub fn detect_cycle(visited: &[(VertexName, VertexName)], new_edge: (VertexName, VertexName)) -> bool {
    let mut detector = CycleDetector::new();
    for &(a, b) in visited {
        detector.observe(a, b);
    }
    detector.observe(new_edge.0, new_edge.1)
}

/// True iff the served part of a transcript contains a cycle.
pub fn transcript_has_cycle(ledger: &QueryLedger) -> bool {
    let mut detector = CycleDetector::new();
    let mut found = false;
    for record in ledger.records() {
        if let Response::Neighbors(list) = &record.response {
            for &w in list {
                found |= detector.observe(record.name, w);
            }
        }
    }
    found
}

/// Names a strategy starts with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameContext {
    pub start: VertexName,
    pub end: Option<VertexName>,
}

impl GameContext {
    pub fn for_path_graph(g: &WeldedTreePathGraph) -> Self {
        GameContext { start: g.graph().name(g.x()), end: Some(g.graph().name(g.y())) }
    }

    pub fn for_welded_tree(tree: &WeldedTree) -> Self {
        GameContext { start: tree.graph().name(tree.s()), end: None }
    }

    pub fn given(&self) -> Vec<VertexName> {
        core::iter::once(self.start).chain(self.end).collect()
    }
}

/// What a strategy hands to the referee.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StrategyOutput {
    pub names: Vec<VertexName>,
    pub path: Option<Vec<VertexName>>,
}

/// A classical algorithm that sees the graph only through the oracle.
pub trait Strategy {
    fn label(&self) -> &str;

    fn play(
        &mut self,
        oracle: &mut Oracle<'_>,
        context: &GameContext,
        rng: &mut dyn RngCore,
    ) -> Result<StrategyOutput, OracleError>;
}

/// Outputs nothing.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullStrategy;

impl Strategy for NullStrategy {
    fn label(&self) -> &str {
        "null"
    }

    fn play(&mut self, _: &mut Oracle<'_>, _: &GameContext, _: &mut dyn RngCore) -> Result<StrategyOutput, OracleError> {
        Ok(StrategyOutput::default())
    }
}

/// A vertex whose degree is not 3 and which was not given up front: in both
/// graph families this marks a root, a plug vertex or the far end.
fn unusual(name: VertexName, degree: usize, context: &GameContext) -> bool {
    degree != 3 && name != context.start && Some(name) != context.end
}

/// Walks from the start to a uniformly random neighbour each step, one query
/// per step. Stops early on a cycle or an unusual degree. Outputs every name
/// it has seen.
#[derive(Clone, Copy, Debug)]
pub struct RandomWalk {
    pub steps: usize,
}

impl Strategy for RandomWalk {
    fn label(&self) -> &str {
        "random-walk"
    }

    fn play(
        &mut self,
        oracle: &mut Oracle<'_>,
        context: &GameContext,
        rng: &mut dyn RngCore,
    ) -> Result<StrategyOutput, OracleError> {
        let mut known: BTreeSet<VertexName> = context.given().into_iter().collect();
        let mut detector = CycleDetector::new();
        let mut current = context.start;
        for _ in 0..self.steps {
            let list = match oracle.neighbors(current)? {
                Response::Bot => break,
                Response::Neighbors(list) => list,
            };
            let mut closed = false;
            for &w in &list {
                closed |= detector.observe(current, w);
                known.insert(w);
            }
            if closed || list.is_empty() || unusual(current, list.len(), context) {
                break;
            }
            current = list[rng.gen_range(0..list.len())];
        }
        Ok(StrategyOutput { names: known.into_iter().collect(), path: None })
    }
}

/// Breadth-first exploration from every given name, at most `budget`
/// queries. Stops early on a cycle or an unusual degree.
#[derive(Clone, Copy, Debug)]
pub struct BfsFrontier {
    pub budget: usize,
}

impl Strategy for BfsFrontier {
    fn label(&self) -> &str {
        "bfs"
    }

    fn play(
        &mut self,
        oracle: &mut Oracle<'_>,
        context: &GameContext,
        _rng: &mut dyn RngCore,
    ) -> Result<StrategyOutput, OracleError> {
        let given = context.given();
        let mut known: BTreeSet<VertexName> = given.iter().copied().collect();
        let mut queue: VecDeque<VertexName> = given.into_iter().collect();
        let mut detector = CycleDetector::new();
        let mut spent = 0;
        while let Some(current) = queue.pop_front() {
            if spent == self.budget {
                break;
            }
            spent += 1;
            let list = match oracle.neighbors(current)? {
                Response::Bot => continue,
                Response::Neighbors(list) => list,
            };
            let mut closed = false;
            for &w in &list {
                closed |= detector.observe(current, w);
                if known.insert(w) {
                    queue.push_back(w);
                }
            }
            if closed || unusual(current, list.len(), context) {
                break;
            }
        }
        Ok(StrategyOutput { names: known.into_iter().collect(), path: None })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WinReason {
    /// Printed a vertex of degree >= 4.
    HighDegree,
    /// Printed `p_{n/2}`.
    Halfway,
    /// Printed the far root of a single welded tree.
    EndRoot,
    FoundCycle,
    ValidPath,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Win,
    Lose,
    BudgetExhausted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameOutcome {
    pub verdict: Verdict,
    pub reason: Option<WinReason>,
    pub queries_used: usize,
}

impl GameOutcome {
    pub fn won(&self) -> bool {
        self.verdict == Verdict::Win
    }
}

/// Judges a strategy's output against the hidden graph.
#[derive(Clone, Debug)]
pub enum Referee<'a> {
    /// Game A: a valid `x`-`y` path wins.
    Path { graph: &'a LabeledGraph, x: VertexName, y: VertexName },
    /// Game B: any critical name in the output, or a cycle in the
    /// transcript, wins.
    Exit { critical: Vec<(VertexName, WinReason)> },
}

impl<'a> Referee<'a> {
    pub fn game_a(g: &'a WeldedTreePathGraph) -> Self {
        let graph = g.graph();
        Referee::Path { graph, x: graph.name(g.x()), y: graph.name(g.y()) }
    }

    pub fn game_b(g: &WeldedTreePathGraph) -> Self {
        let graph = g.graph();
        let mut critical: Vec<(VertexName, WinReason)> =
            (1..=g.n()).map(|i| (graph.name(g.root_t(i)), WinReason::HighDegree)).collect();
        critical.push((graph.name(g.path_vertex(g.n() / 2)), WinReason::Halfway));
        Referee::Exit { critical }
    }

    pub fn welded_tree(tree: &WeldedTree) -> Self {
        Referee::Exit { critical: vec![(tree.graph().name(tree.t()), WinReason::EndRoot)] }
    }

    pub fn judge(&self, output: &StrategyOutput, ledger: &QueryLedger) -> GameOutcome {
        let queries_used = ledger.count();
        let reason = match self {
            Referee::Path { graph, x, y } => output
                .path
                .as_ref()
                .filter(|path| verify_path_in(graph, *x, *y, path).is_ok())
                .map(|_| WinReason::ValidPath),
            Referee::Exit { critical } => {
                let printed: BTreeSet<VertexName> = output.names.iter().copied().collect();
                critical
                    .iter()
                    .find(|(name, _)| printed.contains(name))
                    .map(|&(_, reason)| reason)
                    .or_else(|| transcript_has_cycle(ledger).then_some(WinReason::FoundCycle))
            }
        };
        GameOutcome {
            verdict: if reason.is_some() { Verdict::Win } else { Verdict::Lose },
            reason,
            queries_used,
        }
    }
}

/// Plays one game. Running out of budget mid-strategy loses.
pub fn play_game(
    strategy: &mut dyn Strategy,
    oracle: &mut Oracle<'_>,
    context: &GameContext,
    referee: &Referee<'_>,
    rng: &mut dyn RngCore,
) -> GameOutcome {
    match strategy.play(oracle, context, rng) {
        Ok(output) => referee.judge(&output, oracle.ledger()),
        Err(OracleError::BudgetExhausted { .. }) => GameOutcome {
            verdict: Verdict::BudgetExhausted,
            reason: None,
            queries_used: oracle.query_count(),
        },
    }
}

/// A rooted tree in which every internal node has exactly two children.
/// Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedBinaryTree {
    parent: Vec<Option<usize>>,
    children: Vec<Option<[usize; 2]>>,
}

impl RootedBinaryTree {
    pub fn singleton() -> Self {
        RootedBinaryTree { parent: vec![None], children: vec![None] }
    }

    /// Complete tree with leaves at the given depth.
    pub fn complete(depth: u32) -> Self {
        let mut tree = Self::singleton();
        let mut frontier = vec![0];
        for _ in 0..depth {
            frontier = frontier.into_iter().flat_map(|node| tree.expand(node)).collect();
        }
        tree
    }

    /// Grows from a single node by expanding uniformly chosen leaves while
    /// the size stays within `max_size`.
    pub fn random<R: Rng + ?Sized>(max_size: usize, rng: &mut R) -> Self {
        let mut tree = Self::singleton();
        let mut leaves = vec![0];
        while tree.len() + 2 <= max_size {
            let pick = leaves.swap_remove(rng.gen_range(0..leaves.len()));
            leaves.extend(tree.expand(pick));
        }
        tree
    }

    /// Gives a leaf two children and returns them.
    pub fn expand(&mut self, node: usize) -> [usize; 2] {
        assert!(self.children[node].is_none(), "node {node} already has children");
        let kids = [self.parent.len(), self.parent.len() + 1];
        for _ in kids {
            self.parent.push(Some(node));
            self.children.push(None);
        }
        self.children[node] = Some(kids);
        kids
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> Option<[usize; 2]> {
        self.children[node]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoinFlip {
    /// The node whose children were placed.
    pub node: usize,
    /// False: first child took the lower-listed neighbour.
    pub swapped: bool,
}

/// Where the embedding stopped: `node`'s image does not have exactly two
/// neighbours besides its parent's image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbeddingHalt {
    pub node: usize,
    pub image: VertexId,
    pub available: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    images: Vec<Option<VertexId>>,
    pub coins: Vec<CoinFlip>,
    pub halt: Option<EmbeddingHalt>,
}

impl Embedding {
    pub fn image(&self, node: usize) -> Option<VertexId> {
        self.images[node]
    }

    pub fn images(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.images.iter().flatten().copied()
    }

    /// Injective on the nodes that were mapped.
    pub fn is_proper(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.images().all(|v| seen.insert(v))
    }

    /// Some image has degree >= 4 in `g`, or is `p_{n/2}` or `p_n`.
    pub fn exits(&self, g: &WeldedTreePathGraph) -> bool {
        let half = g.path_vertex(g.n() / 2);
        let end = g.y();
        self.images().any(|v| v == half || v == end || g.graph().neighbors(v).len() >= 4)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddingError {
    /// The start vertex must have exactly two neighbours.
    StartDegree { degree: usize },
    StartOutOfRange,
}

impl fmt::Display for EmbeddingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingError::StartDegree { degree } => {
                write!(f, "embedding start has degree {degree}, expected 2")
            }
            EmbeddingError::StartOutOfRange => f.write_str("embedding start is not a vertex"),
        }
    }
}

impl core::error::Error for EmbeddingError {}

/// Random top-down embedding of `tree` into `graph` rooted at `start`.
///
/// The root maps to `start` and its two children to the two neighbours of
/// `start` in random order. Every further internal node passes the two
/// neighbours of its image other than its parent's image to its children,
/// again in random order. If an image has some other number of such
/// neighbours, the embedding halts there and records the halt.
pub fn random_embedding<R: Rng + ?Sized>(
    tree: &RootedBinaryTree,
    graph: &LabeledGraph,
    start: VertexId,
    rng: &mut R,
) -> Result<Embedding, EmbeddingError> {
    let degree = graph.degree(start).map_err(|_| EmbeddingError::StartOutOfRange)?;
    if degree != 2 {
        return Err(EmbeddingError::StartDegree { degree });
    }
    let mut embedding = Embedding { images: vec![None; tree.len()], coins: Vec::new(), halt: None };
    embedding.images[0] = Some(start);
    let mut queue = VecDeque::from([0usize]);
    while let Some(node) = queue.pop_front() {
        let Some(kids) = tree.children(node) else { continue };
        let image = embedding.images[node].expect("parents are mapped first");
        let mut options: Vec<VertexId> = graph.neighbors(image).to_vec();
        if let Some(parent) = tree.parent(node) {
            let parent_image = embedding.images[parent].expect("mapped");
            if let Some(pos) = options.iter().position(|&w| w == parent_image) {
                options.remove(pos);
            }
        }
        if options.len() != 2 {
            embedding.halt = Some(EmbeddingHalt { node, image, available: options.len() });
            break;
        }
        let swapped = rng.gen::<bool>();
        if swapped {
            options.swap(0, 1);
        }
        embedding.coins.push(CoinFlip { node, swapped });
        for (kid, target) in kids.into_iter().zip(options) {
            embedding.images[kid] = Some(target);
            queue.push_back(kid);
        }
    }
    Ok(embedding)
}

/// True when a vertex role is one of Game B's critical vertices.
pub fn is_game_b_critical(g: &WeldedTreePathGraph, v: VertexId) -> bool {
    matches!(g.graph().role(v), VertexRole::RootT(_)) || v == g.path_vertex(g.n() / 2)
}
