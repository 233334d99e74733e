//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test -p wpl --test acceptance -- 1 4`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wpl::experiments::{classical_cell, worker_pool, GameCell, GameKind, StrategyKind};
use wpl::seeds::{cell_seed, trial_rng};
use wpl_core::classical::{BfsFrontier, GameContext, RandomWalk, StrategyOutput};
use wpl_core::ctqw::{avg_hit_probability_grid, Backend};
use wpl_core::graph::{
    GraphParams, LeafCycleProblem, Side, VertexId, VertexName, VertexRole, Violation, WeldedTree, WeldedTreePathGraph,
};
use wpl_core::oracle::OracleError;
use wpl_core::pathfinder::{FailureKind, PathfindFailure, StepError, StepTrace};
use wpl_core::{
    find_path, hit_probability, theoretical_bound, verify_path, Hamiltonian, Oracle, PathResult, PathfinderConfig,
    Propagator, PropagatorConfig, QuantumState, Referee, Strategy,
};

/// Fixed before any criterion was run; every random choice below derives
/// from it.
const MASTER_SEED: u64 = 0x5eed_2026;

/// Grid averages of the s -> t hitting probability on a welded tree of
/// height h, midpoint rule with 4096 points over [0, h^5].
const PINNED_HITTING: [(u32, f64); 4] =
    [(3, 0.17651235006608157), (4, 0.14210729091381183), (5, 0.11939136924124857), (6, 0.10292108550646642)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn seed(criterion: u64, index: u64) -> u64 {
    cell_seed(MASTER_SEED, (criterion * 1000 + index) as usize)
}

fn dense() -> PropagatorConfig {
    PropagatorConfig { backend: Backend::Dense, ..PropagatorConfig::default() }
}

fn path_graph(n: u32, seed: u64) -> WeldedTreePathGraph {
    WeldedTreePathGraph::build(GraphParams::new(n, seed).unwrap()).unwrap()
}

fn within(elapsed: Duration, limit: Duration, detail: &mut String) -> bool {
    let ok = elapsed <= limit;
    let _ = write!(detail, "; {:.1}s of {}s allowed", elapsed.as_secs_f64(), limit.as_secs());
    ok
}

fn hitting_probability() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for (h, pinned) in PINNED_HITTING {
        let tree = WeldedTree::build(h, seed(1, h as u64)).unwrap();
        let ham = Hamiltonian::from_graph(tree.graph(), false);
        let t = tree.t();
        let p = avg_hit_probability_grid(&ham, tree.s(), |v| v == t, h.pow(5) as f64, 4096, &dense()).unwrap();
        let ok = p * h as f64 >= 0.25 && (p - pinned).abs() <= 1e-6;
        pass &= ok;
        let _ = write!(detail, "p({h})={p:.8} (p*n={:.3}, pinned diff {:.1e}) ", p * h as f64, (p - pinned).abs());
    }
    pass &= within(start.elapsed(), Duration::from_secs(120), &mut detail);
    Outcome { pass, detail }
}

/// The ledger must account for every oracle call the run made and the
/// traces must agree with the recorded totals.
fn trace_is_complete(n: u32, failure: &PathfindFailure) -> bool {
    let r: &PathResult = &failure.partial;
    let reps: usize = r.iterations.iter().map(StepTrace::repetitions).sum();
    let mut x_queries = r.iterations.len();
    let kind_ok = match &failure.kind {
        FailureKind::GuardExceeded { limit } => *limit == n as usize && r.iterations.len() == *limit,
        FailureKind::Step { iteration, error } => {
            if let StepError::WrongDegree { .. } = error {
                x_queries += 1;
            }
            *iteration == r.iterations.len() + 1
        }
        FailureKind::InvalidConfig(_) => false,
    };
    let limit = (n * n) as usize;
    let traces_ok = r.iterations.iter().enumerate().all(|(k, t)| {
        t.iteration == k + 1
            && t.repetitions() >= 1
            && t.repetitions() <= limit
            && t.detected == (t.measurements.last().map(|m| m.degree) == Some(k + 4))
            && (t.detected || t.repetitions() == limit)
            && t.selected == (t.x, if t.detected { t.u2 } else { t.u1 })
            && r.vertices.get(k) == Some(&t.x)
    });
    kind_ok
        && traces_ok
        && r.edges.len() == r.iterations.len()
        && r.vertices.len() == r.edges.len() + 1
        && r.propagator_applications == reps
        && r.ledger.count() == x_queries + reps
}

fn end_to_end() -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for n in [2u32, 4, 6] {
        let start = Instant::now();
        let cell = seed(2, n as u64);
        let runs: Vec<(bool, bool, Option<String>)> = (0..20usize)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(cell, trial);
                let g = path_graph(n, rng.next_u64());
                let expected: Vec<VertexName> = (1..=n).map(|i| g.graph().name(g.path_vertex(i))).collect();
                match find_path(&g, &mut rng, &PathfinderConfig::default()) {
                    Ok(r) => {
                        let ok = r.vertices == expected && verify_path(&g, &r.vertices).is_ok();
                        (ok, true, (!ok).then(|| String::from("wrong path")))
                    }
                    Err(f) => (false, trace_is_complete(n, &f), Some(f.to_string())),
                }
            })
            .collect();
        let successes = runs.iter().filter(|r| r.0).count();
        let complete = runs.iter().filter(|r| !r.0).all(|r| r.1);
        let elapsed = start.elapsed();
        let ok = successes >= 19 && complete && elapsed <= Duration::from_secs(600);
        pass &= ok;
        let _ = write!(
            detail,
            "n={n}: {successes}/20 (failure traces {}, {:.1}s) ",
            if complete { "complete" } else { "INCOMPLETE" },
            elapsed.as_secs_f64()
        );
    }
    Outcome { pass, detail }
}

/// Checks the reachability statement for both neighbours of `p_i` in the
/// graph with the first `i - 1` path edges removed, and that unreachable
/// starts give exactly zero.
fn confinement_at(g: &WeldedTreePathGraph, working: &wpl_core::graph::LabeledGraph, i: u32, taus: &[f64]) -> bool {
    let ham = Hamiltonian::from_graph(working, true);
    let x = g.path_vertex(i);
    let t = g.root_t(i);
    let target = i as usize + 3;
    let mut ok = working.neighbors(x).len() == 2;
    for &u in working.neighbors(x) {
        let reachable = ham.component_of(u).binary_search(&t).is_ok();
        ok &= reachable == (u == g.root_s(i));
        let degree_hits: Vec<VertexId> =
            working.vertices().filter(|&v| working.neighbors(v).len() == target).collect();
        ok &= degree_hits == vec![t];
        if !reachable {
            for &tau in taus {
                let p = hit_probability(&ham, u, |v| working.neighbors(v).len() == target, tau, &dense()).unwrap();
                ok &= p == 0.0;
            }
        }
    }
    ok
}

fn exact_zero_confinement() -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for n in [4u32, 6] {
        let g = path_graph(n, seed(3, n as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(seed(3, 100 + n as u64));
        let tau_max = n.pow(5) as f64;
        // Every iteration of the intended run.
        let mut working = g.graph().clone();
        let mut static_ok = true;
        for i in 1..n {
            let taus: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() * tau_max).collect();
            static_ok &= confinement_at(&g, &working, i, &taus);
            working.delete_edge(g.path_vertex(i), g.path_vertex(i + 1)).unwrap();
        }
        // And the iterations of an actual run, at the times it sampled.
        let run = match find_path(&g, &mut rng, &PathfinderConfig::default()) {
            Ok(r) => r,
            Err(f) => *f.partial,
        };
        let mut working = g.graph().clone();
        let mut run_ok = true;
        let mut checked = 0;
        for trace in &run.iterations {
            let i = trace.iteration as u32;
            if trace.x != g.graph().name(g.path_vertex(i)) {
                break;
            }
            let taus: Vec<f64> = trace.measurements.iter().map(|m| m.tau).collect();
            run_ok &= confinement_at(&g, &working, i, &taus);
            let a = working.vertex_by_name(trace.selected.0).unwrap();
            let b = working.vertex_by_name(trace.selected.1).unwrap();
            working.delete_edge(a, b).unwrap();
            checked += 1;
        }
        let ok = static_ok && run_ok && checked == n - 1;
        pass &= ok;
        let _ = write!(detail, "n={n}: {}/{} iterations certified ", if static_ok { n - 1 } else { 0 }, n - 1);
        let _ = write!(detail, "(run {checked}/{} on path) ", n - 1);
    }
    Outcome { pass, detail }
}

fn random_sparse_graph(rng: &mut ChaCha8Rng) -> Hamiltonian {
    let dim = rng.gen_range(2..=300);
    let mut degree = vec![0usize; dim];
    let mut edges = BTreeSet::new();
    for _ in 0..2 * dim {
        let (a, b) = (rng.gen_range(0..dim), rng.gen_range(0..dim));
        let (a, b) = (a.min(b), a.max(b));
        if a == b || degree[a] == 5 || degree[b] == 5 || !edges.insert((a, b)) {
            continue;
        }
        degree[a] += 1;
        degree[b] += 1;
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    Hamiltonian::from_edges(dim, &edges).unwrap()
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> QuantumState {
    QuantumState::normalized((0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect())
        .unwrap()
}

fn propagator_cross_validation() -> Outcome {
    let start = Instant::now();
    let results: Vec<[f64; 4]> = (0..50u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed(4, k));
            let ham = random_sparse_graph(&mut rng);
            let dense = Propagator::new(&ham, &dense()).unwrap();
            let krylov =
                Propagator::new(&ham, &PropagatorConfig { backend: Backend::Krylov, ..PropagatorConfig::default() })
                    .unwrap();
            let mut worst = [0.0f64; 4];
            for _ in 0..10 {
                let psi = random_state(ham.dimension(), &mut rng);
                let tau = rng.gen::<f64>() * 50.0;
                let split = rng.gen::<f64>() * tau;
                for p in [&dense, &krylov] {
                    let out = p.evolve(&psi, tau).unwrap();
                    worst[1] = worst[1].max((out.norm() - 1.0).abs());
                    let halves = p.evolve(&p.evolve(&psi, split).unwrap(), tau - split).unwrap();
                    worst[2] = worst[2].max(out.distance(&halves));
                    let back = p.evolve(&out, -tau).unwrap();
                    worst[3] = worst[3].max(back.distance(&psi));
                }
                let agreement = dense.evolve(&psi, tau).unwrap().distance(&krylov.evolve(&psi, tau).unwrap());
                worst[0] = worst[0].max(agreement);
            }
            worst
        })
        .collect();
    let worst = results.iter().fold([0.0f64; 4], |acc, w| [0, 1, 2, 3].map(|j| acc[j].max(w[j])));
    let mut detail = format!(
        "krylov-dense {:.1e}, unitarity {:.1e}, additivity {:.1e}, reversibility {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    );
    let ok = worst[0] <= 1e-8 && worst[1] <= 1e-9 && worst[2] <= 1e-9 && worst[3] <= 1e-9;
    let timely = within(start.elapsed(), Duration::from_secs(60), &mut detail);
    Outcome { pass: ok && timely, detail }
}

fn classical_hardness() -> Outcome {
    let pool = worker_pool(false).unwrap();
    let heights = [6u32, 8, 10, 12];
    let mut pass = true;
    let mut detail = String::new();
    for (s, strategy) in StrategyKind::ALL.into_iter().enumerate() {
        let rates: Vec<f64> = heights
            .iter()
            .enumerate()
            .map(|(k, &h)| {
                let cell = GameCell { game: GameKind::Tree, n: h, budget: 64, strategy };
                let row = classical_cell(cell, 2000, seed(5, (s * 10 + k) as u64), &pool);
                assert_eq!(row.status, "ok");
                row.win_rate
            })
            .collect();
        let mut ok = true;
        for k in 0..rates.len() - 1 {
            ok &= rates[k + 1] <= rates[k];
            if rates[k] < 0.5 {
                ok &= rates[k + 1] <= 0.7 * rates[k];
            }
        }
        pass &= ok;
        let shown: Vec<String> = heights.iter().zip(&rates).map(|(h, r)| format!("{h}:{r:.4}")).collect();
        let _ = write!(detail, "{} [{}] ", strategy.label(), shown.join(" "));
    }
    let b6 = theoretical_bound(6);
    let b60 = theoretical_bound(60);
    pass &= b6 == 28.0 && (b60 - 0.4765625).abs() < 1e-15;
    let _ = write!(detail, "bound(6)={b6} bound(60)={b60}");
    Outcome { pass, detail }
}

fn leaf_cycle_order(g: &WeldedTreePathGraph, tree: u32) -> Vec<VertexId> {
    let graph = g.graph();
    let is_leaf = |v: VertexId| matches!(graph.role(v), VertexRole::TreeLeaf { tree: t, .. } if t == tree);
    let start = graph.vertices().find(|&v| is_leaf(v)).unwrap();
    let mut order = vec![start];
    let mut prev = start;
    let mut cur = graph.neighbors(start).iter().copied().find(|&w| is_leaf(w)).unwrap();
    while cur != start {
        order.push(cur);
        let next = graph.neighbors(cur).iter().copied().find(|&w| is_leaf(w) && w != prev).unwrap();
        prev = cur;
        cur = next;
    }
    order
}

fn sorted(mut report: Vec<Violation>) -> Vec<String> {
    let mut out: Vec<String> = report.drain(..).map(|v| format!("{v:?}")).collect();
    out.sort();
    out
}

fn structural_validator() -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for n in (2u32..=10).step_by(2) {
        let g = path_graph(n, seed(6, n as u64));
        let graph = g.graph();
        let mut ok = g.validate().is_empty();
        for i in 1..=n {
            let hits: Vec<VertexId> = graph.vertices().filter(|&v| graph.neighbors(v).len() == i as usize + 3).collect();
            ok &= hits == vec![g.root_t(i)];
        }
        let twos: BTreeSet<VertexId> = graph.vertices().filter(|&v| graph.neighbors(v).len() == 2).collect();
        let mut want: BTreeSet<VertexId> = [g.x(), g.y()].into_iter().collect();
        for i in 1..=n {
            for k in 1..=i + 1 {
                want.insert(g.plug_m(i, k));
            }
        }
        ok &= twos == want;
        pass &= ok;
        let _ = write!(detail, "n={n}:{} ", if ok { "valid" } else { "INVALID" });
    }

    let base = path_graph(4, seed(6, 100));
    let bits = base.params().name_bits;
    let role = |r: VertexRole| base.graph().vertex_by_role(r).unwrap();
    let dm = |v: VertexId, expected: usize, actual: usize| Violation::DegreeMismatch {
        vertex: v,
        role: base.graph().role(v),
        expected,
        actual,
    };
    type Mutation<'a> = (&'a str, Box<dyn Fn(&mut WeldedTreePathGraph) -> Vec<Violation> + 'a>);
    let mutations: Vec<Mutation> = vec![
        (
            "remove t1-child",
            Box::new(|g| {
                let t1 = g.root_t(1);
                let c = role(VertexRole::TreeInternal { tree: 1, side: Side::Right, level: 3 });
                let c = if g.graph().has_edge(t1, c) {
                    c
                } else {
                    *g.graph().neighbors(t1).iter().find(|&&w| g.graph().role(w).tree() == Some(1)).unwrap()
                };
                g.graph_mut().delete_edge(t1, c).unwrap();
                vec![
                    dm(t1, 4, 3),
                    dm(c, 3, 2),
                    Violation::HighDegreeSet { unexpected: vec![], missing: vec![t1] },
                    Violation::DegreeTwoSet { unexpected: vec![c], missing: vec![] },
                ]
            }),
        ),
        (
            "remove p1-p2",
            Box::new(|g| {
                let (p1, p2) = (g.path_vertex(1), g.path_vertex(2));
                g.graph_mut().delete_edge(p1, p2).unwrap();
                vec![dm(p1, 2, 1), dm(p2, 3, 2), Violation::DegreeTwoSet { unexpected: vec![p2], missing: vec![p1] }]
            }),
        ),
        (
            "remove m-n plug edge",
            Box::new(|g| {
                let (m, n) = (g.plug_m(2, 1), g.plug_n(2, 1));
                g.graph_mut().delete_edge(m, n).unwrap();
                vec![dm(m, 2, 1), dm(n, 3, 2), Violation::DegreeTwoSet { unexpected: vec![n], missing: vec![m] }]
            }),
        ),
        (
            "add cross-tree edge",
            Box::new(|g| {
                let a = g.root_s(1);
                let a = *g.graph().neighbors(a).iter().find(|&&w| g.graph().role(w).tree() == Some(1)).unwrap();
                let b = *g.graph().neighbors(g.root_s(2)).iter().find(|&&w| g.graph().role(w).tree() == Some(2)).unwrap();
                g.graph_mut().add_edge(a, b).unwrap();
                let mut high = vec![a, b];
                high.sort();
                vec![dm(a, 3, 4), dm(b, 3, 4), Violation::HighDegreeSet { unexpected: high, missing: vec![] }]
            }),
        ),
        (
            "add self-loop",
            Box::new(|g| {
                let a = g.path_vertex(3);
                g.graph_mut().add_edge(a, a).unwrap();
                vec![
                    Violation::SelfLoop { vertex: a },
                    dm(a, 3, 4),
                    Violation::HighDegreeSet { unexpected: vec![a], missing: vec![] },
                ]
            }),
        ),
        (
            "add parallel edge",
            Box::new(|g| {
                let (a, b) = (g.path_vertex(2), g.path_vertex(3));
                g.graph_mut().add_edge(a, b).unwrap();
                vec![
                    Violation::MultiEdge { u: a, v: b },
                    dm(a, 3, 4),
                    dm(b, 3, 4),
                    Violation::HighDegreeSet { unexpected: vec![a, b], missing: vec![] },
                ]
            }),
        ),
        (
            "add same-side leaf edge",
            Box::new(|g| {
                let leaves: Vec<VertexId> = g
                    .graph()
                    .vertices()
                    .filter(|&v| g.graph().role(v) == VertexRole::TreeLeaf { tree: 2, side: Side::Left })
                    .take(2)
                    .collect();
                g.graph_mut().add_edge(leaves[0], leaves[1]).unwrap();
                vec![
                    dm(leaves[0], 3, 4),
                    dm(leaves[1], 3, 4),
                    Violation::HighDegreeSet { unexpected: leaves.clone(), missing: vec![] },
                    Violation::LeafCycle { tree: 2, vertex: leaves[0], problem: LeafCycleProblem::SameSide },
                ]
            }),
        ),
        (
            "split the leaf cycle",
            Box::new(|g| {
                let c = leaf_cycle_order(g, 3);
                let graph = g.graph_mut();
                graph.delete_edge(c[0], c[1]).unwrap();
                graph.delete_edge(c[4], c[5]).unwrap();
                graph.add_edge(c[0], c[5]).unwrap();
                graph.add_edge(c[1], c[4]).unwrap();
                vec![Violation::LeafCycle {
                    tree: 3,
                    vertex: c[0],
                    problem: LeafCycleProblem::NotHamiltonian { cycle_length: 28, leaves: 32 },
                }]
            }),
        ),
        (
            "duplicate a name",
            Box::new(|g| {
                let (a, b) = (VertexId(10), VertexId(11));
                let name = g.graph().name(a);
                g.graph_mut().set_name(b, name).unwrap();
                vec![Violation::DuplicateName { name, first: a, second: b }]
            }),
        ),
        (
            "rename y",
            Box::new(|g| {
                let y = g.y();
                let used: BTreeSet<VertexName> = g.graph().names().iter().copied().collect();
                let fresh = (1u128..).map(VertexName::from_bits).find(|n| !used.contains(n)).unwrap();
                g.graph_mut().set_name(y, fresh).unwrap();
                vec![Violation::EndpointName { vertex: y, expected: VertexName::ones(bits) }]
            }),
        ),
        (
            "over-wide name",
            Box::new(|g| {
                let v = VertexId(12);
                g.graph_mut().set_name(v, VertexName::from_bits(1u128 << bits)).unwrap();
                vec![Violation::NameTooWide { vertex: v }]
            }),
        ),
    ];
    let mut matched = 0;
    let mut misses = Vec::new();
    for (label, mutate) in &mutations {
        let mut g = base.clone();
        let expected = mutate(&mut g);
        if sorted(g.validate()) == sorted(expected) {
            matched += 1;
        } else {
            misses.push(*label);
        }
    }
    pass &= misses.is_empty() && mutations.len() >= 10;
    let _ = write!(detail, "mutations {matched}/{} reported exactly", mutations.len());
    if !misses.is_empty() {
        let _ = write!(detail, " (wrong: {})", misses.join(", "));
    }
    Outcome { pass, detail }
}

/// Prints the name of a vertex it never saw.
struct Guesser;

impl Strategy for Guesser {
    fn label(&self) -> &str {
        "guesser"
    }

    fn play(&mut self, oracle: &mut Oracle<'_>, _: &GameContext, rng: &mut dyn RngCore) -> Result<StrategyOutput, OracleError> {
        let bits = oracle.name_bits();
        let guess = VertexName::from_bits((rng.next_u64() as u128) & ((1u128 << bits) - 1));
        oracle.neighbors(guess)?;
        Ok(StrategyOutput { names: vec![guess], path: None })
    }
}

fn oracle_bookkeeping() -> Outcome {
    let mut detail = String::new();
    let mut pass = true;

    // Budget boundary.
    let g = path_graph(4, seed(7, 0));
    let graph = g.graph();
    let x = graph.name(g.x());
    let unused = (1u128..).map(VertexName::from_bits).find(|n| graph.vertex_by_name(*n).is_none()).unwrap();
    let mut oracle = Oracle::new(graph).with_budget(5);
    let mut boundary_ok = true;
    for k in 0..5 {
        let name = if k % 2 == 0 { x } else { unused };
        boundary_ok &= oracle.neighbors(name).is_ok() && oracle.query_count() == k + 1;
    }
    boundary_ok &= oracle.remaining() == Some(0);
    boundary_ok &= oracle.neighbors(x) == Err(OracleError::BudgetExhausted { budget: 5 });
    boundary_ok &= oracle.restricted_neighbors(x).is_err();
    boundary_ok &= oracle.query_count() == 5 && oracle.ledger().rejected().len() == 2;
    pass &= boundary_ok;
    let _ = write!(detail, "budget boundary {}; ", if boundary_ok { "exact" } else { "WRONG" });

    // Counts and closure over many games.
    let mut games = 0;
    let mut count_ok = true;
    let mut closure_ok = true;
    for trial in 0..200usize {
        let mut rng = trial_rng(seed(7, 1), trial);
        let tree = WeldedTree::build(6 + 2 * (trial % 3) as u32, rng.next_u64()).unwrap();
        let path = path_graph(4, rng.next_u64());
        let budget = 1 + rng.gen_range(0..80);
        let players: [Box<dyn Strategy>; 2] = [Box::new(RandomWalk { steps: budget }), Box::new(BfsFrontier { budget })];
        for mut player in players {
            for (graph, ctx) in
                [(tree.graph(), GameContext::for_welded_tree(&tree)), (path.graph(), GameContext::for_path_graph(&path))]
            {
                let mut oracle = Oracle::new(graph).with_budget(budget);
                let given = ctx.given();
                match player.play(&mut oracle, &ctx, &mut rng) {
                    Ok(output) => {
                        let known = oracle.ledger().known_names(&given);
                        closure_ok &= output.names.iter().all(|n| known.contains(n));
                        let referee = if ctx.end.is_some() { Referee::game_b(&path) } else { Referee::welded_tree(&tree) };
                        count_ok &= referee.judge(&output, oracle.ledger()).queries_used == oracle.query_count();
                    }
                    Err(OracleError::BudgetExhausted { .. }) => {}
                }
                closure_ok &= oracle.ledger().audit_closure(&given).is_ok();
                count_ok &= oracle.query_count() == oracle.ledger().records().len() && oracle.query_count() <= budget;
                games += 1;
            }
        }
    }
    pass &= count_ok && closure_ok;
    let _ = write!(
        detail,
        "{games} games: counts {}, closure {}; ",
        if count_ok { "exact" } else { "WRONG" },
        if closure_ok { "clean" } else { "VIOLATED" }
    );

    // A guessing strategy is caught by the audit.
    let mut flagged = 0;
    for trial in 0..20usize {
        let mut rng = trial_rng(seed(7, 2), trial);
        let mut oracle = Oracle::new(graph);
        let ctx = GameContext::for_path_graph(&g);
        let output = Guesser.play(&mut oracle, &ctx, &mut rng).unwrap();
        let given = ctx.given();
        if !given.contains(&output.names[0]) && oracle.ledger().audit_closure(&given).is_err() {
            flagged += 1;
        }
    }
    pass &= flagged == 20;
    let _ = write!(detail, "guesses flagged {flagged}/20");
    Outcome { pass, detail }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 7] = [
        (1, "hitting probability", hitting_probability),
        (2, "pathfinding end to end", end_to_end),
        (3, "exact-zero confinement", exact_zero_confinement),
        (4, "propagator cross-validation", propagator_cross_validation),
        (5, "classical hardness trend", classical_hardness),
        (6, "structural validator", structural_validator),
        (7, "oracle bookkeeping", oracle_bookkeeping),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, title, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {id} ({title}, {:.1}s): {}", start.elapsed().as_secs_f64(), outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
