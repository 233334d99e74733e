use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wpl_core::graph::{GraphParams, VertexName, WeldedTreePathGraph};
use wpl_core::pathfinder::{select_step, FailureKind, StepTrace};
use wpl_core::{find_path, verify_path, Oracle, PathfinderConfig};

// Grid average of the s -> t hitting probability on a height-4 welded tree
// over [0, 4^5]; see the walk tests.
const P4: f64 = 0.14210729091381183;

fn fixture(n: u32, seed: u64) -> WeldedTreePathGraph {
    WeldedTreePathGraph::build(GraphParams::new(n, seed).unwrap()).unwrap()
}

fn path_names(g: &WeldedTreePathGraph) -> Vec<VertexName> {
    (1..=g.n()).map(|i| g.graph().name(g.path_vertex(i))).collect()
}

/// First-iteration traces on a fresh graph, split by which neighbour the walk
/// started from.
fn first_steps(g: &WeldedTreePathGraph, wanted: usize) -> (Vec<StepTrace>, Vec<StepTrace>) {
    let settings = PathfinderConfig::default().resolve(g.n()).unwrap();
    let s1 = g.graph().name(g.root_s(1));
    let x = g.graph().name(g.x());
    let (mut from_tree, mut from_path) = (Vec::new(), Vec::new());
    let mut seed = 0;
    while from_tree.len() < wanted || from_path.len() < wanted {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        seed += 1;
        let mut oracle = Oracle::new(g.graph());
        let (_, trace) = select_step(&mut oracle, x, 1, &settings, &mut rng).unwrap();
        if trace.u1 == s1 {
            from_tree.push(trace);
        } else {
            from_path.push(trace);
        }
    }
    from_tree.truncate(wanted);
    from_path.truncate(wanted);
    (from_tree, from_path)
}

#[test]
fn detection_rate_from_inside_the_tree() {
    let g = fixture(4, 21);
    let trials = 200;
    let (from_tree, _) = first_steps(&g, trials);
    let p2 = g.graph().name(g.path_vertex(2));
    let expected = 1.0 - (1.0 - P4).powi(16);
    let detected = from_tree.iter().filter(|t| t.detected).count();
    let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
    let rate = detected as f64 / trials as f64;
    assert!((rate - expected).abs() <= 3.0 * sigma, "rate {rate} vs {expected}");
    for trace in &from_tree {
        assert_eq!(trace.component_size, (1 << 6) - 2);
        let goes_to = if trace.detected { p2 } else { trace.u1 };
        assert_eq!(trace.selected.1, goes_to);
        assert!(trace.repetitions() <= 16);
    }
}

#[test]
fn never_detects_from_the_path_side() {
    let g = fixture(4, 21);
    let (_, from_path) = first_steps(&g, 50);
    let p2 = g.graph().name(g.path_vertex(2));
    for trace in &from_path {
        assert_eq!(trace.u1, p2);
        assert!(!trace.detected);
        assert_eq!(trace.repetitions(), 16);
        assert_eq!(trace.selected.1, p2);
        assert!(trace.measurements.iter().all(|m| m.degree != 4));
    }
}

#[test]
fn last_step_from_y_is_isolated() {
    let g = fixture(4, 5);
    let mut graph = g.graph().clone();
    for i in 1..3 {
        graph.delete_edge(g.path_vertex(i), g.path_vertex(i + 1)).unwrap();
    }
    let settings = PathfinderConfig::default().resolve(4).unwrap();
    let x = graph.name(g.path_vertex(3));
    let y = graph.name(g.y());
    for seed in 0..40 {
        let mut oracle = Oracle::new(&graph);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ((_, to), trace) = select_step(&mut oracle, x, 3, &settings, &mut rng).unwrap();
        if trace.u1 == y {
            assert_eq!(trace.component_size, 1);
            assert!(trace.measurements.iter().all(|m| m.vertex == y && m.degree == 2));
            assert_eq!(to, y);
        } else {
            assert_eq!(to == y, trace.detected, "seed {seed}");
        }
    }
}

#[test]
fn successful_run_walks_the_path_and_stays_in_budget() {
    let g = fixture(4, 3);
    let config = PathfinderConfig { repetitions: Some(200), ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let result = find_path(&g, &mut rng, &config).unwrap();
    let names = path_names(&g);
    assert_eq!(result.vertices, names);
    assert!(verify_path(&g, &result.vertices).is_ok());
    let expected_edges: Vec<_> = names.windows(2).map(|w| (w[0], w[1])).collect();
    assert_eq!(result.edges, expected_edges);
    assert_eq!(result.iterations.len(), 3);
    let total: usize = result.iterations.iter().map(StepTrace::repetitions).sum();
    assert_eq!(result.propagator_applications, total);
    for (k, trace) in result.iterations.iter().enumerate() {
        assert_eq!(trace.iteration, k + 1);
        assert_eq!(trace.x, names[k]);
    }
}

#[test]
fn default_run_respects_the_application_budget() {
    for seed in 0..10 {
        let g = fixture(4, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (applications, iterations) = match find_path(&g, &mut rng, &PathfinderConfig::default()) {
            Ok(r) => (r.propagator_applications, r.iterations.len()),
            Err(f) => (f.partial.propagator_applications, f.partial.iterations.len()),
        };
        assert!(applications <= 4usize.pow(3));
        assert!(iterations <= 4);
    }
}

#[test]
fn transcript_only_queries_known_names() {
    let g = fixture(4, 14);
    for seed in 0..8 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let result = match find_path(&g, &mut rng, &PathfinderConfig::default()) {
            Ok(r) => r,
            Err(f) => *f.partial,
        };
        let mut given = vec![g.graph().name(g.x()), g.graph().name(g.y())];
        given.extend(result.measured_names());
        assert_eq!(result.ledger.audit_closure(&given), Ok(()));
        let measured: usize = result.iterations.iter().map(StepTrace::repetitions).sum();
        assert_eq!(result.ledger.count(), result.iterations.len() + measured);
    }
}

#[test]
fn failures_carry_the_full_trace() {
    let g = fixture(4, 2);
    // One repetition per iteration makes a wrong turn likely.
    let config = PathfinderConfig { repetitions: Some(1), ..Default::default() };
    let mut failures = 0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Err(f) = find_path(&g, &mut rng, &config) {
            failures += 1;
            assert!(matches!(f.kind, FailureKind::GuardExceeded { .. } | FailureKind::Step { .. }));
            assert_eq!(f.partial.vertices.len(), f.partial.edges.len() + 1);
            assert_eq!(f.partial.propagator_applications, f.partial.iterations.len());
        }
    }
    assert!(failures > 0);
}

#[test]
fn same_seed_same_run() {
    let g = fixture(4, 6);
    let run = |seed| find_path(&g, &mut ChaCha8Rng::seed_from_u64(seed), &PathfinderConfig::default());
    assert_eq!(run(5), run(5));
}
