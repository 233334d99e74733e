//! Continuous-time quantum walks `psi(tau) = exp(-i A tau) psi(0)` on graph
//! adjacency matrices.
//!
//! Evolution always happens one connected component at a time: the
//! adjacency matrix is block diagonal over components, so restricting to the
//! blocks that carry amplitude is exact. Small blocks are diagonalised once
//! and the factorisation is reused for every time; large blocks go through a
//! restarted Lanczos propagator.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::graph::{components_of, LabeledGraph, VertexId};
use crate::oracle::restricted_adjacency;

/// Allowed deviation of a state's norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum WalkError {
    DimensionMismatch { expected: usize, found: usize },
    NotNormalized { norm: f64 },
    VertexOutOfRange(VertexId),
    InvalidTime,
    InvalidConfig(&'static str),
    /// The Lanczos propagator could not meet the tolerance; `residual` is
    /// the last error estimate and `time_reached` how far it got.
    KrylovNonConvergence { residual: f64, time_reached: f64 },
}

impl fmt::Display for WalkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WalkError::DimensionMismatch { expected, found } => {
                write!(f, "state has dimension {found}, Hamiltonian has {expected}")
            }
            WalkError::NotNormalized { norm } => write!(f, "state norm {norm} is not 1"),
            WalkError::VertexOutOfRange(v) => write!(f, "vertex {v} out of range"),
            WalkError::InvalidTime => f.write_str("evolution time is not finite"),
            WalkError::InvalidConfig(msg) => write!(f, "invalid propagator config: {msg}"),
            WalkError::KrylovNonConvergence { residual, time_reached } => write!(
                f,
                "Krylov propagation stalled at time {time_reached} with residual estimate {residual:e}"
            ),
        }
    }
}

impl core::error::Error for WalkError {}

/// Symmetric 0/1 adjacency structure used as a Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    adjacency: Vec<Vec<VertexId>>,
    restricted: bool,
}

impl Hamiltonian {
    /// `A` of the current graph, or `A'` when `restricted`: every edge with
    /// an endpoint of degree 2 removed.
    pub fn from_graph(graph: &LabeledGraph, restricted: bool) -> Self {
        let adjacency = graph
            .vertices()
            .map(|v| if restricted { restricted_adjacency(graph, v) } else { graph.neighbors(v).to_vec() })
            .collect();
        Hamiltonian { adjacency, restricted }
    }

    /// Builds from an undirected simple edge list.
    pub fn from_edges(dimension: usize, edges: &[(usize, usize)]) -> Result<Self, WalkError> {
        let mut adjacency = vec![Vec::new(); dimension];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= dimension {
                    return Err(WalkError::VertexOutOfRange(VertexId(w as u32)));
                }
            }
            if u == v {
                return Err(WalkError::InvalidConfig("self-loop in Hamiltonian edge list"));
            }
            adjacency[u].push(VertexId(v as u32));
            adjacency[v].push(VertexId(u as u32));
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Hamiltonian { adjacency, restricted: false })
    }

    pub fn dimension(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_restricted(&self) -> bool {
        self.restricted
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v.index()]
    }

    pub fn component_labels(&self) -> (Vec<u32>, usize) {
        components_of(&self.adjacency)
    }

    /// Sorted vertices of the component containing `v`.
    pub fn component_of(&self, v: VertexId) -> Vec<VertexId> {
        let mut seen = vec![false; self.dimension()];
        let mut stack = vec![v];
        seen[v.index()] = true;
        let mut out = Vec::new();
        while let Some(u) = stack.pop() {
            out.push(u);
            for &w in &self.adjacency[u.index()] {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    stack.push(w);
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn check(&self, v: VertexId) -> Result<(), WalkError> {
        if v.index() < self.dimension() {
            Ok(())
        } else {
            Err(WalkError::VertexOutOfRange(v))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Dense for components up to `dense_cutoff` vertices, Krylov above.
    Auto,
    Dense,
    Krylov,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub backend: Backend,
    /// Target error in Euclidean norm for a single propagation.
    pub tolerance: f64,
    pub dense_cutoff: usize,
    /// Largest Krylov subspace before restarting.
    pub krylov_max_dim: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig { backend: Backend::Auto, tolerance: 1e-10, dense_cutoff: 2048, krylov_max_dim: 60 }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<(), WalkError> {
        if !(self.tolerance > 0.0 && self.tolerance < 1e-6) {
            return Err(WalkError::InvalidConfig("tolerance must lie in (0, 1e-6)"));
        }
        if self.dense_cutoff < 2 {
            return Err(WalkError::InvalidConfig("dense_cutoff must be at least 2"));
        }
        if self.krylov_max_dim < 2 {
            return Err(WalkError::InvalidConfig("krylov_max_dim must be at least 2"));
        }
        Ok(())
    }

    fn uses_dense(&self, size: usize) -> bool {
        match self.backend {
            Backend::Dense => true,
            Backend::Krylov => false,
            Backend::Auto => size <= self.dense_cutoff,
        }
    }
}

/// A state vector over all vertices of a Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn basis(dimension: usize, v: VertexId) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dimension];
        amplitudes[v.index()] = Complex64::new(1.0, 0.0);
        QuantumState { amplitudes }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, WalkError> {
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(WalkError::NotNormalized { norm });
        }
        Ok(QuantumState { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self, WalkError> {
        let norm = norm(&amplitudes);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(WalkError::NotNormalized { norm });
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(QuantumState { amplitudes })
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, v: VertexId) -> Complex64 {
        self.amplitudes[v.index()]
    }

    pub fn probability(&self, v: VertexId) -> f64 {
        self.amplitudes[v.index()].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Euclidean distance to another state of the same dimension.
    pub fn distance(&self, other: &QuantumState) -> f64 {
        assert_eq!(self.dimension(), other.dimension());
        let sq: f64 = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum();
        libm::sqrt(sq)
    }
}

fn norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(Complex64::norm_sqr).sum())
}

/// Samples a vertex with probability `|amplitude|^2`.
pub fn measure<R: Rng + ?Sized>(state: &QuantumState, rng: &mut R) -> Result<VertexId, WalkError> {
    let total: f64 = state.amplitudes.iter().map(Complex64::norm_sqr).sum();
    if (total - 1.0).abs() > 10.0 * NORM_TOLERANCE {
        return Err(WalkError::NotNormalized { norm: libm::sqrt(total) });
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, a) in state.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        acc += p;
        last = Some(i);
        if acc > target {
            return Ok(VertexId(i as u32));
        }
    }
    Ok(VertexId(last.unwrap_or(0) as u32))
}

/// A propagator for one fixed set of vertices closed under adjacency.
#[derive(Clone, Debug)]
pub struct ComponentPropagator {
    dimension: usize,
    vertices: Vec<VertexId>,
    local_index: Vec<u32>,
    engine: Engine,
}

#[derive(Clone, Debug)]
enum Engine {
    Spectral { eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64> },
    Krylov { adjacency: Vec<Vec<u32>>, tolerance: f64, max_dim: usize },
}

const NOT_LOCAL: u32 = u32::MAX;

impl ComponentPropagator {
    /// Propagator for the component of `start`.
    pub fn new(h: &Hamiltonian, start: VertexId, config: &PropagatorConfig) -> Result<Self, WalkError> {
        config.validate()?;
        h.check(start)?;
        Self::for_vertices(h, h.component_of(start), config)
    }

    fn for_vertices(
        h: &Hamiltonian,
        vertices: Vec<VertexId>,
        config: &PropagatorConfig,
    ) -> Result<Self, WalkError> {
        let mut local_index = vec![NOT_LOCAL; h.dimension()];
        for (i, v) in vertices.iter().enumerate() {
            local_index[v.index()] = i as u32;
        }
        let local_adjacency: Vec<Vec<u32>> = vertices
            .iter()
            .map(|&v| h.neighbors(v).iter().map(|w| local_index[w.index()]).collect())
            .collect();
        let size = vertices.len();
        let engine = if config.uses_dense(size) {
            let mut matrix = DMatrix::<f64>::zeros(size, size);
            for (i, row) in local_adjacency.iter().enumerate() {
                for &j in row {
                    matrix[(i, j as usize)] = 1.0;
                }
            }
            let eigen = SymmetricEigen::new(matrix);
            Engine::Spectral { eigenvalues: eigen.eigenvalues.iter().copied().collect(), eigenvectors: eigen.eigenvectors }
        } else {
            Engine::Krylov {
                adjacency: local_adjacency,
                tolerance: config.tolerance,
                max_dim: config.krylov_max_dim.min(size.max(2)),
            }
        };
        Ok(ComponentPropagator { dimension: h.dimension(), vertices, local_index, engine })
    }

    /// Global vertex ids covered by this propagator, sorted.
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.dimension && self.local_index[v.index()] != NOT_LOCAL
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.engine, Engine::Spectral { .. })
    }

    fn local(&self, v: VertexId) -> Result<usize, WalkError> {
        if self.contains(v) {
            Ok(self.local_index[v.index()] as usize)
        } else {
            Err(WalkError::VertexOutOfRange(v))
        }
    }

    /// Evolves a vector supported on this component, in local coordinates.
    pub fn evolve_local(&self, psi: &[Complex64], tau: f64) -> Result<Vec<Complex64>, WalkError> {
        if !tau.is_finite() {
            return Err(WalkError::InvalidTime);
        }
        if psi.len() != self.vertices.len() {
            return Err(WalkError::DimensionMismatch { expected: self.vertices.len(), found: psi.len() });
        }
        match &self.engine {
            Engine::Spectral { eigenvalues, eigenvectors } => {
                let coeffs: Vec<Complex64> = (0..eigenvalues.len())
                    .map(|k| {
                        let col = eigenvectors.column(k);
                        let overlap: Complex64 = col.iter().zip(psi).map(|(&vk, &p)| p * vk).sum();
                        overlap * phase(eigenvalues[k], tau)
                    })
                    .collect();
                Ok(synthesise(eigenvectors, &coeffs))
            }
            Engine::Krylov { adjacency, tolerance, max_dim } => {
                krylov_evolve(adjacency, psi, tau, *tolerance, *max_dim)
            }
        }
    }

    /// `exp(-i H tau)|start>` restricted to this component, local coordinates.
    pub fn evolve_basis_local(&self, start: VertexId, tau: f64) -> Result<Vec<Complex64>, WalkError> {
        let s = self.local(start)?;
        match &self.engine {
            Engine::Spectral { eigenvalues, eigenvectors } => {
                if !tau.is_finite() {
                    return Err(WalkError::InvalidTime);
                }
                let coeffs: Vec<Complex64> = (0..eigenvalues.len())
                    .map(|k| phase(eigenvalues[k], tau) * eigenvectors[(s, k)])
                    .collect();
                Ok(synthesise(eigenvectors, &coeffs))
            }
            Engine::Krylov { .. } => {
                let mut psi = vec![Complex64::new(0.0, 0.0); self.vertices.len()];
                psi[s] = Complex64::new(1.0, 0.0);
                self.evolve_local(&psi, tau)
            }
        }
    }

    /// `exp(-i H tau)|start>` as a full-dimension state.
    pub fn evolve_basis(&self, start: VertexId, tau: f64) -> Result<QuantumState, WalkError> {
        let local = self.evolve_basis_local(start, tau)?;
        Ok(self.globalise(&local))
    }

    fn globalise(&self, local: &[Complex64]) -> QuantumState {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.dimension];
        for (&v, &a) in self.vertices.iter().zip(local) {
            amplitudes[v.index()] = a;
        }
        QuantumState { amplitudes }
    }

    /// Probability of finding the walk started at `start` on any of
    /// `targets` at time `tau`. Targets outside the component contribute 0.
    pub fn target_probability(&self, start: VertexId, targets: &[VertexId], tau: f64) -> Result<f64, WalkError> {
        let s = self.local(start)?;
        let inside: Vec<usize> = targets.iter().filter(|&&t| self.contains(t)).map(|&t| self.local_index[t.index()] as usize).collect();
        if inside.is_empty() {
            return Ok(0.0);
        }
        match &self.engine {
            Engine::Spectral { eigenvalues, eigenvectors } => {
                if !tau.is_finite() {
                    return Err(WalkError::InvalidTime);
                }
                let phases: Vec<Complex64> = eigenvalues.iter().map(|&l| phase(l, tau)).collect();
                Ok(inside
                    .iter()
                    .map(|&t| {
                        let amp: Complex64 = (0..eigenvalues.len())
                            .map(|k| phases[k] * (eigenvectors[(t, k)] * eigenvectors[(s, k)]))
                            .sum();
                        amp.norm_sqr()
                    })
                    .sum())
            }
            Engine::Krylov { .. } => {
                let psi = self.evolve_basis_local(start, tau)?;
                Ok(inside.iter().map(|&t| psi[t].norm_sqr()).sum())
            }
        }
    }
}

#[inline]
fn phase(lambda: f64, tau: f64) -> Complex64 {
    let angle = -lambda * tau;
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

/// `sum_k coeffs[k] * eigenvectors[:, k]`.
fn synthesise(eigenvectors: &DMatrix<f64>, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); eigenvectors.nrows()];
    for (k, &c) in coeffs.iter().enumerate() {
        for (o, &vk) in out.iter_mut().zip(eigenvectors.column(k).iter()) {
            *o += c * vk;
        }
    }
    out
}

fn spmv(adjacency: &[Vec<u32>], x: &[Complex64], out: &mut [Complex64]) {
    for (o, row) in out.iter_mut().zip(adjacency) {
        *o = row.iter().map(|&j| x[j as usize]).sum();
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

struct LanczosBasis {
    vectors: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Coupling to the next (not stored) Lanczos vector; 0 on breakdown.
    residual_beta: f64,
}

fn lanczos(adjacency: &[Vec<u32>], start: &[Complex64], max_dim: usize) -> LanczosBasis {
    let n = start.len();
    let norm0 = norm(start);
    let mut vectors: Vec<Vec<Complex64>> = vec![start.iter().map(|&a| a / norm0).collect()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    loop {
        let j = vectors.len() - 1;
        spmv(adjacency, &vectors[j], &mut w);
        alpha.push(inner(&vectors[j], &w).re);
        // Full reorthogonalisation, two passes.
        for _ in 0..2 {
            for v in &vectors {
                let c = inner(v, &w);
                for (wi, &vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let b = norm(&w);
        if b < 1e-12 || vectors.len() == n {
            return LanczosBasis { vectors, alpha, beta, residual_beta: 0.0 };
        }
        if vectors.len() == max_dim {
            return LanczosBasis { vectors, alpha, beta, residual_beta: b };
        }
        beta.push(b);
        vectors.push(w.iter().map(|&a| a / b).collect());
    }
}

fn krylov_evolve(
    adjacency: &[Vec<u32>],
    psi: &[Complex64],
    tau: f64,
    tolerance: f64,
    max_dim: usize,
) -> Result<Vec<Complex64>, WalkError> {
    const SAFETY: f64 = 0.1;
    const MAX_HALVINGS: u32 = 60;
    const MAX_STEPS: usize = 1_000_000;

    let mut state = psi.to_vec();
    let total = tau.abs();
    let scale = norm(psi);
    if total == 0.0 || scale == 0.0 {
        return Ok(state);
    }
    let sign = tau.signum();
    let mut done = 0.0;
    let mut next_dt = total;
    let mut steps = 0;
    while done < total {
        let remaining = total - done;
        let current_norm = norm(&state);
        let basis = lanczos(adjacency, &state, max_dim);
        let m = basis.alpha.len();
        let tri = DMatrix::<f64>::from_fn(m, m, |i, j| {
            if i == j {
                basis.alpha[i]
            } else if i + 1 == j {
                basis.beta[i]
            } else if j + 1 == i {
                basis.beta[j]
            } else {
                0.0
            }
        });
        let eigen = SymmetricEigen::new(tri);
        let coefficients = |dt: f64| -> Vec<Complex64> {
            let mut y = vec![Complex64::new(0.0, 0.0); m];
            for k in 0..m {
                let weight = eigen.eigenvectors[(0, k)] * phase(eigen.eigenvalues[k], sign * dt);
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi += weight * eigen.eigenvectors[(i, k)];
                }
            }
            y
        };
        let mut dt = next_dt.min(remaining);
        let mut halvings = 0;
        let y = loop {
            let y = coefficients(dt);
            let estimate = basis.residual_beta * y[m - 1].norm() * current_norm;
            if estimate <= SAFETY * tolerance * dt / total {
                break y;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(WalkError::KrylovNonConvergence { residual: estimate, time_reached: sign * done });
            }
            dt *= 0.5;
        };
        let mut next = vec![Complex64::new(0.0, 0.0); state.len()];
        for (v, &c) in basis.vectors.iter().zip(&y) {
            let c = c * current_norm;
            for (o, &vi) in next.iter_mut().zip(v) {
                *o += c * vi;
            }
        }
        state = next;
        done = if remaining - dt <= total * 1e-15 { total } else { done + dt };
        next_dt = if halvings == 0 { 2.0 * dt } else { dt };
        steps += 1;
        if steps > MAX_STEPS {
            return Err(WalkError::KrylovNonConvergence { residual: f64::NAN, time_reached: sign * done });
        }
    }
    Ok(state)
}

/// Propagators for every component of a Hamiltonian, factorised once and
/// reused for any state and time.
#[derive(Clone, Debug)]
pub struct Propagator {
    dimension: usize,
    /// Components with at least two vertices; isolated vertices have a zero
    /// row and keep their amplitude.
    components: Vec<ComponentPropagator>,
}

impl Propagator {
    pub fn new(h: &Hamiltonian, config: &PropagatorConfig) -> Result<Self, WalkError> {
        config.validate()?;
        let components = component_members(h)
            .into_iter()
            .filter(|vertices| vertices.len() > 1)
            .map(|vertices| ComponentPropagator::for_vertices(h, vertices, config))
            .collect::<Result<_, _>>()?;
        Ok(Propagator { dimension: h.dimension(), components })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `exp(-i H tau) psi`.
    pub fn evolve(&self, state: &QuantumState, tau: f64) -> Result<QuantumState, WalkError> {
        if state.dimension() != self.dimension {
            return Err(WalkError::DimensionMismatch { expected: self.dimension, found: state.dimension() });
        }
        if !tau.is_finite() {
            return Err(WalkError::InvalidTime);
        }
        let mut amplitudes = state.amplitudes.clone();
        for propagator in &self.components {
            evolve_block(propagator, state, tau, &mut amplitudes)?;
        }
        Ok(QuantumState { amplitudes })
    }
}

fn component_members(h: &Hamiltonian) -> Vec<Vec<VertexId>> {
    let (labels, count) = h.component_labels();
    let mut members: Vec<Vec<VertexId>> = vec![Vec::new(); count];
    for (i, &label) in labels.iter().enumerate() {
        members[label as usize].push(VertexId(i as u32));
    }
    members
}

/// Overwrites the block of `out` covered by `propagator` with the evolved
/// block of `state`. Blocks without amplitude are left alone.
fn evolve_block(
    propagator: &ComponentPropagator,
    state: &QuantumState,
    tau: f64,
    out: &mut [Complex64],
) -> Result<(), WalkError> {
    let local: Vec<Complex64> = propagator.vertices.iter().map(|v| state.amplitudes[v.index()]).collect();
    if local.iter().all(|a| a.norm_sqr() == 0.0) {
        return Ok(());
    }
    let evolved = propagator.evolve_local(&local, tau)?;
    for (&v, a) in propagator.vertices.iter().zip(evolved) {
        out[v.index()] = a;
    }
    Ok(())
}

/// `exp(-i H tau) psi`, factorising only the components that carry
/// amplitude. Use [`Propagator`] to evolve repeatedly on one Hamiltonian.
pub fn evolve(
    h: &Hamiltonian,
    state: &QuantumState,
    tau: f64,
    config: &PropagatorConfig,
) -> Result<QuantumState, WalkError> {
    config.validate()?;
    if state.dimension() != h.dimension() {
        return Err(WalkError::DimensionMismatch { expected: h.dimension(), found: state.dimension() });
    }
    if !tau.is_finite() {
        return Err(WalkError::InvalidTime);
    }
    let mut amplitudes = state.amplitudes.clone();
    for vertices in component_members(h) {
        if vertices.len() < 2 || vertices.iter().all(|v| state.amplitudes[v.index()].norm_sqr() == 0.0) {
            continue;
        }
        let propagator = ComponentPropagator::for_vertices(h, vertices, config)?;
        evolve_block(&propagator, state, tau, &mut amplitudes)?;
    }
    Ok(QuantumState { amplitudes })
}

/// Probability of measuring a vertex satisfying `target` at time `tau`,
/// starting from `|start>`. Exactly 0 when no target shares the start's
/// component.
pub fn hit_probability(
    h: &Hamiltonian,
    start: VertexId,
    target: impl Fn(VertexId) -> bool,
    tau: f64,
    config: &PropagatorConfig,
) -> Result<f64, WalkError> {
    config.validate()?;
    h.check(start)?;
    let targets: Vec<VertexId> = h.component_of(start).into_iter().filter(|&v| target(v)).collect();
    if targets.is_empty() {
        return Ok(0.0);
    }
    ComponentPropagator::new(h, start, config)?.target_probability(start, &targets, tau)
}

/// Hit probability averaged over the midpoint grid
/// `tau_j = (j + 1/2) tau_max / points`, `j = 0 .. points`.
pub fn avg_hit_probability_grid(
    h: &Hamiltonian,
    start: VertexId,
    target: impl Fn(VertexId) -> bool,
    tau_max: f64,
    points: usize,
    config: &PropagatorConfig,
) -> Result<f64, WalkError> {
    if !(tau_max > 0.0 && tau_max.is_finite()) || points == 0 {
        return Err(WalkError::InvalidTime);
    }
    let taus = (0..points).map(|j| (j as f64 + 0.5) * tau_max / points as f64);
    average_over(h, start, target, taus, points, config)
}

/// Hit probability averaged over `samples` times drawn uniformly from
/// `[0, tau_max]`.
pub fn avg_hit_probability_sampled<R: Rng + ?Sized>(
    h: &Hamiltonian,
    start: VertexId,
    target: impl Fn(VertexId) -> bool,
    tau_max: f64,
    samples: usize,
    rng: &mut R,
    config: &PropagatorConfig,
) -> Result<f64, WalkError> {
    if !(tau_max > 0.0 && tau_max.is_finite()) || samples == 0 {
        return Err(WalkError::InvalidTime);
    }
    let taus: Vec<f64> = (0..samples).map(|_| rng.gen::<f64>() * tau_max).collect();
    average_over(h, start, target, taus.into_iter(), samples, config)
}

fn average_over(
    h: &Hamiltonian,
    start: VertexId,
    target: impl Fn(VertexId) -> bool,
    taus: impl Iterator<Item = f64>,
    count: usize,
    config: &PropagatorConfig,
) -> Result<f64, WalkError> {
    config.validate()?;
    h.check(start)?;
    let targets: Vec<VertexId> = h.component_of(start).into_iter().filter(|&v| target(v)).collect();
    if targets.is_empty() {
        return Ok(0.0);
    }
    let propagator = ComponentPropagator::new(h, start, config)?;
    let mut sum = 0.0;
    for tau in taus {
        sum += propagator.target_probability(start, &targets, tau)?;
    }
    Ok(sum / count as f64)
}
