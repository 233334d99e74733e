//! On-disk formats: graph JSON, query transcripts as JSON lines and path
//! results as JSON.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use wpl_core::graph::{GraphError, GraphParams, LabeledGraph, VertexId, VertexName, VertexRole, WeldedTreePathGraph};
use wpl_core::pathfinder::{PathfindFailure, StepTrace};
use wpl_core::{PathResult, QueryLedger, Response};

pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{location}: {message}")]
    Content { location: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            return FormatError::Io(e.into());
        }
        FormatError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

fn content(location: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Content { location: location.into(), message: message.into() }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: u32,
    pub name_hex: String,
    pub role: String,
}

/// The graph document. Edge pairs are `[low, high]`, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub format_version: u32,
    pub n: u32,
    pub name_bits: u32,
    pub seed: u64,
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<[u32; 2]>,
}

impl GraphFile {
    pub fn from_graph(g: &WeldedTreePathGraph) -> Self {
        let graph = g.graph();
        let bits = graph.name_bits();
        let vertices = graph
            .vertices()
            .map(|v| VertexRecord { id: v.0, name_hex: graph.name(v).hex(bits).to_string(), role: graph.role(v).to_string() })
            .collect();
        let edges = graph.edges().into_iter().map(|(a, b)| [a.0, b.0]).collect();
        let params = g.params();
        GraphFile { format_version: GRAPH_FORMAT_VERSION, n: params.n, name_bits: bits, seed: params.seed, vertices, edges }
    }

    /// Rebuilds the graph. Only the encoding is checked here; structural
    /// problems are left for `WeldedTreePathGraph::validate`.
    pub fn to_graph(&self) -> Result<WeldedTreePathGraph, FormatError> {
        if self.format_version != GRAPH_FORMAT_VERSION {
            return Err(content("format_version", format!("unsupported version {}", self.format_version)));
        }
        let mut names = Vec::with_capacity(self.vertices.len());
        let mut roles = Vec::with_capacity(self.vertices.len());
        for (i, record) in self.vertices.iter().enumerate() {
            if record.id as usize != i {
                return Err(content(format!("vertices[{i}].id"), format!("expected {i}, found {}", record.id)));
            }
            let name = VertexName::parse_hex(&record.name_hex, self.name_bits)
                .map_err(|e| content(format!("vertices[{i}].name_hex"), e.to_string()))?;
            let role: VertexRole =
                record.role.parse().map_err(|e: wpl_core::graph::RoleParseError| content(format!("vertices[{i}].role"), e.to_string()))?;
            names.push(name);
            roles.push(role);
        }
        let count = self.vertices.len() as u32;
        let mut edges = Vec::with_capacity(self.edges.len());
        for (k, &[a, b]) in self.edges.iter().enumerate() {
            if a >= count || b >= count {
                return Err(content(format!("edges[{k}]"), format!("[{a}, {b}] names a missing vertex")));
            }
            edges.push((VertexId(a), VertexId(b)));
        }
        let graph = LabeledGraph::from_parts(self.name_bits, names, roles, &edges)?;
        let params = GraphParams { n: self.n, name_bits: self.name_bits, seed: self.seed };
        Ok(WeldedTreePathGraph::from_parts(params, graph)?)
    }
}

pub fn write_graph<W: Write>(g: &WeldedTreePathGraph, mut out: W) -> Result<(), FormatError> {
    serde_json::to_writer(&mut out, &GraphFile::from_graph(g))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn parse_graph(text: &str) -> Result<WeldedTreePathGraph, FormatError> {
    let file: GraphFile = serde_json::from_str(text)?;
    file.to_graph()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseWord {
    Bot,
    Budget,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResponseRecord {
    Word(ResponseWord),
    Names(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptLine {
    pub seq: usize,
    pub name_hex: String,
    pub response: ResponseRecord,
}

/// One line per query: served queries in order, then calls refused for lack
/// of budget.
pub fn transcript_lines(ledger: &QueryLedger, name_bits: u32) -> Vec<TranscriptLine> {
    let hex = |n: VertexName| n.hex(name_bits).to_string();
    let served = ledger.records().iter().map(|r| {
        let response = match &r.response {
            Response::Bot => ResponseRecord::Word(ResponseWord::Bot),
            Response::Neighbors(list) => ResponseRecord::Names(list.iter().map(|&n| hex(n)).collect()),
        };
        (r.name, response)
    });
    let refused = ledger.rejected().iter().map(|&n| (n, ResponseRecord::Word(ResponseWord::Budget)));
    served
        .chain(refused)
        .enumerate()
        .map(|(seq, (name, response))| TranscriptLine { seq, name_hex: hex(name), response })
        .collect()
}

pub fn write_transcript<W: Write>(ledger: &QueryLedger, name_bits: u32, mut out: W) -> Result<(), FormatError> {
    for line in transcript_lines(ledger, name_bits) {
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_transcript<R: BufRead>(input: R) -> Result<Vec<TranscriptLine>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TranscriptLine = serde_json::from_str(&line).map_err(|e| FormatError::Syntax {
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub tau: f64,
    pub vertex: String,
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub x: String,
    pub u1: String,
    pub u2: String,
    pub component_size: usize,
    pub detected: bool,
    pub selected: [String; 2],
    pub measurements: Vec<MeasurementRecord>,
}

impl IterationRecord {
    fn new(trace: &StepTrace, bits: u32) -> Self {
        let hex = |n: VertexName| n.hex(bits).to_string();
        IterationRecord {
            iteration: trace.iteration,
            x: hex(trace.x),
            u1: hex(trace.u1),
            u2: hex(trace.u2),
            component_size: trace.component_size,
            detected: trace.detected,
            selected: [hex(trace.selected.0), hex(trace.selected.1)],
            measurements: trace
                .measurements
                .iter()
                .map(|m| MeasurementRecord { tau: m.tau, vertex: hex(m.vertex), degree: m.degree })
                .collect(),
        }
    }
}

/// A pathfinding run. `failure` is set, and `verified` false, when the run
/// did not produce an `x`-`y` path; the fields then describe the partial
/// run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathResultFile {
    pub vertices: Vec<String>,
    pub edges: Vec<[String; 2]>,
    pub iterations: Vec<IterationRecord>,
    pub propagator_applications: usize,
    pub queries: usize,
    pub verified: bool,
    pub failure: Option<String>,
}

impl PathResultFile {
    pub fn new(result: &PathResult, bits: u32, verified: bool, failure: Option<String>) -> Self {
        let hex = |n: VertexName| n.hex(bits).to_string();
        PathResultFile {
            vertices: result.vertices.iter().map(|&n| hex(n)).collect(),
            edges: result.edges.iter().map(|&(a, b)| [hex(a), hex(b)]).collect(),
            iterations: result.iterations.iter().map(|t| IterationRecord::new(t, bits)).collect(),
            propagator_applications: result.propagator_applications,
            queries: result.ledger.count(),
            verified,
            failure,
        }
    }

    pub fn from_failure(failure: &PathfindFailure, bits: u32) -> Self {
        Self::new(&failure.partial, bits, false, Some(failure.to_string()))
    }
}
