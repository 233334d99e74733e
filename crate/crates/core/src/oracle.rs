//! Metered adjacency-list oracle.
//!
//! The oracle answers a name with the sorted names of that vertex's current
//! neighbours, or with `Bot` when the name is not in the graph. Every served
//! call is logged in a [`QueryLedger`]; calls beyond the budget are refused
//! and logged separately.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::{LabeledGraph, VertexId, VertexName};

/// An oracle answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Response {
    /// The queried string is not a vertex name.
    Bot,
    Neighbors(Vec<VertexName>),
}

impl Response {
    pub fn neighbors(&self) -> Option<&[VertexName]> {
        match self {
            Response::Bot => None,
            Response::Neighbors(list) => Some(list),
        }
    }

    /// Degree of the queried vertex, `None` for `Bot`.
    pub fn degree(&self) -> Option<usize> {
        self.neighbors().map(<[VertexName]>::len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryKind {
    Full,
    Restricted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryRecord {
    pub name: VertexName,
    pub kind: QueryKind,
    pub response: Response,
}

/// Transcript of served queries plus the names of refused ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueryLedger {
    records: Vec<QueryRecord>,
    rejected: Vec<VertexName>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of served queries.
    pub fn count(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    /// Calls refused because the budget was spent, in call order. They all
    /// come after the served records.
    pub fn rejected(&self) -> &[VertexName] {
        &self.rejected
    }

    /// Checks that every queried name was either given up front or returned
    /// by an earlier served query.
    pub fn audit_closure(&self, given: &[VertexName]) -> Result<(), ClosureViolation> {
        let mut known: BTreeSet<VertexName> = given.iter().copied().collect();
        for (seq, record) in self.records.iter().enumerate() {
            if !known.contains(&record.name) {
                return Err(ClosureViolation { seq, name: record.name });
            }
            if let Response::Neighbors(list) = &record.response {
                known.extend(list.iter().copied());
            }
        }
        let seq = self.records.len();
        if let Some(&name) = self.rejected.iter().find(|n| !known.contains(n)) {
            return Err(ClosureViolation { seq, name });
        }
        Ok(())
    }

    /// Every name given up front or returned by a served query.
    pub fn known_names(&self, given: &[VertexName]) -> BTreeSet<VertexName> {
        let mut known: BTreeSet<VertexName> = given.iter().copied().collect();
        for record in &self.records {
            if let Response::Neighbors(list) = &record.response {
                known.extend(list.iter().copied());
            }
        }
        known
    }
}

/// A query for a name that was never handed to the caller.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClosureViolation {
    pub seq: usize,
    pub name: VertexName,
}

impl fmt::Display for ClosureViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "query {} asked for unseen name {:#x}", self.seq, self.name.bits())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleError {
    BudgetExhausted { budget: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::BudgetExhausted { budget } => {
                write!(f, "query budget of {budget} exhausted")
            }
        }
    }
}

impl core::error::Error for OracleError {}

/// Query-metered view of a graph.
#[derive(Clone, Debug)]
pub struct Oracle<'g> {
    graph: &'g LabeledGraph,
    ledger: QueryLedger,
    budget: Option<usize>,
}

impl<'g> Oracle<'g> {
    pub fn new(graph: &'g LabeledGraph) -> Self {
        Oracle { graph, ledger: QueryLedger::new(), budget: None }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = Some(budget);
        self
    }

    /// Continues an existing ledger, e.g. across edge deletions.
    pub fn with_ledger(mut self, ledger: QueryLedger) -> Self {
        self.ledger = ledger;
        self
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    pub fn remaining(&self) -> Option<usize> {
        self.budget.map(|b| b.saturating_sub(self.ledger.count()))
    }

    pub fn query_count(&self) -> usize {
        self.ledger.count()
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> QueryLedger {
        self.ledger
    }

    pub fn reset_ledger(&mut self) {
        self.ledger = QueryLedger::new();
    }

    /// White-box access for simulation code; strategies must not use it.
    pub fn graph(&self) -> &'g LabeledGraph {
        self.graph
    }

    pub fn name_bits(&self) -> u32 {
        self.graph.name_bits()
    }

    pub fn neighbors(&mut self, name: VertexName) -> Result<Response, OracleError> {
        self.serve(name, QueryKind::Full, |g, v| g.neighbors(v).to_vec())
    }

    /// The filtered oracle: drops every edge with an endpoint of current
    /// degree 2. A degree-2 vertex therefore answers with an empty list.
    pub fn restricted_neighbors(&mut self, name: VertexName) -> Result<Response, OracleError> {
        self.serve(name, QueryKind::Restricted, restricted_adjacency)
    }

    fn serve(
        &mut self,
        name: VertexName,
        kind: QueryKind,
        adjacency: impl Fn(&LabeledGraph, VertexId) -> Vec<VertexId>,
    ) -> Result<Response, OracleError> {
        if let Some(budget) = self.budget {
            if self.ledger.count() >= budget {
                self.ledger.rejected.push(name);
                return Err(OracleError::BudgetExhausted { budget });
            }
        }
        let response = match self.graph.vertex_by_name(name) {
            None => Response::Bot,
            Some(v) => {
                let mut names: Vec<VertexName> =
                    adjacency(self.graph, v).into_iter().map(|w| self.graph.name(w)).collect();
                names.sort_unstable();
                Response::Neighbors(names)
            }
        };
        self.ledger.records.push(QueryRecord { name, kind, response: response.clone() });
        Ok(response)
    }
}

/// Neighbours of `v` that survive the degree-2 filter.
pub fn restricted_adjacency(graph: &LabeledGraph, v: VertexId) -> Vec<VertexId> {
    if graph.neighbors(v).len() == 2 {
        return Vec::new();
    }
    graph.neighbors(v).iter().copied().filter(|&w| graph.neighbors(w).len() != 2).collect()
}
