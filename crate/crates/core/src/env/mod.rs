//! Graph environment model: nodes, undirected risk-classed edges and the
//! risk-class outcome table.

mod io;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use io::{
    default_environment, load_environment, load_environment_file, load_mission,
    load_mission_file, save_environment, save_mission, DEFAULT_ENVIRONMENT_JSON,
    DEFAULT_MISSION_JSON,
};

/// Index of a node in its graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(v: usize) -> Self {
        NodeId(v)
    }
}

/// Index of an edge in [`Graph::edges`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

/// Discrete edge risk level, ordered from least to most severe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskClass {
    Low,
    Medium,
    High,
    Severe,
}

impl RiskClass {
    pub const ALL: [RiskClass; 4] = [
        RiskClass::Low,
        RiskClass::Medium,
        RiskClass::High,
        RiskClass::Severe,
    ];
}

impl fmt::Display for RiskClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            RiskClass::Low => "Low",
            RiskClass::Medium => "Medium",
            RiskClass::High => "High",
            RiskClass::Severe => "Severe",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbabilityError {
    #[error("success probability must be positive, got {0}")]
    NonPositiveSuccess(f64),
    #[error("probability {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
}

/// One-step outcome distribution of an edge traversal attempt.
///
/// Only `success` and `retry` are stored; the catastrophic failure mass is
/// always `1 - (success + retry)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeProbs<T> {
    success: T,
    retry: T,
}

impl<T: Scalar> OutcomeProbs<T> {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(success: T, retry: T) -> Result<Self, ProbabilityError> {
        let tol = T::tolerance();
        if !(success > T::zero()) {
            return Err(ProbabilityError::NonPositiveSuccess(success.as_f64()));
        }
        for p in [success, retry] {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(ProbabilityError::OutOfRange(p.as_f64()));
            }
        }
        let sum = success + retry;
        if sum > T::one() + tol {
            return Err(ProbabilityError::NotNormalized(sum.as_f64()));
        }
        Ok(Self { success, retry })
    }

    /// Builds from an explicit triple, which must sum to one.
    pub fn from_triple(success: T, retry: T, fail: T) -> Result<Self, ProbabilityError> {
        if !(fail >= T::zero() && fail <= T::one()) {
            return Err(ProbabilityError::OutOfRange(fail.as_f64()));
        }
        let sum = success + retry + fail;
        if (sum - T::one()).abs() > T::tolerance() {
            return Err(ProbabilityError::NotNormalized(sum.as_f64()));
        }
        Self::new(success, retry)
    }

    pub fn success(&self) -> T {
        self.success
    }

    pub fn retry(&self) -> T {
        self.retry
    }

    pub fn fail(&self) -> T {
        (T::one() - (self.success + self.retry)).max(T::zero())
    }

    /// Probability that repeated attempts end in success rather than in
    /// catastrophic failure: `success / (success + fail)`.
    pub fn effective_success(&self) -> T {
        let fail = self.fail();
        if fail == T::zero() {
            return T::one();
        }
        self.success / (self.success + fail)
    }
}

/// Free-function form of [`OutcomeProbs::effective_success`].
pub fn effective_success<T: Scalar>(probs: &OutcomeProbs<T>) -> T {
    probs.effective_success()
}

/// Default outcome table used when an environment file omits `risk_table`.
pub fn default_risk_table<T: Scalar>() -> BTreeMap<RiskClass, OutcomeProbs<T>> {
    let rows = [
        (RiskClass::Low, 0.999, 0.0009),
        (RiskClass::Medium, 0.99, 0.009),
        (RiskClass::High, 0.95, 0.045),
        (RiskClass::Severe, 0.90, 0.09),
    ];
    rows.into_iter()
        .map(|(class, s, r)| {
            let probs = OutcomeProbs::new(T::lit(s), T::lit(r)).expect("default row is valid");
            (class, probs)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge<T> {
    pub a: NodeId,
    pub b: NodeId,
    pub distance: T,
    pub risk: RiskClass,
}

impl<T> Edge<T> {
    pub fn new(a: impl Into<NodeId>, b: impl Into<NodeId>, distance: T, risk: RiskClass) -> Self {
        Self {
            a: a.into(),
            b: b.into(),
            distance,
            risk,
        }
    }

    pub fn touches(&self, n: NodeId) -> bool {
        self.a == n || self.b == n
    }

    /// The endpoint opposite `n`. `n` must be an endpoint.
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.a == n {
            self.b
        } else {
            self.a
        }
    }
}

/// Optional decorative node metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeInfo {
    pub label: Option<String>,
    pub xy: Option<[f64; 2]>,
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("node count must be positive")]
    EmptyGraph,
    #[error("node list has {listed} entries but the graph has {count} nodes")]
    NodeInfoLength { listed: usize, count: usize },
    #[error("edge {index}: self-loop edge at node {node}")]
    SelfLoop { index: usize, node: NodeId },
    #[error("edge {index}: node {node} does not exist (graph has {node_count} nodes)")]
    DanglingNode {
        index: usize,
        node: NodeId,
        node_count: usize,
    },
    #[error("edge {index}: duplicate edge between {a} and {b}")]
    DuplicateEdge { index: usize, a: NodeId, b: NodeId },
    #[error("edge {index}: distance must be positive and finite, got {distance}")]
    BadDistance { index: usize, distance: f64 },
    #[error("edge {index}: risk class {class} is not declared in the risk table")]
    UndeclaredClass { index: usize, class: RiskClass },
    #[error("risk class {class}: {source}")]
    BadRiskRow {
        class: RiskClass,
        #[source]
        source: ProbabilityError,
    },
    #[error("risk class {class}: expected [p_success, p_retry] or [p_success, p_retry, p_fail], got {len} values")]
    RiskRowLength { class: RiskClass, len: usize },
    #[error("node {node} does not exist (graph has {node_count} nodes)")]
    InvalidNode { node: NodeId, node_count: usize },
    #[error("mission: {0}")]
    Mission(String),
}

/// Undirected environment graph with a risk-class outcome table.
///
/// Immutable once built; derived views (such as heated graphs) wrap it.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T> {
    node_count: usize,
    nodes: Vec<NodeInfo>,
    edges: Vec<Edge<T>>,
    risk_table: BTreeMap<RiskClass, OutcomeProbs<T>>,
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
}

impl<T: Scalar> Graph<T> {
    pub fn new(
        node_count: usize,
        risk_table: BTreeMap<RiskClass, OutcomeProbs<T>>,
        edges: Vec<Edge<T>>,
    ) -> Result<Self, EnvError> {
        if node_count == 0 {
            return Err(EnvError::EmptyGraph);
        }
        let mut adjacency: Vec<Vec<(NodeId, EdgeId)>> = vec![Vec::new(); node_count];
        for (index, e) in edges.iter().enumerate() {
            for node in [e.a, e.b] {
                if node.0 >= node_count {
                    return Err(EnvError::DanglingNode {
                        index,
                        node,
                        node_count,
                    });
                }
            }
            if e.a == e.b {
                return Err(EnvError::SelfLoop { index, node: e.a });
            }
            if !(e.distance > T::zero() && e.distance.is_finite()) {
                return Err(EnvError::BadDistance {
                    index,
                    distance: e.distance.as_f64(),
                });
            }
            if !risk_table.contains_key(&e.risk) {
                return Err(EnvError::UndeclaredClass {
                    index,
                    class: e.risk,
                });
            }
            if adjacency[e.a.0].iter().any(|&(m, _)| m == e.b) {
                return Err(EnvError::DuplicateEdge {
                    index,
                    a: e.a,
                    b: e.b,
                });
            }
            adjacency[e.a.0].push((e.b, EdgeId(index)));
            adjacency[e.b.0].push((e.a, EdgeId(index)));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            node_count,
            nodes: vec![NodeInfo::default(); node_count],
            edges,
            risk_table,
            adjacency,
        })
    }

    /// Attaches decorative per-node metadata; `info` must have one entry per node.
    pub fn with_node_info(mut self, info: Vec<NodeInfo>) -> Result<Self, EnvError> {
        if info.len() != self.node_count {
            return Err(EnvError::NodeInfoLength {
                listed: info.len(),
                count: self.node_count,
            });
        }
        self.nodes = info;
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count).map(NodeId)
    }

    pub fn node_info(&self, n: NodeId) -> Option<&NodeInfo> {
        self.nodes.get(n.0)
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge<T> {
        &self.edges[id.0]
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn risk_table(&self) -> &BTreeMap<RiskClass, OutcomeProbs<T>> {
        &self.risk_table
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n.0 < self.node_count
    }

    pub fn check_node(&self, n: NodeId) -> Result<(), EnvError> {
        if self.contains(n) {
            Ok(())
        } else {
            Err(EnvError::InvalidNode {
                node: n,
                node_count: self.node_count,
            })
        }
    }

    /// Incident edges of `n`, sorted by neighbor id. Panics on an invalid node.
    pub fn adjacent(&self, n: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[n.0]
    }

    /// All edges incident to `n` together with the neighbor, sorted by neighbor id.
    pub fn neighbors(&self, n: NodeId) -> Result<Vec<(NodeId, &Edge<T>)>, EnvError> {
        self.check_node(n)?;
        Ok(self.adjacency[n.0]
            .iter()
            .map(|&(m, e)| (m, &self.edges[e.0]))
            .collect())
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.adjacency[n.0].len()
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        if !self.contains(a) || !self.contains(b) {
            return None;
        }
        let list = &self.adjacency[a.0];
        list.binary_search_by_key(&b, |&(m, _)| m)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn class_probs(&self, class: RiskClass) -> Option<&OutcomeProbs<T>> {
        self.risk_table.get(&class)
    }
}

/// Read access to a graph whose edge outcome distributions may differ from
/// the base risk table.
pub trait EdgeModel<T: Scalar>: Sync {
    fn graph(&self) -> &Graph<T>;

    fn outcome(&self, edge: EdgeId) -> OutcomeProbs<T>;

    fn effective_success(&self, edge: EdgeId) -> T {
        self.outcome(edge).effective_success()
    }
}

impl<T: Scalar> EdgeModel<T> for Graph<T> {
    fn graph(&self) -> &Graph<T> {
        self
    }

    fn outcome(&self, edge: EdgeId) -> OutcomeProbs<T> {
        let class = self.edges[edge.0].risk;
        self.risk_table[&class]
    }
}

impl<T: Scalar, M: EdgeModel<T>> EdgeModel<T> for &M {
    fn graph(&self) -> &Graph<T> {
        (**self).graph()
    }

    fn outcome(&self, edge: EdgeId) -> OutcomeProbs<T> {
        (**self).outcome(edge)
    }
}
