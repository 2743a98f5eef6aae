//! RL network description, structural validation and the node-edge incidence matrix.
//!
//! A network is a connected multigraph whose edges carry a series resistance and
//! inductance. Nodes are split into *boundary* nodes, where voltages are imposed and
//! current injections are observed, and *interior* nodes with zero injection that the
//! reductions in this crate eliminate.
//!
//! After [`validate`], nodes are stored boundary-first (each group keeps input order),
//! which fixes the row order of every incidence and admittance matrix built from it.

use std::collections::{HashMap, HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A directed RL branch `from -> to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Series resistance in ohms.
    #[serde(rename = "r_ohm")]
    pub r: f64,
    /// Series inductance in henries.
    #[serde(rename = "l_henry")]
    pub l: f64,
}

impl Edge {
    pub fn new(id: impl Into<String>, from: impl Into<String>, to: impl Into<String>, r: f64, l: f64) -> Self {
        Self {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            r,
            l,
        }
    }
}

/// Unvalidated network as read from a file or built in code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub nodes: Vec<String>,
    pub boundary: Vec<String>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("network graph is disconnected ({0} components)")]
    Disconnected(usize),
    #[error("edge {0}: inductance must be positive")]
    NonpositiveInductance(String),
    #[error("edge {0}: resistance must be non-negative")]
    NegativeResistance(String),
    #[error("boundary node set is empty")]
    EmptyBoundary,
    #[error("edge {0} references an unknown node")]
    UnknownNodeRef(String),
    #[error("boundary lists unknown node {0}")]
    UnknownBoundaryNode(String),
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(String),
    #[error("edge {0} is a self-loop")]
    SelfLoop(String),
    #[error("network has no nodes")]
    NoNodes,
}

impl NetworkError {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            NetworkError::Disconnected(_) => "Disconnected",
            NetworkError::NonpositiveInductance(_) => "NonpositiveInductance",
            NetworkError::NegativeResistance(_) => "NegativeResistance",
            NetworkError::EmptyBoundary => "EmptyBoundary",
            NetworkError::UnknownNodeRef(_) => "UnknownNodeRef",
            NetworkError::UnknownBoundaryNode(_) => "UnknownBoundaryNode",
            NetworkError::DuplicateNode(_) => "DuplicateNode",
            NetworkError::DuplicateEdge(_) => "DuplicateEdge",
            NetworkError::SelfLoop(_) => "SelfLoop",
            NetworkError::NoNodes => "NoNodes",
        }
    }
}

/// Edge with endpoints resolved to positions in the boundary-first node order.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedEdge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub r: f64,
    pub l: f64,
}

/// A network that passed [`validate`]. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedNetwork {
    node_ids: Vec<String>,
    n_boundary: usize,
    edges: Vec<IndexedEdge>,
}

impl ValidatedNetwork {
    /// Assembles a network without checks; used for synthesized networks whose
    /// elements may be unphysical on purpose.
    pub(crate) fn from_parts_unchecked(node_ids: Vec<String>, n_boundary: usize, edges: Vec<IndexedEdge>) -> Self {
        Self {
            node_ids,
            n_boundary,
            edges,
        }
    }

    /// Node ids, boundary nodes first.
    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn boundary_ids(&self) -> &[String] {
        &self.node_ids[..self.n_boundary]
    }

    pub fn interior_ids(&self) -> &[String] {
        &self.node_ids[self.n_boundary..]
    }

    pub fn edges(&self) -> &[IndexedEdge] {
        &self.edges
    }

    pub fn edge_ids(&self) -> Vec<String> {
        self.edges.iter().map(|e| e.id.clone()).collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.n_boundary
    }

    pub fn n_interior(&self) -> usize {
        self.node_ids.len() - self.n_boundary
    }

    pub fn resistances(&self) -> DVector<f64> {
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|e| e.r))
    }

    pub fn inductances(&self) -> DVector<f64> {
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|e| e.l))
    }

    pub fn incidence(&self) -> IncidenceMatrix {
        build_incidence(self)
    }

    pub fn partition(&self) -> PartitionedMatrices {
        partition(&self.incidence(), self)
    }

    /// Same network with edge `k` reversed.
    pub fn with_flipped_edge(&self, k: usize) -> Self {
        let mut out = self.clone();
        let e = &mut out.edges[k];
        std::mem::swap(&mut e.tail, &mut e.head);
        out
    }

    /// Converts back to the plain file representation (boundary-first node order).
    pub fn to_network(&self) -> Network {
        Network {
            nodes: self.node_ids.clone(),
            boundary: self.boundary_ids().to_vec(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge::new(e.id.clone(), self.node_ids[e.tail].clone(), self.node_ids[e.head].clone(), e.r, e.l))
                .collect(),
        }
    }
}

/// Checks the structural assumptions and fixes the boundary-first node order.
///
/// A boundary equal to the whole node set is accepted; every reduction is then the identity.
pub fn validate(network: &Network) -> Result<ValidatedNetwork, NetworkError> {
    if network.nodes.is_empty() {
        return Err(NetworkError::NoNodes);
    }
    let mut seen = HashSet::new();
    for n in &network.nodes {
        if !seen.insert(n.as_str()) {
            return Err(NetworkError::DuplicateNode(n.clone()));
        }
    }
    if network.boundary.is_empty() {
        return Err(NetworkError::EmptyBoundary);
    }
    let mut boundary = HashSet::new();
    for b in &network.boundary {
        if !seen.contains(b.as_str()) {
            return Err(NetworkError::UnknownBoundaryNode(b.clone()));
        }
        if !boundary.insert(b.as_str()) {
            return Err(NetworkError::DuplicateNode(b.clone()));
        }
    }

    // boundary-first, each group in input order
    let node_ids: Vec<String> = network
        .nodes
        .iter()
        .filter(|n| boundary.contains(n.as_str()))
        .chain(network.nodes.iter().filter(|n| !boundary.contains(n.as_str())))
        .cloned()
        .collect();
    let position: HashMap<&str, usize> = node_ids.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    let mut edge_ids = HashSet::new();
    let mut edges = Vec::with_capacity(network.edges.len());
    for e in &network.edges {
        if !edge_ids.insert(e.id.as_str()) {
            return Err(NetworkError::DuplicateEdge(e.id.clone()));
        }
        let (Some(&tail), Some(&head)) = (position.get(e.from.as_str()), position.get(e.to.as_str())) else {
            return Err(NetworkError::UnknownNodeRef(e.id.clone()));
        };
        if tail == head {
            return Err(NetworkError::SelfLoop(e.id.clone()));
        }
        if !(e.l > 0.0) || !e.l.is_finite() {
            return Err(NetworkError::NonpositiveInductance(e.id.clone()));
        }
        if !(e.r >= 0.0) || !e.r.is_finite() {
            return Err(NetworkError::NegativeResistance(e.id.clone()));
        }
        edges.push(IndexedEdge {
            id: e.id.clone(),
            tail,
            head,
            r: e.r,
            l: e.l,
        });
    }

    let components = count_components(node_ids.len(), &edges);
    if components != 1 {
        return Err(NetworkError::Disconnected(components));
    }

    Ok(ValidatedNetwork {
        node_ids,
        n_boundary: boundary.len(),
        edges,
    })
}

fn count_components(n: usize, edges: &[IndexedEdge]) -> usize {
    let adjacency = adjacency(n, edges);
    let mut seen = vec![false; n];
    let mut count = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    count
}

/// Per node: `(neighbour, edge index)` pairs in edge order.
pub(crate) fn adjacency(n: usize, edges: &[IndexedEdge]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (k, e) in edges.iter().enumerate() {
        adj[e.tail].push((e.head, k));
        adj[e.head].push((e.tail, k));
    }
    adj
}

/// Node-by-edge incidence matrix, rows in boundary-first order.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    entries: DMatrix<i8>,
    n_boundary: usize,
}

impl IncidenceMatrix {
    /// Wraps an integer matrix whose first `n_boundary` rows are boundary nodes.
    pub fn from_entries(entries: DMatrix<i8>, n_boundary: usize) -> Self {
        assert!(n_boundary <= entries.nrows());
        Self { entries, n_boundary }
    }

    pub fn entries(&self) -> &DMatrix<i8> {
        &self.entries
    }

    pub fn n_boundary(&self) -> usize {
        self.n_boundary
    }

    pub fn to_real(&self) -> DMatrix<f64> {
        self.entries.map(f64::from)
    }

    /// Boundary rows `B1`.
    pub fn boundary_block(&self) -> DMatrix<f64> {
        self.to_real().rows(0, self.n_boundary).into_owned()
    }

    /// Interior rows `B0`.
    pub fn interior_block(&self) -> DMatrix<f64> {
        let n = self.entries.nrows();
        self.to_real().rows(self.n_boundary, n - self.n_boundary).into_owned()
    }
}

/// `B[k, e] = +1` at the tail of `e`, `-1` at its head.
pub fn build_incidence(network: &ValidatedNetwork) -> IncidenceMatrix {
    let mut entries = DMatrix::<i8>::zeros(network.n_nodes(), network.n_edges());
    for (k, e) in network.edges.iter().enumerate() {
        entries[(e.tail, k)] = 1;
        entries[(e.head, k)] = -1;
    }
    IncidenceMatrix {
        entries,
        n_boundary: network.n_boundary,
    }
}

/// Incidence blocks plus the diagonal branch parameters, in edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedMatrices {
    pub b1: DMatrix<f64>,
    pub b0: DMatrix<f64>,
    /// Diagonal of `R`.
    pub r: DVector<f64>,
    /// Diagonal of `L`.
    pub l: DVector<f64>,
}

impl PartitionedMatrices {
    pub fn r_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.r)
    }

    pub fn l_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.l)
    }

    /// Full incidence matrix `[B1; B0]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let e = self.b1.ncols();
        let mut b = DMatrix::zeros(self.b1.nrows() + self.b0.nrows(), e);
        b.rows_mut(0, self.b1.nrows()).copy_from(&self.b1);
        b.rows_mut(self.b1.nrows(), self.b0.nrows()).copy_from(&self.b0);
        b
    }
}

pub fn partition(b: &IncidenceMatrix, network: &ValidatedNetwork) -> PartitionedMatrices {
    PartitionedMatrices {
        b1: b.boundary_block(),
        b0: b.interior_block(),
        r: network.resistances(),
        l: network.inductances(),
    }
}
