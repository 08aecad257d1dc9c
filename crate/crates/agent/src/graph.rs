//! Circuit-to-graph observation encoding.
//!
//! Gates, qubit inputs, and qubit outputs become nodes; each wire
//! contributes a chain of edges input -> gate -> ... -> gate -> output, so
//! edges carry the temporal order of gates per qubit.  Node rows hold the
//! gate parameters (in half-turns divided by two), a Clifford flag, and the
//! registry index of the last applied pass.  Edge rows are two one-hot role
//! vectors, source half then destination half, with roles
//! [boundary, 1q target, 2q first, 2q second].

use crate::error::AgentError;
use crate::scalar::Scalar;
use ndarray::{Array2, Axis};
use rlpass_core::{passes::Action, Circuit, GateKind};

pub const NODE_FEATURES: usize = 8;
pub const EDGE_FEATURES: usize = 8;

/// Graph view of a single circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphObservation<S> {
    /// n_nodes x 8, rows ordered gates, then inputs, then outputs.
    pub node_features: Array2<S>,
    /// (source, destination) node index pairs.
    pub edge_index: Vec<[usize; 2]>,
    /// n_edges x 8 role matrix.
    pub edge_features: Array2<S>,
    pub n_nodes: usize,
    pub n_edges: usize,
}

/// Several observations packed into one node/edge soup for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch<S> {
    pub node_features: Array2<S>,
    pub edge_index: Vec<[usize; 2]>,
    pub edge_features: Array2<S>,
    /// Graph id per node, non-decreasing.
    pub graph_of_node: Vec<usize>,
    /// Node range of graph g is node_offsets[g]..node_offsets[g+1].
    pub node_offsets: Vec<usize>,
    pub edge_offsets: Vec<usize>,
    pub n_graphs: usize,
}

const ROLE_BOUNDARY: usize = 0;
const ROLE_SINGLE: usize = 1;
const ROLE_PAIR_FIRST: usize = 2;
const ROLE_PAIR_SECOND: usize = 3;

fn wire_role(circuit: &Circuit, gate_index: usize, qubit: usize) -> usize {
    let gate = circuit.gates()[gate_index];
    if gate.arity() == 1 {
        ROLE_SINGLE
    } else if gate.qubits()[0] == qubit {
        ROLE_PAIR_FIRST
    } else {
        ROLE_PAIR_SECOND
    }
}

/// Encode a canonical native circuit as a graph observation.
///
/// `last_pass` is broadcast to every node's final feature slot as its
/// registry index, or -1 when no pass has been applied yet.
pub fn encode<S: Scalar>(
    circuit: &Circuit,
    last_pass: Option<Action>,
) -> Result<GraphObservation<S>, AgentError> {
    if !circuit.is_native() {
        return Err(AgentError::NotCanonical);
    }
    let n = circuit.n_qubits();
    let n_gates = circuit.gate_count();
    let n_nodes = n_gates + 2 * n;
    let last = match last_pass {
        Some(a) => S::from_f64(a.index() as f64),
        None => S::from_f64(-1.0),
    };

    let mut nodes = Array2::zeros((n_nodes, NODE_FEATURES));
    for (i, gate) in circuit.gates().iter().enumerate() {
        match gate.kind() {
            GateKind::Rz => nodes[[i, 2]] = S::from_f64(gate.params()[0] / 2.0),
            GateKind::PhasedX => {
                nodes[[i, 3]] = S::from_f64(gate.params()[0] / 2.0);
                nodes[[i, 4]] = S::from_f64(gate.params()[1] / 2.0);
            }
            GateKind::ZZPhase => nodes[[i, 5]] = S::from_f64(gate.params()[0] / 2.0),
            _ => unreachable!("native circuits contain only Rz/PhasedX/ZZPhase"),
        }
        if gate.is_clifford() {
            nodes[[i, 6]] = S::one();
        }
    }
    for q in 0..n {
        nodes[[n_gates + q, 0]] = S::one();
        nodes[[n_gates + n + q, 1]] = S::one();
    }
    for v in 0..n_nodes {
        nodes[[v, 7]] = last;
    }

    let n_edges = circuit.gates().iter().map(|g| g.arity()).sum::<usize>() + n;
    let mut edge_index = Vec::with_capacity(n_edges);
    let mut edge_features = Array2::zeros((n_edges, EDGE_FEATURES));
    let wires = circuit.wires();
    for q in 0..n {
        let mut prev_node = n_gates + q;
        let mut prev_role = ROLE_BOUNDARY;
        for &gi in &wires[q] {
            let role = wire_role(circuit, gi, q);
            let e = edge_index.len();
            edge_index.push([prev_node, gi]);
            edge_features[[e, prev_role]] = S::one();
            edge_features[[e, 4 + role]] = S::one();
            prev_node = gi;
            prev_role = role;
        }
        let e = edge_index.len();
        edge_index.push([prev_node, n_gates + n + q]);
        edge_features[[e, prev_role]] = S::one();
        edge_features[[e, 4 + ROLE_BOUNDARY]] = S::one();
    }
    debug_assert_eq!(edge_index.len(), n_edges);

    Ok(GraphObservation { node_features: nodes, edge_index, edge_features, n_nodes, n_edges })
}

/// Concatenate observations, offsetting edge indices per graph.
pub fn batch<S: Scalar>(graphs: &[GraphObservation<S>]) -> Result<GraphBatch<S>, AgentError> {
    if graphs.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let total_nodes: usize = graphs.iter().map(|g| g.n_nodes).sum();
    let total_edges: usize = graphs.iter().map(|g| g.n_edges).sum();
    let mut node_features = Array2::zeros((total_nodes, NODE_FEATURES));
    let mut edge_features = Array2::zeros((total_edges, EDGE_FEATURES));
    let mut edge_index = Vec::with_capacity(total_edges);
    let mut graph_of_node = Vec::with_capacity(total_nodes);
    let mut node_offsets = vec![0];
    let mut edge_offsets = vec![0];
    let (mut nv, mut ne) = (0, 0);
    for (gi, g) in graphs.iter().enumerate() {
        node_features
            .slice_mut(ndarray::s![nv..nv + g.n_nodes, ..])
            .assign(&g.node_features);
        edge_features
            .slice_mut(ndarray::s![ne..ne + g.n_edges, ..])
            .assign(&g.edge_features);
        for &[s, d] in &g.edge_index {
            edge_index.push([s + nv, d + nv]);
        }
        graph_of_node.extend(std::iter::repeat(gi).take(g.n_nodes));
        nv += g.n_nodes;
        ne += g.n_edges;
        node_offsets.push(nv);
        edge_offsets.push(ne);
    }
    Ok(GraphBatch {
        node_features,
        edge_index,
        edge_features,
        graph_of_node,
        node_offsets,
        edge_offsets,
        n_graphs: graphs.len(),
    })
}

/// Split a batch back into the original observations.
pub fn unbatch<S: Scalar>(batch: &GraphBatch<S>) -> Vec<GraphObservation<S>> {
    let mut out = Vec::with_capacity(batch.n_graphs);
    for g in 0..batch.n_graphs {
        let (n0, n1) = (batch.node_offsets[g], batch.node_offsets[g + 1]);
        let (e0, e1) = (batch.edge_offsets[g], batch.edge_offsets[g + 1]);
        let edge_index = batch.edge_index[e0..e1]
            .iter()
            .map(|&[s, d]| [s - n0, d - n0])
            .collect();
        out.push(GraphObservation {
            node_features: batch.node_features.slice(ndarray::s![n0..n1, ..]).to_owned(),
            edge_index,
            edge_features: batch.edge_features.slice(ndarray::s![e0..e1, ..]).to_owned(),
            n_nodes: n1 - n0,
            n_edges: e1 - e0,
        });
    }
    out
}

impl<S: Scalar> GraphBatch<S> {
    pub fn n_nodes(&self) -> usize {
        self.graph_of_node.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_index.len()
    }

    /// Mean over each graph's rows; `rows` must have one row per node.
    pub fn mean_pool(&self, rows: &Array2<S>) -> Array2<S> {
        let cols = rows.ncols();
        let mut pooled = Array2::zeros((self.n_graphs, cols));
        for (v, &g) in self.graph_of_node.iter().enumerate() {
            let mut row = pooled.row_mut(g);
            row += &rows.row(v);
        }
        for g in 0..self.n_graphs {
            let count = S::from_f64((self.node_offsets[g + 1] - self.node_offsets[g]) as f64);
            pooled.row_mut(g).mapv_inplace(|x| x / count);
        }
        pooled
    }

    /// Scatter a per-graph gradient back to per-node rows (adjoint of mean_pool).
    pub fn mean_pool_backward(&self, pooled_grad: &Array2<S>) -> Array2<S> {
        let mut rows = Array2::zeros((self.n_nodes(), pooled_grad.ncols()));
        for (v, &g) in self.graph_of_node.iter().enumerate() {
            let count = S::from_f64((self.node_offsets[g + 1] - self.node_offsets[g]) as f64);
            let mut row = rows.row_mut(v);
            row.assign(&pooled_grad.row(g));
            row.mapv_inplace(|x| x / count);
        }
        rows
    }

    /// Edge features with the two role halves exchanged, as seen by a
    /// message travelling against the stored edge direction.
    pub fn swapped_edge_features(&self) -> Array2<S> {
        let mut swapped = Array2::zeros(self.edge_features.raw_dim());
        swapped
            .slice_mut(ndarray::s![.., ..4])
            .assign(&self.edge_features.slice(ndarray::s![.., 4..]));
        swapped
            .slice_mut(ndarray::s![.., 4..])
            .assign(&self.edge_features.slice(ndarray::s![.., ..4]));
        swapped
    }
}

/// Mean of all node feature rows of a single observation.
pub fn node_mean<S: Scalar>(obs: &GraphObservation<S>) -> Vec<S> {
    let count = S::from_f64(obs.node_features.nrows() as f64);
    obs.node_features
        .axis_iter(Axis(1))
        .map(|col| col.iter().copied().sum::<S>() / count)
        .collect()
}
