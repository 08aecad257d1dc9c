//! Greedy and beam search over the pass registry.
//!
//! Both searches rank circuits by two-qubit gate count, breaking ties by
//! total gate count and then by the action-index sequence that produced
//! them, so results are deterministic regardless of expansion order.

use rayon::prelude::*;
use rlpass_core::passes::{apply_pass, Action};
use rlpass_core::Circuit;

/// Beam search shape: `depth` levels, keeping the best `width` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamConfig {
    pub depth: usize,
    pub width: usize,
}

impl BeamConfig {
    pub fn new(depth: usize, width: usize) -> Self {
        assert!(depth >= 1 && width >= 1, "beam depth and width must be at least 1");
        BeamConfig { depth, width }
    }
}

type Merit = (usize, usize, Vec<usize>);

fn merit(circuit: &Circuit, path: &[Action]) -> Merit {
    (
        circuit.two_qubit_count(),
        circuit.gate_count(),
        path.iter().map(|a| a.index()).collect(),
    )
}

/// Try every pass once and keep the best result.
///
/// Returns the input circuit with [`Action::DoNothing`] when no pass
/// strictly improves the (two-qubit count, gate count) pair.
pub fn greedy_search(circuit: &Circuit) -> (Circuit, Action) {
    let candidates: Vec<(Action, Circuit)> = Action::ALL
        .into_par_iter()
        .filter(|a| *a != Action::DoNothing)
        .map(|a| (a, apply_pass(a, circuit).circuit))
        .collect();
    let best = candidates
        .into_iter()
        .min_by_key(|(a, c)| (c.two_qubit_count(), c.gate_count(), a.index()))
        .expect("registry has non-trivial passes");
    let improved = (best.1.two_qubit_count(), best.1.gate_count())
        < (circuit.two_qubit_count(), circuit.gate_count());
    if improved {
        (best.1, best.0)
    } else {
        (circuit.clone(), Action::DoNothing)
    }
}

struct BeamNode {
    circuit: Circuit,
    path: Vec<Action>,
    merit: Merit,
}

/// Expand every action from every retained node for `depth` levels and
/// return the best circuit seen anywhere in the tree, including the root,
/// together with the pass sequence that produced it.
pub fn beam_search(circuit: &Circuit, config: &BeamConfig) -> (Circuit, Vec<Action>) {
    assert!(config.depth >= 1 && config.width >= 1);
    let root = BeamNode {
        circuit: circuit.clone(),
        path: Vec::new(),
        merit: merit(circuit, &[]),
    };
    let mut best = (root.merit.clone(), root.circuit.clone(), root.path.clone());
    let mut frontier = vec![root];
    for _ in 0..config.depth {
        let mut children: Vec<BeamNode> = frontier
            .par_iter()
            .flat_map_iter(|node| {
                Action::ALL.iter().map(move |&a| {
                    let next = apply_pass(a, &node.circuit).circuit;
                    let mut path = node.path.clone();
                    path.push(a);
                    let merit = merit(&next, &path);
                    BeamNode { circuit: next, path, merit }
                })
            })
            .collect();
        children.sort_by(|x, y| x.merit.cmp(&y.merit));
        children.truncate(config.width);
        if let Some(top) = children.first() {
            if top.merit < best.0 {
                best = (top.merit.clone(), top.circuit.clone(), top.path.clone());
            }
        }
        frontier = children;
    }
    (best.1, best.2)
}
