//! A circuit is an ordered gate list over a fixed qubit count. The list order
//! is a topological order of the gate DAG; per-wire order is the order in
//! which gates touch that wire.

use crate::gate::{Gate, GateKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Circuit {
        Circuit { n_qubits, gates: Vec::new() }
    }

    pub fn from_gates(n_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Circuit {
        let mut c = Circuit::new(n_qubits);
        for g in gates {
            c.push(g);
        }
        c
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Append a gate. Panics if it addresses a qubit outside the register.
    pub fn push(&mut self, gate: Gate) {
        for &q in gate.qubits() {
            assert!(q < self.n_qubits, "qubit {q} out of range for {} wires", self.n_qubits);
        }
        self.gates.push(gate);
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) {
        for g in gates {
            self.push(g);
        }
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Number of ZZPhase gates, the cost metric every pass tries to lower.
    /// Meaningful on native circuits; extended two-qubit gates are not counted.
    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind() == GateKind::ZZPhase).count()
    }

    pub fn is_native(&self) -> bool {
        self.gates.iter().all(|g| g.is_native())
    }

    /// Gate indices per wire, in circuit order.
    pub fn wires(&self) -> Vec<Vec<usize>> {
        let mut wires = vec![Vec::new(); self.n_qubits];
        for (i, g) in self.gates.iter().enumerate() {
            for &q in g.qubits() {
                wires[q].push(i);
            }
        }
        wires
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_wires() {
        let mut c = Circuit::new(3);
        c.push(Gate::rz(0, 0.25));
        c.push(Gate::zz_phase(0, 1, 0.5));
        c.push(Gate::phased_x(2, 0.5, 0.0));
        c.push(Gate::zz_phase(2, 1, 1.0));
        assert_eq!(c.gate_count(), 4);
        assert_eq!(c.two_qubit_count(), 2);
        assert_eq!(c.wires(), vec![vec![0, 1], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    #[should_panic]
    fn rejects_out_of_range_qubit() {
        let mut c = Circuit::new(2);
        c.push(Gate::rz(2, 0.5));
    }
}
