//! Rewrite circuits into the native gate set and squash single-qubit runs.
//!
//! Extended gates expand through fixed native templates. Afterwards every
//! maximal run of single-qubit gates on a wire is collapsed to at most one
//! PhasedX followed by at most one Rz, and exact-zero rotations are dropped.
//! Runs already in that shape are kept untouched, which makes the whole
//! rewrite idempotent.

use crate::circuit::Circuit;
use crate::euler::euler_gates;
use crate::gate::{canonical_angle, Gate, GateKind};
use crate::unitary::gate_matrix;

fn expand_into(out: &mut Vec<Gate>, g: &Gate) {
    let q = g.qubits();
    match g.kind() {
        GateKind::Rz | GateKind::PhasedX | GateKind::ZZPhase => {
            if g.params()[0] != 0.0 {
                out.push(*g);
            }
        }
        GateKind::Z => out.push(Gate::rz(q[0], 1.0)),
        GateKind::S => out.push(Gate::rz(q[0], 0.5)),
        GateKind::Sdg => out.push(Gate::rz(q[0], 1.5)),
        GateKind::X => out.push(Gate::phased_x(q[0], 1.0, 0.0)),
        GateKind::V => out.push(Gate::phased_x(q[0], 0.5, 0.0)),
        GateKind::Vdg => out.push(Gate::phased_x(q[0], 1.5, 0.0)),
        GateKind::H => {
            out.push(Gate::phased_x(q[0], 0.5, 1.5));
            out.push(Gate::rz(q[0], 1.0));
        }
        GateKind::Cz => {
            out.push(Gate::zz_phase(q[0], q[1], 0.5));
            out.push(Gate::rz(q[0], 1.5));
            out.push(Gate::rz(q[1], 1.5));
        }
        GateKind::Cx => {
            expand_into(out, &Gate::new(GateKind::H, &[q[1]], &[]));
            expand_into(out, &Gate::new(GateKind::Cz, &[q[0], q[1]], &[]));
            expand_into(out, &Gate::new(GateKind::H, &[q[1]], &[]));
        }
        GateKind::Swap => {
            expand_into(out, &Gate::new(GateKind::Cx, &[q[0], q[1]], &[]));
            expand_into(out, &Gate::new(GateKind::Cx, &[q[1], q[0]], &[]));
            expand_into(out, &Gate::new(GateKind::Cx, &[q[0], q[1]], &[]));
        }
    }
}

/// True if `run` is already squashed: `[PhasedX]`, `[Rz]` or `[PhasedX, Rz]`.
fn is_squashed(run: &[Gate]) -> bool {
    match run {
        [g] => matches!(g.kind(), GateKind::PhasedX | GateKind::Rz),
        [a, b] => a.kind() == GateKind::PhasedX && b.kind() == GateKind::Rz,
        _ => false,
    }
}

fn flush_run(out: &mut Vec<Gate>, qubit: usize, run: &mut Vec<Gate>) {
    if run.is_empty() {
        return;
    }
    if is_squashed(run) {
        out.append(run);
        return;
    }
    if run.iter().all(|g| g.kind() == GateKind::Rz) {
        let total = canonical_angle(run.iter().map(|g| g.params()[0]).sum());
        if total != 0.0 {
            out.push(Gate::rz(qubit, total));
        }
        run.clear();
        return;
    }
    let mut acc = crate::unitary::CMat::identity(2, 2);
    for g in run.iter() {
        acc = gate_matrix(g) * acc;
    }
    run.clear();
    out.extend(euler_gates(qubit, &acc));
}

/// Rewrite `circuit` into the native gate set with squashed single-qubit runs.
pub fn rebase(circuit: &Circuit) -> Circuit {
    let mut native = Vec::with_capacity(circuit.gate_count());
    for g in circuit.gates() {
        expand_into(&mut native, g);
    }

    let n = circuit.n_qubits();
    let mut runs: Vec<Vec<Gate>> = vec![Vec::new(); n];
    let mut out = Vec::with_capacity(native.len());
    for g in native {
        match *g.qubits() {
            [q] => runs[q].push(g),
            [a, b] => {
                flush_run(&mut out, a, &mut runs[a]);
                flush_run(&mut out, b, &mut runs[b]);
                out.push(g);
            }
            _ => unreachable!(),
        }
    }
    for q in 0..n {
        let mut run = std::mem::take(&mut runs[q]);
        flush_run(&mut out, q, &mut run);
    }
    Circuit::from_gates(n, out)
}
