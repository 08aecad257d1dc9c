//! Optimisation passes and the action registry the agent chooses from.
//!
//! Every pass is a pure function from circuit to circuit. Outputs are in the
//! native gateset and rebase-normalised, and implement the same unitary as
//! the input up to global phase. `DoNothing` is the exception on both counts:
//! it returns its input untouched.

use std::time::Instant;

use crate::circuit::Circuit;
use crate::error::CoreError;
use crate::gate::{canonical_angle, Gate, GateKind};
use crate::kak;
use crate::pauli::PauliString;
use crate::rebase::rebase;
use crate::tableau::Tableau;
use crate::unitary;

/// Registry of passes, in index order. `DoNothing` is always last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    KakDecomposition,
    CliffordResynthesis,
    CliffordSimp,
    GreedyPauliSimp,
    DoNothing,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::KakDecomposition,
        Action::CliffordResynthesis,
        Action::CliffordSimp,
        Action::GreedyPauliSimp,
        Action::DoNothing,
    ];

    pub const COUNT: usize = Action::ALL.len();

    /// Contiguous registry index, starting at zero.
    pub fn index(self) -> usize {
        Action::ALL.iter().position(|&a| a == self).unwrap()
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    /// The exact name used in checkpoints, traces and reports.
    pub fn name(self) -> &'static str {
        match self {
            Action::KakDecomposition => "KAKDecomposition",
            Action::CliffordResynthesis => "CliffordResynthesis",
            Action::CliffordSimp => "CliffordSimp",
            Action::GreedyPauliSimp => "GreedyPauliSimp",
            Action::DoNothing => "DoNothing",
        }
    }

    pub fn from_name(name: &str) -> Option<Action> {
        Action::ALL.iter().copied().find(|a| a.name() == name)
    }
}

/// Outcome of one pass application.
#[derive(Debug, Clone)]
pub struct PassResult {
    pub circuit: Circuit,
    /// False only when the output is structurally identical to the input.
    pub changed: bool,
    pub wall_time_ms: f64,
}

/// Apply the pass named by `action` to `circuit`.
pub fn apply_pass(action: Action, circuit: &Circuit) -> PassResult {
    let start = Instant::now();
    let out = match action {
        Action::KakDecomposition => pass_kak(circuit),
        Action::CliffordResynthesis => pass_clifford_resynth(circuit),
        Action::CliffordSimp => pass_clifford_simp(circuit),
        Action::GreedyPauliSimp => pass_greedy_pauli(circuit),
        Action::DoNothing => circuit.clone(),
    };
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let changed = out != *circuit;
    PassResult { circuit: out, changed, wall_time_ms }
}

fn remap_gate(g: &Gate, map: impl Fn(usize) -> usize) -> Gate {
    let qubits: Vec<usize> = g.qubits().iter().map(|&q| map(q)).collect();
    Gate::new(g.kind(), &qubits, g.params())
}

/// Splice `replacement[b]` in place of the indexed gate groups, inserting each
/// replacement at its group's last gate position. Valid whenever every
/// non-group gate inside a group's index span is disjoint from the wires the
/// group had touched up to that point: such gates commute with the whole
/// group, so the group's product can be evaluated at its last position.
fn splice_groups(
    c: &Circuit,
    groups: &[Vec<usize>],
    replacement: &[Option<Vec<Gate>>],
) -> Circuit {
    let mut group_of: Vec<Option<usize>> = vec![None; c.gate_count()];
    for (b, gates) in groups.iter().enumerate() {
        if replacement[b].is_some() {
            for &i in gates {
                group_of[i] = Some(b);
            }
        }
    }
    let mut out = Circuit::new(c.n_qubits());
    for (i, g) in c.gates().iter().enumerate() {
        match group_of[i] {
            None => out.push(*g),
            Some(b) => {
                if i == *groups[b].last().unwrap() {
                    out.extend(replacement[b].as_ref().unwrap().iter().copied());
                }
            }
        }
    }
    out
}

/// Collapse maximal same-pair blocks to at most three ZZPhase interactions.
///
/// Blocks grow greedily over the gate list: a two-qubit gate opens a block on
/// its pair, absorbing the pending one-qubit gates on those wires;
/// single-qubit gates join the block owning their wire; a two-qubit gate on a
/// different pairing seals every block it touches. A block is replaced by its
/// Weyl-coordinate resynthesis only when that strictly lowers its ZZPhase
/// count.
pub fn pass_kak(circuit: &Circuit) -> Circuit {
    let c = rebase(circuit);
    let n = c.n_qubits();

    struct Block {
        pair: (usize, usize),
        gates: Vec<usize>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); n];

    for (i, g) in c.gates().iter().enumerate() {
        match *g.qubits() {
            [q] => match owner[q] {
                Some(b) => blocks[b].gates.push(i),
                None => pending[q].push(i),
            },
            [a, b] => {
                let pair = (a.min(b), a.max(b));
                if owner[pair.0].is_some() && owner[pair.0] == owner[pair.1] {
                    blocks[owner[pair.0].unwrap()].gates.push(i);
                } else {
                    for q in [pair.0, pair.1] {
                        if let Some(bid) = owner[q] {
                            let (x, y) = blocks[bid].pair;
                            owner[x] = None;
                            owner[y] = None;
                        }
                    }
                    let mut gates = Vec::new();
                    gates.append(&mut pending[pair.0]);
                    gates.append(&mut pending[pair.1]);
                    gates.sort_unstable();
                    gates.push(i);
                    let bid = blocks.len();
                    blocks.push(Block { pair, gates });
                    owner[pair.0] = Some(bid);
                    owner[pair.1] = Some(bid);
                }
            }
            _ => unreachable!("native gates touch one or two qubits"),
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut replacement: Vec<Option<Vec<Gate>>> = Vec::new();
    for block in &blocks {
        let zz = block.gates.iter().filter(|&&i| c.gates()[i].arity() == 2).count();
        let mut local = Circuit::new(2);
        for &i in &block.gates {
            let g = &c.gates()[i];
            local.push(remap_gate(g, |q| usize::from(q != block.pair.0)));
        }
        let rewrite = unitary::circuit_unitary(&local)
            .ok()
            .and_then(|u| kak::kak_synthesize(&u).ok())
            .filter(|s| s.two_qubit_count() < zz)
            .map(|s| {
                s.gates()
                    .iter()
                    .map(|g| {
                        remap_gate(g, |q| if q == 0 { block.pair.0 } else { block.pair.1 })
                    })
                    .collect::<Vec<Gate>>()
            });
        groups.push(block.gates.clone());
        replacement.push(rewrite);
    }

    rebase(&splice_groups(&c, &groups, &replacement))
}

/// Local Clifford-motivated rewriting, run to a fixpoint (at most 1000
/// sweeps): same-pair ZZPhase gates separated only by Rz gates on those wires
/// merge by angle addition, ZZPhase(0 mod 2) is deleted, ZZPhase(1 mod 2)
/// becomes Rz(1) on both wires, and one-qubit runs are squashed by the
/// rebase. Never increases the ZZPhase count.
pub fn pass_clifford_simp(circuit: &Circuit) -> Circuit {
    let mut cur = rebase(circuit);
    for _ in 0..1000 {
        let next = rebase(&clifford_simp_sweep(&cur));
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn clifford_simp_sweep(c: &Circuit) -> Circuit {
    let mut gates: Vec<Option<Gate>> = c.gates().iter().copied().map(Some).collect();
    for i in 0..gates.len() {
        let Some(g) = gates[i] else { continue };
        if g.kind() != GateKind::ZZPhase {
            continue;
        }
        let (a, b) = (g.qubits()[0], g.qubits()[1]);
        let mut angle = g.params()[0];
        for j in i + 1..gates.len() {
            let Some(h) = gates[j] else { continue };
            if !h.qubits().iter().any(|&q| q == a || q == b) {
                continue;
            }
            if h.kind() == GateKind::Rz {
                // Diagonal, commutes with ZZPhase exactly.
                continue;
            }
            if h.kind() == GateKind::ZZPhase && h.qubits().iter().all(|&q| q == a || q == b) {
                angle = canonical_angle(angle + h.params()[0]);
                gates[j] = None;
                continue;
            }
            break;
        }
        gates[i] = Some(Gate::zz_phase(a, b, angle));
    }

    let mut out = Circuit::new(c.n_qubits());
    for g in gates.into_iter().flatten() {
        if g.kind() == GateKind::ZZPhase {
            let angle = g.params()[0];
            if angle == 0.0 {
                continue;
            }
            if angle == 1.0 {
                // ZZPhase(1) is proportional to Z(x)Z.
                out.push(Gate::rz(g.qubits()[0], 1.0));
                out.push(Gate::rz(g.qubits()[1], 1.0));
                continue;
            }
        }
        out.push(g);
    }
    out
}

/// Rewrite maximal contiguous Clifford regions through their tableau.
///
/// A sweep collects Clifford gates into regions whose qubit supports overlap
/// transitively; a non-Clifford gate seals every region it touches. Each
/// region is resynthesised from its tableau and the rewrite is kept only when
/// the region's ZZPhase count does not increase.
pub fn pass_clifford_resynth(circuit: &Circuit) -> Circuit {
    let c = rebase(circuit);
    let n = c.n_qubits();

    struct Region {
        support: Vec<bool>,
        gates: Vec<usize>,
    }
    let mut regions: Vec<Region> = Vec::new();
    // Open region currently holding each wire; sealed regions are removed.
    let mut holder: Vec<Option<usize>> = vec![None; n];

    for (i, g) in c.gates().iter().enumerate() {
        let qs = g.qubits();
        if !g.is_clifford() {
            for &q in qs {
                if let Some(rid) = holder[q] {
                    for h in holder.iter_mut() {
                        if *h == Some(rid) {
                            *h = None;
                        }
                    }
                }
            }
            continue;
        }
        let mut touched: Vec<usize> = qs.iter().filter_map(|&q| holder[q]).collect();
        touched.sort_unstable();
        touched.dedup();
        let keep = match touched.first() {
            None => {
                let rid = regions.len();
                regions.push(Region { support: vec![false; n], gates: Vec::new() });
                rid
            }
            Some(&rid) => rid,
        };
        for &rid in touched.iter().skip(1) {
            let moved = std::mem::take(&mut regions[rid].gates);
            regions[keep].gates.extend(moved);
            let support = std::mem::take(&mut regions[rid].support);
            for (q, s) in support.into_iter().enumerate() {
                if s {
                    regions[keep].support[q] = true;
                }
            }
            for h in holder.iter_mut() {
                if *h == Some(rid) {
                    *h = Some(keep);
                }
            }
        }
        regions[keep].gates.push(i);
        regions[keep].gates.sort_unstable();
        for &q in qs {
            regions[keep].support[q] = true;
            holder[q] = Some(keep);
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut replacement: Vec<Option<Vec<Gate>>> = Vec::new();
    for region in &regions {
        if region.gates.is_empty() {
            continue;
        }
        let support: Vec<usize> = (0..n).filter(|&q| region.support[q]).collect();
        let zz = region.gates.iter().filter(|&&i| c.gates()[i].arity() == 2).count();
        let mut local = Circuit::new(support.len());
        for &i in &region.gates {
            local.push(remap_gate(&c.gates()[i], |q| {
                support.binary_search(&q).unwrap()
            }));
        }
        let rewrite = Tableau::from_circuit(&local)
            .ok()
            .and_then(|t| t.synthesize().ok())
            .filter(|s| s.two_qubit_count() <= zz)
            .map(|s| {
                s.gates()
                    .iter()
                    .map(|g| remap_gate(g, |q| support[q]))
                    .collect::<Vec<Gate>>()
            });
        groups.push(region.gates.clone());
        replacement.push(rewrite);
    }

    rebase(&splice_groups(&c, &groups, &replacement))
}

/// Rewrite the circuit as Pauli-gadget rotations followed by one Clifford
/// block, then resynthesise both.
///
/// Non-Clifford rotations are pushed to the front through the Clifford
/// tableau accumulated behind them; a new gadget merges with an earlier one
/// carrying the same string when only commuting gadgets separate them, and
/// zero-angle gadgets are dropped. A weight-w gadget is emitted with at most
/// 2(w-1) ZZPhase gates; the trailing Clifford block comes from tableau
/// synthesis. This pass can increase the two-qubit count.
pub fn pass_greedy_pauli(circuit: &Circuit) -> Circuit {
    let c = rebase(circuit);
    match greedy_pauli_rewrite(&c) {
        Ok(out) => rebase(&out),
        Err(_) => c,
    }
}

enum Step {
    Clifford(Gate),
    Rotation(PauliString, f64),
}

fn axis_string(n: usize, q: usize, x: bool, z: bool) -> PauliString {
    let mut p = PauliString::identity(n);
    p.set_bits(q, x, z);
    p
}

fn rotation_step(g: Gate, string: PauliString) -> Option<Step> {
    let angle = g.params()[0];
    if angle == 0.0 {
        None
    } else if g.is_clifford() {
        Some(Step::Clifford(g))
    } else {
        Some(Step::Rotation(string, angle))
    }
}

fn primitive_steps(n: usize, g: &Gate) -> Vec<Step> {
    if g.is_clifford() {
        return vec![Step::Clifford(*g)];
    }
    match g.kind() {
        GateKind::Rz => {
            let q = g.qubits()[0];
            rotation_step(*g, axis_string(n, q, false, true)).into_iter().collect()
        }
        GateKind::ZZPhase => {
            let (a, b) = (g.qubits()[0], g.qubits()[1]);
            let mut p = PauliString::identity(n);
            p.set_bits(a, false, true);
            p.set_bits(b, false, true);
            rotation_step(*g, p).into_iter().collect()
        }
        GateKind::PhasedX => {
            // PhasedX(a, b) = Rz(b) Rx(a) Rz(-b), applied right to left.
            let q = g.qubits()[0];
            let (alpha, beta) = (g.params()[0], g.params()[1]);
            [
                rotation_step(Gate::rz(q, -beta), axis_string(n, q, false, true)),
                rotation_step(Gate::phased_x(q, alpha, 0.0), axis_string(n, q, true, false)),
                rotation_step(Gate::rz(q, beta), axis_string(n, q, false, true)),
            ]
            .into_iter()
            .flatten()
            .collect()
        }
        _ => unreachable!("rebased circuits are native"),
    }
}

fn push_gadget(gadgets: &mut Vec<(PauliString, f64)>, p: PauliString, theta: f64) {
    if theta == 0.0 || p.weight() == 0 {
        return;
    }
    let mut k = gadgets.len();
    while k > 0 {
        if gadgets[k - 1].0 == p {
            let merged = canonical_angle(gadgets[k - 1].1 + theta);
            if merged == 0.0 {
                gadgets.remove(k - 1);
            } else {
                gadgets[k - 1].1 = merged;
            }
            return;
        }
        if !gadgets[k - 1].0.commutes_with(&p) {
            break;
        }
        k -= 1;
    }
    gadgets.push((p, theta));
}

/// Append gates for `exp(-i*pi*theta/2 * P)`: per-qubit basis changes onto Z,
/// a CX parity ladder folding onto the next-to-last support wire, one ZZPhase
/// (or a lone Rz at weight one), then the unfolding mirror.
pub(crate) fn emit_gadget(out: &mut Circuit, p: &PauliString, theta: f64) {
    let support = p.support();
    let mut basis: Vec<Gate> = Vec::new();
    for &q in &support {
        let (x, z) = p.bits(q);
        if x && z {
            // V Y Vdg = Z.
            basis.push(Gate::new(GateKind::V, &[q], &[]));
        } else if x {
            basis.push(Gate::new(GateKind::H, &[q], &[]));
        }
    }
    out.extend(basis.iter().copied());
    match support.len() {
        0 => {}
        1 => out.push(Gate::rz(support[0], theta)),
        w => {
            // Fold parities onto the next-to-last wire, rotate, unfold.
            let chain: Vec<[usize; 2]> =
                (0..w - 2).map(|k| [support[k], support[k + 1]]).collect();
            for q in &chain {
                out.push(Gate::new(GateKind::Cx, q, &[]));
            }
            out.push(Gate::zz_phase(support[w - 2], support[w - 1], theta));
            for q in chain.iter().rev() {
                out.push(Gate::new(GateKind::Cx, q, &[]));
            }
        }
    }
    out.extend(basis.iter().rev().map(Gate::dagger));
}

fn greedy_pauli_rewrite(c: &Circuit) -> Result<Circuit, CoreError> {
    let n = c.n_qubits();
    let mut t = Tableau::identity(n);
    let mut tinv = Tableau::identity(n);
    let mut gadgets: Vec<(PauliString, f64)> = Vec::new();

    for g in c.gates() {
        for step in primitive_steps(n, g) {
            match step {
                Step::Clifford(cg) => {
                    t.apply_gate(&cg)?;
                    tinv.compose_right_gate(&cg.dagger())?;
                }
                Step::Rotation(p, mut theta) => {
                    let mut q = tinv.conjugate_pauli(&p);
                    if q.phase() == 2 {
                        theta = -theta;
                        q.set_phase(0);
                    }
                    push_gadget(&mut gadgets, q, canonical_angle(theta));
                }
            }
        }
    }

    let mut out = Circuit::new(n);
    for (p, theta) in &gadgets {
        emit_gadget(&mut out, p, *theta);
    }
    out.extend(t.synthesize()?.gates().iter().copied());
    Ok(out)
}
