//! Gates over the native set {Rz, PhasedX, ZZPhase} plus the extended set
//! accepted by [`crate::rebase`].
//!
//! Angle convention: parameters are half-turns. `Rz(a) = exp(-i*pi*a/2 * Z)`,
//! `ZZPhase(a) = exp(-i*pi*a/2 * Z(x)Z)` and `PhasedX(a, b) = Rz(b) Rx(a) Rz(-b)`.

use crate::tol;

/// Canonicalise an angle in half-turns into `[0, 2)`, snapping to the nearest
/// multiple of 0.5 when within [`tol::ANGLE_SNAP`].
pub fn canonical_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0);
    let snapped = (a * 2.0).round() / 2.0;
    if (a - snapped).abs() <= tol::ANGLE_SNAP {
        a = snapped.rem_euclid(2.0);
    }
    if a >= 2.0 {
        a = 0.0;
    }
    a
}

/// Half-turn distance from `angle` to the nearest multiple of `step`.
fn dist_to_multiple(angle: f64, step: f64) -> f64 {
    let r = angle / step;
    (r - r.round()).abs() * step
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    // Native gates.
    Rz,
    PhasedX,
    ZZPhase,
    // Extended gates, rewritten into the native set by `rebase`.
    H,
    S,
    Sdg,
    X,
    Z,
    V,
    Vdg,
    Cx,
    Cz,
    Swap,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rz => "Rz",
            GateKind::PhasedX => "PhasedX",
            GateKind::ZZPhase => "ZZPhase",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::Sdg => "Sdg",
            GateKind::X => "X",
            GateKind::Z => "Z",
            GateKind::V => "V",
            GateKind::Vdg => "Vdg",
            GateKind::Cx => "CX",
            GateKind::Cz => "CZ",
            GateKind::Swap => "SWAP",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        Some(match name {
            "Rz" => GateKind::Rz,
            "PhasedX" => GateKind::PhasedX,
            "ZZPhase" => GateKind::ZZPhase,
            "H" => GateKind::H,
            "S" => GateKind::S,
            "Sdg" => GateKind::Sdg,
            "X" => GateKind::X,
            "Z" => GateKind::Z,
            "V" => GateKind::V,
            "Vdg" => GateKind::Vdg,
            "CX" => GateKind::Cx,
            "CZ" => GateKind::Cz,
            "SWAP" => GateKind::Swap,
            _ => return None,
        })
    }

    pub fn is_native(self) -> bool {
        matches!(self, GateKind::Rz | GateKind::PhasedX | GateKind::ZZPhase)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::ZZPhase | GateKind::Cx | GateKind::Cz | GateKind::Swap => 2,
            _ => 1,
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateKind::PhasedX => 2,
            GateKind::Rz | GateKind::ZZPhase => 1,
            _ => 0,
        }
    }
}

/// A gate instance. Qubit order is meaningful and preserved: the first listed
/// qubit of a two-qubit gate is its "first" wire for graph encoding and for
/// control/target roles of the extended gates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: [usize; 2],
    params: [f64; 2],
}

impl Gate {
    /// Build a gate, canonicalising its angles. Panics if a two-qubit gate is
    /// given twice the same qubit, or on an arity/parameter mismatch.
    pub fn new(kind: GateKind, qubits: &[usize], params: &[f64]) -> Gate {
        assert_eq!(qubits.len(), kind.arity(), "{} arity mismatch", kind.name());
        assert_eq!(
            params.len(),
            kind.param_count(),
            "{} parameter mismatch",
            kind.name()
        );
        if kind.arity() == 2 {
            assert_ne!(qubits[0], qubits[1], "{} needs distinct qubits", kind.name());
        }
        let mut q = [0usize; 2];
        q[..qubits.len()].copy_from_slice(qubits);
        let mut p = [0f64; 2];
        for (slot, &v) in p.iter_mut().zip(params) {
            assert!(v.is_finite(), "gate angle must be finite");
            *slot = canonical_angle(v);
        }
        Gate { kind, qubits: q, params: p }
    }

    pub fn rz(qubit: usize, angle: f64) -> Gate {
        Gate::new(GateKind::Rz, &[qubit], &[angle])
    }

    pub fn phased_x(qubit: usize, alpha: f64, beta: f64) -> Gate {
        Gate::new(GateKind::PhasedX, &[qubit], &[alpha, beta])
    }

    pub fn zz_phase(a: usize, b: usize, angle: f64) -> Gate {
        Gate::new(GateKind::ZZPhase, &[a, b], &[angle])
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn params(&self) -> &[f64] {
        &self.params[..self.kind.param_count()]
    }

    pub fn arity(&self) -> usize {
        self.kind.arity()
    }

    pub fn is_native(&self) -> bool {
        self.kind.is_native()
    }

    /// Inverse gate. `PhasedX(a, b)^-1 = PhasedX(-a, b)` since the axis is
    /// unchanged and the rotation angle flips.
    pub fn dagger(&self) -> Gate {
        match self.kind {
            GateKind::Rz => Gate::rz(self.qubits[0], -self.params[0]),
            GateKind::PhasedX => {
                Gate::phased_x(self.qubits[0], -self.params[0], self.params[1])
            }
            GateKind::ZZPhase => {
                Gate::zz_phase(self.qubits[0], self.qubits[1], -self.params[0])
            }
            GateKind::S => Gate::new(GateKind::Sdg, &[self.qubits[0]], &[]),
            GateKind::Sdg => Gate::new(GateKind::S, &[self.qubits[0]], &[]),
            GateKind::V => Gate::new(GateKind::Vdg, &[self.qubits[0]], &[]),
            GateKind::Vdg => Gate::new(GateKind::V, &[self.qubits[0]], &[]),
            _ => *self,
        }
    }

    /// Clifford predicate on canonical angles, tolerance [`tol::CLIFFORD_ANGLE`].
    ///
    /// Rz and ZZPhase are Clifford at multiples of 0.5. PhasedX is Clifford
    /// when alpha is a multiple of 2 (the gate collapses to a phase) or when
    /// both angles are multiples of 0.5. The parameter-free extended gates are
    /// all Clifford.
    pub fn is_clifford(&self) -> bool {
        let t = tol::CLIFFORD_ANGLE;
        match self.kind {
            GateKind::Rz | GateKind::ZZPhase => dist_to_multiple(self.params[0], 0.5) <= t,
            GateKind::PhasedX => {
                dist_to_multiple(self.params[0], 2.0) <= t
                    || (dist_to_multiple(self.params[0], 0.5) <= t
                        && dist_to_multiple(self.params[1], 0.5) <= t)
            }
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_angle_wraps_into_range() {
        assert_eq!(canonical_angle(2.5), 0.5);
        assert_eq!(canonical_angle(-0.5), 1.5);
        assert_eq!(canonical_angle(-4.0), 0.0);
        assert_eq!(canonical_angle(1.999999), 1.999999);
    }

    #[test]
    fn canonical_angle_snaps_near_half_multiples() {
        assert_eq!(canonical_angle(0.5 + 4e-13), 0.5);
        assert_eq!(canonical_angle(1.0 - 4e-13), 1.0);
        assert_eq!(canonical_angle(2.0 - 4e-13), 0.0);
        assert_eq!(canonical_angle(-1e-15), 0.0);
        // Outside the snap window the value is kept.
        assert_ne!(canonical_angle(0.5 + 1e-9), 0.5);
    }

    #[test]
    fn clifford_predicate() {
        assert!(Gate::rz(0, 0.5).is_clifford());
        assert!(Gate::rz(0, 2.5).is_clifford());
        assert!(Gate::rz(0, 0.5 + 5e-11).is_clifford());
        assert!(!Gate::rz(0, 0.25).is_clifford());
        assert!(Gate::zz_phase(0, 1, 1.5).is_clifford());
        assert!(!Gate::zz_phase(0, 1, 0.3).is_clifford());
        assert!(Gate::phased_x(0, 0.5, 0.5).is_clifford());
        assert!(Gate::phased_x(0, 1.0, 1.5).is_clifford());
        assert!(!Gate::phased_x(0, 0.5, 0.3).is_clifford());
        // Alpha a multiple of 2 makes the gate a global phase whatever beta is.
        assert!(Gate::phased_x(0, 0.0, 0.3).is_clifford());
    }

    #[test]
    #[should_panic]
    fn rejects_repeated_qubit() {
        Gate::zz_phase(1, 1, 0.5);
    }

    #[test]
    fn dagger_inverts_gate_matrices() {
        use crate::circuit::Circuit;
        use crate::unitary::{circuit_unitary, phase_invariant_distance, CMat};
        let gates = [
            Gate::rz(0, 0.3),
            Gate::phased_x(1, 0.7, 1.2),
            Gate::zz_phase(0, 1, 0.9),
            Gate::new(GateKind::S, &[0], &[]),
            Gate::new(GateKind::Vdg, &[1], &[]),
            Gate::new(GateKind::Cx, &[0, 1], &[]),
            Gate::new(GateKind::Swap, &[1, 0], &[]),
        ];
        for g in gates {
            let c = Circuit::from_gates(2, [g, g.dagger()]);
            let u = circuit_unitary(&c).unwrap();
            let id = CMat::identity(4, 4);
            assert!(phase_invariant_distance(&u, &id) <= 1e-12);
        }
        assert_eq!(
            Gate::new(GateKind::S, &[0], &[]).dagger().kind(),
            GateKind::Sdg
        );
        assert_eq!(
            Gate::new(GateKind::V, &[0], &[]).dagger().kind(),
            GateKind::Vdg
        );
    }
}
