//! Single-qubit Euler decomposition onto the native pair PhasedX then Rz.
//!
//! Any 2x2 unitary factors (up to global phase) as
//! `U = Rz(a) Rx(b) Rz(c)` in half-turns, which regroups as
//! `Rz(theta) * PhasedX(alpha, beta)` with `alpha = b`, `beta = -c`,
//! `theta = a + c`. In circuit order that is PhasedX first, Rz second.

use crate::gate::{canonical_angle, Gate};
use crate::unitary::CMat;
use std::f64::consts::PI;

/// Magnitudes below this are treated as structural zeros when picking the
/// decomposition branch. Entries this small contribute errors well under the
/// round-trip tolerance even when their phase is meaningless.
const STRUCT_EPS: f64 = 1e-13;

/// Angles `(alpha, beta, theta)` in half-turns, canonicalised, such that
/// `U ~ Rz(theta) * PhasedX(alpha, beta)` up to global phase.
///
/// The matrix is first scaled to SU(2), where
/// `u00 = e^{-i pi (a+c)/2} cos(pi b/2)` and
/// `u10 = -i e^{i pi (a-c)/2} sin(pi b/2)`
/// determine every angle without branch ambiguity.
pub fn zx_angles(u: &CMat) -> (f64, f64, f64) {
    assert_eq!(u.shape(), (2, 2), "Euler decomposition needs a 2x2 matrix");
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let scale = num_complex::Complex::from_polar(1.0, -det.arg() / 2.0);
    let alpha_e = u[(0, 0)] * scale;
    let beta_e = u[(1, 0)] * scale;
    let b = 2.0 * beta_e.norm().atan2(alpha_e.norm()) / PI;
    let (a, c) = if beta_e.norm() < STRUCT_EPS {
        (-2.0 * alpha_e.arg() / PI, 0.0)
    } else if alpha_e.norm() < STRUCT_EPS {
        // Anti-diagonal: Rz(theta) PhasedX(1, beta) depends only on
        // theta/2 + beta, so the whole phase can ride on the Rz. That keeps
        // exact Clifford inputs on half-turn multiples gate by gate, where
        // beta = diff/2 could land between them.
        let diff = 2.0 * beta_e.arg() / PI + 1.0;
        (diff, 0.0)
    } else {
        let sum = -2.0 * alpha_e.arg() / PI;
        let diff = 2.0 * beta_e.arg() / PI + 1.0;
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };
    (canonical_angle(b), canonical_angle(-c), canonical_angle(a + c))
}

/// Native gates for a 2x2 unitary on `qubit`: at most one PhasedX followed by
/// at most one Rz. Exact-zero angles are dropped.
pub fn euler_gates(qubit: usize, u: &CMat) -> Vec<Gate> {
    let (alpha, beta, theta) = zx_angles(u);
    let mut gates = Vec::with_capacity(2);
    if alpha != 0.0 {
        gates.push(Gate::phased_x(qubit, alpha, beta));
    }
    if theta != 0.0 {
        gates.push(Gate::rz(qubit, theta));
    }
    gates
}
