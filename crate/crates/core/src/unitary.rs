//! Dense unitaries, statevector simulation, Haar sampling and equivalence
//! checks.
//!
//! Qubit 0 is the most significant bit of a basis-state index. Matrices are
//! `nalgebra::DMatrix<C64>`; applying a circuit left to right multiplies its
//! gate matrices on the left, so `unitary(c1 ++ c2) = unitary(c2) * unitary(c1)`.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::circuit::Circuit;
use crate::error::CoreError;
use crate::gate::{Gate, GateKind};
use crate::tol;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// e^{i theta}
fn cis(theta: f64) -> C64 {
    Complex::from_polar(1.0, theta)
}

pub fn rz_matrix(a: f64) -> CMat {
    let t = PI * a / 2.0;
    CMat::from_row_slice(2, 2, &[cis(-t), c(0.0, 0.0), c(0.0, 0.0), cis(t)])
}

pub fn rx_matrix(a: f64) -> CMat {
    let t = PI * a / 2.0;
    let (cos, sin) = (t.cos(), t.sin());
    CMat::from_row_slice(2, 2, &[c(cos, 0.0), c(0.0, -sin), c(0.0, -sin), c(cos, 0.0)])
}

pub fn phased_x_matrix(alpha: f64, beta: f64) -> CMat {
    rz_matrix(beta) * rx_matrix(alpha) * rz_matrix(-beta)
}

pub fn zz_phase_matrix(a: f64) -> CMat {
    let t = PI * a / 2.0;
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = cis(-t);
    m[(1, 1)] = cis(t);
    m[(2, 2)] = cis(t);
    m[(3, 3)] = cis(-t);
    m
}

/// Matrix of a single gate on its own wires; the first listed qubit is the
/// most significant bit of the local index.
pub fn gate_matrix(g: &Gate) -> CMat {
    let p = g.params();
    match g.kind() {
        GateKind::Rz => rz_matrix(p[0]),
        GateKind::PhasedX => phased_x_matrix(p[0], p[1]),
        GateKind::ZZPhase => zz_phase_matrix(p[0]),
        GateKind::H => CMat::from_row_slice(
            2,
            2,
            &[
                c(FRAC_1_SQRT_2, 0.0),
                c(FRAC_1_SQRT_2, 0.0),
                c(FRAC_1_SQRT_2, 0.0),
                c(-FRAC_1_SQRT_2, 0.0),
            ],
        ),
        GateKind::S => CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]),
        GateKind::Sdg => {
            CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)])
        }
        GateKind::X => CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        GateKind::Z => CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        GateKind::V => rx_matrix(0.5),
        GateKind::Vdg => rx_matrix(-0.5),
        GateKind::Cx => {
            let mut m = CMat::zeros(4, 4);
            m[(0, 0)] = c(1.0, 0.0);
            m[(1, 1)] = c(1.0, 0.0);
            m[(2, 3)] = c(1.0, 0.0);
            m[(3, 2)] = c(1.0, 0.0);
            m
        }
        GateKind::Cz => {
            let mut m = CMat::identity(4, 4);
            m[(3, 3)] = c(-1.0, 0.0);
            m
        }
        GateKind::Swap => {
            let mut m = CMat::zeros(4, 4);
            m[(0, 0)] = c(1.0, 0.0);
            m[(1, 2)] = c(1.0, 0.0);
            m[(2, 1)] = c(1.0, 0.0);
            m[(3, 3)] = c(1.0, 0.0);
            m
        }
    }
}

/// Apply `gate` to one statevector of length `2^n_qubits`.
pub fn apply_gate_to_state(gate: &Gate, n_qubits: usize, psi: &mut [C64]) {
    let dim = 1usize << n_qubits;
    debug_assert_eq!(psi.len(), dim);
    let m = gate_matrix(gate);
    match gate.qubits() {
        &[q] => {
            let p = n_qubits - 1 - q;
            let mask = 1usize << p;
            let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            for base in (0..dim).step_by(mask << 1) {
                for off in 0..mask {
                    let i0 = base + off;
                    let i1 = i0 + mask;
                    let (x, y) = (psi[i0], psi[i1]);
                    psi[i0] = m00 * x + m01 * y;
                    psi[i1] = m10 * x + m11 * y;
                }
            }
        }
        &[a, b] => {
            let ma = 1usize << (n_qubits - 1 - a);
            let mb = 1usize << (n_qubits - 1 - b);
            for r in 0..dim {
                if r & ma != 0 || r & mb != 0 {
                    continue;
                }
                let idx = [r, r + mb, r + ma, r + ma + mb];
                let old = [psi[idx[0]], psi[idx[1]], psi[idx[2]], psi[idx[3]]];
                for (row, &i) in idx.iter().enumerate() {
                    let mut acc = c(0.0, 0.0);
                    for (col, &v) in old.iter().enumerate() {
                        acc += m[(row, col)] * v;
                    }
                    psi[i] = acc;
                }
            }
        }
        _ => unreachable!(),
    }
}

pub fn apply_circuit_to_state(circuit: &Circuit, psi: &mut [C64]) {
    for g in circuit.gates() {
        apply_gate_to_state(g, circuit.n_qubits(), psi);
    }
}

/// Dense unitary of a circuit. Errors above [`tol::MAX_DENSE_QUBITS`] wires.
pub fn circuit_unitary(circuit: &Circuit) -> Result<CMat, CoreError> {
    let n = circuit.n_qubits();
    if n > tol::MAX_DENSE_QUBITS {
        return Err(CoreError::TooWide { n_qubits: n, max: tol::MAX_DENSE_QUBITS });
    }
    let dim = 1usize << n;
    let mut u = CMat::identity(dim, dim);
    for g in circuit.gates() {
        // Columns are contiguous in nalgebra's layout; each is a statevector.
        for col in u.as_mut_slice().chunks_mut(dim) {
            apply_gate_to_state(g, n, col);
        }
    }
    Ok(u)
}

/// sqrt(max(0, 1 - |tr(U^dag V)| / dim)). Zero iff U and V agree up to global
/// phase; insensitive to that phase by construction.
pub fn phase_invariant_distance(u: &CMat, v: &CMat) -> f64 {
    assert_eq!(u.shape(), v.shape(), "distance needs matching shapes");
    let mut tr = c(0.0, 0.0);
    for (x, y) in u.as_slice().iter().zip(v.as_slice()) {
        tr += x.conj() * y;
    }
    // Equals sqrt(max(0, 1 - |tr| / dim)) but evaluated as the Frobenius
    // norm of U - e^{i phi} V at the optimal phi, which stays accurate
    // when the matrices agree to machine precision.
    let align = C64::from_polar(1.0, -tr.arg());
    let mut sq = 0.0f64;
    for (x, y) in u.as_slice().iter().zip(v.as_slice()) {
        sq += (x - align * y).norm_sqr();
    }
    let dim = u.nrows() as f64;
    (sq / (2.0 * dim)).sqrt()
}

/// Largest absolute entry of U^dag U - I.
pub fn unitarity_residual(u: &CMat) -> f64 {
    let prod = u.adjoint() * u;
    let mut worst = 0.0f64;
    for r in 0..prod.nrows() {
        for col in 0..prod.ncols() {
            let expect = if r == col { c(1.0, 0.0) } else { c(0.0, 0.0) };
            worst = worst.max((prod[(r, col)] - expect).norm());
        }
    }
    worst
}

pub fn is_unitary(u: &CMat, tolerance: f64) -> bool {
    u.is_square() && unitarity_residual(u) <= tolerance
}

/// Haar-random unitary: complex Ginibre matrix, QR, then the R diagonal's
/// phases folded into Q so the distribution is exactly Haar.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * FRAC_1_SQRT_2
    });
    let (q, r) = g.qr().unpack();
    let mut phases = CMat::zeros(dim, dim);
    for i in 0..dim {
        let d = r[(i, i)];
        phases[(i, i)] = if d.norm() > 1e-300 { d / d.norm() } else { c(1.0, 0.0) };
    }
    q * phases
}

/// Normalised statevector with independent complex Gaussian amplitudes.
pub fn random_state<R: Rng>(dim: usize, rng: &mut R) -> Vec<C64> {
    let mut psi: Vec<C64> = (0..dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re, im)
        })
        .collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut psi {
        *z /= norm;
    }
    psi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquivalenceMethod {
    Dense,
    Probes,
}

#[derive(Debug, Clone, Copy)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Phase-invariant distance for the dense path, worst probe 2-norm
    /// deviation for the probe path.
    pub distance: f64,
    pub method: EquivalenceMethod,
}

pub const PROBE_COUNT: usize = 8;
const MAX_PROBE_QUBITS: usize = 22;

/// Check that two circuits implement the same unitary up to global phase.
///
/// Up to [`tol::MAX_DENSE_QUBITS`] wires this compares dense unitaries against
/// `dense_tol`. Wider circuits are checked with [`PROBE_COUNT`] seeded random
/// statevector probes; the shared phase is estimated from the first probe and
/// each probe must then agree within [`tol::PROBE_DISTANCE`].
pub fn check_equivalence(a: &Circuit, b: &Circuit, dense_tol: f64) -> Result<Equivalence, CoreError> {
    if a.n_qubits() != b.n_qubits() {
        return Err(CoreError::QubitCountMismatch { a: a.n_qubits(), b: b.n_qubits() });
    }
    let n = a.n_qubits();
    if n <= tol::MAX_DENSE_QUBITS {
        let d = phase_invariant_distance(&circuit_unitary(a)?, &circuit_unitary(b)?);
        return Ok(Equivalence { equivalent: d < dense_tol, distance: d, method: EquivalenceMethod::Dense });
    }
    if n > MAX_PROBE_QUBITS {
        return Err(CoreError::TooWide { n_qubits: n, max: MAX_PROBE_QUBITS });
    }
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    let mut phase = c(1.0, 0.0);
    let mut worst = 0.0f64;
    for probe in 0..PROBE_COUNT {
        let psi = random_state(dim, &mut rng);
        let mut va = psi.clone();
        let mut vb = psi;
        apply_circuit_to_state(a, &mut va);
        apply_circuit_to_state(b, &mut vb);
        if probe == 0 {
            let overlap: C64 = va.iter().zip(&vb).map(|(x, y)| x.conj() * y).sum();
            if overlap.norm() > 1e-12 {
                phase = overlap / overlap.norm();
            }
        }
        let dev = va
            .iter()
            .zip(&vb)
            .map(|(x, y)| (y - phase * x).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dev);
    }
    Ok(Equivalence {
        equivalent: worst <= tol::PROBE_DISTANCE,
        distance: worst,
        method: EquivalenceMethod::Probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::Gate;

    fn dist(u: &CMat, v: &CMat) -> f64 {
        phase_invariant_distance(u, v)
    }

    #[test]
    fn gate_matrices_match_their_definitions() {
        // Rz(1) = diag(-i, i), ZZPhase(1) = diag(-i, i, i, -i).
        let rz = rz_matrix(1.0);
        assert!((rz[(0, 0)] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((rz[(1, 1)] - c(0.0, 1.0)).norm() < 1e-15);
        let zz = zz_phase_matrix(1.0);
        for (i, want) in [c(0.0, -1.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, -1.0)].iter().enumerate() {
            assert!((zz[(i, i)] - want).norm() < 1e-15);
        }
        // PhasedX(1, 0) is X up to phase; PhasedX(a, 0) = Rx(a) exactly.
        assert!(dist(&phased_x_matrix(1.0, 0.0), &gate_matrix(&Gate::new(GateKind::X, &[0], &[]))) < 1e-15);
        // V matches PhasedX(0.5, 0).
        assert!(dist(&rx_matrix(0.5), &phased_x_matrix(0.5, 0.0)) < 1e-15);
    }

    #[test]
    fn composition_order_is_left_to_right() {
        // Circuit [S, H] on one wire must equal H * S as matrices (up to phase,
        // and here exactly).
        let c1 = Circuit::from_gates(1, [Gate::new(GateKind::S, &[0], &[]), Gate::new(GateKind::H, &[0], &[])]);
        let u = circuit_unitary(&c1).unwrap();
        let h = gate_matrix(&Gate::new(GateKind::H, &[0], &[]));
        let s = gate_matrix(&Gate::new(GateKind::S, &[0], &[]));
        assert!((u.clone() - h * s).norm() < 1e-15);
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        // X on qubit 0 of two flips the high bit: |00> -> |10> (index 0 -> 2).
        let circ = Circuit::from_gates(2, [Gate::new(GateKind::X, &[0], &[])]);
        let u = circuit_unitary(&circ).unwrap();
        assert!((u[(2, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        // CX with control listed first: |10> -> |11>.
        let circ = Circuit::from_gates(2, [Gate::new(GateKind::Cx, &[0, 1], &[])]);
        let u = circuit_unitary(&circ).unwrap();
        assert!((u[(3, 2)] - c(1.0, 0.0)).norm() < 1e-15);
        // Same gate with qubits flipped: |01> -> |11>.
        let circ = Circuit::from_gates(2, [Gate::new(GateKind::Cx, &[1, 0], &[])]);
        let u = circuit_unitary(&circ).unwrap();
        assert!((u[(3, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn distance_ignores_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = haar_unitary(4, &mut rng);
        let v = u.clone() * c(0.0, 1.0);
        assert!(dist(&u, &v) < 1e-12);
        let w = haar_unitary(4, &mut rng);
        assert!(dist(&u, &w) > 1e-3);
    }

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2usize, 4, 8] {
            let u = haar_unitary(dim, &mut rng);
            assert!(unitarity_residual(&u) < 1e-10, "dim {dim}");
        }
    }

    #[test]
    fn probe_check_matches_dense_verdict() {
        use crate::gate::Gate;
        // Equivalent pair: ZZPhase(0.5); ZZPhase(0.25) == ZZPhase(0.75).
        let a = Circuit::from_gates(2, [Gate::zz_phase(0, 1, 0.5), Gate::zz_phase(0, 1, 0.25)]);
        let b = Circuit::from_gates(2, [Gate::zz_phase(0, 1, 0.75)]);
        let eq = check_equivalence(&a, &b, 1e-7).unwrap();
        assert!(eq.equivalent);
        assert_eq!(eq.method, EquivalenceMethod::Dense);
    }
}
