//! Numeric tolerances used across the crate.
//!
//! All angles are in half-turns (an angle of 1.0 is a rotation by pi), so the
//! snapping tolerances below are half-turn distances, not radians.

/// Angles this close to a multiple of 0.5 half-turns are snapped exactly onto
/// it during canonicalisation.
pub const ANGLE_SNAP: f64 = 1e-12;

/// Distance from a Clifford angle below which a gate is flagged Clifford.
pub const CLIFFORD_ANGLE: f64 = 1e-10;

/// Phase-invariant distance bound for rebasing and pass unitary preservation.
pub const UNITARY_PRESERVATION: f64 = 1e-10;

/// Round-trip accuracy required of the single-qubit Euler decomposition.
pub const EULER_ROUNDTRIP: f64 = 1e-11;

/// Phase-invariant distance bound for two-qubit KAK resynthesis.
pub const KAK_DISTANCE: f64 = 1e-9;

/// Interaction coefficients below this are treated as zero when counting the
/// ZZPhase gates needed for a two-qubit unitary.
pub const KAK_ZERO_COORD: f64 = 1e-9;

/// Residual tolerated when checking that a matrix is unitary.
pub const UNITARITY: f64 = 1e-8;

/// Per-probe error bound for statevector equivalence checks on circuits too
/// wide for a dense unitary.
pub const PROBE_DISTANCE: f64 = 1e-6;

/// Phase-invariant distance bound used by the `verify` command.
pub const VERIFY_DISTANCE: f64 = 1e-7;

/// Widest circuit for which a dense unitary is built.
pub const MAX_DENSE_QUBITS: usize = 10;
