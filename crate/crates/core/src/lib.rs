//! Quantum circuit toolkit for the Rz / PhasedX / ZZPhase gate set: circuit
//! representation, rebasing, two-qubit and Clifford resynthesis passes, and
//! seeded benchmark circuit generators. The cost metric throughout is the
//! number of ZZPhase gates.

pub mod circuit;
pub mod error;
pub mod euler;
pub mod format;
pub mod gate;
pub mod gen;
pub mod kak;
pub mod passes;
pub mod pauli;
pub mod rebase;
pub mod tableau;
pub mod tol;
pub mod unitary;

pub use circuit::Circuit;
pub use error::CoreError;
pub use gate::{canonical_angle, Gate, GateKind};
pub use passes::{apply_pass, Action, PassResult};
pub use pauli::PauliString;
pub use tableau::Tableau;
