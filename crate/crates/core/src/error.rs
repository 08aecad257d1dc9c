use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("circuit has {n_qubits} qubits, above the {max}-qubit cap for this operation")]
    TooWide { n_qubits: usize, max: usize },
    #[error("qubit counts differ: {a} vs {b}")]
    QubitCountMismatch { a: usize, b: usize },
    #[error("matrix is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },
    #[error("gate {index} is not Clifford")]
    NonClifford { index: usize },
    #[error("tableau is not symplectic")]
    NotSymplectic,
    #[error("synthesis failed: {0}")]
    SynthesisFailed(String),
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error("invalid circuit data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}
