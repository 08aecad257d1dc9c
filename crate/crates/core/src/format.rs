//! JSON circuit files and JSONL datasets.
//!
//! A circuit file is a single JSON object: `{"version": 1, "qubits": n,
//! "ops": [{"g": name, "q": [indices], "p": [half-turn params]}, ...]}` with
//! an optional `metadata` object. Angles are stored in half-turns, matching
//! the internal convention. A dataset is one such object per line.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::CoreError;
use crate::gate::{Gate, GateKind};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

impl CircuitMetadata {
    pub fn is_empty(&self) -> bool {
        self.class.is_none() && self.seed.is_none() && self.split.is_none()
    }
}

/// A parsed circuit file: the circuit plus whatever metadata the file carried.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitRecord {
    pub circuit: Circuit,
    pub metadata: CircuitMetadata,
}

#[derive(Serialize, Deserialize)]
struct OpJson {
    g: String,
    q: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    p: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    version: u32,
    qubits: usize,
    ops: Vec<OpJson>,
    #[serde(default, skip_serializing_if = "CircuitMetadata::is_empty")]
    metadata: CircuitMetadata,
}

pub fn parse_record(bytes: &[u8]) -> Result<CircuitRecord, CoreError> {
    let file: CircuitJson = serde_json::from_slice(bytes)?;
    if file.version != FORMAT_VERSION {
        return Err(CoreError::Format(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            file.version
        )));
    }
    let mut circuit = Circuit::new(file.qubits);
    for (index, op) in file.ops.iter().enumerate() {
        let bad = |msg: String| CoreError::Format(format!("op {index}: {msg}"));
        let kind = GateKind::from_name(&op.g)
            .ok_or_else(|| bad(format!("unknown gate name {:?}", op.g)))?;
        if op.q.len() != kind.arity() {
            return Err(bad(format!(
                "{} takes {} qubit(s), got {}",
                op.g,
                kind.arity(),
                op.q.len()
            )));
        }
        if op.p.len() != kind.param_count() {
            return Err(bad(format!(
                "{} takes {} parameter(s), got {}",
                op.g,
                kind.param_count(),
                op.p.len()
            )));
        }
        if op.q.len() == 2 && op.q[0] == op.q[1] {
            return Err(bad(format!("{} needs distinct qubits", op.g)));
        }
        for &q in &op.q {
            if q >= file.qubits {
                return Err(bad(format!(
                    "qubit {q} out of range for {} wires",
                    file.qubits
                )));
            }
        }
        for &p in &op.p {
            if !p.is_finite() {
                return Err(bad("non-finite parameter".to_string()));
            }
        }
        circuit.push(Gate::new(kind, &op.q, &op.p));
    }
    Ok(CircuitRecord { circuit, metadata: file.metadata })
}

pub fn parse_circuit(bytes: &[u8]) -> Result<Circuit, CoreError> {
    parse_record(bytes).map(|r| r.circuit)
}

fn to_json(circuit: &Circuit, metadata: &CircuitMetadata) -> CircuitJson {
    CircuitJson {
        version: FORMAT_VERSION,
        qubits: circuit.n_qubits(),
        ops: circuit
            .gates()
            .iter()
            .map(|g| OpJson {
                g: g.kind().name().to_string(),
                q: g.qubits().to_vec(),
                p: g.params().to_vec(),
            })
            .collect(),
        metadata: metadata.clone(),
    }
}

/// Compact single-line JSON, suitable both as a circuit file and as a
/// dataset line.
pub fn serialize_record(circuit: &Circuit, metadata: &CircuitMetadata) -> String {
    serde_json::to_string(&to_json(circuit, metadata)).expect("circuit serialises")
}

pub fn serialize_circuit(circuit: &Circuit) -> String {
    serialize_record(circuit, &CircuitMetadata::default())
}

pub fn write_circuit_file(path: &Path, circuit: &Circuit) -> Result<(), CoreError> {
    std::fs::write(path, serialize_circuit(circuit) + "\n")?;
    Ok(())
}

pub fn read_circuit_file(path: &Path) -> Result<CircuitRecord, CoreError> {
    parse_record(&std::fs::read(path)?)
}

/// Read a JSONL dataset, one record per non-empty line.
pub fn read_dataset(path: &Path) -> Result<Vec<CircuitRecord>, CoreError> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(line.as_bytes())
            .map_err(|e| CoreError::Format(format!("line {}: {e}", lineno + 1)))?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_dataset<'a>(
    path: &Path,
    records: impl IntoIterator<Item = (&'a Circuit, &'a CircuitMetadata)>,
) -> Result<(), CoreError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (circuit, metadata) in records {
        writeln!(out, "{}", serialize_record(circuit, metadata))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_minimal_example() {
        let bytes = br#"{"version":1,"qubits":1,"ops":[{"g":"Rz","q":[0],"p":[0.25]}]}"#;
        let record = parse_record(bytes).unwrap();
        assert_eq!(record.circuit.n_qubits(), 1);
        assert_eq!(record.circuit.gates(), &[Gate::rz(0, 0.25)]);
        assert!(record.metadata.is_empty());
    }

    #[test]
    fn rejects_bad_ops_by_index() {
        let cases: [(&[u8], &str); 5] = [
            (
                br#"{"version":1,"qubits":2,"ops":[{"g":"ZZPhase","q":[0,0],"p":[0.5]}]}"#,
                "distinct",
            ),
            (
                br#"{"version":1,"qubits":1,"ops":[{"g":"Nope","q":[0]}]}"#,
                "unknown gate",
            ),
            (
                br#"{"version":1,"qubits":1,"ops":[{"g":"Rz","q":[0,1],"p":[0.5]}]}"#,
                "qubit",
            ),
            (
                br#"{"version":1,"qubits":1,"ops":[{"g":"Rz","q":[1],"p":[0.5]}]}"#,
                "out of range",
            ),
            (
                br#"{"version":1,"qubits":1,"ops":[{"g":"Rz","q":[0],"p":[]}]}"#,
                "parameter",
            ),
        ];
        for (bytes, needle) in cases {
            let err = parse_record(bytes).unwrap_err().to_string();
            assert!(err.contains("op 0"), "{err}");
            assert!(err.contains(needle), "{err} missing {needle}");
        }
    }

    #[test]
    fn rejects_wrong_version() {
        let bytes = br#"{"version":2,"qubits":1,"ops":[]}"#;
        assert!(parse_record(bytes).is_err());
    }

    #[test]
    fn serialise_then_parse_is_identity() {
        let mut c = Circuit::new(3);
        c.push(Gate::rz(0, 0.3));
        c.push(Gate::phased_x(1, 1.25, 0.7));
        c.push(Gate::zz_phase(0, 2, 1.9));
        let meta = CircuitMetadata {
            class: Some("QAOA".to_string()),
            seed: Some(17),
            split: Some("train".to_string()),
        };
        let line = serialize_record(&c, &meta);
        let back = parse_record(line.as_bytes()).unwrap();
        assert_eq!(back.circuit, c);
        assert_eq!(back.metadata, meta);
        // Canonical files reproduce themselves byte for byte.
        assert_eq!(serialize_record(&back.circuit, &back.metadata), line);
    }
}
