//! Trained model serialisation.
//!
//! A checkpoint file is a 4-byte little-endian header length, a JSON
//! header, and a raw little-endian float32 weight blob.  The header pins
//! the architecture, the ordered action registry the model was trained
//! against, a hash of the training configuration, the training seed, the
//! best validation score, and the name and shape of every tensor in blob
//! order.  Loading refuses files whose action registry differs from the
//! one compiled into this build.

use crate::error::AgentError;
use crate::nn::{ArchConfig, PolicyParams};
use rand::SeedableRng;
use rlpass_core::passes::Action;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    arch: ArchConfig,
    actions: Vec<String>,
    config_hash: String,
    seed: u64,
    validation_score: f64,
    tensors: Vec<TensorInfo>,
}

/// Provenance recorded alongside the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointInfo {
    pub config_hash: String,
    pub seed: u64,
    pub validation_score: f64,
}

#[derive(Debug, Clone)]
pub struct LoadedCheckpoint {
    pub params: PolicyParams<f32>,
    pub arch: ArchConfig,
    pub info: CheckpointInfo,
}

/// Hex SHA-256 of a configuration's canonical JSON form.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serialises");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn registry_names() -> Vec<String> {
    Action::ALL.iter().map(|a| a.name().to_string()).collect()
}

pub fn save_checkpoint(
    path: &Path,
    params: &PolicyParams<f32>,
    info: &CheckpointInfo,
) -> Result<(), AgentError> {
    let tensors: Vec<TensorInfo> = params
        .tensors()
        .iter()
        .map(|(name, t)| TensorInfo { name: name.clone(), shape: t.shape().to_vec() })
        .collect();
    let header = Header {
        format_version: CHECKPOINT_VERSION,
        arch: params.arch,
        actions: registry_names(),
        config_hash: info.config_hash.clone(),
        seed: info.seed,
        validation_score: info.validation_score,
        tensors,
    };
    let header_json = serde_json::to_vec(&header)?;
    let mut bytes = Vec::with_capacity(4 + header_json.len() + params.n_params() * 4);
    bytes.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&header_json);
    for (_, t) in params.tensors() {
        for &x in t.iter() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint, AgentError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 4 {
        return Err(AgentError::CorruptCheckpoint("shorter than the length prefix".into()));
    }
    let header_len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    if bytes.len() < 4 + header_len {
        return Err(AgentError::CorruptCheckpoint("header extends past end of file".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[4..4 + header_len])
        .map_err(|e| AgentError::CorruptCheckpoint(format!("bad header: {e}")))?;
    if header.format_version != CHECKPOINT_VERSION {
        return Err(AgentError::CheckpointVersion(header.format_version));
    }
    let registry = registry_names();
    if header.actions != registry {
        return Err(AgentError::RegistryMismatch {
            checkpoint: header.actions.join(", "),
            registry: registry.join(", "),
        });
    }
    if header.arch.n_actions != header.actions.len() {
        return Err(AgentError::CorruptCheckpoint(
            "action count disagrees with architecture".into(),
        ));
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut params = PolicyParams::<f32>::init(header.arch, &mut rng);
    {
        let mut views = params.tensors_mut();
        if views.len() != header.tensors.len() {
            return Err(AgentError::CorruptCheckpoint(format!(
                "expected {} tensors, header lists {}",
                views.len(),
                header.tensors.len()
            )));
        }
        let expected: usize = header.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
        let blob = &bytes[4 + header_len..];
        if blob.len() != expected * 4 {
            return Err(AgentError::CorruptCheckpoint(format!(
                "weight blob holds {} bytes, expected {}",
                blob.len(),
                expected * 4
            )));
        }
        let mut offset = 0;
        for ((name, view), info) in views.iter_mut().zip(&header.tensors) {
            if *name != info.name || view.shape() != info.shape.as_slice() {
                return Err(AgentError::CorruptCheckpoint(format!(
                    "tensor {} has shape {:?}, header says {} {:?}",
                    name,
                    view.shape(),
                    info.name,
                    info.shape
                )));
            }
            for x in view.iter_mut() {
                *x = f32::from_le_bytes(blob[offset..offset + 4].try_into().unwrap());
                offset += 4;
            }
        }
    }
    Ok(LoadedCheckpoint {
        params,
        arch: header.arch,
        info: CheckpointInfo {
            config_hash: header.config_hash,
            seed: header.seed,
            validation_score: header.validation_score,
        },
    })
}
