//! Checkpoint container:
//!
//! ```text
//! "MGFLOW1" | version: u32 LE | payload | SHA-256(payload)
//! payload = header_len: u32 LE | header JSON | parameters as f64 LE
//! ```
//!
//! The header lists the flow config, training metadata and the name and
//! shape of every parameter array in storage order.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::flow::{FlowConfig, FlowError, FlowModel};

pub const MAGIC: &[u8; 7] = b"MGFLOW1";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub final_bits_per_dim: Option<f64>,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (this build reads version {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint checksum mismatch (file is truncated or corrupted)")]
    Checksum,
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("parameter array {name:?} does not match the config: {detail}")]
    ShapeMismatch { name: String, detail: String },
    #[error(transparent)]
    Config(#[from] FlowError),
}

#[derive(Serialize, Deserialize)]
struct ArrayHeader {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: FlowConfig,
    metadata: TrainingMetadata,
    arrays: Vec<ArrayHeader>,
}

pub fn encode_checkpoint(model: &FlowModel, metadata: &TrainingMetadata) -> Vec<u8> {
    let header = Header {
        config: *model.config(),
        metadata: metadata.clone(),
        arrays: model.params().iter().map(|p| ArrayHeader { name: p.name.clone(), shape: p.shape.clone() }).collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut payload = Vec::with_capacity(4 + json.len() + 8 * model.parameter_count());
    payload.extend_from_slice(&(json.len() as u32).to_le_bytes());
    payload.extend_from_slice(&json);
    for p in model.params() {
        for v in &p.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut out = Vec::with_capacity(MAGIC.len() + 4 + payload.len() + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&Sha256::digest(&payload));
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(FlowModel, TrainingMetadata), CheckpointError> {
    let m = MAGIC.len();
    if bytes.len() < m || &bytes[..m] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if bytes.len() < m + 4 {
        return Err(CheckpointError::Checksum);
    }
    let version = u32::from_le_bytes(bytes[m..m + 4].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    if bytes.len() < m + 4 + 4 + DIGEST_LEN {
        return Err(CheckpointError::Checksum);
    }
    let (payload, digest) = bytes[m + 4..].split_at(bytes.len() - m - 4 - DIGEST_LEN);
    if Sha256::digest(payload).as_slice() != digest {
        return Err(CheckpointError::Checksum);
    }

    let json_len = u32::from_le_bytes(payload[..4].try_into().unwrap()) as usize;
    let json = payload.get(4..4 + json_len).ok_or_else(|| CheckpointError::Header("header overruns payload".into()))?;
    let header: Header = serde_json::from_slice(json).map_err(|e| CheckpointError::Header(e.to_string()))?;
    let mut model = FlowModel::new(header.config)?;
    let mut data = &payload[4 + json_len..];

    let params = model.params_mut();
    if params.len() != header.arrays.len() {
        return Err(CheckpointError::Header(format!(
            "{} arrays stored, config needs {}",
            header.arrays.len(),
            params.len()
        )));
    }
    for (p, a) in params.into_iter().zip(&header.arrays) {
        if p.name != a.name || p.shape != a.shape {
            return Err(CheckpointError::ShapeMismatch {
                name: a.name.clone(),
                detail: format!("stored {:?} {:?}, expected {:?} {:?}", a.name, a.shape, p.name, p.shape),
            });
        }
        let need = 8 * p.data.len();
        if data.len() < need {
            return Err(CheckpointError::ShapeMismatch { name: a.name.clone(), detail: "array data is short".into() });
        }
        for (v, chunk) in p.data.iter_mut().zip(data[..need].chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        data = &data[need..];
    }
    if !data.is_empty() {
        return Err(CheckpointError::Header(format!("{} trailing bytes after parameter data", data.len())));
    }
    Ok((model, header.metadata))
}

pub fn save_checkpoint(model: &FlowModel, metadata: &TrainingMetadata, path: &Path) -> Result<(), CheckpointError> {
    super::write_atomic(path, &encode_checkpoint(model, metadata))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(FlowModel, TrainingMetadata), CheckpointError> {
    decode_checkpoint(&std::fs::read(path)?)
}

/// Short content hash of the config and parameters, used as a model version.
pub fn model_version(model: &FlowModel) -> String {
    let bytes = encode_checkpoint(model, &TrainingMetadata::default());
    let digest = Sha256::digest(&bytes);
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> FlowModel {
        let cfg = FlowConfig { n_max: 4, hidden_width: 6, n_bond_layers: 2, n_atom_layers: 2, ..FlowConfig::default() };
        FlowModel::new(cfg).unwrap().with_random_parameters(5, 0.3)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let meta = TrainingMetadata { epochs: 3, final_bits_per_dim: Some(1.25) };
        let (back, meta2) = decode_checkpoint(&encode_checkpoint(&m, &meta)).unwrap();
        let bits = |m: &FlowModel| m.flat_parameters().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
        assert_eq!(back.config(), m.config());
        assert_eq!(meta2, meta);
    }

    #[test]
    fn every_truncation_is_rejected() {
        let bytes = encode_checkpoint(&model(), &TrainingMetadata::default());
        for cut in (MAGIC.len()..bytes.len()).step_by(97) {
            assert!(matches!(decode_checkpoint(&bytes[..cut]), Err(CheckpointError::Checksum)), "cut {cut}");
        }
    }

    #[test]
    fn header_errors() {
        let mut bytes = encode_checkpoint(&model(), &TrainingMetadata::default());
        assert!(matches!(decode_checkpoint(b"NOTAFLOW"), Err(CheckpointError::BadMagic)));
        let mut flipped = bytes.clone();
        let last = flipped.len() - 40;
        flipped[last] ^= 1;
        assert!(matches!(decode_checkpoint(&flipped), Err(CheckpointError::Checksum)));
        bytes[7..11].copy_from_slice(&999u32.to_le_bytes());
        assert!(matches!(
            decode_checkpoint(&bytes),
            Err(CheckpointError::VersionMismatch { found: 999, expected: FORMAT_VERSION })
        ));
    }

    #[test]
    fn version_tracks_parameters() {
        let m = model();
        assert_eq!(model_version(&m), model_version(&m.clone()));
        assert_ne!(model_version(&m), model_version(&m.with_random_parameters(6, 0.3)));
        assert_eq!(model_version(&m).len(), 12);
    }
}
