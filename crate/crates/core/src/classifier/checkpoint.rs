use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifierModel, TrainConfig};
use crate::encoders::{Encoder, EncoderSpec};
use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};
use crate::pooling::PoolingKind;
use crate::scalar::Real;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to rebuild a trained pipeline: the head's weights and
/// BN statistics, the encoder spec (weights are regenerated from its seed
/// and verified against the checksum) and the training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Checkpoint<T> {
    pub version: u32,
    pub encoder: EncoderSpec,
    pub encoder_checksum: String,
    pub pooling: PoolingKind,
    pub train_config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    /// The configuration document that `config_hash` was computed from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
    pub model: ClassifierModel<T>,
}

impl<T: Real> Checkpoint<T> {
    pub fn new(
        encoder: &Encoder<T>,
        pooling: PoolingKind,
        train_config: TrainConfig,
        model: ClassifierModel<T>,
    ) -> Result<Self> {
        let spec = encoder.spec().cloned().ok_or_else(|| {
            Error::InvalidArgument("only spec-built encoders can be checkpointed".into())
        })?;
        if model.dim_in() != encoder.dim_out() {
            return Err(Error::DimensionMismatch {
                expected: encoder.dim_out(),
                actual: model.dim_in(),
            });
        }
        Ok(Self {
            version: CHECKPOINT_VERSION,
            encoder_checksum: encoder.checksum(),
            encoder: spec,
            pooling,
            train_config,
            config_hash: None,
            run_config: None,
            model,
        })
    }

    /// Rebuilds the encoder and checks it against the stored checksum.
    pub fn encoder(&self) -> Result<Encoder<T>> {
        let encoder = self.encoder.build()?;
        if encoder.checksum() != self.encoder_checksum {
            return Err(Error::Config(
                "rebuilt encoder does not match the checkpoint checksum".into(),
            ));
        }
        Ok(encoder)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Self = serde_json::from_str(text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {}",
                ck.version
            )));
        }
        if ck.model.dim_in() != ck.encoder.dim_out {
            return Err(Error::Config("checkpoint shapes are inconsistent".into()));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }
}
