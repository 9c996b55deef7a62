//! Checkpoints: a JSON manifest next to a flat little-endian f64 blob.
//!
//! Blob order: encoder tensors, decoder tensors, then discriminator
//! tensors when present, each in parameter order; the manifest declares
//! every shape so readers can slice without guessing.

use crate::error::{Error, Result};
use crate::factors::DatasetSpec;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use super::config::ObjectiveConfig;
use super::factor_vae::Discriminator;
use super::train::TrainedModel;
use super::vae::{VaeArchitecture, VaeModel};
use crate::autodiff::Tensor;

pub const CHECKPOINT_SCHEMA: u32 = 1;
const MANIFEST_FILE: &str = "manifest.json";
const PARAMS_FILE: &str = "params.bin";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub schema_version: u32,
    pub objective: ObjectiveConfig,
    pub seed: u64,
    pub steps: u64,
    pub dataset: DatasetSpec,
    pub arch: VaeArchitecture,
    pub discriminator_hidden: Option<Vec<usize>>,
    /// Shapes of every tensor in the blob, in order.
    pub parameter_shapes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: VaeModel,
    pub discriminator: Option<Discriminator>,
    pub objective: ObjectiveConfig,
    pub seed: u64,
    pub steps: u64,
    pub dataset: DatasetSpec,
}

pub fn save_checkpoint(trained: &TrainedModel, dataset: DatasetSpec, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut shapes = Vec::new();
    let mut blob: Vec<u8> = Vec::new();
    let tensors = trained
        .model
        .encoder_params
        .iter()
        .chain(&trained.model.decoder_params)
        .chain(trained.discriminator.iter().flat_map(|d| d.params.iter()));
    for t in tensors {
        shapes.push(t.shape().to_vec());
        for v in t.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = CheckpointManifest {
        schema_version: CHECKPOINT_SCHEMA,
        objective: trained.objective,
        seed: trained.seed,
        steps: trained.steps,
        dataset,
        arch: trained.model.arch.clone(),
        discriminator_hidden: trained.discriminator.as_ref().map(|d| d.hidden.clone()),
        parameter_shapes: shapes,
    };
    let mut mf = std::fs::File::create(dir.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(&mut mf, &manifest)?;
    mf.write_all(b"\n")?;
    std::fs::File::create(dir.join(PARAMS_FILE))?.write_all(&blob)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let manifest: CheckpointManifest =
        serde_json::from_reader(std::fs::File::open(dir.join(MANIFEST_FILE))?)?;
    if manifest.schema_version != CHECKPOINT_SCHEMA {
        return Err(Error::config(format!(
            "checkpoint schema {} unsupported (expected {})",
            manifest.schema_version, CHECKPOINT_SCHEMA
        )));
    }
    let mut blob = Vec::new();
    std::fs::File::open(dir.join(PARAMS_FILE))?.read_to_end(&mut blob)?;
    let expected: usize = manifest
        .parameter_shapes
        .iter()
        .map(|s| s.iter().product::<usize>())
        .sum();
    if blob.len() != expected * 8 {
        return Err(Error::config(format!(
            "parameter blob holds {} bytes, manifest expects {}",
            blob.len(),
            expected * 8
        )));
    }
    let mut tensors = Vec::with_capacity(manifest.parameter_shapes.len());
    let mut at = 0usize;
    for shape in &manifest.parameter_shapes {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n)
            .map(|i| {
                let b = &blob[(at + i) * 8..(at + i + 1) * 8];
                f64::from_le_bytes(b.try_into().expect("8 bytes"))
            })
            .collect();
        at += n;
        tensors.push(Tensor::new(shape.clone(), data)?);
    }
    let enc_spec = manifest.arch.encoder_spec();
    let dec_spec = manifest.arch.decoder_spec();
    let n_enc = 2 * enc_spec.layer_widths.len();
    let n_dec = 2 * dec_spec.layer_widths.len();
    if tensors.len() < n_enc + n_dec {
        return Err(Error::config("manifest declares too few parameter tensors"));
    }
    let encoder_params = tensors[..n_enc].to_vec();
    let decoder_params = tensors[n_enc..n_enc + n_dec].to_vec();
    let discriminator = match &manifest.discriminator_hidden {
        None => None,
        Some(hidden) => {
            let rest = tensors[n_enc + n_dec..].to_vec();
            if rest.len() != 2 * (hidden.len() + 1) {
                return Err(Error::config(
                    "discriminator parameter count does not match its shape",
                ));
            }
            Some(Discriminator {
                hidden: hidden.clone(),
                params: rest,
            })
        }
    };
    Ok(Checkpoint {
        model: VaeModel {
            arch: manifest.arch,
            encoder_params,
            decoder_params,
        },
        discriminator,
        objective: manifest.objective,
        seed: manifest.seed,
        steps: manifest.steps,
        dataset: manifest.dataset,
    })
}

#[cfg(test)]
mod tests {
    use super::super::config::{ObjectiveConfig, ObjectiveKind};
    use super::super::train::{train_model, TrainConfig};
    use super::*;
    use crate::factors::{GroundTruthModel, Variant};

    #[test]
    fn checkpoint_round_trips_parameters_exactly() {
        let gt = GroundTruthModel::micro_sprites(Variant::None);
        let cfg = TrainConfig {
            latent_dim: 3,
            encoder_hidden: vec![8],
            decoder_hidden: vec![8],
            discriminator_hidden: vec![8],
            batch_size: 4,
            steps: 3,
            trace_every: 1,
        };
        let obj = ObjectiveConfig::new(ObjectiveKind::FactorVae, 10.0);
        let trained = train_model(obj, &cfg, &gt, 5).unwrap();
        let dir = std::env::temp_dir().join("disentangle_ckpt_test");
        let _ = std::fs::remove_dir_all(&dir);
        save_checkpoint(&trained, DatasetSpec::micro_sprites(Variant::None), &dir).unwrap();
        let loaded = load_checkpoint(&dir).unwrap();
        assert_eq!(loaded.model.encoder_params, trained.model.encoder_params);
        assert_eq!(loaded.model.decoder_params, trained.model.decoder_params);
        assert_eq!(
            loaded.discriminator.unwrap().params,
            trained.discriminator.unwrap().params
        );
        assert_eq!(loaded.seed, 5);
        assert_eq!(loaded.objective.kind, ObjectiveKind::FactorVae);
    }
}
