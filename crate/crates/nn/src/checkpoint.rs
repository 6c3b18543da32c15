//! Checkpoint container: a directory holding `manifest.json` (layer shapes,
//! activations, optional config echo, seed, fingerprint) plus `tensors.bin`,
//! the concatenated raw little-endian f64 buffers of every tensor in layer
//! order (weight row-major, bias, then normalization parameters and any
//! running statistics).

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::activation::Activation;
use crate::ffnet::{FfLayer, NetworkParams, Norm};
use crate::{NnError, Result};

const MANIFEST_FILE: &str = "manifest.json";
const TENSORS_FILE: &str = "tensors.bin";
const FORMAT_VERSION: u32 = 1;

/// Per-layer structural description stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: String,
    pub dropout: f64,
    /// `null`, `"layer_norm"`, or `"batch_norm"`.
    pub norm: Option<String>,
}

/// Checkpoint metadata; everything needed to rebuild the tensor layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub seed: u64,
    pub layers: Vec<LayerSpec>,
    /// Total f64 count expected in `tensors.bin`.
    pub total_scalars: usize,
    /// Content hash of parameters (shape-aware); see [`fingerprint`].
    pub fingerprint: String,
    /// Free-form echo of whatever configuration produced this network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_echo: Option<serde_json::Value>,
}

fn norm_tag(norm: &Option<Norm>) -> Option<String> {
    norm.as_ref().map(|n| match n {
        Norm::Layer { .. } => "layer_norm".to_string(),
        Norm::Batch { .. } => "batch_norm".to_string(),
    })
}

/// Every stored tensor of a layer, in serialization order.
fn layer_tensors(layer: &FfLayer) -> Vec<&[f64]> {
    let mut out = vec![
        layer.weight.as_slice().expect("contiguous"),
        layer.bias.as_slice().expect("contiguous"),
    ];
    match &layer.norm {
        None => {}
        Some(Norm::Layer { gamma, beta }) => {
            out.push(gamma.as_slice().expect("contiguous"));
            out.push(beta.as_slice().expect("contiguous"));
        }
        Some(Norm::Batch {
            gamma,
            beta,
            running_mean,
            running_var,
        }) => {
            out.push(gamma.as_slice().expect("contiguous"));
            out.push(beta.as_slice().expect("contiguous"));
            out.push(running_mean.as_slice().expect("contiguous"));
            out.push(running_var.as_slice().expect("contiguous"));
        }
    }
    out
}

fn tensor_bytes(params: &NetworkParams) -> Vec<u8> {
    let mut bytes = Vec::new();
    for layer in &params.layers {
        for tensor in layer_tensors(layer) {
            for v in tensor {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    bytes
}

/// Content hash of all parameters, including shapes and layer structure, so
/// that it changes iff any parameter (or the architecture) changes.
pub fn fingerprint(params: &NetworkParams) -> String {
    let mut hasher = Sha256::new();
    for layer in &params.layers {
        hasher.update((layer.in_dim() as u64).to_le_bytes());
        hasher.update((layer.out_dim() as u64).to_le_bytes());
        hasher.update(layer.activation.as_str().as_bytes());
        hasher.update(norm_tag(&layer.norm).unwrap_or_default().as_bytes());
        hasher.update(layer.dropout.to_le_bytes());
    }
    hasher.update(&tensor_bytes(params));
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the checkpoint directory (created if missing), overwriting any
/// previous contents of the two files.
pub fn save_network(
    params: &NetworkParams,
    dir: &Path,
    config_echo: Option<serde_json::Value>,
) -> Result<CheckpointManifest> {
    params.validate()?;
    std::fs::create_dir_all(dir)?;
    let bytes = tensor_bytes(params);
    let manifest = CheckpointManifest {
        format_version: FORMAT_VERSION,
        seed: params.seed,
        layers: params
            .layers
            .iter()
            .map(|l| LayerSpec {
                in_dim: l.in_dim(),
                out_dim: l.out_dim(),
                activation: l.activation.as_str().to_string(),
                dropout: l.dropout,
                norm: norm_tag(&l.norm),
            })
            .collect(),
        total_scalars: bytes.len() / 8,
        fingerprint: fingerprint(params),
        config_echo,
    };
    std::fs::write(dir.join(TENSORS_FILE), &bytes)?;
    std::fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

/// Reads a checkpoint directory back into parameters plus its manifest.
pub fn load_network(dir: &Path) -> Result<(NetworkParams, CheckpointManifest)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: CheckpointManifest =
        serde_json::from_slice(&std::fs::read(&manifest_path).map_err(|e| {
            NnError::Checkpoint(format!("cannot read {}: {e}", manifest_path.display()))
        })?)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(NnError::Checkpoint(format!(
            "unsupported format version {}",
            manifest.format_version
        )));
    }
    let bytes = std::fs::read(dir.join(TENSORS_FILE))?;
    if bytes.len() % 8 != 0 || bytes.len() / 8 != manifest.total_scalars {
        return Err(NnError::Checkpoint(format!(
            "tensors.bin holds {} bytes, manifest expects {} scalars",
            bytes.len(),
            manifest.total_scalars
        )));
    }
    let mut values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let mut take = |n: usize| -> Result<Vec<f64>> {
        let v: Vec<f64> = values.by_ref().take(n).collect();
        if v.len() != n {
            return Err(NnError::Checkpoint("tensors.bin ended early".into()));
        }
        Ok(v)
    };

    let mut layers = Vec::with_capacity(manifest.layers.len());
    for spec in &manifest.layers {
        let activation = Activation::parse(&spec.activation).ok_or_else(|| {
            NnError::Checkpoint(format!("unknown activation {:?}", spec.activation))
        })?;
        let weight =
            Array2::from_shape_vec((spec.in_dim, spec.out_dim), take(spec.in_dim * spec.out_dim)?)
                .expect("shape matches length");
        let bias = Array1::from_vec(take(spec.out_dim)?);
        let norm = match spec.norm.as_deref() {
            None => None,
            Some("layer_norm") => Some(Norm::Layer {
                gamma: Array1::from_vec(take(spec.out_dim)?),
                beta: Array1::from_vec(take(spec.out_dim)?),
            }),
            Some("batch_norm") => Some(Norm::Batch {
                gamma: Array1::from_vec(take(spec.out_dim)?),
                beta: Array1::from_vec(take(spec.out_dim)?),
                running_mean: Array1::from_vec(take(spec.out_dim)?),
                running_var: Array1::from_vec(take(spec.out_dim)?),
            }),
            Some(other) => {
                return Err(NnError::Checkpoint(format!("unknown norm kind {other:?}")))
            }
        };
        layers.push(FfLayer {
            weight,
            bias,
            activation,
            norm,
            dropout: spec.dropout,
        });
    }
    let params = NetworkParams {
        layers,
        seed: manifest.seed,
    };
    params.validate()?;
    if fingerprint(&params) != manifest.fingerprint {
        return Err(NnError::Checkpoint(
            "fingerprint mismatch: tensor data does not match manifest".into(),
        ));
    }
    Ok((params, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heads::{build_mlp_head, MlpHeadConfig, NormKind};

    fn sample_net(norm: NormKind) -> NetworkParams {
        build_mlp_head(
            &MlpHeadConfig {
                hidden_units: 5,
                normalization: norm,
                ..MlpHeadConfig::default()
            },
            7,
            99,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        for norm in [NormKind::LayerNorm, NormKind::BatchNorm] {
            let net = sample_net(norm);
            let dir = tempfile::tempdir().unwrap();
            let manifest = save_network(&net, dir.path(), Some(serde_json::json!({"lr": 2e-6})))
                .unwrap();
            let (loaded, loaded_manifest) = load_network(dir.path()).unwrap();
            assert_eq!(loaded, net);
            assert_eq!(loaded_manifest, manifest);
            assert_eq!(
                loaded_manifest.config_echo,
                Some(serde_json::json!({"lr": 2e-6}))
            );
        }
    }

    #[test]
    fn fingerprint_changes_iff_parameters_change() {
        let net = sample_net(NormKind::LayerNorm);
        let fp = fingerprint(&net);
        assert_eq!(fp, fingerprint(&net.clone()));

        let mut tweaked = net.clone();
        tweaked.layers[1].weight[(0, 0)] += 1e-12;
        assert_ne!(fp, fingerprint(&tweaked));

        let mut bias_tweak = net.clone();
        bias_tweak.layers[2].bias[1] -= 3.0;
        assert_ne!(fp, fingerprint(&bias_tweak));
    }

    #[test]
    fn truncated_tensor_file_is_rejected() {
        let net = sample_net(NormKind::LayerNorm);
        let dir = tempfile::tempdir().unwrap();
        save_network(&net, dir.path(), None).unwrap();
        let path = dir.path().join("tensors.bin");
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(
            load_network(dir.path()),
            Err(NnError::Checkpoint(_))
        ));
    }

    #[test]
    fn tampered_tensor_data_fails_the_fingerprint() {
        let net = sample_net(NormKind::LayerNorm);
        let dir = tempfile::tempdir().unwrap();
        save_network(&net, dir.path(), None).unwrap();
        let path = dir.path().join("tensors.bin");
        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xFF;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_network(dir.path()),
            Err(NnError::Checkpoint(_))
        ));
    }
}
