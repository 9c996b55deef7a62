//! Gaussian-encoder / Bernoulli-decoder VAE on dense networks.

use crate::autodiff::{Graph, MlpSpec, NodeId, Tensor};
use crate::error::{Error, Result};
use crate::factors::Observation;
use crate::rng::SeededRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaeArchitecture {
    /// Flattened pixel count of one observation.
    pub input_dim: usize,
    pub latent_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
}

impl VaeArchitecture {
    pub fn encoder_spec(&self) -> MlpSpec {
        MlpSpec::relu_stack(&self.encoder_hidden, 2 * self.latent_dim)
    }

    pub fn decoder_spec(&self) -> MlpSpec {
        MlpSpec::relu_stack(&self.decoder_hidden, self.input_dim)
    }
}

/// Gaussian posterior parameters for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    /// `[batch, latent]`.
    pub mean: Tensor,
    /// `[batch, latent]`, the log of sigma^2.
    pub log_variance: Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationMode {
    Mean,
    Sampled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VaeModel {
    pub arch: VaeArchitecture,
    pub encoder_params: Vec<Tensor>,
    pub decoder_params: Vec<Tensor>,
}

impl VaeModel {
    pub fn init(arch: VaeArchitecture, rng: &mut SeededRng) -> Self {
        let encoder_params = arch.encoder_spec().init_params(arch.input_dim, rng);
        let decoder_params = arch.decoder_spec().init_params(arch.latent_dim, rng);
        VaeModel {
            arch,
            encoder_params,
            decoder_params,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.arch.latent_dim
    }

    /// Posterior parameters for a `[batch, input_dim]` matrix.
    pub fn encode(&self, x: &Tensor) -> Result<EncoderOutput> {
        let out = self.arch.encoder_spec().apply(&self.encoder_params, x)?;
        let d = self.arch.latent_dim;
        let b = out.rows();
        let mut mean = Vec::with_capacity(b * d);
        let mut logvar = Vec::with_capacity(b * d);
        for i in 0..b {
            let row = out.row(i);
            mean.extend_from_slice(&row[..d]);
            logvar.extend_from_slice(&row[d..]);
        }
        Ok(EncoderOutput {
            mean: Tensor::matrix(b, d, mean)?,
            log_variance: Tensor::matrix(b, d, logvar)?,
        })
    }

    /// Bernoulli logits for a `[batch, latent]` matrix of codes.
    pub fn decode_logits(&self, z: &Tensor) -> Result<Tensor> {
        self.arch.decoder_spec().apply(&self.decoder_params, z)
    }

    /// The representation `r(x)`: the posterior mean, or one draw from
    /// the posterior when sampling is requested.
    pub fn representation(
        &self,
        x: &Observation,
        mode: RepresentationMode,
        rng: Option<&mut SeededRng>,
    ) -> Result<Vec<f64>> {
        let xt = Tensor::matrix(1, x.pixels.len(), x.pixels.clone())?;
        let enc = self.encode(&xt)?;
        Ok(representation_from_posterior(
            enc.mean.row(0),
            enc.log_variance.row(0),
            mode,
            rng,
        ))
    }

    /// Representations for many observations at once.
    pub fn representation_batch(
        &self,
        xs: &Tensor,
        mode: RepresentationMode,
        mut rng: Option<&mut SeededRng>,
    ) -> Result<Vec<Vec<f64>>> {
        let enc = self.encode(xs)?;
        let b = enc.mean.rows();
        Ok((0..b)
            .map(|i| {
                representation_from_posterior(
                    enc.mean.row(i),
                    enc.log_variance.row(i),
                    mode,
                    rng.as_deref_mut(),
                )
            })
            .collect())
    }
}

pub fn representation_from_posterior(
    mean: &[f64],
    log_variance: &[f64],
    mode: RepresentationMode,
    rng: Option<&mut SeededRng>,
) -> Vec<f64> {
    match mode {
        RepresentationMode::Mean => mean.to_vec(),
        RepresentationMode::Sampled => {
            let rng = rng.expect("sampled representation requires an RNG");
            mean.iter()
                .zip(log_variance)
                .map(|(&m, &lv)| {
                    let eps: f64 = StandardNormal.sample(rng);
                    m + (0.5 * lv).exp() * eps
                })
                .collect()
        }
    }
}

/// Batch of observations flattened into a `[n, pixels]` matrix.
pub fn observations_to_matrix(xs: &[Observation]) -> Result<Tensor> {
    if xs.is_empty() {
        return Err(Error::usage("empty observation batch"));
    }
    let width = xs[0].pixels.len();
    let mut data = Vec::with_capacity(xs.len() * width);
    for x in xs {
        if x.pixels.len() != width {
            return Err(Error::config("ragged observation batch"));
        }
        data.extend_from_slice(&x.pixels);
    }
    Tensor::matrix(xs.len(), width, data)
}

/// Tape-side forward pass pieces shared by every objective.
pub struct GraphVae {
    pub encoder_param_ids: Vec<NodeId>,
    pub decoder_param_ids: Vec<NodeId>,
    pub mean: NodeId,
    pub log_variance: NodeId,
    pub z: NodeId,
    pub logits: NodeId,
}

/// Encode, reparameterize with the provided noise, and decode on a tape.
///
/// `trainable` controls whether the VAE parameters enter as grad-requiring
/// leaves (the discriminator update treats them as constants).
pub fn vae_forward_graph(
    g: &mut Graph,
    model: &VaeModel,
    x: NodeId,
    noise: &Tensor,
    trainable: bool,
) -> Result<GraphVae> {
    let push = |g: &mut Graph, t: &Tensor| {
        if trainable {
            g.param(t.clone())
        } else {
            g.constant(t.clone())
        }
    };
    let encoder_param_ids: Vec<NodeId> = model
        .encoder_params
        .iter()
        .map(|t| push(g, t))
        .collect();
    let decoder_param_ids: Vec<NodeId> = model
        .decoder_params
        .iter()
        .map(|t| push(g, t))
        .collect();
    let d = model.arch.latent_dim;
    let enc_out = model
        .arch
        .encoder_spec()
        .apply_graph(g, &encoder_param_ids, x)?;
    let mean = g.slice_cols(enc_out, 0, d);
    let log_variance = g.slice_cols(enc_out, d, 2 * d);
    let half_lv = g.mul_scalar(log_variance, 0.5);
    let sigma = g.exp(half_lv);
    let eps = g.constant(noise.clone());
    let scaled = g.mul(sigma, eps);
    let z = g.add(mean, scaled);
    let logits = model
        .arch
        .decoder_spec()
        .apply_graph(g, &decoder_param_ids, z)?;
    Ok(GraphVae {
        encoder_param_ids,
        decoder_param_ids,
        mean,
        log_variance,
        z,
        logits,
    })
}

/// Standard-normal noise matrix for reparameterization.
pub fn sample_noise(batch: usize, dim: usize, rng: &mut SeededRng) -> Tensor {
    let data = (0..batch * dim)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Tensor::matrix(batch, dim, data).expect("shape by construction")
}
