//! The training loop: one model, one objective, fully seeded.

use crate::autodiff::{AdamParams, AdamState, Graph, Tensor};
use crate::error::{Error, Result};
use crate::factors::GroundTruthModel;
use crate::rng::{stream_rng, SeededRng};
use serde::{Deserialize, Serialize};

use super::config::{ObjectiveConfig, ObjectiveKind, ANNEALED_THRESHOLD_FRACTION};
use super::factor_vae::{
    discriminator_loss_node, shuffle_columns, tc_penalty_node, Discriminator,
};
use super::losses::{
    annealed_vae_node, beta_vae_node, dip_penalty_node, kl_node, recon_node, tc_estimate_node,
    LossTerms,
};
use super::vae::{
    observations_to_matrix, sample_noise, vae_forward_graph, VaeArchitecture, VaeModel,
};

/// Fixed training parameters. The desk preset swaps the reference-scale
/// convolutional stacks for small dense ones so a model trains in CPU
/// minutes while keeping every loss pathway intact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub latent_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub batch_size: usize,
    pub steps: u64,
    /// Loss terms are recorded every this many steps (and at the end).
    pub trace_every: u64,
}

impl TrainConfig {
    pub fn desk() -> Self {
        TrainConfig {
            latent_dim: 6,
            encoder_hidden: vec![64, 64],
            decoder_hidden: vec![64, 64],
            discriminator_hidden: vec![64, 64],
            batch_size: 32,
            steps: 5000,
            trace_every: 250,
        }
    }

    /// Reference-scale constants (batch 64, latent 10, 300k steps,
    /// 6x1000 discriminator). Retained as a named preset; not meant to
    /// run on a desk.
    pub fn paper() -> Self {
        TrainConfig {
            latent_dim: 10,
            encoder_hidden: vec![256, 256],
            decoder_hidden: vec![256, 256],
            discriminator_hidden: vec![1000; 6],
            batch_size: 64,
            steps: 300_000,
            trace_every: 10_000,
        }
    }

    pub fn annealing_threshold(&self) -> u64 {
        ((self.steps as f64 * ANNEALED_THRESHOLD_FRACTION).round() as u64).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: u64,
    pub terms: LossTerms,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: VaeModel,
    pub discriminator: Option<Discriminator>,
    pub objective: ObjectiveConfig,
    pub seed: u64,
    pub steps: u64,
    pub trace: Vec<TracePoint>,
    /// Loss terms evaluated on a fresh probe batch after training.
    pub final_terms: LossTerms,
}

// Fixed RNG roles so every stochastic stream is independent and the whole
// run is a pure function of (config, objective, seed).
const ROLE_INIT: u64 = 0;
const ROLE_DATA: u64 = 1;
const ROLE_NOISE: u64 = 2;
const ROLE_DISC_INIT: u64 = 3;
const ROLE_DISC_DATA: u64 = 4;
const ROLE_SHUFFLE: u64 = 5;
const ROLE_PROBE: u64 = 6;

struct StepOutcome {
    terms: LossTerms,
}

fn run_vae_step(
    model: &mut VaeModel,
    adam: &mut AdamState,
    ground_truth: &GroundTruthModel,
    objective: ObjectiveConfig,
    config: &TrainConfig,
    step: u64,
    data_rng: &mut SeededRng,
    noise_rng: &mut SeededRng,
    discriminator: Option<&Discriminator>,
) -> Result<StepOutcome> {
    let batch = ground_truth.sample_batch(config.batch_size, data_rng)?;
    let xs: Vec<_> = batch.into_iter().map(|(_, x)| x).collect();
    let x = observations_to_matrix(&xs)?;
    let noise = sample_noise(config.batch_size, config.latent_dim, noise_rng);

    let mut g = Graph::new();
    let xn = g.constant(x);
    let fwd = vae_forward_graph(&mut g, model, xn, &noise, true)?;
    let recon = recon_node(&mut g, fwd.logits, xn);
    let kl = kl_node(&mut g, fwd.mean, fwd.log_variance);

    let (total, reg_value) = match objective.kind {
        ObjectiveKind::BetaVae => {
            let total = beta_vae_node(&mut g, recon, kl, objective.value);
            let reg = objective.value * g.value(kl).scalar_value();
            (total, reg)
        }
        ObjectiveKind::AnnealedVae => {
            let threshold = config.annealing_threshold();
            let total = annealed_vae_node(&mut g, recon, kl, step, objective.value, threshold);
            let reg = g.value(total).scalar_value() - g.value(recon).scalar_value();
            (total, reg)
        }
        ObjectiveKind::BetaTcVae => {
            let tc = tc_estimate_node(
                &mut g,
                fwd.z,
                fwd.mean,
                fwd.log_variance,
                ground_truth.factor_space().grid_size(),
            )?;
            let weighted = g.mul_scalar(tc, objective.value - 1.0);
            let nelbo = g.add(recon, kl);
            let total = g.add(nelbo, weighted);
            let reg = g.value(weighted).scalar_value();
            (total, reg)
        }
        ObjectiveKind::DipVaeI | ObjectiveKind::DipVaeII => {
            let pen = dip_penalty_node(&mut g, fwd.mean, fwd.log_variance, objective)?;
            let nelbo = g.add(recon, kl);
            let total = g.add(nelbo, pen);
            let reg = g.value(pen).scalar_value();
            (total, reg)
        }
        ObjectiveKind::FactorVae => {
            let disc = discriminator.expect("factor-vae step carries a discriminator");
            let tc = tc_penalty_node(&mut g, disc, fwd.z, objective.value)?;
            let nelbo = g.add(recon, kl);
            let total = g.add(nelbo, tc);
            let reg = g.value(tc).scalar_value();
            (total, reg)
        }
    };

    let terms = LossTerms {
        total: g.value(total).scalar_value(),
        recon: g.value(recon).scalar_value(),
        kl: g.value(kl).scalar_value(),
        regularizer: reg_value,
        discriminator: None,
    };
    if !terms.total.is_finite() {
        return Err(Error::Aborted {
            step,
            message: format!(
                "non-finite loss (recon {:.6}, kl {:.6}, regularizer {:.6})",
                terms.recon, terms.kl, terms.regularizer
            ),
        });
    }

    let grads_all = g.backward(total)?;
    let mut params: Vec<Tensor> = Vec::new();
    let mut grads: Vec<Tensor> = Vec::new();
    for (&pid, tensor) in fwd
        .encoder_param_ids
        .iter()
        .chain(&fwd.decoder_param_ids)
        .zip(model.encoder_params.iter().chain(&model.decoder_params))
    {
        params.push(tensor.clone());
        grads.push(grads_all.wrt(&g, pid));
    }
    adam.step(&mut params, &grads).map_err(|e| match e {
        Error::Aborted { message, .. } => Error::Aborted { step, message },
        other => other,
    })?;
    let n_enc = model.encoder_params.len();
    model.encoder_params = params[..n_enc].to_vec();
    model.decoder_params = params[n_enc..].to_vec();
    Ok(StepOutcome { terms })
}

#[allow(clippy::too_many_arguments)]
fn run_discriminator_step(
    model: &VaeModel,
    disc: &mut Discriminator,
    disc_adam: &mut AdamState,
    ground_truth: &GroundTruthModel,
    config: &TrainConfig,
    step: u64,
    disc_data_rng: &mut SeededRng,
    noise_rng: &mut SeededRng,
    shuffle_rng: &mut SeededRng,
) -> Result<f64> {
    let batch = ground_truth.sample_batch(config.batch_size, disc_data_rng)?;
    let xs: Vec<_> = batch.into_iter().map(|(_, x)| x).collect();
    let x = observations_to_matrix(&xs)?;
    // Codes are constants here: the discriminator update must not move
    // the encoder.
    let enc = model.encode(&x)?;
    let noise = sample_noise(config.batch_size, config.latent_dim, noise_rng);
    let mut z = enc.mean.clone();
    for i in 0..z.rows() {
        for j in 0..z.cols() {
            let sigma = (0.5 * enc.log_variance.at(i, j)).exp();
            z.set(i, j, z.at(i, j) + sigma * noise.at(i, j));
        }
    }
    let shuffled = shuffle_columns(&z, shuffle_rng);

    let mut g = Graph::new();
    let pids: Vec<_> = disc.params.iter().map(|t| g.param(t.clone())).collect();
    let zj = g.constant(z);
    let zs = g.constant(shuffled);
    let loss = discriminator_loss_node(&mut g, &pids, &disc.mlp_spec(), zj, zs)?;
    let loss_value = g.value(loss).scalar_value();
    if !loss_value.is_finite() {
        return Err(Error::Aborted {
            step,
            message: format!("non-finite discriminator loss {loss_value}"),
        });
    }
    let grads_all = g.backward(loss)?;
    let mut params = disc.params.clone();
    let grads: Vec<Tensor> = pids.iter().map(|&p| grads_all.wrt(&g, p)).collect();
    disc_adam.step(&mut params, &grads).map_err(|e| match e {
        Error::Aborted { message, .. } => Error::Aborted { step, message },
        other => other,
    })?;
    disc.params = params;
    Ok(loss_value)
}

/// Train one model. Deterministic: identical arguments produce
/// bit-identical parameters and traces.
pub fn train_model(
    objective: ObjectiveConfig,
    config: &TrainConfig,
    ground_truth: &GroundTruthModel,
    seed: u64,
) -> Result<TrainedModel> {
    if config.batch_size == 0 {
        return Err(Error::config("batch size must be positive"));
    }
    if objective.kind == ObjectiveKind::FactorVae && config.batch_size < 2 {
        return Err(Error::usage("the density-ratio objective needs batch >= 2"));
    }
    let arch = VaeArchitecture {
        input_dim: ground_truth.observation_len(),
        latent_dim: config.latent_dim,
        encoder_hidden: config.encoder_hidden.clone(),
        decoder_hidden: config.decoder_hidden.clone(),
    };
    let mut init_rng = stream_rng(seed, ROLE_INIT);
    let mut model = VaeModel::init(arch, &mut init_rng);
    let mut adam = AdamState::new(
        &model
            .encoder_params
            .iter()
            .chain(&model.decoder_params)
            .cloned()
            .collect::<Vec<_>>(),
        AdamParams::standard(),
    );
    let mut discriminator = if objective.kind == ObjectiveKind::FactorVae {
        let mut disc_rng = stream_rng(seed, ROLE_DISC_INIT);
        Some(Discriminator::init(
            config.latent_dim,
            &config.discriminator_hidden,
            &mut disc_rng,
        ))
    } else {
        None
    };
    let mut disc_adam = discriminator
        .as_ref()
        .map(|d| AdamState::new(&d.params, AdamParams::discriminator()));

    let mut data_rng = stream_rng(seed, ROLE_DATA);
    let mut noise_rng = stream_rng(seed, ROLE_NOISE);
    let mut disc_data_rng = stream_rng(seed, ROLE_DISC_DATA);
    let mut shuffle_rng = stream_rng(seed, ROLE_SHUFFLE);

    let mut trace = Vec::new();
    for step in 0..config.steps {
        let outcome = run_vae_step(
            &mut model,
            &mut adam,
            ground_truth,
            objective,
            config,
            step,
            &mut data_rng,
            &mut noise_rng,
            discriminator.as_ref(),
        )?;
        let mut terms = outcome.terms;
        if let (Some(disc), Some(disc_adam)) = (discriminator.as_mut(), disc_adam.as_mut()) {
            let dloss = run_discriminator_step(
                &model,
                disc,
                disc_adam,
                ground_truth,
                config,
                step,
                &mut disc_data_rng,
                &mut noise_rng,
                &mut shuffle_rng,
            )?;
            terms.discriminator = Some(dloss);
        }
        if step % config.trace_every == 0 || step + 1 == config.steps {
            trace.push(TracePoint { step, terms });
        }
    }

    let mut probe_rng = stream_rng(seed, ROLE_PROBE);
    let final_terms = evaluate_terms(
        &model,
        discriminator.as_ref(),
        objective,
        config,
        ground_truth,
        &mut probe_rng,
    )?;
    Ok(TrainedModel {
        model,
        discriminator,
        objective,
        seed,
        steps: config.steps,
        trace,
        final_terms,
    })
}

/// Loss terms on a fresh probe batch, without updating anything.
pub fn evaluate_terms(
    model: &VaeModel,
    discriminator: Option<&Discriminator>,
    objective: ObjectiveConfig,
    config: &TrainConfig,
    ground_truth: &GroundTruthModel,
    rng: &mut SeededRng,
) -> Result<LossTerms> {
    let batch = ground_truth.sample_batch(config.batch_size.max(2), rng)?;
    let xs: Vec<_> = batch.into_iter().map(|(_, x)| x).collect();
    let x = observations_to_matrix(&xs)?;
    let noise = sample_noise(xs.len(), config.latent_dim, rng);
    let mut g = Graph::new();
    let xn = g.constant(x);
    let fwd = vae_forward_graph(&mut g, model, xn, &noise, false)?;
    let recon = recon_node(&mut g, fwd.logits, xn);
    let kl = kl_node(&mut g, fwd.mean, fwd.log_variance);
    let recon_v = g.value(recon).scalar_value();
    let kl_v = g.value(kl).scalar_value();
    let (total, reg) = match objective.kind {
        ObjectiveKind::BetaVae => (recon_v + objective.value * kl_v, objective.value * kl_v),
        ObjectiveKind::AnnealedVae => {
            let c = super::losses::capacity_at(
                config.steps,
                objective.value,
                config.annealing_threshold(),
            );
            let reg = super::config::ANNEALED_GAMMA * (kl_v - c).abs();
            (recon_v + reg, reg)
        }
        ObjectiveKind::BetaTcVae => {
            let tc = tc_estimate_node(
                &mut g,
                fwd.z,
                fwd.mean,
                fwd.log_variance,
                ground_truth.factor_space().grid_size(),
            )?;
            let reg = (objective.value - 1.0) * g.value(tc).scalar_value();
            (recon_v + kl_v + reg, reg)
        }
        ObjectiveKind::DipVaeI | ObjectiveKind::DipVaeII => {
            let pen = dip_penalty_node(&mut g, fwd.mean, fwd.log_variance, objective)?;
            let reg = g.value(pen).scalar_value();
            (recon_v + kl_v + reg, reg)
        }
        ObjectiveKind::FactorVae => {
            let disc = discriminator
                .ok_or_else(|| Error::usage("density-ratio evaluation needs a discriminator"))?;
            let tc = tc_penalty_node(&mut g, disc, fwd.z, objective.value)?;
            let reg = g.value(tc).scalar_value();
            (recon_v + kl_v + reg, reg)
        }
    };
    Ok(LossTerms {
        total,
        recon: recon_v,
        kl: kl_v,
        regularizer: reg,
        discriminator: None,
    })
}

/// Mean reconstruction NLL of a model on `n` fresh samples, using the
/// stochastic forward pass. Shared by the training-progress checks.
pub fn evaluate_recon_nll(
    model: &VaeModel,
    ground_truth: &GroundTruthModel,
    n: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    let batch = ground_truth.sample_batch(n, rng)?;
    let xs: Vec<_> = batch.into_iter().map(|(_, x)| x).collect();
    let x = observations_to_matrix(&xs)?;
    let noise = sample_noise(n, model.arch.latent_dim, rng);
    let mut g = Graph::new();
    let xn = g.constant(x);
    let fwd = vae_forward_graph(&mut g, model, xn, &noise, false)?;
    let recon = recon_node(&mut g, fwd.logits, xn);
    Ok(g.value(recon).scalar_value())
}
