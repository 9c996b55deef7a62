//! Unsupervised diagnostics: fitted-Gaussian total correlation, average
//! pairwise MI, and the loss-side scores usable without ground truth.

use crate::autodiff::Graph;
use crate::error::{Error, Result};
use crate::factors::GroundTruthModel;
use crate::learners::stats::{bin_equal_width, discrete_mi};
use crate::objectives::losses::{kl_node, recon_node};
use crate::objectives::vae::{
    observations_to_matrix, sample_noise, vae_forward_graph, VaeModel,
};
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};

/// Total correlation of the Gaussian fitted to `points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcEstimate {
    pub nats: f64,
    /// Set when the covariance needed a diagonal jitter to factorize.
    pub jittered: bool,
}

/// 0.5 * (sum_j log C_jj - log det C) for the sample covariance C.
pub fn gaussian_total_correlation(points: &[Vec<f64>]) -> Result<TcEstimate> {
    let n = points.len();
    let d = points[0].len();
    if n <= d {
        return Err(Error::usage(format!(
            "need more samples ({n}) than dimensions ({d})"
        )));
    }
    if d == 1 {
        return Ok(TcEstimate {
            nats: 0.0,
            jittered: false,
        });
    }
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, &v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = vec![0.0; d * d];
    for p in points {
        for i in 0..d {
            let ci = p[i] - mean[i];
            for j in i..d {
                cov[i * d + j] += ci * (p[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / (n - 1) as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let log_diag: f64 = (0..d)
        .map(|i| {
            let v = cov[i * d + i];
            if v > 0.0 {
                v.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum();
    if !log_diag.is_finite() {
        return Err(Error::metric(
            "a representation dimension has zero variance; the fitted Gaussian is degenerate",
        ));
    }
    match cholesky_log_det(&cov, d) {
        Some(log_det) => Ok(TcEstimate {
            nats: (0.5 * (log_diag - log_det)).max(0.0),
            jittered: false,
        }),
        None => {
            let mut jittered = cov.clone();
            for i in 0..d {
                jittered[i * d + i] += 1e-10;
            }
            match cholesky_log_det(&jittered, d) {
                Some(log_det) => Ok(TcEstimate {
                    nats: (0.5 * (log_diag - log_det)).max(0.0),
                    jittered: true,
                }),
                None => Err(Error::metric(
                    "covariance is singular even after diagonal jitter",
                )),
            }
        }
    }
}

fn cholesky_log_det(matrix: &[f64], d: usize) -> Option<f64> {
    let mut l = vec![0.0; d * d];
    let mut log_det = 0.0;
    for i in 0..d {
        for j in 0..=i {
            let mut sum = matrix[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                let root = sum.sqrt();
                l[i * d + i] = root;
                log_det += 2.0 * root.ln();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    Some(log_det)
}

/// Mean discrete MI over all unordered dimension pairs after binning.
pub fn average_pairwise_mi(points: &[Vec<f64>], bins: usize) -> Result<f64> {
    let d = points[0].len();
    if d < 2 {
        return Err(Error::usage("pairwise MI needs at least 2 dimensions"));
    }
    let binned: Vec<Vec<usize>> = (0..d)
        .map(|j| {
            let col: Vec<f64> = points.iter().map(|p| p[j]).collect();
            bin_equal_width(&col, bins)
        })
        .collect();
    let mut acc = 0.0;
    let mut pairs = 0usize;
    for a in 0..d {
        for b in a + 1..d {
            acc += discrete_mi(&binned[a], &binned[b]);
            pairs += 1;
        }
    }
    Ok(acc / pairs as f64)
}

/// Scores computable without any ground-truth labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnsupervisedScores {
    pub recon: f64,
    pub kl: f64,
    pub elbo: f64,
    pub tc_mean: f64,
    pub tc_sampled: f64,
    pub mi_mean: f64,
    pub mi_sampled: f64,
    pub tc_mean_jittered: bool,
    pub tc_sampled_jittered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnsupervisedParams {
    pub samples: usize,
    pub bins: usize,
}

impl Default for UnsupervisedParams {
    fn default() -> Self {
        UnsupervisedParams {
            samples: 10_000,
            bins: 20,
        }
    }
}

/// Evaluate the loss-side scores of a trained model on fresh draws.
pub fn unsupervised_scores(
    model: &VaeModel,
    gt: &GroundTruthModel,
    params: &UnsupervisedParams,
    rng: &mut SeededRng,
) -> Result<UnsupervisedScores> {
    let batch = gt.sample_batch(params.samples, rng)?;
    let xs: Vec<_> = batch.into_iter().map(|(_, x)| x).collect();
    let x = observations_to_matrix(&xs)?;
    let noise = sample_noise(params.samples, model.arch.latent_dim, rng);
    let mut g = Graph::new();
    let xn = g.constant(x);
    let fwd = vae_forward_graph(&mut g, model, xn, &noise, false)?;
    let recon = g.value(recon_node(&mut g, fwd.logits, xn)).scalar_value();
    let kl = g.value(kl_node(&mut g, fwd.mean, fwd.log_variance)).scalar_value();

    let to_rows = |t: &crate::autodiff::Tensor| -> Vec<Vec<f64>> {
        (0..t.rows()).map(|i| t.row(i).to_vec()).collect()
    };
    let mean_rows = to_rows(g.value(fwd.mean));
    let sampled_rows = to_rows(g.value(fwd.z));

    let tc_mean = gaussian_total_correlation(&mean_rows)?;
    let tc_sampled = gaussian_total_correlation(&sampled_rows)?;
    let mi_mean = average_pairwise_mi(&mean_rows, params.bins)?;
    let mi_sampled = average_pairwise_mi(&sampled_rows, params.bins)?;
    Ok(UnsupervisedScores {
        recon,
        kl,
        elbo: -(recon + kl),
        tc_mean: tc_mean.nats,
        tc_sampled: tc_sampled.nats,
        mi_mean,
        mi_sampled,
        tc_mean_jittered: tc_mean.jittered,
        tc_sampled_jittered: tc_sampled.jittered,
    })
}
