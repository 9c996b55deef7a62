//! Metrics built on fixed-factor interventions: both predict which factor
//! was held fixed from statistics of the representations.

use super::source::RepresentationSource;
use crate::error::{Error, Result};
use crate::factors::GroundTruthModel;
use crate::learners::logistic::fit_logistic;
use crate::rng::SeededRng;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterventionParams {
    pub n_train: usize,
    pub n_test: usize,
    pub batch: usize,
    /// Dimensions with global variance below this are pruned before the
    /// variance-vote metric.
    pub prune_variance: f64,
    /// Sample count for the global variance estimate.
    pub variance_samples: usize,
}

impl Default for InterventionParams {
    fn default() -> Self {
        InterventionParams {
            n_train: 10_000,
            n_test: 5_000,
            batch: 64,
            prune_variance: 0.05,
            variance_samples: 10_000,
        }
    }
}

impl InterventionParams {
    /// Lighter settings for per-model sweep evaluation.
    pub fn desk() -> Self {
        InterventionParams {
            n_train: 2_000,
            n_test: 1_000,
            batch: 64,
            prune_variance: 0.05,
            variance_samples: 10_000,
        }
    }
}

/// Accuracy of a linear classifier that predicts the fixed factor from
/// coordinate-wise mean absolute differences of paired fixed-factor
/// batches.
pub fn beta_vae_metric(
    gt: &GroundTruthModel,
    source: &mut dyn RepresentationSource,
    params: &InterventionParams,
    rng: &mut SeededRng,
) -> Result<f64> {
    let k = gt.factor_space().num_factors();
    let total = params.n_train + params.n_test;
    let mut features = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for _ in 0..total {
        let factor = rng.gen_range(0..k);
        let value = rng.gen_range(0..gt.factor_space().cardinality(factor));
        let zs1 = gt
            .factor_space()
            .sample_fixed(params.batch, factor, value, rng)?;
        let zs2 = gt
            .factor_space()
            .sample_fixed(params.batch, factor, value, rng)?;
        let r1 = source.represent(gt, &zs1, rng)?;
        let r2 = source.represent(gt, &zs2, rng)?;
        let d = r1[0].len();
        let mut feat = vec![0.0; d];
        for (a, b) in r1.iter().zip(&r2) {
            for (f, (x, y)) in feat.iter_mut().zip(a.iter().zip(b)) {
                *f += (x - y).abs();
            }
        }
        for f in feat.iter_mut() {
            *f /= params.batch as f64;
        }
        features.push(feat);
        labels.push(factor);
    }
    let (train_x, test_x) = features.split_at(params.n_train);
    let (train_y, test_y) = labels.split_at(params.n_train);
    let model = fit_logistic(train_x, train_y, 1.0);
    Ok(model.accuracy(test_x, test_y))
}

/// Majority-vote accuracy from the least-normalized-variance dimension of
/// fixed-factor batches, after pruning collapsed dimensions.
pub fn factor_vae_metric(
    gt: &GroundTruthModel,
    source: &mut dyn RepresentationSource,
    params: &InterventionParams,
    rng: &mut SeededRng,
) -> Result<f64> {
    let k = gt.factor_space().num_factors();
    // Global per-dimension variance on unintervened samples; used both
    // for pruning and for normalizing the in-batch variances.
    let zs = gt.sample_factors(params.variance_samples, rng);
    let reps = source.represent(gt, &zs, rng)?;
    let d = reps[0].len();
    let global_var = column_variances(&reps, d);
    let surviving: Vec<usize> = (0..d)
        .filter(|&j| global_var[j] >= params.prune_variance)
        .collect();
    if surviving.is_empty() {
        return Err(Error::metric(
            "all dimensions collapsed: every global variance is below the pruning threshold",
        ));
    }

    let mut vote = |rng: &mut SeededRng| -> Result<(usize, usize)> {
        let factor = rng.gen_range(0..k);
        let value = rng.gen_range(0..gt.factor_space().cardinality(factor));
        let zs = gt
            .factor_space()
            .sample_fixed(params.batch, factor, value, rng)?;
        let reps = source.represent(gt, &zs, rng)?;
        let batch_var = column_variances(&reps, d);
        let mut best = surviving[0];
        let mut best_ratio = f64::INFINITY;
        for &j in &surviving {
            let ratio = batch_var[j] / global_var[j];
            if ratio < best_ratio {
                best_ratio = ratio;
                best = j;
            }
        }
        Ok((best, factor))
    };

    // Majority table: for each surviving dimension, the factor it voted
    // for most often on the training draws; ties to the lowest factor.
    let mut counts = vec![vec![0usize; k]; d];
    for _ in 0..params.n_train {
        let (dim, factor) = vote(rng)?;
        counts[dim][factor] += 1;
    }
    let table: Vec<usize> = counts
        .iter()
        .map(|row| {
            let mut best = 0;
            for (f, &c) in row.iter().enumerate() {
                if c > row[best] {
                    best = f;
                }
            }
            best
        })
        .collect();
    let mut hits = 0usize;
    for _ in 0..params.n_test {
        let (dim, factor) = vote(rng)?;
        if table[dim] == factor {
            hits += 1;
        }
    }
    Ok(hits as f64 / params.n_test as f64)
}

fn column_variances(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    let n = rows.len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut var = vec![0.0; d];
    for r in rows {
        for (j, &v) in r.iter().enumerate() {
            var[j] += (v - mean[j]) * (v - mean[j]);
        }
    }
    for v in var.iter_mut() {
        *v /= (n - 1).max(1) as f64;
    }
    var
}
