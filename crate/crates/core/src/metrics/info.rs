//! Mutual-information metrics: the normalized information gap and the
//! modularity of the MI matrix.

use super::source::RepresentationSource;
use crate::error::{Error, Result};
use crate::factors::GroundTruthModel;
use crate::learners::stats::{bin_equal_width, discrete_mi, entropy};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiParams {
    pub samples: usize,
    pub bins: usize,
}

impl Default for MiParams {
    fn default() -> Self {
        MiParams {
            samples: 10_000,
            bins: 20,
        }
    }
}

/// MI matrix `m[dim][factor]` between binned representation dimensions
/// and exact factor values.
pub fn mi_matrix(reps: &[Vec<f64>], factors: &[Vec<usize>], bins: usize) -> Vec<Vec<f64>> {
    let d = reps[0].len();
    let k = factors[0].len();
    let mut matrix = vec![vec![0.0; k]; d];
    for (j, row) in matrix.iter_mut().enumerate() {
        let column: Vec<f64> = reps.iter().map(|r| r[j]).collect();
        let binned = bin_equal_width(&column, bins);
        for (f, cell) in row.iter_mut().enumerate() {
            let labels: Vec<usize> = factors.iter().map(|z| z[f]).collect();
            *cell = discrete_mi(&binned, &labels);
        }
    }
    matrix
}

/// Mean normalized gap between the top two dimensions per factor.
///
/// `factor_entropies[k]` normalizes factor `k`; pass exact grid entropies
/// for generative models, empirical ones for external tables.
pub fn mig_from_data(
    reps: &[Vec<f64>],
    factors: &[Vec<usize>],
    factor_entropies: &[f64],
    bins: usize,
) -> Result<f64> {
    let d = reps[0].len();
    if d < 2 {
        return Err(Error::metric(
            "the information gap needs at least 2 representation dimensions",
        ));
    }
    let m = mi_matrix(reps, factors, bins);
    let k = factors[0].len();
    let mut acc = 0.0;
    for f in 0..k {
        let mut best = 0usize;
        for j in 1..d {
            if m[j][f] > m[best][f] {
                best = j;
            }
        }
        let mut second = f64::NEG_INFINITY;
        for (j, row) in m.iter().enumerate() {
            if j != best {
                second = second.max(row[f]);
            }
        }
        let h = factor_entropies[f];
        if h > 0.0 {
            acc += (m[best][f] - second) / h;
        }
    }
    Ok((acc / k as f64).clamp(0.0, 1.0))
}

/// Modularity: 1 minus the normalized off-target MI mass per dimension.
/// Dimensions with an all-zero MI row count as perfectly modular.
pub fn modularity_from_data(reps: &[Vec<f64>], factors: &[Vec<usize>], bins: usize) -> f64 {
    let m = mi_matrix(reps, factors, bins);
    let k = factors[0].len();
    let mut acc = 0.0;
    for row in &m {
        let mut best = 0usize;
        for (f, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = f;
            }
        }
        let theta = row[best];
        if theta <= 0.0 {
            acc += 1.0;
            continue;
        }
        let mut delta = 0.0;
        for (f, &v) in row.iter().enumerate() {
            let target = if f == best { theta } else { 0.0 };
            delta += (v - target) * (v - target);
        }
        delta /= theta * theta * (k - 1) as f64;
        acc += 1.0 - delta;
    }
    acc / m.len() as f64
}

/// Sample a (factors, representations) batch from the generative model.
pub fn sample_representations(
    gt: &GroundTruthModel,
    source: &mut dyn RepresentationSource,
    n: usize,
    rng: &mut SeededRng,
) -> Result<(Vec<Vec<usize>>, Vec<Vec<f64>>)> {
    let zs = gt.sample_factors(n, rng);
    let reps = source.represent(gt, &zs, rng)?;
    let factors = zs.into_iter().map(|z| z.values).collect();
    Ok((factors, reps))
}

/// Exact entropies of the uniform factor grid, in nats.
pub fn exact_factor_entropies(gt: &GroundTruthModel) -> Vec<f64> {
    gt.factor_space()
        .cardinalities()
        .iter()
        .map(|&c| (c as f64).ln())
        .collect()
}

/// Empirical factor entropies from observed labels.
pub fn empirical_factor_entropies(factors: &[Vec<usize>]) -> Vec<f64> {
    let k = factors[0].len();
    (0..k)
        .map(|f| {
            let labels: Vec<usize> = factors.iter().map(|z| z[f]).collect();
            entropy(&labels)
        })
        .collect()
}

pub fn mig(
    gt: &GroundTruthModel,
    source: &mut dyn RepresentationSource,
    params: &MiParams,
    rng: &mut SeededRng,
) -> Result<f64> {
    let (factors, reps) = sample_representations(gt, source, params.samples, rng)?;
    mig_from_data(&reps, &factors, &exact_factor_entropies(gt), params.bins)
}

pub fn modularity(
    gt: &GroundTruthModel,
    source: &mut dyn RepresentationSource,
    params: &MiParams,
    rng: &mut SeededRng,
) -> Result<f64> {
    let (factors, reps) = sample_representations(gt, source, params.samples, rng)?;
    Ok(modularity_from_data(&reps, &factors, params.bins))
}
