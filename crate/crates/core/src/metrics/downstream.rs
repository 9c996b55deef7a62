//! Downstream factor prediction at several training-set sizes, plus the
//! statistical-efficiency ratio.

use super::info::sample_representations;
use super::source::RepresentationSource;
use crate::error::{Error, Result};
use crate::factors::GroundTruthModel;
use crate::learners::gbt::{fit_tree_ensemble, GbtConfig};
use crate::learners::logistic::fit_logistic_cv;
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownstreamLearner {
    Logistic,
    Tree,
}

impl DownstreamLearner {
    pub fn tag(self) -> &'static str {
        match self {
            DownstreamLearner::Logistic => "logistic",
            DownstreamLearner::Tree => "tree",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DownstreamParams {
    pub train_sizes: Vec<usize>,
    pub n_test: usize,
    /// Numerator size of the efficiency ratio; the denominator is the
    /// largest train size.
    pub efficiency_small: usize,
    pub cv_folds: usize,
    pub cv_values: usize,
    pub gbt: GbtConfig,
}

impl Default for DownstreamParams {
    fn default() -> Self {
        DownstreamParams {
            train_sizes: vec![10, 100, 1000, 10_000],
            n_test: 5_000,
            efficiency_small: 100,
            cv_folds: 5,
            cv_values: 10,
            gbt: GbtConfig::desk_scale(),
        }
    }
}

impl DownstreamParams {
    /// Budget cap for sweep evaluation: top size 2500, ratio 100/2500.
    pub fn desk() -> Self {
        DownstreamParams {
            train_sizes: vec![10, 100, 1000, 2500],
            n_test: 2_500,
            efficiency_small: 100,
            cv_folds: 5,
            cv_values: 10,
            gbt: GbtConfig::desk_scale(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamReport {
    pub learner: DownstreamLearner,
    /// `(train_size, mean accuracy across factors)`.
    pub accuracies: Vec<(usize, f64)>,
    /// acc(efficiency_small) / acc(largest size).
    pub efficiency: f64,
    /// Factors whose training labels collapsed to one class at some size.
    pub degenerate_fits: usize,
}

pub fn downstream_eval(
    gt: &GroundTruthModel,
    source: &mut dyn RepresentationSource,
    learner: DownstreamLearner,
    params: &DownstreamParams,
    rng: &mut SeededRng,
) -> Result<DownstreamReport> {
    if params.train_sizes.is_empty() {
        return Err(Error::usage("need at least one train size"));
    }
    let k = gt.factor_space().num_factors();
    let (test_factors, test_x) = sample_representations(gt, source, params.n_test, rng)?;
    let mut accuracies = Vec::with_capacity(params.train_sizes.len());
    let mut degenerate_fits = 0usize;
    for &size in &params.train_sizes {
        let (train_factors, train_x) = sample_representations(gt, source, size, rng)?;
        let mut acc_sum = 0.0;
        for f in 0..k {
            let train_y: Vec<usize> = train_factors.iter().map(|z| z[f]).collect();
            let test_y: Vec<usize> = test_factors.iter().map(|z| z[f]).collect();
            let acc = match learner {
                DownstreamLearner::Logistic => {
                    let model = fit_logistic_cv(
                        &train_x,
                        &train_y,
                        params.cv_folds.min(size.max(2)),
                        params.cv_values,
                        rng,
                    );
                    if model.degenerate {
                        degenerate_fits += 1;
                    }
                    model.accuracy(&test_x, &test_y)
                }
                DownstreamLearner::Tree => {
                    let model = fit_tree_ensemble(&train_x, &train_y, params.gbt);
                    if model.degenerate {
                        degenerate_fits += 1;
                    }
                    model.accuracy(&test_x, &test_y)
                }
            };
            acc_sum += acc;
        }
        accuracies.push((size, acc_sum / k as f64));
    }
    let small = accuracies
        .iter()
        .find(|(s, _)| *s == params.efficiency_small)
        .map(|(_, a)| *a)
        .unwrap_or(accuracies[0].1);
    let large = accuracies.last().expect("nonempty").1;
    let efficiency = if large > 0.0 { small / large } else { 0.0 };
    Ok(DownstreamReport {
        learner,
        accuracies,
        efficiency,
        degenerate_fits,
    })
}

#[cfg(test)]
mod tests {
    use super::super::oracles::{IdentitySource, NoiseSource};
    use super::*;
    use crate::factors::Variant;
    use crate::rng::seeded;

    fn quick_params() -> DownstreamParams {
        DownstreamParams {
            train_sizes: vec![100, 800],
            n_test: 600,
            efficiency_small: 100,
            cv_folds: 3,
            cv_values: 4,
            gbt: GbtConfig::desk_scale(),
        }
    }

    #[test]
    fn identity_representation_is_nearly_perfect_at_every_size() {
        let gt = GroundTruthModel::micro_sprites(Variant::None);
        let mut rng = seeded(140);
        let report = downstream_eval(
            &gt,
            &mut IdentitySource,
            DownstreamLearner::Tree,
            &quick_params(),
            &mut rng,
        )
        .unwrap();
        for &(size, acc) in &report.accuracies {
            assert!(acc > 0.9, "size {size} acc {acc}");
        }
        assert!((report.efficiency - 1.0).abs() < 0.1);
    }

    #[test]
    fn efficiency_is_the_small_to_large_ratio() {
        // Direct arithmetic check of the ratio definition.
        let report = DownstreamReport {
            learner: DownstreamLearner::Logistic,
            accuracies: vec![(100, 0.5), (10_000, 0.8)],
            efficiency: 0.5 / 0.8,
            degenerate_fits: 0,
        };
        assert!((report.efficiency - 0.625).abs() < 1e-12);
    }

    #[test]
    fn random_representation_sits_at_mean_chance() {
        let gt = GroundTruthModel::micro_sprites(Variant::None);
        let mut rng = seeded(141);
        let report = downstream_eval(
            &gt,
            &mut NoiseSource { dim: 4 },
            DownstreamLearner::Logistic,
            &quick_params(),
            &mut rng,
        )
        .unwrap();
        // Mean chance across factors (3,4,8,8,8): (1/3+1/4+3/8)/5 ... each
        // factor's chance is 1/card.
        let chance: f64 = gt
            .factor_space()
            .cardinalities()
            .iter()
            .map(|&c| 1.0 / c as f64)
            .sum::<f64>()
            / 5.0;
        let final_acc = report.accuracies.last().unwrap().1;
        assert!((final_acc - chance).abs() < 0.06, "acc {final_acc} chance {chance}");
    }
}
