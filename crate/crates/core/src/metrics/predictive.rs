//! Importance- and predictability-based metrics.

use super::info::sample_representations;
use super::source::RepresentationSource;
use crate::error::{Error, Result};
use crate::factors::GroundTruthModel;
use crate::learners::gbt::{fit_tree_ensemble, GbtConfig};
use crate::learners::logistic::fit_linear_low_reg;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveParams {
    pub n_train: usize,
    pub n_test: usize,
    pub gbt: GbtConfig,
    /// Inverse strength of the per-dimension linear classifier.
    pub sap_inverse_strength: f64,
}

impl Default for PredictiveParams {
    fn default() -> Self {
        PredictiveParams {
            n_train: 10_000,
            n_test: 5_000,
            gbt: GbtConfig::desk_scale(),
            sap_inverse_strength: 0.01,
        }
    }
}

/// Importance matrix (rows = factors, columns = dimensions) from one
/// boosted ensemble per factor.
pub fn importance_matrix(
    train_x: &[Vec<f64>],
    train_factors: &[Vec<usize>],
    gbt: GbtConfig,
) -> Result<Vec<Vec<f64>>> {
    let k = train_factors[0].len();
    let mut rows = Vec::with_capacity(k);
    for f in 0..k {
        let y: Vec<usize> = train_factors.iter().map(|z| z[f]).collect();
        let model = fit_tree_ensemble(train_x, &y, gbt);
        if model.degenerate {
            return Err(Error::metric(format!(
                "factor {f} has a constant target; its ensemble cannot fit"
            )));
        }
        rows.push(model.importances);
    }
    Ok(rows)
}

/// Disentanglement score of an importance matrix: importance-weighted
/// one-minus-entropy of the per-dimension columns, entropy in base K.
pub fn dci_from_importance(r: &[Vec<f64>]) -> f64 {
    let k = r.len();
    let d = r[0].len();
    let grand_total: f64 = r.iter().flat_map(|row| row.iter()).sum();
    if grand_total <= 0.0 {
        return 0.0;
    }
    let log_k = (k as f64).ln();
    let mut score = 0.0;
    for j in 0..d {
        let col_total: f64 = (0..k).map(|i| r[i][j]).sum();
        if col_total <= 0.0 {
            continue; // dead dimension: weight zero
        }
        let mut h = 0.0;
        for row in r {
            let p = row[j] / col_total;
            if p > 0.0 {
                h -= p * p.ln();
            }
        }
        let rho = col_total / grand_total;
        score += rho * (1.0 - h / log_k);
    }
    score
}

pub fn dci_disentanglement(
    gt: &GroundTruthModel,
    source: &mut dyn RepresentationSource,
    params: &PredictiveParams,
    rng: &mut SeededRng,
) -> Result<f64> {
    let (factors, reps) = sample_representations(gt, source, params.n_train, rng)?;
    let r = importance_matrix(&reps, &factors, params.gbt)?;
    Ok(dci_from_importance(&r))
}

/// Per-(factor, dimension) test accuracies of single-dimension linear
/// classifiers; the score matrix behind the predictability gap.
pub fn sap_score_matrix(
    train_x: &[Vec<f64>],
    train_factors: &[Vec<usize>],
    test_x: &[Vec<f64>],
    test_factors: &[Vec<usize>],
    inverse_strength: f64,
) -> Vec<Vec<f64>> {
    let k = train_factors[0].len();
    let d = train_x[0].len();
    let mut matrix = vec![vec![0.0; d]; k];
    for f in 0..k {
        let train_y: Vec<usize> = train_factors.iter().map(|z| z[f]).collect();
        let test_y: Vec<usize> = test_factors.iter().map(|z| z[f]).collect();
        for j in 0..d {
            let train_col: Vec<f64> = train_x.iter().map(|r| r[j]).collect();
            let test_col: Vec<f64> = test_x.iter().map(|r| r[j]).collect();
            let model = fit_linear_low_reg(&train_col, &train_y, inverse_strength);
            matrix[f][j] = model.accuracy(&test_col, &test_y);
        }
    }
    matrix
}

/// Mean over factors of (best minus second-best) single-dimension
/// accuracy.
pub fn sap_from_matrix(matrix: &[Vec<f64>]) -> Result<f64> {
    let d = matrix[0].len();
    if d < 2 {
        return Err(Error::metric(
            "the predictability gap needs at least 2 representation dimensions",
        ));
    }
    let mut acc = 0.0;
    for row in matrix {
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite accuracies"));
        acc += sorted[0] - sorted[1];
    }
    Ok(acc / matrix.len() as f64)
}

pub fn sap(
    gt: &GroundTruthModel,
    source: &mut dyn RepresentationSource,
    params: &PredictiveParams,
    rng: &mut SeededRng,
) -> Result<f64> {
    let (train_factors, train_x) = sample_representations(gt, source, params.n_train, rng)?;
    let (test_factors, test_x) = sample_representations(gt, source, params.n_test, rng)?;
    let matrix = sap_score_matrix(
        &train_x,
        &train_factors,
        &test_x,
        &test_factors,
        params.sap_inverse_strength,
    );
    sap_from_matrix(&matrix)
}

#[cfg(test)]
mod tests {
    use super::super::oracles::{ConstantSource, IdentitySource};
    use super::*;
    use crate::factors::Variant;
    use crate::rng::seeded;

    fn params() -> PredictiveParams {
        PredictiveParams {
            n_train: 3_000,
            n_test: 1_500,
            gbt: GbtConfig::desk_scale(),
            sap_inverse_strength: 0.01,
        }
    }

    #[test]
    fn permutation_importance_matrix_scores_one() {
        let r = vec![
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!((dci_from_importance(&r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_importance_matrix_scores_zero() {
        let r = vec![vec![0.25; 4]; 4];
        assert!(dci_from_importance(&r).abs() < 1e-12);
    }

    #[test]
    fn identity_representation_dci_is_high() {
        let gt = GroundTruthModel::micro_sprites(Variant::None);
        let mut rng = seeded(120);
        let score = dci_disentanglement(&gt, &mut IdentitySource, &params(), &mut rng).unwrap();
        assert!(score >= 0.95, "dci {score}");
    }

    #[test]
    fn constant_target_names_the_factor() {
        let train_x = vec![vec![0.0, 1.0]; 10];
        let train_f = vec![vec![0usize, 1usize]; 10]; // factor 0 constant? both constant
        let err = importance_matrix(&train_x, &train_f, GbtConfig::desk_scale()).unwrap_err();
        assert!(err.to_string().contains("factor 0"), "{err}");
    }

    #[test]
    fn identity_sap_matches_the_chance_gap_oracle() {
        // With r(x) = z, the best dimension predicts its factor exactly
        // and every other dimension is independent of it, so the gap per
        // factor is 1 - 1/cardinality.
        let gt = GroundTruthModel::micro_sprites(Variant::None);
        let mut rng = seeded(121);
        let score = sap(&gt, &mut IdentitySource, &params(), &mut rng).unwrap();
        let oracle: f64 = gt
            .factor_space()
            .cardinalities()
            .iter()
            .map(|&c| 1.0 - 1.0 / c as f64)
            .sum::<f64>()
            / gt.factor_space().num_factors() as f64;
        assert!((score - oracle).abs() < 0.05, "sap {score} oracle {oracle}");
    }

    #[test]
    fn constant_representation_sap_is_zero() {
        let gt = GroundTruthModel::micro_sprites(Variant::None);
        let mut rng = seeded(122);
        let score = sap(&gt, &mut ConstantSource::new(5), &params(), &mut rng).unwrap();
        assert!(score.abs() <= 0.05, "sap {score}");
    }

    #[test]
    fn duplicated_factor_zeroes_its_gap() {
        struct Dup;
        impl RepresentationSource for Dup {
            fn represent(
                &mut self,
                _gt: &GroundTruthModel,
                zs: &[crate::factors::FactorVector],
                _rng: &mut SeededRng,
            ) -> Result<Vec<Vec<f64>>> {
                Ok(zs
                    .iter()
                    .map(|z| vec![z.values[0] as f64, z.values[0] as f64])
                    .collect())
            }
        }
        let gt = GroundTruthModel::micro_sprites(Variant::None);
        let mut rng = seeded(123);
        let (train_f, train_x) =
            sample_representations(&gt, &mut Dup, 2_000, &mut rng).unwrap();
        let (test_f, test_x) = sample_representations(&gt, &mut Dup, 1_000, &mut rng).unwrap();
        let matrix = sap_score_matrix(&train_x, &train_f, &test_x, &test_f, 0.01);
        // Factor 0 is duplicated: its two accuracies coincide, gap ~ 0.
        assert!((matrix[0][0] - matrix[0][1]).abs() < 0.02);
    }
}
