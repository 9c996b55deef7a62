//! Synthetic representation sources with known metric behaviour, used to
//! calibrate and verify the scoring pipeline end to end.

use super::source::RepresentationSource;
use crate::error::Result;
use crate::factors::{FactorVector, GroundTruthModel};
use crate::impossibility::{build_entangler, Direction, HouseholderEntangler, Marginal};
use crate::impossibility::normal_quantile;
use crate::rng::SeededRng;
use rand::Rng;

/// Perfectly disentangled: `r(x) = z` as raw factor values.
pub struct IdentitySource;

impl RepresentationSource for IdentitySource {
    fn represent(
        &mut self,
        _gt: &GroundTruthModel,
        zs: &[FactorVector],
        _rng: &mut SeededRng,
    ) -> Result<Vec<Vec<f64>>> {
        Ok(zs
            .iter()
            .map(|z| z.values.iter().map(|&v| v as f64).collect())
            .collect())
    }
}

/// Uninformative: the same vector for every observation.
pub struct ConstantSource {
    pub value: Vec<f64>,
}

impl ConstantSource {
    pub fn new(dim: usize) -> Self {
        ConstantSource {
            value: vec![0.5; dim],
        }
    }
}

impl RepresentationSource for ConstantSource {
    fn represent(
        &mut self,
        _gt: &GroundTruthModel,
        zs: &[FactorVector],
        _rng: &mut SeededRng,
    ) -> Result<Vec<Vec<f64>>> {
        Ok(vec![self.value.clone(); zs.len()])
    }
}

/// Pure noise, independent of the factors.
pub struct NoiseSource {
    pub dim: usize,
}

impl RepresentationSource for NoiseSource {
    fn represent(
        &mut self,
        _gt: &GroundTruthModel,
        zs: &[FactorVector],
        rng: &mut SeededRng,
    ) -> Result<Vec<Vec<f64>>> {
        Ok(zs
            .iter()
            .map(|_| (0..self.dim).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect())
    }
}

/// The identity representation pushed through a measure-preserving
/// entangler: observationally equivalent to the identity, yet every
/// output coordinate depends on every factor.
///
/// Discrete factor level `v` of cardinality `c` maps to the standard
/// normal quantile of the cell midpoint `(v + 0.5) / c` before the
/// entangler is applied.
pub struct EntangledIdentitySource {
    entangler: HouseholderEntangler,
}

impl EntangledIdentitySource {
    pub fn new(gt: &GroundTruthModel, alpha: f64) -> Result<Self> {
        let k = gt.factor_space().num_factors();
        let entangler = build_entangler(k, alpha, vec![Marginal::StdNormal; k])?;
        Ok(EntangledIdentitySource { entangler })
    }

    pub fn normal_mapped(z: &FactorVector, cardinalities: &[usize]) -> Vec<f64> {
        z.values
            .iter()
            .zip(cardinalities)
            .map(|(&v, &c)| normal_quantile((v as f64 + 0.5) / c as f64))
            .collect()
    }
}

impl RepresentationSource for EntangledIdentitySource {
    fn represent(
        &mut self,
        gt: &GroundTruthModel,
        zs: &[FactorVector],
        _rng: &mut SeededRng,
    ) -> Result<Vec<Vec<f64>>> {
        let cards = gt.factor_space().cardinalities();
        zs.iter()
            .map(|z| {
                let mapped = EntangledIdentitySource::normal_mapped(z, cards);
                self.entangler.apply(&mapped, Direction::Forward)
            })
            .collect()
    }
}
