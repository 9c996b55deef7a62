//! Where representations come from: a trained encoder over rendered
//! observations, or synthetic oracles computed straight from the factors.

use crate::error::Result;
use crate::factors::{FactorVector, GroundTruthModel, Variant};
use crate::objectives::{observations_to_matrix, RepresentationMode, VaeModel};
use crate::rng::SeededRng;

/// Produces one representation vector per ground-truth point.
pub trait RepresentationSource {
    /// Representations for a batch of factor vectors. Implementations
    /// that need pixels render them; oracle sources read the factors.
    fn represent(
        &mut self,
        gt: &GroundTruthModel,
        zs: &[FactorVector],
        rng: &mut SeededRng,
    ) -> Result<Vec<Vec<f64>>>;
}

/// Trained encoder as a representation source.
///
/// For the deterministic variant the base render is cached per grid
/// point, and mean-mode representations are cached as well; stochastic
/// variants re-render every draw.
pub struct TrainedSource<'a> {
    model: &'a VaeModel,
    mode: RepresentationMode,
    pixel_cache: Vec<Option<Vec<f64>>>,
    rep_cache: Vec<Option<Vec<f64>>>,
}

impl<'a> TrainedSource<'a> {
    pub fn new(model: &'a VaeModel, mode: RepresentationMode, gt: &GroundTruthModel) -> Self {
        let cache_len = if gt.variant() == Variant::None {
            gt.factor_space().grid_size()
        } else {
            0
        };
        TrainedSource {
            model,
            mode,
            pixel_cache: vec![None; cache_len],
            rep_cache: vec![
                None;
                if cache_len > 0 {
                    cache_len
                } else {
                    0
                }
            ],
        }
    }
}

impl RepresentationSource for TrainedSource<'_> {
    fn represent(
        &mut self,
        gt: &GroundTruthModel,
        zs: &[FactorVector],
        rng: &mut SeededRng,
    ) -> Result<Vec<Vec<f64>>> {
        let cacheable = !self.pixel_cache.is_empty();
        let mean_cached = cacheable && self.mode == RepresentationMode::Mean;
        let mut out: Vec<Option<Vec<f64>>> = vec![None; zs.len()];
        let mut todo_rows: Vec<usize> = Vec::new();
        let mut todo_pixels: Vec<Vec<f64>> = Vec::new();
        for (row, z) in zs.iter().enumerate() {
            let idx = gt.factor_space().linear_index(z);
            if mean_cached {
                if let Some(r) = &self.rep_cache[idx] {
                    out[row] = Some(r.clone());
                    continue;
                }
            }
            let pixels = if cacheable {
                match &self.pixel_cache[idx] {
                    Some(p) => p.clone(),
                    None => {
                        let p = gt.render_base(z)?;
                        self.pixel_cache[idx] = Some(p.clone());
                        p
                    }
                }
            } else {
                gt.render(z, rng)?.pixels
            };
            todo_rows.push(row);
            todo_pixels.push(pixels);
        }
        if !todo_rows.is_empty() {
            let obs: Vec<crate::factors::Observation> = todo_pixels
                .into_iter()
                .map(|p| {
                    let len = p.len();
                    crate::factors::Observation::new(1, len, 1, p).expect("flat")
                })
                .collect();
            let matrix = observations_to_matrix(&obs)?;
            let reps = self
                .model
                .representation_batch(&matrix, self.mode, Some(rng))?;
            for (&row, rep) in todo_rows.iter().zip(reps) {
                if mean_cached {
                    let idx = gt.factor_space().linear_index(&zs[row]);
                    self.rep_cache[idx] = Some(rep.clone());
                }
                out[row] = Some(rep);
            }
        }
        Ok(out.into_iter().map(|r| r.expect("filled")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::super::oracles::IdentitySource;
    use super::*;
    use crate::objectives::{train_model, ObjectiveConfig, ObjectiveKind, TrainConfig};
    use crate::rng::seeded;

    #[test]
    fn cached_and_uncached_mean_representations_agree() {
        let gt = GroundTruthModel::micro_sprites(Variant::None);
        let cfg = TrainConfig {
            latent_dim: 3,
            encoder_hidden: vec![8],
            decoder_hidden: vec![8],
            discriminator_hidden: vec![8],
            batch_size: 4,
            steps: 2,
            trace_every: 1,
        };
        let trained = train_model(
            ObjectiveConfig::new(ObjectiveKind::BetaVae, 1.0),
            &cfg,
            &gt,
            2,
        )
        .unwrap();
        let mut rng = seeded(90);
        let zs = gt.sample_factors(50, &mut rng);
        let mut source = TrainedSource::new(&trained.model, RepresentationMode::Mean, &gt);
        let first = source.represent(&gt, &zs, &mut rng).unwrap();
        let second = source.represent(&gt, &zs, &mut rng).unwrap();
        assert_eq!(first, second);
        // Direct (uncached) path.
        for (z, r) in zs.iter().zip(&first) {
            let x = gt.render(z, &mut rng).unwrap();
            let direct = trained
                .model
                .representation(&x, RepresentationMode::Mean, None)
                .unwrap();
            for (a, b) in r.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_source_returns_the_factors() {
        let gt = GroundTruthModel::micro_sprites(Variant::None);
        let mut rng = seeded(91);
        let zs = gt.sample_factors(10, &mut rng);
        let mut source = IdentitySource;
        let reps = source.represent(&gt, &zs, &mut rng).unwrap();
        for (z, r) in zs.iter().zip(&reps) {
            let expect: Vec<f64> = z.values.iter().map(|&v| v as f64).collect();
            assert_eq!(r, &expect);
        }
    }
}
