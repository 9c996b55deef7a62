use disentangle::factors::{GroundTruthModel, Variant};
use disentangle::objectives::{train_model, ObjectiveConfig, ObjectiveKind, TrainConfig};
use std::time::Instant;

fn main() {
    let gt = GroundTruthModel::micro_sprites(Variant::None);
    let mut cfg = TrainConfig::desk();
    cfg.steps = 200;
    for kind in [ObjectiveKind::BetaVae, ObjectiveKind::BetaTcVae, ObjectiveKind::FactorVae, ObjectiveKind::DipVaeI] {
        let t0 = Instant::now();
        let obj = ObjectiveConfig::new(kind, kind.sweep_grid()[0]);
        let m = train_model(obj, &cfg, &gt, 1).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!("{kind:?}: 200 steps in {dt:.2}s -> 5000 steps ~ {:.0}s  (recon {:.1})", dt * 25.0, m.final_terms.recon);
    }
}
