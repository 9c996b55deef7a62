//! The six objectives and their one-hyperparameter sweep grids.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    BetaVae,
    AnnealedVae,
    FactorVae,
    BetaTcVae,
    DipVaeI,
    DipVaeII,
}

impl ObjectiveKind {
    pub fn all() -> [ObjectiveKind; 6] {
        [
            ObjectiveKind::BetaVae,
            ObjectiveKind::AnnealedVae,
            ObjectiveKind::FactorVae,
            ObjectiveKind::BetaTcVae,
            ObjectiveKind::DipVaeI,
            ObjectiveKind::DipVaeII,
        ]
    }

    pub fn tag(self) -> &'static str {
        match self {
            ObjectiveKind::BetaVae => "beta_vae",
            ObjectiveKind::AnnealedVae => "annealed_vae",
            ObjectiveKind::FactorVae => "factor_vae",
            ObjectiveKind::BetaTcVae => "beta_tcvae",
            ObjectiveKind::DipVaeI => "dip_vae_i",
            ObjectiveKind::DipVaeII => "dip_vae_ii",
        }
    }

    pub fn parse(tag: &str) -> crate::Result<Self> {
        ObjectiveKind::all()
            .into_iter()
            .find(|k| k.tag() == tag)
            .ok_or_else(|| crate::Error::config(format!("unknown objective '{tag}'")))
    }

    /// Name of the single swept hyperparameter.
    pub fn hyperparameter_name(self) -> &'static str {
        match self {
            ObjectiveKind::BetaVae | ObjectiveKind::BetaTcVae => "beta",
            ObjectiveKind::AnnealedVae => "c_max",
            ObjectiveKind::FactorVae => "gamma",
            ObjectiveKind::DipVaeI | ObjectiveKind::DipVaeII => "lambda_od",
        }
    }

    /// The fixed six-value sweep grid for this objective.
    pub fn sweep_grid(self) -> [f64; 6] {
        match self {
            ObjectiveKind::BetaVae => [1.0, 2.0, 4.0, 6.0, 8.0, 16.0],
            ObjectiveKind::AnnealedVae => [5.0, 10.0, 25.0, 50.0, 75.0, 100.0],
            ObjectiveKind::FactorVae => [10.0, 20.0, 30.0, 40.0, 50.0, 100.0],
            ObjectiveKind::BetaTcVae => [1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            ObjectiveKind::DipVaeI | ObjectiveKind::DipVaeII => {
                [1.0, 2.0, 5.0, 10.0, 20.0, 50.0]
            }
        }
    }
}

/// One objective choice with its swept hyperparameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    /// beta, c_max, gamma, or lambda_od depending on `kind`.
    pub value: f64,
}

/// Capacity-annealing weight fixed across the sweep.
pub const ANNEALED_GAMMA: f64 = 1000.0;

/// Annealing threshold as a fraction of total steps (100000 of 300000 at
/// reference scale).
pub const ANNEALED_THRESHOLD_FRACTION: f64 = 1.0 / 3.0;

impl ObjectiveConfig {
    pub fn new(kind: ObjectiveKind, value: f64) -> Self {
        ObjectiveConfig { kind, value }
    }

    /// Diagonal weight for the DIP penalties: 10x off-diagonal for mode I,
    /// equal for mode II.
    pub fn lambda_d(&self) -> f64 {
        match self.kind {
            ObjectiveKind::DipVaeI => 10.0 * self.value,
            ObjectiveKind::DipVaeII => self.value,
            _ => 0.0,
        }
    }
}
