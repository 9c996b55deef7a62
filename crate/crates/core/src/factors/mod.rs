//! Ground-truth generative models: discrete factor grids, the procedural
//! micro-sprites renderer, stochastic observation variants, intervention
//! sampling, and external representation tables.

pub mod model;
pub mod npy;
pub mod space;
pub mod sprites;
pub mod table;
pub mod variants;

pub use model::{DatasetSpec, GroundTruthModel, Observation};
pub use space::{FactorSpace, FactorVector};
pub use sprites::{SpriteRenderer, FACTOR_NAMES};
pub use table::{export_external_table, load_external_table, parse_external_table, ExternalTable};
pub use variants::{apply_variant, Variant};
