//! Executable entanglement construction: bijections that preserve a
//! factorized law while making every output depend on every input.

pub mod entangler;
pub mod normal;
pub mod report;

pub use entangler::{build_entangler, Direction, HouseholderEntangler, Marginal};
pub use normal::{normal_cdf, normal_pdf, normal_quantile};
pub use report::{
    energy_distance, ks_critical_value, marginal_invariance_report, InvarianceReport,
};
