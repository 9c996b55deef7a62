//! Statistical verification that an entangler preserves the source law.

use super::entangler::{Direction, HouseholderEntangler};
use crate::error::{Error, Result};
use crate::learners::stats::ks_statistic;
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};

/// Two-sample KS critical value at significance `alpha` for sizes n, m.
pub fn ks_critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n * m) as f64).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub dimension: usize,
    pub alpha: f64,
    pub samples: usize,
    /// Per-dimension KS statistic between source draws and mapped draws.
    pub ks_per_dimension: Vec<f64>,
    /// Critical value at significance 0.001.
    pub ks_threshold: f64,
    pub ks_pass: bool,
    /// Smallest |J_ij| across the probed interior points.
    pub jacobian_min_abs: f64,
    pub jacobian_points: usize,
    pub jacobian_pass: bool,
    /// Sup-norm error of inverse(forward(z)) over the sample.
    pub roundtrip_max_error: f64,
    /// Sup-norm of A^T A - I.
    pub orthogonality_defect: f64,
}

/// Draw `n` source points, push them through the map, and compare the
/// per-dimension marginals; also probe Jacobian density and roundtrip.
pub fn marginal_invariance_report(
    entangler: &HouseholderEntangler,
    n: usize,
    rng: &mut SeededRng,
) -> Result<InvarianceReport> {
    if n < 1000 {
        return Err(Error::usage("invariance report needs n >= 1000"));
    }
    let d = entangler.dimension();
    let mut source = vec![Vec::with_capacity(n); d];
    let mut mapped = vec![Vec::with_capacity(n); d];
    let mut roundtrip_max_error: f64 = 0.0;
    for _ in 0..n {
        let z = entangler.sample_source(rng);
        let w = entangler.apply(&z, Direction::Forward)?;
        let back = entangler.apply(&w, Direction::Inverse)?;
        for i in 0..d {
            source[i].push(z[i]);
            mapped[i].push(w[i]);
            roundtrip_max_error = roundtrip_max_error.max((back[i] - z[i]).abs());
        }
    }
    let ks_per_dimension: Vec<f64> = (0..d)
        .map(|i| ks_statistic(&source[i], &mapped[i]))
        .collect();
    let ks_threshold = ks_critical_value(0.001, n, n);
    let ks_pass = ks_per_dimension.iter().all(|&k| k < ks_threshold);

    // Jacobian density probe at interior points.
    let jacobian_points = 100;
    let mut jacobian_min_abs = f64::INFINITY;
    use rand::Rng;
    for _ in 0..jacobian_points {
        let z: Vec<f64> = entangler
            .marginals()
            .iter()
            .map(|m| match m {
                super::entangler::Marginal::Uniform01 => rng.gen_range(0.05..0.95),
                super::entangler::Marginal::StdNormal => {
                    super::normal::normal_quantile(rng.gen_range(0.05..0.95))
                }
            })
            .collect();
        let jac = entangler.empirical_jacobian(&z, 1e-5)?;
        for &j in &jac {
            jacobian_min_abs = jacobian_min_abs.min(j.abs());
        }
    }
    let jacobian_pass = jacobian_min_abs > 1e-6;

    Ok(InvarianceReport {
        dimension: d,
        alpha: entangler.alpha(),
        samples: n,
        ks_per_dimension,
        ks_threshold,
        ks_pass,
        jacobian_min_abs,
        jacobian_points,
        jacobian_pass,
        roundtrip_max_error,
        orthogonality_defect: entangler.orthogonality_defect(),
    })
}

/// Energy-distance statistic between two multivariate samples.
pub fn energy_distance(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    fn mean_pairwise(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let mut acc = 0.0;
        for x in a {
            for y in b {
                let mut sq = 0.0;
                for (xi, yi) in x.iter().zip(y) {
                    sq += (xi - yi) * (xi - yi);
                }
                acc += sq.sqrt();
            }
        }
        acc / (a.len() * b.len()) as f64
    }
    2.0 * mean_pairwise(xs, ys) - mean_pairwise(xs, xs) - mean_pairwise(ys, ys)
}

#[cfg(test)]
mod tests {
    use super::super::entangler::{build_entangler, Marginal};
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn uniform_invariance_holds_at_ten_thousand() {
        let e = build_entangler(2, 0.25, vec![Marginal::Uniform01; 2]).unwrap();
        let mut rng = seeded(17);
        let report = marginal_invariance_report(&e, 10_000, &mut rng).unwrap();
        assert!(report.ks_pass);
        assert!(
            report.ks_per_dimension.iter().all(|&k| k < 0.02),
            "ks {:?}",
            report.ks_per_dimension
        );
        assert!(report.jacobian_pass);
        assert!(report.roundtrip_max_error < 1e-6);
    }

    #[test]
    fn self_comparison_has_zero_ks() {
        let xs: Vec<f64> = (0..500).map(|i| i as f64).collect();
        assert_eq!(ks_statistic(&xs, &xs), 0.0);
    }

    /// Negative control: a non-orthogonal matrix in place of the
    /// reflection breaks marginal invariance detectably.
    #[test]
    fn broken_matrix_fails_the_ks_gate() {
        let e = build_entangler(2, 0.25, vec![Marginal::Uniform01; 2]).unwrap();
        let mut rng = seeded(18);
        let n = 10_000;
        // Shear instead of reflect: h -> (h0 + 0.8 h1, h1).
        let mut source = vec![Vec::new(), Vec::new()];
        let mut mapped = vec![Vec::new(), Vec::new()];
        for _ in 0..n {
            let z = e.sample_source(&mut rng);
            let h: Vec<f64> = z
                .iter()
                .map(|&zi| super::super::normal::normal_quantile(zi.clamp(1e-12, 1.0 - 1e-12)))
                .collect();
            let sheared = [h[0] + 0.8 * h[1], h[1]];
            let w: Vec<f64> = sheared
                .iter()
                .map(|&wi| super::super::normal::normal_cdf(wi))
                .collect();
            for i in 0..2 {
                source[i].push(z[i]);
                mapped[i].push(w[i]);
            }
        }
        let ks0 = ks_statistic(&source[0], &mapped[0]);
        let threshold = ks_critical_value(0.001, n, n);
        assert!(ks0 > threshold, "ks0 {ks0} threshold {threshold}");
    }

    /// Joint law (not just marginals) is preserved: the energy-distance
    /// statistic between {z} and {f(z)} is consistent with permutations
    /// drawn under the null.
    #[test]
    fn joint_law_preserved_by_energy_distance() {
        let e = build_entangler(2, 0.25, vec![Marginal::Uniform01; 2]).unwrap();
        let mut rng = seeded(19);
        let n = 5000;
        let mut zs = Vec::with_capacity(n);
        let mut ws = Vec::with_capacity(n);
        for _ in 0..n {
            let z = e.sample_source(&mut rng);
            let w = e.apply(&z, Direction::Forward).unwrap();
            zs.push(z);
            ws.push(w);
        }
        let observed = energy_distance(&zs, &ws);
        // Permutation null: pool and resplit.
        let mut pool: Vec<Vec<f64>> = zs.iter().chain(ws.iter()).cloned().collect();
        let mut null_max = f64::NEG_INFINITY;
        for _ in 0..9 {
            for i in (1..pool.len()).rev() {
                let j = rng.gen_range(0..=i);
                pool.swap(i, j);
            }
            let stat = energy_distance(&pool[..n], &pool[n..]);
            null_max = null_max.max(stat);
        }
        assert!(
            observed <= null_max,
            "observed {observed} exceeds permutation max {null_max}"
        );
    }
}
