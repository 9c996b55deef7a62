//! Measure-preserving bijections with dense Jacobians.
//!
//! The map routes each coordinate through its marginal CDF, through the
//! standard-normal quantile, through an orthogonal Householder reflection
//! whose entries are all nonzero, and back. It leaves the product law of
//! the marginals invariant while entangling every output coordinate with
//! every input coordinate.

use super::normal::{normal_cdf, normal_quantile};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// CDF values are clamped into this open interval before the normal
/// quantile; the excluded boundary is a measure-zero set.
const CDF_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    Uniform01,
    StdNormal,
}

impl Marginal {
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Marginal::Uniform01 => x,
            Marginal::StdNormal => normal_cdf(x),
        }
    }

    pub fn quantile(self, p: f64) -> f64 {
        match self {
            Marginal::Uniform01 => p,
            Marginal::StdNormal => normal_quantile(p),
        }
    }

    pub fn in_support(self, x: f64) -> bool {
        match self {
            Marginal::Uniform01 => (0.0..=1.0).contains(&x),
            Marginal::StdNormal => x.is_finite(),
        }
    }

    pub fn sample(self, rng: &mut SeededRng) -> f64 {
        match self {
            Marginal::Uniform01 => rng.gen_range(0.0..1.0),
            Marginal::StdNormal => {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                normal_quantile(u)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HouseholderEntangler {
    dimension: usize,
    alpha: f64,
    v: Vec<f64>,
    /// Row-major `I - 2 v v^T`.
    matrix: Vec<f64>,
    marginals: Vec<Marginal>,
}

/// Construct the entangler for `d >= 2` and `alpha` in the open (0, 0.5).
///
/// The reflection vector has `v_1 = sqrt(alpha)` and
/// `v_i = sqrt((1 - alpha) / (d - 1))` elsewhere, which keeps every entry
/// of the reflection matrix nonzero.
pub fn build_entangler(
    dimension: usize,
    alpha: f64,
    marginals: Vec<Marginal>,
) -> Result<HouseholderEntangler> {
    if dimension < 2 {
        return Err(Error::input("entangler needs dimension >= 2"));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::input(format!(
            "alpha must lie in the open interval (0, 0.5), got {alpha}"
        )));
    }
    if marginals.len() != dimension {
        return Err(Error::input(format!(
            "{} marginals for dimension {dimension}",
            marginals.len()
        )));
    }
    let mut v = vec![((1.0 - alpha) / (dimension - 1) as f64).sqrt(); dimension];
    v[0] = alpha.sqrt();
    let mut matrix = vec![0.0; dimension * dimension];
    for i in 0..dimension {
        for j in 0..dimension {
            let id = f64::from(u8::from(i == j));
            matrix[i * dimension + j] = id - 2.0 * v[i] * v[j];
        }
    }
    Ok(HouseholderEntangler {
        dimension,
        alpha,
        v,
        matrix,
        marginals,
    })
}

impl HouseholderEntangler {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn reflection_vector(&self) -> &[f64] {
        &self.v
    }

    /// Row-major orthogonal matrix `I - 2 v v^T`.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    /// Sup-norm of `A^T A - I`, for orthogonality checks.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dimension;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += self.matrix[k * d + i] * self.matrix[k * d + j];
                }
                let id = f64::from(u8::from(i == j));
                worst = worst.max((acc - id).abs());
            }
        }
        worst
    }

    /// Apply the map (or its inverse) to one point of the support.
    pub fn apply(&self, z: &[f64], direction: Direction) -> Result<Vec<f64>> {
        if z.len() != self.dimension {
            return Err(Error::input(format!(
                "point has {} coordinates, entangler dimension is {}",
                z.len(),
                self.dimension
            )));
        }
        for (i, (&zi, m)) in z.iter().zip(&self.marginals).enumerate() {
            if !m.in_support(zi) {
                return Err(Error::input(format!(
                    "coordinate {i} = {zi} outside the support of its marginal"
                )));
            }
        }
        let h: Vec<f64> = z
            .iter()
            .zip(&self.marginals)
            .map(|(&zi, m)| {
                let p = m.cdf(zi).clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
                normal_quantile(p)
            })
            .collect();
        let d = self.dimension;
        let mut w = vec![0.0; d];
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                // A is symmetric, so forward and inverse share entries
                // transposed; keep the transpose explicit anyway.
                let a = match direction {
                    Direction::Forward => self.matrix[i * d + j],
                    Direction::Inverse => self.matrix[j * d + i],
                };
                acc += a * h[j];
            }
            w[i] = acc;
        }
        Ok(w
            .iter()
            .zip(&self.marginals)
            .map(|(&wi, m)| {
                let p = normal_cdf(wi).clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
                m.quantile(p)
            })
            .collect())
    }

    /// Central-difference Jacobian of the forward map at `z`.
    pub fn empirical_jacobian(&self, z: &[f64], step: f64) -> Result<Vec<f64>> {
        if step <= 0.0 {
            return Err(Error::input("step must be positive"));
        }
        let d = self.dimension;
        // Every perturbed evaluation must stay inside the support.
        for (i, (&zi, m)) in z.iter().zip(&self.marginals).enumerate() {
            let interior = match m {
                Marginal::Uniform01 => zi - step > 0.0 && zi + step < 1.0,
                Marginal::StdNormal => zi.is_finite(),
            };
            if !interior {
                return Err(Error::input(format!(
                    "coordinate {i} = {zi} too close to the support boundary for step {step}"
                )));
            }
        }
        let mut jac = vec![0.0; d * d];
        let mut probe = z.to_vec();
        for j in 0..d {
            probe[j] = z[j] + step;
            let up = self.apply(&probe, Direction::Forward)?;
            probe[j] = z[j] - step;
            let down = self.apply(&probe, Direction::Forward)?;
            probe[j] = z[j];
            for i in 0..d {
                jac[i * d + j] = (up[i] - down[i]) / (2.0 * step);
            }
        }
        Ok(jac)
    }

    /// Draw one point with independent coordinates from the marginals.
    pub fn sample_source(&self, rng: &mut SeededRng) -> Vec<f64> {
        self.marginals.iter().map(|m| m.sample(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn uniform_entangler(d: usize, alpha: f64) -> HouseholderEntangler {
        build_entangler(d, alpha, vec![Marginal::Uniform01; d]).unwrap()
    }

    #[test]
    fn two_dim_quarter_alpha_matches_hand_matrix() {
        // v = (1/2, sqrt(3)/2); A = I - 2vv^T computed by hand.
        let e = uniform_entangler(2, 0.25);
        let v = e.reflection_vector();
        assert!((v[0] - 0.5).abs() < 1e-12);
        assert!((v[1] - 0.8660254037844386).abs() < 1e-12);
        let a = e.matrix();
        let expect = [0.5, -0.8660254037844386, -0.8660254037844386, -0.5];
        for (got, want) in a.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "A = {a:?}");
        }
        assert!(e.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn every_matrix_entry_is_nonzero() {
        for d in [2, 3, 5, 8] {
            for alpha in [0.05, 0.25, 0.45] {
                let e = uniform_entangler(d, alpha);
                assert!(e.matrix().iter().all(|&a| a.abs() > 1e-6));
            }
        }
    }

    #[test]
    fn distinct_alphas_give_distinct_matrices() {
        let a = uniform_entangler(3, 0.2);
        let b = uniform_entangler(3, 0.3);
        assert_ne!(a.matrix(), b.matrix());
    }

    #[test]
    fn alpha_outside_open_interval_is_rejected() {
        for alpha in [0.0, 0.5, -0.1, 0.7] {
            assert!(build_entangler(2, alpha, vec![Marginal::Uniform01; 2]).is_err());
        }
    }

    #[test]
    fn inverse_undoes_forward_on_uniform_draws() {
        let e = uniform_entangler(3, 0.25);
        let mut rng = seeded(14);
        for _ in 0..1000 {
            let z = e.sample_source(&mut rng);
            let w = e.apply(&z, Direction::Forward).unwrap();
            let back = e.apply(&w, Direction::Inverse).unwrap();
            for (b, zi) in back.iter().zip(&z) {
                assert!((b - zi).abs() < 1e-6, "z {z:?} back {back:?}");
            }
        }
    }

    #[test]
    fn standard_normal_marginals_reduce_to_the_linear_map() {
        let e = build_entangler(2, 0.25, vec![Marginal::StdNormal; 2]).unwrap();
        let mut rng = seeded(15);
        let a = e.matrix();
        for _ in 0..200 {
            let z = e.sample_source(&mut rng);
            let w = e.apply(&z, Direction::Forward).unwrap();
            let lin = [a[0] * z[0] + a[1] * z[1], a[2] * z[0] + a[3] * z[1]];
            assert!((w[0] - lin[0]).abs() < 1e-8);
            assert!((w[1] - lin[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn uniform_median_is_a_fixed_point() {
        let e = uniform_entangler(2, 0.25);
        let w = e.apply(&[0.5, 0.5], Direction::Forward).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12);
        assert!((w[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_support_point_is_input_error() {
        let e = uniform_entangler(2, 0.25);
        assert!(e.apply(&[1.5, 0.5], Direction::Forward).is_err());
        assert!(e.apply(&[0.5], Direction::Forward).is_err());
    }

    #[test]
    fn jacobian_dense_at_random_interior_points() {
        let mut rng = seeded(16);
        for d in [2usize, 3] {
            let e = uniform_entangler(d, 0.25);
            for _ in 0..100 {
                let z: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..0.95)).collect();
                let jac = e.empirical_jacobian(&z, 1e-5).unwrap();
                let min_abs = jac.iter().fold(f64::INFINITY, |m, &x| m.min(x.abs()));
                assert!(min_abs > 1e-6, "min |J| = {min_abs} at {z:?}");
            }
        }
    }

    #[test]
    fn jacobian_of_normal_marginals_equals_the_matrix() {
        let e = build_entangler(3, 0.1, vec![Marginal::StdNormal; 3]).unwrap();
        let z = [0.3, -0.8, 1.2];
        let jac = e.empirical_jacobian(&z, 1e-5).unwrap();
        for (j, a) in jac.iter().zip(e.matrix()) {
            assert!((j - a).abs() < 1e-5, "J {jac:?}");
        }
    }

    #[test]
    fn boundary_point_rejected_for_jacobian() {
        let e = uniform_entangler(2, 0.25);
        assert!(e.empirical_jacobian(&[0.999_999_99, 0.5], 1e-5).is_err());
    }
}
