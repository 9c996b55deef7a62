//! Procedural "micro-sprites" renderer: a deterministic map from five
//! discrete factors (shape, scale, orientation, x, y) to a small grayscale
//! image. Rasterization supersamples 4x per axis and box-downsamples,
//! giving soft, reproducible edges.

use super::space::{FactorSpace, FactorVector};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const FACTOR_NAMES: [&str; 5] = ["shape", "scale", "orientation", "pos_x", "pos_y"];

const SUPERSAMPLE: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpriteRenderer {
    resolution: usize,
    space: FactorSpace,
}

impl Default for SpriteRenderer {
    fn default() -> Self {
        SpriteRenderer::new(16)
    }
}

impl SpriteRenderer {
    /// Factor grid: shape 3, scale 4, orientation 8, pos-x 8, pos-y 8.
    pub fn new(resolution: usize) -> Self {
        SpriteRenderer {
            resolution,
            space: FactorSpace::new(vec![3, 4, 8, 8, 8]).expect("static grid"),
        }
    }

    pub fn space(&self) -> &FactorSpace {
        &self.space
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Grayscale coverage image in `[0,1]`, row-major, length `res*res`.
    pub fn render(&self, z: &FactorVector) -> Result<Vec<f64>> {
        if !self.space.contains(z) {
            return Err(Error::input(format!(
                "factor vector {:?} outside the sprite grid {:?}",
                z.values,
                self.space.cardinalities()
            )));
        }
        let res = self.resolution as f64;
        let shape = z.values[0];
        // Circumradius from 12.5% to 25% of the image side.
        let radius = res * (0.125 + 0.125 * z.values[1] as f64 / 3.0);
        // Orientations span [0, pi/2): distinct modulo every shape symmetry.
        let theta = z.values[2] as f64 * std::f64::consts::FRAC_PI_2 / 8.0;
        let margin = 0.25 * res;
        let step = (res - 2.0 * margin) / 7.0;
        let cx = margin + z.values[3] as f64 * step;
        let cy = margin + z.values[4] as f64 * step;

        let (sin_t, cos_t) = theta.sin_cos();
        let n = self.resolution * SUPERSAMPLE;
        let sub = 1.0 / SUPERSAMPLE as f64;
        let mut pixels = vec![0.0f64; self.resolution * self.resolution];
        for py in 0..self.resolution {
            for px in 0..self.resolution {
                let mut cover = 0usize;
                for sy in 0..SUPERSAMPLE {
                    for sx in 0..SUPERSAMPLE {
                        let x = px as f64 + (sx as f64 + 0.5) * sub - cx;
                        let y = py as f64 + (sy as f64 + 0.5) * sub - cy;
                        // Rotate into the shape frame.
                        let xr = cos_t * x + sin_t * y;
                        let yr = -sin_t * x + cos_t * y;
                        if inside(shape, xr, yr, radius) {
                            cover += 1;
                        }
                    }
                }
                pixels[py * self.resolution + px] =
                    cover as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64;
            }
        }
        debug_assert!(n == self.resolution * SUPERSAMPLE);
        Ok(pixels)
    }
}

fn inside(shape: usize, x: f64, y: f64, r: f64) -> bool {
    match shape {
        // Square inscribed in the circumradius circle.
        0 => {
            let half = r / std::f64::consts::SQRT_2;
            x.abs() <= half && y.abs() <= half
        }
        // Ellipse with semi-axes (r, 0.6 r).
        1 => {
            let a = x / r;
            let b = y / (0.6 * r);
            a * a + b * b <= 1.0
        }
        // Equilateral triangle, one vertex up, circumradius r.
        2 => {
            let mut vx = [0.0f64; 3];
            let mut vy = [0.0f64; 3];
            for (i, (vxi, vyi)) in vx.iter_mut().zip(vy.iter_mut()).enumerate() {
                let phi = std::f64::consts::FRAC_PI_2
                    + i as f64 * 2.0 * std::f64::consts::FRAC_PI_3;
                *vxi = r * phi.cos();
                *vyi = r * phi.sin();
            }
            for i in 0..3 {
                let j = (i + 1) % 3;
                let cross = (vx[j] - vx[i]) * (y - vy[i]) - (vy[j] - vy[i]) * (x - vx[i]);
                if cross < 0.0 {
                    return false;
                }
            }
            true
        }
        _ => unreachable!("shape cardinality is 3"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn render_is_deterministic() {
        let r = SpriteRenderer::default();
        let z = FactorVector::new(vec![2, 1, 3, 4, 5]);
        let a = r.render(&z).unwrap();
        let b = r.render(&z).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pixels_lie_in_unit_interval_and_shape_is_visible() {
        let r = SpriteRenderer::default();
        for z in [
            FactorVector::new(vec![0, 0, 0, 0, 0]),
            FactorVector::new(vec![1, 3, 7, 7, 7]),
            FactorVector::new(vec![2, 2, 4, 3, 6]),
        ] {
            let img = r.render(&z).unwrap();
            assert!(img.iter().all(|&p| (0.0..=1.0).contains(&p)));
            let mass: f64 = img.iter().sum();
            assert!(mass > 2.0, "sprite too faint: {mass}");
            assert!(mass < (16 * 16) as f64 / 2.0, "sprite fills half the frame");
        }
    }

    #[test]
    fn out_of_range_factor_is_input_error() {
        let r = SpriteRenderer::default();
        assert!(r.render(&FactorVector::new(vec![3, 0, 0, 0, 0])).is_err());
        assert!(r.render(&FactorVector::new(vec![0, 0, 0, 0])).is_err());
    }

    /// Exhaustive injectivity check over all 6144 grid points.
    #[test]
    fn all_default_grid_points_render_distinct_images() {
        let r = SpriteRenderer::default();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        let mut count = 0usize;
        for z in r.space().clone().enumerate() {
            let img = r.render(&z).unwrap();
            let key: Vec<u64> = img.iter().map(|p| p.to_bits()).collect();
            assert!(seen.insert(key), "duplicate image for {:?}", z.values);
            count += 1;
        }
        assert_eq!(count, 6144);
    }
}
