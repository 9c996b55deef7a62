//! Stochastic observation variants layered over the deterministic base
//! render. The foreground mask is every pixel with nonzero coverage.
//!
//! Draw order per sample is fixed: color draws three channel scales;
//! noise draws background pixels in row-major order; patch draws the
//! texture offset pair then three channel shifts.

use super::model::Observation;
use crate::error::Result;
use crate::rng::SeededRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Deterministic grayscale render.
    None,
    /// Per-sample channel scales uniform in [0.5, 1].
    Color,
    /// Background filled with i.i.d. uniform noise.
    Noise,
    /// Background from a procedural texture patch, foreground inverted.
    Patch,
}

impl Variant {
    pub fn channels(self) -> usize {
        match self {
            Variant::None | Variant::Noise => 1,
            Variant::Color | Variant::Patch => 3,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::Color => "color",
            Variant::Noise => "noise",
            Variant::Patch => "patch",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "none" => Ok(Variant::None),
            "color" => Ok(Variant::Color),
            "noise" => Ok(Variant::Noise),
            "patch" => Ok(Variant::Patch),
            other => Err(crate::error::Error::config(format!(
                "unknown variant tag '{other}' (expected none|color|noise|patch)"
            ))),
        }
    }
}

/// Side of the virtual texture canvas patches are cut from.
const TEXTURE_CANVAS: usize = 64;

/// Deterministic multi-band texture: per channel, the mean of three
/// sinusoidal plane waves mapped to [0,1].
fn texture_value(x: usize, y: usize, channel: usize) -> f64 {
    // (frequency, direction, phase) triplets per channel.
    const BANDS: [[(f64, f64, f64); 3]; 3] = [
        [(0.55, 0.3, 0.0), (0.23, 1.2, 1.3), (0.91, 2.2, 2.1)],
        [(0.41, 0.8, 0.7), (0.77, 1.9, 0.2), (0.19, 2.7, 1.9)],
        [(0.67, 0.1, 2.5), (0.31, 1.5, 0.9), (0.83, 2.9, 0.4)],
    ];
    let (xf, yf) = (x as f64, y as f64);
    let mut acc = 0.0;
    for &(freq, angle, phase) in &BANDS[channel] {
        let proj = angle.cos() * xf + angle.sin() * yf;
        acc += 0.5 * (1.0 + (freq * proj + phase).sin());
    }
    acc / 3.0
}

/// Apply `variant` to a single-channel base render of side `resolution`.
pub fn apply_variant(
    base: &[f64],
    resolution: usize,
    variant: Variant,
    rng: &mut SeededRng,
) -> Result<Observation> {
    debug_assert_eq!(base.len(), resolution * resolution);
    match variant {
        Variant::None => Observation::new(resolution, resolution, 1, base.to_vec()),
        Variant::Color => {
            let scales: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..1.0)).collect();
            let mut pixels = Vec::with_capacity(base.len() * 3);
            for &p in base {
                for &s in &scales {
                    pixels.push(p * s);
                }
            }
            Observation::new(resolution, resolution, 3, pixels)
        }
        Variant::Noise => {
            let pixels = base
                .iter()
                .map(|&p| if p > 0.0 { p } else { rng.gen_range(0.0..1.0) })
                .collect();
            Observation::new(resolution, resolution, 1, pixels)
        }
        Variant::Patch => {
            let max_off = TEXTURE_CANVAS - resolution;
            let ox = rng.gen_range(0..=max_off);
            let oy = rng.gen_range(0..=max_off);
            let shift: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut pixels = Vec::with_capacity(base.len() * 3);
            for py in 0..resolution {
                for px in 0..resolution {
                    let fg = base[py * resolution + px] > 0.0;
                    for (c, &sh) in shift.iter().enumerate() {
                        let t = (texture_value(px + ox, py + oy, c) + sh) / 2.0;
                        pixels.push(if fg { 1.0 - t } else { t });
                    }
                }
            }
            Observation::new(resolution, resolution, 3, pixels)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::space::FactorVector;
    use crate::factors::sprites::SpriteRenderer;
    use crate::rng::seeded;

    fn base_render() -> (Vec<f64>, usize) {
        let r = SpriteRenderer::default();
        let img = r.render(&FactorVector::new(vec![0, 3, 0, 3, 3])).unwrap();
        (img, r.resolution())
    }

    #[test]
    fn noise_preserves_foreground_exactly() {
        let (base, res) = base_render();
        let mut rng = seeded(7);
        let out = apply_variant(&base, res, Variant::Noise, &mut rng).unwrap();
        for (o, b) in out.pixels.iter().zip(&base) {
            if *b > 0.0 {
                assert_eq!(o, b);
            }
        }
    }

    #[test]
    fn noise_background_mean_is_half() {
        let (base, res) = base_render();
        let mut rng = seeded(8);
        let mut sum = 0.0;
        let mut count = 0usize;
        while count < 100_000 {
            let out = apply_variant(&base, res, Variant::Noise, &mut rng).unwrap();
            for (o, b) in out.pixels.iter().zip(&base) {
                if *b == 0.0 {
                    sum += o;
                    count += 1;
                }
            }
        }
        let mean = sum / count as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn color_ratio_constant_on_foreground_and_in_range() {
        let (base, res) = base_render();
        let mut rng = seeded(9);
        let out = apply_variant(&base, res, Variant::Color, &mut rng).unwrap();
        assert!(out.in_unit_interval());
        let mut ratios: Option<[f64; 3]> = None;
        for (i, &b) in base.iter().enumerate() {
            if b <= 0.0 {
                continue;
            }
            let px = [
                out.pixels[3 * i] / b,
                out.pixels[3 * i + 1] / b,
                out.pixels[3 * i + 2] / b,
            ];
            match ratios {
                None => ratios = Some(px),
                Some(r) => {
                    for c in 0..3 {
                        assert!((px[c] - r[c]).abs() < 1e-12);
                        assert!((0.5..1.0).contains(&px[c]));
                    }
                }
            }
        }
        assert!(ratios.is_some(), "render had no foreground");
    }

    #[test]
    fn patch_inverts_foreground_against_the_patch() {
        let (base, res) = base_render();
        let mut rng = seeded(10);
        let out = apply_variant(&base, res, Variant::Patch, &mut rng).unwrap();
        assert!(out.in_unit_interval());
        // Re-derive the patch with the same draws to check out = 1 - patch
        // on the mask.
        let mut rng2 = seeded(10);
        use rand::Rng;
        let max_off = TEXTURE_CANVAS - res;
        let ox = rng2.gen_range(0..=max_off);
        let oy = rng2.gen_range(0..=max_off);
        let shift: Vec<f64> = (0..3).map(|_| rng2.gen_range(0.0..1.0)).collect();
        for py in 0..res {
            for px in 0..res {
                let i = py * res + px;
                for c in 0..3 {
                    let patch = (texture_value(px + ox, py + oy, c) + shift[c]) / 2.0;
                    let o = out.pixels[3 * i + c];
                    if base[i] > 0.0 {
                        assert!((o - (1.0 - patch)).abs() < 1e-12);
                    } else {
                        assert!((o - patch).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
