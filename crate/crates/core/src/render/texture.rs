//! Table-top texture from hashed value noise.
//!
//! Low entropy is a flat color, medium a single noise tint, high several
//! octaves plus a fake bump term from the noise gradient.

use crate::scene::{TableTexture, TextureLevel};
use crate::seed::mix64;

#[derive(Debug, Clone, PartialEq)]
pub struct TextureParams {
    pub base: [f64; 3],
    pub level: TextureLevel,
    pub kind: TableTexture,
    pub seed: u64,
}

fn lattice(ix: i64, iy: i64, seed: u64) -> f64 {
    let h = mix64(seed ^ mix64((ix as u64).wrapping_mul(0x9E37_79B9) ^ (iy as u64).wrapping_shl(32)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Bilinear value noise in [0, 1).
pub fn value_noise(x: f64, y: f64, seed: u64) -> f64 {
    let (fx, fy) = (libm::floor(x), libm::floor(y));
    let (ix, iy) = (fx as i64, fy as i64);
    let (tx, ty) = (smooth(x - fx), smooth(y - fy));
    let a = lattice(ix, iy, seed);
    let b = lattice(ix + 1, iy, seed);
    let c = lattice(ix, iy + 1, seed);
    let d = lattice(ix + 1, iy + 1, seed);
    let top = a + (b - a) * tx;
    let bottom = c + (d - c) * tx;
    top + (bottom - top) * ty
}

impl TextureParams {
    /// Anisotropic frequencies per material (wood is grained along x).
    fn freq(&self) -> (f64, f64) {
        match self.kind {
            TableTexture::Wood => (3.0, 24.0),
            TableTexture::Marble => (6.0, 6.0),
            TableTexture::Metal => (40.0, 2.0),
        }
    }

    pub fn shade(&self, x: f64, y: f64) -> f64 {
        let (fx, fy) = self.freq();
        match self.level {
            TextureLevel::Low => 1.0,
            TextureLevel::Medium => 1.0 + 0.24 * (value_noise(x * fx, y * fy, self.seed) - 0.5),
            TextureLevel::High => {
                let mut n = 0.0;
                let mut amp = 0.5;
                let mut k = 1.0;
                for octave in 0..4u64 {
                    n += amp * (value_noise(x * fx * k, y * fy * k, self.seed.wrapping_add(octave)) - 0.5);
                    amp *= 0.5;
                    k *= 2.0;
                }
                let e = 0.01;
                let g = value_noise((x + e) * fx * 4.0, y * fy * 4.0, self.seed ^ 0xB0)
                    - value_noise(x * fx * 4.0, y * fy * 4.0, self.seed ^ 0xB0);
                1.0 + 0.6 * n + 2.0 * g
            }
        }
    }

    pub fn color_at(&self, x: f64, y: f64) -> [u8; 4] {
        let s = self.shade(x, y);
        let q = |c: f64| (c * s).clamp(0.0, 1.0) * 255.0;
        [
            libm::round(q(self.base[0])) as u8,
            libm::round(q(self.base[1])) as u8,
            libm::round(q(self.base[2])) as u8,
            255,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_bounded_and_continuous() {
        for i in 0..200 {
            let x = i as f64 * 0.173;
            let v = value_noise(x, 1.3 * x, 7);
            assert!((0.0..1.0).contains(&v));
            let w = value_noise(x + 1e-6, 1.3 * x, 7);
            assert!((v - w).abs() < 1e-4);
        }
    }

    #[test]
    fn low_level_is_flat() {
        let p = TextureParams { base: [0.6, 0.5, 0.4], level: TextureLevel::Low, kind: TableTexture::Wood, seed: 3 };
        assert_eq!(p.color_at(0.1, 0.2), p.color_at(0.7, -0.3));
    }
}
