//! Image-space degradations: Gaussian blur and brightness.

use super::raster::RasterImage;
use crate::scene::ResolvedNoise;

/// Blur strength in pixels for an f-stop at this image size.
pub fn blur_sigma(width: u32, height: u32, fstop: f64) -> f64 {
    f64::from(width.min(height)) / (100.0 * fstop)
}

fn kernel(sigma: f64) -> Vec<f64> {
    let r = libm::ceil(3.0 * sigma).max(1.0) as usize;
    let mut k: Vec<f64> = (0..=2 * r)
        .map(|i| {
            let x = i as f64 - r as f64;
            libm::exp(-x * x / (2.0 * sigma * sigma))
        })
        .collect();
    let s: f64 = k.iter().sum();
    for w in &mut k {
        *w /= s;
    }
    k
}

/// Half-sample symmetric reflection; keeps the image sum under a symmetric
/// kernel.
fn reflect(i: i64, n: i64) -> usize {
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Separable Gaussian on the color channels; alpha is left alone.
pub fn gaussian_blur(img: &RasterImage, sigma: f64) -> RasterImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    let k = kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h) = (img.width as usize, img.height as usize);
    let mut tmp = vec![0.0f64; 3 * w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (j, kw) in k.iter().enumerate() {
                let sx = reflect(x as i64 + j as i64 - r, w as i64);
                let p = 4 * (y * w + sx);
                for c in 0..3 {
                    acc[c] += kw * f64::from(img.pixels[p + c]);
                }
            }
            tmp[3 * (y * w + x)..3 * (y * w + x) + 3].copy_from_slice(&acc);
        }
    }
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (j, kw) in k.iter().enumerate() {
                let sy = reflect(y as i64 + j as i64 - r, h as i64);
                let p = 3 * (sy * w + x);
                for c in 0..3 {
                    acc[c] += kw * tmp[p + c];
                }
            }
            let p = 4 * (y * w + x);
            for c in 0..3 {
                out.pixels[p + c] = libm::round(acc[c]).clamp(0.0, 255.0) as u8;
            }
        }
    }
    out
}

/// Multiply color channels and clamp to 255.
pub fn brighten(img: &RasterImage, m: f64) -> RasterImage {
    let mut out = img.clone();
    for px in out.pixels.chunks_exact_mut(4) {
        for c in &mut px[..3] {
            *c = libm::round(f64::from(*c) * m).clamp(0.0, 255.0) as u8;
        }
    }
    out
}

pub fn apply_noise(img: &RasterImage, noise: &ResolvedNoise) -> RasterImage {
    let mut out = match noise.blur_fstop {
        Some(f) => gaussian_blur(img, blur_sigma(img.width, img.height, f)),
        None => img.clone(),
    };
    if let Some(m) = noise.lighting {
        if m != 1.0 {
            out = brighten(&out, m);
        }
    }
    out
}

/// Sum of squared 4-neighbour Laplacian responses on luma.
pub fn high_frequency_energy(img: &RasterImage) -> f64 {
    let (w, h) = (img.width as usize, img.height as usize);
    let luma: Vec<f64> = img
        .pixels
        .chunks_exact(4)
        .map(|p| 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
        .collect();
    let mut e = 0.0;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let c = luma[y * w + x];
            let l = luma[y * w + x - 1] + luma[y * w + x + 1] + luma[(y - 1) * w + x] + luma[(y + 1) * w + x] - 4.0 * c;
            e += l * l;
        }
    }
    e
}
