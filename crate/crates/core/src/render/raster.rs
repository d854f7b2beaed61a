//! Supersampled scanline polygon fill with integer alpha blending.
//!
//! Sample (i, j) of pixel (x, y) sits at `x + (i + 0.5)/ss`, so sample
//! positions depend only on the image size and supersampling factor.

use serde::{Deserialize, Serialize};

use super::camera::{add, scale, CameraPose, Projector, Vec3};
use super::texture::TextureParams;
use super::RenderError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Polygon,
    Disk,
    Glyph,
    RoundedRect,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Paint {
    Solid([u8; 4]),
    /// Per-sample table texture evaluated on the table plane.
    Table(Box<TableTexturePaint>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableTexturePaint {
    pub pose: CameraPose,
    pub projector: Projector,
    pub plane_z: f64,
    pub params: TextureParams,
}

/// One filled shape in pixel coordinates. Contours are unioned.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePrimitive {
    pub shape: ShapeKind,
    pub contours: Vec<Vec<[f64; 2]>>,
    pub layer: u8,
    /// Camera-space depth of the object's anchor.
    pub depth: f64,
    /// Painter key within a layer, ascending = drawn first.
    pub order: f64,
    pub seq: u32,
    pub fill: Paint,
    pub outline: Option<[u8; 4]>,
    /// Legend object this primitive belongs to, e.g. `piece/3`.
    pub object: Option<String>,
}

impl ScenePrimitive {
    pub fn bbox(&self) -> Option<[f64; 4]> {
        let mut it = self.contours.iter().flatten();
        let first = it.next()?;
        Some(it.fold([first[0], first[1], first[0], first[1]], |b, p| {
            [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])]
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    /// RGBA8, row-major.
    pub pixels: Vec<u8>,
}

impl RasterImage {
    pub fn filled(width: u32, height: u32, color: [u8; 4]) -> Self {
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(4 * n);
        for _ in 0..n {
            pixels.extend_from_slice(&color);
        }
        Self { width, height, pixels }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let i = 4 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2], self.pixels[i + 3]]
    }
}

/// Painter order: layer, then key, then emission sequence.
pub fn sort_primitives(prims: &mut [ScenePrimitive]) {
    prims.sort_by(|a, b| {
        a.layer
            .cmp(&b.layer)
            .then(a.order.total_cmp(&b.order))
            .then(a.seq.cmp(&b.seq))
    });
}

fn blend(dst: &mut [u8], src: [u8; 4]) {
    let a = u32::from(src[3]);
    if a == 255 {
        dst[..3].copy_from_slice(&src[..3]);
    } else if a > 0 {
        for c in 0..3 {
            dst[c] = ((u32::from(src[c]) * a + u32::from(dst[c]) * (255 - a) + 127) / 255) as u8;
        }
    }
    dst[3] = 255;
}

/// Coverage mask of a primitive over its sample-space bounding box.
struct Mask {
    x0: i64,
    y0: i64,
    w: usize,
    h: usize,
    bits: Vec<bool>,
}

impl Mask {
    fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.w + x]
    }

    fn dilate(&self, r: usize) -> Mask {
        // Grow the box so the outline can extend outside the fill.
        let (w, h) = (self.w + 2 * r, self.h + 2 * r);
        let mut src = vec![false; w * h];
        for y in 0..self.h {
            for x in 0..self.w {
                src[(y + r) * w + x + r] = self.get(x, y);
            }
        }
        let mut rows = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                let lo = x.saturating_sub(r);
                let hi = (x + r).min(w - 1);
                rows[y * w + x] = (lo..=hi).any(|k| src[y * w + k]);
            }
        }
        let mut out = vec![false; w * h];
        for y in 0..h {
            let lo = y.saturating_sub(r);
            let hi = (y + r).min(h - 1);
            for x in 0..w {
                out[y * w + x] = (lo..=hi).any(|k| rows[k * w + x]);
            }
        }
        Mask { x0: self.x0 - r as i64, y0: self.y0 - r as i64, w, h, bits: out }
    }
}

fn coverage(contours: &[Vec<[f64; 2]>], ss: f64, sw: i64, sh: i64) -> Option<Mask> {
    let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in contours.iter().flatten() {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return None;
        }
        bb = [bb[0].min(p[0]), bb[1].min(p[1]), bb[2].max(p[0]), bb[3].max(p[1])];
    }
    if !bb[0].is_finite() {
        return None;
    }
    let x0 = ((bb[0] * ss).floor() as i64).clamp(0, sw);
    let x1 = ((bb[2] * ss).ceil() as i64 + 1).clamp(0, sw);
    let y0 = ((bb[1] * ss).floor() as i64).clamp(0, sh);
    let y1 = ((bb[3] * ss).ceil() as i64 + 1).clamp(0, sh);
    if x1 <= x0 || y1 <= y0 {
        return None;
    }
    let (w, h) = ((x1 - x0) as usize, (y1 - y0) as usize);
    let mut bits = vec![false; w * h];
    let mut xs: Vec<f64> = Vec::new();
    for contour in contours {
        let n = contour.len();
        if n < 3 {
            continue;
        }
        for row in 0..h {
            let sy = (y0 + row as i64) as f64 + 0.5;
            xs.clear();
            for i in 0..n {
                let (a, b) = (contour[i], contour[(i + 1) % n]);
                let (ay, by) = (a[1] * ss, b[1] * ss);
                if (ay <= sy && sy < by) || (by <= sy && sy < ay) {
                    let t = (sy - ay) / (by - ay);
                    xs.push(a[0] * ss + t * (b[0] * ss - a[0] * ss));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                // samples whose center lies in [xa, xb)
                let lo = ((pair[0] - 0.5).ceil() as i64).max(x0);
                let hi = ((pair[1] - 0.5).ceil() as i64).min(x1);
                for sx in lo..hi {
                    bits[row * w + (sx - x0) as usize] = true;
                }
            }
        }
    }
    Some(Mask { x0, y0, w, h, bits })
}

pub struct RasterParams {
    pub width: u32,
    pub height: u32,
    pub supersample: u32,
    pub background: [u8; 4],
    /// Outline thickness in output pixels.
    pub outline_px: f64,
}

/// Fill all primitives in order into a supersampled buffer, then box-filter
/// down to the output size.
pub fn rasterize(prims: &[ScenePrimitive], p: &RasterParams) -> Result<RasterImage, RenderError> {
    if p.width == 0 || p.height == 0 {
        return Err(RenderError::ZeroArea { width: p.width, height: p.height });
    }
    let ss = p.supersample.max(1);
    let (sw, sh) = (i64::from(p.width * ss), i64::from(p.height * ss));
    let ssf = f64::from(ss);
    let mut buf = RasterImage::filled(p.width * ss, p.height * ss, p.background);
    let r_outline = (p.outline_px * ssf).round().max(1.0) as usize;

    for prim in prims {
        let Some(mask) = coverage(&prim.contours, ssf, sw, sh) else { continue };
        if let Some(oc) = prim.outline {
            let grown = mask.dilate(r_outline);
            for y in 0..grown.h {
                let sy = grown.y0 + y as i64;
                if sy < 0 || sy >= sh {
                    continue;
                }
                for x in 0..grown.w {
                    let sx = grown.x0 + x as i64;
                    if sx < 0 || sx >= sw || !grown.get(x, y) {
                        continue;
                    }
                    let (mx, my) = (sx - mask.x0, sy - mask.y0);
                    let inside = mx >= 0
                        && my >= 0
                        && (mx as usize) < mask.w
                        && (my as usize) < mask.h
                        && mask.get(mx as usize, my as usize);
                    if !inside {
                        let i = 4 * (sy as usize * sw as usize + sx as usize);
                        blend(&mut buf.pixels[i..i + 4], oc);
                    }
                }
            }
        }
        for y in 0..mask.h {
            let sy = mask.y0 + y as i64;
            for x in 0..mask.w {
                if !mask.get(x, y) {
                    continue;
                }
                let sx = mask.x0 + x as i64;
                let color = match &prim.fill {
                    Paint::Solid(c) => *c,
                    Paint::Table(t) => table_sample(t, (sx as f64 + 0.5) / ssf, (sy as f64 + 0.5) / ssf),
                };
                let i = 4 * (sy as usize * sw as usize + sx as usize);
                blend(&mut buf.pixels[i..i + 4], color);
            }
        }
    }
    Ok(downsample(&buf, ss))
}

fn table_sample(t: &TableTexturePaint, u: f64, v: f64) -> [u8; 4] {
    let dir = t.projector.ray(&t.pose, u, v);
    let world: Vec3 = if dir[2].abs() < 1e-12 {
        t.pose.look_at
    } else {
        let k = (t.plane_z - t.pose.eye[2]) / dir[2];
        add(t.pose.eye, scale(dir, k))
    };
    t.params.color_at(world[0], world[1])
}

fn downsample(buf: &RasterImage, ss: u32) -> RasterImage {
    if ss == 1 {
        return buf.clone();
    }
    let (w, h) = (buf.width / ss, buf.height / ss);
    let n = ss * ss;
    let mut pixels = vec![0u8; 4 * w as usize * h as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0u32; 4];
            for j in 0..ss {
                for i in 0..ss {
                    let px = buf.pixel(x * ss + i, y * ss + j);
                    for c in 0..4 {
                        acc[c] += u32::from(px[c]);
                    }
                }
            }
            let o = 4 * (y as usize * w as usize + x as usize);
            for c in 0..4 {
                pixels[o + c] = ((acc[c] + n / 2) / n) as u8;
            }
        }
    }
    RasterImage { width: w, height: h, pixels }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64, c: [u8; 4]) -> ScenePrimitive {
        ScenePrimitive {
            shape: ShapeKind::Polygon,
            contours: vec![vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]],
            layer: 0,
            depth: 1.0,
            order: 0.0,
            seq: 0,
            fill: Paint::Solid(c),
            outline: None,
            object: None,
        }
    }

    fn params(w: u32, h: u32) -> RasterParams {
        RasterParams { width: w, height: h, supersample: 2, background: [10, 20, 30, 255], outline_px: 1.0 }
    }

    #[test]
    fn empty_list_is_background() {
        let img = rasterize(&[], &params(16, 8)).unwrap();
        assert!(img.pixels.chunks(4).all(|p| p == [10, 20, 30, 255]));
        assert_eq!(img.pixels.len(), 4 * 16 * 8);
    }

    #[test]
    fn full_frame_rect_covers_everything() {
        let img = rasterize(&[rect(0.0, 0.0, 16.0, 8.0, [200, 100, 50, 255])], &params(16, 8)).unwrap();
        assert!(img.pixels.chunks(4).all(|p| p == [200, 100, 50, 255]));
    }

    #[test]
    fn half_covered_pixel_is_averaged() {
        let img = rasterize(&[rect(0.0, 0.0, 0.5, 1.0, [255, 255, 255, 255])], &params(1, 1)).unwrap();
        // two of four samples white over (10, 20, 30)
        assert_eq!(img.pixel(0, 0), [133, 138, 143, 255]);
    }

    #[test]
    fn zero_area_rejected() {
        assert!(rasterize(&[], &params(0, 8)).is_err());
    }
}
