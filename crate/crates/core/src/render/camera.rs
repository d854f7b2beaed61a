//! Pinhole camera placed on a sphere around the look-at point.

use serde::{Deserialize, Serialize};

use super::RenderError;
use crate::scene::CameraSettings;

/// Vertical field of view of the raster backend, degrees.
pub const VFOV_DEG: f64 = 50.0;
/// Points closer than this (camera space, meters) are clipped.
pub const NEAR: f64 = 0.05;

pub type Vec3 = [f64; 3];

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn normalize(a: Vec3) -> Vec3 {
    let n = libm::sqrt(dot(a, a));
    scale(a, 1.0 / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub eye: Vec3,
    pub look_at: Vec3,
    pub vfov_deg: f64,
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl CameraPose {
    /// `front_deg` is the azimuth that counts as "in front of the table" for
    /// the game; the configured horizontal angle is added to it.
    pub fn from_settings(s: &CameraSettings, look_at: Vec3, front_deg: f64) -> Result<Self, RenderError> {
        if !(s.angle > 0.0 && s.angle <= 90.0) {
            return Err(RenderError::DegenerateCamera(format!("elevation {}° outside (0, 90]", s.angle)));
        }
        if !(s.distance > 0.0 && s.distance.is_finite()) {
            return Err(RenderError::DegenerateCamera(format!("distance {}", s.distance)));
        }
        let az = (front_deg + s.horizontal_angle).to_radians();
        let el = s.angle.to_radians();
        let (ce, se) = (libm::cos(el), libm::sin(el));
        let (ca, sa) = (libm::cos(az), libm::sin(az));
        let eye = add(look_at, scale([ce * ca, ce * sa, se], s.distance));
        let forward = normalize(sub(look_at, eye));
        // Horizontal right vector stays defined at a top-down elevation.
        let right = [-sa, ca, 0.0];
        let up = cross(right, forward);
        Ok(Self { eye, look_at, vfov_deg: VFOV_DEG, right, up, forward })
    }

    /// Camera-space coordinates: (right, up, depth).
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        let d = sub(p, self.eye);
        [dot(d, self.right), dot(d, self.up), dot(d, self.forward)]
    }

    pub fn depth(&self, p: Vec3) -> f64 {
        dot(sub(p, self.eye), self.forward)
    }
}

/// Camera-space to pixel mapping for one image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projector {
    pub width: f64,
    pub height: f64,
    pub focal: f64,
}

impl Projector {
    pub fn new(width: u32, height: u32, vfov_deg: f64) -> Self {
        let h = f64::from(height);
        Self { width: f64::from(width), height: h, focal: (h / 2.0) / libm::tan((vfov_deg / 2.0).to_radians()) }
    }

    /// Pixel coordinates of a camera-space point in front of the near plane.
    pub fn project(&self, c: Vec3) -> [f64; 2] {
        [self.width / 2.0 + self.focal * c[0] / c[2], self.height / 2.0 - self.focal * c[1] / c[2]]
    }

    /// Ray direction (world) through a pixel position.
    pub fn ray(&self, pose: &CameraPose, u: f64, v: f64) -> Vec3 {
        let x = (u - self.width / 2.0) / self.focal;
        let y = (self.height / 2.0 - v) / self.focal;
        add(pose.forward, add(scale(pose.right, x), scale(pose.up, y)))
    }
}

/// Clip a camera-space polygon against the near plane, then project it.
pub fn clip_project(poly: &[Vec3], proj: &Projector) -> Vec<[f64; 2]> {
    let mut out: Vec<Vec3> = Vec::with_capacity(poly.len() + 2);
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let (ina, inb) = (a[2] >= NEAR, b[2] >= NEAR);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (NEAR - a[2]) / (b[2] - a[2]);
            out.push(add(a, scale(sub(b, a), t)));
        }
    }
    out.iter().map(|&c| proj.project(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(d: f64, el: f64, az: f64) -> CameraSettings {
        CameraSettings { distance: d, angle: el, horizontal_angle: az }
    }

    #[test]
    fn basis_is_orthonormal() {
        for el in [10.0, 55.0, 90.0] {
            let p = CameraPose::from_settings(&settings(3.5, el, 33.0), [0.0, 0.0, 0.9], 0.0).unwrap();
            for v in [p.right, p.up, p.forward] {
                assert!((dot(v, v) - 1.0).abs() < 1e-12);
            }
            assert!(dot(p.right, p.up).abs() < 1e-12);
            assert!(dot(p.right, p.forward).abs() < 1e-12);
            assert!(dot(p.up, p.forward).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_elevation_rejected() {
        assert!(CameraPose::from_settings(&settings(3.5, 0.0, 0.0), [0.0; 3], 0.0).is_err());
    }

    #[test]
    fn look_at_projects_to_center() {
        let p = CameraPose::from_settings(&settings(2.5, 40.0, 0.0), [0.1, 0.2, 0.9], 0.0).unwrap();
        let pr = Projector::new(640, 480, VFOV_DEG);
        let [u, v] = pr.project(p.to_camera(p.look_at));
        assert!((u - 320.0).abs() < 1e-9 && (v - 240.0).abs() < 1e-9);
    }
}
