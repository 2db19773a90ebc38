use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{IMAGE_HEIGHT, IMAGE_WIDTH, VIEW_COUNT};

/// Pinhole camera: world→camera rotation and translation plus intrinsics.
///
/// Camera axes are x right, y down, z forward, so pixel `v` grows downward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub view_id: usize,
    /// Azimuth of the camera on the ring, radians.
    pub theta: f64,
    /// Row-major world→camera rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    /// `(f_x, f_y)` in pixels.
    pub focal: [f64; 2],
    /// `(c_x, c_y)` in pixels.
    pub principal: [f64; 2],
    /// `(width, height)` in pixels.
    pub image_size: [u32; 2],
}

/// A back-projected viewing ray in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: [f64; 3],
    /// Unit direction.
    pub direction: [f64; 3],
}

impl CameraConfig {
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let r = &self.rotation;
        Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rotation_matrix();
        let defect = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(defect < 1e-9) {
            return Err(Error::config(format!(
                "camera {} rotation is not orthonormal (|RᵀR - I| = {defect:e})",
                self.view_id
            )));
        }
        if r.determinant() < 0.0 {
            return Err(Error::config(format!(
                "camera {} rotation is a reflection",
                self.view_id
            )));
        }
        let [fx, fy] = self.focal;
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::config(format!(
                "camera {} focal lengths must be positive",
                self.view_id
            )));
        }
        let [w, h] = self.image_size;
        let [cx, cy] = self.principal;
        if !(cx >= 0.0 && cx < w as f64 && cy >= 0.0 && cy < h as f64) {
            return Err(Error::config(format!(
                "camera {} principal point ({cx}, {cy}) lies outside the {w}x{h} image",
                self.view_id
            )));
        }
        if self.translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::config(format!(
                "camera {} translation is not finite",
                self.view_id
            )));
        }
        Ok(())
    }

    /// Camera centre in world coordinates, `-Rᵀ t`.
    pub fn center(&self) -> [f64; 3] {
        let c = -(self.rotation_matrix().transpose() * Vector3::from(self.translation));
        [c.x, c.y, c.z]
    }

    pub fn world_to_camera(&self, p: &[f64; 3]) -> [f64; 3] {
        let c = self.rotation_matrix() * Vector3::from(*p) + Vector3::from(self.translation);
        [c.x, c.y, c.z]
    }

    /// Pixel coordinates of a world point: `u = f_x x/z + c_x`,
    /// `v = f_y y/z + c_y` in the camera frame.
    pub fn project_point(&self, p: &[f64; 3]) -> Result<[f64; 2]> {
        let [x, y, z] = self.world_to_camera(p);
        if !(z > 0.0) {
            return Err(Error::BehindCamera {
                view_id: self.view_id,
                depth: z,
            });
        }
        Ok([
            self.focal[0] * (x / z) + self.principal[0],
            self.focal[1] * (y / z) + self.principal[1],
        ])
    }

    /// Normalized ray coordinates `((u - c_x)/f_x, (v - c_y)/f_y)`.
    pub fn normalized(&self, uv: &[f64; 2]) -> [f64; 2] {
        [
            (uv[0] - self.principal[0]) / self.focal[0],
            (uv[1] - self.principal[1]) / self.focal[1],
        ]
    }

    /// World ray through pixel `uv`.
    pub fn back_project(&self, uv: &[f64; 2]) -> Ray {
        let [a, b] = self.normalized(uv);
        let d = self.rotation_matrix().transpose() * Vector3::new(a, b, 1.0);
        let d = d / d.norm();
        Ray {
            origin: self.center(),
            direction: [d.x, d.y, d.z],
        }
    }

    pub fn contains_pixel(&self, uv: &[f64; 2]) -> bool {
        let [w, h] = self.image_size;
        uv[0] >= 0.0 && uv[0] <= w as f64 && uv[1] >= 0.0 && uv[1] <= h as f64
    }
}

/// Evenly spaced cameras on a horizontal circle, all aimed at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RingLayout {
    pub count: usize,
    /// Ring centre in the ground plane.
    pub center: [f64; 2],
    pub radius: f64,
    pub height: f64,
    pub look_at: [f64; 3],
    pub focal: f64,
    pub image_size: [u32; 2],
}

impl Default for RingLayout {
    fn default() -> Self {
        Self {
            count: VIEW_COUNT,
            center: [2.0, 2.0],
            radius: 7.0,
            height: 2.5,
            look_at: [2.0, 2.0, 1.0],
            focal: 850.0,
            image_size: [IMAGE_WIDTH, IMAGE_HEIGHT],
        }
    }
}

impl RingLayout {
    pub fn cameras(&self) -> Result<Vec<CameraConfig>> {
        if self.count < 3 {
            return Err(Error::config("a camera ring needs at least 3 views"));
        }
        let step = std::f64::consts::TAU / self.count as f64;
        let target = Vector3::from(self.look_at);
        let up = Vector3::new(0.0, 0.0, 1.0);
        let cams = (0..self.count)
            .map(|k| {
                let theta = k as f64 * step;
                let eye = Vector3::new(
                    self.center[0] + self.radius * theta.cos(),
                    self.center[1] + self.radius * theta.sin(),
                    self.height,
                );
                let forward = (target - eye).normalize();
                let right = forward.cross(&up).normalize();
                let down = forward.cross(&right);
                let t = -Vector3::new(right.dot(&eye), down.dot(&eye), forward.dot(&eye));
                let cam = CameraConfig {
                    view_id: k,
                    theta,
                    rotation: [
                        [right.x, right.y, right.z],
                        [down.x, down.y, down.z],
                        [forward.x, forward.y, forward.z],
                    ],
                    translation: [t.x, t.y, t.z],
                    focal: [self.focal, self.focal],
                    principal: [
                        self.image_size[0] as f64 / 2.0,
                        self.image_size[1] as f64 / 2.0,
                    ],
                    image_size: self.image_size,
                };
                cam.validate()?;
                Ok(cam)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(cams)
    }
}

/// Parses and validates a JSON array of cameras.
pub fn cameras_from_json(text: &str) -> Result<Vec<CameraConfig>> {
    let cams: Vec<CameraConfig> = serde_json::from_str(text)?;
    for c in &cams {
        c.validate()?;
    }
    Ok(cams)
}

pub fn cameras_to_json(cams: &[CameraConfig]) -> Result<String> {
    Ok(serde_json::to_string_pretty(cams)?)
}
