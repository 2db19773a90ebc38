use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::camera::CameraConfig;
use super::scene::SceneState;
use super::KEYPOINT_COUNT;

/// Pixel coordinates are stored on a dyadic grid of this many steps per
/// pixel, so that dividing by the image size and multiplying back is exact.
pub const PIXEL_GRID: f64 = (1u64 << 30) as f64;

/// Rounds a pixel coordinate onto the fixed-point grid.
#[inline]
pub fn snap_pixel(x: f64) -> f64 {
    (x * PIXEL_GRID).round() / PIXEL_GRID
}

/// Nine ordered keypoints seen by one camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointFrame {
    pub view_id: usize,
    pub theta: f64,
    pub keypoints: [[f64; 2]; KEYPOINT_COUNT],
    pub validity: [bool; KEYPOINT_COUNT],
    /// Set when decoding had to clamp a coordinate into the image.
    pub clamped: bool,
}

impl KeypointFrame {
    pub fn is_finite(&self) -> bool {
        self.keypoints.iter().flatten().all(|v| v.is_finite())
    }
}

/// Dense per-view samples for the image-transmission baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFrame {
    pub view_id: usize,
    pub theta: f64,
    pub points: Vec<[f64; 2]>,
    pub validity: Vec<bool>,
    pub clamped: bool,
}

/// Projects the scene keypoints and adds isotropic Gaussian pixel noise of
/// standard deviation `extraction_sigma`.
pub fn render_keypoint_frame<R: Rng + ?Sized>(
    scene: &SceneState,
    camera: &CameraConfig,
    extraction_sigma: f64,
    rng: &mut R,
) -> Result<KeypointFrame> {
    if !(extraction_sigma >= 0.0) || !extraction_sigma.is_finite() {
        return Err(Error::contract(format!(
            "extraction sigma must be finite and nonnegative, got {extraction_sigma}"
        )));
    }
    let truth = scene.keypoints();
    let mut keypoints = [[0.0; 2]; KEYPOINT_COUNT];
    let mut validity = [false; KEYPOINT_COUNT];
    for (k, p) in truth.iter().enumerate() {
        let mut uv = camera.project_point(p)?;
        validity[k] = camera.contains_pixel(&uv);
        if extraction_sigma > 0.0 {
            for c in &mut uv {
                let z: f64 = rng.sample(StandardNormal);
                *c += extraction_sigma * z;
            }
        }
        keypoints[k] = [snap_pixel(uv[0]), snap_pixel(uv[1])];
    }
    Ok(KeypointFrame {
        view_id: camera.view_id,
        theta: camera.theta,
        keypoints,
        validity,
        clamped: false,
    })
}

/// Noise-free projections of arbitrary scene points; points outside the
/// image are kept but marked invalid.
pub fn render_sample_frame(points: &[[f64; 3]], camera: &CameraConfig) -> Result<SampleFrame> {
    let mut out = Vec::with_capacity(points.len());
    let mut validity = Vec::with_capacity(points.len());
    for p in points {
        let uv = camera.project_point(p)?;
        validity.push(camera.contains_pixel(&uv));
        out.push([snap_pixel(uv[0]), snap_pixel(uv[1])]);
    }
    Ok(SampleFrame {
        view_id: camera.view_id,
        theta: camera.theta,
        points: out,
        validity,
        clamped: false,
    })
}
