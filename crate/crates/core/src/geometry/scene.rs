use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ARM_JOINTS, BOX_COUNT, GEOMETRY_MAX, GEOMETRY_MIN, KEYPOINT_COUNT};

const BONES: usize = ARM_JOINTS - 1;
const STATIC_SEED: u64 = 0x5CE1_E000_57A7_1C00;

/// Height of the conveyor belt surface.
pub const CONVEYOR_TOP: f64 = 0.4;
/// Conveyor footprint: `[x_min, x_max, y_min, y_max]`.
pub const CONVEYOR_FOOTPRINT: [f64; 4] = [0.2, 3.8, 0.75, 1.25];
/// Share of static samples that land on the conveyor; the rest cover the floor.
const CONVEYOR_SHARE: f64 = 0.3;

/// Scene kinematics plus sampling densities. All lengths in meters, angles
/// in radians, periods in frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionParams {
    pub arm_base: [f64; 3],
    pub bone_lengths: [f64; BONES],
    /// Elevation of each link above the horizontal at rest.
    pub rest_elevation: [f64; BONES],
    pub elevation_amplitude: f64,
    /// Phase step between consecutive links.
    pub elevation_phase: f64,
    pub arm_period: f64,
    pub rest_yaw: f64,
    pub yaw_amplitude: f64,
    pub yaw_period: f64,
    /// Box half extents along x, y, z.
    pub box_half_extents: [f64; 3],
    /// Box x positions at t = 0.
    pub box_start: [f64; BOX_COUNT],
    /// Meters per frame along +x.
    pub box_speed: f64,
    /// Box centres wrap inside `[travel[0], travel[1])`.
    pub box_travel: [f64; 2],
    pub box_lane_y: f64,
    pub static_points: usize,
    pub object_points: usize,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            arm_base: [2.0, 2.3, 0.0],
            bone_lengths: [0.5, 0.45, 0.35, 0.25, 0.15, 0.1],
            rest_elevation: [1.35, 0.6, 0.1, -0.3, -0.6, -0.9],
            elevation_amplitude: 0.2,
            elevation_phase: 0.7,
            arm_period: 120.0,
            rest_yaw: -FRAC_PI_2,
            yaw_amplitude: 0.8,
            yaw_period: 180.0,
            box_half_extents: [0.2, 0.15, 0.15],
            box_start: [0.8, 2.4],
            box_speed: 0.02,
            box_travel: [0.4, 3.6],
            box_lane_y: 1.0,
            static_points: 5000,
            object_points: 500,
        }
    }
}

impl MotionParams {
    /// Default geometry with every motion amplitude and speed set to zero.
    pub fn at_rest() -> Self {
        Self {
            elevation_amplitude: 0.0,
            yaw_amplitude: 0.0,
            box_speed: 0.0,
            ..Self::default()
        }
    }

    /// Checks analytically that no trajectory can leave the geometry range.
    pub fn validate(&self) -> Result<()> {
        let finite = self.arm_base.iter().all(|v| v.is_finite())
            && self.bone_lengths.iter().all(|v| v.is_finite())
            && self.rest_elevation.iter().all(|v| v.is_finite())
            && self.box_half_extents.iter().all(|v| v.is_finite())
            && self.box_start.iter().all(|v| v.is_finite())
            && self.box_travel.iter().all(|v| v.is_finite())
            && [
                self.elevation_amplitude,
                self.elevation_phase,
                self.rest_yaw,
                self.yaw_amplitude,
                self.box_speed,
                self.box_lane_y,
            ]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("motion parameters must be finite"));
        }
        if self.bone_lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::config("bone lengths must be positive"));
        }
        if self.elevation_amplitude < 0.0 || self.yaw_amplitude < 0.0 {
            return Err(Error::config("motion amplitudes must be nonnegative"));
        }
        if !(self.arm_period > 0.0 && self.yaw_period > 0.0) {
            return Err(Error::config("motion periods must be positive"));
        }
        if self.box_half_extents.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::config("box half extents must be positive"));
        }
        if self.static_points == 0 || self.object_points < ARM_JOINTS {
            return Err(Error::config(format!(
                "need at least one static point and {ARM_JOINTS} points per object"
            )));
        }

        let inside = |v: f64| (GEOMETRY_MIN..=GEOMETRY_MAX).contains(&v);
        let mut reach = 0.0;
        let (mut z_lo, mut z_hi) = (self.arm_base[2], self.arm_base[2]);
        if !self.arm_base.iter().all(|&v| inside(v)) {
            return Err(Error::config("arm base lies outside the geometry range"));
        }
        for k in 0..BONES {
            let lo = self.rest_elevation[k] - self.elevation_amplitude;
            let hi = self.rest_elevation[k] + self.elevation_amplitude;
            if lo < -FRAC_PI_2 || hi > FRAC_PI_2 {
                return Err(Error::config(format!(
                    "link {k} elevation range [{lo:.3}, {hi:.3}] leaves [-pi/2, pi/2]"
                )));
            }
            let l = self.bone_lengths[k];
            // sin is monotone on [-pi/2, pi/2]; cos peaks at 0.
            z_lo += l * lo.sin();
            z_hi += l * hi.sin();
            let cos_max = if lo <= 0.0 && hi >= 0.0 {
                1.0
            } else {
                lo.cos().max(hi.cos())
            };
            reach += l * cos_max;
            let xy_ok = (0..2).all(|a| inside(self.arm_base[a] - reach) && inside(self.arm_base[a] + reach));
            if !(xy_ok && inside(z_lo) && inside(z_hi)) {
                return Err(Error::config(format!(
                    "arm joint {} can leave the geometry range [{GEOMETRY_MIN}, {GEOMETRY_MAX}]^3",
                    k + 1
                )));
            }
        }

        let [hx, hy, hz] = self.box_half_extents;
        let [lo, hi] = self.box_travel;
        if !(lo < hi) || !inside(lo - hx) || !inside(hi + hx) {
            return Err(Error::config("box travel range leaves the geometry range"));
        }
        if !inside(self.box_lane_y - hy) || !inside(self.box_lane_y + hy) {
            return Err(Error::config("box lane leaves the geometry range"));
        }
        if !inside(CONVEYOR_TOP + 2.0 * hz) {
            return Err(Error::config("boxes are too tall for the geometry range"));
        }
        if self.box_start.iter().any(|&x| x < lo || x >= hi) {
            return Err(Error::config("box start positions must lie in the travel range"));
        }
        Ok(())
    }

    fn arm_joints(&self, t: f64) -> [[f64; 3]; ARM_JOINTS] {
        let yaw = self.rest_yaw + self.yaw_amplitude * (TAU * t / self.yaw_period).sin();
        let (sy, cy) = yaw.sin_cos();
        let mut joints = [[0.0; 3]; ARM_JOINTS];
        joints[0] = self.arm_base;
        for k in 0..BONES {
            let phase = TAU * t / self.arm_period + k as f64 * self.elevation_phase;
            let elev = self.rest_elevation[k] + self.elevation_amplitude * phase.sin();
            let (se, ce) = elev.sin_cos();
            let l = self.bone_lengths[k];
            let prev = joints[k];
            joints[k + 1] = [prev[0] + l * ce * cy, prev[1] + l * ce * sy, prev[2] + l * se];
        }
        joints
    }

    /// x coordinate of box `b` at frame `t`.
    pub fn box_x(&self, b: usize, t: f64) -> f64 {
        let [lo, hi] = self.box_travel;
        lo + (self.box_start[b] - lo + self.box_speed * t).rem_euclid(hi - lo)
    }

    fn box_centers(&self, t: f64) -> [[f64; 3]; BOX_COUNT] {
        let z = CONVEYOR_TOP + self.box_half_extents[2];
        std::array::from_fn(|b| [self.box_x(b, t), self.box_lane_y, z])
    }
}

/// Ground-truth geometry at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub time: u64,
    pub arm_keypoints: [[f64; 3]; ARM_JOINTS],
    pub box_centers: [[f64; 3]; BOX_COUNT],
    pub static_cloud: Vec<[f64; 3]>,
}

impl SceneState {
    /// The 9 keypoints in transmission order: arm joints base to tip, then boxes.
    pub fn keypoints(&self) -> [[f64; 3]; KEYPOINT_COUNT] {
        let mut out = [[0.0; 3]; KEYPOINT_COUNT];
        out[..ARM_JOINTS].copy_from_slice(&self.arm_keypoints);
        out[ARM_JOINTS..].copy_from_slice(&self.box_centers);
        out
    }
}

/// Floor and conveyor samples, fixed by a built-in seed.
pub fn static_cloud(count: usize) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(STATIC_SEED);
    let on_conveyor = (count as f64 * CONVEYOR_SHARE).round() as usize;
    let [x0, x1, y0, y1] = CONVEYOR_FOOTPRINT;
    (0..count)
        .map(|i| {
            if i < on_conveyor {
                [rng.random_range(x0..x1), rng.random_range(y0..y1), CONVEYOR_TOP]
            } else {
                [
                    rng.random_range(GEOMETRY_MIN..GEOMETRY_MAX),
                    rng.random_range(GEOMETRY_MIN..GEOMETRY_MAX),
                    GEOMETRY_MIN,
                ]
            }
        })
        .collect()
}

/// Ground-truth scene at frame `t`; a pure function of its arguments.
pub fn generate_scene(t: u64, motion: &MotionParams) -> Result<SceneState> {
    motion.validate()?;
    let tf = t as f64;
    let scene = SceneState {
        time: t,
        arm_keypoints: motion.arm_joints(tf),
        box_centers: motion.box_centers(tf),
        static_cloud: static_cloud(motion.static_points),
    };
    let inside = |p: &[f64; 3]| p.iter().all(|v| (GEOMETRY_MIN..=GEOMETRY_MAX).contains(v));
    if !scene.keypoints().iter().all(inside) {
        return Err(Error::config(format!(
            "scene at frame {t} leaves the geometry range"
        )));
    }
    Ok(scene)
}
