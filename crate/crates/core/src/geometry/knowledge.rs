use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::camera::CameraConfig;
use super::scene::{MotionParams, SceneState};
use super::KEYPOINT_COUNT;

/// Shape parameters the receiver needs to draw movable objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTemplates {
    pub box_half_extents: [f64; 3],
    pub points_per_object: usize,
}

impl ObjectTemplates {
    pub fn from_motion(m: &MotionParams) -> Self {
        Self {
            box_half_extents: m.box_half_extents,
            points_per_object: m.object_points,
        }
    }
}

/// Scenery, camera and object knowledge shared once at session start.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    static_cloud: Vec<[f64; 3]>,
    cameras: Vec<CameraConfig>,
    object_anchors: [[f64; 3]; KEYPOINT_COUNT],
    templates: ObjectTemplates,
}

impl KnowledgeBase {
    /// Builds the knowledge base from the scene at `t = 0`.
    pub fn new(initial: &SceneState, cameras: Vec<CameraConfig>, templates: ObjectTemplates) -> Self {
        Self {
            static_cloud: initial.static_cloud.clone(),
            cameras,
            object_anchors: initial.keypoints(),
            templates,
        }
    }

    pub fn static_cloud(&self) -> &[[f64; 3]] {
        &self.static_cloud
    }

    pub fn cameras(&self) -> &[CameraConfig] {
        &self.cameras
    }

    pub fn object_anchors(&self) -> &[[f64; 3]; KEYPOINT_COUNT] {
        &self.object_anchors
    }

    pub fn templates(&self) -> &ObjectTemplates {
        &self.templates
    }

    /// Canonical serialized form; transmitter and receiver copies compare
    /// equal byte for byte.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(self)?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    /// Size on the air at 32 bits per scalar.
    pub fn bit_size(&self) -> u64 {
        let per_camera = 1 + 9 + 3 + 2 + 2 + 2;
        let scalars = 3 * self.static_cloud.len()
            + per_camera * self.cameras.len()
            + 3 * KEYPOINT_COUNT
            + 3
            + 1;
        32 * scalars as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_scene, RingLayout};

    #[test]
    fn copies_are_byte_identical() {
        let m = MotionParams::default();
        let scene = generate_scene(0, &m).unwrap();
        let kb = KnowledgeBase::new(&scene, RingLayout::default().cameras().unwrap(), ObjectTemplates::from_motion(&m));
        let bytes = kb.to_bytes().unwrap();
        let receiver = KnowledgeBase::from_bytes(&bytes).unwrap();
        assert_eq!(receiver, kb);
        assert_eq!(receiver.to_bytes().unwrap(), bytes);
        assert_eq!(kb.object_anchors(), &scene.keypoints());
        assert_eq!(kb.bit_size(), 32 * (15000 + 19 * 36 + 27 + 4));
    }
}
