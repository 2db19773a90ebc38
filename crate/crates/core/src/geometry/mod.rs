//! Synthetic factory scene, pinhole cameras, keypoint rendering,
//! triangulation and receiver-side point-cloud composition.

mod camera;
mod compose;
mod knowledge;
mod render;
mod scene;
mod triangulate;

pub use camera::{cameras_from_json, cameras_to_json, CameraConfig, Ray, RingLayout};
pub use compose::{arm_template, box_pattern, build_point_cloud, ground_truth_cloud};
pub use knowledge::{KnowledgeBase, ObjectTemplates};
pub use render::{
    render_keypoint_frame, render_sample_frame, snap_pixel, KeypointFrame, SampleFrame, PIXEL_GRID,
};
pub use scene::{
    generate_scene, static_cloud, MotionParams, SceneState, CONVEYOR_FOOTPRINT, CONVEYOR_TOP,
};
pub use triangulate::{triangulate, triangulate_point, triangulate_samples, PointEstimate};

pub const ARM_JOINTS: usize = 7;
pub const BOX_COUNT: usize = 2;
pub const KEYPOINT_COUNT: usize = ARM_JOINTS + BOX_COUNT;
pub const VIEW_COUNT: usize = 36;
pub const IMAGE_WIDTH: u32 = 1200;
pub const IMAGE_HEIGHT: u32 = 600;
pub const GEOMETRY_MIN: f64 = 0.0;
pub const GEOMETRY_MAX: f64 = 4.0;
