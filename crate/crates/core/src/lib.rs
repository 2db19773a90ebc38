//! Goal-oriented semantic communication simulator: scene keypoints sent
//! over fading channels, repaired by a relaxed optimal-transport denoiser,
//! reconstructed into point clouds and scored against a dense baseline.

pub mod channel;
pub mod cloud;
pub mod correction;
pub mod error;
pub mod framework;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod scalar;
pub mod transport;

pub use error::{Error, Result};
pub use framework::{Composition, Framework};
pub use scalar::Real;

pub type PointCloudF64 = cloud::PointCloud<f64>;
pub type PointCloudF32 = cloud::PointCloud<f32>;
pub type CostMatrixF64 = transport::CostMatrix<f64>;
pub type CostMatrixF32 = transport::CostMatrix<f32>;
pub type TransportPlanF64 = transport::TransportPlan<f64>;
pub type TransportPlanF32 = transport::TransportPlan<f32>;
pub type SquareMatrixF64 = transport::SquareMatrix<f64>;
pub type SquareMatrixF32 = transport::SquareMatrix<f32>;
