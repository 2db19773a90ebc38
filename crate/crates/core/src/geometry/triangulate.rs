use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};

use super::camera::CameraConfig;
use super::render::{KeypointFrame, SampleFrame};

/// Rays whose normal-equation matrix has a smallest eigenvalue below this
/// (per ray) are treated as parallel.
const PARALLEL_EIGEN: f64 = 1e-12;

/// Least-squares intersection of the viewing rays for one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointEstimate {
    Valid {
        position: [f64; 3],
        /// RMS perpendicular distance from the position to the rays, meters.
        residual: f64,
        views: usize,
    },
    /// Fewer than two views saw the point.
    Invalid { views: usize },
}

impl PointEstimate {
    pub fn position(&self) -> Option<[f64; 3]> {
        match self {
            PointEstimate::Valid { position, .. } => Some(*position),
            PointEstimate::Invalid { .. } => None,
        }
    }
}

/// Intersects the rays through `uv` in each camera, minimising the sum of
/// squared perpendicular distances.
pub fn triangulate_point(
    observations: &[(&CameraConfig, [f64; 2])],
    index: usize,
) -> Result<PointEstimate> {
    let views = observations.len();
    if views < 2 {
        return Ok(PointEstimate::Invalid { views });
    }
    let rays: Vec<_> = observations
        .iter()
        .map(|(cam, uv)| cam.back_project(uv))
        .collect();
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for r in &rays {
        let d = Vector3::from(r.direction);
        let proj = Matrix3::identity() - d * d.transpose();
        a += proj;
        b += proj * Vector3::from(r.origin);
    }
    let eig = SymmetricEigen::new(a);
    if eig.eigenvalues.min() < PARALLEL_EIGEN * views as f64 {
        return Err(Error::SingularGeometry { index });
    }
    let x = eig.eigenvectors * Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l))
        * eig.eigenvectors.transpose()
        * b;
    let sq: f64 = rays
        .iter()
        .map(|r| {
            let d = Vector3::from(r.direction);
            let v = x - Vector3::from(r.origin);
            (v - d * d.dot(&v)).norm_squared()
        })
        .sum();
    Ok(PointEstimate::Valid {
        position: [x.x, x.y, x.z],
        residual: (sq / views as f64).sqrt(),
        views,
    })
}

fn camera_for<'a>(cameras: &'a [CameraConfig], view_id: usize) -> Result<&'a CameraConfig> {
    cameras
        .iter()
        .find(|c| c.view_id == view_id)
        .ok_or_else(|| Error::contract(format!("no camera for view {view_id}")))
}

fn triangulate_views(
    views: &[(&CameraConfig, &[[f64; 2]], &[bool])],
    count: usize,
) -> Result<Vec<Result<PointEstimate>>> {
    if views.len() < 2 {
        return Err(Error::contract(format!(
            "triangulation needs at least 2 views, got {}",
            views.len()
        )));
    }
    for (cam, pts, valid) in views {
        if pts.len() != count || valid.len() != count {
            return Err(Error::contract(format!(
                "view {} carries {} points, expected {count}",
                cam.view_id,
                pts.len()
            )));
        }
    }
    let mut obs = Vec::with_capacity(views.len());
    Ok((0..count)
        .map(|k| {
            obs.clear();
            obs.extend(
                views
                    .iter()
                    .filter(|(_, pts, valid)| valid[k] && pts[k].iter().all(|v| v.is_finite()))
                    .map(|(cam, pts, _)| (*cam, pts[k])),
            );
            triangulate_point(&obs, k)
        })
        .collect())
}

/// Triangulates each keypoint index across all frames. Indices seen by
/// fewer than two views come back [`PointEstimate::Invalid`]; indices with
/// parallel rays come back as [`Error::SingularGeometry`].
pub fn triangulate(
    frames: &[KeypointFrame],
    cameras: &[CameraConfig],
) -> Result<Vec<Result<PointEstimate>>> {
    let views = frames
        .iter()
        .map(|f| {
            Ok((
                camera_for(cameras, f.view_id)?,
                &f.keypoints[..],
                &f.validity[..],
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    triangulate_views(&views, super::KEYPOINT_COUNT)
}

/// Dense-sample counterpart of [`triangulate`].
pub fn triangulate_samples(
    frames: &[SampleFrame],
    cameras: &[CameraConfig],
) -> Result<Vec<Result<PointEstimate>>> {
    let count = frames.first().map_or(0, |f| f.points.len());
    let views = frames
        .iter()
        .map(|f| Ok((camera_for(cameras, f.view_id)?, &f.points[..], &f.validity[..])))
        .collect::<Result<Vec<_>>>()?;
    triangulate_views(&views, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_scene, render_keypoint_frame, MotionParams, RingLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn look_at_origin(view_id: usize, eye: [f64; 3], rotation: [[f64; 3]; 3]) -> CameraConfig {
        let r = nalgebra::Matrix3::from_row_slice(&rotation.concat());
        let t = -(r * Vector3::from(eye));
        CameraConfig {
            view_id,
            theta: 0.0,
            rotation,
            translation: [t.x, t.y, t.z],
            focal: [500.0, 500.0],
            principal: [600.0, 300.0],
            image_size: [1200, 600],
        }
    }

    #[test]
    fn two_orthogonal_views() {
        // One camera on +x looking down -x, one on +y looking down -y.
        let a = look_at_origin(0, [10.0, 1.0, 1.0], [[0.0, 1.0, 0.0], [0.0, 0.0, -1.0], [-1.0, 0.0, 0.0]]);
        let b = look_at_origin(1, [1.0, 10.0, 1.0], [[-1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, -1.0, 0.0]]);
        a.validate().unwrap();
        b.validate().unwrap();
        let p = [1.0, 1.0, 1.0];
        let obs = [(&a, a.project_point(&p).unwrap()), (&b, b.project_point(&p).unwrap())];
        let est = triangulate_point(&obs, 0).unwrap();
        let q = est.position().unwrap();
        for k in 0..3 {
            assert!((q[k] - p[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn full_ring_is_consistent() {
        let scene = generate_scene(11, &MotionParams::default()).unwrap();
        let cams = RingLayout::default().cameras().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let frames: Vec<_> = cams
            .iter()
            .map(|c| render_keypoint_frame(&scene, c, 0.0, &mut rng).unwrap())
            .collect();
        let est = triangulate(&frames, &cams).unwrap();
        for (k, (e, truth)) in est.iter().zip(scene.keypoints()).enumerate() {
            match e.as_ref().unwrap() {
                PointEstimate::Valid { position, residual, views } => {
                    assert_eq!(*views, 36);
                    assert!(*residual <= 1e-9, "keypoint {k} residual {residual}");
                    for a in 0..3 {
                        assert!((position[a] - truth[a]).abs() < 1e-6);
                    }
                }
                PointEstimate::Invalid { .. } => panic!("keypoint {k} invalid"),
            }
        }
    }

    #[test]
    fn too_few_views_marks_invalid() {
        let scene = generate_scene(0, &MotionParams::default()).unwrap();
        let cams = RingLayout::default().cameras().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut frames: Vec<_> = cams[..3]
            .iter()
            .map(|c| render_keypoint_frame(&scene, c, 0.0, &mut rng).unwrap())
            .collect();
        frames[0].validity[4] = false;
        frames[1].validity[4] = false;
        let est = triangulate(&frames, &cams).unwrap();
        assert_eq!(*est[4].as_ref().unwrap(), PointEstimate::Invalid { views: 1 });
        assert!(est[3].as_ref().unwrap().position().is_some());
    }

    #[test]
    fn parallel_rays_are_singular() {
        let cam = RingLayout::default().cameras().unwrap().remove(0);
        let twin = CameraConfig { view_id: 1, ..cam.clone() };
        let uv = [600.0, 300.0];
        let obs = [(&cam, uv), (&twin, uv)];
        assert!(matches!(
            triangulate_point(&obs, 7),
            Err(Error::SingularGeometry { index: 7 })
        ));
    }

    #[test]
    fn unknown_view_is_a_contract_error() {
        let scene = generate_scene(0, &MotionParams::default()).unwrap();
        let cams = RingLayout::default().cameras().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut frames: Vec<_> = cams[..2]
            .iter()
            .map(|c| render_keypoint_frame(&scene, c, 0.0, &mut rng).unwrap())
            .collect();
        frames[1].view_id = 99;
        assert!(triangulate(&frames, &cams).is_err());
        assert!(triangulate(&frames[..1], &cams).is_err());
    }
}
