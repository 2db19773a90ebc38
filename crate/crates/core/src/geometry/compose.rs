use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::framework::{Composition, Framework};

use super::knowledge::{KnowledgeBase, ObjectTemplates};
use super::scene::SceneState;
use super::{ARM_JOINTS, BOX_COUNT, KEYPOINT_COUNT};

const BOX_PATTERN_SEED: u64 = 0xB0C5_0000_0000_0001;

const STATIC_COLOR: [f64; 3] = [0.5, 0.5, 0.5];
const ARM_COLOR: [f64; 3] = [0.9, 0.5, 0.1];
const BOX_COLOR: [f64; 3] = [0.6, 0.4, 0.2];

/// `n` samples spaced evenly by arc length along the joint polyline,
/// first and last joint included.
pub fn arm_template(joints: &[[f64; 3]], n: usize) -> Vec<[f64; 3]> {
    if joints.is_empty() || n == 0 {
        return Vec::new();
    }
    let lengths: Vec<f64> = joints
        .windows(2)
        .map(|w| crate::scalar::distance(&w[0], &w[1]))
        .collect();
    let total: f64 = lengths.iter().sum();
    if n == 1 || !(total > 0.0) {
        return vec![joints[0]; n];
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    let mut start = 0.0;
    for k in 0..n {
        let s = total * k as f64 / (n - 1) as f64;
        while seg + 1 < lengths.len() && s > start + lengths[seg] {
            start += lengths[seg];
            seg += 1;
        }
        let u = if lengths[seg] > 0.0 {
            ((s - start) / lengths[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (a, b) = (joints[seg], joints[seg + 1]);
        out.push(std::array::from_fn(|i| a[i] + u * (b[i] - a[i])));
    }
    out
}

/// Fixed surface samples of a centred cuboid, area-weighted across faces.
pub fn box_pattern(half: [f64; 3], n: usize) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(BOX_PATTERN_SEED);
    let [hx, hy, hz] = half;
    let areas = [hy * hz, hx * hz, hx * hy];
    let total: f64 = areas.iter().sum();
    (0..n)
        .map(|_| {
            let mut pick = rng.random_range(0.0..total);
            let mut axis = 0;
            while axis < 2 && pick >= areas[axis] {
                pick -= areas[axis];
                axis += 1;
            }
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let mut p = [
                rng.random_range(-hx..=hx),
                rng.random_range(-hy..=hy),
                rng.random_range(-hz..=hz),
            ];
            p[axis] = sign * half[axis];
            p
        })
        .collect()
}

fn push_part(points: &mut Vec<[f64; 3]>, colors: &mut Vec<[f64; 3]>, part: Vec<[f64; 3]>, color: [f64; 3]) {
    colors.extend(std::iter::repeat_n(color, part.len()));
    points.extend(part);
}

fn object_parts(objects: &[[f64; 3]], templates: &ObjectTemplates) -> Vec<(Vec<[f64; 3]>, [f64; 3])> {
    let n = templates.points_per_object;
    let pattern = box_pattern(templates.box_half_extents, n);
    let mut parts = vec![(arm_template(&objects[..ARM_JOINTS], n), ARM_COLOR)];
    for b in 0..BOX_COUNT {
        let c = objects[ARM_JOINTS + b];
        let pts = pattern
            .iter()
            .map(|l| [c[0] + l[0], c[1] + l[1], c[2] + l[2]])
            .collect();
        parts.push((pts, BOX_COLOR));
    }
    parts
}

fn compose(
    static_cloud: &[[f64; 3]],
    objects: &[[f64; 3]],
    templates: &ObjectTemplates,
    composition: Composition,
) -> PointCloud<f64> {
    let mut points = Vec::new();
    let mut colors = Vec::new();
    let parts = object_parts(objects, templates);
    match composition {
        Composition::Joint => {
            push_part(&mut points, &mut colors, static_cloud.to_vec(), STATIC_COLOR);
            for (p, c) in parts {
                push_part(&mut points, &mut colors, p, c);
            }
        }
        Composition::PerObject => {
            let mut merged = PointCloud::with_colors(Vec::new(), Vec::new()).expect("empty");
            for (p, c) in parts {
                let n = p.len();
                merged.extend(&PointCloud::with_colors(p, vec![c; n]).expect("lengths match"));
            }
            points = merged.points;
            colors = merged.colors.unwrap_or_default();
            push_part(&mut points, &mut colors, static_cloud.to_vec(), STATIC_COLOR);
        }
    }
    PointCloud::with_colors(points, colors).expect("lengths match")
}

/// Receiver-side point cloud. For keypoint frameworks `objects` are the 9
/// reconstructed keypoints, drawn as templates over the shared static scene;
/// for the dense baseline `objects` are the reconstructed dense samples and
/// no knowledge base may be supplied.
pub fn build_point_cloud(
    objects: &[[f64; 3]],
    kb: Option<&KnowledgeBase>,
    framework: Framework,
) -> Result<PointCloud<f64>> {
    if objects.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::contract("reconstructed points must be finite"));
    }
    match (framework.composition(), kb) {
        (None, None) => {
            if objects.is_empty() {
                return Err(Error::contract("dense reconstruction produced no points"));
            }
            Ok(PointCloud::new(objects.to_vec()))
        }
        (None, Some(_)) => Err(Error::config(
            "the dense baseline reconstructs without a knowledge base",
        )),
        (Some(_), None) => Err(Error::config(format!(
            "framework {framework} needs a knowledge base"
        ))),
        (Some(composition), Some(kb)) => {
            if objects.len() != KEYPOINT_COUNT {
                return Err(Error::contract(format!(
                    "expected {KEYPOINT_COUNT} object keypoints, got {}",
                    objects.len()
                )));
            }
            Ok(compose(kb.static_cloud(), objects, kb.templates(), composition))
        }
    }
}

/// Reference cloud for a scene: true keypoints drawn with the same templates.
pub fn ground_truth_cloud(scene: &SceneState, templates: &ObjectTemplates) -> PointCloud<f64> {
    compose(&scene.static_cloud, &scene.keypoints(), templates, Composition::Joint)
}
