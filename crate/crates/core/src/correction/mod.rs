//! Selective multi-view correction: flag keypoints that disagree with the
//! midpoint of their ring neighbours, then pull only those onto a target set
//! with the relaxed OT denoiser.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{KeypointFrame, KnowledgeBase, KEYPOINT_COUNT};
use crate::transport::{barycentric_apply, cost_matrix, relaxed_plan, uniform_marginal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Midpoint of the two neighbouring views' received keypoints.
    NeighborInterp,
    /// t = 0 object anchors projected through the view's camera.
    KnowledgeBase,
    /// The transmitted keypoints; an evaluation upper bound.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiserConfig {
    pub eta: f64,
    /// Flag threshold as a fraction of the image diagonal.
    pub delta_frac: f64,
    /// Absolute threshold in pixels; overrides `delta_frac` when set.
    pub delta: Option<f64>,
    pub view_offset: usize,
    pub target_mode: TargetMode,
    /// Oracle targets are refused unless this is set.
    pub allow_oracle: bool,
    /// Treat the views as a closed ring.
    pub wraparound: bool,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            eta: 0.05,
            delta_frac: 0.02,
            delta: None,
            view_offset: 1,
            target_mode: TargetMode::NeighborInterp,
            allow_oracle: false,
            wraparound: true,
        }
    }
}

impl DenoiserConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::config(format!("denoiser eta must be positive, got {}", self.eta)));
        }
        let delta_ok = match self.delta {
            Some(d) => d > 0.0 && d.is_finite(),
            None => self.delta_frac > 0.0 && self.delta_frac.is_finite(),
        };
        if !delta_ok {
            return Err(Error::config("denoiser delta must be positive"));
        }
        if self.view_offset == 0 {
            return Err(Error::config("view_offset must be at least 1"));
        }
        if self.target_mode == TargetMode::Oracle && !self.allow_oracle {
            return Err(Error::config(
                "oracle targets are an evaluation bound; set allow_oracle to use them",
            ));
        }
        Ok(())
    }

    /// Flag threshold in pixels.
    pub fn delta_px(&self, image_size: [u32; 2]) -> f64 {
        self.delta.unwrap_or_else(|| {
            let [w, h] = image_size.map(f64::from);
            self.delta_frac * w.hypot(h)
        })
    }
}

/// Per-view, per-keypoint inconsistency flags (`true` = inconsistent).
#[derive(Debug, Clone, PartialEq)]
pub struct FlagSet {
    pub flags: Vec<[bool; KEYPOINT_COUNT]>,
    /// Views whose neighbours are missing; all their keypoints are flagged.
    pub undefined: Vec<bool>,
    pub delta: f64,
    pub view_offset: usize,
}

impl FlagSet {
    pub fn count(&self) -> usize {
        self.flags.iter().flatten().filter(|&&f| f).count()
    }
}

fn check_ring(frames: &[KeypointFrame], view_offset: usize) -> Result<()> {
    if frames.len() < 3 {
        return Err(Error::contract(format!(
            "correction needs at least 3 views, got {}",
            frames.len()
        )));
    }
    if view_offset == 0 {
        return Err(Error::contract("view_offset must be at least 1"));
    }
    for (i, f) in frames.iter().enumerate() {
        if f.view_id != i {
            return Err(Error::contract(format!(
                "frames must be ordered by ring position; slot {i} holds view {}",
                f.view_id
            )));
        }
    }
    Ok(())
}

fn neighbours(i: usize, n: usize, views: usize, wraparound: bool) -> Option<(usize, usize)> {
    if wraparound {
        let n = n % views;
        Some(((i + views - n) % views, (i + n) % views))
    } else if i >= n && i + n < views {
        Some((i - n, i + n))
    } else {
        None
    }
}

fn midpoint(a: &[f64; 2], b: &[f64; 2]) -> [f64; 2] {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
}

/// `F = 1` iff `|K_i - (K_{i-n} + K_{i+n}) / 2| > delta` (Euclidean, pixels).
pub fn consistency_flags(
    frames: &[KeypointFrame],
    view_offset: usize,
    delta: f64,
    wraparound: bool,
) -> Result<FlagSet> {
    check_ring(frames, view_offset)?;
    if !(delta > 0.0) {
        return Err(Error::contract(format!("delta must be positive, got {delta}")));
    }
    let v = frames.len();
    let mut flags = Vec::with_capacity(v);
    let mut undefined = Vec::with_capacity(v);
    for i in 0..v {
        match neighbours(i, view_offset, v, wraparound) {
            Some((a, b)) => {
                undefined.push(false);
                flags.push(std::array::from_fn(|k| {
                    let m = midpoint(&frames[a].keypoints[k], &frames[b].keypoints[k]);
                    let p = frames[i].keypoints[k];
                    let dev = (p[0] - m[0]).hypot(p[1] - m[1]);
                    // NaN deviations count as inconsistent.
                    !(dev <= delta)
                }));
            }
            None => {
                undefined.push(true);
                flags.push([true; KEYPOINT_COUNT]);
            }
        }
    }
    Ok(FlagSet {
        flags,
        undefined,
        delta,
        view_offset,
    })
}

/// Inputs beyond the received frames that target construction may need.
#[derive(Debug, Clone, Copy)]
pub struct CorrectionContext<'a> {
    pub image_size: [u32; 2],
    pub kb: Option<&'a KnowledgeBase>,
    /// Transmitted frames, only for oracle targets.
    pub transmitted: Option<&'a [KeypointFrame]>,
}

/// Per-view OT targets; `None` where no target can be formed.
pub fn reference_targets(
    frames: &[KeypointFrame],
    flags: &FlagSet,
    cfg: &DenoiserConfig,
    ctx: &CorrectionContext<'_>,
) -> Result<Vec<Option<[[f64; 2]; KEYPOINT_COUNT]>>> {
    cfg.validate()?;
    check_ring(frames, flags.view_offset)?;
    let v = frames.len();
    match cfg.target_mode {
        TargetMode::NeighborInterp => Ok((0..v)
            .map(|i| {
                neighbours(i, flags.view_offset, v, cfg.wraparound).map(|(a, b)| {
                    std::array::from_fn(|k| midpoint(&frames[a].keypoints[k], &frames[b].keypoints[k]))
                })
            })
            .collect()),
        TargetMode::KnowledgeBase => {
            let kb = ctx
                .kb
                .ok_or_else(|| Error::config("knowledge_base targets need a knowledge base"))?;
            frames
                .iter()
                .map(|f| {
                    let cam = kb
                        .cameras()
                        .iter()
                        .find(|c| c.view_id == f.view_id)
                        .ok_or_else(|| Error::contract(format!("no camera for view {}", f.view_id)))?;
                    let mut t = [[0.0; 2]; KEYPOINT_COUNT];
                    for (slot, anchor) in t.iter_mut().zip(kb.object_anchors()) {
                        *slot = cam.project_point(anchor)?;
                    }
                    Ok(Some(t))
                })
                .collect()
        }
        TargetMode::Oracle => {
            let sent = ctx
                .transmitted
                .ok_or_else(|| Error::config("oracle targets need the transmitted frames"))?;
            if sent.len() != v || sent.iter().zip(frames).any(|(s, f)| s.view_id != f.view_id) {
                return Err(Error::contract("transmitted frames do not match the received ring"));
            }
            Ok(sent.iter().map(|s| Some(s.keypoints)).collect())
        }
    }
}

/// Result of one correction pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub frames: Vec<KeypointFrame>,
    pub flags: FlagSet,
    /// Views left untouched because no target could be formed.
    pub skipped_views: Vec<usize>,
}

/// Flags, builds targets, solves the relaxed OT plan per view in normalized
/// image coordinates, and replaces only the flagged keypoints with their
/// barycentric images. Unflagged keypoints and validity bits pass through
/// untouched.
pub fn selective_denoise(
    frames: &[KeypointFrame],
    cfg: &DenoiserConfig,
    ctx: &CorrectionContext<'_>,
) -> Result<Correction> {
    cfg.validate()?;
    let delta = cfg.delta_px(ctx.image_size);
    let flags = consistency_flags(frames, cfg.view_offset, delta, cfg.wraparound)?;
    let mut out = frames.to_vec();
    let mut skipped_views = Vec::new();
    if flags.count() == 0 {
        return Ok(Correction { frames: out, flags, skipped_views });
    }
    let targets = reference_targets(frames, &flags, cfg, ctx)?;
    let [w, h] = ctx.image_size.map(f64::from);
    let to_unit = |p: &[f64; 2]| [p[0] / w, p[1] / h];
    let uniform = uniform_marginal::<f64>(KEYPOINT_COUNT);
    for (i, frame) in out.iter_mut().enumerate() {
        let view_flags = flags.flags[i];
        if !view_flags.iter().any(|&f| f) {
            continue;
        }
        let Some(target) = &targets[i] else {
            log::warn!("view {}: no correction targets, left unmodified", frame.view_id);
            skipped_views.push(frame.view_id);
            continue;
        };
        let src: Vec<_> = frame.keypoints.iter().map(to_unit).collect();
        let dst: Vec<_> = target.iter().map(to_unit).collect();
        let cost = cost_matrix(&src, &dst)?;
        let plan = relaxed_plan(&cost, &uniform, &uniform, cfg.eta)?;
        let moved = barycentric_apply(&plan, &dst)?;
        for k in 0..KEYPOINT_COUNT {
            if view_flags[k] {
                frame.keypoints[k] = [moved[k][0] * w, moved[k][1] * h];
            }
        }
    }
    Ok(Correction { frames: out, flags, skipped_views })
}
