use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{
    decode_keypoints, decode_samples, encode_keypoints, encode_samples, rng::substream,
    rng::BLOCK_CHANNEL, rng::BLOCK_EXTRACTION, transmit, ChannelConfig, ChannelKind,
};
use crate::cloud::PointCloud;
use crate::correction::{selective_denoise, CorrectionContext};
use crate::error::{Error, Result};
use crate::framework::Framework;
use crate::geometry::{
    build_point_cloud, generate_scene, ground_truth_cloud, render_keypoint_frame,
    render_sample_frame, triangulate, triangulate_samples, CameraConfig, KeypointFrame,
    KnowledgeBase, ObjectTemplates, PointEstimate, SceneState, KEYPOINT_COUNT,
};
use crate::metrics::{chamfer_modified, kpe, latency_breakdown, p2point, wireless_time, MetricsReport};

use super::config::{ExperimentConfig, OtTiming};

/// Noiseless reconstructions must match the reference cloud to within this
/// P2Point distance, meters.
pub const TEMPLATE_TOLERANCE_M: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    /// Some keypoints could not be triangulated and fell back to the
    /// knowledge-base anchors.
    Degraded,
    Error,
}

/// One trial's outcome: a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub framework: Framework,
    pub channel: ChannelKind,
    pub snr_db: f64,
    pub seed: u64,
    pub frame: u64,
    pub metrics: Option<MetricsReport>,
    pub status: TrialStatus,
    pub message: Option<String>,
}

impl RunRecord {
    pub fn is_success(&self) -> bool {
        self.status != TrialStatus::Error
    }

    /// Status column text: `ok`, `degraded`, or `error: <diagnostic>`.
    pub fn status_text(&self) -> String {
        match (self.status, &self.message) {
            (TrialStatus::Ok, _) => "ok".into(),
            (TrialStatus::Degraded, _) => "degraded".into(),
            (TrialStatus::Error, Some(m)) => format!("error: {m}"),
            (TrialStatus::Error, None) => "error".into(),
        }
    }
}

/// Everything a trial produces besides the metrics, for plots and tests.
#[derive(Debug, Clone)]
pub struct TrialTrace {
    pub scene: SceneState,
    /// Keypoints as sent (after extraction noise).
    pub transmitted: Vec<KeypointFrame>,
    /// Keypoints as decoded.
    pub received: Vec<KeypointFrame>,
    /// Keypoints after correction (equal to `received` for non-OT variants).
    pub corrected: Vec<KeypointFrame>,
    pub flagged: usize,
    pub ot_seconds: f64,
    pub reconstructed: Vec<Option<[f64; 3]>>,
    pub cloud: PointCloud<f64>,
    pub reference: PointCloud<f64>,
}

/// Shared per-experiment state: cameras and the knowledge base.
#[derive(Debug, Clone)]
pub struct Session {
    cfg: ExperimentConfig,
    cameras: Vec<CameraConfig>,
    kb: KnowledgeBase,
    templates: ObjectTemplates,
}

impl Session {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let cameras = cfg.cameras.cameras()?;
        let templates = ObjectTemplates::from_motion(&cfg.motion);
        let initial = generate_scene(0, &cfg.motion)?;
        let kb = KnowledgeBase::new(&initial, cameras.clone(), templates.clone());
        Ok(Self { cfg: cfg.clone(), cameras, kb, templates })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn cameras(&self) -> &[CameraConfig] {
        &self.cameras
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        &self.kb
    }

    fn image_size(&self) -> [u32; 2] {
        self.cfg.cameras.image_size
    }

    /// Runs one trial; failures become an error row rather than an `Err`.
    pub fn run_trial(&self, framework: Framework, channel: ChannelConfig, frame: u64) -> RunRecord {
        let mut record = RunRecord {
            framework,
            channel: channel.kind,
            snr_db: channel.snr_db,
            seed: channel.seed,
            frame,
            metrics: None,
            status: TrialStatus::Error,
            message: None,
        };
        match self.trace_trial(framework, channel, frame) {
            Ok((metrics, trace)) => {
                let complete = trace.reconstructed.iter().take(KEYPOINT_COUNT).all(Option::is_some);
                record.status = if framework.is_dense() || complete {
                    TrialStatus::Ok
                } else {
                    TrialStatus::Degraded
                };
                record.metrics = Some(metrics);
            }
            Err(e) => {
                log::warn!("{framework}/{} snr {} seed {}: {e}", channel.kind, channel.snr_db, channel.seed);
                record.message = Some(e.to_string());
            }
        }
        record
    }

    /// Runs one trial and keeps the intermediate data.
    pub fn trace_trial(
        &self,
        framework: Framework,
        channel: ChannelConfig,
        frame: u64,
    ) -> Result<(MetricsReport, TrialTrace)> {
        channel.validate()?;
        if framework.is_dense() {
            self.dense_trial(channel, frame)
        } else {
            self.keypoint_trial(framework, channel, frame)
        }
    }

    fn send_keypoints(&self, scene: &SceneState, channel: &ChannelConfig, frame: u64) -> Result<(Vec<KeypointFrame>, Vec<KeypointFrame>)> {
        let img = self.image_size();
        let mut sent = Vec::with_capacity(self.cameras.len());
        let mut received = Vec::with_capacity(self.cameras.len());
        for cam in &self.cameras {
            let view = cam.view_id as u32;
            let mut ex = substream(channel.seed, frame, view, BLOCK_EXTRACTION);
            let f = render_keypoint_frame(scene, cam, self.cfg.extraction_sigma, &mut ex)?;
            let mut ch = substream(channel.seed, frame, view, BLOCK_CHANNEL);
            let rx = transmit(&encode_keypoints(&f, img)?, channel, &mut ch)?;
            received.push(decode_keypoints(&rx, img)?);
            sent.push(f);
        }
        Ok((sent, received))
    }

    fn keypoint_trial(
        &self,
        framework: Framework,
        channel: ChannelConfig,
        frame: u64,
    ) -> Result<(MetricsReport, TrialTrace)> {
        let scene = generate_scene(frame, &self.cfg.motion)?;
        let (sent, received) = self.send_keypoints(&scene, &channel, frame)?;

        let (corrected, flagged, ot_seconds) = if framework.uses_ot() {
            let ctx = CorrectionContext {
                image_size: self.image_size(),
                kb: Some(&self.kb),
                transmitted: Some(&sent),
            };
            let start = Instant::now();
            let out = selective_denoise(&received, &self.cfg.denoiser, &ctx)?;
            let measured = start.elapsed().as_secs_f64();
            let t_o = match self.cfg.ot_timing {
                OtTiming::Measured => measured,
                OtTiming::Fixed(t) => t,
            };
            (out.frames, out.flags.count(), t_o)
        } else {
            (received.clone(), 0, 0.0)
        };

        let estimates = triangulate(&corrected, &self.cameras)?;
        let anchors = self.kb.object_anchors();
        let mut reconstructed = Vec::with_capacity(KEYPOINT_COUNT);
        let mut objects = [[0.0; 3]; KEYPOINT_COUNT];
        for (k, est) in estimates.into_iter().enumerate() {
            let pos = match est {
                Ok(PointEstimate::Valid { position, .. }) => Some(position),
                Ok(PointEstimate::Invalid { .. }) | Err(Error::SingularGeometry { .. }) => None,
                Err(e) => return Err(e),
            };
            objects[k] = pos.unwrap_or(anchors[k]);
            reconstructed.push(pos);
        }
        let cloud = build_point_cloud(&objects, Some(&self.kb), framework)?;
        let reference = ground_truth_cloud(&scene, &self.templates);

        let sent_pts: Vec<[f64; 2]> = sent.iter().flat_map(|f| f.keypoints).collect();
        let got_pts: Vec<[f64; 2]> = corrected.iter().flat_map(|f| f.keypoints).collect();
        let kb_bits = if frame == 0 { self.kb.bit_size() } else { 0 };
        let payload_bits = 576 * self.cameras.len() as u64 + kb_bits;
        let metrics = MetricsReport {
            kpe: kpe(&sent_pts, &got_pts)?,
            chamfer: chamfer_modified(&reference, &cloud)?,
            p2point: p2point(&reference, &cloud)?,
            latency: latency_breakdown(
                self.cfg.latency.t_s,
                wireless_time(payload_bits, self.cfg.link_rate_bps)?,
                ot_seconds,
                self.cfg.latency.t_g,
            )?,
            payload_bits,
        };
        let trace = TrialTrace {
            scene,
            transmitted: sent,
            received,
            corrected,
            flagged,
            ot_seconds,
            reconstructed,
            cloud,
            reference,
        };
        Ok((metrics, trace))
    }

    /// Dense baseline: every reference-cloud point (preceded by the nine
    /// keypoints) is sent as a per-view pixel sample and triangulated back.
    fn dense_trial(&self, channel: ChannelConfig, frame: u64) -> Result<(MetricsReport, TrialTrace)> {
        let img = self.image_size();
        let scene = generate_scene(frame, &self.cfg.motion)?;
        let reference = ground_truth_cloud(&scene, &self.templates);
        let mut samples = scene.keypoints().to_vec();
        samples.extend_from_slice(&reference.points);

        let mut sent_frames = Vec::with_capacity(self.cameras.len());
        let mut received = Vec::with_capacity(self.cameras.len());
        let mut payload_bits = 0;
        for cam in &self.cameras {
            let f = render_sample_frame(&samples, cam)?;
            let payload = encode_samples(&f, img)?;
            payload_bits += payload.bit_size;
            let mut ch = substream(channel.seed, frame, cam.view_id as u32, BLOCK_CHANNEL);
            received.push(decode_samples(&transmit(&payload, &channel, &mut ch)?, img)?);
            sent_frames.push(f);
        }

        let estimates = triangulate_samples(&received, &self.cameras)?;
        let mut reconstructed = Vec::with_capacity(estimates.len());
        for est in estimates {
            reconstructed.push(match est {
                Ok(e) => e.position(),
                Err(Error::SingularGeometry { .. }) => None,
                Err(e) => return Err(e),
            });
        }
        let dense: Vec<[f64; 3]> = reconstructed[KEYPOINT_COUNT..].iter().flatten().copied().collect();
        let cloud = build_point_cloud(&dense, None, Framework::ImageCom)?;

        let as_keypoints = |f: &crate::geometry::SampleFrame| KeypointFrame {
            view_id: f.view_id,
            theta: f.theta,
            keypoints: std::array::from_fn(|k| f.points[k]),
            validity: std::array::from_fn(|k| f.validity[k]),
            clamped: f.clamped,
        };
        let transmitted: Vec<_> = sent_frames.iter().map(as_keypoints).collect();
        let received_kp: Vec<_> = received.iter().map(as_keypoints).collect();
        let sent_pts: Vec<[f64; 2]> = transmitted.iter().flat_map(|f| f.keypoints).collect();
        let got_pts: Vec<[f64; 2]> = received_kp.iter().flat_map(|f| f.keypoints).collect();
        let metrics = MetricsReport {
            kpe: kpe(&sent_pts, &got_pts)?,
            chamfer: chamfer_modified(&reference, &cloud)?,
            p2point: p2point(&reference, &cloud)?,
            latency: latency_breakdown(0.0, wireless_time(payload_bits, self.cfg.link_rate_bps)?, 0.0, 0.0)?,
            payload_bits,
        };
        let trace = TrialTrace {
            scene,
            transmitted,
            received: received_kp.clone(),
            corrected: received_kp,
            flagged: 0,
            ot_seconds: 0.0,
            reconstructed,
            cloud,
            reference,
        };
        Ok((metrics, trace))
    }
}

/// Single-trial convenience wrapper.
pub fn run_trial(cfg: &ExperimentConfig, framework: Framework, channel: ChannelConfig, frame: u64) -> Result<RunRecord> {
    Ok(Session::new(cfg)?.run_trial(framework, channel, frame))
}
