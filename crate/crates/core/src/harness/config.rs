use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{snr_serde, ChannelKind, DEFAULT_RICIAN_K};
use crate::correction::DenoiserConfig;
use crate::error::{Error, Result};
use crate::framework::Framework;
use crate::geometry::{MotionParams, RingLayout};

/// Link rate used for air-time accounting, bits per second.
pub const DEFAULT_LINK_RATE_BPS: f64 = 160e6;

/// Fixed pipeline stage times, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyConstants {
    /// Semantic extraction.
    pub t_s: f64,
    /// Generation / reconstruction.
    pub t_g: f64,
}

impl Default for LatencyConstants {
    fn default() -> Self {
        Self { t_s: 0.05, t_g: 1.0 }
    }
}

/// How the OT stage's time enters the latency ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OtTiming {
    /// Wall-clock time of the correction pass.
    #[default]
    Measured,
    /// A fixed number of seconds; makes output files reproducible byte for byte.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub frameworks: Vec<Framework>,
    pub channels: Vec<ChannelKind>,
    pub rician_k: f64,
    #[serde(with = "snr_serde::list")]
    pub snr_list_db: Vec<f64>,
    pub trials: usize,
    pub frames: u64,
    /// Trial `k` uses seed `seed + k`.
    pub seed: u64,
    /// Keypoint extraction noise, pixels.
    pub extraction_sigma: f64,
    pub motion: MotionParams,
    pub cameras: RingLayout,
    pub denoiser: DenoiserConfig,
    pub link_rate_bps: f64,
    pub latency: LatencyConstants,
    pub ot_timing: OtTiming,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            frameworks: Framework::ALL.to_vec(),
            channels: ChannelKind::ALL.to_vec(),
            rician_k: DEFAULT_RICIAN_K,
            snr_list_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 10,
            frames: 1,
            seed: 42,
            extraction_sigma: 0.0,
            motion: MotionParams::default(),
            cameras: RingLayout::default(),
            denoiser: DenoiserConfig::default(),
            link_rate_bps: DEFAULT_LINK_RATE_BPS,
            latency: LatencyConstants::default(),
            ot_timing: OtTiming::default(),
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frameworks.is_empty() {
            return Err(Error::config("at least one framework is required"));
        }
        if self.channels.is_empty() {
            return Err(Error::config("at least one channel kind is required"));
        }
        if self.snr_list_db.is_empty() {
            return Err(Error::config("snr_list_db must not be empty"));
        }
        if self.snr_list_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(Error::config("SNR values must be finite or \"inf\""));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.frames == 0 {
            return Err(Error::config("frames must be at least 1"));
        }
        if self.channels.contains(&ChannelKind::Rician) && !(self.rician_k > 0.0) {
            return Err(Error::config("rician_k must be positive"));
        }
        if !(self.extraction_sigma >= 0.0) || !self.extraction_sigma.is_finite() {
            return Err(Error::config("extraction_sigma must be finite and nonnegative"));
        }
        if !(self.link_rate_bps > 0.0) || !self.link_rate_bps.is_finite() {
            return Err(Error::config("link_rate_bps must be positive"));
        }
        let LatencyConstants { t_s, t_g } = self.latency;
        if !(t_s >= 0.0 && t_g >= 0.0 && t_s.is_finite() && t_g.is_finite()) {
            return Err(Error::config("latency constants must be finite and nonnegative"));
        }
        if let OtTiming::Fixed(t) = self.ot_timing {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::config("fixed OT time must be finite and nonnegative"));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be at least 1"));
        }
        self.motion.validate()?;
        if self.frameworks.iter().any(|f| f.uses_ot()) {
            self.denoiser.validate()?;
        }
        Ok(())
    }
}
