//! Flat-fading channel with perfect channel knowledge at the receiver.

mod payload;
pub mod rng;

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use payload::{
    decode_keypoints, decode_points, decode_samples, dense_view_bits, encode_keypoints,
    encode_points, encode_samples, FrameHeader, Normalization, Payload, BITS_PER_SYMBOL,
};

/// Received symbols are clamped to this range.
pub const SYMBOL_CLAMP: (f64, f64) = (-0.5, 1.5);
pub const DEFAULT_RICIAN_K: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Awgn,
    Rayleigh,
    Rician,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 3] = [ChannelKind::Awgn, ChannelKind::Rayleigh, ChannelKind::Rician];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::Rayleigh => "rayleigh",
            ChannelKind::Rician => "rician",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChannelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown channel kind `{s}`")))
    }
}

/// Serde adapter for SNR values: numbers, or `"inf"` for a noiseless link.
pub mod snr_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => parse_snr(&t).map_err(serde::de::Error::custom),
        }
    }

    /// Sequence form of the same adapter.
    pub mod list {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
            use serde::ser::SerializeSeq;
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&Snr(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
            Ok(Vec::<Snr>::deserialize(d)?.into_iter().map(|s| s.0).collect())
        }
    }

    #[derive(Serialize, Deserialize)]
    struct Snr(#[serde(with = "super::snr_serde")] f64);
}

/// Parses an SNR in dB; accepts `inf` / `+inf` / `infinity`.
pub fn parse_snr(text: &str) -> Result<f64> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| Error::config(format!("invalid SNR `{text}`"))),
    }
}

pub fn format_snr(snr_db: f64) -> String {
    if snr_db.is_infinite() && snr_db > 0.0 {
        "inf".to_owned()
    } else {
        format!("{snr_db}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    #[serde(with = "snr_serde")]
    pub snr_db: f64,
    #[serde(default = "default_k")]
    pub rician_k: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> f64 {
    DEFAULT_RICIAN_K
}

impl ChannelConfig {
    pub fn new(kind: ChannelKind, snr_db: f64, seed: u64) -> Self {
        Self {
            kind,
            snr_db,
            rician_k: DEFAULT_RICIAN_K,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::config(format!(
                "snr_db must be finite or +inf, got {}",
                self.snr_db
            )));
        }
        if self.kind == ChannelKind::Rician && !(self.rician_k > 0.0) {
            return Err(Error::config(format!(
                "rician_k must be positive, got {}",
                self.rician_k
            )));
        }
        Ok(())
    }

    /// Noise variance relative to unit signal power, `10^(-snr/10)`.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

fn half_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * std::f64::consts::FRAC_1_SQRT_2
}

/// `sqrt(n1^2 + n2^2)`.
pub fn rayleigh_from_components(n1: f64, n2: f64) -> f64 {
    n1.hypot(n2)
}

/// Rayleigh fading gain with `E[h^2] = 1`.
pub fn rayleigh_gain<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let n1 = half_normal(rng);
    let n2 = half_normal(rng);
    rayleigh_from_components(n1, n2)
}

/// `|mu + z|` with `mu = sqrt(k/(k+1))` and complex Gaussian `z` of
/// variance `1/(k+1)`, so that `E[h^2] = 1`.
pub fn rician_from_components(k: f64, n1: f64, n2: f64) -> f64 {
    if k.is_infinite() {
        return 1.0;
    }
    let mu = (k / (k + 1.0)).sqrt();
    let s = (1.0 / (k + 1.0)).sqrt();
    (mu + s * n1).hypot(s * n2)
}

pub fn rician_gain<R: Rng + ?Sized>(rng: &mut R, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::contract(format!("rician k must be positive, got {k}")));
    }
    let n1 = half_normal(rng);
    let n2 = half_normal(rng);
    Ok(rician_from_components(k, n1, n2))
}

fn draw_gain<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> f64 {
    loop {
        let h = match cfg.kind {
            ChannelKind::Awgn => 1.0,
            ChannelKind::Rayleigh => rayleigh_gain(rng),
            ChannelKind::Rician => rician_from_components(cfg.rician_k, half_normal(rng), half_normal(rng)),
        };
        if h >= f64::MIN_POSITIVE {
            return h;
        }
    }
}

/// Equalized received symbols `(h x + n) / h`, before clamping.
///
/// The gain is drawn before the noise for every symbol, and the noise is a
/// standard normal scaled by `sigma`, so equal seeds give common random
/// numbers across SNR values.
pub fn equalize<R: Rng + ?Sized>(symbols: &[f64], cfg: &ChannelConfig, rng: &mut R) -> Result<Vec<f64>> {
    cfg.validate()?;
    if cfg.snr_db == f64::INFINITY {
        return Ok(symbols.to_vec());
    }
    let sigma = cfg.noise_variance().sqrt();
    Ok(symbols
        .iter()
        .map(|&x| {
            let h = draw_gain(cfg, rng);
            let z: f64 = rng.sample(StandardNormal);
            (h * x + sigma * z) / h
        })
        .collect())
}

/// Sends a payload: [`equalize`], then clamp to [`SYMBOL_CLAMP`].
pub fn transmit<R: Rng + ?Sized>(payload: &Payload, cfg: &ChannelConfig, rng: &mut R) -> Result<Payload> {
    let mut out = payload.clone();
    if cfg.snr_db == f64::INFINITY {
        cfg.validate()?;
        return Ok(out);
    }
    out.symbols = equalize(&payload.symbols, cfg, rng)?
        .into_iter()
        .map(|y| y.clamp(SYMBOL_CLAMP.0, SYMBOL_CLAMP.1))
        .collect();
    Ok(out)
}
