use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{snap_pixel, KeypointFrame, SampleFrame, KEYPOINT_COUNT};

/// Bits per transmitted real symbol.
pub const BITS_PER_SYMBOL: u64 = 32;

/// Affine map of one coordinate onto `[0, 1]`: `symbol = (x - min) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub scale: f64,
}

/// Control information that travels error-free alongside the symbols.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameHeader {
    pub view_id: usize,
    pub theta: f64,
    pub validity: Vec<bool>,
}

/// Normalized real symbols, interleaved `u0 v0 u1 v1 ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub symbols: Vec<f64>,
    /// One entry per point dimension.
    pub normalization: Vec<Normalization>,
    pub bit_size: u64,
    pub header: FrameHeader,
    /// Set when encoding had to clamp an out-of-image coordinate.
    pub clamped: bool,
}

/// Air size of one dense view: every pixel, 3 channels, 8 bits each.
pub fn dense_view_bits(image_size: [u32; 2]) -> u64 {
    image_size[0] as u64 * image_size[1] as u64 * 3 * 8
}

fn image_normalization(image_size: [u32; 2]) -> Result<Vec<Normalization>> {
    let [w, h] = image_size;
    if w == 0 || h == 0 {
        return Err(Error::contract("image size must be positive"));
    }
    Ok(vec![
        Normalization { min: 0.0, scale: w as f64 },
        Normalization { min: 0.0, scale: h as f64 },
    ])
}

/// Divides pixel coordinates by the image size. Out-of-image coordinates are
/// clamped to the border and flagged.
pub fn encode_points(points: &[[f64; 2]], image_size: [u32; 2], header: FrameHeader) -> Result<Payload> {
    let norm = image_normalization(image_size)?;
    let mut symbols = Vec::with_capacity(2 * points.len());
    let mut clamped = false;
    for p in points {
        for (x, n) in p.iter().zip(&norm) {
            if !x.is_finite() {
                return Err(Error::contract("pixel coordinates must be finite"));
            }
            let c = x.clamp(n.min, n.min + n.scale);
            clamped |= c != *x;
            symbols.push((c - n.min) / n.scale);
        }
    }
    Ok(Payload {
        bit_size: BITS_PER_SYMBOL * symbols.len() as u64,
        symbols,
        normalization: norm,
        header,
        clamped,
    })
}

/// Inverse of [`encode_points`]. Decoded coordinates land on the pixel grid
/// used by rendering, so noiseless round trips are exact.
pub fn decode_points(payload: &Payload, image_size: [u32; 2]) -> Result<(Vec<[f64; 2]>, bool)> {
    let norm = image_normalization(image_size)?;
    if payload.normalization != norm {
        return Err(Error::contract(format!(
            "payload was normalized for a different image size than {}x{}",
            image_size[0], image_size[1]
        )));
    }
    if payload.symbols.len() % 2 != 0 {
        return Err(Error::contract("payload carries an odd number of symbols"));
    }
    let mut clamped = payload.clamped;
    let points = payload
        .symbols
        .chunks_exact(2)
        .map(|s| {
            let mut p = [0.0; 2];
            for k in 0..2 {
                let n = norm[k];
                let x = snap_pixel(n.min + s[k] * n.scale);
                let c = if x.is_nan() { n.min } else { x.clamp(n.min, n.min + n.scale) };
                clamped |= c != x;
                p[k] = c;
            }
            p
        })
        .collect();
    Ok((points, clamped))
}

pub fn encode_keypoints(frame: &KeypointFrame, image_size: [u32; 2]) -> Result<Payload> {
    encode_points(
        &frame.keypoints,
        image_size,
        FrameHeader {
            view_id: frame.view_id,
            theta: frame.theta,
            validity: frame.validity.to_vec(),
        },
    )
}

pub fn decode_keypoints(payload: &Payload, image_size: [u32; 2]) -> Result<KeypointFrame> {
    let (points, clamped) = decode_points(payload, image_size)?;
    let keypoints: [[f64; 2]; KEYPOINT_COUNT] = points.try_into().map_err(|p: Vec<_>| {
        Error::contract(format!("expected {KEYPOINT_COUNT} keypoints, got {}", p.len()))
    })?;
    let validity = payload
        .header
        .validity
        .clone()
        .try_into()
        .unwrap_or([true; KEYPOINT_COUNT]);
    Ok(KeypointFrame {
        view_id: payload.header.view_id,
        theta: payload.header.theta,
        keypoints,
        validity,
        clamped,
    })
}

/// Dense samples; the air size is that of the full image.
pub fn encode_samples(frame: &SampleFrame, image_size: [u32; 2]) -> Result<Payload> {
    let mut p = encode_points(
        &frame.points,
        image_size,
        FrameHeader {
            view_id: frame.view_id,
            theta: frame.theta,
            validity: frame.validity.clone(),
        },
    )?;
    p.bit_size = dense_view_bits(image_size);
    Ok(p)
}

pub fn decode_samples(payload: &Payload, image_size: [u32; 2]) -> Result<SampleFrame> {
    let (points, clamped) = decode_points(payload, image_size)?;
    let mut validity = payload.header.validity.clone();
    validity.resize(points.len(), true);
    Ok(SampleFrame {
        view_id: payload.header.view_id,
        theta: payload.header.theta,
        points,
        validity,
        clamped,
    })
}
