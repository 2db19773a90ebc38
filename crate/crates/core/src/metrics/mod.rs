//! Fidelity and latency metrics: key point error, modified chamfer distance,
//! P2Point, and the latency ledger.

mod kdtree;

pub use kdtree::KdTree;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::scalar::{distance, squared_distance, Real};

/// Target clouds larger than this are searched through a [`KdTree`].
pub const KD_TREE_ABOVE: usize = 1000;

/// Mean Euclidean displacement between matched key points.
///
/// Works for pixel key points (`D = 2`, the canonical form) and for
/// triangulated 3D key points (`D = 3`).
pub fn kpe<T: Real, const D: usize>(sent: &[[T; D]], received: &[[T; D]]) -> Result<T> {
    if sent.len() != received.len() {
        return Err(Error::contract(format!(
            "key point counts differ: {} sent, {} received",
            sent.len(),
            received.len()
        )));
    }
    if sent.is_empty() {
        return Err(Error::contract("key point error needs at least one point"));
    }
    let total: T = sent.iter().zip(received).map(|(a, b)| distance(a, b)).sum();
    Ok(total / T::from_count(sent.len()))
}

/// KPE on triangulated 3D key points.
pub fn kpe_3d<T: Real>(sent: &[[T; 3]], received: &[[T; 3]]) -> Result<T> {
    kpe(sent, received)
}

/// For every point of `from`, the squared distance to its nearest point in
/// `to`.
pub fn nearest_squared_distances<T: Real, const D: usize>(
    from: &[[T; D]],
    to: &[[T; D]],
) -> Vec<T> {
    if to.len() > KD_TREE_ABOVE {
        let tree = KdTree::new(to);
        from.iter()
            .map(|p| tree.nearest_squared(p).expect("nonempty tree"))
            .collect()
    } else {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| squared_distance(p, q))
                    .fold(T::infinity(), |a, b| if b < a { b } else { a })
            })
            .collect()
    }
}

fn mean<T: Real>(v: &[T]) -> T {
    let s: T = v.iter().copied().sum();
    s / T::from_count(v.len())
}

fn check_clouds<T: Real>(a: &PointCloud<T>, b: &PointCloud<T>) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::contract("point cloud metrics need nonempty clouds"));
    }
    Ok(())
}

/// Mean squared nearest-neighbour distance from every point of `from` into
/// `to`.
pub fn directed_mean_squared<T: Real>(from: &PointCloud<T>, to: &PointCloud<T>) -> T {
    mean(&nearest_squared_distances(&from.points, &to.points))
}

/// Symmetric chamfer distance between the transmitter cloud `pt` and the
/// receiver cloud `pr`: the sum of both directed mean squared nearest
/// neighbour distances. Geometry only.
pub fn chamfer_modified<T: Real>(pt: &PointCloud<T>, pr: &PointCloud<T>) -> Result<T> {
    check_clouds(pt, pr)?;
    Ok(directed_mean_squared(pt, pr) + directed_mean_squared(pr, pt))
}

/// Directed RMS nearest-neighbour distance.
pub fn d_rms<T: Real>(from: &PointCloud<T>, to: &PointCloud<T>) -> Result<T> {
    check_clouds(from, to)?;
    Ok(directed_mean_squared(from, to).sqrt())
}

/// `max(d_rms(pt, pr), d_rms(pr, pt))`.
pub fn p2point<T: Real>(pt: &PointCloud<T>, pr: &PointCloud<T>) -> Result<T> {
    Ok(d_rms(pt, pr)?.max(d_rms(pr, pt)?))
}

/// Latency components in seconds; `total` is their left-to-right sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LatencyLedger {
    pub t_semantic: f64,
    pub t_wireless: f64,
    pub t_ot: f64,
    pub t_generation: f64,
    pub total: f64,
}

impl LatencyLedger {
    /// Whether `total` still equals the component sum bit for bit.
    pub fn is_consistent(&self) -> bool {
        self.total == self.t_semantic + self.t_wireless + self.t_ot + self.t_generation
    }
}

pub fn latency_breakdown(
    t_semantic: f64,
    t_wireless: f64,
    t_ot: f64,
    t_generation: f64,
) -> Result<LatencyLedger> {
    for (name, v) in [
        ("semantic", t_semantic),
        ("wireless", t_wireless),
        ("ot", t_ot),
        ("generation", t_generation),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::contract(format!(
                "{name} latency must be finite and nonnegative, got {v}"
            )));
        }
    }
    Ok(LatencyLedger {
        t_semantic,
        t_wireless,
        t_ot,
        t_generation,
        total: t_semantic + t_wireless + t_ot + t_generation,
    })
}

/// Air time of `bits` at `rate_bps`.
pub fn wireless_time(bits: u64, rate_bps: f64) -> Result<f64> {
    if !(rate_bps > 0.0) || !rate_bps.is_finite() {
        return Err(Error::contract(format!(
            "link rate must be positive, got {rate_bps}"
        )));
    }
    Ok(bits as f64 / rate_bps)
}

/// One trial's metric bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Pixels.
    pub kpe: f64,
    /// Squared meters.
    pub chamfer: f64,
    /// Meters.
    pub p2point: f64,
    pub latency: LatencyLedger,
    pub payload_bits: u64,
}
