//! Frozen channel output. Regenerate with UPDATE_GOLDEN=1 only when the RNG
//! stream layout changes on purpose.

use std::fs;
use std::path::PathBuf;

use semcom_core::channel::rng::{substream, BLOCK_CHANNEL};
use semcom_core::channel::{encode_keypoints, transmit, ChannelConfig, ChannelKind};
use semcom_core::geometry::{generate_scene, render_keypoint_frame, MotionParams, RingLayout};

fn rayleigh_10db_symbols() -> Vec<f64> {
    let layout = RingLayout::default();
    let cams = layout.cameras().unwrap();
    let scene = generate_scene(0, &MotionParams::default()).unwrap();
    let mut out = Vec::new();
    for cam in &cams[..4] {
        let frame = render_keypoint_frame(&scene, cam, 0.0, &mut substream(0, 0, 0, 0)).unwrap();
        let payload = encode_keypoints(&frame, layout.image_size).unwrap();
        let cfg = ChannelConfig::new(ChannelKind::Rayleigh, 10.0, 1234);
        let mut rng = substream(cfg.seed, 0, cam.view_id as u32, BLOCK_CHANNEL);
        out.extend(transmit(&payload, &cfg, &mut rng).unwrap().symbols);
    }
    out
}

#[test]
fn rayleigh_10db_matches_golden_file() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/rayleigh_10db.txt");
    let text: String = rayleigh_10db_symbols().iter().map(|s| format!("{:016x}\n", s.to_bits())).collect();
    if std::env::var_os("UPDATE_GOLDEN").is_some() || !path.exists() {
        fs::write(&path, &text).unwrap();
    }
    let golden = fs::read_to_string(&path).unwrap();
    assert_eq!(text, golden, "channel output drifted from {}", path.display());
}
