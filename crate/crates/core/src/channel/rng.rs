//! Random substreams.
//!
//! Every random draw comes from a ChaCha8 stream (`rand_chacha`). The 256-bit
//! key is the splitmix64 expansion of `(trial seed, frame)`, and the 64-bit
//! stream id is `view << 32 | block`. A draw therefore depends only on its
//! `(seed, frame, view, block)` coordinates and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Block reserved for keypoint extraction noise.
pub const BLOCK_EXTRACTION: u32 = 0;
/// Block reserved for channel gains and noise.
pub const BLOCK_CHANNEL: u32 = 1;
/// View slot used for draws that belong to no camera.
pub const VIEW_NONE: u32 = u32::MAX;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, frame: u64, view: u32, block: u32) -> ChaCha8Rng {
    let mut state = seed ^ splitmix64(&mut frame.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((view as u64) << 32) | block as u64);
    rng
}
