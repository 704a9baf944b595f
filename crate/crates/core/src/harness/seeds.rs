//! Role-tagged reproducible random streams.
//!
//! Every random draw in a simulation comes from a stream derived from
//! `(master seed, role, SNR index, frame index)`, so adding detectors or
//! changing the worker count never shifts the channel, bit or noise
//! realizations, and any frame can be regenerated in isolation.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Paths,
    Bits,
    Noise,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Paths => 0x5041_5448,
            StreamRole::Bits => 0x4249_5453,
            StreamRole::Noise => 0x4e4f_4953,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the RNG for one role of one frame.
pub fn frame_rng(master_seed: u64, role: StreamRole, snr_index: u64, frame_index: u64) -> ChaCha12Rng {
    let mut state = master_seed;
    // Absorb the coordinates, then squeeze a 256-bit seed.
    for word in [role.tag(), snr_index, frame_index] {
        state ^= word.wrapping_mul(0xA24B_AED4_963E_E407);
        let _ = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
