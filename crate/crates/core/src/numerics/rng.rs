use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic random stream identified by a master seed and a sequence
/// of integer labels (scenario hash, replication index, purpose tag, ...).
///
/// The labels are folded into a 256-bit ChaCha key with SplitMix64, so the
/// output depends only on the construction parameters and never on thread
/// scheduling.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, labels: &[u64]) -> Self {
        let mut state = master_seed;
        let mut acc = splitmix64(&mut state);
        for (i, &label) in labels.iter().enumerate() {
            let mut s = label ^ (i as u64).rotate_left(32) ^ acc;
            acc = splitmix64(&mut s) ^ splitmix64(&mut state);
        }
        let mut key = [0u8; 32];
        let mut s = acc;
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
        }
        RngStream {
            inner: ChaCha8Rng::from_seed(key),
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// 64-bit FNV-1a hash; stable across platforms and releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
