//! Seed derivation. Every random stream is a pure function of the run seed,
//! a purpose tag and an index (step, epoch, ...), so training can resume
//! mid-run and reproduce the uninterrupted trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PURPOSE_INIT: u64 = 0x696e_6974;
pub const PURPOSE_AGGREGATOR: u64 = 0x6167_6772;
pub const PURPOSE_SHUFFLE: u64 = 0x7368_7566;
pub const PURPOSE_STEP: u64 = 0x7374_6570;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derived_rng(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(purpose)));
    rng.set_stream(index);
    rng
}
