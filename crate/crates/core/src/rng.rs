//! Named, indexed random substreams derived from one root seed.
//!
//! Every random decision in a run draws from `stream(root, name, index)`, where
//! the index is the step (or refit, or record) it belongs to. A stream's state is
//! therefore a pure function of its position, and resuming from a log needs no
//! saved generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const INIT_DESIGN: &str = "init-design";
pub const WEIGHT_SAMPLER: &str = "weight-sampler";
pub const TS_DRAWS: &str = "ts-draws";
pub const MLE_RESTARTS: &str = "mle-restarts";
pub const OBJECTIVE_NOISE: &str = "objective-noise";
pub const RANDOM_SEARCH: &str = "random-search";

pub fn stream(root: u64, name: &str, index: &[u64]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update((name.len() as u64).to_le_bytes());
    h.update(name.as_bytes());
    for i in index {
        h.update(i.to_le_bytes());
    }
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(seed)
}
