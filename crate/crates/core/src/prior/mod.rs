//! Seeded synthetic prior generators.
//!
//! Every generator perturbs a ground-truth scene into a stale prior. The
//! discrete and rule-based generators also return the change set that maps
//! the prior back to the ground truth. Randomness comes from ChaCha8 seeded
//! with a `u64`, so outputs are reproducible across platforms.

mod continuous;
mod discrete;
mod gap;
mod rulebased;
pub mod synthetic;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use continuous::perturb_continuous;
pub use discrete::perturb_discrete;
pub use gap::{gap_compare, GapError, GapReport, GapRow};
pub use rulebased::{perturb_rulebased, RuleBasedConfig, RuleBasedError, RuleBasedLog};

pub(crate) fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
