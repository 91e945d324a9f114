//! Benchmark fixtures shared by the criterion targets in `benches/`.

use diskop_core::gen::{random_config, trial_rng, GenContext};
use diskop_core::{Config, MembershipLevel, NumericMode, Params};

/// A deterministic star configuration for benchmarking.
pub fn star_config(mode: NumericMode, arity: usize, seed: u64) -> Config {
    let params = Params::default();
    let ctx = GenContext::plane(mode);
    let mut rng = trial_rng(seed, "bench", arity as u64);
    random_config(&mut rng, &ctx, arity, MembershipLevel::Star, &params)
        .expect("benchmark fixture generates")
}
