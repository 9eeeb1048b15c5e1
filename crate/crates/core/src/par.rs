//! Data-parallel trial execution. Independent Monte Carlo trials (mints,
//! sign batches, attack scenarios) are mapped over a trial index, each with
//! an rng derived from (seed, trial), so results are identical whether the
//! batch runs sequentially or on the rayon pool.
//!
//! The `parallel` feature (on by default) routes [`map_trials`] through
//! rayon; without it the sequential path is used. Both paths are exported
//! for the benchmark suite.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-trial rng: one ChaCha stream per trial index on top of the scenario
/// seed. Stream 0 is reserved for setup.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_add(1));
    rng
}

pub fn map_trials_seq<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_trials_par<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over trial indices `0..n`, in parallel when the `parallel`
/// feature is enabled. Output order is always by trial index.
pub fn map_trials<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_trials_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_trials_seq(n, f)
    }
}

/// Fallible variant of [`map_trials`]: collects per-trial results, failing
/// on the first error (by trial order).
pub fn try_map_trials<T, E, F>(n: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    map_trials(n, f).into_iter().collect()
}
