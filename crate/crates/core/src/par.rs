//! Deterministic replicate streams and the parallel map behind every
//! Monte Carlo loop. With the `parallel` feature the map runs on the rayon
//! pool; without it the same closures run in order. Results are identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per batch in batched estimators.
pub const BATCH: usize = 1024;

/// Independent ChaCha8 stream `stream` under `base_seed`.
pub fn stream_rng(base_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(stream);
    rng
}

/// `(0..n).map(f)` in index order, in parallel when enabled.
pub fn map_indexed<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Splits `samples` into batches of [`BATCH`] and maps each batch size
/// with its own stream.
pub fn map_batches<T, F>(samples: usize, base_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    let batches = samples.div_ceil(BATCH) as u64;
    map_indexed(batches, |j| {
        let size = BATCH.min(samples - j as usize * BATCH);
        f(size, &mut stream_rng(base_seed, j))
    })
}

/// Worker count: `PAVD_THREADS` if set and positive, else the rayon default.
pub fn configured_threads() -> Option<usize> {
    std::env::var("PAVD_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
