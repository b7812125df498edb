//! Wall-clock sampling for the benchmarks.

use std::time::Instant;

/// Discarded rounds before recording starts.
pub const WARMUP: usize = 2;

/// Pin the calling thread to the first core. Best effort; returns whether it
/// worked.
pub fn pin_current_thread() -> bool {
    core_affinity::get_core_ids()
        .and_then(|ids| ids.first().copied())
        .map(core_affinity::set_for_current)
        .unwrap_or(false)
}

/// Nanoseconds spent in `f` (at least 1).
#[inline]
pub fn time_ns(f: impl FnOnce()) -> u64 {
    let t = Instant::now();
    f();
    (t.elapsed().as_nanos() as u64).max(1)
}

/// Run every trial once per round: `warmup` rounds are thrown away, then
/// `reps` rounds are recorded. Each trial prepares its own inputs and returns
/// the duration of its timed region only, so preparation never counts.
/// Alternating the trials keeps slow drifts of the machine from favouring one
/// of them. Stops at the first failing trial.
pub fn interleaved<E>(
    reps: usize,
    warmup: usize,
    trials: &mut [&mut dyn FnMut() -> Result<u64, E>],
) -> Result<Vec<Vec<u64>>, E> {
    let mut out = vec![Vec::with_capacity(reps); trials.len()];
    for round in 0..warmup + reps {
        for (t, samples) in trials.iter_mut().zip(out.iter_mut()) {
            let ns = t()?;
            if round >= warmup {
                samples.push(ns);
            }
        }
    }
    Ok(out)
}

/// Time `f`, passing its error through.
#[inline]
pub fn time_result<E>(f: impl FnOnce() -> Result<(), E>) -> Result<u64, E> {
    let mut res = Ok(());
    let ns = time_ns(|| res = f());
    res.map(|_| ns)
}

/// Median of the samples; the mean of the two middle values for even counts.
pub fn median(samples: &[u64]) -> u64 {
    assert!(!samples.is_empty(), "median of no samples");
    let mut v = samples.to_vec();
    v.sort_unstable();
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        (v[k - 1] + v[k]) / 2
    }
}
