//! Synthetic task-duration workloads and a greedy list-scheduling simulator.
//!
//! The workload mixes a large mass of near-zero tasks with a small bump of
//! long ones. Once there are more workers than long tasks, the makespan is
//! pinned by the longest task and extra workers stop helping.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{Error, Result};

/// Mean duration of a fast task, in seconds.
pub const FAST_MEAN_SECONDS: f64 = 0.02;
/// Standard deviation of the heavy bump relative to its mode.
pub const BUMP_RELATIVE_SD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorkload {
    pub durations: Vec<f64>,
}

/// `round(n_tasks * (1 - fast_fraction))` heavy tasks drawn from
/// `Normal(bump_mode, 0.1 * bump_mode)` truncated at 0, the rest
/// `Exp(mean 0.02 s)`, shuffled into a seeded queue order.
pub fn synth_workload(
    n_tasks: usize,
    fast_fraction: f64,
    bump_mode_seconds: f64,
    seed: u64,
) -> Result<SyntheticWorkload> {
    if !(fast_fraction > 0.0 && fast_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fast_fraction {fast_fraction} not in (0, 1)"
        )));
    }
    if !(bump_mode_seconds.is_finite() && bump_mode_seconds > 0.0) {
        return Err(Error::InvalidArgument(
            "bump mode must be a positive number of seconds".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_heavy = ((n_tasks as f64) * (1.0 - fast_fraction)).round() as usize;
    let fast = Exp::new(1.0 / FAST_MEAN_SECONDS).expect("positive rate");
    let heavy = Normal::new(bump_mode_seconds, BUMP_RELATIVE_SD * bump_mode_seconds).expect("positive sd");
    let mut durations: Vec<f64> = (0..n_tasks)
        .map(|k| {
            if k < n_heavy {
                heavy.sample(&mut rng).max(0.0)
            } else {
                fast.sample(&mut rng)
            }
        })
        .collect();
    durations.shuffle(&mut rng);
    Ok(SyntheticWorkload { durations })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Slot {
    free_at: f64,
    worker: usize,
}

impl Eq for Slot {}

impl Ord for Slot {
    fn cmp(&self, other: &Self) -> Ordering {
        self.free_at
            .total_cmp(&other.free_at)
            .then(self.worker.cmp(&other.worker))
    }
}

impl PartialOrd for Slot {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Assigns tasks in queue order to the earliest-free worker (lowest index on
/// ties) and returns the makespan.
pub fn simulate_schedule(durations: &[f64], workers: usize) -> Result<f64> {
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be >= 1".into()));
    }
    if durations.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidArgument(
            "task durations must be finite and >= 0".into(),
        ));
    }
    // workers beyond the task count never receive work
    let active = workers.min(durations.len()).max(1);
    let mut heap: BinaryHeap<Reverse<Slot>> = (0..active)
        .map(|worker| Reverse(Slot { free_at: 0.0, worker }))
        .collect();
    let mut makespan = 0.0f64;
    for &d in durations {
        let Reverse(slot) = heap.pop().expect("at least one worker");
        let done = slot.free_at + d;
        makespan = makespan.max(done);
        heap.push(Reverse(Slot {
            free_at: done,
            worker: slot.worker,
        }));
    }
    Ok(makespan)
}
