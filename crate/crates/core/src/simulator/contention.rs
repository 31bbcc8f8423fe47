//! Bare p-persistent contention cycles: no PU, no data phase.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::model::MacTimings;

use super::stats::Running;

/// Empirical counterpart of [`crate::contention::ContentionBreakdown`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContentionEstimate {
    pub cycles: u64,
    /// Idle slots per idle run (one run precedes every RTS attempt).
    pub idle_slots: Running,
    /// Collisions per cycle.
    pub collisions: Running,
    /// Cycle duration in seconds.
    pub contention: Running,
    pub idle_count: u64,
    pub success_count: u64,
    pub collision_count: u64,
}

impl ContentionEstimate {
    pub fn slots(&self) -> u64 {
        self.idle_count + self.success_count + self.collision_count
    }
}

pub fn simulate_contention_only(
    n: usize,
    p: f64,
    timings: &MacTimings,
    cycles: u64,
    seed: u64,
) -> ContentionEstimate {
    assert!(n >= 1 && cycles >= 1 && p > 0.0 && p <= 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempts = Binomial::new(n as u64, p).expect("valid binomial");
    let mut out = ContentionEstimate {
        cycles,
        idle_slots: Running::default(),
        collisions: Running::default(),
        contention: Running::default(),
        idle_count: 0,
        success_count: 0,
        collision_count: 0,
    };
    for _ in 0..cycles {
        let mut run = 0u64;
        let mut colls = 0u64;
        let mut time = 0.0;
        loop {
            match attempts.sample(&mut rng) {
                0 => {
                    run += 1;
                    time += timings.slot;
                }
                1 => {
                    out.idle_slots.push(run as f64);
                    time += timings.t_succ();
                    break;
                }
                _ => {
                    out.idle_slots.push(run as f64);
                    out.idle_count += run;
                    run = 0;
                    colls += 1;
                    time += timings.t_coll();
                }
            }
        }
        out.idle_count += run;
        out.success_count += 1;
        out.collision_count += colls;
        out.collisions.push(colls as f64);
        out.contention.push(time);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_user_never_collides() {
        let e = simulate_contention_only(1, 0.5, &MacTimings::ieee80211(), 10_000, 1);
        assert_eq!(e.collision_count, 0);
        assert_eq!(e.collisions.mean(), 0.0);
        assert_eq!(e.slots(), e.idle_count + 10_000);
    }

    #[test]
    fn same_seed_same_estimate() {
        let t = MacTimings::ieee80211();
        let a = simulate_contention_only(5, 0.05, &t, 1000, 7);
        let b = simulate_contention_only(5, 0.05, &t, 1000, 7);
        assert_eq!(a, b);
    }
}
