//! Analytical model of the p-persistent CSMA contention phase.
//!
//! Idle-slot and collision counts are kept in slots and converted to seconds
//! only when combined with message durations.

use crate::model::MacTimings;

/// Outcome probabilities of a generic contention slot with `n` contenders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProbs {
    pub succ: f64,
    pub idle: f64,
    pub coll: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentionBreakdown {
    /// Mean run of idle slots before each RTS attempt.
    pub mean_idle_slots: f64,
    /// Mean number of collisions before the successful reservation.
    pub mean_collisions: f64,
    pub t_succ: f64,
    pub t_coll: f64,
    pub mean_contention: f64,
    /// Reservation overhead: contention plus the SIFS/ACK tail.
    pub overhead: f64,
}

pub fn slot_probs(n: usize, p: f64) -> SlotProbs {
    debug_assert!(n >= 1);
    let q = 1.0 - p;
    let succ = n as f64 * p * q.powi(n as i32 - 1);
    let idle = q.powi(n as i32);
    // a lone contender cannot collide; avoid the rounding residue
    let coll = if n == 1 { 0.0 } else { (1.0 - succ - idle).max(0.0) };
    SlotProbs { succ, idle, coll }
}

/// Ratio of the collision geometric: probability that a busy slot is a
/// collision rather than a success.
fn collision_ratio(s: &SlotProbs) -> f64 {
    s.coll / (1.0 - s.idle)
}

/// Probability of exactly `x` collisions before the first success.
pub fn collision_count_pmf(n: usize, p: f64, x: u32) -> f64 {
    let r = collision_ratio(&slot_probs(n, p));
    r.powi(x as i32) * (1.0 - r)
}

/// Probability that a run of consecutive idle slots has length `x`.
pub fn idle_run_pmf(n: usize, p: f64, x: u32) -> f64 {
    let idle = slot_probs(n, p).idle;
    idle.powi(x as i32) * (1.0 - idle)
}

pub fn mean_idle_slots(n: usize, p: f64) -> f64 {
    let idle = (1.0 - p).powi(n as i32);
    idle / (1.0 - idle)
}

pub fn mean_collisions(n: usize, p: f64) -> f64 {
    // (1 - P_idle) / P_succ - 1, written as P_coll / P_succ
    let s = slot_probs(n, p);
    s.coll / s.succ
}

pub fn mean_contention(n: usize, p: f64, timings: &MacTimings) -> ContentionBreakdown {
    let idle_slots = mean_idle_slots(n, p);
    let collisions = mean_collisions(n, p);
    let t_succ = timings.t_succ();
    let t_coll = timings.t_coll();
    let mean_contention =
        collisions * t_coll + idle_slots * timings.slot * (collisions + 1.0) + t_succ;
    ContentionBreakdown {
        mean_idle_slots: idle_slots,
        mean_collisions: collisions,
        t_succ,
        t_coll,
        mean_contention,
        overhead: mean_contention + timings.post_contention(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Slot outcome probabilities by enumerating every transmit pattern.
    fn brute_force(n: usize, p: f64) -> SlotProbs {
        let mut out = SlotProbs { succ: 0.0, idle: 0.0, coll: 0.0 };
        for mask in 0u32..(1 << n) {
            let k = mask.count_ones() as i32;
            let w = p.powi(k) * (1.0 - p).powi(n as i32 - k);
            match k {
                0 => out.idle += w,
                1 => out.succ += w,
                _ => out.coll += w,
            }
        }
        out
    }

    #[test]
    fn single_contender() {
        let s = slot_probs(1, 0.3);
        assert!((s.succ - 0.3).abs() < 1e-15);
        assert!((s.idle - 0.7).abs() < 1e-15);
        assert_eq!(s.coll, 0.0);
        assert_eq!(collision_count_pmf(1, 0.3, 0), 1.0);
        let b = mean_contention(1, 0.3, &MacTimings::ieee80211());
        assert_eq!(b.mean_collisions, 0.0);
        assert!((b.mean_idle_slots - 0.7 / 0.3).abs() < 1e-12);
        let t = MacTimings::ieee80211();
        assert!((b.mean_contention - (b.mean_idle_slots * t.slot + t.t_succ())).abs() < 1e-15);
    }

    #[test]
    fn matches_enumeration() {
        for n in 1..=10 {
            for p in [0.01, 0.1, 0.5, 0.9] {
                let a = slot_probs(n, p);
                let b = brute_force(n, p);
                assert!((a.succ - b.succ).abs() < 1e-12);
                assert!((a.idle - b.idle).abs() < 1e-12);
                assert!((a.coll - b.coll).abs() < 1e-12);
            }
        }
        let s = slot_probs(2, 0.5);
        assert_eq!((s.succ, s.idle, s.coll), (0.5, 0.25, 0.25));
    }

    #[test]
    fn fifty_users_operating_point() {
        let s = slot_probs(50, 0.0022);
        // 50 · 0.0022 · 0.9978^49
        assert!((s.succ - 0.098_747_06).abs() < 1e-8, "{}", s.succ);
        assert!((s.idle - 0.8957).abs() < 1e-4, "{}", s.idle);
    }

    #[test]
    fn collision_pmf_values() {
        assert!((collision_count_pmf(2, 0.5, 1) - 2.0 / 9.0).abs() < 1e-12);
        let total: f64 = (0..=1000).map(|x| collision_count_pmf(10, 0.1, x)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_contenders_half() {
        let b = mean_contention(2, 0.5, &MacTimings::ieee80211());
        assert!((b.mean_collisions - 0.5).abs() < 1e-12);
        assert!((b.mean_idle_slots - 1.0 / 3.0).abs() < 1e-12);
        assert!(b.overhead >= b.mean_contention);
    }

    #[test]
    fn means_match_pmfs() {
        for (n, p) in [(2, 0.1), (5, 0.05), (20, 0.01), (50, 0.0022), (64, 0.02)] {
            let mut coll_mean = 0.0;
            let mut idle_mean = 0.0;
            for x in 0..200_000u32 {
                let c = collision_count_pmf(n, p, x);
                let i = idle_run_pmf(n, p, x);
                coll_mean += x as f64 * c;
                idle_mean += x as f64 * i;
                if c < 1e-18 && i < 1e-18 && x > 10 {
                    break;
                }
            }
            assert!((coll_mean - mean_collisions(n, p)).abs() < 1e-9, "{n} {p}");
            assert!((idle_mean - mean_idle_slots(n, p)).abs() < 1e-9, "{n} {p}");
        }
    }

    #[test]
    fn unique_minimum_in_p() {
        let t = MacTimings::ieee80211();
        for n in [2usize, 5, 20, 50] {
            let grid: Vec<f64> = (1..2000).map(|i| i as f64 / 2000.0).collect();
            let vals: Vec<f64> = grid.iter().map(|&p| mean_contention(n, p, &t).mean_contention).collect();
            let argmin = vals
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert!(argmin > 0 && argmin < vals.len() - 1);
            assert!(vals[..=argmin].windows(2).all(|w| w[1] < w[0]), "n = {n}");
            assert!(vals[argmin..].windows(2).all(|w| w[1] > w[0]), "n = {n}");
        }
    }
}
