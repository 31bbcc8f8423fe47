//! Enumeration of the ways `N` users can split across `M` channels.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest partition set we are willing to materialize.
pub const MAX_PARTITIONS: u64 = 10_000_000;

/// One composition `(n_1, …, n_M)` with `Σ n_j = N`, and the log of its
/// multinomial coefficient `N! / ∏ n_j!`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub counts: Vec<usize>,
    pub weight_log: f64,
}

impl Partition {
    pub fn multinomial(&self) -> f64 {
        self.weight_log.exp()
    }

    /// Log-probability of this split when every user independently picks
    /// channel `j` with probability `probs[j]`. `None` when impossible.
    pub fn log_prob(&self, probs: &[f64]) -> Option<f64> {
        let mut acc = self.weight_log;
        for (&n, &q) in self.counts.iter().zip(probs) {
            if n > 0 {
                if q <= 0.0 {
                    return None;
                }
                acc += n as f64 * q.ln();
            }
        }
        Some(acc)
    }

    pub fn prob(&self, probs: &[f64]) -> f64 {
        self.log_prob(probs).map_or(0.0, f64::exp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    pub users: usize,
    pub channels: usize,
    pub parts: Vec<Partition>,
}

impl PartitionSet {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Partition> {
        self.parts.iter()
    }
}

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Number of compositions, `C(N+M-1, M-1)`, as a float.
pub fn partition_count(users: usize, channels: usize) -> f64 {
    if channels == 0 {
        return 0.0;
    }
    let ln = ln_factorial(users + channels - 1) - ln_factorial(users) - ln_factorial(channels - 1);
    ln.exp().round()
}

/// All compositions in lexicographically descending order of the counts,
/// e.g. `(2,0), (1,1), (0,2)`.
pub fn enumerate_partitions(users: usize, channels: usize) -> Result<PartitionSet> {
    if users < 1 || channels < 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least one user and one channel (got {users} and {channels})"
        )));
    }
    let count = partition_count(users, channels);
    if count > MAX_PARTITIONS as f64 {
        return Err(Error::Capacity {
            users,
            channels,
            count,
            limit: MAX_PARTITIONS,
        });
    }

    let ln_n = ln_factorial(users);
    let mut parts = Vec::with_capacity(count as usize);
    let mut counts = vec![0usize; channels];
    fill(&mut counts, 0, users, &mut |c| {
        let weight_log = ln_n - c.iter().map(|&k| ln_factorial(k)).sum::<f64>();
        parts.push(Partition {
            counts: c.to_vec(),
            weight_log,
        });
    });
    Ok(PartitionSet {
        users,
        channels,
        parts,
    })
}

fn fill(counts: &mut [usize], j: usize, remaining: usize, emit: &mut impl FnMut(&[usize])) {
    if j + 1 == counts.len() {
        counts[j] = remaining;
        emit(counts);
        return;
    }
    for k in (0..=remaining).rev() {
        counts[j] = k;
        fill(counts, j + 1, remaining - k, emit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_row() {
        let set = enumerate_partitions(2, 2).unwrap();
        let counts: Vec<_> = set.iter().map(|p| p.counts.clone()).collect();
        assert_eq!(counts, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let w: Vec<f64> = set.iter().map(|p| p.multinomial().round()).collect();
        assert_eq!(w, vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn sizes_and_weights() {
        assert_eq!(enumerate_partitions(50, 3).unwrap().len(), 1326);
        let total: f64 = enumerate_partitions(3, 2).unwrap().iter().map(|p| p.multinomial()).sum();
        assert!((total - 8.0).abs() < 1e-9);
        for p in enumerate_partitions(7, 4).unwrap().iter() {
            assert_eq!(p.counts.iter().sum::<usize>(), 7);
        }
    }

    #[test]
    fn single_channel() {
        let set = enumerate_partitions(9, 1).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.parts[0].counts, vec![9]);
        assert!(set.parts[0].weight_log.abs() < 1e-9);
    }

    #[test]
    fn capacity_refused() {
        assert!(matches!(
            enumerate_partitions(200, 6),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn masses_sum_to_one() {
        let set = enumerate_partitions(12, 3).unwrap();
        let probs = [0.2, 0.5, 0.3];
        let total: f64 = set.iter().map(|p| p.prob(&probs)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let vertex = [0.0, 1.0, 0.0];
        let total: f64 = set.iter().map(|p| p.prob(&vertex)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
