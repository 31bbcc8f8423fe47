//! Per-channel bit accounting, per-channel throughput and the network
//! throughput averaged over channel-selection outcomes.
//!
//! A data phase of length `T` starts with the PU idle (carrier sensing before
//! contention is perfect). At most one PU transition happens inside it, which
//! splits the phase into three cases by the PU arrival instant `t`:
//!
//! 1. no arrival before `T`;
//! 2. arrival during the transmission stage, `T_S < t < T`;
//! 3. arrival during the FD sensing stage, `0 < t < T_S`, where the detector
//!    sees the PU with probability `P_d^01(t)`.
//!
//! Rates are spectral efficiencies `log2(1 + SINR)`; PU interference adds
//! `P_p` to the receiver noise.

use crate::contention;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{BitAccounting, ChannelModel, MacTimings, ModelOptions, Scenario, SelfInterference};
use crate::partition::{enumerate_partitions, PartitionSet};
use crate::quad::{self, Tolerance};
use crate::sensing::{self, SensingPoint};

/// Channel-independent link and access parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub frame: f64,
    pub data_power: f64,
    pub max_power: f64,
    pub sampling_freq: f64,
    pub target_detection: f64,
    pub si: SelfInterference,
    pub timings: MacTimings,
    pub p: f64,
    pub model: ModelOptions,
}

impl LinkConfig {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            frame: s.proto.frame,
            data_power: s.proto.data_power,
            max_power: s.proto.max_power,
            sampling_freq: s.sensing.sampling_freq,
            target_detection: s.sensing.target_detection,
            si: s.si,
            timings: s.timings,
            p: s.proto.p,
            model: s.model,
        }
    }

    /// Detector operating point meeting the detection target with equality.
    pub fn sensing_point(&self, channel: &ChannelModel, t_s: f64, p_sen: f64) -> Result<SensingPoint> {
        sensing::solve_threshold(
            t_s,
            p_sen,
            self.sampling_freq,
            channel,
            self.si,
            self.target_detection,
        )
    }
}

/// Spectral efficiencies (bits/s/Hz) of the four stage/PU-state combinations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub sensing: f64,
    pub sensing_interfered: f64,
    pub data: f64,
    pub data_interfered: f64,
}

impl Rates {
    pub fn new(p_sen: f64, data_power: f64, pu_power: f64) -> Self {
        Self {
            sensing: (1.0 + p_sen).log2(),
            sensing_interfered: (1.0 + p_sen / (1.0 + pu_power)).log2(),
            data: (1.0 + data_power).log2(),
            data_interfered: (1.0 + data_power / (1.0 + pu_power)).log2(),
        }
    }
}

/// Expected bits (bits/Hz) per data phase, split by PU-transition case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseBits {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub case_probs: [f64; 3],
}

impl CaseBits {
    pub fn total(&self) -> f64 {
        self.b1 + self.b2 + self.b3
    }
}

/// Probabilities of the three cases for an exponential idle period.
pub fn case_probs(mean_idle: f64, t_s: f64, frame: f64) -> [f64; 3] {
    let survive_sensing = (-t_s / mean_idle).exp();
    let survive_frame = (-frame / mean_idle).exp();
    [
        survive_frame,
        survive_sensing - survive_frame,
        -(-t_s / mean_idle).exp_m1(),
    ]
}

pub fn channel_bits(channel: &ChannelModel, link: &LinkConfig, point: &SensingPoint) -> Result<CaseBits> {
    let t = link.frame;
    let ts = point.sensing_time;
    let r = Rates::new(point.sensing_power, link.data_power, channel.pu_power);
    let keep = 1.0 - point.false_alarm;
    let density = |x: f64| channel.idle_pdf(x);
    let probs = case_probs(channel.mean_idle, ts, t);
    let tol = Tolerance::default();

    let (case1, case2): (f64, Box<dyn Fn(f64) -> f64>) = match link.model.accounting {
        BitAccounting::Stagewise => (
            ts * r.sensing + keep * (t - ts) * r.data,
            Box::new(move |x| {
                ts * r.sensing + keep * ((x - ts) * r.data + (t - x) * r.data_interfered)
            }),
        ),
        BitAccounting::FrameAbort => (
            keep * (ts * r.sensing + (t - ts) * r.data),
            Box::new(move |x| {
                keep * (ts * r.sensing + (x - ts) * r.data + (t - x) * r.data_interfered)
            }),
        ),
    };
    let b1 = probs[0] * case1;
    let b2 = quad::integrate(|x| case2(x) * density(x), ts, t, tol)?;

    let miss = |x: f64| {
        1.0 - sensing::detection_h01(
            x.clamp(0.0, ts),
            point.threshold,
            ts,
            point.sensing_power,
            link.sampling_freq,
            channel.pu_power,
            link.si,
        )
        .unwrap_or(1.0)
    };
    let case3 = |x: f64| match link.model.accounting {
        BitAccounting::Stagewise => {
            x * r.sensing + (ts - x) * r.sensing_interfered + miss(x) * (t - ts) * r.data_interfered
        }
        BitAccounting::FrameAbort => {
            miss(x) * (x * r.sensing + (ts - x) * r.sensing_interfered + (t - ts) * r.data_interfered)
        }
    };
    let b3 = quad::integrate(|x| case3(x) * density(x), 0.0, ts, tol)?;

    Ok(CaseBits {
        b1,
        b2,
        b3,
        case_probs: probs,
    })
}

/// Mean wall-clock time per successful reservation cycle on a channel with
/// `n` contenders.
///
/// Without PU blocking this is `T_ove + T`. With it, only PU-idle time feeds
/// the contention process: the SU cycle consumes `T_ove + T - Ō` of idle time,
/// where `Ō` is the expected PU-active time overlapping the data phase and
/// its SIFS/ACK tail, and idle time is a fraction `P(H0)` of all time.
pub fn cycle_time(channel: &ChannelModel, link: &LinkConfig, n: usize) -> f64 {
    let overhead = contention::mean_contention(n, link.p, &link.timings).overhead;
    let busy_cycle = overhead + link.frame;
    if !link.model.pu_blocking {
        return busy_cycle;
    }
    let window = link.frame + link.timings.post_contention();
    let overlap = channel.expected_active_time(window);
    (busy_cycle - overlap) / channel.prob_idle()
}

/// `NT_j = B_j / cycle time` for a precomputed bit budget.
pub fn throughput_from_bits(channel: &ChannelModel, link: &LinkConfig, bits: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    bits / cycle_time(channel, link, n)
}

/// Throughput of one channel with `n` contenders at sensing time `t_s` and
/// sensing power `p_sen`, with the detection threshold solved for the target.
pub fn channel_throughput(
    channel: &ChannelModel,
    link: &LinkConfig,
    t_s: f64,
    p_sen: f64,
    n: usize,
) -> Result<f64> {
    let point = link.sensing_point(channel, t_s, p_sen)?;
    let bits = channel_bits(channel, link, &point)?;
    Ok(throughput_from_bits(channel, link, bits.total(), n))
}

/// Per-channel throughput indexed by channel and contender count
/// (`values[j][n - 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputTable {
    pub values: Vec<Vec<f64>>,
}

impl ThroughputTable {
    pub fn get(&self, channel: usize, users: usize) -> Result<f64> {
        if users == 0 {
            return Ok(0.0);
        }
        self.values
            .get(channel)
            .and_then(|row| row.get(users - 1))
            .copied()
            .ok_or(Error::MissingEntry { channel, users })
    }

    /// Build a table from a closure over `(channel, n)`.
    pub fn from_fn(channels: usize, users: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            values: (0..channels)
                .map(|j| (1..=users).map(|n| f(j, n)).collect())
                .collect(),
        }
    }
}

/// Per-channel throughput at the scenario's configured sensing time and
/// power, for every contender count `1..=N`.
pub fn configured_table(scenario: &Scenario, exec: Execution) -> Result<ThroughputTable> {
    let link = LinkConfig::from_scenario(scenario);
    let bits = exec.map(&scenario.channels, |ch| {
        link.sensing_point(ch, scenario.proto.sensing_time, scenario.proto.sensing_power)
            .and_then(|pt| channel_bits(ch, &link, &pt))
            .map(|b| b.total())
    });
    let bits = bits.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ThroughputTable::from_fn(
        scenario.num_channels(),
        scenario.num_sus,
        |j, n| throughput_from_bits(&scenario.channels[j], &link, bits[j], n),
    ))
}

const PARTITION_CHUNK: usize = 512;

/// Expected network throughput over all channel-selection outcomes.
pub fn network_throughput(scenario: &Scenario, table: &ThroughputTable) -> Result<f64> {
    let parts = enumerate_partitions(scenario.num_sus, scenario.num_channels())?;
    network_throughput_over(&parts, &scenario.selection_probs, table, Execution::default())
}

pub fn network_throughput_over(
    parts: &PartitionSet,
    probs: &[f64],
    table: &ThroughputTable,
    exec: Execution,
) -> Result<f64> {
    for j in 0..parts.channels {
        table.get(j, parts.users)?;
    }
    Ok(exec.chunked_sum(&parts.parts, PARTITION_CHUNK, |part| {
        let Some(log_p) = part.log_prob(probs) else {
            return 0.0;
        };
        let contribution: f64 = part
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(j, &n)| table.values[j][n - 1])
            .sum();
        log_p.exp() * contribution
    }))
}

/// Each channel's expected contribution to the network throughput; the
/// entries sum to [`network_throughput_over`].
pub fn channel_shares(parts: &PartitionSet, probs: &[f64], table: &ThroughputTable) -> Vec<f64> {
    let mut shares = vec![0.0; parts.channels];
    for part in parts.iter() {
        let w = part.prob(probs);
        if w == 0.0 {
            continue;
        }
        for (j, &n) in part.counts.iter().enumerate() {
            if n > 0 {
                shares[j] += w * table.values[j][n - 1];
            }
        }
    }
    shares
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ProtocolConfig, SensingParams};
    use crate::units::db_to_linear;

    fn link(accounting: BitAccounting) -> LinkConfig {
        LinkConfig {
            frame: 0.02,
            data_power: db_to_linear(15.0),
            max_power: db_to_linear(15.0),
            sampling_freq: 6e6,
            target_detection: 0.8,
            si: SelfInterference { zeta: 0.2, xi: 0.95 },
            timings: MacTimings::ieee80211(),
            p: 0.0022,
            model: ModelOptions {
                accounting,
                pu_blocking: true,
            },
        }
    }

    fn perfect_point(t_s: f64, p_sen: f64) -> SensingPoint {
        SensingPoint {
            sensing_time: t_s,
            sensing_power: p_sen,
            threshold: 1e9,
            false_alarm: 0.0,
            avg_detection: 0.0,
        }
    }

    #[test]
    fn case_probabilities_partition_unity() {
        for (tau, ts, t) in [(1.0, 3e-3, 0.02), (0.05, 1e-3, 0.02), (0.01, 0.019, 0.02)] {
            let p = case_probs(tau, ts, t);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn pu_never_arrives() {
        let ch = ChannelModel::new(1e12, 1e-3, 0.01);
        for acc in [BitAccounting::Stagewise, BitAccounting::FrameAbort] {
            let l = link(acc);
            let pt = perfect_point(3e-3, 4.0);
            let b = channel_bits(&ch, &l, &pt).unwrap();
            let r = Rates::new(4.0, l.data_power, ch.pu_power);
            let expect = 3e-3 * r.sensing + (l.frame - 3e-3) * r.data;
            assert!((b.total() - expect).abs() < 1e-9);
            assert!((b.case_probs[0] - 1.0).abs() < 1e-9);

            let silent = channel_bits(&ch, &l, &perfect_point(3e-3, 0.0)).unwrap();
            assert!((silent.total() - (l.frame - 3e-3) * r.data).abs() < 1e-9);
        }
    }

    #[test]
    fn accountings_differ_only_by_aborted_sensing_bits() {
        let ch = ChannelModel::new(0.1, 0.1, 0.01);
        let stage = link(BitAccounting::Stagewise);
        let abort = link(BitAccounting::FrameAbort);
        let pt = stage.sensing_point(&ch, 3e-3, 3.0).unwrap();
        let a = channel_bits(&ch, &stage, &pt).unwrap();
        let b = channel_bits(&ch, &abort, &pt).unwrap();
        assert!(a.b1 > b.b1 && a.b2 > b.b2 && a.b3 > b.b3);
        let r = Rates::new(3.0, stage.data_power, ch.pu_power);
        let lost = a.case_probs[0] * pt.false_alarm * 3e-3 * r.sensing;
        assert!((a.b1 - b.b1 - lost).abs() < 1e-12);
    }

    #[test]
    fn zero_bits_zero_throughput() {
        let ch = ChannelModel::new(1.0, 0.1, 0.01);
        assert_eq!(throughput_from_bits(&ch, &link(BitAccounting::FrameAbort), 0.0, 5), 0.0);
    }

    #[test]
    fn vanishing_access_probability() {
        let ch = ChannelModel::new(1.0, 0.1, 0.01);
        let mut l = link(BitAccounting::FrameAbort);
        let mut last = f64::INFINITY;
        for p in [1e-2, 1e-4, 1e-6, 1e-8] {
            l.p = p;
            let nt = throughput_from_bits(&ch, &l, 0.1, 3);
            assert!(nt < last);
            last = nt;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn blocking_reduces_to_plain_cycle_for_rare_pu() {
        let ch = ChannelModel::new(1e9, 1e-9, 0.0);
        let mut l = link(BitAccounting::FrameAbort);
        let with = cycle_time(&ch, &l, 4);
        l.model.pu_blocking = false;
        let without = cycle_time(&ch, &l, 4);
        assert!((with - without).abs() < 1e-12);
    }

    fn scenario(m: usize, users: usize) -> Scenario {
        Scenario {
            num_sus: users,
            channels: vec![ChannelModel::new(1.0, 0.1, 0.01); m],
            selection_probs: vec![1.0 / m as f64; m],
            reselect_period: 100,
            timings: MacTimings::ieee80211(),
            si: SelfInterference { zeta: 0.2, xi: 0.95 },
            sensing: SensingParams {
                sampling_freq: 6e6,
                target_detection: 0.8,
            },
            proto: ProtocolConfig {
                p: 0.0022,
                frame: 0.02,
                sensing_time: 3e-3,
                sensing_power: 3.7,
                data_power: 31.6,
                max_power: 31.6,
                evacuation: 0.025,
            },
            model: ModelOptions::default(),
        }
    }

    #[test]
    fn single_channel_network_is_channel_value() {
        let s = scenario(1, 6);
        let table = ThroughputTable::from_fn(1, 6, |_, n| n as f64 * 0.5);
        assert!((network_throughput(&s, &table).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_constant_channels_closed_form() {
        for users in 1..=12 {
            let s = scenario(2, users);
            let table = ThroughputTable::from_fn(2, users, |_, _| 1.7);
            let nt = network_throughput(&s, &table).unwrap();
            let expect = 1.7 * (2.0 - 2f64.powi(1 - users as i32));
            assert!((nt - expect).abs() < 1e-12, "{users}: {nt} vs {expect}");
        }
    }

    #[test]
    fn missing_entries_are_errors() {
        let s = scenario(2, 5);
        let table = ThroughputTable::from_fn(2, 4, |_, _| 1.0);
        assert!(matches!(
            network_throughput(&s, &table),
            Err(Error::MissingEntry { .. })
        ));
    }

    #[test]
    fn configured_table_matches_direct_evaluation() {
        let s = scenario(2, 4);
        let table = configured_table(&s, Execution::Sequential).unwrap();
        let link = LinkConfig::from_scenario(&s);
        let direct = channel_throughput(&s.channels[0], &link, 3e-3, 3.7, 3).unwrap();
        assert!((table.get(0, 3).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn shares_add_up_to_network_throughput() {
        let parts = enumerate_partitions(6, 3).unwrap();
        let table = ThroughputTable::from_fn(3, 6, |j, n| 1.0 + j as f64 - 0.1 * n as f64);
        let probs = [0.2, 0.5, 0.3];
        let total = network_throughput_over(&parts, &probs, &table, Execution::Sequential).unwrap();
        let shares = channel_shares(&parts, &probs, &table);
        assert!((shares.iter().sum::<f64>() - total).abs() < 1e-12);
    }
}
