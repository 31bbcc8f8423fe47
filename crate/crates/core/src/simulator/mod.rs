//! Slot-level Monte Carlo simulation of the full protocol.
//!
//! Every channel runs its own event loop: the PU alternates exponential idle
//! and active periods, the SUs holding the channel contend with p-persistent
//! RTS/CTS, and the winner runs a two-stage data phase whose sensing decision
//! is drawn from the detector probabilities. SUs re-draw their channel every
//! `reselect_period` frames. Bits are credited to batch-means batches by the
//! instant the data phase ends.

pub mod contention;
pub mod pu;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{BitAccounting, ChannelModel, Scenario};
use crate::sensing::{self, SensingPoint};
use crate::throughput::{LinkConfig, Rates};

pub use contention::{simulate_contention_only, ContentionEstimate};
use pu::{active_time, first_arrival, PuProcess};
pub use stats::Running;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Simulated seconds.
    pub horizon: f64,
    pub seed: u64,
    pub batches: usize,
    /// Seconds at the start excluded from the statistics.
    pub warmup: f64,
    /// Detect every PU arrival inside the sensing window and never raise a
    /// false alarm.
    pub perfect_sensing: bool,
    /// Ignore PU departures inside a data phase, so at most one transition
    /// affects it.
    pub clamp_transitions: bool,
    /// Keep at most this many trace events.
    pub trace_limit: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 600.0,
            seed: 1,
            batches: 20,
            warmup: 10.0,
            perfect_sensing: false,
            clamp_transitions: false,
            trace_limit: 0,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.warmup >= 0.0 && self.horizon > self.warmup && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "sim.horizon ({}) must exceed sim.warmup ({})",
                self.horizon, self.warmup
            )));
        }
        if self.batches < 2 {
            return Err(Error::Config("sim.batches must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Counters {
    pub contention_cycles: u64,
    pub idle_slots: u64,
    pub collisions: u64,
    pub data_phases: u64,
    pub false_alarms: u64,
    pub detections: u64,
    pub missed_detections: u64,
    /// Seconds of SU data-phase transmission overlapping PU activity.
    pub pu_overlap_time: f64,
    /// Largest such overlap within a single data phase.
    pub max_phase_overlap: f64,
    /// Seconds contention was frozen by an active PU.
    pub blocked_time: f64,
    /// Bits/Hz delivered after warmup.
    pub bits: f64,
    /// Bits/Hz of every data phase, warmup included.
    pub phase_bits: Running,
}

impl Counters {
    fn absorb(&mut self, o: &Counters) {
        self.contention_cycles += o.contention_cycles;
        self.idle_slots += o.idle_slots;
        self.collisions += o.collisions;
        self.data_phases += o.data_phases;
        self.false_alarms += o.false_alarms;
        self.detections += o.detections;
        self.missed_detections += o.missed_detections;
        self.pu_overlap_time += o.pu_overlap_time;
        self.max_phase_overlap = self.max_phase_overlap.max(o.max_phase_overlap);
        self.blocked_time += o.blocked_time;
        self.bits += o.bits;
        self.phase_bits.merge(&o.phase_bits);
    }

    /// Slots observed by contenders: idle, collided and successful.
    pub fn slots(&self) -> u64 {
        self.idle_slots + self.collisions + self.contention_cycles
    }

    pub fn to_map(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("contention_cycles", self.contention_cycles as f64),
            ("idle_slots", self.idle_slots as f64),
            ("collisions", self.collisions as f64),
            ("data_phases", self.data_phases as f64),
            ("false_alarms", self.false_alarms as f64),
            ("detections", self.detections as f64),
            ("missed_detections", self.missed_detections as f64),
            ("pu_overlap_time", self.pu_overlap_time),
            ("max_phase_overlap", self.max_phase_overlap),
            ("blocked_time", self.blocked_time),
            ("bits", self.bits),
            ("mean_phase_bits", self.phase_bits.mean()),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Reselect,
    PuBlocked,
    Idle,
    Collision,
    Success,
    FalseAlarm,
    Detection,
    MissedDetection,
    DataEnd,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Reselect => "reselect",
            EventKind::PuBlocked => "pu_blocked",
            EventKind::Idle => "idle",
            EventKind::Collision => "collision",
            EventKind::Success => "success",
            EventKind::FalseAlarm => "false_alarm",
            EventKind::Detection => "detection",
            EventKind::MissedDetection => "missed_detection",
            EventKind::DataEnd => "data_end",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub channel: usize,
    pub kind: EventKind,
    pub su: Option<usize>,
}

impl TraceEvent {
    /// One JSON object per line.
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            r#"{{"t":{:.9},"channel":{},"event":"{}","su":"#,
            self.time,
            self.channel,
            self.kind.as_str()
        );
        match self.su {
            Some(i) => {
                let _ = write!(s, "{i}}}");
            }
            None => s.push_str("null}"),
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// Bits/Hz per second, summed over channels.
    pub throughput: f64,
    /// 95% batch-means half-width.
    pub ci_halfwidth: f64,
    pub batch_means: Vec<f64>,
    pub counters: Counters,
    pub per_channel: Vec<Counters>,
    /// How often an SU draw landed on each channel.
    pub selection_counts: Vec<u64>,
    pub trace: Vec<TraceEvent>,
}

/// Mutable state of one channel's event loop.
struct ChannelSim {
    index: usize,
    channel: ChannelModel,
    point: SensingPoint,
    rates: Rates,
    pu: PuProcess<ChaCha8Rng>,
    rng: ChaCha8Rng,
    now: f64,
    counters: Counters,
    batch_bits: Vec<f64>,
}

struct Shared<'a> {
    link: LinkConfig,
    sim: &'a SimConfig,
    batch_len: f64,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl ChannelSim {
    fn trace(&self, trace: &mut Vec<TraceEvent>, limit: usize, time: f64, kind: EventKind, su: Option<usize>) {
        if trace.len() < limit {
            trace.push(TraceEvent {
                time,
                channel: self.index,
                kind,
                su,
            });
        }
    }

    /// Run contention and data phases until `until`; a data phase that has
    /// started runs to completion even past it.
    fn run_until(&mut self, until: f64, members: &[usize], sh: &Shared, trace: &mut Vec<TraceEvent>) {
        let n = members.len();
        if n == 0 {
            self.now = self.now.max(until);
            return;
        }
        let t = &sh.link.timings;
        let attempts = Binomial::new(n as u64, sh.link.p).expect("valid binomial");
        let limit = sh.sim.trace_limit;
        while self.now < until {
            if self.pu.is_active(self.now) {
                let free = self.pu.next_idle(self.now);
                self.trace(trace, limit, self.now, EventKind::PuBlocked, None);
                self.counters.blocked_time += free - self.now;
                self.now = free;
                continue;
            }
            match attempts.sample(&mut self.rng) {
                0 => {
                    self.counters.idle_slots += 1;
                    self.trace(trace, limit, self.now, EventKind::Idle, None);
                    self.now += t.slot;
                }
                1 => {
                    let winner = members[self.rng.random_range(0..n)];
                    self.counters.contention_cycles += 1;
                    self.trace(trace, limit, self.now, EventKind::Success, Some(winner));
                    let start = self.now + t.t_succ() + t.sifs + t.prop_delay;
                    let end = self.data_phase(start, winner, sh, trace);
                    self.now = end + t.sifs + t.prop_delay + t.ack;
                }
                _ => {
                    self.counters.collisions += 1;
                    self.trace(trace, limit, self.now, EventKind::Collision, None);
                    self.now += t.t_coll();
                }
            }
        }
    }

    /// One two-stage data phase starting at `start`; returns its end.
    fn data_phase(&mut self, start: f64, su: usize, sh: &Shared, trace: &mut Vec<TraceEvent>) -> f64 {
        let frame = sh.link.frame;
        let ts = self.point.sensing_time;
        let end = start + frame;
        let (initial, mut switches) = self.pu.window(start, end);
        let arrival = first_arrival(initial, &switches);
        if sh.sim.clamp_transitions {
            // PU stays active from its first arrival to the end of the phase
            switches.truncate(if initial { 0 } else { 1 });
        }

        let limit = sh.sim.trace_limit;
        let busy = match arrival.filter(|&a| a < ts) {
            Some(a) => {
                let pd = if sh.sim.perfect_sensing {
                    1.0
                } else {
                    sensing::detection_h01(
                        a,
                        self.point.threshold,
                        ts,
                        self.point.sensing_power,
                        sh.link.sampling_freq,
                        self.channel.pu_power,
                        sh.link.si,
                    )
                    .expect("arrival inside sensing window")
                };
                let hit = self.rng.random::<f64>() < pd;
                if hit {
                    self.counters.detections += 1;
                    self.trace(trace, limit, start + ts, EventKind::Detection, Some(su));
                } else {
                    self.counters.missed_detections += 1;
                    self.trace(trace, limit, start + ts, EventKind::MissedDetection, Some(su));
                }
                hit
            }
            None => {
                let pf = if sh.sim.perfect_sensing { 0.0 } else { self.point.false_alarm };
                let alarm = self.rng.random::<f64>() < pf;
                if alarm {
                    self.counters.false_alarms += 1;
                    self.trace(trace, limit, start + ts, EventKind::FalseAlarm, Some(su));
                }
                alarm
            }
        };

        let r = &self.rates;
        let on_sensing = active_time(initial, &switches, 0.0, ts);
        let on_data = active_time(initial, &switches, ts, frame);
        let sensing_bits = (ts - on_sensing) * r.sensing + on_sensing * r.sensing_interfered;
        let data_bits = (frame - ts - on_data) * r.data + on_data * r.data_interfered;
        let bits = match (sh.link.model.accounting, busy) {
            (_, false) => sensing_bits + data_bits,
            (BitAccounting::FrameAbort, true) => 0.0,
            (BitAccounting::Stagewise, true) => sensing_bits,
        };
        let overlap = on_sensing + if busy { 0.0 } else { on_data };

        self.counters.data_phases += 1;
        self.counters.phase_bits.push(bits);
        self.counters.pu_overlap_time += overlap;
        self.counters.max_phase_overlap = self.counters.max_phase_overlap.max(overlap);
        self.trace(trace, limit, end, EventKind::DataEnd, Some(su));
        if end >= sh.sim.warmup && end < sh.sim.horizon {
            let b = (((end - sh.sim.warmup) / sh.batch_len) as usize).min(self.batch_bits.len() - 1);
            self.batch_bits[b] += bits;
            self.counters.bits += bits;
        }
        end
    }
}

/// Simulate the scenario at its configured sensing time and power.
pub fn simulate(scenario: &Scenario, sim: &SimConfig) -> Result<SimulationResult> {
    let link = LinkConfig::from_scenario(scenario);
    let points = scenario
        .channels
        .iter()
        .map(|ch| link.sensing_point(ch, scenario.proto.sensing_time, scenario.proto.sensing_power))
        .collect::<Result<Vec<_>>>()?;
    simulate_with(scenario, &points, sim)
}

/// Simulate with an explicit detector operating point per channel.
pub fn simulate_with(scenario: &Scenario, points: &[SensingPoint], sim: &SimConfig) -> Result<SimulationResult> {
    sim.check()?;
    scenario.check()?;
    let m = scenario.num_channels();
    if points.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} sensing points for {m} channels",
            points.len()
        )));
    }
    let link = LinkConfig::from_scenario(scenario);
    let shared = Shared {
        link,
        sim,
        batch_len: (sim.horizon - sim.warmup) / sim.batches as f64,
    };

    let mut chans: Vec<ChannelSim> = scenario
        .channels
        .iter()
        .zip(points)
        .enumerate()
        .map(|(j, (ch, pt))| ChannelSim {
            index: j,
            channel: *ch,
            point: *pt,
            rates: Rates::new(pt.sensing_power, link.data_power, ch.pu_power),
            pu: PuProcess::new(ch, stream(sim.seed, 2 * j as u64)),
            rng: stream(sim.seed, 2 * j as u64 + 1),
            now: 0.0,
            counters: Counters::default(),
            batch_bits: vec![0.0; sim.batches],
        })
        .collect();

    let choose = WeightedIndex::new(&scenario.selection_probs)
        .map_err(|e| Error::InvalidArgument(format!("selection_probs: {e}")))?;
    let mut su_rngs: Vec<ChaCha8Rng> = (0..scenario.num_sus)
        .map(|i| stream(sim.seed, (2 * m + i) as u64))
        .collect();
    let mut selection_counts = vec![0u64; m];
    let mut trace = Vec::new();

    let epoch = scenario.reselect_period as f64 * link.frame;
    let mut epoch_start = 0.0;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
    while epoch_start < sim.horizon {
        members.iter_mut().for_each(Vec::clear);
        for (i, rng) in su_rngs.iter_mut().enumerate() {
            let j = choose.sample(rng);
            members[j].push(i);
            selection_counts[j] += 1;
            if trace.len() < sim.trace_limit {
                trace.push(TraceEvent {
                    time: epoch_start,
                    channel: j,
                    kind: EventKind::Reselect,
                    su: Some(i),
                });
            }
        }
        let epoch_end = (epoch_start + epoch).min(sim.horizon);
        for (c, mem) in chans.iter_mut().zip(&members) {
            c.run_until(epoch_end, mem, &shared, &mut trace);
        }
        epoch_start += epoch;
    }

    let batch_means: Vec<f64> = (0..sim.batches)
        .map(|b| chans.iter().map(|c| c.batch_bits[b]).sum::<f64>() / shared.batch_len)
        .collect();
    let (throughput, ci_halfwidth) = stats::mean_ci(&batch_means, 0.95);
    let mut counters = Counters::default();
    for c in &chans {
        counters.absorb(&c.counters);
    }
    trace.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(SimulationResult {
        throughput,
        ci_halfwidth,
        batch_means,
        counters,
        per_channel: chans.iter().map(|c| c.counters).collect(),
        selection_counts,
        trace,
    })
}

/// Independent replications summarized by their across-replication mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Replications {
    pub results: Vec<SimulationResult>,
    pub throughput: f64,
    /// 95% half-width across replications; infinite for a single one.
    pub ci_halfwidth: f64,
}

/// Run one replication per seed. Output order follows `seeds` for both
/// execution variants.
pub fn simulate_replications(
    scenario: &Scenario,
    points: &[SensingPoint],
    sim: &SimConfig,
    seeds: &[u64],
    exec: Execution,
) -> Result<Replications> {
    let results = exec
        .map(seeds, |&seed| simulate_with(scenario, points, &SimConfig { seed, ..*sim }))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.throughput).collect();
    let (throughput, ci_halfwidth) = stats::mean_ci(&values, 0.95);
    Ok(Replications {
        results,
        throughput,
        ci_halfwidth,
    })
}
