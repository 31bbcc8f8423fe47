//! Domain types shared by the analytical model, the optimizer and the
//! simulator.
//!
//! All durations are seconds and all powers are linear, normalized to a unit
//! noise power. Values are immutable once a [`Scenario`] has been validated.

use serde::{Deserialize, Serialize};

use crate::error::ValidationErrors;

/// Noise power at every receiver. Powers elsewhere are expressed relative to it.
pub const NOISE_POWER: f64 = 1.0;

/// Primary-user activity on one licensed channel: exponential idle and
/// active periods, and the received PU power at the secondary receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub mean_idle: f64,
    pub mean_active: f64,
    pub pu_power: f64,
}

impl ChannelModel {
    pub fn new(mean_idle: f64, mean_active: f64, pu_power: f64) -> Self {
        Self {
            mean_idle,
            mean_active,
            pu_power,
        }
    }

    pub fn prob_idle(&self) -> f64 {
        self.mean_idle / (self.mean_idle + self.mean_active)
    }

    pub fn prob_busy(&self) -> f64 {
        self.mean_active / (self.mean_idle + self.mean_active)
    }

    /// Density of an exponential idle period at `t`.
    pub fn idle_pdf(&self, t: f64) -> f64 {
        (-t / self.mean_idle).exp() / self.mean_idle
    }

    /// Probability that the PU is active `elapsed` seconds after it was
    /// observed idle (two-state continuous-time Markov chain).
    pub fn prob_active_after_idle(&self, elapsed: f64) -> f64 {
        let rate = 1.0 / self.mean_idle + 1.0 / self.mean_active;
        -self.prob_busy() * (-rate * elapsed).exp_m1()
    }

    /// Expected PU-active time inside a window of length `window` that
    /// starts with the PU idle.
    pub fn expected_active_time(&self, window: f64) -> f64 {
        let rate = 1.0 / self.mean_idle + 1.0 / self.mean_active;
        // ∫_0^W P(H1)(1 - e^{-rate s}) ds
        self.prob_busy() * (window + (-rate * window).exp_m1() / rate)
    }
}

/// 802.11-style MAC timing constants (seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacTimings {
    pub slot: f64,
    pub difs: f64,
    pub sifs: f64,
    pub rts: f64,
    pub cts: f64,
    pub ack: f64,
    pub prop_delay: f64,
}

impl MacTimings {
    /// DCF values: 20 μs slot, 50 μs DIFS, 10 μs SIFS, 288 μs RTS,
    /// 240 μs CTS and ACK, 1 μs propagation delay.
    pub fn ieee80211() -> Self {
        Self {
            slot: 20e-6,
            difs: 50e-6,
            sifs: 10e-6,
            rts: 288e-6,
            cts: 240e-6,
            ack: 240e-6,
            prop_delay: 1e-6,
        }
    }

    /// Duration of a successful RTS/CTS exchange.
    pub fn t_succ(&self) -> f64 {
        self.difs + self.rts + self.sifs + self.cts + 2.0 * self.prop_delay
    }

    /// Duration of an RTS collision.
    pub fn t_coll(&self) -> f64 {
        self.difs + self.rts + self.prop_delay
    }

    /// Fixed per-reservation overhead that follows the contention phase.
    pub fn post_contention(&self) -> f64 {
        2.0 * self.sifs + 2.0 * self.prop_delay + self.ack
    }
}

impl Default for MacTimings {
    fn default() -> Self {
        Self::ieee80211()
    }
}

/// Residual self-interference of the full-duplex transceiver, `I = ζ·P^ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfInterference {
    pub zeta: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingParams {
    pub sampling_freq: f64,
    pub target_detection: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    /// Per-slot transmission probability of p-persistent CSMA.
    pub p: f64,
    pub frame: f64,
    pub sensing_time: f64,
    pub sensing_power: f64,
    pub data_power: f64,
    pub max_power: f64,
    pub evacuation: f64,
}

/// How bits are credited when the sensing outcome stops a transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitAccounting {
    /// A frame whose sensing stage declares the channel busy is aborted and
    /// delivers nothing, including the bits sent during the sensing stage.
    #[default]
    FrameAbort,
    /// Bits sent during the sensing stage always count; only the
    /// transmission stage is suppressed.
    Stagewise,
}

/// Modelling switches that apply to both the analytical model and the
/// simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub accounting: BitAccounting,
    /// Account for the time a busy PU blocks contention on the channel.
    pub pu_blocking: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            accounting: BitAccounting::FrameAbort,
            pu_blocking: true,
        }
    }
}

/// A complete network configuration: `num_sus` SU pairs sharing
/// `channels.len()` licensed channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub num_sus: usize,
    pub channels: Vec<ChannelModel>,
    pub selection_probs: Vec<f64>,
    /// Channel re-selection period, in frames. Only the simulator uses it.
    pub reselect_period: u32,
    pub timings: MacTimings,
    pub si: SelfInterference,
    pub sensing: SensingParams,
    pub proto: ProtocolConfig,
    pub model: ModelOptions,
}

const SIMPLEX_TOL: f64 = 1e-12;

impl Scenario {
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Collect every violated invariant.
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check(&self) -> Result<(), ValidationErrors> {
        let mut errs = ValidationErrors::default();

        if self.num_sus < 1 {
            errs.push("num_sus", "need at least one SU pair");
        }
        if self.channels.is_empty() {
            errs.push("channels", "need at least one channel");
        }
        for (j, ch) in self.channels.iter().enumerate() {
            if !(ch.mean_idle > 0.0 && ch.mean_idle.is_finite()) {
                errs.push(format!("channels[{j}].mean_idle_ms"), "must be positive");
            }
            if !(ch.mean_active > 0.0 && ch.mean_active.is_finite()) {
                errs.push(format!("channels[{j}].mean_active_ms"), "must be positive");
            }
            if !(ch.pu_power >= 0.0 && ch.pu_power.is_finite()) {
                errs.push(format!("channels[{j}].pu_power_db"), "must be a finite power");
            }
        }

        if self.selection_probs.len() != self.channels.len() {
            errs.push(
                "selection_probs",
                format!(
                    "has {} entries for {} channels",
                    self.selection_probs.len(),
                    self.channels.len()
                ),
            );
        }
        for (j, &q) in self.selection_probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&q) {
                errs.push(format!("selection_probs[{j}]"), "must lie in [0, 1]");
            }
        }
        let total: f64 = self.selection_probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            errs.push("selection_probs", format!("sum ≠ 1 (sum = {total})"));
        }
        if self.reselect_period < 1 {
            errs.push("reselect_period", "must be at least one frame");
        }

        let t = &self.timings;
        for (name, v) in [
            ("slot", t.slot),
            ("difs", t.difs),
            ("sifs", t.sifs),
            ("rts", t.rts),
            ("cts", t.cts),
            ("ack", t.ack),
            ("prop_delay", t.prop_delay),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("timings.{name}_ms"), "must be positive");
            }
        }
        if t.prop_delay >= t.slot {
            errs.push("timings.prop_delay_ms", "must be shorter than the slot");
        }

        if !(self.si.zeta >= 0.0 && self.si.zeta.is_finite()) {
            errs.push("si.zeta", "must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.si.xi) {
            errs.push("si.xi", "must lie in [0, 1]");
        }

        if !(self.sensing.sampling_freq > 0.0 && self.sensing.sampling_freq.is_finite()) {
            errs.push("sensing.sampling_freq_hz", "must be positive");
        }
        let pd = self.sensing.target_detection;
        if !(pd > 0.0 && pd < 1.0) {
            errs.push("sensing.target_detection", "must lie in (0, 1)");
        }

        let p = &self.proto;
        if !(p.p > 0.0 && p.p < 1.0) {
            errs.push("proto.p", "must lie in (0, 1)");
        }
        if !(p.frame > 0.0 && p.frame.is_finite()) {
            errs.push("proto.frame_ms", "must be positive");
        }
        if !(p.sensing_time > 0.0) {
            errs.push("proto.sensing_time_ms", "must be positive");
        }
        if p.sensing_time > p.frame {
            errs.push("proto.sensing_time_ms", "T_S > T: sensing must fit in the frame");
        }
        if !(p.max_power >= 0.0 && p.max_power.is_finite()) {
            errs.push("proto.max_power_db", "must be a finite power");
        }
        if !(p.sensing_power >= 0.0) {
            errs.push("proto.sensing_power_db", "must be non-negative");
        }
        if p.sensing_power > p.max_power {
            errs.push("proto.sensing_power_db", "exceeds proto.max_power_db");
        }
        if !(p.data_power >= 0.0 && p.data_power.is_finite()) {
            errs.push("proto.data_power_db", "must be a finite power");
        }
        if !(p.frame < p.evacuation) {
            errs.push("proto.evacuation_ms", "frame must be shorter than the evacuation time");
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// Return the scenario unchanged if every invariant holds, otherwise the full
/// list of violations.
pub fn validate(scenario: Scenario) -> Result<Scenario, ValidationErrors> {
    scenario.check().map(|()| scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::db_to_linear;

    pub(crate) fn two_channel() -> Scenario {
        Scenario {
            num_sus: 10,
            channels: vec![
                ChannelModel::new(0.5, 0.05, 0.01),
                ChannelModel::new(1.0, 0.1, 0.01),
            ],
            selection_probs: vec![0.5, 0.5],
            reselect_period: 100,
            timings: MacTimings::ieee80211(),
            si: SelfInterference { zeta: 0.2, xi: 0.95 },
            sensing: SensingParams {
                sampling_freq: 6e6,
                target_detection: 0.8,
            },
            proto: ProtocolConfig {
                p: 0.01,
                frame: 0.02,
                sensing_time: 0.003,
                sensing_power: db_to_linear(5.689),
                data_power: db_to_linear(15.0),
                max_power: db_to_linear(15.0),
                evacuation: 0.025,
            },
            model: ModelOptions::default(),
        }
    }

    #[test]
    fn uniform_selection_is_valid() {
        assert!(validate(two_channel()).is_ok());
    }

    #[test]
    fn selection_must_sum_to_one() {
        let mut s = two_channel();
        s.selection_probs = vec![0.6, 0.6];
        let errs = validate(s).unwrap_err();
        assert!(errs.mentions("sum ≠ 1"));
    }

    #[test]
    fn sensing_longer_than_frame_rejected() {
        let mut s = two_channel();
        s.proto.sensing_time = 2.0 * s.proto.frame;
        let errs = validate(s).unwrap_err();
        assert!(errs.mentions("T_S > T"));
    }

    #[test]
    fn all_violations_reported() {
        let mut s = two_channel();
        s.si.xi = 1.5;
        s.proto.p = 0.0;
        s.channels[1].mean_idle = -1.0;
        let errs = validate(s).unwrap_err();
        assert_eq!(errs.0.len(), 3, "{errs}");
        assert!(errs.mentions("si.xi"));
        assert!(errs.mentions("proto.p"));
        assert!(errs.mentions("channels[1].mean_idle_ms"));
    }

    #[test]
    fn validate_is_idempotent() {
        let once = validate(two_channel()).unwrap();
        let twice = validate(once.clone()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn idle_probability_increases_with_idle_mean() {
        let mut last = 0.0;
        for k in 1..200 {
            let p = ChannelModel::new(k as f64 * 0.01, 0.1, 0.0).prob_idle();
            assert!(p > last);
            assert!(p > 0.0 && p < 1.0);
            let ch = ChannelModel::new(k as f64 * 0.01, 0.1, 0.0);
            assert!((ch.prob_idle() + ch.prob_busy() - 1.0).abs() < 1e-15);
            last = p;
        }
    }

    #[test]
    fn expected_active_time_matches_integral() {
        let ch = ChannelModel::new(0.5, 0.05, 0.0);
        let w = 0.03;
        let n = 100_000;
        let h = w / n as f64;
        let riemann: f64 = (0..n)
            .map(|i| ch.prob_active_after_idle((i as f64 + 0.5) * h) * h)
            .sum();
        assert!((riemann - ch.expected_active_time(w)).abs() < 1e-12);
    }
}
