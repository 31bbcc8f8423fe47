//! Primary-user on/off renewal process with exponential idle and active
//! periods, generated lazily as simulated time advances.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::model::ChannelModel;

#[derive(Debug, Clone)]
pub struct PuProcess<R> {
    rng: R,
    idle: Exp<f64>,
    active: Exp<f64>,
    /// State in effect before the first queued switch.
    state_active: bool,
    /// Absolute switch times; the state flips at each one.
    switches: VecDeque<f64>,
    horizon: f64,
    pub idle_periods: (u64, f64),
    pub active_periods: (u64, f64),
}

impl<R: Rng> PuProcess<R> {
    /// Start in the stationary distribution at time zero.
    pub fn new(channel: &ChannelModel, mut rng: R) -> Self {
        let idle = Exp::new(1.0 / channel.mean_idle).expect("positive idle mean");
        let active = Exp::new(1.0 / channel.mean_active).expect("positive active mean");
        let start_active = rng.random::<f64>() < channel.prob_busy();
        let mut p = Self {
            rng,
            idle,
            active,
            state_active: start_active,
            switches: VecDeque::new(),
            horizon: 0.0,
            idle_periods: (0, 0.0),
            active_periods: (0, 0.0),
        };
        p.extend_past(0.0);
        p
    }

    fn next_period(&mut self, active: bool) -> f64 {
        if active {
            let d = self.active.sample(&mut self.rng);
            self.active_periods.0 += 1;
            self.active_periods.1 += d;
            d
        } else {
            let d = self.idle.sample(&mut self.rng);
            self.idle_periods.0 += 1;
            self.idle_periods.1 += d;
            d
        }
    }

    /// State after the last queued switch.
    fn tail_active(&self) -> bool {
        self.state_active ^ (self.switches.len() % 2 == 1)
    }

    fn extend_past(&mut self, t: f64) {
        while self.horizon <= t {
            let active = self.tail_active();
            let d = self.next_period(active);
            self.horizon += d;
            self.switches.push_back(self.horizon);
        }
    }

    /// Drop switches at or before `t`; time must not go backwards.
    fn advance(&mut self, t: f64) {
        self.extend_past(t);
        while let Some(&s) = self.switches.front() {
            if s <= t {
                self.switches.pop_front();
                self.state_active = !self.state_active;
            } else {
                break;
            }
        }
    }

    pub fn is_active(&mut self, t: f64) -> bool {
        self.advance(t);
        self.state_active
    }

    /// Earliest time at or after `t` at which the PU is idle.
    pub fn next_idle(&mut self, t: f64) -> f64 {
        if self.is_active(t) {
            *self.switches.front().expect("queue extends past t")
        } else {
            t
        }
    }

    /// PU state at `start` and the switch instants in `(start, end)`,
    /// relative to `start`.
    pub fn window(&mut self, start: f64, end: f64) -> (bool, Vec<f64>) {
        self.advance(start);
        self.extend_past(end);
        let switches = self
            .switches
            .iter()
            .take_while(|&&s| s < end)
            .map(|&s| s - start)
            .collect();
        (self.state_active, switches)
    }
}

/// PU-active time within `[a, b]` of a window described by its initial
/// state and relative switch instants.
pub fn active_time(initial_active: bool, switches: &[f64], a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    let mut state = initial_active;
    let mut prev = 0.0f64;
    for &s in switches.iter().chain(std::iter::once(&f64::INFINITY)) {
        let lo = prev.max(a);
        let hi = s.min(b);
        if state && hi > lo {
            total += hi - lo;
        }
        if s >= b {
            break;
        }
        prev = s;
        state = !state;
    }
    total
}

/// First instant the PU is active within a window, if any.
pub fn first_arrival(initial_active: bool, switches: &[f64]) -> Option<f64> {
    if initial_active {
        Some(0.0)
    } else {
        switches.first().copied()
    }
}
