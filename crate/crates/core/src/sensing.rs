//! Energy detection under full-duplex self-interference.
//!
//! The sensing SU keeps transmitting at `P_sen` while it listens, so the
//! effective noise floor rises to `N0 + I(P_sen)` with `I = ζ·P_sen^ξ`.
//! Detection is evaluated for a PU that becomes active `t` seconds into the
//! sensing window and then stays active, and averaged over the arrival
//! instant conditioned on the arrival falling inside the window.

use std::f64::consts::SQRT_2;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::{ChannelModel, SelfInterference, NOISE_POWER};
use crate::quad::{self, Tolerance};

/// Operating point of the detector on one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingPoint {
    pub sensing_time: f64,
    pub sensing_power: f64,
    pub threshold: f64,
    pub false_alarm: f64,
    pub avg_detection: f64,
}

/// Gaussian tail probability `Q(x) = P(Z > x)` for a standard normal `Z`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

pub fn self_interference(p_sen: f64, si: SelfInterference) -> f64 {
    si.zeta * p_sen.powf(si.xi)
}

/// SINR of the PU signal at the sensing SU.
pub fn pu_sinr(pu_power: f64, p_sen: f64, si: SelfInterference) -> f64 {
    pu_power / (NOISE_POWER + self_interference(p_sen, si))
}

/// False-alarm probability when the PU stays idle for the whole window.
pub fn false_alarm_h00(eps: f64, t_s: f64, p_sen: f64, f_s: f64, si: SelfInterference) -> f64 {
    let floor = NOISE_POWER + self_interference(p_sen, si);
    q_function((eps / floor - 1.0) * (f_s * t_s).sqrt())
}

fn detection_unchecked(
    t: f64,
    eps: f64,
    t_s: f64,
    p_sen: f64,
    f_s: f64,
    pu_power: f64,
    si: SelfInterference,
) -> f64 {
    let floor = NOISE_POWER + self_interference(p_sen, si);
    let gamma = pu_power / floor;
    // fraction of the window with the PU present
    let present = (t_s - t) / t_s;
    let absent = t / t_s;
    let num = (eps / floor - present * gamma - 1.0) * (f_s * t_s).sqrt();
    let den = (present * (gamma + 1.0).powi(2) + absent).sqrt();
    q_function(num / den)
}

/// Detection probability when the PU turns active `t` seconds into a
/// sensing window of length `t_s`.
pub fn detection_h01(
    t: f64,
    eps: f64,
    t_s: f64,
    p_sen: f64,
    f_s: f64,
    pu_power: f64,
    si: SelfInterference,
) -> Result<f64> {
    if !(0.0..=t_s).contains(&t) {
        return Err(Error::ArrivalOutOfWindow {
            t,
            sensing_time: t_s,
        });
    }
    Ok(detection_unchecked(t, eps, t_s, p_sen, f_s, pu_power, si))
}

/// Density of the PU arrival offset conditioned on `0 ≤ t ≤ t_s`.
pub fn conditional_arrival_pdf(t: f64, t_s: f64, mean_idle: f64) -> f64 {
    let mass = -(-t_s / mean_idle).exp_m1();
    (-t / mean_idle).exp() / mean_idle / mass
}

/// Detection probability averaged over the PU arrival instant within the
/// sensing window.
pub fn avg_detection(
    eps: f64,
    t_s: f64,
    p_sen: f64,
    f_s: f64,
    channel: &ChannelModel,
    si: SelfInterference,
) -> Result<f64> {
    let v = quad::integrate(
        |t| {
            detection_unchecked(t, eps, t_s, p_sen, f_s, channel.pu_power, si)
                * conditional_arrival_pdf(t, t_s, channel.mean_idle)
        },
        0.0,
        t_s,
        Tolerance::default(),
    )?;
    Ok(v.clamp(0.0, 1.0))
}

const THRESHOLD_TOL: f64 = 1e-10;
const MAX_EXPANSIONS: usize = 200;
const MAX_BISECTIONS: usize = 300;

/// Find the detection threshold that meets `target` average detection
/// probability with equality, and the false-alarm probability it induces.
pub fn solve_threshold(
    t_s: f64,
    p_sen: f64,
    f_s: f64,
    channel: &ChannelModel,
    si: SelfInterference,
    target: f64,
) -> Result<SensingPoint> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target detection probability {target} outside (0, 1)"
        )));
    }
    let pd = |eps: f64| avg_detection(eps, t_s, p_sen, f_s, channel, si);
    let floor = NOISE_POWER + self_interference(p_sen, si);
    let gamma = channel.pu_power / floor;

    // P̂_d falls monotonically from 1 (ε → 0) to 0 (ε → ∞).
    let mut lo = NOISE_POWER;
    let mut pd_lo = pd(lo)?;
    let mut n = 0;
    while pd_lo < target {
        lo *= 0.5;
        pd_lo = pd(lo)?;
        n += 1;
        if n > MAX_EXPANSIONS {
            return Err(Error::ThresholdBracket { target });
        }
    }
    let mut hi = floor + (1.0 + gamma) * 10.0;
    let mut pd_hi = pd(hi)?;
    n = 0;
    while pd_hi > target {
        hi *= 2.0;
        pd_hi = pd(hi)?;
        n += 1;
        if n > MAX_EXPANSIONS || !hi.is_finite() {
            return Err(Error::ThresholdBracket { target });
        }
    }

    let (mut eps, mut value) = if (pd_lo - target).abs() <= (pd_hi - target).abs() {
        (lo, pd_lo)
    } else {
        (hi, pd_hi)
    };
    for _ in 0..MAX_BISECTIONS {
        if (value - target).abs() <= THRESHOLD_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = pd(mid)?;
        if v >= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (v - target).abs() < (value - target).abs() {
            eps = mid;
            value = v;
        }
    }

    Ok(SensingPoint {
        sensing_time: t_s,
        sensing_power: p_sen,
        threshold: eps,
        false_alarm: false_alarm_h00(eps, t_s, p_sen, f_s, si),
        avg_detection: value,
    })
}
