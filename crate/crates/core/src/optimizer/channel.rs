//! Per-channel sensing configuration: sensing time and sensing power under
//! the detection constraint.
//!
//! The contention overhead does not depend on `(T_S, P_sen)`, so
//! `NT_j(T_S, P_sen | n)` is the expected bits per data phase times a
//! positive factor that only depends on `n`. The maximizer is therefore the
//! same for every contender count; [`optimize_sensing`] finds it once and
//! [`optimize_channel`] scales it to a given `n`.

use crate::error::Result;
use crate::model::ChannelModel;
use crate::sensing::SensingPoint;
use crate::throughput::{channel_bits, throughput_from_bits, LinkConfig};

use super::search::{grid_golden_max, LineMax};
use super::OptimizerSettings;

/// Throughput-maximizing sensing configuration of one channel at a given
/// contender count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelOptimum {
    pub n: usize,
    pub t_s_opt: f64,
    pub p_sen_opt: f64,
    pub nt_opt: f64,
    pub point: SensingPoint,
}

/// Sensing configuration maximizing expected bits per data phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingOptimum {
    pub point: SensingPoint,
    pub bits: f64,
}

impl SensingOptimum {
    pub fn at(&self, channel: &ChannelModel, link: &LinkConfig, n: usize) -> ChannelOptimum {
        ChannelOptimum {
            n,
            t_s_opt: self.point.sensing_time,
            p_sen_opt: self.point.sensing_power,
            nt_opt: throughput_from_bits(channel, link, self.bits, n),
            point: self.point,
        }
    }
}

/// Expected bits per data phase at `(t_s, p_sen)`.
pub fn bits_at(channel: &ChannelModel, link: &LinkConfig, t_s: f64, p_sen: f64) -> Result<f64> {
    let point = link.sensing_point(channel, t_s, p_sen)?;
    Ok(channel_bits(channel, link, &point)?.total())
}

fn sensing_time_grid(frame: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|i| frame * i as f64 / points as f64).collect()
}

fn power_grid(max_power: f64, points: usize) -> Vec<f64> {
    let last = points.max(2) - 1;
    (0..=last).map(|i| max_power * i as f64 / last as f64).collect()
}

fn best_sensing_time(
    channel: &ChannelModel,
    link: &LinkConfig,
    p_sen: f64,
    settings: &OptimizerSettings,
) -> Result<LineMax> {
    let grid = sensing_time_grid(link.frame, settings.sensing_time_grid);
    grid_golden_max(
        |t_s| bits_at(channel, link, t_s, p_sen),
        &grid,
        settings.golden_rel_tol * link.frame,
        settings.golden_max_iter,
    )
}

/// Best sensing time for a fixed sensing power; returns `(T_S*, NT_j)`.
pub fn optimize_sensing_time(
    channel: &ChannelModel,
    link: &LinkConfig,
    p_sen: f64,
    n: usize,
    settings: &OptimizerSettings,
) -> Result<(f64, f64)> {
    let best = best_sensing_time(channel, link, p_sen, settings)?;
    Ok((best.x, throughput_from_bits(channel, link, best.value, n)))
}

/// Joint search: outer over sensing power in `[0, P_max]`, inner over
/// sensing time in `(0, T]`.
pub fn optimize_sensing(
    channel: &ChannelModel,
    link: &LinkConfig,
    settings: &OptimizerSettings,
) -> Result<SensingOptimum> {
    let grid = power_grid(link.max_power, settings.sensing_power_grid);
    let mut best_ts = Vec::new();
    let outer = grid_golden_max(
        |p_sen| {
            let inner = best_sensing_time(channel, link, p_sen, settings)?;
            best_ts.push((p_sen, inner.x, inner.value));
            Ok(inner.value)
        },
        &grid,
        settings.golden_rel_tol * link.max_power.max(f64::MIN_POSITIVE),
        settings.golden_max_iter,
    )?;
    let (p_sen, t_s, _) = best_ts
        .iter()
        .copied()
        .find(|&(p, _, v)| p == outer.x && v == outer.value)
        .expect("outer optimum was evaluated");
    let point = link.sensing_point(channel, t_s, p_sen)?;
    Ok(SensingOptimum {
        point,
        bits: outer.value,
    })
}

pub fn optimize_channel(
    channel: &ChannelModel,
    link: &LinkConfig,
    n: usize,
    settings: &OptimizerSettings,
) -> Result<ChannelOptimum> {
    Ok(optimize_sensing(channel, link, settings)?.at(channel, link, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MacTimings, ModelOptions, SelfInterference};
    use crate::sensing::avg_detection;
    use crate::units::db_to_linear;

    fn link(zeta: f64) -> LinkConfig {
        LinkConfig {
            frame: 0.02,
            data_power: db_to_linear(15.0),
            max_power: db_to_linear(15.0),
            sampling_freq: 6e6,
            target_detection: 0.8,
            si: SelfInterference { zeta, xi: 0.95 },
            timings: MacTimings::ieee80211(),
            p: 0.0022,
            model: ModelOptions::default(),
        }
    }

    #[test]
    fn optimum_is_feasible() {
        let ch = ChannelModel::new(1.0, 0.05, 0.01);
        let l = link(0.2);
        let o = optimize_channel(&ch, &l, 10, &OptimizerSettings::default()).unwrap();
        assert!(o.t_s_opt > 0.0 && o.t_s_opt <= l.frame);
        assert!(o.p_sen_opt >= 0.0 && o.p_sen_opt <= l.max_power);
        assert!(o.nt_opt >= 0.0);
        let pd = avg_detection(o.point.threshold, o.t_s_opt, o.p_sen_opt, 6e6, &ch, l.si).unwrap();
        assert!((pd - 0.8).abs() < 1e-6);
    }

    #[test]
    fn maximizer_independent_of_contenders() {
        let ch = ChannelModel::new(0.5, 0.1, 0.01);
        let l = link(0.3);
        let s = OptimizerSettings::default();
        let a = optimize_channel(&ch, &l, 1, &s).unwrap();
        let b = optimize_channel(&ch, &l, 7, &s).unwrap();
        assert_eq!(a.t_s_opt, b.t_s_opt);
        assert_eq!(a.p_sen_opt, b.p_sen_opt);
        assert!(b.nt_opt > a.nt_opt);
    }

    #[test]
    fn no_self_interference_uses_full_power() {
        let ch = ChannelModel::new(1.0, 0.05, 0.01);
        let l = link(0.0);
        let o = optimize_channel(&ch, &l, 5, &OptimizerSettings::default()).unwrap();
        assert!((o.p_sen_opt - l.max_power).abs() < 1e-9, "{}", o.p_sen_opt);
    }

    #[test]
    fn invisible_pu_is_handled() {
        let ch = ChannelModel::new(1.0, 0.05, 0.0);
        let mut l = link(0.0);
        l.si.zeta = 0.0;
        assert!(optimize_channel(&ch, &l, 3, &OptimizerSettings::default()).is_ok());
    }
}
