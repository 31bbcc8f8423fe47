//! Two-step protocol configuration.
//!
//! Step one fixes the sensing time and sensing power of every channel for
//! every contender count. Step two picks channel-selection probabilities for
//! the resulting per-channel throughputs. Because network throughput is a sum
//! of per-channel terms whose sensing parameters do not interact, the split
//! loses nothing against a joint search.

pub mod channel;
pub mod search;
pub mod selection;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::Scenario;
use crate::partition::{enumerate_partitions, PartitionSet};
use crate::throughput::{channel_shares, LinkConfig, ThroughputTable};

pub use channel::{optimize_channel, optimize_sensing, optimize_sensing_time, ChannelOptimum, SensingOptimum};
pub use selection::{grid_refine, project_to_simplex, SelectionPolynomial};

/// Search resolutions and stopping rules. Every field is a scenario-file key
/// under `[optimizer]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub sensing_time_grid: usize,
    pub sensing_power_grid: usize,
    pub golden_rel_tol: f64,
    pub golden_max_iter: usize,
    pub restarts: usize,
    pub ascent_max_steps: usize,
    pub ascent_tol: f64,
    pub armijo_c: f64,
    pub armijo_factor: f64,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            sensing_time_grid: 64,
            sensing_power_grid: 32,
            golden_rel_tol: 1e-6,
            golden_max_iter: 200,
            restarts: 20,
            ascent_max_steps: 5000,
            ascent_tol: 1e-8,
            armijo_c: 1e-4,
            armijo_factor: 0.5,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOptimum {
    pub probs: Vec<f64>,
    pub nt: f64,
    /// `B(ω_k)` for every partition, in enumeration order.
    pub partition_values: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// Per-channel summary inside a [`ThroughputReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub sensing_time: f64,
    pub sensing_power: f64,
    pub threshold: f64,
    pub false_alarm: f64,
    /// This channel's share of the network throughput.
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub label: &'static str,
    pub nt: f64,
    pub selection_probs: Vec<f64>,
    pub channels: Vec<ChannelReport>,
}

/// Result of the full two-step optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct FullOptimum {
    pub sensing: Vec<SensingOptimum>,
    /// `optima[j][n - 1]` for `n = 1..=N`.
    pub optima: Vec<Vec<ChannelOptimum>>,
    pub selection: SelectionOptimum,
    pub nt: f64,
}

impl FullOptimum {
    pub fn table(&self) -> ThroughputTable {
        ThroughputTable {
            values: self
                .optima
                .iter()
                .map(|row| row.iter().map(|o| o.nt_opt).collect())
                .collect(),
        }
    }

    pub fn report(&self, parts: &PartitionSet) -> ThroughputReport {
        channel_report("proposed", &self.sensing, &self.table(), parts, &self.selection.probs, self.nt)
    }
}

/// `B(ω_k) = multinomial(ω_k) · Σ_j 1{n_kj > 0} NT_j*(n_kj)`.
pub fn build_partition_values(parts: &PartitionSet, table: &ThroughputTable) -> Result<Vec<f64>> {
    parts
        .iter()
        .map(|part| {
            let mut sum = 0.0;
            for (j, &n) in part.counts.iter().enumerate() {
                if n > 0 {
                    sum += table.get(j, n)?;
                }
            }
            Ok(part.multinomial() * sum)
        })
        .collect()
}

pub fn optimize_selection(
    parts: &PartitionSet,
    partition_values: Vec<f64>,
    settings: &OptimizerSettings,
    exec: Execution,
) -> Result<SelectionOptimum> {
    if partition_values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument(
            "partition values must be finite and non-negative".into(),
        ));
    }
    let poly = SelectionPolynomial::new(parts, partition_values.clone());
    let best = selection::maximize(&poly, settings, exec)?;
    let out = SelectionOptimum {
        probs: best.probs,
        nt: best.value,
        partition_values,
        gradient_norm: best.gradient_norm,
        iterations: best.iterations,
    };
    if best.converged {
        Ok(out)
    } else {
        let g = out.gradient_norm;
        Err(selection::not_converged(out, g))
    }
}

/// Per-channel sensing optimum for every channel of the scenario.
pub fn optimize_sensing_all(
    scenario: &Scenario,
    settings: &OptimizerSettings,
    exec: Execution,
) -> Result<Vec<SensingOptimum>> {
    let link = LinkConfig::from_scenario(scenario);
    exec.map(&scenario.channels, |ch| optimize_sensing(ch, &link, settings))
        .into_iter()
        .collect()
}

fn optima_table(scenario: &Scenario, sensing: &[SensingOptimum]) -> Vec<Vec<ChannelOptimum>> {
    let link = LinkConfig::from_scenario(scenario);
    scenario
        .channels
        .iter()
        .zip(sensing)
        .map(|(ch, s)| (1..=scenario.num_sus).map(|n| s.at(ch, &link, n)).collect())
        .collect()
}

/// Optimize sensing parameters and channel-selection probabilities.
pub fn optimize_all(scenario: &Scenario, settings: &OptimizerSettings, exec: Execution) -> Result<FullOptimum> {
    let sensing = optimize_sensing_all(scenario, settings, exec)?;
    optimize_all_with(scenario, sensing, settings, exec)
}

/// Second step of [`optimize_all`] for precomputed per-channel optima.
pub fn optimize_all_with(
    scenario: &Scenario,
    sensing: Vec<SensingOptimum>,
    settings: &OptimizerSettings,
    exec: Execution,
) -> Result<FullOptimum> {
    let optima = optima_table(scenario, &sensing);
    let parts = enumerate_partitions(scenario.num_sus, scenario.num_channels())?;
    let table = ThroughputTable {
        values: optima.iter().map(|r| r.iter().map(|o| o.nt_opt).collect()).collect(),
    };
    let values = build_partition_values(&parts, &table)?;
    let selection = optimize_selection(&parts, values, settings, exec)?;
    Ok(FullOptimum {
        nt: selection.nt,
        sensing,
        optima,
        selection,
    })
}

fn channel_report(
    label: &'static str,
    sensing: &[SensingOptimum],
    table: &ThroughputTable,
    parts: &PartitionSet,
    probs: &[f64],
    nt: f64,
) -> ThroughputReport {
    let shares = channel_shares(parts, probs, table);
    ThroughputReport {
        label,
        nt,
        selection_probs: probs.to_vec(),
        channels: sensing
            .iter()
            .zip(shares)
            .map(|(s, throughput)| ChannelReport {
                sensing_time: s.point.sensing_time,
                sensing_power: s.point.sensing_power,
                threshold: s.point.threshold,
                false_alarm: s.point.false_alarm,
                throughput,
            })
            .collect(),
    }
}

/// Equal selection probabilities with per-channel sensing optima.
pub fn baseline_equal(scenario: &Scenario, sensing: &[SensingOptimum]) -> Result<ThroughputReport> {
    let m = scenario.num_channels();
    let probs = vec![1.0 / m as f64; m];
    let optima = optima_table(scenario, sensing);
    let table = ThroughputTable {
        values: optima.iter().map(|r| r.iter().map(|o| o.nt_opt).collect()).collect(),
    };
    let parts = enumerate_partitions(scenario.num_sus, m)?;
    let nt = crate::throughput::network_throughput_over(&parts, &probs, &table, Execution::default())?;
    Ok(channel_report("equal", sensing, &table, &parts, &probs, nt))
}

/// Fixed assignment of `N / M` users to every channel.
pub fn baseline_fixed(scenario: &Scenario, sensing: &[SensingOptimum]) -> Result<ThroughputReport> {
    let m = scenario.num_channels();
    let n = scenario.num_sus;
    if !n.is_multiple_of(m) {
        return Err(Error::UnevenAssignment { users: n, channels: m });
    }
    let link = LinkConfig::from_scenario(scenario);
    let per = n / m;
    let channels: Vec<ChannelReport> = scenario
        .channels
        .iter()
        .zip(sensing)
        .map(|(ch, s)| ChannelReport {
            sensing_time: s.point.sensing_time,
            sensing_power: s.point.sensing_power,
            threshold: s.point.threshold,
            false_alarm: s.point.false_alarm,
            throughput: s.at(ch, &link, per).nt_opt,
        })
        .collect();
    Ok(ThroughputReport {
        label: "fixed",
        nt: channels.iter().map(|c| c.throughput).sum(),
        selection_probs: vec![1.0 / m as f64; m],
        channels,
    })
}

/// Proposed design and both baselines, sharing one set of sensing optima.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub proposed: ThroughputReport,
    pub equal: ThroughputReport,
    pub fixed: Option<ThroughputReport>,
}

impl Comparison {
    /// `100 · (NT_proposed - NT_baseline) / NT_baseline`.
    pub fn gain_equal(&self) -> f64 {
        gain(self.proposed.nt, self.equal.nt)
    }

    pub fn gain_fixed(&self) -> Option<f64> {
        self.fixed.as_ref().map(|f| gain(self.proposed.nt, f.nt))
    }
}

pub fn gain(proposed: f64, baseline: f64) -> f64 {
    100.0 * (proposed - baseline) / baseline
}

pub fn compare(scenario: &Scenario, settings: &OptimizerSettings, exec: Execution) -> Result<Comparison> {
    let sensing = optimize_sensing_all(scenario, settings, exec)?;
    let full = optimize_all_with(scenario, sensing.clone(), settings, exec)?;
    let parts = enumerate_partitions(scenario.num_sus, scenario.num_channels())?;
    let fixed = match baseline_fixed(scenario, &sensing) {
        Ok(r) => Some(r),
        Err(Error::UnevenAssignment { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Comparison {
        proposed: full.report(&parts),
        equal: baseline_equal(scenario, &sensing)?,
        fixed,
    })
}
