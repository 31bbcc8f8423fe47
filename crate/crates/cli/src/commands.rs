use std::fs;

use mfdc::config::{self, Loaded, Table};
use mfdc::optimizer::{self, ChannelReport, Comparison, ThroughputReport};
use mfdc::partition::enumerate_partitions;
use mfdc::simulator::{self, SimConfig};
use mfdc::throughput::{channel_shares, configured_table, network_throughput_over, LinkConfig};
use mfdc::units::{linear_to_db, s_to_ms};
use mfdc::Execution;

use crate::failure::Failure;
use crate::output::{exact, fixed, print_table, CsvOut};
use crate::{Common, SimulateArgs};

pub fn parse_override(text: &str) -> Result<(&str, f64), Failure> {
    let bad = || Failure::Usage(format!("override `{text}` is not KEY=NUMBER"));
    let (key, value) = text.split_once('=').ok_or_else(bad)?;
    let value: f64 = value.trim().parse().map_err(|_| bad())?;
    Ok((key.trim(), value))
}

/// The scenario document with every `--set` override applied.
pub fn read_table(c: &Common) -> Result<Table, Failure> {
    let text = fs::read_to_string(&c.scenario).map_err(|e| Failure::io(&c.scenario, e))?;
    let mut table = config::parse(&text)?;
    for o in &c.overrides {
        let (key, value) = parse_override(o)?;
        config::set_key(&mut table, key, value)?;
    }
    Ok(table)
}

pub fn load(table: Table, seed: Option<u64>) -> Result<Loaded, Failure> {
    let mut loaded = config::from_table(table)?;
    if let Some(seed) = seed {
        loaded.sim.seed = seed;
    }
    Ok(loaded)
}

/// Throughput at the configured sensing time, power and selection
/// probabilities.
pub fn evaluate_loaded(loaded: &Loaded, exec: Execution) -> mfdc::Result<ThroughputReport> {
    let s = &loaded.scenario;
    let link = LinkConfig::from_scenario(s);
    let table = configured_table(s, exec)?;
    let parts = enumerate_partitions(s.num_sus, s.num_channels())?;
    let nt = network_throughput_over(&parts, &s.selection_probs, &table, exec)?;
    let shares = channel_shares(&parts, &s.selection_probs, &table);
    let channels = s
        .channels
        .iter()
        .zip(shares)
        .map(|(ch, throughput)| {
            let pt = link.sensing_point(ch, s.proto.sensing_time, s.proto.sensing_power)?;
            Ok(ChannelReport {
                sensing_time: pt.sensing_time,
                sensing_power: pt.sensing_power,
                threshold: pt.threshold,
                false_alarm: pt.false_alarm,
                throughput,
            })
        })
        .collect::<mfdc::Result<Vec<_>>>()?;
    Ok(ThroughputReport {
        label: "configured",
        nt,
        selection_probs: s.selection_probs.clone(),
        channels,
    })
}

const CHANNEL_HEADER: [&str; 7] = [
    "channel",
    "selection_prob",
    "sensing_time_ms",
    "sensing_power_db",
    "threshold",
    "false_alarm",
    "throughput",
];

fn write_report(c: &Common, name: &str, report: &ThroughputReport) -> Result<(), Failure> {
    let header: Vec<String> = CHANNEL_HEADER.iter().map(|s| s.to_string()).collect();
    let mut csv = CsvOut::create(&c.out, name, &header)?;
    let mut rows = Vec::new();
    for (j, (ch, p)) in report.channels.iter().zip(&report.selection_probs).enumerate() {
        csv.row(&[
            (j + 1).to_string(),
            exact(*p),
            exact(s_to_ms(ch.sensing_time)),
            exact(linear_to_db(ch.sensing_power)),
            exact(ch.threshold),
            exact(ch.false_alarm),
            exact(ch.throughput),
        ])?;
        rows.push(vec![
            (j + 1).to_string(),
            fixed(*p, 4),
            fixed(s_to_ms(ch.sensing_time), 3),
            fixed(linear_to_db(ch.sensing_power), 3),
            fixed(ch.threshold, 5),
            fixed(ch.false_alarm, 4),
            fixed(ch.throughput, 4),
        ]);
    }
    csv.row(&["all".to_string(), String::new(), String::new(), String::new(), String::new(), String::new(), exact(report.nt)])?;
    let path = csv.finish()?;
    print_table(&["channel", "p_sec", "T_S (ms)", "P_sen (dB)", "threshold", "P_f", "NT_j"], &rows);
    println!("network throughput: {:.4}", report.nt);
    println!("wrote {}", path.display());
    Ok(())
}

pub fn evaluate(c: &Common) -> Result<(), Failure> {
    let loaded = load(read_table(c)?, c.seed)?;
    let report = evaluate_loaded(&loaded, Execution::default())?;
    write_report(c, "evaluate.csv", &report)
}

pub fn optimize(c: &Common) -> Result<(), Failure> {
    let loaded = load(read_table(c)?, c.seed)?;
    let s = &loaded.scenario;
    let full = optimizer::optimize_all(s, &loaded.optimizer, Execution::default())?;
    let parts = enumerate_partitions(s.num_sus, s.num_channels())?;
    write_report(c, "optimize.csv", &full.report(&parts))
}

pub fn compare_rows(cmp: &Comparison) -> Vec<(&'static str, Option<f64>, Option<f64>)> {
    vec![
        ("proposed", Some(cmp.proposed.nt), None),
        ("alg1_equal", Some(cmp.equal.nt), Some(cmp.gain_equal())),
        ("alg2_fixed", cmp.fixed.as_ref().map(|f| f.nt), cmp.gain_fixed()),
    ]
}

pub fn compare(c: &Common) -> Result<(), Failure> {
    let loaded = load(read_table(c)?, c.seed)?;
    let cmp = optimizer::compare(&loaded.scenario, &loaded.optimizer, Execution::default())?;
    let header: Vec<String> = ["algorithm", "nt", "delta_nt_pct"].iter().map(|s| s.to_string()).collect();
    let mut csv = CsvOut::create(&c.out, "compare.csv", &header)?;
    let mut rows = Vec::new();
    let opt = |x: Option<f64>, f: &dyn Fn(f64) -> String| x.map_or(String::new(), f);
    for (label, nt, delta) in compare_rows(&cmp) {
        csv.row(&[label.to_string(), opt(nt, &exact), opt(delta, &exact)])?;
        rows.push(vec![
            label.to_string(),
            opt(nt, &|x| fixed(x, 4)),
            opt(delta, &|x| fixed(x, 3)),
        ]);
    }
    let path = csv.finish()?;
    print_table(&["algorithm", "NT", "ΔNT (%)"], &rows);
    println!(
        "proposed selection probabilities: {}",
        cmp.proposed
            .selection_probs
            .iter()
            .map(|p| fixed(*p, 4))
            .collect::<Vec<_>>()
            .join(" ")
    );
    if cmp.fixed.is_none() {
        println!("fixed assignment skipped: user count not divisible by channel count");
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let c = &a.common;
    let loaded = load(read_table(c)?, c.seed)?;
    let sim = SimConfig {
        trace_limit: if a.trace.is_some() { a.trace_limit } else { 0 },
        ..loaded.sim
    };
    let r = simulator::simulate(&loaded.scenario, &sim)?;
    let analytic = evaluate_loaded(&loaded, Execution::default())?.nt;

    let header = vec!["metric".to_string(), "value".to_string()];
    let mut csv = CsvOut::create(&c.out, "simulate.csv", &header)?;
    let mut rows = vec![
        ("throughput", r.throughput),
        ("ci_halfwidth", r.ci_halfwidth),
        ("analytic_throughput", analytic),
    ];
    rows.extend(r.counters.to_map());
    for (k, v) in &rows {
        csv.row(&[k.to_string(), exact(*v)])?;
    }
    let path = csv.finish()?;

    if let Some(trace) = &a.trace {
        let mut text = String::new();
        for ev in &r.trace {
            text.push_str(&ev.to_line());
            text.push('\n');
        }
        fs::write(trace, text).map_err(|e| Failure::io(trace, e))?;
    }

    println!(
        "simulated throughput {:.4} ± {:.4} (95% CI), analytic {:.4}",
        r.throughput, r.ci_halfwidth, analytic
    );
    let table: Vec<Vec<String>> = rows[3..]
        .iter()
        .map(|(k, v)| vec![k.to_string(), format!("{v}")])
        .collect();
    print_table(&["counter", "value"], &table);
    println!("wrote {}", path.display());
    Ok(())
}
