use mfdc::config::{self, Loaded, Table};
use mfdc::optimizer;
use mfdc::partition::enumerate_partitions;
use mfdc::simulator;
use mfdc::{Error, Execution};

use crate::commands::{compare_rows, evaluate_loaded, load, read_table};
use crate::failure::Failure;
use crate::output::{exact, fixed, print_table, CsvOut};
use crate::{SweepArgs, SweepMode};

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<f64>,
}

/// Parse `KEY=START:STOP:STEPS` into evenly spaced values.
pub fn parse_axis(text: &str) -> Result<Axis, Failure> {
    let bad = |why: &str| Failure::Usage(format!("axis `{text}`: {why}"));
    let (key, range) = text.split_once('=').ok_or_else(|| bad("expected KEY=START:STOP:STEPS"))?;
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, steps] = parts.as_slice() else {
        return Err(bad("expected START:STOP:STEPS"));
    };
    let start: f64 = start.trim().parse().map_err(|_| bad("START is not a number"))?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad("STOP is not a number"))?;
    let steps: usize = steps.trim().parse().map_err(|_| bad("STEPS is not a count"))?;
    if steps < 2 {
        return Err(bad("need at least 2 steps"));
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err(bad("bounds must be finite"));
    }
    let values = (0..steps)
        .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
        .collect();
    Ok(Axis {
        key: key.trim().to_string(),
        values,
    })
}

fn metric_header(mode: SweepMode, with_sim: bool) -> Vec<&'static str> {
    let mut h = match mode {
        SweepMode::Evaluate | SweepMode::Optimize => vec!["nt"],
        SweepMode::Compare => vec!["nt_proposed", "nt_alg1", "nt_alg2", "delta_nt1_pct", "delta_nt2_pct"],
    };
    if with_sim {
        h.extend(["sim_nt", "sim_ci_halfwidth"]);
    }
    h
}

/// Metrics of one sweep point; `None` marks a value that does not exist
/// at this point, such as a fixed assignment with uneven user counts.
fn evaluate_point(loaded: &Loaded, mode: SweepMode, with_sim: bool) -> mfdc::Result<Vec<Option<f64>>> {
    let exec = Execution::Sequential;
    let s = &loaded.scenario;
    let (mut metrics, sim_scenario, points) = match mode {
        SweepMode::Evaluate => {
            let nt = evaluate_loaded(loaded, exec)?.nt;
            (vec![Some(nt)], s.clone(), None)
        }
        SweepMode::Optimize | SweepMode::Compare => {
            let sensing = optimizer::optimize_sensing_all(s, &loaded.optimizer, exec)?;
            let full = optimizer::optimize_all_with(s, sensing.clone(), &loaded.optimizer, exec)?;
            let metrics = if mode == SweepMode::Optimize {
                vec![Some(full.nt)]
            } else {
                let parts = enumerate_partitions(s.num_sus, s.num_channels())?;
                let fixed = match optimizer::baseline_fixed(s, &sensing) {
                    Ok(r) => Some(r),
                    Err(Error::UnevenAssignment { .. }) => None,
                    Err(e) => return Err(e),
                };
                let cmp = optimizer::Comparison {
                    proposed: full.report(&parts),
                    equal: optimizer::baseline_equal(s, &sensing)?,
                    fixed,
                };
                let rows = compare_rows(&cmp);
                vec![rows[0].1, rows[1].1, rows[2].1, rows[1].2, rows[2].2]
            };
            let mut optimized = s.clone();
            optimized.selection_probs = full.selection.probs.clone();
            let points: Vec<_> = full.sensing.iter().map(|o| o.point).collect();
            (metrics, optimized, Some(points))
        }
    };
    if with_sim {
        let r = match &points {
            Some(points) => simulator::simulate_with(&sim_scenario, points, &loaded.sim)?,
            None => simulator::simulate(&sim_scenario, &loaded.sim)?,
        };
        metrics.extend([Some(r.throughput), Some(r.ci_halfwidth)]);
    }
    Ok(metrics)
}

/// Cartesian grid of axis values, first axis outermost.
fn grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

enum Point {
    Done(Vec<f64>, Vec<Option<f64>>),
    Infeasible(Vec<f64>, String),
}

fn point_table(base: &Table, axes: &[Axis], values: &[f64]) -> Result<Table, Failure> {
    let mut t = base.clone();
    for (axis, &v) in axes.iter().zip(values) {
        config::set_key(&mut t, &axis.key, v)?;
    }
    Ok(t)
}

pub fn run(a: &SweepArgs) -> Result<(), Failure> {
    let c = &a.common;
    if a.axis.len() > 2 {
        return Err(Failure::Usage("at most two --axis flags".into()));
    }
    let axes = a.axis.iter().map(|s| parse_axis(s)).collect::<Result<Vec<_>, _>>()?;
    let base = read_table(c)?;
    // unknown keys and non-integral integer values fail the whole sweep
    for axis in &axes {
        for &v in &axis.values {
            config::set_key(&mut base.clone(), &axis.key, v)?;
        }
    }

    let points = grid(&axes);
    let results = Execution::default().map(&points, |values| -> Result<Point, Failure> {
        let table = point_table(&base, &axes, values)?;
        match load(table, c.seed) {
            Ok(loaded) => Ok(Point::Done(
                values.clone(),
                evaluate_point(&loaded, a.mode, a.with_sim)?,
            )),
            Err(Failure::Model(e @ (Error::Validation(_) | Error::Config(_)))) => {
                Ok(Point::Infeasible(values.clone(), e.to_string()))
            }
            Err(e) => Err(e),
        }
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let metrics = metric_header(a.mode, a.with_sim);
    let mut header: Vec<String> = axes.iter().map(|x| x.key.clone()).collect();
    header.extend(metrics.iter().map(|s| s.to_string()));
    let mut done = Vec::new();
    for r in &results {
        match r {
            Point::Done(v, m) => done.push((v, m)),
            Point::Infeasible(v, why) => {
                let first = why.lines().nth(1).unwrap_or(why).trim();
                eprintln!("skipping infeasible point {v:?}: {first}");
            }
        }
    }
    if done.is_empty() {
        return Err(Failure::Usage("every sweep point is infeasible".into()));
    }

    let mut csv = CsvOut::create(&c.out, "sweep.csv", &header)?;
    let mut rows = Vec::new();
    for (values, m) in &done {
        let mut rec: Vec<String> = values.iter().map(|&v| exact(v)).collect();
        rec.extend(m.iter().map(|x| x.map_or(String::new(), exact)));
        csv.row(&rec)?;
        let mut shown: Vec<String> = values.iter().map(|&v| format!("{v}")).collect();
        shown.extend(m.iter().map(|x| x.map_or("-".into(), |x| fixed(x, 4))));
        rows.push(shown);
    }
    let path = csv.finish()?;
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    print_table(&header_refs, &rows);
    println!(
        "{} of {} points evaluated, wrote {}",
        done.len(),
        results.len(),
        path.display()
    );
    Ok(())
}
