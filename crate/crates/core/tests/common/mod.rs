#![allow(dead_code)]

use std::path::PathBuf;

use mfdc::config::{self, Loaded};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
}

pub fn table(name: &str) -> toml::Table {
    let text = std::fs::read_to_string(scenario_path(name)).expect("scenario file");
    config::parse(&text).expect("parse scenario")
}

pub fn load(name: &str) -> Loaded {
    config::from_table(table(name)).expect("load scenario")
}

pub fn load_with(name: &str, overrides: &[(&str, f64)]) -> Loaded {
    let mut t = table(name);
    for &(k, v) in overrides {
        config::set_key(&mut t, k, v).expect("override");
    }
    config::from_table(t).expect("load scenario")
}

/// Sub-checks of one criterion; prints a single verdict line.
#[derive(Default)]
pub struct Verdict {
    failures: Vec<String>,
    checks: usize,
}

impl Verdict {
    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.checks += 1;
        let what = what.into();
        if !ok {
            println!("    fail: {what}");
            self.failures.push(what);
        }
    }

    pub fn finish(self, label: &str) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "{status} {label} ({} checks, {} failed)",
            self.checks,
            self.failures.len()
        );
        assert!(self.failures.is_empty(), "{label}: {}", self.failures.join("; "));
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
