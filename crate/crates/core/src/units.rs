//! Unit conversions used at configuration boundaries.
//!
//! Internally every duration is in seconds and every power is linear with
//! the noise power normalized to one. Decibels and milliseconds only show up
//! in scenario files and reports.

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn ms_to_s(ms: f64) -> f64 {
    ms * 1e-3
}

pub fn s_to_ms(s: f64) -> f64 {
    s * 1e3
}
