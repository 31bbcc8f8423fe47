//! Running means and confidence intervals.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Welford accumulator for the mean and variance of i.i.d. samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Running {
    pub count: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combine two accumulators as if every sample had been pushed to one.
    pub fn merge(&mut self, other: &Running) {
        if other.count == 0 {
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count.max(1) as f64).sqrt()
    }

    /// Half-width of the two-sided `level` confidence interval.
    pub fn ci_halfwidth(&self, level: f64) -> f64 {
        quantile(level, self.count.saturating_sub(1)) * self.std_error()
    }
}

/// Two-sided critical value: Student t for few degrees of freedom, normal
/// beyond.
pub fn quantile(level: f64, dof: u64) -> f64 {
    let upper = 0.5 + level / 2.0;
    if dof == 0 {
        return f64::INFINITY;
    }
    if dof > 10_000 {
        return Normal::standard().inverse_cdf(upper);
    }
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(upper)
}

/// Mean and `level` half-width of a sample.
pub fn mean_ci(xs: &[f64], level: f64) -> (f64, f64) {
    let mut r = Running::default();
    xs.iter().for_each(|&x| r.push(x));
    (r.mean(), r.ci_halfwidth(level))
}
