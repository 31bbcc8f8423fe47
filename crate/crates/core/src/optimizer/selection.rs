//! Channel-selection probabilities: maximize the degree-`N` polynomial
//! `Σ_k B(ω_k) ∏_j p_j^{n_kj}` over the probability simplex.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::partition::PartitionSet;

use super::OptimizerSettings;

/// The throughput polynomial in the selection probabilities.
#[derive(Debug, Clone)]
pub struct SelectionPolynomial {
    counts: Vec<Vec<usize>>,
    coeffs: Vec<f64>,
    channels: usize,
    degree: usize,
}

impl SelectionPolynomial {
    pub fn new(parts: &PartitionSet, coeffs: Vec<f64>) -> Self {
        assert_eq!(parts.len(), coeffs.len());
        Self {
            counts: parts.iter().map(|p| p.counts.clone()).collect(),
            coeffs,
            channels: parts.channels,
            degree: parts.users,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    fn powers(&self, p: &[f64]) -> Vec<Vec<f64>> {
        p.iter()
            .map(|&x| {
                let mut row = Vec::with_capacity(self.degree + 1);
                let mut acc = 1.0;
                for _ in 0..=self.degree {
                    row.push(acc);
                    acc *= x;
                }
                row
            })
            .collect()
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        let pw = self.powers(p);
        self.counts
            .iter()
            .zip(&self.coeffs)
            .map(|(n, &c)| c * n.iter().enumerate().map(|(j, &k)| pw[j][k]).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let pw = self.powers(p);
        let mut g = vec![0.0; self.channels];
        for (n, &c) in self.counts.iter().zip(&self.coeffs) {
            for (j, gj) in g.iter_mut().enumerate() {
                if n[j] == 0 {
                    continue;
                }
                let mut term = c * n[j] as f64 * pw[j][n[j] - 1];
                for (i, &k) in n.iter().enumerate() {
                    if i != j {
                        term *= pw[i][k];
                    }
                }
                *gj += term;
            }
        }
        g
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let s: f64 = out.iter().sum();
    for x in &mut out {
        *x /= s;
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Norm of the projected-gradient step `x - Π(x + ∇f)`; zero exactly at
/// stationary points of the constrained problem.
pub fn stationarity(poly: &SelectionPolynomial, x: &[f64]) -> f64 {
    let g = poly.gradient(x);
    let y = project_to_simplex(&x.iter().zip(&g).map(|(a, b)| a + b).collect::<Vec<_>>());
    norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ascent {
    pub probs: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Projected gradient ascent with Armijo backtracking along the projection
/// arc.
pub fn projected_ascent(poly: &SelectionPolynomial, start: &[f64], settings: &OptimizerSettings) -> Ascent {
    let mut x = project_to_simplex(start);
    let mut fx = poly.value(&x);
    let mut step = 1.0 / (norm(&poly.gradient(&x)) + 1.0);
    let mut iterations = 0;
    let mut gradient_norm = f64::INFINITY;

    // stationarity is judged relative to the gradient scale, which grows
    // with the polynomial degree and the size of the coefficients
    let tol = |g: &[f64]| settings.ascent_tol * (1.0 + norm(g));
    let mut threshold = f64::INFINITY;
    while iterations < settings.ascent_max_steps {
        let g = poly.gradient(&x);
        threshold = tol(&g);
        gradient_norm = stationarity(poly, &x);
        if gradient_norm <= threshold {
            break;
        }
        let mut alpha = step * 2.0;
        let mut moved = false;
        while alpha > 1e-300 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + alpha * b).collect();
            let y = project_to_simplex(&trial);
            let dir: f64 = g.iter().zip(y.iter().zip(&x)).map(|(gi, (yi, xi))| gi * (yi - xi)).sum();
            let fy = poly.value(&y);
            if fy >= fx + settings.armijo_c * dir && dir > 0.0 {
                x = y;
                fx = fy;
                step = alpha;
                moved = true;
                break;
            }
            alpha *= settings.armijo_factor;
        }
        iterations += 1;
        if !moved {
            // no ascent direction is resolvable in floating point
            gradient_norm = stationarity(poly, &x);
            threshold = tol(&poly.gradient(&x));
            break;
        }
    }
    Ascent {
        converged: gradient_norm <= threshold,
        probs: x,
        value: fx,
        gradient_norm,
        iterations,
    }
}

/// Starting points: the uniform point, one point leaning towards each
/// vertex, then Dirichlet(1) draws up to `settings.restarts`.
pub fn restart_points(m: usize, settings: &OptimizerSettings) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![1.0 / m as f64; m]];
    if m > 1 {
        for j in 0..m {
            let mut p = vec![0.2 / (m - 1) as f64; m];
            p[j] = 0.8;
            pts.push(p);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    while pts.len() < settings.restarts.max(1) {
        let draw: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
        let s: f64 = draw.iter().sum();
        pts.push(draw.into_iter().map(|x: f64| x / s).collect());
    }
    pts
}

/// Multi-start projected gradient ascent. Earlier restarts win ties, so a
/// symmetric problem returns the uniform point.
pub fn maximize(poly: &SelectionPolynomial, settings: &OptimizerSettings, exec: Execution) -> Result<Ascent> {
    let starts = restart_points(poly.channels(), settings);
    let runs = exec.map(&starts, |s| projected_ascent(poly, s, settings));
    let mut best = 0;
    for (i, r) in runs.iter().enumerate().skip(1) {
        let incumbent = runs[best].value;
        if r.value > incumbent + 1e-12 * incumbent.abs().max(1e-300) {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).unwrap())
}

/// Grid search at resolution `1/resolution` over the simplex followed by a
/// shrinking pattern search along the edge directions `e_i - e_j`.
pub fn grid_refine(poly: &SelectionPolynomial, resolution: usize) -> (Vec<f64>, f64) {
    let m = poly.channels();
    let mut best = (vec![1.0 / m as f64; m], f64::NEG_INFINITY);
    let mut counts = vec![0usize; m];
    grid_walk(&mut counts, 0, resolution, &mut |c| {
        let p: Vec<f64> = c.iter().map(|&k| k as f64 / resolution as f64).collect();
        let v = poly.value(&p);
        if v > best.1 {
            best = (p, v);
        }
    });

    let (mut x, mut fx) = best;
    let mut h = 1.0 / resolution as f64;
    while h > 1e-12 {
        let mut improved = false;
        for i in 0..m {
            for j in 0..m {
                if i == j || x[j] <= 0.0 {
                    continue;
                }
                let d = h.min(x[j]);
                let mut y = x.clone();
                y[i] += d;
                y[j] -= d;
                let fy = poly.value(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (x, fx)
}

fn grid_walk(counts: &mut [usize], j: usize, remaining: usize, visit: &mut impl FnMut(&[usize])) {
    if j + 1 == counts.len() {
        counts[j] = remaining;
        visit(counts);
        return;
    }
    for k in 0..=remaining {
        counts[j] = k;
        grid_walk(counts, j + 1, remaining - k, visit);
    }
}

pub(crate) fn not_converged(best: super::SelectionOptimum, gradient_norm: f64) -> Error {
    Error::NotConverged {
        gradient_norm,
        best: Box::new(best),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_partitions;

    #[test]
    fn projection_properties() {
        let p = project_to_simplex(&[0.3, 0.3, 0.4]);
        assert!((p[0] - 0.3).abs() < 1e-15);
        let q = project_to_simplex(&[2.0, -1.0, 0.5]);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(q.iter().all(|&x| x >= 0.0));
        assert_eq!(q, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let parts = enumerate_partitions(5, 3).unwrap();
        let coeffs: Vec<f64> = (0..parts.len()).map(|k| 1.0 + (k as f64 * 0.7).sin()).collect();
        let poly = SelectionPolynomial::new(&parts, coeffs);
        let x = [0.2, 0.5, 0.3];
        let g = poly.gradient(&x);
        for j in 0..3 {
            let mut a = x;
            let mut b = x;
            a[j] += 1e-6;
            b[j] -= 1e-6;
            let fd = (poly.value(&a) - poly.value(&b)) / 2e-6;
            assert!((fd - g[j]).abs() < 1e-6 * g[j].abs().max(1.0), "{j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn two_by_two_example() {
        // B = {1, 4, 1}: f(p) = p² + 4p(1-p) + (1-p)², maximized at p = ½
        let parts = enumerate_partitions(2, 2).unwrap();
        let poly = SelectionPolynomial::new(&parts, vec![1.0, 4.0, 1.0]);
        let a = maximize(&poly, &OptimizerSettings::default(), Execution::Sequential).unwrap();
        assert!(a.converged);
        assert!((a.probs[0] - 0.5).abs() < 1e-9);
        assert!((a.value - 1.5).abs() < 1e-12);
        let (x, v) = grid_refine(&poly, 100);
        assert!((x[0] - 0.5).abs() < 1e-9 && (v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn vertex_optimum() {
        // all mass on channel 0 is best
        let parts = enumerate_partitions(3, 2).unwrap();
        let coeffs = parts.iter().map(|p| if p.counts[0] == 3 { 5.0 } else { 0.1 }).collect();
        let poly = SelectionPolynomial::new(&parts, coeffs);
        let a = maximize(&poly, &OptimizerSettings::default(), Execution::Sequential).unwrap();
        assert!((a.probs[0] - 1.0).abs() < 1e-12);
        assert!(a.converged);
    }

    #[test]
    fn restarts_are_deterministic() {
        let s = OptimizerSettings::default();
        assert_eq!(restart_points(3, &s), restart_points(3, &s));
        assert_eq!(restart_points(3, &s).len(), s.restarts);
    }
}
