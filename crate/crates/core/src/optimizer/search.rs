//! One-dimensional maximization: coarse grid scan followed by golden-section
//! refinement around the best grid point.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMax {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`, stopping when
/// the bracket is narrower than `tol` or after `max_iter` iterations.
pub fn golden_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Result<LineMax>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut evaluations = 2;
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
        evaluations += 1;
    }
    let (x, value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Ok(LineMax {
        x,
        value,
        evaluations,
    })
}

/// Scan `grid` (ascending), then refine by golden-section between the
/// neighbours of the best grid point. The grid guards against a landscape
/// that is not unimodal over the whole range.
pub fn grid_golden_max<F>(mut f: F, grid: &[f64], tol: f64, max_iter: usize) -> Result<LineMax>
where
    F: FnMut(f64) -> Result<f64>,
{
    assert!(!grid.is_empty());
    let mut best = 0;
    let mut values = Vec::with_capacity(grid.len());
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x)?;
        if v > values.get(best).copied().unwrap_or(f64::NEG_INFINITY) {
            best = i;
        }
        values.push(v);
    }
    let grid_best = LineMax {
        x: grid[best],
        value: values[best],
        evaluations: grid.len(),
    };
    if grid.len() == 1 {
        return Ok(grid_best);
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden_max(&mut f, lo, hi, tol, max_iter)?;
    let evaluations = grid_best.evaluations + refined.evaluations;
    let winner = if refined.value > grid_best.value {
        refined
    } else {
        grid_best
    };
    Ok(LineMax {
        evaluations,
        ..winner
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let r = golden_max(|x| Ok(-(x - 0.3f64).powi(2)), 0.0, 1.0, 1e-10, 200).unwrap();
        assert!((r.x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn grid_escapes_local_peak() {
        // two bumps; golden alone on [0, 1] would pick the left one
        let f = |x: f64| Ok((-(x - 0.15f64).powi(2) / 0.001).exp() + 1.2 * (-(x - 0.8f64).powi(2) / 0.001).exp());
        let grid: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
        let r = grid_golden_max(f, &grid, 1e-10, 200).unwrap();
        assert!((r.x - 0.8).abs() < 1e-6);
    }

    #[test]
    fn boundary_maximum() {
        let grid: Vec<f64> = (1..=64).map(|i| i as f64 / 64.0).collect();
        let r = grid_golden_max(Ok, &grid, 1e-12, 200).unwrap();
        assert_eq!(r.x, 1.0);
    }
}
