//! Numeric helpers shared by the curve, survival and duration modules.
//!
//! Every integral in the crate is a composite trapezoid over a tabulated
//! piecewise-linear function, which makes it exact for the representation.

use alloc::vec::Vec;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// `n` evenly spaced points on `[0, end]`.
pub fn uniform_grid(end: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let step = end / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { end } else { i as f64 * step })
        .collect()
}

/// Composite trapezoid for values on a uniform grid with spacing `step`.
pub fn trapezoid_uniform(step: f64, values: &[f64]) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            step * (0.5 * (values[0] + values[n - 1]) + inner)
        }
    }
}

/// Linear interpolation on a sorted grid, clamped to the end values outside it.
pub fn interp_clamped(grid: &[f64], values: &[f64], t: f64) -> f64 {
    let n = grid.len();
    if t <= grid[0] {
        return values[0];
    }
    if t >= grid[n - 1] {
        return values[n - 1];
    }
    // first index with grid[i] > t
    let hi = grid.partition_point(|&g| g <= t);
    let lo = hi - 1;
    let span = grid[hi] - grid[lo];
    let frac = (t - grid[lo]) / span;
    values[lo] + frac * (values[hi] - values[lo])
}

/// Linear interpolation on the uniform grid `i * step`, clamped at both ends.
pub fn interp_uniform(step: f64, values: &[f64], t: f64) -> f64 {
    let n = values.len();
    if t <= 0.0 {
        return values[0];
    }
    let pos = t / step;
    let lo = floor(pos) as usize;
    if lo >= n - 1 {
        return values[n - 1];
    }
    let frac = pos - lo as f64;
    values[lo] + frac * (values[lo + 1] - values[lo])
}

/// Exact integral over `[0, upper]` of the piecewise-linear interpolant,
/// holding the last value beyond the grid end.
pub fn integrate_piecewise_linear(grid: &[f64], values: &[f64], upper: f64) -> f64 {
    let n = grid.len();
    let mut total = 0.0;
    for i in 1..n {
        let (a, b) = (grid[i - 1], grid[i]);
        if a >= upper {
            return total;
        }
        if b <= upper {
            total += 0.5 * (b - a) * (values[i - 1] + values[i]);
        } else {
            let end_value = values[i - 1] + (upper - a) / (b - a) * (values[i] - values[i - 1]);
            total += 0.5 * (upper - a) * (values[i - 1] + end_value);
            return total;
        }
    }
    if upper > grid[n - 1] {
        total += (upper - grid[n - 1]) * values[n - 1];
    }
    total
}

/// Solves `A x = b` for a symmetric positive definite `A` (row-major, `n × n`).
/// Returns `None` when the factorisation breaks down.
pub fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let l = cholesky(a, n)?;
    Some(cholesky_apply(&l, b, n))
}

pub(crate) fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = alloc::vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = sqrt(d);
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Some(l)
}

pub(crate) fn cholesky_apply(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut y = alloc::vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = alloc::vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn piecewise_integral_partial_and_beyond() {
        let grid = [0.0, 1.0, 2.0];
        let values = [1.0, 0.0, 0.0];
        assert_abs_diff_eq!(integrate_piecewise_linear(&grid, &values, 0.5), 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(integrate_piecewise_linear(&grid, &values, 2.0), 0.5, epsilon = 1e-15);
        let flat = [0.5, 0.5, 0.5];
        assert_abs_diff_eq!(integrate_piecewise_linear(&grid, &flat, 3.0), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn interpolation_clamps() {
        let grid = [0.0, 1.0, 3.0];
        let values = [0.0, 1.0, 0.0];
        assert_eq!(interp_clamped(&grid, &values, -1.0), 0.0);
        assert_eq!(interp_clamped(&grid, &values, 5.0), 0.0);
        assert_abs_diff_eq!(interp_clamped(&grid, &values, 2.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(interp_uniform(0.5, &[0.0, 1.0, 2.0], 0.75), 1.5, epsilon = 1e-15);
        assert_eq!(interp_uniform(0.5, &[0.0, 1.0, 2.0], 9.0), 2.0);
    }

    #[test]
    fn cholesky_matches_known_solution() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x_true[j]).sum())
            .collect();
        let x = cholesky_solve(&a, &b, 3).unwrap();
        for (got, want) in x.iter().zip(x_true) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert!(cholesky_solve(&[1.0, 2.0, 2.0, 1.0], &[1.0, 1.0], 2).is_none());
    }
}
