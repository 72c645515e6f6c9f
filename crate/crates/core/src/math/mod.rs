//! Numerical building blocks shared by the theory and simulation code.

pub mod quad;
pub mod roots;
pub mod special;
pub mod stats;

/// Trapezoid rule on an arbitrary, ascending grid.
pub fn trapz(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Piecewise-linear interpolation, zero outside the grid.
pub fn interp_zero(x: &[f64], y: &[f64], at: f64) -> f64 {
    let n = x.len();
    if n == 0 || at < x[0] || at > x[n - 1] {
        return 0.0;
    }
    let k = x.partition_point(|&v| v <= at);
    if k == 0 {
        return y[0];
    }
    if k >= n {
        return y[n - 1];
    }
    let (x0, x1) = (x[k - 1], x[k]);
    let t = (at - x0) / (x1 - x0);
    y[k - 1] + t * (y[k] - y[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapz_is_exact_for_linear() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        assert!((trapz(&x, &y) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn interp_outside_is_zero() {
        let x = [0.0, 1.0, 2.0];
        let y = [1.0, 3.0, 5.0];
        assert_eq!(interp_zero(&x, &y, -0.1), 0.0);
        assert_eq!(interp_zero(&x, &y, 2.1), 0.0);
        assert!((interp_zero(&x, &y, 0.5) - 2.0).abs() < 1e-15);
        assert_eq!(interp_zero(&x, &y, 2.0), 5.0);
        assert_eq!(interp_zero(&x, &y, 0.0), 1.0);
    }
}
