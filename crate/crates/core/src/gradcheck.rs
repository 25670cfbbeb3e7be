//! Central finite differences for checking analytic gradients.

use nalgebra::DMatrix;

pub const DEFAULT_STEP: f64 = 1e-5;
/// Denominator floor for relative errors of near-zero entries.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// `(f(x + h e_t) − f(x − h e_t)) / 2h` for every entry `t`.
pub fn numeric_gradient<F: FnMut(&DMatrix<f64>) -> f64>(x: &DMatrix<f64>, h: f64, f: F) -> DMatrix<f64> {
    let entries: Vec<usize> = (0..x.len()).collect();
    numeric_entries(x, h, &entries, f)
        .into_iter()
        .fold(DMatrix::zeros(x.nrows(), x.ncols()), |mut g, (t, v)| {
            g[t] = v;
            g
        })
}

/// Central differences at the listed flat (column-major) entries only.
pub fn numeric_entries<F: FnMut(&DMatrix<f64>) -> f64>(
    x: &DMatrix<f64>,
    h: f64,
    entries: &[usize],
    mut f: F,
) -> Vec<(usize, f64)> {
    let mut probe = x.clone();
    entries
        .iter()
        .map(|&t| {
            let orig = probe[t];
            probe[t] = orig + h;
            let up = f(&probe);
            probe[t] = orig - h;
            let down = f(&probe);
            probe[t] = orig;
            (t, (up - down) / (2.0 * h))
        })
        .collect()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Largest entrywise relative error between two gradients of equal shape.
pub fn max_relative_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape());
    analytic.iter().zip(numeric.iter()).map(|(&a, &b)| relative_error(a, b)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        let g = numeric_gradient(&x, DEFAULT_STEP, |m| m.iter().map(|v| v * v).sum());
        assert!(max_relative_error(&(&x * 2.0), &g) < 1e-8);
    }

    #[test]
    fn floor_applies_near_zero() {
        assert!(relative_error(1e-9, 0.0) < 1e-2);
        assert_eq!(relative_error(2.0, 1.0), 0.5);
    }
}
