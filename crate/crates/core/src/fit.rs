//! Least-squares helpers for power-law fits.

use crate::error::{Error, Result};

/// Ordinary least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::GridMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewFitPoints {
            needed: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Slope of `ln y` against `ln x`, i.e. the exponent `p` of `y ∝ x^p`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = x.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    linear_slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x: Vec<f64> = (1..=6).map(|k| 1e-3 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 7.0 * v.powi(4)).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            linear_slope(&[1.0], &[2.0]),
            Err(Error::TooFewFitPoints { .. })
        ));
    }
}
