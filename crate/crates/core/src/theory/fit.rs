use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual RMS of ln n above which a power law is flagged as a poor model.
pub const POOR_FIT_RMS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// n ∝ x^(−ν).
    pub nu: f64,
    pub nu_standard_error: f64,
    pub amplitude: f64,
    pub residual_rms: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub poor_fit: bool,
}

/// Least-squares line through (ln x, ln n) for samples strictly inside
/// (x_lo, x_hi) with positive x and n.
pub fn power_law_fit(x: &[f64], n: &[f64], x_lo: f64, x_hi: f64) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(n)
        .filter(|(x, n)| **x > x_lo && **x < x_hi && **x > 0.0 && **n > 0.0 && n.is_finite())
        .map(|(x, n)| (x.ln(), n.ln()))
        .collect();
    let m = pts.len();
    if m < 10 {
        return Err(Error::InsufficientData(format!(
            "{m} usable samples in ({x_lo:e}, {x_hi:e}); need at least 10"
        )));
    }
    let mf = m as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all samples share one x".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let residual_rms = (ss_res / mf).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let nu_standard_error = (ss_res / (mf - 2.0) / sxx).sqrt();
    Ok(PowerLawFit {
        nu: -slope,
        nu_standard_error,
        amplitude: intercept.exp(),
        residual_rms,
        r_squared,
        n_points: m,
        poor_fit: residual_rms > POOR_FIT_RMS,
    })
}

/// Log-log slopes of consecutive sub-windows of equal logarithmic width,
/// together with the largest relative deviation from the whole-window
/// slope. Used to judge whether a profile is straight in log-log.
pub fn slope_constancy(
    x: &[f64],
    n: &[f64],
    x_lo: f64,
    x_hi: f64,
    pieces: usize,
) -> Result<(Vec<f64>, f64)> {
    let whole = power_law_fit(x, n, x_lo, x_hi)?;
    let r = (x_hi / x_lo).ln() / pieces as f64;
    let mut slopes = Vec::with_capacity(pieces);
    for i in 0..pieces {
        let a = x_lo * (r * i as f64).exp();
        let b = x_lo * (r * (i + 1) as f64).exp();
        slopes.push(power_law_fit(x, n, a, b)?.nu);
    }
    let dev = slopes
        .iter()
        .map(|s| ((s - whole.nu) / whole.nu).abs())
        .fold(0.0, f64::max);
    Ok((slopes, dev))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn exact_inverse_square() {
        let x = logspace(1.0, 1000.0, 50);
        let n: Vec<f64> = x.iter().map(|x| 3.0 / (x * x)).collect();
        let f = power_law_fit(&x, &n, 0.5, 2000.0).unwrap();
        assert!((f.nu - 2.0).abs() < 1e-6);
        assert!((f.amplitude - 3.0).abs() < 1e-9);
        assert!(f.r_squared > 1.0 - 1e-12 && !f.poor_fit);
        let (_, dev) = slope_constancy(&x, &n, 0.9, 1100.0, 3).unwrap();
        assert!(dev < 1e-9);
    }

    #[test]
    fn exponential_is_a_poor_power_law() {
        let x = logspace(1.0, 10.0, 40);
        let n: Vec<f64> = x.iter().map(|x| (-x).exp()).collect();
        assert!(power_law_fit(&x, &n, 0.5, 20.0).unwrap().poor_fit);
    }

    #[test]
    fn too_few_points() {
        let x = logspace(1.0, 10.0, 11);
        let n = vec![1.0; 11];
        assert!(matches!(
            power_law_fit(&x, &n, 2.0, 9.0),
            Err(Error::InsufficientData(_))
        ));
        // window boundaries are exclusive
        assert!(power_law_fit(&x, &n, 1.0, 10.0).is_err());
        assert!(power_law_fit(&x, &n, 0.9, 11.0).is_ok());
    }
}
