//! Disorder statistics of the lateral potential: rms strength V_R and the
//! two-point correlator C(u), by Monte Carlo over surface realizations and
//! analytically (first order) by quadrature over the flat λ distribution.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{lateral_potential, CasimirKernelSet, CasimirPrefactor};
use crate::error::{invalid, Result};
use crate::quad;
use crate::surface::{sample_surface, SurfaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialOrder {
    /// U⁽¹⁾ only.
    First,
    /// U⁽¹⁾ + U⁽²⁾.
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderStrength {
    /// Monte-Carlo V_R (J).
    pub v_r: f64,
    pub standard_error: f64,
    /// First-order closed form, when `order` is first.
    pub analytic: Option<f64>,
    pub n_mc: usize,
}

/// E_λ[g⁽¹⁾(2πz₀/λ)² cos(2πu/λ)] for the flat λ distribution.
fn lambda_average(spec: &SurfaceSpec, z0: f64, kernels: &CasimirKernelSet, u: f64) -> f64 {
    let width = spec.lambda_max - spec.lambda_min;
    let f = |lam: f64| {
        let g = kernels.g1(TAU * z0 / lam);
        g * g * (TAU * u / lam).cos()
    };
    // split so each piece holds a bounded number of oscillations
    let cycles = u.abs() * (1.0 / spec.lambda_min - 1.0 / spec.lambda_max);
    let pieces = (cycles.ceil() as usize).clamp(1, 100_000);
    let breaks: Vec<f64> = (1..pieces)
        .map(|i| {
            // equal steps in 1/λ
            let q = 1.0 / spec.lambda_max
                + (1.0 / spec.lambda_min - 1.0 / spec.lambda_max) * i as f64 / pieces as f64;
            1.0 / q
        })
        .collect();
    let r = quad::integrate(
        f,
        spec.lambda_min,
        spec.lambda_max,
        &breaks,
        1e-10,
        0.0,
        200 + 20 * pieces,
    );
    r.value / width
}

/// V_R² = (F²/2)·n·E[hᵢ²]·E_λ[g⁽¹⁾(2πz₀/λ)²], first order.
pub fn first_order_variance(
    spec: &SurfaceSpec,
    prefactor: &CasimirPrefactor,
    kernels: &CasimirKernelSet,
) -> f64 {
    0.5 * prefactor.f1
        * prefactor.f1
        * spec.n_harmonics as f64
        * spec.mean_square_amplitude()
        * lambda_average(spec, prefactor.z0, kernels, 0.0)
}

/// Monte-Carlo V_R at the point `x0`, realizations `0..n_mc` of `spec`.
pub fn disorder_strength(
    spec: &SurfaceSpec,
    prefactor: &CasimirPrefactor,
    kernels: &CasimirKernelSet,
    order: PotentialOrder,
    n_mc: usize,
    x0: f64,
) -> Result<DisorderStrength> {
    if n_mc < 2 {
        return Err(invalid("disorder_strength needs n_mc >= 2"));
    }
    spec.validate()?;
    let mut samples = Vec::with_capacity(n_mc);
    for i in 0..n_mc {
        let s = sample_surface(spec, i as u64)?;
        samples.push(lateral_potential(&s, prefactor, kernels, &[x0], order)?[0]);
    }
    let n = n_mc as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let dev2: Vec<f64> = samples.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = dev2.iter().sum::<f64>() / (n - 1.0);
    let m4 = dev2.iter().map(|d| d * d).sum::<f64>() / n;
    // delta method: SE(s) ≈ SE(s²)/(2s)
    let se_var = ((m4 - var * var).max(0.0) / n).sqrt();
    let v_r = var.sqrt();
    let standard_error = if v_r > 0.0 { se_var / (2.0 * v_r) } else { 0.0 };
    let analytic = (order == PotentialOrder::First)
        .then(|| first_order_variance(spec, prefactor, kernels).sqrt());
    Ok(DisorderStrength {
        v_r,
        standard_error,
        analytic,
        n_mc,
    })
}

/// First-order C(u) = (F²/2)·n·E[hᵢ²]·E_λ[g⁽¹⁾(2πz₀/λ)² cos(2πu/λ)].
#[derive(Debug, Clone)]
pub struct AnalyticCorrelator {
    spec: SurfaceSpec,
    prefactor: CasimirPrefactor,
    kernels: CasimirKernelSet,
    scale: f64,
}

impl AnalyticCorrelator {
    pub fn new(
        spec: &SurfaceSpec,
        prefactor: &CasimirPrefactor,
        kernels: &CasimirKernelSet,
    ) -> Self {
        let scale = 0.5
            * prefactor.f1
            * prefactor.f1
            * spec.n_harmonics as f64
            * spec.mean_square_amplitude();
        Self {
            spec: *spec,
            prefactor: *prefactor,
            kernels: kernels.clone(),
            scale,
        }
    }

    /// Adaptive evaluation at a single separation.
    pub fn eval(&self, u: f64) -> f64 {
        self.scale * lambda_average(&self.spec, self.prefactor.z0, &self.kernels, u)
    }

    /// Fast evaluation at many separations with |u| ≤ `u_max`: a fixed
    /// Gauss-Legendre rule in q = 2π/λ fine enough for cos(q·u_max).
    pub fn eval_many(&self, us: &[f64]) -> Vec<f64> {
        let u_max = us.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        let (qa, qb) = (TAU / self.spec.lambda_max, TAU / self.spec.lambda_min);
        let panels = (((qb - qa) * u_max / std::f64::consts::PI).ceil() as usize) + 32;
        let (nodes, weights) = quad::composite_gauss_legendre(qa, qb, panels, 12);
        let width = self.spec.lambda_max - self.spec.lambda_min;
        // dλ = 2π/q² dq
        let spectral: Vec<f64> = nodes
            .iter()
            .zip(&weights)
            .map(|(&q, &w)| {
                let g = self.kernels.g1(q * self.prefactor.z0);
                w * g * g * TAU / (q * q) / width * self.scale
            })
            .collect();
        us.iter()
            .map(|&u| {
                nodes
                    .iter()
                    .zip(&spectral)
                    .map(|(q, s)| s * (q * u).cos())
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    pub separations: Vec<f64>,
    pub monte_carlo: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub analytic: Vec<f64>,
}

/// First-order C(u) by Monte Carlo (mean of U(x₀)U(x₀+u) over `n_mc`
/// realizations, x₀ = 0) alongside the analytic form.
pub fn correlator(
    spec: &SurfaceSpec,
    prefactor: &CasimirPrefactor,
    kernels: &CasimirKernelSet,
    separations: &[f64],
    n_mc: usize,
) -> Result<CorrelatorEstimate> {
    if n_mc < 2 {
        return Err(invalid("correlator needs n_mc >= 2"));
    }
    spec.validate()?;
    let mut points = Vec::with_capacity(separations.len() + 1);
    points.push(0.0);
    points.extend_from_slice(separations);
    let m = separations.len();
    let mut sum = vec![0.0; m];
    let mut sum2 = vec![0.0; m];
    for i in 0..n_mc {
        let s = sample_surface(spec, i as u64)?;
        let u = super::lateral_potential_first_order(&s, prefactor, kernels, &points);
        for j in 0..m {
            let p = u[0] * u[j + 1];
            sum[j] += p;
            sum2[j] += p * p;
        }
    }
    let n = n_mc as f64;
    let monte_carlo: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let standard_error = sum2
        .iter()
        .zip(&monte_carlo)
        .map(|(s2, mean)| ((s2 / n - mean * mean).max(0.0) / (n - 1.0)).sqrt())
        .collect();
    let analytic = AnalyticCorrelator::new(spec, prefactor, kernels).eval_many(separations);
    Ok(CorrelatorEstimate {
        separations: separations.to_vec(),
        monte_carlo,
        standard_error,
        analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PhysicalConstants;

    fn spec() -> SurfaceSpec {
        SurfaceSpec {
            n_harmonics: 25,
            h_max: 200e-9,
            lambda_min: 1e-6,
            lambda_max: 20e-6,
            seed: 11,
        }
    }

    fn setup(z0: f64) -> (CasimirPrefactor, CasimirKernelSet) {
        (
            CasimirPrefactor::new(&PhysicalConstants::rb87(), z0).unwrap(),
            CasimirKernelSet::perfect_reflector(),
        )
    }

    #[test]
    fn zero_amplitude_gives_zero_strength() {
        let (p, k) = setup(1.5e-6);
        let s = SurfaceSpec {
            h_max: 0.0,
            ..spec()
        };
        let d = disorder_strength(&s, &p, &k, PotentialOrder::First, 10, 0.0).unwrap();
        assert_eq!(d.v_r, 0.0);
        assert_eq!(d.analytic, Some(0.0));
    }

    #[test]
    fn needs_two_samples() {
        let (p, k) = setup(1.5e-6);
        assert!(disorder_strength(&spec(), &p, &k, PotentialOrder::First, 1, 0.0).is_err());
        assert!(correlator(&spec(), &p, &k, &[0.0], 1).is_err());
    }

    #[test]
    fn doubling_distance_suppresses_more_than_power_law() {
        let (p1, k) = setup(1.5e-6);
        let (p2, _) = setup(3.0e-6);
        let v1 = first_order_variance(&spec(), &p1, &k).sqrt();
        let v2 = first_order_variance(&spec(), &p2, &k).sqrt();
        assert!(v1 / v2 > 32.0);
    }

    #[test]
    fn analytic_correlator_paths_agree() {
        let (p, k) = setup(1.5e-6);
        let c = AnalyticCorrelator::new(&spec(), &p, &k);
        let us = [0.0, 0.7e-6, 3e-6, 17e-6, 80e-6, 400e-6];
        let fast = c.eval_many(&us);
        let c0 = c.eval(0.0);
        for (u, f) in us.iter().zip(&fast) {
            assert!((c.eval(*u) - f).abs() < 1e-9 * c0, "u = {u}");
        }
        assert!((c0 - first_order_variance(&spec(), &p, &k)).abs() < 1e-12 * c0);
        assert!((c.eval(-5e-6) - c.eval(5e-6)).abs() < 1e-14 * c0);
    }

    #[test]
    fn monte_carlo_matches_analytic_small() {
        let (p, k) = setup(1.5e-6);
        let d = disorder_strength(&spec(), &p, &k, PotentialOrder::First, 2000, 0.0).unwrap();
        let a = d.analytic.unwrap();
        assert!(
            (d.v_r - a).abs() < 3.0 * d.standard_error,
            "{} vs {a} (se {})",
            d.v_r,
            d.standard_error
        );
    }

    #[test]
    fn variance_independent_of_position() {
        let (p, k) = setup(1.5e-6);
        let a = disorder_strength(&spec(), &p, &k, PotentialOrder::First, 2000, 0.0).unwrap();
        let b = disorder_strength(&spec(), &p, &k, PotentialOrder::First, 2000, 123.4e-6).unwrap();
        let se = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
        assert!((a.v_r - b.v_r).abs() < 3.0 * se);
    }
}
