//! Lateral Casimir-Polder potential above a rough surface, to first and
//! second order in the roughness amplitudes.
//!
//! Only the x-dependent part U_L is produced. Every x-independent piece
//! (the flat-surface potential, the i = j difference term of the second
//! order, coincident-wavenumber difference terms) would only add a global
//! phase to the condensate and is dropped.

mod kernels;
mod stats;

pub use kernels::{
    g1_perfect_reflector, CasimirKernelSet, G2Kernel, G2Source, G2Table, KernelFn1, KernelFn2,
};
pub use stats::{
    correlator, disorder_strength, first_order_variance, AnalyticCorrelator, CorrelatorEstimate,
    DisorderStrength, PotentialOrder,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::params::PhysicalConstants;
use crate::surface::SurfaceRealization;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CasimirPrefactor {
    /// F(z₀) = 3ħcα(0)/(8π²ε₀z₀⁵), J/m.
    pub f1: f64,
    /// 15ħcα(0)/(32π²ε₀z₀⁶), J/m².
    pub f2: f64,
    pub z0: f64,
}

impl CasimirPrefactor {
    pub fn new(constants: &PhysicalConstants, z0: f64) -> Result<Self> {
        if !(z0.is_finite() && z0 > 0.0) {
            return Err(invalid(format!(
                "atom-surface distance must be positive, got {z0}"
            )));
        }
        let base = constants.hbar * constants.c * constants.alpha0 / (PI * PI * constants.epsilon0);
        Ok(Self {
            f1: 3.0 * base / (8.0 * z0.powi(5)),
            f2: 15.0 * base / (32.0 * z0.powi(6)),
            z0,
        })
    }
}

/// U⁽¹⁾(x) = −F Σᵢ hᵢ g⁽¹⁾(kᵢz₀) cos(kᵢx + θᵢ).
pub fn lateral_potential_first_order(
    surface: &SurfaceRealization,
    prefactor: &CasimirPrefactor,
    kernels: &CasimirKernelSet,
    x: &[f64],
) -> Vec<f64> {
    let coeff: Vec<f64> = surface
        .amplitudes
        .iter()
        .zip(&surface.wavenumbers)
        .map(|(h, k)| -prefactor.f1 * h * kernels.g1(k * prefactor.z0))
        .collect();
    x.iter()
        .map(|&xj| {
            coeff
                .iter()
                .zip(&surface.wavenumbers)
                .zip(&surface.offsets)
                .map(|((c, k), th)| c * (k * xj + th).cos())
                .sum()
        })
        .collect()
}

struct Mode {
    k: f64,
    phase: f64,
    weight: f64,
}

/// U⁽²⁾(x) = −F₂ Σᵢⱼ hᵢhⱼ [cos((kᵢ+kⱼ)x + θᵢ+θⱼ) g⁽²⁾(kᵢz₀, kⱼz₀)
///                      + cos((kᵢ−kⱼ)x + θᵢ−θⱼ) g⁽²⁾(kᵢz₀, −kⱼz₀)],
/// without its x-independent terms.
pub fn lateral_potential_second_order(
    surface: &SurfaceRealization,
    prefactor: &CasimirPrefactor,
    kernels: &CasimirKernelSet,
    x: &[f64],
) -> Result<Vec<f64>> {
    if kernels.g2_source() == G2Source::Disabled {
        return Err(Error::Unsupported(
            "second-order potential needs a g2 kernel".into(),
        ));
    }
    let n = surface.n_harmonics();
    let z0 = prefactor.z0;
    let (h, k, th) = (&surface.amplitudes, &surface.wavenumbers, &surface.offsets);
    let mut modes = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            let hh = -prefactor.f2 * h[i] * h[j];
            modes.push(Mode {
                k: k[i] + k[j],
                phase: th[i] + th[j],
                weight: hh * kernels.g2(k[i] * z0, k[j] * z0)?,
            });
            if k[i] != k[j] {
                modes.push(Mode {
                    k: k[i] - k[j],
                    phase: th[i] - th[j],
                    weight: hh * kernels.g2(k[i] * z0, -k[j] * z0)?,
                });
            }
        }
    }
    Ok(x.iter()
        .map(|&xj| {
            modes
                .iter()
                .map(|m| m.weight * (m.k * xj + m.phase).cos())
                .sum()
        })
        .collect())
}

/// U_L to first order, or first plus second order when `second` is set.
pub fn lateral_potential(
    surface: &SurfaceRealization,
    prefactor: &CasimirPrefactor,
    kernels: &CasimirKernelSet,
    x: &[f64],
    order: PotentialOrder,
) -> Result<Vec<f64>> {
    let mut u = lateral_potential_first_order(surface, prefactor, kernels, x);
    if order == PotentialOrder::Second {
        let u2 = lateral_potential_second_order(surface, prefactor, kernels, x)?;
        u.iter_mut().zip(u2).for_each(|(a, b)| *a += b);
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub max_h_over_lambda_min: f64,
    pub max_h_over_z0: f64,
    pub k_max: f64,
    /// 2π/h_typ; infinite for a flat surface.
    pub k_admissible: f64,
    pub h_typ: f64,
    pub valid: bool,
}

/// Checks the largest surface wavenumber against the perturbative cutoff
/// 2π/h_typ.
pub fn perturbative_report(
    k_max: f64,
    lambda_min: f64,
    h_peak: f64,
    h_typ: f64,
    z0: f64,
) -> ValidityReport {
    let k_admissible = if h_typ > 0.0 {
        2.0 * PI / h_typ
    } else {
        f64::INFINITY
    };
    ValidityReport {
        max_h_over_lambda_min: h_peak / lambda_min,
        max_h_over_z0: h_peak / z0,
        k_max,
        k_admissible,
        h_typ,
        valid: k_max <= k_admissible,
    }
}

/// Validity report for one realization; h_typ is its rms height √(Σhᵢ²/2).
pub fn validate_perturbative_regime(surface: &SurfaceRealization, z0: f64) -> ValidityReport {
    let h_peak = surface.amplitudes.iter().copied().fold(0.0, f64::max);
    let h_typ = (surface.amplitudes.iter().map(|h| h * h).sum::<f64>() / 2.0).sqrt();
    let k_max = surface.wavenumbers.iter().copied().fold(0.0, f64::max);
    let lambda_min = surface
        .wavelengths
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    perturbative_report(k_max, lambda_min, h_peak, h_typ, z0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{sample_surface, SurfaceSpec};
    use rustfft::{num_complex::Complex64, FftPlanner};

    fn fig3_spec() -> SurfaceSpec {
        SurfaceSpec {
            n_harmonics: 25,
            h_max: 200e-9,
            lambda_min: 1e-6,
            lambda_max: 20e-6,
            seed: 3,
        }
    }

    #[test]
    fn prefactor_value_and_scaling() {
        let c = PhysicalConstants::rb87();
        let p = CasimirPrefactor::new(&c, 1.5e-6).unwrap();
        // mpmath: 9.402494662456654e-26 J/m
        assert!((p.f1 / 9.402494662456654e-26 - 1.0).abs() < 1e-12);
        let p2 = CasimirPrefactor::new(&c, 3.0e-6).unwrap();
        assert!((p.f1 / p2.f1 - 32.0).abs() < 1e-10);
        assert!((p.f2 / p2.f2 - 64.0).abs() < 1e-10);
        assert!(p.f2 > 0.0);
        assert!(CasimirPrefactor::new(&c, 0.0).is_err());
    }

    #[test]
    fn single_harmonic_first_order() {
        let c = PhysicalConstants::rb87();
        let p = CasimirPrefactor::new(&c, 1.5e-6).unwrap();
        let k = CasimirKernelSet::perfect_reflector();
        let s = SurfaceRealization::from_harmonics(vec![0.1e-6], vec![5e-6], vec![0.0]).unwrap();
        let u = lateral_potential_first_order(&s, &p, &k, &[0.0]);
        let expected = -p.f1 * 0.1e-6 * g1_perfect_reflector(2.0 * PI * 1.5 / 5.0).unwrap();
        assert!((u[0] / expected - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_surface_gives_zero() {
        let c = PhysicalConstants::rb87();
        let p = CasimirPrefactor::new(&c, 1.0e-6).unwrap();
        let kern = CasimirKernelSet::perfect_reflector()
            .with_g2(G2Kernel::External(std::sync::Arc::new(|a, b| a + b)));
        let s = sample_surface(&fig3_spec(), 0).unwrap().scaled(0.0);
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 1e-6).collect();
        assert!(lateral_potential_first_order(&s, &p, &kern, &x)
            .iter()
            .all(|&v| v == 0.0));
        assert!(lateral_potential_second_order(&s, &p, &kern, &x)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn second_order_needs_kernel() {
        let c = PhysicalConstants::rb87();
        let p = CasimirPrefactor::new(&c, 1.0e-6).unwrap();
        let s = sample_surface(&fig3_spec(), 0).unwrap();
        let err =
            lateral_potential_second_order(&s, &p, &CasimirKernelSet::perfect_reflector(), &[0.0]);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    #[test]
    fn second_order_table_domain_error() {
        let c = PhysicalConstants::rb87();
        let p = CasimirPrefactor::new(&c, 1.0e-6).unwrap();
        let s = sample_surface(&fig3_spec(), 0).unwrap();
        let table = G2Table::from_fn(5, 5, (0.0, 1.0), (-1.0, 1.0), |_, _| 1.0).unwrap();
        let kern = CasimirKernelSet::perfect_reflector()
            .with_g2(G2Kernel::Tabulated(std::sync::Arc::new(table)));
        assert!(matches!(
            lateral_potential_second_order(&s, &p, &kern, &[0.0]),
            Err(Error::Domain(_))
        ));
    }

    fn toy_g2() -> CasimirKernelSet {
        CasimirKernelSet::perfect_reflector().with_g2(G2Kernel::External(std::sync::Arc::new(
            |a: f64, b: f64| (-(a + b.abs()) / 3.0).exp() * (1.0 + 0.1 * b),
        )))
    }

    #[test]
    fn second_order_symmetric_under_relabelling() {
        let c = PhysicalConstants::rb87();
        let p = CasimirPrefactor::new(&c, 1.0e-6).unwrap();
        let kern = CasimirKernelSet::perfect_reflector().with_g2(G2Kernel::External(
            std::sync::Arc::new(|a: f64, b: f64| (-(a.abs() + b.abs()) / 3.0).exp()),
        ));
        let s = sample_surface(&fig3_spec(), 4).unwrap();
        let mut swapped = s.clone();
        swapped.amplitudes.swap(0, 3);
        swapped.wavelengths.swap(0, 3);
        swapped.wavenumbers.swap(0, 3);
        swapped.offsets.swap(0, 3);
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.37e-6).collect();
        let a = lateral_potential_second_order(&s, &p, &kern, &x).unwrap();
        let b = lateral_potential_second_order(&swapped, &p, &kern, &x).unwrap();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn amplitude_scaling_linear_and_bilinear() {
        let c = PhysicalConstants::rb87();
        let p = CasimirPrefactor::new(&c, 1.0e-6).unwrap();
        let kern = toy_g2();
        let s = sample_surface(&fig3_spec(), 9).unwrap();
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.9e-6).collect();
        let u1 = lateral_potential_first_order(&s, &p, &kern, &x);
        let u2 = lateral_potential_second_order(&s, &p, &kern, &x).unwrap();
        let f = 1.7;
        let v1 = lateral_potential_first_order(&s.scaled(f), &p, &kern, &x);
        let v2 = lateral_potential_second_order(&s.scaled(f), &p, &kern, &x).unwrap();
        let m1 = u1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let m2 = u2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..x.len() {
            assert!((v1[i] - f * u1[i]).abs() <= 1e-13 * m1);
            assert!((v2[i] - f * f * u2[i]).abs() <= 1e-13 * m2);
        }
    }

    fn spectrum(u: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new()
            .plan_fft_forward(buf.len())
            .process(&mut buf);
        buf.iter().map(|c| c.norm()).collect()
    }

    #[test]
    fn spectral_support_first_and_second_order() {
        // wavelengths commensurate with the box so peaks land on bins
        let len = 1024e-6;
        let n = 8192;
        let dx = len / n as f64;
        let x: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();
        let s = SurfaceRealization::from_harmonics(
            vec![0.1e-6, 0.15e-6],
            vec![len / 300.0, len / 120.0],
            vec![0.4, 1.9],
        )
        .unwrap();
        let c = PhysicalConstants::rb87();
        let p = CasimirPrefactor::new(&c, 1.0e-6).unwrap();
        let kern = toy_g2();
        let s1 = spectrum(&lateral_potential_first_order(&s, &p, &kern, &x));
        let s2 = spectrum(&lateral_potential_second_order(&s, &p, &kern, &x).unwrap());
        let peak1 = s1.iter().cloned().fold(0.0, f64::max);
        let peak2 = s2.iter().cloned().fold(0.0, f64::max);
        for b in 0..n / 2 {
            let in1 = b == 300 || b == 120;
            let in2 = b == 600 || b == 240 || b == 420 || b == 180;
            if in1 {
                assert!(s1[b] > 1e-3 * peak1);
            } else {
                assert!(s1[b] < 1e-9 * peak1, "first order leaks at bin {b}");
            }
            if in2 {
                assert!(s2[b] > 1e-3 * peak2, "missing bin {b}");
            } else {
                assert!(s2[b] < 1e-9 * peak2, "second order leaks at bin {b}");
            }
        }
    }

    #[test]
    fn single_harmonic_second_order_is_pure_2k() {
        let len = 512e-6;
        let n = 4096;
        let x: Vec<f64> = (0..n).map(|i| i as f64 * len / n as f64).collect();
        let s =
            SurfaceRealization::from_harmonics(vec![0.2e-6], vec![len / 100.0], vec![0.7]).unwrap();
        let c = PhysicalConstants::rb87();
        let p = CasimirPrefactor::new(&c, 1.0e-6).unwrap();
        let sp = spectrum(&lateral_potential_second_order(&s, &p, &toy_g2(), &x).unwrap());
        let peak = sp.iter().cloned().fold(0.0, f64::max);
        for (b, v) in sp.iter().enumerate().take(n / 2) {
            if b != 200 {
                assert!(*v < 1e-9 * peak, "bin {b}");
            }
        }
    }

    #[test]
    fn validity_examples() {
        let flat = perturbative_report(2.0 * PI / 1e-6, 1e-6, 0.0, 0.0, 1e-6);
        assert!(flat.valid);
        let ok = perturbative_report(2.0 * PI / 1e-6, 1e-6, 0.2e-6, 0.41e-6, 1e-6);
        assert!(ok.valid);
        let bad = perturbative_report(2.0 * PI / 0.2e-6, 0.2e-6, 0.2e-6, 0.41e-6, 1e-6);
        assert!(!bad.valid);
        let r = validate_perturbative_regime(&sample_surface(&fig3_spec(), 2).unwrap(), 1.5e-6);
        assert!(r.valid);
        assert!(r.max_h_over_lambda_min < 0.2);
    }
}
