use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::LyapunovCurve;
use crate::error::{invalid, Result};
use crate::quad;

/// u·(1+u²)²·sinh(πu)/(1+cosh πu)², written as tanh·sech² so it stays
/// finite for large u.
fn weight(u: f64) -> f64 {
    let h = 0.5 * PI * u;
    let sech = 1.0 / h.cosh();
    let q = 1.0 + u * u;
    0.5 * u * q * q * h.tanh() * sech * sech
}

/// P(s) = (π²/2)∫₀^∞ weight(u)·e^{−2(1+u²)s} du, so that the averaged
/// single-mode density is γ·P(γ|x|).
pub fn scaled_mode_density(s: f64) -> f64 {
    let s = s.max(0.0);
    // the integrand peaks near u ~ 1.6, or near 1/√(2s) once s is large;
    // beyond u_max it sits below 10⁻¹² of its peak
    let u_max = if s > 0.0 {
        (18.5 / s).sqrt().min(20.0)
    } else {
        20.0
    };
    let breaks = [u_max / 16.0, u_max / 8.0, u_max / 4.0, u_max / 2.0];
    let r = quad::integrate(
        |u| weight(u) * (-2.0 * (1.0 + u * u) * s).exp(),
        0.0,
        u_max,
        &breaks,
        1e-12,
        0.0,
        2000,
    );
    0.5 * PI * PI * r.value
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDensity {
    pub density: Vec<f64>,
    /// γ = 0: no normalizable profile, density reported as zero.
    pub delocalized: bool,
}

/// Disorder-averaged density of a localized mode with inverse
/// localization length `gamma`, normalized to one over the real line.
pub fn mode_density(gamma: f64, x: &[f64]) -> Result<ModeDensity> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma must be non-negative, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(ModeDensity {
            density: vec![0.0; x.len()],
            delocalized: true,
        });
    }
    let density = x
        .iter()
        .map(|x| gamma * scaled_mode_density(gamma * x.abs()))
        .collect();
    Ok(ModeDensity {
        density,
        delocalized: false,
    })
}

/// Cubic interpolation of ln P(s) + 2s against ln s on a fixed table;
/// removing the e^{−2s} decay leaves a slowly varying function.
#[derive(Debug, Clone)]
pub struct ModeDensityTable {
    ln_s0: f64,
    step: f64,
    ln_p: Vec<f64>,
    p0: f64,
}

impl ModeDensityTable {
    const S_MIN: f64 = 1e-14;
    const S_MAX: f64 = 350.0;
    const PER_DECADE: f64 = 40.0;

    pub fn new() -> Self {
        let ln_s0 = Self::S_MIN.ln();
        let step = std::f64::consts::LN_10 / Self::PER_DECADE;
        let n = ((Self::S_MAX.ln() - ln_s0) / step).ceil() as usize + 2;
        let ln_p = (0..n)
            .map(|i| {
                let s = (ln_s0 + i as f64 * step).exp();
                scaled_mode_density(s).ln() + 2.0 * s
            })
            .collect();
        Self {
            ln_s0,
            step,
            ln_p,
            p0: scaled_mode_density(0.0),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= Self::S_MIN {
            return if s <= 0.0 {
                self.p0
            } else {
                (self.ln_p[0] - 2.0 * s).exp()
            };
        }
        let t = (s.ln() - self.ln_s0) / self.step;
        let n = self.ln_p.len();
        if t >= (n - 2) as f64 {
            return 0.0;
        }
        let i = (t.floor() as usize).clamp(1, n - 3);
        let f = t - i as f64;
        let p = &self.ln_p[i - 1..i + 3];
        // four-point Lagrange on nodes −1, 0, 1, 2
        let l = -f * (f - 1.0) * (f - 2.0) / 6.0 * p[0]
            + (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0 * p[1]
            - (f + 1.0) * f * (f - 2.0) / 2.0 * p[2]
            + (f + 1.0) * f * (f - 1.0) / 6.0 * p[3];
        (l - 2.0 * s).exp()
    }
}

impl Default for ModeDensityTable {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedProfile {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    /// Share of the (1 − k²ξ²) mode weight with γ ≥ 1/L_max.
    pub localized_fraction: f64,
    pub delocalized_fraction: f64,
}

/// Sub-intervals of (0, k_hi] where the interpolated γ ≥ threshold.
fn localized_intervals(curve: &LyapunovCurve, threshold: f64, k_hi: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut push = |a: f64, b: f64| {
        let (a, b) = (a.max(0.0), b.min(k_hi));
        if b > a {
            match out.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => out.push((a, b)),
            }
        }
    };
    for i in 0..curve.len() - 1 {
        let (k0, k1, g0, g1) = (
            curve.k[i],
            curve.k[i + 1],
            curve.gamma[i],
            curve.gamma[i + 1],
        );
        if k0 >= k_hi {
            break;
        }
        match (g0 > 0.0, g1 > 0.0) {
            (true, true) => {
                let (above0, above1) = (g0 >= threshold, g1 >= threshold);
                if above0 && above1 {
                    push(k0, k1);
                } else if above0 != above1 {
                    let t = (threshold.ln() - g0.ln()) / (g1.ln() - g0.ln());
                    let kc = k0 + t * (k1 - k0);
                    if above0 {
                        push(k0, kc);
                    } else {
                        push(kc, k1);
                    }
                }
            }
            (true, false) if g0 >= threshold => push(k0, k1),
            (false, true) if g1 >= threshold => push(k0, k1),
            _ => {}
        }
    }
    out
}

/// n̄(x) = (3Nξ/2)∫₀^{1/ξ}(1 − k²ξ²)·γ(k)P(γ(k)|x|) dk over the modes with
/// γ(k) ≥ 1/L_max. Lengths in m, wavenumbers in 1/m.
pub fn averaged_profile(
    xi: f64,
    n_atoms: f64,
    curve: &LyapunovCurve,
    l_max: f64,
    x: &[f64],
) -> Result<AveragedProfile> {
    if !(xi > 0.0 && l_max > 0.0 && n_atoms >= 0.0) {
        return Err(invalid(
            "averaged_profile needs xi > 0, L_max > 0 and N >= 0",
        ));
    }
    let k_hi = 1.0 / xi;
    if curve.k[curve.len() - 1] < k_hi {
        return Err(invalid(format!(
            "Lyapunov curve ends at k = {:e}, below 1/xi = {k_hi:e}",
            curve.k[curve.len() - 1]
        )));
    }
    let intervals = localized_intervals(curve, 1.0 / l_max, k_hi);
    let cumulative = |k: f64| 1.5 * xi * (k - k * k * k * xi * xi / 3.0);
    let localized_fraction: f64 = intervals
        .iter()
        .map(|(a, b)| cumulative(*b) - cumulative(*a))
        .sum();
    let table = ModeDensityTable::new();

    let mut density = Vec::with_capacity(x.len());
    for &xj in x {
        let ax = xj.abs();
        let mut total = 0.0;
        for &(a, b) in &intervals {
            let breaks: Vec<f64> = curve
                .k
                .iter()
                .cloned()
                .filter(|k| *k > a && *k < b)
                .collect();
            let f = |k: f64| {
                let g = curve.eval(k);
                (1.0 - k * k * xi * xi) * g * table.eval(g * ax)
            };
            total += quad::integrate(f, a, b, &breaks, 1e-8, 0.0, 4 * breaks.len() + 200).value;
        }
        density.push(1.5 * n_atoms * xi * total);
    }
    Ok(AveragedProfile {
        x: x.to_vec(),
        density,
        localized_fraction,
        delocalized_fraction: 1.0 - localized_fraction,
    })
}
