use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::casimir::{CasimirKernelSet, CasimirPrefactor};
use crate::error::{invalid, Error, Result};
use crate::params::PhysicalConstants;
use crate::quad;
use crate::surface::{mean_square_height, SurfaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovSource {
    ClosedForm,
    CorrelatorIntegral,
    Synthetic,
}

impl fmt::Display for LyapunovSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LyapunovSource::ClosedForm => "closed-form",
            LyapunovSource::CorrelatorIntegral => "correlator-integral",
            LyapunovSource::Synthetic => "synthetic",
        })
    }
}

/// Sampled inverse localization length γ(k), k ascending (SI units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCurve {
    pub k: Vec<f64>,
    pub gamma: Vec<f64>,
    pub source: LyapunovSource,
}

impl LyapunovCurve {
    pub fn new(k: Vec<f64>, gamma: Vec<f64>, source: LyapunovSource) -> Result<Self> {
        if k.len() != gamma.len() || k.is_empty() {
            return Err(invalid(
                "a Lyapunov curve needs matching, non-empty k and gamma samples",
            ));
        }
        if k.windows(2).any(|w| !(w[1] > w[0])) || k[0] <= 0.0 {
            return Err(invalid(
                "k samples must be positive and strictly increasing",
            ));
        }
        if gamma.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(invalid("gamma samples must be finite and non-negative"));
        }
        Ok(Self { k, gamma, source })
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// γ between samples: log-linear when both neighbours are positive.
    /// A segment with one vanishing end holds the other end's value, so
    /// support edges placed on samples are reproduced sharply. Zero
    /// outside the sampled range.
    pub fn eval(&self, k: f64) -> f64 {
        let n = self.k.len();
        if !(k >= self.k[0] && k <= self.k[n - 1]) {
            return 0.0;
        }
        if n == 1 {
            return self.gamma[0];
        }
        let i = match self.k.partition_point(|&s| s <= k) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (k0, k1, g0, g1) = (self.k[i], self.k[i + 1], self.gamma[i], self.gamma[i + 1]);
        if k == k0 {
            return g0;
        }
        match (g0 > 0.0, g1 > 0.0) {
            (true, true) => {
                let t = (k - k0) / (k1 - k0);
                (g0.ln() * (1.0 - t) + g1.ln() * t).exp()
            }
            (true, false) => g0,
            (false, true) => g1,
            (false, false) => 0.0,
        }
    }

    /// max γ(k)/k over the samples.
    pub fn max_gamma_over_k(&self) -> f64 {
        self.k
            .iter()
            .zip(&self.gamma)
            .map(|(k, g)| g / k)
            .fold(0.0, f64::max)
    }
}

/// γ(k) = m²π²F²·⟨h²⟩·P(π/k)·g⁽¹⁾(2kz₀)² / (4ħ⁴k⁴).
#[derive(Debug, Clone)]
pub struct ClosedFormLyapunov {
    spec: SurfaceSpec,
    kernels: CasimirKernelSet,
    z0: f64,
    coeff: f64,
}

impl ClosedFormLyapunov {
    pub fn new(
        spec: &SurfaceSpec,
        prefactor: &CasimirPrefactor,
        kernels: &CasimirKernelSet,
        constants: &PhysicalConstants,
    ) -> Result<Self> {
        spec.validate()?;
        let m = constants.m_atom;
        let hb2 = constants.hbar * constants.hbar;
        let coeff = m * m * PI * PI * prefactor.f1 * prefactor.f1 * mean_square_height(spec)
            / (4.0 * hb2 * hb2);
        Ok(Self {
            spec: *spec,
            kernels: kernels.clone(),
            z0: prefactor.z0,
            coeff,
        })
    }

    pub fn eval(&self, k: f64) -> Result<f64> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid(format!(
                "gamma needs k > 0 (E_k vanishes at k = 0), got {k}"
            )));
        }
        let p = self.spec.wavelength_density(PI / k);
        if p == 0.0 {
            return Ok(0.0);
        }
        let g = self.kernels.g1(2.0 * k * self.z0);
        Ok(self.coeff * p * g * g / k.powi(4))
    }

    /// Wavenumbers where P(π/k) is non-zero: (π/λ_max, π/λ_min].
    pub fn support(&self) -> (f64, f64) {
        (PI / self.spec.lambda_max, PI / self.spec.lambda_min)
    }
}

pub fn lyapunov_closed_form(
    spec: &SurfaceSpec,
    prefactor: &CasimirPrefactor,
    kernels: &CasimirKernelSet,
    k: &[f64],
    constants: &PhysicalConstants,
) -> Result<LyapunovCurve> {
    let law = ClosedFormLyapunov::new(spec, prefactor, kernels, constants)?;
    let gamma = k.iter().map(|&k| law.eval(k)).collect::<Result<Vec<_>>>()?;
    LyapunovCurve::new(k.to_vec(), gamma, LyapunovSource::ClosedForm)
}

/// Cosine-transform settings. The correlator is multiplied by the taper
/// exp(−u²/2w²) and integrated up to `cutoff_widths`·w; in k this smooths
/// γ with a Gaussian of width 1/(2w).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformOptions {
    /// Taper width w (m).
    pub taper_width: f64,
    pub cutoff_widths: f64,
    /// Panel width of the composite Gauss-Legendre rule in u (m).
    pub panel_width: f64,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            taper_width: 100e-6,
            cutoff_widths: 8.0,
            panel_width: 0.25e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformReport {
    pub u_cut: f64,
    /// |C(u_cut)|/C(0) before tapering.
    pub raw_tail: f64,
    /// The same ratio after tapering.
    pub tapered_tail: f64,
    /// Set when the tapered tail exceeds 10⁻⁸.
    pub accuracy_warning: bool,
}

/// γ(k) = (m²/ħ⁴k²)·∫₀^∞ C(u) cos(2ku) du, i.e. the cosine transform
/// of C over the real line times m/(4ħ²E_k). `correlator` maps separations
/// (m) to C (J²) and is called once with every quadrature node.
pub fn lyapunov_from_correlator(
    correlator: impl Fn(&[f64]) -> Vec<f64>,
    k: &[f64],
    constants: &PhysicalConstants,
    options: &TransformOptions,
) -> Result<(LyapunovCurve, TransformReport)> {
    if k.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
        return Err(invalid("gamma needs k > 0 (E_k vanishes at k = 0)"));
    }
    let w = options.taper_width;
    let u_cut = options.cutoff_widths * w;
    if !(w > 0.0 && u_cut > 0.0 && options.panel_width > 0.0) {
        return Err(invalid("transform widths must be positive"));
    }
    let panels = (u_cut / options.panel_width).ceil() as usize;
    let (mut us, mut ws) = quad::composite_gauss_legendre(0.0, u_cut, panels, 12);
    us.push(0.0);
    us.push(u_cut);
    let c = correlator(&us);
    if c.len() != us.len() {
        return Err(invalid("correlator returned the wrong number of samples"));
    }
    let c_cut = c[c.len() - 1];
    let c0 = c[c.len() - 2];
    us.truncate(ws.len());
    let taper = |u: f64| (-0.5 * (u / w).powi(2)).exp();
    for ((wi, ui), ci) in ws.iter_mut().zip(&us).zip(&c) {
        *wi *= ci * taper(*ui);
    }
    let (raw_tail, tapered_tail) = if c0 != 0.0 {
        ((c_cut / c0).abs(), (c_cut * taper(u_cut) / c0).abs())
    } else {
        (0.0, 0.0)
    };

    let hb2 = constants.hbar * constants.hbar;
    let pref = constants.m_atom * constants.m_atom / (hb2 * hb2);
    let gamma: Vec<f64> = k
        .iter()
        .map(|&k| {
            let s: f64 = us
                .iter()
                .zip(&ws)
                .map(|(u, wc)| wc * (2.0 * k * u).cos())
                .sum();
            (pref * s / (k * k)).max(0.0)
        })
        .collect();
    let report = TransformReport {
        u_cut,
        raw_tail,
        tapered_tail,
        accuracy_warning: tapered_tail > 1e-8,
    };
    Ok((
        LyapunovCurve::new(k.to_vec(), gamma, LyapunovSource::CorrelatorIntegral)?,
        report,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityEdge {
    pub k_star: f64,
    /// γ stays above 1/L_max up to the end of the curve.
    pub saturated: bool,
}

/// Largest k with γ(k) = 1/L_max, bisected on the interpolated curve.
pub fn mobility_edge(curve: &LyapunovCurve, l_max: f64) -> Result<MobilityEdge> {
    if !(l_max > 0.0) {
        return Err(invalid(format!("L_max must be positive, got {l_max}")));
    }
    let threshold = 1.0 / l_max;
    let last = match curve.gamma.iter().rposition(|&g| g >= threshold) {
        Some(i) => i,
        None => return Err(Error::NoLocalizedModes { threshold }),
    };
    if last + 1 == curve.len() {
        return Ok(MobilityEdge {
            k_star: curve.k[last],
            saturated: true,
        });
    }
    let (mut lo, mut hi) = (curve.k[last], curve.k[last + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if curve.eval(mid) >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MobilityEdge {
        k_star: lo,
        saturated: false,
    })
}
