//! Stochastic uni-axial surfaces h(x) = Σ hᵢ cos(kᵢx + θᵢ).
//!
//! Amplitudes, wavelengths and phase offsets are independent and flat on
//! [0, h_max], [λ_min, λ_max] and [0, 2π). Realization `i` of a spec draws
//! from ChaCha stream `i` keyed by the master seed, so any subset of an
//! ensemble can be regenerated in any order.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub n_harmonics: usize,
    /// Amplitude upper bound (m).
    pub h_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub seed: u64,
}

impl SurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_harmonics == 0 {
            return Err(invalid("n_harmonics must be at least 1"));
        }
        if !(self.h_max.is_finite() && self.h_max >= 0.0) {
            return Err(invalid(format!(
                "h_max must be non-negative, got {}",
                self.h_max
            )));
        }
        if !(self.lambda_min > 0.0
            && self.lambda_min < self.lambda_max
            && self.lambda_max.is_finite())
        {
            return Err(invalid(format!(
                "need 0 < lambda_min < lambda_max, got [{}, {}]",
                self.lambda_min, self.lambda_max
            )));
        }
        Ok(())
    }

    /// Flat wavelength density P(λ), half-open support [λ_min, λ_max).
    pub fn wavelength_density(&self, lambda: f64) -> f64 {
        if lambda >= self.lambda_min && lambda < self.lambda_max {
            1.0 / (self.lambda_max - self.lambda_min)
        } else {
            0.0
        }
    }

    /// E[hᵢ²] = h_max²/3.
    pub fn mean_square_amplitude(&self) -> f64 {
        self.h_max * self.h_max / 3.0
    }

    /// Stable 64-bit fingerprint of the spec (FNV-1a over the field bits).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let words = [
            self.n_harmonics as u64,
            self.h_max.to_bits(),
            self.lambda_min.to_bits(),
            self.lambda_max.to_bits(),
            self.seed,
        ];
        for w in words {
            for b in w.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec_hash: u64,
    pub seed: u64,
    pub realization: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRealization {
    pub amplitudes: Vec<f64>,
    pub wavelengths: Vec<f64>,
    pub offsets: Vec<f64>,
    pub wavenumbers: Vec<f64>,
    pub provenance: Provenance,
}

pub fn sample_surface(spec: &SurfaceSpec, realization_index: u64) -> Result<SurfaceRealization> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(realization_index);

    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    let n = spec.n_harmonics;
    let mut amplitudes = Vec::with_capacity(n);
    let mut wavelengths = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    for _ in 0..n {
        amplitudes.push(spec.h_max * unit.sample(&mut rng));
        let u: f64 = unit.sample(&mut rng);
        // u < 1, so λ stays inside [λ_min, λ_max)
        wavelengths.push(spec.lambda_min + (spec.lambda_max - spec.lambda_min) * u);
        offsets.push(TAU * unit.sample(&mut rng));
    }
    let wavenumbers = wavelengths.iter().map(|l| TAU / l).collect();
    Ok(SurfaceRealization {
        amplitudes,
        wavelengths,
        offsets,
        wavenumbers,
        provenance: Provenance {
            spec_hash: spec.fingerprint(),
            seed: spec.seed,
            realization: realization_index,
        },
    })
}

impl SurfaceRealization {
    /// Builds a realization from explicit harmonics (all SI).
    pub fn from_harmonics(
        amplitudes: Vec<f64>,
        wavelengths: Vec<f64>,
        offsets: Vec<f64>,
    ) -> Result<Self> {
        if amplitudes.len() != wavelengths.len() || amplitudes.len() != offsets.len() {
            return Err(invalid("harmonic arrays must have equal length"));
        }
        if wavelengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(invalid("wavelengths must be positive and finite"));
        }
        let wavenumbers = wavelengths.iter().map(|l| TAU / l).collect();
        Ok(Self {
            amplitudes,
            wavelengths,
            offsets,
            wavenumbers,
            provenance: Provenance {
                spec_hash: 0,
                seed: 0,
                realization: 0,
            },
        })
    }

    pub fn n_harmonics(&self) -> usize {
        self.amplitudes.len()
    }

    /// Copy with every amplitude multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|h| *h *= s);
        out
    }

    /// Plain-text record: header comments, then one `h lambda theta` line
    /// per harmonic (SI units, full round-trip precision).
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let p = &self.provenance;
        let _ = writeln!(
            s,
            "# surface realization: h_i (m) lambda_i (m) theta_i (rad)"
        );
        let _ = writeln!(
            s,
            "# spec_hash {:016x} seed {} realization {}",
            p.spec_hash, p.seed, p.realization
        );
        for i in 0..self.n_harmonics() {
            let _ = writeln!(
                s,
                "{:e} {:e} {:e}",
                self.amplitudes[i], self.wavelengths[i], self.offsets[i]
            );
        }
        s
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut amplitudes = Vec::new();
        let mut wavelengths = Vec::new();
        let mut offsets = Vec::new();
        let mut provenance = Provenance {
            spec_hash: 0,
            seed: 0,
            realization: 0,
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if toks.len() == 6 && toks[0] == "spec_hash" {
                    let parse_err =
                        |_| Error::Parse(format!("bad provenance on line {}", lineno + 1));
                    provenance.spec_hash = u64::from_str_radix(toks[1], 16).map_err(parse_err)?;
                    provenance.seed = toks[3].parse().map_err(parse_err)?;
                    provenance.realization = toks[5].parse().map_err(parse_err)?;
                }
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected 3 columns",
                    lineno + 1
                )));
            }
            amplitudes.push(vals[0]);
            wavelengths.push(vals[1]);
            offsets.push(vals[2]);
        }
        let mut out = Self::from_harmonics(amplitudes, wavelengths, offsets)?;
        out.provenance = provenance;
        Ok(out)
    }
}

pub fn height_profile(surface: &SurfaceRealization, x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&xj| {
            surface
                .amplitudes
                .iter()
                .zip(&surface.wavenumbers)
                .zip(&surface.offsets)
                .map(|((h, k), th)| h * (k * xj + th).cos())
                .sum()
        })
        .collect()
}

/// Ensemble mean of h(x)² at any x: n · E[hᵢ²]/2 = n·h_max²/6.
pub fn mean_square_height(spec: &SurfaceSpec) -> f64 {
    spec.n_harmonics as f64 * spec.mean_square_amplitude() / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SurfaceSpec {
        SurfaceSpec {
            n_harmonics: 25,
            h_max: 200e-9,
            lambda_min: 1e-6,
            lambda_max: 20e-6,
            seed: 7,
        }
    }

    #[test]
    fn deterministic_per_index() {
        let a = sample_surface(&spec(), 3).unwrap();
        let b = sample_surface(&spec(), 3).unwrap();
        assert_eq!(a, b);
        let c = sample_surface(&spec(), 4).unwrap();
        assert_ne!(a.amplitudes, c.amplitudes);
    }

    #[test]
    fn draws_respect_bounds() {
        let s = spec();
        for i in 0..200 {
            let r = sample_surface(&s, i).unwrap();
            assert_eq!(r.n_harmonics(), 25);
            assert!(r.amplitudes.iter().all(|&h| (0.0..=s.h_max).contains(&h)));
            assert!(r
                .wavelengths
                .iter()
                .all(|&l| l >= s.lambda_min && l < s.lambda_max));
            assert!(r.offsets.iter().all(|&t| (0.0..TAU).contains(&t)));
        }
    }

    #[test]
    fn vanishing_amplitude_bound_gives_flat_surface() {
        let s = SurfaceSpec {
            n_harmonics: 1,
            h_max: 1e-300,
            ..spec()
        };
        let r = sample_surface(&s, 0).unwrap();
        let h = height_profile(&r, &[0.0, 1e-6, 3e-6]);
        assert!(h.iter().all(|v| v.abs() <= 1e-300));
    }

    #[test]
    fn amplitude_moments_match_uniform() {
        let s = SurfaceSpec {
            n_harmonics: 10,
            ..spec()
        };
        let mut xs = Vec::new();
        for i in 0..10_000 {
            xs.extend(sample_surface(&s, i).unwrap().amplitudes);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let hm = s.h_max;
        let se_mean = (hm * hm / 12.0 / n).sqrt();
        assert!((mean - hm / 2.0).abs() < 3.0 * se_mean);
        // fourth central moment of U[0, a] is a⁴/80
        let se_var = ((hm.powi(4) / 80.0 - (hm * hm / 12.0).powi(2)) / n).sqrt();
        assert!((var - hm * hm / 12.0).abs() < 3.0 * se_var);
    }

    #[test]
    fn single_harmonic_values() {
        let r = SurfaceRealization::from_harmonics(vec![0.1e-6], vec![4e-6], vec![0.0]).unwrap();
        let h = height_profile(&r, &[0.0, 1e-6]);
        assert_eq!(h[0], 0.1e-6);
        assert!(h[1].abs() < 1e-12 * 0.1e-6);
    }

    #[test]
    fn mean_square_height_values() {
        assert!((mean_square_height(&spec()) - 25.0 * (0.2e-6f64).powi(2) / 6.0).abs() < 1e-27);
        let flat = SurfaceSpec {
            h_max: 0.0,
            ..spec()
        };
        assert_eq!(mean_square_height(&flat), 0.0);
    }

    #[test]
    fn ensemble_mean_square_height_monte_carlo() {
        // spatial average of h² over a long window, then ensemble average
        let s = spec();
        let x: Vec<f64> = (0..64).map(|j| j as f64 * 7.3e-6).collect();
        let m = 20_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for i in 0..m {
            let h = height_profile(&sample_surface(&s, i).unwrap(), &x);
            let v = h.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
            acc += v;
            acc2 += v * v;
        }
        let mean = acc / m as f64;
        let se = ((acc2 / m as f64 - mean * mean) / m as f64).sqrt();
        let exact = mean_square_height(&s);
        assert!(((mean - exact) / exact).abs() < 0.01, "{mean} vs {exact}");
        assert!((mean - exact).abs() < 3.0 * se);
    }

    #[test]
    fn ensemble_mean_height_vanishes() {
        let s = spec();
        for x in [0.0, 13e-6] {
            let vals: Vec<f64> = (0..10_000)
                .map(|i| height_profile(&sample_surface(&s, i).unwrap(), &[x])[0])
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!(mean.abs() < 3.0 * (var / n).sqrt());
            // mean of h² at this x
            let ms = vals.iter().map(|v| v * v).sum::<f64>() / n;
            let ms_var = vals.iter().map(|v| (v * v - ms).powi(2)).sum::<f64>() / (n - 1.0);
            assert!((ms - mean_square_height(&s)).abs() < 3.0 * (ms_var / n).sqrt());
        }
    }

    #[test]
    fn record_round_trip() {
        let r = sample_surface(&spec(), 11).unwrap();
        let back = SurfaceRealization::from_record(&r.to_record()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(SurfaceSpec {
            n_harmonics: 0,
            ..spec()
        }
        .validate()
        .is_err());
        assert!(SurfaceSpec {
            lambda_min: 3e-6,
            lambda_max: 2e-6,
            ..spec()
        }
        .validate()
        .is_err());
        assert!(sample_surface(
            &SurfaceSpec {
                lambda_min: 0.0,
                ..spec()
            },
            0
        )
        .is_err());
    }

    #[test]
    fn height_matches_high_precision_sum() {
        // oracle: 50-digit term-by-term summation (mpmath)
        let r = SurfaceRealization::from_harmonics(
            vec![0.05e-6, 0.13e-6, 0.2e-6],
            vec![1.3e-6, 7.7e-6, 19.1e-6],
            vec![0.3, 2.9, 5.5],
        )
        .unwrap();
        let x = [0.0, 1.234e-6, 1e-3, -7e-4];
        let expected = [
            6.3276217845085533156e-8,
            1.4217926501130236259e-7,
            -4.9383216502950761274e-8,
            -1.3597052283905784501e-7,
        ];
        for (h, e) in height_profile(&r, &x).iter().zip(expected) {
            assert!(((h - e) / e).abs() < 1e-10, "{h} vs {e}");
        }
    }

    proptest::proptest! {
        #[test]
        fn profile_is_linear_in_amplitudes(s in 0.0f64..10.0, idx in 0u64..1000, x in -1e-3f64..1e-3) {
            let r = sample_surface(&spec(), idx).unwrap();
            let a = height_profile(&r, &[x])[0];
            let b = height_profile(&r.scaled(s), &[x])[0];
            proptest::prop_assert!((b - s * a).abs() <= 1e-12 * (s * r.amplitudes.iter().sum::<f64>()).max(1e-30));
        }
    }
}
