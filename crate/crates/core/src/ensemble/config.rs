use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::casimir::{CasimirKernelSet, CasimirPrefactor, G2Kernel, G2Table, PotentialOrder};
use crate::error::{Error, Result};
use crate::params::{
    PhysicalConstants, TrapParams, ATOMIC_MASS_UNIT, EPSILON0, HBAR, RB87_MASS_U,
    RB87_POLARIZABILITY_VOLUME, RB87_SCATTERING_LENGTH, SPEED_OF_LIGHT,
};
use crate::surface::SurfaceSpec;

/// α(0) scale used by the built-in presets; brings the weak-disorder
/// V_R/μ to 0.089 with the perfect-reflector kernel.
pub const PRESET_ALPHA_SCALE: f64 = 0.07772;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    /// Atomic mass in u.
    pub mass_u: f64,
    /// s-wave scattering length a_s (m).
    pub scattering_length: f64,
    /// α(0)/(4πε₀) in m³.
    pub polarizability_volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    /// ω_x/2π in Hz.
    pub axial_hz: f64,
    /// ω_r/2π in Hz.
    pub radial_hz: f64,
    /// Radial Gaussian width σ (m).
    pub sigma: f64,
    pub n_atoms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub n_harmonics: usize,
    pub h_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CasimirConfig {
    /// Atom-surface distance z₀ (m).
    pub z0: f64,
    /// Multiplier on α(0).
    #[serde(default = "one")]
    pub alpha_scale: f64,
    /// 1 or 2.
    #[serde(default = "one_u8")]
    pub order: u8,
    /// Tabulated g⁽²⁾; without it second order falls back to first.
    #[serde(default)]
    pub g2_table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub n_points: usize,
    /// Half width of the periodic domain (m).
    pub half_width: f64,
    /// Sponge starts at |x| = L_max.
    pub sponge_start: f64,
    /// Sponge strength at the domain edge in units of μ.
    pub sponge_strength_mu: f64,
    /// dt = 0.1 / (margin·max(|V| + g n)).
    pub dt_margin: f64,
    /// Internal length unit (m).
    pub length_unit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    /// Observation window L_max (m).
    pub l_max: f64,
    /// k samples of the γ curve.
    pub n_k: usize,
    /// x samples of the theory profile.
    pub profile_points: usize,
    /// Fit window; defaults 2 L_TF and L_max.
    #[serde(default)]
    pub fit_x_lo: Option<f64>,
    #[serde(default)]
    pub fit_x_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub realizations: usize,
    pub seed: u64,
    /// Snapshot times in units of 1/ω_x.
    pub snapshots: Vec<f64>,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    /// Largest tolerated share of failed realizations.
    #[serde(default = "tenth")]
    pub max_failure_fraction: f64,
    /// Write per-realization density files.
    #[serde(default = "yes")]
    pub write_densities: bool,
}

fn one() -> f64 {
    1.0
}
fn one_u8() -> u8 {
    1
}
fn tenth() -> f64 {
    0.1
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub atom: AtomConfig,
    pub trap: TrapConfig,
    pub surface: SurfaceConfig,
    pub casimir: CasimirConfig,
    pub solver: SolverConfig,
    pub theory: TheoryConfig,
    pub run: RunConfig,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = Self::base();
        match name {
            "fig2" | "fig3" => {}
            "fig4" => {
                cfg.surface = SurfaceConfig {
                    n_harmonics: 15,
                    h_max: 200e-9,
                    lambda_min: 1e-6,
                    lambda_max: 8e-6,
                };
                cfg.casimir.z0 = 1.0e-6;
                cfg.casimir.order = 2;
                cfg.run.snapshots = vec![7.0, 14.0];
                // wings are fitted well behind the expanding front
                cfg.theory.fit_x_hi = Some(350e-6);
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown preset '{other}' (fig2, fig3, fig4)"
                )))
            }
        }
        if name == "fig2" {
            cfg.run.realizations = 0;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Shared Rb-87 weak-disorder parameter set.
    fn base() -> Self {
        Config {
            atom: AtomConfig {
                mass_u: RB87_MASS_U,
                scattering_length: RB87_SCATTERING_LENGTH,
                polarizability_volume: RB87_POLARIZABILITY_VOLUME,
            },
            trap: TrapConfig {
                axial_hz: 2.75,
                radial_hz: 286.0,
                sigma: 0.25e-6,
                n_atoms: 100,
            },
            surface: SurfaceConfig {
                n_harmonics: 25,
                h_max: 200e-9,
                lambda_min: 1e-6,
                lambda_max: 20e-6,
            },
            casimir: CasimirConfig {
                z0: 1.5e-6,
                alpha_scale: PRESET_ALPHA_SCALE,
                order: 1,
                g2_table: None,
            },
            solver: SolverConfig {
                n_points: 1 << 15,
                half_width: 2e-3,
                sponge_start: 1e-3,
                sponge_strength_mu: 0.15,
                dt_margin: 10.0,
                length_unit: 1e-6,
            },
            theory: TheoryConfig {
                l_max: 1e-3,
                n_k: 4000,
                profile_points: 240,
                fit_x_lo: None,
                fit_x_hi: None,
            },
            run: RunConfig {
                realizations: 40,
                seed: 20_090_301,
                snapshots: vec![14.0, 28.0],
                workers: 0,
                max_failure_fraction: 0.1,
                write_densities: true,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.constants().map_err(config_err)?;
        self.trap_params().map_err(config_err)?;
        self.surface_spec().validate().map_err(config_err)?;
        let bad = |m: String| Err(Error::Config(m));
        let c = &self.casimir;
        if !(c.z0 > 0.0) {
            return bad(format!("casimir.z0 must be positive, got {}", c.z0));
        }
        if c.order != 1 && c.order != 2 {
            return bad(format!("casimir.order must be 1 or 2, got {}", c.order));
        }
        let s = &self.solver;
        if !s.n_points.is_power_of_two() || s.n_points < 64 {
            return bad(format!(
                "solver.n_points must be a power of two >= 64, got {}",
                s.n_points
            ));
        }
        if !(s.half_width > 0.0 && s.sponge_start > 0.0 && s.sponge_start < s.half_width) {
            return bad("need 0 < solver.sponge_start < solver.half_width".into());
        }
        if !(s.sponge_strength_mu >= 0.0 && s.dt_margin >= 1.0 && s.length_unit > 0.0) {
            return bad(
                "solver.sponge_strength_mu >= 0, dt_margin >= 1 and length_unit > 0 required"
                    .into(),
            );
        }
        let t = &self.theory;
        if !(t.l_max > 0.0) || t.n_k < 16 || t.profile_points < 16 {
            return bad("theory needs l_max > 0, n_k >= 16, profile_points >= 16".into());
        }
        if let (Some(a), Some(b)) = (t.fit_x_lo, t.fit_x_hi) {
            if !(a < b) {
                return bad("theory.fit_x_lo must be below fit_x_hi".into());
            }
        }
        let r = &self.run;
        if r.realizations > 0 && (r.snapshots.is_empty() || r.snapshots.iter().any(|t| !(*t > 0.0)))
        {
            return bad("run.snapshots must hold positive omega_x t values".into());
        }
        if !(0.0..=1.0).contains(&r.max_failure_fraction) {
            return bad("run.max_failure_fraction must lie in [0, 1]".into());
        }
        Ok(())
    }

    pub fn constants(&self) -> Result<PhysicalConstants> {
        let a = &self.atom;
        PhysicalConstants::new(
            HBAR,
            SPEED_OF_LIGHT,
            EPSILON0,
            a.mass_u * ATOMIC_MASS_UNIT,
            4.0 * PI * EPSILON0 * a.polarizability_volume,
            a.scattering_length,
        )
    }

    /// Constants with the α(0) scale applied, for the Casimir-Polder side.
    pub fn casimir_constants(&self) -> Result<PhysicalConstants> {
        self.constants()?.with_alpha_scale(self.casimir.alpha_scale)
    }

    pub fn trap_params(&self) -> Result<TrapParams> {
        let t = &self.trap;
        TrapParams::new(TAU * t.axial_hz, TAU * t.radial_hz, t.sigma, t.n_atoms)
    }

    pub fn surface_spec(&self) -> SurfaceSpec {
        let s = &self.surface;
        SurfaceSpec {
            n_harmonics: s.n_harmonics,
            h_max: s.h_max,
            lambda_min: s.lambda_min,
            lambda_max: s.lambda_max,
            seed: self.run.seed,
        }
    }

    pub fn prefactor(&self) -> Result<CasimirPrefactor> {
        CasimirPrefactor::new(&self.casimir_constants()?, self.casimir.z0)
    }

    /// Kernels and the potential order actually used. Second order without
    /// a g⁽²⁾ table falls back to first order (the flag reports it).
    pub fn kernels(&self) -> Result<(CasimirKernelSet, PotentialOrder, bool)> {
        let base = CasimirKernelSet::perfect_reflector();
        match (self.casimir.order, &self.casimir.g2_table) {
            (2, Some(path)) => {
                let table = G2Table::load(path).map_err(config_err)?;
                Ok((
                    base.with_g2(G2Kernel::Tabulated(Arc::new(table))),
                    PotentialOrder::Second,
                    false,
                ))
            }
            (2, None) => Ok((base, PotentialOrder::First, true)),
            _ => Ok((base, PotentialOrder::First, false)),
        }
    }
}
