//! Physical constants, trap parameters and the SI <-> internal unit scaling.
//!
//! Internally the solver works with ħ = m = 1 and a length unit chosen by
//! the caller (1 μm for every preset). Everything else in the crate speaks SI.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const EPSILON0: f64 = 8.854_187_812_8e-12;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of ⁸⁷Rb in atomic mass units.
pub const RB87_MASS_U: f64 = 86.909_180_527;
/// ⁸⁷Rb s-wave scattering length (m).
pub const RB87_SCATTERING_LENGTH: f64 = 5.29e-9;
/// ⁸⁷Rb static polarizability volume α(0)/(4πε₀) (m³).
pub const RB87_POLARIZABILITY_VOLUME: f64 = 47.3e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub epsilon0: f64,
    pub m_atom: f64,
    /// Static polarizability in SI (C·m²/V).
    pub alpha0: f64,
    pub a_s: f64,
}

impl PhysicalConstants {
    pub fn new(
        hbar: f64,
        c: f64,
        epsilon0: f64,
        m_atom: f64,
        alpha0: f64,
        a_s: f64,
    ) -> Result<Self> {
        let consts = Self {
            hbar,
            c,
            epsilon0,
            m_atom,
            alpha0,
            a_s,
        };
        consts.validate()?;
        Ok(consts)
    }

    pub fn rb87() -> Self {
        Self {
            hbar: HBAR,
            c: SPEED_OF_LIGHT,
            epsilon0: EPSILON0,
            m_atom: RB87_MASS_U * ATOMIC_MASS_UNIT,
            alpha0: 4.0 * PI * EPSILON0 * RB87_POLARIZABILITY_VOLUME,
            a_s: RB87_SCATTERING_LENGTH,
        }
    }

    /// Same constants with α(0) multiplied by `factor`.
    pub fn with_alpha_scale(mut self, factor: f64) -> Result<Self> {
        self.alpha0 *= factor;
        self.validate()?;
        Ok(self)
    }

    /// α(0)/(4πε₀) in m³.
    pub fn polarizability_volume(&self) -> f64 {
        self.alpha0 / (4.0 * PI * self.epsilon0)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("hbar", self.hbar),
            ("c", self.c),
            ("epsilon0", self.epsilon0),
            ("m_atom", self.m_atom),
            ("alpha0", self.alpha0),
            ("a_s", self.a_s),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        let vol = self.polarizability_volume();
        if !(1e-30..=1e-28).contains(&vol) {
            return Err(invalid(format!(
                "alpha0/(4 pi eps0) = {vol:e} m^3 outside the alkali sanity range [1e-30, 1e-28]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    pub omega_x: f64,
    pub omega_r: f64,
    pub sigma: f64,
    pub n_atoms: u64,
}

impl TrapParams {
    pub fn new(omega_x: f64, omega_r: f64, sigma: f64, n_atoms: u64) -> Result<Self> {
        let trap = Self {
            omega_x,
            omega_r,
            sigma,
            n_atoms,
        };
        trap.validate()?;
        Ok(trap)
    }

    /// N = 100, ω_x = 2π×2.75 Hz, ω_r = 2π×286 Hz, σ = 0.25 μm.
    pub fn reference() -> Self {
        Self {
            omega_x: 2.0 * PI * 2.75,
            omega_r: 2.0 * PI * 286.0,
            sigma: 0.25e-6,
            n_atoms: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_x", self.omega_x),
            ("omega_r", self.omega_r),
            ("sigma", self.sigma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.n_atoms == 0 {
            return Err(invalid("n_atoms must be at least 1"));
        }
        if self.omega_r / self.omega_x <= 10.0 {
            return Err(invalid(format!(
                "omega_r/omega_x = {} is not in the quasi-1D regime (> 10)",
                self.omega_r / self.omega_x
            )));
        }
        Ok(())
    }

    /// Ratio σ / √(ħ/(m ω_r)). The reference pairing gives ≈ 0.39, so this is a
    /// diagnostic rather than a hard check.
    pub fn sigma_consistency(&self, constants: &PhysicalConstants) -> f64 {
        self.sigma / (constants.hbar / (constants.m_atom * self.omega_r)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScaling {
    /// Meters per internal length unit.
    pub length_unit: f64,
    /// Joules per internal energy unit.
    pub energy_unit: f64,
    /// Seconds per internal time unit.
    pub time_unit: f64,
}

pub fn make_scaling(constants: &PhysicalConstants, length_unit: f64) -> Result<UnitScaling> {
    if !(length_unit.is_finite() && length_unit > 0.0) {
        return Err(invalid(format!(
            "length_unit must be positive, got {length_unit}"
        )));
    }
    let energy_unit =
        constants.hbar * constants.hbar / (constants.m_atom * length_unit * length_unit);
    let time_unit = constants.hbar / energy_unit;
    Ok(UnitScaling {
        length_unit,
        energy_unit,
        time_unit,
    })
}

impl UnitScaling {
    pub fn length_to_internal(&self, meters: f64) -> f64 {
        meters / self.length_unit
    }
    pub fn length_to_si(&self, x: f64) -> f64 {
        x * self.length_unit
    }
    pub fn energy_to_internal(&self, joules: f64) -> f64 {
        joules / self.energy_unit
    }
    pub fn energy_to_si(&self, e: f64) -> f64 {
        e * self.energy_unit
    }
    pub fn time_to_internal(&self, seconds: f64) -> f64 {
        seconds / self.time_unit
    }
    pub fn time_to_si(&self, t: f64) -> f64 {
        t * self.time_unit
    }
    /// Angular frequency (rad/s) to internal inverse time.
    pub fn frequency_to_internal(&self, omega: f64) -> f64 {
        omega * self.time_unit
    }
    /// 1D coupling (J·m) to internal energy × length.
    pub fn coupling_to_internal(&self, g: f64) -> f64 {
        g / (self.energy_unit * self.length_unit)
    }
}

/// g_eff = g/(2πσ²) with g = 4πħ²a_s/m.
pub fn effective_1d_coupling(constants: &PhysicalConstants, trap: &TrapParams) -> Result<f64> {
    if !(trap.sigma > 0.0) {
        return Err(invalid("sigma must be positive"));
    }
    let g3d = 4.0 * PI * constants.hbar * constants.hbar * constants.a_s / constants.m_atom;
    Ok(g3d / (2.0 * PI * trap.sigma * trap.sigma))
}

/// 1D Thomas-Fermi chemical potential of N atoms in a harmonic trap (J).
pub fn thomas_fermi_mu(constants: &PhysicalConstants, trap: &TrapParams, g_eff: f64) -> f64 {
    let n = trap.n_atoms as f64;
    (3.0 * n * g_eff * trap.omega_x * constants.m_atom.sqrt() / (4.0 * 2f64.sqrt())).powf(2.0 / 3.0)
}

/// ξ = ħ/√(4mμ).
pub fn healing_length(constants: &PhysicalConstants, mu: f64) -> f64 {
    constants.hbar / (4.0 * constants.m_atom * mu).sqrt()
}

/// L_TF from μ = ½ m ω_x² L_TF².
pub fn thomas_fermi_length(constants: &PhysicalConstants, omega_x: f64, mu: f64) -> f64 {
    (2.0 * mu / (constants.m_atom * omega_x * omega_x)).sqrt()
}
