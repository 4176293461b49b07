//! 1D Gross-Pitaevskii solver in internal units (ħ = m = 1).
//!
//! Imaginary-time split-step propagation finds the trapped ground state;
//! real-time Strang splitting (kinetic half step, local step, kinetic half
//! step) carries the condensate through the frozen disorder potential once
//! the trap is switched off.

mod evolve;
mod grid;
mod ground;
mod spectral;

pub use evolve::{
    evolve, expand_in_disorder, quadratic_sponge, Expansion, ExpansionAudit, Propagator, Snapshot,
    StepAudit, PHASE_STEP_BOUND,
};
pub use grid::Grid1D;
pub use ground::{ground_state, GroundStateOptions, GroundStateResult};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::{effective_1d_coupling, PhysicalConstants, TrapParams, UnitScaling};
use spectral::Spectral;

/// Trap and interaction parameters in internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpeProblem {
    pub omega_x: f64,
    pub g: f64,
    pub n_atoms: f64,
}

impl GpeProblem {
    pub fn from_si(
        constants: &PhysicalConstants,
        trap: &TrapParams,
        scaling: &UnitScaling,
    ) -> Result<Self> {
        let g = effective_1d_coupling(constants, trap)?;
        Ok(Self {
            omega_x: scaling.frequency_to_internal(trap.omega_x),
            g: scaling.coupling_to_internal(g),
            n_atoms: trap.n_atoms as f64,
        })
    }

    pub fn trap_potential(&self, grid: &Grid1D) -> Vec<f64> {
        grid.positions()
            .iter()
            .map(|x| 0.5 * self.omega_x * self.omega_x * x * x)
            .collect()
    }

    /// Thomas-Fermi estimate (μ, L_TF).
    pub fn thomas_fermi(&self) -> (f64, f64) {
        let mu = (3.0 * self.n_atoms * self.g * self.omega_x / (4.0 * 2f64.sqrt())).powf(2.0 / 3.0);
        (mu, (2.0 * mu).sqrt() / self.omega_x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl Wavefunction {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self {
            amplitudes,
            time: 0.0,
        }
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// ∫|φ|² dx.
    pub fn norm(&self, grid: &Grid1D) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dx()
    }

    pub fn normalize_to(&mut self, grid: &Grid1D, n: f64) {
        let s = (n / self.norm(grid)).sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
    }

    /// GP energy ∫(½|φ'|² + V|φ|² + ½g|φ|⁴) dx.
    pub fn energy(&self, grid: &Grid1D, potential: &[f64], g: f64) -> f64 {
        let mut spectral = Spectral::new(grid);
        energy_with(&mut spectral, grid, &self.amplitudes, potential, g)
    }
}

pub(crate) fn energy_with(
    spectral: &mut Spectral,
    grid: &Grid1D,
    psi: &[Complex64],
    potential: &[f64],
    g: f64,
) -> f64 {
    let t = spectral.kinetic(psi);
    let mut e = 0.0;
    for i in 0..psi.len() {
        let n = psi[i].norm_sqr();
        e += (psi[i].conj() * t[i]).re + potential[i] * n + 0.5 * g * n * n;
    }
    e * grid.dx()
}

/// H_GP ψ = −½ψ'' + Vψ + g|ψ|²ψ.
pub(crate) fn apply_hamiltonian(
    spectral: &mut Spectral,
    psi: &[Complex64],
    potential: &[f64],
    g: f64,
) -> Vec<Complex64> {
    let mut h = spectral.kinetic(psi);
    for i in 0..psi.len() {
        h[i] += psi[i] * (potential[i] + g * psi[i].norm_sqr());
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_scaling;

    #[test]
    fn problem_from_reference_trap() {
        let c = PhysicalConstants::rb87();
        let s = make_scaling(&c, 1e-6).unwrap();
        let p = GpeProblem::from_si(&c, &TrapParams::reference(), &s).unwrap();
        let (mu, ltf) = p.thomas_fermi();
        // same numbers as the SI Thomas-Fermi chain
        assert!((mu * s.energy_unit / 2.742245183403322e-32 - 1.0).abs() < 1e-9);
        assert!((ltf / 35.67781100635328 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn energy_of_oscillator_ground_state() {
        let grid = Grid1D::symmetric(256, 20.0).unwrap();
        let w = 0.7;
        let psi: Vec<Complex64> = grid
            .positions()
            .iter()
            .map(|x| Complex64::new((-0.5 * w * x * x).exp(), 0.0))
            .collect();
        let mut wf = Wavefunction::new(psi);
        wf.normalize_to(&grid, 1.0);
        let v: Vec<f64> = grid
            .positions()
            .iter()
            .map(|x| 0.5 * w * w * x * x)
            .collect();
        assert!((wf.energy(&grid, &v, 0.0) - 0.5 * w).abs() < 1e-12);
    }
}
