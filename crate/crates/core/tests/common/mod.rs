#![allow(dead_code)]

use cploc::casimir::{lateral_potential_first_order, CasimirKernelSet, CasimirPrefactor};
use cploc::gpe::{ground_state, GpeProblem, Grid1D, GroundStateOptions, GroundStateResult};
use cploc::params::{make_scaling, PhysicalConstants, TrapParams, UnitScaling};
use cploc::surface::{sample_surface, SurfaceSpec};

pub struct Setup {
    pub constants: PhysicalConstants,
    pub scaling: UnitScaling,
    pub problem: GpeProblem,
    pub grid: Grid1D,
    pub ground: GroundStateResult,
}

/// Rb-87 in the standard trap on a symmetric grid (half width in μm).
pub fn setup(n_points: usize, half_width_um: f64) -> Setup {
    let constants = PhysicalConstants::rb87();
    let scaling = make_scaling(&constants, 1e-6).unwrap();
    let problem = GpeProblem::from_si(&constants, &TrapParams::reference(), &scaling).unwrap();
    let grid = Grid1D::symmetric(n_points, half_width_um).unwrap();
    let ground = ground_state(&grid, &problem, &GroundStateOptions::default()).unwrap();
    Setup {
        constants,
        scaling,
        problem,
        grid,
        ground,
    }
}

/// α(0) scale that brings the weak-disorder V_R/μ to 0.089.
pub const ALPHA_SCALE: f64 = 0.07772;

pub fn weak_spec(seed: u64) -> SurfaceSpec {
    SurfaceSpec {
        n_harmonics: 25,
        h_max: 200e-9,
        lambda_min: 1e-6,
        lambda_max: 20e-6,
        seed,
    }
}

/// First-order potential of one realization, in internal energy units.
pub fn disorder_potential(s: &Setup, spec: &SurfaceSpec, index: u64, z0: f64) -> Vec<f64> {
    let surface = sample_surface(spec, index).unwrap();
    let pre =
        CasimirPrefactor::new(&s.constants.with_alpha_scale(ALPHA_SCALE).unwrap(), z0).unwrap();
    let x: Vec<f64> = s
        .grid
        .positions()
        .iter()
        .map(|&x| s.scaling.length_to_si(x))
        .collect();
    lateral_potential_first_order(&surface, &pre, &CasimirKernelSet::perfect_reflector(), &x)
        .into_iter()
        .map(|u| s.scaling.energy_to_internal(u))
        .collect()
}

/// Relative L¹ distance ‖a − b‖₁/‖b‖₁.
pub fn l1_rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    num / b.iter().map(|y| y.abs()).sum::<f64>()
}
