use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectral::Spectral;
use super::{apply_hamiltonian, GpeProblem, Grid1D, Wavefunction};
use crate::error::{Error, Result};
use crate::params::UnitScaling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateOptions {
    /// Imaginary time steps in units of 1/μ_TF (or 2/ω_x for an ideal gas).
    pub dtau_schedule: Vec<f64>,
    pub max_steps_per_stage: usize,
    /// Convergence of each stage: relative change of μ per unit imaginary time.
    pub mu_tolerance: f64,
    /// Residual targeted by the final preconditioned relaxation.
    pub polish_tolerance: f64,
    pub max_polish_iterations: usize,
    /// Residual ‖Hφ − μφ‖/‖μφ‖ above which the result is rejected.
    pub residual_tolerance: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            dtau_schedule: vec![0.5, 0.05, 0.005],
            max_steps_per_stage: 200_000,
            mu_tolerance: 1e-10,
            polish_tolerance: 1e-12,
            max_polish_iterations: 20_000,
            residual_tolerance: 1e-6,
        }
    }
}

/// Trapped ground state, all scalars in internal units.
#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub wavefunction: Wavefunction,
    /// Chemical potential ⟨H_GP⟩/N.
    pub mu: f64,
    /// μ from the imaginary-time norm decay, before relaxation.
    pub mu_imaginary_time: f64,
    /// ξ = 1/√(4μ).
    pub xi: f64,
    /// √(2μ)/ω_x.
    pub l_tf: f64,
    pub residual: f64,
    pub imaginary_steps: usize,
}

impl GroundStateResult {
    /// (μ in J, ξ in m, L_TF in m).
    pub fn to_si(&self, scaling: &UnitScaling) -> (f64, f64, f64) {
        (
            scaling.energy_to_si(self.mu),
            scaling.length_to_si(self.xi),
            scaling.length_to_si(self.l_tf),
        )
    }
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn residual_and_mu(
    spectral: &mut Spectral,
    psi: &[Complex64],
    v: &[f64],
    g: f64,
) -> (f64, f64, Vec<Complex64>) {
    let h = apply_hamiltonian(spectral, psi, v, g);
    let num: f64 = psi.iter().zip(&h).map(|(p, hp)| (p.conj() * hp).re).sum();
    let den: f64 = psi.iter().map(|p| p.norm_sqr()).sum();
    let mu = num / den;
    let r: Vec<Complex64> = h.iter().zip(psi).map(|(hp, p)| hp - p * mu).collect();
    let res = l2(&r) / (mu.abs() * den.sqrt());
    (res, mu, r)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Preconditioned nonlinear conjugate gradient on the fixed-norm sphere,
/// with preconditioner (½k² + c)⁻¹ and a secant line search on dE/dθ.
/// Returns (residual, μ).
fn relax(
    spectral: &mut Spectral,
    psi: &mut [Complex64],
    v: &[f64],
    problem: &GpeProblem,
    energy_scale: f64,
    options: &GroundStateOptions,
) -> (f64, f64) {
    let n = psi.len() as f64;
    let radius = dot(psi, psi).re.sqrt();
    let precond: Vec<f64> = spectral
        .k
        .iter()
        .map(|k| 1.0 / ((0.5 * k * k + energy_scale) * n))
        .collect();
    let (mut res, mut mu, mut r) = residual_and_mu(spectral, psi, v, problem.g);
    let mut d_prev: Vec<Complex64> = Vec::new();
    let mut zr_prev = 0.0;
    let mut r_prev: Vec<Complex64> = Vec::new();
    let mut theta_trial = 1e-3;

    // dE/dθ along φ(θ) = cos θ·φ + sin θ·radius·d̂
    let slope =
        |spectral: &mut Spectral, phi: &[Complex64], dir: &[Complex64], theta: f64| -> f64 {
            let (c, s) = (theta.cos(), theta.sin());
            let cur: Vec<Complex64> = phi
                .iter()
                .zip(dir)
                .map(|(p, d)| p * c + d * (radius * s))
                .collect();
            let tan: Vec<Complex64> = phi
                .iter()
                .zip(dir)
                .map(|(p, d)| -p * s + d * (radius * c))
                .collect();
            let h = apply_hamiltonian(spectral, &cur, v, problem.g);
            2.0 * dot(&tan, &h).re
        };

    for _ in 0..options.max_polish_iterations {
        if res < options.polish_tolerance {
            break;
        }
        let mut z = r.clone();
        spectral.forward(&mut z);
        z.iter_mut().zip(&precond).for_each(|(c, p)| *c *= p);
        spectral.inverse(&mut z);
        let zr = dot(&z, &r).re;
        let beta = if d_prev.is_empty() {
            0.0
        } else {
            let dr: Vec<Complex64> = r.iter().zip(&r_prev).map(|(a, b)| a - b).collect();
            (dot(&z, &dr).re / zr_prev).max(0.0)
        };
        let mut d: Vec<Complex64> = if beta > 0.0 {
            z.iter()
                .zip(&d_prev)
                .map(|(zi, di)| -zi + di * beta)
                .collect()
        } else {
            z.iter().map(|zi| -zi).collect()
        };
        let project = |d: &mut Vec<Complex64>| {
            let c = dot(psi, d) / (radius * radius);
            d.iter_mut()
                .zip(psi.iter())
                .for_each(|(di, p)| *di -= p * c);
        };
        project(&mut d);
        if dot(&d, &r).re >= 0.0 {
            d = z.iter().map(|zi| -zi).collect();
            project(&mut d);
        }
        let dn = dot(&d, &d).re.sqrt();
        if dn == 0.0 {
            break;
        }
        d.iter_mut().for_each(|di| *di /= dn);

        let s0 = slope(spectral, psi, &d, 0.0);
        let st = slope(spectral, psi, &d, theta_trial);
        // slope grows along a convex direction; otherwise just extend the trial
        let theta = if st > s0 {
            theta_trial * s0 / (s0 - st)
        } else {
            2.0 * theta_trial
        };
        if !theta.is_finite() || theta == 0.0 {
            break;
        }
        theta_trial = theta.abs().clamp(1e-12, 0.1);
        let (c, s) = (theta.cos(), theta.sin());
        psi.iter_mut()
            .zip(&d)
            .for_each(|(p, di)| *p = *p * c + di * (radius * s));

        d_prev = d;
        zr_prev = zr;
        r_prev = r;
        let (a, b, c) = residual_and_mu(spectral, psi, v, problem.g);
        res = a;
        mu = b;
        r = c;
    }
    (res, mu)
}

pub fn ground_state(
    grid: &Grid1D,
    problem: &GpeProblem,
    options: &GroundStateOptions,
) -> Result<GroundStateResult> {
    let omega = problem.omega_x;
    let a_ho = 1.0 / omega.sqrt();
    let (mu_tf, l_tf_est) = if problem.g > 0.0 {
        problem.thomas_fermi()
    } else {
        (0.5 * omega, a_ho)
    };
    let half_width = grid.x_max().min(-grid.x_min());
    if half_width < 1.5 * l_tf_est {
        return Err(Error::Domain(format!(
            "grid half-width {half_width} is below 1.5 L_TF = {}",
            1.5 * l_tf_est
        )));
    }

    // Work on a centered sub-grid with the same spacing when the full grid
    // is much wider than the cloud.
    let needed = 2.0 * (l_tf_est + 10.0 * a_ho);
    let mut n_sub = 64.min(grid.len());
    while (n_sub as f64) * grid.dx() < needed && n_sub < grid.len() {
        n_sub *= 2;
    }
    let (sub, offset) = if (grid.x_min() + grid.x_max()).abs() <= 1e-9 * half_width {
        grid.centered_subgrid(n_sub)?
    } else {
        (grid.clone(), 0)
    };

    let v = problem.trap_potential(&sub);
    let x = sub.positions();
    let mut psi: Vec<Complex64> = x
        .iter()
        .zip(&v)
        .map(|(&xi, &vi)| {
            let tf = if problem.g > 0.0 {
                ((mu_tf - vi).max(0.0) / problem.g).sqrt()
            } else {
                0.0
            };
            let gauss = (-0.5 * (xi / (1.3 * l_tf_est.max(a_ho))).powi(2)).exp();
            Complex64::new(tf + 1e-3 * gauss * (1.0 + tf), 0.0)
        })
        .collect();
    let mut wf = Wavefunction::new(std::mem::take(&mut psi));
    wf.normalize_to(&sub, problem.n_atoms);

    let mut spectral = Spectral::new(&sub);
    let n = sub.len() as f64;
    let energy_scale = mu_tf.max(0.5 * omega);
    let mut total_steps = 0;
    let mut mu_it = energy_scale;

    for (stage, &rel) in options.dtau_schedule.iter().enumerate() {
        let dtau = rel / energy_scale;
        let half: Vec<Complex64> = spectral
            .k
            .iter()
            .map(|k| Complex64::new((-0.25 * k * k * dtau).exp() / n, 0.0))
            .collect();
        let mut prev_mu = f64::NAN;
        let mut converged = false;
        for _ in 0..options.max_steps_per_stage {
            let amp = &mut wf.amplitudes;
            spectral.apply_diagonal(amp, &half);
            for (a, vi) in amp.iter_mut().zip(&v) {
                let dens = a.norm_sqr();
                *a *= (-(vi + problem.g * dens) * dtau).exp();
            }
            spectral.apply_diagonal(amp, &half);
            let norm = wf.norm(&sub);
            let mu = -(norm / problem.n_atoms).ln() / (2.0 * dtau);
            wf.normalize_to(&sub, problem.n_atoms);
            total_steps += 1;
            if (mu - prev_mu).abs() / mu.abs() / dtau < options.mu_tolerance {
                converged = true;
                mu_it = mu;
                break;
            }
            prev_mu = mu;
            mu_it = mu;
        }
        let last = stage + 1 == options.dtau_schedule.len();
        if !converged && last {
            let (res, _, _) = residual_and_mu(&mut spectral, &wf.amplitudes, &v, problem.g);
            return Err(Error::Convergence {
                steps: total_steps,
                residual: res,
            });
        }
    }

    let (res, mu) = relax(
        &mut spectral,
        &mut wf.amplitudes,
        &v,
        problem,
        energy_scale,
        options,
    );
    if !(res < options.residual_tolerance) {
        return Err(Error::Convergence {
            steps: total_steps,
            residual: res,
        });
    }

    // Real ground state; drop the rounding-level imaginary part.
    wf.amplitudes
        .iter_mut()
        .for_each(|a| *a = Complex64::new(a.re, 0.0));

    let dens = wf.density();
    let peak = dens.iter().cloned().fold(0.0, f64::max);
    let edge = dens[0].max(dens[dens.len() - 1]);
    if edge > 1e-6 * peak {
        return Err(Error::Domain(format!(
            "ground-state density at the grid boundary is {:e} of the peak",
            edge / peak
        )));
    }

    let mut full = vec![Complex64::new(0.0, 0.0); grid.len()];
    full[offset..offset + sub.len()].copy_from_slice(&wf.amplitudes);
    let wavefunction = Wavefunction::new(full);

    Ok(GroundStateResult {
        wavefunction,
        mu,
        mu_imaginary_time: mu_it,
        xi: 1.0 / (4.0 * mu).sqrt(),
        l_tf: (2.0 * mu).sqrt() / omega,
        residual: res,
        imaginary_steps: total_steps,
    })
}
