use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectral::Spectral;
use super::{energy_with, Grid1D, GroundStateResult, Wavefunction};
use crate::error::{invalid, Error, Result};

/// Largest allowed dt·max(|V| + g·n)/ħ for one local step.
pub const PHASE_STEP_BOUND: f64 = 0.1;

/// Absorbing potential W(x) = strength·((|x| − inner)/(edge − inner))² for
/// |x| > inner, zero inside.
pub fn quadratic_sponge(grid: &Grid1D, inner: f64, strength: f64) -> Vec<f64> {
    let edge = grid.x_max().min(-grid.x_min());
    grid.positions()
        .iter()
        .map(|x| {
            let d = x.abs() - inner;
            if d > 0.0 {
                strength * (d / (edge - inner)).powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepAudit {
    pub steps: usize,
    /// Norm removed by the sponge during these steps.
    pub absorbed: f64,
}

/// Real-time Strang propagator for a fixed potential.
pub struct Propagator {
    grid: Grid1D,
    spectral: Spectral,
    potential: Vec<f64>,
    decay: Option<Vec<f64>>,
    sponge: Option<Vec<f64>>,
    g: f64,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

impl Propagator {
    pub fn new(
        grid: &Grid1D,
        potential: Vec<f64>,
        sponge: Option<Vec<f64>>,
        g: f64,
        dt: f64,
    ) -> Result<Self> {
        if potential.len() != grid.len() {
            return Err(invalid(format!(
                "potential has {} samples but the grid has {}",
                potential.len(),
                grid.len()
            )));
        }
        if let Some(w) = &sponge {
            if w.len() != grid.len() || w.iter().any(|v| *v < 0.0) {
                return Err(invalid("sponge must be non-negative and match the grid"));
            }
        }
        let mut p = Self {
            grid: grid.clone(),
            spectral: Spectral::new(grid),
            potential,
            decay: None,
            sponge,
            g,
            dt: 0.0,
            half: Vec::new(),
            full: Vec::new(),
        };
        p.set_dt(dt)?;
        Ok(p)
    }

    pub fn set_dt(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        if dt == self.dt {
            return Ok(());
        }
        self.dt = dt;
        let n = self.grid.len() as f64;
        let phase = |k: f64, tau: f64| Complex64::from_polar(1.0 / n, -0.5 * k * k * tau);
        self.half = self
            .spectral
            .k
            .iter()
            .map(|&k| phase(k, 0.5 * dt))
            .collect();
        self.full = self.spectral.k.iter().map(|&k| phase(k, dt)).collect();
        self.decay = self
            .sponge
            .as_ref()
            .map(|w| w.iter().map(|w| (-w * dt).exp()).collect());
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// dt·max(|V| + g·n) for the given state.
    pub fn phase_step(&self, wf: &Wavefunction) -> f64 {
        let mut m = 0.0f64;
        for (a, v) in wf.amplitudes.iter().zip(&self.potential) {
            m = m.max(v.abs() + self.g * a.norm_sqr());
        }
        self.dt * m
    }

    fn local_step(&mut self, psi: &mut [Complex64]) -> f64 {
        let (dt, g) = (self.dt, self.g);
        match &self.decay {
            None => {
                for (a, v) in psi.iter_mut().zip(&self.potential) {
                    *a *= Complex64::from_polar(1.0, -dt * (v + g * a.norm_sqr()));
                }
                0.0
            }
            Some(decay) => {
                let mut lost = 0.0;
                for ((a, v), d) in psi.iter_mut().zip(&self.potential).zip(decay) {
                    let n0 = a.norm_sqr();
                    // nonlinear phase taken at the midpoint density
                    *a *= Complex64::from_polar(*d, -dt * (v + g * n0 * d));
                    lost += n0 * (1.0 - d * d);
                }
                lost * self.grid.dx()
            }
        }
    }

    /// Advances `wf` by `n_steps` Strang steps.
    pub fn run(&mut self, wf: &mut Wavefunction, n_steps: usize) -> Result<StepAudit> {
        if wf.amplitudes.len() != self.grid.len() {
            return Err(invalid("wavefunction does not match the grid"));
        }
        let phase = self.phase_step(wf);
        if phase >= PHASE_STEP_BOUND {
            return Err(invalid(format!(
                "phase step {phase:.3} exceeds {PHASE_STEP_BOUND}; reduce dt below {:e}",
                self.dt * PHASE_STEP_BOUND / phase
            )));
        }
        let mut audit = StepAudit::default();
        if n_steps == 0 {
            return Ok(audit);
        }
        let mut psi = std::mem::take(&mut wf.amplitudes);
        let half = std::mem::take(&mut self.half);
        let full = std::mem::take(&mut self.full);
        // K/2 (L K)^(n-1) L K/2: adjacent kinetic half steps merged
        self.spectral.apply_diagonal(&mut psi, &half);
        for s in 0..n_steps {
            audit.absorbed += self.local_step(&mut psi);
            let kin = if s + 1 == n_steps { &half } else { &full };
            self.spectral.apply_diagonal(&mut psi, kin);
        }
        self.half = half;
        self.full = full;
        wf.amplitudes = psi;
        wf.time += n_steps as f64 * self.dt;
        audit.steps = n_steps;
        Ok(audit)
    }

    pub fn energy(&mut self, wf: &Wavefunction) -> f64 {
        energy_with(
            &mut self.spectral,
            &self.grid,
            &wf.amplitudes,
            &self.potential,
            self.g,
        )
    }
}

/// Strang evolution without absorbing boundaries.
pub fn evolve(
    grid: &Grid1D,
    state: &Wavefunction,
    potential: &[f64],
    g: f64,
    dt: f64,
    n_steps: usize,
) -> Result<Wavefunction> {
    let mut prop = Propagator::new(grid, potential.to_vec(), None, g, dt)?;
    let mut wf = state.clone();
    prop.run(&mut wf, n_steps)?;
    Ok(wf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionAudit {
    pub norm_total: f64,
    pub norm_in_window: f64,
    pub norm_beyond_window: f64,
    pub absorbed: f64,
    /// |in + beyond + absorbed − N| / N.
    pub closure_error: f64,
    /// Largest density in the outer 2% of the grid relative to the initial peak.
    pub edge_density_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Time in units of 1/ω_x.
    pub omega_t: f64,
    pub density: Vec<f64>,
    pub audit: ExpansionAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub snapshots: Vec<Snapshot>,
    pub dt: f64,
    pub steps: usize,
    /// Absorbed norm above 1% of N, or density reaching the grid edge.
    pub boundary_warning: bool,
}

/// Switches the trap off at t = 0 and propagates the ground state through
/// `potential` (internal units on `grid`), recording the density at each
/// requested ω_x·t. `dt_max` caps the step; each interval between
/// snapshots is split into equal steps so snapshot times are hit exactly.
#[allow(clippy::too_many_arguments)]
pub fn expand_in_disorder(
    grid: &Grid1D,
    ground: &GroundStateResult,
    potential: &[f64],
    g: f64,
    omega_x: f64,
    snapshot_times: &[f64],
    dt_max: f64,
    sponge: Option<Vec<f64>>,
    window: f64,
) -> Result<Expansion> {
    let mut times = snapshot_times.to_vec();
    times.sort_by(f64::total_cmp);
    let t_final = match times.last() {
        Some(&t) if t > 0.0 => t,
        _ => return Err(invalid("expansion needs a positive final time")),
    };
    if times[0] < 0.0 {
        return Err(invalid("snapshot times must be non-negative"));
    }
    let half_width = grid.x_max().min(-grid.x_min());
    let reach = t_final / omega_x / ground.xi + ground.l_tf;
    if half_width < reach {
        return Err(Error::Domain(format!(
            "grid half-width {half_width} below fastest-mode reach {reach}"
        )));
    }

    let mut wf = ground.wavefunction.clone();
    wf.time = 0.0;
    let n0 = wf.norm(grid);
    let peak0 = wf.density().iter().cloned().fold(0.0, f64::max);
    let mut prop = Propagator::new(grid, potential.to_vec(), sponge, g, dt_max)?;
    let x = grid.positions();
    let edge_start = (0.98 * half_width).max(window);

    let mut snapshots = Vec::with_capacity(times.len());
    let mut absorbed = 0.0;
    let mut steps = 0;
    let mut t_now = 0.0;
    for &t_wx in &times {
        let t = t_wx / omega_x;
        let span = t - t_now;
        if span > 0.0 {
            let n = (span / dt_max).ceil().max(1.0) as usize;
            prop.set_dt(span / n as f64)?;
            let a = prop.run(&mut wf, n)?;
            absorbed += a.absorbed;
            steps += n;
        }
        t_now = t;
        let density = wf.density();
        let dx = grid.dx();
        let (mut inside, mut beyond, mut edge) = (0.0, 0.0, 0.0f64);
        for (xi, n) in x.iter().zip(&density) {
            if xi.abs() <= window {
                inside += n * dx;
            } else {
                beyond += n * dx;
            }
            if xi.abs() >= edge_start {
                edge = edge.max(*n);
            }
        }
        let total = inside + beyond;
        snapshots.push(Snapshot {
            omega_t: t_wx,
            density,
            audit: ExpansionAudit {
                norm_total: total,
                norm_in_window: inside,
                norm_beyond_window: beyond,
                absorbed,
                closure_error: ((total + absorbed) - n0).abs() / n0,
                edge_density_ratio: edge / peak0,
            },
        });
    }
    let last = snapshots
        .last()
        .map(|s| s.audit)
        .expect("at least one snapshot");
    let boundary_warning = last.absorbed > 0.01 * n0 || last.edge_density_ratio > 1e-6;
    Ok(Expansion {
        snapshots,
        dt: prop.dt(),
        steps,
        boundary_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe::{ground_state, GpeProblem, GroundStateOptions};

    fn gaussian(grid: &Grid1D, s0: f64, n: f64) -> Wavefunction {
        let amps = grid
            .positions()
            .iter()
            .map(|x| Complex64::new((-x * x / (4.0 * s0 * s0)).exp(), 0.0))
            .collect();
        let mut wf = Wavefunction::new(amps);
        wf.normalize_to(grid, n);
        wf
    }

    fn second_moment(grid: &Grid1D, d: &[f64]) -> f64 {
        let x = grid.positions();
        let n: f64 = d.iter().sum();
        x.iter().zip(d).map(|(x, d)| x * x * d).sum::<f64>() / n
    }

    #[test]
    fn free_gaussian_spreading() {
        let grid = Grid1D::symmetric(4096, 400.0).unwrap();
        let s0 = 3.0;
        let wf0 = gaussian(&grid, s0, 1.0);
        let v = vec![0.0; grid.len()];
        let t = 40.0;
        let wf = evolve(&grid, &wf0, &v, 0.0, 0.5, 80).unwrap();
        let expected = s0 * s0 * (1.0 + (t / (2.0 * s0 * s0)).powi(2));
        let got = second_moment(&grid, &wf.density());
        assert!(
            ((got - expected) / expected).abs() < 1e-6,
            "{got} vs {expected}"
        );
        assert!((wf.time - t).abs() < 1e-12);
    }

    #[test]
    fn constant_potential_is_a_global_phase() {
        let grid = Grid1D::symmetric(1024, 100.0).unwrap();
        let wf0 = gaussian(&grid, 2.0, 1.0);
        let free = evolve(&grid, &wf0, &vec![0.0; 1024], 0.0, 0.05, 200).unwrap();
        let shifted = evolve(&grid, &wf0, &vec![0.7; 1024], 0.0, 0.05, 200).unwrap();
        for (a, b) in free.density().iter().zip(shifted.density()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn phase_bound_enforced() {
        let grid = Grid1D::symmetric(64, 10.0).unwrap();
        let wf = gaussian(&grid, 1.0, 1.0);
        let err = evolve(&grid, &wf, &vec![2.0; 64], 0.0, 0.1, 1).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(ref m) if m.contains("reduce dt")));
        assert!(evolve(&grid, &wf, &vec![0.0; 63], 0.0, 0.1, 1).is_err());
    }

    #[test]
    fn sponge_absorbs_outgoing_wave_and_audits() {
        let grid = Grid1D::symmetric(2048, 200.0).unwrap();
        // wave packet moving right with k = 2
        let mut wf = gaussian(&grid, 3.0, 1.0);
        for (a, x) in wf.amplitudes.iter_mut().zip(grid.positions()) {
            *a *= Complex64::from_polar(1.0, 2.0 * x);
        }
        let sponge = quadratic_sponge(&grid, 100.0, 0.5);
        let mut p = Propagator::new(&grid, vec![0.0; 2048], Some(sponge), 0.0, 0.05).unwrap();
        let audit = p.run(&mut wf, 4000).unwrap();
        let left = wf.norm(&grid);
        assert!((left + audit.absorbed - 1.0).abs() < 1e-10);
        assert!(left < 1e-6, "remaining {left}");
    }

    #[test]
    fn symmetric_problem_stays_symmetric() {
        let grid = Grid1D::symmetric(1024, 100.0).unwrap();
        let x = grid.positions();
        // x_i and x_{n-i} mirror each other on this grid
        let v: Vec<f64> = x
            .iter()
            .map(|x| 0.05 * (0.3 * x).cos() + 0.02 * (1.1 * x).cos())
            .collect();
        let wf0 = gaussian(&grid, 4.0, 10.0);
        let wf = evolve(&grid, &wf0, &v, 0.2, 0.02, 2000).unwrap();
        let d = wf.density();
        let peak = d.iter().cloned().fold(0.0, f64::max);
        for i in 1..1024 {
            assert!((d[i] - d[1024 - i]).abs() < 1e-9 * peak);
        }
    }

    #[test]
    fn norm_conserved_without_sponge() {
        let grid = Grid1D::symmetric(1024, 100.0).unwrap();
        let x = grid.positions();
        let v: Vec<f64> = x.iter().map(|x| 0.05 * (0.3 * x + 0.2).cos()).collect();
        let wf0 = gaussian(&grid, 4.0, 100.0);
        let wf = evolve(&grid, &wf0, &v, 0.17, 0.01, 5000).unwrap();
        assert!((wf.norm(&grid) - 100.0).abs() < 1e-8 * 100.0);
    }

    #[test]
    fn free_interacting_expansion_lowers_central_density() {
        let problem = GpeProblem {
            omega_x: 0.1,
            g: 0.2,
            n_atoms: 50.0,
        };
        let grid = Grid1D::symmetric(4096, 500.0).unwrap();
        let gs = ground_state(&grid, &problem, &GroundStateOptions::default()).unwrap();
        let v = vec![0.0; grid.len()];
        let exp = expand_in_disorder(
            &grid,
            &gs,
            &v,
            problem.g,
            problem.omega_x,
            &[1.0, 2.0, 4.0, 8.0],
            0.05,
            None,
            400.0,
        )
        .unwrap();
        let centre = grid.len() / 2;
        let mut prev = gs.wavefunction.density()[centre];
        for s in &exp.snapshots {
            assert!(s.density[centre] < prev);
            prev = s.density[centre];
            assert!(s.audit.closure_error < 1e-10);
        }
    }

    #[test]
    fn expansion_rejects_short_grid() {
        let problem = GpeProblem {
            omega_x: 0.1,
            g: 0.2,
            n_atoms: 50.0,
        };
        let grid = Grid1D::symmetric(1024, 100.0).unwrap();
        let gs = ground_state(&grid, &problem, &GroundStateOptions::default()).unwrap();
        let v = vec![0.0; grid.len()];
        assert!(matches!(
            expand_in_disorder(&grid, &gs, &v, 0.2, 0.1, &[50.0], 0.05, None, 80.0),
            Err(Error::Domain(_))
        ));
        assert!(expand_in_disorder(&grid, &gs, &v, 0.2, 0.1, &[], 0.05, None, 80.0).is_err());
    }
}
