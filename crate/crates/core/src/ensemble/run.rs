use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::config::Config;
use super::stats::{
    average_densities, compare_with_theory, fold, log_bin, ComparisonReport, EnsembleResult,
};
use crate::casimir::{
    first_order_variance, lateral_potential, perturbative_report, CasimirKernelSet,
    CasimirPrefactor, PotentialOrder, ValidityReport,
};
use crate::error::{Error, Result};
use crate::gpe::{
    expand_in_disorder, ground_state, quadratic_sponge, ExpansionAudit, GpeProblem, Grid1D,
    GroundStateOptions, GroundStateResult, PHASE_STEP_BOUND,
};
use crate::params::{make_scaling, PhysicalConstants, UnitScaling};
use crate::surface::{mean_square_height, sample_surface, SurfaceRealization, SurfaceSpec};
use crate::theory::{
    averaged_profile, lyapunov_closed_form, mobility_edge, power_law_fit, slope_constancy,
    AveragedProfile, LyapunovCurve, MobilityEdge, PowerLawFit, GAMMA_OVER_K_LIMIT,
};

/// Log bins used for wing fits and comparisons of simulated profiles.
pub const WING_BINS: usize = 60;

/// Everything derived from a config before any realization runs.
pub struct Prepared {
    pub config: Config,
    pub constants: PhysicalConstants,
    pub casimir_constants: PhysicalConstants,
    pub scaling: UnitScaling,
    pub problem: GpeProblem,
    pub grid: Grid1D,
    pub ground: GroundStateResult,
    pub spec: SurfaceSpec,
    pub prefactor: CasimirPrefactor,
    pub kernels: CasimirKernelSet,
    pub order: PotentialOrder,
    pub second_order_fallback: bool,
    pub sponge: Vec<f64>,
    /// Grid positions in m.
    pub x_si: Vec<f64>,
    /// μ (J), ξ (m), L_TF (m) of the trapped ground state.
    pub mu: f64,
    pub xi: f64,
    pub l_tf: f64,
    pub warnings: Vec<String>,
}

pub fn prepare(config: &Config) -> Result<Prepared> {
    config.validate()?;
    let constants = config.constants()?;
    let casimir_constants = config.casimir_constants()?;
    let scaling = make_scaling(&constants, config.solver.length_unit)?;
    let trap = config.trap_params()?;
    let problem = GpeProblem::from_si(&constants, &trap, &scaling)?;
    let grid = Grid1D::symmetric(
        config.solver.n_points,
        scaling.length_to_internal(config.solver.half_width),
    )?;
    let ground = ground_state(&grid, &problem, &GroundStateOptions::default())?;
    let (mu, xi, l_tf) = ground.to_si(&scaling);
    let spec = config.surface_spec();
    let prefactor = config.prefactor()?;
    let (kernels, order, second_order_fallback) = config.kernels()?;
    let sponge = quadratic_sponge(
        &grid,
        scaling.length_to_internal(config.solver.sponge_start),
        config.solver.sponge_strength_mu * ground.mu,
    );
    let x_si = grid
        .positions()
        .iter()
        .map(|&x| scaling.length_to_si(x))
        .collect();

    let mut warnings = Vec::new();
    if !grid.resolves(ground.xi, scaling.length_to_internal(spec.lambda_min)) {
        warnings.push(format!(
            "grid spacing {:.3e} m exceeds min(xi, lambda_min)/5 = {:.3e} m",
            scaling.length_to_si(grid.dx()),
            xi.min(spec.lambda_min) / 5.0
        ));
    }
    if second_order_fallback {
        warnings.push("second order requested without a g2 table; running first order".into());
    }
    Ok(Prepared {
        config: config.clone(),
        constants,
        casimir_constants,
        scaling,
        problem,
        grid,
        ground,
        spec,
        prefactor,
        kernels,
        order,
        second_order_fallback,
        sponge,
        x_si,
        mu,
        xi,
        l_tf,
        warnings,
    })
}

/// One expanded realization; densities in 1/m on the solver grid.
#[derive(Debug, Clone)]
pub struct RealizationOutput {
    pub surface: SurfaceRealization,
    /// Spatial rms of U_L over |x| ≤ L_max (J).
    pub v_r: f64,
    pub dt: f64,
    pub steps: usize,
    pub densities: Vec<Vec<f64>>,
    pub audits: Vec<ExpansionAudit>,
    pub boundary_warning: bool,
}

pub fn run_surface(prep: &Prepared, surface: SurfaceRealization) -> Result<RealizationOutput> {
    let u = lateral_potential(
        &surface,
        &prep.prefactor,
        &prep.kernels,
        &prep.x_si,
        prep.order,
    )?;
    let l_max = prep.config.solver.sponge_start;
    let (mut s1, mut s2, mut cnt) = (0.0, 0.0, 0.0);
    for (x, v) in prep.x_si.iter().zip(&u) {
        if x.abs() <= l_max {
            s1 += v;
            s2 += v * v;
            cnt += 1.0;
        }
    }
    let v_r = (s2 / cnt - (s1 / cnt).powi(2)).max(0.0).sqrt();
    let v: Vec<f64> = u
        .iter()
        .map(|&e| prep.scaling.energy_to_internal(e))
        .collect();

    let peak = v
        .iter()
        .zip(prep.ground.wavefunction.amplitudes.iter())
        .map(|(v, a)| v.abs() + prep.problem.g * a.norm_sqr())
        .fold(0.0, f64::max);
    let dt_max = PHASE_STEP_BOUND / (prep.config.solver.dt_margin * peak);
    let e = expand_in_disorder(
        &prep.grid,
        &prep.ground,
        &v,
        prep.problem.g,
        prep.problem.omega_x,
        &prep.config.run.snapshots,
        dt_max,
        Some(prep.sponge.clone()),
        prep.scaling.length_to_internal(l_max),
    )?;
    let lu = prep.scaling.length_unit;
    let densities = e
        .snapshots
        .iter()
        .map(|s| s.density.iter().map(|n| n / lu).collect())
        .collect();
    let audits = e.snapshots.iter().map(|s| s.audit).collect();
    Ok(RealizationOutput {
        surface,
        v_r,
        dt: prep.scaling.time_to_si(e.dt),
        steps: e.steps,
        densities,
        audits,
        boundary_warning: e.boundary_warning,
    })
}

pub fn run_realization(prep: &Prepared, index: u64) -> Result<RealizationOutput> {
    run_surface(prep, sample_surface(&prep.spec, index)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: u64,
    /// Master seed and stream id of the counter-based generator.
    pub seed: u64,
    pub stream: u64,
    pub v_r: Option<f64>,
    pub v_r_over_mu: Option<f64>,
    pub dt_s: Option<f64>,
    pub steps: Option<usize>,
    pub boundary_warning: bool,
    pub audits: Vec<ExpansionAudit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub n_points: usize,
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub dx_m: f64,
    pub length_unit_m: f64,
    pub time_unit_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub config: Config,
    pub master_seed: u64,
    pub realizations: usize,
    /// Worker threads used; results do not depend on it.
    pub workers: usize,
    pub grid: GridRecord,
    pub snapshot_omega_t: Vec<f64>,
    pub potential_order: u8,
    pub second_order_fallback: bool,
    pub records: Vec<RealizationRecord>,
    pub failed: Vec<u64>,
    pub status: RunStatus,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryOutput {
    pub curve: LyapunovCurve,
    pub mobility_edge: Option<MobilityEdge>,
    pub profile: AveragedProfile,
    /// First-order analytic V_R (J) and V_R/μ.
    pub v_r: f64,
    pub v_r_over_mu: f64,
    pub max_gamma_over_k: f64,
    pub perturbative_warning: bool,
    pub validity: ValidityReport,
    pub fit: Option<PowerLawFit>,
    /// Sub-window slopes and their largest relative deviation.
    pub slope_constancy: Option<(Vec<f64>, f64)>,
    pub fit_window: (f64, f64),
}

impl Prepared {
    pub fn fit_window(&self) -> (f64, f64) {
        let t = &self.config.theory;
        (
            t.fit_x_lo.unwrap_or(2.0 * self.l_tf),
            t.fit_x_hi.unwrap_or(t.l_max),
        )
    }
}

/// γ(k) on the support, k*, and the averaged profile for the config's
/// surface statistics. Independent of any realization.
pub fn run_theory(prep: &Prepared) -> Result<TheoryOutput> {
    let t = &prep.config.theory;
    let spec = &prep.spec;
    let k0 = PI / spec.lambda_max;
    let k1 = (PI / spec.lambda_min).max(1.0 / prep.xi);
    let n = t.n_k;
    let mut k: Vec<f64> = (0..n)
        .map(|i| k0 + (k1 - k0) * i as f64 / (n - 1) as f64)
        .collect();
    k[n - 1] = k1;
    let curve = lyapunov_closed_form(
        spec,
        &prep.prefactor,
        &prep.kernels,
        &k,
        &prep.casimir_constants,
    )?;
    let mobility_edge = match mobility_edge(&curve, t.l_max) {
        Ok(e) => Some(e),
        Err(Error::NoLocalizedModes { .. }) => None,
        Err(e) => return Err(e),
    };
    let x_lo = 0.25 * prep.l_tf;
    let m = t.profile_points;
    let x: Vec<f64> = (0..m)
        .map(|i| x_lo * (t.l_max / x_lo).powf(i as f64 / (m - 1) as f64))
        .collect();
    let profile = averaged_profile(
        prep.xi,
        prep.config.trap.n_atoms as f64,
        &curve,
        t.l_max,
        &x,
    )?;
    let v_r = first_order_variance(spec, &prep.prefactor, &prep.kernels).sqrt();
    let max_gamma_over_k = curve.max_gamma_over_k();
    let validity = perturbative_report(
        2.0 * PI / spec.lambda_min,
        spec.lambda_min,
        spec.h_max,
        mean_square_height(spec).sqrt(),
        prep.prefactor.z0,
    );
    let fit_window = prep.fit_window();
    let (lo, hi) = (fit_window.0 * (1.0 - 1e-9), fit_window.1 * (1.0 + 1e-9));
    let fit = power_law_fit(&profile.x, &profile.density, lo, hi).ok();
    let slope_constancy = slope_constancy(&profile.x, &profile.density, lo, hi, 4).ok();
    Ok(TheoryOutput {
        curve,
        mobility_edge,
        profile,
        v_r,
        v_r_over_mu: v_r / prep.mu,
        max_gamma_over_k,
        perturbative_warning: max_gamma_over_k > GAMMA_OVER_K_LIMIT,
        validity,
        fit,
        slope_constancy,
        fit_window,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub omega_t: f64,
    pub members: usize,
    /// Share of N inside |x| ≤ 2 L_TF.
    pub core_fraction: f64,
    pub wing_fit: Option<PowerLawFit>,
    pub comparison: Option<ComparisonReport>,
    pub max_closure_error: f64,
    pub mean_absorbed_fraction: f64,
    pub mean_beyond_window_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: RunStatus,
    pub mu_j: f64,
    pub xi_m: f64,
    pub l_tf_m: f64,
    pub v_r_over_mu_analytic_first_order: f64,
    pub v_r_over_mu_ensemble: Option<f64>,
    pub k_star_per_m: Option<f64>,
    pub k_star_xi: Option<f64>,
    pub k_star_saturated: Option<bool>,
    pub theory_nu: Option<f64>,
    pub theory_slope_deviation: Option<f64>,
    pub max_gamma_over_k: f64,
    pub perturbative_warning: bool,
    pub delocalized_fraction: f64,
    pub fit_window_m: (f64, f64),
    pub snapshots: Vec<SnapshotSummary>,
    pub failed_realizations: usize,
    pub boundary_warnings: usize,
}

pub struct ExperimentOutput {
    pub manifest: RunManifest,
    pub theory: TheoryOutput,
    /// Per snapshot: ensemble mean/SE on the solver grid (SI).
    pub ensembles: Vec<EnsembleResult>,
    /// Per snapshot, per successful realization: densities (1/m).
    pub members: Vec<Vec<Vec<f64>>>,
    pub surfaces: Vec<SurfaceRealization>,
    pub summary: Summary,
    pub x: Vec<f64>,
}

fn effective_workers(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    }
}

/// Samples, expands and averages `config.run.realizations` surfaces on a
/// bounded worker pool; failed realizations are logged and excluded.
pub fn run_experiment(config: &Config) -> Result<ExperimentOutput> {
    let prep = prepare(config)?;
    let theory = run_theory(&prep)?;
    let m = config.run.realizations;
    let workers = effective_workers(config.run.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let results: Vec<Result<RealizationOutput>> = pool.install(|| {
        (0..m as u64)
            .into_par_iter()
            .map(|i| run_realization(&prep, i))
            .collect()
    });
    assemble(prep, theory, results, workers)
}

fn assemble(
    prep: Prepared,
    theory: TheoryOutput,
    results: Vec<Result<RealizationOutput>>,
    workers: usize,
) -> Result<ExperimentOutput> {
    let config = &prep.config;
    let n_snap = config.run.snapshots.len();
    let mut records = Vec::with_capacity(results.len());
    let mut members: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_snap];
    let mut audits: Vec<Vec<ExpansionAudit>> = vec![Vec::new(); n_snap];
    let mut surfaces = Vec::new();
    let mut failed = Vec::new();
    let mut v_rs = Vec::new();
    let mut boundary_warnings = 0;
    for (i, r) in results.into_iter().enumerate() {
        let index = i as u64;
        match r {
            Ok(out) => {
                records.push(RealizationRecord {
                    index,
                    seed: config.run.seed,
                    stream: index,
                    v_r: Some(out.v_r),
                    v_r_over_mu: Some(out.v_r / prep.mu),
                    dt_s: Some(out.dt),
                    steps: Some(out.steps),
                    boundary_warning: out.boundary_warning,
                    audits: out.audits.clone(),
                    error: None,
                });
                boundary_warnings += out.boundary_warning as usize;
                v_rs.push(out.v_r);
                for (s, d) in out.densities.into_iter().enumerate() {
                    members[s].push(d);
                    audits[s].push(out.audits[s]);
                }
                surfaces.push(out.surface);
            }
            Err(e) => {
                failed.push(index);
                records.push(RealizationRecord {
                    index,
                    seed: config.run.seed,
                    stream: index,
                    v_r: None,
                    v_r_over_mu: None,
                    dt_s: None,
                    steps: None,
                    boundary_warning: false,
                    audits: Vec::new(),
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let m = records.len();
    let status = if m > 0 && failed.len() as f64 > config.run.max_failure_fraction * m as f64 {
        RunStatus::Failed
    } else {
        RunStatus::Ok
    };

    let n_atoms = config.trap.n_atoms as f64;
    let x = prep.x_si.clone();
    let dx = prep.scaling.length_to_si(prep.grid.dx());
    let window = prep.fit_window();
    let mut ensembles = Vec::new();
    let mut snapshots = Vec::new();
    if !members[0].is_empty() {
        for s in 0..n_snap {
            let ens = average_densities(&x, &members[s])?;
            let core: f64 = x
                .iter()
                .zip(&ens.mean)
                .filter(|(x, _)| x.abs() <= 2.0 * prep.l_tf)
                .map(|(_, n)| n * dx)
                .sum();
            let (xf, nf) = fold(&x, &ens.mean);
            let (xb, nb) = log_bin(&xf, &nf, window.0, window.1, WING_BINS);
            let lo = window.0 * (1.0 - 1e-9);
            let hi = window.1 * (1.0 + 1e-9);
            let wing_fit = power_law_fit(&xb, &nb, lo, hi).ok();
            let comparison =
                compare_with_theory(&xb, &nb, &theory.profile.x, &theory.profile.density, lo, hi)
                    .ok();
            let a = &audits[s];
            let k = a.len() as f64;
            snapshots.push(SnapshotSummary {
                omega_t: config.run.snapshots[s],
                members: members[s].len(),
                core_fraction: core / n_atoms,
                wing_fit,
                comparison,
                max_closure_error: a.iter().map(|a| a.closure_error).fold(0.0, f64::max),
                mean_absorbed_fraction: a.iter().map(|a| a.absorbed).sum::<f64>() / k / n_atoms,
                mean_beyond_window_fraction: a.iter().map(|a| a.norm_beyond_window).sum::<f64>()
                    / k
                    / n_atoms,
            });
            ensembles.push(ens);
        }
    }

    let mut warnings = prep.warnings.clone();
    if boundary_warnings > 0 {
        warnings.push(format!(
            "{boundary_warnings} realizations flagged absorbed norm > 1% or density at the edge"
        ));
    }
    if theory.perturbative_warning {
        warnings.push(format!(
            "max gamma/k = {:.3} exceeds {GAMMA_OVER_K_LIMIT}",
            theory.max_gamma_over_k
        ));
    }
    let grid = GridRecord {
        n_points: prep.grid.len(),
        x_min_m: prep.scaling.length_to_si(prep.grid.x_min()),
        x_max_m: prep.scaling.length_to_si(prep.grid.x_max()),
        dx_m: dx,
        length_unit_m: prep.scaling.length_unit,
        time_unit_s: prep.scaling.time_unit,
    };
    let manifest = RunManifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        master_seed: config.run.seed,
        realizations: m,
        workers,
        grid,
        snapshot_omega_t: config.run.snapshots.clone(),
        potential_order: if prep.order == PotentialOrder::Second {
            2
        } else {
            1
        },
        second_order_fallback: prep.second_order_fallback,
        records,
        failed: failed.clone(),
        status,
        warnings,
    };
    let summary = Summary {
        status,
        mu_j: prep.mu,
        xi_m: prep.xi,
        l_tf_m: prep.l_tf,
        v_r_over_mu_analytic_first_order: theory.v_r_over_mu,
        v_r_over_mu_ensemble: (!v_rs.is_empty())
            .then(|| v_rs.iter().sum::<f64>() / v_rs.len() as f64 / prep.mu),
        k_star_per_m: theory.mobility_edge.map(|e| e.k_star),
        k_star_xi: theory.mobility_edge.map(|e| e.k_star * prep.xi),
        k_star_saturated: theory.mobility_edge.map(|e| e.saturated),
        theory_nu: theory.fit.map(|f| f.nu),
        theory_slope_deviation: theory.slope_constancy.as_ref().map(|s| s.1),
        max_gamma_over_k: theory.max_gamma_over_k,
        perturbative_warning: theory.perturbative_warning,
        delocalized_fraction: theory.profile.delocalized_fraction,
        fit_window_m: window,
        snapshots,
        failed_realizations: failed.len(),
        boundary_warnings,
    };
    Ok(ExperimentOutput {
        manifest,
        theory,
        ensembles,
        members,
        surfaces,
        summary,
        x,
    })
}
