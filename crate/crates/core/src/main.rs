use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cploc::casimir::{correlator, disorder_strength};
use cploc::ensemble::{
    fold, log_bin, prepare, read_columns, read_manifest, replay, run_experiment, run_theory,
    snapshot_file, write_experiment, write_theory, Config, RunStatus, Summary, WING_BINS,
};
use cploc::theory::power_law_fit;
use cploc::Error;

#[derive(Parser)]
#[command(
    version,
    about = "Casimir-Polder disorder ensembles and localization of expanding condensates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Source {
    /// TOML config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in parameter set: fig2, fig3 or fig4.
    #[arg(long)]
    preset: Option<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Potential order, 1 or 2.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: Option<u8>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Override the number of realizations.
    #[arg(long)]
    realizations: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full disorder ensemble and the theory overlay.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 3 when the preset's acceptance thresholds fail.
        #[arg(long)]
        check: bool,
    },
    /// Theory pipeline only.
    Theory {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo V_R and C(u) against the first-order closed forms.
    Stats {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Power-law fit of the folded ensemble wing of an existing run.
    Fit {
        #[arg(long)]
        out: PathBuf,
        /// ω_x t of the snapshot; defaults to the last one.
        #[arg(long)]
        snapshot: Option<f64>,
        /// Window in m; defaults to the run's fit window.
        #[arg(long)]
        x_lo: Option<f64>,
        #[arg(long)]
        x_hi: Option<f64>,
    },
    /// Re-run one realization from its archived surface.
    Replay {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        index: u64,
    },
}

enum Failure {
    Config(String),
    Run(String),
    Threshold(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            Error::Parse(_) => Failure::Config(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn load(source: &Source) -> Result<Config, Failure> {
    let mut config = match (&source.config, &source.preset) {
        (Some(path), _) => Config::load(path)?,
        (None, Some(name)) => Config::preset(name)?,
        (None, None) => {
            return Err(Failure::Config(
                "either --config or --preset is required".into(),
            ))
        }
    };
    if let Some(seed) = source.seed {
        config.run.seed = seed;
    }
    if let Some(order) = source.order {
        config.casimir.order = order;
    }
    if let Some(w) = source.workers {
        config.run.workers = w;
    }
    if let Some(m) = source.realizations {
        config.run.realizations = m;
    }
    config.validate()?;
    Ok(config)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default()
}

/// Thresholds applied by `run --check` to the last snapshot.
fn check(preset: Option<&str>, summary: &Summary) -> Vec<String> {
    let mut failures = Vec::new();
    if summary.status == RunStatus::Failed {
        failures.push("more than the allowed share of realizations failed".into());
    }
    let Some(last) = summary.snapshots.last() else {
        failures.push("no ensemble snapshots".into());
        return failures;
    };
    match preset {
        Some("fig4") => {
            if last.core_fraction <= 0.5 {
                failures.push(format!("core fraction {:.3} <= 0.5", last.core_fraction));
            }
            match last.wing_fit {
                Some(f) if (1.4..=2.3).contains(&f.nu) => {}
                Some(f) => failures.push(format!("wing exponent {:.3} outside [1.4, 2.3]", f.nu)),
                None => failures.push("wing fit failed".into()),
            }
        }
        _ => match &last.comparison {
            Some(c) => {
                if c.relative_nu_difference.abs() > 0.15 {
                    failures.push(format!(
                        "slope differs from theory by {:.1}%",
                        100.0 * c.relative_nu_difference
                    ));
                }
                if c.max_abs_log_deviation >= 3f64.ln() {
                    failures.push(format!(
                        "log-density deviation {:.3} >= ln 3",
                        c.max_abs_log_deviation
                    ));
                }
            }
            None => failures.push("comparison with theory failed".into()),
        },
    }
    failures
}

fn cmd_run(source: &Source, out: &Path, with_check: bool) -> Result<(), Failure> {
    let config = load(source)?;
    let result = run_experiment(&config)?;
    write_experiment(&result, out)?;
    println!("{}", json(&result.summary));
    for w in &result.manifest.warnings {
        eprintln!("warning: {w}");
    }
    if result.manifest.status == RunStatus::Failed {
        return Err(Failure::Run(format!(
            "{} realizations failed",
            result.manifest.failed.len()
        )));
    }
    if with_check {
        let failures = check(source.preset.as_deref(), &result.summary);
        if !failures.is_empty() {
            return Err(Failure::Threshold(failures.join("; ")));
        }
    }
    Ok(())
}

fn cmd_theory(source: &Source, out: &Path) -> Result<(), Failure> {
    let config = load(source)?;
    let prep = prepare(&config)?;
    let theory = run_theory(&prep)?;
    write_theory(&theory, out)?;
    let digest = serde_json::json!({
        "mu_j": prep.mu,
        "xi_m": prep.xi,
        "l_tf_m": prep.l_tf,
        "v_r_over_mu_first_order": theory.v_r_over_mu,
        "k_star_per_m": theory.mobility_edge.map(|e| e.k_star),
        "k_star_xi": theory.mobility_edge.map(|e| e.k_star * prep.xi),
        "localized_fraction": theory.profile.localized_fraction,
        "max_gamma_over_k": theory.max_gamma_over_k,
        "perturbative_warning": theory.perturbative_warning,
        "validity": theory.validity,
        "fit": theory.fit,
        "slope_constancy": theory.slope_constancy,
        "fit_window_m": theory.fit_window,
    });
    let text = json(&digest);
    std::fs::write(out.join("theory_summary.json"), &text).map_err(Error::from)?;
    println!("{text}");
    Ok(())
}

fn cmd_stats(source: &Source, samples: usize) -> Result<(), Failure> {
    let config = load(source)?;
    let spec = config.surface_spec();
    let prefactor = config.prefactor()?;
    let (kernels, order, _) = config.kernels()?;
    let prep = prepare(&config)?;
    let strength = disorder_strength(&spec, &prefactor, &kernels, order, samples, 0.0)?;
    let separations: Vec<f64> = (1..=40).map(|i| i as f64 * 0.5e-6).collect();
    let corr = correlator(&spec, &prefactor, &kernels, &separations, samples)?;
    let worst_z = corr
        .monte_carlo
        .iter()
        .zip(&corr.analytic)
        .zip(&corr.standard_error)
        .map(|((m, a), s)| if *s > 0.0 { (m - a).abs() / s } else { 0.0 })
        .fold(0.0, f64::max);
    let digest = serde_json::json!({
        "samples": samples,
        "v_r_j": strength.v_r,
        "v_r_standard_error_j": strength.standard_error,
        "v_r_analytic_j": strength.analytic,
        "v_r_over_mu": strength.v_r / prep.mu,
        "correlator": corr,
        "correlator_max_z": worst_z,
    });
    println!("{}", json(&digest));
    Ok(())
}

fn cmd_fit(
    out: &Path,
    snapshot: Option<f64>,
    x_lo: Option<f64>,
    x_hi: Option<f64>,
) -> Result<(), Failure> {
    let manifest = read_manifest(out)?;
    let summary: Summary = cploc::ensemble::read_summary(out)?;
    let t = match snapshot.or_else(|| manifest.snapshot_omega_t.last().copied()) {
        Some(t) => t,
        None => return Err(Failure::Run("run has no snapshots".into())),
    };
    let cols = read_columns(&snapshot_file(out, "ensemble", t))?;
    if cols.len() < 2 {
        return Err(Failure::Run(
            "ensemble file needs x and mean columns".into(),
        ));
    }
    let x: Vec<f64> = cols[0].iter().map(|x| x * 1e-6).collect();
    let n: Vec<f64> = cols[1].iter().map(|n| n * 1e6).collect();
    let lo = x_lo.unwrap_or(summary.fit_window_m.0);
    let hi = x_hi.unwrap_or(summary.fit_window_m.1);
    let (xf, nf) = fold(&x, &n);
    let (xb, nb) = log_bin(&xf, &nf, lo, hi, WING_BINS);
    let fit = power_law_fit(&xb, &nb, lo * (1.0 - 1e-9), hi * (1.0 + 1e-9))?;
    println!(
        "{}",
        json(&serde_json::json!({ "omega_t": t, "window_m": (lo, hi), "fit": fit }))
    );
    Ok(())
}

fn cmd_replay(out: &Path, index: u64) -> Result<(), Failure> {
    let (config, result) = replay(out, index)?;
    let mut report = serde_json::json!({
        "index": index,
        "v_r_j": result.v_r,
        "dt_s": result.dt,
        "steps": result.steps,
        "audits": result.audits,
    });
    // compare against the archived densities when they were written
    let dir = out.join("densities");
    let mut worst = None::<f64>;
    for (s, &t) in config.run.snapshots.iter().enumerate() {
        let path = snapshot_file(&dir, &format!("realization_{index:04}"), t);
        if !path.exists() {
            continue;
        }
        let stored = read_columns(&path)?;
        let fresh: Vec<f64> = result.densities[s].iter().map(|n| n * 1e-6).collect();
        let peak = fresh.iter().cloned().fold(0.0, f64::max);
        let d = stored[1]
            .iter()
            .zip(&fresh)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / peak;
        worst = Some(worst.map_or(d, |w: f64| w.max(d)));
    }
    report["max_relative_difference_to_archive"] = serde_json::json!(worst);
    println!("{}", json(&report));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { source, out, check } => cmd_run(source, out, *check),
        Command::Theory { source, out } => cmd_theory(source, out),
        Command::Stats { source, samples } => cmd_stats(source, *samples),
        Command::Fit {
            out,
            snapshot,
            x_lo,
            x_hi,
        } => cmd_fit(out, *snapshot, *x_lo, *x_hi),
        Command::Replay { out, index } => cmd_replay(out, *index),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Run(m)) => {
            eprintln!("run failed: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Threshold(m)) => {
            eprintln!("threshold check failed: {m}");
            ExitCode::from(3)
        }
    }
}
