use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::Config;
use super::run::{
    prepare, run_surface, ExperimentOutput, RealizationOutput, RunManifest, Summary, TheoryOutput,
};
use crate::error::{Error, Result};
use crate::surface::SurfaceRealization;

const UM: f64 = 1e-6;

fn time_label(omega_t: f64) -> String {
    if omega_t.fract() == 0.0 {
        format!("wt{:02}", omega_t as u64)
    } else {
        format!("wt{}", omega_t.to_string().replace('.', "p"))
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))
}

fn columns(header: &str, cols: &[&[f64]]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {header}");
    for i in 0..cols[0].len() {
        let row: Vec<String> = cols.iter().map(|c| format!("{:e}", c[i])).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

fn to_um(x: &[f64]) -> Vec<f64> {
    x.iter().map(|x| x / UM).collect()
}

fn per_um(n: &[f64]) -> Vec<f64> {
    n.iter().map(|n| n * UM).collect()
}

/// γ(k), the averaged profile and a JSON digest of the theory run.
pub fn write_theory(theory: &TheoryOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("theory_gamma.dat"),
        columns(
            "k (1/m) gamma (1/m)",
            &[&theory.curve.k, &theory.curve.gamma],
        ),
    )?;
    let p = &theory.profile;
    fs::write(
        dir.join("theory_profile.dat"),
        columns("x (um) n (1/um)", &[&to_um(&p.x), &per_um(&p.density)]),
    )?;
    Ok(())
}

/// Writes the full run directory.
pub fn write_experiment(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let config = &out.manifest.config;
    fs::write(dir.join("manifest.json"), json(&out.manifest)?)?;
    fs::write(dir.join("config.toml"), config.to_toml())?;
    fs::write(dir.join("summary.json"), json(&out.summary)?)?;
    write_theory(&out.theory, dir)?;

    let surfaces = dir.join("surfaces");
    fs::create_dir_all(&surfaces)?;
    for s in &out.surfaces {
        let name = format!("realization_{:04}.txt", s.provenance.realization);
        fs::write(surfaces.join(name), s.to_record())?;
    }

    let x_um = to_um(&out.x);
    for (s, ens) in out.ensembles.iter().enumerate() {
        let label = time_label(config.run.snapshots[s]);
        fs::write(
            dir.join(format!("ensemble_{label}.dat")),
            columns(
                &format!(
                    "x (um) mean n (1/um) standard error (1/um), M = {}",
                    ens.members
                ),
                &[&x_um, &per_um(&ens.mean), &per_um(&ens.standard_error)],
            ),
        )?;
    }
    if config.run.write_densities {
        let densities = dir.join("densities");
        fs::create_dir_all(&densities)?;
        for (s, members) in out.members.iter().enumerate() {
            let label = time_label(config.run.snapshots[s]);
            for (surface, d) in out.surfaces.iter().zip(members) {
                let name = format!(
                    "realization_{:04}_{label}.dat",
                    surface.provenance.realization
                );
                fs::write(
                    densities.join(name),
                    columns("x (um) n (1/um)", &[&x_um, &per_um(d)]),
                )?;
            }
        }
    }
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let text = fs::read_to_string(dir.join("summary.json"))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
}

/// Re-runs one realization of a finished run from its manifest and stored
/// surface record.
pub fn replay(dir: &Path, index: u64) -> Result<(Config, RealizationOutput)> {
    let manifest = read_manifest(dir)?;
    let config = manifest.config;
    let prep = prepare(&config)?;
    let path = dir
        .join("surfaces")
        .join(format!("realization_{index:04}.txt"));
    let surface = SurfaceRealization::from_record(&fs::read_to_string(&path)?)?;
    let out = run_surface(&prep, surface)?;
    Ok((config, out))
}

/// Parses a whitespace-separated numeric table, skipping `#` lines.
pub fn read_columns(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        if cols.is_empty() {
            cols = vec![Vec::new(); vals.len()];
        }
        if vals.len() != cols.len() {
            return Err(Error::Parse(format!(
                "{}:{}: ragged row",
                path.display(),
                lineno + 1
            )));
        }
        cols.iter_mut().zip(vals).for_each(|(c, v)| c.push(v));
    }
    Ok(cols)
}

pub fn snapshot_file(dir: &Path, prefix: &str, omega_t: f64) -> std::path::PathBuf {
    dir.join(format!("{prefix}_{}.dat", time_label(omega_t)))
}
