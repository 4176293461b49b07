use cploc::ensemble::{
    prepare, read_columns, replay, run_experiment, snapshot_file, write_experiment, Config,
    RunStatus,
};
use cploc::gpe::{expand_in_disorder, PHASE_STEP_BOUND};

fn small(realizations: usize) -> Config {
    let mut c = Config::preset("fig3").unwrap();
    c.solver.n_points = 4096;
    c.solver.half_width = 300e-6;
    c.solver.sponge_start = 150e-6;
    c.theory.l_max = 150e-6;
    c.theory.n_k = 400;
    c.theory.profile_points = 60;
    c.run.realizations = realizations;
    c.run.snapshots = vec![1.0, 2.0];
    c
}

#[test]
fn flat_surface_single_member_is_free_expansion() {
    let mut c = small(1);
    c.surface.h_max = 0.0;
    let out = run_experiment(&c).unwrap();

    let prep = prepare(&c).unwrap();
    let zero = vec![0.0; prep.grid.len()];
    let peak = prep
        .ground
        .wavefunction
        .amplitudes
        .iter()
        .map(|a| prep.problem.g * a.norm_sqr())
        .fold(0.0, f64::max);
    let free = expand_in_disorder(
        &prep.grid,
        &prep.ground,
        &zero,
        prep.problem.g,
        prep.problem.omega_x,
        &c.run.snapshots,
        PHASE_STEP_BOUND / (c.solver.dt_margin * peak),
        Some(prep.sponge.clone()),
        prep.scaling.length_to_internal(c.theory.l_max),
    )
    .unwrap();
    for (ens, snap) in out.ensembles.iter().zip(&free.snapshots) {
        let expect: Vec<f64> = snap
            .density
            .iter()
            .map(|n| n / c.solver.length_unit)
            .collect();
        assert_eq!(ens.mean, expect);
        assert!(ens.standard_error.iter().all(|&s| s == 0.0));
    }
    assert_eq!(out.manifest.records[0].v_r, Some(0.0));
}

#[test]
fn reruns_and_worker_counts_agree_bitwise() {
    let mut c = small(3);
    c.run.workers = 1;
    let a = run_experiment(&c).unwrap();
    let b = run_experiment(&c).unwrap();
    c.run.workers = 3;
    let p = run_experiment(&c).unwrap();
    assert_eq!(a.ensembles, b.ensembles);
    assert_eq!(a.ensembles, p.ensembles);
    assert_eq!(a.summary, p.summary);
    assert_eq!(a.manifest.records, p.manifest.records);
    assert_eq!(a.manifest.status, RunStatus::Ok);
    for s in &a.summary.snapshots {
        assert!(s.max_closure_error < 1e-6);
    }
}

#[test]
fn seed_changes_the_ensemble() {
    let mut c = small(2);
    let a = run_experiment(&c).unwrap();
    c.run.seed += 1;
    let b = run_experiment(&c).unwrap();
    assert_ne!(a.ensembles[1].mean, b.ensembles[1].mean);
}

#[test]
fn archived_run_replays_exactly() {
    let c = small(2);
    let out = run_experiment(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_experiment(&out, dir.path()).unwrap();

    let (config, again) = replay(dir.path(), 1).unwrap();
    assert_eq!(config, c);
    assert_eq!(
        again.densities,
        out.members.iter().map(|m| m[1].clone()).collect::<Vec<_>>()
    );

    let stored = read_columns(&snapshot_file(dir.path(), "ensemble", 2.0)).unwrap();
    assert_eq!(stored.len(), 3);
    assert_eq!(stored[0].len(), c.solver.n_points);
    for (s, m) in stored[1].iter().zip(&out.ensembles[1].mean) {
        assert!((s - m * 1e-6).abs() <= 1e-12 * m.abs() * 1e-6 + 1e-300);
    }
    assert!(dir.path().join("surfaces/realization_0001.txt").exists());
    assert!(dir
        .path()
        .join("densities/realization_0000_wt02.dat")
        .exists());
}
