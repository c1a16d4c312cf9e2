use std::f64::consts::FRAC_PI_2;
use udw_core::experiments::{self, ExperimentId, SweepSpec, ToleranceEntry, ToleranceSpec};
use udw_core::Error;

fn l1_spec(jobs: usize) -> SweepSpec {
    let mut s = SweepSpec::default_for(ExperimentId::L1Table);
    s.omega_t = vec![5.0, 10.0];
    s.jobs = jobs;
    s
}

fn entry(
    experiment: ExperimentId,
    select: &[(&str, f64)],
    column: &str,
    target: f64,
    tolerance: f64,
) -> ToleranceEntry {
    ToleranceEntry {
        experiment,
        select: select.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
        column: column.into(),
        target,
        tolerance,
        note: String::new(),
    }
}

#[test]
fn csv_is_deterministic_across_thread_counts() {
    let a = experiments::run_experiment(&l1_spec(1)).unwrap().to_csv();
    let b = experiments::run_experiment(&l1_spec(3)).unwrap().to_csv();
    let c = experiments::run_experiment(&l1_spec(0)).unwrap().to_csv();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let header = a.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "experiment,omegaT,l1_distance,signed_difference");
    let rows: Vec<&str> = a.lines().filter(|l| l.starts_with("L1Table,")).collect();
    assert_eq!(rows.len(), 2);
    // floats round-trip exactly
    let table = experiments::run_experiment(&l1_spec(1)).unwrap();
    let parsed: Vec<f64> = rows[0].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(parsed, table.rows[0].values);
}

#[test]
fn profile_sweep_has_one_row_per_sample() {
    let mut s = SweepSpec::default_for(ExperimentId::Fig2Compact);
    s.omega_t = vec![10.0, 100.0];
    s.tau_grid = vec![-1.0, 0.0, 0.25, 2.0];
    let t = experiments::run_experiment(&s).unwrap();
    assert_eq!(t.columns, ["omegaT", "tau", "chi", "omega_chi_tilde", "theta"]);
    assert_eq!(t.rows.len(), 8);
    // chi vanishes outside the support, the dual does not
    let after = &t.rows[3].values;
    assert_eq!(after[..3], [10.0, 2.0, 0.0]);
    assert!(after[3] > 0.0);
}

#[test]
fn builtin_reference_checks_phase_offset() {
    let mut s = SweepSpec::default_for(ExperimentId::PhaseCheck);
    s.omega_t = vec![10.0, 20.0];
    let t = experiments::run_experiment(&s).unwrap();
    let report = experiments::compare_to_reference(&t, &ToleranceSpec::builtin()).unwrap();
    assert!(report.passed);
    assert_eq!(report.exit_code(), 0);
    assert_eq!(report.checks.len(), 2);
    let off = t.column("offset").unwrap();
    assert!((t.rows[1].values[off] + FRAC_PI_2).abs() < 0.05);
}

#[test]
fn reference_failures_are_reported_per_row() {
    let t = experiments::run_experiment(&l1_spec(1)).unwrap();
    let reference = ToleranceSpec {
        version: experiments::FORMAT_VERSION,
        entries: vec![
            entry(ExperimentId::L1Table, &[("omegaT", 5.0)], "l1_distance", 0.0336, 1e-4),
            entry(ExperimentId::L1Table, &[("omegaT", 10.0)], "l1_distance", 0.005, 1e-4),
        ],
    };
    let report = experiments::compare_to_reference(&t, &reference).unwrap();
    assert!(!report.passed);
    assert_eq!(report.exit_code(), 1);
    let failed: Vec<_> = report.failures().map(|c| c.params.clone()).collect();
    assert_eq!(failed, vec![vec![10.0]]);
}

#[test]
fn reference_configuration_errors() {
    let t = experiments::run_experiment(&l1_spec(1)).unwrap();
    let with = |entries| ToleranceSpec {
        version: experiments::FORMAT_VERSION,
        entries,
    };
    let unmatched = with(vec![entry(
        ExperimentId::L1Table,
        &[("omegaT", 7.0)],
        "l1_distance",
        0.0,
        1.0,
    )]);
    assert!(matches!(
        experiments::compare_to_reference(&t, &unmatched),
        Err(Error::Config(_))
    ));
    let bad_column = with(vec![entry(ExperimentId::L1Table, &[], "nope", 0.0, 1.0)]);
    assert!(matches!(
        experiments::compare_to_reference(&t, &bad_column),
        Err(Error::Config(_))
    ));
    let other = with(vec![entry(ExperimentId::PhaseCheck, &[], "offset", 0.0, 1.0)]);
    assert!(matches!(
        experiments::compare_to_reference(&t, &other),
        Err(Error::Config(_))
    ));
    let mut empty = t.clone();
    empty.rows.clear();
    assert!(matches!(
        experiments::compare_to_reference(&empty, &ToleranceSpec::builtin()),
        Err(Error::Config(_))
    ));

    assert!(ToleranceSpec::parse(r#"{"version": 99, "entries": []}"#).is_err());
    assert!(ToleranceSpec::parse("not json").is_err());
}

#[test]
fn invalid_sweeps_fail_before_running() {
    let mut s = l1_spec(1);
    s.omega_t = vec![10.0, 5.0];
    let f = experiments::run_experiment(&s).unwrap_err();
    assert!(matches!(f.error, Error::Config(_)));
    assert!(f.partial.rows.is_empty());
    s.omega_t = vec![];
    assert!(experiments::run_experiment(&s).is_err());
    let mut p = SweepSpec::default_for(ExperimentId::PairDuality);
    p.separations = vec![];
    assert!(experiments::run_experiment(&p).is_err());
}

#[test]
fn failing_point_keeps_earlier_rows() {
    // L underflows at Omega T = 40, so the residual is undefined there
    let mut s = SweepSpec::default_for(ExperimentId::SingleDuality);
    s.omega_t = vec![1.0, 40.0];
    let f = experiments::run_experiment(&s).unwrap_err();
    assert_eq!(f.failed_at, vec![40.0]);
    assert_eq!(f.partial.rows.len(), 1);
    assert_eq!(f.partial.rows[0].values[0], 1.0);
}

#[test]
fn experiment_names_parse() {
    for id in ExperimentId::ALL {
        assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
    }
    assert!("Fig9".parse::<ExperimentId>().is_err());
}
