//! Canned sweeps: dual-switching profiles, L1 distances, phase fits and
//! duality residuals, emitted as CSV tables. Parameters are in units of T = 1.

use crate::detector::{self, CouplingKind, DetectorConfig};
use crate::error::{Error, Result};
use crate::field::FieldModel;
use crate::harvesting::{self, DetectorPair, PairResidual};
use crate::switching::{self, SwitchingSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;

pub const FORMAT_VERSION: u32 = 1;

/// Tolerance reference shipped with the crate.
pub const DEFAULT_REFERENCE: &str = include_str!("../reference/tolerances.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    Fig1Gaussian,
    Fig2Compact,
    Fig3CompactSmooth,
    L1Table,
    SingleDuality,
    PairDuality,
    PhaseCheck,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::Fig1Gaussian,
        ExperimentId::Fig2Compact,
        ExperimentId::Fig3CompactSmooth,
        ExperimentId::L1Table,
        ExperimentId::SingleDuality,
        ExperimentId::PairDuality,
        ExperimentId::PhaseCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Fig1Gaussian => "Fig1Gaussian",
            ExperimentId::Fig2Compact => "Fig2Compact",
            ExperimentId::Fig3CompactSmooth => "Fig3CompactSmooth",
            ExperimentId::L1Table => "L1Table",
            ExperimentId::SingleDuality => "SingleDuality",
            ExperimentId::PairDuality => "PairDuality",
            ExperimentId::PhaseCheck => "PhaseCheck",
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            ExperimentId::Fig1Gaussian | ExperimentId::Fig2Compact | ExperimentId::Fig3CompactSmooth => {
                &["omegaT", "tau", "chi", "omega_chi_tilde", "theta"]
            }
            ExperimentId::L1Table => &["omegaT", "l1_distance", "signed_difference"],
            ExperimentId::SingleDuality => &[
                "omegaT",
                "L",
                "L_tilde",
                "residual",
                "L_tilde_exact_dual",
                "exact_residual",
            ],
            ExperimentId::PairDuality => &[
                "omegaT",
                "d",
                "L_AA",
                "L_tilde_AA",
                "abs_M",
                "abs_M_tilde",
                "negativity",
                "negativity_tilde",
                "d_L_AA",
                "d_M",
                "d_negativity",
                "m_tilde_mismatch",
            ],
            ExperimentId::PhaseCheck => &["omegaT", "offset", "residual"],
        }
    }

    fn kind(self) -> switching::SwitchingKind {
        match self {
            ExperimentId::Fig2Compact => switching::SwitchingKind::CompactCosine,
            ExperimentId::Fig3CompactSmooth => switching::SwitchingKind::CompactCosineSq,
            _ => switching::SwitchingKind::Gaussian,
        }
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.name().to_ascii_lowercase() == key)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub experiment: ExperimentId,
    pub omega_t: Vec<f64>,
    /// Sample times for the profile experiments; the L1 table and phase fit
    /// use the default grid of the switching when empty.
    pub tau_grid: Vec<f64>,
    /// Detector separations d/T (PairDuality).
    pub separations: Vec<f64>,
    /// Minkowski regulator epsilon/T.
    pub epsilon: f64,
    pub output: Option<PathBuf>,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

impl SweepSpec {
    /// Default grids for each experiment.
    pub fn default_for(experiment: ExperimentId) -> Self {
        let (omega_t, tau_grid, separations) = match experiment {
            ExperimentId::Fig1Gaussian => (
                vec![1.0, 5.0, 10.0, 20.0],
                switching::uniform_grid(-6.0, 6.0, 1201),
                vec![],
            ),
            ExperimentId::Fig2Compact => (
                vec![10.0, 100.0, 1000.0],
                switching::uniform_grid(-1.0, 3.0, 1601),
                vec![],
            ),
            ExperimentId::Fig3CompactSmooth => (
                vec![10.0, 50.0, 100.0],
                switching::uniform_grid(-1.0, 3.0, 1601),
                vec![],
            ),
            ExperimentId::L1Table => (vec![1.0, 5.0, 10.0, 20.0], vec![], vec![]),
            ExperimentId::SingleDuality => (vec![5.0, 10.0, 20.0], vec![], vec![]),
            ExperimentId::PairDuality => (vec![5.0, 10.0], vec![], vec![2.0]),
            ExperimentId::PhaseCheck => (vec![5.0, 10.0, 20.0, 40.0], vec![], vec![]),
        };
        SweepSpec {
            experiment,
            omega_t,
            tau_grid,
            separations,
            epsilon: 1e-4,
            output: None,
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn increasing(name: &str, v: &[f64], required: bool) -> Result<()> {
            if required && v.is_empty() {
                return Err(Error::Config(format!("{name} grid is empty")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!("{name} grid has non-finite values")));
            }
            if v.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config(format!("{name} grid must be strictly increasing")));
            }
            Ok(())
        }
        let profile = matches!(
            self.experiment,
            ExperimentId::Fig1Gaussian | ExperimentId::Fig2Compact | ExperimentId::Fig3CompactSmooth
        );
        increasing("omegaT", &self.omega_t, true)?;
        increasing("tau", &self.tau_grid, profile)?;
        increasing(
            "separation",
            &self.separations,
            self.experiment == ExperimentId::PairDuality,
        )?;
        if self.omega_t.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Config("omegaT values must be > 0".into()));
        }
        if self.separations.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Config("separations must be > 0".into()));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config("epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// One CSV row: parameters then outputs, in the order of the table header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub experiment: ExperimentId,
    pub columns: Vec<String>,
    pub meta: Vec<(String, String)>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    fn new(spec: &SweepSpec) -> Self {
        let grid = |v: &[f64]| match v {
            [] => "default".to_string(),
            [a] => format!("{a:?}"),
            [a, .., b] => format!("{a:?}:{b:?}:{}", v.len()),
        };
        let field = match spec.experiment {
            ExperimentId::SingleDuality | ExperimentId::PairDuality => FieldModel::MinkowskiVacuum3p1 {
                mass: 0.0,
                epsilon: spec.epsilon,
            }
            .eps_schedule()
            .iter()
            .map(|e| format!("{e:?}"))
            .collect::<Vec<_>>()
            .join(" "),
            _ => "none".to_string(),
        };
        SweepTable {
            experiment: spec.experiment,
            columns: spec.experiment.columns().iter().map(|c| c.to_string()).collect(),
            meta: vec![
                ("version".into(), env!("CARGO_PKG_VERSION").to_string()),
                ("format".into(), FORMAT_VERSION.to_string()),
                ("experiment".into(), spec.experiment.name().into()),
                ("switching".into(), format!("{:?} T=1", spec.experiment.kind())),
                (
                    "omegaT".into(),
                    spec.omega_t
                        .iter()
                        .map(|w| format!("{w:?}"))
                        .collect::<Vec<_>>()
                        .join(" "),
                ),
                ("tau_grid".into(), grid(&spec.tau_grid)),
                ("separations".into(), grid(&spec.separations)),
                ("eps_schedule".into(), field),
            ],
            rows: vec![],
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// `# meta` lines, header, rows. Floats use the shortest decimal that
    /// round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# meta {k}={v}");
        }
        let _ = writeln!(out, "experiment,{}", self.columns.join(","));
        for row in &self.rows {
            out.push_str(self.experiment.name());
            for v in &row.values {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }
}

/// A sweep that stopped early: the rows completed in grid order before the
/// first failing point, and the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub partial: SweepTable,
    pub failed_at: Vec<f64>,
    pub error: Error,
}

impl std::fmt::Display for SweepFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} failed at {:?} after {} rows: {}",
            self.partial.experiment,
            self.failed_at,
            self.partial.rows.len(),
            self.error
        )
    }
}

impl std::error::Error for SweepFailure {}

pub fn run_experiment(spec: &SweepSpec) -> std::result::Result<SweepTable, SweepFailure> {
    let mut table = SweepTable::new(spec);
    if let Err(error) = spec.validate() {
        return Err(SweepFailure {
            partial: table,
            failed_at: vec![],
            error,
        });
    }
    let points: Vec<Vec<f64>> = match spec.experiment {
        ExperimentId::PairDuality => spec
            .omega_t
            .iter()
            .flat_map(|&w| spec.separations.iter().map(move |&d| vec![w, d]))
            .collect(),
        _ => spec.omega_t.iter().map(|&w| vec![w]).collect(),
    };
    let work = || -> Vec<Result<Vec<SweepRow>>> { points.par_iter().map(|p| run_point(spec, p)).collect() };
    let results = if spec.jobs > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(spec.jobs).build() {
            Ok(pool) => pool.install(work),
            Err(e) => {
                return Err(SweepFailure {
                    partial: table,
                    failed_at: vec![],
                    error: Error::Config(format!("thread pool: {e}")),
                })
            }
        }
    } else {
        work()
    };
    for (p, r) in points.into_iter().zip(results) {
        match r {
            Ok(rows) => table.rows.extend(rows),
            Err(error) => {
                return Err(SweepFailure {
                    partial: table,
                    failed_at: p,
                    error,
                })
            }
        }
    }
    Ok(table)
}

fn run_point(spec: &SweepSpec, p: &[f64]) -> Result<Vec<SweepRow>> {
    let omega = p[0];
    let sw = SwitchingSpec::new(spec.experiment.kind(), 1.0)?;
    let grid_or_default = || {
        if spec.tau_grid.is_empty() {
            switching::default_grid(&sw)
        } else {
            spec.tau_grid.clone()
        }
    };
    let row = |values: Vec<f64>| -> Result<SweepRow> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                what: "non-finite value in sweep row",
                estimate: f64::NAN,
            });
        }
        Ok(SweepRow { values })
    };
    match spec.experiment {
        ExperimentId::Fig1Gaussian | ExperimentId::Fig2Compact | ExperimentId::Fig3CompactSmooth => {
            let dual = switching::dual_switching(&sw, omega, &spec.tau_grid)?;
            let scaled = dual.scaled_modulus();
            spec.tau_grid
                .iter()
                .enumerate()
                .map(|(k, &tau)| row(vec![omega, tau, sw.eval(tau), scaled[k], dual.theta[k]]))
                .collect()
        }
        ExperimentId::L1Table => {
            let grid = grid_or_default();
            let dual = switching::dual_switching(&sw, omega, &grid)?;
            let chi: Vec<f64> = grid.iter().map(|&t| sw.eval(t)).collect();
            let scaled = dual.scaled_modulus();
            let l1 = switching::l1_relative_distance(&scaled, &chi, &grid)?;
            let signed = switching::signed_relative_difference(&scaled, &chi, &grid)?;
            Ok(vec![row(vec![omega, l1, signed])?])
        }
        ExperimentId::PhaseCheck => {
            let dual = switching::dual_switching(&sw, omega, &grid_or_default())?;
            let fit = switching::phase_linearity_residual(&dual);
            Ok(vec![row(vec![omega, fit.offset, fit.residual])?])
        }
        ExperimentId::SingleDuality => {
            let field = FieldModel::minkowski(spec.epsilon)?;
            let l = detector::excitation_probability(&DetectorConfig::amplitude(sw.clone(), omega, 1.0), &field)?;
            let lt = detector::excitation_probability_derivative(
                &DetectorConfig::derivative(sw.clone(), omega, 1.0),
                &field,
            )?;
            let dual = switching::dual_switching(&sw, omega, &switching::default_grid(&sw))?;
            let le = detector::excitation_probability_derivative(&DetectorConfig::dual(dual, 1.0), &field)?;
            if l < 1e-300 {
                return Err(Error::DegenerateProbability(l));
            }
            Ok(vec![row(vec![
                omega,
                l,
                lt,
                (l - lt).abs() / l,
                le,
                (l - le).abs() / l,
            ])?])
        }
        ExperimentId::PairDuality => {
            let d = p[1];
            let field = FieldModel::minkowski(spec.epsilon)?;
            let a = DetectorConfig::amplitude(sw, omega, 1.0);
            let pair = DetectorPair::new(a.clone(), a.with_position([d, 0.0, 0.0]))?;
            let amp = harvesting::harvest(&pair, &field, CouplingKind::Amplitude)?;
            let der = harvesting::harvest(&pair, &field, CouplingKind::Derivative)?;
            let r = PairResidual::between(&amp, &der);
            let mismatch = der.m_check.map_or(0.0, |c| c.mismatch);
            Ok(vec![row(vec![
                omega,
                d,
                amp.l_aa,
                der.l_aa,
                amp.m.norm(),
                der.m.norm(),
                amp.negativity,
                der.negativity,
                r.d_l_aa,
                r.d_m,
                r.d_negativity,
                mismatch,
            ])?])
        }
    }
}

/// Versioned tolerance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec {
    pub version: u32,
    pub entries: Vec<ToleranceEntry>,
}

/// `column` of the rows whose parameters equal `select` must lie within
/// `tolerance` of `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceEntry {
    pub experiment: ExperimentId,
    #[serde(default)]
    pub select: Vec<(String, f64)>,
    pub column: String,
    pub target: f64,
    pub tolerance: f64,
    #[serde(default)]
    pub note: String,
}

impl ToleranceSpec {
    pub fn parse(json: &str) -> Result<Self> {
        let spec: ToleranceSpec =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("tolerance file: {e}")))?;
        if spec.version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "tolerance file version {} (expected {FORMAT_VERSION})",
                spec.version
            )));
        }
        Ok(spec)
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_REFERENCE).expect("shipped tolerance file parses")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowCheck {
    pub row: usize,
    pub params: Vec<f64>,
    pub column: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub checks: Vec<RowCheck>,
    pub passed: bool,
}

impl ComparisonReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &RowCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn compare_to_reference(table: &SweepTable, reference: &ToleranceSpec) -> Result<ComparisonReport> {
    if table.rows.is_empty() {
        return Err(Error::Config("no rows to compare".into()));
    }
    let entries: Vec<&ToleranceEntry> = reference
        .entries
        .iter()
        .filter(|e| e.experiment == table.experiment)
        .collect();
    if entries.is_empty() {
        return Err(Error::Config(format!(
            "reference has no entries for {}",
            table.experiment
        )));
    }
    let mut checks = vec![];
    for e in entries {
        let col = table
            .column(&e.column)
            .ok_or_else(|| Error::Config(format!("{}: unknown column '{}'", table.experiment, e.column)))?;
        let sel = e
            .select
            .iter()
            .map(|(name, v)| {
                table
                    .column(name)
                    .map(|c| (c, *v))
                    .ok_or_else(|| Error::Config(format!("{}: unknown column '{name}'", table.experiment)))
            })
            .collect::<Result<Vec<_>>>()?;
        let before = checks.len();
        for (i, r) in table.rows.iter().enumerate() {
            if sel.iter().all(|&(c, v)| r.values[c] == v) {
                let value = r.values[col];
                checks.push(RowCheck {
                    row: i,
                    params: sel.iter().map(|&(c, _)| r.values[c]).collect(),
                    column: e.column.clone(),
                    value,
                    target: e.target,
                    tolerance: e.tolerance,
                    passed: (value - e.target).abs() <= e.tolerance,
                });
            }
        }
        if checks.len() == before {
            return Err(Error::Config(format!(
                "{}: no row matches {:?} for reference column '{}'",
                table.experiment, e.select, e.column
            )));
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(ComparisonReport { checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in ExperimentId::ALL {
            assert_eq!(e.name().parse::<ExperimentId>().unwrap(), e);
        }
        assert!("fig9".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn builtin_reference_parses() {
        let r = ToleranceSpec::builtin();
        assert!(r.entries.iter().any(|e| e.experiment == ExperimentId::L1Table));
    }
}
