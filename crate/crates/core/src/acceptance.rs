//! The acceptance suite: each criterion evaluated at its stated tolerance
//! and time budget.

use crate::detector::{self, CouplingKind, DetectorConfig};
use crate::error::Result;
use crate::experiments::{run_experiment, ExperimentId, SweepSpec};
use crate::field::{self, Event, FieldModel};
use crate::harvesting::{self, DetectorId, DetectorPair, PairResidual};
use crate::switching::{self, SwitchingSpec};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: &'static str,
    pub title: &'static str,
    /// Numerical condition and time budget both met.
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub limit_seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} criterion {:<3} {} [{:.2}s / {}s]: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.limit_seconds,
            self.detail
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

const CRITERIA: [(&str, &str, f64, Check); 9] = [
    ("1", "L1 distance of Omega chi_tilde_G from chi_G", 2.0, c1),
    ("2", "large-gap residual convergence", 5.0, c2),
    ("3", "compact-support tail persistence", 10.0, c3),
    ("4", "exact dual on the cavity", 10.0, c4),
    ("5", "large-gap single-detector duality", 60.0, c5),
    ("6a", "direct vs integrated-by-parts M_tilde", 150.0, c6a),
    ("6b", "two-detector duality at OmegaT=10, d=2T", 150.0, c6b),
    ("7", "negativity vs partial transpose", 5.0, c7),
    ("8", "numerical hygiene", 120.0, c8),
];

pub fn criterion_ids() -> Vec<&'static str> {
    CRITERIA.iter().map(|c| c.0).collect()
}

/// Runs one criterion by id.
pub fn run_one(id: &str) -> Option<CriterionResult> {
    let &(id, title, limit, check) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let outcome = check();
    let seconds = start.elapsed().as_secs_f64();
    let (ok, detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = seconds <= limit;
    Some(CriterionResult {
        id,
        title,
        passed: ok && in_time,
        detail: if in_time {
            detail
        } else {
            format!("{detail}; over time budget")
        },
        seconds,
        limit_seconds: limit,
    })
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().filter_map(|c| run_one(c.0)).collect()
}

fn gaussian() -> SwitchingSpec {
    SwitchingSpec::gaussian(1.0).expect("T = 1")
}

fn l1_table(omegas: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let mut spec = SweepSpec::default_for(ExperimentId::L1Table);
    spec.omega_t = omegas.to_vec();
    let t = run_experiment(&spec).map_err(|f| f.error)?;
    Ok(t.rows.iter().map(|r| (r.values[0], r.values[1], r.values[2])).collect())
}

fn c1() -> Result<(bool, String)> {
    let rows = l1_table(&[5.0, 10.0])?;
    let (d5, d10) = (rows[0].1, rows[1].1);
    let ok = (d5 - 0.021).abs() <= 0.004 && (d10 - 0.005).abs() <= 0.002;
    Ok((
        ok,
        format!(
            "l1(5) = {d5:.6} (0.021 +- 0.004), l1(10) = {d10:.6} (0.005 +- 0.002); signed difference {:.6}, {:.6}",
            rows[0].2, rows[1].2
        ),
    ))
}

fn c2() -> Result<(bool, String)> {
    let spec = gaussian();
    let grid = switching::default_grid(&spec);
    let vals = [5.0, 10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|&w| switching::theorem1_residual(&spec, w, &grid).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let decreasing = vals.windows(2).all(|w| w[1] < w[0]);
    let ratio = vals[4] / vals[0];
    Ok((
        decreasing && ratio < 0.01,
        format!("residuals {vals:.6?}; strictly decreasing {decreasing}; final/first = {ratio:.4} (< 0.01)"),
    ))
}

fn c3() -> Result<(bool, String)> {
    let spec = SwitchingSpec::compact_cosine(1.0)?;
    let grid: Vec<f64> = (1..=2500).map(|k| 0.5 + 2.5 * k as f64 / 2500.0).collect();
    let sup = |w: f64| -> Result<f64> {
        let d = switching::dual_switching(&spec, w, &grid)?;
        Ok(d.scaled_modulus().into_iter().fold(0.0, f64::max))
    };
    let (s100, s1000) = (sup(100.0)?, sup(1000.0)?);
    let peak = std::f64::consts::FRAC_PI_2;
    let ok = s100 > 0.02 * peak && s1000 < 0.2 * s100;
    Ok((
        ok,
        format!(
            "sup tail at OmegaT=100: {s100:.5} (> {:.5}); at 1000: {s1000:.5} (< {:.5})",
            0.02 * peak,
            0.2 * s100
        ),
    ))
}

/// The cavity used by the oracle criteria.
pub fn oracle_cavity() -> FieldModel {
    FieldModel::cavity(4.0, 5).expect("valid cavity")
}

fn c4() -> Result<(bool, String)> {
    let cav = oracle_cavity();
    let spec = gaussian();
    let w = 5.0;
    let pos = [1.3, 0.0, 0.0];
    let l = detector::excitation_probability(
        &DetectorConfig::amplitude(spec.clone(), w, 1.0).with_position(pos),
        &cav,
    )?;
    let dual = switching::dual_switching(&spec, w, &switching::default_grid(&spec))?;
    let lt = detector::excitation_probability_derivative(&DetectorConfig::dual(dual, 1.0).with_position(pos), &cav)?;
    let rel = (l - lt).abs() / l;
    Ok((
        rel <= 1e-6,
        format!("L = {l:.10e}, L_tilde = {lt:.10e}, relative {rel:.2e} (<= 1e-6)"),
    ))
}

fn c5() -> Result<(bool, String)> {
    let mk = FieldModel::minkowski(1e-4)?;
    let vals = [5.0, 10.0, 20.0]
        .iter()
        .map(|&w| detector::duality_residual_single(&gaussian(), w, &mk))
        .collect::<Result<Vec<_>>>()?;
    let decreasing = vals.windows(2).all(|w| w[1] < w[0]);
    Ok((
        vals[1] < 0.02 && decreasing,
        format!("residuals at OmegaT 5, 10, 20: {vals:.6?} (< 0.02 at 10, strictly decreasing: {decreasing})"),
    ))
}

fn gaussian_pair(w: f64, d: f64) -> Result<DetectorPair> {
    let a = DetectorConfig::derivative(gaussian(), w, 1.0);
    DetectorPair::new(a.clone(), a.with_position([d, 0.0, 0.0]))
}

fn c6a() -> Result<(bool, String)> {
    let cav = oracle_cavity();
    let a = DetectorConfig::derivative(gaussian(), 10.0, 1.0);
    let on_cavity = DetectorPair::new(
        a.clone().with_position([1.1, 0.0, 0.0]),
        a.with_position([2.7, 0.0, 0.0]),
    )?;
    let rc = harvesting::m_term_derivative_report(&on_cavity, &cav)?;
    let rm = harvesting::m_term_derivative_report(&gaussian_pair(10.0, 2.0)?, &FieldModel::minkowski(1e-4)?)?;
    let ok = rc.mismatch <= harvesting::BY_PARTS_TOL_CAVITY && rm.mismatch <= harvesting::BY_PARTS_TOL_MINKOWSKI;
    Ok((
        ok,
        format!(
            "cavity mismatch {:.2e} (remnant {:.3e}) <= 1e-6; Minkowski mismatch {:.2e} <= 1e-4",
            rc.mismatch,
            rc.remnant.norm(),
            rm.mismatch
        ),
    ))
}

fn c6b() -> Result<(bool, String)> {
    let mk = FieldModel::minkowski(1e-4)?;
    let pair = gaussian_pair(10.0, 2.0)?;
    let amp = harvesting::harvest(&pair, &mk, CouplingKind::Amplitude)?;
    let der = harvesting::harvest(&pair, &mk, CouplingKind::Derivative)?;
    let r = PairResidual::between(&amp, &der);
    Ok((
        r.max() < 0.05,
        format!(
            "dL_AA {:.4e}, dM {:.4e}, dN {:.4e}; max {:.4e} (< 0.05)",
            r.d_l_aa,
            r.d_m,
            r.d_negativity,
            r.max()
        ),
    ))
}

fn c7() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let laa = rng.gen_range(0.0..0.05);
        let lbb = rng.gen_range(0.0..0.05);
        let m = C64::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
        let (_, n) = harvesting::negativity(laa, lbb, m)?;
        let brute = harvesting::partial_transpose_negativity(laa, lbb, C64::new(0.0, 0.0), m);
        worst = worst.max((n - brute).abs());
    }
    let mut exact = true;
    for k in 0..100 {
        let l = 0.001 * k as f64;
        let m = C64::new(0.03, -0.02);
        let (_, n) = harvesting::negativity(l, l, m)?;
        exact &= n == (m.norm() - l).max(0.0);
    }
    Ok((
        worst <= 1e-10 && exact,
        format!("max |closed form - eigenvalue sum| = {worst:.2e} over 1000 states (<= 1e-10); identical-detector reduction exact: {exact}"),
    ))
}

fn c8() -> Result<(bool, String)> {
    let mk = FieldModel::minkowski(1e-4)?;
    let cav = oracle_cavity();
    let cos2 = SwitchingSpec::compact_cosine_sq(1.0)?;
    let cos = SwitchingSpec::compact_cosine(1.0)?;
    let mut notes = vec![];

    let cases = [
        (DetectorConfig::amplitude(gaussian(), 1.0, 1.0), &mk),
        (DetectorConfig::amplitude(gaussian(), 5.0, 1.0), &mk),
        (DetectorConfig::amplitude(cos2.clone(), 5.0, 1.0), &mk),
        (DetectorConfig::amplitude(cos.clone(), 5.0, 1.0), &mk),
        (DetectorConfig::derivative(cos2.clone(), 5.0, 1.0), &mk),
        (
            DetectorConfig::amplitude(gaussian(), 5.0, 1.0).with_position([1.3, 0.0, 0.0]),
            &cav,
        ),
    ];
    let mut gap: f64 = 0.0;
    for (det, field) in &cases {
        let r = match det.coupling_kind {
            CouplingKind::Amplitude => detector::excitation_probability_report(det, field)?,
            CouplingKind::Derivative => detector::excitation_probability_derivative_report(det, field)?,
        };
        gap = gap.max(r.routes.relative_gap);
    }
    let routes_ok = gap <= 1e-6;
    notes.push(format!("route gap {gap:.2e}"));

    let h = 1e-4;
    let mut fd: f64 = 0.0;
    for (model, a, b) in [
        (&mk, Event::at(0.0, 0.0), Event::new(0.7, [2.0, 0.0, 0.0])),
        (&mk, Event::at(0.3, 0.0), Event::new(-1.1, [0.5, 0.4, 0.0])),
        (&cav, Event::at(0.2, 1.1), Event::at(-0.6, 2.7)),
    ] {
        let w = |da: f64, db: f64| field::wightman(model, &Event::new(a.t + da, a.x), &Event::new(b.t + db, b.x));
        let num = (w(h, h)? - w(h, -h)? - w(-h, h)? + w(-h, -h)?) / (4.0 * h * h);
        let exact = field::wightman_dtau(model, &a, &b)?;
        fd = fd.max((num - exact).norm() / exact.norm());
    }
    let fd_ok = fd <= 1e-6;
    notes.push(format!("wightman_dtau vs differences {fd:.2e}"));

    let lam = 0.37;
    let base = DetectorConfig::amplitude(cos2.clone(), 5.0, 1.0);
    let l1 = detector::excitation_probability(&base, &mk)?;
    let mut scaled = base.clone();
    scaled.coupling = lam;
    let l2 = detector::excitation_probability(&scaled, &mk)?;
    let pair = DetectorPair::new(base.clone(), base.clone().with_position([2.0, 0.0, 0.0]))?;
    let spair = DetectorPair::new(scaled.clone(), scaled.with_position([2.0, 0.0, 0.0]))?;
    let m1 = harvesting::m_term(&pair, &mk)?;
    let m2 = harvesting::m_term(&spair, &mk)?;
    let lab1 = harvesting::lij(&pair, DetectorId::A, DetectorId::B, &mk)?;
    let lab2 = harvesting::lij(&spair, DetectorId::A, DetectorId::B, &mk)?;
    let l2s = lam * lam;
    let scale_err = ((l2 - l2s * l1).abs() / (l2s * l1))
        .max((m2 - m1 * l2s).norm() / (m1.norm() * l2s))
        .max((lab2 - lab1 * l2s).norm() / (lab1.norm() * l2s));
    let scale_ok = scale_err <= 1e-12;
    notes.push(format!("lambda^2 scaling {scale_err:.2e}"));

    let d = DetectorConfig::derivative(cos2, 5.0, 1.0);
    let spacelike = DetectorPair::new(d.clone(), d.with_position([2.0, 0.0, 0.0]))?;
    let r = harvesting::m_term_derivative_report(&spacelike, &mk)?;
    let remnant = r.remnant.norm() / r.direct.norm();
    let micro_ok = remnant < 1e-8;
    notes.push(format!("microcausality remnant {remnant:.2e}"));

    Ok((
        routes_ok && fd_ok && scale_ok && micro_ok,
        format!("{} (1e-6, 1e-6, 1e-12, 1e-8)", notes.join(", ")),
    ))
}

#[cfg(test)]
mod tests {
    #[test]
    fn ids_are_unique() {
        let ids = super::criterion_ids();
        let mut sorted = ids.clone();
        sorted.dedup();
        assert_eq!(ids.len(), sorted.len());
        assert!(super::run_one("nope").is_none());
    }
}
