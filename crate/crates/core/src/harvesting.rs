//! Two detectors: L_ij entries, the non-local M term, negativity and the
//! joint 4x4 state.

use crate::detector::{self, CouplingKind, DetectorConfig, Smearing, Switching};
use crate::engine;
use crate::error::{Error, Result};
use crate::field::{self, FieldModel, PairKernel};
use crate::switching::SwitchingKind;
use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Gaussian switchings are cut at this many standard deviations when
/// deciding whether two interactions are spacelike separated.
pub const CAUSAL_CUT: f64 = 6.0;
/// Relative tolerance of direct vs integrated-by-parts M_tilde (cavity).
pub const BY_PARTS_TOL_CAVITY: f64 = 1e-6;
/// Same for the Minkowski vacuum (after epsilon extrapolation).
pub const BY_PARTS_TOL_MINKOWSKI: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorId {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorPair {
    pub det_a: DetectorConfig,
    pub det_b: DetectorConfig,
}

impl DetectorPair {
    pub fn new(det_a: DetectorConfig, det_b: DetectorConfig) -> Result<Self> {
        let p = DetectorPair { det_a, det_b };
        p.validate()?;
        Ok(p)
    }

    pub fn separation(&self) -> f64 {
        field::distance(&self.det_a.position, &self.det_b.position)
    }

    pub fn validate(&self) -> Result<()> {
        self.det_a.validate()?;
        self.det_b.validate()?;
        let d = self.separation();
        let widths: f64 = [self.det_a.smearing, self.det_b.smearing]
            .iter()
            .map(|s| match s {
                Smearing::Pointlike => 0.0,
                Smearing::GaussianBall { width } => *width,
            })
            .sum();
        if d == 0.0 {
            return Err(Error::InvalidArgument("detectors must be at distinct positions".into()));
        }
        if widths > 0.0 && d <= 5.0 * widths {
            return Err(Error::InvalidArgument(format!(
                "smearings overlap: separation {d} <= 5 x (sigma_A + sigma_B) = {}",
                5.0 * widths
            )));
        }
        Ok(())
    }

    fn get(&self, id: DetectorId) -> &DetectorConfig {
        match id {
            DetectorId::A => &self.det_a,
            DetectorId::B => &self.det_b,
        }
    }

    fn with_kind(&self, kind: CouplingKind) -> Result<DetectorPair> {
        let conv = |d: &DetectorConfig| -> Result<DetectorConfig> {
            let mut d = d.clone();
            if kind == CouplingKind::Amplitude && matches!(d.switching, Switching::Dual(_)) {
                return Err(Error::InvalidArgument(
                    "dual switchings need derivative coupling".into(),
                ));
            }
            d.coupling_kind = kind;
            Ok(d)
        };
        Ok(DetectorPair {
            det_a: conv(&self.det_a)?,
            det_b: conv(&self.det_b)?,
        })
    }
}

/// Entries of the joint state, rows and columns ordered
/// |g_A g_B>, |g_A e_B>, |e_A g_B>, |e_A e_B>.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestResult {
    pub kind: CouplingKind,
    pub l_aa: f64,
    pub l_bb: f64,
    pub l_ab: C64,
    pub m: C64,
    pub v_score: f64,
    pub negativity: f64,
    pub rho_4x4: [[C64; 4]; 4],
    /// Interactions are spacelike separated (supports cut at +-6 sigma).
    pub spacelike: bool,
    /// Switching mass outside the cut used for `spacelike`.
    pub truncation_bound: f64,
    /// Direct vs integrated-by-parts diagnostics (derivative coupling).
    pub m_check: Option<MTildeReport>,
}

fn lij_raw(pair: &DetectorPair, i: DetectorId, j: DetectorId, field: &FieldModel) -> Result<C64> {
    let (di, dj) = (pair.get(i), pair.get(j));
    let lam = di.coupling * dj.coupling;
    if lam == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(detector::pair_integral(di, dj, field, "L_ij")?.value * lam)
}

/// L_ij with detector i at the unprimed event and j at the primed one.
pub fn lij(pair: &DetectorPair, i: DetectorId, j: DetectorId, field: &FieldModel) -> Result<C64> {
    pair.validate()?;
    lij_raw(pair, i, j, field)
}

fn kernel_for(pair: &DetectorPair, field: &FieldModel) -> Result<PairKernel> {
    let sigma2 = pair.det_a.smearing.variance() + pair.det_b.smearing.variance();
    PairKernel::new(field, &pair.det_a.position, &pair.det_b.position, sigma2)
}

/// M for amplitude coupling: -lambda_A lambda_B int int conj(p_A) conj(p_B) G_F.
pub fn m_term(pair: &DetectorPair, field: &FieldModel) -> Result<C64> {
    pair.validate()?;
    if pair.det_a.coupling_kind != CouplingKind::Amplitude || pair.det_b.coupling_kind != CouplingKind::Amplitude {
        return Err(Error::InvalidArgument("m_term needs amplitude coupling".into()));
    }
    let lam = pair.det_a.coupling * pair.det_b.coupling;
    if lam == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let kernel = kernel_for(pair, field)?;
    let (pa, pb) = (pair.det_a.profile(), pair.det_b.profile());
    let schedule = field.eps_schedule();
    let vals = schedule
        .iter()
        .map(|&e| engine::feynman_pair(&pa, &pb, &kernel, 0, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(-detector::extrapolate(&schedule, &vals) * lam)
}

/// The two evaluations of M_tilde and the equal-time remnant separating them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MTildeReport {
    /// With the time-ordered derivative kernel -W''(|s|).
    pub direct: C64,
    /// int int d conj(p_A) d conj(p_B) G_F, derivatives on the profiles.
    pub by_parts: C64,
    /// direct - by_parts predicted from the equal-time commutator:
    /// -2 lambda_A lambda_B W'(0) int conj(p_A) conj(p_B) dt.
    pub remnant: C64,
    /// |direct - by_parts - remnant| over the larger of |direct|, |by_parts|.
    pub mismatch: f64,
}

/// M_tilde, checked against its integrated-by-parts form.
pub fn m_term_derivative_report(pair: &DetectorPair, field: &FieldModel) -> Result<MTildeReport> {
    pair.validate()?;
    if pair.det_a.coupling_kind != CouplingKind::Derivative || pair.det_b.coupling_kind != CouplingKind::Derivative {
        return Err(Error::InvalidArgument(
            "m_term_derivative needs derivative coupling".into(),
        ));
    }
    let lam = pair.det_a.coupling * pair.det_b.coupling;
    let z = C64::new(0.0, 0.0);
    if lam == 0.0 {
        return Ok(MTildeReport {
            direct: z,
            by_parts: z,
            remnant: z,
            mismatch: 0.0,
        });
    }
    let kernel = kernel_for(pair, field)?;
    let (pa, pb) = (pair.det_a.profile(), pair.det_b.profile());
    let (da, db) = (pa.derivative()?, pb.derivative()?);
    let overlap = engine::equal_time_overlap(&pa, &pb)?;
    let schedule = field.eps_schedule();
    let (mut dir, mut ibp, mut rem) = (vec![], vec![], vec![]);
    for &e in &schedule {
        dir.push(engine::feynman_pair(&pa, &pb, &kernel, 2, e)?);
        ibp.push(engine::feynman_pair(&da, &db, &kernel, 0, e)?);
        rem.push(kernel.eval(C64::new(0.0, -e), 1) * overlap * 2.0);
    }
    let direct = -detector::extrapolate(&schedule, &dir) * lam;
    let by_parts = -detector::extrapolate(&schedule, &ibp) * lam;
    let remnant = -detector::extrapolate(&schedule, &rem) * lam;
    let scale = direct.norm().max(by_parts.norm());
    let mismatch = if scale > 0.0 {
        (direct - by_parts - remnant).norm() / scale
    } else {
        0.0
    };
    let tol = if field.is_cavity() {
        BY_PARTS_TOL_CAVITY
    } else {
        BY_PARTS_TOL_MINKOWSKI
    };
    if mismatch > tol {
        return Err(Error::AppendixConsistency {
            direct: format!("{direct}"),
            by_parts: format!("{by_parts}"),
            remnant: format!("{remnant}"),
        });
    }
    Ok(MTildeReport {
        direct,
        by_parts,
        remnant,
        mismatch,
    })
}

/// M_tilde for derivative coupling (the direct evaluation, certified
/// against the integrated-by-parts form).
pub fn m_term_derivative(pair: &DetectorPair, field: &FieldModel) -> Result<C64> {
    Ok(m_term_derivative_report(pair, field)?.direct)
}

/// (V, max{0, V}) with V = sqrt(|M|^2 + ((L_AA - L_BB)/2)^2) - (L_AA + L_BB)/2.
pub fn negativity(l_aa: f64, l_bb: f64, m: C64) -> Result<(f64, f64)> {
    if !(l_aa >= 0.0) || !(l_bb >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "L_AA and L_BB must be >= 0, got {l_aa}, {l_bb}"
        )));
    }
    let half = 0.5 * (l_aa - l_bb);
    let v = m.norm().hypot(half) - 0.5 * (l_aa + l_bb);
    Ok((v, v.max(0.0)))
}

/// The joint state matrix.
pub fn density_matrix(l_aa: f64, l_bb: f64, l_ab: C64, m: C64) -> [[C64; 4]; 4] {
    let z = C64::new(0.0, 0.0);
    let r = |x: f64| C64::new(x, 0.0);
    [
        [r(1.0 - l_aa - l_bb), z, z, m.conj()],
        [z, r(l_bb), l_ab.conj(), z],
        [z, l_ab, r(l_aa), z],
        [m, z, z, z],
    ]
}

/// Sum of |negative eigenvalues| of the partial transpose (on A) of
/// [`density_matrix`], by direct diagonalisation.
pub fn partial_transpose_negativity(l_aa: f64, l_bb: f64, l_ab: C64, m: C64) -> f64 {
    let rho = density_matrix(l_aa, l_bb, l_ab, m);
    // index = 2 a + b; (a b, a' b') -> (a' b, a b')
    let pt = Matrix4::from_fn(|r, c| {
        let (a, b) = (r / 2, r % 2);
        let (a2, b2) = (c / 2, c % 2);
        rho[2 * a2 + b][2 * a + b2]
    });
    let eig = pt.symmetric_eigenvalues();
    eig.iter().filter(|&&e| e < 0.0).map(|e| -e).sum()
}

/// Temporal support of a detector for causal bookkeeping, and the
/// switching mass lost outside it. None if the profile never switches off.
fn causal_support(d: &DetectorConfig) -> Option<((f64, f64), f64)> {
    let spec = match &d.switching {
        Switching::Spec(s) => s,
        Switching::Dual(_) => return None,
    };
    let (lo, hi, lost) = match spec.kind {
        SwitchingKind::Gaussian => {
            let t = spec.timescale;
            // erfc(6 / sqrt 2)
            (-CAUSAL_CUT * t, CAUSAL_CUT * t, 1.973_175_400_848_8e-9)
        }
        _ => {
            let (a, b) = spec.support(0.0);
            (a, b, 0.0)
        }
    };
    Some(((lo + d.center, hi + d.center), lost))
}

fn spacelike(pair: &DetectorPair) -> (bool, f64) {
    match (causal_support(&pair.det_a), causal_support(&pair.det_b)) {
        (Some(((la, ha), ea)), Some(((lb, hb), eb))) => {
            let reach = (ha - lb).max(hb - la);
            let margin: f64 = [pair.det_a.smearing, pair.det_b.smearing]
                .iter()
                .map(|s| match s {
                    Smearing::Pointlike => 0.0,
                    Smearing::GaussianBall { width } => CAUSAL_CUT * width,
                })
                .sum();
            (pair.separation() > reach + margin, ea + eb)
        }
        _ => (false, f64::INFINITY),
    }
}

/// All entries of the joint state for the given coupling kind. Constant-gap
/// derivative coupling uses chi / Omega.
pub fn harvest(pair: &DetectorPair, field: &FieldModel, kind: CouplingKind) -> Result<HarvestResult> {
    pair.validate()?;
    let pair = pair.with_kind(kind)?;
    let l_aa = lij_raw(&pair, DetectorId::A, DetectorId::A, field)?;
    let l_bb = lij_raw(&pair, DetectorId::B, DetectorId::B, field)?;
    let l_ab = lij_raw(&pair, DetectorId::A, DetectorId::B, field)?;
    let (m, m_check) = match kind {
        CouplingKind::Amplitude => (m_term(&pair, field)?, None),
        CouplingKind::Derivative => {
            let r = m_term_derivative_report(&pair, field)?;
            (r.direct, Some(r))
        }
    };
    let (l_aa, l_bb) = (l_aa.re.max(0.0), l_bb.re.max(0.0));
    let (v_score, negativity) = negativity(l_aa, l_bb, m)?;
    let (spacelike, truncation_bound) = spacelike(&pair);
    Ok(HarvestResult {
        kind,
        l_aa,
        l_bb,
        l_ab,
        m,
        v_score,
        negativity,
        rho_4x4: density_matrix(l_aa, l_bb, l_ab, m),
        spacelike,
        truncation_bound,
        m_check,
    })
}

/// Relative differences between amplitude and chi/Omega derivative harvesting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairResidual {
    pub d_l_aa: f64,
    pub d_l_bb: f64,
    pub d_m: f64,
    /// Relative when the amplitude negativity is nonzero, absolute otherwise.
    pub d_negativity: f64,
}

impl PairResidual {
    /// Residuals of `der` relative to `amp`.
    pub fn between(amp: &HarvestResult, der: &HarvestResult) -> Self {
        let d_m = if amp.m.norm() > 0.0 {
            (der.m - amp.m).norm() / amp.m.norm()
        } else {
            der.m.norm()
        };
        PairResidual {
            d_l_aa: rel(amp.l_aa, der.l_aa),
            d_l_bb: rel(amp.l_bb, der.l_bb),
            d_m,
            d_negativity: rel(amp.negativity, der.negativity),
        }
    }

    pub fn max(&self) -> f64 {
        self.d_l_aa.max(self.d_l_bb).max(self.d_m).max(self.d_negativity)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a != 0.0 {
        (b - a).abs() / a.abs()
    } else {
        (b - a).abs()
    }
}

/// Sets both gaps to `omega` and compares amplitude coupling with
/// constant-gap derivative coupling (chi / Omega).
pub fn duality_residual_pair(pair: &DetectorPair, omega: f64, field: &FieldModel) -> Result<PairResidual> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("Omega must be > 0, got {omega}")));
    }
    let mut p = pair.clone();
    p.det_a.gap = omega;
    p.det_b.gap = omega;
    let amp = harvest(&p, field, CouplingKind::Amplitude)?;
    let der = harvest(&p, field, CouplingKind::Derivative)?;
    Ok(PairResidual::between(&amp, &der))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_detector_reduction() {
        let m = C64::new(0.003, -0.004);
        let (v, n) = negativity(0.002, 0.002, m).unwrap();
        assert!((v - (0.005 - 0.002)).abs() < 1e-15);
        assert_eq!(n, v);
    }

    #[test]
    fn oracle_sees_only_the_coherence_block_without_l_ab() {
        let m = C64::new(0.01, 0.02);
        let (_, n) = negativity(0.004, 0.001, m).unwrap();
        let o = partial_transpose_negativity(0.004, 0.001, C64::new(0.0, 0.0), m);
        assert!((n - o).abs() < 1e-14);
    }
}
