//! Single-detector observables: excitation probabilities for amplitude and
//! derivative coupling, the final detector state and the large-gap duality
//! residual.

use crate::engine;
use crate::error::{Error, Result};
use crate::field::{self, FieldModel, PairKernel};
use crate::profile::Profile;
use crate::quad;
use crate::switching::{DualSwitching, SwitchingSpec};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Relative disagreement between the two routes that is reported as an error.
pub const ROUTE_TOLERANCE: f64 = 1e-4;
/// Above this probability the O(lambda^4) truncation is questionable.
pub const PERTURBATIVE_WARNING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingKind {
    Amplitude,
    Derivative,
}

impl std::str::FromStr for CouplingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "amplitude" | "amp" => Ok(CouplingKind::Amplitude),
            "derivative" | "der" => Ok(CouplingKind::Derivative),
            _ => Err(Error::InvalidArgument(format!("unknown coupling kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Smearing {
    Pointlike,
    /// Normalised Gaussian of standard deviation `width` in each direction.
    GaussianBall {
        width: f64,
    },
}

impl Smearing {
    pub(crate) fn variance(&self) -> f64 {
        match *self {
            Smearing::Pointlike => 0.0,
            Smearing::GaussianBall { width } => width * width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Switching {
    Spec(SwitchingSpec),
    Dual(DualSwitching),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Omega. For a dual switching it must equal the dual's gap.
    pub gap: f64,
    pub coupling: f64,
    pub switching: Switching,
    pub smearing: Smearing,
    pub position: [f64; 3],
    /// Time at which the switching is centred.
    pub center: f64,
    pub coupling_kind: CouplingKind,
}

impl DetectorConfig {
    /// Amplitude-coupled, pointlike, at the origin, centred at t = 0.
    pub fn amplitude(spec: SwitchingSpec, gap: f64, coupling: f64) -> Self {
        DetectorConfig {
            gap,
            coupling,
            switching: Switching::Spec(spec),
            smearing: Smearing::Pointlike,
            position: [0.0; 3],
            center: 0.0,
            coupling_kind: CouplingKind::Amplitude,
        }
    }

    /// Derivative-coupled with constant gap; the switching chi is used as
    /// chi_tilde = chi / Omega.
    pub fn derivative(spec: SwitchingSpec, gap: f64, coupling: f64) -> Self {
        DetectorConfig {
            coupling_kind: CouplingKind::Derivative,
            ..Self::amplitude(spec, gap, coupling)
        }
    }

    /// Derivative-coupled with a dual switching (time-dependent gap d theta/d tau).
    pub fn dual(dual: DualSwitching, coupling: f64) -> Self {
        DetectorConfig {
            gap: dual.gap_omega,
            coupling,
            switching: Switching::Dual(dual),
            smearing: Smearing::Pointlike,
            position: [0.0; 3],
            center: 0.0,
            coupling_kind: CouplingKind::Derivative,
        }
    }

    pub fn with_position(mut self, position: [f64; 3]) -> Self {
        self.position = position;
        self
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    pub fn with_smearing(mut self, smearing: Smearing) -> Self {
        self.smearing = smearing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap >= 0.0) || !self.gap.is_finite() {
            return Err(Error::InvalidArgument(format!("gap must be >= 0, got {}", self.gap)));
        }
        if !self.coupling.is_finite() || !self.center.is_finite() || self.position.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite detector parameter".into()));
        }
        if let Smearing::GaussianBall { width } = self.smearing {
            if !(width > 0.0) || !width.is_finite() {
                return Err(Error::InvalidArgument("smearing width must be > 0".into()));
            }
        }
        match (&self.switching, self.coupling_kind) {
            (Switching::Spec(s), CouplingKind::Amplitude) => s.validate(),
            (Switching::Spec(s), CouplingKind::Derivative) => {
                if self.gap == 0.0 {
                    return Err(Error::DivisionByZero("chi / Omega with Omega = 0"));
                }
                s.validate()
            }
            (Switching::Dual(d), CouplingKind::Derivative) => {
                if d.gap_omega != self.gap {
                    return Err(Error::InvalidArgument(
                        "gap differs from the dual switching's gap".into(),
                    ));
                }
                if d.grid.is_empty() {
                    return Err(Error::InvalidArgument("empty dual switching".into()));
                }
                Ok(())
            }
            (Switching::Dual(_), CouplingKind::Amplitude) => Err(Error::InvalidArgument(
                "a dual switching needs derivative coupling".into(),
            )),
        }
    }

    /// Time profile p(t) with the coupling constant left out.
    pub(crate) fn profile(&self) -> Profile {
        match (&self.switching, self.coupling_kind) {
            (Switching::Spec(s), CouplingKind::Amplitude) => Profile::amplitude(s, self.center, self.gap, 1.0),
            (Switching::Spec(s), CouplingKind::Derivative) => {
                Profile::amplitude(s, self.center, self.gap, 1.0 / self.gap)
            }
            (Switching::Dual(d), _) => Profile::dual(d, self.center, 1.0),
        }
    }
}

/// Final single-detector state, rows and columns ordered (ground, excited).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorState {
    pub p_excited: f64,
    pub matrix: [[f64; 2]; 2],
}

/// Both routes of a probability-like integral and the value reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteReport {
    pub value: C64,
    pub time_domain: C64,
    pub spectral: C64,
    pub relative_gap: f64,
}

/// Probability plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityReport {
    pub value: f64,
    pub routes: RouteReport,
    pub imaginary_residue: f64,
    pub warning: Option<String>,
}

pub(crate) fn extrapolate(eps: &[f64], vals: &[C64]) -> C64 {
    if vals.len() == 1 {
        vals[0]
    } else {
        quad::extrapolate_to_zero(eps, vals)
    }
}

/// L_ij without couplings, both routes, extrapolated in epsilon.
pub(crate) fn pair_integral(
    pi: &DetectorConfig,
    pj: &DetectorConfig,
    field: &FieldModel,
    what: &'static str,
) -> Result<RouteReport> {
    pi.validate()?;
    pj.validate()?;
    field.validate()?;
    if pi.coupling_kind != pj.coupling_kind {
        return Err(Error::InvalidArgument(
            "detectors of one pair must share the coupling kind".into(),
        ));
    }
    let sigma2 = pi.smearing.variance() + pj.smearing.variance();
    let kernel = PairKernel::new(field, &pi.position, &pj.position, sigma2)?;
    let weight = field::spectral_weight(field, &pi.position, &pj.position)?;
    let (p, q) = (pi.profile(), pj.profile());
    let derivative = pi.coupling_kind == CouplingKind::Derivative;
    let n = if derivative { 2 } else { 0 };
    let schedule = field.eps_schedule();
    let mut td = Vec::with_capacity(schedule.len());
    let mut sp = Vec::with_capacity(schedule.len());
    for &eps in &schedule {
        let t = if derivative && !engine::direct_derivative_ok(&p, &q, &kernel, eps) {
            engine::wightman_pair(&p.derivative()?, &q.derivative()?, &kernel, 0, eps)?
        } else {
            engine::wightman_pair(&p, &q, &kernel, n, eps)?
        };
        td.push(t);
        sp.push(engine::spectral_pair(&p, &q, &weight, sigma2, n, eps)?);
    }
    let a = extrapolate(&schedule, &td);
    let b = extrapolate(&schedule, &sp);
    let scale = a.norm().max(b.norm());
    let gap = if scale > 0.0 { (a - b).norm() / scale } else { 0.0 };
    if gap > ROUTE_TOLERANCE {
        return Err(Error::CrossValidation {
            what,
            time_domain: a.re,
            spectral: b.re,
        });
    }
    Ok(RouteReport {
        value: a,
        time_domain: a,
        spectral: b,
        relative_gap: gap,
    })
}

fn probability(det: &DetectorConfig, field: &FieldModel, what: &'static str) -> Result<ProbabilityReport> {
    det.validate()?;
    let lam2 = det.coupling * det.coupling;
    if lam2 == 0.0 {
        let z = C64::new(0.0, 0.0);
        return Ok(ProbabilityReport {
            value: 0.0,
            routes: RouteReport {
                value: z,
                time_domain: z,
                spectral: z,
                relative_gap: 0.0,
            },
            imaginary_residue: 0.0,
            warning: None,
        });
    }
    let r = pair_integral(det, det, field, what)?;
    let v = r.value * lam2;
    let residue = if v.norm() > 0.0 { v.im.abs() / v.norm() } else { 0.0 };
    if residue > 1e-6 {
        return Err(Error::Numerical {
            what: "probability has a non-negligible imaginary part",
            estimate: residue,
        });
    }
    if v.re < -ROUTE_TOLERANCE * v.norm() {
        return Err(Error::Numerical {
            what: "negative excitation probability",
            estimate: v.re,
        });
    }
    let value = v.re.max(0.0);
    let warning = (value > PERTURBATIVE_WARNING)
        .then(|| format!("probability {value:.3e} exceeds {PERTURBATIVE_WARNING}; O(lambda^4) terms may matter"));
    Ok(ProbabilityReport {
        value,
        routes: RouteReport {
            value: r.value * lam2,
            time_domain: r.time_domain * lam2,
            spectral: r.spectral * lam2,
            relative_gap: r.relative_gap,
        },
        imaginary_residue: residue,
        warning,
    })
}

/// L for an amplitude-coupled detector, with diagnostics.
pub fn excitation_probability_report(det: &DetectorConfig, field: &FieldModel) -> Result<ProbabilityReport> {
    if det.coupling_kind != CouplingKind::Amplitude {
        return Err(Error::InvalidArgument(
            "excitation_probability needs amplitude coupling".into(),
        ));
    }
    probability(det, field, "excitation probability")
}

/// L for an amplitude-coupled detector.
pub fn excitation_probability(det: &DetectorConfig, field: &FieldModel) -> Result<f64> {
    Ok(excitation_probability_report(det, field)?.value)
}

/// L_tilde for a derivative-coupled detector, with diagnostics.
pub fn excitation_probability_derivative_report(det: &DetectorConfig, field: &FieldModel) -> Result<ProbabilityReport> {
    if det.coupling_kind != CouplingKind::Derivative {
        return Err(Error::InvalidArgument(
            "excitation_probability_derivative needs derivative coupling".into(),
        ));
    }
    probability(det, field, "derivative excitation probability")
}

/// L_tilde for a derivative-coupled detector.
pub fn excitation_probability_derivative(det: &DetectorConfig, field: &FieldModel) -> Result<f64> {
    Ok(excitation_probability_derivative_report(det, field)?.value)
}

/// diag(1 - p, p).
pub fn final_state(p: f64) -> Result<DetectorState> {
    if !(p >= -1e-10 && p <= 1.0 + 1e-10) {
        return Err(Error::PerturbativeValidity(p));
    }
    let p = p.clamp(0.0, 1.0);
    Ok(DetectorState {
        p_excited: p,
        matrix: [[1.0 - p, 0.0], [0.0, p]],
    })
}

/// |L - L_tilde| / L between the amplitude detector (chi, Omega) and the
/// constant-gap derivative detector (chi / Omega, Omega), unit couplings.
pub fn duality_residual_single(spec: &SwitchingSpec, omega: f64, field: &FieldModel) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("Omega must be > 0, got {omega}")));
    }
    let l = excitation_probability(&DetectorConfig::amplitude(spec.clone(), omega, 1.0), field)?;
    if l < 1e-300 {
        return Err(Error::DegenerateProbability(l));
    }
    let lt = excitation_probability_derivative(&DetectorConfig::derivative(spec.clone(), omega, 1.0), field)?;
    Ok((l - lt).abs() / l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn final_state_bounds() {
        assert!(final_state(1.5).is_err());
        let s = final_state(0.25).unwrap();
        assert_eq!(s.matrix, [[0.75, 0.0], [0.0, 0.25]]);
    }

    #[test]
    fn dual_needs_derivative_coupling() {
        let spec = SwitchingSpec::gaussian(1.0).unwrap();
        let dual = crate::switching::dual_switching(&spec, 2.0, &[-1.0, 0.0, 1.0]).unwrap();
        let mut det = DetectorConfig::dual(dual, 1.0);
        det.coupling_kind = CouplingKind::Amplitude;
        assert!(det.validate().is_err());
    }
}
