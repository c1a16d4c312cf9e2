//! Complex time profiles p(t) entering detector integrals, e.g.
//! chi(t - c) e^{-i Omega t} for amplitude coupling. Gaussian profiles are
//! entire and can be evaluated off the real axis.

use crate::error::{Error, Result};
use crate::switching::{self, DualSwitching, SwitchingKind, SwitchingSpec};
use num_complex::Complex64 as C64;

/// Gaussian supports are truncated at this many standard deviations
/// (e^{-x^2/2} < 1e-19 beyond).
pub(crate) const GAUSS_CUT: f64 = 9.5;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

// Largest contour shift for dual transforms, in units of T.
const SHIFT_CAP: f64 = 25.0;
// Quadrature floors for dual transforms, relative to int |integrand|.
const BODY_FLOOR: f64 = 1e-15;
const CAPPED_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) enum Profile {
    /// scale chi(t - c) e^{-i Omega t}
    Modulated {
        spec: SwitchingSpec,
        center: f64,
        omega: f64,
        scale: f64,
    },
    /// d/dt of `Modulated`.
    ModulatedDerivative {
        spec: SwitchingSpec,
        center: f64,
        omega: f64,
        scale: f64,
    },
    /// scale e^{-i Omega c} f(t - c), with f = chi_tilde e^{-i theta}.
    Dual {
        dual: DualSwitching,
        center: f64,
        scale: f64,
    },
    /// d/dt of a sampled `Dual` without a source switching.
    DualDerivative {
        dual: DualSwitching,
        center: f64,
        scale: f64,
    },
}

fn gauss_chi(t: f64, z: C64) -> C64 {
    (-(z * z) / (2.0 * t * t)).exp() * FRAC_1_SQRT_2PI
}

impl Profile {
    pub fn amplitude(spec: &SwitchingSpec, center: f64, omega: f64, scale: f64) -> Self {
        Profile::Modulated {
            spec: spec.clone(),
            center,
            omega,
            scale,
        }
    }

    pub fn dual(dual: &DualSwitching, center: f64, scale: f64) -> Self {
        Profile::Dual {
            dual: dual.clone(),
            center,
            scale,
        }
    }

    pub fn derivative(&self) -> Result<Profile> {
        Ok(match self {
            Profile::Modulated {
                spec,
                center,
                omega,
                scale,
            } => Profile::ModulatedDerivative {
                spec: spec.clone(),
                center: *center,
                omega: *omega,
                scale: *scale,
            },
            Profile::Dual { dual, center, scale } => match &dual.source {
                Some(src) => Profile::Modulated {
                    spec: src.clone(),
                    center: *center,
                    omega: dual.gap_omega,
                    scale: *scale,
                },
                None => Profile::DualDerivative {
                    dual: dual.clone(),
                    center: *center,
                    scale: *scale,
                },
            },
            _ => {
                return Err(Error::InvalidArgument(
                    "second derivative of a profile is not supported".into(),
                ))
            }
        })
    }

    fn base_spec(&self) -> Option<&SwitchingSpec> {
        match self {
            Profile::Modulated { spec, .. } | Profile::ModulatedDerivative { spec, .. } => Some(spec),
            Profile::Dual { dual, .. } | Profile::DualDerivative { dual, .. } => dual.source.as_ref(),
        }
    }

    pub fn omega(&self) -> f64 {
        match self {
            Profile::Modulated { omega, .. } | Profile::ModulatedDerivative { omega, .. } => *omega,
            Profile::Dual { dual, .. } | Profile::DualDerivative { dual, .. } => dual.gap_omega,
        }
    }

    pub fn center(&self) -> f64 {
        match self {
            Profile::Modulated { center, .. }
            | Profile::ModulatedDerivative { center, .. }
            | Profile::Dual { center, .. }
            | Profile::DualDerivative { center, .. } => *center,
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            Profile::Modulated { scale, .. }
            | Profile::ModulatedDerivative { scale, .. }
            | Profile::Dual { scale, .. }
            | Profile::DualDerivative { scale, .. } => *scale,
        }
    }

    /// Smallest time scale of the profile (for step sizes).
    pub fn timescale(&self) -> f64 {
        match self.base_spec() {
            Some(s) => s.timescale,
            None => match self {
                Profile::Dual { dual, .. } | Profile::DualDerivative { dual, .. } => {
                    let g = &dual.grid;
                    (g[g.len() - 1] - g[0]).max(f64::MIN_POSITIVE)
                }
                _ => unreachable!(),
            },
        }
    }

    /// Whether the profile is entire (Gaussian family).
    pub fn is_analytic(&self) -> bool {
        self.base_spec().is_some_and(|s| s.kind == SwitchingKind::Gaussian)
            && !matches!(self, Profile::DualDerivative { .. })
    }

    /// Imaginary shift alpha such that p(t - i alpha) is a real Gaussian up to
    /// a constant phase. Zero for non-analytic profiles.
    pub fn natural_shift(&self) -> f64 {
        if self.is_analytic() {
            let t = self.timescale();
            self.omega() * t * t
        } else {
            0.0
        }
    }

    /// Real interval carrying the body of the profile. Beyond `hi` the
    /// profile equals the tail constant.
    pub fn support(&self) -> (f64, f64) {
        let c = self.center();
        match self.base_spec() {
            Some(s) => {
                let (a, b) = s.support(GAUSS_CUT);
                (a + c, b + c)
            }
            None => match self {
                Profile::Dual { dual, .. } | Profile::DualDerivative { dual, .. } => {
                    (dual.grid[0] + c, dual.grid[dual.grid.len() - 1] + c)
                }
                _ => unreachable!(),
            },
        }
    }

    /// Points where the profile is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let c = self.center();
        match self.base_spec() {
            Some(s) => s.breakpoints().into_iter().map(|b| b + c).collect(),
            None => {
                let (a, b) = self.support();
                vec![a, b]
            }
        }
    }

    /// Limit of the profile as t -> +inf (nonzero only for the exact dual).
    pub fn tail(&self) -> C64 {
        match self {
            Profile::Dual { dual, center, scale } => {
                C64::from_polar(*scale, -dual.gap_omega * center) * dual.tail_value()
            }
            _ => C64::new(0.0, 0.0),
        }
    }

    /// Highest angular frequency of the profile on the real axis.
    pub fn oscillation(&self) -> f64 {
        let base = self.omega();
        match self.base_spec().map(|s| s.kind) {
            Some(SwitchingKind::CompactCosine) | Some(SwitchingKind::CompactCosineSq) => {
                base + 2.0 * std::f64::consts::PI / self.timescale()
            }
            _ => base,
        }
    }

    /// p(t - i alpha). A nonzero alpha requires an analytic profile.
    pub fn at(&self, t: f64, alpha: f64) -> C64 {
        if alpha == 0.0 {
            return self.real(t);
        }
        let z = C64::new(t, -alpha);
        match self {
            Profile::Modulated {
                spec,
                center,
                omega,
                scale,
            } => {
                let w = z - center;
                gauss_chi(spec.timescale, w) * (C64::new(0.0, -omega) * z).exp() * scale
            }
            Profile::ModulatedDerivative {
                spec,
                center,
                omega,
                scale,
            } => {
                let tt = spec.timescale;
                let w = z - center;
                let chi = gauss_chi(tt, w);
                (-w / (tt * tt) - C64::new(0.0, *omega)) * chi * (C64::new(0.0, -omega) * z).exp() * scale
            }
            Profile::Dual { dual, center, scale } => {
                let src = dual.source.as_ref().expect("analytic dual has a source");
                let om = dual.gap_omega;
                switching::gaussian_f(src.timescale, om, z - center) * C64::from_polar(*scale, -om * center)
            }
            Profile::DualDerivative { .. } => unreachable!("sampled duals are not analytic"),
        }
    }

    /// Body of p(t - i alpha): the profile minus tail * H(t - hi).
    pub fn body_at(&self, t: f64, alpha: f64) -> C64 {
        let (lo, hi) = self.support();
        if t < lo || t > hi {
            return C64::new(0.0, 0.0);
        }
        self.at(t, alpha)
    }

    fn real(&self, t: f64) -> C64 {
        match self {
            Profile::Modulated {
                spec,
                center,
                omega,
                scale,
            } => C64::from_polar(scale * spec.eval(t - center), -omega * t),
            Profile::ModulatedDerivative {
                spec,
                center,
                omega,
                scale,
            } => {
                let x = t - center;
                C64::from_polar(*scale, -omega * t) * C64::new(spec.derivative(x), -omega * spec.eval(x))
            }
            Profile::Dual { dual, center, scale } => {
                C64::from_polar(*scale, -dual.gap_omega * center) * dual.profile(t - center)
            }
            Profile::DualDerivative { dual, center, scale } => {
                C64::from_polar(*scale, -dual.gap_omega * center) * dual.profile_derivative(t - center)
            }
        }
    }

    /// P(w) = int p(t) e^{-i w t} dt, with Abel regularisation of the tail.
    pub fn transform(&self, w: f64) -> Result<C64> {
        match self {
            Profile::Modulated {
                spec,
                center,
                omega,
                scale,
            } => {
                let nu = omega + w;
                Ok(switching::fourier_transform(spec, nu)? * C64::from_polar(*scale, -nu * center))
            }
            Profile::ModulatedDerivative { .. } => {
                let base = Profile::Modulated {
                    spec: self.base_spec().cloned().expect("modulated"),
                    center: self.center(),
                    omega: self.omega(),
                    scale: self.scale(),
                };
                Ok(base.transform(w)? * C64::new(0.0, w))
            }
            Profile::Dual { .. } => self.dual_transform(w),
            Profile::DualDerivative { .. } => {
                let (lo, hi) = self.support();
                body_transform(self, w, lo, hi, 0.0, BODY_FLOOR)
            }
        }
    }

    // Body by quadrature (on the shifted line for the Gaussian source),
    // tail c e^{-i w z1} / (i w).
    fn dual_transform(&self, w: f64) -> Result<C64> {
        if w <= 0.0 {
            return Err(Error::InvalidArgument("transform of a dual profile needs w > 0".into()));
        }
        let (lo, hi) = self.support();
        // The shift is capped so that e^{-z^2/2T^2} stays finite. Past the cap
        // |P| < e^{-312}, and the profile loses digits that far off the axis,
        // so the round-off floor is relaxed there.
        let (alpha, floor) = if self.is_analytic() {
            let t = self.timescale();
            let natural = (self.omega() + w) * t * t;
            if natural > SHIFT_CAP * t {
                (SHIFT_CAP * t, CAPPED_FLOOR)
            } else {
                (natural, BODY_FLOOR)
            }
        } else {
            (0.0, BODY_FLOOR)
        };
        // e^{-w alpha} is subnormal past this point and the integrand is
        // rounding noise; |P|^2 underflows there regardless.
        if w * alpha > 700.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let body = body_transform(self, w, lo, hi, alpha, floor)?;
        let z1 = C64::new(hi, -alpha);
        let tail = self.tail() * (C64::new(0.0, -w) * z1).exp() / C64::new(0.0, w);
        Ok(body + tail)
    }
}

fn body_transform(p: &Profile, w: f64, lo: f64, hi: f64, alpha: f64, floor: f64) -> Result<C64> {
    let osc = if alpha > 0.0 { 0.0 } else { p.oscillation() + w };
    let max_len = if osc > 0.0 {
        std::f64::consts::PI / osc
    } else {
        f64::INFINITY
    };
    let panel = max_len.min(p.timescale() / 4.0);
    let n = ((hi - lo) / panel).ceil().max(1.0) as usize;
    let mut pts: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    pts.extend(p.breakpoints().into_iter().filter(|&b| b > lo && b < hi));
    pts.sort_by(f64::total_cmp);
    let f = |t: f64| p.at(t, alpha) * (C64::new(0.0, -w) * C64::new(t, -alpha)).exp();
    Ok(crate::quad::adaptive_scaled(f, &pts, 1e-12, floor)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_gaussian_profile_is_real_up_to_phase() {
        let spec = SwitchingSpec::gaussian(1.0).unwrap();
        let p = Profile::amplitude(&spec, 0.3, 5.0, 1.0);
        let a = p.natural_shift();
        let ph = p.at(0.3, a) / p.at(0.3, a).norm();
        for &t in &[-2.0, 0.0, 1.7] {
            let v = p.at(t, a);
            assert!((v / v.norm() - ph).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let spec = SwitchingSpec::compact_cosine_sq(1.0).unwrap();
        let p = Profile::amplitude(&spec, 0.1, 7.0, 2.0);
        let d = p.derivative().unwrap();
        let h = 1e-6;
        let t = 0.23;
        let fd = (p.at(t + h, 0.0) - p.at(t - h, 0.0)) / (2.0 * h);
        assert!((fd - d.at(t, 0.0)).norm() < 1e-6);
    }
}
