//! Field backgrounds: the massless 3+1 Minkowski vacuum with an i-epsilon
//! regulator, and a 1+1 Dirichlet cavity truncated to finitely many modes.

use crate::error::{Error, Result};
use crate::faddeeva;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const FOUR_PI2: f64 = 4.0 * PI * PI;

/// A spacetime event (t, x) in units with c = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: [f64; 3],
}

impl Event {
    pub fn new(t: f64, x: [f64; 3]) -> Self {
        Event { t, x }
    }

    pub fn at(t: f64, x: f64) -> Self {
        Event { t, x: [x, 0.0, 0.0] }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldModel {
    /// Massless vacuum; `epsilon` is the smallest regulator of the schedule.
    MinkowskiVacuum3p1 { mass: f64, epsilon: f64 },
    /// Dirichlet modes sin(k pi x / L) e^{-i w_k t} / sqrt(w_k L), w_k = k pi / L,
    /// k = 1..mode_count. Only x[0] is used.
    FiniteModeCavity { cavity_length: f64, mode_count: usize },
}

impl FieldModel {
    pub fn minkowski(epsilon: f64) -> Result<Self> {
        let m = FieldModel::MinkowskiVacuum3p1 { mass: 0.0, epsilon };
        m.validate()?;
        Ok(m)
    }

    pub fn cavity(cavity_length: f64, mode_count: usize) -> Result<Self> {
        let m = FieldModel::FiniteModeCavity {
            cavity_length,
            mode_count,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldModel::MinkowskiVacuum3p1 { mass, epsilon } => {
                if mass != 0.0 {
                    return Err(Error::InvalidArgument("only the massless field is supported".into()));
                }
                if !(epsilon > 0.0) || !epsilon.is_finite() {
                    return Err(Error::InvalidRegulator(format!("epsilon must be > 0, got {epsilon}")));
                }
            }
            FieldModel::FiniteModeCavity {
                cavity_length,
                mode_count,
            } => {
                if !(cavity_length > 0.0) || !cavity_length.is_finite() {
                    return Err(Error::InvalidArgument("cavity length must be > 0".into()));
                }
                if mode_count == 0 {
                    return Err(Error::InvalidArgument("cavity needs at least one mode".into()));
                }
            }
        }
        Ok(())
    }

    /// Regulators used for integrals, largest first; extrapolated to zero.
    /// The cavity needs none and returns a single zero.
    pub fn eps_schedule(&self) -> Vec<f64> {
        match *self {
            FieldModel::MinkowskiVacuum3p1 { epsilon, .. } => vec![100.0 * epsilon, 10.0 * epsilon, epsilon],
            FieldModel::FiniteModeCavity { .. } => vec![0.0],
        }
    }

    pub fn is_cavity(&self) -> bool {
        matches!(self, FieldModel::FiniteModeCavity { .. })
    }

    /// Mode frequencies w_k (cavity only).
    pub fn mode_frequencies(&self) -> Vec<f64> {
        match *self {
            FieldModel::FiniteModeCavity {
                cavity_length,
                mode_count,
            } => (1..=mode_count).map(|k| k as f64 * PI / cavity_length).collect(),
            _ => vec![],
        }
    }
}

/// Spectral description of W between two static points.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralWeight {
    /// rho(w, d) = sin(w d) / (4 pi^2 d), or w / (4 pi^2) at d = 0.
    Continuum { separation: f64 },
    /// Delta weights (frequency, weight).
    Atoms(Vec<(f64, f64)>),
}

impl SpectralWeight {
    /// Continuum density at w (zero for atoms).
    pub fn density(&self, w: f64) -> f64 {
        match self {
            SpectralWeight::Continuum { separation } => continuum_density(w, *separation),
            SpectralWeight::Atoms(_) => 0.0,
        }
    }

    pub fn atom_count(&self) -> usize {
        match self {
            SpectralWeight::Atoms(a) => a.len(),
            SpectralWeight::Continuum { .. } => 0,
        }
    }
}

pub(crate) fn continuum_density(w: f64, d: f64) -> f64 {
    if d * w.abs() < 1e-6 {
        // sin(wd)/d with its series
        w * (1.0 - (w * d).powi(2) / 6.0) / FOUR_PI2
    } else {
        (w * d).sin() / (FOUR_PI2 * d)
    }
}

/// Spectral weight between static points `xa` and `xb`.
pub fn spectral_weight(model: &FieldModel, xa: &[f64; 3], xb: &[f64; 3]) -> Result<SpectralWeight> {
    model.validate()?;
    Ok(match *model {
        FieldModel::MinkowskiVacuum3p1 { .. } => SpectralWeight::Continuum {
            separation: distance(xa, xb),
        },
        FieldModel::FiniteModeCavity { cavity_length, .. } => SpectralWeight::Atoms(
            model
                .mode_frequencies()
                .iter()
                .enumerate()
                .map(|(i, &w)| {
                    let k = (i + 1) as f64;
                    let l = cavity_length;
                    (w, (k * PI * xa[0] / l).sin() * (k * PI * xb[0] / l).sin() / (w * l))
                })
                .collect(),
        ),
    })
}

/// Stationary kernel W(s) between two static detectors, with optional
/// Gaussian smearing (total variance sigma_a^2 + sigma_b^2). Evaluated at
/// complex s; the caller folds the regulator into Im s.
#[derive(Debug, Clone)]
pub(crate) enum PairKernel {
    Minkowski { d: f64, sigma2: f64 },
    Cavity { atoms: Vec<(f64, f64)> },
}

/// One term c (s - p)^{-m} of a pole expansion in s.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PoleTerm {
    pub coef: f64,
    pub center: f64,
    pub order: i32,
}

impl PairKernel {
    pub fn new(model: &FieldModel, xa: &[f64; 3], xb: &[f64; 3], sigma2: f64) -> Result<Self> {
        Ok(match spectral_weight(model, xa, xb)? {
            SpectralWeight::Continuum { separation } => PairKernel::Minkowski { d: separation, sigma2 },
            SpectralWeight::Atoms(atoms) => PairKernel::Cavity {
                atoms: atoms
                    .into_iter()
                    .map(|(w, c)| (w, c * (-0.5 * w * w * sigma2).exp()))
                    .collect(),
            },
        })
    }

    /// n-th derivative of W with respect to s, n <= 2, at complex s.
    pub fn eval(&self, s: C64, n: usize) -> C64 {
        match self {
            PairKernel::Cavity { atoms } => {
                let mut acc = C64::new(0.0, 0.0);
                for &(w, c) in atoms {
                    acc += C64::new(0.0, -w).powu(n as u32) * (C64::new(0.0, -w) * s).exp() * c;
                }
                acc
            }
            PairKernel::Minkowski { d, sigma2 } => {
                if *sigma2 > 0.0 {
                    smeared_minkowski(s, *d, *sigma2, n)
                } else {
                    let mut acc = C64::new(0.0, 0.0);
                    for p in self.poles(n) {
                        acc += (s - p.center).powi(-p.order) * p.coef;
                    }
                    acc
                }
            }
        }
    }

    /// Pole expansion of the n-th derivative (pointlike Minkowski only).
    pub fn poles(&self, n: usize) -> Vec<PoleTerm> {
        match self {
            PairKernel::Minkowski { d, sigma2 } if *sigma2 == 0.0 => {
                let fact = |k: usize| (1..=k).product::<usize>() as f64;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                if *d == 0.0 {
                    // -(1/4pi^2) s^{-2}
                    vec![PoleTerm {
                        coef: -sign * fact(n + 1) / FOUR_PI2,
                        center: 0.0,
                        order: (n + 2) as i32,
                    }]
                } else {
                    // -(1/(8 pi^2 d)) [ (s-d)^{-1} - (s+d)^{-1} ]
                    let c = -sign * fact(n) / (2.0 * FOUR_PI2 * d);
                    vec![
                        PoleTerm {
                            coef: c,
                            center: *d,
                            order: (n + 1) as i32,
                        },
                        PoleTerm {
                            coef: -c,
                            center: -*d,
                            order: (n + 1) as i32,
                        },
                    ]
                }
            }
            _ => vec![],
        }
    }
}

// J_m(b) = int_0^inf w^m e^{-a w^2} e^{-i w b} dw, a = sigma2/2, via
// J_0(b) = (sqrt(pi) / (2 sqrt a)) w(z), z = -b / (2 sqrt a), dz/db = -1/(2 sqrt a),
// and J_m = (i d/db)^m J_0.
fn gaussian_moments(b: C64, sigma2: f64, upto: usize) -> [C64; 5] {
    let ra = (0.5 * sigma2).sqrt();
    let z = -b / (2.0 * ra);
    let wd = faddeeva::w_derivs(z);
    let mut out = [C64::new(0.0, 0.0); 5];
    let base = PI.sqrt() / (2.0 * ra);
    let dz = -1.0 / (2.0 * ra);
    let i = C64::new(0.0, 1.0);
    let mut factor = C64::new(base, 0.0);
    for m in 0..=upto.min(4) {
        out[m] = factor * wd[m];
        factor *= i * dz;
    }
    out
}

fn smeared_minkowski(s: C64, d: f64, sigma2: f64, n: usize) -> C64 {
    // d^n/ds^n brings (-i w)^n under the integral.
    let mi_n = C64::new(0.0, -1.0).powu(n as u32);
    if d == 0.0 {
        let j = gaussian_moments(s, sigma2, n + 1);
        mi_n * j[n + 1] / FOUR_PI2
    } else {
        let jm = gaussian_moments(s - d, sigma2, n);
        let jp = gaussian_moments(s + d, sigma2, n);
        // sin(w d) = (e^{i w d} - e^{-i w d}) / 2i
        mi_n * (jm[n] - jp[n]) / (C64::new(0.0, 2.0) * FOUR_PI2 * d)
    }
}

fn check_events(a: &Event, b: &Event) -> Result<()> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument("non-finite event".into()));
    }
    Ok(())
}

fn pointwise(model: &FieldModel, a: &Event, b: &Event, n: usize) -> Result<C64> {
    model.validate()?;
    check_events(a, b)?;
    let s = a.t - b.t;
    match *model {
        FieldModel::MinkowskiVacuum3p1 { epsilon, .. } => {
            let k = PairKernel::new(model, &a.x, &b.x, 0.0)?;
            Ok(k.eval(C64::new(s, -epsilon), n))
        }
        FieldModel::FiniteModeCavity { .. } => {
            let k = PairKernel::new(model, &a.x, &b.x, 0.0)?;
            Ok(k.eval(C64::new(s, 0.0), n))
        }
    }
}

/// Wightman function W(a, b) = <phi(a) phi(b)>.
pub fn wightman(model: &FieldModel, a: &Event, b: &Event) -> Result<C64> {
    pointwise(model, a, b, 0)
}

/// d/dt_a d/dt_b W(a, b) = -W''(t_a - t_b) for static points.
pub fn wightman_dtau(model: &FieldModel, a: &Event, b: &Event) -> Result<C64> {
    Ok(-pointwise(model, a, b, 2)?)
}

/// Time-ordered two-point function.
pub fn feynman(model: &FieldModel, a: &Event, b: &Event) -> Result<C64> {
    if a.t >= b.t {
        wightman(model, a, b)
    } else {
        wightman(model, b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_expansion_matches_closed_form() {
        let k = PairKernel::Minkowski { d: 1.3, sigma2: 0.0 };
        let s = C64::new(0.7, -0.01);
        let d2 = 1.3f64 * 1.3;
        let den = s * s - d2;
        let w0 = -1.0 / (FOUR_PI2 * den);
        let w1 = 2.0 * s / (FOUR_PI2 * den * den);
        assert!((k.eval(s, 0) - w0).norm() < 1e-14 * w0.norm());
        assert!((k.eval(s, 1) - w1).norm() < 1e-14 * w1.norm());
        // W'' = (2/(4pi^2)) (-(s^2-d^2) + 4 s^2) / (s^2-d^2)^3 ... compare with -W_tilde form
        let wt = (3.0 * s * s + d2) / (2.0 * PI * PI * den * den * den);
        assert!((-k.eval(s, 2) - wt).norm() < 1e-13 * wt.norm());
    }

    #[test]
    fn smeared_kernel_approaches_pointlike_for_small_width() {
        for &d in &[0.0, 1.5] {
            let sm = PairKernel::Minkowski { d, sigma2: 1e-8 };
            let pt = PairKernel::Minkowski { d, sigma2: 0.0 };
            let s = C64::new(0.4, -0.3);
            for n in 0..3 {
                let (a, b) = (sm.eval(s, n), pt.eval(s, n));
                assert!((a - b).norm() < 1e-6 * b.norm(), "d={d} n={n} {a} {b}");
            }
        }
    }
}
