//! Switching functions, the lower-incomplete Fourier transform f_Omega, the
//! dual switching (chi_tilde, theta) and the distance metrics used to judge
//! how close Omega * chi_tilde is to chi.

use crate::error::{Error, Result};
use crate::faddeeva;
use crate::quad::{self, Tol};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Modulus below which (in units of T) the phase of f_Omega is treated as
/// undefined and continued from a neighbour.
pub const NEAR_ZERO_MODULUS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SwitchingKind {
    Gaussian,
    CompactCosine,
    CompactCosineSq,
    Tabulated,
}

impl std::str::FromStr for SwitchingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "gaussian" | "g" => Ok(SwitchingKind::Gaussian),
            "compactcosine" | "cosine" | "c" => Ok(SwitchingKind::CompactCosine),
            "compactcosinesq" | "cosinesq" | "cos2" | "s" => Ok(SwitchingKind::CompactCosineSq),
            "tabulated" => Ok(SwitchingKind::Tabulated),
            _ => Err(Error::InvalidArgument(format!("unknown switching kind '{s}'"))),
        }
    }
}

/// A switching function chi(tau) with timescale T = int chi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSpec {
    pub kind: SwitchingKind,
    pub timescale: f64,
    /// (tau, value) pairs, strictly increasing in tau. Tabulated kind only.
    pub samples: Option<Vec<(f64, f64)>>,
}

impl SwitchingSpec {
    pub fn new(kind: SwitchingKind, timescale: f64) -> Result<Self> {
        let s = SwitchingSpec {
            kind,
            timescale,
            samples: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian(timescale: f64) -> Result<Self> {
        Self::new(SwitchingKind::Gaussian, timescale)
    }

    pub fn compact_cosine(timescale: f64) -> Result<Self> {
        Self::new(SwitchingKind::CompactCosine, timescale)
    }

    pub fn compact_cosine_sq(timescale: f64) -> Result<Self> {
        Self::new(SwitchingKind::CompactCosineSq, timescale)
    }

    /// Tabulated switching; T is set to the trapezoidal integral of the samples.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidSpec(
                "tabulated switching needs at least two samples".into(),
            ));
        }
        let mut t = 0.0;
        for w in samples.windows(2) {
            t += 0.5 * (w[1].0 - w[0].0) * (w[1].1 + w[0].1);
        }
        let s = SwitchingSpec {
            kind: SwitchingKind::Tabulated,
            timescale: t,
            samples: Some(samples),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timescale > 0.0) || !self.timescale.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "timescale must be positive and finite, got {}",
                self.timescale
            )));
        }
        if self.kind == SwitchingKind::Tabulated {
            let s = self
                .samples
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec("tabulated switching without samples".into()))?;
            if s.len() < 2 {
                return Err(Error::InvalidSpec(
                    "tabulated switching needs at least two samples".into(),
                ));
            }
            if s.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::InvalidSpec("sample times must be strictly increasing".into()));
            }
            if s.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
                return Err(Error::InvalidSpec("non-finite sample".into()));
            }
        }
        Ok(())
    }

    /// True when chi extends to an entire function (contour shifts allowed).
    pub fn is_analytic(&self) -> bool {
        self.kind == SwitchingKind::Gaussian
    }

    /// False for the cosine kind, whose derivative jumps at |tau| = T/2.
    pub fn is_differentiable(&self) -> bool {
        !matches!(self.kind, SwitchingKind::CompactCosine | SwitchingKind::Tabulated)
    }

    /// Exact support for compact and tabulated kinds; for the Gaussian,
    /// +-`gauss_cut` standard deviations.
    pub fn support(&self, gauss_cut: f64) -> (f64, f64) {
        let t = self.timescale;
        match self.kind {
            SwitchingKind::Gaussian => (-gauss_cut * t, gauss_cut * t),
            SwitchingKind::CompactCosine | SwitchingKind::CompactCosineSq => (-0.5 * t, 0.5 * t),
            SwitchingKind::Tabulated => {
                let s = self.samples.as_ref().expect("validated");
                (s[0].0, s[s.len() - 1].0)
            }
        }
    }

    /// Points where chi or one of its derivatives is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let t = self.timescale;
        match self.kind {
            SwitchingKind::Gaussian => vec![],
            SwitchingKind::CompactCosine | SwitchingKind::CompactCosineSq => vec![-0.5 * t, 0.5 * t],
            SwitchingKind::Tabulated => self.samples.as_ref().expect("validated").iter().map(|p| p.0).collect(),
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let t = self.timescale;
        match self.kind {
            SwitchingKind::Gaussian => {
                let x = tau / t;
                FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
            }
            SwitchingKind::CompactCosine => {
                if tau.abs() < 0.5 * t {
                    FRAC_PI_2 * (PI * tau / t).cos()
                } else {
                    0.0
                }
            }
            SwitchingKind::CompactCosineSq => {
                if tau.abs() < 0.5 * t {
                    let c = (PI * tau / t).cos();
                    2.0 * c * c
                } else {
                    0.0
                }
            }
            SwitchingKind::Tabulated => {
                let s = self.samples.as_ref().expect("validated");
                interp(s, tau).0
            }
        }
    }

    /// chi'(tau). One-sided slopes are averaged at tabulated knots.
    pub fn derivative(&self, tau: f64) -> f64 {
        let t = self.timescale;
        match self.kind {
            SwitchingKind::Gaussian => -tau / (t * t) * self.eval(tau),
            SwitchingKind::CompactCosine => {
                if tau.abs() < 0.5 * t {
                    -FRAC_PI_2 * (PI / t) * (PI * tau / t).sin()
                } else {
                    0.0
                }
            }
            SwitchingKind::CompactCosineSq => {
                if tau.abs() < 0.5 * t {
                    -(2.0 * PI / t) * (2.0 * PI * tau / t).sin()
                } else {
                    0.0
                }
            }
            SwitchingKind::Tabulated => {
                let s = self.samples.as_ref().expect("validated");
                interp(s, tau).1
            }
        }
    }
}

// Linear interpolation (value, slope); zero outside the sample range.
fn interp(s: &[(f64, f64)], tau: f64) -> (f64, f64) {
    let n = s.len();
    if tau < s[0].0 || tau > s[n - 1].0 {
        return (0.0, 0.0);
    }
    let k = match s.binary_search_by(|p| p.0.total_cmp(&tau)) {
        Ok(k) => return (s[k].1, knot_slope(s, k)),
        Err(k) => k,
    };
    let (a, b) = (s[k - 1], s[k]);
    let slope = (b.1 - a.1) / (b.0 - a.0);
    (a.1 + slope * (tau - a.0), slope)
}

fn knot_slope(s: &[(f64, f64)], k: usize) -> f64 {
    let left = if k > 0 {
        Some((s[k].1 - s[k - 1].1) / (s[k].0 - s[k - 1].0))
    } else {
        None
    };
    let right = if k + 1 < s.len() {
        Some((s[k + 1].1 - s[k].1) / (s[k + 1].0 - s[k].0))
    } else {
        None
    };
    match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => 0.0,
    }
}

/// chi(tau), rejecting invalid specs.
pub fn eval_switching(spec: &SwitchingSpec, tau: f64) -> Result<f64> {
    spec.validate()?;
    Ok(spec.eval(tau))
}

// sin(x)/x with a series near zero.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

// int_a^b e^{i mu xi} d xi
fn exp_integral(mu: f64, a: f64, b: f64) -> C64 {
    let mid = 0.5 * (a + b);
    C64::from_polar(1.0, mu * mid) * ((b - a) * sinc(0.5 * mu * (b - a)))
}

/// f_Omega(tau) for any real Omega (internal; the public operation checks
/// Omega >= 0). tau may be +-infinity.
pub(crate) fn incomplete_fourier_raw(spec: &SwitchingSpec, omega: f64, tau: f64) -> Result<C64> {
    let t = spec.timescale;
    match spec.kind {
        SwitchingKind::Gaussian => Ok(gaussian_f(t, omega, C64::new(tau, 0.0))),
        SwitchingKind::CompactCosine | SwitchingKind::CompactCosineSq => {
            let lo = -0.5 * t;
            if tau <= lo {
                return Ok(C64::new(0.0, 0.0));
            }
            let hi = tau.min(0.5 * t);
            let a = PI / t;
            if tau >= 0.5 * t {
                if let Some(v) = compact_transform(spec.kind, t, omega) {
                    return Ok(v);
                }
            }
            Ok(if spec.kind == SwitchingKind::CompactCosine {
                (exp_integral(a - omega, lo, hi) + exp_integral(-a - omega, lo, hi)) * (PI / 4.0)
            } else {
                exp_integral(-omega, lo, hi)
                    + (exp_integral(2.0 * a - omega, lo, hi) + exp_integral(-2.0 * a - omega, lo, hi)) * 0.5
            })
        }
        SwitchingKind::Tabulated => Ok(tabulated_cumulative(spec, omega, &[tau])?[0]),
    }
}

// Full transforms in product form; the sum of exponential integrals loses
// relative accuracy like nu^2 eps at large nu. None near removable points.
fn compact_transform(kind: SwitchingKind, t: f64, nu: f64) -> Option<C64> {
    let a = PI / t;
    let near = |x: f64| (nu.abs() - x).abs() <= 1e-3 * a;
    let v = match kind {
        SwitchingKind::CompactCosine if !near(a) => PI * a * (0.5 * nu * t).cos() / (a * a - nu * nu),
        SwitchingKind::CompactCosineSq if !near(0.0) && !near(2.0 * a) => {
            8.0 * a * a * (0.5 * nu * t).sin() / (nu * (4.0 * a * a - nu * nu))
        }
        _ => return None,
    };
    Some(C64::new(v, 0.0))
}

/// Gaussian f_Omega at complex z (the closed form is entire). Branch chosen so
/// the Faddeeva argument stays in the closed upper half-plane.
pub(crate) fn gaussian_f(t: f64, omega: f64, z: C64) -> C64 {
    if z.re == f64::INFINITY {
        return C64::new(t * (-0.5 * omega * omega * t * t).exp(), 0.0);
    }
    if z.re == f64::NEG_INFINITY {
        return C64::new(0.0, 0.0);
    }
    let u = (z / t + C64::new(0.0, omega * t)) / SQRT_2;
    let i = C64::new(0.0, 1.0);
    let env = (-(z * z) / (2.0 * t * t) - i * omega * z).exp();
    if z.re <= 0.0 {
        env * faddeeva::w(-i * u) * (0.5 * t)
    } else {
        let total = t * (-0.5 * omega * omega * t * t).exp();
        C64::new(total, 0.0) - env * faddeeva::w(i * u) * (0.5 * t)
    }
}

// Cumulative transform of a tabulated switching at sorted (or unsorted) taus.
fn tabulated_cumulative(spec: &SwitchingSpec, omega: f64, taus: &[f64]) -> Result<Vec<C64>> {
    let s = spec.samples.as_ref().expect("validated");
    let (lo, hi) = (s[0].0, s[s.len() - 1].0);
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&a, &b| taus[a].total_cmp(&taus[b]));
    let mut out = vec![C64::new(0.0, 0.0); taus.len()];
    let mut acc = C64::new(0.0, 0.0);
    let mut pos = lo;
    let integrand = |x: f64| C64::from_polar(1.0, -omega * x) * interp(s, x).0;
    for &idx in &order {
        let target = taus[idx].clamp(lo, hi);
        if target > pos {
            let mut pts = vec![pos];
            pts.extend(s.iter().map(|p| p.0).filter(|&k| k > pos && k < target));
            pts.push(target);
            // Panels shorter than half an oscillation period.
            let max_len = if omega.abs() > 0.0 {
                PI / omega.abs()
            } else {
                f64::INFINITY
            };
            let mut fine = vec![pts[0]];
            for w in pts.windows(2) {
                let n = ((w[1] - w[0]) / max_len).ceil().max(1.0) as usize;
                for k in 1..=n {
                    fine.push(if k == n {
                        w[1]
                    } else {
                        w[0] + (w[1] - w[0]) * k as f64 / n as f64
                    });
                }
            }
            let tol = Tol {
                abs: 1e-15 * spec.timescale,
                rel: 1e-13,
                max_intervals: 200_000,
            };
            let q = quad::adaptive(integrand, &fine, tol)?;
            acc += q.value;
            pos = target;
        }
        out[idx] = if taus[idx] < lo { C64::new(0.0, 0.0) } else { acc };
    }
    Ok(out)
}

/// Lower-incomplete Fourier transform f_Omega(tau) = int_{-inf}^tau chi e^{-i Omega xi}.
pub fn lower_incomplete_fourier(spec: &SwitchingSpec, omega: f64, tau: f64) -> Result<C64> {
    spec.validate()?;
    if !(omega >= 0.0) {
        return Err(Error::InvalidArgument(format!("Omega must be >= 0, got {omega}")));
    }
    incomplete_fourier_raw(spec, omega, tau)
}

/// Full Fourier transform chi_hat(nu) = int chi e^{-i nu xi}, any real nu.
pub fn fourier_transform(spec: &SwitchingSpec, nu: f64) -> Result<C64> {
    incomplete_fourier_raw(spec, nu, f64::INFINITY)
}

fn incomplete_fourier_many(spec: &SwitchingSpec, omega: f64, taus: &[f64]) -> Result<Vec<C64>> {
    if spec.kind == SwitchingKind::Tabulated {
        tabulated_cumulative(spec, omega, taus)
    } else {
        taus.iter().map(|&t| incomplete_fourier_raw(spec, omega, t)).collect()
    }
}

/// Uniform grid of n points on [lo, hi].
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Default grids: [-8T, 8T] with 3201 points for the Gaussian, [-T, T] with
/// 4001 points for compact kinds, the sample range with 4001 points for data.
pub fn default_grid(spec: &SwitchingSpec) -> Vec<f64> {
    let t = spec.timescale;
    match spec.kind {
        SwitchingKind::Gaussian => uniform_grid(-8.0 * t, 8.0 * t, 3201),
        SwitchingKind::CompactCosine | SwitchingKind::CompactCosineSq => uniform_grid(-t, t, 4001),
        SwitchingKind::Tabulated => {
            let (lo, hi) = spec.support(0.0);
            uniform_grid(lo, hi, 4001)
        }
    }
}

/// Sampled dual switching: chi_tilde = |f_Omega|, theta = -arg f_Omega unwrapped,
/// so that chi_tilde e^{-i theta} = f_Omega.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSwitching {
    pub gap_omega: f64,
    pub grid: Vec<f64>,
    pub chi_tilde: Vec<f64>,
    pub theta: Vec<f64>,
    pub boundary_value: f64,
    /// The switching this dual was generated from. When present, profiles
    /// evaluate f_Omega exactly instead of interpolating the samples.
    pub source: Option<SwitchingSpec>,
}

impl DualSwitching {
    /// chi_tilde(t) e^{-i theta(t)}: exact from the source when available,
    /// otherwise linear interpolation of modulus and phase. Beyond the last
    /// grid point the boundary value (with the last phase) is held.
    pub fn profile(&self, t: f64) -> C64 {
        if let Some(src) = &self.source {
            return incomplete_fourier_raw(src, self.gap_omega, t).unwrap_or(C64::new(f64::NAN, f64::NAN));
        }
        let n = self.grid.len();
        if t < self.grid[0] {
            return C64::new(0.0, 0.0);
        }
        if t >= self.grid[n - 1] {
            return C64::from_polar(self.chi_tilde[n - 1], -self.theta[n - 1]);
        }
        let k = self.grid.partition_point(|&g| g <= t);
        let (a, b) = (k - 1, k);
        let s = (t - self.grid[a]) / (self.grid[b] - self.grid[a]);
        let m = self.chi_tilde[a] + s * (self.chi_tilde[b] - self.chi_tilde[a]);
        let th = self.theta[a] + s * (self.theta[b] - self.theta[a]);
        C64::from_polar(m, -th)
    }

    /// d/dt of [`profile`](Self::profile).
    pub fn profile_derivative(&self, t: f64) -> C64 {
        if let Some(src) = &self.source {
            return C64::from_polar(src.eval(t), -self.gap_omega * t);
        }
        let n = self.grid.len();
        if t < self.grid[0] || t >= self.grid[n - 1] {
            return C64::new(0.0, 0.0);
        }
        let k = self.grid.partition_point(|&g| g <= t);
        let (a, b) = (k - 1, k);
        let h = self.grid[b] - self.grid[a];
        let s = (t - self.grid[a]) / h;
        let m = self.chi_tilde[a] + s * (self.chi_tilde[b] - self.chi_tilde[a]);
        let th = self.theta[a] + s * (self.theta[b] - self.theta[a]);
        let dm = (self.chi_tilde[b] - self.chi_tilde[a]) / h;
        let dth = (self.theta[b] - self.theta[a]) / h;
        C64::from_polar(1.0, -th) * C64::new(dm, -m * dth)
    }

    /// Value approached by the profile as t -> +inf.
    pub fn tail_value(&self) -> C64 {
        if let Some(src) = &self.source {
            return incomplete_fourier_raw(src, self.gap_omega, f64::INFINITY).unwrap_or(C64::new(f64::NAN, f64::NAN));
        }
        let n = self.grid.len();
        C64::from_polar(self.chi_tilde[n - 1], -self.theta[n - 1])
    }

    /// Omega chi_tilde, the quantity compared with chi.
    pub fn scaled_modulus(&self) -> Vec<f64> {
        self.chi_tilde.iter().map(|c| c * self.gap_omega).collect()
    }

    /// Time-dependent gap d theta / d tau by centred differences.
    pub fn omega_tilde(&self) -> Vec<f64> {
        let n = self.grid.len();
        if n < 2 {
            return vec![self.gap_omega; n];
        }
        (0..n)
            .map(|i| {
                let (a, b) = if i == 0 {
                    (0, 1)
                } else if i == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (i - 1, i + 1)
                };
                (self.theta[b] - self.theta[a]) / (self.grid[b] - self.grid[a])
            })
            .collect()
    }
}

fn wrap_to(phase: f64, reference: f64) -> f64 {
    let two_pi = 2.0 * PI;
    phase + two_pi * ((reference - phase) / two_pi).round()
}

/// Dual switching of `spec` at gap `omega` on `grid`.
pub fn dual_switching(spec: &SwitchingSpec, omega: f64, grid: &[f64]) -> Result<DualSwitching> {
    spec.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("Omega must be > 0, got {omega}")));
    }
    let f = incomplete_fourier_many(spec, omega, grid)?;
    let chi_tilde: Vec<f64> = f.iter().map(|z| z.norm()).collect();
    let floor = NEAR_ZERO_MODULUS * spec.timescale;
    let valid: Vec<bool> = chi_tilde.iter().map(|&m| m >= floor).collect();

    let n = grid.len();
    let mut theta = vec![f64::NAN; n];
    let mut prev: Option<usize> = None;
    for i in 0..n {
        if !valid[i] {
            continue;
        }
        let raw = -f[i].arg();
        theta[i] = match prev {
            None => raw,
            Some(p) => {
                let mut reference = theta[p];
                let direct = wrap_to(raw, reference);
                if (direct - reference).abs() > FRAC_PI_2 {
                    // Walk through a refined sub-grid to pick the branch.
                    reference = refine_phase(spec, omega, grid[p], grid[i], reference)?;
                }
                wrap_to(raw, reference)
            }
        };
        prev = Some(i);
    }
    // Continue the phase into near-zero stretches from the nearest valid point.
    let valid_idx: Vec<usize> = (0..n).filter(|&i| valid[i]).collect();
    if valid_idx.is_empty() {
        theta.iter_mut().for_each(|t| *t = 0.0);
    } else {
        for i in 0..n {
            if !valid[i] {
                let k = valid_idx.partition_point(|&v| v < i);
                let nearest = if k == 0 {
                    valid_idx[0]
                } else if k == valid_idx.len() {
                    valid_idx[k - 1]
                } else {
                    let (l, r) = (valid_idx[k - 1], valid_idx[k]);
                    if i - l <= r - i {
                        l
                    } else {
                        r
                    }
                };
                theta[i] = theta[nearest];
            }
        }
    }
    let boundary_value = chi_tilde[n - 1];
    Ok(DualSwitching {
        gap_omega: omega,
        grid: grid.to_vec(),
        chi_tilde,
        theta,
        boundary_value,
        source: Some(spec.clone()),
    })
}

// Unwrap across [a, b] on successively finer sub-grids until every sub-step
// moves the phase by at most pi/2; returns the phase reference next to b.
fn refine_phase(spec: &SwitchingSpec, omega: f64, a: f64, b: f64, start: f64) -> Result<f64> {
    let floor = NEAR_ZERO_MODULUS * spec.timescale;
    let mut best = start;
    for level in 1..=14 {
        let m = 1usize << level;
        let pts: Vec<f64> = (1..m).map(|k| a + (b - a) * k as f64 / m as f64).collect();
        let vals = incomplete_fourier_many(spec, omega, &pts)?;
        let mut reference = start;
        let mut ok = true;
        for v in &vals {
            if v.norm() < floor {
                continue;
            }
            let ph = wrap_to(-v.arg(), reference);
            if (ph - reference).abs() > FRAC_PI_2 {
                ok = false;
            }
            reference = ph;
        }
        best = reference;
        if ok {
            break;
        }
    }
    Ok(best)
}

/// sup over the grid of |Omega f_Omega(tau) - i chi(tau) e^{-i Omega tau}|,
/// flagged when chi is not differentiable at its support edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeGapResidual {
    pub value: f64,
    pub differentiable: bool,
}

pub fn theorem1_residual(spec: &SwitchingSpec, omega: f64, grid: &[f64]) -> Result<LargeGapResidual> {
    spec.validate()?;
    if !(omega >= 0.0) {
        return Err(Error::InvalidArgument(format!("Omega must be >= 0, got {omega}")));
    }
    let f = incomplete_fourier_many(spec, omega, grid)?;
    let i = C64::new(0.0, 1.0);
    let mut sup: f64 = 0.0;
    for (k, &tau) in grid.iter().enumerate() {
        let r = f[k] * omega - i * C64::from_polar(spec.eval(tau), -omega * tau);
        sup = sup.max(r.norm());
    }
    Ok(LargeGapResidual {
        value: sup,
        differentiable: spec.is_differentiable(),
    })
}

fn check_samples(f: &[f64], g: &[f64], grid: &[f64]) -> Result<()> {
    if f.len() != g.len() || f.len() != grid.len() {
        return Err(Error::InvalidArgument("sample and grid lengths differ".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    Ok(())
}

fn trapezoid(y: impl Fn(usize) -> f64, grid: &[f64]) -> f64 {
    (1..grid.len())
        .map(|k| 0.5 * (grid[k] - grid[k - 1]) * (y(k) + y(k - 1)))
        .sum()
}

/// int |f - g| / int |g| by the trapezoidal rule.
pub fn l1_relative_distance(f: &[f64], g: &[f64], grid: &[f64]) -> Result<f64> {
    check_samples(f, g, grid)?;
    let den = trapezoid(|k| g[k].abs(), grid);
    if den == 0.0 {
        return Err(Error::DivisionByZero("int |g| = 0"));
    }
    Ok(trapezoid(|k| (f[k] - g[k]).abs(), grid) / den)
}

/// int (f - g) / int g by the trapezoidal rule (signed; diagnostic only).
pub fn signed_relative_difference(f: &[f64], g: &[f64], grid: &[f64]) -> Result<f64> {
    check_samples(f, g, grid)?;
    let den = trapezoid(|k| g[k], grid);
    if den == 0.0 {
        return Err(Error::DivisionByZero("int g = 0"));
    }
    Ok(trapezoid(|k| f[k] - g[k], grid) / den)
}

/// Best constant c and minimax residual of theta(tau) - (Omega tau + c) over
/// the region where chi_tilde exceeds 1e-6 of its maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFit {
    pub residual: f64,
    /// Best-fit offset reduced to (-pi, pi].
    pub offset: f64,
}

pub fn phase_linearity_residual(dual: &DualSwitching) -> PhaseFit {
    let peak = dual.chi_tilde.iter().cloned().fold(0.0, f64::max);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (k, &tau) in dual.grid.iter().enumerate() {
        if dual.chi_tilde[k] > 1e-6 * peak {
            let r = dual.theta[k] - dual.gap_omega * tau;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if !lo.is_finite() {
        return PhaseFit {
            residual: 0.0,
            offset: 0.0,
        };
    }
    let c = 0.5 * (lo + hi);
    let two_pi = 2.0 * PI;
    let mut offset = c - two_pi * (c / two_pi).round();
    if offset <= -PI {
        offset += two_pi;
    }
    PhaseFit {
        residual: 0.5 * (hi - lo),
        offset,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_transform_matches_exponential_sum() {
        for kind in [SwitchingKind::CompactCosine, SwitchingKind::CompactCosineSq] {
            let spec = SwitchingSpec::new(kind, 1.3).unwrap();
            for nu in [0.37, 1.0, 2.9, 5.5, 11.0, 40.0] {
                let a = compact_transform(kind, 1.3, nu).unwrap();
                let b = incomplete_fourier_raw(&spec, nu, 0.4999 * 1.3).unwrap()
                    + quad::adaptive(
                        |x| C64::from_polar(spec.eval(x), -nu * x),
                        &[0.4999 * 1.3, 0.65],
                        quad::Tol::default(),
                    )
                    .unwrap()
                    .value;
                assert!((a - b).norm() < 1e-12, "{kind:?} {nu}: {a} {b}");
            }
        }
    }

    #[test]
    fn sinc_branches_meet() {
        assert!((sinc(1e-4) - sinc(1.0000001e-4)).abs() < 1e-12);
    }

    #[test]
    fn interp_zero_outside_and_slopes_at_knots() {
        let s = vec![(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)];
        assert_eq!(interp(&s, -0.1), (0.0, 0.0));
        assert_eq!(interp(&s, 0.5), (1.0, 2.0));
        assert_eq!(interp(&s, 1.0), (2.0, 0.0));
    }

    #[test]
    fn wrap_picks_nearest_branch() {
        assert!((wrap_to(0.1, 2.0 * PI) - (0.1 + 2.0 * PI)).abs() < 1e-15);
    }
}
