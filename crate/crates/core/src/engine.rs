//! Double integrals of two time profiles against a stationary kernel.
//!
//! With u = t - t' and v = t', the inner correlation A(u) = int P(u+v) G(v) dv
//! uses a fixed composite rule (so A is smooth in u) and the outer integral
//! over u is adaptive. Analytic profiles are evaluated on shifted lines,
//! which moves the kernel argument away from the real axis. Otherwise the
//! pole terms of the pointlike Minkowski kernel are subtracted and
//! integrated in closed form.

use crate::error::{Error, Result};
use crate::field::{PairKernel, PoleTerm, SpectralWeight};
use crate::profile::Profile;
use crate::quad::{self, Tol};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const OUTER_REL: f64 = 1e-10;
/// Round-off floor for spectral panels, relative to int |f| per panel.
const SPECTRAL_FLOOR: f64 = 1e-12;
const OUTER_FLOOR: f64 = 1e-12;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Kernel of order n: W for n = 0, W' for n = 1, -W'' (the derivative
/// coupling kernel) for n = 2.
fn kernel_value(k: &PairKernel, s: C64, n: usize) -> C64 {
    let v = k.eval(s, n);
    if n == 2 {
        -v
    } else {
        v
    }
}

fn kernel_poles(k: &PairKernel, n: usize) -> Vec<PoleTerm> {
    let mut p = k.poles(n);
    if n == 2 {
        for t in p.iter_mut() {
            t.coef = -t.coef;
        }
    }
    p
}

struct Side<'a> {
    prof: &'a Profile,
    shift: f64,
    conj: bool,
}

impl Side<'_> {
    fn val(&self, t: f64) -> C64 {
        let v = self.prof.body_at(t, self.shift);
        if self.conj {
            v.conj()
        } else {
            v
        }
    }
    fn support(&self) -> (f64, f64) {
        self.prof.support()
    }
    fn osc(&self) -> f64 {
        if self.shift > 0.0 {
            0.0
        } else {
            self.prof.oscillation()
        }
    }
    fn edges(&self) -> Vec<f64> {
        let (a, b) = self.support();
        let mut e = vec![a, b];
        e.extend(self.prof.breakpoints());
        e
    }
}

/// A(u) = int P(u + v) G(v) dv with a fixed panel count.
struct Correlation<'a> {
    p: Side<'a>,
    g: Side<'a>,
    panels: usize,
}

impl<'a> Correlation<'a> {
    fn new(p: Side<'a>, g: Side<'a>) -> Self {
        let tau = p.prof.timescale().min(g.prof.timescale());
        let osc = p.osc() + g.osc();
        let mut h = tau / 20.0;
        if osc > 0.0 {
            h = h.min(PI / (4.0 * osc));
        }
        let (pa, pb) = p.support();
        let (ga, gb) = g.support();
        let len = (pb - pa).min(gb - ga);
        let panels = (len / h).ceil().max(1.0) as usize;
        Correlation { p, g, panels }
    }

    fn eval(&self, u: f64) -> C64 {
        let (pa, pb) = self.p.support();
        let (ga, gb) = self.g.support();
        let lo = (pa - u).max(ga);
        let hi = (pb - u).min(gb);
        if hi <= lo {
            return zero();
        }
        quad::fixed(|v| self.p.val(u + v) * self.g.val(v), lo, hi, self.panels)
    }

    fn range(&self) -> (f64, f64) {
        let (pa, pb) = self.p.support();
        let (ga, gb) = self.g.support();
        (pa - gb, pb - ga)
    }

    /// u values where A may be non-smooth.
    fn kinks(&self) -> Vec<f64> {
        let pe = self.p.edges();
        let ge = self.g.edges();
        if pe.len() * ge.len() > 256 {
            let (a, b) = self.range();
            return vec![a, b];
        }
        let mut out = Vec::with_capacity(pe.len() * ge.len());
        for &x in &pe {
            for &y in &ge {
                out.push(x - y);
            }
        }
        out
    }

    /// Step for finite-difference Taylor coefficients of A.
    fn fd_step(&self) -> f64 {
        let tau = self.p.prof.timescale().min(self.g.prof.timescale());
        let osc = self.p.osc().max(self.g.osc());
        0.05 * if osc > 0.0 { tau.min(1.0 / osc) } else { tau }
    }
}

fn binom(n: i32, k: i32) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// int_lo^hi (u - p)^k (u - z0)^{-m} du with z0 = p + i eta.
pub(crate) fn pole_moment(k: i32, m: i32, p: f64, eta: f64, lo: f64, hi: f64) -> C64 {
    let z0 = C64::new(p, eta);
    let ie = C64::new(0.0, eta);
    let a = C64::new(lo, 0.0) - z0;
    let b = C64::new(hi, 0.0) - z0;
    let mut acc = zero();
    for j in 0..=k {
        let coef = ie.powi(k - j) * binom(k, j);
        let e = j - m;
        let val = if e == -1 {
            b.ln() - a.ln()
        } else {
            (b.powi(e + 1) - a.powi(e + 1)) / (e + 1) as f64
        };
        acc += coef * val;
    }
    acc
}

/// Taylor coefficients a_0..a_{m-1} of f at p from a 5-point stencil.
fn taylor<F: Fn(f64) -> C64>(f: &F, p: f64, h: f64, m: i32) -> Vec<C64> {
    let f0 = f(p);
    if m == 1 {
        return vec![f0];
    }
    let (fp1, fm1, fp2, fm2) = (f(p + h), f(p - h), f(p + 2.0 * h), f(p - 2.0 * h));
    let d1 = (fm2 - fp2 + (fp1 - fm1) * 8.0) / (12.0 * h);
    let mut out = vec![f0, d1];
    if m >= 3 {
        let d2 = (-(fp2 + fm2) + (fp1 + fm1) * 16.0 - f0 * 30.0) / (12.0 * h * h);
        out.push(d2 * 0.5);
    }
    if m >= 4 {
        let d3 = (fp2 - fm2 - (fp1 - fm1) * 2.0) / (2.0 * h * h * h);
        out.push(d3 / 6.0);
    }
    out
}

/// int_lo^hi f(u) K(u - i eta) du where K is a sum of pole terms (exactly)
/// when `poles` is non-empty, or given by `kernel` otherwise.
fn outer<F: Fn(f64) -> C64>(
    f: &F,
    lo: f64,
    hi: f64,
    mut breaks: Vec<f64>,
    kernel: &dyn Fn(C64) -> C64,
    poles: &[PoleTerm],
    eta: f64,
    fd_step: f64,
) -> Result<C64> {
    breaks.push(lo);
    breaks.push(hi);
    let active: Vec<PoleTerm> = poles
        .iter()
        .copied()
        .filter(|p| p.center > lo && p.center < hi)
        .collect();
    for p in &active {
        breaks.push(p.center);
    }
    breaks.retain(|&b| b >= lo && b <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));

    if active.is_empty() {
        let g = |u: f64| f(u) * kernel(C64::new(u, -eta));
        return Ok(quad::adaptive_scaled(g, &breaks, OUTER_REL, OUTER_FLOOR)?.value);
    }

    // Subtract the Taylor polynomial of f at each active pole. Near a
    // third-order pole the remainder is pure round-off within |u - c| < r,
    // so f is replaced there by its cubic Taylor polynomial, integrated exactly.
    let r = 0.2 * fd_step;
    let windowed = |p: &PoleTerm| p.order >= 3 && eta < r;
    let coeffs: Vec<Vec<C64>> = active
        .iter()
        .map(|p| taylor(f, p.center, fd_step, if windowed(p) { 4 } else { p.order }))
        .collect();
    for p in active.iter().filter(|p| windowed(p)) {
        breaks.extend([p.center - r, p.center + r].into_iter().filter(|&b| b > lo && b < hi));
    }
    breaks.sort_by(f64::total_cmp);
    let g = |u: f64| {
        let fu = f(u);
        let mut acc = zero();
        for p in poles {
            let x = u - p.center;
            let s = C64::new(x, -eta);
            let inv = s.powi(-p.order) * p.coef;
            match active.iter().position(|a| a.center == p.center && a.order == p.order) {
                Some(i) => {
                    if windowed(p) && x.abs() < r {
                        continue;
                    }
                    let mut poly = zero();
                    for c in coeffs[i][..p.order as usize].iter().rev() {
                        poly = poly * x + c;
                    }
                    acc += (fu - poly) * inv;
                }
                None => acc += fu * inv,
            }
        }
        acc
    };
    let rem = quad::adaptive_scaled(g, &breaks, OUTER_REL, OUTER_FLOOR)?.value;
    let mut analytic = zero();
    for (p, cs) in active.iter().zip(&coeffs) {
        for (k, c) in cs[..p.order as usize].iter().enumerate() {
            analytic += c * p.coef * pole_moment(k as i32, p.order, p.center, eta, lo, hi);
        }
        if windowed(p) {
            let (a, b) = ((p.center - r).max(lo), (p.center + r).min(hi));
            for (k, c) in cs.iter().enumerate().skip(p.order as usize) {
                analytic += c * p.coef * pole_moment(k as i32, p.order, p.center, eta, a, b);
            }
        }
    }
    Ok(rem + analytic)
}

/// Whether pole subtraction is needed for kernel argument u - i eta.
fn needs_subtraction(kernel: &PairKernel, eta: f64, tau: f64) -> bool {
    !kernel.poles(0).is_empty() && eta < tau
}

/// Whether [`wightman_pair`] can integrate the order-2 kernel directly for
/// these profiles (otherwise the caller moves derivatives onto the profiles).
pub(crate) fn direct_derivative_ok(p: &Profile, q: &Profile, kernel: &PairKernel, eps: f64) -> bool {
    let eta = eps + p.natural_shift() + q.natural_shift();
    !needs_subtraction(kernel, eta, p.timescale().min(q.timescale()))
}

/// int int p(t) conj(q(t')) K_n(t - t' - i eps) dt dt'.
///
/// Analytic profiles are moved onto their natural shifted lines. Exact-dual
/// tails (n = 2 only) are added in closed form in one variable.
pub(crate) fn wightman_pair(p: &Profile, q: &Profile, kernel: &PairKernel, n: usize, eps: f64) -> Result<C64> {
    let alpha = p.natural_shift();
    let beta = q.natural_shift();
    let eta = eps + alpha + beta;
    let tau = p.timescale().min(q.timescale());
    let subtract = needs_subtraction(kernel, eta, tau);
    let corr = Correlation::new(
        Side {
            prof: p,
            shift: alpha,
            conj: false,
        },
        Side {
            prof: q,
            shift: beta,
            conj: true,
        },
    );
    let (lo, hi) = corr.range();
    let poles = if subtract { kernel_poles(kernel, n) } else { vec![] };
    let kf = |s: C64| kernel_value(kernel, s, n);
    let a = |u: f64| corr.eval(u);
    let mut total = outer(&a, lo, hi, corr.kinks(), &kf, &poles, eta, corr.fd_step())?;

    let (cp, cq) = (p.tail(), q.tail());
    if cp != zero() || cq != zero() {
        if n != 2 {
            return Err(Error::InvalidArgument(
                "non-decaying profiles are only supported with the derivative kernel".into(),
            ));
        }
        if subtract {
            return Err(Error::InvalidArgument(
                "non-decaying real-axis profiles need the weak form (pointlike Minkowski)".into(),
            ));
        }
        total += tail_terms(p, q, alpha, beta, eta, kernel, cp, cq)?;
    }
    Ok(total)
}

// Tail pieces of int int P(t) G(t') (-W'')(t - t' - i eta) with
// P = body_P + cp H(t - t1p) and G = body_G + conj(cq) H(t' - t1q),
// Abel-regularised at +inf:
//   tail/body: cp int body_G(t') W'(t1p - t' - i eta) dt'
//   body/tail: -conj(cq) int body_P(t) W'(t - t1q - i eta) dt
//   tail/tail: cp conj(cq) W(t1p - t1q - i eta)
#[allow(clippy::too_many_arguments)]
fn tail_terms(
    p: &Profile,
    q: &Profile,
    alpha: f64,
    beta: f64,
    eta: f64,
    kernel: &PairKernel,
    cp: C64,
    cq: C64,
) -> Result<C64> {
    let (pa, t1p) = p.support();
    let (qa, t1q) = q.support();
    let tol = Tol {
        abs: 0.0,
        rel: 1e-12,
        max_intervals: 20_000,
    };
    let mut total = zero();
    if cp != zero() {
        let mut pts = vec![qa, t1q];
        pts.extend(q.breakpoints().into_iter().filter(|&b| b > qa && b < t1q));
        pts.sort_by(f64::total_cmp);
        let f = |t: f64| q.body_at(t, beta).conj() * kernel.eval(C64::new(t1p - t, -eta), 1);
        total += cp * quad::adaptive_scaled(f, &pts, tol.rel, OUTER_FLOOR)?.value;
    }
    if cq != zero() {
        let mut pts = vec![pa, t1p];
        pts.extend(p.breakpoints().into_iter().filter(|&b| b > pa && b < t1p));
        pts.sort_by(f64::total_cmp);
        let f = |t: f64| p.body_at(t, alpha) * kernel.eval(C64::new(t - t1q, -eta), 1);
        total -= cq.conj() * quad::adaptive_scaled(f, &pts, tol.rel, OUTER_FLOOR)?.value;
    }
    if cp != zero() && cq != zero() {
        total += cp * cq.conj() * kernel.eval(C64::new(t1p - t1q, -eta), 0);
    }
    Ok(total)
}

/// Common imaginary shift for both variables of a time-ordered integral.
fn common_shift(p: &Profile, q: &Profile) -> f64 {
    if p.is_analytic() && q.is_analytic() {
        0.5 * (p.natural_shift() + q.natural_shift())
    } else {
        0.0
    }
}

/// int int conj(p(t)) conj(q(t')) K_n(|t - t'| - i eps) dt dt'.
pub(crate) fn feynman_pair(p: &Profile, q: &Profile, kernel: &PairKernel, n: usize, eps: f64) -> Result<C64> {
    if p.tail() != zero() || q.tail() != zero() {
        return Err(Error::InvalidArgument(
            "time-ordered integrals of non-decaying (exact dual) profiles diverge".into(),
        ));
    }
    if let PairKernel::Minkowski { d, sigma2 } = kernel {
        if *d == 0.0 && *sigma2 == 0.0 {
            return Err(Error::InvalidArgument(
                "time-ordered kernel at coincident pointlike positions".into(),
            ));
        }
    }
    let kappa = common_shift(p, q);
    let corr = Correlation::new(
        Side {
            prof: p,
            shift: kappa,
            conj: true,
        },
        Side {
            prof: q,
            shift: kappa,
            conj: true,
        },
    );
    let (lo, hi) = corr.range();
    let top = lo.abs().max(hi.abs());
    // Fold t < t' onto t > t': G_F(u) = K(|u|).
    let s = |u: f64| corr.eval(u) + corr.eval(-u);
    let breaks: Vec<f64> = corr.kinks().into_iter().map(f64::abs).chain([0.0]).collect();
    let tau = p.timescale().min(q.timescale());
    let poles = if needs_subtraction(kernel, eps, tau) {
        kernel_poles(kernel, n)
    } else {
        vec![]
    };
    let kf = |z: C64| kernel_value(kernel, z, n);
    outer(&s, 0.0, top, breaks, &kf, &poles, eps, corr.fd_step())
}

/// int conj(p(t)) conj(q(t)) dt (on the common shifted line).
pub(crate) fn equal_time_overlap(p: &Profile, q: &Profile) -> Result<C64> {
    let kappa = common_shift(p, q);
    let (pa, pb) = p.support();
    let (qa, qb) = q.support();
    let (lo, hi) = (pa.max(qa), pb.min(qb));
    if hi <= lo {
        return Ok(zero());
    }
    let osc = if kappa > 0.0 {
        0.0
    } else {
        p.oscillation() + q.oscillation()
    };
    let tau = p.timescale().min(q.timescale());
    let mut h = tau / 20.0;
    if osc > 0.0 {
        h = h.min(PI / (4.0 * osc));
    }
    let n = ((hi - lo) / h).ceil().max(1.0) as usize;
    let mut pts: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    pts.extend(
        p.breakpoints()
            .into_iter()
            .chain(q.breakpoints())
            .filter(|&b| b > lo && b < hi),
    );
    pts.sort_by(f64::total_cmp);
    let f = |t: f64| (p.body_at(t, kappa) * q.body_at(t, kappa)).conj();
    Ok(quad::adaptive_scaled(f, &pts, OUTER_REL, OUTER_FLOOR)?.value)
}

/// int dw rho(w) e^{-w^2 sigma2/2} e^{-w eps} w^n P(w) conj(Q(w)), the
/// frequency-domain form of [`wightman_pair`].
pub(crate) fn spectral_pair(
    p: &Profile,
    q: &Profile,
    weight: &SpectralWeight,
    sigma2: f64,
    n: usize,
    eps: f64,
) -> Result<C64> {
    let integrand = |w: f64| -> Result<C64> {
        let pw = p.transform(w)?;
        let qw = q.transform(w)?;
        Ok(pw * qw.conj() * w.powi(n as i32) * (-0.5 * w * w * sigma2 - w * eps).exp())
    };
    match weight {
        SpectralWeight::Atoms(atoms) => {
            let mut acc = zero();
            for &(w, c) in atoms {
                acc += integrand(w)? * c;
            }
            Ok(acc)
        }
        SpectralWeight::Continuum { separation } => {
            let d = *separation;
            let tau = p.timescale().min(q.timescale());
            let om = p.omega().max(q.omega());
            // Gaussian spectra concentrate at w ~ 1/(Omega T^2).
            let h0 = 0.5 * (1.0 / tau).min(1.0 / (om.max(1e-300) * tau * tau));
            let mut failure = None;
            let f = |w: f64| match integrand(w) {
                Ok(v) => v * crate::field::continuum_density(w, d),
                Err(e) => {
                    failure.get_or_insert(e);
                    zero()
                }
            };
            let tol = Tol {
                abs: 0.0,
                rel: 1e-12,
                max_intervals: 200_000,
            };
            let r = semi_infinite_capped(f, h0, 64.0 / tau, tol);
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(r?.value)
        }
    }
}

// Panels double from h0 up to `hmax`, then stay at hmax. Stops once the
// remaining tail, extrapolated from the decay of the last two panels as a
// power law, is below tolerance.
fn semi_infinite_capped<F: FnMut(f64) -> C64>(mut f: F, h0: f64, hmax: f64, tol: Tol) -> Result<quad::Quad> {
    let mut lo = 0.0;
    let mut h = h0;
    let mut value = zero();
    let mut error = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    let mut quiet = 0;
    for _ in 0..1_000_000 {
        let panel_tol = Tol {
            abs: tol.abs.max(1e-3 * tol.rel * value.norm()),
            ..tol
        };
        let q = quad::adaptive_floor(&mut f, &[lo, lo + h], panel_tol, SPECTRAL_FLOOR)?;
        value += q.value;
        error += q.error;
        // magnitude per unit length at the panel midpoint
        let (mid, mag) = (lo + 0.5 * h, q.value.norm() / h);
        let target = tol.rel * value.norm();
        let tail = match prev {
            Some((_, g0)) if mag == 0.0 || g0 == 0.0 => {
                if mag == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Some((m0, g0)) => {
                let p = (g0 / mag).ln() / (mid / m0).ln();
                if p > 1.5 {
                    mag * (lo + h) / (p - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            None => f64::INFINITY,
        };
        if tail <= target && q.value.norm() <= 1e-2 * target {
            quiet += 1;
            if quiet >= 2 {
                return Ok(quad::Quad { value, error });
            }
        } else {
            quiet = 0;
        }
        prev = Some((mid, mag));
        lo += h;
        h = (2.0 * h).min(hmax.max(h0));
    }
    Err(Error::Numerical {
        what: "spectral integral did not settle",
        estimate: error,
    })
}
