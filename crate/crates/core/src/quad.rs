//! Gauss-Kronrod (G7/K15) quadrature for complex-valued integrands, fixed
//! composite and globally adaptive, plus polynomial extrapolation to zero.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of a quadrature: value and error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: C64,
    pub error: f64,
}

/// One K15 panel on [a, b]. Returns the Kronrod value, the QUADPACK error
/// estimate and the integral of |f| (used for tolerance scaling).
pub fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    let mut rabs = fc.norm() * WGK[7];
    let mut fv1 = [C64::new(0.0, 0.0); 7];
    let mut fv2 = [C64::new(0.0, 0.0); 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        rk += (f1 + f2) * WGK[j];
        rabs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            rg += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = rk * 0.5;
    let mut rasc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        rasc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
    }
    let result = rk * h;
    let rabs = rabs * h.abs();
    let rasc = rasc * h.abs();
    let mut err = ((rk - rg) * h).norm();
    if rasc != 0.0 && err != 0.0 {
        err = rasc * (200.0 * err / rasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * rabs;
    if rabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && round > err {
        err = round;
    }
    (result, err, rabs)
}

/// Composite K15 with `panels` equal panels. Deterministic and smooth in
/// any parameter the integrand depends on.
pub fn fixed<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, panels: usize) -> C64 {
    let n = panels.max(1);
    let h = (b - a) / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        let lo = a + h * k as f64;
        let hi = if k + 1 == n { b } else { lo + h };
        acc += gk15(&mut f, lo, hi).0;
    }
    acc
}

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tol {
    fn default() -> Self {
        Tol {
            abs: 1e-14,
            rel: 1e-12,
            max_intervals: 20_000,
        }
    }
}

struct Seg {
    a: f64,
    b: f64,
    val: C64,
    err: f64,
}

impl PartialEq for Seg {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == std::cmp::Ordering::Equal
    }
}
impl Eq for Seg {}
impl PartialOrd for Seg {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Seg {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err).then(o.a.total_cmp(&self.a))
    }
}

/// Globally adaptive bisection over [points[0], points[last]], with the
/// interior points treated as forced breakpoints.
pub fn adaptive<F: FnMut(f64) -> C64>(f: F, points: &[f64], tol: Tol) -> Result<Quad> {
    run(f, points, tol, 0.0)
}

/// Like [`adaptive`], but the absolute tolerance is raised to
/// `floor * int |f|` (estimated on the initial panels). Suited to integrals
/// whose size is unknown in advance.
pub fn adaptive_scaled<F: FnMut(f64) -> C64>(f: F, points: &[f64], rel: f64, floor: f64) -> Result<Quad> {
    let tol = Tol {
        abs: 0.0,
        rel,
        max_intervals: 20_000,
    };
    run(f, points, tol, floor)
}

/// [`adaptive`] with the absolute tolerance raised to at least
/// `floor * int |f|`.
pub fn adaptive_floor<F: FnMut(f64) -> C64>(f: F, points: &[f64], tol: Tol, floor: f64) -> Result<Quad> {
    run(f, points, tol, floor)
}

fn run<F: FnMut(f64) -> C64>(mut f: F, points: &[f64], mut tol: Tol, floor: f64) -> Result<Quad> {
    let mut heap = std::collections::BinaryHeap::new();
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut scale = 0.0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (val, e, rabs) = gk15(&mut f, w[0], w[1]);
            total += val;
            err += e;
            scale += rabs;
            heap.push(Seg {
                a: w[0],
                b: w[1],
                val,
                err: e,
            });
        }
    }
    tol.abs = tol.abs.max(floor * scale);
    let mut steps = 0usize;
    loop {
        if err <= tol.abs.max(tol.rel * total.norm()) {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Numerical {
                what: "adaptive quadrature hit the interval limit",
                estimate: err,
            });
        }
        let s = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        if s.err == 0.0 {
            heap.push(s);
            break;
        }
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            // Not splittable in double precision; freeze it.
            err -= s.err;
            heap.push(Seg { err: 0.0, ..s });
            continue;
        }
        let (v1, e1, _) = gk15(&mut f, s.a, m);
        let (v2, e2, _) = gk15(&mut f, m, s.b);
        total += v1 + v2 - s.val;
        err += e1 + e2 - s.err;
        heap.push(Seg {
            a: s.a,
            b: m,
            val: v1,
            err: e1,
        });
        heap.push(Seg {
            a: m,
            b: s.b,
            val: v2,
            err: e2,
        });
        steps += 1;
        if steps % 256 == 0 {
            // Re-sum to keep the running totals free of drift.
            total = heap.iter().map(|s| s.val).sum();
            err = heap.iter().map(|s| s.err).sum();
        }
    }
    // Sum in position order so the value does not depend on heap layout.
    let mut segs = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value: C64 = segs.iter().map(|s| s.val).sum();
    let error: f64 = segs.iter().map(|s| s.err).sum();
    Ok(Quad { value, error })
}

/// Integral over [a, inf) by marching panels of doubling width until two
/// consecutive panels fall below the tolerance. `h0` sets the first width.
pub fn semi_infinite<F: FnMut(f64) -> C64>(mut f: F, a: f64, h0: f64, tol: Tol) -> Result<Quad> {
    let mut lo = a;
    let mut h = h0;
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut quiet = 0;
    for _ in 0..200 {
        let q = adaptive(&mut f, &[lo, lo + h], tol)?;
        value += q.value;
        error += q.error;
        if q.value.norm() <= tol.abs.max(tol.rel * value.norm()) {
            quiet += 1;
            if quiet >= 2 {
                return Ok(Quad { value, error });
            }
        } else {
            quiet = 0;
        }
        lo += h;
        h *= 2.0;
    }
    Err(Error::Numerical {
        what: "semi-infinite quadrature did not settle",
        estimate: error,
    })
}

/// Neville extrapolation of the polynomial through (xs, ys) to x = 0.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[C64]) -> C64 {
    let n = xs.len();
    let mut p: Vec<C64> = ys.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            let (xi, xj) = (xs[i], xs[i + m]);
            p[i] = (p[i] * (-xj) - p[i + 1] * (-xi)) / (xi - xj);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_of_degree_up_to_21_are_exact_on_one_panel() {
        let (v, _, _) = gk15(&mut |x: f64| C64::new(x.powi(20), x.powi(21)), 0.0, 1.0);
        assert!((v.re - 1.0 / 21.0).abs() < 1e-15);
        assert!((v.im - 1.0 / 22.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_resolves_a_narrow_lorentzian() {
        let eps = 1e-4;
        let q = adaptive(
            |x| C64::new(eps / (x * x + eps * eps), 0.0),
            &[-1.0, 0.0, 1.0],
            Tol::default(),
        )
        .unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((q.value.re - exact).abs() < 1e-11);
    }

    #[test]
    fn semi_infinite_exponential() {
        let q = semi_infinite(|x| C64::new((-x).exp(), 0.0), 0.0, 1.0, Tol::default()).unwrap();
        assert!((q.value.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn neville_recovers_quadratic_intercept() {
        let xs = [1e-2, 1e-3, 1e-4];
        let ys: Vec<C64> = xs.iter().map(|&x| C64::new(3.0 - 2.0 * x + 5.0 * x * x, x)).collect();
        let y0 = extrapolate_to_zero(&xs, &ys);
        assert!((y0 - C64::new(3.0, 0.0)).norm() < 1e-13);
    }
}
