//! Faddeeva function w(z) = e^{-z^2} erfc(-iz) and its first derivatives.

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64 as C64;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// |z| above which derivatives come from the asymptotic series instead of
/// the recurrence (which cancels badly for large |z|).
const ASYMPTOTIC_RADIUS: f64 = 8.0;

pub fn w(z: C64) -> C64 {
    z.w()
}

/// w, w', w'', w''', w'''' at z. Valid for Im z >= 0 (and slightly below).
pub fn w_derivs(z: C64) -> [C64; 5] {
    if z.norm() > ASYMPTOTIC_RADIUS && z.im > -1.0 {
        return asymptotic(z);
    }
    let i2 = C64::new(0.0, 2.0 * FRAC_1_SQRT_PI);
    let mut d = [C64::new(0.0, 0.0); 5];
    d[0] = w(z);
    d[1] = -2.0 * z * d[0] + i2;
    for n in 1..4 {
        d[n + 1] = -2.0 * n as f64 * d[n - 1] - 2.0 * z * d[n];
    }
    d
}

// w(z) ~ (i/sqrt(pi)) sum_k c_k z^{-2k-1}, c_k = (2k-1)!!/2^k.
fn asymptotic(z: C64) -> [C64; 5] {
    let zi = z.inv();
    let zi2 = zi * zi;
    let mut out = [C64::new(0.0, 0.0); 5];
    let mut c = 1.0;
    // zpow = z^{-(2k+1)}
    let mut zpow = zi;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        let m = (2 * k + 1) as f64;
        let mut term = zpow * c;
        let size = term.norm();
        if size > last {
            break;
        }
        last = size;
        // n-th derivative of z^{-m}: (-1)^n m(m+1)..(m+n-1) z^{-m-n}
        for (n, slot) in out.iter_mut().enumerate() {
            *slot += term;
            term = term * (-(m + n as f64)) * zi;
        }
        if size < 1e-18 * out[0].norm() {
            break;
        }
        c *= (2 * k + 1) as f64 / 2.0;
        zpow *= zi2;
    }
    let pref = C64::new(0.0, FRAC_1_SQRT_PI);
    for slot in out.iter_mut() {
        *slot *= pref;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_value() {
        // w(1 + 2i) from a 30-digit mpmath evaluation.
        let v = w(C64::new(1.0, 2.0));
        assert!((v - C64::new(0.218_492_615_274_890_67, 0.092_997_809_392_601_88)).norm() < 1e-15);
    }

    // Fourth derivatives frozen from a 40-digit mpmath evaluation of
    // d^4/dz^4 [exp(-z^2) erfc(-iz)].
    const W4: [(f64, f64, f64, f64); 3] = [
        (8.25, 3.3, 2.410576434986776e-4, -1.0230724967677703e-4),
        (-5.5, 7.15, -2.204609254639198e-4, 1.0985836024066912e-5),
        (0.0, 8.69, 2.4838887625763202e-4, 0.0),
    ];

    #[test]
    fn asymptotic_branch_matches_high_precision_values() {
        for &(x, y, re, im) in &W4 {
            let d = asymptotic(C64::new(x, y));
            assert!((d[4] - C64::new(re, im)).norm() < 1e-13 * d[4].norm());
        }
    }

    #[test]
    fn recurrence_branch_is_close_near_switch_radius() {
        for &(x, y, re, im) in &W4 {
            let z = C64::new(x, y);
            let i2 = C64::new(0.0, 2.0 * FRAC_1_SQRT_PI);
            let mut d = [C64::new(0.0, 0.0); 5];
            d[0] = w(z);
            d[1] = -2.0 * z * d[0] + i2;
            for n in 1..4 {
                d[n + 1] = -2.0 * n as f64 * d[n - 1] - 2.0 * z * d[n];
            }
            assert!((d[4] - C64::new(re, im)).norm() < 1e-7 * d[4].norm());
        }
    }
}
