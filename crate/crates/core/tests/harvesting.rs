use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use udw_core::detector::{CouplingKind, DetectorConfig};
use udw_core::field::FieldModel;
use udw_core::harvesting::{self, DetectorId, DetectorPair};
use udw_core::switching::SwitchingSpec;

const LEN: f64 = 4.0;
const MODES: usize = 5;
const XA: f64 = 1.1;
const XB: f64 = 2.7;

// (w_k, u_k(a) u_k(b) / (w_k L)) for the Dirichlet cavity.
fn mode_weights(a: f64, b: f64) -> Vec<(f64, f64)> {
    (1..=MODES)
        .map(|k| {
            let w = k as f64 * PI / LEN;
            let u = (k as f64 * PI * a / LEN).sin() * (k as f64 * PI * b / LEN).sin();
            (w, u / (w * LEN))
        })
        .collect()
}

// int_0^inf e^{-u^2/4 - i w u} du by Simpson on [0, 24].
fn half_line(w: f64) -> C64 {
    let n = 48_000;
    let h = 24.0 / n as f64;
    let f = |u: f64| C64::from_polar((-0.25 * u * u).exp(), -w * u);
    let mut s = f(0.0) + f(24.0);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

fn cavity_pair(omega: f64, lambda: f64) -> DetectorPair {
    let d = DetectorConfig::amplitude(SwitchingSpec::gaussian(1.0).unwrap(), omega, lambda);
    DetectorPair::new(d.clone().with_position([XA, 0.0, 0.0]), d.with_position([XB, 0.0, 0.0])).unwrap()
}

#[test]
fn cavity_entries_match_mode_sums() {
    let cav = FieldModel::cavity(LEN, MODES).unwrap();
    let omega = 2.0;
    let h = harvesting::harvest(&cavity_pair(omega, 1.0), &cav, CouplingKind::Amplitude).unwrap();
    let power = |w: f64| (-(omega + w) * (omega + w)).exp();
    let l_aa: f64 = mode_weights(XA, XA).iter().map(|&(w, c)| c * power(w)).sum();
    let l_bb: f64 = mode_weights(XB, XB).iter().map(|&(w, c)| c * power(w)).sum();
    let l_ab: f64 = mode_weights(XA, XB).iter().map(|&(w, c)| c * power(w)).sum();
    // M = -lambda^2 e^{-Omega^2} / sqrt(pi) sum_k c_k int_0^inf e^{-u^2/4 - i w_k u} du
    let m: C64 = mode_weights(XA, XB).iter().map(|&(w, c)| half_line(w) * c).sum::<C64>()
        * (-(-omega * omega).exp() / PI.sqrt());

    assert!((h.l_aa - l_aa).abs() < 1e-10 * l_aa, "{} vs {l_aa}", h.l_aa);
    assert!((h.l_bb - l_bb).abs() < 1e-10 * l_bb);
    assert!((h.l_ab - l_ab).norm() < 1e-10 * l_aa, "{} vs {l_ab}", h.l_ab);
    assert!((h.m - m).norm() < 1e-8 * m.norm(), "{} vs {m}", h.m);
    let (v, n) = harvesting::negativity(l_aa, l_bb, m).unwrap();
    assert!((h.v_score - v).abs() < 1e-8 * m.norm());
    assert!((h.negativity - n).abs() < 1e-8 * m.norm());
}

#[test]
fn lij_ordering_and_conjugation() {
    let cav = FieldModel::cavity(LEN, MODES).unwrap();
    let base = DetectorConfig::amplitude(SwitchingSpec::gaussian(1.0).unwrap(), 2.0, 1.0);
    let pair = DetectorPair::new(
        base.clone().with_position([XA, 0.0, 0.0]),
        base.with_position([XB, 0.0, 0.0]).with_center(0.8),
    )
    .unwrap();
    let ab = harvesting::lij(&pair, DetectorId::A, DetectorId::B, &cav).unwrap();
    let ba = harvesting::lij(&pair, DetectorId::B, DetectorId::A, &cav).unwrap();
    assert!((ab - ba.conj()).norm() < 1e-12 * ab.norm());
    // a delay only rotates each mode's contribution
    let modulus: f64 = mode_weights(XA, XB)
        .iter()
        .map(|&(w, c)| C64::from_polar(c * (-(2.0 + w) * (2.0 + w)).exp(), (2.0 + w) * 0.8))
        .sum::<C64>()
        .norm();
    assert!((ab.norm() - modulus).abs() < 1e-10 * modulus);
}

#[test]
fn m_is_symmetric_and_scales_with_couplings() {
    let cav = FieldModel::cavity(LEN, MODES).unwrap();
    let pair = cavity_pair(2.0, 1.0);
    let swapped = DetectorPair::new(pair.det_b.clone(), pair.det_a.clone()).unwrap();
    let m = harvesting::m_term(&pair, &cav).unwrap();
    let ms = harvesting::m_term(&swapped, &cav).unwrap();
    assert!((m - ms).norm() < 1e-12 * m.norm());
    let scaled = harvesting::m_term(&cavity_pair(2.0, 0.37), &cav).unwrap();
    assert!((scaled - m * 0.37 * 0.37).norm() < 1e-13 * m.norm());
}

#[test]
fn derivative_m_direct_matches_by_parts_plus_remnant_on_cavity() {
    let cav = FieldModel::cavity(LEN, MODES).unwrap();
    let d = DetectorConfig::derivative(SwitchingSpec::gaussian(1.0).unwrap(), 5.0, 1.0);
    let pair = DetectorPair::new(d.clone().with_position([XA, 0.0, 0.0]), d.with_position([XB, 0.0, 0.0])).unwrap();
    let r = harvesting::m_term_derivative_report(&pair, &cav).unwrap();
    assert!(r.mismatch < 1e-6, "{r:?}");
    assert!(r.remnant.norm() > 0.0);
    let scale = r.direct.norm().max(r.by_parts.norm());
    assert!((((r.direct - r.by_parts) - r.remnant).norm() / scale - r.mismatch).abs() < 1e-15);
}

#[test]
fn spacelike_flag_uses_support_and_cut() {
    let m = FieldModel::minkowski(1e-4).unwrap();
    let c = DetectorConfig::amplitude(SwitchingSpec::compact_cosine_sq(1.0).unwrap(), 10.0, 1.0);
    let near = DetectorPair::new(c.clone(), c.clone().with_position([0.9, 0.0, 0.0])).unwrap();
    let far = DetectorPair::new(c.clone(), c.with_position([1.1, 0.0, 0.0])).unwrap();
    let hn = harvesting::harvest(&near, &m, CouplingKind::Amplitude).unwrap();
    let hf = harvesting::harvest(&far, &m, CouplingKind::Amplitude).unwrap();
    assert!(!hn.spacelike);
    assert!(hf.spacelike);
    assert_eq!(hf.truncation_bound, 0.0);

    let g = DetectorConfig::amplitude(SwitchingSpec::gaussian(1.0).unwrap(), 10.0, 1.0);
    let pair = DetectorPair::new(g.clone(), g.with_position([2.0, 0.0, 0.0])).unwrap();
    let h = harvesting::harvest(&pair, &m, CouplingKind::Amplitude).unwrap();
    assert!(!h.spacelike);
    // erfc(6 / sqrt 2) per detector
    assert!((h.truncation_bound - 2.0 * 1.973_175_400_848_8e-9).abs() < 1e-20);
}

#[test]
fn negativity_closed_form_known_values() {
    let (v, n) = harvesting::negativity(0.01, 0.01, C64::new(0.0, 0.02)).unwrap();
    assert!((v - 0.01).abs() < 1e-16 && (n - 0.01).abs() < 1e-16);
    let (v, n) = harvesting::negativity(0.03, 0.01, C64::new(0.01, 0.0)).unwrap();
    assert!((v - (2f64.sqrt() * 0.01 - 0.02)).abs() < 1e-16);
    assert_eq!(n, 0.0);
    assert!(harvesting::negativity(-0.1, 0.0, C64::new(0.0, 0.0)).is_err());
}

#[test]
fn invalid_pairs_are_rejected() {
    let cav = FieldModel::cavity(LEN, MODES).unwrap();
    let g = DetectorConfig::amplitude(SwitchingSpec::gaussian(1.0).unwrap(), 1.0, 1.0);
    let der = DetectorConfig::derivative(SwitchingSpec::gaussian(1.0).unwrap(), 1.0, 1.0);
    let mixed = DetectorPair::new(
        g.clone().with_position([1.0, 0.0, 0.0]),
        der.with_position([2.0, 0.0, 0.0]),
    )
    .unwrap();
    assert!(harvesting::m_term(&mixed, &cav).is_err());
    let pair = cavity_pair(1.0, 1.0);
    assert!(harvesting::duality_residual_pair(&pair, 0.0, &cav).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_matches_partial_transpose(
        l_aa in 0.0f64..0.05,
        l_bb in 0.0f64..0.05,
        m_re in -0.05f64..0.05,
        m_im in -0.05f64..0.05,
    ) {
        let m = C64::new(m_re, m_im);
        let (_, n) = harvesting::negativity(l_aa, l_bb, m).unwrap();
        let pt = harvesting::partial_transpose_negativity(l_aa, l_bb, C64::new(0.0, 0.0), m);
        prop_assert!((n - pt).abs() <= 1e-10);
    }

    #[test]
    fn density_matrix_is_hermitian_with_unit_trace(
        l_aa in 0.0f64..0.1,
        l_bb in 0.0f64..0.1,
        l_ab in (-0.05f64..0.05, -0.05f64..0.05),
        m in (-0.05f64..0.05, -0.05f64..0.05),
    ) {
        let rho = harvesting::density_matrix(l_aa, l_bb, C64::new(l_ab.0, l_ab.1), C64::new(m.0, m.1));
        let trace: C64 = (0..4).map(|k| rho[k][k]).sum();
        prop_assert!((trace - 1.0).norm() < 1e-15);
        for r in 0..4 {
            for c in 0..4 {
                prop_assert_eq!(rho[r][c], rho[c][r].conj());
            }
        }
    }

    // swapping the detectors swaps L_AA and L_BB and leaves N unchanged
    #[test]
    fn negativity_is_symmetric(l_aa in 0.0f64..0.05, l_bb in 0.0f64..0.05, m_re in -0.05f64..0.05, m_im in -0.05f64..0.05) {
        let m = C64::new(m_re, m_im);
        let a = harvesting::negativity(l_aa, l_bb, m).unwrap();
        let b = harvesting::negativity(l_bb, l_aa, m).unwrap();
        prop_assert!((a.0 - b.0).abs() < 1e-16 && a.1 >= 0.0);
    }
}
