use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use udw_core::field::{self, Event, FieldModel, SpectralWeight};

fn minkowski_closed(a: &Event, b: &Event, eps: f64) -> C64 {
    let r2: f64 = (0..3).map(|k| (a.x[k] - b.x[k]).powi(2)).sum();
    let s = C64::new(a.t - b.t, -eps);
    1.0 / ((r2 - s * s) * (4.0 * PI * PI))
}

fn cavity_sum(a: &Event, b: &Event, len: f64, modes: usize) -> C64 {
    (1..=modes)
        .map(|k| {
            let w = k as f64 * PI / len;
            let u = (k as f64 * PI * a.x[0] / len).sin() * (k as f64 * PI * b.x[0] / len).sin();
            C64::from_polar(u / (w * len), -w * (a.t - b.t))
        })
        .sum()
}

#[test]
fn minkowski_matches_closed_form() {
    let m = FieldModel::minkowski(1e-3).unwrap();
    for (a, b) in [
        (Event::at(0.3, 0.0), Event::at(-0.4, 1.1)),
        (Event::new(2.0, [0.1, 0.2, -0.3]), Event::new(0.5, [1.0, -0.4, 0.6])),
        (Event::at(1.0, 0.0), Event::at(0.0, 1.0)),
        (Event::at(0.0, 0.0), Event::at(0.0, 0.0)),
    ] {
        let w = field::wightman(&m, &a, &b).unwrap();
        let c = minkowski_closed(&a, &b, 1e-3);
        assert!((w - c).norm() <= 1e-10 * c.norm(), "{w} vs {c}");
    }
}

#[test]
fn cavity_matches_mode_sum() {
    let m = FieldModel::cavity(4.0, 5).unwrap();
    for (a, b) in [
        (Event::at(0.0, 1.1), Event::at(0.7, 2.7)),
        (Event::at(3.0, 0.4), Event::at(-1.0, 0.4)),
    ] {
        let w = field::wightman(&m, &a, &b).unwrap();
        let c = cavity_sum(&a, &b, 4.0, 5);
        assert!((w - c).norm() < 1e-13, "{w} vs {c}");
    }
    assert!(
        field::wightman(&m, &Event::at(0.0, 0.0), &Event::at(1.0, 2.0))
            .unwrap()
            .norm()
            < 1e-15
    );
    let freqs = m.mode_frequencies();
    assert_eq!(freqs.len(), 5);
    assert!((freqs[2] - 3.0 * PI / 4.0).abs() < 1e-15);
}

#[test]
fn derivative_kernel_matches_finite_differences() {
    let h = 1e-4;
    for m in [
        FieldModel::minkowski(0.05).unwrap(),
        FieldModel::cavity(4.0, 5).unwrap(),
    ] {
        let (a, b) = (Event::at(0.4, 1.1), Event::at(-0.2, 2.0));
        let shift = |e: &Event, dt: f64| Event::new(e.t + dt, e.x);
        let w = |da: f64, db: f64| field::wightman(&m, &shift(&a, da), &shift(&b, db)).unwrap();
        let fd = (w(h, h) - w(h, -h) - w(-h, h) + w(-h, -h)) / (4.0 * h * h);
        let d = field::wightman_dtau(&m, &a, &b).unwrap();
        assert!((fd - d).norm() < 1e-6 * d.norm().max(1.0), "{m:?}: {fd} vs {d}");
    }
}

#[test]
fn feynman_orders_times() {
    let m = FieldModel::cavity(4.0, 5).unwrap();
    let (a, b) = (Event::at(1.0, 1.1), Event::at(0.2, 2.0));
    assert_eq!(
        field::feynman(&m, &a, &b).unwrap(),
        field::wightman(&m, &a, &b).unwrap()
    );
    assert_eq!(
        field::feynman(&m, &b, &a).unwrap(),
        field::wightman(&m, &a, &b).unwrap()
    );
}

#[test]
fn spectral_weights() {
    let m = FieldModel::minkowski(1e-4).unwrap();
    let sw = field::spectral_weight(&m, &[0.0; 3], &[2.0, 0.0, 0.0]).unwrap();
    assert!((sw.density(0.7) - (0.7f64 * 2.0).sin() / (4.0 * PI * PI * 2.0)).abs() < 1e-16);
    let sw0 = field::spectral_weight(&m, &[0.0; 3], &[0.0; 3]).unwrap();
    assert!((sw0.density(0.7) - 0.7 / (4.0 * PI * PI)).abs() < 1e-16);
    let cav = FieldModel::cavity(4.0, 3).unwrap();
    match field::spectral_weight(&cav, &[1.1, 0.0, 0.0], &[2.7, 0.0, 0.0]).unwrap() {
        SpectralWeight::Atoms(atoms) => assert_eq!(atoms.len(), 3),
        other => panic!("expected atoms, got {other:?}"),
    }
}

#[test]
fn invalid_models_are_rejected() {
    assert!(FieldModel::minkowski(0.0).is_err());
    assert!(FieldModel::minkowski(-1.0).is_err());
    assert!(FieldModel::cavity(0.0, 3).is_err());
    assert!(FieldModel::cavity(4.0, 0).is_err());
    let m = FieldModel::minkowski(1e-3).unwrap();
    assert!(field::wightman(&m, &Event::at(f64::NAN, 0.0), &Event::at(0.0, 0.0)).is_err());
    assert_eq!(m.eps_schedule(), vec![1e-1, 1e-2, 1e-3]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    // W(a, b) = conj W(b, a)
    #[test]
    fn wightman_is_hermitian(ta in -3.0f64..3.0, tb in -3.0f64..3.0, xa in 0.1f64..3.9, xb in 0.1f64..3.9) {
        let (a, b) = (Event::at(ta, xa), Event::at(tb, xb));
        for m in [FieldModel::minkowski(0.01).unwrap(), FieldModel::cavity(4.0, 7).unwrap()] {
            let ab = field::wightman(&m, &a, &b).unwrap();
            let ba = field::wightman(&m, &b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() <= 1e-10 * ab.norm().max(1e-3));
        }
    }

    #[test]
    fn wightman_depends_on_time_difference(t in -3.0f64..3.0, shift in -5.0f64..5.0, x in 0.5f64..3.0) {
        let m = FieldModel::minkowski(0.01).unwrap();
        let w1 = field::wightman(&m, &Event::at(t, 0.0), &Event::at(0.0, x)).unwrap();
        let w2 = field::wightman(&m, &Event::at(t + shift, 0.0), &Event::at(shift, x)).unwrap();
        prop_assert!((w1 - w2).norm() <= 1e-9 * w1.norm());
    }
}
