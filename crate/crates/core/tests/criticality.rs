use steklov::curve_bem::{curve_steklov, Curve, CurveWeight};
use steklov::exact_dtn::Domain;
use steklov::functionals::{criticality_check, evaluate, partials, FunctionalSpec};
use steklov::trace::BoundaryWeight;
use steklov::weighted_eig::weighted_spectrum;

#[test]
fn disk_is_critical_for_ht_plus() {
    let s = weighted_spectrum::<f64>(&Domain::Disk, &BoundaryWeight::uniform(1), 16, 6).unwrap();
    for &t in &[0.2, 0.5, 1.0] {
        let r = criticality_check(&FunctionalSpec::HtPlus { t }, &s).unwrap();
        assert!(r.max_defect < 1e-8, "t={t}: {r:?}");
        assert!(r.fit_residual < 1e-10);
        assert!(r.positive_semidefinite);
    }
    let p = partials(&FunctionalSpec::HtPlus { t: 1.0 }, &s).unwrap();
    assert_eq!(p.flagged, vec![1..3]);
}

#[test]
fn ellipse_critical_exactly_when_t_equals_q() {
    for &q in &[1.5_f64, 2.0, 2.5] {
        let s = curve_steklov(&Curve::Ellipse { q }, &CurveWeight::CriticalEllipse { q }, 256, 6).unwrap();
        let good = criticality_check(&FunctionalSpec::HtPlus { t: q }, &s).unwrap();
        assert!(good.max_defect < 1e-8, "q={q}: {good:?}");
        let bad = criticality_check(&FunctionalSpec::HtPlus { t: q + 0.5 }, &s).unwrap();
        assert!(bad.max_defect > 1e-2, "q={q}: {bad:?}");
        let v = evaluate(&FunctionalSpec::Fmn { m: 1, n: 2 }, &s).unwrap();
        assert!((v - 1.0 / (4.0 * std::f64::consts::PI.powi(2))).abs() < 1e-9);
    }
}
