use steklov::curve_bem::{boundary_residual, curve_steklov, discretize, Curve, CurveWeight};
use steklov::ellipse::{eigen_pair, ordered_spectrum};
use steklov::trace::node;

#[test]
fn bem_reproduces_closed_form_ellipse_spectrum() {
    for &q in &[1.0_f64, 2.0, 3.0, 4.0] {
        let curve = Curve::Ellipse { q };
        let w = CurveWeight::CriticalEllipse { q };
        let s = curve_steklov(&curve, &w, 256, 11).unwrap();
        let (exact, _) = ordered_spectrum(q, 11).unwrap();
        for k in 1..11 {
            let rel = (s.eigenvalues[k] - exact.eigenvalues[k]).abs() / exact.eigenvalues[k];
            assert!(rel < 1e-6, "q={q} k={k}: {} vs {}", s.eigenvalues[k], exact.eigenvalues[k]);
        }
    }
}

#[test]
fn closed_form_traces_satisfy_discrete_dtn() {
    let q = 3.0_f64;
    let curve = Curve::Ellipse { q };
    let w = CurveWeight::CriticalEllipse { q };
    let d = discretize(&curve, 256).unwrap();
    for n in 1..5 {
        let p = eigen_pair(n, q).unwrap();
        let re: Vec<f64> = (0..256).map(|j| p.traces(node(j, 256)).0).collect();
        let im: Vec<f64> = (0..256).map(|j| p.traces(node(j, 256)).1).collect();
        assert!(boundary_residual(&curve, &d, &w, &re, p.sigma) < 1e-8);
        assert!(boundary_residual(&curve, &d, &w, &im, p.tau) < 1e-8);
    }
}
