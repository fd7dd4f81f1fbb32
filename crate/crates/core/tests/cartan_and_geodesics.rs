use std::f64::consts::TAU;

use finsler_ht::cartan::{coframe, curve_curvature, invariants_ijk, sweep};
use finsler_ht::crofton::{
    crofton_arclength, crofton_length_identity_check, crofton_norm, HyperplaneMeasure, LengthCheckOptions,
};
use finsler_ht::curves::{Arc, CurveSpec};
use finsler_ht::finsler::{
    geodesic, hilbert_one_form, ConformalChart, DomainBox, EuclideanChart, FinslerChart, RandersChart, UnitBundlePoint,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn randers_surface() -> RandersChart {
    RandersChart::new(
        DMatrix::from_row_slice(2, 2, &[1.2, 0.1, 0.1, 0.9]),
        v(&[0.15, -0.1]),
        DMatrix::from_row_slice(2, 2, &[0.03, 0.05, -0.02, 0.04]),
        DomainBox::cube(2, 2.0),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn omega1_is_the_hilbert_form(x1 in -1.0..1.0f64, x2 in -1.0..1.0f64, theta in 0.0..TAU) {
        let chart = randers_surface();
        let c = coframe(&chart, [x1, x2], theta).unwrap();
        let p = UnitBundlePoint::new(&chart, v(&[x1, x2]), v(&c.v)).unwrap();
        let hilbert = hilbert_one_form(&chart, &p);
        prop_assert!((hilbert[0] - c.omega1[0]).abs() < 1e-9);
        prop_assert!((hilbert[1] - c.omega1[1]).abs() < 1e-9);
        prop_assert!(c.omega1[2].abs() < 1e-12);
        // ω₁(v) = F(v) = 1 and ω₂(v) = 0.
        prop_assert!((c.omega1[0] * c.v[0] + c.omega1[1] * c.v[1] - 1.0).abs() < 1e-9);
        prop_assert!((c.omega2[0] * c.v[0] + c.omega2[1] * c.v[1]).abs() < 1e-9);
    }

    #[test]
    fn riemannian_surfaces_have_no_cartan_scalar(x1 in -1.0..1.0f64, x2 in -1.0..1.0f64, theta in 0.0..TAU) {
        let sphere = ConformalChart::unit_sphere(2, 2.0);
        let inv = invariants_ijk(&sphere, [x1, x2], theta).unwrap();
        prop_assert!(inv.i.abs() < 1e-6 && inv.j.abs() < 1e-5);
        prop_assert!((inv.k - 1.0).abs() < 1e-5, "K = {}", inv.k);
        prop_assert!(inv.residuals.iter().all(|r| r.abs() < 1e-5));
    }
}

#[test]
fn euclidean_circle_has_curvature_one_over_radius() {
    let chart = EuclideanChart::standard(2, 4.0);
    let ccw = Arc::full_circle(v(&[0.3, 0.1]), 2.0, v(&[1.0, 0.0]), v(&[0.0, 1.0])).unwrap();
    let cw = Arc::full_circle(v(&[0.3, 0.1]), 2.0, v(&[1.0, 0.0]), v(&[0.0, -1.0])).unwrap();
    for t in [0.2, 1.7, 4.0] {
        assert!((curve_curvature(&chart, &ccw, t).unwrap() - 0.5).abs() < 1e-6);
        assert!((curve_curvature(&chart, &cw, t).unwrap() + 0.5).abs() < 1e-6);
    }
}

#[test]
fn geodesics_have_zero_curvature() {
    let chart = randers_surface();
    let tr = geodesic(&chart, &v(&[-0.4, 0.2]), &v(&[1.0, 0.4]), 1.0, 200).unwrap();
    let x = tr.point(100);
    let xd = tr.velocity(100);
    let xdd = (tr.velocity(101) - tr.velocity(99)) / (tr.times[101] - tr.times[99]);
    let k = finsler_ht::cartan::curvature_of_jet(&chart, &x, &xd, &xdd).unwrap();
    assert!(k.abs() < 1e-5, "k = {k}");
}

#[test]
fn randers_sweep_closes_the_structure_equations() {
    let r = sweep(&randers_surface(), [-1.0, -1.0], [1.0, 1.0], 200, 4).unwrap();
    assert_eq!(r.rows.len(), 200);
    assert!(r.max_residual < 1e-4, "{}", r.max_residual);
    assert!(r.max_abs_i > 1e-3, "a genuinely Finsler metric has I ≠ 0");
    assert!(r.min_abs_omega3_fiber > 0.0);
}

#[test]
fn randers_geodesics_are_not_reversible() {
    // Shoot forward, then back from the endpoint with the reversed velocity.
    // A constant drift is closed, so its geodesics are lines and retrace;
    // a rotational drift bends them like a magnetic field and does not.
    let constant = RandersChart::constant(v(&[0.3, 0.0]), 3.0).unwrap();
    let rotational = RandersChart::new(
        DMatrix::identity(2, 2),
        v(&[0.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.3, -0.3, 0.0]),
        DomainBox::cube(2, 1.5),
    )
    .unwrap();
    let x0 = v(&[-0.5, 0.0]);
    let v0 = v(&[1.0, 0.2]);
    // F(−v) ≠ F(v), so the two unit-speed paths run at different rates:
    // compare them as point sets.
    let retrace_gap = |c: &dyn FinslerChart| {
        let fwd = geodesic(c, &x0, &v0, 0.8, 800).unwrap();
        let last = fwd.len() - 1;
        let back = geodesic(c, &fwd.point(last), &-fwd.velocity(last), 0.3, 200).unwrap();
        (0..back.len())
            .map(|i| {
                let p = back.point(i);
                (0..fwd.len()).map(|j| (fwd.point(j) - &p).norm()).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    let straight = retrace_gap(&constant);
    assert!(straight < 2e-3, "{straight}");
    let bent = retrace_gap(&rotational);
    assert!(bent > 2e-2, "{bent}");
}

#[test]
fn geodesics_stay_unit_speed() {
    let chart = ConformalChart::unit_sphere(3, 2.0);
    let tr = geodesic(&chart, &v(&[0.1, -0.2, 0.3]), &v(&[0.5, 0.5, -0.2]), 1.5, 300).unwrap();
    for i in 0..tr.len() {
        assert!((chart.eval(&tr.point(i), &tr.velocity(i)) - 1.0).abs() < 1e-12);
    }
    assert!(tr.max_speed_drift < 1e-8);
}

#[test]
fn uniform_crofton_norm_is_euclidean() {
    let m = HyperplaneMeasure::Uniform { dim: 3, value: 2.0 };
    let x = v(&[0.1, 0.2, 0.3]);
    let unit = crofton_norm(&m, &x, &v(&[1.0, 0.0, 0.0]));
    for d in [v(&[0.0, 3.0, 0.0]), v(&[1.0, -1.0, 2.0])] {
        let f = crofton_norm(&m, &x, &d);
        assert!((f - unit * d.norm()).abs() < 1e-10 * f);
    }
}

#[test]
fn crofton_length_identity_on_a_polyline() {
    let m = HyperplaneMeasure::Anisotropic {
        dim: 2,
        base: 1.0,
        amplitude: 0.8,
        axis: vec![0.6, 0.8],
        width: 1.0,
    };
    let curve = CurveSpec::Polyline {
        points: vec![vec![-0.5, 0.0], vec![0.3, 0.4], vec![0.6, -0.3]],
    }
    .build()
    .unwrap();
    let opts = LengthCheckOptions {
        samples: 200_000,
        seed: 9,
        ..LengthCheckOptions::default()
    };
    let r = crofton_length_identity_check(&m, curve.as_ref(), &opts).unwrap();
    assert!(r.pass && r.relative_gap < 0.02, "{r:?}");
    assert!((r.arclength - crofton_arclength(&m, curve.as_ref())).abs() < 1e-12);
}
