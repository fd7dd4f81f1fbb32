use approx::assert_relative_eq;
use finsler_ht::crofton::{CroftonNorm, CroftonResolution, HyperplaneMeasure};
use finsler_ht::densities::{
    busemann_form, busemann_hausdorff_density, ht_density, ht_legendre, DensityKind, KDensity,
};
use finsler_ht::exterior::{minors, SimpleKVector};
use finsler_ht::norms::{dual_norm, dual_solve, legendre_norm, EuclideanNorm, MinkowskiNorm, RandersNorm};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vector(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(DVector::from_vec)
}

fn matrix(n: usize, k: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.5..1.5f64, n * k).prop_map(move |xs| DMatrix::from_vec(n, k, xs))
}

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    matrix(n, n).prop_map(move |m| DMatrix::identity(n, n) + m.transpose() * m * 0.5)
}

/// Randers data `(A, b)` with `|b|_{A⁻¹} = size < 1`.
fn randers(n: usize) -> impl Strategy<Value = (DMatrix<f64>, DVector<f64>)> {
    (spd(n), vector(n), 0.0..0.7f64).prop_filter_map("nonzero drift", |(a, b, size)| {
        let inv = a.clone().try_inverse()?;
        let nb = b.dot(&(&inv * &b)).sqrt();
        (nb > 1e-3).then(|| (a, b * (size / nb)))
    })
}

fn gram_volume(a: &DMatrix<f64>, f: &DMatrix<f64>) -> f64 {
    (f.transpose() * a * f).determinant().max(0.0).sqrt()
}

fn well_conditioned(f: &DMatrix<f64>) -> bool {
    let s = f.clone().svd(false, false).singular_values;
    s.min() > 0.1 * s.max().max(1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn randers_is_a_minkowski_norm((a, b) in randers(3), v in vector(3), w in vector(3), t in 0.1..5.0f64) {
        let f = RandersNorm::new(a, b).unwrap();
        prop_assume!(v.norm() > 1e-3 && w.norm() > 1e-3);
        prop_assert!(f.eval(&v) > 0.0);
        assert_relative_eq!(f.eval(&(&v * t)), t * f.eval(&v), max_relative = 1e-12);
        prop_assert!(f.eval(&(&v + &w)) <= f.eval(&v) + f.eval(&w) + 1e-12);
        let g = f.jet(&v).fundamental_tensor();
        prop_assert!(g.symmetric_eigen().eigenvalues.min() > 0.0);
    }

    #[test]
    fn legendre_pairs_to_the_square((a, b) in randers(3), v in vector(3)) {
        prop_assume!(v.norm() > 1e-3);
        let f = RandersNorm::new(a, b).unwrap();
        let ell = legendre_norm(&f, &v).unwrap();
        assert_relative_eq!(ell.dot(&v), f.eval(&v).powi(2), max_relative = 1e-10);
        // The dual norm of ℓ(v) is F(v).
        assert_relative_eq!(dual_norm(&f, &ell).unwrap(), f.eval(&v), max_relative = 1e-9);
    }

    #[test]
    fn dual_norm_satisfies_fenchel_young((a, b) in randers(3), p in vector(3), v in vector(3)) {
        prop_assume!(p.norm() > 1e-3 && v.norm() > 1e-3);
        let f = RandersNorm::new(a, b).unwrap();
        let star = dual_norm(&f, &p).unwrap();
        prop_assert!(p.dot(&v) <= star * f.eval(&v) + 1e-10);
        // The numerical maximizer attains the closed form.
        let solved = dual_solve(&f, &p, None).unwrap();
        assert_relative_eq!(solved.value, star, max_relative = 1e-8);
    }

    #[test]
    fn randers_ht_density_is_the_riemannian_volume((a, b) in randers(4), f in matrix(4, 2), g in matrix(4, 3)) {
        // Dual balls of restricted Randers norms are translated ellipsoids.
        let norm = RandersNorm::new(a.clone(), b).unwrap();
        for factors in [f, g] {
            prop_assume!(well_conditioned(&factors));
            let s = SimpleKVector::from_matrix(factors.clone()).unwrap();
            assert_relative_eq!(ht_density(&norm, &s).unwrap(), gram_volume(&a, &factors), max_relative = 1e-7);
        }
    }

    #[test]
    fn densities_are_homogeneous_and_basis_independent(
        (a, b) in randers(3),
        f in matrix(3, 2),
        m in matrix(2, 2),
        t in 0.1..4.0f64,
    ) {
        prop_assume!(well_conditioned(&f) && well_conditioned(&m) && m.determinant() > 0.05);
        let norm = RandersNorm::new(a, b).unwrap();
        let s = SimpleKVector::from_matrix(f.clone()).unwrap();
        let s2 = SimpleKVector::from_matrix(&f * &m).unwrap();
        for kind in [DensityKind::HolmesThompson, DensityKind::BusemannHausdorff] {
            let d = KDensity::new(&norm, kind);
            let phi = d.evaluate(&s).unwrap();
            assert_relative_eq!(d.evaluate(&s.scaled(t)).unwrap(), t * phi, max_relative = 1e-9);
            // Only the k-vector matters: F·M spans the same plane with factor det M.
            assert_relative_eq!(d.evaluate(&s2).unwrap(), m.determinant() * phi, max_relative = 1e-8);
        }
    }

    #[test]
    fn euclidean_densities_are_gram_volumes(a in spd(4), f in matrix(4, 3)) {
        prop_assume!(well_conditioned(&f));
        let norm = EuclideanNorm::new(a.clone()).unwrap();
        let s = SimpleKVector::from_matrix(f.clone()).unwrap();
        let oracle = gram_volume(&a, &f);
        assert_relative_eq!(ht_density(&norm, &s).unwrap(), oracle, max_relative = 1e-8);
        assert_relative_eq!(busemann_hausdorff_density(&norm, &s).unwrap(), oracle, max_relative = 1e-8);
    }

    #[test]
    fn busemann_form_is_a_calibration_at_a((a, b) in randers(3), f in matrix(3, 2)) {
        prop_assume!(well_conditioned(&f));
        let norm = RandersNorm::new(a, b).unwrap();
        let s = SimpleKVector::from_matrix(f).unwrap();
        let beta = busemann_form(&norm, &s).unwrap();
        let phi = ht_density(&norm, &s).unwrap();
        assert_relative_eq!(beta.eval(&s).unwrap(), phi, max_relative = 1e-8);
        let l = ht_legendre(&norm, &s).unwrap();
        assert_relative_eq!(l.pair(&s).unwrap(), phi * phi, max_relative = 1e-8);
    }

    #[test]
    fn pluecker_components_scale_by_determinant(f in matrix(4, 2), m in matrix(2, 2)) {
        let lhs = minors(&(&f * &m));
        let det = m.determinant();
        for (x, y) in lhs.iter().zip(minors(&f)) {
            prop_assert!((x - det * y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn crofton_norm_is_convex_and_homogeneous(
        x in vector(3),
        v in vector(3),
        w in vector(3),
        t in 0.1..4.0f64,
        amp in 0.0..1.0f64,
    ) {
        prop_assume!(v.norm() > 1e-2 && w.norm() > 1e-2);
        let m = HyperplaneMeasure::GaussianBump { dim: 3, base: 1.0, amplitude: amp, width: 1.0 };
        let f = CroftonNorm::new(&m, x, CroftonResolution::default());
        assert_relative_eq!(f.eval(&(&v * t)), t * f.eval(&v), max_relative = 1e-12);
        prop_assert!(f.eval(&(&v + &w)) <= f.eval(&v) + f.eval(&w) + 1e-10);
        // Crofton norms are reversible.
        assert_relative_eq!(f.eval(&-&v), f.eval(&v), max_relative = 1e-12);
    }
}

#[test]
fn randers_dual_ball_is_a_translated_disk() {
    // Monte-Carlo area of {p : F*(p) ≤ 1} for F = |v| + 0.3 v₁ on span(e₁, e₂).
    use rand::{Rng, SeedableRng};
    let norm = RandersNorm::with_identity(DVector::from_vec(vec![0.3, 0.0])).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let samples = 200_000;
    let half = 1.5;
    let hits = (0..samples)
        .filter(|_| {
            let p = DVector::from_vec(vec![rng.gen_range(-half..half), rng.gen_range(-half..half)]);
            dual_norm(&norm, &p).unwrap() <= 1.0
        })
        .count();
    let area = (2.0 * half).powi(2) * hits as f64 / samples as f64;
    assert!((area - std::f64::consts::PI).abs() < 0.02, "area {area}");
}
