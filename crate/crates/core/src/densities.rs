//! k-densities of a Minkowski norm: Holmes–Thompson and Busemann–Hausdorff,
//! the Busemann form `β_a` and the Holmes–Thompson Legendre map.

use crate::exterior::{AlgebraError, KCovector, SimpleKVector};
use crate::norms::{dual_solve, restrict, MinkowskiNorm, NormError};
use crate::quadrature::{periodic_nodes, unit_ball_volume, GaussLegendre};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("densities are implemented for 1 <= k <= 3, got k = {k}")]
    UnsupportedGrade { k: usize },
    #[error("cubature did not reach tolerance: value {value}, error estimate {error_estimate:e}")]
    Cubature { value: f64, error_estimate: f64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Norm(#[from] NormError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    HolmesThompson,
    BusemannHausdorff,
}

/// Cubature resolution on the unit sphere of a k-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(default)]
pub struct CubatureOptions {
    /// Trapezoid nodes on S¹ (k = 2). Must be even.
    pub circle: usize,
    /// Gauss–Legendre nodes in the polar variable (k = 3).
    pub polar: usize,
    /// Trapezoid nodes in the azimuth (k = 3). Must be even.
    pub azimuth: usize,
    /// Relative tolerance on the coarse/fine error estimate.
    pub tolerance: f64,
}

impl Default for CubatureOptions {
    fn default() -> Self {
        Self {
            circle: 64,
            polar: 24,
            azimuth: 48,
            tolerance: 1e-8,
        }
    }
}

/// A value together with a coarse/fine error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// The volume of the Euclidean unit k-ball.
pub fn epsilon_k(k: usize) -> f64 {
    unit_ball_volume(k)
}

/// A k-density built on a Minkowski norm.
#[derive(Debug, Clone, Copy)]
pub struct KDensity<'a> {
    pub norm: &'a dyn MinkowskiNorm,
    pub kind: DensityKind,
    pub options: CubatureOptions,
}

impl<'a> KDensity<'a> {
    pub fn new(norm: &'a dyn MinkowskiNorm, kind: DensityKind) -> Self {
        Self {
            norm,
            kind,
            options: CubatureOptions::default(),
        }
    }

    pub fn with_options(mut self, options: CubatureOptions) -> Self {
        self.options = options;
        self
    }

    pub fn evaluate(&self, a: &SimpleKVector) -> Result<f64, DensityError> {
        Ok(self.evaluate_frame(a)?.value)
    }

    /// Value with error estimate; fails if the estimate exceeds the
    /// configured tolerance.
    pub fn evaluate_checked(&self, a: &SimpleKVector) -> Result<Estimate, DensityError> {
        let est = self.evaluate_frame(a)?;
        if est.error_estimate > self.options.tolerance * est.value.abs().max(1e-300) {
            return Err(DensityError::Cubature {
                value: est.value,
                error_estimate: est.error_estimate,
            });
        }
        Ok(est)
    }

    fn evaluate_frame(&self, a: &SimpleKVector) -> Result<Estimate, DensityError> {
        check_norm_dim(self.norm, a)?;
        let k = a.grade();
        if !(1..=3).contains(&k) {
            return Err(DensityError::UnsupportedGrade { k });
        }
        let frame = a.span_basis()?;
        let restricted = restrict(self.norm, &frame.basis);
        let ball = match self.kind {
            DensityKind::HolmesThompson => dual_ball_volume(restricted.as_ref(), &self.options)?,
            DensityKind::BusemannHausdorff => primal_ball_volume(restricted.as_ref(), &self.options),
        };
        let eps = epsilon_k(k);
        Ok(match self.kind {
            DensityKind::HolmesThompson => Estimate {
                value: frame.magnitude * ball.value / eps,
                error_estimate: frame.magnitude * ball.error_estimate / eps,
            },
            DensityKind::BusemannHausdorff => Estimate {
                value: frame.magnitude * eps / ball.value,
                error_estimate: frame.magnitude * eps * ball.error_estimate / (ball.value * ball.value),
            },
        })
    }
}

fn check_norm_dim(norm: &dyn MinkowskiNorm, a: &SimpleKVector) -> Result<(), DensityError> {
    if a.dim() != norm.dim() {
        return Err(NormError::DimensionMismatch {
            expected: norm.dim(),
            got: a.dim(),
        }
        .into());
    }
    Ok(())
}

/// Holmes–Thompson density `φ(a)`.
pub fn ht_density(norm: &dyn MinkowskiNorm, a: &SimpleKVector) -> Result<f64, DensityError> {
    KDensity::new(norm, DensityKind::HolmesThompson).evaluate(a)
}

/// Busemann (Hausdorff) density.
pub fn busemann_hausdorff_density(norm: &dyn MinkowskiNorm, a: &SimpleKVector) -> Result<f64, DensityError> {
    KDensity::new(norm, DensityKind::BusemannHausdorff).evaluate(a)
}

/// Integral over S¹ at `n` and `n/2` trapezoid nodes (the coarse rule
/// reuses every other node).
fn circle_integral<F: FnMut(f64) -> Result<f64, DensityError>>(n: usize, mut f: F) -> Result<Estimate, DensityError> {
    let mut fine = 0.0;
    let mut coarse = 0.0;
    for (j, (t, w)) in periodic_nodes(n).enumerate() {
        let y = f(t)?;
        fine += w * y;
        if j % 2 == 0 {
            coarse += 2.0 * w * y;
        }
    }
    Ok(Estimate {
        value: fine,
        error_estimate: (fine - coarse).abs(),
    })
}

/// Integral over S² in (c = cos ψ, t) coordinates on a product grid.
fn sphere_integral<F: FnMut(&DVector<f64>) -> Result<f64, DensityError>>(
    polar: usize,
    azimuth: usize,
    mut f: F,
) -> Result<f64, DensityError> {
    let gl = GaussLegendre::cached(polar);
    let mut total = 0.0;
    for (c, wc) in gl.on_interval(-1.0, 1.0) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for (t, wt) in periodic_nodes(azimuth) {
            let u = DVector::from_vec(vec![s * t.cos(), s * t.sin(), c]);
            total += wc * wt * f(&u)?;
        }
    }
    Ok(total)
}

/// Volume of the unit ball of a norm on ℝᵏ, `(1/k)∫ N(u)^{-k} du`.
fn primal_ball_volume(norm: &dyn MinkowskiNorm, opts: &CubatureOptions) -> Estimate {
    let k = norm.dim();
    match k {
        1 => {
            let e = DVector::from_element(1, 1.0);
            Estimate {
                value: 1.0 / norm.eval(&e) + 1.0 / norm.eval(&-e),
                error_estimate: 0.0,
            }
        }
        2 => circle_integral(opts.circle, |t| {
            let u = DVector::from_vec(vec![t.cos(), t.sin()]);
            Ok(0.5 * norm.eval(&u).powi(-2))
        })
        .expect("infallible integrand"),
        _ => {
            let f = |u: &DVector<f64>| Ok(norm.eval(u).powi(-3) / 3.0);
            let fine = sphere_integral(opts.polar, opts.azimuth, f).expect("infallible integrand");
            let coarse = sphere_integral(opts.polar / 2, opts.azimuth / 2, f).expect("infallible integrand");
            Estimate {
                value: fine,
                error_estimate: (fine - coarse).abs(),
            }
        }
    }
}

/// Volume of the dual unit ball of a norm on ℝᵏ.
///
/// Polar formula `(1/k)∫ N*(u)^{-k} du` when the dual norm has a closed
/// form. Otherwise, for k = 2, the mixed-area formula
/// `½∫ (h² − h'²) dθ` with support function `h = N` (no dual solves); for
/// k = 3 the polar formula with Newton dual solves warm-started along
/// each azimuthal ring.
fn dual_ball_volume(norm: &dyn MinkowskiNorm, opts: &CubatureOptions) -> Result<Estimate, DensityError> {
    let k = norm.dim();
    if k == 1 {
        let e = DVector::from_element(1, 1.0);
        return Ok(Estimate {
            value: norm.eval(&e) + norm.eval(&-e),
            error_estimate: 0.0,
        });
    }
    let mut probe = DVector::zeros(k);
    probe[0] = 1.0;
    let closed = norm.dual_closed_form(&probe).is_some();
    match (k, closed) {
        (2, true) => circle_integral(opts.circle, |t| {
            let u = DVector::from_vec(vec![t.cos(), t.sin()]);
            Ok(0.5 * norm.dual_closed_form(&u).unwrap().powi(-2))
        }),
        (2, false) => circle_integral(opts.circle, |t| {
            let u = DVector::from_vec(vec![t.cos(), t.sin()]);
            let du = DVector::from_vec(vec![-t.sin(), t.cos()]);
            let (h, grad) = norm.value_gradient(&u);
            let dh = grad.dot(&du);
            Ok(0.5 * (h * h - dh * dh))
        }),
        _ => {
            let mut guess: Option<DVector<f64>> = None;
            let mut dual = |u: &DVector<f64>| -> Result<f64, DensityError> {
                if closed {
                    return Ok(norm.dual_closed_form(u).unwrap().powi(-3) / 3.0);
                }
                let d = dual_solve(norm, u, guess.as_ref())?;
                let h = d.value;
                guess = Some(d.argmax);
                Ok(h.powi(-3) / 3.0)
            };
            let fine = sphere_integral(opts.polar, opts.azimuth, &mut dual)?;
            let coarse = sphere_integral(opts.polar / 2, opts.azimuth / 2, &mut dual)?;
            Ok(Estimate {
                value: fine,
                error_estimate: (fine - coarse).abs(),
            })
        }
    }
}

/// The Busemann form at the oriented plane of a simple k-vector.
#[derive(Debug, Clone)]
pub struct BusemannForm {
    pub base: SimpleKVector,
    pub value: KCovector,
}

impl BusemannForm {
    pub fn eval(&self, b: &SimpleKVector) -> Result<f64, AlgebraError> {
        self.value.pair(b)
    }
}

/// Step for the θ-derivatives of the Legendre image of the unit circle.
const THETA_STEP: f64 = 1e-5;

/// `β_a = (1/(k ε_k)) ∫ p ∧ ∂₁p ∧ … ∧ ∂_{k−1}p dθ` where `p(θ) = L¹(v(θ))`
/// runs over the Legendre image of the unit sphere of `⟨a⟩`, oriented by
/// the frame of `a`.
pub fn busemann_form(norm: &dyn MinkowskiNorm, a: &SimpleKVector) -> Result<BusemannForm, DensityError> {
    busemann_form_with(norm, a, &CubatureOptions::default())
}

pub fn busemann_form_with(
    norm: &dyn MinkowskiNorm,
    a: &SimpleKVector,
    opts: &CubatureOptions,
) -> Result<BusemannForm, DensityError> {
    check_norm_dim(norm, a)?;
    let n = a.dim();
    let k = a.grade();
    if !(1..=3).contains(&k) {
        return Err(DensityError::UnsupportedGrade { k });
    }
    let e = a.span_basis()?.basis;
    // dF is 0-homogeneous, so L¹ at the normalized vector is dF at any
    // positive multiple.
    let p = |u: &DVector<f64>| norm.gradient(&(&e * u));
    let scale = 1.0 / (k as f64 * epsilon_k(k));
    let mut acc = KCovector::zeros(n, k);
    match k {
        1 => {
            let up = DVector::from_element(1, 1.0);
            let diff = (p(&up) - p(&-up)) * 0.5;
            acc = KCovector::new(n, 1, diff.iter().copied().collect())?;
        }
        2 => {
            let h = THETA_STEP;
            for (t, w) in periodic_nodes(opts.circle) {
                let at = |s: f64| p(&DVector::from_vec(vec![s.cos(), s.sin()]));
                let p0 = at(t);
                let dp = (at(t + h) - at(t - h)) / (2.0 * h);
                let m = DMatrix::from_columns(&[p0, dp]);
                acc.axpy(w * scale, &KCovector::wedge_of(&m));
            }
        }
        _ => {
            let h = THETA_STEP;
            let gl = GaussLegendre::cached(opts.polar);
            let u = |psi: f64, t: f64| {
                DVector::from_vec(vec![psi.sin() * t.cos(), psi.sin() * t.sin(), psi.cos()])
            };
            for (psi, wp) in gl.on_interval(0.0, PI) {
                for (t, wt) in periodic_nodes(opts.azimuth) {
                    let p0 = p(&u(psi, t));
                    let dpsi = (p(&u(psi + h, t)) - p(&u(psi - h, t))) / (2.0 * h);
                    let dt = (p(&u(psi, t + h)) - p(&u(psi, t - h))) / (2.0 * h);
                    let m = DMatrix::from_columns(&[p0, dpsi, dt]);
                    acc.axpy(wp * wt * scale, &KCovector::wedge_of(&m));
                }
            }
        }
    }
    Ok(BusemannForm {
        base: a.clone(),
        value: acc,
    })
}

/// Holmes–Thompson Legendre map `L(a) = φ(a)·β_a`.
pub fn ht_legendre(norm: &dyn MinkowskiNorm, a: &SimpleKVector) -> Result<KCovector, DensityError> {
    let phi = ht_density(norm, a)?;
    Ok(busemann_form(norm, a)?.value.scale(phi))
}

/// Sampling parameters for [`local_calibration_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(default)]
pub struct CalibrationOptions {
    /// Largest principal angle (radians) between `⟨b⟩` and `⟨a⟩`.
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            radius: 0.2,
            samples: 200,
            seed: 0,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    /// `|β_a(a) − φ(a)| / φ(a)`.
    pub equality_gap: f64,
    /// `max_b (β_a(b) − φ(b))` over unit-magnitude samples.
    pub max_violation: f64,
    /// Plücker components of the maximizing sample.
    pub argmax: Vec<f64>,
    /// Largest principal angle among the samples.
    pub max_angle: f64,
    pub samples: usize,
    pub radius: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Sample simple k-vectors `b` whose plane lies within `radius` of `⟨a⟩`
/// and check `β_a(b) ≤ φ(b)`.
///
/// Samples have factors `E + N·T` with `E` the frame of `a`, `N` an
/// orthonormal basis of the Euclidean complement and `‖T‖₂ ≤ tan(radius)`,
/// so all principal angles are at most `radius`.
pub fn local_calibration_check(
    norm: &dyn MinkowskiNorm,
    a: &SimpleKVector,
    opts: &CalibrationOptions,
) -> Result<CalibrationReport, DensityError> {
    check_norm_dim(norm, a)?;
    let n = a.dim();
    let k = a.grade();
    let frame = a.span_basis()?;
    let e = frame.basis;
    let complement = orthogonal_complement(&e);
    let beta = busemann_form(norm, a)?;
    let unit_a = SimpleKVector::from_matrix(e.clone())?;
    let phi_a = ht_density(norm, &unit_a)?;
    let equality_gap = (beta.eval(&unit_a)? - phi_a).abs() / phi_a;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut planes = Vec::with_capacity(opts.samples);
    for _ in 0..opts.samples {
        let mut t = DMatrix::<f64>::from_fn(n - k, k, |_, _| rng.sample(StandardNormal));
        let target = (opts.radius * rng.gen::<f64>()).tan();
        if n > k {
            let s = t.clone().svd(false, false).singular_values.max();
            t *= target / s.max(1e-300);
        }
        let factors = &e + &complement * &t;
        planes.push(factors);
    }

    let results: Vec<Result<(f64, Vec<f64>, f64), DensityError>> = planes
        .into_par_iter()
        .map(|factors| {
            let b = SimpleKVector::from_matrix(factors)?;
            let b = b.scaled(1.0 / b.magnitude());
            let angle = max_principal_angle(&e, &b.span_basis()?.basis);
            let violation = beta.eval(&b)? - ht_density(norm, &b)?;
            Ok((violation, b.components(), angle))
        })
        .collect();

    let mut max_violation = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    let mut max_angle: f64 = 0.0;
    for r in results {
        let (v, comps, angle) = r?;
        max_angle = max_angle.max(angle);
        if v > max_violation {
            max_violation = v;
            argmax = comps;
        }
    }
    if opts.samples == 0 {
        max_violation = 0.0;
    }
    let pass = equality_gap <= opts.tolerance && max_violation <= opts.tolerance;
    Ok(CalibrationReport {
        equality_gap,
        max_violation,
        argmax,
        max_angle,
        samples: opts.samples,
        radius: opts.radius,
        tolerance: opts.tolerance,
        pass,
    })
}

/// Orthonormal basis of the Euclidean complement of the columns of an
/// orthonormal `n × k` matrix.
pub fn orthogonal_complement(e: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = e.shape();
    let projector = DMatrix::<f64>::identity(n, n) - e * e.transpose();
    let eig = projector.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    DMatrix::from_fn(n, n - k, |i, j| eig.eigenvectors[(i, order[j])])
}

/// Largest principal angle between the spans of two orthonormal frames.
pub fn max_principal_angle(e: &DMatrix<f64>, f: &DMatrix<f64>) -> f64 {
    let s = (e.transpose() * f).svd(false, false).singular_values;
    s.min().clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{EuclideanNorm, RandersNorm};
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    #[derive(Debug)]
    struct Opaque(RandersNorm);

    impl MinkowskiNorm for Opaque {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn eval(&self, x: &DVector<f64>) -> f64 {
            self.0.eval(x)
        }
    }

    #[test]
    fn euclidean_examples() {
        let e = EuclideanNorm::standard(3);
        let a = SimpleKVector::basis(3, &[0, 1]).unwrap();
        assert_abs_diff_eq!(ht_density(&e, &a).unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(busemann_hausdorff_density(&e, &a).unwrap(), 1.0, epsilon = 1e-13);
        let b = SimpleKVector::new(&[v(&[2.0, 0.0, 0.0]), v(&[0.0, 3.0, 0.0])]).unwrap();
        assert_abs_diff_eq!(ht_density(&e, &b).unwrap(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn randers_plane_examples() {
        let r = RandersNorm::with_identity(v(&[0.3, 0.0, 0.0])).unwrap();
        let a = SimpleKVector::basis(3, &[0, 1]).unwrap();
        // dual ball is a translated unit disk
        assert_abs_diff_eq!(ht_density(&r, &a).unwrap(), 1.0, epsilon = 1e-12);
        // primal ball {|v| + 0.3 v₁ ≤ 1} is an ellipse of area π/(1−0.09)^{3/2}
        let area = PI / (1.0f64 - 0.09).powf(1.5);
        assert_abs_diff_eq!(busemann_hausdorff_density(&r, &a).unwrap(), PI / area, epsilon = 1e-12);
    }

    #[test]
    fn generic_routes_match_closed_forms() {
        let r = RandersNorm::new(
            DMatrix::from_row_slice(3, 3, &[1.5, 0.2, 0.0, 0.2, 1.0, 0.1, 0.0, 0.1, 0.8]),
            v(&[0.2, -0.25, 0.1]),
        )
        .unwrap();
        let o = Opaque(r.clone());
        let a = SimpleKVector::new(&[v(&[1.0, 0.3, 0.0]), v(&[0.2, 1.0, 0.4])]).unwrap();
        assert_abs_diff_eq!(ht_density(&o, &a).unwrap(), ht_density(&r, &a).unwrap(), epsilon = 1e-8);
        let full = SimpleKVector::basis(3, &[0, 1, 2]).unwrap();
        assert_abs_diff_eq!(ht_density(&o, &full).unwrap(), ht_density(&r, &full).unwrap(), epsilon = 1e-7);
    }

    #[test]
    fn busemann_form_examples() {
        let e = EuclideanNorm::standard(3);
        let a = SimpleKVector::basis(3, &[0, 1]).unwrap();
        let beta = busemann_form(&e, &a).unwrap();
        let expect = KCovector::basis(3, &[0, 1]).unwrap();
        assert!(beta.value.max_abs_diff(&expect) < 1e-9);
        let b = SimpleKVector::basis(3, &[0, 2]).unwrap();
        assert_abs_diff_eq!(beta.eval(&b).unwrap(), 0.0, epsilon = 1e-12);
        let swapped = busemann_form(&e, &a.swapped(0, 1)).unwrap();
        assert!(swapped.value.max_abs_diff(&(-&expect)) < 1e-9);
    }

    #[test]
    fn busemann_form_equality_for_all_grades() {
        let r = RandersNorm::with_identity(v(&[0.2, 0.1, -0.15, 0.05])).unwrap();
        for k in 1..=3 {
            let factors: Vec<_> = (0..k)
                .map(|i| {
                    let t = i as f64;
                    v(&[1.0 + t, 0.3 * t * t, -0.2 + t, 0.5 * (t - 1.0)])
                })
                .collect();
            let a = SimpleKVector::new(&factors).unwrap();
            let beta = busemann_form(&r, &a).unwrap();
            let phi = ht_density(&r, &a).unwrap();
            assert_abs_diff_eq!(beta.eval(&a).unwrap() / phi, 1.0, epsilon = 1e-7);
        }
    }

    #[test]
    fn euclidean_calibration_is_global() {
        let e = EuclideanNorm::standard(4);
        let a = SimpleKVector::new(&[v(&[1.0, 0.5, 0.0, 0.2]), v(&[0.0, 1.0, 0.3, 0.0])]).unwrap();
        let report = local_calibration_check(
            &e,
            &a,
            &CalibrationOptions {
                radius: 0.3,
                samples: 200,
                seed: 7,
                tolerance: 1e-8,
            },
        )
        .unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.max_angle <= 0.3 + 1e-12);
    }

    #[test]
    fn randers_calibration_example() {
        let r = RandersNorm::with_identity(v(&[0.2, 0.1, 0.0])).unwrap();
        let a = SimpleKVector::basis(3, &[0, 1]).unwrap();
        let opts = CalibrationOptions::default();
        let report = local_calibration_check(&r, &a, &opts).unwrap();
        assert!(report.pass, "{report:?}");
        let scaled = local_calibration_check(&r, &a.scaled(3.0), &opts).unwrap();
        assert_eq!(report.max_violation, scaled.max_violation);
    }

    #[test]
    fn complement_is_orthonormal() {
        let a = SimpleKVector::new(&[v(&[1.0, 2.0, 0.0, 1.0]), v(&[0.0, 1.0, 1.0, 0.0])]).unwrap();
        let e = a.span_basis().unwrap().basis;
        let c = orthogonal_complement(&e);
        assert!((e.transpose() * &c).amax() < 1e-12);
        assert!((c.transpose() * &c - DMatrix::identity(2, 2)).amax() < 1e-12);
    }
}
