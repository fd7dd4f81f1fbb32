//! Finsler surfaces: the canonical coframe `(ω₁, ω₂, ω₃)` on the unit
//! bundle, the invariants `I`, `J`, `K`, and the curvature of curves.
//!
//! The unit bundle of a chart on ℝ² is parametrized by `(x₁, x₂, θ)` with
//! `v(x, θ) = e(θ)/F(x, e(θ))`, `e(θ) = (cos θ, sin θ)`. Forms are stored as
//! coefficient rows in the basis `(dx₁, dx₂, dθ)`.

use crate::curves::Curve;
use crate::finsler::{FinslerChart, FinslerError};
use nalgebra::{DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CartanError {
    #[error("the coframe is defined for surfaces (n = 2), got n = {0}")]
    NotASurface(usize),
    #[error("point {x:?} is outside the chart domain")]
    OutsideDomain { x: Vec<f64> },
    #[error("fundamental tensor is ill-conditioned (condition {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("ω₃ vanishes on the fiber direction")]
    DegenerateFiber,
    #[error(transparent)]
    Finsler(#[from] FinslerError),
}

/// Finite-difference step in `(x₁, x₂, θ)`.
pub const CARTAN_STEP: f64 = 1e-4;

const CONDITION_LIMIT: f64 = 1e10;

type Form = Vector3<f64>;

/// Canonical coframe at a point of the unit bundle.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceCoframe {
    pub x: [f64; 2],
    pub theta: f64,
    /// The unit vector `v`.
    pub v: [f64; 2],
    /// Positively oriented `g_v`-unit vector `g_v`-orthogonal to `v`.
    pub w: [f64; 2],
    pub omega1: [f64; 3],
    pub omega2: [f64; 3],
    pub omega3: [f64; 3],
}

/// Invariants and structure-equation residuals at one point.
#[derive(Debug, Clone, Serialize)]
pub struct Invariants {
    pub i: f64,
    pub j: f64,
    pub k: f64,
    /// Components of the three structure equations not used to solve for
    /// `ω₃`, `I`, `J`, `K`; all vanish in exact arithmetic.
    pub residuals: [f64; 3],
    /// `ω₃(∂θ)`.
    pub omega3_fiber: f64,
}

fn check_surface(chart: &dyn FinslerChart) -> Result<(), CartanError> {
    match chart.dim() {
        2 => Ok(()),
        n => Err(CartanError::NotASurface(n)),
    }
}

/// `v(x, θ) = e(θ)/F(x, e(θ))`.
pub fn unit_vector(chart: &dyn FinslerChart, x: &DVector<f64>, theta: f64) -> DVector<f64> {
    let e = DVector::from_vec(vec![theta.cos(), theta.sin()]);
    let f = chart.eval(x, &e);
    e / f
}

/// `(v, w, ω₁, ω₂)` at `c = (x₁, x₂, θ)`: `ω₁ = ℓ·dx`, `ω₂ = (g_v w)·dx`.
fn first_pair(chart: &dyn FinslerChart, c: &Form) -> Result<(DVector<f64>, DVector<f64>, Form, Form), CartanError> {
    let x = DVector::from_vec(vec![c[0], c[1]]);
    if !chart.domain().contains(&x) {
        return Err(CartanError::OutsideDomain { x: vec![c[0], c[1]] });
    }
    let v = unit_vector(chart, &x, c[2]);
    let jet = chart.norm_at(&x).jet(&v);
    let g = jet.fundamental_tensor();
    let eig = g.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || hi / lo > CONDITION_LIMIT {
        return Err(CartanError::IllConditioned { condition: hi / lo });
    }
    let ell = jet.legendre();
    let w0 = DVector::from_vec(vec![-v[1], v[0]]);
    let w = &w0 - &v * (ell.dot(&w0) / ell.dot(&v));
    let w = &w / (&g * &w).dot(&w).sqrt();
    let gw = &g * &w;
    Ok((v, w, Form::new(ell[0], ell[1], 0.0), Form::new(gw[0], gw[1], 0.0)))
}

/// Coefficient matrix `A[i][j] = dα(∂ᵢ, ∂ⱼ)` of the exterior derivative of
/// a form field, by fourth-order central differences.
fn exterior_derivative<F>(alpha: F, c: &Form) -> Result<Matrix3<f64>, CartanError>
where
    F: Fn(&Form) -> Result<Form, CartanError>,
{
    let h = CARTAN_STEP;
    let mut jac = Matrix3::zeros();
    for i in 0..3 {
        let mut e = Form::zeros();
        e[i] = h;
        let d = (alpha(&(c - 2.0 * e))? - alpha(&(c + 2.0 * e))? + 8.0 * (alpha(&(c + e))? - alpha(&(c - e))?)) / (12.0 * h);
        // jac[(i, j)] = ∂ᵢ αⱼ
        jac.set_row(i, &d.transpose());
    }
    Ok(jac - jac.transpose())
}

/// Components of a 2-form on the basis `ωₐ ∧ ω_b` of a coframe whose
/// coefficient rows are those of `basis`.
fn in_basis(two_form: &Matrix3<f64>, basis: &Matrix3<f64>) -> Result<Matrix3<f64>, CartanError> {
    let inv = basis.try_inverse().ok_or(CartanError::DegenerateFiber)?;
    Ok(inv.transpose() * two_form * inv)
}

fn basis_of(o1: &Form, o2: &Form) -> Matrix3<f64> {
    Matrix3::from_rows(&[o1.transpose(), o2.transpose(), Vector3::new(0.0, 0.0, 1.0).transpose()])
}

/// Write `ω₃ = p ω₁ + q ω₂ + r dθ`. `dω₁ = −ω₂∧ω₃` fixes `p` and `r`;
/// `dω₂ = ω₁∧ω₃ − I ω₂∧ω₃` fixes `q` and `I`.
struct Third {
    omega3: Form,
    i: f64,
    residuals: [f64; 2],
    r: f64,
    p: f64,
}

fn third(chart: &dyn FinslerChart, c: &Form) -> Result<Third, CartanError> {
    let (_, _, o1, o2) = first_pair(chart, c)?;
    let basis = basis_of(&o1, &o2);
    let d1 = in_basis(&exterior_derivative(|y| Ok(first_pair(chart, y)?.2), c)?, &basis)?;
    let d2 = in_basis(&exterior_derivative(|y| Ok(first_pair(chart, y)?.3), c)?, &basis)?;
    let p = d1[(0, 1)];
    let r = -d1[(1, 2)];
    if r.abs() < 1e-12 {
        return Err(CartanError::DegenerateFiber);
    }
    let i = -d2[(1, 2)] / r;
    let q = d2[(0, 1)] - i * p;
    Ok(Third {
        omega3: o1 * p + o2 * q + Form::new(0.0, 0.0, r),
        i,
        residuals: [d1[(0, 2)].abs(), (d2[(0, 2)] - r).abs()],
        r,
        p,
    })
}

/// The coframe `(ω₁, ω₂, ω₃)` at `(x, θ)`.
pub fn coframe(chart: &dyn FinslerChart, x: [f64; 2], theta: f64) -> Result<SurfaceCoframe, CartanError> {
    check_surface(chart)?;
    let c = Form::new(x[0], x[1], theta);
    let (v, w, o1, o2) = first_pair(chart, &c)?;
    let t = third(chart, &c)?;
    Ok(SurfaceCoframe {
        x,
        theta,
        v: [v[0], v[1]],
        w: [w[0], w[1]],
        omega1: o1.into(),
        omega2: o2.into(),
        omega3: t.omega3.into(),
    })
}

/// `I`, `J`, `K` from `dω₃ = −K ω₁∧ω₂ − J ω₂∧ω₃` and the other two
/// equations, with the residuals of the unused components.
pub fn invariants_ijk(chart: &dyn FinslerChart, x: [f64; 2], theta: f64) -> Result<Invariants, CartanError> {
    check_surface(chart)?;
    let c = Form::new(x[0], x[1], theta);
    let (_, _, o1, o2) = first_pair(chart, &c)?;
    let t = third(chart, &c)?;
    let d3 = in_basis(&exterior_derivative(|y| Ok(third(chart, y)?.omega3), &c)?, &basis_of(&o1, &o2))?;
    let j = -d3[(1, 2)] / t.r;
    let k = j * t.p - d3[(0, 1)];
    Ok(Invariants {
        i: t.i,
        j,
        k,
        residuals: [t.residuals[0], t.residuals[1], d3[(0, 2)].abs()],
        omega3_fiber: t.omega3[2],
    })
}

/// Tangent `(ẋ, θ̇)` of the lift of a curve to `(x, θ)` coordinates.
fn lifted_tangent(xdot: &DVector<f64>, xddot: &DVector<f64>) -> (f64, Form) {
    let theta = xdot[1].atan2(xdot[0]);
    let theta_dot = (xdot[0] * xddot[1] - xdot[1] * xddot[0]) / xdot.norm_squared();
    (theta, Form::new(xdot[0], xdot[1], theta_dot))
}

/// `k = ω₃(V)/ω₁(V)` for the lift `V` of a curve with the given jet.
pub fn curvature_of_jet(
    chart: &dyn FinslerChart,
    x: &DVector<f64>,
    xdot: &DVector<f64>,
    xddot: &DVector<f64>,
) -> Result<f64, CartanError> {
    check_surface(chart)?;
    let (theta, big_v) = lifted_tangent(xdot, xddot);
    let frame = coframe(chart, [x[0], x[1]], theta)?;
    let o1 = Form::from(frame.omega1).dot(&big_v);
    if o1.abs() < 1e-14 {
        return Err(CartanError::DegenerateFiber);
    }
    Ok(Form::from(frame.omega3).dot(&big_v) / o1)
}

/// Curvature of a curve at parameter `t`.
pub fn curve_curvature(chart: &dyn FinslerChart, curve: &dyn Curve, t: f64) -> Result<f64, CartanError> {
    curvature_of_jet(chart, &curve.point(t), &curve.velocity(t), &curve.acceleration(t))
}

/// `h = −k ω₂` restricted to the base, as a covector on ℝ².
pub fn curvature_covector(chart: &dyn FinslerChart, curve: &dyn Curve, t: f64) -> Result<[f64; 2], CartanError> {
    let xdot = curve.velocity(t);
    let k = curve_curvature(chart, curve, t)?;
    let frame = coframe(chart, curve.point(t).as_slice().try_into().expect("surface point"), xdot[1].atan2(xdot[0]))?;
    Ok([-k * frame.omega2[0], -k * frame.omega2[1]])
}

/// One sampled unit-bundle point of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub x1: f64,
    pub x2: f64,
    pub theta: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
    pub residual1: f64,
    pub residual2: f64,
    pub residual3: f64,
    pub omega3_fiber: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub samples: usize,
    pub max_residual: f64,
    pub max_abs_i: f64,
    pub min_k: f64,
    pub max_k: f64,
    pub min_abs_omega3_fiber: f64,
    pub rows: Vec<SweepRow>,
}

/// Invariants at `samples` seeded uniform points of `[lower, upper] × [0, 2π)`.
pub fn sweep(
    chart: &dyn FinslerChart,
    lower: [f64; 2],
    upper: [f64; 2],
    samples: usize,
    seed: u64,
) -> Result<SweepReport, CartanError> {
    check_surface(chart)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 3]> = (0..samples)
        .map(|_| {
            [
                rng.gen_range(lower[0]..upper[0]),
                rng.gen_range(lower[1]..upper[1]),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect();
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|p| {
            let inv = invariants_ijk(chart, [p[0], p[1]], p[2])?;
            Ok(SweepRow {
                x1: p[0],
                x2: p[1],
                theta: p[2],
                i: inv.i,
                j: inv.j,
                k: inv.k,
                residual1: inv.residuals[0],
                residual2: inv.residuals[1],
                residual3: inv.residuals[2],
                omega3_fiber: inv.omega3_fiber,
            })
        })
        .collect::<Result<_, CartanError>>()?;
    let fold = |f: &dyn Fn(&SweepRow) -> f64, init: f64, op: fn(f64, f64) -> f64| rows.iter().map(f).fold(init, op);
    Ok(SweepReport {
        samples,
        max_residual: fold(&|r| r.residual1.max(r.residual2).max(r.residual3), 0.0, f64::max),
        max_abs_i: fold(&|r| r.i.abs(), 0.0, f64::max),
        min_k: fold(&|r| r.k, f64::INFINITY, f64::min),
        max_k: fold(&|r| r.k, f64::NEG_INFINITY, f64::max),
        min_abs_omega3_fiber: fold(&|r| r.omega3_fiber.abs(), f64::INFINITY, f64::min),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finsler::{ConformalChart, EuclideanChart};
    use approx::assert_abs_diff_eq;

    #[test]
    fn euclidean_coframe_is_dx_and_dtheta() {
        let chart = EuclideanChart::standard(2, 3.0);
        let f = coframe(&chart, [0.3, -0.2], 0.0).unwrap();
        assert_abs_diff_eq!(Form::from(f.omega1), Form::new(1.0, 0.0, 0.0), epsilon = 1e-9);
        assert_abs_diff_eq!(Form::from(f.omega2), Form::new(0.0, 1.0, 0.0), epsilon = 1e-9);
        assert_abs_diff_eq!(Form::from(f.omega3), Form::new(0.0, 0.0, 1.0), epsilon = 1e-8);
    }

    #[test]
    fn round_sphere_invariants() {
        let chart = ConformalChart::unit_sphere(2, 2.0);
        let inv = invariants_ijk(&chart, [0.4, -0.3], 1.1).unwrap();
        assert_abs_diff_eq!(inv.k, 1.0, epsilon = 1e-4);
        assert!(inv.i.abs() < 1e-6);
        assert!(inv.residuals.iter().all(|r| *r < 1e-5));
    }
}
