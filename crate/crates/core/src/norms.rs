//! Smooth, quadratically convex (Minkowski) norms: evaluation, derivatives,
//! dual norms, restriction to subspaces and the Legendre map `½ d(F²)`.

use crate::exterior::{AlgebraError, SimpleKVector};
use nalgebra::{DMatrix, DVector};
use std::fmt::Debug;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("dimension mismatch: norm on R^{expected}, got vector of length {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the Legendre map is not defined at the zero vector")]
    ZeroVector,
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("Randers drift too large: |b|_(A^-1) = {norm_b} >= 1")]
    RandersConstraint { norm_b: f64 },
    #[error("dual norm maximization did not converge (best value {best}, residual {residual:e})")]
    DualNonConvergence { best: f64, residual: f64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Value, gradient and Hessian of a norm at a vector.
#[derive(Debug, Clone)]
pub struct NormJet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl NormJet {
    /// Fundamental tensor `g_v = ½ D²(F²)_v = dF ⊗ dF + F · D²F`.
    pub fn fundamental_tensor(&self) -> DMatrix<f64> {
        &self.gradient * self.gradient.transpose() + &self.hessian * self.value
    }

    /// Legendre image `½ d(F²)_v = F · dF_v`.
    pub fn legendre(&self) -> DVector<f64> {
        &self.gradient * self.value
    }
}

/// A smooth, positively homogeneous, quadratically convex norm on ℝⁿ.
///
/// Only [`eval`](MinkowskiNorm::eval) is required; derivatives default to
/// central finite differences with step `ε^{1/3}·max(1, |v|)`.
pub trait MinkowskiNorm: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn eval(&self, v: &DVector<f64>) -> f64;

    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        let h = f64::EPSILON.cbrt() * v.norm().max(1.0);
        let mut g = DVector::zeros(v.len());
        let mut w = v.clone();
        for i in 0..v.len() {
            w[i] = v[i] + h;
            let fp = self.eval(&w);
            w[i] = v[i] - h;
            let fm = self.eval(&w);
            w[i] = v[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    }

    /// Hessian of `F` (not of `F²`).
    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let h = f64::EPSILON.powf(0.25) * v.norm().max(1.0);
        let n = v.len();
        let mut m = DMatrix::zeros(n, n);
        let mut w = v.clone();
        for j in 0..n {
            w[j] = v[j] + h;
            let gp = self.gradient(&w);
            w[j] = v[j] - h;
            let gm = self.gradient(&w);
            w[j] = v[j];
            m.set_column(j, &((gp - gm) / (2.0 * h)));
        }
        (&m + m.transpose()) * 0.5
    }

    /// `(F(v), dF_v)`; override when both come from one pass.
    fn value_gradient(&self, v: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.eval(v), self.gradient(v))
    }

    fn jet(&self, v: &DVector<f64>) -> NormJet {
        NormJet {
            value: self.eval(v),
            gradient: self.gradient(v),
            hessian: self.hessian(v),
        }
    }

    /// Exact dual norm when one is known.
    fn dual_closed_form(&self, _p: &DVector<f64>) -> Option<f64> {
        None
    }

    /// Exact restriction `w ↦ F(E w)` to the column span of `frame`, when the
    /// family is closed under restriction.
    fn restrict_closed_form(&self, _frame: &DMatrix<f64>) -> Option<Box<dyn MinkowskiNorm>> {
        None
    }
}

fn check_dim(norm: &dyn MinkowskiNorm, v: &DVector<f64>) -> Result<(), NormError> {
    if v.len() != norm.dim() {
        return Err(NormError::DimensionMismatch {
            expected: norm.dim(),
            got: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>, NormError> {
    if !a.is_square() || (a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
        return Err(NormError::NotPositiveDefinite);
    }
    let chol = a.clone().cholesky().ok_or(NormError::NotPositiveDefinite)?;
    Ok(chol.inverse())
}

/// `F(v) = sqrt(vᵀ A v)`.
#[derive(Debug, Clone)]
pub struct EuclideanNorm {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
}

impl EuclideanNorm {
    pub fn new(a: DMatrix<f64>) -> Result<Self, NormError> {
        let a_inv = spd_inverse(&a)?;
        Ok(Self { a, a_inv })
    }

    /// Skips validation; callers guarantee `a_inv = a⁻¹`.
    pub(crate) fn from_parts(a: DMatrix<f64>, a_inv: DMatrix<f64>) -> Self {
        Self { a, a_inv }
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    pub fn standard(n: usize) -> Self {
        Self {
            a: DMatrix::identity(n, n),
            a_inv: DMatrix::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl MinkowskiNorm for EuclideanNorm {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn eval(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.a * v)).max(0.0).sqrt()
    }

    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        let av = &self.a * v;
        let s = v.dot(&av).sqrt();
        av / s
    }

    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let av = &self.a * v;
        let s = v.dot(&av).sqrt();
        (&self.a - &av * av.transpose() / (s * s)) / s
    }

    fn jet(&self, v: &DVector<f64>) -> NormJet {
        let av = &self.a * v;
        let s = v.dot(&av).sqrt();
        NormJet {
            value: s,
            gradient: &av / s,
            hessian: (&self.a - &av * av.transpose() / (s * s)) / s,
        }
    }

    fn dual_closed_form(&self, p: &DVector<f64>) -> Option<f64> {
        Some(p.dot(&(&self.a_inv * p)).max(0.0).sqrt())
    }

    fn restrict_closed_form(&self, frame: &DMatrix<f64>) -> Option<Box<dyn MinkowskiNorm>> {
        let a = frame.transpose() * &self.a * frame;
        EuclideanNorm::new(a).ok().map(|n| Box::new(n) as Box<dyn MinkowskiNorm>)
    }
}

/// `F(v) = sqrt(vᵀ A v) + ⟨b, v⟩` with `|b|_{A⁻¹} < 1`.
#[derive(Debug, Clone)]
pub struct RandersNorm {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: DVector<f64>,
    b_dual_sq: f64,
}

impl RandersNorm {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, NormError> {
        if b.len() != a.nrows() {
            return Err(NormError::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let a_inv = spd_inverse(&a)?;
        let b_dual_sq = b.dot(&(&a_inv * &b));
        if b_dual_sq.sqrt() >= 1.0 {
            return Err(NormError::RandersConstraint {
                norm_b: b_dual_sq.sqrt(),
            });
        }
        Ok(Self {
            a,
            a_inv,
            b,
            b_dual_sq,
        })
    }

    /// Skips validation; callers guarantee `a_inv = a⁻¹` and `|b|_{A⁻¹} < 1`.
    pub(crate) fn from_parts(a: DMatrix<f64>, a_inv: DMatrix<f64>, b: DVector<f64>) -> Self {
        let b_dual_sq = b.dot(&(&a_inv * &b));
        Self {
            a,
            a_inv,
            b,
            b_dual_sq,
        }
    }

    pub fn with_identity(b: DVector<f64>) -> Result<Self, NormError> {
        let n = b.len();
        Self::new(DMatrix::identity(n, n), b)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn drift(&self) -> &DVector<f64> {
        &self.b
    }
}

impl MinkowskiNorm for RandersNorm {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn eval(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.a * v)).max(0.0).sqrt() + self.b.dot(v)
    }

    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        let av = &self.a * v;
        let s = v.dot(&av).sqrt();
        av / s + &self.b
    }

    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let av = &self.a * v;
        let s = v.dot(&av).sqrt();
        (&self.a - &av * av.transpose() / (s * s)) / s
    }

    fn jet(&self, v: &DVector<f64>) -> NormJet {
        let av = &self.a * v;
        let s = v.dot(&av).sqrt();
        NormJet {
            value: s + self.b.dot(v),
            gradient: &av / s + &self.b,
            hessian: (&self.a - &av * av.transpose() / (s * s)) / s,
        }
    }

    /// The dual unit ball is the translated ellipsoid `|p − b|_{A⁻¹} ≤ 1`;
    /// its gauge solves a quadratic.
    fn dual_closed_form(&self, p: &DVector<f64>) -> Option<f64> {
        let ainv_p = &self.a_inv * p;
        let pb = self.b.dot(&ainv_p);
        let pp = p.dot(&ainv_p);
        let c = 1.0 - self.b_dual_sq;
        let disc = (pb * pb + c * pp).max(0.0).sqrt();
        // Stable form of (−pb + disc)/c.
        if pb <= 0.0 {
            Some((disc - pb) / c)
        } else {
            Some(pp / (pb + disc))
        }
    }

    fn restrict_closed_form(&self, frame: &DMatrix<f64>) -> Option<Box<dyn MinkowskiNorm>> {
        let a = frame.transpose() * &self.a * frame;
        let b = frame.transpose() * &self.b;
        RandersNorm::new(a, b)
            .ok()
            .map(|n| Box::new(n) as Box<dyn MinkowskiNorm>)
    }
}

/// `w ↦ F(E w)` for an `n × k` frame `E`; derivatives are pulled back from
/// the parent norm.
#[derive(Debug)]
pub struct RestrictedNorm<'a> {
    parent: &'a dyn MinkowskiNorm,
    frame: DMatrix<f64>,
}

impl<'a> RestrictedNorm<'a> {
    pub fn new(parent: &'a dyn MinkowskiNorm, frame: DMatrix<f64>) -> Self {
        Self { parent, frame }
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }
}

impl MinkowskiNorm for RestrictedNorm<'_> {
    fn dim(&self) -> usize {
        self.frame.ncols()
    }

    fn eval(&self, w: &DVector<f64>) -> f64 {
        self.parent.eval(&(&self.frame * w))
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        self.frame.transpose() * self.parent.gradient(&(&self.frame * w))
    }

    fn hessian(&self, w: &DVector<f64>) -> DMatrix<f64> {
        self.frame.transpose() * self.parent.hessian(&(&self.frame * w)) * &self.frame
    }

    fn value_gradient(&self, w: &DVector<f64>) -> (f64, DVector<f64>) {
        let (f, g) = self.parent.value_gradient(&(&self.frame * w));
        (f, self.frame.transpose() * g)
    }

    fn jet(&self, w: &DVector<f64>) -> NormJet {
        let jet = self.parent.jet(&(&self.frame * w));
        NormJet {
            value: jet.value,
            gradient: self.frame.transpose() * jet.gradient,
            hessian: self.frame.transpose() * jet.hessian * &self.frame,
        }
    }
}

/// Restriction of `norm` to the column span of an orthonormal `frame`,
/// in the coordinates of that frame.
pub fn restrict<'a>(norm: &'a dyn MinkowskiNorm, frame: &DMatrix<f64>) -> Box<dyn MinkowskiNorm + 'a> {
    match norm.restrict_closed_form(frame) {
        Some(closed) => closed,
        None => Box::new(RestrictedNorm::new(norm, frame.clone())),
    }
}

/// Restriction to the oriented plane `⟨w⟩`, using the orthonormal basis
/// returned by [`SimpleKVector::span_basis`].
pub fn restrict_to_plane<'a>(
    norm: &'a dyn MinkowskiNorm,
    w: &SimpleKVector,
) -> Result<Box<dyn MinkowskiNorm + 'a>, NormError> {
    if w.dim() != norm.dim() {
        return Err(NormError::DimensionMismatch {
            expected: norm.dim(),
            got: w.dim(),
        });
    }
    let frame = w.span_basis()?;
    Ok(restrict(norm, &frame.basis))
}

/// `L¹(v) = ½ d(F²)_v`.
pub fn legendre_norm(norm: &dyn MinkowskiNorm, v: &DVector<f64>) -> Result<DVector<f64>, NormError> {
    check_dim(norm, v)?;
    if v.iter().all(|x| *x == 0.0) {
        return Err(NormError::ZeroVector);
    }
    Ok(norm.jet(v).legendre())
}

/// Fundamental tensor `g_v`.
pub fn fundamental_tensor(norm: &dyn MinkowskiNorm, v: &DVector<f64>) -> Result<DMatrix<f64>, NormError> {
    check_dim(norm, v)?;
    if v.iter().all(|x| *x == 0.0) {
        return Err(NormError::ZeroVector);
    }
    Ok(norm.jet(v).fundamental_tensor())
}

/// Result of maximizing a covector over the unit sphere of a norm.
#[derive(Debug, Clone)]
pub struct DualPoint {
    /// `‖p‖* = sup_{F(w)=1} p(w)`.
    pub value: f64,
    /// Maximizer on the unit sphere, `F(w) = 1`.
    pub argmax: DVector<f64>,
    pub iterations: usize,
}

/// Dual norm `sup_{F(v)=1} p(v)`.
pub fn dual_norm(norm: &dyn MinkowskiNorm, p: &DVector<f64>) -> Result<f64, NormError> {
    check_dim(norm, p)?;
    if let Some(v) = norm.dual_closed_form(p) {
        return Ok(v);
    }
    dual_solve(norm, p, None).map(|d| d.value)
}

/// Numerical dual norm with maximizer.
///
/// Newton's method on the Legendre equation `F(w)·dF_w = p`, whose Jacobian
/// is the fundamental tensor; the value is then read as `p(w)/F(w)`, which
/// is stationary at the maximizer. Falls back to multi-start projected
/// gradient ascent on the Euclidean sphere if Newton stalls.
pub fn dual_solve(
    norm: &dyn MinkowskiNorm,
    p: &DVector<f64>,
    guess: Option<&DVector<f64>>,
) -> Result<DualPoint, NormError> {
    check_dim(norm, p)?;
    let pn = p.norm();
    if pn == 0.0 {
        let mut w = DVector::zeros(p.len());
        w[0] = 1.0;
        let f = norm.eval(&w);
        return Ok(DualPoint {
            value: 0.0,
            argmax: w / f,
            iterations: 0,
        });
    }
    if let Some(d) = newton_dual(norm, p, guess) {
        return Ok(d);
    }
    gradient_ascent_dual(norm, p)
}

fn newton_dual(norm: &dyn MinkowskiNorm, p: &DVector<f64>, guess: Option<&DVector<f64>>) -> Option<DualPoint> {
    let pn = p.norm();
    let mut w = match guess {
        Some(g) if g.len() == p.len() && g.norm() > 0.0 => g.clone(),
        _ => p.clone(),
    };
    let mut jet = norm.jet(&w);
    // Scale the start so that |L(w)| = |p| (L is 1-homogeneous).
    let scale = pn / jet.legendre().norm();
    if !scale.is_finite() {
        return None;
    }
    w *= scale;
    jet = norm.jet(&w);
    let mut residual = p - jet.legendre();
    let mut rnorm = residual.norm();
    for it in 0..60 {
        if rnorm <= 1e-14 * pn {
            let f = jet.value;
            let unit = &w / f;
            return Some(DualPoint {
                value: p.dot(&unit),
                argmax: unit,
                iterations: it,
            });
        }
        let g = jet.fundamental_tensor();
        let step = g.cholesky()?.solve(&residual);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &w + &step * t;
            let tj = norm.jet(&trial);
            let tr = p - tj.legendre();
            let tn = tr.norm();
            if tn < rnorm || tn <= 1e-14 * pn {
                w = trial;
                jet = tj;
                residual = tr;
                rnorm = tn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Stalled at rounding level counts as converged.
            if rnorm <= 1e-10 * pn {
                let unit = &w / jet.value;
                return Some(DualPoint {
                    value: p.dot(&unit),
                    argmax: unit,
                    iterations: it,
                });
            }
            return None;
        }
    }
    None
}

fn gradient_ascent_dual(norm: &dyn MinkowskiNorm, p: &DVector<f64>) -> Result<DualPoint, NormError> {
    let n = p.len();
    let pn = p.norm();
    let objective = |u: &DVector<f64>| p.dot(u) / norm.eval(u);
    let mut starts = vec![p / pn];
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(n);
            e[i] = s;
            starts.push(e);
        }
    }
    let mut best: Option<(f64, DVector<f64>, f64, usize)> = None;
    for start in starts {
        let mut u = start;
        let mut f = objective(&u);
        let mut step = 0.5;
        let mut tangential = f64::INFINITY;
        let mut iters = 0;
        for it in 0..5000 {
            iters = it;
            let fv = norm.eval(&u);
            let grad = p / fv - norm.gradient(&u) * (p.dot(&u) / (fv * fv));
            let tg = &grad - &u * grad.dot(&u);
            tangential = tg.norm();
            if tangential <= 1e-13 * pn {
                break;
            }
            let mut moved = false;
            while step > 1e-18 {
                let trial = (&u + &tg * step).normalize();
                let ft = objective(&trial);
                if ft > f {
                    u = trial;
                    f = ft;
                    step *= 1.5;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| f > b.0) {
            best = Some((f, u, tangential, iters));
        }
    }
    let (value, u, residual, iterations) = best.expect("at least one start");
    if residual > 1e-7 * pn {
        return Err(NormError::DualNonConvergence { best: value, residual });
    }
    let f = norm.eval(&u);
    Ok(DualPoint {
        value,
        argmax: u / f,
        iterations,
    })
}
