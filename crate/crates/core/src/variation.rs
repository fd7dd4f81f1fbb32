//! Immersed patches, Holmes–Thompson volume, first variation, the
//! mean-curvature covector and the fiber-integration identity.

use crate::curves::{Curve, CurveSpec};
use crate::densities::{busemann_form, epsilon_k, CubatureOptions, DensityError, DensityKind, KDensity};
use crate::exterior::{AlgebraError, SimpleKVector};
use crate::finsler::{d_form, omega1_at, stack, FinslerChart, FinslerError};
use crate::quadrature::{periodic_nodes, GaussLegendre};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Debug;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariationError {
    #[error("patch is not immersed at q = {q:?}")]
    NotImmersed { q: Vec<f64> },
    #[error("variation support is not inside the parameter box")]
    SupportOutsideBox,
    #[error("patch leaves the chart domain at {x:?}")]
    OutsideDomain { x: Vec<f64> },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("invalid patch: {0}")]
    InvalidPatch(String),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Finsler(#[from] FinslerError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A smooth map `α : Q → ℝⁿ` from a parameter box `Q ⊂ ℝᵏ`, oriented by the
/// parameter order.
pub trait ImmersedPatch: Send + Sync + Debug {
    fn ambient_dim(&self) -> usize;

    fn param_dim(&self) -> usize;

    /// `(lower, upper)` corners of `Q`.
    fn param_box(&self) -> (Vec<f64>, Vec<f64>);

    fn point(&self, q: &[f64]) -> DVector<f64>;

    /// `n × k` matrix of partial derivatives `∂ᵢα`.
    fn tangents(&self, q: &[f64]) -> DMatrix<f64>;

    /// `∂ⱼ(∂ᵢα)` for each `j`, by central differences unless overridden.
    fn second_derivatives(&self, q: &[f64]) -> Vec<DMatrix<f64>> {
        let h = 1e-5;
        (0..self.param_dim())
            .map(|j| {
                let mut qp = q.to_vec();
                let mut qm = q.to_vec();
                qp[j] += h;
                qm[j] -= h;
                (self.tangents(&qp) - self.tangents(&qm)) / (2.0 * h)
            })
            .collect()
    }
}

/// `α(q) = origin + basis·q`.
#[derive(Debug, Clone)]
pub struct AffinePatch {
    pub origin: DVector<f64>,
    pub basis: DMatrix<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ImmersedPatch for AffinePatch {
    fn ambient_dim(&self) -> usize {
        self.origin.len()
    }

    fn param_dim(&self) -> usize {
        self.basis.ncols()
    }

    fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lower.clone(), self.upper.clone())
    }

    fn point(&self, q: &[f64]) -> DVector<f64> {
        &self.origin + &self.basis * DVector::from_column_slice(q)
    }

    fn tangents(&self, _q: &[f64]) -> DMatrix<f64> {
        self.basis.clone()
    }

    fn second_derivatives(&self, _q: &[f64]) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(self.basis.nrows(), self.basis.ncols()); self.basis.ncols()]
    }
}

/// Sphere of ℝ³ in polar coordinates `(θ, φ)`. The parameter order
/// `(θ, φ)` orients by the outward normal; `inward` swaps it to `(φ, θ)`.
#[derive(Debug, Clone)]
pub struct SpherePatch {
    pub center: DVector<f64>,
    pub radius: f64,
    pub theta: (f64, f64),
    pub phi: (f64, f64),
    pub inward: bool,
}

impl SpherePatch {
    fn angles(&self, q: &[f64]) -> (f64, f64) {
        if self.inward {
            (q[1], q[0])
        } else {
            (q[0], q[1])
        }
    }

    /// Outward unit normal at parameter `q`.
    pub fn outward_normal(&self, q: &[f64]) -> DVector<f64> {
        let (t, p) = self.angles(q);
        DVector::from_vec(vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()])
    }
}

impl ImmersedPatch for SpherePatch {
    fn ambient_dim(&self) -> usize {
        3
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        if self.inward {
            (vec![self.phi.0, self.theta.0], vec![self.phi.1, self.theta.1])
        } else {
            (vec![self.theta.0, self.phi.0], vec![self.theta.1, self.phi.1])
        }
    }

    fn point(&self, q: &[f64]) -> DVector<f64> {
        &self.center + self.outward_normal(q) * self.radius
    }

    fn tangents(&self, q: &[f64]) -> DMatrix<f64> {
        let (t, p) = self.angles(q);
        let r = self.radius;
        let dt = DVector::from_vec(vec![t.cos() * p.cos(), t.cos() * p.sin(), -t.sin()]) * r;
        let dp = DVector::from_vec(vec![-t.sin() * p.sin(), t.sin() * p.cos(), 0.0]) * r;
        if self.inward {
            DMatrix::from_columns(&[dp, dt])
        } else {
            DMatrix::from_columns(&[dt, dp])
        }
    }
}

/// Graph `origin + q₁e₁ + q₂e₂ + c(q₁² + q₂²)·normal` over a rectangle.
#[derive(Debug, Clone)]
pub struct ParaboloidPatch {
    pub origin: DVector<f64>,
    pub e1: DVector<f64>,
    pub e2: DVector<f64>,
    pub normal: DVector<f64>,
    pub curvature: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ImmersedPatch for ParaboloidPatch {
    fn ambient_dim(&self) -> usize {
        self.origin.len()
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lower.clone(), self.upper.clone())
    }

    fn point(&self, q: &[f64]) -> DVector<f64> {
        &self.origin + &self.e1 * q[0] + &self.e2 * q[1] + &self.normal * (self.curvature * (q[0] * q[0] + q[1] * q[1]))
    }

    fn tangents(&self, q: &[f64]) -> DMatrix<f64> {
        let c = 2.0 * self.curvature;
        DMatrix::from_columns(&[&self.e1 + &self.normal * (c * q[0]), &self.e2 + &self.normal * (c * q[1])])
    }
}

/// A curve viewed as a 1-dimensional patch.
#[derive(Debug)]
pub struct CurvePatch(pub Box<dyn Curve>);

impl ImmersedPatch for CurvePatch {
    fn ambient_dim(&self) -> usize {
        self.0.dim()
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = self.0.interval();
        (vec![a], vec![b])
    }

    fn point(&self, q: &[f64]) -> DVector<f64> {
        self.0.point(q[0])
    }

    fn tangents(&self, q: &[f64]) -> DMatrix<f64> {
        DMatrix::from_columns(&[self.0.velocity(q[0])])
    }

    fn second_derivatives(&self, q: &[f64]) -> Vec<DMatrix<f64>> {
        vec![DMatrix::from_columns(&[self.0.acceleration(q[0])])]
    }
}

/// `α ∘ ψ` for the coordinate-wise diffeomorphism of the parameter box
/// `ψᵢ(r) = aᵢ + Lᵢ·g((rᵢ − aᵢ)/Lᵢ)`, `g(s) = s + δ sin(2πs)/(2π)`,
/// which is orientation preserving for `|δ| < 1`.
#[derive(Debug)]
pub struct ReparametrizedPatch<P: ImmersedPatch> {
    pub inner: P,
    pub delta: f64,
}

impl<P: ImmersedPatch> ReparametrizedPatch<P> {
    fn psi(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.inner.param_box();
        let mut q = Vec::with_capacity(r.len());
        let mut dq = Vec::with_capacity(r.len());
        for i in 0..r.len() {
            let l = hi[i] - lo[i];
            let s = (r[i] - lo[i]) / l;
            q.push(lo[i] + l * (s + self.delta * (2.0 * PI * s).sin() / (2.0 * PI)));
            dq.push(1.0 + self.delta * (2.0 * PI * s).cos());
        }
        (q, dq)
    }
}

impl<P: ImmersedPatch> ImmersedPatch for ReparametrizedPatch<P> {
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }

    fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.inner.param_box()
    }

    fn point(&self, r: &[f64]) -> DVector<f64> {
        self.inner.point(&self.psi(r).0)
    }

    fn tangents(&self, r: &[f64]) -> DMatrix<f64> {
        let (q, dq) = self.psi(r);
        let mut t = self.inner.tangents(&q);
        for (j, d) in dq.iter().enumerate() {
            t.column_mut(j).scale_mut(*d);
        }
        t
    }
}

/// Serializable patch description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatchSpec {
    Affine {
        origin: Vec<f64>,
        basis: Vec<Vec<f64>>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Sphere {
        center: Vec<f64>,
        radius: f64,
        theta: [f64; 2],
        phi: [f64; 2],
        #[serde(default)]
        inward: bool,
    },
    Paraboloid {
        origin: Vec<f64>,
        e1: Vec<f64>,
        e2: Vec<f64>,
        normal: Vec<f64>,
        curvature: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Curve {
        curve: CurveSpec,
    },
}

impl PatchSpec {
    pub fn build(&self) -> Result<Box<dyn ImmersedPatch>, VariationError> {
        let vec = |x: &Vec<f64>| DVector::from_vec(x.clone());
        let bad = |m: &str| VariationError::InvalidPatch(m.to_string());
        match self {
            PatchSpec::Affine {
                origin,
                basis,
                lower,
                upper,
            } => {
                let k = basis.len();
                if k == 0 || basis.iter().any(|b| b.len() != origin.len()) || lower.len() != k || upper.len() != k {
                    return Err(bad("affine patch dimensions are inconsistent"));
                }
                let cols: Vec<_> = basis.iter().map(vec).collect();
                Ok(Box::new(AffinePatch {
                    origin: vec(origin),
                    basis: DMatrix::from_columns(&cols),
                    lower: lower.clone(),
                    upper: upper.clone(),
                }))
            }
            PatchSpec::Sphere {
                center,
                radius,
                theta,
                phi,
                inward,
            } => {
                if center.len() != 3 || !(*radius > 0.0) {
                    return Err(bad("sphere patch needs a center in R^3 and a positive radius"));
                }
                Ok(Box::new(SpherePatch {
                    center: vec(center),
                    radius: *radius,
                    theta: (theta[0], theta[1]),
                    phi: (phi[0], phi[1]),
                    inward: *inward,
                }))
            }
            PatchSpec::Paraboloid {
                origin,
                e1,
                e2,
                normal,
                curvature,
                lower,
                upper,
            } => {
                let n = origin.len();
                if [e1, e2, normal].iter().any(|v| v.len() != n) || lower.len() != 2 || upper.len() != 2 {
                    return Err(bad("paraboloid patch dimensions are inconsistent"));
                }
                Ok(Box::new(ParaboloidPatch {
                    origin: vec(origin),
                    e1: vec(e1),
                    e2: vec(e2),
                    normal: vec(normal),
                    curvature: *curvature,
                    lower: lower.clone(),
                    upper: upper.clone(),
                }))
            }
            PatchSpec::Curve { curve } => Ok(Box::new(CurvePatch(curve.build().map_err(VariationError::InvalidPatch)?))),
        }
    }
}

/// Radial profile of a compactly supported bump, as a function of `u = r²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `(1 − r²)⁴`.
    #[default]
    Polynomial,
    /// `exp(1 − 1/(1 − r²))`.
    Smooth,
}

impl BumpProfile {
    /// `(B(u), B'(u))` for `u = r² < 1`, zero outside.
    pub fn eval(self, u: f64) -> (f64, f64) {
        if u >= 1.0 {
            return (0.0, 0.0);
        }
        match self {
            BumpProfile::Polynomial => {
                let s = 1.0 - u;
                (s.powi(4), -4.0 * s.powi(3))
            }
            BumpProfile::Smooth => {
                let s = 1.0 - u;
                let b = (1.0 - 1.0 / s).exp();
                (b, -b / (s * s))
            }
        }
    }
}

/// `X(q) = B(|q − c|²/ρ²)·(constant + linear·(q − c)/ρ)`, supported in the
/// parameter ball of radius `ρ` around `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
pub struct VariationField {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default)]
    pub profile: BumpProfile,
    pub constant: Vec<f64>,
    /// Row-major `n × k`; empty means zero.
    #[serde(default)]
    pub linear: Vec<Vec<f64>>,
}

impl VariationField {
    pub fn bump(center: Vec<f64>, radius: f64, direction: DVector<f64>) -> Self {
        Self {
            center,
            radius,
            profile: BumpProfile::Polynomial,
            constant: direction.iter().copied().collect(),
            linear: Vec::new(),
        }
    }

    pub fn with_profile(mut self, profile: BumpProfile) -> Self {
        self.profile = profile;
        self
    }

    fn linear_matrix(&self, k: usize) -> DMatrix<f64> {
        let n = self.constant.len();
        if self.linear.is_empty() {
            DMatrix::zeros(n, k)
        } else {
            DMatrix::from_fn(n, k, |i, j| self.linear[i][j])
        }
    }

    /// Bump weight `B(|q − c|²/ρ²)`.
    pub fn weight(&self, q: &[f64]) -> f64 {
        let u: f64 = q.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / self.radius.powi(2);
        self.profile.eval(u).0
    }

    /// `(X(q), ∂X/∂q)`.
    pub fn eval(&self, q: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let k = q.len();
        let rho = self.radius;
        let d = DVector::from_fn(k, |i, _| (q[i] - self.center[i]) / rho);
        let (b, db) = self.profile.eval(d.norm_squared());
        let lin = self.linear_matrix(k);
        let shape = DVector::from_column_slice(&self.constant) + &lin * &d;
        let value = &shape * b;
        // ∂B/∂q = B'(u)·2d/ρ
        let grad_b = &d * (2.0 * db / rho);
        let jac = &shape * grad_b.transpose() + lin * (b / rho);
        (value, jac)
    }

    fn check(&self, patch: &dyn ImmersedPatch) -> Result<(), VariationError> {
        let (lo, hi) = patch.param_box();
        if self.center.len() != patch.param_dim()
            || self.constant.len() != patch.ambient_dim()
            || !(self.radius > 0.0)
            || (!self.linear.is_empty()
                && (self.linear.len() != patch.ambient_dim() || self.linear.iter().any(|r| r.len() != patch.param_dim())))
        {
            return Err(VariationError::Unsupported("variation field dimensions do not match the patch".into()));
        }
        for i in 0..lo.len() {
            if self.center[i] - self.radius < lo[i] || self.center[i] + self.radius > hi[i] {
                return Err(VariationError::SupportOutsideBox);
            }
        }
        Ok(())
    }
}

/// Numerical parameters for volumes and first variations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(default)]
pub struct VariationOptions {
    pub kind: DensityKind,
    /// Gauss–Legendre nodes per parameter direction for whole-patch volumes.
    pub grid: usize,
    /// Radial Gauss–Legendre nodes on the support of a variation.
    pub radial: usize,
    /// Angular trapezoid nodes on the support (k = 2).
    pub angular: usize,
    /// Central-difference step `s`; Richardson uses `s` and `s/2`.
    pub step: f64,
    /// Relative disagreement of the two Richardson levels that is flagged.
    pub tolerance: f64,
    pub cubature: CubatureOptions,
}

impl Default for VariationOptions {
    fn default() -> Self {
        Self {
            kind: DensityKind::HolmesThompson,
            grid: 64,
            radial: 24,
            angular: 48,
            step: 1e-2,
            tolerance: 1e-3,
            cubature: CubatureOptions::default(),
        }
    }
}

/// `φ(x, ∂₁α ∧ … ∧ ∂ₖα)` for the chosen density.
pub fn density_at(
    chart: &dyn FinslerChart,
    x: &DVector<f64>,
    tangents: &DMatrix<f64>,
    opts: &VariationOptions,
) -> Result<f64, VariationError> {
    if !chart.domain().contains(x) {
        return Err(VariationError::OutsideDomain { x: x.iter().copied().collect() });
    }
    let a = SimpleKVector::from_matrix(tangents.clone())?;
    let norm = chart.norm_at(x);
    let value = KDensity::new(norm.as_ref(), opts.kind).with_options(opts.cubature).evaluate(&a);
    match value {
        Err(DensityError::Algebra(AlgebraError::Degenerate)) => Err(VariationError::NotImmersed {
            q: Vec::new(),
        }),
        other => Ok(other?),
    }
}

/// Tensor-product Gauss–Legendre nodes on the parameter box.
fn box_nodes(lo: &[f64], hi: &[f64], m: usize) -> Vec<(Vec<f64>, f64)> {
    let gl = GaussLegendre::cached(m);
    let mut nodes = vec![(Vec::new(), 1.0)];
    for i in 0..lo.len() {
        let mut next = Vec::with_capacity(nodes.len() * m);
        for (q, w) in &nodes {
            for (x, wx) in gl.on_interval(lo[i], hi[i]) {
                let mut qq = q.clone();
                qq.push(x);
                next.push((qq, w * wx));
            }
        }
        nodes = next;
    }
    nodes
}

/// Volume with grid-refinement error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// `∫_Q φ(α(q), ∂₁α ∧ … ∧ ∂ₖα) dq` on the `grid`-point tensor rule, with the
/// difference to the half-resolution rule as error estimate.
pub fn ht_volume(
    chart: &dyn FinslerChart,
    patch: &dyn ImmersedPatch,
    opts: &VariationOptions,
) -> Result<VolumeEstimate, VariationError> {
    let (lo, hi) = patch.param_box();
    let integrate = |m: usize| -> Result<f64, VariationError> {
        let nodes = box_nodes(&lo, &hi, m);
        let values: Vec<Result<f64, VariationError>> = nodes
            .par_iter()
            .map(|(q, w)| {
                let phi = density_at(chart, &patch.point(q), &patch.tangents(q), opts).map_err(|e| match e {
                    VariationError::NotImmersed { .. } => VariationError::NotImmersed { q: q.clone() },
                    other => other,
                })?;
                Ok(w * phi)
            })
            .collect();
        values.into_iter().sum()
    };
    let fine = integrate(opts.grid)?;
    let coarse = integrate((opts.grid / 2).max(1))?;
    Ok(VolumeEstimate {
        value: fine,
        error_estimate: (fine - coarse).abs(),
    })
}

/// Nodes and weights on the support ball of a variation field (polar
/// coordinates for k = 2, an interval for k = 1).
fn support_nodes(field: &VariationField, opts: &VariationOptions) -> Result<Vec<(Vec<f64>, f64)>, VariationError> {
    let c = &field.center;
    let rho = field.radius;
    let gl = GaussLegendre::cached(opts.radial);
    match c.len() {
        1 => Ok(gl.on_interval(c[0] - rho, c[0] + rho).map(|(t, w)| (vec![t], w)).collect()),
        2 => {
            let mut out = Vec::with_capacity(opts.radial * opts.angular);
            for (r, wr) in gl.on_interval(0.0, 1.0) {
                for (t, wt) in periodic_nodes(opts.angular) {
                    out.push((vec![c[0] + rho * r * t.cos(), c[1] + rho * r * t.sin()], rho * rho * r * wr * wt));
                }
            }
            Ok(out)
        }
        k => Err(VariationError::Unsupported(format!("variations of {k}-dimensional patches"))),
    }
}

/// First variation with its Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstVariation {
    /// `d/ds Vol(α + sX)` at `s = 0`.
    pub value: f64,
    pub error_estimate: f64,
    /// The two Richardson levels disagree beyond tolerance.
    pub flagged: bool,
    /// `‖X‖ = ∫ |X| φ dq`.
    pub field_norm: f64,
    /// `∫ B φ dq` with `B` the bump weight.
    pub bump_mass: f64,
}

/// `(Vol(α + sX) − Vol(α − sX))/(2s)` at steps `s` and `s/2`, combined by
/// Richardson extrapolation. Only the support of `X` contributes, so the
/// difference is integrated there directly.
pub fn first_variation(
    chart: &dyn FinslerChart,
    patch: &dyn ImmersedPatch,
    field: &VariationField,
    opts: &VariationOptions,
) -> Result<FirstVariation, VariationError> {
    field.check(patch)?;
    let nodes = support_nodes(field, opts)?;
    let s = opts.step;
    let per_node: Vec<Result<[f64; 4], VariationError>> = nodes
        .par_iter()
        .map(|(q, w)| {
            let x = patch.point(q);
            let t = patch.tangents(q);
            let (xv, dxv) = field.eval(q);
            let phi = |h: f64| density_at(chart, &(&x + &xv * h), &(&t + &dxv * h), opts);
            let d1 = (phi(s)? - phi(-s)?) / (2.0 * s);
            let d2 = (phi(0.5 * s)? - phi(-0.5 * s)?) / s;
            let phi0 = phi(0.0)?;
            Ok([w * d1, w * d2, w * xv.norm() * phi0, w * field.weight(q) * phi0])
        })
        .collect();
    let mut acc = [0.0; 4];
    for r in per_node {
        let r = r?;
        for i in 0..4 {
            acc[i] += r[i];
        }
    }
    let [d1, d2, field_norm, bump_mass] = acc;
    let value = (4.0 * d2 - d1) / 3.0;
    let error_estimate = (d2 - d1).abs() / 3.0;
    let flagged = error_estimate > opts.tolerance * value.abs().max(1e-8 * field_norm);
    Ok(FirstVariation {
        value,
        error_estimate,
        flagged,
        field_norm,
        bump_mass,
    })
}

/// First variation for the Busemann–Hausdorff density.
pub fn hausdorff_comparison(
    chart: &dyn FinslerChart,
    patch: &dyn ImmersedPatch,
    field: &VariationField,
    opts: &VariationOptions,
) -> Result<FirstVariation, VariationError> {
    let opts = VariationOptions {
        kind: DensityKind::BusemannHausdorff,
        ..*opts
    };
    first_variation(chart, patch, field, &opts)
}

/// Mean-curvature covector at a point of a patch.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureCovector {
    pub param: Vec<f64>,
    pub point: Vec<f64>,
    pub h: Vec<f64>,
    pub error_estimate: f64,
}

impl CurvatureCovector {
    pub fn norm(&self) -> f64 {
        self.h.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn apply(&self, u: &DVector<f64>) -> f64 {
        self.h.iter().zip(u.iter()).map(|(a, b)| a * b).sum()
    }
}

/// `h(eⱼ) = δVol(B·eⱼ) / ∫ B φ` for bumps `B` of radius `radius` at `q0`;
/// `h(u) > 0` means moving in direction `u` increases volume.
pub fn mean_curvature_covector(
    chart: &dyn FinslerChart,
    patch: &dyn ImmersedPatch,
    q0: &[f64],
    radius: f64,
    profile: BumpProfile,
    opts: &VariationOptions,
) -> Result<CurvatureCovector, VariationError> {
    let n = patch.ambient_dim();
    let mut h = Vec::with_capacity(n);
    let mut err: f64 = 0.0;
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let field = VariationField::bump(q0.to_vec(), radius, e).with_profile(profile);
        let fv = first_variation(chart, patch, &field, opts)?;
        h.push(fv.value / fv.bump_mass);
        err = err.max(fv.error_estimate / fv.bump_mass);
    }
    Ok(CurvatureCovector {
        param: q0.to_vec(),
        point: patch.point(q0).iter().copied().collect(),
        h,
        error_estimate: err,
    })
}

/// Relative step for derivatives of the Hilbert k-form.
const THETA_FORM_STEP: f64 = 1e-4;

/// `Θ(x, A)(Y₁, …, Y_k) = β_{x, a}(Dπ Y₁ ∧ … ∧ Dπ Y_k)` on the space of
/// `(x, A)`, `A` an `n × k` factor matrix of `a`. This is the 0-homogeneous
/// extension of the Hilbert form of the Holmes–Thompson Legendre map.
fn theta(
    chart: &dyn FinslerChart,
    point: &DVector<f64>,
    n: usize,
    k: usize,
    args: &[&DVector<f64>],
    opts: &VariationOptions,
) -> Result<f64, VariationError> {
    let x = point.rows(0, n).into_owned();
    if !chart.domain().contains(&x) {
        return Err(VariationError::OutsideDomain { x: x.iter().copied().collect() });
    }
    let a = DMatrix::from_column_slice(n, k, &point.as_slice()[n..]);
    let a = SimpleKVector::from_matrix(a)?;
    let norm = chart.norm_at(&x);
    let beta = crate::densities::busemann_form_with(norm.as_ref(), &a, &opts.cubature)?;
    let proj: Vec<DVector<f64>> = args.iter().map(|y| y.rows(0, n).into_owned()).collect();
    Ok(beta.value.eval_on(&DMatrix::from_columns(&proj)))
}

/// `dΘ(Y₀, …, Y_k)` by central differences with constant extensions.
pub fn d_theta(
    chart: &dyn FinslerChart,
    point: &DVector<f64>,
    n: usize,
    k: usize,
    vectors: &[DVector<f64>],
    opts: &VariationOptions,
) -> Result<f64, VariationError> {
    let mut total = 0.0;
    for i in 0..=k {
        let rest: Vec<&DVector<f64>> = vectors.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).collect();
        let dir = &vectors[i];
        let scale = dir.norm();
        if scale == 0.0 {
            continue;
        }
        let h = THETA_FORM_STEP * (1.0 + point.norm()) / scale;
        let plus = theta(chart, &(point + dir * h), n, k, &rest, opts)?;
        let minus = theta(chart, &(point - dir * h), n, k, &rest, opts)?;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * (plus - minus) / (2.0 * h);
    }
    Ok(total)
}

/// The lift `q ↦ (α(q), Dα(q))` at `q0` and its tangent vectors
/// `bᵢ = (∂ᵢα, ∂ᵢDα)`.
fn lifted_patch(patch: &dyn ImmersedPatch, q0: &[f64]) -> (DVector<f64>, Vec<DVector<f64>>) {
    let t = patch.tangents(q0);
    let point = stack(&patch.point(q0), &DVector::from_column_slice(t.as_slice()));
    let second = patch.second_derivatives(q0);
    let lifts = (0..patch.param_dim())
        .map(|i| stack(&t.column(i).into_owned(), &DVector::from_column_slice(second[i].as_slice())))
        .collect();
    (point, lifts)
}

/// `h_x(u) = dΘ(ũ, b₁, …, b_k)` with `ũ = (u, W)` any lift of `u` and the
/// `bᵢ` spanning the tangent lift of the patch, scaled so that
/// `Dπ(b₁ ∧ … ∧ b_k)` has unit density. `vertical` supplies the vertical
/// parts `W` (zero when `None`).
pub fn mean_curvature_covector_hilbert(
    chart: &dyn FinslerChart,
    patch: &dyn ImmersedPatch,
    q0: &[f64],
    vertical: Option<&[DMatrix<f64>]>,
    opts: &VariationOptions,
) -> Result<Vec<f64>, VariationError> {
    let n = patch.ambient_dim();
    let k = patch.param_dim();
    let (point, lifts) = lifted_patch(patch, q0);
    let phi = density_at(chart, &patch.point(q0), &patch.tangents(q0), opts)?;
    let mut h = Vec::with_capacity(n);
    for j in 0..n {
        let mut u = DVector::zeros(n);
        u[j] = 1.0;
        let w = match vertical {
            Some(ws) => DVector::from_column_slice(ws[j].as_slice()),
            None => DVector::zeros(n * k),
        };
        let mut vectors = vec![stack(&u, &w)];
        vectors.extend(lifts.iter().cloned());
        h.push(d_theta(chart, &point, n, k, &vectors, opts)? / phi);
    }
    Ok(h)
}

/// For curves (k = 1): `h = (∂_x F − d/dt ∂_v F)/F`, the Euler–Lagrange
/// expression of the length functional divided by the speed.
pub fn curve_mean_curvature(chart: &dyn FinslerChart, curve: &dyn Curve, t: f64) -> Vec<f64> {
    let x = curve.point(t);
    let v = curve.velocity(t);
    let r = crate::finsler::length_residual(chart, &x, &v, &curve.acceleration(t));
    let speed = chart.eval(&x, &v);
    r.iter().map(|c| c / speed).collect()
}

/// A field of simple k-vectors with affine factors,
/// `σ(x) = factors + Σᵢ xᵢ·gradient[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
pub struct PlaneField {
    /// Columns are the factors at `x = 0`.
    pub factors: Vec<Vec<f64>>,
    /// `gradient[i][j]` is the derivative of factor `j` along `xᵢ`; empty
    /// means constant.
    #[serde(default)]
    pub gradient: Vec<Vec<Vec<f64>>>,
}

impl PlaneField {
    pub fn constant(factors: &DMatrix<f64>) -> Self {
        Self {
            factors: factors.column_iter().map(|c| c.iter().copied().collect()).collect(),
            gradient: Vec::new(),
        }
    }

    pub fn factors_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = x.len();
        let k = self.factors.len();
        let mut m = DMatrix::from_fn(n, k, |i, j| self.factors[j][i]);
        for (i, g) in self.gradient.iter().enumerate() {
            for (j, col) in g.iter().enumerate() {
                for (r, val) in col.iter().enumerate() {
                    m[(r, j)] += x[i] * val;
                }
            }
        }
        m
    }
}

/// Both sides of the fiber-integration identity for k = 2.
#[derive(Debug, Clone, Serialize)]
pub struct FiberReport {
    /// `(σ*Θ₂)(c) = β_{σ(x)}(c)`.
    pub lhs: f64,
    /// `−(1/(2!·ε₂)) ∫_{U_σ(x)} (ω₁ ∧ dω₁)(c̃₁, c̃₂, ∂θ) dθ`.
    pub rhs: f64,
    /// `|lhs − rhs| / φ(c)`.
    pub gap: f64,
}

/// Options for [`fiber_identity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(default)]
pub struct FiberOptions {
    /// Trapezoid nodes on the fiber circle.
    pub nodes: usize,
    /// Step for the x- and θ-derivatives of the fiber parametrization.
    pub step: f64,
}

impl Default for FiberOptions {
    fn default() -> Self {
        Self { nodes: 64, step: 1e-5 }
    }
}

/// Compare `σ*Θ₂` with the push-forward of `ω₁ ∧ dω₁` along the fiber
/// circle `U_σ(x) = {v ∈ ⟨σ(x)⟩ : F(x, v) = 1}`, evaluated on `c`.
///
/// The fiber is parametrized by `v(x, θ) = E(x)u(θ)/F(x, E(x)u(θ))` with
/// `E(x)` the oriented orthonormal frame of `σ(x)`; `c̃ᵢ = (cᵢ, ∂ₓv·cᵢ)`.
pub fn fiber_identity_check(
    chart: &dyn FinslerChart,
    field: &PlaneField,
    x: &DVector<f64>,
    c: &SimpleKVector,
    opts: &FiberOptions,
) -> Result<FiberReport, VariationError> {
    let n = chart.dim();
    if c.grade() != 2 || c.dim() != n || field.factors.len() != 2 {
        return Err(VariationError::Unsupported("the fiber identity is checked for k = 2".into()));
    }
    let sigma = SimpleKVector::from_matrix(field.factors_at(x))?;
    let norm = chart.norm_at(x);
    let lhs = busemann_form(norm.as_ref(), &sigma)?.eval(c)?;
    let phi_c = crate::densities::ht_density(norm.as_ref(), c)?;

    let fiber = |y: &DVector<f64>, t: f64| -> Result<DVector<f64>, VariationError> {
        let e = SimpleKVector::from_matrix(field.factors_at(y))?.span_basis()?.basis;
        let w = &e * DVector::from_vec(vec![t.cos(), t.sin()]);
        Ok(&w / chart.eval(y, &w))
    };
    let h = opts.step;
    let c1 = c.factor(0);
    let c2 = c.factor(1);
    let lift = |t: f64, dir: &DVector<f64>| -> Result<DVector<f64>, VariationError> {
        let hx = h * (1.0 + x.norm()) / dir.norm();
        let dv = (fiber(&(x + dir * hx), t)? - fiber(&(x - dir * hx), t)?) / (2.0 * hx);
        Ok(stack(dir, &dv))
    };
    let mut integral = 0.0;
    for (t, w) in periodic_nodes(opts.nodes) {
        let v = fiber(x, t)?;
        let p = stack(x, &v);
        let dtheta = stack(&DVector::zeros(n), &((fiber(x, t + h)? - fiber(x, t - h)?) / (2.0 * h)));
        let l1 = lift(t, &c1)?;
        let l2 = lift(t, &c2)?;
        let omega = omega1_at(chart, &p);
        let d12 = d_form(chart.domain(), &p, &l2, &dtheta, |q| omega1_at(chart, q))?;
        let d11 = d_form(chart.domain(), &p, &l1, &dtheta, |q| omega1_at(chart, q))?;
        integral += w * (omega.dot(&l1) * d12 - omega.dot(&l2) * d11);
    }
    let rhs = -integral / (2.0 * epsilon_k(2));
    Ok(FiberReport {
        lhs,
        rhs,
        gap: (lhs - rhs).abs() / phi_c,
    })
}

/// Options for [`totally_geodesic_minimality_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(default)]
pub struct MinimalityOptions {
    pub trials: usize,
    pub seed: u64,
    /// Pass threshold on `|δVol| / ‖X‖` for the affine patch.
    pub tolerance: f64,
    /// Radius of the bumps used for `h` at interior points.
    pub h_radius: f64,
    /// Number of interior points where `h` is evaluated.
    pub h_points: usize,
    pub variation: VariationOptions,
}

impl Default for MinimalityOptions {
    fn default() -> Self {
        Self {
            trials: 20,
            seed: 0,
            tolerance: 1e-4,
            h_radius: 0.3,
            h_points: 3,
            variation: VariationOptions {
                radial: 16,
                angular: 32,
                cubature: CubatureOptions {
                    circle: 32,
                    ..CubatureOptions::default()
                },
                ..VariationOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub center: Vec<f64>,
    pub radius: f64,
    pub first_variation: f64,
    pub error_estimate: f64,
    pub field_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    pub trials: Vec<TrialResult>,
    pub max_ratio: f64,
    pub h_norms: Vec<f64>,
    pub max_h_norm: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Random compactly supported fields with bump centers and radii inside the
/// parameter box, random constant and linear parts.
pub fn random_fields(patch: &dyn ImmersedPatch, trials: usize, seed: u64) -> Vec<VariationField> {
    let (lo, hi) = patch.param_box();
    let n = patch.ambient_dim();
    let k = patch.param_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_side = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
    (0..trials)
        .map(|_| {
            let radius = min_side * (0.15 + 0.2 * rng.gen::<f64>());
            let center = lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| a + radius + (b - a - 2.0 * radius) * rng.gen::<f64>())
                .collect();
            let constant = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let linear = (0..n)
                .map(|_| (0..k).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            VariationField {
                center,
                radius,
                profile: BumpProfile::Polynomial,
                constant,
                linear,
            }
        })
        .collect()
}

/// For a chart in which the patch is totally geodesic, check that random
/// compact variations have vanishing first variation and that `h ≈ 0` at
/// interior points.
pub fn totally_geodesic_minimality_experiment(
    chart: &dyn FinslerChart,
    patch: &dyn ImmersedPatch,
    opts: &MinimalityOptions,
) -> Result<MinimalityReport, VariationError> {
    let fields = random_fields(patch, opts.trials, opts.seed);
    let mut trials = Vec::with_capacity(fields.len());
    for f in &fields {
        let fv = first_variation(chart, patch, f, &opts.variation)?;
        trials.push(TrialResult {
            center: f.center.clone(),
            radius: f.radius,
            first_variation: fv.value,
            error_estimate: fv.error_estimate,
            field_norm: fv.field_norm,
            ratio: fv.value.abs() / fv.field_norm,
        });
    }
    let (lo, hi) = patch.param_box();
    let mut h_norms = Vec::with_capacity(opts.h_points);
    for i in 0..opts.h_points {
        let s = (i as f64 + 1.0) / (opts.h_points as f64 + 1.0);
        let q: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + (b - a) * s).collect();
        let h = mean_curvature_covector(chart, patch, &q, opts.h_radius, BumpProfile::Polynomial, &opts.variation)?;
        h_norms.push(h.norm());
    }
    let max_ratio = trials.iter().map(|t| t.ratio).fold(0.0, f64::max);
    let max_h_norm = h_norms.iter().copied().fold(0.0, f64::max);
    Ok(MinimalityReport {
        pass: max_ratio <= opts.tolerance && max_h_norm <= opts.tolerance,
        trials,
        max_ratio,
        h_norms,
        max_h_norm,
        tolerance: opts.tolerance,
    })
}
