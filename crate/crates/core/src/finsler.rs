//! Finsler metrics on coordinate boxes: Lagrangian jets, geodesics, the
//! unit tangent bundle and the Hilbert 1-form.

use crate::norms::{spd_inverse, EuclideanNorm, MinkowskiNorm, NormError, RandersNorm};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinslerError {
    #[error("point {x:?} lies outside the chart domain")]
    OutsideDomain { x: Vec<f64> },
    #[error("fundamental tensor is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error(transparent)]
    Norm(#[from] NormError),
}

/// Open coordinate box `∏ (lower_i, upper_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "box bounds of different dimension");
        Self { lower, upper }
    }

    pub fn cube(n: usize, half_width: f64) -> Self {
        Self::new(vec![-half_width; n], vec![half_width; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (lo, hi))| xi > lo && xi < hi)
    }

    /// All 2ⁿ corners.
    pub fn corners(&self) -> Vec<DVector<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                DVector::from_fn(n, |i, _| {
                    if mask >> i & 1 == 1 {
                        self.upper[i]
                    } else {
                        self.lower[i]
                    }
                })
            })
            .collect()
    }
}

/// A field of Minkowski norms `F(x, ·)` over a coordinate box.
pub trait FinslerChart: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn domain(&self) -> &DomainBox;

    fn norm_at(&self, x: &DVector<f64>) -> Box<dyn MinkowskiNorm + '_>;

    fn eval(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.norm_at(x).eval(v)
    }
}

/// Constant Euclidean metric `|v|_A`.
#[derive(Debug, Clone)]
pub struct EuclideanChart {
    norm: EuclideanNorm,
    domain: DomainBox,
}

impl EuclideanChart {
    pub fn new(norm: EuclideanNorm, domain: DomainBox) -> Self {
        Self { norm, domain }
    }

    pub fn standard(n: usize, half_width: f64) -> Self {
        Self::new(EuclideanNorm::standard(n), DomainBox::cube(n, half_width))
    }
}

impl FinslerChart for EuclideanChart {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn norm_at(&self, _x: &DVector<f64>) -> Box<dyn MinkowskiNorm + '_> {
        Box::new(self.norm.clone())
    }
}

/// One term `amplitude·sin(⟨wavevector, x⟩ + phase)` of a conformal factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
pub struct Wave {
    pub amplitude: f64,
    pub wavevector: Vec<f64>,
    pub phase: f64,
}

/// Log-conformal factor `f` of a metric `e^{2f}⟨A·,·⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConformalFactor {
    /// `f = ln 2 − ln(1 + |x|²)`: the unit round sphere in stereographic
    /// coordinates.
    UnitSphere,
    /// `f = Σ amplitude·sin(⟨wavevector, x⟩ + phase)`.
    Waves { waves: Vec<Wave> },
}

impl ConformalFactor {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            ConformalFactor::UnitSphere => 2f64.ln() - (1.0 + x.norm_squared()).ln(),
            ConformalFactor::Waves { waves } => waves
                .iter()
                .map(|w| {
                    let phase: f64 = w.wavevector.iter().zip(x.iter()).map(|(k, xi)| k * xi).sum();
                    w.amplitude * (phase + w.phase).sin()
                })
                .sum(),
        }
    }
}

/// Riemannian metric `F(x, v) = e^{f(x)} |v|_A`.
#[derive(Debug, Clone)]
pub struct ConformalChart {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    factor: ConformalFactor,
    domain: DomainBox,
}

impl ConformalChart {
    pub fn new(a: DMatrix<f64>, factor: ConformalFactor, domain: DomainBox) -> Result<Self, FinslerError> {
        if a.nrows() != domain.dim() {
            return Err(FinslerError::InvalidChart("matrix and domain dimensions differ".into()));
        }
        if let ConformalFactor::Waves { waves } = &factor {
            if waves.iter().any(|w| w.wavevector.len() != domain.dim()) {
                return Err(FinslerError::InvalidChart("wavevector dimension mismatch".into()));
            }
        }
        let a_inv = spd_inverse(&a)?;
        Ok(Self {
            a,
            a_inv,
            factor,
            domain,
        })
    }

    /// Stereographic chart of the unit sphere over `(−half_width, half_width)ⁿ`.
    pub fn unit_sphere(n: usize, half_width: f64) -> Self {
        Self::new(
            DMatrix::identity(n, n),
            ConformalFactor::UnitSphere,
            DomainBox::cube(n, half_width),
        )
        .expect("identity is positive definite")
    }

    pub fn factor(&self) -> &ConformalFactor {
        &self.factor
    }
}

impl FinslerChart for ConformalChart {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn norm_at(&self, x: &DVector<f64>) -> Box<dyn MinkowskiNorm + '_> {
        let s = (2.0 * self.factor.value(x)).exp();
        Box::new(EuclideanNorm::from_parts(&self.a * s, &self.a_inv / s))
    }
}

/// Randers metric `|v|_A + ⟨b(x), v⟩` with affine drift `b(x) = b₀ + B x`.
#[derive(Debug, Clone)]
pub struct RandersChart {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b0: DVector<f64>,
    b_linear: DMatrix<f64>,
    domain: DomainBox,
}

impl RandersChart {
    /// Validates `|b(x)|_{A⁻¹} < 1` on the closed box; the constraint is
    /// convex in `x`, so checking the corners suffices.
    pub fn new(
        a: DMatrix<f64>,
        b0: DVector<f64>,
        b_linear: DMatrix<f64>,
        domain: DomainBox,
    ) -> Result<Self, FinslerError> {
        let n = domain.dim();
        if a.shape() != (n, n) || b0.len() != n || b_linear.shape() != (n, n) {
            return Err(FinslerError::InvalidChart("Randers data dimension mismatch".into()));
        }
        let a_inv = spd_inverse(&a)?;
        for corner in domain.corners() {
            let b = &b0 + &b_linear * corner;
            let nb = b.dot(&(&a_inv * &b)).sqrt();
            if nb >= 1.0 {
                return Err(NormError::RandersConstraint { norm_b: nb }.into());
            }
        }
        Ok(Self {
            a,
            a_inv,
            b0,
            b_linear,
            domain,
        })
    }

    pub fn constant(b: DVector<f64>, half_width: f64) -> Result<Self, FinslerError> {
        let n = b.len();
        Self::new(
            DMatrix::identity(n, n),
            b,
            DMatrix::zeros(n, n),
            DomainBox::cube(n, half_width),
        )
    }

    pub fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.b0 + &self.b_linear * x
    }
}

impl FinslerChart for RandersChart {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn norm_at(&self, x: &DVector<f64>) -> Box<dyn MinkowskiNorm + '_> {
        Box::new(RandersNorm::from_parts(self.a.clone(), self.a_inv.clone(), self.drift(x)))
    }
}

/// Finite-difference step for x-derivatives.
pub fn x_step(x: &DVector<f64>) -> f64 {
    1e-5 * (1.0 + x.norm())
}

/// Derivatives of the energy `L = F²/2` at `(x, v)`.
#[derive(Debug, Clone)]
pub struct LagrangianJet {
    pub value: f64,
    /// `∂_x L`.
    pub dx: DVector<f64>,
    /// `ℓ = ∂_v L`, the Legendre image of `v`.
    pub momentum: DVector<f64>,
    /// `g = ∂_v ∂_v L`.
    pub tensor: DMatrix<f64>,
    /// `M_ij = ∂_{x_j} ℓ_i`.
    pub mixed: DMatrix<f64>,
}

/// Jet of the energy; x-derivatives by central differences.
pub fn lagrangian_jet(chart: &dyn FinslerChart, x: &DVector<f64>, v: &DVector<f64>) -> LagrangianJet {
    let n = x.len();
    let jet = chart.norm_at(x).jet(v);
    let h = x_step(x);
    let mut dx = DVector::zeros(n);
    let mut mixed = DMatrix::zeros(n, n);
    let mut xs = x.clone();
    for j in 0..n {
        xs[j] = x[j] + h;
        let jp = chart.norm_at(&xs).jet(v);
        xs[j] = x[j] - h;
        let jm = chart.norm_at(&xs).jet(v);
        xs[j] = x[j];
        dx[j] = 0.5 * (jp.value * jp.value - jm.value * jm.value) / (2.0 * h);
        mixed.set_column(j, &((jp.legendre() - jm.legendre()) / (2.0 * h)));
    }
    LagrangianJet {
        value: 0.5 * jet.value * jet.value,
        dx,
        momentum: jet.legendre(),
        tensor: jet.fundamental_tensor(),
        mixed,
    }
}

const CONDITION_LIMIT: f64 = 1e10;

fn solve_tensor(g: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, FinslerError> {
    let eig = g.clone().symmetric_eigen();
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > CONDITION_LIMIT {
        return Err(FinslerError::IllConditioned { condition });
    }
    let chol = g.clone().cholesky().ok_or(FinslerError::IllConditioned { condition })?;
    Ok(chol.solve(rhs))
}

/// Geodesic spray: `ẍ = g⁻¹(∂_x L − M ẋ)`.
pub fn geodesic_acceleration(
    chart: &dyn FinslerChart,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>, FinslerError> {
    let jet = lagrangian_jet(chart, x, v);
    solve_tensor(&jet.tensor, &(&jet.dx - &jet.mixed * v))
}

/// Euler–Lagrange residual `∂_x L − M ẋ − g ẍ` of the energy.
pub fn energy_residual(
    chart: &dyn FinslerChart,
    x: &DVector<f64>,
    xdot: &DVector<f64>,
    xddot: &DVector<f64>,
) -> DVector<f64> {
    let jet = lagrangian_jet(chart, x, xdot);
    &jet.dx - &jet.mixed * xdot - &jet.tensor * xddot
}

/// Euler–Lagrange residual of the length functional,
/// `∂_x F − (∂_x ∂_v F) ẋ − (∂_v ∂_v F) ẍ`. Invariant under
/// reparametrization up to the factor `dt/ds`, so it applies to curves that
/// are not F-unit-speed.
pub fn length_residual(
    chart: &dyn FinslerChart,
    x: &DVector<f64>,
    xdot: &DVector<f64>,
    xddot: &DVector<f64>,
) -> DVector<f64> {
    let n = x.len();
    let jet = chart.norm_at(x).jet(xdot);
    let h = x_step(x);
    let mut dx = DVector::zeros(n);
    let mut mixed = DMatrix::zeros(n, n);
    let mut xs = x.clone();
    for j in 0..n {
        xs[j] = x[j] + h;
        let jp = chart.norm_at(&xs).jet(xdot);
        xs[j] = x[j] - h;
        let jm = chart.norm_at(&xs).jet(xdot);
        xs[j] = x[j];
        dx[j] = (jp.value - jm.value) / (2.0 * h);
        mixed.set_column(j, &((jp.gradient - jm.gradient) / (2.0 * h)));
    }
    dx - mixed * xdot - jet.hessian * xddot
}

/// Sampled geodesic.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// The integration stopped because the next step left the domain.
    pub exited_domain: bool,
    /// `max |F(x(t), ẋ(t)) − 1|` before renormalization.
    pub max_speed_drift: f64,
}

impl Trajectory {
    pub fn point(&self, i: usize) -> DVector<f64> {
        DVector::from_vec(self.points[i].clone())
    }

    pub fn velocity(&self, i: usize) -> DVector<f64> {
        DVector::from_vec(self.velocities[i].clone())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Unit-speed geodesic by RK4 on `(x, v)`; `v₀` is first normalized to
/// `F(x₀, v₀) = 1` and `v` is renormalized after every step.
pub fn geodesic(
    chart: &dyn FinslerChart,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    t_final: f64,
    steps: usize,
) -> Result<Trajectory, FinslerError> {
    if !chart.domain().contains(x0) {
        return Err(FinslerError::OutsideDomain { x: x0.iter().copied().collect() });
    }
    let f0 = chart.eval(x0, v0);
    if !(f0 > 0.0) {
        return Err(NormError::ZeroVector.into());
    }
    let dt = t_final / steps as f64;
    let mut x = x0.clone();
    let mut v = v0 / f0;
    let mut out = Trajectory {
        times: vec![0.0],
        points: vec![x.iter().copied().collect()],
        velocities: vec![v.iter().copied().collect()],
        exited_domain: false,
        max_speed_drift: 0.0,
    };
    let domain = chart.domain();
    for step in 1..=steps {
        let stage = |xs: &DVector<f64>, vs: &DVector<f64>| -> Result<Option<DVector<f64>>, FinslerError> {
            if !domain.contains(xs) {
                return Ok(None);
            }
            geodesic_acceleration(chart, xs, vs).map(Some)
        };
        let Some(a1) = stage(&x, &v)? else { break };
        let (x2, v2) = (&x + &v * (0.5 * dt), &v + &a1 * (0.5 * dt));
        let Some(a2) = stage(&x2, &v2)? else {
            out.exited_domain = true;
            break;
        };
        let (x3, v3) = (&x + &v2 * (0.5 * dt), &v + &a2 * (0.5 * dt));
        let Some(a3) = stage(&x3, &v3)? else {
            out.exited_domain = true;
            break;
        };
        let (x4, v4) = (&x + &v3 * dt, &v + &a3 * dt);
        let Some(a4) = stage(&x4, &v4)? else {
            out.exited_domain = true;
            break;
        };
        let xn = &x + (&v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (dt / 6.0);
        let vn = &v + (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * (dt / 6.0);
        if !domain.contains(&xn) {
            out.exited_domain = true;
            break;
        }
        let speed = chart.eval(&xn, &vn);
        out.max_speed_drift = out.max_speed_drift.max((speed - 1.0).abs());
        x = xn;
        v = vn / speed;
        out.times.push(step as f64 * dt);
        out.points.push(x.iter().copied().collect());
        out.velocities.push(v.iter().copied().collect());
    }
    Ok(out)
}

/// A point `(x, v)` of the unit tangent bundle, `F(x, v) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitBundlePoint {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
}

impl UnitBundlePoint {
    /// Normalizes `v` to unit F-length.
    pub fn new(chart: &dyn FinslerChart, x: DVector<f64>, v: DVector<f64>) -> Result<Self, FinslerError> {
        if !chart.domain().contains(&x) {
            return Err(FinslerError::OutsideDomain { x: x.iter().copied().collect() });
        }
        let f = chart.eval(&x, &v);
        if !(f > 0.0) {
            return Err(NormError::ZeroVector.into());
        }
        Ok(Self { v: v / f, x })
    }

    /// Coordinates in ℝ²ⁿ.
    pub fn coordinates(&self) -> DVector<f64> {
        let n = self.x.len();
        DVector::from_fn(2 * n, |i, _| if i < n { self.x[i] } else { self.v[i - n] })
    }

    /// Tangent vector of the canonical lift of the geodesic through this point.
    pub fn geodesic_lift(&self, chart: &dyn FinslerChart) -> Result<DVector<f64>, FinslerError> {
        let a = geodesic_acceleration(chart, &self.x, &self.v)?;
        Ok(stack(&self.v, &a))
    }

    /// Projects an arbitrary `(ξ, η) ∈ ℝ²ⁿ` onto the tangent space of the
    /// unit bundle along the radial direction `(0, v)`.
    pub fn project_tangent(&self, chart: &dyn FinslerChart, y: &DVector<f64>) -> DVector<f64> {
        let n = self.x.len();
        let jet = lagrangian_jet(chart, &self.x, &self.v);
        // d(F²/2) = dF on the unit bundle
        let df = jet.dx.dot(&y.rows(0, n)) + jet.momentum.dot(&y.rows(n, n));
        y - stack(&DVector::zeros(n), &self.v) * df
    }

    /// Projects `u` onto `T_v S_x = ker dF_v` along `v`, giving a vertical
    /// tangent vector `(0, u')`.
    pub fn vertical(&self, chart: &dyn FinslerChart, u: &DVector<f64>) -> DVector<f64> {
        let grad = chart.norm_at(&self.x).gradient(&self.v);
        let w = u - &self.v * grad.dot(u);
        stack(&DVector::zeros(self.x.len()), &w)
    }
}

/// `(a, b)` as one vector of ℝ^{2n}.
pub fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.len();
    DVector::from_fn(n + b.len(), |i, _| if i < n { a[i] } else { b[i - n] })
}

/// `ω₁ = ℓ·dx` evaluated at any `(x, v) ∈ ℝ²ⁿ`, with `ℓ = ∂_v(F²/2)`. On
/// the unit bundle this is the Hilbert 1-form; off it, a smooth extension.
pub fn omega1_at(chart: &dyn FinslerChart, coords: &DVector<f64>) -> DVector<f64> {
    let n = coords.len() / 2;
    let x = coords.rows(0, n).into_owned();
    let v = coords.rows(n, n).into_owned();
    let ell = chart.norm_at(&x).jet(&v).legendre();
    stack(&ell, &DVector::zeros(n))
}

/// Hilbert 1-form at a unit bundle point, as a covector on ℝ²ⁿ.
pub fn hilbert_one_form(chart: &dyn FinslerChart, p: &UnitBundlePoint) -> DVector<f64> {
    omega1_at(chart, &p.coordinates())
}

/// Relative step for [`d_omega1`].
pub const FORM_STEP: f64 = 1e-5;

/// `dω₁(X, Y)` by central differences along constant extensions of `X`
/// and `Y` (their bracket vanishes).
pub fn d_omega1(
    chart: &dyn FinslerChart,
    p: &UnitBundlePoint,
    x_vec: &DVector<f64>,
    y_vec: &DVector<f64>,
) -> Result<f64, FinslerError> {
    d_form(chart.domain(), &p.coordinates(), x_vec, y_vec, |c| omega1_at(chart, c))
}

/// `dω(X, Y)` at `c` for a 1-form given as a covector field on ℝᵐ whose
/// first `n` coordinates must stay inside `domain`.
pub fn d_form<W: Fn(&DVector<f64>) -> DVector<f64>>(
    domain: &DomainBox,
    c: &DVector<f64>,
    x_vec: &DVector<f64>,
    y_vec: &DVector<f64>,
    omega: W,
) -> Result<f64, FinslerError> {
    let n = domain.dim();
    let directional = |dir: &DVector<f64>, arg: &DVector<f64>| -> Result<f64, FinslerError> {
        let scale = dir.norm();
        if scale == 0.0 {
            return Ok(0.0);
        }
        let h = FORM_STEP * (1.0 + c.norm()) / scale;
        let cp = c + dir * h;
        let cm = c - dir * h;
        for q in [&cp, &cm] {
            let x = q.rows(0, n).into_owned();
            if !domain.contains(&x) {
                return Err(FinslerError::OutsideDomain { x: x.iter().copied().collect() });
            }
        }
        Ok((omega(&cp).dot(arg) - omega(&cm).dot(arg)) / (2.0 * h))
    };
    Ok(directional(x_vec, y_vec)? - directional(y_vec, x_vec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    #[test]
    fn euclidean_geodesic_is_a_line() {
        let chart = EuclideanChart::standard(3, 10.0);
        let x0 = v(&[0.1, -0.2, 0.3]);
        let v0 = v(&[0.6, 0.0, 0.8]);
        let tr = geodesic(&chart, &x0, &v0, 2.0, 50).unwrap();
        let last = tr.point(tr.len() - 1);
        assert_abs_diff_eq!(last, &x0 + &v0 * 2.0, epsilon = 1e-9);
        assert!(!tr.exited_domain);
    }

    #[test]
    fn stereographic_great_circle() {
        let chart = ConformalChart::unit_sphere(2, 5.0);
        // unit speed at the origin: F = 2|v|
        let tr = geodesic(&chart, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), 1.0, 200).unwrap();
        for i in 0..tr.len() {
            let t = tr.times[i];
            assert_abs_diff_eq!(tr.points[i][0], (t / 2.0).tan(), epsilon = 1e-7);
            assert_abs_diff_eq!(tr.points[i][1], 0.0, epsilon = 1e-12);
        }
        assert!(tr.max_speed_drift < 1e-6);
    }

    #[test]
    fn domain_exit_truncates() {
        let chart = EuclideanChart::standard(2, 1.0);
        let tr = geodesic(&chart, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), 3.0, 30).unwrap();
        assert!(tr.exited_domain);
        assert!(*tr.times.last().unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn hilbert_form_euclidean() {
        let chart = EuclideanChart::standard(3, 10.0);
        let p = UnitBundlePoint::new(&chart, v(&[0.0, 1.0, 2.0]), v(&[1.0, 0.0, 0.0])).unwrap();
        let w = hilbert_one_form(&chart, &p);
        assert_abs_diff_eq!(w, v(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), epsilon = 1e-14);
        let vert = p.vertical(&chart, &v(&[0.3, 1.0, -2.0]));
        assert_abs_diff_eq!(w.dot(&vert), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn randers_chart_rejects_large_drift() {
        let err = RandersChart::new(
            DMatrix::identity(2, 2),
            v(&[0.5, 0.0]),
            DMatrix::identity(2, 2),
            DomainBox::cube(2, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, FinslerError::Norm(NormError::RandersConstraint { .. })));
    }

    #[test]
    fn d_omega1_vanishes_along_geodesic_lift() {
        let chart = RandersChart::new(
            DMatrix::identity(3, 3),
            v(&[0.1, 0.2, 0.0]),
            DMatrix::from_row_slice(3, 3, &[0.0, 0.1, 0.0, -0.05, 0.0, 0.1, 0.1, 0.0, 0.0]),
            DomainBox::cube(3, 1.0),
        )
        .unwrap();
        let p = UnitBundlePoint::new(&chart, v(&[0.1, 0.2, -0.1]), v(&[0.3, 1.0, 0.2])).unwrap();
        let lift = p.geodesic_lift(&chart).unwrap();
        let y = p.project_tangent(&chart, &stack(&v(&[0.2, -0.5, 1.0]), &v(&[0.1, 0.4, -0.3])));
        let d = d_omega1(&chart, &p, &lift, &y).unwrap();
        assert!(d.abs() < 1e-5, "{d}");
        let d2 = d_omega1(&chart, &p, &y, &lift).unwrap();
        assert_abs_diff_eq!(d, -d2, epsilon = 1e-14);
    }
}
