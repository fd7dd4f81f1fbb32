//! Projective Finsler metrics on ℝⁿ (n = 2, 3) induced by smooth positive
//! hyperplane measures, and the intersection-count check of curve length.

use crate::curves::{refine, Curve};
use crate::finsler::{length_residual, DomainBox, FinslerChart, FinslerError};
use crate::norms::{MinkowskiNorm, NormJet};
use crate::quadrature::{periodic_nodes, unit_sphere_area, GaussLegendre};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{UnitCircle, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CroftonError {
    #[error("Crofton metrics are implemented for n = 2, 3; got n = {0}")]
    UnsupportedDimension(usize),
    #[error("hyperplane measure is not positive: {0}")]
    NonPositive(String),
    #[error("curve dimension {curve} does not match the measure dimension {measure}")]
    DimensionMismatch { curve: usize, measure: usize },
    #[error(transparent)]
    Finsler(#[from] FinslerError),
}

fn default_width() -> f64 {
    1.0
}

/// Smooth positive density `m(ξ, p)` on the space of hyperplanes
/// `{y : ⟨ξ, y⟩ = p}`, even under `(ξ, p) ↦ (−ξ, −p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HyperplaneMeasure {
    /// `m ≡ value`.
    Uniform { dim: usize, value: f64 },
    /// `m = base + amplitude·exp(−p²/width²)`.
    GaussianBump {
        dim: usize,
        base: f64,
        amplitude: f64,
        #[serde(default = "default_width")]
        width: f64,
    },
    /// `m = base + amplitude·⟨ξ, axis⟩²·exp(−p²/width²)`.
    Anisotropic {
        dim: usize,
        base: f64,
        amplitude: f64,
        axis: Vec<f64>,
        #[serde(default = "default_width")]
        width: f64,
    },
}

impl HyperplaneMeasure {
    pub fn dim(&self) -> usize {
        match self {
            HyperplaneMeasure::Uniform { dim, .. }
            | HyperplaneMeasure::GaussianBump { dim, .. }
            | HyperplaneMeasure::Anisotropic { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<(), CroftonError> {
        let n = self.dim();
        if n != 2 && n != 3 {
            return Err(CroftonError::UnsupportedDimension(n));
        }
        let ok = match self {
            HyperplaneMeasure::Uniform { value, .. } => *value > 0.0,
            HyperplaneMeasure::GaussianBump {
                base, amplitude, width, ..
            } => *base > 0.0 && base + amplitude.min(0.0) > 0.0 && *width > 0.0,
            HyperplaneMeasure::Anisotropic {
                base,
                amplitude,
                axis,
                width,
                ..
            } => {
                let a2: f64 = axis.iter().map(|a| a * a).sum();
                axis.len() == n && *base > 0.0 && base + (amplitude * a2).min(0.0) > 0.0 && *width > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(CroftonError::NonPositive(format!("{self:?}")))
        }
    }

    pub fn density(&self, xi: &[f64], p: f64) -> f64 {
        match self {
            HyperplaneMeasure::Uniform { value, .. } => *value,
            HyperplaneMeasure::GaussianBump {
                base, amplitude, width, ..
            } => base + amplitude * (-(p / width).powi(2)).exp(),
            HyperplaneMeasure::Anisotropic {
                base,
                amplitude,
                axis,
                width,
                ..
            } => {
                let c: f64 = xi.iter().zip(axis).map(|(a, b)| a * b).sum();
                base + amplitude * c * c * (-(p / width).powi(2)).exp()
            }
        }
    }

    /// Independent of the offset `p`, so the induced metric is translation
    /// invariant.
    pub fn is_translation_invariant(&self) -> bool {
        match self {
            HyperplaneMeasure::Uniform { .. } => true,
            HyperplaneMeasure::GaussianBump { amplitude, .. } | HyperplaneMeasure::Anisotropic { amplitude, .. } => {
                *amplitude == 0.0
            }
        }
    }
}

/// Cubature resolution for the cosine transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(default)]
pub struct CroftonResolution {
    /// Gauss–Legendre nodes per hemisphere (n = 3) or half circle (n = 2).
    pub polar: usize,
    /// Trapezoid nodes in the azimuth (n = 3).
    pub azimuth: usize,
}

impl Default for CroftonResolution {
    fn default() -> Self {
        Self { polar: 20, azimuth: 40 }
    }
}

/// `F(v) = ½ ∫_{S^{n−1}} |⟨ξ, v⟩| m(ξ, ⟨ξ, x⟩) dξ` at a fixed point `x`.
///
/// The sphere is split along the great sphere `ξ ⊥ v` so each half carries
/// a smooth integrand; gradient and Hessian are differentiated under the
/// integral sign (the Hessian concentrates on `ξ ⊥ v`).
#[derive(Debug, Clone)]
pub struct CroftonNorm<'a> {
    measure: &'a HyperplaneMeasure,
    x: DVector<f64>,
    resolution: CroftonResolution,
}

impl<'a> CroftonNorm<'a> {
    pub fn new(measure: &'a HyperplaneMeasure, x: DVector<f64>, resolution: CroftonResolution) -> Self {
        Self { measure, x, resolution }
    }

    fn m(&self, xi: &[f64]) -> f64 {
        let p: f64 = xi.iter().zip(self.x.iter()).map(|(a, b)| a * b).sum();
        self.measure.density(xi, p)
    }

    /// `(F, ∇F)` together; one pass over the nodes.
    fn cosine_transform(&self, v: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = v.len();
        let r = v.norm();
        let vh = v / r;
        let mut value = 0.0;
        let mut grad = [0.0; 3];
        let gl = GaussLegendre::cached(self.resolution.polar);
        match n {
            2 => {
                let perp = [-vh[1], vh[0]];
                for sign in [1.0, -1.0] {
                    for (phi, w) in gl.on_interval(-PI / 2.0, PI / 2.0) {
                        let (s, c) = phi.sin_cos();
                        let xi = [sign * c * vh[0] + s * perp[0], sign * c * vh[1] + s * perp[1]];
                        let wm = 0.5 * w * self.m(&xi);
                        value += wm * c;
                        grad[0] += sign * wm * xi[0];
                        grad[1] += sign * wm * xi[1];
                    }
                }
            }
            _ => {
                let (e1, e2) = complete_frame(&vh);
                let az: Vec<(f64, f64, f64)> = periodic_nodes(self.resolution.azimuth)
                    .map(|(t, w)| (t.cos(), t.sin(), w))
                    .collect();
                for sign in [1.0, -1.0] {
                    for (c, wc) in gl.on_interval(0.0, 1.0) {
                        let s = (1.0 - c * c).sqrt();
                        for &(ct, st, wt) in &az {
                            let (a, b) = (s * ct, s * st);
                            let xi = [
                                sign * c * vh[0] + a * e1[0] + b * e2[0],
                                sign * c * vh[1] + a * e1[1] + b * e2[1],
                                sign * c * vh[2] + a * e1[2] + b * e2[2],
                            ];
                            let wm = 0.5 * wc * wt * self.m(&xi);
                            value += wm * c;
                            for i in 0..3 {
                                grad[i] += sign * wm * xi[i];
                            }
                        }
                    }
                }
            }
        }
        (value * r, DVector::from_row_slice(&grad[..n]))
    }

    fn hessian_at(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let n = v.len();
        let r = v.norm();
        let vh = v / r;
        match n {
            2 => {
                let perp = DVector::from_vec(vec![-vh[1], vh[0]]);
                let m = self.m(perp.as_slice()) + self.m((-&perp).as_slice());
                &perp * perp.transpose() * (m / r)
            }
            _ => {
                let (e1, e2) = complete_frame(&vh);
                let mut h = DMatrix::zeros(3, 3);
                // great circle ξ ⊥ v; twice the azimuth resolution
                for (t, w) in periodic_nodes(2 * self.resolution.azimuth) {
                    let xi = &e1 * t.cos() + &e2 * t.sin();
                    h += &xi * xi.transpose() * (w * self.m(xi.as_slice()));
                }
                h / r
            }
        }
    }
}

/// Orthonormal `(e₁, e₂)` completing a unit vector of ℝ³.
fn complete_frame(vh: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let i = (0..3)
        .min_by(|&a, &b| vh[a].abs().total_cmp(&vh[b].abs()))
        .expect("three components");
    let mut a = DVector::zeros(3);
    a[i] = 1.0;
    let e1 = (&a - vh * vh[i]).normalize();
    let e2 = vh.cross(&e1);
    (e1, e2)
}

impl MinkowskiNorm for CroftonNorm<'_> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn eval(&self, v: &DVector<f64>) -> f64 {
        if v.iter().all(|c| *c == 0.0) {
            return 0.0;
        }
        self.cosine_transform(v).0
    }

    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        self.cosine_transform(v).1
    }

    fn value_gradient(&self, v: &DVector<f64>) -> (f64, DVector<f64>) {
        self.cosine_transform(v)
    }

    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        self.hessian_at(v)
    }

    fn jet(&self, v: &DVector<f64>) -> NormJet {
        let (value, gradient) = self.cosine_transform(v);
        NormJet {
            value,
            gradient,
            hessian: self.hessian_at(v),
        }
    }
}

/// `F(x, v)` for the metric induced by `measure`.
pub fn crofton_norm(measure: &HyperplaneMeasure, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
    CroftonNorm::new(measure, x.clone(), CroftonResolution::default()).eval(v)
}

/// The projective Finsler metric of a hyperplane measure on a box.
#[derive(Debug, Clone)]
pub struct CroftonChart {
    measure: HyperplaneMeasure,
    domain: DomainBox,
    resolution: CroftonResolution,
}

impl CroftonChart {
    pub fn new(measure: HyperplaneMeasure, domain: DomainBox) -> Result<Self, CroftonError> {
        measure.validate()?;
        if domain.dim() != measure.dim() {
            return Err(FinslerError::InvalidChart("domain and measure dimensions differ".into()).into());
        }
        Ok(Self {
            measure,
            domain,
            resolution: CroftonResolution::default(),
        })
    }

    pub fn with_resolution(mut self, resolution: CroftonResolution) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn measure(&self) -> &HyperplaneMeasure {
        &self.measure
    }
}

impl FinslerChart for CroftonChart {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn norm_at(&self, x: &DVector<f64>) -> Box<dyn MinkowskiNorm + '_> {
        Box::new(CroftonNorm::new(&self.measure, x.clone(), self.resolution))
    }
}

/// Options for [`crofton_length_identity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(default)]
pub struct LengthCheckOptions {
    pub samples: usize,
    pub seed: u64,
    /// Polyline segments per smooth piece of the curve.
    pub refinement: usize,
    /// Pass threshold on `|LHS − RHS| / standard error`.
    pub sigmas: f64,
}

impl Default for LengthCheckOptions {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0,
            refinement: 256,
            sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LengthCheckReport {
    /// Monte-Carlo estimate of `½∫ #(H ∩ γ) m dH`.
    pub intersection_measure: f64,
    pub standard_error: f64,
    /// `∫_γ F(γ, γ̇) dt`.
    pub arclength: f64,
    pub relative_gap: f64,
    pub z_score: f64,
    pub samples: usize,
    /// Samples redrawn because a crossing was tangential.
    pub resampled: usize,
    pub window: f64,
    pub sigmas: f64,
    pub pass: bool,
}

/// Streaming mean/variance (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * other.count / count,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / count,
        }
    }
}

const CHUNK: usize = 1 << 14;
const TANGENTIAL: f64 = 1e-9;

/// Compare the Crofton intersection measure of a curve with its length.
///
/// Hyperplanes are drawn with `ξ` uniform on the sphere and `p` uniform in
/// `[−R, R]`, `R = max|γ| + 2`; every sample is weighted by
/// `½ |S^{n−1}| · 2R · m(ξ, p)` times its number of transversal crossings
/// with a polyline refinement of the curve. Chunks use independent
/// ChaCha streams, so the result depends only on the seed.
pub fn crofton_length_identity_check(
    measure: &HyperplaneMeasure,
    curve: &dyn Curve,
    opts: &LengthCheckOptions,
) -> Result<LengthCheckReport, CroftonError> {
    measure.validate()?;
    let n = measure.dim();
    if curve.dim() != n {
        return Err(CroftonError::DimensionMismatch {
            curve: curve.dim(),
            measure: n,
        });
    }
    let vertices = refine(curve, opts.refinement);
    let window = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max) + 2.0;
    let weight = 0.5 * unit_sphere_area(n) * 2.0 * window;
    let verts: Vec<[f64; 3]> = vertices
        .iter()
        .map(|v| [v[0], v[1], if n == 3 { v[2] } else { 0.0 }])
        .collect();
    let edges: Vec<([f64; 3], f64)> = verts
        .windows(2)
        .map(|w| {
            let d = [w[1][0] - w[0][0], w[1][1] - w[0][1], w[1][2] - w[0][2]];
            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            (d, len)
        })
        .collect();

    let chunks = opts.samples.div_ceil(CHUNK);
    let partial: Vec<(Moments, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(opts.samples - c * CHUNK);
            let mut moments = Moments::default();
            let mut resampled = 0;
            let mut done = 0;
            let mut proj = vec![0.0; verts.len()];
            while done < count {
                let xi: [f64; 3] = if n == 2 {
                    let [a, b]: [f64; 2] = rng.sample(UnitCircle);
                    [a, b, 0.0]
                } else {
                    rng.sample(UnitSphere)
                };
                let p = window * (2.0 * rng.gen::<f64>() - 1.0);
                for (q, v) in proj.iter_mut().zip(&verts) {
                    *q = xi[0] * v[0] + xi[1] * v[1] + xi[2] * v[2] - p;
                }
                let mut crossings = 0u32;
                let mut tangential = false;
                for (i, (d, len)) in edges.iter().enumerate() {
                    let (a, b) = (proj[i], proj[i + 1]);
                    if (a < 0.0) != (b < 0.0) {
                        crossings += 1;
                        let slope = (xi[0] * d[0] + xi[1] * d[1] + xi[2] * d[2]).abs();
                        if slope < TANGENTIAL * len {
                            tangential = true;
                        }
                    }
                }
                if tangential {
                    resampled += 1;
                    continue;
                }
                let value = if crossings == 0 {
                    0.0
                } else {
                    weight * measure.density(&xi[..n], p) * crossings as f64
                };
                moments.push(value);
                done += 1;
            }
            (moments, resampled)
        })
        .collect();
    let (moments, resampled) = partial
        .into_iter()
        .fold((Moments::default(), 0), |(m, r), (pm, pr)| (m.merge(pm), r + pr));
    let standard_error = if moments.count > 1.0 {
        (moments.m2 / (moments.count - 1.0) / moments.count).sqrt()
    } else {
        f64::INFINITY
    };
    let arclength = crofton_arclength(measure, curve);
    let gap = (moments.mean - arclength).abs();
    let z_score = gap / standard_error;
    Ok(LengthCheckReport {
        intersection_measure: moments.mean,
        standard_error,
        arclength,
        relative_gap: gap / arclength.abs().max(1e-300),
        z_score,
        samples: opts.samples,
        resampled,
        window,
        sigmas: opts.sigmas,
        pass: z_score <= opts.sigmas,
    })
}

/// `∫_γ F(γ, γ̇) dt` with composite Gauss–Legendre on each smooth piece.
pub fn crofton_arclength(measure: &HyperplaneMeasure, curve: &dyn Curve) -> f64 {
    let gl = GaussLegendre::cached(16);
    let panels = if curve.is_piecewise_linear() { 4 } else { 32 };
    let bp = curve.breakpoints();
    let mut total = 0.0;
    for w in bp.windows(2) {
        for j in 0..panels {
            let a = w[0] + (w[1] - w[0]) * j as f64 / panels as f64;
            let b = w[0] + (w[1] - w[0]) * (j + 1) as f64 / panels as f64;
            total += gl.integrate(a, b, |t| crofton_norm(measure, &curve.point(t), &curve.velocity(t)));
        }
    }
    total
}

/// `sup_t |R(t)| / |γ̇(t)|` over `samples + 1` equispaced parameters, with
/// `R` the Euler–Lagrange residual of the length functional.
pub fn curve_geodesic_residual(chart: &dyn FinslerChart, curve: &dyn Curve, samples: usize) -> f64 {
    let (a, b) = curve.interval();
    (0..=samples)
        .map(|i| {
            let t = a + (b - a) * i as f64 / samples as f64;
            let v = curve.velocity(t);
            length_residual(chart, &curve.point(t), &v, &curve.acceleration(t)).norm() / v.norm()
        })
        .fold(0.0, f64::max)
}

/// Residual of the straight line `x₀ + t v₀`, `t ∈ [0, 1]`.
pub fn line_geodesic_residual(chart: &CroftonChart, x0: &DVector<f64>, v0: &DVector<f64>) -> f64 {
    let line = crate::curves::Polyline::segment(x0.clone(), x0 + v0);
    curve_geodesic_residual(chart, &line, 10)
}
