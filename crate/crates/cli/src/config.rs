//! JSON descriptors for norms, charts and experiments.

use finsler_ht::crofton::{CroftonChart, CroftonNorm, CroftonResolution, HyperplaneMeasure, LengthCheckOptions};
use finsler_ht::curves::CurveSpec;
use finsler_ht::densities::{CalibrationOptions, CubatureOptions, DensityKind};
use finsler_ht::exterior::SimpleKVector;
use finsler_ht::finsler::{ConformalChart, ConformalFactor, DomainBox, EuclideanChart, FinslerChart, RandersChart};
use finsler_ht::norms::{EuclideanNorm, MinkowskiNorm, RandersNorm};
use finsler_ht::variation::{BumpProfile, FiberOptions, PatchSpec, PlaneField, VariationOptions};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config("matrix must be square and non-empty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_or_identity(a: &Option<Vec<Vec<f64>>>, n: usize) -> Result<DMatrix<f64>, CliError> {
    match a {
        Some(rows) => {
            let m = matrix(rows)?;
            if m.nrows() != n {
                return Err(CliError::Config(format!("matrix A must be {n}×{n}")));
            }
            Ok(m)
        }
        None => Ok(DMatrix::identity(n, n)),
    }
}

fn check_domain(domain: &DomainBox) -> Result<(), CliError> {
    if domain.lower.is_empty()
        || domain.lower.len() != domain.upper.len()
        || domain.lower.iter().zip(&domain.upper).any(|(a, b)| !(a < b))
    {
        return Err(CliError::Config("domain needs lower < upper componentwise".into()));
    }
    Ok(())
}

/// A Minkowski norm on ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormSpec {
    /// `|v|_A = √(vᵀAv)`; `A` defaults to the identity of size `dim`.
    Euclidean {
        #[serde(rename = "A", default)]
        a: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        dim: Option<usize>,
    },
    /// `|v|_A + ⟨b, v⟩`.
    Randers {
        #[serde(rename = "A", default)]
        a: Option<Vec<Vec<f64>>>,
        b: Vec<f64>,
    },
    /// Crofton norm of a hyperplane measure at the point `x`.
    Crofton {
        measure: HyperplaneMeasure,
        x: Vec<f64>,
        #[serde(default)]
        resolution: CroftonResolution,
    },
}

impl NormSpec {
    pub fn build(&self) -> Result<Box<dyn MinkowskiNorm + '_>, CliError> {
        match self {
            NormSpec::Euclidean { a, dim } => match (a, dim) {
                (Some(rows), _) => Ok(Box::new(EuclideanNorm::new(matrix(rows)?)?)),
                (None, Some(n)) if *n > 0 => Ok(Box::new(EuclideanNorm::standard(*n))),
                _ => Err(CliError::Config("euclidean norm needs A or dim".into())),
            },
            NormSpec::Randers { a, b } => {
                let a = matrix_or_identity(a, b.len())?;
                Ok(Box::new(RandersNorm::new(a, DVector::from_vec(b.clone()))?))
            }
            NormSpec::Crofton { measure, x, resolution } => {
                measure.validate()?;
                if x.len() != measure.dim() {
                    return Err(CliError::Config("crofton point has the wrong dimension".into()));
                }
                Ok(Box::new(CroftonNorm::new(measure, DVector::from_vec(x.clone()), *resolution)))
            }
        }
    }
}

/// A Finsler metric on a coordinate box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    Euclidean {
        #[serde(rename = "A", default)]
        a: Option<Vec<Vec<f64>>>,
        domain: DomainBox,
    },
    /// `e^{f(x)}|v|_A`.
    Conformal {
        #[serde(rename = "A", default)]
        a: Option<Vec<Vec<f64>>>,
        factor: ConformalFactor,
        domain: DomainBox,
    },
    /// `|v|_A + ⟨b₀ + Bx, v⟩`.
    Randers {
        #[serde(rename = "A", default)]
        a: Option<Vec<Vec<f64>>>,
        b0: Vec<f64>,
        #[serde(rename = "B", default)]
        b_linear: Option<Vec<Vec<f64>>>,
        domain: DomainBox,
    },
    Crofton {
        measure: HyperplaneMeasure,
        domain: DomainBox,
        #[serde(default)]
        resolution: CroftonResolution,
    },
}

impl ChartSpec {
    pub fn domain(&self) -> &DomainBox {
        match self {
            ChartSpec::Euclidean { domain, .. }
            | ChartSpec::Conformal { domain, .. }
            | ChartSpec::Randers { domain, .. }
            | ChartSpec::Crofton { domain, .. } => domain,
        }
    }

    pub fn build(&self) -> Result<Box<dyn FinslerChart>, CliError> {
        let domain = self.domain().clone();
        check_domain(&domain)?;
        let n = domain.dim();
        match self {
            ChartSpec::Euclidean { a, .. } => Ok(Box::new(EuclideanChart::new(
                EuclideanNorm::new(matrix_or_identity(a, n)?)?,
                domain,
            ))),
            ChartSpec::Conformal { a, factor, .. } => {
                Ok(Box::new(ConformalChart::new(matrix_or_identity(a, n)?, factor.clone(), domain)?))
            }
            ChartSpec::Randers { a, b0, b_linear, .. } => {
                if b0.len() != n {
                    return Err(CliError::Config("b0 has the wrong dimension".into()));
                }
                let b = match b_linear {
                    Some(rows) => matrix(rows)?,
                    None => DMatrix::zeros(n, n),
                };
                Ok(Box::new(RandersChart::new(
                    matrix_or_identity(a, n)?,
                    DVector::from_vec(b0.clone()),
                    b,
                    domain,
                )?))
            }
            ChartSpec::Crofton { measure, resolution, .. } => {
                Ok(Box::new(CroftonChart::new(measure.clone(), domain)?.with_resolution(*resolution)))
            }
        }
    }
}

/// Factors of a simple k-vector, one row per factor.
pub fn kvector(factors: &[Vec<f64>]) -> Result<SimpleKVector, CliError> {
    let k = factors.len();
    let n = factors.first().map_or(0, Vec::len);
    if k == 0 || n == 0 || factors.iter().any(|f| f.len() != n) {
        return Err(CliError::Config("k-vector factors must be non-empty and of equal length".into()));
    }
    let cols: Vec<DVector<f64>> = factors.iter().map(|f| DVector::from_vec(f.clone())).collect();
    Ok(SimpleKVector::from_matrix(DMatrix::from_columns(&cols))?)
}

/// A straight line `x0 + t·v0`, `t ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
}

fn default_radius() -> f64 {
    0.15
}

fn default_fiber_tolerance() -> f64 {
    1e-4
}

fn default_line_tolerance() -> f64 {
    1e-5
}

fn default_trials() -> usize {
    20
}

fn default_half_width() -> f64 {
    1.0
}

fn default_bent_curvature() -> f64 {
    0.25
}

fn default_discrimination() -> f64 {
    1e-2
}

fn default_sweep_tolerance() -> f64 {
    1e-4
}

fn default_steps() -> usize {
    1000
}

/// One runnable experiment. Monte-Carlo experiments require a `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "experiment", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Evaluate a k-density on a simple k-vector.
    DensityEval {
        norm: NormSpec,
        factors: Vec<Vec<f64>>,
        #[serde(default = "holmes_thompson")]
        density: DensityKind,
        #[serde(default)]
        cubature: CubatureOptions,
    },
    /// Local calibration check of the Busemann form.
    DensityCalibration {
        norm: NormSpec,
        factors: Vec<Vec<f64>>,
        seed: u64,
        #[serde(default)]
        calibration: CalibrationOptions,
    },
    /// Unit-speed geodesic; writes the trajectory as CSV.
    Geodesic {
        chart: ChartSpec,
        x0: Vec<f64>,
        v0: Vec<f64>,
        t_final: f64,
        #[serde(default = "default_steps")]
        steps: usize,
    },
    /// Monte-Carlo intersection count against arclength.
    CroftonLength {
        measure: HyperplaneMeasure,
        curve: CurveSpec,
        seed: u64,
        #[serde(default)]
        options: LengthCheckOptions,
    },
    /// Euler–Lagrange residual of straight lines in a Crofton metric.
    CroftonLines {
        measure: HyperplaneMeasure,
        domain: DomainBox,
        lines: Vec<LineSpec>,
        #[serde(default = "default_line_tolerance")]
        tolerance: f64,
    },
    /// Mean-curvature covector of a patch at a parameter point.
    VariationH {
        chart: ChartSpec,
        patch: PatchSpec,
        point: Vec<f64>,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default)]
        profile: BumpProfile,
        #[serde(default)]
        options: VariationOptions,
        /// Also evaluate `h` through the exterior derivative of the
        /// Hilbert form.
        #[serde(default)]
        cross_check: bool,
    },
    /// Fiber-integration identity at given points (k = 2).
    FiberIdentity {
        chart: ChartSpec,
        field: PlaneField,
        points: Vec<Vec<f64>>,
        test_vector: Vec<Vec<f64>>,
        #[serde(default = "default_fiber_tolerance")]
        tolerance: f64,
        #[serde(default)]
        options: FiberOptions,
    },
    /// Structure equations and invariants of a surface at random
    /// unit-bundle points; writes one CSV row per point.
    CartanInvariants {
        chart: ChartSpec,
        lower: [f64; 2],
        upper: [f64; 2],
        samples: usize,
        seed: u64,
        #[serde(default = "default_sweep_tolerance")]
        tolerance: f64,
    },
    /// Affine plane versus a bent graph in a Crofton metric on ℝ³.
    MainTheorem {
        measure: HyperplaneMeasure,
        seed: u64,
        #[serde(default = "default_trials")]
        trials: usize,
        /// The patches live over `[−half_width, half_width]²`.
        #[serde(default = "default_half_width")]
        half_width: f64,
        #[serde(default = "default_bent_curvature")]
        bent_curvature: f64,
        /// Required `max |δVol|/‖X‖` on the bent patch.
        #[serde(default = "default_discrimination")]
        discrimination: f64,
        #[serde(default)]
        minimality: Option<MainTheoremNumerics>,
    },
}

fn holmes_thompson() -> DensityKind {
    DensityKind::HolmesThompson
}

/// Overrides for the numerical parameters of the main-theorem run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MainTheoremNumerics {
    pub tolerance: Option<f64>,
    pub h_points: Option<usize>,
    pub h_radius: Option<f64>,
    pub variation: Option<VariationOptions>,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::DensityEval { .. } => "density-eval",
            Experiment::DensityCalibration { .. } => "density-calibration",
            Experiment::Geodesic { .. } => "geodesic",
            Experiment::CroftonLength { .. } => "crofton-length",
            Experiment::CroftonLines { .. } => "crofton-lines",
            Experiment::VariationH { .. } => "variation-h",
            Experiment::FiberIdentity { .. } => "fiber-identity",
            Experiment::CartanInvariants { .. } => "cartan-invariants",
            Experiment::MainTheorem { .. } => "main-theorem",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Experiment::DensityCalibration { seed, .. }
            | Experiment::CroftonLength { seed, .. }
            | Experiment::CartanInvariants { seed, .. }
            | Experiment::MainTheorem { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Replace the seed of a Monte-Carlo experiment.
    pub fn set_seed(&mut self, value: u64) -> bool {
        match self {
            Experiment::DensityCalibration { seed, .. }
            | Experiment::CroftonLength { seed, .. }
            | Experiment::CartanInvariants { seed, .. }
            | Experiment::MainTheorem { seed, .. } => {
                *seed = value;
                true
            }
            _ => false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}
