//! Experiment runner behind the `finsler-ht` command line tool.
//!
//! An [`Experiment`] is loaded from JSON (or assembled from flags), run by
//! [`run`], and turned into a [`Report`] plus an optional CSV series.

pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use finsler_ht::cartan::{self, CartanError};
use finsler_ht::crofton::{self, CroftonChart, CroftonError};
use finsler_ht::densities::{local_calibration_check, DensityError, KDensity};
use finsler_ht::exterior::AlgebraError;
use finsler_ht::finsler::{geodesic, FinslerError};
use finsler_ht::norms::NormError;
use finsler_ht::variation::{
    self, AffinePatch, MinimalityOptions, ParaboloidPatch, VariationError,
};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

pub use config::{ChartSpec, Experiment, NormSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

macro_rules! numerical {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Numerical(e.to_string())
            }
        }
    )*};
}

numerical!(DensityError, NormError, AlgebraError, FinslerError, CroftonError, VariationError, CartanError);

impl CliError {
    /// Process exit status: 2 for usage errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

/// Machine-readable result of one experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    pub inputs: Experiment,
    pub outputs: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub error_estimates: BTreeMap<String, f64>,
    pub pass: bool,
}

/// A numeric table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Numerical(e.to_string());
        w.write_record(&self.header).map_err(err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string())).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub series: Option<Series>,
}

impl Outcome {
    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    /// Write `<name>.json` (and `<name>.csv`) into `dir`; returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        let json_path = dir.join(format!("{}.json", self.report.experiment));
        fs::write(&json_path, self.report_json()).map_err(io(&json_path))?;
        written.push(json_path);
        if let Some(series) = &self.series {
            let csv_path = dir.join(format!("{}.csv", self.report.experiment));
            fs::write(&csv_path, series.to_csv()?).map_err(io(&csv_path))?;
            written.push(csv_path);
        }
        Ok(written)
    }
}

fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn dvec(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn outcome(
    exp: &Experiment,
    outputs: Value,
    tolerances: &[(&str, f64)],
    errors: &[(&str, f64)],
    pass: bool,
    series: Option<Series>,
) -> Outcome {
    Outcome {
        report: Report {
            experiment: exp.name().to_string(),
            inputs: exp.clone(),
            outputs,
            tolerances: map(tolerances),
            error_estimates: map(errors),
            pass,
        },
        series,
    }
}

/// Run one experiment. Deterministic for a fixed configuration.
pub fn run(exp: &Experiment) -> Result<Outcome, CliError> {
    match exp {
        Experiment::DensityEval {
            norm,
            factors,
            density,
            cubature,
        } => {
            let n = norm.build()?;
            let a = config::kvector(factors)?;
            let d = KDensity::new(n.as_ref(), *density).with_options(*cubature);
            let (est, pass) = match d.evaluate_checked(&a) {
                Ok(e) => ((e.value, e.error_estimate), true),
                Err(DensityError::Cubature { value, error_estimate }) => ((value, error_estimate), false),
                Err(e) => return Err(e.into()),
            };
            Ok(outcome(
                exp,
                json!({ "value": est.0, "k": a.grade(), "n": a.dim() }),
                &[("cubature_relative", cubature.tolerance)],
                &[("value", est.1)],
                pass,
                None,
            ))
        }
        Experiment::DensityCalibration {
            norm,
            factors,
            seed,
            calibration,
        } => {
            let n = norm.build()?;
            let a = config::kvector(factors)?;
            let opts = finsler_ht::densities::CalibrationOptions { seed: *seed, ..*calibration };
            let r = local_calibration_check(n.as_ref(), &a, &opts)?;
            Ok(outcome(
                exp,
                serde_json::to_value(&r).expect("serializable"),
                &[("calibration", r.tolerance), ("radius", r.radius)],
                &[],
                r.pass,
                None,
            ))
        }
        Experiment::Geodesic {
            chart,
            x0,
            v0,
            t_final,
            steps,
        } => {
            let c = chart.build()?;
            if x0.len() != c.dim() || v0.len() != c.dim() {
                return Err(CliError::Config("x0 and v0 must match the chart dimension".into()));
            }
            if *steps == 0 || !(*t_final > 0.0) {
                return Err(CliError::Config("geodesic needs steps > 0 and t_final > 0".into()));
            }
            let tr = geodesic(c.as_ref(), &dvec(x0), &dvec(v0), *t_final, *steps)?;
            let n = c.dim();
            let header = geodesic_header(n);
            let rows = (0..tr.len())
                .map(|i| {
                    let mut r = vec![tr.times[i]];
                    r.extend(&tr.points[i]);
                    r.extend(&tr.velocities[i]);
                    r.push(c.eval(&tr.point(i), &tr.velocity(i)));
                    r
                })
                .collect();
            let last = tr.len() - 1;
            Ok(outcome(
                exp,
                json!({
                    "samples": tr.len(),
                    "final_time": tr.times[last],
                    "final_point": tr.points[last],
                    "exited_domain": tr.exited_domain,
                    "max_speed_drift": tr.max_speed_drift,
                }),
                &[],
                &[("speed_drift", tr.max_speed_drift)],
                true,
                Some(Series { header, rows }),
            ))
        }
        Experiment::CroftonLength {
            measure,
            curve,
            seed,
            options,
        } => {
            let curve = curve.build().map_err(CliError::Config)?;
            let opts = crofton::LengthCheckOptions { seed: *seed, ..*options };
            let r = crofton::crofton_length_identity_check(measure, curve.as_ref(), &opts)?;
            Ok(outcome(
                exp,
                serde_json::to_value(&r).expect("serializable"),
                &[("sigmas", r.sigmas)],
                &[("intersection_measure", r.standard_error)],
                r.pass,
                None,
            ))
        }
        Experiment::CroftonLines {
            measure,
            domain,
            lines,
            tolerance,
        } => {
            let chart = CroftonChart::new(measure.clone(), domain.clone())?;
            let mut residuals = Vec::with_capacity(lines.len());
            for l in lines {
                if l.x0.len() != measure.dim() || l.v0.len() != measure.dim() {
                    return Err(CliError::Config("line dimension differs from the measure".into()));
                }
                residuals.push(crofton::line_geodesic_residual(&chart, &dvec(&l.x0), &dvec(&l.v0)));
            }
            let max = residuals.iter().copied().fold(0.0, f64::max);
            Ok(outcome(
                exp,
                json!({ "residuals": residuals, "max_residual": max }),
                &[("residual", *tolerance)],
                &[],
                max <= *tolerance,
                None,
            ))
        }
        Experiment::VariationH {
            chart,
            patch,
            point,
            radius,
            profile,
            options,
            cross_check,
        } => {
            let c = chart.build()?;
            let p = patch.build().map_err(|e| CliError::Config(e.to_string()))?;
            if p.ambient_dim() != c.dim() {
                return Err(CliError::Config("patch and chart dimensions differ".into()));
            }
            let h = variation::mean_curvature_covector(c.as_ref(), p.as_ref(), point, *radius, *profile, options)?;
            let hilbert = if *cross_check {
                Some(variation::mean_curvature_covector_hilbert(c.as_ref(), p.as_ref(), point, None, options)?)
            } else {
                None
            };
            Ok(outcome(
                exp,
                json!({ "point": h.point, "h": h.h, "h_norm": h.norm(), "h_hilbert": hilbert }),
                &[("richardson_relative", options.tolerance)],
                &[("h", h.error_estimate)],
                true,
                None,
            ))
        }
        Experiment::FiberIdentity {
            chart,
            field,
            points,
            test_vector,
            tolerance,
            options,
        } => {
            let c = chart.build()?;
            let t = config::kvector(test_vector)?;
            let mut reports = Vec::with_capacity(points.len());
            for x in points {
                if x.len() != c.dim() {
                    return Err(CliError::Config("sample point has the wrong dimension".into()));
                }
                reports.push(variation::fiber_identity_check(c.as_ref(), field, &dvec(x), &t, options)?);
            }
            let max_gap = reports.iter().map(|r| r.gap).fold(0.0, f64::max);
            Ok(outcome(
                exp,
                json!({ "points": reports, "max_gap": max_gap }),
                &[("gap", *tolerance)],
                &[],
                max_gap <= *tolerance,
                None,
            ))
        }
        Experiment::CartanInvariants {
            chart,
            lower,
            upper,
            samples,
            seed,
            tolerance,
        } => {
            let c = chart.build()?;
            let r = cartan::sweep(c.as_ref(), *lower, *upper, *samples, *seed)?;
            let rows = r
                .rows
                .iter()
                .map(|s| {
                    vec![
                        s.x1,
                        s.x2,
                        s.theta,
                        s.i,
                        s.j,
                        s.k,
                        s.residual1,
                        s.residual2,
                        s.residual3,
                        s.omega3_fiber,
                    ]
                })
                .collect();
            Ok(outcome(
                exp,
                json!({
                    "samples": r.samples,
                    "max_residual": r.max_residual,
                    "max_abs_i": r.max_abs_i,
                    "k_range": [r.min_k, r.max_k],
                    "min_abs_omega3_fiber": r.min_abs_omega3_fiber,
                }),
                &[("residual", *tolerance)],
                &[("structure_residual", r.max_residual)],
                r.max_residual <= *tolerance && r.min_abs_omega3_fiber > 0.0,
                Some(Series {
                    header: CARTAN_HEADER.iter().map(|s| s.to_string()).collect(),
                    rows,
                }),
            ))
        }
        Experiment::MainTheorem {
            measure,
            seed,
            trials,
            half_width,
            bent_curvature,
            discrimination,
            minimality,
        } => main_theorem(exp, measure, *seed, *trials, *half_width, *bent_curvature, *discrimination, minimality),
    }
}

/// Columns of the `cartan-invariants` CSV.
pub const CARTAN_HEADER: [&str; 10] = [
    "x1", "x2", "theta", "I", "J", "K", "residual1", "residual2", "residual3", "omega3_fiber",
];

/// Columns of the `geodesic` CSV in dimension `n`:
/// `t, x1..xn, v1..vn, F`.
pub fn geodesic_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("x{i}")));
    h.extend((1..=n).map(|i| format!("v{i}")));
    h.push("F".to_string());
    h
}

#[allow(clippy::too_many_arguments)]
fn main_theorem(
    exp: &Experiment,
    measure: &finsler_ht::crofton::HyperplaneMeasure,
    seed: u64,
    trials: usize,
    half_width: f64,
    bent_curvature: f64,
    discrimination: f64,
    numerics: &Option<config::MainTheoremNumerics>,
) -> Result<Outcome, CliError> {
    if measure.dim() != 3 {
        return Err(CliError::Config("the main-theorem experiment runs in R^3".into()));
    }
    let hw = half_width;
    // Room for the bent graph and the variations.
    let margin = hw + 2.0 + bent_curvature.abs() * 2.0 * hw * hw;
    let chart = CroftonChart::new(measure.clone(), finsler_ht::finsler::DomainBox::cube(3, margin))?;
    let mut opts = MinimalityOptions {
        trials,
        seed,
        ..MinimalityOptions::default()
    };
    if let Some(o) = numerics {
        opts.tolerance = o.tolerance.unwrap_or(opts.tolerance);
        opts.h_points = o.h_points.unwrap_or(opts.h_points);
        opts.h_radius = o.h_radius.unwrap_or(opts.h_radius);
        opts.variation = o.variation.unwrap_or(opts.variation);
    }
    let e1 = dvec(&[1.0, 0.0, 0.0]);
    let e2 = dvec(&[0.0, 1.0, 0.0]);
    let plane = AffinePatch {
        origin: DVector::zeros(3),
        basis: DMatrix::from_columns(&[e1.clone(), e2.clone()]),
        lower: vec![-hw, -hw],
        upper: vec![hw, hw],
    };
    let bent = ParaboloidPatch {
        origin: DVector::zeros(3),
        e1,
        e2,
        normal: dvec(&[0.0, 0.0, 1.0]),
        curvature: bent_curvature,
        lower: vec![-hw, -hw],
        upper: vec![hw, hw],
    };
    let flat = variation::totally_geodesic_minimality_experiment(&chart, &plane, &opts)?;
    let bent_opts = MinimalityOptions { h_points: 0, ..opts };
    let curved = variation::totally_geodesic_minimality_experiment(&chart, &bent, &bent_opts)?;
    let max_error = flat
        .trials
        .iter()
        .map(|t| t.error_estimate / t.field_norm)
        .fold(0.0, f64::max);
    let discriminates = curved.max_ratio > discrimination;
    let pass = flat.pass && discriminates;
    Ok(outcome(
        exp,
        json!({
            "max_first_variation": flat.max_ratio,
            "h_norms": flat.h_norms,
            "max_h_norm": flat.max_h_norm,
            "plane_trials": flat.trials,
            "bent_max_first_variation": curved.max_ratio,
            "bent_trials": curved.trials,
            "minimal": flat.pass,
            "discriminates": discriminates,
        }),
        &[("first_variation_ratio", opts.tolerance), ("discrimination_ratio", discrimination)],
        &[("first_variation_ratio", max_error)],
        pass,
        None,
    ))
}

/// JSON schema of [`Experiment`].
pub fn experiment_schema() -> String {
    let schema = schemars::schema_for!(Experiment);
    let mut s = serde_json::to_string_pretty(&schema).expect("schema serializes");
    s.push('\n');
    s
}
