use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_ht::crofton::{HyperplaneMeasure, LengthCheckOptions};
use finsler_ht::curves::CurveSpec;
use finsler_ht::densities::{CalibrationOptions, CubatureOptions, DensityKind};
use finsler_ht::finsler::DomainBox;
use finsler_ht::variation::{BumpProfile, PatchSpec, VariationOptions};
use finsler_ht_cli::config::LineSpec;
use finsler_ht_cli::{experiment_schema, run, ChartSpec, CliError, Experiment, NormSpec};
use serde::de::DeserializeOwned;

#[derive(Parser, Debug)]
#[command(name = "finsler-ht", version, about = "Holmes-Thompson volume experiments on Finsler charts")]
struct Cli {
    /// Experiment configuration (JSON). With a subcommand, the file must
    /// describe that subcommand's experiment and replaces its flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the seed of a Monte-Carlo experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for the JSON report and CSV series.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// k-densities and the Busemann form.
    #[command(subcommand)]
    Density(DensityCmd),
    /// Geodesics of a chart.
    #[command(subcommand)]
    Geodesic(GeodesicCmd),
    /// Crofton metrics of hyperplane measures.
    #[command(subcommand)]
    Crofton(CroftonCmd),
    /// Mean-curvature covector and the fiber identity.
    #[command(subcommand)]
    Variation(VariationCmd),
    /// Cartan invariants of Finsler surfaces.
    #[command(subcommand)]
    Cartan(CartanCmd),
    /// Composite experiments.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Run the experiment described by a configuration file.
    Run { file: PathBuf },
    /// Print the JSON schema of experiment configurations.
    Schema,
}

#[derive(Subcommand, Debug)]
enum DensityCmd {
    /// Evaluate a density on a simple k-vector.
    Eval {
        #[command(flatten)]
        target: DensityTarget,
        /// `ht` (Holmes-Thompson) or `bh` (Busemann-Hausdorff).
        #[arg(long, default_value = "ht")]
        kind: String,
    },
    /// Check that the Busemann form calibrates the density near a plane.
    Calibrate {
        #[command(flatten)]
        target: DensityTarget,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct DensityTarget {
    /// Norm descriptor: a JSON file or inline JSON.
    #[arg(long)]
    norm: Option<String>,
    /// Factors of the k-vector, `;`-separated rows of `,`-separated numbers.
    #[arg(long, allow_hyphen_values = true)]
    factors: Option<String>,
}

#[derive(Subcommand, Debug)]
enum GeodesicCmd {
    /// Integrate a unit-speed geodesic; writes `geodesic.csv`.
    Shoot {
        #[arg(long)]
        chart: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<String>,
        #[arg(long = "T")]
        t_final: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
}

#[derive(Subcommand, Debug)]
enum CroftonCmd {
    /// Monte-Carlo intersection count against arclength.
    CheckLength {
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        curve: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Euler-Lagrange residual of straight lines.
    CheckLines {
        #[arg(long)]
        measure: Option<String>,
        /// `x0:v0` pairs separated by `;`.
        #[arg(long, allow_hyphen_values = true)]
        lines: Option<String>,
        #[arg(long, default_value_t = 4.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
}

#[derive(Subcommand, Debug)]
enum VariationCmd {
    /// Mean-curvature covector at a parameter point of a patch.
    H {
        #[arg(long)]
        chart: Option<String>,
        #[arg(long)]
        patch: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long, default_value_t = 0.15)]
        radius: f64,
        /// Also evaluate h from the exterior derivative of the Hilbert form.
        #[arg(long)]
        cross_check: bool,
    },
}

#[derive(Subcommand, Debug)]
enum CartanCmd {
    /// Invariants at random unit-bundle points; writes `cartan-invariants.csv`.
    Invariants {
        #[arg(long)]
        chart: Option<String>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Sampling box `x1min,x2min,x1max,x2max`.
        #[arg(long, allow_hyphen_values = true, default_value = "-1,-1,1,1")]
        grid: String,
    },
}

#[derive(Subcommand, Debug)]
enum ExperimentCmd {
    /// Affine plane versus bent patch in a Crofton metric.
    MainTheorem {
        #[arg(long)]
        measure: Option<String>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Inline JSON or a path to a JSON file.
fn descriptor<T: DeserializeOwned>(arg: &Option<String>, name: &str) -> Result<T, CliError> {
    let raw = arg.as_ref().ok_or_else(|| usage(format!("--{name} is required without --config")))?;
    let text = if raw.trim_start().starts_with('{') {
        raw.clone()
    } else {
        fs::read_to_string(raw).map_err(|source| CliError::Io {
            path: PathBuf::from(raw),
            source,
        })?
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("--{name}: {e}")))
}

fn numbers(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| usage(format!("bad number {t:?}: {e}"))))
        .collect()
}

fn vector(arg: &Option<String>, name: &str) -> Result<Vec<f64>, CliError> {
    numbers(arg.as_ref().ok_or_else(|| usage(format!("--{name} is required without --config")))?)
}

fn rows(arg: &Option<String>, name: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let raw = arg.as_ref().ok_or_else(|| usage(format!("--{name} is required without --config")))?;
    raw.split(';').map(numbers).collect()
}

fn load_config(path: &Path) -> Result<Experiment, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Experiment::from_json(&text)
}

/// The experiment a subcommand runs, from `--config` or from its flags.
fn experiment(cli: &Cli) -> Result<Option<Experiment>, CliError> {
    let from_file = match &cli.config {
        Some(p) => Some(load_config(p)?),
        None => None,
    };
    let expected = match &cli.command {
        Command::Schema => return Ok(None),
        Command::Run { file } => return load_config(file).map(Some),
        Command::Density(DensityCmd::Eval { .. }) => "density-eval",
        Command::Density(DensityCmd::Calibrate { .. }) => "density-calibration",
        Command::Geodesic(_) => "geodesic",
        Command::Crofton(CroftonCmd::CheckLength { .. }) => "crofton-length",
        Command::Crofton(CroftonCmd::CheckLines { .. }) => "crofton-lines",
        Command::Variation(_) => "variation-h",
        Command::Cartan(_) => "cartan-invariants",
        Command::Experiment(_) => "main-theorem",
    };
    if let Some(exp) = from_file {
        if exp.name() != expected {
            return Err(usage(format!(
                "--config describes `{}` but the subcommand runs `{expected}`",
                exp.name()
            )));
        }
        return Ok(Some(exp));
    }
    let seed = cli.seed.unwrap_or(0);
    let exp = match &cli.command {
        Command::Density(DensityCmd::Eval { target, kind }) => Experiment::DensityEval {
            norm: descriptor::<NormSpec>(&target.norm, "norm")?,
            factors: rows(&target.factors, "factors")?,
            density: match kind.as_str() {
                "ht" => DensityKind::HolmesThompson,
                "bh" => DensityKind::BusemannHausdorff,
                other => return Err(usage(format!("unknown density kind {other:?}"))),
            },
            cubature: CubatureOptions::default(),
        },
        Command::Density(DensityCmd::Calibrate {
            target,
            samples,
            radius,
            tolerance,
        }) => {
            let d = CalibrationOptions::default();
            Experiment::DensityCalibration {
                norm: descriptor::<NormSpec>(&target.norm, "norm")?,
                factors: rows(&target.factors, "factors")?,
                seed,
                calibration: CalibrationOptions {
                    samples: samples.unwrap_or(d.samples),
                    radius: radius.unwrap_or(d.radius),
                    tolerance: tolerance.unwrap_or(d.tolerance),
                    seed,
                },
            }
        }
        Command::Geodesic(GeodesicCmd::Shoot {
            chart,
            x0,
            v0,
            t_final,
            steps,
        }) => Experiment::Geodesic {
            chart: descriptor::<ChartSpec>(chart, "chart")?,
            x0: vector(x0, "x0")?,
            v0: vector(v0, "v0")?,
            t_final: t_final.ok_or_else(|| usage("--T is required without --config"))?,
            steps: *steps,
        },
        Command::Crofton(CroftonCmd::CheckLength { measure, curve, samples }) => {
            let d = LengthCheckOptions::default();
            Experiment::CroftonLength {
                measure: descriptor::<HyperplaneMeasure>(measure, "measure")?,
                curve: descriptor::<CurveSpec>(curve, "curve")?,
                seed,
                options: LengthCheckOptions {
                    samples: samples.unwrap_or(d.samples),
                    ..d
                },
            }
        }
        Command::Crofton(CroftonCmd::CheckLines {
            measure,
            lines,
            half_width,
            tolerance,
        }) => {
            let measure = descriptor::<HyperplaneMeasure>(measure, "measure")?;
            let raw = lines.as_ref().ok_or_else(|| usage("--lines is required without --config"))?;
            let lines = raw
                .split(';')
                .map(|pair| {
                    let (a, b) = pair.split_once(':').ok_or_else(|| usage("lines are `x0:v0` pairs"))?;
                    Ok(LineSpec {
                        x0: numbers(a)?,
                        v0: numbers(b)?,
                    })
                })
                .collect::<Result<_, CliError>>()?;
            Experiment::CroftonLines {
                domain: DomainBox::cube(measure.dim(), *half_width),
                measure,
                lines,
                tolerance: *tolerance,
            }
        }
        Command::Variation(VariationCmd::H {
            chart,
            patch,
            point,
            radius,
            cross_check,
        }) => Experiment::VariationH {
            chart: descriptor::<ChartSpec>(chart, "chart")?,
            patch: descriptor::<PatchSpec>(patch, "patch")?,
            point: vector(point, "point")?,
            radius: *radius,
            profile: BumpProfile::Polynomial,
            options: VariationOptions::default(),
            cross_check: *cross_check,
        },
        Command::Cartan(CartanCmd::Invariants { chart, samples, grid }) => {
            let g = numbers(grid)?;
            if g.len() != 4 {
                return Err(usage("--grid takes four numbers"));
            }
            Experiment::CartanInvariants {
                chart: descriptor::<ChartSpec>(chart, "chart")?,
                lower: [g[0], g[1]],
                upper: [g[2], g[3]],
                samples: *samples,
                seed,
                tolerance: 1e-4,
            }
        }
        Command::Experiment(ExperimentCmd::MainTheorem { measure, trials }) => Experiment::MainTheorem {
            measure: descriptor::<HyperplaneMeasure>(measure, "measure")?,
            seed,
            trials: *trials,
            half_width: 1.0,
            bent_curvature: 0.25,
            discrimination: 1e-2,
            minimality: None,
        },
        Command::Schema | Command::Run { .. } => unreachable!("handled above"),
    };
    Ok(Some(exp))
}

fn main_inner(cli: &Cli) -> Result<bool, CliError> {
    let Some(mut exp) = experiment(cli)? else {
        print!("{}", experiment_schema());
        return Ok(true);
    };
    if let Some(seed) = cli.seed {
        exp.set_seed(seed);
    }
    let outcome = run(&exp)?;
    let written = outcome.write(&cli.out_dir)?;
    print!("{}", outcome.report_json());
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(outcome.report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("FAIL");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
