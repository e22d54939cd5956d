//! Command-line workflows: `fit`, `shape` and `estimate`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Point3;

use crate::config::{BasePose, JointVector, RobotConfig};
use crate::error::Error;
use crate::fitter::{fit_cycle, write_diagnostics, FitOptions};
use crate::gait::{GaitKind, GaitSpec, DEFAULT_SAMPLES_PER_CYCLE};
use crate::kinematics::sample_backbone;
use crate::locomotion::{compare_with_measured, load_table, reference_table};
use crate::trajectory::{build_trajectory, ExportFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_COMPUTATION: i32 = 2;

/// Exit code plus the text shown to the user. Nonzero codes name the failing stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub code: i32,
    pub message: String,
}

impl CommandOutcome {
    fn ok(message: String) -> Self {
        Self {
            code: EXIT_OK,
            message,
        }
    }

    fn validation(stage: &str, err: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: format!("{stage}: {err}"),
        }
    }

    fn computation(stage: &str, err: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_COMPUTATION,
            message: format!("{stage}: {err}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "softsnake",
    version,
    about = "Gait synthesis for a three-module soft robotic snake"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one gait cycle and write a timed jointspace/pressure trajectory.
    Fit(FitArgs),
    /// Sample the backbone for given joint values and write CSV or SVG.
    Shape(ShapeArgs),
    /// Compare predicted locomotion speeds with the measured table.
    Estimate(EstimateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GaitArg {
    Serpentine,
    RollIn,
    RollOut,
}

impl From<GaitArg> for GaitKind {
    fn from(g: GaitArg) -> Self {
        match g {
            GaitArg::Serpentine => GaitKind::Serpentine,
            GaitArg::RollIn => GaitKind::RollInward,
            GaitArg::RollOut => GaitKind::RollOutward,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub gait: GaitArg,
    /// Robot configuration JSON; prototype defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Gait curve parameters as JSON; overrides --amplitude and --samples.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Cycle period in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub period: f64,
    /// Amplitude scale in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 1)]
    pub cycles: usize,
    /// Shape samples per cycle.
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_CYCLE)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output trajectory (.json or .csv).
    #[arg(long)]
    pub out: PathBuf,
    /// Odd circular moving-average window.
    #[arg(long)]
    pub smooth: Option<usize>,
    /// Cold-start all samples concurrently.
    #[arg(long)]
    pub parallel: bool,
    /// Fit options as JSON; individual flags below override it.
    #[arg(long)]
    pub fit_options: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_restarts: Option<usize>,
    #[arg(long)]
    pub residual_accept: Option<f64>,
    /// Per-sample fit diagnostics CSV.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Nine comma-separated actuator extensions (m).
    #[arg(long, allow_hyphen_values = true)]
    pub joints: String,
    /// Base pose x,y,z,alpha,beta,gamma (m, rad).
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<String>,
    #[arg(long, default_value_t = 31)]
    pub points: usize,
    /// Output path (.csv or .svg).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Measured velocity CSV; the bundled table when omitted.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Report path: JSON for .json, text otherwise.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => match cli.command {
            Command::Fit(a) => cmd_fit(&a),
            Command::Shape(a) => cmd_shape(&a),
            Command::Estimate(a) => cmd_estimate(&a),
        },
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            CommandOutcome {
                code,
                message: e.render().to_string(),
            }
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RobotConfig, CommandOutcome> {
    match path {
        Some(p) => RobotConfig::load(p).map_err(|e| CommandOutcome::validation("config", e)),
        None => Ok(RobotConfig::default()),
    }
}

fn fit_options(args: &FitArgs) -> Result<FitOptions, Error> {
    let mut opts = match &args.fit_options {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text)?
        }
        None => FitOptions::default(),
    };
    opts.seed = args.seed;
    opts.parallel |= args.parallel;
    if let Some(v) = args.lambda {
        opts.lambda = v;
    }
    if let Some(v) = args.max_restarts {
        opts.max_restarts = v;
    }
    if let Some(v) = args.residual_accept {
        opts.residual_accept = v;
    }
    opts.validate()?;
    Ok(opts)
}

pub fn cmd_fit(args: &FitArgs) -> CommandOutcome {
    let cfg = match load_config(args.config.as_deref()) {
        Ok(c) => c,
        Err(o) => return o,
    };
    let kind = GaitKind::from(args.gait);
    let spec = match &args.spec {
        Some(p) => match GaitSpec::load(p, &cfg) {
            Ok(mut s) => {
                s.kind = kind;
                s.period = args.period;
                s
            }
            Err(e) => return CommandOutcome::validation("gait spec", e),
        },
        None => {
            let mut s = GaitSpec::with_amplitude(kind, args.amplitude, &cfg);
            s.period = args.period;
            s.samples_per_cycle = args.samples;
            s
        }
    };
    if let Err(e) = spec.validate() {
        return CommandOutcome::validation("gait spec", e);
    }
    if args.cycles == 0 {
        return CommandOutcome::validation("flags", "--cycles must be at least 1");
    }
    let format = match ExportFormat::from_path(&args.out) {
        Ok(f) => f,
        Err(e) => return CommandOutcome::validation("flags", e),
    };
    let opts = match fit_options(args) {
        Ok(o) => o,
        Err(e) => return CommandOutcome::validation("fit options", e),
    };

    // Outward rolling is the inward cycle played backwards.
    let fit_spec = GaitSpec {
        kind: if kind == GaitKind::RollOutward {
            GaitKind::RollInward
        } else {
            kind
        },
        ..spec.clone()
    };
    let fits = match fit_cycle(&fit_spec, &cfg, &opts) {
        Ok(f) => f,
        Err(e @ Error::TooFewConverged { .. }) => return CommandOutcome::computation("fit", e),
        Err(e) => return CommandOutcome::validation("fit", e),
    };
    let mut traj = match build_trajectory(&fits, &spec, &cfg, args.cycles) {
        Ok(t) => t,
        Err(e) => return CommandOutcome::computation("trajectory", e),
    };
    if let Some(w) = args.smooth {
        traj = match traj.smooth(w, &cfg) {
            Ok(t) => t,
            Err(e) => return CommandOutcome::validation("smooth", e),
        };
    }
    if let Err(e) = traj.export(&args.out, format) {
        return CommandOutcome::computation("export", e);
    }
    if let Some(p) = &args.diagnostics {
        let written = std::fs::File::create(p)
            .and_then(|f| write_diagnostics(&fits, std::io::BufWriter::new(f)));
        if let Err(e) = written {
            return CommandOutcome::computation("export", Error::io(p, e));
        }
    }

    let converged = fits.iter().filter(|f| f.converged).count();
    let repaired = fits.iter().filter(|f| f.repaired).count();
    let mean = fits.iter().map(|f| f.residual_mean).sum::<f64>() / fits.len() as f64;
    CommandOutcome::ok(format!(
        "{kind}: {converged}/{} samples converged ({:.0}%), {repaired} repaired, mean residual {:.3} mm; wrote {}",
        fits.len(),
        100.0 * converged as f64 / fits.len() as f64,
        mean * 1e3,
        args.out.display()
    ))
}

fn parse_floats(text: &str, expected: usize, what: &str) -> Result<Vec<f64>, String> {
    let values = text
        .split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| format!("{what}: '{f}' is not a number"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != expected {
        return Err(format!(
            "{what}: expected {expected} values, got {}",
            values.len()
        ));
    }
    Ok(values)
}

pub fn cmd_shape(args: &ShapeArgs) -> CommandOutcome {
    let cfg = match load_config(args.config.as_deref()) {
        Ok(c) => c,
        Err(o) => return o,
    };
    let q = match parse_floats(&args.joints, 9, "--joints").and_then(|v| {
        let q = JointVector::from_slice(&v).map_err(|e| e.to_string())?;
        q.validate(&cfg).map_err(|e| e.to_string())?;
        Ok(q)
    }) {
        Ok(q) => q,
        Err(e) => return CommandOutcome::validation("joints", e),
    };
    let base = match &args.base {
        None => BasePose::identity(),
        Some(text) => match parse_floats(text, 6, "--base") {
            Ok(v) => BasePose {
                xyz: [v[0], v[1], v[2]],
                euler: [v[3], v[4], v[5]],
            },
            Err(e) => return CommandOutcome::validation("base", e),
        },
    };
    let points = match sample_backbone(&base, &q, &cfg, args.points) {
        Ok(p) => p,
        Err(e) => return CommandOutcome::validation("backbone", e),
    };
    let body = match args.out.extension().and_then(|e| e.to_str()) {
        Some("csv") => backbone_csv(&points),
        Some("svg") => backbone_svg(&points),
        _ => return CommandOutcome::validation("flags", "--out must end in .csv or .svg"),
    };
    if let Err(e) = std::fs::write(&args.out, body) {
        return CommandOutcome::computation("export", Error::io(&args.out, e));
    }
    CommandOutcome::ok(format!(
        "wrote {} backbone points to {}",
        points.len(),
        args.out.display()
    ))
}

fn backbone_csv(points: &[Point3<f64>]) -> String {
    let mut s = String::from("xi,x_m,y_m,z_m\n");
    let n = points.len();
    for (k, p) in points.iter().enumerate() {
        let xi = 3.0 * k as f64 / (n - 1) as f64;
        let _ = writeln!(s, "{xi},{},{},{}", p.x, p.y, p.z);
    }
    s
}

/// Two side-by-side panes: top view (X right, Y up) and side view (X right, Z up).
pub fn backbone_svg(points: &[Point3<f64>]) -> String {
    const PANE: f64 = 400.0;
    const MARGIN: f64 = 20.0;
    let pane = |xs: Vec<f64>, ys: Vec<f64>, offset: f64, title: &str| {
        let (xmin, xmax) = bounds(&xs);
        let (ymin, ymax) = bounds(&ys);
        let span = (xmax - xmin).max(ymax - ymin).max(1e-9);
        let scale = (PANE - 2.0 * MARGIN) / span;
        let coords: Vec<String> = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let px = offset + MARGIN + (x - xmin) * scale;
                let py = PANE - MARGIN - (y - ymin) * scale;
                format!("{px:.3},{py:.3}")
            })
            .collect();
        format!(
            "  <text x=\"{:.1}\" y=\"14\" font-size=\"12\">{title}</text>\n  <polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"{}\"/>\n",
            offset + MARGIN,
            coords.join(" ")
        )
    };
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let zs: Vec<f64> = points.iter().map(|p| p.z).collect();
    let mut s = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{PANE}\" viewBox=\"0 0 {} {PANE}\">\n",
        2.0 * PANE,
        2.0 * PANE
    );
    s.push_str(&pane(xs.clone(), ys, 0.0, "XY"));
    s.push_str(&pane(xs, zs, PANE, "XZ"));
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

pub fn cmd_estimate(args: &EstimateArgs) -> CommandOutcome {
    let cfg = match load_config(args.config.as_deref()) {
        Ok(c) => c,
        Err(o) => return o,
    };
    let table = match &args.table {
        Some(p) => match load_table(p) {
            Ok(t) => t,
            Err(e) => return CommandOutcome::validation("table", e),
        },
        None => reference_table(),
    };
    let report = match compare_with_measured(&cfg, &table) {
        Ok(r) => r,
        Err(e) => return CommandOutcome::validation("table", e),
    };
    let body = match args.out.extension().and_then(|e| e.to_str()) {
        Some("json") => report.to_json() + "\n",
        _ => report.to_text(),
    };
    if let Err(e) = std::fs::write(&args.out, body) {
        return CommandOutcome::computation("export", Error::io(&args.out, e));
    }
    CommandOutcome::ok(report.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_floats_checks_count_and_numbers() {
        assert_eq!(parse_floats("1, 2,3", 3, "x").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_floats("1,2", 3, "x").is_err());
        assert!(parse_floats("1,a,3", 3, "x").is_err());
    }

    #[test]
    fn help_exits_zero_and_bad_flags_exit_one() {
        assert_eq!(run(["softsnake", "--help"]).code, EXIT_OK);
        assert_eq!(
            run(["softsnake", "fit", "--gait", "sidewind", "--out", "x.json"]).code,
            EXIT_VALIDATION
        );
        assert_eq!(run(["softsnake"]).code, EXIT_VALIDATION);
    }

    #[test]
    fn svg_has_two_polylines() {
        let pts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(0.1, 0.05, 0.3)];
        let svg = backbone_svg(&pts);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
