use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use polymet::commands as cmd;
use polymet::error::{CliError, CliResult};
use polymet::files::{write_bytes, write_metrics, write_tensor};
use polymet::report::{parse_report, render, to_canonical_json, Format};
use polymet::{run_suite, Suite, SuiteConfig};

#[derive(Parser)]
#[command(name = "polymet", version, about = "Polymetric geometry toolkit and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, visible_alias = "report")]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
        /// Print the effective configuration and exit.
        #[arg(long)]
        echo_config: bool,
    },
    /// Re-render a JSON report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every module suite.
    All(SuiteArgs),
    /// Signature cone, stability radius, polymetric validation, John ellipsoids.
    Cone {
        #[command(subcommand)]
        op: Option<ConeOp>,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Curvature of a metric.
    Curvature {
        /// Metric file to analyse instead of running the suite.
        #[arg(long)]
        metric: Option<PathBuf>,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Gauge variation: adjoint identity, conformal variations, slices.
    Gauge {
        #[command(subcommand)]
        op: Option<GaugeOp>,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Geodesic integration.
    Geodesic {
        #[arg(long, requires_all = ["x", "v", "t"])]
        metric: Option<PathBuf>,
        /// Initial point, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Initial velocity, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Record every n-th step.
        #[arg(long, default_value_t = 10)]
        every: usize,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Characteristic classes and Gauss–Bonnet.
    Chern {
        #[command(subcommand)]
        op: Option<ChernOp>,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Spectral cutoffs, de Rham and Callias indices.
    Index {
        #[command(subcommand)]
        op: Option<IndexOp>,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Quasi-isometry fits, warped ends, Sobolev equivalence.
    Scales {
        #[command(subcommand)]
        op: Option<ScalesOp>,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Write metric or tensor files.
    Generate {
        #[command(subcommand)]
        op: GenerateOp,
    },
}

#[derive(Args, Clone, Default)]
struct SuiteArgs {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Report destination; stdout if absent.
    #[arg(long, visible_alias = "report", global = true)]
    out: Option<PathBuf>,
    /// json, csv or text (default: json to a file, text to stdout).
    #[arg(long, global = true)]
    format: Option<String>,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Parameter override `name=v1,v2,...`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUES")]
    param: Vec<String>,
}

#[derive(Subcommand)]
enum ConeOp {
    /// Check every component's signature at every node.
    Validate {
        #[arg(long)]
        metric: PathBuf,
    },
    /// Maximal-volume inscribed ellipsoid of a symmetric sample set.
    John {
        #[arg(long)]
        samples: PathBuf,
    },
}

#[derive(Subcommand)]
enum GaugeOp {
    /// Adjoint identity on random metrics, vector fields and tensors.
    Adjoint {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 32)]
        resolution: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Split a symmetric tensor into gauge and slice parts.
    Slice {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        tensor: PathBuf,
    },
}

#[derive(Subcommand)]
enum ChernOp {
    /// Euler integral of a metric file or of the round sphere.
    GaussBonnet {
        #[arg(long, conflicts_with = "sphere")]
        metric: Option<PathBuf>,
        /// Round-sphere resolution.
        #[arg(long)]
        sphere: Option<usize>,
    },
    /// Euler integral along a family of metrics.
    Family {
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Subcommand)]
enum IndexOp {
    /// Betti numbers and de Rham index.
    Derham {
        #[arg(long, conflicts_with = "sphere_band")]
        metric: Option<PathBuf>,
        #[arg(long)]
        sphere_band: Option<usize>,
        /// Also list Laplacian eigenvalues up to this value.
        #[arg(long)]
        spectrum_cap: Option<f64>,
    },
    /// Index of the one-dimensional Callias operator.
    Callias {
        #[arg(long, default_value = "tanh")]
        potential: String,
        #[arg(long = "L", default_value_t = 20.0)]
        l: f64,
        #[arg(long = "N", default_value_t = 2000)]
        n: usize,
    },
    /// de Rham data along a metric family.
    Family {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        spectrum_cap: Option<f64>,
    },
}

#[derive(Subcommand)]
enum ScalesOp {
    /// Quasi-isometry constants between two metrics on one chart.
    Qi {
        #[arg(long)]
        g0: PathBuf,
        #[arg(long)]
        g1: PathBuf,
        #[arg(long, default_value_t = 200)]
        pairs: usize,
    },
    /// Quasi-isometry trend on warped cylindrical ends.
    Warped {
        #[arg(long)]
        a: f64,
        /// End lengths, comma separated.
        #[arg(long = "T", default_value = "5,10,20")]
        t: String,
        #[arg(long, default_value_t = 4)]
        per_unit: usize,
        #[arg(long, default_value_t = 16)]
        n_theta: usize,
    },
    /// Equivalence constants between two multi-Sobolev norms.
    Sobolev {
        #[arg(long = "G")]
        g: PathBuf,
        #[arg(long = "H")]
        h: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
}

#[derive(Subcommand)]
enum GenerateOp {
    /// Metric or polymetric file (repeat --model for several components).
    Metric {
        #[arg(long, required = true)]
        model: Vec<String>,
        #[arg(long, default_value_t = 32)]
        resolution: usize,
        /// Model parameter: bump / random amplitude / warping rate.
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        /// Required for random models.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tensor field file.
    Tensor {
        #[arg(long)]
        model: String,
        /// Metric file whose chart to use.
        #[arg(long)]
        like: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        resolution: usize,
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
        /// Required for random models.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn split_kv<'a>(s: &'a str, flag: &str) -> CliResult<(&'a str, &'a str)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| CliError::Usage(format!("{flag} expects NAME=VALUE, got `{s}`")))
}

/// Builds a suite config from flags by going through the config-file parser,
/// so flags and files get identical validation.
fn config_from_args(suite: Suite, a: &SuiteArgs) -> CliResult<SuiteConfig> {
    let mut text = format!("suite = {}\n", suite.name());
    if let Some(seed) = a.seed {
        text += &format!("seed = {seed}\n");
    }
    if let Some(r) = a.resolution {
        text += &format!("[chart]\nresolution = {r}\n");
    }
    if !a.tol.is_empty() {
        text += "[tolerances]\n";
        for t in &a.tol {
            let (k, v) = split_kv(t, "--tol")?;
            text += &format!("{k} = {v}\n");
        }
    }
    if !a.param.is_empty() {
        text += "[params]\n";
        for p in &a.param {
            let (k, v) = split_kv(p, "--param")?;
            text += &format!("{k} = {v}\n");
        }
    }
    SuiteConfig::parse(&text)
}

fn output_format(format: Option<&str>, out: Option<&Path>) -> CliResult<Format> {
    match format {
        Some(f) => Format::parse(f),
        None if out.is_some() => Ok(Format::Json),
        None => Ok(Format::Text),
    }
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => write_bytes(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn suite_run(cfg: SuiteConfig, out: Option<&Path>, format: Option<&str>) -> CliResult<bool> {
    let out = out.map(Path::to_path_buf).or_else(|| cfg.output.clone());
    let format = output_format(format, out.as_deref())?;
    let report = run_suite(&cfg)?;
    emit(&render(&report, format), out.as_deref())?;
    if out.is_some() {
        eprintln!(
            "{}: {} ({}/{} checks passed)",
            report.suite,
            if report.overall_pass { "PASS" } else { "FAIL" },
            report.checks.iter().filter(|c| c.pass).count(),
            report.checks.len()
        );
    }
    Ok(report.overall_pass)
}

fn run_module(suite: Suite, a: &SuiteArgs) -> CliResult<bool> {
    let cfg = config_from_args(suite, a)?;
    suite_run(cfg, a.out.as_deref(), a.format.as_deref())
}

fn emit_json(v: &Value, a: &SuiteArgs) -> CliResult<()> {
    if let Some(f) = a.format.as_deref() {
        if f != "json" {
            return Err(CliError::Usage(format!("this command only writes json, not `{f}`")));
        }
    }
    emit(&to_canonical_json(v), a.out.as_deref())
}

fn need_seed(a: &SuiteArgs) -> CliResult<u64> {
    a.seed.ok_or_else(|| CliError::Usage("this command is randomized; pass --seed".into()))
}

fn generation_seed(random: bool, seed: Option<u64>) -> CliResult<u64> {
    match (random, seed) {
        (true, None) => Err(CliError::Usage("random models need --seed".into())),
        (_, s) => Ok(s.unwrap_or(0)),
    }
}

fn dispatch(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Run { config, out, format, echo_config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
            let cfg = SuiteConfig::parse(&text)?;
            if echo_config {
                print!("{}", cfg.echo());
                return Ok(true);
            }
            suite_run(cfg, out.as_deref(), format.as_deref())
        }
        Command::Report { input, format, out } => {
            let text = std::fs::read_to_string(&input).map_err(|e| CliError::io(&input, e))?;
            let report = parse_report(&text)?;
            emit(&render(&report, Format::parse(&format)?), out.as_deref())?;
            Ok(report.overall_pass)
        }
        Command::All(a) => run_module(Suite::All, &a),
        Command::Cone { op, suite: a } => match op {
            None => run_module(Suite::Cone, &a),
            Some(ConeOp::Validate { metric }) => {
                let (v, ok) = cmd::cone_validate(&metric)?;
                emit_json(&v, &a)?;
                Ok(ok)
            }
            Some(ConeOp::John { samples }) => emit_json(&cmd::cone_john(&samples)?, &a).map(|_| true),
        },
        Command::Curvature { metric, suite: a } => match metric {
            None => run_module(Suite::Curvature, &a),
            Some(m) => emit_json(&cmd::curvature_report(&m)?, &a).map(|_| true),
        },
        Command::Gauge { op, suite: a } => match op {
            None => run_module(Suite::Gauge, &a),
            Some(GaugeOp::Adjoint { trials, resolution, tol }) => {
                let (v, ok) = cmd::gauge_adjoint(trials, need_seed(&a)?, resolution, tol)?;
                emit_json(&v, &a)?;
                Ok(ok)
            }
            Some(GaugeOp::Slice { metric, tensor }) => emit_json(&cmd::gauge_slice(&metric, &tensor)?, &a).map(|_| true),
        },
        Command::Geodesic { metric, x, v, t, dt, every, suite: a } => match metric {
            None => run_module(Suite::Geodesic, &a),
            Some(m) => {
                let x = cmd::parse_point(x.as_deref().unwrap_or_default(), "--x")?;
                let v = cmd::parse_point(v.as_deref().unwrap_or_default(), "--v")?;
                let csv = cmd::geodesic_csv(&m, &x, &v, t.unwrap_or(1.0), dt, every)?;
                emit(&csv, a.out.as_deref())?;
                Ok(true)
            }
        },
        Command::Chern { op, suite: a } => match op {
            None => run_module(Suite::Chern, &a),
            Some(ChernOp::GaussBonnet { metric, sphere }) => {
                emit_json(&cmd::chern_gauss_bonnet(metric.as_deref(), sphere)?, &a).map(|_| true)
            }
            Some(ChernOp::Family { spec }) => emit_json(&cmd::chern_family(&spec)?, &a).map(|_| true),
        },
        Command::Index { op, suite: a } => match op {
            None => run_module(Suite::Index, &a),
            Some(IndexOp::Derham { metric, sphere_band, spectrum_cap }) => {
                emit_json(&cmd::index_derham(metric.as_deref(), sphere_band, spectrum_cap)?, &a).map(|_| true)
            }
            Some(IndexOp::Callias { potential, l, n }) => emit_json(&cmd::index_callias(&potential, l, n)?, &a).map(|_| true),
            Some(IndexOp::Family { spec, spectrum_cap }) => {
                emit_json(&cmd::index_family(&spec, spectrum_cap)?, &a).map(|_| true)
            }
        },
        Command::Scales { op, suite: a } => match op {
            None => run_module(Suite::Scales, &a),
            Some(ScalesOp::Qi { g0, g1, pairs }) => {
                emit_json(&cmd::scales_qi(&g0, &g1, pairs, need_seed(&a)?)?, &a).map(|_| true)
            }
            Some(ScalesOp::Warped { a: rate, t, per_unit, n_theta }) => {
                let lengths = cmd::parse_point(&t, "--T")?;
                emit_json(&cmd::scales_warped(rate, &lengths, per_unit, n_theta)?, &a).map(|_| true)
            }
            Some(ScalesOp::Sobolev { g, h, k, samples }) => {
                emit_json(&cmd::scales_sobolev(&g, &h, k, samples, need_seed(&a)?)?, &a).map(|_| true)
            }
        },
        Command::Generate { op } => match op {
            GenerateOp::Metric { model, resolution, eps, seed, out } => {
                let seed = generation_seed(model.iter().any(|m| m.starts_with("random")), seed)?;
                let metrics = cmd::generate_polymetric(&model, resolution, eps, seed)?;
                write_metrics(&out, &metrics)?;
                Ok(true)
            }
            GenerateOp::Tensor { model, like, resolution, amplitude, seed, out } => {
                let seed = generation_seed(model.starts_with("random"), seed)?;
                let t = cmd::generate_tensor(&model, like.as_deref(), resolution, amplitude, seed)?;
                write_tensor(&out, &t)?;
                Ok(true)
            }
        },
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
