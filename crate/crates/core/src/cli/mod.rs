//! Command-line front end.
//!
//! Every subcommand prints a key/value report to stdout (and to `--report`
//! when given). Exit codes: 0 success or feasible, 1 certified infeasible or
//! a failed check, 2 numerical failure, 3 usage or parse error.

mod report;
mod sysfile;

pub use report::Report;
pub use sysfile::{load_system, load_system_with, parse_definition, parse_real, parse_system, SystemDefinition, SystemFileError};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::contraction::{
    find_metric, max_rate, nominal_uncertainty_range, optimize_box, optimize_symmetric_range, polytope_inner_approx,
    ContractionError, DynSystem, MetricCertificate, MetricOptions, ParamKind, ProbeRecord, SearchOutcome, SolveSummary,
    UncertaintyResult, UncertaintyValues, DEFAULT_BISECTION_TOL, DEFAULT_EPS,
};
use crate::simulate::{
    build_unidirectional_coupling, integrate, sync_distance, trajectory_csv, trajectory_svg, Oscillator, Trajectory,
    DEFAULT_DT, DEFAULT_T_END,
};
use crate::sos::CertificateFile;
use crate::verify::{self, Region, DEFAULT_SAMPLES, DEFAULT_SEED};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

const TOOL: &str = concat!("contraction-sos ", env!("CARGO_PKG_VERSION"));

#[derive(Parser, Debug)]
#[command(name = "contraction", version, about = "Contraction metrics for polynomial systems via SOS programming")]
struct Cli {
    /// Worker threads for parallel probes and sampling.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SystemArgs {
    /// System-definition file.
    system: PathBuf,
    /// Override a constant of the definition file, `name=value`.
    #[arg(long = "const", value_name = "NAME=VALUE", allow_hyphen_values = true)]
    constants: Vec<String>,
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 4)]
    degree: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Require `-R` SOS without margin and normalize the scale of `M`.
    #[arg(long)]
    semi: bool,
    /// States the metric may depend on (names or 1-based indices).
    #[arg(long, value_delimiter = ',')]
    structure_vars: Vec<String>,
    /// Entries of `R` pinned to zero, `i:j` with 1-based indices.
    #[arg(long, value_delimiter = ',')]
    zero_r_entries: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a contraction metric.
    Metric {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Certificate output path (default: `<system>.cert`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest convergence rate by bisection.
    Rate {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = DEFAULT_BISECTION_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Range of one parameter certified by a fixed nominal metric.
    Urange {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Nominal certificate; searched for when omitted.
        #[arg(long)]
        cert: Option<PathBuf>,
        #[arg(long)]
        param: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BISECTION_TOL)]
        tol: f64,
    },
    /// Largest symmetric interval (or box) certified by one metric.
    Uopt {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Parameter(s); two with `--box`.
        #[arg(long, value_delimiter = ',')]
        param: Vec<String>,
        /// Square box over two parameters.
        #[arg(long = "box")]
        boxed: bool,
        #[arg(long, default_value_t = DEFAULT_BISECTION_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Polytope of two parameters certified by a fixed nominal metric.
    Upoly {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        cert: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        param: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_BISECTION_TOL)]
        tol: f64,
    },
    /// Sample the eigenvalues of a certificate over a region.
    Verify {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        cert: PathBuf,
        /// `lo:hi` for a cube, or one `lo:hi` per state separated by commas.
        #[arg(long, default_value = "-2:2", allow_hyphen_values = true)]
        region: String,
        /// Grid points per axis.
        #[arg(long, default_value_t = verify::DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Per-point eigenvalue CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Integrate the system with RK4.
    Simulate {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_T_END)]
        t_end: f64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Parameter, input or constant value, `name=value`.
        #[arg(long, value_name = "NAME=VALUE", allow_hyphen_values = true)]
        set: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Keep every n-th sample in the CSV.
        #[arg(long, default_value_t = 100)]
        every: usize,
    },
    /// Drive a copy of an oscillator by the original and simulate the pair.
    Couple {
        /// Oscillator definition with constants `alpha`, `omega` and `k`.
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Master then slave state.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "3,0,0.1,0")]
        x0: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_T_END)]
        t_end: f64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        every: usize,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn summary_code(s: &SolveSummary) -> i32 {
    if s.is_certified_infeasible() {
        EXIT_INFEASIBLE
    } else {
        EXIT_NUMERICAL
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Contraction(c) => match c {
                ContractionError::NoMetric(s) => summary_code(s),
                ContractionError::Sos(_) | ContractionError::Poly(_) => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            },
            Error::Sos(_) | Error::Poly(_) => EXIT_NUMERICAL,
            Error::Verify(verify::VerifyError::Collapse(..)) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ContractionError> for Failure {
    fn from(e: ContractionError) -> Self {
        Error::from(e).into()
    }
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let command_line = std::iter::once("contraction".to_string())
        .chain(args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()))
        .collect::<Vec<_>>()
        .join(" ");
    let seed = match &cli.command {
        Command::Verify { seed, .. } => *seed,
        _ => DEFAULT_SEED,
    };
    let mut report = Report::new(TOOL, &command_line, seed);
    let code = match dispatch(&cli, &mut report) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            report.set("error", &f.message);
            f.code
        }
    };
    report.set("exit_code", code);
    let text = report.to_text();
    print!("{}", text);
    if let Some(path) = &cli.report {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("error: {}: {}", path.display(), e);
            return EXIT_USAGE;
        }
    }
    code
}

fn dispatch(cli: &Cli, report: &mut Report) -> Result<i32, Failure> {
    let mut work = || match &cli.command {
        Command::Metric { sys, search, out } => cmd_metric(sys, search, out.as_deref(), report),
        Command::Rate {
            sys,
            search,
            tol,
            out,
        } => cmd_rate(sys, search, *tol, out.as_deref(), report),
        Command::Urange {
            sys,
            search,
            cert,
            param,
            tol,
        } => cmd_urange(sys, search, cert.as_deref(), param.as_deref(), *tol, report),
        Command::Uopt {
            sys,
            search,
            param,
            boxed,
            tol,
            out,
        } => cmd_uopt(sys, search, param, *boxed, *tol, out.as_deref(), report),
        Command::Upoly {
            sys,
            search,
            cert,
            param,
            tol,
        } => cmd_upoly(sys, search, cert.as_deref(), param, *tol, report),
        Command::Verify {
            sys,
            cert,
            region,
            grid,
            samples,
            seed,
            csv,
        } => cmd_verify(sys, cert, region, *grid, *samples, *seed, csv.as_deref(), report),
        Command::Simulate {
            sys,
            x0,
            t_end,
            dt,
            set,
            csv,
            svg,
            every,
        } => cmd_simulate(sys, x0, *t_end, *dt, set, csv.as_deref(), svg.as_deref(), *every, report),
        Command::Couple {
            sys,
            eta,
            x0,
            t_end,
            dt,
            csv,
            svg,
            every,
        } => cmd_couple(sys, *eta, x0, *t_end, *dt, csv.as_deref(), svg.as_deref(), *every, report),
    };
    match cli.jobs {
        Some(0) => Err(Failure::usage("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::usage(e.to_string()))?
            .install(work),
        None => work(),
    }
}

fn parse_assignment(s: &str) -> Result<(String, f64), Failure> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Failure::usage(format!("expected name=value, got `{}`", s)))?;
    let v = parse_real(v).ok_or_else(|| Failure::usage(format!("invalid number in `{}`", s)))?;
    Ok((k.trim().to_string(), v))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|source| {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|source| {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn load_definition(args: &SystemArgs, extra: &[(String, f64)]) -> Result<SystemDefinition, Failure> {
    let text = read(&args.system)?;
    let mut overrides = args
        .constants
        .iter()
        .map(|s| parse_assignment(s))
        .collect::<Result<Vec<_>, _>>()?;
    overrides.extend_from_slice(extra);
    parse_definition(&text, &overrides).map_err(|e| Failure::usage(format!("{}: {}", args.system.display(), e)))
}

fn load(args: &SystemArgs, report: &mut Report) -> Result<DynSystem, Failure> {
    let def = load_definition(args, &[])?;
    report_definition(&def, report);
    Ok(def.system)
}

fn report_definition(def: &SystemDefinition, report: &mut Report) {
    report.set("system", &def.system.name);
    report.set("states", def.system.states.join(" "));
    for (k, v) in &def.constants {
        report.set(format!("constant.{}", k), v);
    }
}

fn state_index(sys: &DynSystem, s: &str) -> Result<usize, Failure> {
    if let Some(i) = sys.states.iter().position(|x| x == s) {
        return Ok(i);
    }
    match s.parse::<usize>() {
        Ok(i) if (1..=sys.n()).contains(&i) => Ok(i - 1),
        _ => Err(Failure::usage(format!("unknown state `{}`", s))),
    }
}

fn metric_options(sys: &DynSystem, a: &SearchArgs) -> Result<MetricOptions, Failure> {
    let structure_vars = if a.structure_vars.is_empty() {
        None
    } else {
        Some(
            a.structure_vars
                .iter()
                .map(|s| state_index(sys, s))
                .collect::<Result<Vec<_>, _>>()?,
        )
    };
    let zero_entries = a
        .zero_r_entries
        .iter()
        .map(|s| {
            let pair = s.split_once(':').and_then(|(i, j)| Some((i.trim().parse::<usize>().ok()?, j.trim().parse::<usize>().ok()?)));
            match pair {
                Some((i, j)) if (1..=sys.n()).contains(&i) && (1..=sys.n()).contains(&j) => Ok((i - 1, j - 1)),
                _ => Err(Failure::usage(format!("invalid R entry `{}`; expected i:j with 1-based indices", s))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if a.eps < 0.0 || !a.eps.is_finite() {
        return Err(Failure::usage("--eps must be non-negative"));
    }
    Ok(MetricOptions {
        degree: a.degree,
        beta: a.beta,
        eps: a.eps,
        structure_vars,
        semi: a.semi,
        zero_entries,
        ..Default::default()
    })
}

fn report_summary(report: &mut Report, s: &SolveSummary) {
    report.set("status", s.status);
    report.set("feasibility_ratio", format!("{:.6}", s.feasibility_ratio));
    report.set("iterations", s.iterations);
    report.set("retried", s.retried);
    if let Some(n) = &s.note {
        report.set("note", n);
    }
}

fn save_certificate(cert: &MetricCertificate, path: &Path, report: &mut Report) -> Result<(), Failure> {
    let mut f: CertificateFile = cert.to_file();
    let mut meta = report.header();
    meta.append(&mut f.meta);
    f.meta = meta;
    write(path, &f.to_text())?;
    report.set("certificate", path.display());
    Ok(())
}

fn load_certificate(path: &Path) -> Result<MetricCertificate, Failure> {
    let text = read(path)?;
    let file = CertificateFile::parse(&text).map_err(|e| Failure::usage(format!("{}: {}", path.display(), e)))?;
    MetricCertificate::from_file(&file).map_err(|e| Failure::usage(format!("{}: {}", path.display(), e)))
}

fn default_cert_path(sys: &SystemArgs, suffix: &str) -> PathBuf {
    let stem = sys.system.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "system".into());
    PathBuf::from(format!("{}{}.cert", stem, suffix))
}

fn cmd_metric(args: &SystemArgs, search: &SearchArgs, out: Option<&Path>, report: &mut Report) -> Result<i32, Failure> {
    let sys = load(args, report)?;
    let opts = metric_options(&sys, search)?;
    report.set("command.kind", "metric");
    report.set("degree", opts.degree);
    report.set("beta", opts.beta);
    report.set("eps", opts.eps);
    report.set("semi", opts.semi);
    let outcome = find_metric(&sys, &opts)?;
    report_summary(report, outcome.summary());
    match outcome {
        SearchOutcome::Found(cert) => {
            report.set("result", "feasible");
            let path = out.map(Path::to_path_buf).unwrap_or_else(|| default_cert_path(args, ""));
            save_certificate(&cert, &path, report)?;
            Ok(EXIT_OK)
        }
        SearchOutcome::Infeasible(_) => {
            report.set("result", "infeasible");
            Ok(EXIT_INFEASIBLE)
        }
        SearchOutcome::Numerical(_) => {
            report.set("result", "numerical-failure");
            Ok(EXIT_NUMERICAL)
        }
    }
}

fn cmd_rate(args: &SystemArgs, search: &SearchArgs, tol: f64, out: Option<&Path>, report: &mut Report) -> Result<i32, Failure> {
    let sys = load(args, report)?;
    let opts = metric_options(&sys, search)?;
    check_tol(tol)?;
    report.set("command.kind", "rate");
    report.set("degree", opts.degree);
    report.set("tol", tol);
    let res = max_rate(&sys, &opts, tol)?;
    report.set("beta_star", format!("{:.6}", res.beta));
    report.set("capped", res.capped);
    report.trace("beta", &res.trace);
    if let Some(p) = out {
        save_certificate(&res.certificate, p, report)?;
    }
    Ok(EXIT_OK)
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage("--tol must be positive"))
    }
}

fn uncertain_params(sys: &DynSystem, given: &[String], want: usize) -> Result<Vec<String>, Failure> {
    if !given.is_empty() {
        if given.len() != want {
            return Err(Failure::usage(format!("expected {} parameter(s), got {}", want, given.len())));
        }
        return Ok(given.to_vec());
    }
    let found: Vec<String> = sys
        .params
        .iter()
        .filter(|p| p.kind == ParamKind::Uncertain)
        .map(|p| p.name.clone())
        .collect();
    if found.len() == want {
        Ok(found)
    } else {
        Err(Failure::usage(format!(
            "the system has {} uncertain parameter(s); name {} with --param",
            found.len(),
            want
        )))
    }
}

fn nominal_certificate(
    sys: &DynSystem,
    opts: &MetricOptions,
    cert: Option<&Path>,
    report: &mut Report,
) -> Result<MetricCertificate, Failure> {
    match cert {
        Some(p) => {
            report.set("nominal_certificate", p.display());
            load_certificate(p)
        }
        None => match find_metric(sys, opts)? {
            SearchOutcome::Found(c) => {
                report.set("nominal_certificate", "searched");
                Ok(*c)
            }
            other => {
                report_summary(report, other.summary());
                Err(ContractionError::NoMetric(other.summary().clone()).into())
            }
        },
    }
}

fn report_uncertainty(report: &mut Report, res: &UncertaintyResult) {
    report.set("kind", res.kind.as_str());
    match &res.values {
        UncertaintyValues::Range { min, max } => {
            report.set("min", format!("{:.6}", min));
            report.set("max", format!("{:.6}", max));
        }
        UncertaintyValues::Symmetric { nominal, gamma } => {
            report.set("nominal", nominal);
            report.set("gamma", format!("{:.6}", gamma));
            report.set("min", format!("{:.6}", nominal - gamma));
            report.set("max", format!("{:.6}", nominal + gamma));
        }
        UncertaintyValues::Box { nominal, gamma } => {
            report.set("nominal", format!("{} {}", nominal.0, nominal.1));
            report.set("gamma", format!("{:.6}", gamma));
        }
        UncertaintyValues::Polytope { vertices } => {
            for (k, (a, b)) in vertices.iter().enumerate() {
                report.set(format!("vertex.{}", k + 1), format!("{:.6} {:.6}", a, b));
            }
        }
    }
    let capped: Vec<String> = res.capped.iter().map(bool::to_string).collect();
    report.set("capped", capped.join(" "));
    report.trace("gamma", &res.trace);
}

fn cmd_urange(
    args: &SystemArgs,
    search: &SearchArgs,
    cert: Option<&Path>,
    param: Option<&str>,
    tol: f64,
    report: &mut Report,
) -> Result<i32, Failure> {
    let sys = load(args, report)?;
    let opts = metric_options(&sys, search)?;
    check_tol(tol)?;
    let given: Vec<String> = param.map(|p| vec![p.to_string()]).unwrap_or_default();
    let param = uncertain_params(&sys, &given, 1)?.remove(0);
    report.set("command.kind", "urange");
    report.set("param", &param);
    let cert = nominal_certificate(&sys, &opts, cert, report)?;
    let res = nominal_uncertainty_range(&sys, &cert, &param, &opts, tol)?;
    report_uncertainty(report, &res);
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_uopt(
    args: &SystemArgs,
    search: &SearchArgs,
    param: &[String],
    boxed: bool,
    tol: f64,
    out: Option<&Path>,
    report: &mut Report,
) -> Result<i32, Failure> {
    let sys = load(args, report)?;
    let opts = metric_options(&sys, search)?;
    check_tol(tol)?;
    report.set("command.kind", "uopt");
    report.set("degree", opts.degree);
    let res = if boxed {
        let p = uncertain_params(&sys, param, 2)?;
        report.set("params", p.join(" "));
        optimize_box(&sys, &opts, (&p[0], &p[1]), tol)?
    } else {
        let p = uncertain_params(&sys, param, 1)?;
        report.set("param", &p[0]);
        optimize_symmetric_range(&sys, &opts, &p[0], tol)?
    };
    report_uncertainty(report, &res);
    if let Some(p) = out {
        save_certificate(&res.certificate, p, report)?;
    }
    Ok(EXIT_OK)
}

fn cmd_upoly(
    args: &SystemArgs,
    search: &SearchArgs,
    cert: Option<&Path>,
    param: &[String],
    tol: f64,
    report: &mut Report,
) -> Result<i32, Failure> {
    let sys = load(args, report)?;
    let opts = metric_options(&sys, search)?;
    check_tol(tol)?;
    let p = uncertain_params(&sys, param, 2)?;
    report.set("command.kind", "upoly");
    report.set("params", p.join(" "));
    let cert = nominal_certificate(&sys, &opts, cert, report)?;
    let res = polytope_inner_approx(&sys, &cert, (&p[0], &p[1]), &opts, tol)?;
    report_uncertainty(report, &res);
    Ok(EXIT_OK)
}

fn parse_region(s: &str, n: usize) -> Result<Vec<(f64, f64)>, Failure> {
    let parts: Vec<&str> = s.split(',').collect();
    let bounds = parts
        .iter()
        .map(|p| {
            let (lo, hi) = p
                .split_once(':')
                .ok_or_else(|| Failure::usage(format!("invalid region `{}`; expected lo:hi", p)))?;
            match (parse_real(lo), parse_real(hi)) {
                (Some(lo), Some(hi)) => Ok((lo, hi)),
                _ => Err(Failure::usage(format!("invalid region bounds `{}`", p))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    match bounds.len() {
        1 => Ok(vec![bounds[0]; n]),
        k if k == n => Ok(bounds),
        k => Err(Failure::usage(format!("region has {} intervals for {} states", k, n))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    args: &SystemArgs,
    cert_path: &Path,
    region: &str,
    grid: usize,
    samples: usize,
    seed: u64,
    csv: Option<&Path>,
    report: &mut Report,
) -> Result<i32, Failure> {
    let sys = load(args, report)?;
    let cert = load_certificate(cert_path)?;
    report.set("command.kind", "verify");
    report.set("certificate", cert_path.display());
    let n = cert.m.rows();
    let region = Region {
        bounds: parse_region(region, n)?,
        grid: vec![grid; n],
        samples,
        seed,
    };
    region.validate().map_err(|e| Failure::from(Error::from(e)))?;
    let mismatch = cert.rate_mismatch(&sys.nominal_field()).map_err(|e| Failure::from(Error::from(e)))?;
    let scale = 1.0
        + (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| cert.r.get(i, j).max_abs_coeff())
            .fold(0.0, f64::max);
    report.set("rate_mismatch", format!("{:.3e}", mismatch));
    let samples_v = verify::eigen_samples(&cert, &region).map_err(|e| Failure::from(Error::from(e)))?;
    let bounds = verify::reduce_samples(&samples_v);
    let fmt_pt = |p: &[f64]| p.iter().map(|v| format!("{}", v)).collect::<Vec<_>>().join(" ");
    report.set("points", bounds.points);
    report.set("min_eig_m", format!("{:.6e}", bounds.min_m));
    report.set("min_eig_m_at", fmt_pt(&bounds.min_m_at));
    report.set("max_eig_r", format!("{:.6e}", bounds.max_r));
    report.set("max_eig_r_at", fmt_pt(&bounds.max_r_at));
    if let Some(p) = csv {
        write(p, &verify::eigen_csv(&samples_v, &cert.var_names, &report.header()))?;
        report.set("csv", p.display());
    }
    let consistent = mismatch <= 1e-7 * scale;
    let pass = consistent && bounds.passes(&cert);
    report.set("self_consistent", consistent);
    report.set("result", if pass { "pass" } else { "fail" });
    Ok(if pass { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn write_trajectory(
    traj: &Trajectory,
    names: &[String],
    axes: (usize, usize),
    csv: Option<&Path>,
    svg: Option<&Path>,
    every: usize,
    report: &mut Report,
) -> Result<(), Failure> {
    let mut meta = report.header();
    meta.push(("states".into(), names.join(" ")));
    if let Some(p) = csv {
        write(p, &trajectory_csv(traj, &meta, every))?;
        report.set("csv", p.display());
    }
    if let Some(p) = svg {
        let labels = (names[axes.0].as_str(), names[axes.1].as_str());
        write(p, &trajectory_svg(traj, axes.0, axes.1, labels, &meta))?;
        report.set("svg", p.display());
    }
    Ok(())
}

fn report_trajectory(report: &mut Report, traj: &Trajectory) {
    let fmt = |x: &[f64]| x.iter().map(|v| format!("{:.6e}", v)).collect::<Vec<_>>().join(" ");
    report.set("samples", traj.len());
    report.set("t_final", traj.times.last().copied().unwrap_or(0.0));
    report.set("x_final", fmt(traj.last()));
    report.set("blew_up", traj.blew_up);
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    args: &SystemArgs,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    set: &[String],
    csv: Option<&Path>,
    svg: Option<&Path>,
    every: usize,
    report: &mut Report,
) -> Result<i32, Failure> {
    let assignments = set.iter().map(|s| parse_assignment(s)).collect::<Result<Vec<_>, _>>()?;
    // Names that are not parameters or inputs are constant overrides.
    let probe = load_definition(args, &[])?;
    let (params, consts): (Vec<_>, Vec<_>) = assignments
        .into_iter()
        .partition(|(k, _)| probe.system.params.iter().any(|p| &p.name == k));
    let def = if consts.is_empty() { probe } else { load_definition(args, &consts)? };
    report_definition(&def, report);
    let sys = def.system;
    report.set("command.kind", "simulate");
    for (k, v) in &params {
        report.set(format!("set.{}", k), v);
    }
    report.set("dt", dt);
    report.set("t_end", t_end);
    let field = sys.field_with(&sys.values_with(&params)?);
    let traj = integrate(&field, x0, t_end, dt).map_err(|e| Failure::from(Error::from(e)))?;
    report_trajectory(report, &traj);
    let axes = (0, 1.min(sys.n() - 1));
    write_trajectory(&traj, &sys.states, axes, csv, svg, every, report)?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_couple(
    args: &SystemArgs,
    eta: f64,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    csv: Option<&Path>,
    svg: Option<&Path>,
    every: usize,
    report: &mut Report,
) -> Result<i32, Failure> {
    let def = load_definition(args, &[])?;
    report_definition(&def, report);
    let get = |k: &str| {
        def.constant(k)
            .ok_or_else(|| Failure::usage(format!("{} has no constant `{}`", args.system.display(), k)))
    };
    let osc = Oscillator {
        alpha: get("alpha")?,
        omega: get("omega")?,
        k: get("k")?,
    };
    report.set("command.kind", "couple");
    report.set("eta", eta);
    report.set("dt", dt);
    report.set("t_end", t_end);
    let sys = build_unidirectional_coupling(osc, eta)?;
    let traj = integrate(&sys.field, x0, t_end, dt).map_err(|e| Failure::from(Error::from(e)))?;
    report_trajectory(report, &traj);
    let dist = sync_distance(&traj).map_err(|e| Failure::from(Error::from(e)))?;
    report.set("sync_distance_initial", format!("{:.6e}", dist[0]));
    for t in [10.0, 25.0, 50.0] {
        if t <= *traj.times.last().unwrap_or(&0.0) {
            let k = ((t / dt).round() as usize).min(dist.len() - 1);
            report.set(format!("sync_distance_t{}", t), format!("{:.6e}", dist[k]));
        }
    }
    report.set("sync_distance_final", format!("{:.6e}", dist[dist.len() - 1]));
    write_trajectory(&traj, &sys.states, (0, 2), csv, svg, every, report)?;
    Ok(EXIT_OK)
}

/// Probe list rendered one line per probe, in probe order.
fn trace_line(r: &ProbeRecord) -> String {
    format!(
        "{:.6} {} {} {:.6} {}",
        r.value,
        if r.feasible { "feasible" } else { "infeasible" },
        r.status,
        r.feasibility_ratio,
        if r.retried { "retried" } else { "first" }
    )
}
