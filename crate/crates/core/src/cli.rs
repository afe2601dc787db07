//! The `hlineq` command line.
//!
//! Every run echoes its resolved configuration first: as a `# config: {…}`
//! comment line in CSV mode, or under `"config"` in JSON mode. JSON floats
//! are written with 17 significant digits.
//!
//! Exit codes: 0 success, 1 internal failure, 2 invalid input, 3 when
//! `verify` records a VIOLATED-CANDIDATE trial.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::exponents::{self, Exponents, ExtReal, Perm, Spaces};
use crate::extremal::{self, ExtremalError};
use crate::harness::{self, fmt_f64, EntryDistribution, HarnessError, VerifyOptions, VerifyReport};
use crate::opnorm::{self, AscentOptions, OpNormError};
use crate::tensor::{self, MixedNormSpec, NonNegTensor};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hlineq",
    version,
    about = "Mixed norms and critical exponents for non-negative multilinear forms"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dist {
    Uniform,
    Pareto,
}

#[derive(Debug, Args)]
pub struct SpacesArg {
    /// Source-space exponents p_1,…,p_m (integers, decimals, a/b or inf).
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    pub p: Vec<ExtReal>,
}

#[derive(Debug, Args)]
pub struct SigmaArg {
    /// Nesting order σ(1),…,σ(m), 1-based; defaults to the identity.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct AscentArgs {
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    #[arg(long, env = "HL_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// δ of an exponent tuple.
    Delta {
        #[command(flatten)]
        p: SpacesArg,
    },
    /// Componentwise-minimal admissible q for (p, σ).
    Critical {
        #[command(flatten)]
        p: SpacesArg,
        #[command(flatten)]
        sigma: SigmaArg,
    },
    /// Whether q is admissible for (p, σ).
    Admissible {
        #[command(flatten)]
        p: SpacesArg,
        #[command(flatten)]
        sigma: SigmaArg,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<ExtReal>,
    },
    /// Mixed norm of a tensor file.
    MixedNorm {
        #[arg(long)]
        tensor: PathBuf,
        #[command(flatten)]
        sigma: SigmaArg,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<ExtReal>,
    },
    /// Operator-norm estimate of a tensor file.
    Opnorm {
        #[arg(long)]
        tensor: PathBuf,
        #[command(flatten)]
        p: SpacesArg,
        #[command(flatten)]
        ascent: AscentArgs,
        #[command(flatten)]
        seed: SeedArg,
        /// Also run the brute-force grid oracle at this resolution.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Collapse the last axis: A = Σ_j D^{δ(p_m)} on r_i = p_i/δ(p_m).
    Reduce {
        #[arg(long)]
        tensor: PathBuf,
        #[command(flatten)]
        p: SpacesArg,
        /// Write the reduced tensor here in the tensor JSON format.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagonal-family ratios at the critical exponents.
    Sharpness {
        #[command(flatten)]
        p: SpacesArg,
        #[command(flatten)]
        sigma: SigmaArg,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Extremal-family ratios for an inadmissible q.
    Falsify {
        #[command(flatten)]
        p: SpacesArg,
        #[command(flatten)]
        sigma: SigmaArg,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<ExtReal>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Random sufficiency sweep for an admissible q (critical q by default).
    Verify {
        #[command(flatten)]
        p: SpacesArg,
        #[command(flatten)]
        sigma: SigmaArg,
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<ExtReal>>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        max_dim: usize,
        #[arg(long, value_enum, default_value_t = Dist::Uniform)]
        dist: Dist,
        /// Tail index of the Pareto entry distribution.
        #[arg(long, default_value_t = 1.5)]
        pareto_alpha: f64,
        #[command(flatten)]
        ascent: AscentArgs,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Isotropic exponent check (ρ,…,ρ) in the first case.
    Bayart {
        #[command(flatten)]
        p: SpacesArg,
        #[arg(long)]
        rho: ExtReal,
    },
}

/// Fully resolved configuration, echoed at the top of every output.
#[derive(Debug, Default, Serialize)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Spaces>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Perm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Exponents>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<ExtReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tensor: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<EntryDistribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

/// A single-line diagnostic with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn invalid(flag: &str, err: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_INVALID,
            message: format!("{flag}: {err}"),
        }
    }

    fn internal(err: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_FAILURE,
            message: err.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::internal(e)
    }
}

type CliResult<T> = Result<T, CliError>;

/// Attributes a harness error to the flag that caused it.
fn harness_error(e: HarnessError) -> CliError {
    match &e {
        HarnessError::Inadmissible { .. } | HarnessError::Admissible => CliError::invalid("--q", e),
        HarnessError::SecondCase { .. } => CliError::invalid("--p", e),
        HarnessError::NoSizes | HarnessError::ZeroSize => CliError::invalid("--n", e),
        HarnessError::ZeroDim => CliError::invalid("--max-dim", e),
        HarnessError::Length(_) => CliError::invalid("--p/--sigma/--q", e),
        HarnessError::Extremal(ExtremalError::TooLarge { .. }) => CliError::invalid("--n", e),
        HarnessError::OpNorm(OpNormError::NoRestarts) => CliError::invalid("--restarts", e),
        _ => CliError::internal(e),
    }
}

fn opnorm_error(e: OpNormError) -> CliError {
    match &e {
        OpNormError::OrderMismatch { .. } => CliError::invalid("--p", e),
        OpNormError::NoRestarts => CliError::invalid("--restarts", e),
        OpNormError::GridTooLarge { .. } | OpNormError::ZeroResolution => {
            CliError::invalid("--grid", e)
        }
        _ => CliError::internal(e),
    }
}

fn spaces(arg: &SpacesArg) -> CliResult<Spaces> {
    Spaces::new(arg.p.clone()).map_err(|e| CliError::invalid("--p", e))
}

fn exponents_arg(q: &[ExtReal]) -> CliResult<Exponents> {
    Exponents::new(q.to_vec()).map_err(|e| CliError::invalid("--q", e))
}

fn sigma(arg: &SigmaArg, m: usize) -> CliResult<Perm> {
    match &arg.sigma {
        None => Ok(Perm::identity(m)),
        Some(s) => {
            if s.len() != m {
                return Err(CliError::invalid(
                    "--sigma",
                    format!("has {} entries, expected {m}", s.len()),
                ));
            }
            Perm::from_one_based(s).map_err(|e| CliError::invalid("--sigma", e))
        }
    }
}

fn same_len(flag: &str, got: usize, expected: usize) -> CliResult<()> {
    if got != expected {
        return Err(CliError::invalid(
            flag,
            format!("has {got} entries, expected {expected}"),
        ));
    }
    Ok(())
}

fn load_tensor(path: &PathBuf) -> CliResult<NonNegTensor> {
    NonNegTensor::from_json_file(path).map_err(|e| CliError::invalid("--tensor", e))
}

fn ascent_options(a: &AscentArgs, seed: u64) -> CliResult<AscentOptions> {
    if a.restarts == 0 {
        return Err(CliError::invalid("--restarts", "must be at least 1"));
    }
    if !(a.tol.is_finite() && a.tol >= 0.0) {
        return Err(CliError::invalid("--tol", "must be finite and >= 0"));
    }
    Ok(AscentOptions {
        restarts: a.restarts,
        tol: a.tol,
        max_iter: a.max_iter,
        seed,
    })
}

/// JSON formatter writing every float with 17 significant digits.
struct SigFigs;

impl serde_json::ser::Formatter for SigFigs {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Serializes `value` as one line of JSON with 17-significant-digit floats.
pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigs);
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// What a subcommand produced, before formatting.
struct Output {
    config: RunConfig,
    json: serde_json::Value,
    csv: String,
    code: i32,
}

impl Output {
    fn new(config: RunConfig, json: serde_json::Value, csv: String) -> Self {
        Output {
            config,
            json,
            csv,
            code: EXIT_OK,
        }
    }
}

fn json_of<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("result types serialize")
}

fn list(v: &[ExtReal]) -> String {
    v.iter()
        .map(ExtReal::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> Result<(), HarnessError>) -> CliResult<String> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(CliError::internal)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

fn execute(command: &Command, format: Format) -> CliResult<Output> {
    let mut config = RunConfig {
        format: Some(format),
        ..Default::default()
    };
    match command {
        Command::Delta { p } => {
            let p = spaces(p)?;
            let d = exponents::delta(p.as_slice()).map_err(|e| CliError::invalid("--p", e))?;
            config.subcommand = "delta";
            config.p = Some(p);
            Ok(Output::new(config, json!({ "delta": d }), format!("{d}\n")))
        }
        Command::Critical { p, sigma: s } => {
            let p = spaces(p)?;
            let s = sigma(s, p.len())?;
            let q =
                exponents::critical_exponents(&p, &s).map_err(|e| CliError::invalid("--p", e))?;
            let csv = format!("{}\n", list(q.as_slice()));
            config.subcommand = "critical";
            config.p = Some(p);
            config.sigma = Some(s);
            Ok(Output::new(config, json!({ "q": q }), csv))
        }
        Command::Admissible { p, sigma: s, q } => {
            let p = spaces(p)?;
            let s = sigma(s, p.len())?;
            let q = exponents_arg(q)?;
            same_len("--q", q.len(), p.len())?;
            let verdict =
                exponents::admissible(&p, &s, &q).map_err(|e| CliError::invalid("--q", e))?;
            let json = json!({
                "admissible": verdict.is_admissible(),
                "k": verdict.failing_level().map(|k| k + 1),
            });
            config.subcommand = "admissible";
            config.p = Some(p);
            config.sigma = Some(s);
            config.q = Some(q);
            Ok(Output::new(config, json, format!("{verdict}\n")))
        }
        Command::MixedNorm {
            tensor: path,
            sigma: s,
            q,
        } => {
            let a = load_tensor(path)?;
            let q = exponents_arg(q)?;
            same_len("--q", q.len(), a.order())?;
            let s = sigma(s, a.order())?;
            let spec = MixedNormSpec::new(s.clone(), q.clone())
                .map_err(|e| CliError::invalid("--q", e))?;
            let v = tensor::mixed_norm(&a, &spec).map_err(CliError::internal)?;
            config.subcommand = "mixed-norm";
            config.tensor = Some(path.display().to_string());
            config.sigma = Some(s);
            config.q = Some(q);
            Ok(Output::new(
                config,
                json!({ "value": v }),
                format!("{}\n", fmt_f64(v)),
            ))
        }
        Command::Opnorm {
            tensor: path,
            p,
            ascent,
            seed,
            grid,
        } => {
            let a = load_tensor(path)?;
            let p = spaces(p)?;
            same_len("--p", p.len(), a.order())?;
            let opts = ascent_options(ascent, seed.seed)?;
            let est = opnorm::alternating_ascent(&a, &p, &opts).map_err(opnorm_error)?;
            let oracle = grid
                .map(|res| opnorm::grid_oracle(&a, &p, res, opnorm::DEFAULT_GRID_CAP))
                .transpose()
                .map_err(opnorm_error)?;
            let mut csv = String::from("value,kind,iterations,restarts_used,converged,seed");
            if oracle.is_some() {
                csv.push_str(",oracle_value,oracle_error_bound,oracle_evaluations");
            }
            csv.push('\n');
            let kind = match est.kind {
                opnorm::EstimateKind::Exact => "exact",
                opnorm::EstimateKind::LowerBound => "lower_bound",
            };
            csv.push_str(&format!(
                "{},{kind},{},{},{},{}",
                fmt_f64(est.value),
                est.iterations,
                est.restarts_used,
                est.converged,
                est.seed
            ));
            if let Some(o) = &oracle {
                csv.push_str(&format!(
                    ",{},{},{}",
                    fmt_f64(o.estimate.value),
                    fmt_f64(o.error_bound),
                    o.evaluations
                ));
            }
            csv.push('\n');
            let json = json!({ "estimate": est, "oracle": oracle });
            config.subcommand = "opnorm";
            config.tensor = Some(path.display().to_string());
            config.p = Some(p);
            config.seed = Some(opts.seed);
            config.restarts = Some(opts.restarts);
            config.tol = Some(opts.tol);
            config.max_iter = Some(opts.max_iter);
            config.grid = *grid;
            Ok(Output::new(config, json, csv))
        }
        Command::Reduce {
            tensor: path,
            p,
            out,
        } => {
            let d = load_tensor(path)?;
            let p = spaces(p)?;
            same_len("--p", p.len(), d.order())?;
            let red = extremal::reduce(&d, &p).map_err(|e| CliError::invalid("--p", e))?;
            if let Some(out) = out {
                std::fs::write(out, red.tensor.to_json_string() + "\n")
                    .map_err(|e| CliError::invalid("--out", e))?;
            }
            let mut csv = format!(
                "# r: {}\n# power: {}\n",
                list(red.spaces.as_slice()),
                red.power
            );
            let header: Vec<String> = (1..=red.tensor.order()).map(|k| format!("j{k}")).collect();
            csv.push_str(&header.join(","));
            csv.push_str(if header.is_empty() {
                "value\n"
            } else {
                ",value\n"
            });
            let shape = red.tensor.shape().to_vec();
            for (flat, v) in red.tensor.data().iter().enumerate() {
                let idx = tensor::unravel(flat, &shape);
                for j in idx {
                    csv.push_str(&format!("{},", j + 1));
                }
                csv.push_str(&fmt_f64(*v));
                csv.push('\n');
            }
            config.subcommand = "reduce";
            config.tensor = Some(path.display().to_string());
            config.p = Some(p);
            Ok(Output::new(config, json_of(&red), csv))
        }
        Command::Sharpness { p, sigma: s, n } => {
            let p = spaces(p)?;
            let s = sigma(s, p.len())?;
            let rows = harness::sharpness_experiment(&p, &s, n).map_err(harness_error)?;
            let csv = csv_string(|b| harness::write_sharpness_csv(&rows, b))?;
            config.subcommand = "sharpness";
            config.p = Some(p);
            config.sigma = Some(s);
            config.n = Some(n.clone());
            Ok(Output::new(config, json!({ "rows": rows }), csv))
        }
        Command::Falsify { p, sigma: s, q, n } => {
            let p = spaces(p)?;
            let s = sigma(s, p.len())?;
            let q = exponents_arg(q)?;
            same_len("--q", q.len(), p.len())?;
            let f = harness::falsify(&p, &s, &q, n).map_err(harness_error)?;
            let mut csv = format!("# k={} slope={}\n", f.level + 1, fmt_f64(f.slope));
            csv.push_str(&csv_string(|b| harness::write_sharpness_csv(&f.rows, b))?);
            let json = json!({
                "k": f.level + 1,
                "slope": f.slope,
                "pin_count": f.family.pin_count,
                "rows": f.rows,
            });
            config.subcommand = "falsify";
            config.p = Some(p);
            config.sigma = Some(s);
            config.q = Some(q);
            config.n = Some(n.clone());
            Ok(Output::new(config, json, csv))
        }
        Command::Verify {
            p,
            sigma: s,
            q,
            trials,
            max_dim,
            dist,
            pareto_alpha,
            ascent,
            seed,
        } => {
            let p = spaces(p)?;
            let s = sigma(s, p.len())?;
            let q = match q {
                Some(q) => {
                    let q = exponents_arg(q)?;
                    same_len("--q", q.len(), p.len())?;
                    q
                }
                None => exponents::critical_exponents(&p, &s)
                    .map_err(|e| CliError::invalid("--p", e))?,
            };
            let distribution = match dist {
                Dist::Uniform => EntryDistribution::Uniform,
                Dist::Pareto => {
                    if !(pareto_alpha.is_finite() && *pareto_alpha > 0.0) {
                        return Err(CliError::invalid(
                            "--pareto-alpha",
                            "must be finite and > 0",
                        ));
                    }
                    EntryDistribution::Pareto {
                        alpha: *pareto_alpha,
                    }
                }
            };
            let opts = VerifyOptions {
                trials: *trials,
                max_dim: *max_dim,
                seed: seed.seed,
                ascent: ascent_options(ascent, seed.seed)?,
                distribution,
            };
            let report = harness::verify_random(&p, &s, &q, &opts).map_err(harness_error)?;
            let mut csv = csv_string(|b| harness::write_trials_csv(&report.records, b))?;
            csv.push_str(&format!(
                "# summary: trials={} holds={} inconclusive={} violated={} worst_ratio={}\n",
                report.trials,
                report.holds,
                report.inconclusive,
                report.violated,
                fmt_f64(report.worst_ratio)
            ));
            let code = verify_exit_code(&report);
            config.subcommand = "verify";
            config.p = Some(p);
            config.sigma = Some(s);
            config.q = Some(q);
            config.trials = Some(opts.trials);
            config.max_dim = Some(opts.max_dim);
            config.dist = Some(opts.distribution);
            config.seed = Some(opts.seed);
            config.restarts = Some(opts.ascent.restarts);
            config.tol = Some(opts.ascent.tol);
            config.max_iter = Some(opts.ascent.max_iter);
            let mut out = Output::new(config, json_of(&report), csv);
            out.code = code;
            Ok(out)
        }
        Command::Bayart { p, rho } => {
            let p = spaces(p)?;
            let holds = harness::bayart_check(&p, rho).map_err(harness_error)?;
            let d = exponents::delta(p.as_slice()).map_err(|e| CliError::invalid("--p", e))?;
            config.subcommand = "bayart";
            config.p = Some(p);
            config.rho = Some(rho.clone());
            Ok(Output::new(
                config,
                json!({ "admissible": holds, "delta": d }),
                format!("{holds}\n"),
            ))
        }
    }
}

/// 3 when any trial is a violation candidate, so CI can gate on it.
pub fn verify_exit_code(report: &VerifyReport) -> i32 {
    if report.violated > 0 {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

fn render(out: &Output, format: Format) -> String {
    match format {
        Format::Csv => format!("# config: {}\n{}", to_json_line(&out.config), out.csv),
        Format::Json => {
            let doc = json!({ "config": json_of(&out.config), "result": out.json });
            format!("{}\n", to_json_line(&doc))
        }
    }
}

/// Parses `args`, runs the subcommand, writes results to `out` and
/// diagnostics to stderr. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command, cli.format) {
        Ok(result) => {
            let text = render(&result, cli.format);
            if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                eprintln!("error: {e}");
                return EXIT_FAILURE;
            }
            result.code
        }
        Err(e) => {
            eprintln!("error: {}", e.message.replace('\n', " "));
            e.code
        }
    }
}
