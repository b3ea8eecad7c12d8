//! Command-line front end.
//!
//! Every measure or coupling argument accepts either inline JSON (anything
//! starting with `{`) or a path to a JSON file. Results go to stdout as one
//! JSON document (or CSV for sweeps); errors go to stderr as one JSON object.
//!
//! Exit codes: 0 success, 2 marginals not in convex order, 3 malformed
//! expression or JSON, 4 numerical failure, 64 usage or input error.

use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::adapted::aw_distance;
use crate::costexpr::PayoffExpr;
use crate::error::Error;
use crate::io::{
    to_json, CouplingJson, ExperimentJson, MeasureJson, SolveReportJson, VerdictJson,
};
use crate::lp::Sense;
use crate::measures::{check_convex_order, w1, MeasurePair, ORDER_TOL};
use crate::mot::{project_to_martingale_set, solve_mot, MotProblem};
use crate::stability::{
    emit_report, lower_hemi_sweep, threads_from_env, upper_hemi_sweep, value_continuity_sweep,
    ReportFormat, SweepOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_IN_ORDER: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "motlab", version, about = "Discrete martingale optimal transport toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether mu1 precedes mu2 in convex order.
    CheckOrder {
        #[arg(long)]
        mu1: String,
        #[arg(long)]
        mu2: String,
    },
    /// 1-Wasserstein distance between two measures.
    W1 {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
    },
    /// Solve a martingale transport problem.
    Solve {
        #[arg(long)]
        mu1: String,
        #[arg(long)]
        mu2: String,
        /// Payoff expression in x1 and x2.
        #[arg(long)]
        cost: String,
        #[arg(long, value_enum, default_value_t = SenseArg::Max)]
        sense: SenseArg,
    },
    /// Adapted 1-Wasserstein distance between two couplings.
    Aw {
        #[arg(long)]
        q: String,
        #[arg(long)]
        q2: String,
    },
    /// W1 projection of a coupling onto the martingale couplings of a pair.
    Project {
        #[arg(long)]
        q: String,
        #[arg(long)]
        mu1: String,
        #[arg(long)]
        mu2: String,
    },
    /// Value-continuity sweep for an experiment.
    Sweep {
        #[arg(long)]
        spec: String,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Terminal tolerance for the verdicts.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// Hemicontinuity sweep for an experiment.
    Hemi {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        spec: String,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SenseArg {
    Max,
    Min,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Upper,
    Lower,
}

enum Failure {
    Lib(Error),
    Json { argument: String, error: serde_json::Error },
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Json { .. } => EXIT_PARSE,
            Failure::Input(_) => EXIT_USAGE,
            Failure::Lib(e) => match e {
                Error::NotInConvexOrder { .. } => EXIT_NOT_IN_ORDER,
                Error::Parse(_) => EXIT_PARSE,
                Error::IterationLimit { .. }
                | Error::Numerical(_)
                | Error::Eval(_)
                | Error::SchemeViolation(_) => EXIT_NUMERICAL,
                Error::EmptySupport
                | Error::NonFinite(_)
                | Error::InvalidInput(_)
                | Error::DimensionMismatch(_)
                | Error::NotInMartingaleSet { .. } => EXIT_USAGE,
            },
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Failure::Json { argument, error } => json!({
                "error": "json_parse",
                "argument": argument,
                "line": error.line(),
                "column": error.column(),
                "message": error.to_string(),
            }),
            Failure::Input(message) => json!({"error": "usage", "message": message}),
            Failure::Lib(e) => {
                let mut v = json!({"error": error_kind(e), "message": e.to_string()});
                match e {
                    Error::NotInConvexOrder { verdict } => {
                        v["verdict"] = serde_json::to_value(VerdictJson::from(verdict))
                            .expect("plain data serializes");
                    }
                    Error::Parse(p) => v["column"] = json!(p.column),
                    Error::IterationLimit { pivots } => v["pivots"] = json!(pivots),
                    Error::NotInMartingaleSet { residual } => v["residual"] = json!(residual),
                    _ => {}
                }
                v
            }
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::EmptySupport => "empty_support",
        Error::NonFinite(_) => "non_finite",
        Error::InvalidInput(_) => "invalid_input",
        Error::DimensionMismatch(_) => "dimension_mismatch",
        Error::IterationLimit { .. } => "iteration_limit",
        Error::NotInConvexOrder { .. } => "not_in_convex_order",
        Error::NotInMartingaleSet { .. } => "not_in_martingale_set",
        Error::Parse(_) => "expression_parse",
        Error::Eval(_) => "evaluation",
        Error::SchemeViolation(_) => "scheme_violation",
        Error::Numerical(_) => "numerical",
    }
}

/// Inline JSON if the argument starts with `{`, otherwise a file path.
fn load<T: DeserializeOwned>(argument: &str, value: &str) -> Result<T, Failure> {
    let text = if value.trim_start().starts_with('{') {
        value.to_owned()
    } else {
        std::fs::read_to_string(Path::new(value))
            .map_err(|e| Failure::Input(format!("--{argument}: cannot read {value:?}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|error| Failure::Json {
        argument: argument.to_owned(),
        error,
    })
}

fn pair(mu1: &str, mu2: &str) -> Result<MeasurePair<f64>, Failure> {
    Ok(MeasurePair::new(
        load::<MeasureJson>("mu1", mu1)?.to_measure()?,
        load::<MeasureJson>("mu2", mu2)?.to_measure()?,
    ))
}

fn sweep_options(tolerance: f64) -> Result<SweepOptions, Failure> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Failure::Input(format!("--tolerance must be a nonnegative number, got {tolerance}")));
    }
    Ok(SweepOptions {
        threads: threads_from_env()?,
        tolerance,
    })
}

fn format(f: FormatArg) -> ReportFormat {
    match f {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    }
}

fn document(v: &impl serde::Serialize) -> Vec<u8> {
    let mut s = to_json(v);
    s.push('\n');
    s.into_bytes()
}

fn execute(command: Command) -> Result<Vec<u8>, Failure> {
    match command {
        Command::CheckOrder { mu1, mu2 } => {
            let p = pair(&mu1, &mu2)?;
            let verdict = check_convex_order(&p.mu1, &p.mu2, &ORDER_TOL);
            Ok(document(&VerdictJson::from(&verdict)))
        }
        Command::W1 { mu, nu } => {
            let a = load::<MeasureJson>("mu", &mu)?.to_measure()?;
            let b = load::<MeasureJson>("nu", &nu)?.to_measure()?;
            Ok(document(&json!({"w1": w1(&a, &b)})))
        }
        Command::Solve { mu1, mu2, cost, sense } => {
            let p = pair(&mu1, &mu2)?;
            let payoff = PayoffExpr::parse(&cost).map_err(Error::from)?;
            let sense = match sense {
                SenseArg::Max => Sense::Max,
                SenseArg::Min => Sense::Min,
            };
            let report = solve_mot(&MotProblem::new(p, payoff, sense))?;
            Ok(document(&SolveReportJson::from(&report)))
        }
        Command::Aw { q, q2 } => {
            let a = load::<CouplingJson>("q", &q)?.to_coupling()?;
            let b = load::<CouplingJson>("q2", &q2)?.to_coupling()?;
            Ok(document(&json!({"aw": aw_distance(&a, &b)?})))
        }
        Command::Project { q, mu1, mu2 } => {
            let q = load::<CouplingJson>("q", &q)?.to_coupling()?;
            let p = pair(&mu1, &mu2)?;
            let proj = project_to_martingale_set(&q, &p)?;
            Ok(document(&json!({
                "distance": proj.distance,
                "nearest": CouplingJson::from(&proj.nearest),
            })))
        }
        Command::Sweep { spec, format: f, tolerance } => {
            let e = load::<ExperimentJson>("spec", &spec)?.to_experiment()?;
            let opts = sweep_options(tolerance)?;
            let r = value_continuity_sweep(&e.base, &e.payoff, e.sense, &e.scheme, &opts)?;
            Ok(emit_report(&r, format(f)))
        }
        Command::Hemi { mode, spec, format: f, tolerance } => {
            let e = load::<ExperimentJson>("spec", &spec)?.to_experiment()?;
            let opts = sweep_options(tolerance)?;
            let r = match mode {
                ModeArg::Upper => upper_hemi_sweep(&e.base, &e.payoff, e.sense, &e.scheme, &opts)?,
                ModeArg::Lower => {
                    let target = match e.target {
                        Some(t) => t,
                        None => {
                            let p = MotProblem::new(e.base.clone(), e.payoff.clone(), e.sense);
                            solve_mot(&p)?.optimizer
                        }
                    };
                    lower_hemi_sweep(&e.base, &target, &e.scheme, &opts)?
                }
            };
            Ok(emit_report(&r, format(f)))
        }
    }
}

/// Runs one invocation. `argv[0]` is the program name.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(bytes) => {
            let _ = stdout.write_all(&bytes);
            EXIT_OK
        }
        Err(f) => {
            let _ = stderr.write_all(&document(&f.to_json()));
            f.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("motlab").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&[]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["w1", "--mu", "{}"]).0, EXIT_USAGE);
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("check-order"));
    }

    #[test]
    fn w1_inline() {
        let (code, out, err) = call(&[
            "w1",
            "--mu",
            r#"{"atoms":[0],"weights":[1]}"#,
            "--nu",
            r#"{"atoms":[1,3],"weights":[0.5,0.5]}"#,
        ]);
        assert_eq!((code, err.as_str()), (0, ""));
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["w1"], 2.0);
    }

    #[test]
    fn malformed_json_reports_position() {
        let (code, _, err) = call(&["w1", "--mu", r#"{"atoms":[0,,]}"#, "--nu", r#"{"atoms":[1],"weights":[1]}"#]);
        assert_eq!(code, EXIT_PARSE);
        let v: Value = serde_json::from_str(&err).unwrap();
        assert_eq!(v["argument"], "mu");
        assert_eq!(v["column"], 13);
    }

    #[test]
    fn missing_file_is_usage_error() {
        let (code, _, err) = call(&["w1", "--mu", "/nonexistent/m.json", "--nu", "/nonexistent/n.json"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("cannot read"));
    }

    #[test]
    fn invalid_measure_is_usage_error() {
        let (code, _, err) = call(&["w1", "--mu", r#"{"atoms":[0],"weights":[-1]}"#, "--nu", r#"{"atoms":[1],"weights":[1]}"#]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("invalid_input"));
    }
}
