//! Command-line driver.
//!
//! Exit codes: 0 success, 2 a certificate failed, 3 configuration or
//! validation error, 4 runtime divergence.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::certificate::{CheckId, Certificate, Verdict};
use crate::document::{load_validate, parse_table, parse_value, set_path, validate_table};
use crate::error::{Error, Result};
use crate::intrinsic::requirements_audit;
use crate::pipeline::{run_certify, threshold_certificate, Check};
use crate::report::{build_report, emit_trajectory_csv, render, write_report, Report, ReportFormat};
use crate::scenario::Scenario;
use crate::simulator::{invariance_audit, simulate, theorem1_harness};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATE_FAILED: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "invlab", version, about = "Safe-set invariance simulator and certificate checker")]
pub struct Cli {
    /// Overrides the scenario seed.
    #[arg(long, global = true, env = "INVLAB_SEED")]
    pub seed: Option<u64>,
    /// Also write the report to this path.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Machine-readable JSON instead of the text table.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the scenario under one policy.
    Simulate {
        scenario: PathBuf,
        /// Policy id; defaults to the first policy in the file.
        #[arg(long)]
        policy: Option<String>,
        /// Write the trajectory as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run assumption and lemma checks.
    Certify {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "a1,a2,a3,h1,h2,lemma1")]
        checks: Vec<String>,
    },
    /// Print kappa* and T_kappa.
    Threshold { scenario: PathBuf },
    /// Run the impossibility harness over the policy suite.
    Harness { scenario: PathBuf },
    /// Audit requirements R1 to R4 and the declared strategy.
    Requirements { scenario: PathBuf },
    /// Re-run the harness for each value of one scenario parameter.
    Sweep {
        scenario: PathBuf,
        /// Dotted path such as `capability.rate` or `control.u_max`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. } | Error::BoundViolation { .. } => EXIT_DIVERGENCE,
        Error::Bracket(_) => EXIT_CERTIFICATE_FAILED,
        _ => EXIT_CONFIG,
    }
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<Scenario> {
    let mut sc = load_validate(path)?.build()?;
    if let Some(s) = seed {
        sc.numerics.seed = s;
    }
    Ok(sc)
}

struct Outcome {
    text: String,
    report: Option<Report>,
    code: i32,
}

fn certificates_outcome(cli: &Cli, sc: &Scenario, certs: Vec<Certificate>) -> Result<Outcome> {
    let failed = certs.iter().any(Certificate::failed);
    let report = build_report(Some(&sc.name), Some(sc.numerics.seed), certs)?;
    Ok(Outcome {
        text: render(&report, format(cli)),
        report: Some(report),
        code: if failed { EXIT_CERTIFICATE_FAILED } else { EXIT_OK },
    })
}

fn format(cli: &Cli) -> ReportFormat {
    if cli.json {
        ReportFormat::MachineJson
    } else {
        ReportFormat::HumanText
    }
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate { scenario, policy, out } => {
            let sc = load(scenario, cli.seed)?;
            let p = match policy {
                Some(id) => sc.policy(id)?,
                None => sc.default_policy(),
            };
            let traj = simulate(&sc, p, &sc.initial_state, sc.numerics.horizon, sc.numerics.dt)?;
            if let Some(path) = out {
                emit_trajectory_csv(&traj, path)?;
            }
            let audit = invariance_audit(&traj)?;
            let mut c = Certificate::new(
                CheckId::R1,
                if audit.invariant { Verdict::Pass } else { Verdict::Fail },
                match audit.violation_time {
                    None => format!("stays in S under '{}' over horizon {}", p.id(), sc.numerics.horizon),
                    Some(t) => format!("leaves S under '{}' at t = {t:.9}", p.id()),
                },
            )
            .with_subject("invariance");
            c.evidence("samples", traj.samples.len())
                .evidence("min_margin", audit.min_margin)
                .evidence("min_margin_time", audit.min_margin_time)
                .evidence("violation_time", json!(audit.violation_time))
                .evidence("events", serde_json::to_value(&traj.events).unwrap_or_default());
            c.param("policy", p.id()).param("dt", traj.dt).param("horizon", sc.numerics.horizon);
            // leaving S is an observation of the run, not a failed check
            let mut o = certificates_outcome(cli, &sc, vec![c])?;
            o.code = EXIT_OK;
            Ok(o)
        }
        Command::Certify { scenario, checks } => {
            let checks = checks.iter().map(|s| s.parse::<Check>()).collect::<Result<Vec<_>>>()?;
            let sc = load(scenario, cli.seed)?;
            let certs = run_certify(&sc, &checks)?;
            certificates_outcome(cli, &sc, certs)
        }
        Command::Threshold { scenario } => {
            let sc = load(scenario, cli.seed)?;
            let c = threshold_certificate(&sc)?;
            let mut o = certificates_outcome(cli, &sc, vec![c.clone()])?;
            if !cli.json {
                let get = |k: &str| c.evidence.get(k).cloned().unwrap_or(serde_json::Value::Null);
                o.text = format!("kappa* = {}\nT_kappa = {}\n{}", get("kappa_star"), get("t_kappa"), o.text);
            }
            Ok(o)
        }
        Command::Harness { scenario } => {
            let sc = load(scenario, cli.seed)?;
            let report = theorem1_harness(&sc, &sc.policies)?;
            certificates_outcome(cli, &sc, report.certificates())
        }
        Command::Requirements { scenario } => {
            let sc = load(scenario, cli.seed)?;
            let certs = requirements_audit(&sc)?;
            certificates_outcome(cli, &sc, certs)
        }
        Command::Sweep { scenario, param, values } => {
            let text = std::fs::read_to_string(scenario).map_err(|e| Error::Io(format!("{}: {e}", scenario.display())))?;
            let base = parse_table(&text)?;
            let mut certs = vec![];
            let mut name = String::new();
            let mut seed = None;
            for v in values {
                let mut table = base.clone();
                set_path(&mut table, param, parse_value(v.trim())?)?;
                let mut sc = validate_table(table)?.build()?;
                if let Some(s) = cli.seed {
                    sc.numerics.seed = s;
                }
                name = sc.name.clone();
                seed = Some(sc.numerics.seed);
                let mut c = theorem1_harness(&sc, &sc.policies)?
                    .theorem_certificate()
                    .with_subject(format!("{param}={}", v.trim()));
                c.param(param, v.trim());
                certs.push(c);
            }
            let failed = certs.iter().any(Certificate::failed);
            let report = build_report(Some(&name), seed, certs)?;
            Ok(Outcome {
                text: render(&report, format(cli)),
                report: Some(report),
                code: if failed { EXIT_CERTIFICATE_FAILED } else { EXIT_OK },
            })
        }
    }
}

/// Parses `argv` (including the program name), runs and returns the exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let _ = write!(out, "{}", o.text);
            if let (Some(path), Some(report)) = (&cli.report, &o.report) {
                if let Err(e) = write_report(report, format(&cli), path) {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_CONFIG;
                }
            }
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main_exit_code() -> i32 {
    run_cli(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}
