//! Command-line front end for `ksym-core`: problem files, the built-in
//! catalog and the `ksym` subcommands.

pub mod catalog;
pub mod commands;
pub mod numeric;
pub mod problem;
pub mod report;

use std::ffi::OsString;

use clap::{Parser, Subcommand, ValueEnum};
use ksym_core::numverify::{DivergenceMethod, Prolongation};

use crate::commands::CliError;
use crate::numeric::NumericOptions;
use crate::report::{Grade, Report};

#[derive(Debug, Parser)]
#[command(name = "ksym", version, about = "Symmetries and conservation laws of first-order field theories")]
struct Cli {
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProlongationArg {
    Exact,
    Fd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Centered,
    Chain,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Poincaré–Cartan forms, energy, Hessian and regularity.
    Analyze { problem: String },
    /// Membership of a SOPDE in the Euler–Lagrange solutions, integrability, conservation.
    CheckSopde {
        problem: String,
        #[arg(long)]
        sopde: Option<String>,
        #[arg(long)]
        current: Vec<String>,
    },
    /// Cartan, Newtonoid and dynamical symmetry tests.
    CheckSymmetry {
        problem: String,
        #[arg(long)]
        field: String,
        #[arg(long)]
        sopde: Option<String>,
    },
    /// Conserved currents of a Cartan symmetry.
    Noether {
        problem: String,
        #[arg(long)]
        field: String,
        /// Compare with a named current.
        #[arg(long)]
        current: Option<String>,
        #[arg(long)]
        sopde: Option<String>,
    },
    /// Solves for the Cartan symmetry inducing a current.
    GenerateField {
        problem: String,
        #[arg(long)]
        current: String,
        /// Compare with a named or inline field.
        #[arg(long)]
        field: Option<String>,
    },
    /// Marmo–Mukunda identity with the formal SOPDE.
    Marmo {
        problem: String,
        #[arg(long)]
        field: String,
        #[arg(long)]
        sopde: Option<String>,
    },
    /// Residuals of an analytic or finite-difference solution on a grid.
    VerifyNumeric {
        problem: String,
        #[arg(long)]
        solution: Option<String>,
        #[arg(long)]
        current: Vec<String>,
        #[arg(long)]
        sopde: Option<String>,
        /// `h=<float>,extent=<a:b>[,...]`
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, value_enum, default_value = "exact")]
        prolongation: ProlongationArg,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Also solve the problem by finite differences from the solution's data.
        #[arg(long)]
        fd: bool,
    },
    /// Lists, prints or verifies the built-in problems.
    Catalog {
        name: Option<String>,
        /// Run the checks listed in each problem file.
        #[arg(long)]
        verify: bool,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub report: Option<Report>,
}

impl Outcome {
    fn error(e: impl std::fmt::Display) -> Outcome {
        Outcome { code: 2, stdout: String::new(), stderr: format!("error: {e}\n"), report: None }
    }
}

fn execute(cmd: Command) -> Result<Report, CliError> {
    Ok(match cmd {
        Command::Analyze { problem } => commands::analyze(&catalog::resolve(&problem)?),
        Command::CheckSopde { problem, sopde, current } => commands::check_sopde(&catalog::resolve(&problem)?, sopde.as_deref(), &current)?,
        Command::CheckSymmetry { problem, field, sopde } => commands::check_symmetry(&catalog::resolve(&problem)?, &field, sopde.as_deref())?,
        Command::Noether { problem, field, current, sopde } => {
            commands::noether(&catalog::resolve(&problem)?, &field, current.as_deref(), sopde.as_deref())?
        }
        Command::GenerateField { problem, current, field } => commands::generate_field(&catalog::resolve(&problem)?, &current, field.as_deref())?,
        Command::Marmo { problem, field, sopde } => commands::marmo(&catalog::resolve(&problem)?, &field, sopde.as_deref())?,
        Command::VerifyNumeric { problem, solution, current, sopde, grid, prolongation, method, tol, fd } => {
            let opts = NumericOptions {
                solution: solution.as_deref(),
                currents: &current,
                sopde: sopde.as_deref(),
                grid: grid.as_deref(),
                prolongation: match prolongation {
                    ProlongationArg::Exact => Prolongation::Exact,
                    ProlongationArg::Fd => Prolongation::FiniteDifference,
                },
                method: match method {
                    MethodArg::Auto => DivergenceMethod::Auto,
                    MethodArg::Centered => DivergenceMethod::CenteredDifference,
                    MethodArg::Chain => DivergenceMethod::ChainRule,
                },
                tol,
                fd,
            };
            numeric::verify_numeric(&catalog::resolve(&problem)?, &opts)?
        }
        Command::Catalog { name, verify } => catalog_command(name.as_deref(), verify)?,
    })
}

fn catalog_command(name: Option<&str>, verify: bool) -> Result<Report, CliError> {
    let mut r = Report::new("catalog");
    let names: Vec<&str> = match name {
        Some(n) => {
            catalog::source(n).ok_or_else(|| commands::usage(format!("no built-in problem `{n}`")))?;
            vec![n]
        }
        None => catalog::names().collect(),
    };
    for n in &names {
        let p = catalog::get(n).expect("listed entries exist");
        r.input("entry", n);
        if !verify {
            r.note(format!("{n}: {}", p.description.as_deref().unwrap_or("")));
            if name.is_some() {
                r.note(p.source.trim_end());
            }
            continue;
        }
        for check in &p.checks {
            let mut args = vec!["ksym".to_string(), check.args[0].clone(), n.to_string()];
            args.extend(check.args[1..].iter().cloned());
            let out = run(&args);
            let label = format!("{n}:{} {}", check.line, check.args.join(" "));
            let detail = format!("(exit {}, expected {})", out.code, check.expect);
            if out.code == 2 {
                r.witness(format!("{label}: {}", out.stderr.trim()));
            }
            let grade = match &out.report {
                Some(sub) if sub.verdicts.iter().all(|v| v.grade == Grade::Symbolic) => Grade::Symbolic,
                _ => Grade::Numeric,
            };
            r.verdict(&label, out.code == check.expect, grade, Some(detail));
        }
    }
    Ok(r)
}

/// Runs `ksym` with `args` (including the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new(), report: None }
            } else {
                Outcome { code, stdout: String::new(), stderr: text, report: None }
            };
        }
    };
    let plain_source = match &cli.command {
        Command::Catalog { name: Some(n), verify: false } if !cli.json => catalog::source(n),
        _ => None,
    };
    match execute(cli.command) {
        Ok(report) => {
            let stdout = match plain_source {
                Some(src) => src.to_string(),
                None if cli.json => report.to_json() + "\n",
                None => report.to_string(),
            };
            Outcome { code: report.exit_code(), stdout, stderr: String::new(), report: Some(report) }
        }
        Err(e) => Outcome::error(e),
    }
}
