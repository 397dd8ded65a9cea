use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use sparsedecomp_core::harness::budget_from_env;
use sparsedecomp_core::io::{read_json, read_matrix, read_vector, write_json};
use sparsedecomp_core::rip::rip_report_with_kprime;
use sparsedecomp_core::{
    audit_verdict, decompose, recover, verify_decomposition, verify_recovery_condition,
    DecompositionError, DecompositionInput, ExperimentConfig, HarnessError, RecoveryError,
    RecoveryVerdict, RipOptions,
};

/// Exact k-sparse decomposition, RIP constants and basis-pursuit recovery.
#[derive(Debug, Parser)]
#[command(name = "sparsedecomp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write `v` as a convex combination of k-sparse vectors with equal l1 norm.
    Decompose {
        /// JSON array holding `v`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        /// Capacity `C`; defaults to `max(||v||_1, k ||v||_inf)`.
        #[arg(long)]
        capacity: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact `delta_k` and `theta_{k,k'}` by enumeration.
    Rip {
        /// CSV (or JSON) matrix.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        /// Defaults to `k`.
        #[arg(long)]
        kprime: Option<usize>,
    },
    /// Solve `min ||g||_1 s.t. Phi g = y`.
    Recover {
        #[arg(long)]
        matrix: PathBuf,
        /// JSON array of measurements.
        #[arg(long)]
        y: PathBuf,
        /// Signal to compare against; a miss exits with status 1.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = sparsedecomp_core::recovery::DEFAULT_RECOVERY_TOL)]
        tol: f64,
    },
    /// Run the recovery experiment, or audit an existing report when only
    /// `--report` is given.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

/// Check failures exit 1, everything else the user supplied wrongly exits 2.
enum Failure {
    Check(String),
    Input(String),
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn print_json(value: &impl serde::Serialize) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report types serialize")
    );
}

fn rip_options() -> RipOptions {
    RipOptions {
        budget: budget_from_env().unwrap_or_default(),
        ..Default::default()
    }
}

fn run_decompose(input: &Path, k: usize, capacity: Option<f64>, out: &Path) -> Outcome {
    let v = read_vector(input).map_err(Failure::input)?;
    let problem = match capacity {
        Some(c) => DecompositionInput::new(v, k, c),
        None => DecompositionInput::with_default_capacity(v, k),
    }
    .map_err(Failure::input)?;
    let d = decompose(&problem).map_err(|e| match e {
        DecompositionError::PreconditionViolated(_) | DecompositionError::Vector(_) => {
            Failure::input(e)
        }
        _ => Failure::Check(e.to_string()),
    })?;
    write_json(out, &d).map_err(Failure::input)?;
    let report = verify_decomposition(&d);
    print_json(
        &json!({ "terms": d.terms.len(), "supports": d.distinct_supports(), "verification": report }),
    );
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check("decomposition failed verification".into()))
    }
}

fn run_rip(matrix: &Path, k: usize, kprime: Option<usize>) -> Outcome {
    let phi = read_matrix(matrix).map_err(Failure::input)?;
    let report = rip_report_with_kprime(&phi, k, kprime.unwrap_or(k), &rip_options())
        .map_err(Failure::input)?;
    print_json(&report);
    Ok(())
}

fn run_recover(matrix: &Path, y: &Path, reference: Option<&Path>, tol: f64) -> Outcome {
    let phi = read_matrix(matrix).map_err(Failure::input)?;
    let y = read_vector(y).map_err(Failure::input)?;
    let reference = reference
        .map(read_vector)
        .transpose()
        .map_err(Failure::input)?;
    let result = recover(&phi, y.as_slice(), reference.as_ref(), tol).map_err(|e| match e {
        RecoveryError::Lp(_) => Failure::Check(e.to_string()),
        _ => Failure::input(e),
    })?;
    print_json(&result);
    match (reference, result.exact) {
        (Some(_), false) => Err(Failure::Check(format!(
            "recovery error {} exceeds tolerance {tol}",
            result.error.unwrap_or(f64::NAN)
        ))),
        _ => Ok(()),
    }
}

fn run_verify(config_path: &Path, report: Option<&Path>) -> Outcome {
    let mut config: ExperimentConfig = read_json(config_path).map_err(Failure::input)?;
    if let Some(file) = config.matrix_file.as_mut().filter(|f| f.is_relative()) {
        if let Some(dir) = config_path.parent() {
            *file = dir.join(&*file);
        }
    }
    if let Some(budget) = budget_from_env() {
        config.budget = Some(budget);
    }
    let verdict = verify_recovery_condition(&config).map_err(|e| match e {
        HarnessError::Recovery { .. } => Failure::Check(e.to_string()),
        _ => Failure::input(e),
    })?;
    match report {
        Some(path) => write_json(path, &verdict).map_err(Failure::input)?,
        None => print_json(&verdict),
    }
    let s = &verdict.summary;
    eprintln!(
        "{} matrices, {} satisfy the condition; {}/{} signals exact ({}/{} under the condition); consistent: {}",
        s.matrices, s.condition_holds, s.exact, s.signals, s.exact_under_condition, s.signals_under_condition,
        verdict.consistent
    );
    if verdict.consistent {
        Ok(())
    } else {
        Err(Failure::Check("inconsistent verdict".into()))
    }
}

fn run_audit(report: &Path) -> Outcome {
    let verdict: RecoveryVerdict = read_json(report).map_err(Failure::input)?;
    if audit_verdict(&verdict) {
        eprintln!("report is consistent");
        Ok(())
    } else {
        Err(Failure::Check("report is inconsistent".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Decompose {
            input,
            k,
            capacity,
            out,
        } => run_decompose(input, *k, *capacity, out),
        Command::Rip { matrix, k, kprime } => run_rip(matrix, *k, *kprime),
        Command::Recover {
            matrix,
            y,
            reference,
            tol,
        } => run_recover(matrix, y, reference.as_deref(), *tol),
        Command::Verify {
            config: Some(c),
            report,
        } => run_verify(c, report.as_deref()),
        Command::Verify {
            config: None,
            report: Some(r),
        } => run_audit(r),
        Command::Verify {
            config: None,
            report: None,
        } => Err(Failure::Input(
            "verify needs --config, --report, or both".into(),
        )),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
