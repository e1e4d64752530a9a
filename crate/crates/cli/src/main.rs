//! `agpk`: certificates, quotient norms and related checks from JSON problem
//! files.

mod commands;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Global, IdemRandom, Output};
use error::{CliError, EXIT_CODES, INVALID_INPUT, USAGE};

#[derive(Parser, Debug)]
#[command(name = "agpk", version, about = "Interpolation certificates and Schur–Agler norm bounds on analytically presented domains", after_help = EXIT_CODES)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Main tolerance of the command: feasibility residual (certify),
    /// bisection width (norm, estimate, pick, idem-check), residual bound
    /// (verify)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for every random choice; echoed in the output
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Solver iteration cap
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Pretty-print JSON with this many spaces (default: one line)
    #[arg(long, global = true)]
    json_indent: Option<usize>,
    /// Suppress diagnostics on stderr (errors are still reported)
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide interpolability at level 1 and emit a certificate
    Certify {
        problem: PathBuf,
        /// Require the strict identity with R = eps·I
        #[arg(long)]
        strict_eps: Option<f64>,
    },
    /// Quotient norm of the targets (or of `function` at the points)
    Norm { problem: PathBuf },
    /// Lower estimate of the Schur–Agler norm of `function` from sampled subsets
    Estimate { problem: PathBuf },
    /// Classical Pick test on the unit disk
    Pick {
        problem: PathBuf,
        /// Norm level t (default: params.level or 1)
        #[arg(long)]
        level: Option<f64>,
    },
    /// Compare the algebra norm and the kernel multiplier norm of k-idempotent algebras
    IdemCheck {
        /// File with "algebra" (list of matrices) and "coeffs"
        #[arg(required_unless_present = "random", conflicts_with = "random")]
        file: Option<PathBuf>,
        /// Run randomized trials instead of a file
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[arg(long, default_value_t = 6)]
        d_max: usize,
        /// Largest coefficient size for the matrix variant
        #[arg(long, default_value_t = 3)]
        p_max: usize,
        /// Condition number cap of the similarity
        #[arg(long, default_value_t = 20.0)]
        cond: f64,
    },
    /// Lower bound for ‖f‖ from admissible matrix tuples on the points
    LowerBound { problem: PathBuf },
    /// Check a certificate against a problem from scratch
    Verify {
        problem: PathBuf,
        /// A certificate, or any report with a "certificate" field
        certificate: PathBuf,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("AGPK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::new(INVALID_INPUT, format!("AGPK_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new(INVALID_INPUT, format!("cannot start {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<Output, CliError> {
    configure_threads()?;
    let g = Global {
        tol: cli.global.tol,
        seed: cli.global.seed,
        max_iter: cli.global.max_iter,
        json_indent: cli.global.json_indent,
    };
    match cli.command {
        Command::Certify { problem, strict_eps } => commands::certify(&g, &problem, strict_eps),
        Command::Norm { problem } => commands::norm(&g, &problem),
        Command::Estimate { problem } => commands::estimate(&g, &problem),
        Command::Pick { problem, level } => commands::pick(&g, &problem, level),
        Command::IdemCheck {
            file,
            random,
            count,
            k_max,
            d_max,
            p_max,
            cond,
        } => match file {
            Some(f) if !random => commands::idem_file(&g, &f),
            _ => commands::idem_random(
                &g,
                &IdemRandom {
                    count,
                    k_max,
                    d_max,
                    p_max,
                    cond_max: cond,
                },
            ),
        },
        Command::LowerBound { problem } => commands::lower_bound_cmd(&g, &problem),
        Command::Verify { problem, certificate } => commands::verify(&g, &problem, &certificate),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let quiet = cli.global.quiet;
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", out.body);
            let _ = stdout.flush();
            if let Some(note) = out.note.filter(|_| !quiet) {
                eprintln!("agpk: {note}");
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("agpk: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["agpk", "norm", "p.json", "--tol", "1e-6", "--seed", "3", "--json-indent", "2"]).unwrap();
        assert_eq!(cli.global.tol, Some(1e-6));
        assert_eq!(cli.global.seed, 3);
        assert_eq!(cli.global.json_indent, Some(2));
    }

    #[test]
    fn idem_check_needs_file_or_random() {
        assert!(Cli::try_parse_from(["agpk", "idem-check"]).is_err());
        assert!(Cli::try_parse_from(["agpk", "idem-check", "--random"]).is_ok());
        assert!(Cli::try_parse_from(["agpk", "idem-check", "a.json"]).is_ok());
    }
}
