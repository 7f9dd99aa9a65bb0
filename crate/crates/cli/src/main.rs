use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use confinement_lab::reproduce::reproduce;
use confinement_lab::{execute, exit_code, write_outputs, ExperimentSpec, EXIT_FAILURE};

#[derive(Parser)]
#[command(name = "confinement-lab", version, about = "Magnetic confinement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment spec
    Run {
        spec: PathBuf,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the seed in the spec
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
        /// Also write the lattice matrix in Matrix Market format
        #[arg(long)]
        dump_matrix: bool,
    },
    /// Run the bundled examples and check them
    Reproduce {
        /// Shift the expected disk threshold to check that failures are caught
        #[arg(long)]
        corrupt_threshold: bool,
    },
    /// Parse and validate a spec without running it
    Validate { spec: PathBuf },
}

fn threads(n: Option<usize>) {
    if let Some(n) = n {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { spec, out, seed, threads: n, dump_matrix } => {
            threads(n);
            match ExperimentSpec::load(&spec).and_then(|mut s| {
                if let Some(seed) = seed {
                    s.seed = seed;
                }
                execute(&s)
            }) {
                Ok(outcome) => {
                    for w in &outcome.report.warnings {
                        eprintln!("warning: {w}");
                    }
                    if dump_matrix && outcome.operator.is_none() {
                        eprintln!("warning: --dump-matrix applies only to lattice tasks");
                    }
                    match write_outputs(&outcome, &out, dump_matrix) {
                        Ok(paths) => {
                            for p in paths {
                                println!("{}", p.display());
                            }
                            0
                        }
                        Err(e) => {
                            eprintln!("error: cannot write outputs: {e}");
                            EXIT_FAILURE
                        }
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Reproduce { corrupt_threshold } => match reproduce(corrupt_threshold) {
            Ok(lines) => {
                for l in &lines {
                    let tag = if l.passed { "PASS" } else { "FAIL" };
                    println!("{tag}  {:<24} {:>8.3} s  {}", l.name, l.seconds, l.detail);
                }
                let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.name.as_str()).collect();
                if failed.is_empty() {
                    0
                } else {
                    eprintln!("failed: {}", failed.join(", "));
                    EXIT_FAILURE
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Command::Validate { spec } => match ExperimentSpec::load(&spec) {
            Ok(s) => {
                println!("ok: {}", s.task.name());
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
    };
    ExitCode::from(code as u8)
}
