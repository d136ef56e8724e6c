use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eigenreflect::cli::{self, Command, InputSource, JobConfig, MatrixFile, OutputPaths, SweepGrid};
use eigenreflect::poly::{GapSpec, DEFAULT_OVERSAMPLE};
use eigenreflect::testgen::{random_gapped_unitary, SpectrumSpec};
use eigenreflect::{completion, Error};

/// Single-ancilla eigenspace reflections: plan, synthesize, verify, sweep.
#[derive(Parser)]
#[command(name = "eigenreflect", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the polynomial parameters and predicted gate counts.
    Plan {
        #[command(flatten)]
        gap: GapArgs,
        /// Write the plan here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the reflection circuit and its angle sequences.
    Synth {
        #[command(flatten)]
        gap: GapArgs,
        #[arg(long, default_value = "circuit.json")]
        circuit_out: PathBuf,
        #[arg(long, default_value = "angles.json")]
        angles_out: PathBuf,
    },
    /// Simulate the circuit on a unitary and compare with the exact reflection.
    Verify {
        #[command(flatten)]
        gap: GapArgs,
        /// Unitary as {"dim", "re", "im"} JSON.
        #[arg(long, conflicts_with_all = ["dim", "multiplicity", "seed", "spectrum_delta"], required_unless_present = "dim")]
        matrix: Option<PathBuf>,
        #[command(flatten)]
        spectrum: SpectrumArgs,
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Verify over a grid of gaps, accuracies, dimensions and seeds; emits CSV.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        multiplicity: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long)]
        use_paper_t_formula: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded gapped unitary as a matrix file.
    Gen {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 1)]
        multiplicity: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a job described by a JSON config file.
    Run { config: PathBuf },
}

#[derive(Args)]
struct GapArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    /// Use the literal t = ceil(e / (2 |e^{i delta} - 1|)).
    #[arg(long)]
    use_paper_t_formula: bool,
    #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
    oversample: usize,
    #[arg(long, default_value_t = completion::DEFAULT_TOL)]
    completion_tol: f64,
}

impl GapArgs {
    fn config(&self, command: Command) -> JobConfig {
        JobConfig {
            gap: Some(GapSpec { delta: self.delta, epsilon: self.epsilon, theta: self.theta }),
            use_paper_t_formula: self.use_paper_t_formula,
            oversample: self.oversample,
            completion_tol: self.completion_tol,
            ..JobConfig::new(command)
        }
    }
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 1)]
    multiplicity: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gap of the generated spectrum; defaults to --delta.
    #[arg(long)]
    spectrum_delta: Option<f64>,
}

fn job(cmd: Cmd) -> eigenreflect::Result<Option<JobConfig>> {
    let config = match cmd {
        Cmd::Plan { gap, out } => JobConfig {
            outputs: OutputPaths { plan: out, ..OutputPaths::default() },
            ..gap.config(Command::Plan)
        },
        Cmd::Synth { gap, circuit_out, angles_out } => JobConfig {
            outputs: OutputPaths { circuit: Some(circuit_out), angles: Some(angles_out), ..OutputPaths::default() },
            ..gap.config(Command::Synth)
        },
        Cmd::Verify { gap, matrix, spectrum, report_out } => {
            let input = match (matrix, spectrum.dim) {
                (Some(path), _) => InputSource::Matrix(path),
                (None, Some(dim)) => InputSource::Spectrum(SpectrumSpec {
                    dim,
                    delta: spectrum.spectrum_delta.unwrap_or(gap.delta),
                    theta: gap.theta,
                    target_multiplicity: spectrum.multiplicity,
                    seed: spectrum.seed,
                }),
                (None, None) => return Err(Error::InvalidInput("give --matrix or --dim".into())),
            };
            JobConfig {
                input: Some(input),
                outputs: OutputPaths { report: report_out, ..OutputPaths::default() },
                ..gap.config(Command::Verify)
            }
        }
        Cmd::Sweep { deltas, epsilons, dims, seeds, multiplicity, theta, use_paper_t_formula, out } => JobConfig {
            gap: Some(GapSpec { delta: 1.0, epsilon: 0.5, theta }),
            use_paper_t_formula,
            outputs: OutputPaths { table: out, ..OutputPaths::default() },
            sweep: Some(SweepGrid { deltas, epsilons, dims, seeds, target_multiplicity: multiplicity }),
            ..JobConfig::new(Command::Sweep)
        },
        Cmd::Gen { dim, delta, theta, multiplicity, seed, out } => {
            let spec = SpectrumSpec { dim, delta, theta, target_multiplicity: multiplicity, seed };
            let u = random_gapped_unitary(&spec)?;
            let bytes = serde_json::to_vec(&MatrixFile::from_operator(&u))?;
            cli::write_atomic(&out, &bytes)?;
            return Ok(None);
        }
        Cmd::Run { config } => JobConfig::from_file(&config)?,
    };
    Ok(Some(config))
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = job(args.command).and_then(|config| match config {
        Some(c) => cli::run(&c).map(Some),
        None => Ok(None),
    });
    match result {
        Ok(Some(outcome)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(&outcome.stdout).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(cli::EXIT_CONFIG as u8);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
