use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::builder::RangedU64ValueParser;
use clap::{Parser, Subcommand, ValueEnum};

use slhd::decorrelate::DEFAULT_ITERATIONS;
use slhd::io::{read_design, write_design, write_trace, ValueFormat};
use slhd::{
    generate_sliced_lhd, partition_levels, reduce_correlations_with, run_experiment,
    validate_sliced, Error, ExperimentConfig, ResponseBasis, RngStream, SliceSizes, SweepOptions,
};

#[derive(Parser, Debug)]
#[command(name = "slhd", version, about = "Sliced Latin hypercube designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a sliced Latin hypercube design.
    Generate {
        /// Comma-separated slice run sizes, e.g. 2,5,10.
        #[arg(long)]
        sizes: SliceSizes,

        /// Number of columns.
        #[arg(long, default_value_t = 1, value_parser = positive())]
        dim: usize,

        #[arg(long, env = "SLHD_SEED", default_value_t = 0)]
        seed: u64,

        /// Run the correlation-reduction sweep.
        #[arg(long)]
        decorrelate: bool,

        #[arg(long, default_value_t = DEFAULT_ITERATIONS, value_parser = positive())]
        iterations: usize,

        #[arg(long, value_enum, default_value_t = Basis::PassStart)]
        basis: Basis,

        /// Write odd integers 2a-1 over a 2n denominator instead of decimals.
        #[arg(long)]
        levels: bool,

        /// CSV of rms correlations per sweep iteration (with --decorrelate).
        #[arg(long)]
        trace: Option<PathBuf>,

        /// Output file; stdout if omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check the stratification of a design file.
    Validate {
        input: PathBuf,

        /// Slice sizes; defaults to the sizes recorded in the file header.
        #[arg(long)]
        sizes: Option<SliceSizes>,
    },
    /// Run the integration RMSE study described by a config file.
    Bench {
        config: PathBuf,

        /// JSON report path.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Basis {
    PassStart,
    Running,
}

impl From<Basis> for ResponseBasis {
    fn from(b: Basis) -> Self {
        match b {
            Basis::PassStart => ResponseBasis::PassStart,
            Basis::Running => ResponseBasis::Running,
        }
    }
}

fn positive() -> RangedU64ValueParser<usize> {
    RangedU64ValueParser::new().range(1..)
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn io_failure(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 3,
        error: error.into(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(io_failure)
}

/// Buffers output so a failed run never leaves a partial file behind.
fn write_to(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(path) => {
            let mut out = create(path)?;
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .with_context(|| format!("cannot write {}", path.display()))
                .map_err(io_failure)
        }
        None => io::stdout()
            .lock()
            .write_all(bytes)
            .context("cannot write to stdout")
            .map_err(io_failure),
    }
}

#[allow(clippy::too_many_arguments)]
fn generate(
    sizes: SliceSizes,
    dim: usize,
    seed: u64,
    decorrelate: bool,
    iterations: usize,
    basis: Basis,
    levels: bool,
    trace: Option<PathBuf>,
    output: Option<PathBuf>,
) -> Result<u8, Failure> {
    if trace.is_some() && !decorrelate {
        return Err(usage(anyhow!("--trace requires --decorrelate")));
    }
    let mut design = generate_sliced_lhd(&sizes, dim, &RngStream::new(seed));
    if decorrelate {
        let partition = partition_levels(&sizes);
        let options = SweepOptions {
            iterations,
            basis: basis.into(),
        };
        let (swept, sweep_trace) =
            reduce_correlations_with(design, &partition, &options).map_err(usage)?;
        design = swept;
        if let Some(path) = &trace {
            let mut buf = Vec::new();
            write_trace(&mut buf, &sweep_trace).map_err(io_failure)?;
            write_to(Some(path), &buf)?;
        }
    }
    let format = if levels {
        ValueFormat::Levels
    } else {
        ValueFormat::Decimal
    };
    let mut buf = Vec::new();
    write_design(&mut buf, &design, Some(seed), format).map_err(io_failure)?;
    write_to(output.as_deref(), &buf)?;
    Ok(0)
}

fn validate(input: PathBuf, sizes: Option<SliceSizes>) -> Result<u8, Failure> {
    let file = File::open(&input)
        .with_context(|| format!("cannot read {}", input.display()))
        .map_err(usage)?;
    let design = read_design(BufReader::new(file))
        .and_then(|parsed| parsed.into_design(sizes))
        .with_context(|| format!("cannot parse {}", input.display()))
        .map_err(usage)?;
    let report = validate_sliced(&design);
    println!("{report}");
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn bench(config: PathBuf, output: Option<PathBuf>) -> Result<u8, Failure> {
    let text = fs::read_to_string(&config)
        .with_context(|| format!("cannot read {}", config.display()))
        .map_err(usage)?;
    let parsed = ExperimentConfig::from_toml(&text).map_err(|e| match e {
        Error::MethodUnavailable(m) => usage(anyhow!("method unavailable: {m}")),
        other => usage(anyhow!(other).context(format!("invalid config {}", config.display()))),
    })?;
    let report = run_experiment(&parsed).map_err(usage)?;
    if let Some(path) = &output {
        write_to(Some(path), report.to_json().as_bytes())?;
    }
    println!("{}", report.to_table());
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Generate {
            sizes,
            dim,
            seed,
            decorrelate,
            iterations,
            basis,
            levels,
            trace,
            output,
        } => generate(
            sizes,
            dim,
            seed,
            decorrelate,
            iterations,
            basis,
            levels,
            trace,
            output,
        ),
        Command::Validate { input, sizes } => validate(input, sizes),
        Command::Bench { config, output } => bench(config, output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
