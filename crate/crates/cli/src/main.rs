use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "wdvv", version, about = "Verify WDVV solutions, their inversion symmetry and tau functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Tsv,
}

#[derive(clap::Args, Debug)]
struct Output {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

/// Shifts, times and a Newton starting point.
#[derive(clap::Args, Debug)]
struct Times {
    /// Shift `c^{a,p}` as `a,p=c` (exact rational). Defaults to `1,1=1`.
    #[arg(long = "shift", value_name = "A,P=C")]
    shifts: Vec<String>,
    /// Time `t^{a,p}` as `a,p=x`.
    #[arg(long = "time", value_name = "A,P=X")]
    times: Vec<String>,
    /// Starting point `v1,..,vn` for Newton.
    #[arg(long, value_name = "V1,..")]
    guess: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenusOp {
    Genus1,
    DetIdentity,
    Expand,
    CheckG2,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// WDVV associativity and quasi-homogeneity of a solution file.
    Check {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Apply the inversion symmetry and write the inverted solution.
    Invert {
        file: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Build a calibration at level P and check its axioms.
    Calibrate {
        file: PathBuf,
        #[arg(short = 'P', long, default_value_t = 4)]
        level: usize,
        /// Where to write the calibration file.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        /// Also write the transformed calibration of the inverted solution here.
        #[arg(long = "hat-output")]
        hat_output: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Solve the hodograph equations and evaluate log tau.
    Hodograph {
        cal: PathBuf,
        #[command(flatten)]
        times: Times,
        #[command(flatten)]
        out: Output,
    },
    /// Compare tau functions on both sides of the inversion.
    LegendreCheck {
        cal: PathBuf,
        cal_hat: PathBuf,
        #[command(flatten)]
        times: Times,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Genus-zero Virasoro constraint residual.
    Virasoro {
        cal: PathBuf,
        #[arg(short = 'm', allow_hyphen_values = true)]
        m: i32,
        #[command(flatten)]
        times: Times,
        /// Evaluate on the inverted side.
        #[arg(long)]
        hat: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Genus-one and genus-two transformation laws.
    Genus {
        file: PathBuf,
        #[arg(long = "G", value_name = "FILE")]
        g: PathBuf,
        /// File with `F2 = ...` and `F2hat = ...` in jet variables.
        #[arg(long = "F2", value_name = "FILE")]
        f2: Option<PathBuf>,
        #[arg(long, value_enum)]
        op: GenusOp,
        #[command(flatten)]
        out: Output,
    },
    /// Run every check on one conformal solution.
    VerifyAll {
        file: PathBuf,
        #[arg(long = "G", value_name = "FILE")]
        g: Option<PathBuf>,
        #[arg(short = 'P', long, default_value_t = 4)]
        level: usize,
        /// Sample point `v1,..,vn`; repeatable.
        #[arg(long = "point", value_name = "V1,..")]
        points: Vec<String>,
        /// Override a tolerance, `name=value`; repeatable.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        #[command(flatten)]
        out: Output,
    },
}

/// Failure kinds with their exit codes.
#[derive(Debug)]
enum CliError {
    /// Bad input: exit 2.
    Usage(String),
    /// A computation that should have succeeded did not: exit 1.
    Failed(String),
}

impl From<wdvv::Error> for CliError {
    fn from(e: wdvv::Error) -> Self {
        match e {
            wdvv::Error::Parse { .. }
            | wdvv::Error::UnknownVariable(_)
            | wdvv::Error::UnboundSymbol(_)
            | wdvv::Error::InvalidDimension(_)
            | wdvv::Error::InsufficientData(_)
            | wdvv::Error::UnsupportedVirasoro(_)
            | wdvv::Error::LevelUnderflow { .. }
            | wdvv::Error::Truncation(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Parse errors carry the file name.
fn in_file<T>(path: &Path, r: wdvv::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match commands::run(cli.command, &format!("wdvv {echo}")) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(1)
        }
    }
}
