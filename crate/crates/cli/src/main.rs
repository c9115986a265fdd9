mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use pqeval_core::device::{BackendKind, Platform};
use pqeval_core::nist_api::{registry, Family, Operation};

/// Verification and overhead evaluation for Kyber/Dilithium accelerator
/// kernels behind the NIST PQC interface.
#[derive(Parser, Debug)]
#[command(name = "pqeval", version)]
pub struct Cli {
    /// Human-readable output instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,

    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a NIST known-answer response file.
    KatGen(KatGenArgs),
    /// Run a response file through the apply and verify kernels.
    KatVerify(KatVerifyArgs),
    /// Time one kernel over repeated jobs.
    Bench(BenchArgs),
    /// Write figure data series.
    Report(ReportArgs),
    /// Emit the kernel descriptor JSON for one kernel.
    KernelDescriptor(KernelArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SchemeArgs {
    /// Algorithm family.
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// NIST security level (kyber: 1, 3, 5; dilithium: 2, 3, 5).
    #[arg(long)]
    pub level: u8,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum FamilyArg {
    Kyber,
    Dilithium,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Kyber => Family::Kyber,
            FamilyArg::Dilithium => Family::Dilithium,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum OperationArg {
    Keypair,
    #[value(alias = "encapsulate")]
    Enc,
    #[value(alias = "decapsulate")]
    Dec,
    Sign,
    Verify,
}

impl From<OperationArg> for Operation {
    fn from(o: OperationArg) -> Self {
        match o {
            OperationArg::Keypair => Operation::Keypair,
            OperationArg::Enc => Operation::Encapsulate,
            OperationArg::Dec => Operation::Decapsulate,
            OperationArg::Sign => Operation::Sign,
            OperationArg::Verify => Operation::Verify,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendArg {
    Software,
    Modeled,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Software => BackendKind::Software,
            BackendArg::Modeled => BackendKind::Modeled,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct DeviceArgs {
    #[arg(long, value_enum, default_value = "software")]
    pub backend: BackendArg,
    #[arg(long, default_value = "VC709")]
    pub platform: Platform,
    /// Calibration table: a CSV path or `builtin`. Required by the modeled
    /// backend.
    #[arg(long, env = "PQEVAL_CALIBRATION")]
    pub calibration: Option<String>,
    /// Make Deadlock-flagged kernels time out after this many milliseconds.
    #[arg(long, value_name = "TIMEOUT_MS")]
    pub simulate_deadlock: Option<u64>,
}

#[derive(Args, Debug)]
pub struct KatGenArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Number of cases.
    #[arg(short = 'n', long, default_value_t = 100)]
    pub count: usize,
    /// 48-byte master entropy as hex; defaults to bytes 0x00..0x2f.
    #[arg(long)]
    pub entropy: Option<String>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Compute cases on the calling thread only.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct KatVerifyArgs {
    /// Response file to verify.
    pub path: PathBuf,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub device: DeviceArgs,
    /// Also write the full per-case report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Run cases on the calling thread only.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long, value_enum)]
    pub operation: OperationArg,
    #[command(flatten)]
    pub device: DeviceArgs,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    /// Count every job; by default one extra warmup job runs first.
    #[arg(long)]
    pub no_warmup: bool,
    /// Also time direct engine calls and compare.
    #[arg(long)]
    pub baseline: bool,
    /// Replace the modeled start phase (ns).
    #[arg(long)]
    pub override_start_ns: Option<f64>,
    /// Replace the modeled release phase (ns).
    #[arg(long)]
    pub override_release_ns: Option<f64>,
    /// 48-byte workload entropy as hex.
    #[arg(long)]
    pub entropy: Option<String>,
    /// Write bench.csv and bench.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Fig1,
    Fig4,
    Fig6,
    AreaTime,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(value_enum)]
    pub kind: ReportKind,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Resource table: a CSV path or `builtin`.
    #[arg(long, default_value = "builtin")]
    pub resources: String,
    /// Calibration table: a CSV path or `builtin`.
    #[arg(long, env = "PQEVAL_CALIBRATION", default_value = "builtin")]
    pub calibration: String,
    /// Baseline records (bench CSV); measured on this host when absent.
    #[arg(long)]
    pub baseline_csv: Option<PathBuf>,
    /// Runs per kernel when measuring the baseline.
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long)]
    pub override_start_ns: Option<f64>,
    #[arg(long)]
    pub override_release_ns: Option<f64>,
}

#[derive(Args, Debug)]
pub struct KernelArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long, value_enum)]
    pub operation: OperationArg,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn combos_help() -> String {
    let mut s = String::from("Registered schemes (family, level):\n");
    for e in registry() {
        s.push_str(&format!("  {} {}  ({})\n", e.family, e.nist_level, e.name()));
    }
    s.push_str("\nExit codes: 0 pass, 1 verification failure, 2 usage or configuration error, 3 IO or data error.");
    s
}

fn main() -> ExitCode {
    let matches = Cli::command().after_help(combos_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pqeval: {e}");
            e.exit_code()
        }
    }
}
