use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use exchange_only::encoding::{bloch_axis, CodeBlock};
use exchange_only::schedule::{verify, Metadata, ScheduleFile, Thresholds};
use exchange_only::sectors::{basis_checksum, sector_basis, HalfInt};
use exchange_only::synthesis::{
    decompose_single_qubit, shortest_single_qubit, synthesize_two_qubit, Method, Mode, MultistartOptions,
    OptimizationReport, PulseSequence, SingleQubitFlavor, SynthesisOptions,
};
use exchange_only::target::Target;

const EXIT_FAILURE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser)]
#[command(name = "exchange-only", version, about = "Exchange-only gates on three-spin coded qubits")]
struct Cli {
    /// Worker threads for parallel restarts (0 = all cores).
    #[arg(long, global = true, env = "EXCHANGE_ONLY_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search pulse durations for a target gate.
    Synthesize(SynthesizeArgs),
    /// Re-check a schedule file from scratch.
    Verify(VerifyArgs),
    /// Dimension and basis checksum of a total-spin sector.
    SectorInfo {
        #[arg(long)]
        n: usize,
        /// Total spin, e.g. 1 or 1/2.
        #[arg(long)]
        s: String,
        #[arg(long)]
        sz: String,
    },
    /// Decompose a one-qubit gate with a fixed pulse layout.
    SingleQubit {
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "serial-4-nearest")]
        flavor: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Logical rotation axis of an exchange pulse inside block (0, 1, 2).
    BlochAxis {
        #[arg(long)]
        i: usize,
        #[arg(long)]
        j: usize,
    },
}

#[derive(Args)]
struct SynthesizeArgs {
    /// cnot, cz, swap-logical, rz:THETA, rx:THETA or file:PATH
    #[arg(long)]
    target: String,
    #[arg(long, default_value = "serial")]
    mode: String,
    #[arg(long, default_value_t = 19)]
    max_steps: usize,
    /// Restarts per pattern.
    #[arg(long, default_value_t = 200)]
    restarts: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "levenberg-marquardt")]
    method: String,
    /// Also require the gate on the two-block singlet branch.
    #[arg(long)]
    subsystem: bool,
    #[arg(long, default_value_t = 500)]
    max_patterns: usize,
    /// Schedule file; printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Search report; defaults to OUTPUT.report.json.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    schedule: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = Thresholds::default().max_f)]
    max_f: f64,
    #[arg(long, default_value_t = Thresholds::default().max_leakage)]
    max_leakage: f64,
    #[arg(long, default_value_t = Thresholds::default().max_residual)]
    max_residual: f64,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// An error with its exit code.
struct Failure(u8, String);

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, e.to_string())
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_DATA, e.to_string())
}

fn parse_target(s: &str) -> Result<Target, Failure> {
    Target::parse(s).map_err(|e| if s.starts_with("file:") { data(e) } else { usage(e) })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn metadata(target: &Target, seed: Option<u64>, objective: &str) -> Metadata {
    Metadata {
        target: target.to_string(),
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        objective: objective.to_string(),
    }
}

#[derive(Serialize)]
struct SynthesisRecord<'a> {
    target: String,
    success: bool,
    patterns_tried: usize,
    #[serde(flatten)]
    report: &'a OptimizationReport,
}

#[derive(Serialize)]
struct SingleQubitRecord {
    target: String,
    success: bool,
    residual: f64,
    steps: usize,
}

fn emit_schedule(seq: &PulseSequence, meta: Metadata, output: Option<&Path>) -> Result<(), Failure> {
    let text = ScheduleFile::from_sequence(seq, meta).to_json();
    match output {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn synthesize(a: &SynthesizeArgs) -> Result<u8, Failure> {
    let target = parse_target(&a.target)?;
    let mode: Mode = a.mode.parse().map_err(usage)?;
    let method: Method = a.method.parse().map_err(usage)?;
    if a.max_steps == 0 || a.restarts == 0 {
        return Err(usage("--max-steps and --restarts must be positive"));
    }
    let report_path =
        a.report.clone().or_else(|| a.output.as_ref().map(|o| PathBuf::from(format!("{}.report.json", o.display()))));
    let (success, sequence, record, objective) = if target.logical_qubits() == 2 {
        let opts = SynthesisOptions {
            mode,
            max_steps: a.max_steps,
            restarts: a.restarts,
            seed: a.seed,
            method,
            subsystem: a.subsystem,
            max_patterns: a.max_patterns,
            ..Default::default()
        };
        let s = synthesize_two_qubit(&target.operator(), &opts).map_err(usage)?;
        let record = to_json(&SynthesisRecord {
            target: target.to_string(),
            success: s.report.success,
            patterns_tried: s.patterns_tried,
            report: &s.report,
        });
        let objective = if a.subsystem { "local invariants, both branches" } else { "local invariants" };
        (s.report.success, s.sequence, record, objective)
    } else {
        let opts = MultistartOptions { restarts: a.restarts, seed: a.seed, method, batch: 8, ..Default::default() };
        let s = shortest_single_qubit(&target.operator(), mode, a.max_steps, &opts).map_err(usage)?;
        let record = to_json(&SingleQubitRecord {
            target: target.to_string(),
            success: s.success,
            residual: s.residual,
            steps: s.sequence.steps.len(),
        });
        (s.success, s.sequence, record, "entrywise up to phase")
    };
    if let Some(path) = &report_path {
        write(path, &record)?;
    }
    if !success {
        if report_path.is_none() {
            print!("{record}");
        }
        eprintln!("no schedule reached the target");
        return Ok(EXIT_FAILURE);
    }
    emit_schedule(&sequence, metadata(&target, Some(a.seed), objective), a.output.as_deref())?;
    Ok(0)
}

fn verify_cmd(a: &VerifyArgs) -> Result<u8, Failure> {
    let target = parse_target(&a.target)?;
    let schedule = ScheduleFile::load(&a.schedule).map_err(data)?;
    let thresholds =
        Thresholds { max_f: a.max_f, max_leakage: a.max_leakage, max_residual: a.max_residual, ..Default::default() };
    let report = verify(&schedule, &target.operator(), &target.to_string(), thresholds).map_err(data)?;
    let text = to_json(&report);
    match &a.report {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(if report.pass { 0 } else { EXIT_FAILURE })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().map_err(usage)?;
    match cli.command {
        Command::Synthesize(a) => synthesize(&a),
        Command::Verify(a) => verify_cmd(&a),
        Command::SectorInfo { n, s, sz } => {
            let s: HalfInt = s.parse().map_err(usage)?;
            let sz: HalfInt = sz.parse().map_err(usage)?;
            let basis = sector_basis(n, s, sz).map_err(usage)?;
            println!("dim {}", basis.dim());
            println!("checksum {:016x}", basis_checksum(&basis));
            Ok(0)
        }
        Command::SingleQubit { target, flavor, output } => {
            let target = parse_target(&target)?;
            if target.logical_qubits() != 1 {
                return Err(usage(format!("{target} is not a one-qubit gate")));
            }
            let flavor: SingleQubitFlavor = flavor.parse().map_err(usage)?;
            let sol = decompose_single_qubit(&target.operator(), flavor).map_err(usage)?;
            eprintln!("residual {:e}", sol.residual);
            if !sol.success {
                return Ok(EXIT_FAILURE);
            }
            emit_schedule(
                &sol.sequence,
                metadata(&target, None, &format!("{flavor}, entrywise up to phase")),
                output.as_deref(),
            )?;
            Ok(0)
        }
        Command::BlochAxis { i, j } => {
            let ax = bloch_axis(i, j, &CodeBlock::default()).map_err(usage)?;
            let [x, y, z] = ax.axis.map(|v| v + 0.0);
            println!("axis {x:.12} {y:.12} {z:.12}");
            println!("polar_angle_deg {:.9}", ax.polar_angle_degrees());
            println!("rate {:.12}", ax.rate);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
