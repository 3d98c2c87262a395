//! Batch command-line front end: `encode`, `laplacian`, `stateprep`, `bench`.
//!
//! Exit codes: 0 success, 1 argument/parse/verification errors, 2 resource
//! caps. All commands are deterministic for fixed flags and seeds; only the
//! measured wall-clock fields of the JSON reports vary between runs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::circuit::{count_gates, export_text, size_metric, GateCounts, SizeMetric};
use crate::demux::DemuxMethod;
use crate::generators;
use crate::matrix::ComplexMatrix;
use crate::protocols::{synthesize, Protocol};
use crate::simulate::{apply_to_state, verify_block};
use crate::state_prep::{state_prep_circuit, TargetState};
use crate::{Error, Result};

const VERIFY_QUBIT_CAP: usize = 14;
const VERIFY_EPSILON: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "bitble",
    about = "Synthesize single- and two-qubit gate circuits that block-encode classical matrices",
    version
)]
struct Cli {
    /// Cap for internal parallelism (fallback: BITBLE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a matrix into a block-encoding circuit.
    Encode(EncodeArgs),
    /// Emit a discretized Laplacian as CSV.
    Laplacian(LaplacianArgs),
    /// Compile a normalized state into a preparation circuit.
    Stateprep(StateprepArgs),
    /// Synthesis benchmark over a qubit range.
    Bench(BenchArgs),
}

#[derive(Args)]
struct EncodeArgs {
    /// Input matrix: .csv, .pgm or .ppm.
    #[arg(long)]
    input: PathBuf,
    /// Image channel for .ppm inputs.
    #[arg(long, value_parser = ["r", "g", "b"])]
    channel: Option<String>,
    #[arg(long)]
    protocol: String,
    /// Norm interpolation exponent for bitble3.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Compression threshold.
    #[arg(long, default_value_t = 1e-8)]
    cutoff: f64,
    /// Circuit output path (OpenQASM 2.0).
    #[arg(long)]
    output: PathBuf,
    /// Optional metrics JSON path.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Simulate and measure the block-encoding error.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct LaplacianArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
    dim: u32,
    /// Qubits per direction: `n` or `n,m`.
    #[arg(long)]
    qubits: String,
    #[arg(long)]
    periodic: bool,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct StateprepArgs {
    /// Input amplitudes: CSV tokens across lines and commas.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    cutoff: f64,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Simulate and measure the preparation error.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    min_qubits: u32,
    #[arg(long)]
    max_qubits: u32,
    /// Comma-separated protocol list.
    #[arg(long, default_value = "bitble1,bitble2,bitble3,fable")]
    protocols: String,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Serialize)]
struct Metrics {
    schema: u32,
    protocol: String,
    n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ancilla: Option<usize>,
    gate_counts: GateCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    size_metric: Option<SizeMetric>,
    synth_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
}

#[derive(Serialize)]
struct BenchReport {
    schema: u32,
    seed: u64,
    trials: usize,
    rows: Vec<BenchRow>,
}

#[derive(Serialize)]
pub struct BenchRow {
    pub protocol: String,
    pub n: u32,
    pub median_ms: f64,
    pub alpha: f64,
    pub gate_counts: GateCounts,
    pub angle_peak_bytes: u64,
}

/// Entry point used by the binary.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap would exit 2; argument problems are exit 1 here
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("BITBLE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let run = || match cli.command {
        Command::Encode(args) => cmd_encode(args),
        Command::Laplacian(args) => cmd_laplacian(args),
        Command::Stateprep(args) => cmd_stateprep(args),
        Command::Bench(args) => cmd_bench(args),
    };
    let outcome = match threads {
        Some(k) if k >= 1 => {
            match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(pool) => pool.install(run),
                Err(e) => Err(Error::arg(format!("could not build thread pool: {e}"))),
            }
        }
        Some(_) => Err(Error::arg("--threads must be at least 1")),
        None => run(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::ResourceLimit(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_input(path: &PathBuf, channel: Option<&str>) -> Result<ComplexMatrix> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "csv" => generators::load_csv(path),
        "pgm" | "ppm" => {
            let channel = match channel.unwrap_or("r") {
                "r" => generators::Channel::R,
                "g" => generators::Channel::G,
                "b" => generators::Channel::B,
                other => return Err(Error::arg(format!("unknown channel '{other}'"))),
            };
            generators::load_image_channel(path, channel)
        }
        other => Err(Error::arg(format!(
            "unsupported input extension '{other}' (expected csv, pgm or ppm)"
        ))),
    }
}

fn write_json<T: Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_encode(args: EncodeArgs) -> Result<()> {
    let matrix = load_input(&args.input, args.channel.as_deref())?;
    let protocol: Protocol = args.protocol.parse()?;
    let n = matrix.qubits()?;
    let enc = synthesize(&matrix, protocol, args.p, Some(args.cutoff))?;
    let epsilon = if args.verify {
        if enc.circuit.num_qubits > VERIFY_QUBIT_CAP {
            return Err(Error::ResourceLimit(format!(
                "--verify needs at most {VERIFY_QUBIT_CAP} total qubits, circuit has {}; \
                 rerun without --verify",
                enc.circuit.num_qubits
            )));
        }
        let eps = verify_block(&enc.circuit, &matrix, enc.alpha, enc.ancilla)?;
        if args.cutoff == 0.0 && eps > VERIFY_EPSILON {
            return Err(Error::InvalidState(format!(
                "verification failed: epsilon {eps:.3e} exceeds {VERIFY_EPSILON:.0e} at cutoff 0"
            )));
        }
        Some(eps)
    } else {
        None
    };
    std::fs::write(&args.output, export_text(&enc.circuit))?;
    if let Some(metrics_path) = &args.metrics {
        let metrics = Metrics {
            schema: 1,
            protocol: protocol.name().into(),
            n,
            alpha: Some(enc.alpha),
            ancilla: Some(enc.ancilla),
            gate_counts: count_gates(&enc.circuit),
            size_metric: Some(size_metric(&enc.circuit)?),
            synth_time_ms: enc.stats.synth_ms,
            epsilon,
        };
        write_json(metrics_path, &metrics)?;
    }
    Ok(())
}

fn cmd_laplacian(args: LaplacianArgs) -> Result<()> {
    let parts: Vec<&str> = args.qubits.split(',').collect();
    let parse = |s: &str| -> Result<u32> {
        let n: u32 = s
            .trim()
            .parse()
            .map_err(|_| Error::arg(format!("bad qubit count '{s}'")))?;
        if n == 0 {
            return Err(Error::arg("qubit counts must be at least 1"));
        }
        Ok(n)
    };
    let matrix = match (args.dim, parts.as_slice()) {
        (1, [n]) => generators::laplacian_1d(parse(n)?, args.periodic),
        (2, [n]) => {
            let n = parse(n)?;
            generators::laplacian_2d(n, n, args.periodic)
        }
        (2, [nx, ny]) => generators::laplacian_2d(parse(nx)?, parse(ny)?, args.periodic),
        _ => {
            return Err(Error::arg(
                "--qubits must be `n` for --dim 1 or `n[,m]` for --dim 2",
            ))
        }
    };
    std::fs::write(&args.output, generators::write_csv(&matrix))?;
    Ok(())
}

fn cmd_stateprep(args: StateprepArgs) -> Result<()> {
    let amplitudes = generators::load_state_csv(&args.input)?;
    let state = TargetState::new(amplitudes)?;
    let circuit = state_prep_circuit(&state, DemuxMethod::Recursive, Some(args.cutoff))?;
    let epsilon = if args.verify {
        let mut out = vec![Complex64::new(0.0, 0.0); state.amplitudes().len()];
        out[0] = Complex64::new(1.0, 0.0);
        apply_to_state(&circuit, &mut out)?;
        let err = out
            .iter()
            .zip(state.amplitudes().iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if args.cutoff == 0.0 && err > VERIFY_EPSILON {
            return Err(Error::InvalidState(format!(
                "verification failed: l2 error {err:.3e} exceeds {VERIFY_EPSILON:.0e} at cutoff 0"
            )));
        }
        Some(err)
    } else {
        None
    };
    std::fs::write(&args.output, export_text(&circuit))?;
    if let Some(metrics_path) = &args.metrics {
        let metrics = Metrics {
            schema: 1,
            protocol: "stateprep".into(),
            n: state.qubits(),
            alpha: None,
            ancilla: None,
            gate_counts: count_gates(&circuit),
            size_metric: None,
            synth_time_ms: 0.0,
            epsilon,
        };
        write_json(metrics_path, &metrics)?;
    }
    Ok(())
}

/// Runs the benchmark rows; also used directly by the acceptance suite.
pub fn bench_rows(
    min_qubits: u32,
    max_qubits: u32,
    protocols: &[Protocol],
    trials: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if max_qubits < min_qubits {
        return Err(Error::arg("--max-qubits must be >= --min-qubits"));
    }
    if trials == 0 {
        return Err(Error::arg("--trials must be at least 1"));
    }
    let mut rows = Vec::new();
    for &protocol in protocols {
        for n in min_qubits..=max_qubits {
            let matrix = generators::random_matrix(n, true, seed ^ (n as u64) << 8);
            // one untimed pass warms the allocator, thread pool and caches
            synthesize(&matrix, protocol, 0.5, Some(1e-8))?;
            let mut times = Vec::with_capacity(trials);
            let mut last = None;
            for _ in 0..trials {
                let enc = synthesize(&matrix, protocol, 0.5, Some(1e-8))?;
                times.push(enc.stats.synth_ms);
                last = Some(enc);
            }
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let enc = last.expect("at least one trial");
            rows.push(BenchRow {
                protocol: protocol.name().into(),
                n,
                median_ms: times[times.len() / 2],
                alpha: enc.alpha,
                gate_counts: count_gates(&enc.circuit),
                angle_peak_bytes: enc.stats.angle_peak_bytes,
            });
        }
    }
    Ok(rows)
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let protocols = args
        .protocols
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<Protocol>>>()?;
    let rows = bench_rows(
        args.min_qubits,
        args.max_qubits,
        &protocols,
        args.trials,
        args.seed,
    )?;
    write_json(
        &args.output,
        &BenchReport {
            schema: 1,
            seed: args.seed,
            trials: args.trials,
            rows,
        },
    )
}
