//! Command-line front end. Each subcommand is a plain function so it can be
//! driven from tests as well as from the `dkstp` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    binomial, coherence, intra_group_check, rip_constant, uniqueness_bounds, welch_bound, IntraGroupReport, RipMode,
    Spark, RIP_MAX_SUPPORTS, SPARK_MAX_LIMIT,
};
use crate::error::{Error, Result};
use crate::io::{
    read_descriptor, read_packet, read_pgm, write_csv, write_descriptor, write_packet, write_pgm, HistogramRow,
};
use crate::measurement::{generate_matrix, MatrixDescriptor, MatrixKind, Method, Scaling, SensingScheme};
use crate::metrics::{mean_reconstruction_error_map, QualityReport};
use crate::pipeline::{
    basis_for, compress, mae_vs_cr_sweep, parse_cr_grid, reconstruct, run_benchmark, BenchmarkConfig, BlockLayout,
    BlockReport, DecompositionSummary, MaeSweepConfig,
};
use crate::solver::{SolverConfig, SolverKind};
use crate::stp::expand_dkstp;

#[derive(Parser, Debug)]
#[command(name = "dkstp", version, about = "Block compressed sensing with STP and DK-STP measurement matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a matrix descriptor, optionally with a dense CSV dump.
    GenMatrix(GenMatrixArgs),
    /// Measure every block of an image into a packet.
    Compress(CompressArgs),
    /// Rebuild an image from a packet.
    Reconstruct(ReconstructArgs),
    /// Spark, coherence, RIP and intra-group structure of a matrix, as JSON.
    Analyze(AnalyzeArgs),
    /// PSNR table over methods, compression ratios and trials.
    Benchmark(BenchmarkArgs),
    /// Group-mean error heatmap and histogram of an image.
    ErrorDecomp(ErrorDecompArgs),
    /// MAE against compression ratio on random blocks.
    MaeSweep(MaeSweepArgs),
}

#[derive(Args, Debug)]
pub struct GenMatrixArgs {
    #[arg(long, default_value = "gaussian")]
    pub kind: MatrixKind,
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "inv-sqrt-m", value_parser = parse_scaling)]
    pub scaling: Scaling,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the dense matrix as CSV.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value = "dkstp")]
    pub method: Method,
    #[arg(long, default_value_t = 0.5)]
    pub cr: f64,
    #[arg(long, default_value_t = 2)]
    pub gamma: usize,
    #[arg(long, default_value_t = 16)]
    pub block: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gaussian")]
    pub kind: MatrixKind,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub packet: PathBuf,
    #[arg(long, default_value = "bp")]
    pub solver: SolverKind,
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Reference image for the quality and decomposition sections of the report.
    #[arg(long)]
    pub original: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Descriptor file written by `gen-matrix`.
    #[arg(long)]
    pub matrix_desc: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub spark_limit: usize,
    #[arg(long, default_value_t = 2)]
    pub rip_k: usize,
    /// Coherence threshold of the intra-group check.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Analyze the expanded matrix `A ⊗ ε_γᵀ` instead of `A`.
    #[arg(long, default_value_t = 1)]
    pub gamma: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value = "cs,stp,dkstp", value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[arg(long, default_value = "0.05:0.5:0.05")]
    pub cr: String,
    #[arg(long, default_value_t = 2)]
    pub gamma: usize,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise_var: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub block: usize,
    #[arg(long, default_value = "gaussian")]
    pub kind: MatrixKind,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Args, Debug)]
pub struct ErrorDecompArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub gamma: usize,
    #[arg(long)]
    pub heatmap: PathBuf,
    #[arg(long)]
    pub hist: PathBuf,
}

#[derive(Args, Debug)]
pub struct MaeSweepArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub gamma: usize,
    #[arg(long, default_value = "0.05:1.0:0.05")]
    pub cr: String,
    #[arg(long, default_value_t = 5)]
    pub blocks: usize,
    #[arg(long, default_value_t = 64)]
    pub block: usize,
    #[arg(long, default_value = "dkstp")]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-block table; the doubled-ratio differences go to `<stem>.diff.csv`.
    #[arg(long)]
    pub csv: PathBuf,
}

fn parse_scaling(s: &str) -> std::result::Result<Scaling, String> {
    match s {
        "unit" => Ok(Scaling::Unit),
        "inv-sqrt-m" => Ok(Scaling::InvSqrtM),
        _ => Err(format!("unknown scaling '{s}' (expected unit or inv-sqrt-m)")),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenMatrix(a) => gen_matrix(&a),
        Command::Compress(a) => compress_cmd(&a),
        Command::Reconstruct(a) => reconstruct_cmd(&a).map(|_| ()),
        Command::Analyze(a) => {
            let report = analyze(&a)?;
            let json = serde_json::to_string_pretty(&report)?;
            match &a.out {
                Some(path) => fs::write(path, json + "\n")?,
                None => writeln!(std::io::stdout(), "{json}")?,
            }
            Ok(())
        }
        Command::Benchmark(a) => benchmark(&a),
        Command::ErrorDecomp(a) => {
            let mae = error_decomp(&a)?;
            writeln!(std::io::stdout(), "mae {mae}")?;
            Ok(())
        }
        Command::MaeSweep(a) => mae_sweep(&a),
    }
}

pub fn gen_matrix(a: &GenMatrixArgs) -> Result<()> {
    let d = MatrixDescriptor::new(a.kind, a.rows, a.cols, a.seed, a.scaling)?;
    write_descriptor(&d, &a.out)?;
    if let Some(path) = &a.dump_matrix {
        let m = generate_matrix(&d)?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        for i in 0..m.rows() {
            w.write_record(m.row(i).iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn compress_cmd(a: &CompressArgs) -> Result<()> {
    let image = read_pgm(&a.image)?;
    let scheme = SensingScheme::new(a.method, a.gamma, a.kind, a.seed)?;
    let layout = BlockLayout::square(&image, a.block)?;
    let packet = compress(&image, &scheme, &layout, a.cr)?;
    write_packet(&packet, &a.out)
}

#[derive(Debug, Serialize)]
pub struct ReconstructionJson {
    pub blocks: Vec<BlockReport>,
    pub quality: Option<QualityReport>,
    pub decomposition: Option<DecompositionSummary>,
}

pub fn reconstruct_cmd(a: &ReconstructArgs) -> Result<ReconstructionJson> {
    let packet = read_packet(&a.packet)?;
    let cfg = SolverConfig {
        kind: a.solver,
        lambda: a.lambda,
        max_iters: a.max_iters,
        ..SolverConfig::default()
    };
    let report = reconstruct(&packet, &basis_for(&packet)?, &cfg)?;
    write_pgm(&report.image, &a.out)?;
    let (quality, decomposition) = match &a.original {
        Some(path) => {
            let eval = report.evaluate(&read_pgm(path)?)?;
            (Some(eval.quality), Some(eval.decomposition))
        }
        None => (None, None),
    };
    let json = ReconstructionJson {
        blocks: report.blocks.clone(),
        quality,
        decomposition,
    };
    if let Some(path) = &a.report {
        fs::write(path, serde_json::to_string_pretty(&json)? + "\n")?;
    }
    Ok(json)
}

#[derive(Debug, Serialize)]
pub struct RipJson {
    pub k: usize,
    pub delta: f64,
    pub mode: RipMode,
    pub failed: bool,
}

#[derive(Debug, Serialize)]
pub struct AnalysisJson {
    pub rows: usize,
    pub cols: usize,
    pub gamma: usize,
    pub spark: Spark,
    pub spark_witness: Vec<usize>,
    pub coherence: f64,
    pub welch_bound: f64,
    pub k_spark: usize,
    pub k_spark_is_lower_bound: bool,
    pub k_mu: usize,
    pub rip: Vec<RipJson>,
    pub intra_group: IntraGroupReport,
}

pub fn analyze(a: &AnalyzeArgs) -> Result<AnalysisJson> {
    let d = read_descriptor(&a.matrix_desc)?;
    let base = generate_matrix(&d)?;
    let m = if a.gamma > 1 { expand_dkstp(&base, a.gamma)? } else { base };
    let limit = a.spark_limit.min(m.cols()).min(SPARK_MAX_LIMIT);
    let bounds = uniqueness_bounds(&m, limit)?;
    let spark = crate::analysis::spark(&m, limit)?;
    let mut rip = Vec::new();
    for k in 1..=a.rip_k.min(m.cols()) {
        let mode = if binomial(m.cols(), k) <= RIP_MAX_SUPPORTS {
            RipMode::Exhaustive
        } else {
            RipMode::Sampled
        };
        let r = rip_constant(&m, k, mode, a.seed)?;
        rip.push(RipJson {
            k,
            delta: r.delta,
            mode: r.mode,
            failed: r.failed,
        });
    }
    Ok(AnalysisJson {
        rows: m.rows(),
        cols: m.cols(),
        gamma: a.gamma,
        spark: spark.spark,
        spark_witness: spark.witness,
        coherence: coherence(&m)?,
        welch_bound: welch_bound(m.rows(), m.cols()),
        k_spark: bounds.k_spark,
        k_spark_is_lower_bound: bounds.k_spark_is_lower_bound,
        k_mu: bounds.k_mu,
        rip,
        intra_group: intra_group_check(&m, a.gamma, a.tau)?,
    })
}

pub fn benchmark(a: &BenchmarkArgs) -> Result<()> {
    let image = read_pgm(&a.image)?;
    let cfg = BenchmarkConfig {
        methods: a.methods.clone(),
        cr_grid: parse_cr_grid(&a.cr)?,
        gamma: a.gamma,
        trials: a.trials,
        noise_var: a.noise_var,
        seed: a.seed,
        block: a.block,
        kind: a.kind,
        solver: SolverConfig {
            max_iters: a.max_iters,
            ..SolverConfig::default()
        },
    };
    if cfg.trials == 0 || cfg.methods.is_empty() {
        return Err(Error::InvalidArgument("benchmark needs at least one method and one trial".into()));
    }
    let rows = run_benchmark(&image, &cfg)?;
    write_csv(&rows, &a.csv)
}

/// Writes the heatmap and histogram and returns the MAE on the `[0, 1]` scale.
pub fn error_decomp(a: &ErrorDecompArgs) -> Result<f64> {
    let image = read_pgm(&a.image)?;
    let map = mean_reconstruction_error_map(&image, a.gamma)?;
    write_pgm(&map.heatmap(), &a.heatmap)?;
    let rows: Vec<HistogramRow> = map.histogram.rows();
    write_csv(&rows, &a.hist)?;
    Ok(map.mae)
}

pub fn mae_sweep(a: &MaeSweepArgs) -> Result<()> {
    let image = read_pgm(&a.image)?;
    let cfg = MaeSweepConfig {
        method: a.method,
        gamma: a.gamma,
        cr_grid: parse_cr_grid(&a.cr)?,
        blocks: a.blocks,
        block: a.block,
        seed: a.seed,
        ..MaeSweepConfig::default()
    };
    let sweep = mae_vs_cr_sweep(&image, &cfg)?;
    write_csv(&sweep.rows, &a.csv)?;
    write_csv(&sweep.diffs, diff_path(&a.csv))
}

/// `out.csv` → `out.diff.csv`.
pub fn diff_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.diff.csv"))
}
