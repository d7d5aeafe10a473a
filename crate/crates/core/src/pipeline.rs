//! Blockwise compression and reconstruction of grayscale images.
//!
//! An image is cut into `block_w × block_h` blocks, visited in column-major
//! order, and every block is stacked column by column into a vector in
//! `[0, 1]^p`. All blocks share one measurement matrix, regenerated from the
//! descriptor carried by the packet.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{quantize, GrayImage, MaeDiffRow, SweepRow};
use crate::matrix::{cholesky, norm2, Matrix, Signal};
use crate::measurement::{
    build_operator, generate_matrix, transmitted_shape, MatrixDescriptor, MatrixKind, Method, Scaling, SeededRng,
    SensingOperator, SensingScheme,
};
use crate::metrics::{decompose_slices, mean_and_stderr, quality, ErrorDecomposition, QualityReport};
use crate::solver::{PreparedSolver, SolverConfig, SolverKind, RANK_TOL};
use crate::sparsity::DctBasis;
use crate::stp::{equalize_slice, kronecker};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockLayout {
    pub image_w: usize,
    pub image_h: usize,
    pub block_w: usize,
    pub block_h: usize,
}

impl BlockLayout {
    /// Block sizes must divide the image; images are never padded.
    pub fn new(image_w: usize, image_h: usize, block_w: usize, block_h: usize) -> Result<Self> {
        if image_w == 0 || image_h == 0 || block_w == 0 || block_h == 0 {
            return Err(Error::InvalidArgument("image and block dimensions must be positive".into()));
        }
        if !image_w.is_multiple_of(block_w) || !image_h.is_multiple_of(block_h) {
            return Err(Error::DimensionMismatch(format!(
                "{block_w}x{block_h} blocks do not tile a {image_w}x{image_h} image"
            )));
        }
        Ok(Self {
            image_w,
            image_h,
            block_w,
            block_h,
        })
    }

    /// Square `block × block` tiling of `image`.
    pub fn square(image: &GrayImage, block: usize) -> Result<Self> {
        Self::new(image.width(), image.height(), block, block)
    }

    /// Signal dimension `p` of one block.
    pub fn block_dim(&self) -> usize {
        self.block_w * self.block_h
    }

    pub fn blocks_across(&self) -> usize {
        self.image_w / self.block_w
    }

    pub fn blocks_down(&self) -> usize {
        self.image_h / self.block_h
    }

    pub fn block_count(&self) -> usize {
        self.blocks_across() * self.blocks_down()
    }

    /// Top-left pixel `(row, col)` of block `b`.
    pub fn block_origin(&self, b: usize) -> (usize, usize) {
        let (bx, by) = (b / self.blocks_down(), b % self.blocks_down());
        (by * self.block_h, bx * self.block_w)
    }

    fn check_image(&self, image: &GrayImage) -> Result<()> {
        if (image.width(), image.height()) != (self.image_w, self.image_h) {
            return Err(Error::DimensionMismatch(format!(
                "layout is for a {}x{} image, got {}x{}",
                self.image_w,
                self.image_h,
                image.width(),
                image.height()
            )));
        }
        Ok(())
    }

    /// Block `b` as a column-major vector in `[0, 1]^p`.
    pub fn extract(&self, image: &GrayImage, b: usize) -> Vec<f64> {
        let (r0, c0) = self.block_origin(b);
        let mut x = Vec::with_capacity(self.block_dim());
        for c in 0..self.block_w {
            for r in 0..self.block_h {
                x.push(image.get(r0 + r, c0 + c) as f64 / 255.0);
            }
        }
        x
    }

    /// Clamps, quantizes and places block vectors back into an image.
    pub fn assemble(&self, blocks: &[Vec<f64>]) -> Result<GrayImage> {
        let mut img = GrayImage::filled(self.image_w, self.image_h, 0)?;
        for (b, x) in blocks.iter().enumerate() {
            let (r0, c0) = self.block_origin(b);
            for c in 0..self.block_w {
                for r in 0..self.block_h {
                    img.set(r0 + r, c0 + c, quantize(x[c * self.block_h + r]));
                }
            }
        }
        Ok(img)
    }
}

/// Measurements of every block plus what is needed to rebuild the matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedPacket {
    layout: BlockLayout,
    method: Method,
    gamma: usize,
    m: usize,
    descriptor: MatrixDescriptor,
    blocks: Vec<Vec<f64>>,
}

impl CompressedPacket {
    pub fn from_parts(
        layout: BlockLayout,
        method: Method,
        gamma: usize,
        m: usize,
        descriptor: MatrixDescriptor,
        blocks: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if method == Method::Cs && gamma != 1 {
            return Err(Error::Format(format!("CS packet with gamma {gamma}")));
        }
        let shape = transmitted_shape(method, gamma, layout.block_dim(), m)?;
        if shape != (descriptor.rows(), descriptor.cols()) {
            return Err(Error::Format(format!(
                "descriptor shape {}x{} does not match {} with m = {m} (expected {}x{})",
                descriptor.rows(),
                descriptor.cols(),
                method.name(),
                shape.0,
                shape.1
            )));
        }
        if blocks.len() != layout.block_count() {
            return Err(Error::Length {
                what: "packet blocks",
                expected: layout.block_count() as u64,
                actual: blocks.len() as u64,
            });
        }
        for y in &blocks {
            if y.len() != m {
                return Err(Error::Length {
                    what: "block measurements",
                    expected: m as u64,
                    actual: y.len() as u64,
                });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("packet measurements"));
            }
        }
        Ok(Self {
            layout,
            method,
            gamma,
            m,
            descriptor,
            blocks,
        })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    /// Measurements per block.
    pub fn measurements(&self) -> usize {
        self.m
    }

    pub fn descriptor(&self) -> &MatrixDescriptor {
        &self.descriptor
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn payload_values(&self) -> usize {
        self.blocks.len() * self.m
    }

    pub fn scheme(&self) -> SensingScheme {
        SensingScheme {
            method: self.method,
            gamma: self.gamma,
            kind: self.descriptor.kind,
            seed: self.descriptor.seed,
            scaling: self.descriptor.scaling,
        }
    }

    pub fn operator(&self) -> Result<SensingOperator> {
        SensingOperator::from_descriptor(self.method, self.gamma, self.descriptor, self.layout.block_dim(), self.m)
    }
}

/// Measures every block of `image`. DK-STP-CS blocks go through the implicit
/// operator, so the `m × p` matrix is never formed.
pub fn compress(image: &GrayImage, scheme: &SensingScheme, layout: &BlockLayout, cr: f64) -> Result<CompressedPacket> {
    layout.check_image(image)?;
    let p = layout.block_dim();
    let m = scheme.measurement_count(p, cr)?;
    let op = build_operator(scheme, p, m)?;
    let blocks: Vec<Vec<f64>> = (0..layout.block_count())
        .into_par_iter()
        .map(|b| op.apply_slice(&layout.extract(image, b)))
        .collect();
    CompressedPacket::from_parts(*layout, scheme.method, scheme.gamma, m, *op.descriptor(), blocks)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockReport {
    pub index: usize,
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    pub image: GrayImage,
    pub blocks: Vec<BlockReport>,
    /// Reconstructed block vectors before clamping and quantization.
    pub block_signals: Vec<Vec<f64>>,
    pub layout: BlockLayout,
    pub gamma: usize,
}

impl ReconstructionReport {
    pub fn all_converged(&self) -> bool {
        self.blocks.iter().all(|b| b.converged)
    }

    /// Quality against `original` and the error decomposition of every block.
    pub fn evaluate(&self, original: &GrayImage) -> Result<Evaluation> {
        self.layout.check_image(original)?;
        let per_block: Vec<ErrorDecomposition> = self
            .block_signals
            .iter()
            .enumerate()
            .map(|(b, xs)| decompose_slices(&self.layout.extract(original, b), xs, self.gamma))
            .collect::<Result<_>>()?;
        Ok(Evaluation {
            quality: quality(original, &self.image)?,
            decomposition: DecompositionSummary::from_blocks(&per_block),
            per_block,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Evaluation {
    pub quality: QualityReport,
    pub decomposition: DecompositionSummary,
    #[serde(skip)]
    pub per_block: Vec<ErrorDecomposition>,
}

/// Block decompositions summed over the image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecompositionSummary {
    pub distribution_error: f64,
    pub cs_error: f64,
    pub original_error: f64,
    /// `‖x* − x‖₂` over the whole image.
    pub total_l2: f64,
    pub bound_paper: f64,
    pub bound_safe: f64,
    pub blocks: usize,
    /// Blocks whose total error exceeds the three-term sum.
    pub paper_bound_violations: usize,
    pub safe_bound_violations: usize,
}

impl DecompositionSummary {
    pub fn from_blocks(blocks: &[ErrorDecomposition]) -> Self {
        let sum = |f: fn(&ErrorDecomposition) -> f64| blocks.iter().map(f).sum::<f64>();
        Self {
            distribution_error: sum(|d| d.distribution_error),
            cs_error: sum(|d| d.cs_error),
            original_error: sum(|d| d.original_error),
            total_l2: sum(|d| d.total_l2 * d.total_l2).sqrt(),
            bound_paper: sum(|d| d.bound_paper),
            bound_safe: sum(|d| d.bound_safe),
            blocks: blocks.len(),
            paper_bound_violations: blocks.iter().filter(|d| !d.paper_bound_holds()).count(),
            safe_bound_violations: blocks.iter().filter(|d| d.total_l2 > d.bound_safe).count(),
        }
    }
}

enum BlockSolver {
    Sparse(PreparedSolver),
    /// Least-squares pseudo-inverse for square or overdetermined systems.
    Direct { psi: Matrix, pinv: Matrix },
}

/// Everything needed to reconstruct packets that share one descriptor,
/// with the sensing matrix and its factorization built once.
pub struct Reconstructor {
    method: Method,
    gamma: usize,
    p: usize,
    m: usize,
    descriptor: MatrixDescriptor,
    basis: DctBasis,
    y_scale: f64,
    solver: BlockSolver,
}

impl Reconstructor {
    pub fn for_packet(packet: &CompressedPacket, basis: &DctBasis, cfg: &SolverConfig) -> Result<Self> {
        let (method, gamma) = (packet.method, packet.gamma);
        let p = packet.layout.block_dim();
        let want = if method == Method::DkStpCs { p / gamma } else { p };
        if basis.dim() != want {
            return Err(Error::DimensionMismatch(format!(
                "{} reconstruction needs a basis of dimension {want}, got {}",
                method.name(),
                basis.dim()
            )));
        }
        // The solver always sees the 1/√rows scaled matrix.
        let d = packet.descriptor;
        let a = generate_matrix(&d.with_scaling(Scaling::InvSqrtM))?;
        let y_scale = match d.scaling {
            Scaling::Unit => 1.0 / (d.rows() as f64).sqrt(),
            Scaling::InvSqrtM => 1.0,
        };
        let psi = match method {
            Method::Cs => basis.compose(&a)?,
            Method::DkStpCs => basis.compose(&a)?.scaled(1.0 / (gamma as f64).sqrt()),
            Method::StpCs => basis.compose(&kronecker(&a, &Matrix::identity(gamma))?)?,
        };
        let solver = if cfg.kind == SolverKind::Bp && psi.rows() >= psi.cols() {
            let chol = cholesky(&psi.gram_cols(), RANK_TOL, "least-squares reconstruction")?;
            let pinv = Matrix::from_dmatrix(&chol.solve(&psi.to_dmatrix().transpose()));
            BlockSolver::Direct { psi, pinv }
        } else {
            BlockSolver::Sparse(PreparedSolver::new(&psi, cfg)?)
        };
        Ok(Self {
            method,
            gamma,
            p,
            m: packet.m,
            descriptor: d,
            basis: basis.clone(),
            y_scale,
            solver,
        })
    }

    fn check(&self, packet: &CompressedPacket) -> Result<()> {
        if (packet.method, packet.gamma, packet.m, packet.descriptor, packet.layout.block_dim())
            != (self.method, self.gamma, self.m, self.descriptor, self.p)
        {
            return Err(Error::InvalidArgument(
                "packet was produced with a different scheme than this reconstructor".into(),
            ));
        }
        Ok(())
    }

    /// Recovers one block from its measurements.
    pub fn reconstruct_block(&self, index: usize, y: &[f64]) -> Result<(Vec<f64>, BlockReport)> {
        let y: Vec<f64> = y.iter().map(|v| v * self.y_scale).collect();
        let (s, report) = match &self.solver {
            BlockSolver::Sparse(solver) => {
                let r = solver.solve(&Signal::new(y)?)?;
                let rep = BlockReport {
                    index,
                    converged: r.converged,
                    iterations: r.iterations,
                    primal_residual: r.primal_residual,
                };
                (r.solution.into_vec(), rep)
            }
            BlockSolver::Direct { psi, pinv } => {
                let s = pinv.mul_vec(&y)?;
                let fit = psi.mul_vec(&s)?;
                let resid: Vec<f64> = fit.iter().zip(&y).map(|(a, b)| a - b).collect();
                let rep = BlockReport {
                    index,
                    converged: true,
                    iterations: 0,
                    primal_residual: norm2(&resid),
                };
                (s, rep)
            }
        };
        let xs = self.basis.synthesize_slice(&s);
        let x = if self.method == Method::DkStpCs {
            equalize_slice(&xs, self.gamma)
        } else {
            xs
        };
        Ok((x, report))
    }

    pub fn reconstruct(&self, packet: &CompressedPacket) -> Result<ReconstructionReport> {
        self.check(packet)?;
        let results: Vec<(Vec<f64>, BlockReport)> = packet
            .blocks
            .par_iter()
            .enumerate()
            .map(|(b, y)| self.reconstruct_block(b, y))
            .collect::<Result<_>>()?;
        let (block_signals, blocks): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        Ok(ReconstructionReport {
            image: packet.layout.assemble(&block_signals)?,
            blocks,
            block_signals,
            layout: packet.layout,
            gamma: self.gamma,
        })
    }
}

/// The DCT basis a packet is reconstructed in: dimension `p/γ` for
/// DK-STP-CS, `p` otherwise.
pub fn basis_for(packet: &CompressedPacket) -> Result<DctBasis> {
    let p = packet.layout.block_dim();
    DctBasis::new(if packet.method == Method::DkStpCs { p / packet.gamma } else { p })
}

/// Non-converged blocks are flagged in the report; their best iterate is
/// still used.
pub fn reconstruct(packet: &CompressedPacket, basis: &DctBasis, cfg: &SolverConfig) -> Result<ReconstructionReport> {
    Reconstructor::for_packet(packet, basis, cfg)?.reconstruct(packet)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(variance: f64, seed: u64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance must be finite and >= 0, got {variance}")));
        }
        Ok(Self { variance, seed })
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            variance: 0.001,
            seed: 0,
        }
    }
}

/// Zero-mean Gaussian samples for `n` pixels in row-major order.
pub fn noise_field(spec: &NoiseSpec, n: usize) -> Vec<f64> {
    let sd = spec.variance.sqrt();
    let mut rng = SeededRng::new(spec.seed);
    (0..n).map(|_| sd * rng.next_normal()).collect()
}

/// Adds noise to the `[0, 1]`-scaled pixels, then clamps and requantizes.
pub fn inject_noise(image: &GrayImage, spec: &NoiseSpec) -> Result<GrayImage> {
    let spec = NoiseSpec::new(spec.variance, spec.seed)?;
    if spec.variance == 0.0 {
        return Ok(image.clone());
    }
    let noise = noise_field(&spec, image.pixels().len());
    let pixels = image
        .pixels()
        .iter()
        .zip(&noise)
        .map(|(&p, e)| quantize(p as f64 / 255.0 + e))
        .collect();
    GrayImage::new(image.width(), image.height(), pixels)
}

/// Parses `start:end:step` (inclusive), a comma list or a single value.
pub fn parse_cr_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("invalid compression ratio grid '{spec}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    let grid: Vec<f64> = match parts.len() {
        1 => spec.split(',').map(num).collect::<Result<_>>()?,
        3 => {
            let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(h > 0.0) || b < a {
                return Err(bad());
            }
            let steps = ((b - a) / h + 1e-9).floor() as usize;
            (0..=steps).map(|i| round9(a + i as f64 * h)).collect()
        }
        _ => return Err(bad()),
    };
    if grid.is_empty() || grid.iter().any(|c| !(*c > 0.0 && *c <= 1.0)) {
        return Err(Error::InvalidArgument(format!("compression ratios in '{spec}' must lie in (0, 1]")));
    }
    Ok(grid)
}

fn round9(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Decorrelated seed for stream `k` of a base seed (SplitMix64 finalizer).
pub fn derive_seed(base: u64, k: u64) -> u64 {
    let mut z = base ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One compress and reconstruct cycle, returning the output and its quality
/// against `reference`.
pub fn run_once(
    input: &GrayImage,
    reference: &GrayImage,
    scheme: &SensingScheme,
    layout: &BlockLayout,
    cr: f64,
    cfg: &SolverConfig,
) -> Result<(ReconstructionReport, Evaluation)> {
    let packet = compress(input, scheme, layout, cr)?;
    let report = reconstruct(&packet, &basis_for(&packet)?, cfg)?;
    let eval = report.evaluate(reference)?;
    Ok((report, eval))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
    pub cr_grid: Vec<f64>,
    pub gamma: usize,
    pub trials: usize,
    /// Noise variance on `[0, 1]` pixels; zero disables noise.
    pub noise_var: f64,
    pub seed: u64,
    pub block: usize,
    pub kind: MatrixKind,
    pub solver: SolverConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Cs, Method::StpCs, Method::DkStpCs],
            cr_grid: vec![0.5],
            gamma: 2,
            trials: 1,
            noise_var: 0.0,
            seed: 0,
            block: 16,
            kind: MatrixKind::Gaussian,
            solver: SolverConfig::default(),
        }
    }
}

/// Every (method, cr, trial) cell. Within a trial all methods share the
/// matrix seed and the noise realization. PSNR is measured against the
/// clean image.
pub fn run_benchmark(image: &GrayImage, cfg: &BenchmarkConfig) -> Result<Vec<SweepRow>> {
    let layout = BlockLayout::square(image, cfg.block)?;
    let mut rows = Vec::with_capacity(cfg.methods.len() * cfg.cr_grid.len() * cfg.trials);
    let inputs: Vec<GrayImage> = (0..cfg.trials)
        .map(|t| inject_noise(image, &NoiseSpec::new(cfg.noise_var, derive_seed(cfg.seed ^ 0x006e_6f69_7365, t as u64))?))
        .collect::<Result<_>>()?;
    for &method in &cfg.methods {
        for &cr in &cfg.cr_grid {
            for (t, input) in inputs.iter().enumerate() {
                let scheme = SensingScheme::new(method, cfg.gamma, cfg.kind, derive_seed(cfg.seed, t as u64))?;
                let start = Instant::now();
                let (_, eval) = run_once(input, image, &scheme, &layout, cr, &cfg.solver)?;
                rows.push(SweepRow {
                    method: method.name().to_string(),
                    cr,
                    gamma: scheme.gamma,
                    trial: t,
                    psnr_db: eval.quality.psnr_db,
                    mse: eval.quality.mse,
                    mae: eval.quality.mae,
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaeSweepConfig {
    pub method: Method,
    pub gamma: usize,
    pub kind: MatrixKind,
    pub cr_grid: Vec<f64>,
    /// Number of randomly placed blocks.
    pub blocks: usize,
    pub block: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for MaeSweepConfig {
    fn default() -> Self {
        Self {
            method: Method::DkStpCs,
            gamma: 2,
            kind: MatrixKind::Gaussian,
            cr_grid: (1..=20).map(|i| round9(i as f64 * 0.05)).collect(),
            blocks: 5,
            block: 64,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaeSweep {
    /// Top-left corners of the sampled blocks.
    pub positions: Vec<(usize, usize)>,
    /// One row per grid ratio and block; `trial` is the block number.
    pub rows: Vec<SweepRow>,
    /// `MAE(c) − MAE(2c)` for grid ratios with `2c ≤ 1`, paired over blocks.
    pub diffs: Vec<MaeDiffRow>,
}

impl MaeSweep {
    /// Mean MAE over blocks at each grid ratio, in grid order.
    pub fn mean_mae(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(c, _)| *c == r.cr) {
                Some((_, v)) => *v += r.mae,
                None => out.push((r.cr, r.mae)),
            }
        }
        let n = self.positions.len() as f64;
        out.iter().map(|(c, v)| (*c, v / n)).collect()
    }
}

/// MAE (8-bit levels) against compression ratio on randomly placed blocks,
/// each compressed on its own with one shared matrix seed.
pub fn mae_vs_cr_sweep(image: &GrayImage, cfg: &MaeSweepConfig) -> Result<MaeSweep> {
    if cfg.blocks == 0 || cfg.block == 0 || cfg.block > image.width() || cfg.block > image.height() {
        return Err(Error::InvalidArgument(format!(
            "cannot place {} blocks of size {} in a {}x{} image",
            cfg.blocks,
            cfg.block,
            image.width(),
            image.height()
        )));
    }
    let mut rng = SeededRng::new(derive_seed(cfg.seed, 0x0062_6c6f_636b));
    let positions: Vec<(usize, usize)> = (0..cfg.blocks)
        .map(|_| {
            (
                rng.below(image.height() - cfg.block + 1),
                rng.below(image.width() - cfg.block + 1),
            )
        })
        .collect();
    let crops: Vec<GrayImage> = positions
        .iter()
        .map(|&(r, c)| image.crop(r, c, cfg.block, cfg.block))
        .collect::<Result<_>>()?;
    let layout = BlockLayout::new(cfg.block, cfg.block, cfg.block, cfg.block)?;
    let scheme = SensingScheme::new(cfg.method, cfg.gamma, cfg.kind, cfg.seed)?;

    let mut needed: Vec<f64> = cfg.cr_grid.clone();
    for &c in &cfg.cr_grid {
        let d = round9(2.0 * c);
        if d <= 1.0 {
            needed.push(d);
        }
    }
    needed.sort_by(f64::total_cmp);
    needed.dedup();

    let mut table: Vec<(f64, Vec<(QualityReport, f64)>)> = Vec::new();
    for &cr in &needed {
        let packets: Vec<CompressedPacket> = crops
            .iter()
            .map(|img| compress(img, &scheme, &layout, cr))
            .collect::<Result<_>>()?;
        let rec = Reconstructor::for_packet(&packets[0], &basis_for(&packets[0])?, &cfg.solver)?;
        let mut cells = Vec::with_capacity(crops.len());
        for (img, pk) in crops.iter().zip(&packets) {
            let start = Instant::now();
            let out = rec.reconstruct(pk)?;
            cells.push((quality(img, &out.image)?, start.elapsed().as_secs_f64()));
        }
        table.push((cr, cells));
    }
    let lookup = |cr: f64| &table.iter().find(|(c, _)| *c == cr).expect("ratio was evaluated").1;

    let mut rows = Vec::new();
    for &cr in &cfg.cr_grid {
        for (b, (q, secs)) in lookup(cr).iter().enumerate() {
            rows.push(SweepRow {
                method: cfg.method.name().to_string(),
                cr,
                gamma: scheme.gamma,
                trial: b,
                psnr_db: q.psnr_db,
                mse: q.mse,
                mae: q.mae,
                seconds: *secs,
            });
        }
    }
    let mut diffs = Vec::new();
    for &c in &cfg.cr_grid {
        let d = round9(2.0 * c);
        if d > 1.0 {
            continue;
        }
        let paired: Vec<f64> = lookup(c).iter().zip(lookup(d)).map(|(a, b)| a.0.mae - b.0.mae).collect();
        let (mae_diff, stderr) = mean_and_stderr(&paired);
        diffs.push(MaeDiffRow {
            cr: c,
            cr_doubled: d,
            mae_diff,
            stderr,
        });
    }
    Ok(MaeSweep { positions, rows, diffs })
}

/// Bytes needed to ship one image's measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TransmissionCost {
    pub header_bytes: usize,
    pub matrix_bytes: usize,
    pub measurement_bytes: usize,
}

impl TransmissionCost {
    pub fn total(&self) -> usize {
        self.header_bytes + self.matrix_bytes + self.measurement_bytes
    }

    /// The packet as written: fixed header with the descriptor, no matrix.
    pub fn of_packet(packet: &CompressedPacket) -> Self {
        Self {
            header_bytes: crate::io::PACKET_HEADER_LEN,
            matrix_bytes: 0,
            measurement_bytes: packet.payload_values() * 8,
        }
    }

    /// Shipping the dense stored matrix of `method` as f64 instead of a
    /// descriptor.
    pub fn dense(method: Method, gamma: usize, p: usize, m: usize, blocks: usize) -> Result<Self> {
        let (rows, cols) = transmitted_shape(method, gamma, p, m)?;
        Ok(Self {
            header_bytes: crate::io::PACKET_HEADER_LEN - MatrixDescriptor::ENCODED_LEN,
            matrix_bytes: rows * cols * 8,
            measurement_bytes: blocks * m * 8,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::l0_oracle;
    use crate::stp::expand_dkstp;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |r, c| ((r * 13 + c * 7) % 256) as u8).unwrap()
    }

    #[test]
    fn layout_order_and_extraction() {
        let img = ramp(8, 4);
        let l = BlockLayout::new(8, 4, 4, 2).unwrap();
        assert_eq!(l.block_count(), 4);
        assert_eq!(l.block_origin(0), (0, 0));
        assert_eq!(l.block_origin(1), (2, 0));
        assert_eq!(l.block_origin(2), (0, 4));
        let x = l.extract(&img, 1);
        assert_eq!(x[0], img.get(2, 0) as f64 / 255.0);
        assert_eq!(x[1], img.get(3, 0) as f64 / 255.0);
        assert_eq!(x[2], img.get(2, 1) as f64 / 255.0);
        let blocks: Vec<Vec<f64>> = (0..4).map(|b| l.extract(&img, b)).collect();
        assert_eq!(l.assemble(&blocks).unwrap(), img);
        assert!(BlockLayout::new(8, 4, 3, 2).is_err());
    }

    #[test]
    fn full_size_packet_shape() {
        let img = ramp(256, 256);
        let scheme = SensingScheme::new(Method::DkStpCs, 2, MatrixKind::Gaussian, 1).unwrap();
        let l = BlockLayout::square(&img, 64).unwrap();
        let pk = compress(&img, &scheme, &l, 0.5).unwrap();
        assert_eq!(pk.blocks().len(), 16);
        assert!(pk.blocks().iter().all(|y| y.len() == 2048));
        assert_eq!((pk.descriptor().rows(), pk.descriptor().cols()), (2048, 2048));
    }

    #[test]
    fn constant_image_measurements_match_materialized_oracle() {
        let img = GrayImage::filled(8, 8, 200).unwrap();
        let l = BlockLayout::square(&img, 4).unwrap();
        let scheme = SensingScheme::new(Method::DkStpCs, 2, MatrixKind::Gaussian, 3).unwrap();
        let pk = compress(&img, &scheme, &l, 0.5).unwrap();
        let a = generate_matrix(pk.descriptor()).unwrap();
        let full = expand_dkstp(&a, 2).unwrap();
        let x = vec![200.0 / 255.0; 16];
        let oracle = full.mul_vec(&x).unwrap();
        for y in pk.blocks() {
            for (u, v) in y.iter().zip(&oracle) {
                assert!((u - v).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn implicit_and_materialized_compression_agree() {
        let img = ramp(16, 16);
        let l = BlockLayout::square(&img, 8).unwrap();
        for gamma in [2, 4] {
            let scheme = SensingScheme::new(Method::DkStpCs, gamma, MatrixKind::Bernoulli, 9).unwrap();
            let pk = compress(&img, &scheme, &l, 0.4).unwrap();
            let full = expand_dkstp(&generate_matrix(pk.descriptor()).unwrap(), gamma).unwrap();
            for (b, y) in pk.blocks().iter().enumerate() {
                let direct = full.mul_vec(&l.extract(&img, b)).unwrap();
                for (u, v) in y.iter().zip(&direct) {
                    assert!((u - v).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn group_constant_image_recovers_above_60_db() {
        // Each vertical pair of pixels is equal, so equalization is exact.
        let img = GrayImage::from_fn(16, 16, |r, c| {
            let rr = r / 2;
            (40.0 + 80.0 * ((rr as f64 * 0.7).sin() + (c as f64 * 0.4).cos()).abs()) as u8
        })
        .unwrap();
        let scheme = SensingScheme::new(Method::DkStpCs, 2, MatrixKind::Gaussian, 5).unwrap();
        let l = BlockLayout::square(&img, 8).unwrap();
        let (rep, eval) = run_once(&img, &img, &scheme, &l, 0.9, &SolverConfig::default()).unwrap();
        assert!(eval.quality.psnr_db >= 60.0, "{:?}", eval.quality);
        assert_eq!(eval.decomposition.safe_bound_violations, 0);
        // Group-sum consistency of the unquantized reconstruction.
        for xs in &rep.block_signals {
            for pair in xs.chunks_exact(2) {
                assert_eq!(pair[0], pair[1]);
            }
        }
    }

    #[test]
    fn gamma_one_matches_plain_cs() {
        let img = ramp(16, 16);
        let l = BlockLayout::square(&img, 8).unwrap();
        let dk = SensingScheme::new(Method::DkStpCs, 1, MatrixKind::Gaussian, 2).unwrap();
        let cs = SensingScheme::new(Method::Cs, 1, MatrixKind::Gaussian, 2).unwrap();
        let (pd, pc) = (compress(&img, &dk, &l, 0.5).unwrap(), compress(&img, &cs, &l, 0.5).unwrap());
        assert_eq!(pd.blocks(), pc.blocks());
        let cfg = SolverConfig::default();
        let rd = reconstruct(&pd, &basis_for(&pd).unwrap(), &cfg).unwrap();
        let rc = reconstruct(&pc, &basis_for(&pc).unwrap(), &cfg).unwrap();
        assert_eq!(rd.image, rc.image);
    }

    #[test]
    fn one_sparse_group_sum_block_matches_l0_oracle() {
        // p = 16, γ = 2, m = 6: group-sum signal is a single DCT atom.
        let basis = DctBasis::new(8).unwrap();
        let mut s = vec![0.0; 8];
        s[3] = 1.2;
        let xg = basis.synthesize_slice(&s);
        let x = equalize_slice(&xg, 2);
        let layout = BlockLayout::new(4, 4, 4, 4).unwrap();
        let scheme = SensingScheme::new(Method::DkStpCs, 2, MatrixKind::Gaussian, 12).unwrap();
        let op = build_operator(&scheme, 16, 6).unwrap();
        let y = op.apply_slice(&x);
        let pk = CompressedPacket::from_parts(layout, Method::DkStpCs, 2, 6, *op.descriptor(), vec![y.clone()]).unwrap();
        let rec = Reconstructor::for_packet(&pk, &basis, &SolverConfig::default()).unwrap();
        let (xhat, rep) = rec.reconstruct_block(0, &y).unwrap();
        assert!(rep.converged);
        for (u, v) in xhat.iter().zip(&x) {
            assert!((u - v).abs() < 1e-8);
        }
        let psi = basis.compose(op.stored_matrix()).unwrap().scaled(1.0 / 2f64.sqrt());
        let oracle = l0_oracle(&psi, &Signal::new(y).unwrap(), 2).unwrap();
        let xo = equalize_slice(&basis.synthesize_slice(&oracle), 2);
        for (u, v) in xhat.iter().zip(&xo) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn unit_scaled_descriptor_reconstructs_like_default() {
        let img = ramp(8, 8);
        let l = BlockLayout::square(&img, 8).unwrap();
        let base = SensingScheme::new(Method::Cs, 1, MatrixKind::Gaussian, 4).unwrap();
        let cfg = SolverConfig::default();
        let a = run_once(&img, &img, &base, &l, 0.6, &cfg).unwrap().0;
        let b = run_once(&img, &img, &base.with_scaling(Scaling::Unit), &l, 0.6, &cfg).unwrap().0;
        for (u, v) in a.block_signals[0].iter().zip(&b.block_signals[0]) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn full_sampling_is_exact_up_to_quantization() {
        let img = ramp(16, 16);
        let l = BlockLayout::square(&img, 8).unwrap();
        for method in [Method::Cs, Method::StpCs] {
            let scheme = SensingScheme::new(method, 2, MatrixKind::Gaussian, 8).unwrap();
            let (rep, eval) = run_once(&img, &img, &scheme, &l, 1.0, &SolverConfig::default()).unwrap();
            assert!(rep.all_converged());
            assert!(eval.quality.mae <= 1.0);
        }
    }

    #[test]
    fn reconstructor_rejects_foreign_packets() {
        let img = ramp(8, 8);
        let l = BlockLayout::square(&img, 8).unwrap();
        let s1 = SensingScheme::new(Method::Cs, 1, MatrixKind::Gaussian, 1).unwrap();
        let p1 = compress(&img, &s1, &l, 0.5).unwrap();
        let p2 = compress(&img, &s1.with_seed(2), &l, 0.5).unwrap();
        let rec = Reconstructor::for_packet(&p1, &basis_for(&p1).unwrap(), &SolverConfig::default()).unwrap();
        assert!(rec.reconstruct(&p2).is_err());
        assert!(reconstruct(&p1, &DctBasis::new(32).unwrap(), &SolverConfig::default()).is_err());
    }

    #[test]
    fn noise_examples() {
        let img = ramp(32, 32);
        assert_eq!(inject_noise(&img, &NoiseSpec::new(0.0, 1).unwrap()).unwrap(), img);
        let white = GrayImage::filled(16, 16, 255).unwrap();
        let noisy = inject_noise(&white, &NoiseSpec::new(0.01, 3).unwrap()).unwrap();
        assert!(noisy.pixels().iter().any(|p| *p < 255));
        assert!(NoiseSpec::new(-1.0, 0).is_err());
        let a = inject_noise(&img, &NoiseSpec::default()).unwrap();
        assert_eq!(a, inject_noise(&img, &NoiseSpec::default()).unwrap());
    }

    #[test]
    fn noise_variance_matches_request() {
        let e = noise_field(&NoiseSpec::new(0.001, 42).unwrap(), 65536);
        let n = e.len() as f64;
        let var = e.iter().map(|v| v * v).sum::<f64>() / n;
        // The sample variance has relative sd √(2/n) ≈ 0.0055; ±10% is ~18 sd.
        assert!((var - 0.001).abs() <= 1e-4, "{var}");
    }

    #[test]
    fn cr_grid_parsing() {
        let g = parse_cr_grid("0.05:0.5:0.05").unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[9], 0.5);
        assert_eq!(g[2], 0.15);
        assert_eq!(parse_cr_grid("0.05:1.0:0.05").unwrap().len(), 20);
        assert_eq!(parse_cr_grid("0.3,0.5").unwrap(), vec![0.3, 0.5]);
        assert!(parse_cr_grid("0:0.5:0.1").is_err());
        assert!(parse_cr_grid("0.5:0.1:0.1").is_err());
        assert!(parse_cr_grid("x").is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|k| derive_seed(7, k)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 100);
        assert_eq!(derive_seed(7, 3), s[3]);
    }

    #[test]
    fn dense_matrix_accounting() {
        let cs = TransmissionCost::dense(Method::Cs, 1, 4096, 2048, 16).unwrap();
        let dk = TransmissionCost::dense(Method::DkStpCs, 2, 4096, 2048, 16).unwrap();
        assert_eq!(dk.matrix_bytes * 2, cs.matrix_bytes);
        assert_eq!(cs.matrix_bytes, 2048 * 4096 * 8);
    }
}
