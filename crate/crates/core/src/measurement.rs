//! Seeded measurement matrices and the three sensing schemes.
//!
//! Matrices are never shipped: a [`MatrixDescriptor`] (kind, shape, seed,
//! scaling) regenerates the same matrix bit for bit. The generator is
//! ChaCha8 seeded through `seed_from_u64`; normal variates use the
//! Box–Muller transform (both outputs consumed, in order) with `libm`
//! transcendental functions so the stream does not depend on the platform
//! math library.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{checked_entries, Matrix, Signal};
use crate::stp::apply_dkstp_slice;

/// Deterministic random source shared by matrix generation, noise and
/// sampling.
pub struct SeededRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        // Lemire's multiply-shift; bias is below 2^-64 · n and irrelevant here.
        ((self.inner.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal variate.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    /// `+1` or `-1` with equal probability.
    pub fn next_sign(&mut self) -> f64 {
        if self.inner.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `k` distinct indices from `0..n`, sorted ascending.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        let mut out = pool[..k].to_vec();
        out.sort_unstable();
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Gaussian,
    Bernoulli,
    Toeplitz,
}

impl MatrixKind {
    pub fn code(self) -> u8 {
        match self {
            MatrixKind::Gaussian => 0,
            MatrixKind::Bernoulli => 1,
            MatrixKind::Toeplitz => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(MatrixKind::Gaussian),
            1 => Ok(MatrixKind::Bernoulli),
            2 => Ok(MatrixKind::Toeplitz),
            _ => Err(Error::Format(format!("unknown matrix kind code {code}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::Gaussian => "gaussian",
            MatrixKind::Bernoulli => "bernoulli",
            MatrixKind::Toeplitz => "toeplitz",
        }
    }
}

impl std::str::FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(MatrixKind::Gaussian),
            "bernoulli" => Ok(MatrixKind::Bernoulli),
            "toeplitz" => Ok(MatrixKind::Toeplitz),
            _ => Err(Error::InvalidArgument(format!("unknown matrix kind '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Raw entries (`N(0,1)` or `±1`).
    Unit,
    /// Entries multiplied by `1/√rows`.
    #[default]
    InvSqrtM,
}

impl Scaling {
    pub fn code(self) -> u8 {
        match self {
            Scaling::Unit => 0,
            Scaling::InvSqrtM => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Scaling::Unit),
            1 => Ok(Scaling::InvSqrtM),
            _ => Err(Error::Format(format!("unknown scaling code {code}"))),
        }
    }
}

/// Everything needed to regenerate a measurement matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatrixDescriptor {
    pub kind: MatrixKind,
    pub rows: u32,
    pub cols: u32,
    pub seed: u64,
    pub scaling: Scaling,
}

impl MatrixDescriptor {
    /// Encoded size: kind u8, rows u32, cols u32, seed u64, scaling u8.
    pub const ENCODED_LEN: usize = 18;

    pub fn new(kind: MatrixKind, rows: usize, cols: usize, seed: u64, scaling: Scaling) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "descriptor dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let rows = u32::try_from(rows).map_err(|_| Error::Overflow(format!("{rows} rows")))?;
        let cols = u32::try_from(cols).map_err(|_| Error::Overflow(format!("{cols} cols")))?;
        Ok(Self { kind, rows, cols, seed, scaling })
    }

    pub fn rows(&self) -> usize {
        self.rows as usize
    }

    pub fn cols(&self) -> usize {
        self.cols as usize
    }

    pub fn to_bytes(&self) -> [u8; Self::ENCODED_LEN] {
        let mut b = [0u8; Self::ENCODED_LEN];
        b[0] = self.kind.code();
        b[1..5].copy_from_slice(&self.rows.to_le_bytes());
        b[5..9].copy_from_slice(&self.cols.to_le_bytes());
        b[9..17].copy_from_slice(&self.seed.to_le_bytes());
        b[17] = self.scaling.code();
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < Self::ENCODED_LEN {
            return Err(Error::Length {
                what: "matrix descriptor",
                expected: Self::ENCODED_LEN as u64,
                actual: b.len() as u64,
            });
        }
        let rows = u32::from_le_bytes(b[1..5].try_into().unwrap());
        let cols = u32::from_le_bytes(b[5..9].try_into().unwrap());
        if rows == 0 || cols == 0 {
            return Err(Error::Format(format!("descriptor with empty shape {rows}x{cols}")));
        }
        Ok(Self {
            kind: MatrixKind::from_code(b[0])?,
            rows,
            cols,
            seed: u64::from_le_bytes(b[9..17].try_into().unwrap()),
            scaling: Scaling::from_code(b[17])?,
        })
    }

    pub fn with_scaling(self, scaling: Scaling) -> Self {
        Self { scaling, ..self }
    }
}

/// Regenerates the matrix a descriptor stands for.
///
/// Gaussian and Bernoulli entries are drawn row by row. Toeplitz matrices
/// draw one sequence `g` of `rows + cols - 1` normals and set
/// `t[i][j] = g[i - j + cols - 1]`.
pub fn generate_matrix(d: &MatrixDescriptor) -> Result<Matrix> {
    let (m, n) = (d.rows(), d.cols());
    let len = checked_entries(m, n)?;
    let mut rng = SeededRng::new(d.seed);
    let scale = match d.scaling {
        Scaling::Unit => 1.0,
        Scaling::InvSqrtM => 1.0 / (m as f64).sqrt(),
    };
    let data: Vec<f64> = match d.kind {
        MatrixKind::Gaussian => (0..len).map(|_| rng.next_normal() * scale).collect(),
        MatrixKind::Bernoulli => (0..len).map(|_| rng.next_sign() * scale).collect(),
        MatrixKind::Toeplitz => {
            let g: Vec<f64> = (0..m + n - 1).map(|_| rng.next_normal() * scale).collect();
            let mut data = Vec::with_capacity(len);
            for i in 0..m {
                for j in 0..n {
                    data.push(g[i + n - 1 - j]);
                }
            }
            data
        }
    };
    Ok(Matrix::from_parts(m, n, data))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Dense `m × p` matrix.
    Cs,
    /// `A_{m/γ × p/γ} ⊗ I_γ`.
    StpCs,
    /// `A_{m × p/γ} ⊗ ε_γᵀ`, applied through group sums.
    DkStpCs,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Cs, Method::StpCs, Method::DkStpCs];

    pub fn code(self) -> u8 {
        match self {
            Method::Cs => 0,
            Method::StpCs => 1,
            Method::DkStpCs => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Method::Cs),
            1 => Ok(Method::StpCs),
            2 => Ok(Method::DkStpCs),
            _ => Err(Error::Format(format!("unknown method code {code}"))),
        }
    }

    /// Short name used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Method::Cs => "cs",
            Method::StpCs => "stp",
            Method::DkStpCs => "dkstp",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cs" => Ok(Method::Cs),
            "stp" => Ok(Method::StpCs),
            "dkstp" => Ok(Method::DkStpCs),
            _ => Err(Error::InvalidArgument(format!("unknown method '{s}'"))),
        }
    }
}

/// How a signal is measured: method, grouping factor and matrix family.
///
/// The matrix shape is not part of the scheme; it follows from the signal
/// dimension and measurement count in [`SensingScheme::descriptor`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensingScheme {
    pub method: Method,
    pub gamma: usize,
    pub kind: MatrixKind,
    pub seed: u64,
    pub scaling: Scaling,
}

impl SensingScheme {
    /// Plain CS ignores `gamma` and always records 1.
    pub fn new(method: Method, gamma: usize, kind: MatrixKind, seed: u64) -> Result<Self> {
        if gamma == 0 || gamma > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!("gamma must be in 1..=65535, got {gamma}")));
        }
        let gamma = if method == Method::Cs { 1 } else { gamma };
        Ok(Self {
            method,
            gamma,
            kind,
            seed,
            scaling: Scaling::InvSqrtM,
        })
    }

    pub fn with_scaling(self, scaling: Scaling) -> Self {
        Self { scaling, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// `m = round(cr·p)` (at least 1). STP-CS rounds to the nearest positive
    /// multiple of `γ` instead, because its matrix has `m/γ` rows.
    pub fn measurement_count(&self, p: usize, cr: f64) -> Result<usize> {
        if !(cr > 0.0 && cr <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "compression ratio must be in (0, 1], got {cr}"
            )));
        }
        Ok(match self.method {
            Method::StpCs => {
                let g = self.gamma as f64;
                self.gamma * ((cr * p as f64 / g).round() as usize).max(1)
            }
            _ => ((cr * p as f64).round() as usize).max(1),
        })
    }

    /// Shape of the transmitted matrix for signal dimension `p` and `m`
    /// measurements.
    pub fn descriptor(&self, p: usize, m: usize) -> Result<MatrixDescriptor> {
        let (rows, cols) = transmitted_shape(self.method, self.gamma, p, m)?;
        MatrixDescriptor::new(self.kind, rows, cols, self.seed, self.scaling)
    }
}

pub(crate) fn transmitted_shape(method: Method, gamma: usize, p: usize, m: usize) -> Result<(usize, usize)> {
    if p == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "signal dimension and measurement count must be positive (p={p}, m={m})"
        )));
    }
    if gamma == 0 {
        return Err(Error::InvalidArgument("gamma must be positive".into()));
    }
    if method != Method::Cs && !p.is_multiple_of(gamma) {
        return Err(Error::DimensionMismatch(format!(
            "gamma {gamma} does not divide signal dimension {p}"
        )));
    }
    match method {
        Method::Cs => {
            if gamma != 1 {
                return Err(Error::InvalidArgument("plain CS requires gamma = 1".into()));
            }
            Ok((m, p))
        }
        Method::StpCs => {
            if !m.is_multiple_of(gamma) {
                return Err(Error::DimensionMismatch(format!(
                    "gamma {gamma} does not divide measurement count {m}"
                )));
            }
            Ok((m / gamma, p / gamma))
        }
        Method::DkStpCs => Ok((m, p / gamma)),
    }
}

/// A sensing operator `R^p → R^m` built from a (small) stored matrix.
#[derive(Clone, Debug)]
pub struct SensingOperator {
    method: Method,
    gamma: usize,
    descriptor: MatrixDescriptor,
    matrix: Matrix,
    signal_dim: usize,
    measurements: usize,
}

/// Builds the operator for `scheme` on signals of dimension `p` with `m`
/// measurements.
pub fn build_operator(scheme: &SensingScheme, p: usize, m: usize) -> Result<SensingOperator> {
    let descriptor = scheme.descriptor(p, m)?;
    SensingOperator::from_descriptor(scheme.method, scheme.gamma, descriptor, p, m)
}

impl SensingOperator {
    /// Regenerates an operator from a transmitted descriptor.
    pub fn from_descriptor(
        method: Method,
        gamma: usize,
        descriptor: MatrixDescriptor,
        p: usize,
        m: usize,
    ) -> Result<Self> {
        let expected = transmitted_shape(method, gamma, p, m)?;
        if (descriptor.rows(), descriptor.cols()) != expected {
            return Err(Error::DimensionMismatch(format!(
                "descriptor is {}x{} but {} with p={p}, m={m}, gamma={gamma} needs {}x{}",
                descriptor.rows,
                descriptor.cols,
                method.name(),
                expected.0,
                expected.1
            )));
        }
        Ok(Self {
            method,
            gamma,
            descriptor,
            matrix: generate_matrix(&descriptor)?,
            signal_dim: p,
            measurements: m,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn descriptor(&self) -> &MatrixDescriptor {
        &self.descriptor
    }

    /// The matrix that would be transmitted.
    pub fn stored_matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn measurements(&self) -> usize {
        self.measurements
    }

    /// Number of matrix entries that must be transmitted.
    pub fn transmitted_params(&self) -> usize {
        self.matrix.rows() * self.matrix.cols()
    }

    pub fn apply(&self, x: &Signal) -> Result<Signal> {
        if x.dim() != self.signal_dim {
            return Err(Error::DimensionMismatch(format!(
                "operator expects dimension {}, got {}",
                self.signal_dim,
                x.dim()
            )));
        }
        Ok(Signal::from_vec_unchecked(self.apply_slice(x)))
    }

    pub(crate) fn apply_slice(&self, x: &[f64]) -> Vec<f64> {
        match self.method {
            Method::Cs => {
                let mut y = vec![0.0; self.measurements];
                self.matrix.mul_vec_into(x, &mut y);
                y
            }
            Method::DkStpCs => apply_dkstp_slice(&self.matrix, self.gamma, x),
            Method::StpCs => {
                // (A ⊗ I_γ) x: each residue class r mod γ is measured by A.
                let g = self.gamma;
                let mut y = vec![0.0; self.measurements];
                let mut xr = vec![0.0; self.signal_dim / g];
                let mut yr = vec![0.0; self.measurements / g];
                for r in 0..g {
                    for (k, v) in xr.iter_mut().enumerate() {
                        *v = x[k * g + r];
                    }
                    self.matrix.mul_vec_into(&xr, &mut yr);
                    for (k, v) in yr.iter().enumerate() {
                        y[k * g + r] = *v;
                    }
                }
                y
            }
        }
    }
}
