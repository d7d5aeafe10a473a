//! Orthonormal DCT-II sparsifying basis.
//!
//! The analysis matrix `C` has rows `c_k[i] = α_k cos(π (2i+1) k / 2n)` with
//! `α_0 = 1/√n` and `α_k = √(2/n)` otherwise. Synthesis is `Θ = Cᵀ`, so
//! `x = Θ s` and `s = C x`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Signal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Synthesis,
    Analysis,
}

/// Dense orthonormal DCT basis of a fixed dimension.
#[derive(Clone, Debug)]
pub struct DctBasis {
    dim: usize,
    direction: Direction,
    analysis: Matrix,
}

impl DctBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("DCT dimension must be positive".into()));
        }
        let n = dim as f64;
        let (a0, ak) = ((1.0 / n).sqrt(), (2.0 / n).sqrt());
        let analysis = Matrix::from_fn(dim, dim, |k, i| {
            let alpha = if k == 0 { a0 } else { ak };
            alpha * (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n)).cos()
        });
        Ok(Self {
            dim,
            direction: Direction::Synthesis,
            analysis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Direction used by [`DctBasis::apply`].
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    /// Analysis matrix `C` (rows are basis vectors).
    pub fn analysis_matrix(&self) -> &Matrix {
        &self.analysis
    }

    /// Synthesis matrix `Θ = Cᵀ`.
    pub fn synthesis_matrix(&self) -> Matrix {
        self.analysis.transpose()
    }

    /// `Θ s`.
    pub fn synthesize(&self, s: &Signal) -> Result<Signal> {
        self.check(s.dim())?;
        Ok(Signal::from_vec_unchecked(self.analysis.tr_mul_vec(s)?))
    }

    /// `Θᵀ x`.
    pub fn analyze(&self, x: &Signal) -> Result<Signal> {
        self.check(x.dim())?;
        Ok(Signal::from_vec_unchecked(self.analysis.mul_vec(x)?))
    }

    /// Applies the basis in its configured direction.
    pub fn apply(&self, v: &Signal) -> Result<Signal> {
        match self.direction {
            Direction::Synthesis => self.synthesize(v),
            Direction::Analysis => self.analyze(v),
        }
    }

    pub(crate) fn synthesize_slice(&self, s: &[f64]) -> Vec<f64> {
        self.analysis.tr_mul_vec(s).expect("dimension checked by caller")
    }

    /// `psi · Θ`, the sensing matrix in the coefficient domain.
    pub fn compose(&self, psi: &Matrix) -> Result<Matrix> {
        self.check(psi.cols())?;
        // psi · Cᵀ computed as (C · psiᵀ)ᵀ keeps the product in nalgebra.
        let a = psi.to_dmatrix();
        let c = self.analysis.to_dmatrix();
        Ok(Matrix::from_dmatrix(&(a * c.transpose())))
    }

    fn check(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "DCT basis of dimension {} applied to dimension {dim}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// `dct_synthesize` for callers that prefer free functions.
pub fn dct_synthesize(basis: &DctBasis, s: &Signal) -> Result<Signal> {
    basis.synthesize(s)
}

pub fn dct_analyze(basis: &DctBasis, x: &Signal) -> Result<Signal> {
    basis.analyze(x)
}
