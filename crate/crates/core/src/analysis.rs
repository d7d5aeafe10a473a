//! Desk-scale certification of measurement matrices.
//!
//! Everything here is exhaustive or sampled enumeration over column subsets,
//! so the entry points carry combinatorial guards. Enumeration is always in
//! lexicographic order, which makes witnesses and tie-breaks deterministic.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{least_squares, norm2, Matrix, Signal};
use crate::measurement::SeededRng;

/// Relative singular-value tolerance for linear-dependence decisions.
pub const DEPENDENCE_TOL: f64 = 1e-10;

/// Largest subset size [`spark`] will enumerate.
pub const SPARK_MAX_LIMIT: usize = 12;

/// Largest number of supports exhaustive RIP enumeration will visit.
pub const RIP_MAX_SUPPORTS: u64 = 1_000_000;

/// Lexicographic `k`-subsets of `0..n`.
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Spark {
    /// Smallest dependent subset has this many columns.
    Exact(usize),
    /// All columns are independent; reported as `cols + 1`.
    Full(usize),
    /// No dependent subset up to `limit` columns, but larger ones were not checked.
    AboveLimit(usize),
}

impl Spark {
    /// Spark value when it is known exactly (including the full-rank sentinel).
    pub fn value(self) -> Option<usize> {
        match self {
            Spark::Exact(s) | Spark::Full(s) => Some(s),
            Spark::AboveLimit(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparkResult {
    pub spark: Spark,
    /// Smallest dependent column set found; empty unless `spark` is `Exact`.
    pub witness: Vec<usize>,
}

fn is_dependent(a: &Matrix, cols: &[usize]) -> bool {
    if cols.len() > a.rows() {
        return true;
    }
    a.select_columns(cols).rank(DEPENDENCE_TOL) < cols.len()
}

/// Smallest number of linearly dependent columns, by exhaustive search over
/// subsets of up to `limit` columns.
pub fn spark(a: &Matrix, limit: usize) -> Result<SparkResult> {
    let guard = a.cols().min(SPARK_MAX_LIMIT);
    if limit == 0 || limit > guard {
        return Err(Error::Guard(format!(
            "spark limit must be in 1..={guard} for a matrix with {} columns",
            a.cols()
        )));
    }
    for size in 1..=limit {
        if size > a.rows() {
            // Any rows+1 columns are dependent.
            return Ok(SparkResult {
                spark: Spark::Exact(size),
                witness: (0..size).collect(),
            });
        }
        if let Some(w) = Combinations::new(a.cols(), size).find(|c| is_dependent(a, c)) {
            return Ok(SparkResult {
                spark: Spark::Exact(size),
                witness: w,
            });
        }
    }
    let spark = if limit >= (a.rows() + 1).min(a.cols()) {
        Spark::Full(a.cols() + 1)
    } else {
        Spark::AboveLimit(limit)
    };
    Ok(SparkResult {
        spark,
        witness: Vec::new(),
    })
}

fn unit_columns(a: &Matrix) -> Result<Vec<Vec<f64>>> {
    (0..a.cols())
        .map(|j| {
            let c = a.column(j);
            let n = norm2(&c);
            if n == 0.0 {
                Err(Error::InvalidArgument(format!("column {j} is zero; coherence is undefined")))
            } else {
                Ok(c.into_iter().map(|v| v / n).collect())
            }
        })
        .collect()
}

/// Mutual coherence: largest absolute cosine between two distinct columns.
pub fn coherence(a: &Matrix) -> Result<f64> {
    let cols = unit_columns(a)?;
    let mut mu = 0.0f64;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let c: f64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
            mu = mu.max(c.abs());
        }
    }
    Ok(mu.min(1.0))
}

/// Lower bound on the coherence of an `m × n` matrix, `√((n−m)/(m(n−1)))`,
/// or 0 when `n ≤ m`.
pub fn welch_bound(m: usize, n: usize) -> f64 {
    if n <= m || n < 2 {
        return 0.0;
    }
    ((n - m) as f64 / (m as f64 * (n - 1) as f64)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RipMode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub k: usize,
    /// Largest distortion seen. A lower bound in sampled mode.
    pub delta: f64,
    pub mode: RipMode,
    /// `delta >= 1`: some `k`-column submatrix is (numerically) singular.
    pub failed: bool,
    pub supports_checked: u64,
}

/// Number of random supports visited in sampled mode.
pub const RIP_SAMPLES: usize = 20_000;

/// Distortion of one support: `max(|λ_max − 1|, |1 − λ_min|)` of the Gram
/// matrix of the selected columns.
pub fn support_distortion(a: &Matrix, support: &[usize]) -> f64 {
    let sub = a.select_columns(support);
    let eig = SymmetricEigen::new(sub.gram_cols().to_dmatrix()).eigenvalues;
    let hi = eig.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let lo = eig.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    (hi - 1.0).abs().max((1.0 - lo).abs())
}

/// Restricted isometry constant of order `k`.
///
/// Exhaustive mode visits every support and is exact; sampled mode visits
/// [`RIP_SAMPLES`] random supports drawn from `seed` and yields a lower bound.
pub fn rip_constant(a: &Matrix, k: usize, mode: RipMode, seed: u64) -> Result<RipEstimate> {
    if k == 0 || k > a.cols() {
        return Err(Error::InvalidArgument(format!(
            "RIP order must be in 1..={}, got {k}",
            a.cols()
        )));
    }
    let (delta, checked) = match mode {
        RipMode::Exhaustive => {
            let total = binomial(a.cols(), k);
            if total > RIP_MAX_SUPPORTS {
                return Err(Error::Guard(format!(
                    "C({}, {k}) = {total} supports exceeds the exhaustive limit {RIP_MAX_SUPPORTS}",
                    a.cols()
                )));
            }
            let delta = Combinations::new(a.cols(), k)
                .map(|s| support_distortion(a, &s))
                .fold(0.0f64, f64::max);
            (delta, total)
        }
        RipMode::Sampled => {
            let mut rng = SeededRng::new(seed);
            let delta = (0..RIP_SAMPLES)
                .map(|_| support_distortion(a, &rng.sample_indices(a.cols(), k)))
                .fold(0.0f64, f64::max);
            (delta, RIP_SAMPLES as u64)
        }
    };
    Ok(RipEstimate {
        k,
        delta,
        mode,
        failed: delta >= 1.0,
        supports_checked: checked,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntraGroupReport {
    pub gamma: usize,
    /// Every group's columns are identical.
    pub within_group_equal: bool,
    /// Coherence of the matrix formed by the first column of each group.
    pub cross_group_coherence: f64,
    pub tau: f64,
    pub holds: bool,
}

/// Default incoherence threshold: ten times the Welch bound of the
/// representative matrix, capped at 0.99 (0.99 when the bound is zero).
pub fn default_tau(rows: usize, groups: usize) -> f64 {
    let w = welch_bound(rows, groups);
    if w == 0.0 {
        0.99
    } else {
        (10.0 * w).min(0.99)
    }
}

/// Checks the intra-group correlation structure: identical columns inside
/// each group of `gamma`, incoherent representatives across groups.
pub fn intra_group_check(a: &Matrix, gamma: usize, tau: Option<f64>) -> Result<IntraGroupReport> {
    if gamma == 0 || !a.cols().is_multiple_of(gamma) {
        return Err(Error::DimensionMismatch(format!(
            "gamma {gamma} does not divide column count {}",
            a.cols()
        )));
    }
    let groups = a.cols() / gamma;
    let within_group_equal = (0..a.rows()).all(|i| {
        a.row(i)
            .chunks_exact(gamma)
            .all(|g| g.iter().all(|v| *v == g[0]))
    });
    let reps: Vec<usize> = (0..groups).map(|g| g * gamma).collect();
    let cross_group_coherence = coherence(&a.select_columns(&reps))?;
    let tau = tau.unwrap_or_else(|| default_tau(a.rows(), groups));
    Ok(IntraGroupReport {
        gamma,
        within_group_equal,
        cross_group_coherence,
        tau,
        holds: within_group_equal && cross_group_coherence < tau,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessBounds {
    pub spark: Spark,
    pub coherence: f64,
    /// Largest `k` with `k < spark/2`.
    pub k_spark: usize,
    /// True when the spark search stopped at its limit, making `k_spark` a lower bound.
    pub k_spark_is_lower_bound: bool,
    /// Largest `k` with `k < (1 + 1/μ)/2`.
    pub k_mu: usize,
}

/// Largest integer strictly below `bound`.
fn largest_below(bound: f64) -> usize {
    let c = bound.ceil();
    if c <= 0.0 {
        0
    } else {
        (c as usize).saturating_sub(1)
    }
}

/// Sparsity levels below which `k`-sparse solutions are unique, from spark
/// and from coherence.
pub fn uniqueness_bounds(a: &Matrix, spark_limit: usize) -> Result<UniquenessBounds> {
    let sp = spark(a, spark_limit)?;
    let mu = coherence(a)?;
    let (s, lower) = match sp.spark {
        Spark::Exact(s) | Spark::Full(s) => (s, false),
        Spark::AboveLimit(l) => (l + 1, true),
    };
    let k_mu = if mu == 0.0 {
        a.cols()
    } else {
        largest_below(0.5 * (1.0 + 1.0 / mu))
    };
    Ok(UniquenessBounds {
        spark: sp.spark,
        coherence: mu,
        k_spark: largest_below(s as f64 / 2.0),
        k_spark_is_lower_bound: lower,
        k_mu,
    })
}

/// Limits for [`l0_oracle`].
pub const L0_MAX_COLS: usize = 20;
pub const L0_MAX_K: usize = 4;

/// Exhaustive sparsest solution of `psi·s = y` over supports of size up to
/// `kmax`. A test oracle only: cost grows as `C(n, kmax)`.
///
/// A support is accepted when its least-squares residual is at most
/// `1e-8·‖y‖₂`. Among accepted supports of the smallest size the one with
/// the smaller residual wins, then the lexicographically first.
pub fn l0_oracle(psi: &Matrix, y: &Signal, kmax: usize) -> Result<Signal> {
    let n = psi.cols();
    if n > L0_MAX_COLS || kmax > L0_MAX_K {
        return Err(Error::Guard(format!(
            "l0 oracle supports n <= {L0_MAX_COLS} and kmax <= {L0_MAX_K}, got n = {n}, kmax = {kmax}"
        )));
    }
    if y.dim() != psi.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements for {} rows",
            y.dim(),
            psi.rows()
        )));
    }
    let ynorm = norm2(y);
    if ynorm == 0.0 {
        return Ok(Signal::zeros(n));
    }
    let tol = 1e-8 * ynorm;
    for size in 1..=kmax.min(psi.rows()) {
        let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
        for support in Combinations::new(n, size) {
            let sub = psi.select_columns(&support);
            let Ok(w) = least_squares(&sub, y) else { continue };
            let fit = sub.mul_vec(&w)?;
            let res = norm2(&crate::matrix::sub(&fit, y));
            if res <= tol && best.as_ref().is_none_or(|(r, _, _)| res < *r) {
                best = Some((res, support, w));
            }
        }
        if let Some((_, support, w)) = best {
            let mut s = vec![0.0; n];
            for (j, v) in support.into_iter().zip(w) {
                s[j] = v;
            }
            return Ok(Signal::from_vec_unchecked(s));
        }
    }
    Err(Error::NoSparseSolution { kmax })
}
