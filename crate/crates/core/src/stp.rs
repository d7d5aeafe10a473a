//! Semi-tensor product algebra.
//!
//! Kronecker product, the classic semi-tensor product (STP), the weighted
//! dimension-keeping STP, and the group-sum / equalization pair that lets the
//! weighted DK-STP measurement `(A ⊗ ε_γᵀ) x` be applied as `A x^γ / √γ`
//! without ever forming the expanded matrix.
//!
//! Groups are contiguous and non-overlapping: group `j` (zero-based) covers
//! indices `j·γ .. (j+1)·γ`.

use crate::error::{Error, Result};
use crate::matrix::{checked_entries, Matrix, Signal};

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Least common multiple, failing on overflow or when the result would
/// exceed the matrix entry limit.
pub fn lcm(a: usize, b: usize) -> Result<usize> {
    let t = (a / gcd(a, b))
        .checked_mul(b)
        .ok_or_else(|| Error::Overflow(format!("lcm({a}, {b}) overflows")))?;
    checked_entries(t, 1)?;
    Ok(t)
}

/// Kronecker product `a ⊗ b`.
pub fn kronecker(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let rows = a
        .rows()
        .checked_mul(b.rows())
        .ok_or_else(|| Error::Overflow("kronecker row count".into()))?;
    let cols = a
        .cols()
        .checked_mul(b.cols())
        .ok_or_else(|| Error::Overflow("kronecker column count".into()))?;
    checked_entries(rows, cols)?;
    let (br, bc) = (b.rows(), b.cols());
    Ok(Matrix::from_fn(rows, cols, |i, j| {
        a.get(i / br, j / bc) * b.get(i % br, j % bc)
    }))
}

/// Semi-tensor product `(a ⊗ I_{t/n})(b ⊗ I_{t/p})` with `t = lcm(n, p)`.
pub fn stp(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let t = lcm(a.cols(), b.rows())?;
    if t == a.cols() && t == b.rows() {
        return a.matmul(b);
    }
    let left = kronecker(a, &Matrix::identity(t / a.cols()))?;
    let right = kronecker(b, &Matrix::identity(t / b.rows()))?;
    left.matmul(&right)
}

/// Unweighted dimension-keeping STP `(a ⊗ 1ᵀ_{t/n})(b ⊗ 1_{t/p})`.
///
/// Kept as a reference for the weighted variant; production code only uses
/// [`dkstp_weighted`].
pub fn dkstp_unweighted(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    dkstp_with_weights(a, b, 1.0, 1.0)
}

/// Weighted dimension-keeping STP `(a ⊗ ε_{t/n}ᵀ)(b ⊗ ε_{t/p})` where
/// `ε_k = 1_k / √k`. The result is always `a.rows() × b.cols()`.
pub fn dkstp_weighted(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let t = lcm(a.cols(), b.rows())?;
    let wa = 1.0 / ((t / a.cols()) as f64).sqrt();
    let wb = 1.0 / ((t / b.rows()) as f64).sqrt();
    dkstp_with_weights(a, b, wa, wb)
}

fn dkstp_with_weights(a: &Matrix, b: &Matrix, wa: f64, wb: f64) -> Result<Matrix> {
    let t = lcm(a.cols(), b.rows())?;
    let ra = t / a.cols();
    let rb = t / b.rows();
    if ra == 1 && rb == 1 {
        return a.matmul(b);
    }
    let w = wa * wb;
    Ok(Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        let mut acc = 0.0;
        for l in 0..t {
            acc += a.get(i, l / ra) * b.get(l / rb, j);
        }
        acc * w
    }))
}

/// The weight row `ε_γᵀ` as a `1 × γ` matrix.
pub fn epsilon_row(gamma: usize) -> Matrix {
    let w = 1.0 / (gamma as f64).sqrt();
    Matrix::from_fn(1, gamma, |_, _| w)
}

/// Materializes `a ⊗ ε_γᵀ`. Only meant for analysis and cross-checks; the
/// measurement path uses [`apply_dkstp_operator`].
pub fn expand_dkstp(a: &Matrix, gamma: usize) -> Result<Matrix> {
    check_gamma(gamma)?;
    kronecker(a, &epsilon_row(gamma))
}

fn check_gamma(gamma: usize) -> Result<()> {
    if gamma == 0 {
        return Err(Error::InvalidArgument("gamma must be positive".into()));
    }
    Ok(())
}

/// Sums of consecutive, non-overlapping windows of length `gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSumSignal {
    gamma: usize,
    values: Vec<f64>,
}

impl GroupSumSignal {
    pub fn new(values: Vec<f64>, gamma: usize) -> Result<Self> {
        check_gamma(gamma)?;
        if values.is_empty() {
            return Err(Error::InvalidArgument("group-sum signal must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("group-sum signal"));
        }
        Ok(Self { gamma, values })
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn groups(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_signal(self) -> Signal {
        Signal::from_vec_unchecked(self.values)
    }
}

/// `x^γ`: element `j` is the sum of `x[jγ .. (j+1)γ]`.
pub fn group_sum(x: &Signal, gamma: usize) -> Result<GroupSumSignal> {
    Ok(GroupSumSignal {
        gamma,
        values: group_sum_slice(x, gamma)?,
    })
}

pub(crate) fn group_sum_slice(x: &[f64], gamma: usize) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if !x.len().is_multiple_of(gamma) {
        return Err(Error::DimensionMismatch(format!(
            "gamma {gamma} does not divide signal dimension {}",
            x.len()
        )));
    }
    if gamma == 1 {
        return Ok(x.to_vec());
    }
    Ok(x.chunks_exact(gamma).map(|g| g.iter().sum()).collect())
}

/// Spreads each group sum evenly over its `γ` positions.
pub fn equalize(xg: &GroupSumSignal) -> Signal {
    Signal::from_vec_unchecked(equalize_slice(&xg.values, xg.gamma))
}

pub(crate) fn equalize_slice(values: &[f64], gamma: usize) -> Vec<f64> {
    let g = gamma as f64;
    values
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v / g, gamma))
        .collect()
}

/// `(a ⊗ ε_γᵀ) x` computed as `a · x^γ / √γ`.
pub fn apply_dkstp_operator(a: &Matrix, gamma: usize, x: &Signal) -> Result<Signal> {
    check_gamma(gamma)?;
    let expected = a
        .cols()
        .checked_mul(gamma)
        .ok_or_else(|| Error::Overflow("operator input dimension".into()))?;
    if x.dim() != expected {
        return Err(Error::DimensionMismatch(format!(
            "operator with {} columns and gamma {gamma} expects dimension {expected}, got {}",
            a.cols(),
            x.dim()
        )));
    }
    Ok(Signal::from_vec_unchecked(apply_dkstp_slice(a, gamma, x)))
}

pub(crate) fn apply_dkstp_slice(a: &Matrix, gamma: usize, x: &[f64]) -> Vec<f64> {
    let xg = group_sum_slice(x, gamma).expect("dimension checked by caller");
    let mut y = vec![0.0; a.rows()];
    a.mul_vec_into(&xg, &mut y);
    if gamma > 1 {
        let w = 1.0 / (gamma as f64).sqrt();
        y.iter_mut().for_each(|v| *v *= w);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn sig(v: &[f64]) -> Signal {
        Signal::new(v.to_vec()).unwrap()
    }

    /// Independent materialization of `a ⊗ ε_γᵀ` straight from the index formula.
    fn expanded_oracle(a: &Matrix, gamma: usize) -> Matrix {
        let w = 1.0 / (gamma as f64).sqrt();
        Matrix::from_fn(a.rows(), a.cols() * gamma, |i, j| a.get(i, j / gamma) * w)
    }

    fn naive_matvec(a: &Matrix, x: &[f64]) -> Vec<f64> {
        (0..a.rows())
            .map(|i| (0..a.cols()).map(|j| a.get(i, j) * x[j]).sum())
            .collect()
    }

    #[test]
    fn kronecker_identity_and_expansion() {
        let b = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(kronecker(&Matrix::identity(1), &b).unwrap(), b);
        let k = kronecker(&m(&[&[1.0, 2.0]]), &m(&[&[1.0], &[1.0]])).unwrap();
        assert_eq!(k, m(&[&[1.0, 2.0], &[1.0, 2.0]]));
    }

    #[test]
    fn kronecker_with_identity_matches_index_formula() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let i2 = Matrix::identity(2);
        let k = kronecker(&a, &i2).unwrap();
        assert_eq!((k.rows(), k.cols()), (4, 4));
        for i in 0..2 {
            for j in 0..2 {
                for r in 0..2 {
                    for s in 0..2 {
                        assert_eq!(k.get(i * 2 + r, j * 2 + s), a.get(i, j) * i2.get(r, s));
                    }
                }
            }
        }
    }

    #[test]
    fn kronecker_rejects_oversized_result() {
        let big = Matrix::zeros(1 << 15, 1);
        let r = kronecker(&big, &Matrix::zeros(1 << 14, 1));
        assert!(matches!(r, Err(Error::Overflow(_))));
    }

    #[test]
    fn stp_degenerates_to_matmul() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let b = m(&[&[1.0, 0.0], &[0.0, 1.0], &[2.0, -1.0]]);
        assert_eq!(stp(&a, &b).unwrap(), a.matmul(&b).unwrap());
    }

    #[test]
    fn stp_mismatched_dimensions() {
        // (a ⊗ I_2)(b ⊗ I_1) with a = [1 1], b = (1,2,3,4)ᵀ
        let a = m(&[&[1.0, 1.0]]);
        let b = m(&[&[1.0], &[2.0], &[3.0], &[4.0]]);
        let r = stp(&a, &b).unwrap();
        assert_eq!(r, m(&[&[4.0], &[6.0]]));
        assert_eq!(
            stp(&Matrix::identity(2), &Matrix::identity(4)).unwrap(),
            Matrix::identity(4)
        );
    }

    #[test]
    fn weighted_dkstp_examples() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[1.0], &[0.0], &[2.0], &[0.0]]);
        let r = dkstp_weighted(&a, &b).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((r.get(0, 0) - 5.0 * s).abs() < 1e-15);
        assert!((r.get(1, 0) - 11.0 * s).abs() < 1e-15);

        let r = dkstp_weighted(&Matrix::identity(2), &m(&[&[1.0], &[2.0], &[3.0], &[4.0]])).unwrap();
        assert!((r.get(0, 0) - 3.0 * s).abs() < 1e-15);
        assert!((r.get(1, 0) - 7.0 * s).abs() < 1e-15);

        let c = m(&[&[1.0, -1.0], &[0.5, 2.0]]);
        assert_eq!(dkstp_weighted(&a, &c).unwrap(), a.matmul(&c).unwrap());
    }

    #[test]
    fn weighted_dkstp_matches_materialized_factors() {
        let a = Matrix::from_fn(3, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let b = Matrix::from_fn(6, 2, |i, j| ((i * 2 + j) % 7) as f64 * 0.5);
        // t = lcm(4, 6) = 12
        let left = kronecker(&a, &epsilon_row(3)).unwrap();
        let right = kronecker(&b, &epsilon_row(2).transpose()).unwrap();
        let oracle = left.matmul(&right).unwrap();
        let r = dkstp_weighted(&a, &b).unwrap();
        assert!(r.max_abs_diff(&oracle) < 1e-12);

        let un = dkstp_unweighted(&a, &b).unwrap();
        let ones_l = kronecker(&a, &Matrix::from_fn(1, 3, |_, _| 1.0)).unwrap();
        let ones_r = kronecker(&b, &Matrix::from_fn(2, 1, |_, _| 1.0)).unwrap();
        assert!(un.max_abs_diff(&ones_l.matmul(&ones_r).unwrap()) < 1e-12);
    }

    #[test]
    fn group_sum_examples() {
        let g = group_sum(&sig(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(g.values(), &[3.0, 7.0]);
        let x = sig(&[1.5, -2.0, 0.0]);
        assert_eq!(group_sum(&x, 1).unwrap().values(), x.values());
        assert_eq!(group_sum(&Signal::zeros(6), 3).unwrap().values(), &[0.0, 0.0]);
        assert!(matches!(group_sum(&x, 2), Err(Error::DimensionMismatch(_))));
        assert!(group_sum(&x, 0).is_err());
    }

    #[test]
    fn equalize_examples() {
        let e = equalize(&GroupSumSignal::new(vec![3.0, 7.0], 2).unwrap());
        assert_eq!(e.values(), &[1.5, 1.5, 3.5, 3.5]);
        let one = GroupSumSignal::new(vec![1.0, -4.0], 1).unwrap();
        assert_eq!(equalize(&one).values(), &[1.0, -4.0]);
    }

    #[test]
    fn dkstp_operator_examples() {
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        let y = apply_dkstp_operator(&Matrix::identity(2), 2, &x).unwrap();
        assert!((y[0] - 2.121_320_343_559_642).abs() < 1e-12);
        assert!((y[1] - 4.949_747_468_305_833).abs() < 1e-12);

        let a = m(&[&[1.0, 2.0, 0.0, 1.0], &[0.0, -1.0, 3.0, 2.0]]);
        let y = apply_dkstp_operator(&a, 1, &x).unwrap();
        assert_eq!(y.values(), a.mul_vec(&x).unwrap().as_slice());

        assert!(apply_dkstp_operator(&a, 2, &x).is_err());
    }

    #[test]
    fn dkstp_operator_random_against_materialized() {
        let a = Matrix::from_fn(8, 4, |i, j| ((i * 31 + j * 17) % 13) as f64 / 6.0 - 1.0);
        let x = sig(&(0..12).map(|i| ((i * 7) % 11) as f64 - 5.0).collect::<Vec<_>>());
        let y = apply_dkstp_operator(&a, 3, &x).unwrap();
        let oracle = naive_matvec(&expanded_oracle(&a, 3), &x);
        let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (u, v) in y.iter().zip(&oracle) {
            assert!((u - v).abs() <= 1e-12 * scale);
        }
        assert_eq!(expand_dkstp(&a, 3).unwrap(), expanded_oracle(&a, 3));
    }

    proptest! {
        #[test]
        fn equalize_then_group_sum_is_identity(
            vals in proptest::collection::vec(-1e3f64..1e3, 1..40),
            gamma in 1usize..6,
        ) {
            let xg = GroupSumSignal::new(vals.clone(), gamma).unwrap();
            let back = group_sum(&equalize(&xg), gamma).unwrap();
            for (a, b) in back.values().iter().zip(&vals) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }

        #[test]
        fn group_sum_is_linear(
            groups in 1usize..10,
            gamma in 1usize..5,
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
            seed in any::<u64>(),
        ) {
            let n = groups * gamma;
            let f = |k: u64| ((seed.wrapping_mul(6364136223846793005).wrapping_add(k) >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            let x: Vec<f64> = (0..n as u64).map(f).collect();
            let z: Vec<f64> = (0..n as u64).map(|k| f(k + 1000)).collect();
            let comb: Vec<f64> = x.iter().zip(&z).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = group_sum_slice(&comb, gamma).unwrap();
            let gx = group_sum_slice(&x, gamma).unwrap();
            let gz = group_sum_slice(&z, gamma).unwrap();
            for i in 0..groups {
                prop_assert!((lhs[i] - (alpha * gx[i] + beta * gz[i])).abs() <= 1e-12);
            }
        }

        #[test]
        fn group_sum_never_increases_support(
            vals in proptest::collection::vec(-3i32..4, 1..12),
            gamma in 1usize..4,
        ) {
            let mut v: Vec<f64> = vals.iter().map(|&k| k as f64).collect();
            while !v.len().is_multiple_of(gamma) { v.push(0.0); }
            let x = Signal::new(v).unwrap();
            let g = group_sum(&x, gamma).unwrap().into_signal();
            prop_assert!(g.l0() <= x.l0());
        }

        #[test]
        fn stp_and_dkstp_equal_product_when_matched(
            r in 1usize..5, k in 1usize..5, c in 1usize..5, seed in any::<u32>(),
        ) {
            let a = Matrix::from_fn(r, k, |i, j| ((seed as usize + i * 3 + j * 5) % 9) as f64 - 4.0);
            let b = Matrix::from_fn(k, c, |i, j| ((seed as usize + i * 7 + j) % 5) as f64 - 2.0);
            let p = a.matmul(&b).unwrap();
            prop_assert_eq!(stp(&a, &b).unwrap(), p.clone());
            prop_assert_eq!(dkstp_weighted(&a, &b).unwrap(), p);
        }
    }
}
