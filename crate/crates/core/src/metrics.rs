//! Image quality, the three-term error decomposition and error maps.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::io::GrayImage;
use crate::matrix::{norm1, norm2, Signal};
use crate::stp::{equalize_slice, group_sum_slice};

/// Peak intensity of 8-bit images.
pub const MAX_I: f64 = 255.0;

/// Number of histogram bins over the signed error range `[-1, 1]`.
pub const HIST_BINS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    /// `f64::INFINITY` when the images are identical.
    #[serde(serialize_with = "finite_or_string")]
    pub psnr_db: f64,
    pub mse: f64,
    /// Mean absolute error in 8-bit levels.
    pub mae: f64,
}

impl QualityReport {
    pub fn is_exact(&self) -> bool {
        self.mse == 0.0
    }
}

fn finite_or_string<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("Infinite")
    }
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (MAX_I * MAX_I / mse).log10()
    }
}

/// MSE, PSNR and MAE over 8-bit pixel values.
pub fn quality(original: &GrayImage, recovered: &GrayImage) -> Result<QualityReport> {
    if original.width() != recovered.width() || original.height() != recovered.height() {
        return Err(Error::DimensionMismatch(format!(
            "comparing {}x{} with {}x{}",
            original.width(),
            original.height(),
            recovered.width(),
            recovered.height()
        )));
    }
    let n = original.pixels().len() as f64;
    let (mut se, mut ae) = (0u64, 0u64);
    for (&a, &b) in original.pixels().iter().zip(recovered.pixels()) {
        let d = (a as i64 - b as i64).unsigned_abs();
        se += d * d;
        ae += d;
    }
    let mse = se as f64 / n;
    Ok(QualityReport {
        psnr_db: psnr_from_mse(mse),
        mse,
        mae: ae as f64 / n,
    })
}

/// Three-term decomposition of the error between a signal `x` and its
/// reconstruction `x_star` under grouping factor `γ`.
///
/// With `x̄ = equalize(group_sum(x))`, the distribution error is
/// `‖x* − x̄‖₁`, the compressed sensing error `‖x^γ − x^{γ*}‖₁` and the
/// original signal error `‖x̄ − x‖₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorDecomposition {
    pub distribution_error: f64,
    pub cs_error: f64,
    pub original_error: f64,
    pub total_l2: f64,
    /// Sum of the three terms.
    pub bound_paper: f64,
    /// Distribution + 2·cs + original, which always bounds `total_l2`.
    pub bound_safe: f64,
}

impl ErrorDecomposition {
    pub fn paper_bound_holds(&self) -> bool {
        self.total_l2 <= self.bound_paper
    }
}

pub fn decompose_error(x: &Signal, x_star: &Signal, gamma: usize) -> Result<ErrorDecomposition> {
    decompose_slices(x, x_star, gamma)
}

pub(crate) fn decompose_slices(x: &[f64], x_star: &[f64], gamma: usize) -> Result<ErrorDecomposition> {
    if x.len() != x_star.len() {
        return Err(Error::DimensionMismatch(format!(
            "signal of dimension {} against reconstruction of dimension {}",
            x.len(),
            x_star.len()
        )));
    }
    let xg = group_sum_slice(x, gamma)?;
    let xg_star = group_sum_slice(x_star, gamma)?;
    let x_bar = equalize_slice(&xg, gamma);
    let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum::<f64>();
    let distribution_error = l1(x_star, &x_bar);
    let cs_error = l1(&xg, &xg_star);
    let original_error = l1(&x_bar, x);
    let diff: Vec<f64> = x_star.iter().zip(x).map(|(a, b)| a - b).collect();
    let total_l2 = norm2(&diff);
    let d = ErrorDecomposition {
        distribution_error,
        cs_error,
        original_error,
        total_l2,
        bound_paper: distribution_error + cs_error + original_error,
        bound_safe: distribution_error + 2.0 * cs_error + original_error,
    };
    // Rounding slack proportional to the magnitudes involved.
    let slack = 1e-12 * (norm1(x) + norm1(x_star)).max(1.0);
    if d.total_l2 > d.bound_safe + slack {
        return Err(Error::Guard(format!(
            "error bound violated: total {} exceeds {}",
            d.total_l2, d.bound_safe
        )));
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub low: f64,
    pub high: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(low: f64, high: f64, bins: usize) -> Self {
        assert!(high > low && bins > 0);
        Self {
            low,
            high,
            counts: vec![0; bins],
        }
    }

    pub fn bin_width(&self) -> f64 {
        (self.high - self.low) / self.counts.len() as f64
    }

    pub fn bin_of(&self, v: f64) -> usize {
        let last = self.counts.len() - 1;
        let i = ((v - self.low) / self.bin_width()).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(last)
        }
    }

    pub fn add(&mut self, v: f64) {
        let b = self.bin_of(v);
        self.counts[b] += 1;
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        (self.low + i as f64 * w, self.low + (i + 1) as f64 * w)
    }

    /// Index of the fullest bin (lowest index on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    pub fn rows(&self) -> Vec<crate::io::HistogramRow> {
        (0..self.counts.len())
            .map(|i| {
                let (bin_low, bin_high) = self.bin_edges(i);
                crate::io::HistogramRow {
                    bin_low,
                    bin_high,
                    count: self.counts[i],
                }
            })
            .collect()
    }
}

/// Per-pixel original signal error `x − x̄` of an image.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMap {
    pub width: usize,
    pub height: usize,
    /// Signed error on the `[0, 1]` scale, row-major.
    pub signed: Vec<f64>,
    pub histogram: Histogram,
    /// Mean of `|x − x̄|` on the `[0, 1]` scale.
    pub mae: f64,
}

impl ErrorMap {
    /// `|x − x̄|` as an 8-bit image, 255 meaning an error of 1.
    pub fn heatmap(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |r, c| {
            crate::io::quantize(self.signed[r * self.width + c].abs())
        })
        .expect("dimensions come from a valid image")
    }
}

/// Error field left by replacing every group of `γ` consecutive pixels
/// (image vectorized column by column) with its mean.
pub fn mean_reconstruction_error_map(image: &GrayImage, gamma: usize) -> Result<ErrorMap> {
    let (w, h) = (image.width(), image.height());
    let x = image.to_normalized_column_major();
    let xg = group_sum_slice(&x, gamma)?;
    let x_bar = equalize_slice(&xg, gamma);
    let mut signed = vec![0.0; w * h];
    let mut hist = Histogram::new(-1.0, 1.0, HIST_BINS);
    let mut total = 0.0;
    for c in 0..w {
        for r in 0..h {
            let i = c * h + r;
            let e = x[i] - x_bar[i];
            signed[r * w + c] = e;
            hist.add(e);
            total += e.abs();
        }
    }
    Ok(ErrorMap {
        width: w,
        height: h,
        signed,
        histogram: hist,
        mae: total / (w * h) as f64,
    })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    pearson(&ra, &rb)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
