//! Grayscale images, binary PGM, the packet file format and CSV records.
//!
//! Packet layout (little-endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `DKSP` |
//! | 1 | version (1) |
//! | 1 | method (0 = CS, 1 = STP-CS, 2 = DK-STP-CS) |
//! | 2 | gamma |
//! | 2, 2 | block width, block height |
//! | 4, 4 | image width, image height |
//! | 4 | measurements per block `m` |
//! | 18 | matrix descriptor (kind u8, rows u32, cols u32, seed u64, scaling u8) |
//!
//! followed by one run of `m` f64 values per block, blocks in column-major
//! order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{MatrixDescriptor, Method};
use crate::pipeline::{BlockLayout, CompressedPacket};

/// 8-bit grayscale image stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!("image must be non-empty, got {width}x{height}")));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::Overflow(format!("{width}x{height} image")))?;
        if pixels.len() != n {
            return Err(Error::Length {
                what: "pixel buffer",
                expected: n as u64,
                actual: pixels.len() as u64,
            });
        }
        Ok(Self { width, height, pixels })
    }

    /// Builds an image from `f(row, col)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: u8) {
        self.pixels[row * self.width + col] = v;
    }

    /// Pixels scaled to `[0, 1]`, stacked column by column.
    pub fn to_normalized_column_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.pixels.len());
        for c in 0..self.width {
            for r in 0..self.height {
                out.push(self.get(r, c) as f64 / 255.0);
            }
        }
        out
    }

    /// Inverse of [`GrayImage::to_normalized_column_major`], clamping to
    /// `[0, 1]` and rounding to 8 bits.
    pub fn from_normalized_column_major(width: usize, height: usize, v: &[f64]) -> Result<Self> {
        if v.len() != width * height {
            return Err(Error::Length {
                what: "column-major pixel vector",
                expected: (width * height) as u64,
                actual: v.len() as u64,
            });
        }
        Self::from_fn(width, height, |r, c| quantize(v[c * height + r]))
    }

    /// Crop of `w × h` pixels with top-left corner at `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, w: usize, h: usize) -> Result<Self> {
        if row + h > self.height || col + w > self.width {
            return Err(Error::DimensionMismatch(format!(
                "{w}x{h} crop at ({row}, {col}) exceeds {}x{} image",
                self.width, self.height
            )));
        }
        Self::from_fn(w, h, |r, c| self.get(row + r, col + c))
    }
}

/// `[0, 1]` value to an 8-bit level, clamping first.
pub fn quantize(v: f64) -> u8 {
    let c = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (c * 255.0).round() as u8
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    if magic != "P5" {
        return Err(Error::Format(format!("expected binary PGM magic P5, found '{magic}'")));
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("only maxval 255 is supported, found {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("missing whitespace after PGM header".into())),
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Overflow(format!("{width}x{height} PGM")))?;
    let raster = &bytes[pos..];
    if raster.len() < n {
        return Err(Error::Length {
            what: "PGM raster",
            expected: n as u64,
            actual: raster.len() as u64,
        });
    }
    GrayImage::new(width, height, raster[..n].to_vec())
}

fn header_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated PGM header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = header_token(bytes, pos)?;
    tok.parse()
        .map_err(|_| Error::Format(format!("PGM {what} '{tok}' is not a number")))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

pub const PACKET_MAGIC: &[u8; 4] = b"DKSP";
pub const PACKET_VERSION: u8 = 1;
pub const PACKET_HEADER_LEN: usize = 24 + MatrixDescriptor::ENCODED_LEN;

pub fn encode_packet(p: &CompressedPacket) -> Result<Vec<u8>> {
    let l = p.layout();
    let narrow = |v: usize, what: &str| -> Result<u16> {
        u16::try_from(v).map_err(|_| Error::Overflow(format!("{what} {v} does not fit the packet header")))
    };
    let wide = |v: usize, what: &str| -> Result<u32> {
        u32::try_from(v).map_err(|_| Error::Overflow(format!("{what} {v} does not fit the packet header")))
    };
    let mut out = Vec::with_capacity(PACKET_HEADER_LEN + p.payload_values() * 8);
    out.extend_from_slice(PACKET_MAGIC);
    out.push(PACKET_VERSION);
    out.push(p.method().code());
    out.extend_from_slice(&narrow(p.gamma(), "gamma")?.to_le_bytes());
    out.extend_from_slice(&narrow(l.block_w, "block width")?.to_le_bytes());
    out.extend_from_slice(&narrow(l.block_h, "block height")?.to_le_bytes());
    out.extend_from_slice(&wide(l.image_w, "image width")?.to_le_bytes());
    out.extend_from_slice(&wide(l.image_h, "image height")?.to_le_bytes());
    out.extend_from_slice(&wide(p.measurements(), "measurement count")?.to_le_bytes());
    out.extend_from_slice(&p.descriptor().to_bytes());
    for block in p.blocks() {
        for v in block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_packet(bytes: &[u8]) -> Result<CompressedPacket> {
    if bytes.len() < PACKET_HEADER_LEN {
        return Err(Error::Length {
            what: "packet header",
            expected: PACKET_HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[..4] != PACKET_MAGIC {
        return Err(Error::Format("not a packet file (bad magic)".into()));
    }
    if bytes[4] != PACKET_VERSION {
        return Err(Error::Format(format!(
            "packet version {} is not supported (expected {PACKET_VERSION})",
            bytes[4]
        )));
    }
    let method = Method::from_code(bytes[5])?;
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]) as usize;
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let gamma = u16_at(6);
    let layout = BlockLayout::new(u32_at(12), u32_at(16), u16_at(8), u16_at(10))?;
    let m = u32_at(20);
    let descriptor = MatrixDescriptor::from_bytes(&bytes[24..PACKET_HEADER_LEN])?;

    let values = (layout.block_count() as u64) * (m as u64);
    let expected = PACKET_HEADER_LEN as u64 + values * 8;
    if bytes.len() as u64 != expected {
        return Err(Error::Length {
            what: "packet",
            expected,
            actual: bytes.len() as u64,
        });
    }
    let payload = &bytes[PACKET_HEADER_LEN..];
    let mut blocks = Vec::with_capacity(layout.block_count());
    for chunk in payload.chunks_exact(m.max(1) * 8).take(layout.block_count()) {
        let y: Vec<f64> = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        blocks.push(y);
    }
    CompressedPacket::from_parts(layout, method, gamma, m, descriptor, blocks)
}

pub fn write_packet(p: &CompressedPacket, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_packet(p)?)?;
    Ok(())
}

pub fn read_packet(path: impl AsRef<Path>) -> Result<CompressedPacket> {
    decode_packet(&fs::read(path)?)
}

/// Raw 18-byte descriptor file written by `gen-matrix`.
pub fn write_descriptor(d: &MatrixDescriptor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, d.to_bytes())?;
    Ok(())
}

pub fn read_descriptor(path: impl AsRef<Path>) -> Result<MatrixDescriptor> {
    let bytes = fs::read(path)?;
    if bytes.len() != MatrixDescriptor::ENCODED_LEN {
        return Err(Error::Length {
            what: "matrix descriptor file",
            expected: MatrixDescriptor::ENCODED_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    MatrixDescriptor::from_bytes(&bytes)
}

/// One row of a benchmark or MAE sweep table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub cr: f64,
    pub gamma: usize,
    pub trial: usize,
    /// `inf` when the reconstruction is exact.
    pub psnr_db: f64,
    pub mse: f64,
    pub mae: f64,
    pub seconds: f64,
}

pub const SWEEP_HEADER: &str = "method,cr,gamma,trial,psnr_db,mse,mae,seconds";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_low: f64,
    pub bin_high: f64,
    pub count: u64,
}

pub const HISTOGRAM_HEADER: &str = "bin_low,bin_high,count";

/// Doubled-ratio MAE difference `MAE(c) − MAE(2c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaeDiffRow {
    pub cr: f64,
    pub cr_doubled: f64,
    pub mae_diff: f64,
    pub stderr: f64,
}

pub fn write_csv<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
