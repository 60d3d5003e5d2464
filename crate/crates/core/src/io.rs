//! File formats.
//!
//! Binary containers, all little-endian:
//!
//! ```text
//! PCV1: "PCV1" | u32 L | u32 N | L x (center 3xf32 | N x 3xf32 points)
//! DPV1: "DPV1" | u32 L | u32 W | u32 H | f32 background
//!       | L x (W*H f32 depths, row-major | ceil(W*H/8) occupancy bytes)
//! ```
//!
//! Occupancy bits are packed LSB-first: cell `i` is bit `i % 8` of byte
//! `i / 8`; padding bits are zero.
//!
//! Text sidecars, UTF-8:
//!
//! ```text
//! labels:      "K=<int>" then one class id per line
//! predictions: "L=<int>,K=<int>" then L rows of K comma-separated decimals
//! ```
//!
//! Decoders never panic: any byte string yields a value or a structured
//! error naming where decoding stopped.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::{FramePredictionMatrix, LabelSequence, PointCloudFrame, PointCloudVideo, ROW_SUM_TOLERANCE};
use crate::error::{Error, FormatError, Result, TextError};
use crate::projection::{DepthImage, DepthVideo};

pub const PCV_MAGIC: [u8; 4] = *b"PCV1";
pub const DPV_MAGIC: [u8; 4] = *b"DPV1";
pub const PCV_HEADER_LEN: usize = 12;
pub const DPV_HEADER_LEN: usize = 20;

/// Size in bytes of a PCV1 file holding `frames` frames of `points` points.
pub fn pcv_file_len(frames: usize, points: usize) -> usize {
    PCV_HEADER_LEN + frames * (3 + points * 3) * 4
}

/// Size in bytes of a DPV1 file.
pub fn dpv_file_len(frames: usize, width: usize, height: usize) -> usize {
    let cells = width * height;
    DPV_HEADER_LEN + frames * (cells * 4 + cells.div_ceil(8))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn require(&self, needed: u64) -> Result<(), FormatError> {
        if needed > self.remaining() as u64 {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed,
                available: self.remaining(),
            });
        }
        Ok(())
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        self.require(n as u64)?;
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn magic(&mut self, expected: [u8; 4]) -> Result<(), FormatError> {
        let found = &self.bytes[..self.bytes.len().min(4)];
        if found != expected {
            return Err(FormatError::BadMagic {
                expected,
                found: found.to_vec(),
            });
        }
        self.pos = 4;
        Ok(())
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn positive_u32(&mut self, field: &'static str) -> Result<usize, FormatError> {
        let offset = self.pos;
        match self.u32()? {
            0 => Err(FormatError::InvalidHeader { field, value: 0, offset }),
            v => Ok(v as usize),
        }
    }

    fn finite_f32(&mut self) -> Result<f32, FormatError> {
        let offset = self.pos;
        let b = self.take(4)?;
        let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        if !v.is_finite() {
            return Err(FormatError::NonFinite { offset });
        }
        Ok(v)
    }

    fn point(&mut self) -> Result<[f32; 3], FormatError> {
        Ok([self.finite_f32()?, self.finite_f32()?, self.finite_f32()?])
    }

    fn finish(&self) -> Result<(), FormatError> {
        match self.remaining() {
            0 => Ok(()),
            extra => Err(FormatError::TrailingBytes {
                offset: self.pos,
                extra,
            }),
        }
    }
}

pub fn encode_pcv(video: &PointCloudVideo) -> Vec<u8> {
    let mut out = Vec::with_capacity(pcv_file_len(video.num_frames(), video.points_per_frame()));
    out.extend_from_slice(&PCV_MAGIC);
    out.extend_from_slice(&(video.num_frames() as u32).to_le_bytes());
    out.extend_from_slice(&(video.points_per_frame() as u32).to_le_bytes());
    for frame in video.frames() {
        for c in frame.center() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for c in frame.points().iter().flatten() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

pub fn decode_pcv(bytes: &[u8]) -> Result<PointCloudVideo, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(PCV_MAGIC)?;
    let frames = r.positive_u32("L")?;
    let points = r.positive_u32("N")?;
    // Checked up front so a corrupt header cannot trigger a huge allocation.
    r.require((frames as u64).saturating_mul((3 + points as u64 * 3) * 4))?;
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        let center = r.point()?;
        let pts = (0..points).map(|_| r.point()).collect::<Result<Vec<_>, _>>()?;
        out.push(PointCloudFrame::from_parts_unchecked(pts, center));
    }
    r.finish()?;
    Ok(PointCloudVideo::new(out).expect("decoded frames share N"))
}

pub fn encode_dpv(video: &DepthVideo) -> Vec<u8> {
    let (w, h) = (video.width(), video.height());
    let mut out = Vec::with_capacity(dpv_file_len(video.num_frames(), w, h));
    out.extend_from_slice(&DPV_MAGIC);
    for v in [video.num_frames(), w, h] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&video.background().to_le_bytes());
    for frame in video.frames() {
        for d in frame.depth() {
            out.extend_from_slice(&d.to_le_bytes());
        }
        let mut bits = vec![0u8; (w * h).div_ceil(8)];
        for (i, _) in frame.occupancy().iter().enumerate().filter(|(_, &o)| o) {
            bits[i / 8] |= 1 << (i % 8);
        }
        out.extend_from_slice(&bits);
    }
    out
}

pub fn decode_dpv(bytes: &[u8]) -> Result<DepthVideo, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(DPV_MAGIC)?;
    let frames = r.positive_u32("L")?;
    let width = r.positive_u32("W")?;
    let height = r.positive_u32("H")?;
    let background = r.finite_f32()?;
    let cells = width as u64 * height as u64;
    r.require((frames as u64).saturating_mul(cells.saturating_mul(4).saturating_add(cells.div_ceil(8))))?;
    let cells = cells as usize;
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        let depth_at = r.pos;
        let raw = r.take(cells * 4)?;
        let depth: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let bits_at = r.pos;
        let bits = r.take(cells.div_ceil(8))?;
        let occupancy: Vec<bool> = (0..cells).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
        if !cells.is_multiple_of(8) && bits[cells / 8] >> (cells % 8) != 0 {
            return Err(FormatError::Inconsistent {
                offset: bits_at + cells / 8,
                reason: "nonzero occupancy padding bits",
            });
        }
        for (i, (&d, &occ)) in depth.iter().zip(&occupancy).enumerate() {
            let offset = depth_at + 4 * i;
            if occ && !d.is_finite() {
                return Err(FormatError::NonFinite { offset });
            }
            if !occ && d.to_bits() != background.to_bits() {
                return Err(FormatError::Inconsistent {
                    offset,
                    reason: "unoccupied cell differs from background",
                });
            }
        }
        out.push(
            DepthImage::from_parts(width, height, background, depth, occupancy)
                .expect("validated above"),
        );
    }
    r.finish()?;
    Ok(DepthVideo::new(out).expect("decoded frames share dimensions"))
}

/// Labels: `K=<int>` header, then one id per line.
pub fn encode_labels(seq: &LabelSequence) -> String {
    let mut out = format!("K={}\n", seq.num_classes());
    for l in seq.labels() {
        writeln!(out, "{l}").unwrap();
    }
    out
}

fn header_value(field: &str, key: &str, line: usize) -> Result<usize, TextError> {
    field
        .trim()
        .strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| TextError::Syntax {
            line,
            message: format!("expected header field {key}=<int>, found {field:?}"),
        })
}

/// Numbered lines with trailing blank lines dropped.
fn content_lines(text: &str) -> Vec<(usize, &str)> {
    let mut lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
    while lines.last().is_some_and(|(_, l)| l.trim().is_empty()) {
        lines.pop();
    }
    lines
}

pub fn decode_labels(text: &str) -> Result<LabelSequence, TextError> {
    let lines = content_lines(text);
    let Some(&(_, header)) = lines.first() else {
        return Err(TextError::Syntax { line: 1, message: "empty file".into() });
    };
    let num_classes = header_value(header, "K", 1)?;
    if num_classes == 0 {
        return Err(TextError::Syntax { line: 1, message: "K must be positive".into() });
    }
    let mut labels = Vec::with_capacity(lines.len() - 1);
    for &(line, raw) in &lines[1..] {
        let id: u64 = raw.trim().parse().map_err(|_| TextError::Syntax {
            line,
            message: format!("not a class id: {raw:?}"),
        })?;
        if id >= num_classes as u64 {
            return Err(TextError::OutOfRange { line, id, num_classes });
        }
        labels.push(id as u32);
    }
    if labels.is_empty() {
        return Err(TextError::Syntax { line: 2, message: "no labels".into() });
    }
    Ok(LabelSequence::new(labels, num_classes).expect("ids checked"))
}

/// Decimal text with at most 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let r: f64 = format!("{v:.8e}").parse().expect("float formatting round-trips");
    if (1e-4..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Predictions: `L=<int>,K=<int>` header, then L rows of K decimals.
pub fn encode_predictions(m: &FramePredictionMatrix) -> String {
    let mut out = format!("L={},K={}\n", m.num_frames(), m.num_classes());
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|&v| format_sig9(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Rows are validated against the unit-sum tolerance, then renormalized.
pub fn decode_predictions(text: &str) -> Result<FramePredictionMatrix, TextError> {
    let lines = content_lines(text);
    let Some(&(_, header)) = lines.first() else {
        return Err(TextError::Syntax { line: 1, message: "empty file".into() });
    };
    let mut fields = header.split(',');
    let num_frames = header_value(fields.next().unwrap_or(""), "L", 1)?;
    let num_classes = header_value(fields.next().unwrap_or(""), "K", 1)?;
    if fields.next().is_some() || num_frames == 0 || num_classes == 0 {
        return Err(TextError::Syntax {
            line: 1,
            message: "header must be L=<positive>,K=<positive>".into(),
        });
    }
    if lines.len() - 1 != num_frames {
        return Err(TextError::RowCount { expected: num_frames, found: lines.len() - 1 });
    }
    let mut values = Vec::with_capacity(num_frames * num_classes);
    for (row, &(line, raw)) in lines[1..].iter().enumerate() {
        let start = values.len();
        for cell in raw.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| TextError::Syntax {
                line,
                message: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(TextError::Syntax {
                    line,
                    message: format!("not a probability: {cell:?}"),
                });
            }
            values.push(v);
        }
        if values.len() - start != num_classes {
            return Err(TextError::Syntax {
                line,
                message: format!("expected {num_classes} columns, found {}", values.len() - start),
            });
        }
        let sum: f64 = values[start..].iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(TextError::RowSum { row, sum });
        }
        values[start..].iter_mut().for_each(|v| *v /= sum);
    }
    Ok(FramePredictionMatrix::from_flat_unchecked(num_classes, values))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes through a sibling `.partial` file and a rename, so readers never
/// observe a half-written output.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)
        .and_then(|()| std::fs::rename(&tmp, path))
        .map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            Error::io(path, e)
        })
}

pub fn read_pcv(path: impl AsRef<Path>) -> Result<PointCloudVideo> {
    let path = path.as_ref();
    decode_pcv(&read_bytes(path)?).map_err(|source| Error::Format { path: path.into(), source })
}

pub fn write_pcv(video: &PointCloudVideo, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, &encode_pcv(video))
}

pub fn read_dpv(path: impl AsRef<Path>) -> Result<DepthVideo> {
    let path = path.as_ref();
    decode_dpv(&read_bytes(path)?).map_err(|source| Error::Format { path: path.into(), source })
}

pub fn write_dpv(video: &DepthVideo, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, &encode_dpv(video))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelSequence> {
    let path = path.as_ref();
    decode_labels(&read_text(path)?).map_err(|source| Error::Text { path: path.into(), source })
}

pub fn write_labels(seq: &LabelSequence, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, encode_labels(seq).as_bytes())
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<FramePredictionMatrix> {
    let path = path.as_ref();
    decode_predictions(&read_text(path)?).map_err(|source| Error::Text { path: path.into(), source })
}

pub fn write_predictions(m: &FramePredictionMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, encode_predictions(m).as_bytes())
}
