//! Synthetic point cloud video corpus with split modality evidence.
//!
//! Each frame is a square patch of points (x, y uniform in `[-1, 1]` around
//! the frame center) whose height `z` follows a binary block pattern on a
//! 4x4 grid:
//!
//! ```text
//! z = offset(class) + amplitude * pattern(class)[cell(x, y)] + noise
//! ```
//!
//! The lower half of the classes share one pattern and differ only in
//! `offset`, which shows up in center-relative point statistics but vanishes
//! under the per-frame min-max normalization of depth features. The upper
//! half share one offset and differ only in pattern arrangement; every
//! pattern has the same number of raised cells, so point statistics cannot
//! tell them apart while pooled depth grids can. Neither baseline expert
//! alone sees every class; fused, they do.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{LabelSequence, PointCloudFrame, PointCloudVideo};
use crate::error::{Error, Result};
use crate::seed;

pub const PATTERN_GRID: usize = 4;
const PATTERN_CELLS: usize = PATTERN_GRID * PATTERN_GRID;
const MIN_PATTERN_DISTANCE: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub videos: usize,
    pub frames: usize,
    pub points: usize,
    pub classes: usize,
    pub seed: u64,
    /// Height difference between raised and lowered cells.
    pub amplitude: f64,
    /// Offset step between consecutive point-separable classes.
    pub offset_step: f64,
    pub z_noise: f64,
}

impl Default for SynthConfig {
    /// 40 videos of 150 frames x 2048 points over 19 classes.
    fn default() -> Self {
        Self {
            videos: 40,
            frames: 150,
            points: 2048,
            classes: 19,
            seed: 0,
            amplitude: 1.0,
            offset_step: 2.0,
            z_noise: 0.05,
        }
    }
}

impl SynthConfig {
    /// Classes `0..point_classes()` are separable by point statistics, the
    /// rest by depth pattern.
    pub fn point_classes(&self) -> usize {
        self.classes.div_ceil(2)
    }

    fn validate(&self) -> Result<()> {
        if self.videos == 0 || self.frames == 0 || self.points == 0 {
            return Err(Error::Parameter("videos, frames and points must be positive".into()));
        }
        if self.classes < 2 {
            return Err(Error::Parameter("need at least two classes".into()));
        }
        if !(self.amplitude > 0.0 && self.offset_step > 0.0 && self.z_noise >= 0.0) {
            return Err(Error::Parameter("amplitude and offset step must be > 0, noise >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthVideo {
    pub name: String,
    pub video: PointCloudVideo,
    pub labels: LabelSequence,
}

/// Balanced 16-cell patterns, pairwise Hamming distance >= 6, in
/// lexicographic order.
pub fn block_patterns(count: usize) -> Vec<u16> {
    let mut out: Vec<u16> = Vec::with_capacity(count);
    for bits in 0..=u16::MAX {
        if out.len() == count {
            break;
        }
        if bits.count_ones() as usize == PATTERN_CELLS / 2
            && out.iter().all(|&p| (p ^ bits).count_ones() >= MIN_PATTERN_DISTANCE)
        {
            out.push(bits);
        }
    }
    assert_eq!(out.len(), count, "not enough distinct block patterns");
    out
}

/// Pattern index and z offset for each class.
fn class_layout(cfg: &SynthConfig) -> Vec<(usize, f64)> {
    let p = cfg.point_classes();
    (0..cfg.classes)
        .map(|c| {
            if c < p {
                (0, cfg.offset_step * c as f64)
            } else {
                (1 + c - p, -2.0 * cfg.offset_step)
            }
        })
        .collect()
}

fn segment_labels(rng: &mut ChaCha8Rng, index: usize, cfg: &SynthConfig) -> Vec<u32> {
    let segments = rng.random_range(3..=7usize).min(cfg.frames);
    let mut cuts: Vec<usize> = sample(rng, cfg.frames - 1, segments - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    cuts.push(cfg.frames);
    let mut labels = Vec::with_capacity(cfg.frames);
    let mut start = 0;
    for (j, &end) in cuts.iter().enumerate() {
        // Stride 7 walks every residue for any class count coprime to 7, so
        // a modest number of videos covers every class.
        let class = ((index * 7 + j) % cfg.classes) as u32;
        labels.extend(std::iter::repeat_n(class, end - start));
        start = end;
    }
    labels
}

/// Video `index` of the corpus; independent of every other video.
pub fn generate_video(cfg: &SynthConfig, index: usize) -> Result<SynthVideo> {
    cfg.validate()?;
    let layout = class_layout(cfg);
    let patterns = block_patterns(cfg.classes - cfg.point_classes() + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[index as u64]));
    let labels = segment_labels(&mut rng, index, cfg);
    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
    let drift = rng.random_range(-0.01..0.01);
    let noise = Normal::new(0.0, cfg.z_noise).expect("noise >= 0");

    let mut frames = Vec::with_capacity(cfg.frames);
    for (t, &class) in labels.iter().enumerate() {
        let (pattern, offset) = layout[class as usize];
        let bits = patterns[pattern];
        let center = [base[0], base[1], base[2] + drift * t as f64];
        let points = (0..cfg.points)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                let cx = (((x + 1.0) / 2.0 * PATTERN_GRID as f64) as usize).min(PATTERN_GRID - 1);
                let cy = (((y + 1.0) / 2.0 * PATTERN_GRID as f64) as usize).min(PATTERN_GRID - 1);
                let raised = bits >> (cy * PATTERN_GRID + cx) & 1;
                let z = offset + cfg.amplitude * raised as f64 + noise.sample(&mut rng);
                [(center[0] + x) as f32, (center[1] + y) as f32, (center[2] + z) as f32]
            })
            .collect();
        frames.push(PointCloudFrame::new(points, center.map(|c| c as f32))?);
    }
    Ok(SynthVideo {
        name: format!("video_{index:03}"),
        video: PointCloudVideo::new(frames)?,
        labels: LabelSequence::new(labels, cfg.classes)?,
    })
}

pub fn generate_corpus(cfg: &SynthConfig) -> Result<Vec<SynthVideo>> {
    (0..cfg.videos).map(|i| generate_video(cfg, i)).collect()
}
