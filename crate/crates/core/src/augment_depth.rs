//! CutMix on depth frames.
//!
//! A rectangle cut from the target frame is filled with the same region of a
//! second frame; labels mix by the fraction of pixels each frame contributes.
//! The mask is `true` where the output keeps the target frame.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::data::{FramePredictionMatrix, LabelSequence};
use crate::error::{Error, Result};
use crate::projection::{DepthImage, DepthVideo};

pub const DEFAULT_ALPHA: f64 = 1.0;

const SOFT_LABEL_TOLERANCE: f64 = 1e-9;

/// Class distribution used as a training target.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel {
    weights: Vec<f64>,
}

impl SoftLabel {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Invalid("soft label needs non-negative finite weights".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SOFT_LABEL_TOLERANCE {
            return Err(Error::Invalid(format!("soft label sums to {sum}")));
        }
        Ok(Self { weights })
    }

    pub fn one_hot(class: usize, num_classes: usize) -> Result<Self> {
        if class >= num_classes {
            return Err(Error::Invalid(format!("class {class} out of range for K={num_classes}")));
        }
        let mut weights = vec![0.0; num_classes];
        weights[class] = 1.0;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutMixMask {
    width: usize,
    height: usize,
    mask: Vec<bool>,
    lambda_target: f64,
    kept: usize,
}

impl CutMixMask {
    /// Row-major mask; `lambda_target` is recorded as given.
    pub fn from_mask(width: usize, height: usize, mask: Vec<bool>, lambda_target: f64) -> Result<Self> {
        if width == 0 || height == 0 || mask.len() != width * height {
            return Err(Error::Shape(format!(
                "mask of {} cells does not fit {width}x{height}",
                mask.len()
            )));
        }
        if !(0.0..=1.0).contains(&lambda_target) {
            return Err(Error::Parameter(format!("lambda {lambda_target} outside [0, 1]")));
        }
        let kept = mask.iter().filter(|&&m| m).count();
        Ok(Self { width, height, mask, lambda_target, kept })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn lambda_target(&self) -> f64 {
        self.lambda_target
    }

    /// Fraction of cells taken from the target frame.
    pub fn lambda_exact(&self) -> f64 {
        self.kept as f64 / self.mask.len() as f64
    }

    pub fn kept_cells(&self) -> usize {
        self.kept
    }

    /// Mask with every cell flipped (roles of the two frames swapped).
    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            mask: self.mask.iter().map(|m| !m).collect(),
            lambda_target: 1.0 - self.lambda_target,
            kept: self.mask.len() - self.kept,
        }
    }
}

/// One Beta(alpha, alpha) draw from `rng`.
pub fn sample_lambda_with<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be > 0, got {alpha}")));
    }
    let beta = Beta::new(alpha, alpha).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(beta.sample(rng))
}

/// One Beta(alpha, alpha) draw, deterministic in `seed`. `alpha = 1` is the
/// uniform distribution on (0, 1).
pub fn sample_lambda(alpha: f64, seed: u64) -> Result<f64> {
    sample_lambda_with(alpha, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Span `[lo, hi)` of a cut of length `cut` centered at `center`, clipped to
/// `[0, dim)`. A cut as long as the axis spans it completely.
fn cut_span(center: usize, cut: usize, dim: usize) -> (usize, usize) {
    if cut >= dim {
        return (0, dim);
    }
    let lo = center as i64 - (cut / 2) as i64;
    let hi = lo + cut as i64;
    (lo.clamp(0, dim as i64) as usize, hi.clamp(0, dim as i64) as usize)
}

/// Complement of an axis-aligned rectangle of size
/// `round(W * sqrt(1 - lambda)) x round(H * sqrt(1 - lambda))` centered at a
/// uniformly drawn pixel and clipped to the image.
pub fn sample_mask_with<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    lambda_target: f64,
    rng: &mut R,
) -> Result<CutMixMask> {
    if width == 0 || height == 0 {
        return Err(Error::Parameter(format!("mask size {width}x{height}")));
    }
    if !(0.0..=1.0).contains(&lambda_target) {
        return Err(Error::Parameter(format!("lambda {lambda_target} outside [0, 1]")));
    }
    let ratio = (1.0 - lambda_target).sqrt();
    let cut_w = (width as f64 * ratio).round() as usize;
    let cut_h = (height as f64 * ratio).round() as usize;
    let cx = rng.random_range(0..width);
    let cy = rng.random_range(0..height);
    let (x0, x1) = cut_span(cx, cut_w, width);
    let (y0, y1) = cut_span(cy, cut_h, height);
    let mut mask = vec![true; width * height];
    for v in y0..y1 {
        mask[v * width + x0..v * width + x1].fill(false);
    }
    CutMixMask::from_mask(width, height, mask, lambda_target)
}

pub fn sample_mask(width: usize, height: usize, lambda_target: f64, seed: u64) -> Result<CutMixMask> {
    sample_mask_with(width, height, lambda_target, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Mixes two frames through `m` and their labels by the exact kept fraction.
pub fn cutmix(
    img_t: &DepthImage,
    img_h: &DepthImage,
    gt_t: &SoftLabel,
    gt_h: &SoftLabel,
    m: &CutMixMask,
) -> Result<(DepthImage, SoftLabel)> {
    let (w, h) = (img_t.width(), img_t.height());
    if (img_h.width(), img_h.height()) != (w, h) || (m.width, m.height) != (w, h) {
        return Err(Error::Shape(format!(
            "cutmix operands {w}x{h}, {}x{} and mask {}x{}",
            img_h.width(),
            img_h.height(),
            m.width,
            m.height
        )));
    }
    if img_t.background().to_bits() != img_h.background().to_bits() {
        return Err(Error::Shape(format!(
            "backgrounds differ: {} vs {}",
            img_t.background(),
            img_h.background()
        )));
    }
    if gt_t.num_classes() != gt_h.num_classes() {
        return Err(Error::Shape(format!(
            "label sizes differ: {} vs {}",
            gt_t.num_classes(),
            gt_h.num_classes()
        )));
    }
    let depth = m
        .mask
        .iter()
        .zip(img_t.depth().iter().zip(img_h.depth()))
        .map(|(&keep, (&a, &b))| if keep { a } else { b })
        .collect();
    let occupancy = m
        .mask
        .iter()
        .zip(img_t.occupancy().iter().zip(img_h.occupancy()))
        .map(|(&keep, (&a, &b))| if keep { a } else { b })
        .collect();
    let image = DepthImage::from_parts(w, h, img_t.background(), depth, occupancy)?;

    let total = m.mask.len() as f64;
    let w_t = m.kept as f64 / total;
    let w_h = (m.mask.len() - m.kept) as f64 / total;
    let weights = gt_t
        .weights
        .iter()
        .zip(&gt_h.weights)
        .map(|(a, b)| w_t * a + w_h * b)
        .collect();
    Ok((image, SoftLabel { weights }))
}

/// Frame-aligned CutMix of two videos: frame `t` of `target` is mixed with
/// frame `t` of `other`, with a fresh lambda and mask per frame.
///
/// Returns the mixed video and one soft-label row per frame.
pub fn cutmix_video(
    target: &DepthVideo,
    other: &DepthVideo,
    target_labels: &LabelSequence,
    other_labels: &LabelSequence,
    alpha: f64,
    seed: u64,
) -> Result<(DepthVideo, FramePredictionMatrix)> {
    let l = target.num_frames();
    if other.num_frames() != l || target_labels.len() != l || other_labels.len() != l {
        return Err(Error::Shape(format!(
            "frame counts differ: {l}, {}, labels {} and {}",
            other.num_frames(),
            target_labels.len(),
            other_labels.len()
        )));
    }
    let k = target_labels.num_classes();
    if other_labels.num_classes() != k {
        return Err(Error::Shape(format!(
            "class counts differ: {k} vs {}",
            other_labels.num_classes()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(l);
    let mut soft = Vec::with_capacity(l * k);
    for t in 0..l {
        let lambda = sample_lambda_with(alpha, &mut rng)?;
        let mask = sample_mask_with(target.width(), target.height(), lambda, &mut rng)?;
        let (img, label) = cutmix(
            &target.frames()[t],
            &other.frames()[t],
            &SoftLabel::one_hot(target_labels.labels()[t] as usize, k)?,
            &SoftLabel::one_hot(other_labels.labels()[t] as usize, k)?,
            &mask,
        )?;
        frames.push(img);
        soft.extend(label.weights);
    }
    Ok((DepthVideo::new(frames)?, FramePredictionMatrix::from_flat(k, soft)?))
}
