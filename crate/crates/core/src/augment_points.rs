//! Point cloud video augmentation.
//!
//! Every transform runs in the frame's own coordinate system: points are
//! moved by `-center`, transformed, and moved back by `+center`. Centers
//! themselves are never modified.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Point, PointCloudFrame, PointCloudVideo};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_JITTER_SIGMA: f64 = 0.01;
pub const DEFAULT_JITTER_CLIP: f64 = 0.05;
pub const DEFAULT_SCALE_RANGE: (f64, f64) = (0.9, 1.1);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformKind {
    /// Mirror the x axis about the frame center.
    FlipX,
    /// Mirror the y axis about the frame center.
    FlipY,
    /// Per-coordinate Gaussian noise, clamped to `[-clip, clip]`.
    Jitter { sigma: f64, clip: f64 },
    /// Uniform scaling about the frame center.
    Scale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTransform {
    kind: TransformKind,
    seed: u64,
}

impl PointTransform {
    pub fn new(kind: TransformKind, seed: u64) -> Result<Self> {
        match kind {
            TransformKind::Jitter { sigma, clip }
                if !(sigma.is_finite() && sigma >= 0.0 && clip.is_finite() && clip >= 0.0) =>
            {
                Err(Error::Parameter(format!(
                    "jitter needs sigma >= 0 and clip >= 0, got sigma={sigma} clip={clip}"
                )))
            }
            TransformKind::Scale(s) if !(s.is_finite() && s > 0.0) => {
                Err(Error::Parameter(format!("scale must be > 0, got {s}")))
            }
            _ => Ok(Self { kind, seed }),
        }
    }

    pub fn flip_x() -> Self {
        Self { kind: TransformKind::FlipX, seed: 0 }
    }

    pub fn flip_y() -> Self {
        Self { kind: TransformKind::FlipY, seed: 0 }
    }

    pub fn scale(s: f64) -> Result<Self> {
        Self::new(TransformKind::Scale(s), 0)
    }

    pub fn jitter(sigma: f64, clip: f64, seed: u64) -> Result<Self> {
        Self::new(TransformKind::Jitter { sigma, clip }, seed)
    }

    /// Scale factor drawn uniformly from `[lo, hi]`, one per video.
    pub fn random_scale(lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Parameter(format!("bad scale range [{lo}, {hi}]")));
        }
        let s = ChaCha8Rng::seed_from_u64(seed).random_range(lo..=hi);
        Self::scale(s)
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Independent RNG stream for one point of one frame.
fn point_rng(seed: u64, frame: usize, point: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed::derive(seed, &[frame as u64, point as u64]))
}

fn apply_frame(frame: &PointCloudFrame, t: &PointTransform, frame_index: usize) -> PointCloudFrame {
    let c = frame.center().map(f64::from);
    let noise = match t.kind {
        TransformKind::Jitter { sigma, clip } => Some((Normal::new(0.0, sigma).expect("sigma >= 0"), clip)),
        _ => None,
    };
    let points = frame
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d = [0usize, 1, 2].map(|a| p[a] as f64 - c[a]);
            match t.kind {
                TransformKind::FlipX => d[0] = -d[0],
                TransformKind::FlipY => d[1] = -d[1],
                TransformKind::Scale(s) => d = d.map(|x| x * s),
                TransformKind::Jitter { .. } => {
                    let (normal, clip) = noise.as_ref().unwrap();
                    let mut rng = point_rng(t.seed, frame_index, i);
                    for x in &mut d {
                        *x += normal.sample(&mut rng).clamp(-clip, *clip);
                    }
                }
            }
            let out: Point = [0usize, 1, 2].map(|a| (d[a] + c[a]) as f32);
            out
        })
        .collect();
    PointCloudFrame::from_parts_unchecked(points, frame.center())
}

/// `T(p - center) + center` for every point; the center is kept.
///
/// Jitter noise for a standalone frame uses frame index 0.
pub fn recentered_apply(frame: &PointCloudFrame, t: &PointTransform) -> PointCloudFrame {
    apply_frame(frame, t, 0)
}

/// Applies `t` to every frame. Jitter noise is keyed by
/// `(seed, frame index, point index)`.
pub fn apply_video(video: &PointCloudVideo, t: &PointTransform) -> PointCloudVideo {
    let frames = video
        .frames()
        .iter()
        .enumerate()
        .map(|(i, f)| apply_frame(f, t, i))
        .collect();
    PointCloudVideo::new(frames).expect("transforms preserve point counts")
}
