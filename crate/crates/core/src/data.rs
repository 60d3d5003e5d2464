//! In-memory data model for point cloud videos, per-frame labels and
//! per-frame class-probability predictions.
//!
//! All types validate their invariants on construction and are immutable
//! afterwards, so a value that exists is a valid value.

use crate::error::{Error, Result};

/// Tolerance on a prediction row summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

pub type Point = [f32; 3];

/// One frame: `N` points plus the frame's center point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudFrame {
    points: Vec<Point>,
    center: Point,
}

impl PointCloudFrame {
    pub fn new(points: Vec<Point>, center: Point) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("frame has no points".into()));
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::Invalid("center has a non-finite coordinate".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Invalid(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points, center })
    }

    /// Caller guarantees the invariants (used by transforms that provably
    /// preserve them).
    pub(crate) fn from_parts_unchecked(points: Vec<Point>, center: Point) -> Self {
        debug_assert!(!points.is_empty());
        Self { points, center }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }
}

/// Ordered frames sharing one point count.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudVideo {
    frames: Vec<PointCloudFrame>,
}

impl PointCloudVideo {
    pub fn new(frames: Vec<PointCloudFrame>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::Invalid("video has no frames".into()));
        };
        let n = first.num_points();
        if let Some(t) = frames.iter().position(|f| f.num_points() != n) {
            return Err(Error::Invalid(format!(
                "frame {t} has {} points, frame 0 has {n}",
                frames[t].num_points()
            )));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[PointCloudFrame] {
        &self.frames
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn points_per_frame(&self) -> usize {
        self.frames[0].num_points()
    }

    /// Every point shifted by `delta`, centers included.
    pub fn translated(&self, delta: [f32; 3]) -> Result<Self> {
        let shift = |p: &Point| [p[0] + delta[0], p[1] + delta[1], p[2] + delta[2]];
        let frames = self
            .frames
            .iter()
            .map(|f| PointCloudFrame::new(f.points.iter().map(shift).collect(), shift(&f.center)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames)
    }
}

/// Per-frame class ids in `[0, num_classes)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelSequence {
    labels: Vec<u32>,
    num_classes: usize,
}

impl LabelSequence {
    pub fn new(labels: Vec<u32>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Invalid("class count must be positive".into()));
        }
        if let Some(i) = labels.iter().position(|&l| l as usize >= num_classes) {
            return Err(Error::Invalid(format!(
                "label {} at frame {i} out of range for K={num_classes}",
                labels[i]
            )));
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// `L` rows of `K` class probabilities, each row summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePredictionMatrix {
    num_classes: usize,
    values: Vec<f64>,
}

impl FramePredictionMatrix {
    /// Rows must already be probability vectors within [`ROW_SUM_TOLERANCE`].
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_classes = rows.first().map_or(0, Vec::len);
        let values = rows.iter().flatten().copied().collect();
        Self::from_flat(num_classes, values)
    }

    pub fn from_flat(num_classes: usize, values: Vec<f64>) -> Result<Self> {
        if num_classes == 0 || values.is_empty() {
            return Err(Error::Invalid("prediction matrix is empty".into()));
        }
        if !values.len().is_multiple_of(num_classes) {
            return Err(Error::Shape(format!(
                "{} values do not form rows of {num_classes}",
                values.len()
            )));
        }
        for (t, row) in values.chunks(num_classes).enumerate() {
            check_row(t, row)?;
        }
        Ok(Self {
            num_classes,
            values,
        })
    }

    pub(crate) fn from_flat_unchecked(num_classes: usize, values: Vec<f64>) -> Self {
        Self {
            num_classes,
            values,
        }
    }

    pub fn num_frames(&self) -> usize {
        self.values.len() / self.num_classes
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.num_classes..(t + 1) * self.num_classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.num_classes)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn check_row(t: usize, row: &[f64]) -> Result<()> {
    if let Some(k) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Invalid(format!(
            "row {t}: entry {k} = {} is not a probability",
            row[k]
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::Invalid(format!(
            "row {t}: probabilities sum to {sum}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_rejects_non_finite() {
        assert!(PointCloudFrame::new(vec![[0.0, f32::NAN, 0.0]], [0.0; 3]).is_err());
        assert!(PointCloudFrame::new(vec![[0.0; 3]], [f32::INFINITY, 0.0, 0.0]).is_err());
        assert!(PointCloudFrame::new(vec![], [0.0; 3]).is_err());
    }

    #[test]
    fn video_requires_uniform_point_count() {
        let a = PointCloudFrame::new(vec![[0.0; 3]], [0.0; 3]).unwrap();
        let b = PointCloudFrame::new(vec![[0.0; 3], [1.0; 3]], [0.0; 3]).unwrap();
        assert!(PointCloudVideo::new(vec![]).is_err());
        assert!(PointCloudVideo::new(vec![a.clone(), b]).is_err());
        assert_eq!(PointCloudVideo::new(vec![a.clone(), a]).unwrap().num_frames(), 2);
    }

    #[test]
    fn labels_validated_against_class_count() {
        assert!(LabelSequence::new(vec![0, 5, 18], 19).is_ok());
        assert!(LabelSequence::new(vec![19], 19).is_err());
    }

    #[test]
    fn prediction_rows_must_be_stochastic() {
        assert!(FramePredictionMatrix::from_rows(&[vec![1.0, 0.0, 0.0]]).is_ok());
        assert!(FramePredictionMatrix::from_rows(&[vec![1.0 / 3.0; 3]]).is_ok());
        assert!(FramePredictionMatrix::from_rows(&[vec![0.25, 0.25, 0.0]]).is_err());
        assert!(FramePredictionMatrix::from_rows(&[vec![1.5, -0.5]]).is_err());
        assert!(FramePredictionMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0]]).is_err());
    }
}
