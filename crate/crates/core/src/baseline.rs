//! Nearest-centroid baseline experts.
//!
//! Two stand-ins for the point cloud and depth video networks: each reduces a
//! frame to a small feature vector, stores one mean vector per class, and
//! predicts `softmax(-||f - centroid_k||^2 / temperature)`.

use serde::{Deserialize, Serialize};

use crate::data::{FramePredictionMatrix, PointCloudFrame, PointCloudVideo};
use crate::error::{Error, Result};
use crate::io::format_sig9;
use crate::projection::{DepthImage, DepthVideo};

pub const POINT_FEATURE_DIM: usize = 9;
pub const DEFAULT_GRID: (usize, usize) = (4, 4);
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSpec {
    /// Center-relative mean, standard deviation and extent per axis.
    PointStats,
    /// Depth image mean-pooled onto a `width x height` grid.
    DepthGrid { width: usize, height: usize },
}

impl FeatureSpec {
    pub fn dim(&self) -> usize {
        match *self {
            FeatureSpec::PointStats => POINT_FEATURE_DIM,
            FeatureSpec::DepthGrid { width, height } => width * height,
        }
    }
}

/// Mean, population standard deviation and extent (max - min) of each axis,
/// after subtracting the frame center.
pub fn extract_point_features(frame: &PointCloudFrame) -> Vec<f64> {
    let c = frame.center().map(f64::from);
    let n = frame.num_points() as f64;
    let mut sum = [0.0; 3];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in frame.points() {
        for a in 0..3 {
            let d = p[a] as f64 - c[a];
            sum[a] += d;
            lo[a] = lo[a].min(d);
            hi[a] = hi[a].max(d);
        }
    }
    let mean = sum.map(|s| s / n);
    let mut var = [0.0; 3];
    for p in frame.points() {
        for a in 0..3 {
            let d = p[a] as f64 - c[a] - mean[a];
            var[a] += d * d;
        }
    }
    let mut out = Vec::with_capacity(POINT_FEATURE_DIM);
    out.extend(mean);
    out.extend(var.map(|v| (v / n).sqrt()));
    out.extend((0..3).map(|a| hi[a] - lo[a]));
    out
}

/// Block means of occupied pixels on a `grid_w x grid_h` grid (0 for blocks
/// without occupied pixels), min-max normalized over the occupied blocks.
/// When all occupied blocks share one value they all map to 1.
pub fn extract_depth_features(img: &DepthImage, grid_w: usize, grid_h: usize) -> Result<Vec<f64>> {
    let (w, h) = (img.width(), img.height());
    if grid_w == 0 || grid_h == 0 || grid_w > w || grid_h > h {
        return Err(Error::Parameter(format!(
            "grid {grid_w}x{grid_h} does not fit a {w}x{h} image"
        )));
    }
    let mut sums = vec![0.0f64; grid_w * grid_h];
    let mut counts = vec![0usize; grid_w * grid_h];
    for v in 0..h {
        let by = v * grid_h / h;
        for u in 0..w {
            let i = v * w + u;
            if img.occupancy()[i] {
                let b = by * grid_w + u * grid_w / w;
                sums[b] += img.depth()[i] as f64;
                counts[b] += 1;
            }
        }
    }
    let means: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect();
    let (lo, hi) = means
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| (lo.min(m), hi.max(m)));
    Ok(means
        .iter()
        .map(|m| match m {
            None => 0.0,
            Some(_) if hi <= lo => 1.0,
            Some(m) => (m - lo) / (hi - lo),
        })
        .collect())
}

pub fn point_video_features(video: &PointCloudVideo) -> Vec<Vec<f64>> {
    video.frames().iter().map(extract_point_features).collect()
}

pub fn depth_video_features(video: &DepthVideo, grid_w: usize, grid_h: usize) -> Result<Vec<Vec<f64>>> {
    video
        .frames()
        .iter()
        .map(|f| extract_depth_features(f, grid_w, grid_h))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidModel {
    feature_spec: FeatureSpec,
    #[serde(rename = "K")]
    num_classes: usize,
    #[serde(rename = "D")]
    dim: usize,
    temperature: f64,
    centroids: Vec<Vec<f64>>,
}

/// Per-class mean feature vectors. Every class in `0..num_classes` needs at
/// least one sample.
pub fn train_centroid(
    features: &[Vec<f64>],
    labels: &[u32],
    num_classes: usize,
    spec: FeatureSpec,
    temperature: f64,
) -> Result<CentroidModel> {
    if features.is_empty() {
        return Err(Error::Parameter("no training samples".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature vectors, {} labels",
            features.len(),
            labels.len()
        )));
    }
    check_temperature(temperature)?;
    let dim = spec.dim();
    check_features(features, dim)?;
    let mut sums = vec![vec![0.0; dim]; num_classes];
    let mut counts = vec![0usize; num_classes];
    for (f, &l) in features.iter().zip(labels) {
        let l = l as usize;
        if l >= num_classes {
            return Err(Error::Invalid(format!("label {l} out of range for K={num_classes}")));
        }
        counts[l] += 1;
        sums[l].iter_mut().zip(f).for_each(|(s, x)| *s += x);
    }
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass { class });
    }
    let centroids = sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| s.into_iter().map(|x| x / c as f64).collect())
        .collect();
    Ok(CentroidModel {
        feature_spec: spec,
        num_classes,
        dim,
        temperature,
        centroids,
    })
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Parameter(format!("temperature must be > 0, got {t}")));
    }
    Ok(())
}

fn check_features(features: &[Vec<f64>], dim: usize) -> Result<()> {
    for (i, f) in features.iter().enumerate() {
        if f.len() != dim {
            return Err(Error::Shape(format!("feature {i} has {} dims, expected {dim}", f.len())));
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("feature {i} is not finite")));
        }
    }
    Ok(())
}

impl CentroidModel {
    pub fn feature_spec(&self) -> FeatureSpec {
        self.feature_spec
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        check_temperature(temperature)?;
        self.temperature = temperature;
        Ok(self)
    }

    /// One probability row per feature vector.
    pub fn predict(&self, features: &[Vec<f64>]) -> Result<FramePredictionMatrix> {
        check_features(features, self.dim)?;
        let mut values = Vec::with_capacity(features.len() * self.num_classes);
        for f in features {
            let logits: Vec<f64> = self
                .centroids
                .iter()
                .map(|c| -c.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / self.temperature)
                .collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            values.extend(exps.iter().map(|e| e / z));
        }
        FramePredictionMatrix::from_flat(self.num_classes, values)
    }

    /// Features of every frame of a point cloud video, per this model's spec.
    pub fn point_features(&self, video: &PointCloudVideo) -> Result<Vec<Vec<f64>>> {
        match self.feature_spec {
            FeatureSpec::PointStats => Ok(point_video_features(video)),
            spec => Err(Error::Parameter(format!("model expects {spec:?} features, got a point cloud video"))),
        }
    }

    pub fn depth_features(&self, video: &DepthVideo) -> Result<Vec<Vec<f64>>> {
        match self.feature_spec {
            FeatureSpec::DepthGrid { width, height } => depth_video_features(video, width, height),
            spec => Err(Error::Parameter(format!("model expects {spec:?} features, got a depth video"))),
        }
    }

    /// JSON with centroids rounded to 9 significant digits.
    pub fn to_json(&self) -> String {
        let mut rounded = self.clone();
        for c in rounded.centroids.iter_mut().flatten() {
            *c = format_sig9(*c).parse().expect("formatted float parses");
        }
        serde_json::to_string_pretty(&rounded).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: CentroidModel = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        check_temperature(m.temperature).map_err(|e| Error::Model(e.to_string()))?;
        if m.dim != m.feature_spec.dim() || m.num_classes == 0 || m.centroids.len() != m.num_classes {
            return Err(Error::Model(format!(
                "inconsistent shape: K={} D={} spec {:?} with {} centroids",
                m.num_classes,
                m.dim,
                m.feature_spec,
                m.centroids.len()
            )));
        }
        check_features(&m.centroids, m.dim).map_err(|e| Error::Model(e.to_string()))?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_features_degenerate_and_translation() {
        let c = [1.0, -2.0, 3.0];
        let f = PointCloudFrame::new(vec![c; 5], c).unwrap();
        assert_eq!(extract_point_features(&f), vec![0.0; 9]);

        let pts = vec![[0.0, 0.0, 0.0], [2.0, 1.0, -1.0], [4.0, 5.0, 1.0]];
        let a = PointCloudFrame::new(pts.clone(), [1.0, 1.0, 0.0]).unwrap();
        let moved: Vec<_> = pts.iter().map(|p| [p[0] + 8.0, p[1] - 4.0, p[2] + 2.0]).collect();
        let b = PointCloudFrame::new(moved, [9.0, -3.0, 2.0]).unwrap();
        assert_eq!(extract_point_features(&a), extract_point_features(&b));
        let fa = extract_point_features(&a);
        assert_eq!(&fa[..3], &[1.0, 1.0, 0.0]);
        assert_eq!(&fa[6..], &[4.0, 5.0, 2.0]);
    }

    #[test]
    fn depth_features_uniform_and_empty() {
        let img = DepthImage::from_parts(4, 4, 0.0, vec![3.0; 16], vec![true; 16]).unwrap();
        assert_eq!(extract_depth_features(&img, 2, 2).unwrap(), vec![1.0; 4]);
        let empty = DepthImage::empty(4, 4, 0.0);
        assert_eq!(extract_depth_features(&empty, 2, 2).unwrap(), vec![0.0; 4]);
        assert!(extract_depth_features(&empty, 5, 2).is_err());
        assert!(extract_depth_features(&empty, 0, 2).is_err());
    }

    #[test]
    fn depth_features_checkerboard() {
        // Occupied where (u + v) is even; depth = 1 + index.
        let mut depth = vec![0.0f32; 16];
        let mut occ = vec![false; 16];
        for v in 0..4 {
            for u in 0..4 {
                if (u + v) % 2 == 0 {
                    depth[v * 4 + u] = (1 + v * 4 + u) as f32;
                    occ[v * 4 + u] = true;
                }
            }
        }
        let img = DepthImage::from_parts(4, 4, 0.0, depth, occ).unwrap();
        // Block means: TL (1+6)/2, TR (3+8)/2, BL (9+14)/2, BR (11+16)/2.
        let means = [3.5, 5.5, 11.5, 13.5];
        let expected: Vec<f64> = means.iter().map(|m| (m - 3.5) / 10.0).collect();
        assert_eq!(extract_depth_features(&img, 2, 2).unwrap(), expected);
    }

    #[test]
    fn centroids_are_class_means() {
        let feats = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![-1.0, 0.5], vec![0.0, 0.0]];
        let labels = [0, 0, 1, 2];
        let spec = FeatureSpec::DepthGrid { width: 2, height: 1 };
        let m = train_centroid(&feats, &labels, 3, spec, 1.0).unwrap();
        assert_eq!(m.centroids(), &[vec![2.0, 3.0], vec![-1.0, 0.5], vec![0.0, 0.0]]);

        let doubled: Vec<_> = feats.iter().chain(&feats).cloned().collect();
        let doubled_labels: Vec<_> = labels.iter().chain(&labels).copied().collect();
        assert_eq!(train_centroid(&doubled, &doubled_labels, 3, spec, 1.0).unwrap(), m);

        let err = train_centroid(&feats, &labels, 4, spec, 1.0).unwrap_err();
        assert!(matches!(err, Error::EmptyClass { class: 3 }));
        assert!(train_centroid(&feats[..1], &labels[..1], 1, FeatureSpec::PointStats, 1.0).is_err());
        assert!(train_centroid(&feats, &labels, 3, spec, 0.0).is_err());
    }

    #[test]
    fn prediction_rows() {
        let spec = FeatureSpec::DepthGrid { width: 2, height: 1 };
        let feats = vec![vec![0.0, 0.0], vec![10.0, 0.0], vec![0.0, 10.0]];
        let m = train_centroid(&feats, &[0, 1, 2], 3, spec, 1.0).unwrap();
        let p = m.predict(&[vec![10.0, 0.0], vec![5.0, 5.0]]).unwrap();
        assert_eq!(crate::ensemble::argmax_labels(&p).labels()[0], 1);
        // (5,5) is equidistant from (10,0) and (0,10).
        assert_eq!(p.row(1)[1], p.row(1)[2]);

        let sym = train_centroid(&[vec![1.0, 0.0], vec![-1.0, 0.0]], &[0, 1], 2, spec, 1.0).unwrap();
        assert_eq!(sym.predict(&[vec![0.0, 3.0]]).unwrap().row(0), &[0.5, 0.5]);
        assert!(m.predict(&[vec![1.0]]).is_err());
    }

    #[test]
    fn hot_temperature_flattens_rows() {
        let spec = FeatureSpec::DepthGrid { width: 2, height: 1 };
        let feats = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let m = train_centroid(&feats, &[0, 1, 2, 3], 4, spec, 1e6).unwrap();
        let p = m.predict(&feats).unwrap();
        let dev = p.as_flat().iter().map(|v| (v - 0.25).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-3, "{dev}");
    }

    #[test]
    fn json_round_trip() {
        let spec = FeatureSpec::DepthGrid { width: 2, height: 1 };
        let m = train_centroid(&[vec![0.1, 1.0 / 3.0], vec![2.0, 0.0]], &[0, 1], 2, spec, 0.5).unwrap();
        let text = m.to_json();
        assert!(text.contains("\"K\": 2") && text.contains("\"D\": 2"));
        assert!(text.contains("0.333333333") && !text.contains("0.3333333333"));
        let back = CentroidModel::from_json(&text).unwrap();
        assert_eq!(back.feature_spec(), spec);
        assert!((back.centroids()[0][1] - 1.0 / 3.0).abs() < 1e-9);
        assert!(CentroidModel::from_json("{}").is_err());
        let bad = text.replace("\"D\": 2", "\"D\": 3");
        assert!(CentroidModel::from_json(&bad).is_err());
    }
}
