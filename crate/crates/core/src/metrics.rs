//! Temporal action segmentation metrics: frame-wise accuracy, segmental
//! edit score, segmental F1 at IoU thresholds, and confusion matrices.
//!
//! All scores are percentages in `[0, 100]`.

use serde::{Deserialize, Serialize};

use crate::data::LabelSequence;
use crate::error::{Error, Result};

/// IoU thresholds reported by default.
pub const DEFAULT_TAUS: [f64; 3] = [0.10, 0.25, 0.50];

/// Maximal run of one class; `end` is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub class: u32,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frame-level intersection over union.
    pub fn iou(&self, other: &Segment) -> f64 {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        let inter = if hi >= lo { hi - lo + 1 } else { 0 };
        let union = self.len() + other.len() - inter;
        inter as f64 / union as f64
    }
}

/// Run-length encoding of a label sequence.
pub fn segments_of(labels: &[u32]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for (t, &class) in labels.iter().enumerate() {
        match out.last_mut() {
            Some(seg) if seg.class == class => seg.end = t,
            _ => out.push(Segment { start: t, end: t, class }),
        }
    }
    out
}

/// Inverse of [`segments_of`].
pub fn labels_of(segments: &[Segment]) -> Vec<u32> {
    segments
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.class, s.len()))
        .collect()
}

/// Levenshtein distance with unit insert, delete and substitute costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn check_pair(pred: &LabelSequence, gt: &LabelSequence) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::Shape(format!(
            "prediction has {} frames, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Parameter(format!("IoU threshold {tau} outside (0, 1]")));
    }
    Ok(())
}

fn matching_frames(pred: &LabelSequence, gt: &LabelSequence) -> usize {
    pred.labels().iter().zip(gt.labels()).filter(|(a, b)| a == b).count()
}

pub fn frame_accuracy(pred: &LabelSequence, gt: &LabelSequence) -> Result<f64> {
    check_pair(pred, gt)?;
    if gt.is_empty() {
        return Err(Error::Invalid("accuracy of an empty sequence".into()));
    }
    Ok(100.0 * matching_frames(pred, gt) as f64 / gt.len() as f64)
}

/// `100 * (1 - lev / max(|S_pred|, |S_gt|))` over segment class sequences.
pub fn edit_score(pred: &LabelSequence, gt: &LabelSequence) -> Result<f64> {
    check_pair(pred, gt)?;
    Ok(edit_of_segments(&segments_of(pred.labels()), &segments_of(gt.labels())))
}

fn edit_of_segments(pred: &[Segment], gt: &[Segment]) -> f64 {
    let longest = pred.len().max(gt.len());
    if longest == 0 {
        return 100.0;
    }
    let p: Vec<u32> = pred.iter().map(|s| s.class).collect();
    let g: Vec<u32> = gt.iter().map(|s| s.class).collect();
    (100.0 * (1.0 - levenshtein(&p, &g) as f64 / longest as f64)).max(0.0)
}

/// How predicted segments are paired with ground-truth segments for F1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matching {
    /// Maximum number of one-to-one same-class pairs with IoU >= tau.
    #[default]
    Optimal,
    /// Each predicted segment, in temporal order, claims its best-IoU
    /// same-class ground-truth segment if that one clears tau and is still
    /// free; otherwise it is a false positive.
    Greedy,
}

impl std::str::FromStr for Matching {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(Self::Optimal),
            "greedy" => Ok(Self::Greedy),
            _ => Err(Error::Parameter(format!("unknown matching {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl SegmentCounts {
    /// `100 * 2TP / (2TP + FP + FN)`; 100 when all counts are zero.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            return 100.0;
        }
        100.0 * (2 * self.tp) as f64 / denom as f64
    }
}

impl std::ops::AddAssign for SegmentCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

fn counts(pred: &[Segment], gt: &[Segment], tau: f64, matching: Matching) -> SegmentCounts {
    let tp = match matching {
        Matching::Optimal => max_matching(pred, gt, tau),
        Matching::Greedy => greedy_matching(pred, gt, tau),
    };
    SegmentCounts {
        tp,
        fp: pred.len() - tp,
        fn_: gt.len() - tp,
    }
}

fn greedy_matching(pred: &[Segment], gt: &[Segment], tau: f64) -> usize {
    let mut taken = vec![false; gt.len()];
    let mut tp = 0;
    for p in pred {
        let best = gt
            .iter()
            .enumerate()
            .filter(|(_, g)| g.class == p.class)
            .map(|(j, g)| (j, p.iou(g)))
            .fold(None, |best: Option<(usize, f64)>, (j, iou)| match best {
                Some((_, b)) if b >= iou => best,
                _ => Some((j, iou)),
            });
        if let Some((j, iou)) = best {
            if iou >= tau && !taken[j] {
                taken[j] = true;
                tp += 1;
            }
        }
    }
    tp
}

/// Maximum bipartite matching (augmenting paths) over same-class pairs whose
/// IoU clears `tau`.
fn max_matching(pred: &[Segment], gt: &[Segment], tau: f64) -> usize {
    let edges: Vec<Vec<usize>> = pred
        .iter()
        .map(|p| {
            gt.iter()
                .enumerate()
                .filter(|(_, g)| g.class == p.class && p.iou(g) >= tau)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    fn augment(i: usize, edges: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &j in &edges[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, edges, owner, seen)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; gt.len()];
    let mut seen = vec![false; gt.len()];
    (0..pred.len())
        .filter(|&i| {
            seen.fill(false);
            augment(i, &edges, &mut owner, &mut seen)
        })
        .count()
}

pub fn segment_counts(pred: &LabelSequence, gt: &LabelSequence, tau: f64, matching: Matching) -> Result<SegmentCounts> {
    check_pair(pred, gt)?;
    check_tau(tau)?;
    Ok(counts(&segments_of(pred.labels()), &segments_of(gt.labels()), tau, matching))
}

/// Segmental F1 at IoU threshold `tau` with optimal matching.
pub fn f1_at(pred: &LabelSequence, gt: &LabelSequence, tau: f64) -> Result<f64> {
    Ok(segment_counts(pred, gt, tau, Matching::Optimal)?.f1())
}

/// `K x K` frame counts, rows ground truth, columns prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(num_classes: usize) -> Self {
        Self { counts: vec![vec![0; num_classes]; num_classes] }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt][pred]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    fn add(&mut self, pred: &[u32], gt: &[u32]) {
        for (&p, &g) in pred.iter().zip(gt) {
            self.counts[g as usize][p as usize] += 1;
        }
    }

    /// CSV with a header row of predicted-class columns.
    pub fn to_csv(&self) -> String {
        let k = self.counts.len();
        let mut out = String::from("gt\\pred");
        for j in 0..k {
            out.push_str(&format!(",{j}"));
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(&i.to_string());
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix(pred: &LabelSequence, gt: &LabelSequence, num_classes: usize) -> Result<ConfusionMatrix> {
    check_pair(pred, gt)?;
    if let Some(&bad) = pred.labels().iter().chain(gt.labels()).find(|&&l| l as usize >= num_classes) {
        return Err(Error::Shape(format!("class {bad} does not fit a {num_classes}-class matrix")));
    }
    let mut m = ConfusionMatrix::zeros(num_classes);
    m.add(pred.labels(), gt.labels());
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub tau: f64,
    pub f1: f64,
    #[serde(flatten)]
    pub counts: SegmentCounts,
}

/// Scores for one video or a whole corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub edit: f64,
    pub f1: Vec<F1Score>,
    pub matching: Matching,
    pub num_videos: usize,
    pub num_frames: usize,
    pub num_classes: usize,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn f1_at(&self, tau: f64) -> Option<f64> {
        self.f1.iter().find(|s| s.tau == tau).map(|s| s.f1)
    }

    /// Header and value lines in the order `Acc Edit F1@...`.
    pub fn table(&self) -> String {
        let mut header = vec!["Acc".to_string(), "Edit".to_string()];
        let mut values = vec![format!("{:.2}", self.acc), format!("{:.2}", self.edit)];
        for s in &self.f1 {
            header.push(format!("F1@{}", (s.tau * 100.0).round()));
            values.push(format!("{:.2}", s.f1));
        }
        let widths: Vec<usize> = header.iter().zip(&values).map(|(h, v)| h.len().max(v.len())).collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!("{}\n{}\n", line(&header), line(&values))
    }
}

/// Metrics for a single video.
pub fn evaluate(pred: &LabelSequence, gt: &LabelSequence, taus: &[f64]) -> Result<MetricsReport> {
    evaluate_corpus(&[(pred.clone(), gt.clone())], taus, Matching::Optimal)
}

/// Corpus metrics over `(prediction, ground truth)` pairs.
///
/// Accuracy is pooled over all frames, Edit is the mean of per-video scores,
/// and F1 is computed from TP/FP/FN pooled over videos.
pub fn evaluate_corpus(
    videos: &[(LabelSequence, LabelSequence)],
    taus: &[f64],
    matching: Matching,
) -> Result<MetricsReport> {
    let Some((_, first_gt)) = videos.first() else {
        return Err(Error::Parameter("no videos to evaluate".into()));
    };
    taus.iter().try_for_each(|&t| check_tau(t))?;
    let num_classes = first_gt.num_classes();
    let mut confusion = ConfusionMatrix::zeros(num_classes);
    let mut matched = 0;
    let mut frames = 0;
    let mut edit_sum = 0.0;
    let mut pooled = vec![SegmentCounts::default(); taus.len()];
    for (i, (pred, gt)) in videos.iter().enumerate() {
        check_pair(pred, gt).map_err(|e| Error::Shape(format!("video {i}: {e}")))?;
        if gt.is_empty() {
            return Err(Error::Invalid(format!("video {i} has no frames")));
        }
        if gt.num_classes() != num_classes || pred.num_classes() != num_classes {
            return Err(Error::Shape(format!(
                "video {i}: class counts {} (pred) and {} (gt), expected {num_classes}",
                pred.num_classes(),
                gt.num_classes()
            )));
        }
        confusion.add(pred.labels(), gt.labels());
        matched += matching_frames(pred, gt);
        frames += gt.len();
        let ps = segments_of(pred.labels());
        let gs = segments_of(gt.labels());
        edit_sum += edit_of_segments(&ps, &gs);
        for (acc, &tau) in pooled.iter_mut().zip(taus) {
            *acc += counts(&ps, &gs, tau, matching);
        }
    }
    Ok(MetricsReport {
        acc: 100.0 * matched as f64 / frames as f64,
        edit: edit_sum / videos.len() as f64,
        f1: taus
            .iter()
            .zip(pooled)
            .map(|(&tau, counts)| F1Score { tau, f1: counts.f1(), counts })
            .collect(),
        matching,
        num_videos: videos.len(),
        num_frames: frames,
        num_classes,
        confusion,
    })
}
