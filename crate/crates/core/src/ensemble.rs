//! Late fusion of expert predictions.

use crate::data::{FramePredictionMatrix, LabelSequence};
use crate::error::{Error, Result};

/// Element-wise mean of the expert matrices.
pub fn average_fuse(experts: &[FramePredictionMatrix]) -> Result<FramePredictionMatrix> {
    weighted_fuse(experts, &vec![1.0; experts.len()])
}

/// Element-wise weighted mean; weights are normalized to sum to one.
///
/// Per-cell terms are summed in sorted order, so the result does not depend
/// on the order of the experts.
pub fn weighted_fuse(experts: &[FramePredictionMatrix], weights: &[f64]) -> Result<FramePredictionMatrix> {
    let Some(first) = experts.first() else {
        return Err(Error::Parameter("fusion needs at least one expert".into()));
    };
    if weights.len() != experts.len() {
        return Err(Error::Parameter(format!(
            "{} weights for {} experts",
            weights.len(),
            experts.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().all(|&w| w == 0.0) {
        return Err(Error::Parameter("weights must be non-negative with a positive sum".into()));
    }
    let (l, k) = (first.num_frames(), first.num_classes());
    if let Some(i) = experts
        .iter()
        .position(|e| e.num_frames() != l || e.num_classes() != k)
    {
        return Err(Error::Shape(format!(
            "expert {i} is {}x{}, expert 0 is {l}x{k}",
            experts[i].num_frames(),
            experts[i].num_classes()
        )));
    }
    let total = sorted_sum(weights.to_vec());
    let mut terms = Vec::with_capacity(experts.len());
    let values = (0..l * k)
        .map(|cell| {
            terms.clear();
            terms.extend(experts.iter().zip(weights).map(|(e, w)| w * e.as_flat()[cell]));
            sorted_sum(std::mem::take(&mut terms)) / total
        })
        .collect();
    FramePredictionMatrix::from_flat(k, values)
}

fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Per frame, the lowest class index attaining the row maximum.
pub fn argmax_labels(m: &FramePredictionMatrix) -> LabelSequence {
    let labels = m
        .rows()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
                .0 as u32
        })
        .collect();
    LabelSequence::new(labels, m.num_classes()).expect("argmax is a valid class")
}
