//! Independent reference implementations used as test oracles. None of these
//! call into the library code paths they check.

#![allow(dead_code)]

use std::collections::HashMap;

use dpmix::{CollisionPolicy, PointCloudFrame, PointCloudVideo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Class of each maximal run, by direct scan.
pub fn run_classes(labels: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if i == 0 || labels[i - 1] != l {
            out.push(l);
        }
    }
    out
}

/// Maximal runs as half-open `(start, end, class)` frame ranges.
pub fn runs(labels: &[u32]) -> Vec<(usize, usize, u32)> {
    let mut out: Vec<(usize, usize, u32)> = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            out.push((start, i, labels[start]));
            start = i;
        }
    }
    out
}

/// Levenshtein distance straight from the recursive definition, without
/// memoization.
pub fn naive_levenshtein(a: &[u32], b: &[u32]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => (naive_levenshtein(ra, rb) + usize::from(x != y))
            .min(naive_levenshtein(ra, b) + 1)
            .min(naive_levenshtein(a, rb) + 1),
    }
}

/// The same recursion, memoized on suffix positions so it stays tractable
/// for longer sequences.
pub fn recursive_levenshtein(a: &[u32], b: &[u32]) -> usize {
    fn go(a: &[u32], b: &[u32], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = (go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]))
            .min(go(a, b, i + 1, j, memo) + 1)
            .min(go(a, b, i, j + 1, memo) + 1);
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub fn oracle_edit(pred: &[u32], gt: &[u32]) -> f64 {
    let (p, g) = (run_classes(pred), run_classes(gt));
    let longest = p.len().max(g.len());
    if longest == 0 {
        return 100.0;
    }
    let d = if longest <= 6 { naive_levenshtein(&p, &g) } else { recursive_levenshtein(&p, &g) };
    (100.0 * (1.0 - d as f64 / longest as f64)).max(0.0)
}

/// IoU of two half-open frame ranges by counting frames.
fn frame_iou(a: (usize, usize), b: (usize, usize)) -> f64 {
    let hi = a.1.max(b.1);
    let (mut inter, mut union) = (0usize, 0usize);
    for t in 0..hi {
        let in_a = (a.0..a.1).contains(&t);
        let in_b = (b.0..b.1).contains(&t);
        inter += usize::from(in_a && in_b);
        union += usize::from(in_a || in_b);
    }
    inter as f64 / union as f64
}

/// Largest number of true positives over every injective assignment of
/// predicted segments to same-class ground-truth segments with IoU >= tau.
pub fn brute_force_tp(pred: &[u32], gt: &[u32], tau: f64) -> (usize, usize, usize) {
    let p = runs(pred);
    let g = runs(gt);
    let ok: Vec<Vec<bool>> = p
        .iter()
        .map(|a| {
            g.iter()
                .map(|b| a.2 == b.2 && frame_iou((a.0, a.1), (b.0, b.1)) >= tau)
                .collect()
        })
        .collect();
    fn best(i: usize, ok: &[Vec<bool>], used: &mut Vec<bool>) -> usize {
        if i == ok.len() {
            return 0;
        }
        let mut top = best(i + 1, ok, used);
        for j in 0..used.len() {
            if ok[i][j] && !used[j] {
                used[j] = true;
                top = top.max(1 + best(i + 1, ok, used));
                used[j] = false;
            }
        }
        top
    }
    let tp = best(0, &ok, &mut vec![false; g.len()]);
    (tp, p.len(), g.len())
}

pub fn oracle_f1(pred: &[u32], gt: &[u32], tau: f64) -> f64 {
    let (tp, np, ng) = brute_force_tp(pred, gt, tau);
    let (fp, fn_) = (np - tp, ng - tp);
    if tp + fp + fn_ == 0 {
        return 100.0;
    }
    100.0 * (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
}

/// Expected depth image by re-evaluating the projection formula per point
/// and resolving collisions by sorting.
pub fn oracle_project(
    video: &PointCloudVideo,
    frame: usize,
    width: usize,
    height: usize,
    policy: CollisionPolicy,
) -> Vec<Option<f32>> {
    let all: Vec<[f32; 3]> = video.frames().iter().flat_map(|f| f.points().to_vec()).collect();
    let xs: Vec<f64> = all.iter().map(|p| p[0] as f64).collect();
    let ys: Vec<f64> = all.iter().map(|p| p[1] as f64).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (x_min, x_max, y_min, y_max) = (min(&xs), max(&xs), min(&ys), max(&ys));
    let eps = 1e-6 * (x_max - x_min).max(y_max - y_min).max(1.0);
    let mut hits: Vec<Vec<(usize, f32)>> = vec![Vec::new(); width * height];
    for (i, p) in video.frames()[frame].points().iter().enumerate() {
        let u = ((p[0] as f64 - x_min) * (width as f64 / ((x_max - x_min) + eps))).floor();
        let v = ((p[1] as f64 - y_min) * (height as f64 / ((y_max - y_min) + eps))).floor();
        let u = (u.max(0.0) as usize).min(width - 1);
        let v = (v.max(0.0) as usize).min(height - 1);
        hits[v * width + u].push((i, p[2]));
    }
    hits.into_iter()
        .map(|mut h| {
            if h.is_empty() {
                return None;
            }
            match policy {
                CollisionPolicy::KeepMinZ => h.sort_by(|a, b| a.1.total_cmp(&b.1)),
                CollisionPolicy::KeepMaxZ => h.sort_by(|a, b| b.1.total_cmp(&a.1)),
                CollisionPolicy::KeepLast => h.sort_by_key(|e| std::cmp::Reverse(e.0)),
            }
            Some(h[0].1)
        })
        .collect()
}

/// Video whose coordinates lie on a 1/1024 grid in `[-8, 8)`, so adding
/// small powers of two is exact in f32.
pub fn dyadic_video(rng: &mut impl Rng, frames: usize, points: usize) -> PointCloudVideo {
    let mut coord = || rng.random_range(-8192i32..8192) as f32 / 1024.0;
    let frames = (0..frames)
        .map(|_| {
            let center = [coord(), coord(), coord()];
            let pts = (0..points).map(|_| [coord(), coord(), coord()]).collect();
            PointCloudFrame::new(pts, center).unwrap()
        })
        .collect();
    PointCloudVideo::new(frames).unwrap()
}

/// Video with unconstrained f32 coordinates in a range.
pub fn random_video(rng: &mut impl Rng, frames: usize, points: usize, span: f32) -> PointCloudVideo {
    let frames = (0..frames)
        .map(|_| {
            let mut c = || rng.random_range(-span..span);
            let center = [c(), c(), c()];
            let pts = (0..points).map(|_| [c(), c(), c()]).collect();
            PointCloudFrame::new(pts, center).unwrap()
        })
        .collect();
    PointCloudVideo::new(frames).unwrap()
}

/// Random row-stochastic matrix.
pub fn random_rows(rng: &mut impl Rng, frames: usize, classes: usize) -> Vec<Vec<f64>> {
    (0..frames)
        .map(|_| {
            let raw: Vec<f64> = (0..classes).map(|_| rng.random::<f64>().powi(3)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect()
}
