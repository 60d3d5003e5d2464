mod common;

use common::{dyadic_video, rng};
use dpmix::augment_depth::{cutmix, cutmix_video, sample_lambda, sample_mask, SoftLabel};
use dpmix::augment_points::{apply_video, recentered_apply, PointTransform};
use dpmix::projection::{project_video, DepthImage};
use dpmix::{LabelSequence, PointCloudFrame, ProjectionConfig};
use proptest::prelude::*;

#[test]
fn jitter_noise_is_clipped_and_has_the_requested_spread() {
    let (sigma, clip) = (0.01, 0.05);
    let pts: Vec<[f32; 3]> = (0..100_000).map(|i| [(i % 7) as f32, 0.5, -1.0]).collect();
    let frame = PointCloudFrame::new(pts, [0.0, 0.0, 0.0]).unwrap();
    let out = recentered_apply(&frame, &PointTransform::jitter(sigma, clip, 42).unwrap());
    for axis in 0..3 {
        let d: Vec<f64> = frame
            .points()
            .iter()
            .zip(out.points())
            .map(|(a, b)| b[axis] as f64 - a[axis] as f64)
            .collect();
        // f32 storage adds at most one ulp of rounding on top of the clip.
        assert!(d.iter().all(|x| x.abs() <= clip + 1e-6));
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let std = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
        assert!((std - sigma).abs() < 0.15 * sigma, "axis {axis} std {std}");
    }
    assert_eq!(out.center(), frame.center());
}

#[test]
fn jitter_is_seeded() {
    let v = dyadic_video(&mut rng(1), 3, 32);
    let a = apply_video(&v, &PointTransform::jitter(0.1, 0.3, 7).unwrap());
    assert_eq!(a, apply_video(&v, &PointTransform::jitter(0.1, 0.3, 7).unwrap()));
    assert_ne!(a, apply_video(&v, &PointTransform::jitter(0.1, 0.3, 8).unwrap()));
}

fn depth_image(seed: u64, w: usize, h: usize) -> DepthImage {
    use rand::Rng;
    let mut r = rng(seed);
    let occ: Vec<bool> = (0..w * h).map(|_| r.random_bool(0.7)).collect();
    let depth = occ.iter().map(|&o| if o { r.random_range(-3.0..3.0) } else { 0.0 }).collect();
    DepthImage::from_parts(w, h, 0.0, depth, occ).unwrap()
}

#[test]
fn cutmix_video_soft_labels_follow_kept_fraction() {
    let v = dyadic_video(&mut rng(2), 6, 200);
    let cfg = ProjectionConfig::new(20, 16).unwrap();
    let a = project_video(&v, &cfg);
    let b = project_video(&dyadic_video(&mut rng(3), 6, 200), &cfg);
    let la = LabelSequence::new(vec![0, 0, 1, 1, 2, 2], 4).unwrap();
    let lb = LabelSequence::new(vec![3; 6], 4).unwrap();
    let (mixed, soft) = cutmix_video(&a, &b, &la, &lb, 1.0, 11).unwrap();
    for t in 0..6 {
        let row = soft.row(t);
        let from_a = (0..320)
            .filter(|&i| mixed.frames()[t].depth()[i].to_bits() == a.frames()[t].depth()[i].to_bits()
                && mixed.frames()[t].occupancy()[i] == a.frames()[t].occupancy()[i])
            .count();
        // Cells equal in both sources count for either side, so this is a bound.
        assert!(row[la.labels()[t] as usize] * 320.0 <= from_a as f64 + 1e-9);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert_eq!(cutmix_video(&a, &b, &la, &lb, 1.0, 11).unwrap().0, mixed);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flips_are_involutions(seed in any::<u64>()) {
        let v = dyadic_video(&mut rng(seed), 3, 40);
        for t in [PointTransform::flip_x(), PointTransform::flip_y()] {
            prop_assert_eq!(apply_video(&apply_video(&v, &t), &t), v.clone());
        }
    }

    #[test]
    fn scaling_composes_and_keeps_center(seed in any::<u64>(), a in -2i32..=2, b in -2i32..=2) {
        let v = dyadic_video(&mut rng(seed), 2, 40);
        let (sa, sb) = (2f64.powi(a), 2f64.powi(b));
        let twice = apply_video(&apply_video(&v, &PointTransform::scale(sa).unwrap()), &PointTransform::scale(sb).unwrap());
        prop_assert_eq!(twice.clone(), apply_video(&v, &PointTransform::scale(sa * sb).unwrap()));
        for (f, g) in v.frames().iter().zip(twice.frames()) {
            prop_assert_eq!(f.center(), g.center());
        }
        prop_assert_eq!(apply_video(&v, &PointTransform::scale(1.0).unwrap()), v);
    }

    #[test]
    fn transforms_commute_with_translation(seed in any::<u64>(), shift in -3i32..=3) {
        let v = dyadic_video(&mut rng(seed), 2, 40);
        let d = 2f32.powi(shift);
        let move_frame = |f: &PointCloudFrame, d: f32| {
            PointCloudFrame::new(f.points().iter().map(|p| p.map(|x| x + d)).collect(), f.center().map(|x| x + d)).unwrap()
        };
        for t in [PointTransform::flip_x(), PointTransform::flip_y(), PointTransform::scale(0.5).unwrap()] {
            for f in v.frames() {
                prop_assert_eq!(recentered_apply(&move_frame(f, d), &t), move_frame(&recentered_apply(f, &t), d));
            }
        }
    }

    #[test]
    fn cutmix_complement_is_symmetric(seed in any::<u64>(), w in 1usize..30, h in 1usize..30) {
        let (a, b) = (depth_image(seed, w, h), depth_image(seed ^ 1, w, h));
        let lambda = sample_lambda(1.0, seed).unwrap();
        let m = sample_mask(w, h, lambda, seed).unwrap();
        let (ya, yb) = (SoftLabel::one_hot(0, 3).unwrap(), SoftLabel::one_hot(2, 3).unwrap());
        let (x1, s1) = cutmix(&a, &b, &ya, &yb, &m).unwrap();
        let (x2, s2) = cutmix(&b, &a, &yb, &ya, &m.complement()).unwrap();
        prop_assert_eq!(x1.clone(), x2);
        prop_assert_eq!(s1.weights(), s2.weights());
        // Every mixed cell comes from the source the mask selects.
        for (i, &keep) in m.mask().iter().enumerate() {
            let src = if keep { &a } else { &b };
            prop_assert_eq!(x1.depth()[i].to_bits(), src.depth()[i].to_bits());
            prop_assert_eq!(x1.occupancy()[i], src.occupancy()[i]);
        }
        let kept = m.mask().iter().filter(|&&k| k).count();
        prop_assert_eq!(s1.weights()[0], kept as f64 / (w * h) as f64);
        prop_assert_eq!(s1.weights()[2], (w * h - kept) as f64 / (w * h) as f64);
    }

    #[test]
    fn cutmix_with_itself_changes_nothing(seed in any::<u64>()) {
        let a = depth_image(seed, 12, 9);
        let m = sample_mask(12, 9, 0.4, seed).unwrap();
        let y = SoftLabel::new(vec![0.25, 0.75]).unwrap();
        let (x, s) = cutmix(&a, &a, &y, &y, &m).unwrap();
        prop_assert_eq!(x, a);
        prop_assert_eq!(s.weights(), y.weights());
    }
}
