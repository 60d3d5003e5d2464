use std::path::Path;

use dpmix::augment_depth::cutmix_video;
use dpmix::augment_points::{apply_video, PointTransform};
use dpmix::baseline::{train_centroid, CentroidModel, FeatureSpec};
use dpmix::ensemble::{argmax_labels, average_fuse, weighted_fuse};
use dpmix::io::{
    read_dpv, read_labels, read_pcv, read_predictions, write_atomic, write_dpv, write_labels, write_pcv,
    write_predictions,
};
use dpmix::metrics::{evaluate_corpus, Matching, MetricsReport};
use dpmix::projection::{project_video, render_pgm};
use dpmix::synth::{generate_video, SynthConfig};
use dpmix::{seed, LabelSequence, ProjectionConfig};
use serde_json::json;

use crate::args::*;
use crate::files::{create_dir, file_or_dir, has_ext, list, par_map, partner, stem};
use crate::{data, usage, CliResult};

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Convert(a) => convert(a),
        Command::Augment(a) => augment(a),
        Command::TrainBaseline(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Fuse(a) => fuse(a),
        Command::Decode(a) => decode(a),
        Command::Eval(a) => eval(a),
        Command::Render(a) => render(a),
    }
}

fn synth(a: SynthArgs) -> CliResult {
    let cfg = SynthConfig {
        videos: a.videos,
        frames: a.frames,
        points: a.points,
        classes: a.classes,
        seed: a.seed,
        ..SynthConfig::default()
    };
    create_dir(&a.out)?;
    let indices: Vec<usize> = (0..cfg.videos).collect();
    par_map(&indices, |&i| {
        let v = generate_video(&cfg, i)?;
        write_pcv(&v.video, a.out.join(format!("{}.pcv", v.name)))?;
        write_labels(&v.labels, a.out.join(format!("{}.labels", v.name)))?;
        Ok(())
    })?;
    println!("wrote {} videos to {}", cfg.videos, a.out.display());
    Ok(())
}

fn convert(a: ConvertArgs) -> CliResult {
    let mut cfg = ProjectionConfig::new(a.width, a.height)?
        .with_collision(a.collision.into())
        .with_background(a.background)?;
    if let Some(eps) = a.epsilon {
        cfg = cfg.with_epsilon(eps)?;
    }
    let n = file_or_dir(&a.input, &a.out, "pcv", "dpv", |i, o| {
        write_dpv(&project_video(&read_pcv(i)?, &cfg), o)?;
        Ok(())
    })?;
    println!("converted {n} video(s) at {}x{}", a.width, a.height);
    Ok(())
}

fn point_transforms(a: &AugmentArgs) -> CliResult<Vec<PointTransform>> {
    let mut out: Vec<PointTransform> = a
        .flip
        .iter()
        .map(|axis| match axis {
            Axis::X => PointTransform::flip_x(),
            Axis::Y => PointTransform::flip_y(),
        })
        .collect();
    // Each random step gets its own stream derived from --seed.
    let step_seed = |i: u64| seed::derive(a.seed, &[i]);
    if let Some(s) = a.scale {
        out.push(PointTransform::scale(s)?);
    }
    if let Some((lo, hi)) = a.random_scale {
        out.push(PointTransform::random_scale(lo, hi, step_seed(1))?);
    }
    if let Some(sigma) = a.jitter_sigma {
        out.push(PointTransform::jitter(sigma, a.jitter_clip, step_seed(2))?);
    }
    Ok(out)
}

fn augment(a: AugmentArgs) -> CliResult {
    let transforms = point_transforms(&a)?;
    if has_ext(&a.input, "pcv") {
        if a.cutmix.is_some() {
            return Err(usage("--cutmix mixes depth videos; the input is a .pcv"));
        }
        if transforms.is_empty() {
            return Err(usage("nothing to do: give --flip, --scale, --random-scale or --jitter-sigma"));
        }
        let mut video = read_pcv(&a.input)?;
        for t in &transforms {
            video = apply_video(&video, t);
        }
        write_pcv(&video, &a.out)?;
        println!("applied {} point transform(s)", transforms.len());
        return Ok(());
    }
    if !has_ext(&a.input, "dpv") {
        return Err(usage(format!("{}: expected a .pcv or .dpv input", a.input.display())));
    }
    if !transforms.is_empty() {
        return Err(usage("point transforms need a .pcv input; depth videos support --cutmix"));
    }
    let Some(other) = &a.cutmix else {
        return Err(usage("nothing to do: give --cutmix for a depth video"));
    };
    let (Some(labels), Some(other_labels), Some(soft)) = (&a.labels, &a.cutmix_labels, &a.soft_labels) else {
        return Err(usage("--cutmix needs --labels, --cutmix-labels and --soft-labels"));
    };
    let (mixed, soft_rows) = cutmix_video(
        &read_dpv(&a.input)?,
        &read_dpv(other)?,
        &read_labels(labels)?,
        &read_labels(other_labels)?,
        a.cutmix_alpha,
        a.seed,
    )?;
    write_dpv(&mixed, &a.out)?;
    write_predictions(&soft_rows, soft)?;
    println!("mixed {} frame(s)", mixed.num_frames());
    Ok(())
}

fn check_lengths(frames: usize, labels: &LabelSequence, video: &Path) -> CliResult {
    if labels.len() != frames {
        return Err(data(format!(
            "{}: {frames} frames but {} labels",
            video.display(),
            labels.len()
        )));
    }
    Ok(())
}

fn train(a: TrainArgs) -> CliResult {
    let ext = match a.modality {
        Modality::Point => "pcv",
        Modality::Depth => "dpv",
    };
    let spec = match a.modality {
        Modality::Point => FeatureSpec::PointStats,
        Modality::Depth => FeatureSpec::DepthGrid { width: a.grid.0, height: a.grid.1 },
    };
    let videos = list(&a.data, ext)?;
    let label_dir = a.labels.as_deref().unwrap_or(&a.data);
    let per_video = par_map(&videos, |path| {
        let labels = read_labels(partner(label_dir, &stem(path), "labels")?)?;
        let feats = match spec {
            FeatureSpec::PointStats => {
                let v = read_pcv(path)?;
                check_lengths(v.num_frames(), &labels, path)?;
                dpmix::baseline::point_video_features(&v)
            }
            FeatureSpec::DepthGrid { width, height } => {
                let v = read_dpv(path)?;
                check_lengths(v.num_frames(), &labels, path)?;
                dpmix::baseline::depth_video_features(&v, width, height)?
            }
        };
        Ok((feats, labels))
    })?;
    let k = per_video[0].1.num_classes();
    if let Some(i) = per_video.iter().position(|(_, l)| l.num_classes() != k) {
        return Err(data(format!(
            "{}: K={} but {} has K={k}",
            videos[i].display(),
            per_video[i].1.num_classes(),
            videos[0].display()
        )));
    }
    let (mut features, mut labels) = (Vec::new(), Vec::new());
    for (f, l) in per_video {
        features.extend(f);
        labels.extend_from_slice(l.labels());
    }
    let model = train_centroid(&features, &labels, k, spec, a.temperature).map_err(|e| match e {
        dpmix::Error::EmptyClass { .. } => data(format!("{}: {e}", a.data.display())),
        e => e.into(),
    })?;
    write_atomic(&a.out, model.to_json().as_bytes())?;
    println!("trained on {} frames from {} videos, K={k}", labels.len(), videos.len());
    Ok(())
}

fn read_model(path: &Path) -> CliResult<CentroidModel> {
    let text = std::fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    CentroidModel::from_json(&text).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn predict(a: PredictArgs) -> CliResult {
    let model = read_model(&a.model)?;
    let ext = match model.feature_spec() {
        FeatureSpec::PointStats => "pcv",
        FeatureSpec::DepthGrid { .. } => "dpv",
    };
    if a.input.is_file() && !has_ext(&a.input, ext) {
        return Err(usage(format!("{}: this model reads .{ext} videos", a.input.display())));
    }
    let n = file_or_dir(&a.input, &a.out, ext, "csv", |i, o| {
        let feats = match ext {
            "pcv" => model.point_features(&read_pcv(i)?)?,
            _ => model.depth_features(&read_dpv(i)?)?,
        };
        write_predictions(&model.predict(&feats)?, o)?;
        Ok(())
    })?;
    println!("predicted {n} video(s)");
    Ok(())
}

fn fuse_files(inputs: &[&Path], weights: Option<&[f64]>, out: &Path) -> CliResult {
    let experts = inputs.iter().map(read_predictions).collect::<Result<Vec<_>, _>>()?;
    let fused = match weights {
        Some(w) => weighted_fuse(&experts, w),
        None => average_fuse(&experts),
    }
    .map_err(|e| match e {
        dpmix::Error::Shape(m) => data(format!("{m} (inputs: {})", join(inputs))),
        e => e.into(),
    })?;
    write_predictions(&fused, out)?;
    Ok(())
}

fn join(paths: &[&Path]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
}

fn fuse(a: FuseArgs) -> CliResult {
    if let Some(w) = &a.weights {
        if w.len() != a.inputs.len() {
            return Err(usage(format!("{} weights for {} inputs", w.len(), a.inputs.len())));
        }
    }
    let weights = a.weights.as_deref();
    let dirs = a.inputs.iter().filter(|p| p.is_dir()).count();
    if dirs == 0 {
        let inputs: Vec<&Path> = a.inputs.iter().map(|p| p.as_path()).collect();
        fuse_files(&inputs, weights, &a.out)?;
        println!("fused {} expert(s)", inputs.len());
        return Ok(());
    }
    if dirs != a.inputs.len() {
        return Err(usage("--in must be all files or all directories"));
    }
    let first = list(&a.inputs[0], "csv")?;
    create_dir(&a.out)?;
    par_map(&first, |p| {
        let s = stem(p);
        let paths = a
            .inputs
            .iter()
            .map(|d| partner(d, &s, "csv"))
            .collect::<CliResult<Vec<_>>>()?;
        let refs: Vec<&Path> = paths.iter().map(|p| p.as_path()).collect();
        fuse_files(&refs, weights, &a.out.join(format!("{s}.csv")))
    })?;
    println!("fused {} expert(s) over {} video(s)", a.inputs.len(), first.len());
    Ok(())
}

fn decode(a: DecodeArgs) -> CliResult {
    let n = file_or_dir(&a.input, &a.out, "csv", "labels", |i, o| {
        write_labels(&argmax_labels(&read_predictions(i)?), o)?;
        Ok(())
    })?;
    println!("decoded {n} video(s)");
    Ok(())
}

/// Labels from a `.labels` file, or by argmax from a `.csv` prediction file.
fn read_pred(path: &Path) -> CliResult<LabelSequence> {
    if has_ext(path, "csv") {
        Ok(argmax_labels(&read_predictions(path)?))
    } else {
        Ok(read_labels(path)?)
    }
}

fn eval(a: EvalArgs) -> CliResult {
    let pairs: Vec<(String, LabelSequence, LabelSequence)> = if a.gt.is_dir() {
        let gts = list(&a.gt, "labels")?;
        par_map(&gts, |g| {
            let s = stem(g);
            let labels = a.pred.join(format!("{s}.labels"));
            let p = if labels.is_file() { labels } else { partner(&a.pred, &s, "csv")? };
            Ok((s, read_pred(&p)?, read_labels(g)?))
        })?
    } else {
        vec![(stem(&a.gt), read_pred(&a.pred)?, read_labels(&a.gt)?)]
    };
    let score = |videos: &[(LabelSequence, LabelSequence)]| -> CliResult<MetricsReport> {
        evaluate_corpus(videos, &a.taus, a.matching).map_err(|e| match e {
            dpmix::Error::Parameter(m) => usage(m),
            e => data(e.to_string()),
        })
    };
    let corpus: Vec<_> = pairs.iter().map(|(_, p, g)| (p.clone(), g.clone())).collect();
    let report = score(&corpus)?;
    print!("{}", report.table());
    if let Some(path) = &a.report {
        let videos = pairs
            .iter()
            .map(|(name, p, g)| {
                let r = score(&[(p.clone(), g.clone())])?;
                Ok(json!({ "name": name, "acc": r.acc, "edit": r.edit, "f1": r.f1 }))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let doc = json!({ "corpus": report, "videos": videos });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| data(e.to_string()))? + "\n";
        write_atomic(path, text.as_bytes())?;
    }
    if let Some(path) = &a.confusion {
        write_atomic(path, report.confusion.to_csv().as_bytes())?;
    }
    if a.matching == Matching::Greedy {
        eprintln!("note: greedy matching can undercount true positives");
    }
    Ok(())
}

fn render(a: RenderArgs) -> CliResult {
    let video = read_dpv(&a.input)?;
    let Some(frame) = video.frames().get(a.frame) else {
        return Err(usage(format!(
            "--frame {} out of range: {} has {} frames",
            a.frame,
            a.input.display(),
            video.num_frames()
        )));
    };
    render_pgm(frame, &a.out)?;
    println!("wrote {}x{} frame {} to {}", frame.width(), frame.height(), a.frame, a.out.display());
    Ok(())
}
