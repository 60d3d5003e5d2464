//! Browser-facing wrappers around the `dpmix` pipeline.
//!
//! The plain functions here are ordinary Rust, so they are tested natively;
//! on `wasm32` the same operations are exported through `wasm-bindgen`.

use dpmix::augment_depth::{cutmix, sample_mask, SoftLabel};
use dpmix::metrics::{evaluate, DEFAULT_TAUS};
use dpmix::projection::project_video;
use dpmix::synth::{generate_video, SynthConfig, SynthVideo};
use dpmix::{CollisionPolicy, DepthImage, LabelSequence, ProjectionConfig, Result};

/// Classes of the demo corpus.
pub const DEMO_CLASSES: usize = 19;

fn demo_video(index: usize, points: usize) -> Result<SynthVideo> {
    let cfg = SynthConfig { videos: index + 1, frames: 8, points, classes: DEMO_CLASSES, ..SynthConfig::default() };
    generate_video(&cfg, index)
}

fn demo_frame(index: usize, points: usize, size: usize, collision: &str) -> Result<(DepthImage, u32)> {
    let policy: CollisionPolicy = collision.parse()?;
    let cfg = ProjectionConfig::new(size, size)?.with_collision(policy);
    let v = demo_video(index, points)?;
    let img = project_video(&v.video, &cfg).frames()[0].clone();
    Ok((img, v.labels.labels()[0]))
}

/// First frame of synthetic video `index`, projected to a `size x size`
/// depth image and mapped to 8-bit gray (0 = empty pixel).
pub fn synthetic_depth(index: usize, points: usize, size: usize, collision: &str) -> Result<Vec<u8>> {
    Ok(demo_frame(index, points, size, collision)?.0.to_gray8())
}

/// Class of the first frame of synthetic video `index`.
pub fn synthetic_class(index: usize) -> Result<u32> {
    Ok(demo_video(index, 1)?.labels.labels()[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mix {
    pub pixels: Vec<u8>,
    pub mask: Vec<u8>,
    /// Fraction of pixels kept from the first video; also its label weight.
    pub weight_a: f64,
    pub class_a: u32,
    pub class_b: u32,
}

/// CutMix of the first frames of videos `a` and `b` at `lambda`.
pub fn mix(a: usize, b: usize, lambda: f64, seed: u64, size: usize) -> Result<Mix> {
    let (img_a, class_a) = demo_frame(a, 2048, size, "min-z")?;
    let (img_b, class_b) = demo_frame(b, 2048, size, "min-z")?;
    let m = sample_mask(size, size, lambda, seed)?;
    let (img, label) = cutmix(
        &img_a,
        &img_b,
        &SoftLabel::one_hot(class_a as usize, DEMO_CLASSES)?,
        &SoftLabel::one_hot(class_b as usize, DEMO_CLASSES)?,
        &m,
    )?;
    Ok(Mix {
        pixels: img.to_gray8(),
        mask: m.mask().iter().map(|&k| u8::from(k)).collect(),
        weight_a: if class_a == class_b { 1.0 } else { label.weights()[class_a as usize] },
        class_a,
        class_b,
    })
}

/// Parses class ids separated by commas or whitespace.
pub fn parse_sequence(text: &str) -> std::result::Result<Vec<u32>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|_| format!("{t:?} is not a class id")))
        .collect()
}

/// Acc, Edit and F1@{10,25,50} of two label sequences as a JSON object, or
/// `{"error": ...}` when the input is malformed.
pub fn score(pred: &str, gt: &str) -> String {
    let run = || -> std::result::Result<serde_json::Value, String> {
        let (p, g) = (parse_sequence(pred)?, parse_sequence(gt)?);
        let k = p.iter().chain(&g).max().map_or(1, |&m| m as usize + 1);
        let seq = |v: Vec<u32>| LabelSequence::new(v, k).map_err(|e| e.to_string());
        let r = evaluate(&seq(p)?, &seq(g)?, &DEFAULT_TAUS).map_err(|e| e.to_string())?;
        Ok(serde_json::json!({ "acc": r.acc, "edit": r.edit, "f1": r.f1 }))
    };
    match run() {
        Ok(v) => v.to_string(),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn js(e: dpmix::Error) -> JsError {
        JsError::new(&e.to_string())
    }

    #[wasm_bindgen(js_name = syntheticDepth)]
    pub fn synthetic_depth(index: u32, points: u32, size: u32, collision: &str) -> Result<Vec<u8>, JsError> {
        super::synthetic_depth(index as usize, points as usize, size as usize, collision).map_err(js)
    }

    #[wasm_bindgen(js_name = syntheticClass)]
    pub fn synthetic_class(index: u32) -> Result<u32, JsError> {
        super::synthetic_class(index as usize).map_err(js)
    }

    #[wasm_bindgen]
    pub struct Mix(super::Mix);

    #[wasm_bindgen]
    impl Mix {
        #[wasm_bindgen(getter)]
        pub fn pixels(&self) -> Vec<u8> {
            self.0.pixels.clone()
        }

        #[wasm_bindgen(getter)]
        pub fn mask(&self) -> Vec<u8> {
            self.0.mask.clone()
        }

        #[wasm_bindgen(getter, js_name = weightA)]
        pub fn weight_a(&self) -> f64 {
            self.0.weight_a
        }

        #[wasm_bindgen(getter, js_name = classA)]
        pub fn class_a(&self) -> u32 {
            self.0.class_a
        }

        #[wasm_bindgen(getter, js_name = classB)]
        pub fn class_b(&self) -> u32 {
            self.0.class_b
        }
    }

    #[wasm_bindgen]
    pub fn mix(a: u32, b: u32, lambda: f64, seed: u32, size: u32) -> Result<Mix, JsError> {
        super::mix(a as usize, b as usize, lambda, seed as u64, size as usize).map(Mix).map_err(js)
    }

    #[wasm_bindgen]
    pub fn score(pred: &str, gt: &str) -> String {
        super::score(pred, gt)
    }
}
