//! Orthographic projection of point cloud videos onto single-channel depth
//! videos.
//!
//! Each point `(x, y, z)` lands on pixel
//!
//! ```text
//! u = floor((x - x_min) * W / ((x_max - x_min) + eps))
//! v = floor((y - y_min) * H / ((y_max - y_min) + eps))
//! ```
//!
//! clamped to the image, and the pixel stores `z`. The extent is taken over
//! every point of every frame of the video, so all frames of one video share
//! one pixel grid.

use std::path::Path;

use crate::data::{Point, PointCloudFrame, PointCloudVideo};
use crate::error::{Error, Result};

pub const DEFAULT_SIZE: usize = 112;

/// Relative factor for the default epsilon: `1e-6 * max(range_x, range_y, 1)`.
pub const DEFAULT_EPSILON_SCALE: f64 = 1e-6;

/// Per-video x/y coordinate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub x_min: f32,
    pub x_max: f32,
    pub y_min: f32,
    pub y_max: f32,
}

impl Extent {
    pub fn range_x(&self) -> f64 {
        self.x_max as f64 - self.x_min as f64
    }

    pub fn range_y(&self) -> f64 {
        self.y_max as f64 - self.y_min as f64
    }

    fn include(&mut self, p: &Point) {
        self.x_min = self.x_min.min(p[0]);
        self.x_max = self.x_max.max(p[0]);
        self.y_min = self.y_min.min(p[1]);
        self.y_max = self.y_max.max(p[1]);
    }
}

/// Which depth survives when several points hit one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollisionPolicy {
    /// Smallest z (nearest surface when smaller z is closer to the sensor).
    #[default]
    KeepMinZ,
    KeepMaxZ,
    /// Last point in point order.
    KeepLast,
}

impl std::str::FromStr for CollisionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "keepminz" | "minz" | "min" => Ok(Self::KeepMinZ),
            "keepmaxz" | "maxz" | "max" => Ok(Self::KeepMaxZ),
            "keeplast" | "last" => Ok(Self::KeepLast),
            _ => Err(Error::Parameter(format!(
                "unknown collision policy {s:?} (expected min-z, max-z or last)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    width: usize,
    height: usize,
    epsilon: Option<f64>,
    collision: CollisionPolicy,
    background: f32,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            width: DEFAULT_SIZE,
            height: DEFAULT_SIZE,
            epsilon: None,
            collision: CollisionPolicy::KeepMinZ,
            background: 0.0,
        }
    }
}

impl ProjectionConfig {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter(format!(
                "image size must be positive, got {width}x{height}"
            )));
        }
        if width > u32::MAX as usize || height > u32::MAX as usize {
            return Err(Error::Parameter("image size exceeds u32".into()));
        }
        Ok(Self {
            width,
            height,
            ..Self::default()
        })
    }

    /// Fixed epsilon instead of the scale-relative default.
    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Parameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        self.epsilon = Some(epsilon);
        Ok(self)
    }

    pub fn with_collision(mut self, collision: CollisionPolicy) -> Self {
        self.collision = collision;
        self
    }

    pub fn with_background(mut self, background: f32) -> Result<Self> {
        if !background.is_finite() {
            return Err(Error::Parameter("background must be finite".into()));
        }
        self.background = background;
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn collision(&self) -> CollisionPolicy {
        self.collision
    }

    pub fn background(&self) -> f32 {
        self.background
    }

    /// Epsilon in effect for `ext`.
    pub fn epsilon_for(&self, ext: &Extent) -> f64 {
        self.epsilon.unwrap_or_else(|| {
            DEFAULT_EPSILON_SCALE * ext.range_x().max(ext.range_y()).max(1.0)
        })
    }
}

/// Single-channel depth image with an occupancy mask, stored row-major
/// (`index = v * width + u`).
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    background: f32,
    depth: Vec<f32>,
    occupancy: Vec<bool>,
}

impl DepthImage {
    pub fn empty(width: usize, height: usize, background: f32) -> Self {
        Self {
            width,
            height,
            background,
            depth: vec![background; width * height],
            occupancy: vec![false; width * height],
        }
    }

    pub fn from_parts(
        width: usize,
        height: usize,
        background: f32,
        depth: Vec<f32>,
        occupancy: Vec<bool>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid("depth image must be non-empty".into()));
        }
        if depth.len() != width * height || occupancy.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} image needs {} cells, got {} depths and {} flags",
                width * height,
                depth.len(),
                occupancy.len()
            )));
        }
        if !background.is_finite() {
            return Err(Error::Invalid("background must be finite".into()));
        }
        for (i, (&d, &occ)) in depth.iter().zip(&occupancy).enumerate() {
            if occ && !d.is_finite() {
                return Err(Error::Invalid(format!("occupied cell {i} is not finite")));
            }
            if !occ && d.to_bits() != background.to_bits() {
                return Err(Error::Invalid(format!(
                    "unoccupied cell {i} holds {d}, background is {background}"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            background,
            depth,
            occupancy,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn background(&self) -> f32 {
        self.background
    }

    pub fn depth(&self) -> &[f32] {
        &self.depth
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn get(&self, u: usize, v: usize) -> Option<f32> {
        let i = v * self.width + u;
        self.occupancy[i].then(|| self.depth[i])
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    /// Depths mapped to 8-bit gray: occupied pixels min-max scaled onto
    /// `[1, 255]` (a constant image maps to 255), unoccupied pixels 0.
    pub fn to_gray8(&self) -> Vec<u8> {
        let (lo, hi) = self
            .depth
            .iter()
            .zip(&self.occupancy)
            .filter(|(_, &o)| o)
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), (&d, _)| {
                (lo.min(d), hi.max(d))
            });
        let span = hi as f64 - lo as f64;
        self.depth
            .iter()
            .zip(&self.occupancy)
            .map(|(&d, &occ)| match (occ, span > 0.0) {
                (false, _) => 0,
                (true, false) => 255,
                (true, true) => (1.0 + ((d as f64 - lo as f64) / span * 254.0).round()) as u8,
            })
            .collect()
    }

    /// Binary PGM (`P5`) encoding of [`DepthImage::to_gray8`].
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5 {} {} 255\n", self.width, self.height).into_bytes();
        out.extend(self.to_gray8());
        out
    }
}

/// Ordered depth frames sharing width, height and background.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthVideo {
    frames: Vec<DepthImage>,
}

impl DepthVideo {
    pub fn new(frames: Vec<DepthImage>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::Invalid("depth video has no frames".into()));
        };
        let (w, h, bg) = (first.width, first.height, first.background.to_bits());
        if let Some(t) = frames
            .iter()
            .position(|f| f.width != w || f.height != h || f.background.to_bits() != bg)
        {
            return Err(Error::Shape(format!(
                "frame {t} is {}x{}, frame 0 is {w}x{h}",
                frames[t].width, frames[t].height
            )));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[DepthImage] {
        &self.frames
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn background(&self) -> f32 {
        self.frames[0].background
    }
}

/// Exact x/y bounds over all points of all frames.
pub fn video_extent(video: &PointCloudVideo) -> Extent {
    let first = video.frames()[0].points()[0];
    let mut ext = Extent {
        x_min: first[0],
        x_max: first[0],
        y_min: first[1],
        y_max: first[1],
    };
    for p in video.frames().iter().flat_map(|f| f.points()) {
        ext.include(p);
    }
    ext
}

/// Precomputed per-axis scale factors for one (extent, config) pair.
#[derive(Debug, Clone, Copy)]
struct Projector {
    x_min: f64,
    y_min: f64,
    scale_x: f64,
    scale_y: f64,
    width: usize,
    height: usize,
}

impl Projector {
    fn new(ext: &Extent, cfg: &ProjectionConfig) -> Self {
        let eps = cfg.epsilon_for(ext);
        Self {
            x_min: ext.x_min as f64,
            y_min: ext.y_min as f64,
            scale_x: cfg.width as f64 / (ext.range_x() + eps),
            scale_y: cfg.height as f64 / (ext.range_y() + eps),
            width: cfg.width,
            height: cfg.height,
        }
    }

    fn pixel(&self, p: &Point) -> (usize, usize) {
        let u = ((p[0] as f64 - self.x_min) * self.scale_x).floor();
        let v = ((p[1] as f64 - self.y_min) * self.scale_y).floor();
        (clamp_index(u, self.width), clamp_index(v, self.height))
    }
}

fn clamp_index(x: f64, dim: usize) -> usize {
    // NaN saturates to 0 through the cast.
    (x.max(0.0) as u64).min(dim as u64 - 1) as usize
}

/// Pixel column, pixel row and depth of one point.
pub fn project_point(p: Point, ext: &Extent, cfg: &ProjectionConfig) -> (usize, usize, f32) {
    let (u, v) = Projector::new(ext, cfg).pixel(&p);
    (u, v, p[2])
}

pub fn project_frame(frame: &PointCloudFrame, ext: &Extent, cfg: &ProjectionConfig) -> DepthImage {
    project_with(&Projector::new(ext, cfg), frame, cfg)
}

fn project_with(proj: &Projector, frame: &PointCloudFrame, cfg: &ProjectionConfig) -> DepthImage {
    let mut img = DepthImage::empty(cfg.width, cfg.height, cfg.background);
    for p in frame.points() {
        let (u, v) = proj.pixel(p);
        let i = v * cfg.width + u;
        let z = p[2];
        let replace = !img.occupancy[i]
            || match cfg.collision {
                CollisionPolicy::KeepMinZ => z.total_cmp(&img.depth[i]).is_lt(),
                CollisionPolicy::KeepMaxZ => z.total_cmp(&img.depth[i]).is_gt(),
                CollisionPolicy::KeepLast => true,
            };
        if replace {
            img.depth[i] = z;
            img.occupancy[i] = true;
        }
    }
    img
}

/// Projects every frame against the single extent of the whole video.
pub fn project_video(video: &PointCloudVideo, cfg: &ProjectionConfig) -> DepthVideo {
    let proj = Projector::new(&video_extent(video), cfg);
    let frames = video
        .frames()
        .iter()
        .map(|f| project_with(&proj, f, cfg))
        .collect();
    DepthVideo { frames }
}

pub fn render_pgm(img: &DepthImage, path: impl AsRef<Path>) -> Result<()> {
    crate::io::write_atomic(path, &img.to_pgm())
}
