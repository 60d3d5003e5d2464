//! Point cloud video action segmentation toolkit.
//!
//! Converts point cloud videos into depth videos, augments both modalities
//! (recentered flip/jitter/scale for points, CutMix for depth frames), fuses
//! per-frame class probabilities from several experts by averaging, and
//! scores predicted label sequences with frame accuracy, segmental edit and
//! segmental F1 at IoU thresholds.
//!
//! Lightweight nearest-centroid experts ([`baseline`]) and a synthetic
//! corpus generator ([`synth`]) make the whole pipeline runnable without any
//! neural network.

pub mod augment_depth;
pub mod augment_points;
pub mod baseline;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod metrics;
pub mod projection;
pub mod seed;
pub mod synth;

pub use data::{FramePredictionMatrix, LabelSequence, Point, PointCloudFrame, PointCloudVideo};
pub use error::{Error, Result};
pub use projection::{CollisionPolicy, DepthImage, DepthVideo, Extent, ProjectionConfig};
