//! Evaluation metrics for generated body and face motion.

pub mod body;
pub mod face;
pub mod frechet;
pub mod report;

pub use body::{diversity, fid_g, fid_k, fid_r, foot_slide, window_feature, DEFAULT_FOOT_JOINTS};
pub use face::{fdd, lve};
pub use frechet::{frechet_distance, GaussianStats};
pub use report::MetricReport;
