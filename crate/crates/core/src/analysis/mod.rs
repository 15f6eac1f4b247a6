//! Dataset statistics: facing classification, joint-angle variability,
//! relative-position histograms and facial variance maps.

pub mod angles;
pub mod facing;
pub mod histogram;
pub mod variance;

pub use angles::{angle_std_table, AngleStdRow, AngleStdTable, GroupedMotion, DEFAULT_COLUMNS};
pub use facing::{detect_facing, FacingLabel};
pub use histogram::{relative_position_histogram, relative_positions, Bins, Histogram2D};
pub use variance::{face_variance_map, to_pgm, VertexVarianceMap};
