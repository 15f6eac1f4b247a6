//! Pairing, windowing and persistence of two-person training data.

pub mod container;
pub mod offset;
pub mod pairing;
pub mod synth;
pub mod window;

pub use container::{build_container, load_dataset, save_dataset, DatasetContainer, FeatureLayout, Manifest};
pub use offset::{place_relative, relative_offset, relative_offset_from, RelativeOffset};
pub use pairing::{pair_streams, PairedStream, PersonStream};
pub use synth::{synth_generate, synth_recording, SynthConfig, SynthPerson, SynthRecording};
pub use window::{decode_pair, segment_windows, window_count, PairedSample};

/// Default window length in frames.
pub const DEFAULT_WINDOW: usize = 150;
/// Default stride between window starts in frames.
pub const DEFAULT_STRIDE: usize = 75;
