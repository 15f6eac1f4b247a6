//! Audio ingest and the 62-wide per-frame conditioning features.

pub mod action;
pub mod features;
pub mod mel;
pub mod semantic;
pub mod wav;

pub use action::{auto_label, encode_action_labels, ActionLabel};
pub use features::{assemble_features, FrameFeatures, ACTION_DIM, FEATURE_DIM};
pub use mel::{mel_spectrogram, MelSpectrogram, MEL_BANDS};
pub use semantic::{semantic_features, HashEmbedder, SemanticProvider, WordSpan, SEMANTIC_DIM};
pub use wav::{load_wav, AudioClip};
