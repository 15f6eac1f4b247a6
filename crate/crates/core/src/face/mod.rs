//! Two-person facial vertex sequences and their diffusion model.

pub mod attention;
pub mod checkpoint;
pub mod data;
pub mod latent;
pub mod model;
pub mod sequence;
pub mod topology;

pub use attention::{attend, attention_bias, biased_conditional_attention, CONDITION_SLOTS, DEFAULT_TAU};
pub use checkpoint::{
    generate_faces, load_face_checkpoint, save_face_checkpoint, FaceCheckpoint, FaceOptions, GeneratedFaces, StylePolicy,
};
pub use data::{load_face_data, save_face_data, FaceDataset, FaceRecording};
pub use latent::{FaceAutoencoder, DEFAULT_LATENT_DIM};
pub use model::{facing_one_hot, FaceCond, FaceDenoiser, FaceNetConfig, StyleRef};
pub use sequence::{concat_faces, load_face_sequence, save_face_sequence, split_faces, FaceSequence};
pub use topology::{GridFace, RegionMasks};
