//! Denoising diffusion: schedules, the forward process, the training
//! objective, ancestral sampling and the two-person body generator.

pub mod body;
pub mod denoiser;
pub mod forward;
pub mod normalize;
pub mod sample;
pub mod schedule;
pub mod train;

pub use body::{load_body_checkpoint, save_body_checkpoint, BodyCheckpoint, BodyNetConfig};
pub use denoiser::{BodyCond, ConvResConfig, ConvResDenoiser, Denoiser};
pub use forward::{q_sample, q_step, standard_normal};
pub use normalize::Normalizer;
pub use sample::{posterior, sample};
pub use schedule::{build_schedule, Schedule, ScheduleConfig, ScheduleShape};
pub use train::{draw_noise, loss_and_grad, loss_only, step_rng, train, training_loss, Draw, Item, TrainConfig, TrainState};
