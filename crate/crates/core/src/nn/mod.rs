//! Minimal neural-network plumbing: a differentiable matrix tape,
//! parameter storage and the Adam optimiser.

pub mod adam;
pub mod graph;
pub mod params;

pub use adam::{clip_grad_norm, Adam};
pub use graph::{softmax_rows, Graph, Mat, Var};
pub use params::{flatten_grads, BlockSpec, ParamSet};

/// Sinusoidal embedding of a diffusion step (1 × `dim`).
pub fn step_embedding(t: usize, dim: usize) -> Mat {
    let half = dim / 2;
    Mat::from_shape_fn((1, dim), |(_, j)| {
        let k = (j % half.max(1)) as f64;
        let freq = (-(10000f64).ln() * k / half.max(1) as f64).exp();
        if j < half {
            (t as f64 * freq).sin()
        } else {
            (t as f64 * freq).cos()
        }
    })
}
