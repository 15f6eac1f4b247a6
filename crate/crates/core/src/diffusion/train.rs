use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::denoiser::Denoiser;
use super::forward::{q_sample_with, standard_normal};
use super::schedule::Schedule;
use crate::nn::{clip_grad_norm, Adam, Graph, Mat};
use crate::par::{self, Execution};
use crate::{Error, Result};

/// One training pair: condition and clean (normalised) sample.
pub struct Item<C> {
    pub cond: C,
    pub y0: Mat,
}

/// The random choices behind one loss evaluation: step and noise per item.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub t: usize,
    pub eps: Mat,
}

/// Draws `t ~ U{1..T}` and ε for each item, strictly in item order.
pub fn draw_noise<C>(items: &[&Item<C>], s: &Schedule, rng: &mut impl Rng) -> Vec<Draw> {
    items
        .iter()
        .map(|it| {
            let t = rng.random_range(1..=s.steps());
            let eps = standard_normal(rng, it.y0.nrows(), it.y0.ncols());
            Draw { t, eps }
        })
        .collect()
}

/// Mean over items of `mean((Y_0 − G(Y_t, t, X))²)` for fixed draws, and its
/// gradient with respect to the denoiser parameters.
pub fn loss_and_grad<D: Denoiser>(
    model: &D,
    items: &[&Item<D::Cond>],
    draws: &[Draw],
    s: &Schedule,
    exec: Execution,
) -> Result<(f64, Vec<Mat>)> {
    if items.is_empty() {
        return Err(Error::invalid("training batch is empty"));
    }
    let per_item = par::map_range(exec, items.len(), |i| -> Result<(f64, Vec<Mat>)> {
        let (it, d) = (items[i], &draws[i]);
        let y_t = q_sample_with(&it.y0, s.alpha_bar(d.t)?, &d.eps);
        let mut g = Graph::new();
        let y = g.input(y_t);
        let pred = model.forward(&mut g, y, d.t, &it.cond)?;
        if g.value(pred).dim() != it.y0.dim() {
            return Err(Error::shape("denoiser output does not match the sample shape"));
        }
        let loss = g.mse(pred, it.y0.clone());
        Ok((g.scalar(loss), g.backward(loss, model.params())))
    });
    let n = items.len() as f64;
    let mut total = 0.0;
    let mut grads = model.params().zeros_like();
    for r in per_item {
        let (l, g) = r?;
        total += l;
        for (acc, gi) in grads.iter_mut().zip(&g) {
            *acc += gi;
        }
    }
    for g in &mut grads {
        *g /= n;
    }
    Ok((total / n, grads))
}

pub fn loss_only<D: Denoiser>(model: &D, items: &[&Item<D::Cond>], draws: &[Draw], s: &Schedule) -> Result<f64> {
    let mut total = 0.0;
    for (it, d) in items.iter().zip(draws) {
        let y_t = q_sample_with(&it.y0, s.alpha_bar(d.t)?, &d.eps);
        let pred = model.predict(&y_t, d.t, &it.cond)?;
        total += (&pred - &it.y0).mapv(|v| v * v).mean().unwrap_or(0.0);
    }
    Ok(total / items.len() as f64)
}

/// Loss with fresh draws from `rng`.
pub fn training_loss<D: Denoiser>(model: &D, items: &[Item<D::Cond>], s: &Schedule, rng: &mut impl Rng) -> Result<f64> {
    let refs: Vec<_> = items.iter().collect();
    if refs.is_empty() {
        return Err(Error::invalid("training batch is empty"));
    }
    let draws = draw_noise(&refs, s, rng);
    loss_only(model, &refs, &draws, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub clip: f64,
    /// Items per step; 0 uses the whole set.
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { steps: 1000, lr: 1e-4, clip: 1.0, batch: 0, seed: 0 }
    }
}

/// Optimiser state and loss history; together with the parameters this is
/// everything needed to resume bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub adam: Adam,
    pub step: usize,
    pub losses: Vec<f64>,
}

impl TrainState {
    pub fn new<D: Denoiser>(model: &D, lr: f64) -> Self {
        TrainState { adam: Adam::new(model.params(), lr), step: 0, losses: Vec::new() }
    }
}

/// Generator for one training step: depends only on the seed and step.
pub fn step_rng(seed: u64, step: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step as u64);
    rng
}

/// Runs steps `state.step .. cfg.steps`, calling `on_step(step, loss)` after each.
pub fn train<D: Denoiser>(
    model: &mut D,
    items: &[Item<D::Cond>],
    s: &Schedule,
    cfg: &TrainConfig,
    state: &mut TrainState,
    exec: Execution,
    mut on_step: impl FnMut(usize, f64),
) -> Result<()> {
    if items.is_empty() {
        return Err(Error::invalid("dataset has no samples"));
    }
    while state.step < cfg.steps {
        let mut rng = step_rng(cfg.seed, state.step);
        let batch: Vec<&Item<D::Cond>> = if cfg.batch == 0 || cfg.batch >= items.len() {
            items.iter().collect()
        } else {
            (0..cfg.batch).map(|_| &items[rng.random_range(0..items.len())]).collect()
        };
        let draws = draw_noise(&batch, s, &mut rng);
        let (loss, mut grads) = loss_and_grad(model, &batch, &draws, s, exec)?;
        if !loss.is_finite() || grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged { step: state.step, msg: format!("loss = {loss}") });
        }
        clip_grad_norm(&mut grads, cfg.clip);
        state.adam.update(model.params_mut(), &grads);
        state.losses.push(loss);
        on_step(state.step, loss);
        state.step += 1;
    }
    Ok(())
}
