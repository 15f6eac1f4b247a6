use rand::Rng;

use super::denoiser::Denoiser;
use super::forward::standard_normal;
use super::schedule::Schedule;
use crate::nn::Mat;
use crate::{Error, Result};

/// Posterior mean and variance of `Y_{t−1}` given `Y_t` and a prediction of
/// `Y_0`. At `t = 1` the mean is the prediction itself and the variance 0.
pub fn posterior(y_t: &Mat, y0_hat: &Mat, t: usize, s: &Schedule) -> Result<(Mat, f64)> {
    if t == 1 {
        s.alpha(1)?;
        return Ok((y0_hat.clone(), 0.0));
    }
    let (beta, alpha) = (s.beta(t)?, s.alpha(t)?);
    let (ab, ab_prev) = (s.alpha_bar(t)?, s.alpha_bar(t - 1)?);
    let c0 = ab_prev.sqrt() * beta / (1.0 - ab);
    let ct = alpha.sqrt() * (1.0 - ab_prev) / (1.0 - ab);
    let var = beta * (1.0 - ab_prev) / (1.0 - ab);
    Ok((y0_hat * c0 + y_t * ct, var))
}

/// Ancestral sampling from `Y_T ~ N(0, I)` down to `Y_0` (normalised space).
pub fn sample<D: Denoiser>(
    model: &D,
    cond: &D::Cond,
    s: &Schedule,
    rng: &mut impl Rng,
    frames: usize,
    width: usize,
) -> Result<Mat> {
    let mut y = standard_normal(rng, frames, width);
    for t in (1..=s.steps()).rev() {
        let y0_hat = model.predict(&y, t, cond)?;
        if y0_hat.dim() != y.dim() {
            return Err(Error::shape(format!("denoiser output {:?} != sample {:?}", y0_hat.dim(), y.dim())));
        }
        let (mean, var) = posterior(&y, &y0_hat, t, s)?;
        y = if t > 1 { mean + standard_normal(rng, frames, width) * var.sqrt() } else { mean };
    }
    Ok(y)
}
