use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleShape {
    Linear,
    Cosine,
}

impl std::str::FromStr for ScheduleShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ScheduleShape::Linear),
            "cosine" => Ok(ScheduleShape::Cosine),
            _ => Err(Error::invalid(format!("unknown schedule shape {s:?} (expected linear or cosine)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub shape: ScheduleShape,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { steps: 1000, beta_min: 1e-4, beta_max: 0.02, shape: ScheduleShape::Linear }
    }
}

impl ScheduleConfig {
    /// The short schedule used by test suites and smoke runs.
    pub fn short() -> Self {
        ScheduleConfig { steps: 50, ..Self::default() }
    }

    pub fn build(&self) -> Result<Schedule> {
        build_schedule(self.steps, self.beta_min, self.beta_max, self.shape)
    }
}

/// Noise schedule; step `t` runs from 1 to `T` and is stored at index `t − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

pub fn build_schedule(steps: usize, beta_min: f64, beta_max: f64, shape: ScheduleShape) -> Result<Schedule> {
    if steps == 0 {
        return Err(Error::invalid("schedule needs at least one step"));
    }
    if !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0) {
        return Err(Error::invalid(format!("need 0 < beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]")));
    }
    let betas = match shape {
        ScheduleShape::Linear if steps == 1 => vec![beta_min],
        ScheduleShape::Linear => (0..steps)
            .map(|i| beta_min + (beta_max - beta_min) * i as f64 / (steps - 1) as f64)
            .collect(),
        ScheduleShape::Cosine => {
            let s = 0.008;
            let f = |t: usize| (((t as f64 / steps as f64) + s) / (1.0 + s) * FRAC_PI_2).cos().powi(2);
            (1..=steps).map(|t| (1.0 - f(t) / f(t - 1)).clamp(beta_min, beta_max)).collect()
        }
    };
    Schedule::from_betas(betas)
}

impl Schedule {
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(Error::invalid("every beta must lie in (0, 1)"));
        }
        Ok(Self::from_betas_unchecked(betas))
    }

    /// Allows β = 0 (α = 1) for identity checks.
    #[doc(hidden)]
    pub fn from_betas_unchecked(betas: Vec<f64>) -> Self {
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        // Running product with an error-free transform of each multiply.
        let (mut p, mut err) = (1.0f64, 0.0f64);
        let alpha_bars = alphas
            .iter()
            .map(|&a| {
                let q = p * a;
                err = err * a + p.mul_add(a, -q);
                p = q;
                p + err
            })
            .collect();
        Schedule { betas, alphas, alpha_bars }
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    fn idx(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.steps() {
            return Err(Error::invalid(format!("diffusion step {t} outside [1, {}]", self.steps())));
        }
        Ok(t - 1)
    }

    pub fn beta(&self, t: usize) -> Result<f64> {
        Ok(self.betas[self.idx(t)?])
    }

    pub fn alpha(&self, t: usize) -> Result<f64> {
        Ok(self.alphas[self.idx(t)?])
    }

    /// ᾱ_t, with ᾱ_0 = 1.
    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Ok(1.0);
        }
        Ok(self.alpha_bars[self.idx(t)?])
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }
}
