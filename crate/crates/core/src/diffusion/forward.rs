use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::schedule::Schedule;
use crate::Result;

/// Matrix of independent standard normal draws, row-major.
pub fn standard_normal(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// One forward transition `Y_{t−1} → Y_t`.
pub fn q_step(y_prev: &Array2<f64>, t: usize, s: &Schedule, rng: &mut impl Rng) -> Result<Array2<f64>> {
    let a = s.alpha(t)?;
    let eps = standard_normal(rng, y_prev.nrows(), y_prev.ncols());
    Ok(q_step_with(y_prev, a, &eps))
}

pub fn q_step_with(y_prev: &Array2<f64>, alpha: f64, eps: &Array2<f64>) -> Array2<f64> {
    y_prev * alpha.sqrt() + eps * (1.0 - alpha).sqrt()
}

/// Closed-form draw of `Y_t` given `Y_0`.
pub fn q_sample(y0: &Array2<f64>, t: usize, s: &Schedule, rng: &mut impl Rng) -> Result<Array2<f64>> {
    let ab = s.alpha_bar(t)?;
    s.alpha(t)?;
    let eps = standard_normal(rng, y0.nrows(), y0.ncols());
    Ok(q_sample_with(y0, ab, &eps))
}

pub fn q_sample_with(y0: &Array2<f64>, alpha_bar: f64, eps: &Array2<f64>) -> Array2<f64> {
    y0 * alpha_bar.sqrt() + eps * (1.0 - alpha_bar).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_alpha_is_identity() {
        let s = Schedule::from_betas_unchecked(vec![0.0]);
        let y = ndarray::array![[1.5, -2.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(q_step(&y, 1, &s, &mut rng).unwrap(), y);
    }

    #[test]
    fn out_of_range_step() {
        let s = Schedule::from_betas(vec![0.1, 0.2]).unwrap();
        let y = Array2::zeros((1, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(q_step(&y, 0, &s, &mut rng).is_err());
        assert!(q_sample(&y, 3, &s, &mut rng).is_err());
    }

    #[test]
    fn zero_input_variance() {
        let s = Schedule::from_betas(vec![0.25]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = Array2::zeros((100_000, 1));
        let out = q_step(&y, 1, &s, &mut rng).unwrap();
        let var = out.iter().map(|v| v * v).sum::<f64>() / out.len() as f64;
        assert!((var - 0.25).abs() / 0.25 < 0.03, "{var}");
    }

    #[test]
    fn seeded_draws_repeat() {
        let s = Schedule::from_betas(vec![0.1, 0.2, 0.3]).unwrap();
        let y = Array2::ones((4, 3));
        let a = q_sample(&y, 2, &s, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = q_sample(&y, 2, &s, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
