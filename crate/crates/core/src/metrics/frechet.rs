use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{Array2, Axis};

use crate::{Error, Result};

/// Ridge added to the covariance when samples do not outnumber dimensions.
pub const SHRINKAGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianStats {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::shape(format!("mean of length {} with a {}×{} covariance", mean.len(), cov.nrows(), cov.ncols())));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Gaussian statistics".into()));
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(GaussianStats { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Sample mean and unbiased covariance of the rows of `x` (n × d).
    pub fn fit(x: &Array2<f64>) -> Result<Self> {
        let (n, d) = x.dim();
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 samples for a Gaussian fit, got {n}")));
        }
        let mean = x.mean_axis(Axis(0)).expect("n >= 2");
        let centered = x - &mean;
        let mut cov = centered.t().dot(&centered) / (n - 1) as f64;
        if n < d + 1 {
            for i in 0..d {
                cov[[i, i]] += SHRINKAGE;
            }
        }
        GaussianStats::new(DVector::from_vec(mean.to_vec()), DMatrix::from_fn(d, d, |i, j| cov[[i, j]]))
    }

    pub fn fit_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::shape("feature vectors differ in length"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        GaussianStats::fit(&Array2::from_shape_vec((rows.len(), d), flat).unwrap())
    }
}

fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let s = e.eigenvalues.map(|l| l.max(0.0).sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&s) * e.eigenvectors.transpose()
}

/// `‖μa − μb‖² + tr(Σa + Σb − 2(Σa Σb)^{1/2})`, with the trace of the root
/// taken from the symmetric product `Σa^{1/2} Σb Σa^{1/2}`.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::shape(format!("Gaussians of dimension {} and {}", a.dim(), b.dim())));
    }
    let ra = sqrt_psd(&a.cov);
    let mid = &ra * &b.cov * &ra;
    let mid = (&mid + mid.transpose()) * 0.5;
    let tr_root: f64 = SymmetricEigen::new(mid).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    let d = (&a.mean - &b.mean).norm_squared() + a.cov.trace() + b.cov.trace() - 2.0 * tr_root;
    if !d.is_finite() {
        return Err(Error::NonFinite("Fréchet distance".into()));
    }
    Ok(d.max(0.0))
}

/// Fits both feature sets and returns their Fréchet distance.
pub fn frechet_of_features(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    frechet_distance(&GaussianStats::fit_rows(a)?, &GaussianStats::fit_rows(b)?)
}
