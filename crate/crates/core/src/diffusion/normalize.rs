use ndarray::{Array2, ArrayView2, Axis};

use crate::{Error, Result};

/// Per-dimension standardisation. Dimensions whose standard deviation is at
/// most 1e-8 are masked: they normalise to 0 and restore to their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub masked: Vec<bool>,
}

pub const MIN_STD: f64 = 1e-8;

impl Normalizer {
    /// Fits on the rows of every matrix in `data`.
    pub fn fit<'a>(data: impl IntoIterator<Item = ArrayView2<'a, f64>>) -> Result<Self> {
        let mut iter = data.into_iter().peekable();
        let Some(first) = iter.peek() else {
            return Err(Error::invalid("cannot fit normalisation on no data"));
        };
        let d = first.ncols();
        let mut n = 0usize;
        let mut mean = vec![0.0; d];
        let mut m2 = vec![0.0; d];
        for m in iter {
            if m.ncols() != d {
                return Err(Error::shape(format!("rows of width {} and {d}", m.ncols())));
            }
            for row in m.axis_iter(Axis(0)) {
                n += 1;
                for (j, &x) in row.iter().enumerate() {
                    let delta = x - mean[j];
                    mean[j] += delta / n as f64;
                    m2[j] += delta * (x - mean[j]);
                }
            }
        }
        if n == 0 {
            return Err(Error::invalid("cannot fit normalisation on no rows"));
        }
        let std: Vec<f64> = m2.iter().map(|v| (v / n as f64).sqrt()).collect();
        if mean.iter().chain(&std).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("normalisation statistics".into()));
        }
        let masked = std.iter().map(|&s| s <= MIN_STD).collect();
        Ok(Normalizer { mean, std, masked })
    }

    pub fn identity(d: usize) -> Self {
        Normalizer { mean: vec![0.0; d], std: vec![1.0; d], masked: vec![false; d] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, m: &Array2<f64>) -> Result<()> {
        if m.ncols() != self.dim() {
            return Err(Error::shape(format!("width {} but normaliser has {}", m.ncols(), self.dim())));
        }
        Ok(())
    }

    pub fn normalize(&self, m: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(m)?;
        let mut out = m.clone();
        for mut row in out.axis_iter_mut(Axis(0)) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.masked[j] { 0.0 } else { (*v - self.mean[j]) / self.std[j] };
            }
        }
        Ok(out)
    }

    pub fn denormalize(&self, m: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(m)?;
        let mut out = m.clone();
        for mut row in out.axis_iter_mut(Axis(0)) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.masked[j] { self.mean[j] } else { *v * self.std[j] + self.mean[j] };
            }
        }
        Ok(out)
    }

    /// Flat `[mean | std | mask]` encoding for checkpoints.
    pub fn to_blocks(&self) -> [Vec<f64>; 3] {
        [self.mean.clone(), self.std.clone(), self.masked.iter().map(|&m| m as u8 as f64).collect()]
    }

    pub fn from_blocks(mean: Vec<f64>, std: Vec<f64>, mask: Vec<f64>) -> Result<Self> {
        if std.len() != mean.len() || mask.len() != mean.len() {
            return Err(Error::format("normalisation blocks differ in length"));
        }
        Ok(Normalizer { mean, std, masked: mask.iter().map(|&m| m != 0.0).collect() })
    }
}
