use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

/// Named parameter matrices with a flat coordinate view.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    specs: Vec<BlockSpec>,
    blocks: Vec<Array2<f64>>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Array2<f64>) -> usize {
        self.specs.push(BlockSpec { name: name.to_string(), rows: value.nrows(), cols: value.ncols() });
        self.blocks.push(value);
        self.blocks.len() - 1
    }

    /// Uniform in `[−scale, scale)`.
    pub fn add_uniform(&mut self, name: &str, rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> usize {
        let m = Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-scale..scale));
        self.add(name, m)
    }

    /// Glorot-uniform initialisation for a `rows × cols` weight.
    pub fn add_glorot(&mut self, name: &str, rows: usize, cols: usize, rng: &mut impl Rng) -> usize {
        let scale = (6.0 / (rows + cols) as f64).sqrt();
        self.add_uniform(name, rows, cols, scale, rng)
    }

    pub fn add_zeros(&mut self, name: &str, rows: usize, cols: usize) -> usize {
        self.add(name, Array2::zeros((rows, cols)))
    }

    pub fn block(&self, i: usize) -> &Array2<f64> {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut Array2<f64> {
        &mut self.blocks[i]
    }

    pub fn blocks(&self) -> &[Array2<f64>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.blocks
    }

    pub fn specs(&self) -> &[BlockSpec] {
        &self.specs
    }

    /// Total scalar count.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn locate(&self, mut k: usize) -> (usize, usize, usize) {
        for (i, b) in self.blocks.iter().enumerate() {
            if k < b.len() {
                return (i, k / b.ncols(), k % b.ncols());
            }
            k -= b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn get(&self, k: usize) -> f64 {
        let (b, r, c) = self.locate(k);
        self.blocks[b][[r, c]]
    }

    pub fn set(&mut self, k: usize, v: f64) {
        let (b, r, c) = self.locate(k);
        self.blocks[b][[r, c]] = v;
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.iter().copied()).collect()
    }

    pub fn from_flat(specs: Vec<BlockSpec>, flat: &[f64]) -> Result<Self> {
        let total: usize = specs.iter().map(|s| s.rows * s.cols).sum();
        if total != flat.len() {
            return Err(Error::shape(format!("parameter block holds {} values, layout needs {total}", flat.len())));
        }
        let mut blocks = Vec::with_capacity(specs.len());
        let mut off = 0;
        for s in &specs {
            let n = s.rows * s.cols;
            blocks.push(Array2::from_shape_vec((s.rows, s.cols), flat[off..off + n].to_vec()).unwrap());
            off += n;
        }
        Ok(ParamSet { specs, blocks })
    }

    pub fn zeros_like(&self) -> Vec<Array2<f64>> {
        self.blocks.iter().map(|b| Array2::zeros(b.dim())).collect()
    }
}

pub fn flatten_grads(grads: &[Array2<f64>]) -> Vec<f64> {
    grads.iter().flat_map(|g| g.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_view_matches_blocks() {
        let mut p = ParamSet::new();
        p.add("a", ndarray::array![[1.0, 2.0], [3.0, 4.0]]);
        p.add("b", ndarray::array![[5.0, 6.0, 7.0]]);
        assert_eq!(p.len(), 7);
        assert_eq!(p.get(4), 5.0);
        p.set(3, -4.0);
        assert_eq!(p.block(0)[[1, 1]], -4.0);
        let q = ParamSet::from_flat(p.specs().to_vec(), &p.to_flat()).unwrap();
        assert_eq!(p, q);
        assert!(ParamSet::from_flat(p.specs().to_vec(), &[0.0; 3]).is_err());
    }
}
