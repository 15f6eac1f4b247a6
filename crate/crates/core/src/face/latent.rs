//! Linear encoder/decoder between joint vertex displacements and the
//! fixed-width latent the face diffusion runs on.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sequence::FaceSequence;
use crate::{Error, Result};

pub const DEFAULT_LATENT_DIM: usize = 512;

/// Relative eigenvalue floor below which a principal direction counts as empty.
const RANK_EPS: f64 = 1e-12;

/// `z = ((v − template − bias) · basis) / scale`, with `scale = 0` marking
/// latent dims that carried no variance in training (they encode to 0).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceAutoencoder {
    /// 3V, vertex-major displacement mean.
    pub bias: Array1<f64>,
    /// 3V × L, orthonormal columns.
    pub basis: Array2<f64>,
    pub scale: Array1<f64>,
    /// Largest absolute reconstruction error seen on the training frames.
    pub tolerance: f64,
}

impl FaceAutoencoder {
    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn latent_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Fits on the displacement rows of joint (two-person) sequences.
    /// Principal directions come first; the basis is completed to `latent_dim`
    /// columns with seeded Gram-Schmidt.
    pub fn fit(faces: &[&FaceSequence], latent_dim: usize, seed: u64) -> Result<Self> {
        let Some(first) = faces.first() else {
            return Err(Error::invalid("no face sequences to fit"));
        };
        let d = 3 * first.vertices();
        if latent_dim == 0 || latent_dim > d {
            return Err(Error::invalid(format!("latent width {latent_dim} must be in 1..={d}")));
        }
        let mut rows = Vec::new();
        for f in faces {
            if 3 * f.vertices() != d {
                return Err(Error::shape(format!("face has {} vertices, expected {}", f.vertices(), d / 3)));
            }
            rows.push(f.displacement_rows());
        }
        let views: Vec<ArrayView2<f64>> = rows.iter().map(|r| r.view()).collect();
        let x = ndarray::concatenate(Axis(0), &views).unwrap();
        let n = x.nrows();
        if n == 0 {
            return Err(Error::invalid("face sequences have no frames"));
        }
        let bias = x.mean_axis(Axis(0)).unwrap();
        let xc = &x - &bias;

        let mut cols = principal_directions(&xc, latent_dim);
        let rank = cols.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = rand_distr::StandardNormal;
        while cols.len() < latent_dim {
            let mut v: Vec<f64> = (0..d).map(|_| rand::Rng::sample(&mut rng, normal)).collect();
            for _ in 0..2 {
                for c in &cols {
                    let p: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-6 {
                cols.push(v.into_iter().map(|a| a / norm).collect());
            }
        }
        let basis = Array2::from_shape_fn((d, latent_dim), |(i, j)| cols[j][i]);

        let proj = xc.dot(&basis);
        let scale = Array1::from_shape_fn(latent_dim, |j| {
            if j >= rank {
                return 0.0;
            }
            let c = proj.column(j);
            let var = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
            if var > 0.0 {
                var.sqrt()
            } else {
                0.0
            }
        });
        let mut ae = FaceAutoencoder { bias, basis, scale, tolerance: 0.0 };
        let mut err: f64 = 0.0;
        for r in &rows {
            let back = ae.decode_rows(&ae.encode_rows(r)?)?;
            err = err.max((&back - r).iter().fold(0.0, |m, v| m.max(v.abs())));
        }
        // Headroom for held-out data drawn from the same subspace.
        ae.tolerance = 2.0 * err + 1e-9;
        Ok(ae)
    }

    pub fn encode_rows(&self, rows: &Array2<f64>) -> Result<Array2<f64>> {
        if rows.ncols() != self.input_dim() {
            return Err(Error::shape(format!("face width {} != autoencoder width {}", rows.ncols(), self.input_dim())));
        }
        let mut z = (rows - &self.bias).dot(&self.basis);
        for mut row in z.rows_mut() {
            row.iter_mut().zip(&self.scale).for_each(|(v, &s)| *v = if s > 0.0 { *v / s } else { 0.0 });
        }
        Ok(z)
    }

    pub fn decode_rows(&self, z: &Array2<f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.latent_dim() {
            return Err(Error::shape(format!("latent width {} != {}", z.ncols(), self.latent_dim())));
        }
        Ok((z * &self.scale).dot(&self.basis.t()) + &self.bias)
    }

    /// T × L latent of a joint sequence (displacements from its template).
    pub fn encode(&self, face: &FaceSequence) -> Result<Array2<f64>> {
        self.encode_rows(&face.displacement_rows())
    }

    pub fn decode(&self, template: &Array2<f64>, z: &Array2<f64>) -> Result<FaceSequence> {
        if 3 * template.nrows() != self.input_dim() {
            return Err(Error::shape(format!("template has {} vertices, autoencoder expects {}", template.nrows(), self.input_dim() / 3)));
        }
        FaceSequence::from_displacement_rows(template.clone(), &self.decode_rows(z)?)
    }

    /// Largest absolute vertex error of `decode(encode(face))`.
    pub fn round_trip_error(&self, face: &FaceSequence) -> Result<f64> {
        let back = self.decode(&face.template, &self.encode(face)?)?;
        Ok((&back.frames - &face.frames).iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    pub fn to_blocks(&self) -> [Vec<f64>; 3] {
        [self.bias.to_vec(), self.basis.iter().copied().collect(), self.scale.to_vec()]
    }

    pub fn from_blocks(bias: Vec<f64>, basis: Vec<f64>, scale: Vec<f64>, tolerance: f64) -> Result<Self> {
        let (d, l) = (bias.len(), scale.len());
        let basis = Array2::from_shape_vec((d, l), basis).map_err(|_| Error::format("face basis block has the wrong size"))?;
        Ok(FaceAutoencoder { bias: Array1::from(bias), basis, scale: Array1::from(scale), tolerance })
    }
}

/// Unit principal directions of the centred rows, largest first, at most `max`.
fn principal_directions(xc: &Array2<f64>, max: usize) -> Vec<Vec<f64>> {
    let (n, d) = xc.dim();
    let m = DMatrix::from_fn(n, d, |i, j| xc[[i, j]]);
    let mut out: Vec<Vec<f64>> = Vec::new();
    if n <= d {
        // Eigenvectors of the small Gram matrix map to directions via Xᵀu/σ.
        let eig = SymmetricEigen::new(&m * m.transpose());
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for k in order {
            let lam = eig.eigenvalues[k];
            if out.len() == max || lam <= RANK_EPS * top || lam <= 0.0 {
                break;
            }
            let v = m.transpose() * eig.eigenvectors.column(k);
            let norm = v.norm();
            out.push(v.iter().map(|x| x / norm).collect());
        }
    } else {
        let eig = SymmetricEigen::new(m.transpose() * &m);
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for k in order {
            let lam = eig.eigenvalues[k];
            if out.len() == max || lam <= RANK_EPS * top || lam <= 0.0 {
                break;
            }
            out.push(eig.eigenvectors.column(k).iter().copied().collect());
        }
    }
    // Re-orthonormalise against round-off before the basis is completed.
    let mut clean: Vec<Vec<f64>> = Vec::with_capacity(out.len());
    for mut v in out {
        for c in &clean {
            let p: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            clean.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    clean
}
