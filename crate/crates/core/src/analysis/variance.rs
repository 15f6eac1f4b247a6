use serde::{Deserialize, Serialize};

use crate::face::FaceSequence;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexVarianceMap {
    /// `(group key, per-vertex variance)` in input order.
    pub groups: Vec<(String, Vec<f64>)>,
}

/// Per group and vertex: population variance over all frames of the group
/// of the displacement norm from the template.
pub fn face_variance_map(groups: &[(String, Vec<&FaceSequence>)]) -> Result<VertexVarianceMap> {
    let mut out = Vec::with_capacity(groups.len());
    for (key, faces) in groups {
        let v = faces.first().map_or(0, |f| f.vertices());
        if faces.iter().any(|f| f.vertices() != v) {
            return Err(Error::shape(format!("group {key:?}: faces differ in vertex count")));
        }
        let (mut n, mut mean, mut m2) = (0usize, vec![0.0; v], vec![0.0; v]);
        for f in faces {
            for row in f.displacement_norms().rows() {
                n += 1;
                for (k, &x) in row.iter().enumerate() {
                    let d = x - mean[k];
                    mean[k] += d / n as f64;
                    m2[k] += d * (x - mean[k]);
                }
            }
        }
        let var = m2.iter().map(|s| if n == 0 { 0.0 } else { (s / n as f64).max(0.0) }).collect();
        out.push((key.clone(), var));
    }
    Ok(VertexVarianceMap { groups: out })
}

impl VertexVarianceMap {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("group,vertex,variance\n");
        for (g, vals) in &self.groups {
            for (i, v) in vals.iter().enumerate() {
                s += &format!("{g},{i},{v}\n");
            }
        }
        s
    }
}

/// Plain (ASCII) PGM of `values` laid out row-major on a `rows × cols` grid,
/// scaled so the largest value is white.
pub fn to_pgm(values: &[f64], rows: usize, cols: usize) -> Result<String> {
    if values.len() != rows * cols {
        return Err(Error::shape(format!("{} values for a {rows}×{cols} grid", values.len())));
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let mut s = format!("P2\n{cols} {rows}\n255\n");
    for r in 0..rows {
        let line: Vec<String> = (0..cols)
            .map(|c| {
                let v = values[r * cols + c];
                let g = if max > 0.0 { (v / max * 255.0).round() as u32 } else { 0 };
                g.to_string()
            })
            .collect();
        s += &line.join(" ");
        s.push('\n');
    }
    Ok(s)
}
