use serde::{Deserialize, Serialize};

use crate::dataset::relative_offset_from;
use crate::motion::{root_yaws, MotionSequence};
use crate::{Error, Result};

/// Uniform bins over `[min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Bins {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min < max) || count == 0 {
            return Err(Error::invalid(format!("invalid bins [{min}, {max}) × {count}")));
        }
        Ok(Bins { min, max, count })
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.count).map(|i| self.min + (self.max - self.min) * i as f64 / self.count as f64).collect()
    }

    pub fn index(&self, v: f64) -> Option<usize> {
        if !(v >= self.min && v < self.max) {
            return None;
        }
        Some((((v - self.min) / (self.max - self.min) * self.count as f64) as usize).min(self.count - 1))
    }
}

/// Counts indexed `[x bin][z bin]`; frames outside the range go to `overflow`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    pub x: Bins,
    pub z: Bins,
    pub counts: Vec<Vec<u64>>,
    pub overflow: u64,
}

impl Histogram2D {
    pub fn new(x: Bins, z: Bins) -> Self {
        Histogram2D { x, z, counts: vec![vec![0; z.count]; x.count], overflow: 0 }
    }

    pub fn add(&mut self, dx: f64, dz: f64) {
        match (self.x.index(dx), self.z.index(dz)) {
            (Some(i), Some(j)) => self.counts[i][j] += 1,
            _ => self.overflow += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum::<u64>() + self.overflow
    }

    pub fn to_csv(&self) -> String {
        let xe = self.x.edges();
        let ze = self.z.edges();
        let mut s = String::from("x_lo,x_hi,z_lo,z_hi,count\n");
        for i in 0..self.x.count {
            for j in 0..self.z.count {
                s += &format!("{},{},{},{},{}\n", xe[i], xe[i + 1], ze[j], ze[j + 1], self.counts[i][j]);
            }
        }
        s += &format!("overflow,,,,{}\n", self.overflow);
        s
    }
}

/// Per frame, person 2's root in person 1's heading-aligned ground frame
/// (`dx` forward, `dz` lateral).
pub fn relative_positions(pair: &[MotionSequence; 2]) -> Result<Vec<(f64, f64)>> {
    if pair[0].len() != pair[1].len() {
        return Err(Error::shape("actors differ in frame count"));
    }
    let (ya, yb) = (root_yaws(&pair[0]), root_yaws(&pair[1]));
    Ok((0..pair[0].len())
        .map(|t| {
            let o = relative_offset_from(
                pair[0].frames[t].root_translation,
                ya[t],
                pair[1].frames[t].root_translation,
                yb[t],
            );
            (o.dx, o.dz)
        })
        .collect())
}

pub fn relative_position_histogram(pairs: &[[MotionSequence; 2]], x: Bins, z: Bins) -> Result<Histogram2D> {
    let mut h = Histogram2D::new(x, z);
    for p in pairs {
        for (dx, dz) in relative_positions(p)? {
            h.add(dx, dz);
        }
    }
    Ok(h)
}
