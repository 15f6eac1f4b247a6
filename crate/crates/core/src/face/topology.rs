//! Vertex region masks for the face metrics and a synthetic face grid.

use ndarray::Array2;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMasks {
    pub lip: Vec<usize>,
    pub upper: Vec<usize>,
}

impl RegionMasks {
    /// Parses `lip:` / `upper:` lines of whitespace- or comma-separated indices.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lip = None;
        let mut upper = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::format(format!("mask line {}: expected `lip:` or `upper:`", i + 1)))?;
            let idx: Vec<usize> = rest
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::format(format!("mask line {}: {e}", i + 1)))?;
            match key.trim() {
                "lip" => lip = Some(idx),
                "upper" => upper = Some(idx),
                k => return Err(Error::format(format!("mask line {}: unknown region {k:?}", i + 1))),
            }
        }
        Ok(RegionMasks {
            lip: lip.ok_or_else(|| Error::format("mask file has no `lip:` line"))?,
            upper: upper.ok_or_else(|| Error::format("mask file has no `upper:` line"))?,
        })
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        format!("lip: {}\nupper: {}\n", join(&self.lip), join(&self.upper))
    }

    pub fn check(&self, vertices: usize) -> Result<()> {
        for (name, m) in [("lip", &self.lip), ("upper", &self.upper)] {
            if m.is_empty() {
                return Err(Error::invalid(format!("{name} mask is empty")));
            }
            if let Some(&i) = m.iter().find(|&&i| i >= vertices) {
                return Err(Error::invalid(format!("{name} mask index {i} out of range for {vertices} vertices")));
            }
        }
        Ok(())
    }

    /// The same regions on the second face of a `[A | B]` concatenation.
    pub fn offset(&self, by: usize) -> RegionMasks {
        RegionMasks {
            lip: self.lip.iter().map(|i| i + by).collect(),
            upper: self.upper.iter().map(|i| i + by).collect(),
        }
    }
}

/// A 13 × 26 grid (338 vertices) standing in for half a face: rows run from
/// the brow (row 0) down to the chin (row 12), columns left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFace {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

impl Default for GridFace {
    fn default() -> Self {
        GridFace { rows: 13, cols: 26, spacing: 0.006 }
    }
}

impl GridFace {
    pub fn vertices(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Flat grid on the z = 0 plane centred at the origin, with a slight bulge.
    pub fn template(&self) -> Array2<f64> {
        let (r0, c0) = ((self.rows - 1) as f64 / 2.0, (self.cols - 1) as f64 / 2.0);
        Array2::from_shape_fn((self.vertices(), 3), |(i, k)| {
            let (r, c) = ((i / self.cols) as f64, (i % self.cols) as f64);
            match k {
                0 => (c - c0) * self.spacing,
                1 => (r0 - r) * self.spacing,
                _ => -0.02 * (((r - r0) / r0).powi(2) + ((c - c0) / c0).powi(2)),
            }
        })
    }

    /// Lips: rows 8–10 in the middle half of the columns. Upper face: rows 0–3.
    pub fn masks(&self) -> RegionMasks {
        let lip = (8..=10.min(self.rows - 1))
            .flat_map(|r| (self.cols / 4..self.cols - self.cols / 4).map(move |c| (r, c)))
            .map(|(r, c)| self.index(r, c))
            .collect();
        let upper = (0..4.min(self.rows)).flat_map(|r| (0..self.cols).map(move |c| (r, c))).map(|(r, c)| self.index(r, c)).collect();
        RegionMasks { lip, upper }
    }
}
