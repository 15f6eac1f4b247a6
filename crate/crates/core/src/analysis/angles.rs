use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::motion::MotionSequence;
use crate::{Error, Result};

/// Default tracked columns: `(column title, joint name)`.
pub const DEFAULT_COLUMNS: [(&str, &str); 5] = [
    ("Upper.LArm", "LeftArm"),
    ("Upper.RArm", "RightArm"),
    ("Lower.LLeg", "LeftLeg"),
    ("Lower.RLeg", "RightLeg"),
    ("Root", "Hips"),
];

/// A motion whose frames are assigned to groups one by one.
pub struct GroupedMotion<'a> {
    pub motion: &'a MotionSequence,
    pub groups: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleStdRow {
    pub group: String,
    pub frames: usize,
    pub percentage: f64,
    /// Standard deviation in degrees, one per column.
    pub std_deg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleStdTable {
    pub columns: Vec<String>,
    pub rows: Vec<AngleStdRow>,
    /// What "rotation angle" means in this table.
    pub measure: String,
}

#[derive(Default, Clone)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn population_var(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64
        }
    }
}

/// Per group and tracked joint: population standard deviation (degrees) of
/// the joint's local rotation angle (exponential-map magnitude). Groups are
/// listed in order of first appearance.
pub fn angle_std_table(items: &[GroupedMotion<'_>], columns: &[(&str, &str)]) -> Result<AngleStdTable> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, Vec<Welford>> = BTreeMap::new();
    for item in items {
        let m = item.motion;
        if item.groups.len() != m.len() {
            return Err(Error::shape(format!("{} group labels for {} frames", item.groups.len(), m.len())));
        }
        let idx: Vec<usize> = columns.iter().map(|(_, j)| m.skeleton.require_joint(j)).collect::<Result<_>>()?;
        for (pose, g) in m.frames.iter().zip(&item.groups) {
            let cols = acc.entry(g.clone()).or_insert_with(|| {
                order.push(g.clone());
                vec![Welford::default(); idx.len()]
            });
            for (w, &k) in cols.iter_mut().zip(&idx) {
                w.push(pose.rotations[k].angle().to_degrees());
            }
        }
    }
    let total: usize = acc.values().map(|c| c.first().map_or(0, |w| w.n)).sum();
    let rows = order
        .into_iter()
        .map(|g| {
            let cols = &acc[&g];
            let frames = cols.first().map_or(0, |w| w.n);
            AngleStdRow {
                group: g,
                frames,
                percentage: if total == 0 { 0.0 } else { 100.0 * frames as f64 / total as f64 },
                std_deg: cols.iter().map(|w| w.population_var().sqrt()).collect(),
            }
        })
        .collect();
    Ok(AngleStdTable {
        columns: columns.iter().map(|(c, _)| c.to_string()).collect(),
        rows,
        measure: "exponential-map magnitude of the joint's local rotation, degrees".into(),
    })
}

impl AngleStdTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("Type,Frames,Percentage,{}\n", self.columns.join(","));
        for r in &self.rows {
            let stds: Vec<String> = r.std_deg.iter().map(|v| format!("{v:.2}")).collect();
            s += &format!("{},{},{:.2},{}\n", r.group, r.frames, r.percentage, stds.join(","));
        }
        s
    }
}
