use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::motion::MotionSequence;
use crate::{Error, Result};

/// Column order of the one-hot block is SIT, WALK, STAND.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionLabel {
    Sit,
    Walk,
    Stand,
}

impl ActionLabel {
    pub fn index(self) -> usize {
        match self {
            ActionLabel::Sit => 0,
            ActionLabel::Walk => 1,
            ActionLabel::Stand => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActionLabel::Sit => "SIT",
            ActionLabel::Walk => "WALK",
            ActionLabel::Stand => "STAND",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SIT" => Some(ActionLabel::Sit),
            "WALK" => Some(ActionLabel::Walk),
            "STAND" => Some(ActionLabel::Stand),
            _ => None,
        }
    }
}

pub fn encode_action_labels(labels: &[ActionLabel]) -> Array2<f64> {
    let mut out = Array2::zeros((labels.len(), 3));
    for (i, l) in labels.iter().enumerate() {
        out[[i, l.index()]] = 1.0;
    }
    out
}

/// One label per non-empty line.
pub fn parse_action_sidecar(text: &str) -> Result<Vec<ActionLabel>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            ActionLabel::parse(l).ok_or_else(|| Error::format(format!("action line {}: unknown label {:?}", i + 1, l.trim())))
        })
        .collect()
}

pub fn write_action_sidecar(labels: &[ActionLabel]) -> String {
    labels.iter().map(|l| format!("{}\n", l.as_str())).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct AutoLabelConfig {
    /// SIT when the pelvis is below this fraction of the standing pelvis height.
    pub sit_fraction: f64,
    /// WALK when horizontal root speed exceeds this (m/s).
    pub walk_speed: f64,
}

impl Default for AutoLabelConfig {
    fn default() -> Self {
        AutoLabelConfig { sit_fraction: 0.6, walk_speed: 0.2 }
    }
}

/// Heuristic labels for unlabeled motion. Pelvis height is measured from the
/// floor, taken as the median over frames of the lowest joint height.
pub fn auto_label(m: &MotionSequence, cfg: &AutoLabelConfig) -> Vec<ActionLabel> {
    if m.frames.is_empty() {
        return Vec::new();
    }
    let positions = m.positions();
    let mut lowest: Vec<f64> =
        positions.iter().map(|f| f.iter().map(|p| p.y).fold(f64::INFINITY, f64::min)).collect();
    lowest.sort_by(f64::total_cmp);
    let floor = lowest[lowest.len() / 2];
    let standing = m.skeleton.standing_root_height();
    let n = m.frames.len();
    (0..n)
        .map(|t| {
            let root = m.frames[t].root_translation;
            if root.y - floor < cfg.sit_fraction * standing {
                return ActionLabel::Sit;
            }
            let (a, b) = if n == 1 { (0, 0) } else if t == 0 { (0, 1) } else { (t - 1, t) };
            let d = m.frames[b].root_translation - m.frames[a].root_translation;
            let speed = (d.x * d.x + d.z * d.z).sqrt() / m.frame_time;
            if speed > cfg.walk_speed {
                ActionLabel::Walk
            } else {
                ActionLabel::Stand
            }
        })
        .collect()
}
