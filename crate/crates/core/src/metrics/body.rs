use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;

use super::frechet::frechet_of_features;
use crate::motion::rotation::rot_y;
use crate::motion::{root_yaws, MotionSequence};
use crate::par::{self, Execution};
use crate::{Error, Result};

/// Joints treated as feet by [`foot_slide`] unless others are named.
pub const DEFAULT_FOOT_JOINTS: [&str; 4] = ["LeftFoot", "RightFoot", "LeftToeBase", "RightToeBase"];

/// Contact band above the 5th-percentile foot height (meters).
pub const CONTACT_MARGIN: f64 = 0.03;

fn check_pair(p: &[MotionSequence; 2]) -> Result<()> {
    if p[0].len() != p[1].len() {
        return Err(Error::shape(format!("persons have {} and {} frames", p[0].len(), p[1].len())));
    }
    if p[0].skeleton != p[1].skeleton {
        return Err(Error::ManifestMismatch("the two persons use different skeletons".into()));
    }
    Ok(())
}

/// Per frame: both persons' joint positions after moving person 1's root to
/// the ground-plane origin and turning the pair so person 1 faces +x.
pub fn geometric_features(pair: &[MotionSequence; 2]) -> Result<Vec<Vec<f64>>> {
    check_pair(pair)?;
    let yaws = root_yaws(&pair[0]);
    let (pa, pb) = (pair[0].positions(), pair[1].positions());
    Ok((0..pair[0].len())
        .map(|t| {
            let root = pair[0].frames[t].root_translation;
            let shift = Vector3::new(root.x, 0.0, root.z);
            let r = rot_y(FRAC_PI_2 - yaws[t]);
            pa[t].iter().chain(&pb[t]).flat_map(|p| (r * (p - shift)).iter().copied().collect::<Vec<_>>()).collect()
        })
        .collect())
}

fn pooled<F>(set: &[[MotionSequence; 2]], exec: Execution, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[MotionSequence; 2]) -> Result<Vec<Vec<f64>>> + Sync + Send,
{
    Ok(par::try_map(exec, set, f)?.into_iter().flatten().collect())
}

/// Fréchet distance between per-frame geometric features.
pub fn fid_g(gt: &[[MotionSequence; 2]], gen: &[[MotionSequence; 2]], exec: Execution) -> Result<f64> {
    frechet_of_features(&pooled(gt, exec, geometric_features)?, &pooled(gen, exec, geometric_features)?)
}

/// Per-joint mean speed, speed standard deviation (population) and mean
/// acceleration magnitude, in m/s and m/s².
pub fn kinetic_descriptor(m: &MotionSequence) -> Result<Vec<f64>> {
    if m.len() < 2 {
        return Err(Error::invalid("kinetic descriptor needs at least 2 frames"));
    }
    let pos = m.positions();
    let dt = m.frame_time;
    let j = m.skeleton.len();
    let mut out = Vec::with_capacity(3 * j);
    for k in 0..j {
        let vel: Vec<Vector3<f64>> = pos.windows(2).map(|w| (w[1][k] - w[0][k]) / dt).collect();
        let speeds: Vec<f64> = vel.iter().map(|v| v.norm()).collect();
        let n = speeds.len() as f64;
        let mean = speeds.iter().sum::<f64>() / n;
        let std = (speeds.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n).sqrt();
        let acc: Vec<f64> = vel.windows(2).map(|w| ((w[1] - w[0]) / dt).norm()).collect();
        let acc_mean = if acc.is_empty() { 0.0 } else { acc.iter().sum::<f64>() / acc.len() as f64 };
        out.extend([mean, std, acc_mean]);
    }
    Ok(out)
}

/// Fréchet distance between kinetic descriptors of single-person sequences.
pub fn fid_k(gt: &[MotionSequence], gen: &[MotionSequence], exec: Execution) -> Result<f64> {
    let a = par::try_map(exec, gt, kinetic_descriptor)?;
    let b = par::try_map(exec, gen, kinetic_descriptor)?;
    frechet_of_features(&a, &b)
}

/// Per frame: distances from every person-1 joint to every person-2 joint.
pub fn distance_maps(pair: &[MotionSequence; 2]) -> Result<Vec<Vec<f64>>> {
    check_pair(pair)?;
    let (pa, pb) = (pair[0].positions(), pair[1].positions());
    Ok(pa.iter().zip(&pb).map(|(a, b)| a.iter().flat_map(|p| b.iter().map(move |q| (p - q).norm())).collect()).collect())
}

pub fn fid_r(gt: &[[MotionSequence; 2]], gen: &[[MotionSequence; 2]], exec: Execution) -> Result<f64> {
    frechet_of_features(&pooled(gt, exec, distance_maps)?, &pooled(gen, exec, distance_maps)?)
}

/// All joint positions of a window, flattened frame by frame.
pub fn window_feature(pair: &[MotionSequence; 2]) -> Result<Vec<f64>> {
    check_pair(pair)?;
    let (pa, pb) = (pair[0].positions(), pair[1].positions());
    Ok(pa.iter().zip(&pb).flat_map(|(a, b)| a.iter().chain(b).flat_map(|p| p.iter().copied())).collect())
}

/// Mean L2 distance over unordered pairs of feature vectors.
pub fn diversity(samples: &[Vec<f64>], exec: Execution) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid(format!("diversity needs at least 2 samples, got {n}")));
    }
    if samples.iter().any(|s| s.len() != samples[0].len()) {
        return Err(Error::shape("samples differ in feature length"));
    }
    let rows = par::map_range(exec, n, |i| {
        (i + 1..n)
            .map(|j| samples[i].iter().zip(&samples[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .sum::<f64>()
    });
    Ok(rows.iter().sum::<f64>() / (n * (n - 1) / 2) as f64)
}

/// Linear-interpolated percentile of unsorted data, `q` in [0, 1].
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Mean horizontal displacement of foot joints over frame pairs in which
/// the foot stays within the contact band in both frames; 0 when the feet
/// never touch down.
pub fn foot_slide(m: &MotionSequence, feet: &[&str]) -> Result<f64> {
    let idx: Vec<usize> = feet.iter().map(|f| m.skeleton.require_joint(f)).collect::<Result<_>>()?;
    if idx.is_empty() {
        return Err(Error::invalid("no foot joints designated"));
    }
    if m.len() < 2 {
        return Ok(0.0);
    }
    let pos = m.positions();
    let heights: Vec<f64> = pos.iter().flat_map(|f| idx.iter().map(move |&k| f[k].y)).collect();
    let limit = percentile(&heights, 0.05) + CONTACT_MARGIN;
    let (mut total, mut count) = (0.0, 0usize);
    for w in pos.windows(2) {
        for &k in &idx {
            if w[0][k].y <= limit && w[1][k].y <= limit {
                let d = w[1][k] - w[0][k];
                total += (d.x * d.x + d.z * d.z).sqrt();
                count += 1;
            }
        }
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(percentile(&[0.0, 10.0], 0.05), 0.5);
        assert_eq!(percentile(&[4.0], 0.05), 4.0);
    }

    #[test]
    fn diversity_of_single_pair() {
        let d = diversity(&[vec![0.0, 0.0], vec![3.0, 4.0]], Execution::Sequential).unwrap();
        assert_eq!(d, 5.0);
        assert!(diversity(&[vec![1.0]], Execution::Sequential).is_err());
    }
}
