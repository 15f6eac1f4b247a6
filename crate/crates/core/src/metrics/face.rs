use crate::face::FaceSequence;
use crate::{Error, Result};

fn check(gt: &FaceSequence, pred: &FaceSequence, mask: &[usize], what: &str) -> Result<()> {
    if gt.frames.dim() != pred.frames.dim() {
        return Err(Error::shape(format!("face shapes {:?} and {:?}", gt.frames.dim(), pred.frames.dim())));
    }
    if mask.is_empty() {
        return Err(Error::invalid(format!("{what} mask is empty")));
    }
    if let Some(&v) = mask.iter().find(|&&v| v >= gt.vertices()) {
        return Err(Error::invalid(format!("{what} mask index {v} out of range for {} vertices", gt.vertices())));
    }
    Ok(())
}

/// Mean over frames of the largest lip-vertex error; squared L2 unless
/// `squared` is false.
pub fn lve(gt: &FaceSequence, pred: &FaceSequence, lip: &[usize], squared: bool) -> Result<f64> {
    check(gt, pred, lip, "lip")?;
    if gt.is_empty() {
        return Err(Error::invalid("face sequences have no frames"));
    }
    let mut total = 0.0;
    for t in 0..gt.len() {
        let worst = lip
            .iter()
            .map(|&v| (0..3).map(|k| (gt.frames[[t, v, k]] - pred.frames[[t, v, k]]).powi(2)).sum::<f64>())
            .fold(0.0, f64::max);
        total += if squared { worst } else { worst.sqrt() };
    }
    Ok(total / gt.len() as f64)
}

/// Population standard deviation over time of each vertex's displacement
/// norm from its template.
pub fn dynamics(face: &FaceSequence, vertices: &[usize]) -> Vec<f64> {
    let norms = face.displacement_norms();
    let n = face.len() as f64;
    vertices
        .iter()
        .map(|&v| {
            let col = norms.column(v);
            let mean = col.sum() / n;
            (col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
        })
        .collect()
}

/// Signed mean over upper-face vertices of `dyn(gt) − dyn(pred)`.
pub fn fdd(gt: &FaceSequence, pred: &FaceSequence, upper: &[usize]) -> Result<f64> {
    check(gt, pred, upper, "upper-face")?;
    if gt.len() < 2 {
        return Err(Error::invalid("FDD needs at least 2 frames"));
    }
    let (a, b) = (dynamics(gt, upper), dynamics(pred, upper));
    Ok(a.iter().zip(&b).map(|(x, y)| x - y).sum::<f64>() / upper.len() as f64)
}
