//! Attention whose keys and values are prefixed with three condition slots
//! (style, facing, step) and whose scores carry an additive bias.

use crate::nn::{softmax_rows, Graph, Mat, Var};
use crate::{Error, Result};

/// Number of condition slots ahead of the temporal keys.
pub const CONDITION_SLOTS: usize = 3;

pub const DEFAULT_TAU: f64 = 30.0;

/// `T × (3 + T_k)` bias: 0 on the condition slots, `−|i−j|/τ` on temporal slot `j`.
pub fn attention_bias(t: usize, t_k: usize, tau: f64) -> Mat {
    Mat::from_shape_fn((t, CONDITION_SLOTS + t_k), |(i, j)| {
        if j < CONDITION_SLOTS {
            0.0
        } else {
            -((i as f64) - (j - CONDITION_SLOTS) as f64).abs() / tau
        }
    })
}

/// Attention weights and output for plain matrices.
///
/// `q`: T × d, `k`/`v`: T_k × d, each condition: 1 × d, `bias`: T × (3 + T_k).
/// The condition embeddings act as both key and value of their slot.
pub fn biased_conditional_attention(
    q: &Mat,
    k: &Mat,
    v: &Mat,
    e_s: &Mat,
    e_p: &Mat,
    e_n: &Mat,
    bias: &Mat,
) -> Result<(Mat, Mat)> {
    check_shapes(q.dim(), k.dim(), v.dim(), [e_s.dim(), e_p.dim(), e_n.dim()], bias.dim())?;
    let views = [e_s.view(), e_p.view(), e_n.view(), k.view()];
    let keys = ndarray::concatenate(ndarray::Axis(0), &views).unwrap();
    let vals = ndarray::concatenate(ndarray::Axis(0), &[e_s.view(), e_p.view(), e_n.view(), v.view()]).unwrap();
    let w = softmax_rows(&(q.dot(&keys.t()) + bias));
    let out = w.dot(&vals);
    Ok((w, out))
}

/// The same computation recorded on a graph; returns `(weights, output)`.
#[allow(clippy::too_many_arguments)]
pub fn attend<'p>(g: &mut Graph<'p>, q: Var, k: Var, v: Var, e_s: Var, e_p: Var, e_n: Var, bias: Var) -> Result<(Var, Var)> {
    let conds = [g.value(e_s).dim(), g.value(e_p).dim(), g.value(e_n).dim()];
    check_shapes(g.value(q).dim(), g.value(k).dim(), g.value(v).dim(), conds, g.value(bias).dim())?;
    let keys = g.concat_rows(&[e_s, e_p, e_n, k]);
    let vals = g.concat_rows(&[e_s, e_p, e_n, v]);
    let kt = g.transpose(keys);
    let scores = g.matmul(q, kt);
    let scores = g.add(scores, bias);
    let w = g.softmax_rows(scores);
    let out = g.matmul(w, vals);
    Ok((w, out))
}

fn check_shapes(
    q: (usize, usize),
    k: (usize, usize),
    v: (usize, usize),
    conds: [(usize, usize); 3],
    bias: (usize, usize),
) -> Result<()> {
    let d = q.1;
    if k.1 != d || v.1 != d {
        return Err(Error::shape(format!("key/value widths {}/{} differ from query width {d}", k.1, v.1)));
    }
    if k.0 != v.0 {
        return Err(Error::shape(format!("{} keys but {} values", k.0, v.0)));
    }
    for (name, c) in ["style", "facing", "step"].iter().zip(conds) {
        if c != (1, d) {
            return Err(Error::shape(format!("{name} embedding is {c:?}, expected (1, {d})")));
        }
    }
    if bias != (q.0, CONDITION_SLOTS + k.0) {
        return Err(Error::shape(format!("bias is {bias:?}, expected ({}, {})", q.0, CONDITION_SLOTS + k.0)));
    }
    Ok(())
}
