//! Matrix-level reverse-mode differentiation.
//!
//! A [`Graph`] records each operation as it is evaluated; [`Graph::backward`]
//! then walks the tape in reverse. Parameter nodes borrow their matrices from
//! a [`ParamSet`] so a forward pass does not copy weights.

use std::borrow::Cow;

use ndarray::{concatenate, s, Array2, Axis};

use super::params::ParamSet;

pub type Mat = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Broadcast(Var),
    Scale(Var, f64),
    Tanh(Var),
    ShiftRows(Var, isize),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Transpose(Var),
    SoftmaxRows(Var),
    Mse(Var, Mat),
}

struct Node<'p> {
    value: Cow<'p, Mat>,
    op: Op,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Graph<'p> {
    nodes: Vec<Node<'p>>,
}

impl<'p> Graph<'p> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    fn push(&mut self, value: Cow<'p, Mat>, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    pub fn into_value(mut self, v: Var) -> Mat {
        std::mem::replace(&mut self.nodes[v.0].value, Cow::Owned(Mat::zeros((0, 0)))).into_owned()
    }

    /// A constant: no gradient flows into it.
    pub fn input(&mut self, m: Mat) -> Var {
        self.push(Cow::Owned(m), Op::Input, false)
    }

    pub fn input_ref(&mut self, m: &'p Mat) -> Var {
        self.push(Cow::Borrowed(m), Op::Input, false)
    }

    pub fn param(&mut self, params: &'p ParamSet, block: usize) -> Var {
        self.push(Cow::Borrowed(params.block(block)), Op::Param(block), true)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        let ng = self.ng(a) || self.ng(b);
        self.push(Cow::Owned(v), Op::MatMul(a, b), ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        let ng = self.ng(a) || self.ng(b);
        self.push(Cow::Owned(v), Op::Add(a, b), ng)
    }

    /// `a` (n×m) plus the 1×m row `row` added to every row.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1, "add_row expects a single row");
        let v = self.value(a) + self.value(row);
        let ng = self.ng(a) || self.ng(row);
        self.push(Cow::Owned(v), Op::AddRow(a, row), ng)
    }

    /// Repeats a 1×m row `n` times.
    pub fn broadcast(&mut self, row: Var, n: usize) -> Var {
        let r = self.value(row);
        assert_eq!(r.nrows(), 1, "broadcast expects a single row");
        let v = r.broadcast((n, r.ncols())).unwrap().to_owned();
        let ng = self.ng(row);
        self.push(Cow::Owned(v), Op::Broadcast(row), ng)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        let ng = self.ng(a);
        self.push(Cow::Owned(v), Op::Scale(a, c), ng)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::tanh);
        let ng = self.ng(a);
        self.push(Cow::Owned(v), Op::Tanh(a), ng)
    }

    /// `out[i] = a[i − k]`, zero where `i − k` falls outside the rows.
    pub fn shift_rows(&mut self, a: Var, k: isize) -> Var {
        let v = shift(self.value(a), k);
        let ng = self.ng(a);
        self.push(Cow::Owned(v), Op::ShiftRows(a, k), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let v = concatenate(Axis(1), &views).expect("concat_cols: row counts differ");
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(Cow::Owned(v), Op::ConcatCols(parts.to_vec()), ng)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let v = concatenate(Axis(0), &views).expect("concat_rows: column counts differ");
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(Cow::Owned(v), Op::ConcatRows(parts.to_vec()), ng)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).t().to_owned();
        let ng = self.ng(a);
        self.push(Cow::Owned(v), Op::Transpose(a), ng)
    }

    /// Row-wise softmax; `-inf` entries receive exactly zero weight.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let v = softmax_rows(self.value(a));
        let ng = self.ng(a);
        self.push(Cow::Owned(v), Op::SoftmaxRows(a), ng)
    }

    /// Mean of squared differences against a constant target (1×1 result).
    pub fn mse(&mut self, a: Var, target: Mat) -> Var {
        let av = self.value(a);
        assert_eq!(av.dim(), target.dim(), "mse: shape mismatch");
        let n = av.len().max(1) as f64;
        let loss = av.iter().zip(target.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n;
        let ng = self.ng(a);
        self.push(Cow::Owned(Mat::from_elem((1, 1), loss)), Op::Mse(a, target), ng)
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[[0, 0]]
    }

    /// Gradients of the scalar `loss` with respect to every parameter block
    /// of `params`, in block order.
    pub fn backward(&self, loss: Var, params: &ParamSet) -> Vec<Mat> {
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Mat::ones(self.value(loss).dim()));
        let mut out: Vec<Mat> = params.blocks().iter().map(|b| Mat::zeros(b.dim())).collect();

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let acc = |v: Var, d: Mat, grads: &mut Vec<Option<Mat>>| {
                if !self.ng(v) {
                    return;
                }
                match &mut grads[v.0] {
                    Some(e) => *e += &d,
                    slot => *slot = Some(d),
                }
            };
            match &node.op {
                Op::Input => {}
                Op::Param(b) => out[*b] += &g,
                Op::MatMul(a, b) => {
                    if self.ng(*a) {
                        acc(*a, g.dot(&self.value(*b).t()), &mut grads);
                    }
                    if self.ng(*b) {
                        acc(*b, self.value(*a).t().dot(&g), &mut grads);
                    }
                }
                Op::Add(a, b) => {
                    acc(*b, g.clone(), &mut grads);
                    acc(*a, g, &mut grads);
                }
                Op::AddRow(a, r) => {
                    acc(*r, g.sum_axis(Axis(0)).insert_axis(Axis(0)), &mut grads);
                    acc(*a, g, &mut grads);
                }
                Op::Broadcast(r) => acc(*r, g.sum_axis(Axis(0)).insert_axis(Axis(0)), &mut grads),
                Op::Scale(a, c) => acc(*a, g * *c, &mut grads),
                Op::Tanh(a) => {
                    let y = &node.value;
                    let d = ndarray::Zip::from(&g).and(y.as_ref()).map_collect(|g, y| g * (1.0 - y * y));
                    acc(*a, d, &mut grads);
                }
                Op::ShiftRows(a, k) => acc(*a, shift(&g, -k), &mut grads),
                Op::ConcatCols(parts) => {
                    let mut c = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        acc(*p, g.slice(s![.., c..c + w]).to_owned(), &mut grads);
                        c += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut r = 0;
                    for p in parts {
                        let h = self.value(*p).nrows();
                        acc(*p, g.slice(s![r..r + h, ..]).to_owned(), &mut grads);
                        r += h;
                    }
                }
                Op::Transpose(a) => acc(*a, g.t().to_owned(), &mut grads),
                Op::SoftmaxRows(a) => {
                    let y = node.value.as_ref();
                    let mut d = Mat::zeros(y.dim());
                    for ((mut drow, yrow), grow) in d.rows_mut().into_iter().zip(y.rows()).zip(g.rows()) {
                        let dot: f64 = yrow.iter().zip(grow.iter()).map(|(a, b)| a * b).sum();
                        for ((dv, &yv), &gv) in drow.iter_mut().zip(yrow.iter()).zip(grow.iter()) {
                            *dv = yv * (gv - dot);
                        }
                    }
                    acc(*a, d, &mut grads);
                }
                Op::Mse(a, target) => {
                    let av = self.value(*a);
                    let scale = 2.0 * g[[0, 0]] / av.len().max(1) as f64;
                    acc(*a, (av - target) * scale, &mut grads);
                }
            }
        }
        out
    }
}

fn shift(a: &Mat, k: isize) -> Mat {
    let n = a.nrows() as isize;
    let mut out = Mat::zeros(a.dim());
    if k.unsigned_abs() as isize >= n {
        return out;
    }
    if k >= 0 {
        out.slice_mut(s![k.., ..]).assign(&a.slice(s![..n - k, ..]));
    } else {
        out.slice_mut(s![..n + k, ..]).assign(&a.slice(s![-k.., ..]));
    }
    out
}

pub fn softmax_rows(a: &Mat) -> Mat {
    let mut out = a.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            row.fill(0.0);
            continue;
        }
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

#[cfg(test)]
mod tests {
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::params::ParamSet;

    /// Loss exercising every op; gradients are compared against central differences.
    fn loss_of(p: &ParamSet, x: &Mat, target: &Mat) -> (f64, Vec<Mat>) {
        let mut g = Graph::new();
        let xi = g.input(x.clone());
        let w = g.param(p, 0);
        let b = g.param(p, 1);
        let h = g.matmul(xi, w);
        let h = g.add_row(h, b);
        let h = g.tanh(h);
        let sh = g.shift_rows(h, 1);
        let sh2 = g.shift_rows(h, -2);
        let both = g.concat_cols(&[sh, sh2]);
        let prefix = g.param(p, 2);
        let keys = g.concat_rows(&[prefix, h]);
        let kt = g.transpose(keys);
        let scores = g.matmul(h, kt);
        let scores = g.scale(scores, 0.7);
        let att = g.softmax_rows(scores);
        let mixed = g.matmul(att, keys);
        let bias = g.broadcast(b, x.nrows());
        let y = g.add(mixed, bias);
        let y = g.concat_cols(&[y, both]);
        let loss = g.mse(y, target.clone());
        (g.scalar(loss), g.backward(loss, p))
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = ParamSet::new();
        p.add_uniform("w", 4, 3, 0.8, &mut rng);
        p.add_uniform("b", 1, 3, 0.5, &mut rng);
        p.add_uniform("prefix", 2, 3, 0.5, &mut rng);
        let x = Mat::from_shape_fn((5, 4), |(i, j)| ((i * 7 + j * 3) as f64 * 0.37).sin());
        let target = Mat::from_shape_fn((5, 9), |(i, j)| ((i + 2 * j) as f64 * 0.21).cos());
        let (_, grads) = loss_of(&p, &x, &target);
        let flat: Vec<f64> = grads.iter().flat_map(|g| g.iter().copied()).collect();
        let h = 1e-6;
        for k in 0..p.len() {
            let orig = p.get(k);
            p.set(k, orig + h);
            let up = loss_of(&p, &x, &target).0;
            p.set(k, orig - h);
            let down = loss_of(&p, &x, &target).0;
            p.set(k, orig);
            let fd = (up - down) / (2.0 * h);
            let err = (fd - flat[k]).abs() / fd.abs().max(flat[k].abs()).max(1e-8);
            assert!(err < 1e-6, "coord {k}: analytic {} vs fd {fd}", flat[k]);
        }
    }

    #[test]
    fn softmax_masks_negative_infinity() {
        let m = array![[0.0, f64::NEG_INFINITY, 0.0], [1.0, 2.0, 3.0]];
        let s = softmax_rows(&m);
        assert_eq!(s[[0, 1]], 0.0);
        assert!((s[[0, 0]] - 0.5).abs() < 1e-15);
        assert!((s.row(1).sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shift_pads_with_zeros() {
        let a = array![[1.0], [2.0], [3.0]];
        assert_eq!(shift(&a, 1), array![[0.0], [1.0], [2.0]]);
        assert_eq!(shift(&a, -1), array![[2.0], [3.0], [0.0]]);
        assert_eq!(shift(&a, 5), array![[0.0], [0.0], [0.0]]);
    }
}
