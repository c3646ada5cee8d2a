//! Minimal reverse-mode autodiff over `Array2<f64>` for the anomaly scorer.
//!
//! A [`Tape`] records each operation as it runs; [`Tape::backward`] replays
//! the record in reverse, accumulating gradients. The op set is exactly what
//! the scorer's forward pass and loss stack need, nothing more. Loss ops
//! produce 1x1 nodes so a scalar objective is just `scale` + `add` over
//! them.

use ndarray::{concatenate, s, Array2, Axis};

pub type NodeId = usize;

const BCE_EPS: f64 = 1e-7;
const VAR_FLOOR: f64 = 1e-8;
const DIST_EPS: f64 = 1e-12;

enum Op {
    Input,
    /// C = A . B
    MatMul(NodeId, NodeId),
    /// C = A . B^T
    MatMulNt(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// (T x H) + broadcast (1 x H)
    AddRow(NodeId, NodeId),
    Scale(NodeId, f64),
    Sigmoid(NodeId),
    Tanh(NodeId),
    /// Row-wise softmax after adding the (0 / -inf) mask.
    SoftmaxRows(NodeId),
    ConcatCols(Vec<NodeId>),
    /// Row i comes from `b` when `take_b[i]`, else from `a`.
    SelectRows { a: NodeId, b: NodeId, take_b: Vec<bool> },
    /// Mean binary cross-entropy of a (T x 1) score column.
    BceMean { scores: NodeId, labels: Vec<f64> },
    /// Mean hinge triplet loss over rows of (T x H) anchors/positives/negatives.
    TripletMean { anchor: NodeId, positive: NodeId, negative: NodeId, margin: f64 },
    /// KL(empirical diagonal Gaussian of rows || standard Gaussian).
    KlStdNormal(NodeId),
}

struct Node {
    value: Array2<f64>,
    grad: Array2<f64>,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> NodeId {
        let grad = Array2::zeros(value.raw_dim());
        self.nodes.push(Node { value, grad, op });
        self.nodes.len() - 1
    }

    pub fn input(&mut self, value: Array2<f64>) -> NodeId {
        self.push(value, Op::Input)
    }

    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        &self.nodes[id].value
    }

    pub fn grad(&self, id: NodeId) -> &Array2<f64> {
        &self.nodes[id].grad
    }

    /// Scalar value of a 1x1 node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id].value[[0, 0]]
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.nodes[a].value.dot(&self.nodes[b].value);
        self.push(v, Op::MatMul(a, b))
    }

    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.nodes[a].value.dot(&self.nodes[b].value.t());
        self.push(v, Op::MatMulNt(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = &self.nodes[a].value + &self.nodes[b].value;
        self.push(v, Op::Add(a, b))
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let v = &self.nodes[a].value + &self.nodes[row].value;
        self.push(v, Op::AddRow(a, row))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let v = &self.nodes[a].value * factor;
        self.push(v, Op::Scale(a, factor))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.mapv(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.mapv(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    /// Row-wise softmax of `logits + mask`, where `mask` entries are 0 or
    /// -inf. Masked positions get probability exactly 0.
    pub fn softmax_rows(&mut self, a: NodeId, mask: Option<&Array2<f64>>) -> NodeId {
        let logits = match mask {
            Some(m) => &self.nodes[a].value + m,
            None => self.nodes[a].value.clone(),
        };
        let mut v = logits;
        for mut row in v.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|x| (x - max).exp());
            let sum: f64 = row.sum();
            row.mapv_inplace(|x| x / sum);
        }
        self.push(v, Op::SoftmaxRows(a))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        let views: Vec<_> = parts.iter().map(|&p| self.nodes[p].value.view()).collect();
        let v = concatenate(Axis(1), &views).expect("same row counts");
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn select_rows(&mut self, a: NodeId, b: NodeId, take_b: Vec<bool>) -> NodeId {
        let mut v = self.nodes[a].value.clone();
        for (i, &t) in take_b.iter().enumerate() {
            if t {
                v.row_mut(i).assign(&self.nodes[b].value.row(i));
            }
        }
        self.push(v, Op::SelectRows { a, b, take_b })
    }

    pub fn bce_mean(&mut self, scores: NodeId, labels: &[u8]) -> NodeId {
        let labels: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let s = &self.nodes[scores].value;
        let t = labels.len() as f64;
        let loss = s
            .column(0)
            .iter()
            .zip(&labels)
            .map(|(&si, &yi)| {
                let si = si.clamp(BCE_EPS, 1.0 - BCE_EPS);
                -(yi * si.ln() + (1.0 - yi) * (1.0 - si).ln())
            })
            .sum::<f64>()
            / t;
        self.push(Array2::from_elem((1, 1), loss), Op::BceMean { scores, labels })
    }

    pub fn triplet_mean(
        &mut self,
        anchor: NodeId,
        positive: NodeId,
        negative: NodeId,
        margin: f64,
    ) -> NodeId {
        let a = &self.nodes[anchor].value;
        let p = &self.nodes[positive].value;
        let n = &self.nodes[negative].value;
        let t = a.nrows() as f64;
        let loss = (0..a.nrows())
            .map(|i| {
                let dp = row_dist(a, p, i);
                let dn = row_dist(a, n, i);
                (dp - dn + margin).max(0.0)
            })
            .sum::<f64>()
            / t;
        self.push(
            Array2::from_elem((1, 1), loss),
            Op::TripletMean { anchor, positive, negative, margin },
        )
    }

    pub fn kl_std_normal(&mut self, x: NodeId) -> NodeId {
        let v = &self.nodes[x].value;
        let (mu, var) = column_moments(v);
        let kl: f64 = mu
            .iter()
            .zip(&var)
            .map(|(&m, &s2)| 0.5 * (m * m + s2 - s2.ln() - 1.0))
            .sum();
        self.push(Array2::from_elem((1, 1), kl), Op::KlStdNormal(x))
    }

    /// Backpropagates from `root` (a 1x1 node), filling `grad` on every node
    /// it depends on.
    pub fn backward(&mut self, root: NodeId) {
        for n in &mut self.nodes {
            n.grad.fill(0.0);
        }
        self.nodes[root].grad.fill(1.0);
        for id in (0..=root).rev() {
            let g = self.nodes[id].grad.clone();
            if g.iter().all(|&x| x == 0.0) {
                continue;
            }
            match &self.nodes[id].op {
                Op::Input => {}
                Op::MatMul(a, b) => {
                    let (a, b) = (*a, *b);
                    let da = g.dot(&self.nodes[b].value.t());
                    let db = self.nodes[a].value.t().dot(&g);
                    self.nodes[a].grad += &da;
                    self.nodes[b].grad += &db;
                }
                Op::MatMulNt(a, b) => {
                    let (a, b) = (*a, *b);
                    let da = g.dot(&self.nodes[b].value);
                    let db = g.t().dot(&self.nodes[a].value);
                    self.nodes[a].grad += &da;
                    self.nodes[b].grad += &db;
                }
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    self.nodes[a].grad += &g;
                    self.nodes[b].grad += &g;
                }
                Op::AddRow(a, row) => {
                    let (a, row) = (*a, *row);
                    self.nodes[a].grad += &g;
                    let summed = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    self.nodes[row].grad += &summed;
                }
                Op::Scale(a, f) => {
                    let (a, f) = (*a, *f);
                    self.nodes[a].grad += &(&g * f);
                }
                Op::Sigmoid(a) => {
                    let a = *a;
                    let y = &self.nodes[id].value;
                    let da = &g * &(y * &(1.0 - y));
                    self.nodes[a].grad += &da;
                }
                Op::Tanh(a) => {
                    let a = *a;
                    let y = &self.nodes[id].value;
                    let da = &g * &(1.0 - y * y);
                    self.nodes[a].grad += &da;
                }
                Op::SoftmaxRows(a) => {
                    let a = *a;
                    let y = self.nodes[id].value.clone();
                    let mut da = Array2::zeros(y.raw_dim());
                    for i in 0..y.nrows() {
                        let yi = y.row(i);
                        let gi = g.row(i);
                        let dot: f64 = yi.iter().zip(gi.iter()).map(|(&p, &q)| p * q).sum();
                        for j in 0..y.ncols() {
                            da[[i, j]] = yi[j] * (gi[j] - dot);
                        }
                    }
                    self.nodes[a].grad += &da;
                }
                Op::ConcatCols(parts) => {
                    let parts = parts.clone();
                    let mut offset = 0;
                    for p in parts {
                        let cols = self.nodes[p].value.ncols();
                        let slice = g.slice(s![.., offset..offset + cols]).to_owned();
                        self.nodes[p].grad += &slice;
                        offset += cols;
                    }
                }
                Op::SelectRows { a, b, take_b } => {
                    let (a, b, take_b) = (*a, *b, take_b.clone());
                    for (i, t) in take_b.iter().enumerate() {
                        let target = if *t { b } else { a };
                        let gi = g.row(i).to_owned();
                        let mut row = self.nodes[target].grad.row_mut(i);
                        row += &gi;
                    }
                }
                Op::BceMean { scores, labels } => {
                    let (scores, labels) = (*scores, labels.clone());
                    let gscalar = g[[0, 0]];
                    let t = labels.len() as f64;
                    let s = self.nodes[scores].value.clone();
                    let mut ds = Array2::zeros(s.raw_dim());
                    for (i, &yi) in labels.iter().enumerate() {
                        let si = s[[i, 0]];
                        // Clamped scores sit on a flat region of the loss.
                        if si <= BCE_EPS || si >= 1.0 - BCE_EPS {
                            continue;
                        }
                        ds[[i, 0]] = gscalar * (-yi / si + (1.0 - yi) / (1.0 - si)) / t;
                    }
                    self.nodes[scores].grad += &ds;
                }
                Op::TripletMean { anchor, positive, negative, margin } => {
                    let (anchor, positive, negative, margin) =
                        (*anchor, *positive, *negative, *margin);
                    let gscalar = g[[0, 0]];
                    let a = self.nodes[anchor].value.clone();
                    let p = self.nodes[positive].value.clone();
                    let n = self.nodes[negative].value.clone();
                    let t = a.nrows() as f64;
                    let mut da = Array2::zeros(a.raw_dim());
                    let mut dp = Array2::zeros(a.raw_dim());
                    let mut dn = Array2::zeros(a.raw_dim());
                    for i in 0..a.nrows() {
                        let dist_p = row_dist(&a, &p, i);
                        let dist_n = row_dist(&a, &n, i);
                        if dist_p - dist_n + margin <= 0.0 {
                            continue;
                        }
                        let w = gscalar / t;
                        if dist_p > DIST_EPS {
                            for j in 0..a.ncols() {
                                let d = (a[[i, j]] - p[[i, j]]) / dist_p;
                                da[[i, j]] += w * d;
                                dp[[i, j]] -= w * d;
                            }
                        }
                        if dist_n > DIST_EPS {
                            for j in 0..a.ncols() {
                                let d = (a[[i, j]] - n[[i, j]]) / dist_n;
                                da[[i, j]] -= w * d;
                                dn[[i, j]] += w * d;
                            }
                        }
                    }
                    self.nodes[anchor].grad += &da;
                    self.nodes[positive].grad += &dp;
                    self.nodes[negative].grad += &dn;
                }
                Op::KlStdNormal(x) => {
                    let x = *x;
                    let gscalar = g[[0, 0]];
                    let v = self.nodes[x].value.clone();
                    let t = v.nrows() as f64;
                    let (mu, var) = column_moments(&v);
                    let mut dx = Array2::zeros(v.raw_dim());
                    for j in 0..v.ncols() {
                        // Floored variance sits on a flat region.
                        let dvar = if var[j] <= VAR_FLOOR { 0.0 } else { 0.5 * (1.0 - 1.0 / var[j]) };
                        for i in 0..v.nrows() {
                            dx[[i, j]] = gscalar
                                * (mu[j] / t + dvar * 2.0 * (v[[i, j]] - mu[j]) / t);
                        }
                    }
                    self.nodes[x].grad += &dx;
                }
            }
        }
    }
}

fn row_dist(a: &Array2<f64>, b: &Array2<f64>, i: usize) -> f64 {
    a.row(i)
        .iter()
        .zip(b.row(i).iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Column means and population variances, variance floored at `VAR_FLOOR`.
fn column_moments(v: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let t = v.nrows() as f64;
    let mut mu = vec![0.0; v.ncols()];
    let mut var = vec![0.0; v.ncols()];
    for j in 0..v.ncols() {
        let col = v.column(j);
        let m = col.sum() / t;
        mu[j] = m;
        var[j] = (col.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / t).max(VAR_FLOOR);
    }
    (mu, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Central finite differences against the tape for a composite graph.
    #[test]
    fn backward_matches_finite_differences() {
        let x0 = array![[0.3, -0.2], [0.1, 0.4], [-0.5, 0.2]];
        let w0 = array![[0.2, -0.1], [0.3, 0.5]];
        let b0 = array![[0.05, -0.02]];

        let eval = |x: &Array2<f64>, w: &Array2<f64>, b: &Array2<f64>| -> (f64, Option<Tape>, [NodeId; 3]) {
            let mut tape = Tape::new();
            let xi = tape.input(x.clone());
            let wi = tape.input(w.clone());
            let bi = tape.input(b.clone());
            let h = tape.matmul(xi, wi);
            let h = tape.add_row(h, bi);
            let h = tape.tanh(h);
            let att = tape.matmul_nt(h, h);
            let att = tape.scale(att, 0.7);
            let att = tape.softmax_rows(att, None);
            let mixed = tape.matmul(att, h);
            let z = tape.concat_cols(&[h, mixed]);
            let sel = tape.select_rows(z, z, vec![false, true, false]);
            let proj = tape.input(Array2::from_shape_fn((4, 1), |(i, _)| 0.1 * (i as f64 + 1.0)));
            let logits = tape.matmul(sel, proj);
            let s = tape.sigmoid(logits);
            let bce = tape.bce_mean(s, &[1, 0, 1]);
            let kl = tape.kl_std_normal(h);
            let neg = tape.scale(mixed, -0.5);
            let trip = tape.triplet_mean(h, mixed, neg, 0.5);
            let kl_s = tape.scale(kl, 0.3);
            let trip_s = tape.scale(trip, 0.6);
            let partial = tape.add(bce, kl_s);
            let total = tape.add(partial, trip_s);
            (tape.scalar(total), Some(tape), [xi, wi, bi])
        };

        let (_, tape, ids) = eval(&x0, &w0, &b0);
        let mut tape = tape.unwrap();
        let root = tape.nodes.len() - 1;
        tape.backward(root);

        let h = 1e-6;
        let inputs = [&x0, &w0, &b0];
        for (slot, &base) in inputs.iter().enumerate() {
            for i in 0..base.nrows() {
                for j in 0..base.ncols() {
                    let mut plus = [x0.clone(), w0.clone(), b0.clone()];
                    plus[slot][[i, j]] += h;
                    let mut minus = [x0.clone(), w0.clone(), b0.clone()];
                    minus[slot][[i, j]] -= h;
                    let (fp, _, _) = eval(&plus[0], &plus[1], &plus[2]);
                    let (fm, _, _) = eval(&minus[0], &minus[1], &minus[2]);
                    let numeric = (fp - fm) / (2.0 * h);
                    let analytic = tape.grad(ids[slot])[[i, j]];
                    let denom = analytic.abs().max(numeric.abs()).max(1e-6);
                    assert!(
                        (analytic - numeric).abs() / denom < 1e-5,
                        "slot {slot} [{i},{j}]: analytic {analytic} vs numeric {numeric}"
                    );
                }
            }
        }
    }

    #[test]
    fn masked_softmax_zeroes_masked_columns() {
        let mut tape = Tape::new();
        let x = tape.input(array![[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]);
        let mask = array![
            [0.0, f64::NEG_INFINITY, 0.0],
            [f64::NEG_INFINITY, 0.0, 0.0]
        ];
        let y = tape.softmax_rows(x, Some(&mask));
        let v = tape.value(y);
        assert_eq!(v[[0, 1]], 0.0);
        assert_eq!(v[[1, 0]], 0.0);
        for i in 0..2 {
            assert!((v.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }
}
