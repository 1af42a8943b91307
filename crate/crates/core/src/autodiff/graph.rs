//! Tape-based reverse-mode differentiation over dense matrices.
//!
//! Nodes are appended in evaluation order, so a reverse sweep over the tape
//! visits every node after all of its consumers.

use super::tensor::{matmul, matmul_a_bt, matmul_at_b, Tensor};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sqrt(Var),
    /// Mean softmax cross-entropy; keeps the softmax for the backward pass.
    SoftmaxCe {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
    /// Contiguous window of a row vector, reshaped.
    Window { src: Var, offset: usize },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of one root with respect to every node on the tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient with respect to `v`, or `None` when the root does not depend on it.
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Gradient shaped like `like`, zero-filled when the root does not depend on `v`.
    pub fn tensor(&self, v: Var, like: &Tensor) -> Tensor {
        match self.get(v) {
            Some(g) => Tensor::new(like.shape().to_vec(), g.to_vec()).expect("gradient shape"),
            None => like.zeros_like(),
        }
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, len: usize, contribution: impl FnOnce(&mut [f64])) {
    let buf = slot.get_or_insert_with(|| vec![0.0; len]);
    contribution(buf);
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        let requires_grad = match &op {
            Op::Leaf => true,
            Op::MatMul(a, b)
            | Op::AddRow(a, b)
            | Op::Add(a, b)
            | Op::Mul(a, b)
            | Op::Div(a, b) => self.requires(*a) || self.requires(*b),
            Op::Scale(a, _) | Op::Relu(a) | Op::Sqrt(a) => self.requires(*a),
            Op::SoftmaxCe { logits, .. } => self.requires(*logits),
            Op::Window { src, .. } => self.requires(*src),
        };
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn requires(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let t = self.value(v);
        debug_assert_eq!(t.len(), 1);
        t.values()[0]
    }

    /// A differentiable leaf (a parameter).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// A leaf no gradient is needed for (data). Nothing is propagated into it.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, x: f64) -> Var {
        self.leaf(Tensor::zeros(&[1, 1]).with_value(x))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k, n) = (av.rows(), av.cols(), bv.cols());
        assert_eq!(k, bv.rows(), "matmul inner dimensions");
        let out = matmul(av.values(), bv.values(), m, k, n);
        self.push(Tensor::matrix(m, n, out).expect("matmul shape"), Op::MatMul(a, b))
    }

    /// Adds a row vector to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (av, rv) = (self.value(a), self.value(row));
        let n = av.cols();
        assert_eq!(rv.len(), n, "broadcast row length");
        let mut out = av.values().to_vec();
        for chunk in out.chunks_mut(n) {
            for (o, r) in chunk.iter_mut().zip(rv.values()) {
                *o += r;
            }
        }
        let shape = vec![av.rows(), n];
        self.push(Tensor::new(shape, out).expect("add_row shape"), Op::AddRow(a, row))
    }

    fn elementwise(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape(), "elementwise shapes");
        let out = av.values().iter().zip(bv.values()).map(|(x, y)| f(*x, *y)).collect();
        let t = Tensor::new(av.shape().to_vec(), out).expect("elementwise shape");
        self.push(t, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.elementwise(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.elementwise(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.elementwise(a, b, |x, y| x / y, Op::Div(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let t = self.value(a).map(|x| x * c);
        self.push(t, Op::Scale(a, c))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let t = self.value(a).map(|x| x.max(0.0));
        self.push(t, Op::Relu(a))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let t = self.value(a).map(f64::sqrt);
        self.push(t, Op::Sqrt(a))
    }

    /// Mean cross-entropy of row-wise softmax against integer labels, as a 1×1 node.
    pub fn softmax_ce(&mut self, logits: Var, labels: &[usize]) -> Var {
        let lv = self.value(logits);
        let (rows, k) = (lv.rows(), lv.cols());
        assert_eq!(rows, labels.len(), "one label per row");
        let mut probs = vec![0.0; rows * k];
        let mut total = 0.0;
        for (r, &label) in labels.iter().enumerate() {
            assert!(label < k, "label {label} out of range for {k} classes");
            let row = lv.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (p, &z) in probs[r * k..(r + 1) * k].iter_mut().zip(row) {
                *p = (z - max).exp();
                sum += *p;
            }
            for p in &mut probs[r * k..(r + 1) * k] {
                *p /= sum;
            }
            total += sum.ln() + max - row[label];
        }
        let loss = total / rows as f64;
        let op = Op::SoftmaxCe {
            logits,
            labels: labels.to_vec(),
            probs,
        };
        self.push(Tensor::zeros(&[1, 1]).with_value(loss), op)
    }

    /// Reads `shape` worth of values starting at `offset` of a flat source node.
    pub fn window(&mut self, src: Var, offset: usize, shape: &[usize]) -> Var {
        let n: usize = shape.iter().product();
        let sv = self.value(src);
        assert!(offset + n <= sv.len(), "window out of bounds");
        let t = Tensor::new(shape.to_vec(), sv.values()[offset..offset + n].to_vec())
            .expect("window shape");
        self.push(t, Op::Window { src, offset })
    }

    /// Reverse sweep from a 1×1 `root`.
    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.value(root).len(), 1, "backward needs a scalar root");
        let mut grads: Vec<Option<Vec<f64>>> = Vec::with_capacity(root.0 + 1);
        grads.resize_with(root.0 + 1, || None);
        grads[root.0] = Some(vec![1.0]);

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                grads[i] = Some(g);
                continue;
            }
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                    if self.requires(*a) {
                        let da = matmul_a_bt(&g, bv.values(), m, k, n);
                        accumulate(&mut grads[a.0], m * k, |buf| add_into(buf, &da));
                    }
                    if self.requires(*b) {
                        let db = matmul_at_b(av.values(), &g, m, k, n);
                        accumulate(&mut grads[b.0], k * n, |buf| add_into(buf, &db));
                    }
                }
                Op::AddRow(a, row) => {
                    let n = node.value.cols();
                    accumulate(&mut grads[a.0], g.len(), |buf| add_into(buf, &g));
                    accumulate(&mut grads[row.0], n, |buf| {
                        for chunk in g.chunks(n) {
                            add_into(buf, chunk);
                        }
                    });
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[a.0], g.len(), |buf| add_into(buf, &g));
                    accumulate(&mut grads[b.0], g.len(), |buf| add_into(buf, &g));
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a).values(), self.value(*b).values());
                    accumulate(&mut grads[a.0], g.len(), |buf| {
                        for ((o, gi), y) in buf.iter_mut().zip(&g).zip(bv) {
                            *o += gi * y;
                        }
                    });
                    accumulate(&mut grads[b.0], g.len(), |buf| {
                        for ((o, gi), x) in buf.iter_mut().zip(&g).zip(av) {
                            *o += gi * x;
                        }
                    });
                }
                Op::Div(a, b) => {
                    let (av, bv) = (self.value(*a).values(), self.value(*b).values());
                    accumulate(&mut grads[a.0], g.len(), |buf| {
                        for ((o, gi), y) in buf.iter_mut().zip(&g).zip(bv) {
                            *o += gi / y;
                        }
                    });
                    accumulate(&mut grads[b.0], g.len(), |buf| {
                        for (((o, gi), x), y) in buf.iter_mut().zip(&g).zip(av).zip(bv) {
                            *o -= gi * x / (y * y);
                        }
                    });
                }
                Op::Scale(a, c) => {
                    accumulate(&mut grads[a.0], g.len(), |buf| {
                        for (o, gi) in buf.iter_mut().zip(&g) {
                            *o += gi * c;
                        }
                    });
                }
                Op::Relu(a) => {
                    let x = self.value(*a).values();
                    accumulate(&mut grads[a.0], g.len(), |buf| {
                        for ((o, gi), xi) in buf.iter_mut().zip(&g).zip(x) {
                            if *xi > 0.0 {
                                *o += gi;
                            }
                        }
                    });
                }
                Op::Sqrt(a) => {
                    let y = node.value.values();
                    accumulate(&mut grads[a.0], g.len(), |buf| {
                        for ((o, gi), yi) in buf.iter_mut().zip(&g).zip(y) {
                            *o += gi * 0.5 / yi;
                        }
                    });
                }
                Op::SoftmaxCe { logits, labels, probs } => {
                    let k = self.value(*logits).cols();
                    let scale = g[0] / labels.len() as f64;
                    accumulate(&mut grads[logits.0], probs.len(), |buf| {
                        for (r, &label) in labels.iter().enumerate() {
                            let row = &mut buf[r * k..(r + 1) * k];
                            for (o, p) in row.iter_mut().zip(&probs[r * k..(r + 1) * k]) {
                                *o += scale * p;
                            }
                            row[label] -= scale;
                        }
                    });
                }
                Op::Window { src, offset } => {
                    let len = self.value(*src).len();
                    accumulate(&mut grads[src.0], len, |buf| {
                        add_into(&mut buf[*offset..offset + g.len()], &g);
                    });
                }
            }
            grads[i] = Some(g);
        }
        Gradients { grads }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

impl Tensor {
    fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor::new(self.shape().to_vec(), self.values().iter().map(|x| f(*x)).collect())
            .expect("map preserves shape")
    }

    fn with_value(mut self, x: f64) -> Tensor {
        self.values_mut()[0] = x;
        self
    }
}
