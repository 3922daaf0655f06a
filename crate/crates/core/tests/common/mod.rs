//! Shared test helpers, including a loop-based MLP that shares no code with
//! the ndarray implementation.
#![allow(dead_code)]

use fieldsplit::field::Point;
use fieldsplit::split::{Dense, SplitModel};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain nested-vector MLP: ReLU hidden layers, softmax cross-entropy head.
#[derive(Debug, Clone)]
pub struct LoopMlp {
    /// `w[l][i][j]`: input `i` to output `j` of layer `l`.
    pub w: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
}

impl LoopMlp {
    pub fn from_split(m: &SplitModel) -> Self {
        let layers: Vec<&Dense> = m.client.layers().iter().chain(m.server.layers()).collect();
        Self {
            w: layers
                .iter()
                .map(|d| d.weights.rows().into_iter().map(|r| r.to_vec()).collect())
                .collect(),
            b: layers.iter().map(|d| d.bias.to_vec()).collect(),
        }
    }

    /// Flat parameters, layer by layer, weights (row-major) before bias.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.w.iter().zip(&self.b) {
            for row in w {
                out.extend(row);
            }
            out.extend(b);
        }
        out
    }

    fn forward(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let last = self.w.len() - 1;
        let mut acts = vec![x.to_vec()];
        let mut pre = Vec::new();
        for (l, (w, b)) in self.w.iter().zip(&self.b).enumerate() {
            let a = acts.last().unwrap();
            let mut z = b.clone();
            for (i, ai) in a.iter().enumerate() {
                for (j, zj) in z.iter_mut().enumerate() {
                    *zj += ai * w[i][j];
                }
            }
            let out = if l == last { z.clone() } else { z.iter().map(|v| v.max(0.0)).collect() };
            pre.push(z);
            acts.push(out);
        }
        (acts, pre)
    }

    fn softmax(z: &[f64]) -> Vec<f64> {
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }

    pub fn loss(&self, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let (acts, _) = self.forward(x);
            total -= Self::softmax(acts.last().unwrap())[y].ln();
        }
        total / xs.len() as f64
    }

    /// Batch-mean loss and parameter gradients `(dW, db)`.
    pub fn grads(&self, xs: &[Vec<f64>], ys: &[usize]) -> (f64, Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
        let n = xs.len() as f64;
        let mut gw: Vec<Vec<Vec<f64>>> = self.w.iter().map(|w| vec![vec![0.0; w[0].len()]; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.b.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let (acts, pre) = self.forward(x);
            let p = Self::softmax(acts.last().unwrap());
            total -= p[y].ln();
            let mut delta: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(j, pj)| (pj - if j == y { 1.0 } else { 0.0 }) / n)
                .collect();
            for l in (0..self.w.len()).rev() {
                for (i, ai) in acts[l].iter().enumerate() {
                    for (j, dj) in delta.iter().enumerate() {
                        gw[l][i][j] += ai * dj;
                    }
                }
                for (j, dj) in delta.iter().enumerate() {
                    gb[l][j] += dj;
                }
                if l == 0 {
                    break;
                }
                let mut up = vec![0.0; self.w[l].len()];
                for (i, u) in up.iter_mut().enumerate() {
                    for (j, dj) in delta.iter().enumerate() {
                        *u += self.w[l][i][j] * dj;
                    }
                    if pre[l - 1][i] <= 0.0 {
                        *u = 0.0;
                    }
                }
                delta = up;
            }
        }
        (total / n, gw, gb)
    }

    pub fn sgd_step(&mut self, xs: &[Vec<f64>], ys: &[usize], lr: f64) -> f64 {
        let (loss, gw, gb) = self.grads(xs, ys);
        for l in 0..self.w.len() {
            for i in 0..self.w[l].len() {
                for j in 0..self.w[l][i].len() {
                    self.w[l][i][j] -= lr * gw[l][i][j];
                }
            }
            for j in 0..self.b[l].len() {
                self.b[l][j] -= lr * gb[l][j];
            }
        }
        loss
    }

    /// Hidden activation after `layers` weight layers (ReLU applied).
    pub fn activation_after(&self, x: &[f64], layers: usize) -> Vec<f64> {
        self.forward(x).0[layers].clone()
    }
}

pub fn flat_model(m: &SplitModel) -> Vec<f64> {
    LoopMlp::from_split(m).flat()
}

pub fn rows(x: &Array2<f64>) -> Vec<Vec<f64>> {
    x.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn random_batch(rows: usize, cols: usize, classes: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-2.0..2.0));
    let y = (0..rows).map(|_| rng.random_range(0..classes)).collect();
    (x, y)
}

pub fn random_points(n: usize, side: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side)))
        .collect()
}

/// Largest relative difference, with `floor` guarding near-zero entries.
pub fn max_rel_diff(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
