//! Small fully connected network with SiLU hidden units, trained by Adam on
//! mean squared error.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `inputs x outputs`
    pub weights: Array2<f32>,
    pub bias: Array1<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
    pub weight_decay: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-5,
        }
    }
}

/// First and second moment estimates, one pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<(Array2<f32>, Array1<f32>)>,
    v: Vec<(Array2<f32>, Array1<f32>)>,
    t: i32,
}

impl AdamState {
    pub fn new(net: &Mlp) -> Self {
        let zeros = || {
            net.layers
                .iter()
                .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len())))
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

fn silu(x: f32) -> f32 {
    x * sigmoid(x)
}

fn silu_grad(x: f32) -> f32 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

impl Mlp {
    /// Uniform Glorot initialization; `sizes` lists every layer width
    /// including input and output.
    pub fn new(sizes: &[usize], rng: &mut SimRng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f32).sqrt();
                let dist = Uniform::new(-limit, limit).expect("finite bounds");
                let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng));
                Dense {
                    weights,
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.ncols())
    }

    pub fn forward(&self, x: ArrayView2<f32>) -> Array2<f32> {
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            h = h.dot(&layer.weights) + &layer.bias;
            if i < last {
                h.mapv_inplace(silu);
            }
        }
        h
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// One Adam step on a minibatch; returns the mean squared error before
    /// the update.
    pub fn train_step(
        &mut self,
        x: ArrayView2<f32>,
        y: ArrayView2<f32>,
        adam: &mut AdamState,
        cfg: &AdamConfig,
    ) -> f32 {
        let n = self.layers.len();
        let mut pre = Vec::with_capacity(n);
        let mut acts = Vec::with_capacity(n + 1);
        acts.push(x.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = acts[i].dot(&layer.weights) + &layer.bias;
            let a = if i + 1 < n { z.mapv(silu) } else { z.clone() };
            pre.push(z);
            acts.push(a);
        }
        let err = &acts[n] - &y;
        let count = err.len() as f32;
        let loss = err.iter().map(|e| e * e).sum::<f32>() / count;
        let mut delta = err * (2.0 / count);

        adam.t += 1;
        let t = adam.t;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for i in (0..n).rev() {
            if i + 1 < n {
                Zip::from(&mut delta).and(&pre[i]).for_each(|d, &z| *d *= silu_grad(z));
            }
            let gw = acts[i].t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                delta = delta.dot(&self.layers[i].weights.t());
            }
            let layer = &mut self.layers[i];
            let (mw, mb) = &mut adam.m[i];
            let (vw, vb) = &mut adam.v[i];
            let update = |p: &mut f32, g: f32, m: &mut f32, v: &mut f32, decay: f32| {
                let g = g + decay * *p;
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                *p -= cfg.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + cfg.epsilon);
            };
            Zip::from(&mut layer.weights)
                .and(&gw)
                .and(mw)
                .and(vw)
                .for_each(|p, &g, m, v| update(p, g, m, v, cfg.weight_decay));
            Zip::from(&mut layer.bias)
                .and(&gb)
                .and(mb)
                .and(vb)
                .for_each(|p, &g, m, v| update(p, g, m, v, 0.0));
        }
        loss
    }
}

/// Random minibatch row indices drawn with replacement.
pub fn sample_rows(pool: &[usize], batch: usize, rng: &mut SimRng) -> Vec<usize> {
    (0..batch).map(|_| pool[rng.random_range(0..pool.len())]).collect()
}
