//! Feed-forward network with one sigmoid hidden layer, trained by
//! per-sample backpropagation of the squared error `½‖y − t‖²`.
//!
//! Inputs are `(table_rows, miss_ratio, users)` and outputs are
//! `(shared_pool_mb, buffer_cache_mb)`, both min-max normalized to `[0, 1]`.

mod data;
mod io;

pub use data::{TrainingRow, TrainingSet, DEFAULT_FILL_USERS, TABLE_ONE_CSV};
pub use io::{load_model, save_model};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::Ladder;
use crate::monitor::MetricsSnapshot;

pub const FEATURES: usize = 3;
pub const TARGETS: usize = 2;

/// Finite-difference step used by [`NeuralModel::gradient_check`].
pub const GRAD_CHECK_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared absolutely rather than relatively.
pub const GRAD_CHECK_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub init_half_range: f64,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            n_inputs: FEATURES,
            n_hidden: 100,
            n_outputs: TARGETS,
            learning_rate: 0.4,
            epochs: 100,
            init_half_range: 0.5,
            seed: 7,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 || self.n_hidden == 0 || self.n_outputs == 0 {
            return Err(Error::config("network dimensions must be >= 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be finite and >= 0"));
        }
        if !(self.init_half_range > 0.0 && self.init_half_range.is_finite()) {
            return Err(Error::config("init_half_range must be positive"));
        }
        Ok(())
    }
}

/// Per-dimension `(min, max)`. A dimension with `min == max` is unused:
/// it normalizes to 0 and denormalizes to `min`.
pub type Bounds = Vec<(f64, f64)>;

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Min-max scale each component into `[0, 1]`, clamping out-of-range values.
pub fn normalize(x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| {
            if hi > lo {
                ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn denormalize(y: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    y.iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| lo + v * (hi - lo))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    /// `n_hidden × n_inputs`
    pub(crate) w1: Vec<Vec<f64>>,
    pub(crate) b1: Vec<f64>,
    /// `n_outputs × n_hidden`
    pub(crate) w2: Vec<Vec<f64>>,
    pub(crate) b2: Vec<f64>,
    pub(crate) feature_bounds: Option<Bounds>,
    pub(crate) target_bounds: Option<Bounds>,
    pub(crate) seed: u64,
}

/// Gradients with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

impl NeuralModel {
    /// Fresh untrained network with weights uniform in `±init_half_range`.
    pub fn new(cfg: &NetConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let r = cfg.init_half_range;
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-r..=r)).collect() };
        let w1 = (0..cfg.n_hidden).map(|_| draw(cfg.n_inputs)).collect();
        let b1 = draw(cfg.n_hidden);
        let w2 = (0..cfg.n_outputs).map(|_| draw(cfg.n_hidden)).collect();
        let b2 = draw(cfg.n_outputs);
        Ok(NeuralModel {
            w1,
            b1,
            w2,
            b2,
            feature_bounds: None,
            target_bounds: None,
            seed: cfg.seed,
        })
    }

    /// All-zero weights and biases.
    pub fn zeros(n_inputs: usize, n_hidden: usize, n_outputs: usize) -> Self {
        NeuralModel {
            w1: vec![vec![0.0; n_inputs]; n_hidden],
            b1: vec![0.0; n_hidden],
            w2: vec![vec![0.0; n_hidden]; n_outputs],
            b2: vec![0.0; n_outputs],
            feature_bounds: None,
            target_bounds: None,
            seed: 0,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.n_inputs(), self.b1.len(), self.b2.len()]
    }

    pub fn n_inputs(&self) -> usize {
        self.w1.first().map_or(0, Vec::len)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn feature_bounds(&self) -> Option<&[(f64, f64)]> {
        self.feature_bounds.as_deref()
    }

    pub fn target_bounds(&self) -> Option<&[(f64, f64)]> {
        self.target_bounds.as_deref()
    }

    pub fn is_trained(&self) -> bool {
        self.feature_bounds.is_some() && self.target_bounds.is_some()
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(row, b)| sigmoid(dot(row, x) + b))
            .collect()
    }

    fn output(&self, h: &[f64]) -> Vec<f64> {
        self.w2
            .iter()
            .zip(&self.b2)
            .map(|(row, b)| sigmoid(dot(row, h) + b))
            .collect()
    }

    /// `σ(W2·σ(W1·x + b1) + b2)` on a normalized input.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_inputs(), "input width mismatch");
        self.output(&self.hidden(x))
    }

    /// `½‖forward(x) − t‖²`
    pub fn loss(&self, x: &[f64], target: &[f64]) -> f64 {
        0.5 * self
            .forward(x)
            .iter()
            .zip(target)
            .map(|(y, t)| (y - t).powi(2))
            .sum::<f64>()
    }

    /// Analytic gradient of [`Self::loss`] for one sample.
    pub fn backprop(&self, x: &[f64], target: &[f64]) -> Gradients {
        let h = self.hidden(x);
        let y = self.output(&h);
        let delta_out: Vec<f64> = y
            .iter()
            .zip(target)
            .map(|(&yk, &tk)| (yk - tk) * yk * (1.0 - yk))
            .collect();
        let delta_hidden: Vec<f64> = h
            .iter()
            .enumerate()
            .map(|(j, &hj)| {
                let back: f64 = self
                    .w2
                    .iter()
                    .zip(&delta_out)
                    .map(|(row, d)| row[j] * d)
                    .sum();
                back * hj * (1.0 - hj)
            })
            .collect();
        Gradients {
            w1: delta_hidden
                .iter()
                .map(|d| x.iter().map(|xi| d * xi).collect())
                .collect(),
            b1: delta_hidden,
            w2: delta_out
                .iter()
                .map(|d| h.iter().map(|hj| d * hj).collect())
                .collect(),
            b2: delta_out,
        }
    }

    fn step(&mut self, g: &Gradients, lr: f64) {
        for (row, grow) in self.w1.iter_mut().zip(&g.w1) {
            axpy(row, grow, -lr);
        }
        axpy(&mut self.b1, &g.b1, -lr);
        for (row, grow) in self.w2.iter_mut().zip(&g.w2) {
            axpy(row, grow, -lr);
        }
        axpy(&mut self.b2, &g.b2, -lr);
    }

    /// Mean over samples and outputs of `(y − t)²`.
    pub fn mse(&self, samples: &[(Vec<f64>, Vec<f64>)]) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (x, t) in samples {
            for (y, tk) in self.forward(x).iter().zip(t) {
                sum += (y - tk).powi(2);
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Stochastic backpropagation on already-normalized samples.
    ///
    /// Sample order is reshuffled every epoch from `cfg.seed`. Returns the
    /// full-set MSE measured after each epoch.
    pub fn train_normalized(
        &mut self,
        samples: &[(Vec<f64>, Vec<f64>)],
        cfg: &NetConfig,
    ) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut trace = Vec::with_capacity(cfg.epochs);
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (x, t) = &samples[i];
                let g = self.backprop(x, t);
                self.step(&g, cfg.learning_rate);
            }
            trace.push(self.mse(samples));
        }
        trace
    }

    /// Fit bounds to `set`, then train. Returns the per-epoch MSE trace.
    pub fn train(&mut self, set: &TrainingSet, cfg: &NetConfig) -> Result<Vec<f64>> {
        cfg.validate()?;
        set.validate()?;
        if self.dims() != [FEATURES, cfg.n_hidden, TARGETS]
            || cfg.n_inputs != FEATURES
            || cfg.n_outputs != TARGETS
        {
            return Err(Error::config(format!(
                "training needs a {FEATURES}-{}-{TARGETS} network, model is {:?}",
                cfg.n_hidden,
                self.dims()
            )));
        }
        let feature_bounds = set.feature_bounds();
        let target_bounds = set.target_bounds();
        let samples: Vec<(Vec<f64>, Vec<f64>)> = set
            .rows()
            .iter()
            .map(|row| {
                let t = row
                    .targets()
                    .iter()
                    .zip(&target_bounds)
                    .map(|(&v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
                    .collect();
                (normalize(&row.features(), &feature_bounds), t)
            })
            .collect();
        self.feature_bounds = Some(feature_bounds);
        self.target_bounds = Some(target_bounds);
        Ok(self.train_normalized(&samples, cfg))
    }

    /// Max relative error between backprop and central finite differences
    /// over every weight and bias, for one `(x, target)` sample.
    pub fn gradient_check(&self, x: &[f64], target: &[f64]) -> f64 {
        let analytic = self.backprop(x, target);
        let mut probe = self.clone();
        let mut worst = 0.0f64;
        let mut compare = |a: f64, n: f64| {
            let err = (a - n).abs() / a.abs().max(n.abs()).max(GRAD_CHECK_FLOOR);
            worst = worst.max(err);
        };
        let numeric = |m: &mut NeuralModel, get: &dyn Fn(&mut NeuralModel) -> &mut f64| -> f64 {
            let orig = *get(m);
            *get(m) = orig + GRAD_CHECK_STEP;
            let plus = m.loss(x, target);
            *get(m) = orig - GRAD_CHECK_STEP;
            let minus = m.loss(x, target);
            *get(m) = orig;
            (plus - minus) / (2.0 * GRAD_CHECK_STEP)
        };
        let [p, hidden, outputs] = self.dims();
        for j in 0..hidden {
            for i in 0..p {
                compare(analytic.w1[j][i], numeric(&mut probe, &|m| &mut m.w1[j][i]));
            }
            compare(analytic.b1[j], numeric(&mut probe, &|m| &mut m.b1[j]));
        }
        for k in 0..outputs {
            for j in 0..hidden {
                compare(analytic.w2[k][j], numeric(&mut probe, &|m| &mut m.w2[k][j]));
            }
            compare(analytic.b2[k], numeric(&mut probe, &|m| &mut m.b2[k]));
        }
        worst
    }

    /// Denormalized `(pool_mb, cache_mb)` for raw features.
    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        let (fb, tb) = match (&self.feature_bounds, &self.target_bounds) {
            (Some(f), Some(t)) => (f, t),
            _ => return Err(Error::Untrained("no normalization bounds".into())),
        };
        let y = self.forward(&normalize(features, fb));
        Ok(denormalize(&y, tb))
    }

    /// Estimated `(pool_mb, cache_mb)`, each rounded up to its ladder.
    pub fn estimate_sizes(
        &self,
        snapshot: &MetricsSnapshot,
        pool_ladder: &Ladder,
        cache_ladder: &Ladder,
    ) -> Result<(u32, u32)> {
        let raw = self.predict(&[
            snapshot.table_rows as f64,
            snapshot.buffer_miss_ratio,
            f64::from(snapshot.active_users),
        ])?;
        Ok((pool_ladder.round_up(raw[0]), cache_ladder.round_up(raw[1])))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}
