//! Check-worthiness scorer: a feed-forward network with two ReLU hidden
//! layers and one sigmoid output per fact-checking source, trained by
//! per-example SGD on masked binary cross-entropy.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureLayout, FeatureVector, Scaler};

pub const HIDDEN1: usize = 200;
pub const HIDDEN2: usize = 50;

/// A fact-checking organization whose selections the model imitates, or
/// `Any` for the union of all nine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    PolitiFact,
    FactCheck,
    ABC,
    CNN,
    NPR,
    NYT,
    ChicagoTribune,
    Guardian,
    WashingtonPost,
    Any,
}

impl Source {
    /// Fixed public order; `Any` last.
    pub const ALL: [Source; 10] = [
        Source::PolitiFact,
        Source::FactCheck,
        Source::ABC,
        Source::CNN,
        Source::NPR,
        Source::NYT,
        Source::ChicagoTribune,
        Source::Guardian,
        Source::WashingtonPost,
        Source::Any,
    ];

    /// The nine organizations, without the union.
    pub const ORGANIZATIONS: [Source; 9] = [
        Source::PolitiFact,
        Source::FactCheck,
        Source::ABC,
        Source::CNN,
        Source::NPR,
        Source::NYT,
        Source::ChicagoTribune,
        Source::Guardian,
        Source::WashingtonPost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::PolitiFact => "PolitiFact",
            Source::FactCheck => "FactCheck",
            Source::ABC => "ABC",
            Source::CNN => "CNN",
            Source::NPR => "NPR",
            Source::NYT => "NYT",
            Source::ChicagoTribune => "ChicagoTribune",
            Source::Guardian => "Guardian",
            Source::WashingtonPost => "WashingtonPost",
            Source::Any => "Any",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    /// Case-insensitive match on the canonical names.
    fn from_str(s: &str) -> Result<Self> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownSource(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpShape {
    pub input: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub outputs: usize,
}

impl MlpShape {
    /// 200 and 50 hidden units, one output per source.
    pub fn standard(input: usize) -> Self {
        MlpShape {
            input,
            hidden1: HIDDEN1,
            hidden2: HIDDEN2,
            outputs: Source::ALL.len(),
        }
    }
}

/// Network weights. Matrices are row-major `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub shape: MlpShape,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Same layout as the parameters of [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

struct Deltas {
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
}

/// Dot product with eight independent accumulators so the compiler can
/// vectorize it; the summation order is fixed, so results are reproducible.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for i in 0..8 {
            acc[i] += ca[i] * cb[i];
        }
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    w.chunks_exact(x.len()).zip(b).map(|(row, bi)| dot(row, x) + bi).collect()
}

/// Logistic function kept strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Binary cross-entropy of a logit against a 0/1 target, computed without
/// forming the probability.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let bound = glorot_bound(fan_in, fan_out);
    (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect()
}

/// `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl Mlp {
    /// Glorot-uniform weights, zero biases, drawn W1, W2, W3 in order from a
    /// ChaCha8 stream seeded with `seed`.
    pub fn init(shape: MlpShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mlp {
            w1: glorot(&mut rng, shape.input, shape.hidden1),
            b1: vec![0.0; shape.hidden1],
            w2: glorot(&mut rng, shape.hidden1, shape.hidden2),
            b2: vec![0.0; shape.hidden2],
            w3: glorot(&mut rng, shape.hidden2, shape.outputs),
            b3: vec![0.0; shape.outputs],
            shape,
        }
    }

    pub fn zeros(shape: MlpShape) -> Self {
        Mlp {
            w1: vec![0.0; shape.input * shape.hidden1],
            b1: vec![0.0; shape.hidden1],
            w2: vec![0.0; shape.hidden1 * shape.hidden2],
            b2: vec![0.0; shape.hidden2],
            w3: vec![0.0; shape.hidden2 * shape.outputs],
            b3: vec![0.0; shape.outputs],
            shape,
        }
    }

    /// Parameter blocks in canonical order (W1, b1, W2, b2, W3, b3).
    pub fn params(&self) -> [&[f64]; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    pub fn params_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.shape.input {
            return Err(Error::LayoutMismatch(format!(
                "network expects {} inputs, got {}",
                self.shape.input,
                x.len()
            )));
        }
        Ok(())
    }

    pub fn activations(&self, x: &[f64]) -> Result<Activations> {
        self.check_input(x)?;
        let mut h1 = affine(&self.w1, &self.b1, x);
        h1.iter_mut().for_each(|v| *v = v.max(0.0));
        let mut h2 = affine(&self.w2, &self.b2, &h1);
        h2.iter_mut().for_each(|v| *v = v.max(0.0));
        let logits = affine(&self.w3, &self.b3, &h2);
        let probs = logits.iter().map(|&z| sigmoid(z)).collect();
        Ok(Activations { h1, h2, logits, probs })
    }

    /// Output probabilities, one per source.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activations(x)?.probs)
    }

    fn check_targets(&self, y: &[f64], mask: &[bool]) -> Result<usize> {
        let n = self.shape.outputs;
        if y.len() != n || mask.len() != n {
            return Err(Error::LayoutMismatch(format!(
                "{n} outputs but {} labels and {} mask entries",
                y.len(),
                mask.len()
            )));
        }
        match mask.iter().filter(|&&m| m).count() {
            0 => Err(Error::EmptyMask),
            k => Ok(k),
        }
    }

    /// Masked-mean binary cross-entropy.
    pub fn loss(&self, x: &[f64], y: &[f64], mask: &[bool]) -> Result<f64> {
        let known = self.check_targets(y, mask)?;
        let act = self.activations(x)?;
        Ok(masked_loss(&act.logits, y, mask, known))
    }

    fn deltas(&self, act: &Activations, y: &[f64], mask: &[bool], known: usize) -> Deltas {
        let s = self.shape;
        let scale = 1.0 / known as f64;
        let d3: Vec<f64> = act
            .probs
            .iter()
            .zip(y)
            .zip(mask)
            .map(|((p, t), &m)| if m { (p - t) * scale } else { 0.0 })
            .collect();
        let mut d2 = vec![0.0; s.hidden2];
        for (row, &d) in self.w3.chunks_exact(s.hidden2).zip(&d3) {
            if d != 0.0 {
                d2.iter_mut().zip(row).for_each(|(acc, w)| *acc += w * d);
            }
        }
        d2.iter_mut().zip(&act.h2).for_each(|(d, &h)| {
            if h <= 0.0 {
                *d = 0.0
            }
        });
        let mut d1 = vec![0.0; s.hidden1];
        for (row, &d) in self.w2.chunks_exact(s.hidden1).zip(&d2) {
            if d != 0.0 {
                d1.iter_mut().zip(row).for_each(|(acc, w)| *acc += w * d);
            }
        }
        d1.iter_mut().zip(&act.h1).for_each(|(d, &h)| {
            if h <= 0.0 {
                *d = 0.0
            }
        });
        Deltas { d1, d2, d3 }
    }

    /// Gradients of the masked-mean BCE by backpropagation.
    pub fn gradients(&self, x: &[f64], y: &[f64], mask: &[bool]) -> Result<Gradients> {
        let known = self.check_targets(y, mask)?;
        let act = self.activations(x)?;
        let Deltas { d1, d2, d3 } = self.deltas(&act, y, mask, known);
        let outer = |d: &[f64], input: &[f64]| -> Vec<f64> {
            d.iter().flat_map(|&di| input.iter().map(move |&xj| di * xj)).collect()
        };
        Ok(Gradients {
            w1: outer(&d1, x),
            w2: outer(&d2, &act.h1),
            w3: outer(&d3, &act.h2),
            b1: d1,
            b2: d2,
            b3: d3,
        })
    }

    /// One in-place SGD update; returns the loss before the update.
    pub fn sgd_step(&mut self, x: &[f64], y: &[f64], mask: &[bool], lr: f64) -> Result<f64> {
        let known = self.check_targets(y, mask)?;
        let act = self.activations(x)?;
        let loss = masked_loss(&act.logits, y, mask, known);
        let Deltas { d1, d2, d3 } = self.deltas(&act, y, mask, known);
        descend(&mut self.w3, &mut self.b3, &d3, &act.h2, lr);
        descend(&mut self.w2, &mut self.b2, &d2, &act.h1, lr);
        descend(&mut self.w1, &mut self.b1, &d1, x, lr);
        Ok(loss)
    }
}

fn masked_loss(logits: &[f64], y: &[f64], mask: &[bool], known: usize) -> f64 {
    logits
        .iter()
        .zip(y)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((&z, &t), _)| bce_with_logit(z, t))
        .sum::<f64>()
        / known as f64
}

/// `W -= lr * d x^T`, `b -= lr * d`, skipping rows with zero delta.
fn descend(w: &mut [f64], b: &mut [f64], d: &[f64], input: &[f64], lr: f64) {
    for ((row, bi), &di) in w.chunks_exact_mut(input.len()).zip(b.iter_mut()).zip(d) {
        if di == 0.0 {
            continue;
        }
        let step = lr * di;
        row.iter_mut().zip(input).for_each(|(wij, xj)| *wij -= step * xj);
        *bi -= step;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 0.01,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidHyperparameter("epochs must be >= 1".into()));
        }
        // zero is allowed: a frozen run leaves the initialization untouched
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidHyperparameter(format!(
                "learning rate {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// One training row: scaled features, per-source 0/1 targets, and which
/// targets are known.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: Mlp,
    /// Mean per-example loss of each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
}

/// Per-example SGD for `config.epochs` passes, reshuffling each pass with
/// a seeded ChaCha8 stream. Examples with an empty mask are skipped.
pub fn train_sgd(mut net: Mlp, data: &[Example], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let usable: Vec<&Example> = data.iter().filter(|e| e.mask.iter().any(|&m| m)).collect();
    if usable.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for &i in &order {
            let ex = usable[i];
            total += net.sgd_step(&ex.x, &ex.y, &ex.mask, config.learning_rate)?;
        }
        epoch_losses.push(total / usable.len() as f64);
    }
    Ok(TrainOutcome { net, epoch_losses })
}

/// A trained scorer: network plus the feature layout and scaler it was
/// trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub net: Mlp,
    pub layout: FeatureLayout,
    pub scaler: Scaler,
    pub sources: Vec<Source>,
}

impl MlpModel {
    pub fn new(net: Mlp, layout: FeatureLayout, scaler: Scaler, sources: Vec<Source>) -> Result<Self> {
        let d = layout.total_dim();
        if net.shape.input != d || scaler.dim() != d {
            return Err(Error::LayoutMismatch(format!(
                "layout has {d} dims, network {} and scaler {}",
                net.shape.input,
                scaler.dim()
            )));
        }
        if net.shape.outputs != sources.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} outputs for {} sources",
                net.shape.outputs,
                sources.len()
            )));
        }
        Ok(MlpModel {
            net,
            layout,
            scaler,
            sources,
        })
    }

    fn check_vector(&self, x: &FeatureVector) -> Result<()> {
        if x.layout_id != self.layout.id() || x.values.len() != self.layout.total_dim() {
            return Err(Error::LayoutMismatch(format!(
                "vector of {} dims (layout {:016x}) against model layout {:016x}",
                x.values.len(),
                x.layout_id,
                self.layout.id()
            )));
        }
        Ok(())
    }

    /// Probabilities for every source, from raw (unscaled) features.
    pub fn score_all(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        self.check_vector(x)?;
        let scaled = self.scaler.apply(x)?;
        self.net.forward(&scaled.values)
    }

    pub fn source_index(&self, source: Source) -> Result<usize> {
        self.sources
            .iter()
            .position(|&s| s == source)
            .ok_or_else(|| Error::UnknownSource(source.to_string()))
    }

    /// Probability that `x` is check-worthy for `source`; the ranking key.
    pub fn score(&self, x: &FeatureVector, source: Source) -> Result<f64> {
        let idx = self.source_index(source)?;
        Ok(self.score_all(x)?[idx])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(input: usize) -> MlpShape {
        MlpShape {
            input,
            hidden1: 5,
            hidden2: 3,
            outputs: 10,
        }
    }

    #[test]
    fn source_names() {
        assert_eq!(Source::ALL.len(), 10);
        assert_eq!(Source::ALL.iter().filter(|&&s| s == Source::Any).count(), 1);
        for s in Source::ALL {
            assert_eq!(s.as_str().parse::<Source>().unwrap(), s);
            assert_eq!(Source::ALL[s.index()], s);
        }
        assert_eq!("politifact".parse::<Source>().unwrap(), Source::PolitiFact);
        assert!(matches!("Reuters".parse::<Source>(), Err(Error::UnknownSource(_))));
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let shape = MlpShape::standard(40);
        let a = Mlp::init(shape, 7);
        assert_eq!(a, Mlp::init(shape, 7));
        assert_ne!(a, Mlp::init(shape, 8));
        assert!(a.b1.iter().chain(&a.b2).chain(&a.b3).all(|&b| b == 0.0));
        for (w, fan_in, fan_out) in [(&a.w1, 40, 200), (&a.w2, 200, 50), (&a.w3, 50, 10)] {
            let bound = glorot_bound(fan_in, fan_out);
            assert_eq!(w.len(), fan_in * fan_out);
            assert!(w.iter().all(|v| v.abs() <= bound));
            // the draw actually uses the range
            assert!(w.iter().any(|v| v.abs() > 0.5 * bound));
        }
        assert!((glorot_bound(40, 200) - (6.0f64 / 240.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_network_outputs_half() {
        let net = Mlp::zeros(small(4));
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.5; 10]);
    }

    #[test]
    fn hand_computed_forward() {
        // D = 2, hidden 2/1, one output
        let net = Mlp {
            shape: MlpShape {
                input: 2,
                hidden1: 2,
                hidden2: 1,
                outputs: 1,
            },
            w1: vec![1.0, -1.0, 0.5, 2.0],
            b1: vec![0.0, -1.0],
            w2: vec![1.0, -0.5],
            b2: vec![0.25],
            w3: vec![2.0],
            b3: vec![-1.0],
        };
        // x = (1, 2): z1 = (1 - 2, 0.5 + 4 - 1) = (-1, 3.5) -> h1 = (0, 3.5)
        // z2 = 0 - 1.75 + 0.25 = -1.5 -> h2 = 0; z3 = -1 -> p = 1 / (1 + e)
        let p = net.forward(&[1.0, 2.0]).unwrap()[0];
        assert!((p - 1.0 / (1.0 + 1f64.exp())).abs() < 1e-15);
        // x = (2, 0): z1 = (2, 0) -> h1 = (2, 0); z2 = 2.25; z3 = 4.5 - 1 = 3.5
        let p = net.forward(&[2.0, 0.0]).unwrap()[0];
        assert!((p - 1.0 / (1.0 + (-3.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn dead_first_layer_gives_output_bias() {
        let mut net = Mlp::init(small(3), 1);
        net.w1.iter_mut().for_each(|w| *w = -w.abs());
        net.b3 = (0..10).map(|i| i as f64 - 5.0).collect();
        let p = net.forward(&[1.0, 1.0, 1.0]).unwrap();
        let act = net.activations(&[1.0, 1.0, 1.0]).unwrap();
        assert!(act.h1.iter().all(|&h| h == 0.0));
        for (pi, bi) in p.iter().zip(&net.b3) {
            // b2 is zero, so h2 is zero too
            assert_eq!(*pi, sigmoid(*bi));
        }
    }

    #[test]
    fn outputs_stay_open_interval() {
        assert!(sigmoid(1000.0) < 1.0);
        assert!(sigmoid(-1000.0) > 0.0);
        let mut net = Mlp::zeros(small(1));
        net.b3 = vec![800.0, -800.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let p = net.forward(&[0.0]).unwrap();
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn saturated_correct_output_has_no_gradient() {
        let mut net = Mlp::init(small(2), 3);
        net.b3[0] = 60.0;
        let mut y = vec![0.0; 10];
        y[0] = 1.0;
        let mask = vec![true; 10];
        let g = net.gradients(&[0.1, 0.2], &y, &mask).unwrap();
        assert!(g.b3[0].abs() < 1e-16);
    }

    #[test]
    fn output_bias_gradient_closed_form() {
        let net = Mlp::init(small(4), 5);
        let x = [0.3, -0.2, 0.9, 0.1];
        let y = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0];
        let mask = [true, true, false, true, false, true, true, false, true, true];
        let p = net.forward(&x).unwrap();
        let g = net.gradients(&x, &y, &mask).unwrap();
        for s in 0..10 {
            let expected = if mask[s] { (p[s] - y[s]) / 7.0 } else { 0.0 };
            assert!((g.b3[s] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_mask_is_error() {
        let net = Mlp::init(small(2), 0);
        assert!(matches!(net.gradients(&[0.0, 0.0], &[0.0; 10], &[false; 10]), Err(Error::EmptyMask)));
    }

    #[test]
    fn finite_differences_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..5 {
            let mut net = Mlp::init(small(6), case);
            net.params_mut().into_iter().for_each(|p| {
                p.iter_mut().for_each(|v| *v += rng.random_range(-0.1..0.1));
            });
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..10).map(|_| f64::from(rng.random_range(0..2u8))).collect();
            let mask: Vec<bool> = (0..10).map(|i| i == 0 || rng.random_bool(0.7)).collect();
            let g = net.gradients(&x, &y, &mask).unwrap();
            let analytic = [&g.w1, &g.b1, &g.w2, &g.b2, &g.w3, &g.b3];
            let h = 1e-5;
            for block in 0..6 {
                for i in 0..analytic[block].len() {
                    let mut plus = net.clone();
                    plus.params_mut()[block][i] += h;
                    let mut minus = net.clone();
                    minus.params_mut()[block][i] -= h;
                    let numeric = (plus.loss(&x, &y, &mask).unwrap() - minus.loss(&x, &y, &mask).unwrap()) / (2.0 * h);
                    let a = analytic[block][i];
                    let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                    assert!(rel <= 1e-4, "case {case} block {block} idx {i}: {a} vs {numeric}");
                }
            }
        }
    }

    #[test]
    fn sgd_step_matches_gradients() {
        let net = Mlp::init(small(3), 4);
        let (x, y, mask) = ([0.5, -1.0, 2.0], [1.0; 10], [true; 10]);
        let g = net.gradients(&x, &y, &mask).unwrap();
        let mut stepped = net.clone();
        stepped.sgd_step(&x, &y, &mask, 0.1).unwrap();
        let grads = [&g.w1, &g.b1, &g.w2, &g.b2, &g.w3, &g.b3];
        for (block, (new, old)) in stepped.params().iter().zip(net.params()).enumerate() {
            for i in 0..old.len() {
                assert!((new[i] - (old[i] - 0.1 * grads[block][i])).abs() < 1e-14);
            }
        }
    }

    fn two_clusters() -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        (0..40)
            .map(|i| {
                let positive = i % 2 == 0;
                let center = if positive { 1.5 } else { -1.5 };
                let x = (0..4).map(|_| center + rng.random_range(-0.5..0.5)).collect();
                let label = f64::from(u8::from(positive));
                Example {
                    x,
                    y: vec![label; 10],
                    mask: vec![true; 10],
                }
            })
            .collect()
    }

    #[test]
    fn learns_separable_clusters() {
        let data = two_clusters();
        let config = TrainConfig {
            seed: 3,
            ..TrainConfig::default()
        };
        let out = train_sgd(Mlp::init(small(4), 1), &data, &config).unwrap();
        assert_eq!(out.epoch_losses.len(), 100);
        assert!(out.epoch_losses.last().unwrap() < out.epoch_losses.first().unwrap());
        let correct = data
            .iter()
            .filter(|e| {
                let p = out.net.forward(&e.x).unwrap()[Source::Any.index()];
                (p >= 0.5) == (e.y[0] == 1.0)
            })
            .count();
        assert_eq!(correct, data.len());
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let init = Mlp::init(small(4), 2);
        let config = TrainConfig {
            epochs: 3,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let out = train_sgd(init.clone(), &two_clusters(), &config).unwrap();
        assert_eq!(out.net, init);
    }

    #[test]
    fn training_is_deterministic() {
        let config = TrainConfig {
            epochs: 5,
            seed: 17,
            ..TrainConfig::default()
        };
        let a = train_sgd(Mlp::init(small(4), 1), &two_clusters(), &config).unwrap();
        let b = train_sgd(Mlp::init(small(4), 1), &two_clusters(), &config).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn training_rejects_bad_config_and_data() {
        let net = Mlp::init(small(4), 1);
        assert!(matches!(train_sgd(net.clone(), &[], &TrainConfig::default()), Err(Error::EmptyDataset)));
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(train_sgd(net, &two_clusters(), &bad), Err(Error::InvalidHyperparameter(_))));
    }

    fn scorer() -> MlpModel {
        let layout = FeatureLayout::new(3, 2, 2);
        let d = layout.total_dim();
        let scaler = Scaler {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        };
        MlpModel::new(Mlp::init(MlpShape::standard(d), 1), layout, scaler, Source::ALL.to_vec()).unwrap()
    }

    #[test]
    fn score_reads_source_output() {
        let m = scorer();
        let x = FeatureVector {
            values: (0..m.layout.total_dim()).map(|i| (i as f64).sin()).collect(),
            layout_id: m.layout.id(),
        };
        let all = m.net.forward(&m.scaler.apply(&x).unwrap().values).unwrap();
        for s in Source::ALL {
            assert_eq!(m.score(&x, s).unwrap(), all[s.index()]);
        }
    }

    #[test]
    fn zero_output_layer_scores_half() {
        let mut m = scorer();
        m.net.w3.iter_mut().for_each(|w| *w = 0.0);
        let x = FeatureVector {
            values: vec![1.0; m.layout.total_dim()],
            layout_id: m.layout.id(),
        };
        for s in Source::ALL {
            assert_eq!(m.score(&x, s).unwrap(), 0.5);
        }
    }

    #[test]
    fn output_bias_is_monotone() {
        let mut m = scorer();
        let x = FeatureVector {
            values: vec![0.3; m.layout.total_dim()],
            layout_id: m.layout.id(),
        };
        let before: Vec<f64> = Source::ALL.iter().map(|&s| m.score(&x, s).unwrap()).collect();
        m.net.b3[Source::CNN.index()] += 0.5;
        let after: Vec<f64> = Source::ALL.iter().map(|&s| m.score(&x, s).unwrap()).collect();
        for s in Source::ALL {
            if s == Source::CNN {
                assert!(after[s.index()] > before[s.index()]);
            } else {
                assert_eq!(after[s.index()], before[s.index()]);
            }
        }
    }

    #[test]
    fn wrong_layout_rejected() {
        let m = scorer();
        let x = FeatureVector {
            values: vec![0.0; m.layout.total_dim()],
            layout_id: 1,
        };
        assert!(matches!(m.score(&x, Source::Any), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn missing_source_is_unknown() {
        let layout = FeatureLayout::new(1, 1, 1);
        let d = layout.total_dim();
        let net = Mlp::init(
            MlpShape {
                input: d,
                hidden1: 2,
                hidden2: 2,
                outputs: 1,
            },
            0,
        );
        let scaler = Scaler {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        };
        let m = MlpModel::new(net, layout, scaler, vec![Source::Any]).unwrap();
        let x = FeatureVector {
            values: vec![0.0; d],
            layout_id: m.layout.id(),
        };
        assert!(m.score(&x, Source::Any).is_ok());
        assert!(matches!(m.score(&x, Source::NPR), Err(Error::UnknownSource(_))));
    }
}
