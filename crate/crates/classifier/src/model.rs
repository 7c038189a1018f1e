//! conv3x3(c1)+ReLU+maxpool2 -> conv3x3(c2)+ReLU+maxpool2 ->
//! conv3x3(c3)+ReLU+global max pool -> dropout -> dense(c3 -> classes) -> softmax.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use oam_core::seed::derive_seed;

use crate::error::{invalid, Result};
use crate::layers::*;
use crate::tensor::{Real, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    /// square input side, pixels; a multiple of 4
    pub input: usize,
    pub channels: [usize; 3],
    pub classes: usize,
}

impl Architecture {
    pub fn new(input: usize, channels: [usize; 3], classes: usize) -> Result<Self> {
        if input < 4 || input % 4 != 0 {
            return Err(invalid(format!("input side {input} must be a positive multiple of 4")));
        }
        if channels.contains(&0) || classes < 2 {
            return Err(invalid("need nonzero channel widths and at least two classes"));
        }
        Ok(Architecture { input, channels, classes })
    }

    /// 16/32/64 filters on 64x64 inputs.
    pub fn standard(classes: usize) -> Result<Self> {
        Architecture::new(64, [16, 32, 64], classes)
    }

    /// Human-readable layer list stored in checkpoints.
    pub fn spec_string(&self) -> String {
        let [a, b, c] = self.channels;
        format!(
            "in{0}x{0};conv3x3-{a};relu;maxpool2;conv3x3-{b};relu;maxpool2;conv3x3-{c};relu;globalmax;dropout;dense-{1};softmax",
            self.input, self.classes
        )
    }

    /// Shapes of the parameter tensors in storage order.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let [a, b, c] = self.channels;
        vec![
            vec![a, 1, 3, 3],
            vec![a],
            vec![b, a, 3, 3],
            vec![b],
            vec![c, b, 3, 3],
            vec![c],
            vec![self.classes, c],
            vec![self.classes],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Parameters (or gradients) in the order of [`Architecture::param_shapes`].
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Real> Params<T> {
    pub fn zeros(arch: &Architecture) -> Self {
        Params {
            tensors: arch.param_shapes().into_iter().map(Tensor::zeros).collect(),
        }
    }

    fn add_assign(&mut self, other: &Params<T>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
                *x = *x + y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|v| *v = *v * s);
        }
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    arch: Architecture,
    dropout: f64,
    params: Params<T>,
    /// bumped on every parameter update; caches from older generations are stale
    generation: u64,
}

impl<T: Real> Model<T> {
    /// He-uniform weights (limit `sqrt(6 / fan_in)`), zero biases.
    pub fn init(arch: Architecture, dropout: f64, seed: u64) -> Result<Self> {
        check_dropout(dropout)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Params::zeros(&arch);
        for t in params.tensors.iter_mut().step_by(2) {
            let fan_in: usize = t.shape()[1..].iter().product();
            let limit = (6.0 / fan_in as f64).sqrt();
            for v in t.data_mut() {
                *v = T::of(rng.random_range(-limit..limit));
            }
        }
        Ok(Model {
            arch,
            dropout,
            params,
            generation: 0,
        })
    }

    /// Every parameter zero: uniform output probabilities.
    pub fn zeroed(arch: Architecture, dropout: f64) -> Result<Self> {
        check_dropout(dropout)?;
        Ok(Model {
            arch,
            dropout,
            params: Params::zeros(&arch),
            generation: 0,
        })
    }

    pub fn from_params(arch: Architecture, dropout: f64, params: Params<T>) -> Result<Self> {
        check_dropout(dropout)?;
        let shapes = arch.param_shapes();
        if params.tensors.len() != shapes.len() || params.tensors.iter().zip(&shapes).any(|(t, s)| t.shape() != s.as_slice()) {
            return Err(invalid("parameter shapes do not match the architecture"));
        }
        if params.tensors.iter().any(|t| !t.all_finite()) {
            return Err(invalid("non-finite parameter"));
        }
        Ok(Model {
            arch,
            dropout,
            params,
            generation: 0,
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Mutable access for optimisers and finite-difference probes; marks
    /// outstanding caches stale.
    pub fn params_mut(&mut self) -> &mut Params<T> {
        self.generation += 1;
        &mut self.params
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            arch: self.arch,
            dropout: self.dropout,
            params: Params {
                tensors: self.params.tensors.iter().map(|t| t.cast()).collect(),
            },
            generation: self.generation,
        }
    }
}

fn check_dropout(p: f64) -> Result<()> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("dropout probability {p} outside [0, 1)")))
    }
}

/// Intermediates of one sample.
#[derive(Debug, Clone)]
struct SampleCache<T> {
    cols1: Vec<T>,
    a1: Vec<T>,
    idx1: Vec<usize>,
    cols2: Vec<T>,
    a2: Vec<T>,
    idx2: Vec<usize>,
    cols3: Vec<T>,
    a3: Vec<T>,
    gidx: Vec<usize>,
    mask: Vec<T>,
    features: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct Cache<T> {
    generation: u64,
    mode: Mode,
    samples: Vec<SampleCache<T>>,
}

/// Inverted-dropout multipliers: 0 with probability `p`, else `1/(1-p)`.
pub fn dropout_mask<T: Real>(len: usize, p: f64, seed: u64) -> Vec<T> {
    if p == 0.0 {
        return vec![T::one(); len];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = T::of(1.0 / (1.0 - p));
    (0..len)
        .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
        .collect()
}

fn forward_one<T: Real>(model: &Model<T>, x: &[T], mask: Vec<T>) -> (Vec<T>, SampleCache<T>) {
    let Architecture { input: s, channels: [c1, c2, c3], .. } = model.arch;
    let p = &model.params.tensors;
    let cols1 = im2col(x, 1, s, s);
    let a1 = conv_forward(&cols1, p[0].data(), p[1].data(), s * s);
    let (p1, idx1) = maxpool2(&relu(&a1), c1, s, s);
    let s2 = s / 2;
    let cols2 = im2col(&p1, c1, s2, s2);
    let a2 = conv_forward(&cols2, p[2].data(), p[3].data(), s2 * s2);
    let (p2, idx2) = maxpool2(&relu(&a2), c2, s2, s2);
    let s3 = s / 4;
    let cols3 = im2col(&p2, c2, s3, s3);
    let a3 = conv_forward(&cols3, p[4].data(), p[5].data(), s3 * s3);
    let (g, gidx) = global_max(&relu(&a3), c3, s3 * s3);
    let features: Vec<T> = g.iter().zip(&mask).map(|(&a, &m)| a * m).collect();
    let logits = conv_forward(&features, p[6].data(), p[7].data(), 1);
    let probs = softmax(&logits);
    (
        probs,
        SampleCache {
            cols1,
            a1,
            idx1,
            cols2,
            a2,
            idx2,
            cols3,
            a3,
            gidx,
            mask,
            features,
        },
    )
}

/// Class probabilities for a `(B, 1, S, S)` batch.
///
/// In train mode sample `i` uses the dropout mask seeded by
/// `derive_seed(seed, [i])`; eval mode ignores `seed`.
pub fn forward<T: Real>(model: &Model<T>, batch: &Tensor<T>, mode: Mode, seed: u64) -> Result<(Tensor<T>, Cache<T>)> {
    let s = model.arch.input;
    let shape = batch.shape();
    if shape.len() != 4 || shape[1] != 1 || shape[2] != s || shape[3] != s || shape[0] == 0 {
        return Err(invalid(format!("expected batch shape (B, 1, {s}, {s}), got {shape:?}")));
    }
    let b = shape[0];
    let c3 = model.arch.channels[2];
    let results: Vec<(Vec<T>, SampleCache<T>)> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mask = match mode {
                Mode::Train => dropout_mask(c3, model.dropout, derive_seed(seed, &[i as u64])),
                Mode::Eval => vec![T::one(); c3],
            };
            forward_one(model, batch.row(i), mask)
        })
        .collect();
    let classes = model.arch.classes;
    let mut probs = Vec::with_capacity(b * classes);
    let mut samples = Vec::with_capacity(b);
    for (p, c) in results {
        probs.extend(p);
        samples.push(c);
    }
    let probs = Tensor::new(vec![b, classes], probs)?;
    debug_assert!(probs.all_finite());
    Ok((
        probs,
        Cache {
            generation: model.generation,
            mode,
            samples,
        },
    ))
}

fn check_labels(labels: &[usize], rows: usize, classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(invalid(format!("{} labels for {rows} samples", labels.len())));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
        return Err(invalid(format!("label {l} out of range for {classes} classes")));
    }
    Ok(())
}

/// Clamp floor applied to probabilities before the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// `-sum_i ln p_i[label_i]` over the batch, probabilities clamped below at
/// [`PROB_FLOOR`].
pub fn cross_entropy<T: Real>(probs: &Tensor<T>, labels: &[usize]) -> Result<T> {
    let (rows, classes) = (probs.shape()[0], probs.shape()[1]);
    check_labels(labels, rows, classes)?;
    let floor = T::of(PROB_FLOOR);
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &l)| -probs.row(i)[l].max(floor).ln())
        .sum())
}

fn backward_one<T: Real>(model: &Model<T>, c: &SampleCache<T>, probs: &[T], label: usize) -> Params<T> {
    let Architecture { input: s, channels: [c1, c2, c3], .. } = model.arch;
    let p = &model.params.tensors;
    let mut g = Params::zeros(&model.arch);
    let mut dlogits = probs.to_vec();
    dlogits[label] = dlogits[label] - T::one();

    let (gw, rest) = g.tensors.split_at_mut(7);
    conv_backward(&c.features, p[6].data(), &dlogits, 1, gw[6].data_mut(), rest[0].data_mut(), false);
    // d features = W^T dlogits, then through dropout and the global max
    let mut dr3 = vec![T::zero(); c3 * (s / 4) * (s / 4)];
    for (j, (&m, &gi)) in c.mask.iter().zip(&c.gidx).enumerate() {
        let df: T = dlogits.iter().enumerate().map(|(o, &d)| d * p[6].data()[o * c3 + j]).sum();
        dr3[gi] = dr3[gi] + df * m;
    }
    relu_backward(&c.a3, &mut dr3);

    let n3 = (s / 4) * (s / 4);
    let (lo, hi) = g.tensors.split_at_mut(5);
    let dcols3 = conv_backward(&c.cols3, p[4].data(), &dr3, n3, lo[4].data_mut(), hi[0].data_mut(), true).unwrap();
    let dp2 = col2im(&dcols3, c2, s / 4, s / 4);
    let mut dr2 = unpool(&dp2, &c.idx2, c2 * (s / 2) * (s / 2));
    relu_backward(&c.a2, &mut dr2);

    let n2 = (s / 2) * (s / 2);
    let (lo, hi) = g.tensors.split_at_mut(3);
    let dcols2 = conv_backward(&c.cols2, p[2].data(), &dr2, n2, lo[2].data_mut(), hi[0].data_mut(), true).unwrap();
    let dp1 = col2im(&dcols2, c1, s / 2, s / 2);
    let mut dr1 = unpool(&dp1, &c.idx1, c1 * s * s);
    relu_backward(&c.a1, &mut dr1);

    let (lo, hi) = g.tensors.split_at_mut(1);
    conv_backward(&c.cols1, p[0].data(), &dr1, s * s, lo[0].data_mut(), hi[0].data_mut(), false);
    g
}

/// Gradients of the summed cross-entropy of a batch.
///
/// Per-sample gradients are computed in parallel and added in sample order,
/// so the result does not depend on the thread count.
pub fn backward<T: Real>(model: &Model<T>, cache: &Cache<T>, probs: &Tensor<T>, labels: &[usize]) -> Result<Params<T>> {
    if cache.generation != model.generation {
        return Err(invalid("cache is stale: the model changed after the forward pass"));
    }
    if cache.mode != Mode::Train {
        return Err(invalid("backward needs a train-mode forward cache"));
    }
    let rows = cache.samples.len();
    if probs.shape() != [rows, model.arch.classes] {
        return Err(invalid(format!("probabilities shaped {:?} do not match the cache", probs.shape())));
    }
    check_labels(labels, rows, model.arch.classes)?;
    let parts: Vec<Params<T>> = cache
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, c)| backward_one(model, c, probs.row(i), labels[i]))
        .collect();
    let mut total = Params::zeros(&model.arch);
    for part in &parts {
        total.add_assign(part);
    }
    Ok(total)
}

/// Gradient of the summed loss with respect to the logits: `probs - onehot`.
pub fn logit_gradient<T: Real>(probs: &Tensor<T>, labels: &[usize]) -> Result<Tensor<T>> {
    let (rows, classes) = (probs.shape()[0], probs.shape()[1]);
    check_labels(labels, rows, classes)?;
    let mut g = probs.clone();
    for (i, &l) in labels.iter().enumerate() {
        g.data_mut()[i * classes + l] = g.data()[i * classes + l] - T::one();
    }
    Ok(g)
}
