//! Epoch loop, evaluation and confusion matrices.

use std::path::{Path, PathBuf};

use oam_core::seed::derive_seed;
use oam_core::Image8;
use oam_dataset::{load_manifest, load_split, verify_files, Split};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::save_checkpoint;
use crate::error::{invalid, Result};
use crate::model::{backward, cross_entropy, forward, Mode, Model};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::tensor::{Real, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout: f64,
    pub seed: u64,
    /// network input side, pixels
    pub input_size: usize,
    /// written after every epoch when set
    #[serde(skip)]
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            batch_size: 32,
            epochs: 30,
            dropout: 0.5,
            seed: 0,
            input_size: 64,
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.adam.lr.is_nan() || self.adam.lr <= 0.0 {
            return Err(invalid(format!("learning rate must be positive, got {}", self.adam.lr)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(invalid(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[true][predicted]`
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    /// Row-normalised; rows of absent classes stay zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.iter().map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 }).collect()
            })
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn errors(&self) -> u64 {
        self.total() - (0..self.counts.len()).map(|i| self.counts[i][i]).sum::<u64>()
    }

    /// Share of misclassifications whose (true, predicted) pair satisfies
    /// `allowed`; 1 when there are no errors.
    pub fn error_share(&self, allowed: impl Fn(usize, usize) -> bool) -> f64 {
        let errors = self.errors();
        if errors == 0 {
            return 1.0;
        }
        let mut hit = 0;
        for (t, row) in self.counts.iter().enumerate() {
            for (p, &c) in row.iter().enumerate() {
                if t != p && allowed(t, p) {
                    hit += c;
                }
            }
        }
        hit as f64 / errors as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.normalized() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// mean per-sample cross-entropy
    pub loss: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub confusion: ConfusionMatrix,
}

/// A network-ready sample: `input * input` pixels in [0, 1] and a class.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<T> {
    pub pixels: Vec<T>,
    pub class_index: usize,
}

/// Area-resample stored images to the network input size.
pub fn prepare<T: Real>(images: &[(Image8, usize)], input: usize) -> Result<Vec<Example<T>>> {
    images
        .iter()
        .map(|(img, c)| {
            let px = img.resize_area(input).map_err(|e| invalid(e.to_string()))?;
            Ok(Example {
                pixels: px.into_iter().map(T::of).collect(),
                class_index: *c,
            })
        })
        .collect()
}

fn batch_tensor<T: Real>(examples: &[&Example<T>], input: usize) -> Result<Tensor<T>> {
    let mut data = Vec::with_capacity(examples.len() * input * input);
    for e in examples {
        if e.pixels.len() != input * input {
            return Err(invalid(format!("example has {} pixels, expected {}", e.pixels.len(), input * input)));
        }
        data.extend_from_slice(&e.pixels);
    }
    Tensor::new(vec![examples.len(), 1, input, input], data)
}

fn argmax<T: Real>(row: &[T]) -> usize {
    row.iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > row[best] { i } else { best })
}

/// Eval-mode accuracy, loss and confusion matrix over `examples`.
pub fn evaluate<T: Real>(model: &Model<T>, examples: &[Example<T>], batch_size: usize) -> Result<Evaluation> {
    if examples.is_empty() {
        return Err(invalid("cannot evaluate an empty split"));
    }
    let classes = model.arch().classes;
    let input = model.arch().input;
    let mut confusion = ConfusionMatrix::new(classes);
    let mut loss = 0.0;
    for chunk in examples.chunks(batch_size.max(1)) {
        let refs: Vec<&Example<T>> = chunk.iter().collect();
        let labels: Vec<usize> = chunk.iter().map(|e| e.class_index).collect();
        let (probs, _) = forward(model, &batch_tensor(&refs, input)?, Mode::Eval, 0)?;
        loss += cross_entropy(&probs, &labels)?.as_f64();
        for (i, &l) in labels.iter().enumerate() {
            confusion.record(l, argmax(probs.row(i)));
        }
    }
    let n = examples.len() as f64;
    let correct: u64 = (0..classes).map(|i| confusion.counts[i][i]).sum();
    let per_class_accuracy = confusion
        .counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: u64 = row.iter().sum();
            (total > 0).then(|| row[i] as f64 / total as f64)
        })
        .collect();
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        loss: loss / n,
        per_class_accuracy,
        confusion,
    })
}

/// Train on in-memory examples. Each epoch shuffles with
/// `derive_seed(seed, [epoch])`; batch `b` of epoch `e` seeds its dropout
/// masks from `derive_seed(seed, [e, b])`. Gradients are batch means.
pub fn train_examples<T: Real>(
    model: Model<T>,
    train: &[Example<T>],
    val: &[Example<T>],
    config: &TrainConfig,
) -> Result<(Model<T>, Metrics)> {
    train_with_state(model, None, train, val, config).map(|(m, _, metrics)| (m, metrics))
}

/// Like [`train_examples`], resuming from an optimiser state when given;
/// also returns the final state.
pub fn train_with_state<T: Real>(
    mut model: Model<T>,
    state: Option<AdamState<T>>,
    train: &[Example<T>],
    val: &[Example<T>],
    config: &TrainConfig,
) -> Result<(Model<T>, AdamState<T>, Metrics)> {
    config.validate()?;
    if config.input_size != model.arch().input {
        return Err(invalid(format!(
            "input size {} does not match the model's {}",
            config.input_size,
            model.arch().input
        )));
    }
    let classes = model.arch().classes;
    if let Some(e) = train.iter().chain(val).find(|e| e.class_index >= classes) {
        return Err(invalid(format!("class {} outside the model's {classes} outputs", e.class_index)));
    }
    let mut state = state.unwrap_or_else(|| AdamState::new(&model));
    let mut metrics = Metrics::default();
    if config.epochs > 0 && train.is_empty() {
        return Err(invalid("training split is empty"));
    }
    let input = model.arch().input;
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[epoch as u64])));
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let refs: Vec<&Example<T>> = idx.iter().map(|&i| &train[i]).collect();
            let labels: Vec<usize> = refs.iter().map(|e| e.class_index).collect();
            let seed = derive_seed(config.seed, &[epoch as u64, b as u64]);
            let (probs, cache) = forward(&model, &batch_tensor(&refs, input)?, Mode::Train, seed)?;
            loss_sum += cross_entropy(&probs, &labels)?.as_f64();
            correct += labels.iter().enumerate().filter(|&(i, &l)| argmax(probs.row(i)) == l).count();
            let mut grads = backward(&model, &cache, &probs, &labels)?;
            grads.scale(T::of(1.0 / labels.len() as f64));
            adam_step(&mut model, &mut state, &grads, &config.adam)?;
        }
        metrics.train_loss.push(loss_sum / train.len() as f64);
        metrics.train_accuracy.push(correct as f64 / train.len() as f64);
        if !val.is_empty() {
            let ev = evaluate(&model, val, config.batch_size)?;
            metrics.val_loss.push(ev.loss);
            metrics.val_accuracy.push(ev.accuracy);
        }
        log::info!(
            "epoch {}: train loss {:.4} acc {:.3}; val acc {:?}",
            epoch + 1,
            metrics.train_loss[epoch],
            metrics.train_accuracy[epoch],
            metrics.val_accuracy.last()
        );
        if let Some(path) = &config.checkpoint {
            save_checkpoint(path, &model.cast::<f32>(), Some(&cast_state(&state)), &metrics)?;
        }
    }
    Ok((model, state, metrics))
}

fn cast_state<T: Real>(s: &AdamState<T>) -> AdamState<f32> {
    let cast = |p: &crate::model::Params<T>| crate::model::Params {
        tensors: p.tensors.iter().map(|t| t.cast()).collect(),
    };
    AdamState {
        m: cast(&s.m),
        v: cast(&s.v),
        t: s.t,
    }
}

/// Load `train` and `val` from a dataset directory and train on them.
pub fn train(model: Model<f32>, root: &Path, config: &TrainConfig) -> Result<(Model<f32>, Metrics)> {
    let manifest = load_manifest(root)?;
    verify_files(root, &manifest)?;
    if manifest.labels().len() != model.arch().classes {
        return Err(invalid(format!(
            "dataset has {} classes but the model outputs {}",
            manifest.labels().len(),
            model.arch().classes
        )));
    }
    let train_set = prepare(&load_split(root, &manifest, Split::Train)?, config.input_size)?;
    let val_set = prepare(&load_split(root, &manifest, Split::Val)?, config.input_size)?;
    train_examples(model, &train_set, &val_set, config)
}

/// Evaluate on one split of a dataset directory.
pub fn evaluate_split(model: &Model<f32>, root: &Path, split: Split) -> Result<Evaluation> {
    let manifest = load_manifest(root)?;
    if manifest.labels().len() != model.arch().classes {
        return Err(invalid("dataset and model class counts differ"));
    }
    let examples = prepare(&load_split(root, &manifest, split)?, model.arch().input)?;
    evaluate(model, &examples, 32)
}
