//! Fully connected feed-forward classifier: ELU hidden layers, softmax
//! output, cross-entropy with an L2 weight penalty, trained by ADAM with
//! inverted dropout on hidden layers.

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::NUM_CLASSES;
use crate::cv::{argmax_first, stratified_folds};
use crate::corpus::LikertClass;
use crate::error::{AlqaError, Result};

const MODEL_FORMAT_VERSION: u32 = 1;
const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Drop probability per hidden layer.
    pub dropout: Vec<f64>,
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self::with_input(crate::reduction::DEFAULT_R_MLP)
    }
}

impl MlpConfig {
    /// Default architecture [r, 140, 120, 120, K].
    pub fn with_input(r: usize) -> Self {
        Self {
            layer_sizes: vec![r, 140, 120, 120, NUM_CLASSES],
            learning_rate: 0.001,
            batch_size: 64,
            beta1: 0.9,
            beta2: 0.99,
            epsilon: 1e-8,
            dropout: vec![0.3; 3],
            l2: 1e-4,
            epochs: 300,
            seed: 0,
        }
    }

    pub fn set_dropout(&mut self, p: f64) {
        self.dropout = vec![p; self.layer_sizes.len().saturating_sub(2)];
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AlqaError::Parameter(format!("MLP config: {m}")));
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return bad("need at least input and output layers of non-zero width");
        }
        if self.dropout.len() != self.layer_sizes.len() - 2 || self.dropout.iter().any(|p| !(0.0..1.0).contains(p)) {
            return bad("one dropout probability in [0, 1) per hidden layer");
        }
        if !(self.learning_rate >= 0.0 && self.l2 >= 0.0 && self.batch_size > 0 && self.epsilon > 0.0) {
            return bad("learning rate, l2, batch size or epsilon out of range");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("ADAM betas must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub loss: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    /// weights[l] has shape (out, in).
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub log: Vec<EpochLog>,
}

pub fn elu(v: f64) -> f64 {
    if v >= 0.0 {
        v
    } else {
        v.exp_m1()
    }
}

fn elu_grad(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        v.exp()
    }
}

/// Row-wise softmax.
pub fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

/// He-normal weights N(0, 2/fan_in), zero biases.
pub fn init_model(cfg: &MlpConfig) -> Result<MlpModel> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for w in cfg.layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        weights.push(Array2::from_shape_simple_fn((fan_out, fan_in), || normal.sample(&mut rng)));
        biases.push(Array1::zeros(fan_out));
    }
    Ok(MlpModel {
        layer_sizes: cfg.layer_sizes.clone(),
        weights,
        biases,
        log: Vec::new(),
    })
}

/// Intermediate values of a batch forward pass.
struct Trace {
    /// Input followed by each hidden layer's (dropped-out) activation.
    activations: Vec<Array2<f64>>,
    /// Pre-activations of hidden layers.
    pre: Vec<Array2<f64>>,
    /// Inverted-dropout multipliers per hidden layer.
    masks: Vec<Option<Array2<f64>>>,
    proba: Array2<f64>,
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }

    pub fn n_parameters(&self) -> usize {
        self.weights.iter().map(Array2::len).sum::<usize>() + self.biases.iter().map(Array1::len).sum::<usize>()
    }

    fn run(&self, x: &Array2<f64>, dropout: Option<(&[f64], &mut ChaCha8Rng)>) -> Trace {
        let layers = self.weights.len();
        let mut activations = vec![x.clone()];
        let mut pre = Vec::new();
        let mut masks = Vec::new();
        let mut dropout = dropout;
        for l in 0..layers - 1 {
            let z = activations[l].dot(&self.weights[l].t()) + &self.biases[l];
            let mut a = z.mapv(elu);
            let mask = match dropout.as_mut() {
                Some((rates, rng)) if rates[l] > 0.0 => {
                    let keep = 1.0 - rates[l];
                    let m = Array2::from_shape_simple_fn(a.dim(), || if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 });
                    a *= &m;
                    Some(m)
                }
                _ => None,
            };
            pre.push(z);
            masks.push(mask);
            activations.push(a);
        }
        let logits = activations[layers - 1].dot(&self.weights[layers - 1].t()) + &self.biases[layers - 1];
        Trace {
            activations,
            pre,
            masks,
            proba: softmax_rows(&logits),
        }
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(AlqaError::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(AlqaError::NonFinite("MLP input".into()));
        }
        Ok(())
    }

    /// Class probabilities for each row, without dropout.
    pub fn predict_proba_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        Ok(self.run(x, None).proba)
    }

    /// Single-sample forward pass; `train_mode` applies inverted dropout
    /// with `rates` drawn from `rng`.
    pub fn forward(&self, x: &[f64], train_mode: Option<(&[f64], &mut ChaCha8Rng)>) -> Result<Vec<f64>> {
        let batch = Array2::from_shape_vec((1, x.len()), x.to_vec()).map_err(|e| AlqaError::Shape(e.to_string()))?;
        self.check_input(&batch)?;
        Ok(self.run(&batch, train_mode).proba.row(0).to_vec())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x, None)
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<LikertClass> {
        let p = self.predict_proba(x)?;
        let best = p.iter().enumerate().fold(0, |b, (i, v)| if *v > p[b] { i } else { b });
        LikertClass::from_index(best)
    }

    pub fn weight_penalty(&self) -> f64 {
        self.weights.iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum()
    }

    /// Mean cross-entropy plus (l2/2)·Σ‖W‖² (biases excluded).
    pub fn loss(&self, x: &Array2<f64>, labels: &[usize], l2: f64) -> Result<f64> {
        self.check_input(x)?;
        let proba = self.run(x, None).proba;
        Ok(cross_entropy(&proba, labels) + 0.5 * l2 * self.weight_penalty())
    }

    /// Analytic gradients (weights, biases) of the loss on a batch.
    fn gradients(&self, trace: &Trace, labels: &[usize], l2: f64) -> (Vec<Array2<f64>>, Vec<Array1<f64>>) {
        let layers = self.weights.len();
        let n = labels.len() as f64;
        let mut delta = trace.proba.clone();
        for (i, &y) in labels.iter().enumerate() {
            delta[[i, y]] -= 1.0;
        }
        delta /= n;
        let mut gw = vec![Array2::zeros((0, 0)); layers];
        let mut gb = vec![Array1::zeros(0); layers];
        for l in (0..layers).rev() {
            gw[l] = delta.t().dot(&trace.activations[l]) + &(&self.weights[l] * l2);
            gb[l] = delta.sum_axis(Axis(0));
            if l == 0 {
                break;
            }
            let mut back = delta.dot(&self.weights[l]);
            if let Some(m) = &trace.masks[l - 1] {
                back *= m;
            }
            back.zip_mut_with(&trace.pre[l - 1], |d, &z| *d *= elu_grad(z));
            delta = back;
        }
        (gw, gb)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = MlpHeader {
            format_version: MODEL_FORMAT_VERSION,
            layer_sizes: self.layer_sizes.clone(),
            log: self.log.clone(),
        };
        let mut bytes = serde_json::to_vec(&header)?;
        bytes.push(b'\n');
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for v in w.iter().chain(b.iter()) {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(AlqaError::NotFound(path.to_path_buf()));
        }
        let corrupt = |reason: &str| AlqaError::Corrupt {
            path: path.to_path_buf(),
            reason: reason.into(),
        };
        let mut reader = BufReader::new(fs::File::open(path)?);
        let mut line = Vec::new();
        reader.read_until(b'\n', &mut line)?;
        let header: MlpHeader = serde_json::from_slice(&line).map_err(|_| corrupt("unreadable header"))?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(AlqaError::VersionMismatch {
                expected: MODEL_FORMAT_VERSION,
                found: header.format_version,
            });
        }
        let mut raw = Vec::new();
        reader.read_to_end(&mut raw)?;
        let mut values = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")));
        let expected: usize = header.layer_sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        if raw.len() != expected * 8 {
            return Err(corrupt("parameter blob has the wrong size"));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in header.layer_sizes.windows(2) {
            let wv: Vec<f64> = values.by_ref().take(w[0] * w[1]).collect();
            let bv: Vec<f64> = values.by_ref().take(w[1]).collect();
            weights.push(Array2::from_shape_vec((w[1], w[0]), wv).map_err(|_| corrupt("weight shape"))?);
            biases.push(Array1::from(bv));
        }
        if weights.iter().flatten().chain(biases.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(corrupt("non-finite parameter"));
        }
        Ok(Self {
            layer_sizes: header.layer_sizes,
            weights,
            biases,
            log: header.log,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct MlpHeader {
    format_version: u32,
    layer_sizes: Vec<usize>,
    log: Vec<EpochLog>,
}

pub fn cross_entropy(proba: &Array2<f64>, labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -proba[[i, y]].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR).ln())
        .sum::<f64>()
        / n
}

/// Bias-corrected ADAM moments for every parameter tensor.
pub struct Adam {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    lr: f64,
    t: i32,
    mw: Vec<Array2<f64>>,
    vw: Vec<Array2<f64>>,
    mb: Vec<Array1<f64>>,
    vb: Vec<Array1<f64>>,
}

impl Adam {
    pub fn new(model: &MlpModel, cfg: &MlpConfig) -> Self {
        Self {
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
            lr: cfg.learning_rate,
            t: 0,
            mw: model.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            vw: model.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            mb: model.biases.iter().map(|b| Array1::zeros(b.dim())).collect(),
            vb: model.biases.iter().map(|b| Array1::zeros(b.dim())).collect(),
        }
    }

    pub fn step(&mut self, model: &mut MlpModel, gw: &[Array2<f64>], gb: &[Array1<f64>]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.epsilon, self.lr);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for l in 0..model.weights.len() {
            ndarray::Zip::from(&mut model.weights[l])
                .and(&gw[l])
                .and(&mut self.mw[l])
                .and(&mut self.vw[l])
                .for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut model.biases[l])
                .and(&gb[l])
                .and(&mut self.mb[l])
                .and(&mut self.vb[l])
                .for_each(|p, &g, m, v| update(p, g, m, v));
        }
    }
}

/// Samples as a matrix with class indices.
#[derive(Clone, Debug)]
pub struct MlpData {
    pub x: Array2<f64>,
    pub labels: Vec<usize>,
}

impl MlpData {
    pub fn new(rows: &[Vec<f64>], labels: &[LikertClass]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if rows.len() != labels.len() || rows.iter().any(|r| r.len() != d) {
            return Err(AlqaError::Shape("MLP data rows and labels disagree".into()));
        }
        let x = Array2::from_shape_vec((rows.len(), d), rows.iter().flatten().copied().collect())
            .map_err(|e| AlqaError::Shape(e.to_string()))?;
        Ok(Self {
            x,
            labels: labels.iter().map(|c| c.index()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

pub fn accuracy_on(model: &MlpModel, data: &MlpData) -> Result<f64> {
    let p = model.predict_proba_batch(&data.x)?;
    let hits = p
        .rows()
        .into_iter()
        .zip(&data.labels)
        .filter(|(row, y)| row.iter().enumerate().fold(0, |b, (i, v)| if *v > row[b] { i } else { b }) == **y)
        .count();
    Ok(hits as f64 / data.len() as f64)
}

/// Mini-batch ADAM for `cfg.epochs` epochs. With validation data, the
/// parameters of the epoch with the best validation accuracy (earliest on
/// ties) are returned.
pub fn train_adam(mut model: MlpModel, data: &MlpData, validation: Option<&MlpData>, cfg: &MlpConfig) -> Result<MlpModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(AlqaError::Training("no training samples".into()));
    }
    if data.x.ncols() != model.input_dim() || data.labels.iter().any(|&y| y >= model.output_dim()) {
        return Err(AlqaError::DimensionMismatch {
            expected: model.input_dim(),
            actual: data.x.ncols(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ada0);
    let mut adam = Adam::new(&model, cfg);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut best: Option<(f64, MlpModel)> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.subset(chunk);
            let trace = model.run(&batch.x, Some((&cfg.dropout, &mut rng)));
            let (gw, gb) = model.gradients(&trace, &batch.labels, cfg.l2);
            adam.step(&mut model, &gw, &gb);
        }
        // Logged loss is the full training objective after the epoch, without dropout.
        let loss = if model.weights.iter().flatten().chain(model.biases.iter().flatten()).all(|v| v.is_finite()) {
            model.loss(&data.x, &data.labels, cfg.l2)?
        } else {
            f64::NAN
        };
        if !loss.is_finite() {
            return Err(AlqaError::Training(format!("loss diverged at epoch {epoch}: {loss}")));
        }
        let validation_accuracy = validation.map(|v| accuracy_on(&model, v)).transpose()?;
        model.log.push(EpochLog { loss, validation_accuracy });
        if let Some(acc) = validation_accuracy {
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, model.clone()));
            }
        }
    }
    Ok(match best {
        Some((_, mut m)) => {
            m.log = model.log;
            m
        }
        None => model,
    })
}

/// Largest relative difference |a − n| / max(|a|, |n|, 1e−6) between the
/// analytic gradient and central differences over `samples` parameters
/// (all of them when there are fewer). Dropout is not applied.
pub fn gradient_check(model: &MlpModel, data: &MlpData, l2: f64, h: f64, samples: usize, seed: u64) -> Result<f64> {
    Ok(gradient_errors(model, data, l2, h, samples, seed)?.into_iter().map(|e| e.relative).fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug)]
pub struct GradientSample {
    pub layer: usize,
    /// None for a bias entry.
    pub weight: Option<(usize, usize)>,
    pub bias: Option<usize>,
    pub analytic: f64,
    pub numeric: f64,
    pub relative: f64,
}

pub fn gradient_errors(model: &MlpModel, data: &MlpData, l2: f64, h: f64, samples: usize, seed: u64) -> Result<Vec<GradientSample>> {
    model.check_input(&data.x)?;
    let trace = model.run(&data.x, None);
    let (gw, gb) = model.gradients(&trace, &data.labels, l2);
    let mut all: Vec<(usize, Option<(usize, usize)>, Option<usize>)> = Vec::new();
    for l in 0..model.weights.len() {
        let (r, c) = model.weights[l].dim();
        all.extend((0..r).flat_map(|i| (0..c).map(move |j| (l, Some((i, j)), None))));
        all.extend((0..model.biases[l].len()).map(|i| (l, None, Some(i))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if samples < all.len() {
        all.shuffle(&mut rng);
        all.truncate(samples);
    }
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(all.len());
    for (layer, weight, bias) in all {
        let slot: &mut f64 = match (weight, bias) {
            (Some(ij), _) => &mut probe.weights[layer][ij],
            (_, Some(i)) => &mut probe.biases[layer][i],
            _ => unreachable!(),
        };
        let original = *slot;
        *slot = original + h;
        let plus = probe.loss(&data.x, &data.labels, l2)?;
        let slot: &mut f64 = match (weight, bias) {
            (Some(ij), _) => &mut probe.weights[layer][ij],
            (_, Some(i)) => &mut probe.biases[layer][i],
            _ => unreachable!(),
        };
        *slot = original - h;
        let minus = {
            let v = probe.loss(&data.x, &data.labels, l2)?;
            v
        };
        let slot: &mut f64 = match (weight, bias) {
            (Some(ij), _) => &mut probe.weights[layer][ij],
            (_, Some(i)) => &mut probe.biases[layer][i],
            _ => unreachable!(),
        };
        *slot = original;
        let numeric = (plus - minus) / (2.0 * h);
        let analytic = match (weight, bias) {
            (Some(ij), _) => gw[layer][ij],
            (_, Some(i)) => gb[layer][i],
            _ => unreachable!(),
        };
        let relative = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        out.push(GradientSample {
            layer,
            weight,
            bias,
            analytic,
            numeric,
            relative,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpTuneResult {
    pub dropout: f64,
    pub l2: f64,
    pub cv_accuracy: f64,
    pub folds: usize,
    pub scores: Vec<(f64, f64, f64)>,
}

/// Stratified k-fold accuracy over (dropout, l2); ties go to the smaller
/// dropout, then the smaller l2.
pub fn cv_tune_mlp(
    rows: &[Vec<f64>],
    labels: &[LikertClass],
    dropout_grid: &[f64],
    l2_grid: &[f64],
    folds: usize,
    seed: u64,
    base: &MlpConfig,
) -> Result<MlpTuneResult> {
    if dropout_grid.is_empty() || l2_grid.is_empty() {
        return Err(AlqaError::Parameter("empty MLP tuning grid".into()));
    }
    let data = MlpData::new(rows, labels)?;
    let (assign, k) = stratified_folds(labels, folds, seed)?;
    let mut ds = dropout_grid.to_vec();
    let mut ls = l2_grid.to_vec();
    ds.sort_by(f64::total_cmp);
    ls.sort_by(f64::total_cmp);
    let mut points = Vec::new();
    let mut correct = Vec::new();
    for &d in &ds {
        for &l2 in &ls {
            let mut cfg = base.clone();
            cfg.set_dropout(d);
            cfg.l2 = l2;
            let mut hits = 0;
            for fold in 0..k {
                let train: Vec<usize> = (0..data.len()).filter(|&i| assign[i] != fold).collect();
                let test: Vec<usize> = (0..data.len()).filter(|&i| assign[i] == fold).collect();
                let model = train_adam(init_model(&cfg)?, &data.subset(&train), None, &cfg)?;
                let held = data.subset(&test);
                hits += (accuracy_on(&model, &held)? * held.len() as f64).round() as usize;
            }
            points.push((d, l2));
            correct.push(hits);
        }
    }
    let best = argmax_first(&correct).expect("grid is non-empty");
    let n = data.len() as f64;
    Ok(MlpTuneResult {
        dropout: points[best].0,
        l2: points[best].1,
        cv_accuracy: correct[best] as f64 / n,
        folds: k,
        scores: points.iter().zip(&correct).map(|(&(d, l), &c)| (d, l, c as f64 / n)).collect(),
    })
}

/// Coarse dropout grid {0.3, 0.35, …, 0.5}.
pub fn desk_dropout_grid() -> Vec<f64> {
    vec![0.3, 0.35, 0.4, 0.45, 0.5]
}

/// Dropout {0.30, 0.31, …, 0.50}.
pub fn full_dropout_grid() -> Vec<f64> {
    (30..=50).map(|v| v as f64 / 100.0).collect()
}

/// l2 ∈ {1e−5, 2e−5, …, 9e−5, 1e−4, …, 1e−2}.
pub fn full_l2_grid() -> Vec<f64> {
    let mut out = Vec::new();
    for e in -5..=-3 {
        for m in 1..=9 {
            out.push(m as f64 * 10f64.powi(e));
        }
    }
    out.push(1e-2);
    out
}
