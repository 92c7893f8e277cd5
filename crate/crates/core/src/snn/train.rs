//! Training and evaluation loops.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::init::{init_parameters, InitRanges};
use super::loss::{decode_prediction, loss_ce_motm};
use super::network::{ForwardMode, ForwardRngs, Network, NetworkSpec, SpikeModel};
use super::optim::{cosine_lr, AdamW};
use crate::config::TrainConfig;
use crate::dataset::{encode_probabilities, Sample};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, names, stream, StreamRng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub mean_loss: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub lr_end: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchMetrics {
    pub step: usize,
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    /// Accuracy on one validation minibatch; NaN when not evaluated.
    pub val_accuracy: f64,
    /// Simple moving average of `val_accuracy` over the configured window.
    pub val_accuracy_sma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub epochs: Vec<EpochMetrics>,
    pub batches: Vec<BatchMetrics>,
    pub min_val_loss: f64,
    pub test: EvalReport,
    pub final_params: Vec<f64>,
    pub seconds: f64,
}

/// Generators for one evaluation pass, all derived from `eval_seed`.
struct EvalStreams {
    encoding: StreamRng,
    fwd: ForwardRngs,
}

impl EvalStreams {
    fn new(eval_seed: u64) -> Self {
        Self {
            encoding: stream(eval_seed, names::ENCODING),
            fwd: ForwardRngs {
                noise: stream(eval_seed, names::NOISE),
                dropout: stream(eval_seed, names::DROPOUT),
            },
        }
    }
}

fn run_sample<S: Scalar>(
    net: &mut Network<S>,
    params: &[S],
    sample: &Sample,
    steps: usize,
    mode: ForwardMode,
    encoding: &mut StreamRng,
    fwd: &mut ForwardRngs,
) -> Result<(f64, usize)> {
    let raster: Vec<S> = encode_probabilities(&sample.probs, steps, net.n_inputs(), encoding);
    net.forward(&raster, steps, params, mode, fwd)?;
    let l = loss_ce_motm(net.output_mem(), net.n_outputs(), sample.label);
    Ok((l.loss.as_f64(), decode_prediction(&net.output_spike_counts())))
}

fn eval_with<S: Scalar>(
    net: &mut Network<S>,
    params: &[S],
    samples: &[Sample],
    steps: usize,
    noise: bool,
    streams: &mut EvalStreams,
) -> Result<EvalReport> {
    let n_classes = net.n_outputs();
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    let mut loss = 0.0;
    let mut correct = 0;
    for s in samples {
        let (l, pred) = run_sample(
            net,
            params,
            s,
            steps,
            ForwardMode::eval(noise),
            &mut streams.encoding,
            &mut streams.fwd,
        )?;
        loss += l;
        confusion[s.label][pred] += 1;
        correct += (pred == s.label) as usize;
    }
    let n = samples.len().max(1) as f64;
    Ok(EvalReport {
        n: samples.len(),
        accuracy: correct as f64 / n,
        mean_loss: loss / n,
        confusion,
    })
}

/// Accuracy, mean MOTM loss and confusion matrix with dropout off. Encoding and
/// noise are drawn from sub-streams of `eval_seed`, so equal seeds give
/// identical draws across calls (e.g. across a power sweep).
pub fn evaluate<S: Scalar>(
    spec: &NetworkSpec<S>,
    params: &[S],
    samples: &[Sample],
    steps: usize,
    noise: bool,
    eval_seed: u64,
) -> Result<EvalReport> {
    let mut net = Network::new(spec.clone())?;
    net.prepare(params)?;
    eval_with(
        &mut net,
        params,
        samples,
        steps,
        noise,
        &mut EvalStreams::new(eval_seed),
    )
}

/// Trains from the seeded initialization; see [`train_from`].
#[allow(clippy::too_many_arguments)]
pub fn train<S: Scalar>(
    spec: &NetworkSpec<S>,
    train_set: &[Sample],
    val_set: &[Sample],
    test_set: &[Sample],
    cfg: &TrainConfig,
    init: &InitRanges,
    steps: usize,
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    let params = init_parameters(spec, init, seed);
    train_from(spec, params, train_set, val_set, test_set, cfg, steps, seed, on_epoch)
}

/// Surrogate-gradient BPTT with AdamW and a cosine schedule reaching zero
/// after the last step. Batches average the per-sample loss.
#[allow(clippy::too_many_arguments)]
pub fn train_from<S: Scalar>(
    spec: &NetworkSpec<S>,
    mut params: Vec<S>,
    train_set: &[Sample],
    val_set: &[Sample],
    test_set: &[Sample],
    cfg: &TrainConfig,
    steps: usize,
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    let start = Instant::now();
    let mut net = Network::new(spec.clone())?;
    net.prepare(&params)?;
    let n_params = net.n_params();
    let mut opt = AdamW::new(n_params, cfg.adamw);
    let mut grads = vec![S::zero(); n_params];
    let mut encoding = stream(seed, names::ENCODING);
    let mut fwd = ForwardRngs {
        noise: stream(seed, names::NOISE),
        dropout: stream(seed, names::DROPOUT),
    };
    let mut shuffle = stream(seed, names::SHUFFLE);
    let eval_seed = derive_seed(seed, names::EVAL);
    let mut batch_val = EvalStreams::new(derive_seed(eval_seed, "batch"));
    let mut epoch_val = EvalStreams::new(derive_seed(eval_seed, "epoch"));
    let train_mode = ForwardMode {
        noise: cfg.noise_enabled,
        dropout_p: cfg.dropout_p,
        spikes: SpikeModel::Surrogate,
    };

    let per_epoch = train_set.len().div_ceil(cfg.batch_size);
    let total = per_epoch * cfg.epochs;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut batches = Vec::with_capacity(total);
    let mut sma_window: std::collections::VecDeque<f64> = std::collections::VecDeque::new();
    let mut sma_sum = 0.0;
    let mut val_cursor = 0;
    let mut step = 0;
    let mut lr = cfg.lr0;
    for epoch in 0..cfg.epochs {
        let t0 = Instant::now();
        order.shuffle(&mut shuffle);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            lr = cosine_lr(step, total, cfg.lr0);
            grads.fill(S::zero());
            let scale = S::one() / S::of(chunk.len() as f64);
            let mut batch_loss = 0.0;
            for &i in chunk {
                let s = &train_set[i];
                let raster: Vec<S> = encode_probabilities(&s.probs, steps, net.n_inputs(), &mut encoding);
                net.forward(&raster, steps, &params, train_mode, &mut fwd)?;
                let l = loss_ce_motm(net.output_mem(), net.n_outputs(), s.label);
                if !l.loss.is_finite() {
                    return Err(Error::Diverged(format!("loss {} at epoch {epoch} step {step}", l.loss)));
                }
                batch_loss += l.loss.as_f64();
                net.backward(&l.grad_mem(steps, s.label, scale), &params, &mut grads)?;
            }
            net.flush_gradients(&params, &mut grads)?;
            opt.step(&mut params, &grads, S::of(lr))
                .map_err(|e| Error::Diverged(format!("epoch {epoch} step {step}: {e}")))?;
            net.prepare(&params)?;
            batch_loss /= chunk.len() as f64;
            epoch_loss += batch_loss * chunk.len() as f64;

            let mut val_accuracy = f64::NAN;
            if cfg.val_every_batch && !val_set.is_empty() {
                let n = cfg.batch_size.min(val_set.len());
                let idx: Vec<usize> = (0..n).map(|k| (val_cursor + k) % val_set.len()).collect();
                val_cursor = (val_cursor + n) % val_set.len();
                let mut correct = 0;
                for &k in &idx {
                    let mode = ForwardMode::eval(cfg.noise_enabled);
                    let (_, pred) = run_sample(
                        &mut net,
                        &params,
                        &val_set[k],
                        steps,
                        mode,
                        &mut batch_val.encoding,
                        &mut batch_val.fwd,
                    )?;
                    correct += (pred == val_set[k].label) as usize;
                }
                val_accuracy = correct as f64 / n as f64;
                sma_window.push_back(val_accuracy);
                sma_sum += val_accuracy;
                if sma_window.len() > cfg.sma_window.max(1) {
                    sma_sum -= sma_window.pop_front().unwrap_or(0.0);
                }
            }
            batches.push(BatchMetrics {
                step,
                epoch,
                lr,
                train_loss: batch_loss,
                val_accuracy,
                val_accuracy_sma: if sma_window.is_empty() {
                    f64::NAN
                } else {
                    sma_sum / sma_window.len() as f64
                },
            });
            step += 1;
        }
        let val = eval_with(&mut net, &params, val_set, steps, cfg.noise_enabled, &mut epoch_val)?;
        let m = EpochMetrics {
            epoch,
            train_loss: epoch_loss / train_set.len().max(1) as f64,
            val_loss: val.mean_loss,
            val_accuracy: val.accuracy,
            lr_end: lr,
            seconds: t0.elapsed().as_secs_f64(),
        };
        on_epoch(&m);
        epochs.push(m);
    }
    let test = eval_with(
        &mut net,
        &params,
        test_set,
        steps,
        cfg.noise_enabled,
        &mut EvalStreams::new(derive_seed(eval_seed, "test")),
    )?;
    let min_val_loss = epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    Ok(TrainOutcome {
        epochs,
        batches,
        min_val_loss,
        test,
        final_params: params.iter().map(|p| p.as_f64()).collect(),
        seconds: start.elapsed().as_secs_f64(),
    })
}
