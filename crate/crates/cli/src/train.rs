//! Minibatch Adam training of stochastic binary networks with ARM gradients.

use std::collections::VecDeque;
use std::path::PathBuf;

use arm_core::sbn::{
    adam_step, arm_backprop_elbo, arm_backprop_mle, elbo, iwae_style_loglik, Checkpoint, ConditionalStack, LayerStack,
    OptimizerState, Parameters, DEFAULT_LEAKY_SLOPE,
};
use arm_core::{RngStream, Sampler};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::data::{halves, load_dataset, square_side, Dataset, Image};
use crate::error::{ensure_finite, HarnessError, Result};
use crate::output::{opt, output_path, write_manifest, CsvTable, Stopwatch};

pub const TRAIN_HEADER: [&str; 6] = ["step", "wall_time_ms", "estimator", "train_smoothed", "valid", "test"];

/// One logged point. For the VAE the metrics are negative ELBOs; for the
/// conditional model they are negative log-likelihoods.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainRow {
    pub step: u64,
    pub wall_time_ms: String,
    /// Mean training loss over the last `smoothing_window` steps.
    pub train_smoothed: Option<f64>,
    pub valid: Option<f64>,
    pub test: Option<f64>,
}

/// Metrics at initialisation, at the end, and at the validation minimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub model: String,
    pub parameters: usize,
    pub steps: u64,
    pub initial_valid: f64,
    pub initial_test: f64,
    pub final_valid: f64,
    pub final_test: f64,
    pub best_step: u64,
    pub best_valid: f64,
    /// Test loss at the step where validation loss was smallest.
    pub test_at_best_valid: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub rows: Vec<TrainRow>,
    pub summary: TrainSummary,
    pub model: M,
    pub optimizer: OptimizerState,
    pub rng: Sampler,
}

struct Smoother {
    window: usize,
    values: VecDeque<f64>,
}

impl Smoother {
    fn new(window: usize) -> Self {
        Self {
            window,
            values: VecDeque::with_capacity(window),
        }
    }

    fn push(&mut self, x: f64) {
        if self.values.len() == self.window {
            self.values.pop_front();
        }
        self.values.push_back(x);
    }

    fn mean(&self) -> Option<f64> {
        (!self.values.is_empty()).then(|| self.values.iter().sum::<f64>() / self.values.len() as f64)
    }
}

struct Tracker {
    rows: Vec<TrainRow>,
    best: (u64, f64, f64),
    initial: Option<(f64, f64)>,
    last: (f64, f64),
}

impl Tracker {
    fn new() -> Self {
        Self {
            rows: Vec::new(),
            best: (0, f64::INFINITY, f64::NAN),
            initial: None,
            last: (f64::NAN, f64::NAN),
        }
    }

    fn log(&mut self, step: u64, clock: &Stopwatch, smooth: Option<f64>, eval: Option<(f64, f64)>) {
        if let Some((v, t)) = eval {
            self.initial.get_or_insert((v, t));
            self.last = (v, t);
            if v < self.best.1 {
                self.best = (step, v, t);
            }
        }
        self.rows.push(TrainRow {
            step,
            wall_time_ms: clock.ms(),
            train_smoothed: smooth,
            valid: eval.map(|e| e.0),
            test: eval.map(|e| e.1),
        });
    }

    fn summary(&self, model: String, parameters: usize, steps: u64) -> TrainSummary {
        let (iv, it) = self.initial.unwrap_or((f64::NAN, f64::NAN));
        TrainSummary {
            model,
            parameters,
            steps,
            initial_valid: iv,
            initial_test: it,
            final_valid: self.last.0,
            final_test: self.last.1,
            best_step: self.best.0,
            best_valid: self.best.1,
            test_at_best_valid: self.best.2,
        }
    }
}

fn dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let data = load_dataset(&cfg.dataset, &cfg.synthetic)?;
    if data.train.is_empty() || data.valid.is_empty() || data.test.is_empty() {
        return Err(HarnessError::Data("every split must contain at least one image".into()));
    }
    Ok(data)
}

/// Mean single-sample negative ELBO over `images`, `samples` draws each.
pub fn mean_neg_elbo(stack: &LayerStack, images: &[Image], samples: usize, stream: RngStream) -> Result<f64> {
    let mut rng = stream.sampler();
    let mut total = 0.0;
    for x in images {
        let xf: Vec<f64> = x.iter().map(|&b| f64::from(b)).collect();
        for _ in 0..samples {
            let s = stack.encoder.forward_sample(&xf, &mut rng)?;
            total -= elbo(stack, x, &s.bits)?.elbo;
        }
    }
    ensure_finite("negative ELBO", total / (images.len() * samples) as f64)
}

/// Mean negative importance-sampled log-likelihood of lower halves given upper halves.
pub fn mean_conditional_nll(
    stack: &ConditionalStack,
    pairs: &[(Image, Image)],
    k: usize,
    stream: RngStream,
) -> Result<f64> {
    let mut rng = stream.sampler();
    let mut total = 0.0;
    for (cond, target) in pairs {
        total -= iwae_style_loglik(stack, target, cond, k, &mut rng)?;
    }
    ensure_finite("negative log-likelihood", total / pairs.len() as f64)
}

fn check_finite<P: Parameters>(model: &P, step: u64) -> Result<()> {
    if model.all_finite() {
        Ok(())
    } else {
        Err(HarnessError::Numeric(format!("non-finite parameter after step {step}")))
    }
}

fn is_log_step(cfg: &ExperimentConfig, step: u64) -> bool {
    step.is_multiple_of(cfg.smoothing_window as u64) || step.is_multiple_of(cfg.eval_every) || step == cfg.iterations
}

/// Trains a discrete VAE by maximising the single-sample ELBO.
pub fn run_train_vae(cfg: &ExperimentConfig) -> Result<TrainOutcome<LayerStack>> {
    let data = dataset(cfg)?;
    let mut init = RngStream::new(cfg.seed, 3).sampler();
    let mut stack = LayerStack::with_architecture(cfg.arch, data.width, cfg.latent[0], DEFAULT_LEAKY_SLOPE, &mut init)?;
    let mut opt = OptimizerState::new(cfg.stepsize, true);
    let mut rng = RngStream::new(cfg.seed, 0).sampler();
    let valid_stream = RngStream::new(cfg.seed, 4);
    let test_stream = RngStream::new(cfg.seed, 5);
    let clock = Stopwatch::new(cfg.timing);
    let mut smooth = Smoother::new(cfg.smoothing_window);
    let mut tracker = Tracker::new();

    let evaluate = |s: &LayerStack| -> Result<(f64, f64)> {
        Ok((
            mean_neg_elbo(s, &data.valid, cfg.k, valid_stream)?,
            mean_neg_elbo(s, &data.test, cfg.k, test_stream)?,
        ))
    };
    tracker.log(0, &clock, None, Some(evaluate(&stack)?));
    for step in 1..=cfg.iterations {
        let mut grad = stack.zeros_like();
        let mut batch_elbo = 0.0;
        for _ in 0..cfg.batch {
            let x = &data.train[rng.index(data.train.len())];
            let s = arm_backprop_elbo(&stack, x, &mut rng)?;
            grad.add_scaled(&s.grad, 1.0 / cfg.batch as f64);
            batch_elbo += s.parts.elbo;
        }
        smooth.push(ensure_finite("batch ELBO", -batch_elbo / cfg.batch as f64)?);
        adam_step(&mut stack, &grad, &mut opt)?;
        check_finite(&stack, step)?;
        if is_log_step(cfg, step) {
            let eval = if step % cfg.eval_every == 0 || step == cfg.iterations {
                Some(evaluate(&stack)?)
            } else {
                None
            };
            tracker.log(step, &clock, smooth.mean(), eval);
        }
    }
    let widths: Vec<String> = std::iter::once(data.width)
        .chain(stack.encoder.widths())
        .map(|w| w.to_string())
        .collect();
    let summary = tracker.summary(
        format!("vae {} {}", cfg.arch, widths.join("-")),
        stack.parameter_count(),
        cfg.iterations,
    );
    Ok(TrainOutcome {
        rows: tracker.rows,
        summary,
        model: stack,
        optimizer: opt,
        rng,
    })
}

/// Upper and lower halves of every image in `images`.
pub fn half_pairs(images: &[Image], side: usize) -> Vec<(Image, Image)> {
    images.iter().map(|img| halves(img, side)).collect()
}

/// Trains `p(lower half | upper half)` through stochastic binary layers.
pub fn run_train_mle(cfg: &ExperimentConfig) -> Result<TrainOutcome<ConditionalStack>> {
    let data = dataset(cfg)?;
    let side = square_side(data.width)?;
    let train = half_pairs(&data.train, side);
    let valid = half_pairs(&data.valid, side);
    let test = half_pairs(&data.test, side);
    let (cond_dim, target_dim) = (train[0].0.len(), train[0].1.len());

    let mut init = RngStream::new(cfg.seed, 3).sampler();
    let mut stack = ConditionalStack::linear(cond_dim, &cfg.latent, target_dim, &mut init)?;
    let mut opt = OptimizerState::new(cfg.stepsize, true);
    let mut rng = RngStream::new(cfg.seed, 0).sampler();
    let valid_stream = RngStream::new(cfg.seed, 4);
    let test_stream = RngStream::new(cfg.seed, 5);
    let clock = Stopwatch::new(cfg.timing);
    let mut smooth = Smoother::new(cfg.smoothing_window);
    let mut tracker = Tracker::new();

    let evaluate = |s: &ConditionalStack| -> Result<(f64, f64)> {
        Ok((
            mean_conditional_nll(s, &valid, cfg.k, valid_stream)?,
            mean_conditional_nll(s, &test, cfg.k, test_stream)?,
        ))
    };
    tracker.log(0, &clock, None, Some(evaluate(&stack)?));
    for step in 1..=cfg.iterations {
        let mut grad = stack.zeros_like();
        let mut batch_ll = 0.0;
        for _ in 0..cfg.batch {
            let (cond, target) = &train[rng.index(train.len())];
            let s = arm_backprop_mle(&stack, target, cond, &mut rng)?;
            grad.add_scaled(&s.grad, 1.0 / cfg.batch as f64);
            batch_ll += s.log_lik;
        }
        smooth.push(ensure_finite("batch log-likelihood", -batch_ll / cfg.batch as f64)?);
        adam_step(&mut stack, &grad, &mut opt)?;
        check_finite(&stack, step)?;
        if is_log_step(cfg, step) {
            let eval = if step % cfg.eval_every == 0 || step == cfg.iterations {
                Some(evaluate(&stack)?)
            } else {
                None
            };
            tracker.log(step, &clock, smooth.mean(), eval);
        }
    }
    let mut widths = vec![cond_dim];
    widths.extend(&cfg.latent);
    widths.push(target_dim);
    let widths: Vec<String> = widths.iter().map(|w| w.to_string()).collect();
    let summary = tracker.summary(
        format!("sbn {}", widths.join("-")),
        stack.parameter_count(),
        cfg.iterations,
    );
    Ok(TrainOutcome {
        rows: tracker.rows,
        summary,
        model: stack,
        optimizer: opt,
        rng,
    })
}

fn write_outcome<M: Parameters>(cfg: &ExperimentConfig, outcome: &TrainOutcome<M>) -> Result<Vec<PathBuf>> {
    let path = output_path(cfg, "csv");
    let mut table = CsvTable::create(&path, &TRAIN_HEADER)?;
    for r in &outcome.rows {
        table.row(&[
            r.step.to_string(),
            r.wall_time_ms.clone(),
            "arm".to_string(),
            opt(r.train_smoothed),
            opt(r.valid),
            opt(r.test),
        ])?;
    }
    let csv = table.finish()?;
    let ck_path = output_path(cfg, "checkpoint.json");
    Checkpoint::capture(
        outcome.summary.model.clone(),
        &outcome.model,
        &outcome.optimizer,
        &outcome.rng,
        cfg.iterations,
    )
    .save(&ck_path)?;
    let manifest = write_manifest(cfg, &[csv.clone(), ck_path.clone()], &outcome.summary)?;
    Ok(vec![csv, ck_path, manifest])
}

pub fn write_train_vae(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    write_outcome(cfg, &run_train_vae(cfg)?)
}

pub fn write_train_mle(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    write_outcome(cfg, &run_train_mle(cfg)?)
}
