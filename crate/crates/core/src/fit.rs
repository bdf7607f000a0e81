//! Waveform fitting: Adam on raw samples against spectra of a reference.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::loss::{combined_loss_and_grad, Analysis, LossBreakdown, LossTargets, LossWeights};
use crate::operator::{AnalysisOperator, CwtParams, StftParams};
use crate::transform::Waveform;

/// Samples per V/UV frame (the conditional-feature hop).
pub const VUV_FRAME_HOP: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon.is_finite()
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!(
                "invalid Adam settings: lr > 0, 0 <= beta < 1, eps > 0 required, got {self:?}"
            )))
        }
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut [f64],
    grad: &[f64],
    hp: &AdamParams,
) -> Result<()> {
    if params.len() != grad.len() || state.m.len() != grad.len() {
        return Err(Error::input(format!(
            "Adam shapes differ: params {}, grad {}, state {}",
            params.len(),
            grad.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::FitDiverged {
            step: state.step as usize,
            reason: format!("gradient coordinate {i} is not finite"),
            trace: Box::default(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - hp.beta1.powi(t);
    let bc2 = 1.0 - hp.beta2.powi(t);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grad)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
        *v = hp.beta2 * *v + (1.0 - hp.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.epsilon);
    }
    Ok(())
}

/// Sample-and-hold expansion of per-frame flags to `length` samples.
pub fn upsample_vuv(frame_flags: &[f64], length: usize) -> Result<Vec<f64>> {
    if frame_flags.len() * VUV_FRAME_HOP < length {
        return Err(Error::input(format!(
            "{} V/UV frames cover {} samples, need {length}",
            frame_flags.len(),
            frame_flags.len() * VUV_FRAME_HOP
        )));
    }
    Ok(frame_flags
        .iter()
        .flat_map(|&f| std::iter::repeat_n(f, VUV_FRAME_HOP))
        .take(length)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    Zeros,
    Gaussian {
        sigma: f64,
    },
    /// Reference plus Gaussian noise.
    CorruptedReference {
        sigma: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub iterations: usize,
    pub adam: AdamParams,
    pub init: InitMode,
    pub weights: LossWeights,
    pub stft: Option<StftParams>,
    pub cwt: Option<CwtParams>,
    pub seed: u64,
    pub log_every: usize,
    /// Abort once the loss exceeds this multiple of the step-0 loss.
    pub divergence_ratio: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 5000,
            adam: AdamParams::default(),
            init: InitMode::Gaussian { sigma: 0.01 },
            weights: LossWeights::scalars(1.0, 1.0, 0.0, 0.0),
            stft: Some(StftParams::default()),
            cwt: None,
            seed: 0,
            log_every: 100,
            divergence_ratio: Some(1e6),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::param("iterations must be at least 1"));
        }
        if self.log_every == 0 {
            return Err(Error::param("log_every must be at least 1"));
        }
        self.adam.validate()?;
        self.weights.validate()?;
        match self.init {
            InitMode::Gaussian { sigma } | InitMode::CorruptedReference { sigma }
                if !(sigma.is_finite() && sigma >= 0.0) =>
            {
                return Err(Error::param(format!(
                    "init sigma must be >= 0, got {sigma}"
                )));
            }
            _ => {}
        }
        if let Some(r) = self.divergence_ratio {
            if r.is_nan() || r <= 1.0 {
                return Err(Error::param("divergence_ratio must exceed 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub step: usize,
    pub loss: LossBreakdown,
    pub grad_norm: f64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitTrace {
    pub records: Vec<FitRecord>,
    pub best_step: usize,
    pub best_total: f64,
    /// The best-loss waveform seen so far.
    pub final_waveform: Vec<f64>,
}

impl FitTrace {
    pub fn initial_total(&self) -> Option<f64> {
        self.records.first().map(|r| r.loss.total)
    }

    pub fn totals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss.total).collect()
    }
}

/// The operators and fixed targets a fit optimizes against.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub stft: Option<(AnalysisOperator, LossTargets)>,
    pub cwt: Option<(AnalysisOperator, LossTargets)>,
    pub weights: LossWeights,
}

impl FitProblem {
    /// Build operators for the reference length and analyze the reference once.
    /// Operators whose weights are all zero are not built.
    pub fn new(reference: &Waveform, cfg: &FitConfig) -> Result<Self> {
        let (n, fs) = (reference.len(), reference.sample_rate());
        let w = &cfg.weights;
        let stft = match cfg.stft {
            Some(p) if !(w.amp_stft.is_zero() && w.phase_stft.is_zero()) => {
                let op = AnalysisOperator::stft(p, n, fs)?;
                let targets = LossTargets::analyze(&op, reference)?;
                Some((op, targets))
            }
            _ => None,
        };
        let cwt = match cfg.cwt {
            Some(p) if !(w.amp_cwt.is_zero() && w.phase_cwt.is_zero()) => {
                let op = p.build(n, fs)?;
                let targets = LossTargets::analyze(&op, reference)?;
                Some((op, targets))
            }
            _ => None,
        };
        Ok(Self {
            stft,
            cwt,
            weights: cfg.weights.clone(),
        })
    }

    pub fn loss_and_grad(&self, y: &Waveform) -> Result<(LossBreakdown, Vec<f64>)> {
        combined_loss_and_grad(
            y,
            self.stft.as_ref().map(|(op, t)| Analysis::new(op, t)),
            self.cwt.as_ref().map(|(op, t)| Analysis::new(op, t)),
            &self.weights,
        )
    }
}

fn initial_waveform(reference: &Waveform, init: InitMode, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = |sigma: f64| -> f64 {
        if sigma == 0.0 {
            0.0
        } else {
            Normal::new(0.0, sigma)
                .expect("sigma validated")
                .sample(&mut rng)
        }
    };
    match init {
        InitMode::Zeros => vec![0.0; reference.len()],
        InitMode::Gaussian { sigma } => (0..reference.len()).map(|_| noise(sigma)).collect(),
        InitMode::CorruptedReference { sigma } => reference
            .samples()
            .iter()
            .map(|&r| r + noise(sigma))
            .collect(),
    }
}

pub struct FitOutcome {
    pub waveform: Waveform,
    pub trace: FitTrace,
}

/// Minimize the combined spectral loss over raw samples with Adam.
///
/// Every iterate, including the one after the last update, is evaluated;
/// the best one is returned. Records are kept every `log_every` steps and
/// always for the first and last step.
pub fn fit_waveform(reference: &Waveform, cfg: &FitConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    if let Some(v) = &cfg.weights.vuv {
        if v.len() != reference.len() {
            return Err(Error::input(format!(
                "V/UV track has {} samples, reference has {}",
                v.len(),
                reference.len()
            )));
        }
    }
    let problem = FitProblem::new(reference, cfg)?;
    fit_problem(&problem, reference, cfg)
}

pub fn fit_problem(
    problem: &FitProblem,
    reference: &Waveform,
    cfg: &FitConfig,
) -> Result<FitOutcome> {
    let fs = reference.sample_rate();
    let mut samples = initial_waveform(reference, cfg.init, cfg.seed);
    let mut state = AdamState::new(samples.len());
    let mut trace = FitTrace {
        best_total: f64::INFINITY,
        ..FitTrace::default()
    };
    let start = Instant::now();
    let mut initial_total = None;
    for step in 0..=cfg.iterations {
        let y = match Waveform::new(samples.clone(), fs) {
            Ok(y) => y,
            Err(_) => return Err(diverged(step, "waveform became non-finite", trace)),
        };
        let (loss, grad) = problem.loss_and_grad(&y)?;
        if !loss.total.is_finite() {
            return Err(diverged(step, "loss is not finite", trace));
        }
        let initial = *initial_total.get_or_insert(loss.total);
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if loss.total < trace.best_total {
            trace.best_total = loss.total;
            trace.best_step = step;
            trace.final_waveform.clone_from(&samples);
        }
        if step % cfg.log_every == 0 || step == cfg.iterations {
            trace.records.push(FitRecord {
                step,
                loss: loss.clone(),
                grad_norm,
                elapsed: start.elapsed(),
            });
        }
        if let Some(ratio) = cfg.divergence_ratio {
            if initial > 0.0 && loss.total > ratio * initial {
                if trace.records.last().map(|r| r.step) != Some(step) {
                    trace.records.push(FitRecord {
                        step,
                        loss,
                        grad_norm,
                        elapsed: start.elapsed(),
                    });
                }
                return Err(diverged(
                    step,
                    &format!("loss grew beyond {ratio:e} times its initial value"),
                    trace,
                ));
            }
        }
        if step == cfg.iterations {
            break;
        }
        adam_step(&mut state, &mut samples, &grad, &cfg.adam).map_err(|e| match e {
            Error::FitDiverged { reason, .. } => Error::FitDiverged {
                step,
                reason,
                trace: Box::new(trace.clone()),
            },
            other => other,
        })?;
    }
    let waveform = Waveform::new(trace.final_waveform.clone(), fs)?;
    Ok(FitOutcome { waveform, trace })
}

fn diverged(step: usize, reason: &str, trace: FitTrace) -> Error {
    Error::FitDiverged {
        step,
        reason: reason.to_string(),
        trace: Box::new(trace),
    }
}
