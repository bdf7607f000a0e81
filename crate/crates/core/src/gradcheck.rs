//! Central finite differences as an independent check of the analytic
//! loss gradients.

use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{make_scale_grid, FrequencyScale};
use crate::loss::{amplitude_loss, amplitude_loss_grad, phase_loss, phase_loss_grad};
use crate::loss::{LossTargets, LossWeights, Weight};
use crate::operator::{AnalysisOperator, StftParams, Window};
use crate::transform::Waveform;

pub const DEFAULT_STEP: f64 = 1e-6;
pub const DEFAULT_REL_FLOOR: f64 = 1e-8;
/// Phase checks only keep bins whose amplitude exceeds this.
pub const PHASE_CHECK_AMPLITUDE: f64 = 1e-4;

/// Central-difference gradient with `h = step · max(1, ‖y‖∞)`.
pub fn finite_diff_grad<F>(loss: F, y: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::param(format!("step must be positive, got {step}")));
    }
    let h = step * y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut probe = y.to_vec();
    let mut grad = Vec::with_capacity(y.len());
    for k in 0..y.len() {
        probe[k] = y[k] + h;
        let plus = loss(&probe)?;
        probe[k] = y[k] - h;
        let minus = loss(&probe)?;
        probe[k] = y[k];
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::OracleEvaluation(format!(
                "non-finite loss while perturbing coordinate {k}"
            )));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    /// Sample with the largest relative error.
    pub argmax: usize,
    pub rel_errors: Vec<f64>,
    pub step: Option<f64>,
    pub excluded_bins: usize,
    pub exclusion_reason: Option<String>,
}

/// Per-sample relative error `|a - n| / max(rel_floor, |a|, |n|)`.
pub fn compare_grads(analytic: &[f64], numeric: &[f64], rel_floor: f64) -> Result<GradReport> {
    if analytic.len() != numeric.len() {
        return Err(Error::input(format!(
            "gradient lengths differ: {} vs {}",
            analytic.len(),
            numeric.len()
        )));
    }
    let mut report = GradReport {
        max_abs_error: 0.0,
        max_rel_error: 0.0,
        argmax: 0,
        rel_errors: Vec::with_capacity(analytic.len()),
        step: None,
        excluded_bins: 0,
        exclusion_reason: None,
    };
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let abs = (a - n).abs();
        let rel = abs / rel_floor.max(a.abs()).max(n.abs());
        report.max_abs_error = report.max_abs_error.max(abs);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.argmax = i;
        }
        report.rel_errors.push(rel);
    }
    Ok(report)
}

impl fmt::Display for GradReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "max_rel={:.3e} max_abs={:.3e} argmax={}",
            self.max_rel_error, self.max_abs_error, self.argmax
        )?;
        if let Some(step) = self.step {
            write!(f, " step={step:e}")?;
        }
        if let Some(reason) = &self.exclusion_reason {
            write!(f, " excluded={} ({reason})", self.excluded_bins)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Amplitude,
    Phase,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Term::Amplitude => "amplitude",
            Term::Phase => "phase",
        })
    }
}

/// Check one loss term of `op` at `y` against targets.
pub fn check_term(
    op: &AnalysisOperator,
    targets: &LossTargets,
    y: &Waveform,
    term: Term,
    step: f64,
    rel_floor: f64,
) -> Result<GradReport> {
    check_term_with(op, targets, y, term, step, rel_floor, |_| {})
}

fn check_term_with(
    op: &AnalysisOperator,
    targets: &LossTargets,
    y: &Waveform,
    term: Term,
    step: f64,
    rel_floor: f64,
    tamper: impl FnOnce(&mut [f64]),
) -> Result<GradReport> {
    let mut excluded = 0;
    let weight = match term {
        Term::Amplitude => Weight::Scalar(1.0),
        Term::Phase => {
            let mask = op.apply(y.samples())?.map(|z| {
                if z.norm() > PHASE_CHECK_AMPLITUDE {
                    1.0
                } else {
                    0.0
                }
            });
            excluded = mask.as_slice().iter().filter(|m| **m == 0.0).count();
            Weight::PerBin(mask)
        }
    };
    let weights = weight_for(op, term, weight);
    let eval = |samples: &[f64]| -> Result<f64> {
        let w = Waveform::new(samples.to_vec(), y.sample_rate())?;
        let b = match term {
            Term::Amplitude => amplitude_loss(&w, targets, op, &weights)?,
            Term::Phase => phase_loss(&w, targets, op, &weights)?,
        };
        Ok(b.total)
    };
    let mut analytic = match term {
        Term::Amplitude => amplitude_loss_grad(y, targets, op, &weights)?,
        Term::Phase => phase_loss_grad(y, targets, op, &weights)?,
    };
    tamper(&mut analytic);
    let numeric = finite_diff_grad(eval, y.samples(), step)?;
    let mut report = compare_grads(&analytic, &numeric, rel_floor)?;
    report.step = Some(step);
    if term == Term::Phase {
        report.excluded_bins = excluded;
        report.exclusion_reason = Some(format!("amplitude <= {PHASE_CHECK_AMPLITUDE:e}"));
    }
    Ok(report)
}

fn weight_for(op: &AnalysisOperator, term: Term, w: Weight) -> LossWeights {
    use crate::operator::Family;
    let mut weights = LossWeights::default();
    let slot = match (op.family(), term) {
        (Family::Stft, Term::Amplitude) => &mut weights.amp_stft,
        (Family::Stft, Term::Phase) => &mut weights.phase_stft,
        (Family::Cwt, Term::Amplitude) => &mut weights.amp_cwt,
        (Family::Cwt, Term::Phase) => &mut weights.phase_cwt,
    };
    *slot = w;
    weights
}

/// Settings for the standard gradient-check run over STFT and CWT operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub length: usize,
    pub sample_rate: f64,
    pub seeds: Vec<u64>,
    pub stft: StftParams,
    pub cwt_scale: FrequencyScale,
    pub cwt_count: usize,
    pub cwt_f_min: f64,
    pub cwt_f_max: f64,
    pub omega: f64,
    pub step: f64,
    pub rel_floor: f64,
    /// Targets come from `y + target_perturbation · u` with `u` uniform noise.
    pub target_perturbation: f64,
    pub amplitude_tolerance: f64,
    pub phase_tolerance: f64,
    /// Adds `1e-3` to one analytic gradient coordinate to exercise the detector.
    pub corrupt: bool,
}

impl SuiteConfig {
    /// STFT with frame and FFT equal to `length`, mel CWT with 25 scales
    /// from `fs/10` (raised if needed so every kernel fits) to Nyquist.
    pub fn for_length(length: usize, seeds: Vec<u64>) -> Self {
        let sample_rate: f64 = 16000.0;
        let omega = 6.0;
        let f_min =
            (sample_rate / 10.0).max(1.01 * lowest_fitting_frequency(length, sample_rate, omega));
        Self {
            length,
            sample_rate,
            seeds,
            stft: StftParams {
                frame_length: length,
                fft_size: length,
                hop: 1,
                window: Window::Hann,
            },
            cwt_scale: FrequencyScale::Mel,
            cwt_count: 25,
            cwt_f_min: f_min,
            cwt_f_max: sample_rate / 2.0,
            omega,
            step: DEFAULT_STEP,
            rel_floor: DEFAULT_REL_FLOOR,
            target_perturbation: 0.1,
            amplitude_tolerance: 1e-6,
            phase_tolerance: 1e-5,
            corrupt: false,
        }
    }

    pub fn operators(&self) -> Result<[(&'static str, AnalysisOperator); 2]> {
        let stft = AnalysisOperator::stft(self.stft, self.length, self.sample_rate)?;
        let grid = make_scale_grid(
            self.cwt_scale,
            self.cwt_count,
            self.cwt_f_min,
            self.cwt_f_max,
            self.sample_rate,
            self.omega,
        )?;
        let cwt = AnalysisOperator::cwt(&grid, self.length, self.omega)?;
        Ok([("stft", stft), ("cwt", cwt)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub operator: &'static str,
    pub term: Term,
    pub seed: u64,
    pub tolerance: f64,
    pub report: GradReport,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.report.max_rel_error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub cases: Vec<CaseReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(CaseReport::passed)
    }

    pub fn worst(&self, operator: &str, term: Term) -> Option<&CaseReport> {
        self.cases
            .iter()
            .filter(|c| c.operator == operator && c.term == term)
            .max_by(|a, b| a.report.max_rel_error.total_cmp(&b.report.max_rel_error))
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cases {
            writeln!(
                f,
                "{} {:<4} {:<9} seed={:<3} tol={:.0e} {}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.operator,
                c.term,
                c.seed,
                c.tolerance,
                c.report
            )?;
        }
        Ok(())
    }
}

/// Lowest Morlet center frequency whose truncated kernel fits in `length` samples.
pub fn lowest_fitting_frequency(length: usize, sample_rate: f64, omega: f64) -> f64 {
    let radius = (length.saturating_sub(1) / 2).max(1) as f64;
    omega * sample_rate * crate::operator::morlet_cutoff() / (2.0 * std::f64::consts::PI * radius)
}

/// Uniform noise in `[-1, 1)` from a seeded ChaCha stream.
pub fn random_waveform(length: usize, sample_rate: f64, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..length).map(|_| rng.random_range(-1.0..1.0)).collect();
    Waveform::new(samples, sample_rate).expect("finite noise")
}

/// Run every (operator, term, seed) case at a uniform-noise point `y`,
/// against targets analyzed from a perturbed copy of `y`.
///
/// The oracle cannot resolve loss differences below `ulp(E)`, so its error
/// floor is about `ulp(E) / 2h`. Near targets keep `E` small relative to
/// the gradient it is differentiated into.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let ops = cfg.operators()?;
    let mut cases = Vec::new();
    for &seed in &cfg.seeds {
        let y = random_waveform(cfg.length, cfg.sample_rate, 2 * seed);
        let noise = random_waveform(cfg.length, cfg.sample_rate, 2 * seed + 1);
        let reference = Waveform::new(
            y.samples()
                .iter()
                .zip(noise.samples())
                .map(|(a, b)| a + cfg.target_perturbation * b)
                .collect(),
            cfg.sample_rate,
        )?;
        for (name, op) in &ops {
            let targets = LossTargets::analyze(op, &reference)?;
            for term in [Term::Amplitude, Term::Phase] {
                let corrupt = cfg.corrupt;
                let report =
                    check_term_with(op, &targets, &y, term, cfg.step, cfg.rel_floor, |g| {
                        if corrupt {
                            g[0] += 1e-3;
                        }
                    })?;
                let tolerance = match term {
                    Term::Amplitude => cfg.amplitude_tolerance,
                    Term::Phase => cfg.phase_tolerance,
                };
                cases.push(CaseReport {
                    operator: name,
                    term,
                    seed,
                    tolerance,
                    report,
                });
            }
        }
    }
    Ok(SuiteReport { cases })
}
