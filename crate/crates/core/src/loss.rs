//! Amplitude and phase spectral losses with analytic waveform gradients.
//!
//! Per bin, with `Y = W_{l,t} y`, `A = |Y|` and `p = Y / A`:
//!
//! ```text
//! E_A = ½ (Â - A)²                  ∂E_A/∂y = (A - Â) Re(p W^H)
//! E_P = 1 - cos(θ̂ - θ)              ∂E_P/∂y = sin(θ̂ - θ) Im(W^H / conj(Y))
//! ```
//!
//! Both gradients are real parts of `W^H u` for a per-bin coefficient `u`,
//! so one adjoint convolution per scale covers every term of an operator.
//! Bins with `A <= PHASE_FLOOR` contribute nothing to either gradient and
//! nothing to the phase loss.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::operator::{AnalysisOperator, Family};
use crate::transform::{forward, unit_or_zero, PhaseSpectrogram, Waveform, PHASE_FLOOR};

/// Fixed analysis of a reference waveform: `Â` and `exp(iθ̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTargets {
    amplitude: Matrix<f64>,
    phase: PhaseSpectrogram,
}

impl LossTargets {
    pub fn new(amplitude: Matrix<f64>, phase: PhaseSpectrogram) -> Result<Self> {
        if amplitude.shape() != phase.unit.shape() || amplitude.shape() != phase.defined.shape() {
            return Err(Error::input("target amplitude and phase shapes differ"));
        }
        if amplitude
            .as_slice()
            .iter()
            .any(|a| !(a.is_finite() && *a >= 0.0))
        {
            return Err(Error::input(
                "target amplitudes must be finite and non-negative",
            ));
        }
        let bad_phase = phase
            .unit
            .as_slice()
            .iter()
            .zip(phase.defined.as_slice())
            .any(|(z, &d)| d && (z.norm() - 1.0).abs() > 1e-9);
        if bad_phase {
            return Err(Error::input("defined target phases must have unit modulus"));
        }
        Ok(Self { amplitude, phase })
    }

    /// Targets from complex spectra `Ŷ`.
    pub fn from_complex(values: &Matrix<Complex64>) -> Self {
        Self {
            amplitude: values.map(|z| z.norm()),
            phase: PhaseSpectrogram {
                unit: values.map(|&z| unit_or_zero(z)),
                defined: values.map(|z| z.norm() > PHASE_FLOOR),
            },
        }
    }

    /// Analyze `reference` once with `op`.
    pub fn analyze(op: &AnalysisOperator, reference: &Waveform) -> Result<Self> {
        let spec = forward(op, reference)?;
        Ok(Self::from_complex(spec.values()))
    }

    pub fn amplitude(&self) -> &Matrix<f64> {
        &self.amplitude
    }

    pub fn phase(&self) -> &PhaseSpectrogram {
        &self.phase
    }

    pub fn shape(&self) -> (usize, usize) {
        self.amplitude.shape()
    }
}

/// A loss weight: one value for every bin, or a full `L × T'` array.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Scalar(f64),
    PerBin(Matrix<f64>),
}

impl Default for Weight {
    fn default() -> Self {
        Weight::Scalar(0.0)
    }
}

impl From<f64> for Weight {
    fn from(v: f64) -> Self {
        Weight::Scalar(v)
    }
}

impl Weight {
    pub fn at(&self, scale: usize, frame: usize) -> f64 {
        match self {
            Weight::Scalar(v) => *v,
            Weight::PerBin(m) => m[(scale, frame)],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Weight::Scalar(v) => *v == 0.0,
            Weight::PerBin(m) => m.as_slice().iter().all(|v| *v == 0.0),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            Weight::Scalar(v) => v.is_finite() && *v >= 0.0,
            Weight::PerBin(m) => m.as_slice().iter().all(|v| v.is_finite() && *v >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!(
                "weight `{name}` must be finite and >= 0"
            )))
        }
    }

    fn check_shape(&self, name: &str, shape: (usize, usize)) -> Result<()> {
        match self {
            Weight::PerBin(m) if m.shape() != shape => Err(Error::input(format!(
                "weight `{name}` has shape {:?}, expected {shape:?}",
                m.shape()
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Per-bin losses are summed.
    #[default]
    Sum,
    /// Each term is divided by its number of bins.
    Mean,
}

/// The weight triples of the three evaluated loss configurations. The STFT
/// phase term is always on, gated by the V/UV track when one is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Stft,
    StftCwt,
    Cwt,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Stft, Preset::StftCwt, Preset::Cwt];

    /// `(amp_stft, amp_cwt)`.
    pub fn amplitude_weights(self) -> (f64, f64) {
        match self {
            Preset::Stft => (1.0, 0.0),
            Preset::StftCwt => (0.5, 0.5),
            Preset::Cwt => (0.0, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Stft => "stft",
            Preset::StftCwt => "stft+cwt",
            Preset::Cwt => "cwt",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::param(format!(
                    "unknown preset `{s}` (expected stft, stft+cwt or cwt)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossWeights {
    pub amp_stft: Weight,
    pub phase_stft: Weight,
    pub amp_cwt: Weight,
    pub phase_cwt: Weight,
    /// Per-sample voiced (1) / unvoiced (0) track gating the STFT phase term.
    pub vuv: Option<Vec<f64>>,
    pub reduction: Reduction,
}

impl LossWeights {
    pub fn scalars(amp_stft: f64, phase_stft: f64, amp_cwt: f64, phase_cwt: f64) -> Self {
        Self {
            amp_stft: amp_stft.into(),
            phase_stft: phase_stft.into(),
            amp_cwt: amp_cwt.into(),
            phase_cwt: phase_cwt.into(),
            vuv: None,
            reduction: Reduction::Sum,
        }
    }

    pub fn preset(preset: Preset, vuv: Option<Vec<f64>>) -> Self {
        let (a_ft, a_wt) = preset.amplitude_weights();
        Self {
            vuv,
            ..Self::scalars(a_ft, 1.0, a_wt, 0.0)
        }
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.amp_stft.validate("amp_stft")?;
        self.phase_stft.validate("phase_stft")?;
        self.amp_cwt.validate("amp_cwt")?;
        self.phase_cwt.validate("phase_cwt")?;
        if let Some(v) = &self.vuv {
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::param("V/UV weights must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// `(amplitude, phase, apply V/UV)` for an operator family.
    fn for_family(&self, family: Family) -> (&Weight, &Weight, bool) {
        match family {
            Family::Stft => (&self.amp_stft, &self.phase_stft, true),
            Family::Cwt => (&self.amp_cwt, &self.phase_cwt, false),
        }
    }
}

/// Unweighted per-bin losses of one operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PerBinLosses {
    pub amplitude: Matrix<f64>,
    pub phase: Matrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub amp_stft: f64,
    pub phase_stft: f64,
    pub amp_cwt: f64,
    pub phase_cwt: f64,
    pub stft_bins: Option<PerBinLosses>,
    pub cwt_bins: Option<PerBinLosses>,
}

impl LossBreakdown {
    fn add_term(&mut self, family: Family, term: &TermOutput) {
        match family {
            Family::Stft => {
                self.amp_stft += term.amplitude;
                self.phase_stft += term.phase;
                if term.bins.is_some() {
                    self.stft_bins = term.bins.clone();
                }
            }
            Family::Cwt => {
                self.amp_cwt += term.amplitude;
                self.phase_cwt += term.phase;
                if term.bins.is_some() {
                    self.cwt_bins = term.bins.clone();
                }
            }
        }
        self.total = self.amp_stft + self.phase_stft + self.amp_cwt + self.phase_cwt;
    }

    /// The four terms in `amp_stft, phase_stft, amp_cwt, phase_cwt` order.
    pub fn terms(&self) -> [f64; 4] {
        [self.amp_stft, self.phase_stft, self.amp_cwt, self.phase_cwt]
    }
}

impl fmt::Display for LossBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "amp_stft   {:.12e}", self.amp_stft)?;
        writeln!(f, "phase_stft {:.12e}", self.phase_stft)?;
        writeln!(f, "amp_cwt    {:.12e}", self.amp_cwt)?;
        writeln!(f, "phase_cwt  {:.12e}", self.phase_cwt)?;
        write!(f, "total      {:.12e}", self.total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Amplitude,
    Phase,
    Both,
}

/// Neumaier summation; keeps the loss accurate enough for finite differences.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Default)]
struct TermOutput {
    amplitude: f64,
    phase: f64,
    grad: Option<Vec<f64>>,
    bins: Option<PerBinLosses>,
}

/// Effective per-bin weights of one operator after V/UV gating and reduction.
struct BinWeights<'a> {
    amp: Option<&'a Weight>,
    phase: Option<&'a Weight>,
    vuv: Option<&'a [f64]>,
    hop: usize,
    norm: f64,
}

impl BinWeights<'_> {
    fn amp(&self, l: usize, j: usize) -> f64 {
        self.amp.map_or(0.0, |w| w.at(l, j) * self.norm)
    }

    fn phase(&self, l: usize, j: usize) -> f64 {
        self.phase.map_or(0.0, |w| {
            let gate = self.vuv.map_or(1.0, |v| v[j * self.hop]);
            w.at(l, j) * gate * self.norm
        })
    }
}

fn bin_weights<'a>(
    op: &AnalysisOperator,
    targets: &LossTargets,
    weights: &'a LossWeights,
    part: Part,
) -> Result<BinWeights<'a>> {
    weights.validate()?;
    let shape = op.output_shape();
    if targets.shape() != shape {
        return Err(Error::input(format!(
            "targets have shape {:?} but the operator produces {shape:?}",
            targets.shape()
        )));
    }
    let (amp, phase, gated) = weights.for_family(op.family());
    amp.check_shape("amplitude", shape)?;
    phase.check_shape("phase", shape)?;
    let vuv = match (&weights.vuv, gated) {
        (Some(v), true) => {
            if v.len() != op.signal_length() {
                return Err(Error::input(format!(
                    "V/UV track has {} samples, expected {}",
                    v.len(),
                    op.signal_length()
                )));
            }
            Some(v.as_slice())
        }
        _ => None,
    };
    let use_amp = matches!(part, Part::Amplitude | Part::Both) && !amp.is_zero();
    let use_phase = matches!(part, Part::Phase | Part::Both) && !phase.is_zero();
    let norm = match weights.reduction {
        Reduction::Sum => 1.0,
        Reduction::Mean => 1.0 / (shape.0 * shape.1) as f64,
    };
    Ok(BinWeights {
        amp: use_amp.then_some(amp),
        phase: use_phase.then_some(phase),
        vuv,
        hop: op.hop(),
        norm,
    })
}

fn evaluate_term(
    op: &AnalysisOperator,
    targets: &LossTargets,
    y: &Waveform,
    weights: &LossWeights,
    part: Part,
    want_grad: bool,
    want_bins: bool,
) -> Result<TermOutput> {
    let bw = bin_weights(op, targets, weights, part)?;
    if bw.amp.is_none() && bw.phase.is_none() {
        return Ok(TermOutput {
            grad: want_grad.then(|| vec![0.0; op.signal_length()]),
            ..TermOutput::default()
        });
    }
    let spec = op.apply(y.samples())?;
    let (rows, cols) = spec.shape();
    let mut out = TermOutput::default();
    let mut coeffs = Matrix::filled(rows, cols, Complex64::new(0.0, 0.0));
    let mut bins = want_bins.then(|| PerBinLosses {
        amplitude: Matrix::filled(rows, cols, 0.0),
        phase: Matrix::filled(rows, cols, 0.0),
    });
    let t_amp = targets.amplitude();
    let t_phase = targets.phase();
    let mut amp_sum = CompensatedSum::default();
    let mut phase_sum = CompensatedSum::default();
    for l in 0..rows {
        for j in 0..cols {
            let z = spec[(l, j)];
            let a = z.norm();
            let defined = a > PHASE_FLOOR;
            let unit = if defined {
                z / a
            } else {
                Complex64::new(0.0, 0.0)
            };
            let mut u = Complex64::new(0.0, 0.0);

            let wa = bw.amp(l, j);
            if bw.amp.is_some() {
                let diff = a - t_amp[(l, j)];
                let e = 0.5 * diff * diff;
                amp_sum.add(wa * e);
                if let Some(b) = bins.as_mut() {
                    b.amplitude[(l, j)] = e;
                }
                u += unit * (wa * diff);
            }

            let wp = bw.phase(l, j);
            if bw.phase.is_some() && defined && t_phase.defined[(l, j)] {
                // d = exp(i(θ̂ - θ)); 1 - cos(θ̂ - θ) = |û - u|² / 2 without cancellation
                let target = t_phase.unit[(l, j)];
                let d = target * unit.conj();
                let e = (0.5 * (target - unit).norm_sqr()).min(2.0);
                phase_sum.add(wp * e);
                if let Some(b) = bins.as_mut() {
                    b.phase[(l, j)] = e;
                }
                // sin(θ̂ - θ) Im(conj(w)/conj(Y)) = Re(conj(w) · (-i sin / conj(Y)))
                u += Complex64::new(0.0, -wp * d.im) / z.conj();
            }
            coeffs[(l, j)] = u;
        }
    }
    out.amplitude = amp_sum.value();
    out.phase = phase_sum.value();
    if want_grad {
        out.grad = Some(op.adjoint_real(&coeffs)?);
    }
    out.bins = bins;
    Ok(out)
}

fn single_term(
    y: &Waveform,
    targets: &LossTargets,
    op: &AnalysisOperator,
    weights: &LossWeights,
    part: Part,
    want_grad: bool,
) -> Result<(LossBreakdown, Option<Vec<f64>>)> {
    let term = evaluate_term(op, targets, y, weights, part, want_grad, false)?;
    let mut breakdown = LossBreakdown::default();
    breakdown.add_term(op.family(), &term);
    Ok((breakdown, term.grad))
}

/// Weighted amplitude loss of `op`'s family.
pub fn amplitude_loss(
    y: &Waveform,
    targets: &LossTargets,
    op: &AnalysisOperator,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    single_term(y, targets, op, weights, Part::Amplitude, false).map(|r| r.0)
}

pub fn amplitude_loss_grad(
    y: &Waveform,
    targets: &LossTargets,
    op: &AnalysisOperator,
    weights: &LossWeights,
) -> Result<Vec<f64>> {
    single_term(y, targets, op, weights, Part::Amplitude, true)
        .map(|r| r.1.expect("gradient requested"))
}

/// Weighted phase loss of `op`'s family.
pub fn phase_loss(
    y: &Waveform,
    targets: &LossTargets,
    op: &AnalysisOperator,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    single_term(y, targets, op, weights, Part::Phase, false).map(|r| r.0)
}

pub fn phase_loss_grad(
    y: &Waveform,
    targets: &LossTargets,
    op: &AnalysisOperator,
    weights: &LossWeights,
) -> Result<Vec<f64>> {
    single_term(y, targets, op, weights, Part::Phase, true)
        .map(|r| r.1.expect("gradient requested"))
}

/// An operator paired with the targets it is compared against.
#[derive(Debug, Clone, Copy)]
pub struct Analysis<'a> {
    pub op: &'a AnalysisOperator,
    pub targets: &'a LossTargets,
}

impl<'a> Analysis<'a> {
    pub fn new(op: &'a AnalysisOperator, targets: &'a LossTargets) -> Self {
        Self { op, targets }
    }
}

/// The weighted sum of STFT and CWT amplitude and phase losses, and its
/// gradient. A side whose two weights are zero is skipped and may be `None`.
pub fn combined_loss_and_grad(
    y: &Waveform,
    stft: Option<Analysis<'_>>,
    cwt: Option<Analysis<'_>>,
    weights: &LossWeights,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let (breakdown, grad) = combined(y, stft, cwt, weights, true, false)?;
    Ok((breakdown, grad.expect("gradient requested")))
}

/// As [`combined_loss_and_grad`] without the gradient, keeping per-bin losses.
pub fn combined_loss_with_bins(
    y: &Waveform,
    stft: Option<Analysis<'_>>,
    cwt: Option<Analysis<'_>>,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    combined(y, stft, cwt, weights, false, true).map(|r| r.0)
}

fn combined(
    y: &Waveform,
    stft: Option<Analysis<'_>>,
    cwt: Option<Analysis<'_>>,
    weights: &LossWeights,
    want_grad: bool,
    want_bins: bool,
) -> Result<(LossBreakdown, Option<Vec<f64>>)> {
    weights.validate()?;
    let mut breakdown = LossBreakdown::default();
    let mut grad = want_grad.then(|| vec![0.0; y.len()]);
    let sides = [
        (Family::Stft, stft, &weights.amp_stft, &weights.phase_stft),
        (Family::Cwt, cwt, &weights.amp_cwt, &weights.phase_cwt),
    ];
    for (family, analysis, amp, phase) in sides {
        if amp.is_zero() && phase.is_zero() {
            continue;
        }
        let Some(Analysis { op, targets }) = analysis else {
            return Err(Error::input(format!(
                "{family:?} weights are non-zero but no {family:?} operator was given"
            )));
        };
        if op.family() != family {
            return Err(Error::input(format!(
                "operator passed as {family:?} belongs to the {:?} family",
                op.family()
            )));
        }
        let term = evaluate_term(op, targets, y, weights, Part::Both, want_grad, want_bins)?;
        if let (Some(g), Some(tg)) = (grad.as_mut(), term.grad.as_ref()) {
            g.iter_mut().zip(tg).for_each(|(a, b)| *a += b);
        }
        breakdown.add_term(family, &term);
    }
    Ok((breakdown, grad))
}

/// Literal dense-matrix realization of the losses and gradients. Each bin's
/// gradient is accumulated row by row from the closed-form derivative, with
/// no adjoint convolution. Only for signals up to the dense limit.
pub mod dense {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    pub struct DenseEvaluation {
        pub amplitude: f64,
        pub phase: f64,
        pub grad: Vec<f64>,
    }

    /// Amplitude and phase losses of one operator, weighted as in the fast path.
    pub fn loss_and_grad(
        op: &AnalysisOperator,
        targets: &LossTargets,
        y: &Waveform,
        weights: &LossWeights,
    ) -> Result<DenseEvaluation> {
        let bw = bin_weights(op, targets, weights, Part::Both)?;
        let samples = y.samples();
        let mut out = DenseEvaluation {
            amplitude: 0.0,
            phase: 0.0,
            grad: vec![0.0; samples.len()],
        };
        for l in 0..op.scale_count() {
            let block = op.dense_block(l)?;
            for (j, row) in block.iter_rows().enumerate() {
                let z: Complex64 = row.iter().zip(samples).map(|(w, &v)| w * v).sum();
                let a = (z.conj() * z).re.sqrt();
                let defined = a > PHASE_FLOOR;
                if bw.amp.is_some() {
                    let target = targets.amplitude()[(l, j)];
                    let wa = bw.amp(l, j);
                    out.amplitude += wa * 0.5 * (target - a).powi(2);
                    if defined {
                        let e = z / a;
                        for (g, w) in out.grad.iter_mut().zip(row) {
                            *g += wa * (a - target) * (e * w.conj()).re;
                        }
                    }
                }
                if bw.phase.is_some() && defined && targets.phase().defined[(l, j)] {
                    let wp = bw.phase(l, j);
                    let theta = z.arg();
                    let theta_hat = targets.phase().unit[(l, j)].arg();
                    out.phase += wp * (1.0 - (theta_hat - theta).cos());
                    let s = (theta_hat - theta).sin();
                    for (g, w) in out.grad.iter_mut().zip(row) {
                        *g += wp * s * (w.conj() / z.conj()).im;
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Kernel;

    fn identity_op() -> AnalysisOperator {
        AnalysisOperator::from_kernels(vec![Kernel::new(vec![Complex64::new(1.0, 0.0)], 0)], 1, 1)
            .unwrap()
    }

    #[test]
    fn single_bin_amplitude_loss() {
        let op = identity_op();
        let y = Waveform::new(vec![5.0], 1.0).unwrap();
        let targets =
            LossTargets::from_complex(&Matrix::from_vec(1, 1, vec![Complex64::new(2.0, 0.0)]));
        let w = LossWeights::scalars(0.0, 0.0, 1.0, 0.0);
        let b = amplitude_loss(&y, &targets, &op, &w).unwrap();
        assert_eq!(b.amp_cwt, 4.5);
        assert_eq!(b.total, 4.5);
        let g = amplitude_loss_grad(&y, &targets, &op, &w).unwrap();
        assert_eq!(g, vec![3.0]);
    }

    #[test]
    fn phase_loss_special_angles() {
        let op = identity_op();
        let w = LossWeights::scalars(0.0, 0.0, 0.0, 1.0);
        for (target, expected) in [
            (Complex64::new(1.0, 0.0), 0.0),
            (Complex64::new(-1.0, 0.0), 2.0),
            (Complex64::new(0.0, 1.0), 1.0),
        ] {
            let y = Waveform::new(vec![0.7], 1.0).unwrap();
            let targets = LossTargets::from_complex(&Matrix::from_vec(1, 1, vec![target]));
            let b = phase_loss(&y, &targets, &op, &w).unwrap();
            assert!((b.phase_cwt - expected).abs() < 1e-15, "{target}");
            let g = phase_loss_grad(&y, &targets, &op, &w).unwrap();
            // real signal through a real kernel: the phase can only flip, so gradient 0
            assert!(g[0].abs() < 1e-15);
        }
    }

    #[test]
    fn zero_amplitude_bin_is_excluded_from_phase_and_gradient() {
        let op = identity_op();
        let y = Waveform::new(vec![0.0], 1.0).unwrap();
        let targets =
            LossTargets::from_complex(&Matrix::from_vec(1, 1, vec![Complex64::new(2.0, 0.0)]));
        let w = LossWeights::scalars(0.0, 0.0, 1.0, 1.0);
        let (b, g) =
            combined_loss_and_grad(&y, None, Some(Analysis::new(&op, &targets)), &w).unwrap();
        assert_eq!(b.amp_cwt, 2.0);
        assert_eq!(b.phase_cwt, 0.0);
        assert_eq!(g, vec![0.0]);
    }

    #[test]
    fn shape_mismatch_is_invalid_input() {
        let op = identity_op();
        let y = Waveform::new(vec![1.0], 1.0).unwrap();
        let targets = LossTargets::from_complex(&Matrix::filled(2, 1, Complex64::new(1.0, 0.0)));
        let w = LossWeights::scalars(0.0, 0.0, 1.0, 0.0);
        assert!(matches!(
            amplitude_loss(&y, &targets, &op, &w),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn missing_operator_for_weighted_side() {
        let y = Waveform::new(vec![1.0], 1.0).unwrap();
        let w = LossWeights::scalars(1.0, 0.0, 0.0, 0.0);
        assert!(combined_loss_and_grad(&y, None, None, &w).is_err());
        let zero = LossWeights::scalars(0.0, 0.0, 0.0, 0.0);
        let (b, g) = combined_loss_and_grad(&y, None, None, &zero).unwrap();
        assert_eq!(b.total, 0.0);
        assert_eq!(g, vec![0.0]);
    }

    #[test]
    fn negative_weight_rejected() {
        let op = identity_op();
        let y = Waveform::new(vec![1.0], 1.0).unwrap();
        let targets = LossTargets::analyze(&op, &y).unwrap();
        let w = LossWeights::scalars(0.0, 0.0, -1.0, 0.0);
        assert!(matches!(
            amplitude_loss(&y, &targets, &op, &w),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn presets_match_table() {
        let w = LossWeights::preset(Preset::StftCwt, None);
        assert_eq!(w.amp_stft, Weight::Scalar(0.5));
        assert_eq!(w.amp_cwt, Weight::Scalar(0.5));
        assert_eq!(w.phase_stft, Weight::Scalar(1.0));
        assert_eq!(w.phase_cwt, Weight::Scalar(0.0));
        assert_eq!("stft+cwt".parse::<Preset>().unwrap(), Preset::StftCwt);
        assert!("wt".parse::<Preset>().is_err());
    }

    #[test]
    fn target_validation() {
        let amp = Matrix::from_vec(1, 1, vec![-1.0]);
        let phase = PhaseSpectrogram {
            unit: Matrix::from_vec(1, 1, vec![Complex64::new(1.0, 0.0)]),
            defined: Matrix::from_vec(1, 1, vec![true]),
        };
        assert!(LossTargets::new(amp, phase.clone()).is_err());
        let bad_phase = PhaseSpectrogram {
            unit: Matrix::from_vec(1, 1, vec![Complex64::new(2.0, 0.0)]),
            ..phase
        };
        assert!(LossTargets::new(Matrix::from_vec(1, 1, vec![1.0]), bad_phase).is_err());
    }
}
