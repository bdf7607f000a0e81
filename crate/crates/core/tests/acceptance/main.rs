//! Acceptance suite: one PASS/FAIL line per criterion.

#[path = "../common/mod.rs"]
mod common;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use manifest::*;
use spectro::fit::fit_waveform;
use spectro::gradcheck::{run_suite, SuiteConfig, Term};
use spectro::loss::{combined_loss_with_bins, dense, Analysis};
use spectro::operator::Family;
use spectro::parallel::with_threads;
use spectro::transform::PHASE_FLOOR;
use spectro::{
    combined_loss_and_grad, forward, forward_dense, make_scale_grid, AdamParams, AnalysisOperator,
    CwtParams, FitConfig, FrequencyScale, InitMode, LossTargets, LossWeights, Preset, Waveform,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn gradients(term: Term, tol: f64) -> Outcome {
    let cfg = SuiteConfig::for_length(GRAD_LENGTH, (0..GRAD_SEEDS).collect());
    let report = run_suite(&cfg).expect("gradient suite");
    let mut passed = true;
    let mut parts = Vec::new();
    for op in ["stft", "cwt"] {
        let worst = report.worst(op, term).expect("cases ran");
        let err = worst.report.max_rel_error;
        passed &= err <= tol;
        parts.push(format!("{op} max_rel={err:.3e} (seed {})", worst.seed));
    }
    Outcome {
        passed,
        detail: format!(
            "{} tol={tol:e} seeds={GRAD_SEEDS} T={GRAD_LENGTH}",
            parts.join(" ")
        ),
    }
}

fn oracle() -> Outcome {
    let weights = LossWeights::scalars(1.0, 1.0, 1.0, 1.0);
    let mut worst = [0.0f64; 3];
    for t in ORACLE_LENGTHS {
        let [(_, stft), (_, cwt)] = operators(t);
        for seed in 0..ORACLE_SEEDS {
            let y = noise(t, 2 * seed);
            let reference = perturbed(&y, 2 * seed + 1);
            let mut dense_grad = vec![0.0; t];
            let mut dense_terms = [0.0; 4];
            for (i, op) in [&stft, &cwt].into_iter().enumerate() {
                let f = forward(op, &y).unwrap();
                let d = forward_dense(op, &y).unwrap();
                worst[0] = worst[0].max(frobenius_rel(f.values(), d.values()));
                let targets = LossTargets::analyze(op, &reference).unwrap();
                let e = dense::loss_and_grad(op, &targets, &y, &weights).unwrap();
                dense_terms[2 * i] = e.amplitude;
                dense_terms[2 * i + 1] = e.phase;
                dense_grad
                    .iter_mut()
                    .zip(&e.grad)
                    .for_each(|(a, b)| *a += b);
            }
            let ts = LossTargets::analyze(&stft, &reference).unwrap();
            let tc = LossTargets::analyze(&cwt, &reference).unwrap();
            let (b, g) = combined_loss_and_grad(
                &y,
                Some(Analysis::new(&stft, &ts)),
                Some(Analysis::new(&cwt, &tc)),
                &weights,
            )
            .unwrap();
            for (got, want) in b.terms().iter().zip(dense_terms) {
                worst[1] = worst[1].max(scalar_rel(*got, want));
            }
            worst[2] = worst[2].max(vec_rel(&g, &dense_grad));
        }
    }
    Outcome {
        passed: worst.iter().all(|e| *e <= ORACLE_TOL),
        detail: format!(
            "forward={:.3e} loss={:.3e} grad={:.3e} tol={ORACLE_TOL:e} T={ORACLE_LENGTHS:?}",
            worst[0], worst[1], worst[2]
        ),
    }
}

fn phase_bins(op: &AnalysisOperator, targets: &LossTargets, y: &Waveform) -> Vec<f64> {
    let a = Some(Analysis::new(op, targets));
    let b = match op.family() {
        Family::Stft => {
            combined_loss_with_bins(y, a, None, &LossWeights::scalars(0.0, 1.0, 0.0, 0.0))
        }
        Family::Cwt => {
            combined_loss_with_bins(y, None, a, &LossWeights::scalars(0.0, 0.0, 0.0, 1.0))
        }
    }
    .unwrap();
    b.stft_bins.or(b.cwt_bins).unwrap().phase.into_vec()
}

fn scaled(y: &Waveform, c: f64) -> Waveform {
    Waveform::new(y.samples().iter().map(|v| c * v).collect(), y.sample_rate()).unwrap()
}

fn phase_properties() -> Outcome {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut at_match, mut anti_err, mut drift) = (0.0f64, 0.0f64, 0.0f64);
    for (_, op) in operators(PHASE_LENGTH) {
        for seed in 0..PHASE_SEEDS {
            let y = noise(PHASE_LENGTH, 100 + seed);
            let other = LossTargets::analyze(&op, &noise(PHASE_LENGTH, 200 + seed)).unwrap();
            let own = LossTargets::analyze(&op, &y).unwrap();
            let base = phase_bins(&op, &other, &y);
            for v in &base {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
            for c in PHASE_SCALES {
                for (a, b) in base.iter().zip(phase_bins(&op, &other, &scaled(&y, c))) {
                    drift = drift.max((a - b).abs());
                }
            }
            at_match = phase_bins(&op, &own, &y)
                .iter()
                .fold(at_match, |m, v| m.max(*v));
            let amp = forward(&op, &y).unwrap().amplitude();
            for (v, a) in phase_bins(&op, &own, &scaled(&y, -1.0))
                .iter()
                .zip(amp.as_slice())
            {
                if *a > PHASE_FLOOR {
                    anti_err = anti_err.max((v - 2.0).abs());
                }
            }
        }
    }
    let passed = lo >= -PHASE_RANGE_SLACK
        && hi <= 2.0 + PHASE_RANGE_SLACK
        && at_match <= PHASE_RANGE_SLACK
        && anti_err <= PHASE_RANGE_SLACK
        && drift <= PHASE_INVARIANCE_TOL;
    Outcome {
        passed,
        detail: format!(
            "range=[{lo:.3e}, {hi:.6}] match_max={at_match:.3e} antiphase_err={anti_err:.3e} \
             scale_drift={drift:.3e} tol={PHASE_INVARIANCE_TOL:e}"
        ),
    }
}

fn tone_localization() -> Outcome {
    let y = tone(TONE_HZ, TONE_LENGTH);
    let mut passed = true;
    let mut parts = Vec::new();
    for scale in [
        FrequencyScale::Linear,
        FrequencyScale::Mel,
        FrequencyScale::Log,
    ] {
        let grid = make_scale_grid(scale, TONE_GRID_SIZE, TONE_F_MIN, TONE_F_MAX, FS, 6.0).unwrap();
        let op = AnalysisOperator::cwt(&grid, TONE_LENGTH, 6.0).unwrap();
        let amp = forward(&op, &y).unwrap().amplitude();
        let avg: Vec<f64> = amp.iter_rows().map(|r| r.iter().sum::<f64>()).collect();
        let peak = (0..avg.len())
            .max_by(|a, b| avg[*a].total_cmp(&avg[*b]))
            .unwrap();
        let want = grid.nearest(TONE_HZ);
        passed &= peak == want;
        parts.push(format!(
            "{scale}: peak {peak} ({:.1} Hz) nearest {want}",
            grid.center_frequencies()[peak]
        ));
    }
    Outcome {
        passed,
        detail: format!("{} L={TONE_GRID_SIZE}", parts.join(", ")),
    }
}

fn fitting() -> Outcome {
    let reference = two_harmonic();
    let mut passed = true;
    let mut parts = Vec::new();
    for preset in [Preset::Stft, Preset::StftCwt, Preset::Cwt] {
        let cfg = FitConfig {
            iterations: FIT_ITERATIONS,
            adam: AdamParams {
                learning_rate: FIT_LEARNING_RATE,
                ..AdamParams::default()
            },
            init: InitMode::Gaussian {
                sigma: FIT_INIT_SIGMA,
            },
            weights: LossWeights::preset(preset, None),
            cwt: Some(CwtParams {
                f_min: FIT_CWT_F_MIN,
                ..CwtParams::default()
            }),
            seed: FIT_SEED,
            log_every: FIT_ITERATIONS,
            ..FitConfig::default()
        };
        let out = fit_waveform(&reference, &cfg).expect("fit");
        let first = out.trace.records[0].loss.terms();
        let last = out.trace.records.last().unwrap().loss.terms();
        let ratio = out.trace.best_total / out.trace.initial_total().unwrap();
        passed &= ratio <= FIT_RATIO_TOL;
        let term = |i: usize| {
            if first[i] > 0.0 {
                format!("{:.3e}", last[i] / first[i])
            } else {
                "-".into()
            }
        };
        let recorded = FIT_MEASURED
            .iter()
            .find(|(name, _)| *name == preset.name())
            .map_or(f64::NAN, |m| m.1);
        parts.push(format!(
            "{}: ratio={ratio:.4e} recorded={recorded} (amp_stft {} phase_stft {} amp_cwt {})",
            preset.name(),
            term(0),
            term(1),
            term(2)
        ));
    }
    Outcome {
        passed,
        detail: format!(
            "{} tol={FIT_RATIO_TOL:e} steps={FIT_ITERATIONS}",
            parts.join("; ")
        ),
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 6] = [
    (1, "amplitude gradient fidelity", || {
        gradients(Term::Amplitude, AMPLITUDE_GRAD_TOL)
    }),
    (2, "phase gradient fidelity", || {
        gradients(Term::Phase, PHASE_GRAD_TOL)
    }),
    (3, "dense oracle equivalence", oracle),
    (4, "phase loss properties", phase_properties),
    (5, "1 kHz scale localization", tone_localization),
    (6, "fitting convergence", fitting),
];

fn line(id: u32, name: &str, o: &Outcome) -> String {
    let status = if o.passed { "PASS" } else { "FAIL" };
    format!("{status} {id} {name}: {}", o.detail)
}

fn run_all(print: bool) -> (Vec<String>, Vec<u32>) {
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for (id, name, f) in CRITERIA {
        let start = Instant::now();
        let o = f();
        let l = line(id, name, &o);
        if print {
            println!("{l} [{:.1}s]", start.elapsed().as_secs_f64());
        }
        if !o.passed {
            failed.push(id);
        }
        lines.push(l);
    }
    (lines, failed)
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored; a filter
    // argument other than "acceptance" skips the suite.
    let filtered_out = std::env::args()
        .skip(1)
        .any(|a| !a.starts_with('-') && !"acceptance".contains(a.as_str()));
    if filtered_out {
        return ExitCode::SUCCESS;
    }
    let (first, mut failed) = with_threads(1, || run_all(true)).expect("thread pool");
    let (second, _) = with_threads(1, || run_all(false)).expect("thread pool");
    let identical = first == second;
    let o = Outcome {
        passed: identical,
        detail: format!(
            "criteria 1-6 reports {} across two single-threaded runs",
            if identical { "identical" } else { "differ" }
        ),
    };
    println!("{}", line(7, "determinism", &o));
    if !identical {
        failed.push(7);
    }
    let unexpected: Vec<u32> = failed
        .iter()
        .copied()
        .filter(|id| !KNOWN_RED.contains(id))
        .collect();
    for id in failed.iter().filter(|id| KNOWN_RED.contains(id)) {
        println!("note: criterion {id} is listed as known red in the acceptance manifest");
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
