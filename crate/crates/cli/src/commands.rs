use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use spectro::fit::{fit_waveform, FitTrace};
use spectro::gradcheck::{lowest_fitting_frequency, run_suite, SuiteConfig};
use spectro::io::{
    export_matrix, load_config, read_wav, write_f32le, write_pgm, write_trace_csv, write_wav,
    MatrixFormat, RunConfig,
};
use spectro::loss::{combined_loss_with_bins, Analysis, LossTargets};
use spectro::parallel::{threads_from_env, with_threads};
use spectro::{forward, AnalysisOperator, Error, ErrorClass, Preset, Waveform};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "spectro",
    version,
    about = "STFT/CWT spectral losses: analysis, loss reports, gradient checks and waveform fitting"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TransformArg {
    Stft,
    Cwt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Stft,
    #[value(name = "stft+cwt")]
    StftCwt,
    Cwt,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Stft => Preset::Stft,
            PresetArg::StftCwt => Preset::StftCwt,
            PresetArg::Cwt => Preset::Cwt,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the amplitude spectrogram of a WAV file as a matrix and a PGM image
    Analyze {
        /// Run configuration (TOML); defaults apply when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Input WAV file
        #[arg(long = "in")]
        input: PathBuf,
        /// Output prefix; writes <prefix>.csv or <prefix>.f32 and <prefix>.pgm
        #[arg(long)]
        out: PathBuf,
        /// Which analysis operator to apply
        #[arg(long, value_enum)]
        transform: TransformArg,
    },
    /// Print the weighted STFT/CWT amplitude and phase loss between two waveforms
    Loss {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Reference waveform; its spectra are the targets
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Hypothesis waveform being scored
        #[arg(long)]
        hyp: PathBuf,
        /// Use one of the named weight presets instead of the config weights
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        /// Also export per-bin losses as <prefix>.{stft,cwt}.{amp,phase}.csv
        #[arg(long)]
        bins: Option<PathBuf>,
    },
    /// Compare analytic loss gradients with central finite differences
    Gradcheck {
        #[arg(long)]
        config: Option<PathBuf>,
        /// First seed; seeds seed..seed+count are run
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of seeds
        #[arg(long, default_value_t = 10)]
        count: u64,
        /// Signal length in samples
        #[arg(long, default_value_t = 128)]
        length: usize,
        /// Detector self-test: add 1e-3 to one analytic gradient coordinate
        #[arg(long)]
        corrupt_gradient: bool,
    },
    /// Fit a waveform to the spectra of a reference with Adam
    Fit {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Fitted WAV; <out>.f32 and <out>.trace.csv are written alongside
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        /// Override the configured iteration count
        #[arg(long)]
        iterations: Option<usize>,
        /// Override the configured learning rate
        #[arg(long)]
        lr: Option<f64>,
        /// Start from the reference itself (no noise)
        #[arg(long)]
        init_reference: bool,
    },
}

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Usage => EXIT_USAGE,
            ErrorClass::Data => EXIT_DATA,
            ErrorClass::Numerical => EXIT_NUMERICAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

pub fn run(cli: Cli) -> CmdResult {
    let threads = threads_from_env()?;
    with_threads(threads, move || dispatch(cli.command))?
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Analyze {
            config,
            input,
            out,
            transform,
        } => analyze(&load(config)?, &input, &out, transform),
        Command::Loss {
            config,
            reference,
            hyp,
            preset,
            bins,
        } => loss(load(config)?, &reference, &hyp, preset, bins.as_deref()),
        Command::Gradcheck {
            config,
            seed,
            count,
            length,
            corrupt_gradient,
        } => gradcheck(&load(config)?, seed, count, length, corrupt_gradient),
        Command::Fit {
            config,
            reference,
            out,
            preset,
            iterations,
            lr,
            init_reference,
        } => {
            let mut cfg = load(config)?;
            if let Some(p) = preset {
                cfg.set_preset(p.into());
            }
            if let Some(n) = iterations {
                cfg.fit.iterations = n;
            }
            if let Some(lr) = lr {
                cfg.fit.learning_rate = lr;
            }
            if init_reference {
                cfg.fit.init = spectro::io::config::InitKind::CorruptedReference;
                cfg.fit.sigma = 0.0;
            }
            fit(&cfg, &reference, &out)
        }
    }
}

fn load(path: Option<PathBuf>) -> Result<RunConfig, Failure> {
    Ok(match path {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn build_operator(
    cfg: &RunConfig,
    y: &Waveform,
    transform: TransformArg,
) -> spectro::Result<AnalysisOperator> {
    match transform {
        TransformArg::Stft => AnalysisOperator::stft(cfg.stft_params(), y.len(), y.sample_rate()),
        TransformArg::Cwt => cfg.cwt_params().build(y.len(), y.sample_rate()),
    }
}

fn analyze(cfg: &RunConfig, input: &Path, out: &Path, transform: TransformArg) -> CmdResult {
    let y = read_wav(input)?;
    let op = build_operator(cfg, &y, transform)?;
    let amp = forward(&op, &y)?.amplitude();
    let format = cfg.io.matrix_format;
    let matrix_path = with_suffix(out, &format!(".{}", format.extension()));
    export_matrix(&matrix_path, &amp, format)?;
    let image_path = with_suffix(out, ".pgm");
    write_pgm(&image_path, &amp, cfg.io.db_floor)?;
    println!(
        "{} scales x {} frames -> {}, {}",
        amp.rows(),
        amp.cols(),
        matrix_path.display(),
        image_path.display()
    );
    Ok(0)
}

fn loss(
    mut cfg: RunConfig,
    reference: &Path,
    hyp: &Path,
    preset: Option<PresetArg>,
    bins: Option<&Path>,
) -> CmdResult {
    if let Some(p) = preset {
        cfg.set_preset(p.into());
    }
    let r = read_wav(reference)?;
    let h = read_wav(hyp)?;
    if r.len() != h.len() {
        return Err(Failure {
            code: EXIT_DATA,
            message: format!(
                "length mismatch: ref has {} samples, hyp has {}",
                r.len(),
                h.len()
            ),
        });
    }
    let weights = cfg.loss_weights(r.len())?;
    let stft_on = !(weights.amp_stft.is_zero() && weights.phase_stft.is_zero());
    let cwt_on = !(weights.amp_cwt.is_zero() && weights.phase_cwt.is_zero());
    let stft = match stft_on {
        true => {
            let op = AnalysisOperator::stft(cfg.stft_params(), r.len(), r.sample_rate())?;
            let t = LossTargets::analyze(&op, &r)?;
            Some((op, t))
        }
        false => None,
    };
    let cwt = match cwt_on {
        true => {
            let op = cfg.cwt_params().build(r.len(), r.sample_rate())?;
            let t = LossTargets::analyze(&op, &r)?;
            Some((op, t))
        }
        false => None,
    };
    let breakdown = combined_loss_with_bins(
        &h,
        stft.as_ref().map(|(o, t)| Analysis::new(o, t)),
        cwt.as_ref().map(|(o, t)| Analysis::new(o, t)),
        &weights,
    )?;
    println!("{breakdown}");
    for (name, side, per_bin) in [
        ("stft", &stft, &breakdown.stft_bins),
        ("cwt", &cwt, &breakdown.cwt_bins),
    ] {
        let (Some((op, targets)), Some(per_bin)) = (side, per_bin) else {
            continue;
        };
        // Bins whose phase is defined on both sides, and their mean phase loss.
        let hyp_defined = forward(op, &h)?.phase_unit().defined;
        let (count, sum) = per_bin
            .phase
            .as_slice()
            .iter()
            .zip(
                hyp_defined
                    .as_slice()
                    .iter()
                    .zip(targets.phase().defined.as_slice()),
            )
            .filter(|(_, (a, b))| **a && **b)
            .fold((0usize, 0.0), |(n, s), (v, _)| (n + 1, s + v));
        let mean = if count > 0 { sum / count as f64 } else { 0.0 };
        println!("{name}: {count} phase-defined bins, mean per-bin phase loss {mean:.12}");
        if let Some(prefix) = bins {
            export_matrix(
                with_suffix(prefix, &format!(".{name}.amp.csv")),
                &per_bin.amplitude,
                MatrixFormat::Csv,
            )?;
            export_matrix(
                with_suffix(prefix, &format!(".{name}.phase.csv")),
                &per_bin.phase,
                MatrixFormat::Csv,
            )?;
        }
    }
    Ok(0)
}

fn gradcheck(cfg: &RunConfig, seed: u64, count: u64, length: usize, corrupt: bool) -> CmdResult {
    if count == 0 {
        return Err(Failure {
            code: EXIT_USAGE,
            message: "--count must be at least 1".into(),
        });
    }
    let mut suite = SuiteConfig::for_length(length, (seed..seed + count).collect());
    suite.sample_rate = cfg.io.sample_rate;
    suite.cwt_scale = cfg.cwt.scale;
    suite.cwt_count = cfg.cwt.count;
    suite.omega = cfg.cwt.omega;
    suite.cwt_f_min = cfg
        .cwt
        .f_min
        .max(1.01 * lowest_fitting_frequency(length, suite.sample_rate, suite.omega));
    suite.cwt_f_max = cfg.cwt.f_max.unwrap_or(suite.sample_rate / 2.0);
    suite.corrupt = corrupt;
    let report = run_suite(&suite)?;
    print!("{report}");
    let passed = report.passed();
    println!(
        "{} ({} cases)",
        if passed {
            "gradient check passed"
        } else {
            "gradient check FAILED"
        },
        report.cases.len()
    );
    if passed {
        Ok(0)
    } else {
        Err(Failure {
            code: EXIT_NUMERICAL,
            message: "analytic gradients exceed the finite-difference tolerance".into(),
        })
    }
}

fn summarize(trace: &FitTrace) -> String {
    let mut s = String::new();
    let first = trace.initial_total().unwrap_or(0.0);
    let _ = write!(
        s,
        "steps {} initial {:.6e} best {:.6e} at step {}",
        trace.records.last().map_or(0, |r| r.step),
        first,
        trace.best_total,
        trace.best_step
    );
    if first > 0.0 {
        let _ = write!(s, " ratio {:.6e}", trace.best_total / first);
    }
    s
}

fn fit(cfg: &RunConfig, reference: &Path, out: &Path) -> CmdResult {
    let r = read_wav(reference)?;
    let fit_cfg = cfg.fit_config(r.len())?;
    let trace_path = with_suffix(out, ".trace.csv");
    match fit_waveform(&r, &fit_cfg) {
        Ok(outcome) => {
            write_wav(out, &outcome.waveform, cfg.io.wav_format.into())?;
            write_f32le(with_suffix(out, ".f32"), outcome.waveform.samples())?;
            write_trace_csv(&trace_path, &outcome.trace)?;
            println!("{}", summarize(&outcome.trace));
            Ok(0)
        }
        Err(Error::FitDiverged {
            step,
            reason,
            trace,
        }) => {
            write_trace_csv(&trace_path, &trace)?;
            println!("{}", summarize(&trace));
            Err(Failure {
                code: EXIT_NUMERICAL,
                message: format!(
                    "fit diverged at step {step}: {reason}; partial trace in {}",
                    trace_path.display()
                ),
            })
        }
        Err(e) => Err(e.into()),
    }
}
