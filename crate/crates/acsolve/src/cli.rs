//! `acsolve converge | simulate | diagnose`.
//!
//! Settings are merged as defaults < `--config` file < `--paper-scale`
//! preset < explicit flags, then validated in full before any computation.
//! Exit codes: 0 success, 2 usage error, 3 I/O error, 4 numerical blowup.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use acsolve_core::spectral::SineTransform;
use acsolve_core::stepper::simulate_with_snapshots;
use acsolve_core::{
    moment_diagnostics, DiagnosticsConfig, ModelParams, NoiseSource, RunConfig, SpectralField, StudyMode,
    Taming,
};
use clap::{Args, Parser, Subcommand};

use crate::config::ConfigFile;
use crate::csv::format_decimal;
use crate::{csv, driver, plot, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "acsolve",
    version,
    about = "Tamed exponential Euler solver and strong-convergence benchmark for the stochastic Allen-Cahn equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo strong-error study against a coupled fine reference
    Converge(ConvergeArgs),
    /// One sample path, written as grid values at evenly spaced snapshots
    Simulate(SimulateArgs),
    /// Norm statistics over many paths (blowup and moment checks)
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Cubic coefficient of the drift (must be negative)
    #[arg(long, allow_hyphen_values = true)]
    a3: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a0: Option<f64>,
    /// Final time T
    #[arg(long)]
    horizon: Option<f64>,
    /// Initial data A sin(pi x)
    #[arg(long, allow_hyphen_values = true)]
    amplitude: Option<f64>,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// joint (N = M), spatial (M = ref) or temporal (N = ref)
    #[arg(long, value_parser = parse_mode)]
    mode: Option<StudyMode>,
    /// Comma-separated ladder, each dividing --ref
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
    /// Reference resolution N_ref = M_ref
    #[arg(long = "ref")]
    reference: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 = one per core; output does not depend on it
    #[arg(long)]
    threads: Option<usize>,
    /// CSV destination (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG log-log plot destination
    #[arg(long)]
    plot: Option<PathBuf>,
    /// ref = 2048, samples = 1000
    #[arg(long)]
    paper_scale: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spectral modes N
    #[arg(long)]
    modes: Option<usize>,
    /// Time steps M
    #[arg(long)]
    steps: Option<usize>,
    /// Number of snapshots after the initial one
    #[arg(long)]
    snapshots: Option<usize>,
    /// Monte Carlo sample index of the path
    #[arg(long)]
    sample: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Deterministic run
    #[arg(long)]
    no_noise: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_noise: bool,
    /// Drop the taming denominator (divergence experiments)
    #[arg(long)]
    untamed: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

fn parse_mode(s: &str) -> Result<StudyMode, String> {
    s.parse().map_err(|e: acsolve_core::Error| e.to_string())
}

/// Every setting, unset where a layer does not provide it.
#[derive(Debug, Clone, Default, PartialEq)]
struct Settings {
    mode: Option<StudyMode>,
    resolutions: Option<Vec<usize>>,
    reference: Option<usize>,
    samples: Option<u64>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    plot: Option<PathBuf>,
    paper_scale: Option<bool>,
    modes: Option<usize>,
    steps: Option<usize>,
    snapshots: Option<usize>,
    sample: Option<u64>,
    no_noise: Option<bool>,
    untamed: Option<bool>,
    a3: Option<f64>,
    a2: Option<f64>,
    a1: Option<f64>,
    a0: Option<f64>,
    horizon: Option<f64>,
    amplitude: Option<f64>,
}

const MODEL_KEYS: &[&str] = &["a3", "a2", "a1", "a0", "horizon", "amplitude"];
const CONVERGE_KEYS: &[&str] = &[
    "mode", "resolutions", "ref", "samples", "seed", "threads", "out", "plot", "paper-scale",
];
const SIMULATE_KEYS: &[&str] = &["modes", "steps", "snapshots", "sample", "seed", "no-noise", "out"];
const DIAGNOSE_KEYS: &[&str] = &["modes", "steps", "samples", "seed", "no-noise", "untamed", "out"];

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Settings { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Settings {
    /// `self` where set, `lower` otherwise.
    fn over(self, lower: Settings) -> Settings {
        overlay!(
            self, lower, mode, resolutions, reference, samples, seed, threads, out, plot, paper_scale,
            modes, steps, snapshots, sample, no_noise, untamed, a3, a2, a1, a0, horizon, amplitude
        )
    }

    fn from_file(file: &ConfigFile, allowed: &[&str]) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        for (line, key, value) in &file.entries {
            if !allowed.contains(&key.as_str()) && !MODEL_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {line}: unknown key {key:?}")));
            }
            s.set(key, value)
                .map_err(|e| CliError::Usage(format!("config line {line}: {key}: {e}")))?;
        }
        Ok(s)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<Option<T>, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map(Some).map_err(|e| format!("cannot parse {v:?}: {e}"))
        }
        match key {
            "mode" => self.mode = Some(parse_mode(value)?),
            "resolutions" => {
                self.resolutions = Some(
                    value
                        .split(',')
                        .map(|r| r.trim().parse().map_err(|e| format!("cannot parse {r:?}: {e}")))
                        .collect::<Result<_, _>>()?,
                )
            }
            "ref" => self.reference = num(value)?,
            "samples" => self.samples = num(value)?,
            "seed" => self.seed = num(value)?,
            "threads" => self.threads = num(value)?,
            "out" => self.out = Some(value.into()),
            "plot" => self.plot = Some(value.into()),
            "paper-scale" => self.paper_scale = num(value)?,
            "modes" => self.modes = num(value)?,
            "steps" => self.steps = num(value)?,
            "snapshots" => self.snapshots = num(value)?,
            "sample" => self.sample = num(value)?,
            "no-noise" => self.no_noise = num(value)?,
            "untamed" => self.untamed = num(value)?,
            "a3" => self.a3 = num(value)?,
            "a2" => self.a2 = num(value)?,
            "a1" => self.a1 = num(value)?,
            "a0" => self.a0 = num(value)?,
            "horizon" => self.horizon = num(value)?,
            "amplitude" => self.amplitude = num(value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    fn model(&self) -> Result<ModelParams, CliError> {
        let initial = SpectralField::single_mode(1, 1, self.amplitude.unwrap_or(1.0) / std::f64::consts::SQRT_2)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        ModelParams::new(
            [
                self.a3.unwrap_or(-1.0),
                self.a2.unwrap_or(0.0),
                self.a1.unwrap_or(1.0),
                self.a0.unwrap_or(0.0),
            ],
            self.horizon.unwrap_or(1.0),
            initial,
        )
        .map_err(|e| CliError::Usage(e.to_string()))
    }
}

impl From<ModelArgs> for Settings {
    fn from(m: ModelArgs) -> Self {
        Settings {
            a3: m.a3,
            a2: m.a2,
            a1: m.a1,
            a0: m.a0,
            horizon: m.horizon,
            amplitude: m.amplitude,
            ..Settings::default()
        }
    }
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

/// Fully validated work order.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Converge {
        config: RunConfig,
        threads: usize,
        out: Option<PathBuf>,
        plot: Option<PathBuf>,
    },
    Simulate {
        params: ModelParams,
        n_modes: usize,
        n_steps: usize,
        snapshots: usize,
        noise: bool,
        seed: u64,
        sample: u64,
        out: Option<PathBuf>,
    },
    Diagnose {
        config: DiagnosticsConfig,
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliInvocation {
    pub subcommand: &'static str,
    pub config_path: Option<PathBuf>,
    pub job: Job,
}

const DEFAULT_SEED: u64 = 42;

fn positive<T: PartialOrd + Default + std::fmt::Display>(name: &str, v: T) -> Result<T, CliError> {
    if v > T::default() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

/// Parses `argv` (program name first) into a validated invocation.
pub fn parse_and_validate<I, T>(argv: I) -> Result<CliInvocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let load = |path: &Option<PathBuf>, keys| -> Result<Settings, CliError> {
        match path {
            Some(p) => Settings::from_file(&ConfigFile::load(p)?, keys),
            None => Ok(Settings::default()),
        }
    };
    match cli.command {
        Command::Converge(a) => {
            let file = load(&a.config, CONVERGE_KEYS)?;
            let flags = Settings {
                mode: a.mode,
                resolutions: a.resolutions,
                reference: a.reference,
                samples: a.samples,
                seed: a.seed,
                threads: a.threads,
                out: a.out,
                plot: a.plot,
                paper_scale: flag(a.paper_scale),
                ..a.model.into()
            };
            let merged = flags.clone().over(file);
            let preset = if merged.paper_scale == Some(true) {
                Settings {
                    reference: Some(2048),
                    samples: Some(1000),
                    ..Settings::default()
                }
            } else {
                Settings::default()
            };
            // explicit flags beat the preset, which beats the file
            let s = flags.over(preset).over(merged);
            let config = RunConfig {
                mode: s.mode.unwrap_or(StudyMode::Joint),
                resolutions: s.resolutions.clone().unwrap_or_else(|| vec![4, 8, 16, 32, 64, 128]),
                ref_resolution: s.reference.unwrap_or(1024),
                samples: s.samples.unwrap_or(200),
                master_seed: s.seed.unwrap_or(DEFAULT_SEED),
                params: s.model()?,
            };
            config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(CliInvocation {
                subcommand: "converge",
                config_path: a.config,
                job: Job::Converge {
                    config,
                    threads: s.threads.unwrap_or(0),
                    out: s.out,
                    plot: s.plot,
                },
            })
        }
        Command::Simulate(a) => {
            let file = load(&a.config, SIMULATE_KEYS)?;
            let s = Settings {
                modes: a.modes,
                steps: a.steps,
                snapshots: a.snapshots,
                sample: a.sample,
                seed: a.seed,
                no_noise: flag(a.no_noise),
                out: a.out,
                ..a.model.into()
            }
            .over(file);
            let n_steps = positive("steps", s.steps.unwrap_or(128))?;
            let snapshots = positive("snapshots", s.snapshots.unwrap_or(4))?;
            if snapshots > n_steps {
                return Err(CliError::Usage(format!(
                    "--snapshots {snapshots} exceeds --steps {n_steps}"
                )));
            }
            let sample = s.sample.unwrap_or(0);
            if sample >= acsolve_core::noise::KEY_INDEX_LIMIT {
                return Err(CliError::Usage(format!("--sample {sample} out of range")));
            }
            Ok(CliInvocation {
                subcommand: "simulate",
                config_path: a.config,
                job: Job::Simulate {
                    params: s.model()?,
                    n_modes: positive("modes", s.modes.unwrap_or(128))?,
                    n_steps,
                    snapshots,
                    noise: s.no_noise != Some(true),
                    seed: s.seed.unwrap_or(DEFAULT_SEED),
                    sample,
                    out: s.out,
                },
            })
        }
        Command::Diagnose(a) => {
            let file = load(&a.config, DIAGNOSE_KEYS)?;
            let s = Settings {
                modes: a.modes,
                steps: a.steps,
                samples: a.samples,
                seed: a.seed,
                no_noise: flag(a.no_noise),
                untamed: flag(a.untamed),
                out: a.out,
                ..a.model.into()
            }
            .over(file);
            let samples = positive("samples", s.samples.unwrap_or(100))?;
            if samples > acsolve_core::noise::KEY_INDEX_LIMIT {
                return Err(CliError::Usage(format!("--samples {samples} out of range")));
            }
            Ok(CliInvocation {
                subcommand: "diagnose",
                config_path: a.config,
                job: Job::Diagnose {
                    config: DiagnosticsConfig {
                        n_modes: positive("modes", s.modes.unwrap_or(64))?,
                        n_steps: positive("steps", s.steps.unwrap_or(4))?,
                        samples,
                        master_seed: s.seed.unwrap_or(DEFAULT_SEED),
                        params: s.model()?,
                        noise: s.no_noise != Some(true),
                        taming: if s.untamed == Some(true) { Taming::Untamed } else { Taming::Tamed },
                    },
                    out: s.out,
                },
            })
        }
    }
}

fn write_output(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// Runs a validated invocation. Progress and summaries go to `stderr`.
pub fn execute(inv: &CliInvocation, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &inv.job {
        Job::Converge {
            config,
            threads,
            out,
            plot: plot_path,
        } => {
            let started = Instant::now();
            let report = driver::run_study(config, *threads)?;
            for row in &report.rows {
                let _ = writeln!(
                    stderr,
                    "{:>6}  rms {:.6}  +- {:.6}",
                    row.resolution, row.rms_error, row.mc_std_error
                );
            }
            let _ = writeln!(
                stderr,
                "{} study, ref {}, {} samples: fitted slope {} ({:.1?})",
                config.mode.as_str(),
                config.ref_resolution,
                config.samples,
                report.fitted_slope().map_or("n/a".into(), |v| format!("{v:.4}")),
                started.elapsed()
            );
            write_output(&csv::render(&report), out.as_deref(), stdout)?;
            if let Some(p) = plot_path {
                let title = format!(
                    "{} strong error, ref {}, {} samples",
                    config.mode.as_str(),
                    config.ref_resolution,
                    config.samples
                );
                plot::emit_loglog_plot(&report, &title, p)?;
            }
            Ok(())
        }
        Job::Simulate {
            params,
            n_modes,
            n_steps,
            snapshots,
            noise,
            seed,
            sample,
            out,
        } => {
            let source = if *noise {
                NoiseSource::fresh(*seed, *sample, *n_modes, *n_steps, params.horizon())?
            } else {
                NoiseSource::Zero
            };
            let steps: Vec<usize> = (0..=*snapshots).map(|j| j * n_steps / snapshots).collect();
            let snaps = simulate_with_snapshots(params, *n_modes, *n_steps, &source, &steps)?;
            let grid = 4 * n_modes - 1;
            let mut transform = SineTransform::new(grid)?;
            let mut values = vec![0.0; grid];
            let mut text = String::from("time,x,u\n");
            for (t, field) in &snaps {
                transform.synthesize_into(field.coeffs(), &mut values)?;
                for (k, v) in values.iter().enumerate() {
                    text.push_str(&format!(
                        "{},{},{}\n",
                        format_decimal(*t),
                        format_decimal((k + 1) as f64 / (grid + 1) as f64),
                        format_decimal(*v)
                    ));
                }
            }
            write_output(&text, out.as_deref(), stdout)
        }
        Job::Diagnose { config, out } => {
            let d = moment_diagnostics(config)?;
            let mut text = String::from("quantity,max,mean,p99\n");
            for (name, m) in [("sup_norm", d.sup_norm), ("l2_norm", d.l2_norm)] {
                text.push_str(&format!(
                    "{name},{},{},{}\n",
                    format_decimal(m.max),
                    format_decimal(m.mean),
                    format_decimal(m.p99)
                ));
            }
            text.push_str(&format!("# paths={}\n# blowups={}\n", d.paths, d.blowups));
            text.push_str(&format!("# max_drift_norm={}\n", format_decimal(d.max_drift_norm)));
            text.push_str(&format!("# drift_bound={}\n", format_decimal(1.0 / d.tau)));
            text.push_str(&format!("# all_finite={}\n", d.all_finite));
            write_output(&text, out.as_deref(), stdout)?;
            if d.blowups > 0 {
                return Err(CliError::Blowup(format!("{} of {} paths blew up", d.blowups, d.paths)));
            }
            Ok(())
        }
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_and_validate(argv).and_then(|inv| execute(&inv, stdout, stderr));
    match result {
        Ok(()) => 0,
        Err(err @ CliError::Clap(_)) => {
            let code = err.exit_code();
            let CliError::Clap(e) = err else { unreachable!() };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "acsolve: {e}");
            e.exit_code()
        }
    }
}
