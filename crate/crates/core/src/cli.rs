//! Command-line front end.
//!
//! Exit codes: 0 success, 2 unreadable or malformed input, 3 invalid
//! parameters, 4 reconstruction plan does not fit the decomposition,
//! 5 internal failure.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde_json::json;

use crate::baseline::{fir_lowpass, moving_average, welch_psd, FirSpec, PsdSpec, Taper};
use crate::eemd::{eemd, EemdConfig, EnsembleResult};
use crate::emd::{emd, Decomposition, EmdConfig};
use crate::error::Error;
use crate::metrics::{evaluate, DenoiseReport};
use crate::reconstruct::{denoise, Preset, ReconstructionPlan};
use crate::series::{TimeWindow, UniformSeries};
use crate::synth::{make_benchmark, trajectory, NoiseModel, SyntheticSpec};
use crate::threshold::Modality;

pub const EXIT_PARSE: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_PLAN: u8 = 4;
pub const EXIT_INTERNAL: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn parse(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) => EXIT_VALIDATION,
            Error::PlanMismatch { .. } => EXIT_PLAN,
            Error::InvalidState(_) => EXIT_INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "eemd-denoise",
    version,
    about = "EEMD-based denoising of sampled force records"
)]
pub struct Cli {
    /// Maximum number of worker threads for ensemble runs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a series into IMFs and a residue.
    Decompose(DecomposeArgs),
    /// Threshold and partially reconstruct a series.
    Denoise(DenoiseArgs),
    /// Moving-average or FIR low-pass reference filter.
    Baseline(BaselineArgs),
    /// Welch power spectral density.
    Psd(PsdArgs),
    /// Write the synthetic benchmark.
    Synth(SynthArgs),
    /// Compare EEMD denoising with the reference filters on the benchmark.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Added noise std as a multiple of the signal std.
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub na: f64,
    /// Ensemble size.
    #[arg(long, default_value_t = 1000)]
    pub ne: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Plain EMD instead of the ensemble.
    #[arg(long, conflicts_with = "ensemble")]
    pub single: bool,
    /// Ensemble EMD (the default).
    #[arg(long)]
    pub ensemble: bool,
    #[command(flatten)]
    pub ensemble_args: EnsembleArgs,
    /// Window `start:end` (s) for the std that scales the added noise.
    #[arg(long, default_value = "0.05:0.95")]
    pub sigma_window: String,
    /// Sidecar JSON report; defaults to the output path with a
    /// `.report.json` extension.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// synthetic-475, dry-2sigma or wet-3sigma.
    #[arg(long, conflicts_with_all = ["l", "m", "nsigma", "modality", "sigma_window"])]
    pub preset: Option<String>,
    /// First thresholded mode (modes below it are dropped).
    #[arg(long)]
    pub l: Option<usize>,
    /// First mode kept in full.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub nsigma: f64,
    #[arg(long, default_value = "interval")]
    pub modality: String,
    /// Window `start:end` (s) for the per-mode noise std.
    #[arg(long, default_value = "0.05:0.95")]
    pub sigma_window: String,
    /// Decompose with plain EMD instead of the ensemble.
    #[arg(long)]
    pub single: bool,
    #[command(flatten)]
    pub ensemble_args: EnsembleArgs,
    /// Window for the std that scales the ensemble noise; defaults to the
    /// preset's, or 0.05:0.95.
    #[arg(long)]
    pub ensemble_window: Option<String>,
    /// Clean reference; enables the error report.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Window for peak retention; defaults to 0.05 s either side of the
    /// reference maximum.
    #[arg(long)]
    pub peak_window: Option<String>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("method").required(true).args(["moving_average", "fir"])))]
pub struct BaselineArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub moving_average: bool,
    #[arg(long)]
    pub fir: bool,
    #[arg(long, default_value_t = 1000)]
    pub span: usize,
    /// FIR cut-off, Hz.
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    pub cutoff: f64,
    #[arg(long, default_value_t = 4001)]
    pub taps: usize,
}

#[derive(Debug, Args)]
pub struct PsdArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 16384)]
    pub segment: usize,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub overlap: f64,
    /// hann or rectangular.
    #[arg(long, default_value = "hann")]
    pub window: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for clean.csv, noisy.csv, noise.csv and trajectory.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, allow_negative_numbers = true)]
    pub ramp_level: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub pulse_amplitude: Option<f64>,
    /// Pulse std, s.
    #[arg(long, allow_negative_numbers = true)]
    pub pulse_width: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mass: Option<f64>,
    /// Std of the white noise floor outside the high-variance window.
    #[arg(long, allow_negative_numbers = true)]
    pub noise_std: Option<f64>,
    /// Clean signal only.
    #[arg(long)]
    pub silent: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ensemble size for the EEMD row.
    #[arg(long, default_value_t = 1000)]
    pub ne: usize,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command,
/// writing console output to `stdout`.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::parse(e.to_string()))?;
    run(&cli, stdout)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    // console text is buffered so the command can run inside a pool
    let mut buf = Vec::new();
    let result = match cli.threads {
        None => dispatch(&cli.command, &mut buf),
        Some(0) => Err(CliError::validation("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::internal(format!("cannot start thread pool: {e}")))?;
            pool.install(|| dispatch(&cli.command, &mut buf))
        }
    };
    stdout
        .write_all(&buf)
        .and_then(|()| stdout.flush())
        .map_err(|e| CliError::internal(format!("cannot write output: {e}")))?;
    result
}

/// Process entry point.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(command: &Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Decompose(a) => cmd_decompose(a),
        Command::Denoise(a) => cmd_denoise(a, stdout),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Psd(a) => cmd_psd(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a, stdout),
    }
}

fn parse_window(flag: &str, text: &str) -> CliResult<TimeWindow> {
    text.parse()
        .map_err(|e: Error| CliError::validation(format!("--{flag}: {e}")))
}

fn ensemble_config(args: &EnsembleArgs, window: TimeWindow) -> CliResult<EemdConfig> {
    let cfg = EemdConfig {
        n_a: args.na,
        n_e: args.ne,
        master_seed: args.seed,
        ..EemdConfig::new(window)
    };
    cfg.validate()?;
    Ok(cfg)
}

fn sidecar(output: &Path) -> PathBuf {
    output.with_extension("report.json")
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

fn ensemble_json(cfg: &EemdConfig, r: &EnsembleResult) -> serde_json::Value {
    json!({
        "method": "eemd",
        "n_a": cfg.n_a,
        "n_e": cfg.n_e,
        "seed": cfg.master_seed,
        "sigma_window": [cfg.sigma_window.start, cfg.sigma_window.end],
        "noise_std": r.noise_std,
        "mode_count_histogram": r.mode_count_histogram,
        "selected_count": r.selected_count,
        "retained": r.retained,
        "discarded": r.discarded,
        "failed": r.failed,
        "tie_broken": r.tie_broken,
        "mean_sift_counts": r.mean_sift_counts,
    })
}

fn single_json(d: &Decomposition) -> serde_json::Value {
    json!({
        "method": "emd",
        "mode_count": d.mode_count(),
        "sift_counts": d.sift_counts,
    })
}

fn modes_csv(path: &Path, d: &Decomposition) -> CliResult<()> {
    let mut header = vec!["time".to_owned()];
    header.extend((1..=d.mode_count()).map(|i| format!("imf{i}")));
    header.push("residue".to_owned());
    let times: Vec<f64> = d.residue.times().collect();
    let mut columns: Vec<&[f64]> = vec![&times];
    columns.extend(d.imfs.iter().map(|s| s.values()));
    columns.push(d.residue.values());
    write_table(path, &header, &columns)
}

fn cmd_decompose(a: &DecomposeArgs) -> CliResult<()> {
    let window = parse_window("sigma-window", &a.sigma_window)?;
    let cfg = ensemble_config(&a.ensemble_args, window)?;
    let signal = read_series(&a.input)?;
    let (dec, report) = if a.single {
        let d = emd(&signal, &EmdConfig::default())?;
        let r = single_json(&d);
        (d, r)
    } else {
        let r = eemd(&signal, &cfg)?;
        let j = ensemble_json(&cfg, &r);
        (r.modes, j)
    };
    modes_csv(&a.output, &dec)?;
    write_json(
        &a.report.clone().unwrap_or_else(|| sidecar(&a.output)),
        &report,
    )
}

fn explicit_plan(a: &DenoiseArgs) -> CliResult<ReconstructionPlan> {
    let (Some(l), Some(m)) = (a.l, a.m) else {
        return Err(CliError::validation(
            "denoise needs --preset or both --l and --m",
        ));
    };
    let modality: Modality = a.modality.parse()?;
    Ok(ReconstructionPlan {
        l,
        m,
        n_sigma: a.nsigma,
        sigma_window: parse_window("sigma-window", &a.sigma_window)?,
        modality,
        expected_modes: None,
    })
}

fn mismatch_message(preset: Option<Preset>, e: CliError) -> CliError {
    match preset {
        Some(p) if e.code == EXIT_PLAN => CliError {
            message: format!("preset {p}: {}", e.message),
            ..e
        },
        _ => e,
    }
}

fn default_peak_window(reference: &UniformSeries) -> CliResult<TimeWindow> {
    let v = reference.values();
    let k = (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best });
    let t = reference.time(k);
    let start = (t - 0.05).max(reference.t0());
    let end = (t + 0.05).min(reference.t_end());
    Ok(TimeWindow::new(start, end)?)
}

fn print_reports(out: &mut dyn Write, reports: &[DenoiseReport]) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::internal(format!("cannot write output: {e}"));
    writeln!(
        out,
        "{:<24} {:>12} {:>10} {:>14} {:>15}",
        "method", "rmse", "snr_db", "max_abs_error", "peak_retention"
    )
    .map_err(io)?;
    for r in reports {
        writeln!(
            out,
            "{:<24} {:>12.6} {:>10.3} {:>14.6} {:>15.4}",
            r.method_label, r.rmse, r.snr_db, r.max_abs_error, r.peak_retention
        )
        .map_err(io)?;
    }
    Ok(())
}

fn cmd_denoise(a: &DenoiseArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let preset = a.preset.as_deref().map(str::parse::<Preset>).transpose()?;
    let plan = match preset {
        Some(p) => p.plan(),
        None => explicit_plan(a)?,
    };
    let ensemble_window = match (&a.ensemble_window, preset) {
        (Some(w), _) => parse_window("ensemble-window", w)?,
        (None, Some(p)) => p.ensemble_sigma_window(),
        (None, None) => TimeWindow {
            start: 0.05,
            end: 0.95,
        },
    };
    let cfg = ensemble_config(&a.ensemble_args, ensemble_window)?;
    let signal = read_series(&a.input)?;
    let reference = a.reference.as_deref().map(read_series).transpose()?;
    if let Some(r) = &reference {
        if !r.same_grid(&signal) {
            return Err(CliError::validation(
                "reference and input are on different time grids",
            ));
        }
    }

    let (dec, mut report) = if a.single {
        let d = emd(&signal, &EmdConfig::default())?;
        let r = single_json(&d);
        (d, r)
    } else {
        let r = eemd(&signal, &cfg)?;
        let j = ensemble_json(&cfg, &r);
        (r.modes, j)
    };
    let denoised = denoise(&dec, &plan).map_err(|e| mismatch_message(preset, e.into()))?;
    write_table(
        &a.output,
        &["time".to_owned(), "value".to_owned()],
        &[&denoised.times().collect::<Vec<_>>(), denoised.values()],
    )?;

    report["plan"] = json!({
        "preset": preset.map(|p| p.name()),
        "l": plan.l,
        "m": plan.m,
        "n_sigma": plan.n_sigma,
        "sigma_window": [plan.sigma_window.start, plan.sigma_window.end],
        "modality": plan.modality,
    });
    if let Some(clean) = reference {
        let window = match &a.peak_window {
            Some(w) => parse_window("peak-window", w)?,
            None => default_peak_window(&clean)?,
        };
        let label = preset.map_or("denoised".to_owned(), |p| format!("eemd {p}"));
        let r = evaluate(&label, &clean, &denoised, &window)?;
        report["metrics"] =
            serde_json::to_value(&r).map_err(|e| CliError::internal(e.to_string()))?;
        print_reports(stdout, &[r])?;
    }
    write_json(&sidecar(&a.output), &report)
}

fn cmd_baseline(a: &BaselineArgs) -> CliResult<()> {
    let signal = read_series(&a.input)?;
    let out = if a.moving_average {
        moving_average(&signal, a.span)?
    } else {
        fir_lowpass(
            &signal,
            &FirSpec {
                cutoff: a.cutoff,
                taps: a.taps,
            },
        )?
    };
    write_series(&a.output, &out)
}

fn cmd_psd(a: &PsdArgs) -> CliResult<()> {
    let window = match a.window.as_str() {
        "hann" => Taper::Hann,
        "rectangular" => Taper::Rectangular,
        other => return Err(CliError::validation(format!("unknown taper {other:?}"))),
    };
    let signal = read_series(&a.input)?;
    let spec = PsdSpec {
        segment_length: a.segment,
        overlap_fraction: a.overlap,
        window,
    };
    let psd = welch_psd(&signal, &spec)?;
    write_table(
        &a.output,
        &["frequency_hz".to_owned(), "psd".to_owned()],
        &[&psd.frequencies, &psd.density],
    )
}

fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        ramp_level: a.ramp_level.unwrap_or(d.ramp_level),
        pulse_amplitude: a.pulse_amplitude.unwrap_or(d.pulse_amplitude),
        pulse_width: a.pulse_width.unwrap_or(d.pulse_width),
        mass: a.mass.unwrap_or(d.mass),
        ..d
    };
    let model = if a.silent {
        NoiseModel::silent()
    } else {
        let m = NoiseModel::default();
        NoiseModel {
            base_std: a.noise_std.unwrap_or(m.base_std),
            ..m
        }
    };
    let b = make_benchmark(&spec, &model, a.seed)?;
    let (z, v, acc) = trajectory(&spec.trajectory, spec.sample_rate, spec.duration)?;
    fs::create_dir_all(&a.out_dir)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", a.out_dir.display())))?;
    write_series(&a.out_dir.join("clean.csv"), &b.clean)?;
    write_series(&a.out_dir.join("noisy.csv"), &b.noisy)?;
    write_series(&a.out_dir.join("noise.csv"), &b.noise)?;
    let header: Vec<String> = ["time", "z", "v", "a"].map(str::to_owned).to_vec();
    let times: Vec<f64> = z.times().collect();
    write_table(
        &a.out_dir.join("trajectory.csv"),
        &header,
        &[&times, z.values(), v.values(), acc.values()],
    )
}

/// Runs the benchmark comparison and returns the rows in table order.
pub fn bench_reports(seed: u64, n_e: usize) -> CliResult<(usize, Vec<DenoiseReport>)> {
    let spec = SyntheticSpec::default();
    let b = make_benchmark(&spec, &NoiseModel::default(), seed)?;
    let preset = Preset::Synthetic475;
    let cfg = EemdConfig {
        n_e,
        ..preset.ensemble_config(seed)
    };
    cfg.validate()?;
    let r = eemd(&b.noisy, &cfg)?;
    let plan = preset.plan();
    let denoised =
        denoise(&r.modes, &plan).map_err(|e| mismatch_message(Some(preset), e.into()))?;
    let ma = moving_average(&b.noisy, 1000)?;
    let fir = fir_lowpass(&b.noisy, &FirSpec::new(20.0))?;
    let window = spec.pulse_window(0.05)?;
    let reports = vec![
        evaluate(&format!("eemd {preset}"), &b.clean, &denoised, &window)?,
        evaluate("moving-average 1000", &b.clean, &ma, &window)?,
        evaluate("fir 20 Hz", &b.clean, &fir, &window)?,
    ];
    Ok((r.selected_count, reports))
}

fn cmd_bench(a: &BenchArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let (modes, reports) = bench_reports(a.seed, a.ne)?;
    writeln!(
        stdout,
        "benchmark seed {}, ensemble size {}, selected modes {modes}",
        a.seed, a.ne
    )
    .map_err(|e| CliError::internal(e.to_string()))?;
    print_reports(stdout, &reports)?;
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::internal(e.to_string()))?;
        let rows = std::iter::once(
            [
                "method",
                "rmse",
                "snr_db",
                "max_abs_error",
                "peak_retention",
            ]
            .map(str::to_owned),
        )
        .chain(reports.iter().map(|r| {
            [
                r.method_label.clone(),
                r.rmse.to_string(),
                r.snr_db.to_string(),
                r.max_abs_error.to_string(),
                r.peak_retention.to_string(),
            ]
        }));
        for row in rows {
            w.write_record(&row)
                .map_err(|e| CliError::internal(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::internal(e.to_string()))?;
    }
    Ok(())
}

/// Header plus numeric columns, all of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

/// Reads a numeric CSV with a header row.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::parse(format!("{}: line 1: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::parse(format!("{}: line {line}: {e}", path.display()))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::parse(format!(
                    "{}: line {line}: column {} is not a number: {field:?}",
                    path.display(),
                    c + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::parse(format!(
                    "{}: line {line}: non-finite value {field:?}",
                    path.display()
                )));
            }
            columns[c].push(v);
        }
    }
    Ok(Table { header, columns })
}

/// Start time and interval reproducing `times` as `t0 + k * dt`.
///
/// Files written by this tool round-trip exactly: the interval is searched
/// within a few ulps of the mean step for one that regenerates every time
/// stamp bit for bit. Other uniform files fall back to the mean step.
fn infer_grid(times: &[f64], path: &Path) -> CliResult<(f64, f64)> {
    let n = times.len();
    if n < 2 {
        return Err(CliError::validation(format!(
            "{}: need at least 2 samples, got {n}",
            path.display()
        )));
    }
    let t0 = times[0];
    let mean = (times[n - 1] - t0) / (n - 1) as f64;
    if !(mean > 0.0) {
        return Err(CliError::parse(format!(
            "{}: time column must increase",
            path.display()
        )));
    }
    let exact = |dt: f64| {
        times
            .iter()
            .enumerate()
            .all(|(k, &t)| t0 + k as f64 * dt == t)
    };
    for step in 0..=16u64 {
        for dt in [
            f64::from_bits(mean.to_bits() + step),
            f64::from_bits(mean.to_bits() - step),
        ] {
            if exact(dt) {
                return Ok((t0, dt));
            }
        }
    }
    for (k, &t) in times.iter().enumerate() {
        if (t - (t0 + k as f64 * mean)).abs() > 1e-6 * mean {
            return Err(CliError::parse(format!(
                "{}: line {}: time {t} breaks the uniform step {mean}",
                path.display(),
                k + 2
            )));
        }
    }
    Ok((t0, mean))
}

/// Reads a `time,value` file.
pub fn read_series(path: &Path) -> CliResult<UniformSeries> {
    let table = read_table(path)?;
    if table.header.len() != 2 || table.header[0] != "time" {
        return Err(CliError::parse(format!(
            "{}: line 1: expected header time,value, got {}",
            path.display(),
            table.header.join(",")
        )));
    }
    let mut columns = table.columns.into_iter();
    let times = columns.next().unwrap_or_default();
    let values = columns.next().unwrap_or_default();
    let (t0, dt) = infer_grid(&times, path)?;
    Ok(UniformSeries::new(t0, dt, values)?)
}

pub fn write_table(path: &Path, header: &[String], columns: &[&[f64]]) -> CliResult<()> {
    let fail = |e: csv::Error| CliError::internal(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(header).map_err(fail)?;
    let rows = columns.first().map_or(0, |c| c.len());
    let mut row = Vec::with_capacity(columns.len());
    for k in 0..rows {
        row.clear();
        row.extend(columns.iter().map(|c| c[k].to_string()));
        w.write_record(&row).map_err(fail)?;
    }
    w.flush()
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

pub fn write_series(path: &Path, s: &UniformSeries) -> CliResult<()> {
    let times: Vec<f64> = s.times().collect();
    write_table(
        path,
        &["time".to_owned(), "value".to_owned()],
        &[&times, s.values()],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_inference_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        for (t0, dt, n) in [
            (0.0, 1.0 / 20_000.0, 5000),
            (1.25, 0.001, 777),
            (-3.0, 0.1, 50),
        ] {
            let s = UniformSeries::new(t0, dt, (0..n).map(|k| (k as f64 * 0.37).sin()).collect())
                .unwrap();
            let p = dir.path().join("s.csv");
            write_series(&p, &s).unwrap();
            let first = fs::read(&p).unwrap();
            let back = read_series(&p).unwrap();
            write_series(&p, &back).unwrap();
            assert_eq!(fs::read(&p).unwrap(), first);
            assert_eq!(back.values(), s.values());
        }
    }

    #[test]
    fn malformed_files_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "time,value\n0,1\n0.1,2\n0.2,x\n").unwrap();
        let e = read_series(&p).unwrap_err();
        assert_eq!(e.code, EXIT_PARSE);
        assert!(e.message.contains("line 4"), "{}", e.message);

        fs::write(&p, "time,value\n0,1\n0.1,2,3\n").unwrap();
        let e = read_series(&p).unwrap_err();
        assert_eq!(e.code, EXIT_PARSE);
        assert!(e.message.contains("line 3"), "{}", e.message);

        fs::write(&p, "time,value\n0,1\n0.1,2\n0.5,3\n0.6,3\n").unwrap();
        let e = read_series(&p).unwrap_err();
        assert_eq!(e.code, EXIT_PARSE);
        assert!(e.message.contains("line 3"), "{}", e.message);

        fs::write(&p, "t,v\n0,1\n1,2\n").unwrap();
        assert!(read_series(&p).unwrap_err().message.contains("line 1"));
    }

    #[test]
    fn error_codes() {
        assert_eq!(
            CliError::from(Error::InvalidArgument("x".into())).code,
            EXIT_VALIDATION
        );
        assert_eq!(
            CliError::from(Error::PlanMismatch {
                planned: 10,
                selected: 9
            })
            .code,
            EXIT_PLAN
        );
        assert_eq!(
            CliError::from(Error::InvalidState("x".into())).code,
            EXIT_INTERNAL
        );
        let mut out = Vec::new();
        assert_eq!(
            run_from(["eemd-denoise", "frobnicate"], &mut out)
                .unwrap_err()
                .code,
            EXIT_PARSE
        );
        let e = run_from(["eemd-denoise", "--threads", "0", "bench"], &mut out).unwrap_err();
        assert_eq!(e.code, EXIT_VALIDATION);
    }
}
