//! Command-line frontend: one-shot AUC reports, windowed monitoring,
//! synthetic scenario generation, and replay against known ground truth.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use aucmon::ingest::{self, WindowedBatch};
use aucmon::kalman::MonitorRecord;
use aucmon::monitor::{monitor_windows, MonitorConfig, MonitorError};
use aucmon::roc_metrics::{DelongEstimate, MetricsError, ScoredBatch};
use aucmon::sim::{default_paper_scenario, ScenarioSpec};
use aucmon::kalman::confidence_interval;

const MONITOR_HEADER: &str =
    "window,raw,raw95CI_up,raw95CI_low,filtered,filtered95CI_up,filtered95CI_low,m,n,gain,upper_bound,skipped";

#[derive(Parser)]
#[command(name = "aucmon", version, about = "Windowed AUCROC monitoring with Kalman-filtered estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One-shot AUC and DeLong variance for a whole prediction log.
    Auc {
        /// Prediction log CSV (timestamp,score,label[,subject_id]).
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Windowed raw + filtered AUC time series.
    Monitor {
        #[arg(long)]
        input: PathBuf,
        /// Windowing mode: monthly, count:N, or step.
        #[arg(long)]
        window: Option<String>,
        /// Prediction log establishing the filter's prior.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Where to write run metadata (default: <out>.meta.toml).
        #[arg(long)]
        meta: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a synthetic drift scenario.
    Simulate {
        /// Scenario file (TOML).
        #[arg(long, conflicts_with = "paper_default")]
        scenario: Option<PathBuf>,
        /// Use the built-in 3-phase benchmark scenario.
        #[arg(long)]
        paper_default: bool,
        /// Where to write the ground-truth CSV (default: <out>.truth.csv).
        #[arg(long)]
        truth_out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monitor a simulated log and score it against its truth file.
    Replay {
        /// Prediction log produced by `simulate`.
        #[arg(long)]
        log: PathBuf,
        /// Truth CSV produced by `simulate`.
        #[arg(long)]
        truth: PathBuf,
        /// Phase boundaries as comma-separated step indices (e.g. 20,40).
        #[arg(long)]
        phase_bounds: Option<String>,
        /// Where to write the evaluation summary (default: stdout).
        #[arg(long)]
        summary_out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Positive-count threshold below which the variance upper bound is used.
    #[arg(long)]
    min_positives: Option<usize>,
    /// Seed for all randomness in the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file (TOML); flags override config values.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Values settable from the config file. Flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    window: Option<String>,
    min_positives: Option<usize>,
    baseline: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    max_reject_fraction: Option<f64>,
}

#[derive(Debug)]
struct Effective {
    window: String,
    min_positives: usize,
    baseline: Option<PathBuf>,
    seed: u64,
    out: Option<PathBuf>,
    max_reject_fraction: f64,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn io(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn degenerate(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

impl From<ingest::IngestError> for CliError {
    fn from(e: ingest::IngestError) -> Self {
        CliError::io(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::DegenerateBatch { .. } => CliError::degenerate(e.to_string()),
            other => CliError::io(other.to_string()),
        }
    }
}

impl From<MonitorError> for CliError {
    fn from(e: MonitorError) -> Self {
        match e {
            MonitorError::NoUsableWindows => CliError::degenerate(e.to_string()),
            MonitorError::Metrics(m) => m.into(),
            MonitorError::Filter(f) => CliError::io(f.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Auc { input, common } => cmd_auc(&input, &common),
        Command::Monitor { input, window, baseline, meta, common } => {
            cmd_monitor(&input, window, baseline, meta, &common)
        }
        Command::Simulate { scenario, paper_default, truth_out, common } => {
            cmd_simulate(scenario, paper_default, truth_out, &common)
        }
        Command::Replay { log, truth, phase_bounds, summary_out, common } => {
            cmd_replay(&log, &truth, phase_bounds, summary_out, &common)
        }
    }
}

fn resolve(common: &CommonArgs, window: Option<String>, baseline: Option<PathBuf>) -> Result<Effective, CliError> {
    let file: FileConfig = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("config {}: {e}", path.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::io(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    Ok(Effective {
        window: window.or(file.window).unwrap_or_else(|| "monthly".into()),
        min_positives: common.min_positives.or(file.min_positives).unwrap_or(20),
        baseline: baseline.or(file.baseline),
        seed: common.seed.or(file.seed).unwrap_or(0),
        out: common.out.clone().or(file.out),
        max_reject_fraction: file.max_reject_fraction.unwrap_or(0.01),
    })
}

fn load_records(path: &Path, max_reject_fraction: f64) -> Result<ingest::ParseOutcome, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let outcome = ingest::parse_log(file, max_reject_fraction)?;
    for reject in &outcome.rejects {
        eprintln!("{}: {reject}", path.display());
    }
    Ok(outcome)
}

fn load_batch(path: &Path, max_reject_fraction: f64) -> Result<ScoredBatch, CliError> {
    let outcome = load_records(path, max_reject_fraction)?;
    let positives = outcome.records.iter().filter(|r| r.label).map(|r| r.score).collect();
    let negatives = outcome.records.iter().filter(|r| !r.label).map(|r| r.score).collect();
    Ok(ScoredBatch::new(positives, negatives)?)
}

// Write via a temp file in the same directory so readers never observe a
// partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn fmt4(value: f64) -> String {
    format!("{value:.4}")
}

fn fmt4_opt(value: Option<f64>) -> String {
    value.map(fmt4).unwrap_or_default()
}

fn monitor_csv(records: &[MonitorRecord]) -> String {
    let mut out = String::from(MONITOR_HEADER);
    out.push('\n');
    for r in records {
        let filtered = if r.filtered.is_finite() {
            (fmt4(r.filtered), fmt4(r.filtered_ci_high), fmt4(r.filtered_ci_low))
        } else {
            (String::new(), String::new(), String::new())
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.window_id,
            fmt4_opt(r.raw),
            fmt4_opt(r.raw_ci_high),
            fmt4_opt(r.raw_ci_low),
            filtered.0,
            filtered.1,
            filtered.2,
            r.m,
            r.n,
            fmt4_opt(r.gain),
            r.used_upper_bound,
            r.skipped,
        );
    }
    out
}

fn cmd_auc(input: &Path, common: &CommonArgs) -> Result<(), CliError> {
    let config = resolve(common, None, None)?;
    let batch = load_batch(input, config.max_reject_fraction)?;
    let est = batch.delong(config.min_positives)?;
    let (ci_low, ci_high) = confidence_interval(est.theta, est.variance)
        .map_err(|e| CliError::io(e.to_string()))?;
    println!("AUCROC:           {}", fmt4(est.theta));
    println!("DeLong variance:  {:.6}", est.variance);
    println!("95% CI:           [{}, {}]", fmt4(ci_low), fmt4(ci_high));
    println!("positives (m):    {}", est.m);
    println!("negatives (n):    {}", est.n);
    println!("used upper bound: {}", est.used_upper_bound);
    let csv = format!(
        "theta,variance,ci95_low,ci95_up,m,n,upper_bound\n{},{:.6},{},{},{},{},{}\n",
        fmt4(est.theta), est.variance, fmt4(ci_low), fmt4(ci_high), est.m, est.n,
        est.used_upper_bound,
    );
    match &config.out {
        Some(path) => write_atomic(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn make_windows(
    outcome: &ingest::ParseOutcome,
    mode: &str,
) -> Result<Vec<WindowedBatch>, CliError> {
    match mode {
        "monthly" => Ok(ingest::window_by_month(&outcome.records)?),
        "step" => Ok(ingest::window_by_step(&outcome.records)),
        other => match other.strip_prefix("count:") {
            Some(n) => {
                let size: usize = n
                    .parse()
                    .map_err(|_| CliError::io(format!("bad window size {n:?}")))?;
                Ok(ingest::window_by_count(&outcome.records, size)?)
            }
            None => Err(CliError::io(format!(
                "unknown window mode {other:?}: expected monthly, count:N, or step"
            ))),
        },
    }
}

fn load_baseline(
    path: &Option<PathBuf>,
    config: &Effective,
) -> Result<Option<DelongEstimate>, CliError> {
    match path {
        Some(p) => {
            let batch = load_batch(p, config.max_reject_fraction)?;
            Ok(Some(batch.delong(config.min_positives)?))
        }
        None => Ok(None),
    }
}

fn cmd_monitor(
    input: &Path,
    window: Option<String>,
    baseline: Option<PathBuf>,
    meta: Option<PathBuf>,
    common: &CommonArgs,
) -> Result<(), CliError> {
    let config = resolve(common, window, baseline)?;
    let outcome = load_records(input, config.max_reject_fraction)?;
    let windows = make_windows(&outcome, &config.window)?;
    let baseline_est = load_baseline(&config.baseline, &config)?;
    let monitor_config = MonitorConfig {
        min_positives: config.min_positives,
        ..MonitorConfig::default()
    };
    let records = monitor_windows(&windows, baseline_est.as_ref(), &monitor_config)?;
    let csv = monitor_csv(&records);
    let out = config
        .out
        .clone()
        .ok_or_else(|| CliError::io("monitor requires --out"))?;
    write_atomic(&out, &csv)?;

    let skipped = records.iter().filter(|r| r.skipped).count();
    let mut meta_text = String::new();
    let _ = writeln!(meta_text, "version = {:?}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(meta_text, "command = \"monitor\"");
    let _ = writeln!(meta_text, "input = {:?}", input.display().to_string());
    let _ = writeln!(meta_text, "out = {:?}", out.display().to_string());
    let _ = writeln!(meta_text, "window = {:?}", config.window);
    let _ = writeln!(meta_text, "min_positives = {}", config.min_positives);
    let _ = writeln!(meta_text, "seed = {}", config.seed);
    if let Some(b) = &config.baseline {
        let _ = writeln!(meta_text, "baseline = {:?}", b.display().to_string());
    }
    let _ = writeln!(meta_text, "records_accepted = {}", outcome.records.len());
    let _ = writeln!(meta_text, "records_rejected = {}", outcome.rejects.len());
    let _ = writeln!(meta_text, "windows = {}", records.len());
    let _ = writeln!(meta_text, "windows_skipped = {skipped}");
    let meta_path = meta.unwrap_or_else(|| out.with_extension("meta.toml"));
    write_atomic(&meta_path, &meta_text)?;
    eprintln!(
        "monitor: {} windows ({} skipped) -> {}",
        records.len(),
        skipped,
        out.display()
    );
    Ok(())
}

fn cmd_simulate(
    scenario_path: Option<PathBuf>,
    paper_default: bool,
    truth_out: Option<PathBuf>,
    common: &CommonArgs,
) -> Result<(), CliError> {
    let config = resolve(common, None, None)?;
    let mut scenario = match (&scenario_path, paper_default) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            ScenarioSpec::from_toml(&text)
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?
        }
        (None, true) => default_paper_scenario(),
        (None, false) => {
            return Err(CliError::io("simulate requires --scenario PATH or --paper-default"))
        }
    };
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    let steps = scenario
        .generate()
        .map_err(|e| CliError::io(e.to_string()))?;

    // Raw binormal scores live on the whole real line; the log schema wants
    // [0,1]. The logistic squash is strictly increasing, so every AUC
    // computed downstream is unchanged.
    let squash = |s: f64| 1.0 / (1.0 + (-s).exp());
    let mut log = String::from("timestamp,score,label\n");
    let mut truth = String::from("step,true_auc,m,n\n");
    for step in &steps {
        for &score in step.batch.positives() {
            let _ = writeln!(log, "{},{},1", step.step, squash(score));
        }
        for &score in step.batch.negatives() {
            let _ = writeln!(log, "{},{},0", step.step, squash(score));
        }
        let _ = writeln!(truth, "{},{},{},{}", step.step, step.true_auc, step.m, step.n);
    }
    let out = config
        .out
        .clone()
        .ok_or_else(|| CliError::io("simulate requires --out"))?;
    let truth_path = truth_out.unwrap_or_else(|| out.with_extension("truth.csv"));
    write_atomic(&out, &log)?;
    write_atomic(&truth_path, &truth)?;
    eprintln!(
        "simulate: {} steps (seed {}) -> {} + {}",
        steps.len(),
        scenario.seed,
        out.display(),
        truth_path.display()
    );
    Ok(())
}

struct TruthRow {
    step: String,
    true_auc: f64,
}

fn load_truth(path: &Path) -> Result<Vec<TruthRow>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("step,true_auc,m,n") => {}
        _ => return Err(CliError::io(format!("{}: bad truth header", path.display()))),
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::io(format!("{}: bad truth row {line:?}", path.display())));
        }
        let true_auc: f64 = fields[1]
            .parse()
            .map_err(|_| CliError::io(format!("{}: bad true_auc in {line:?}", path.display())))?;
        rows.push(TruthRow { step: fields[0].to_string(), true_auc });
    }
    if rows.is_empty() {
        return Err(CliError::io(format!("{}: empty truth file", path.display())));
    }
    Ok(rows)
}

/// Per-phase accuracy of raw and filtered series against scheduled truth.
pub struct PhaseReport {
    label: String,
    raw_mae: f64,
    filtered_mae: f64,
    coverage: f64,
}

fn evaluate_phases(
    records: &[MonitorRecord],
    truth: &[TruthRow],
    bounds: &[usize],
) -> Vec<PhaseReport> {
    let mut starts = vec![0usize];
    starts.extend_from_slice(bounds);
    let mut reports = Vec::new();
    for (idx, &start) in starts.iter().enumerate() {
        let end = starts.get(idx + 1).copied().unwrap_or(records.len());
        let slice = start..end.min(records.len());
        let mut raw_err = 0.0;
        let mut filt_err = 0.0;
        let mut covered = 0usize;
        let mut count = 0usize;
        for i in slice {
            let (record, truth_row) = (&records[i], &truth[i]);
            let Some(raw) = record.raw else { continue };
            raw_err += (raw - truth_row.true_auc).abs();
            filt_err += (record.filtered - truth_row.true_auc).abs();
            if (record.filtered_ci_low..=record.filtered_ci_high).contains(&truth_row.true_auc) {
                covered += 1;
            }
            count += 1;
        }
        if count == 0 {
            continue;
        }
        reports.push(PhaseReport {
            label: format!("phase{} (steps {start}..{})", idx + 1, end - 1),
            raw_mae: raw_err / count as f64,
            filtered_mae: filt_err / count as f64,
            coverage: covered as f64 / count as f64,
        });
    }
    reports
}

fn cmd_replay(
    log: &Path,
    truth_path: &Path,
    phase_bounds: Option<String>,
    summary_out: Option<PathBuf>,
    common: &CommonArgs,
) -> Result<(), CliError> {
    let config = resolve(common, None, None)?;
    let truth = load_truth(truth_path)?;
    let outcome = load_records(log, config.max_reject_fraction)?;
    let windows = ingest::window_by_step(&outcome.records);
    if windows.len() != truth.len()
        || windows.iter().zip(&truth).any(|(w, t)| w.window_id != t.step)
    {
        return Err(CliError::io(format!(
            "step mismatch between {} and {}",
            log.display(),
            truth_path.display()
        )));
    }
    let monitor_config = MonitorConfig {
        min_positives: config.min_positives,
        ..MonitorConfig::default()
    };
    let records = monitor_windows(&windows, None, &monitor_config)?;

    let bounds: Vec<usize> = match phase_bounds {
        Some(text) => text
            .split(',')
            .map(|b| b.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::io(format!("bad --phase-bounds {text:?}")))?,
        // The built-in benchmark's boundaries when the length matches.
        None if records.len() == 60 => vec![20, 40],
        None => vec![],
    };

    let reports = evaluate_phases(&records, &truth, &bounds);
    let mut summary = String::new();
    for report in &reports {
        let _ = writeln!(
            summary,
            "{}: raw_mae={:.4} filtered_mae={:.4} truth_in_filtered_ci={:.1}%",
            report.label,
            report.raw_mae,
            report.filtered_mae,
            100.0 * report.coverage,
        );
    }

    if let Some(out) = &config.out {
        write_atomic(out, &monitor_csv(&records))?;
    }
    match &summary_out {
        Some(path) => write_atomic(path, &summary)?,
        None => print!("{summary}"),
    }
    Ok(())
}
