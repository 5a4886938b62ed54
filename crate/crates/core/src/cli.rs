//! `crisisvm` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
//! Summaries go to stdout as `key: value` lines; diagnostics go to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data_io::{generate_synthetic, load_panel_file, parse_synth_config, write_panel_file};
use crate::dataset::{Label, SupervisedSet};
use crate::error::Error;
use crate::indicators::{CRISIS_K, DEFAULT_HP_LAMBDA};
use crate::kernels::KernelSpec;
use crate::model::TrainedModel;
use crate::pipeline::{prepare, PipelineConfig, PreparedData};
use crate::selection::{default_c_grid, default_candidates, run_sweep, split_train_test, SweepConfig};
use crate::smo::{train, SolverConfig, DEFAULT_KKT_TOL, HARD_MARGIN_C};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "crisisvm",
    version,
    about = "Kernel SVM currency-crisis discrimination and early warning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the pressure index and flag crisis months.
    Label(LabelArgs),
    /// Train one model on a chronological prefix and save it.
    Train(TrainArgs),
    /// Evaluate a saved model on a panel.
    Eval(EvalArgs),
    /// Try every kernel and C, keep the one chosen by the NSR rule.
    Sweep(SweepArgs),
    /// Classify a feature row or the latest panel month.
    Predict(PredictArgs),
    /// Write a seeded synthetic panel.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct PanelArgs {
    /// Monthly indicator panel (CSV).
    #[arg(long)]
    input: PathBuf,
    /// Crisis threshold multiplier k.
    #[arg(long, default_value_t = CRISIS_K)]
    k: f64,
    /// Hodrick-Prescott smoothing parameter.
    #[arg(long = "hp-lambda", default_value_t = DEFAULT_HP_LAMBDA)]
    hp_lambda: f64,
    /// Use raw feature values instead of full-sample standardized ones.
    #[arg(long = "raw-features")]
    raw_features: bool,
}

impl PanelArgs {
    fn pipeline(&self, horizon: usize) -> PipelineConfig {
        PipelineConfig {
            k: self.k,
            hp_lambda: self.hp_lambda,
            horizon,
            standardize_features: !self.raw_features,
        }
    }
}

#[derive(Debug, Args)]
struct LabelArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = CRISIS_K)]
    k: f64,
    /// Write the panel with `isp` and `crisis_flag` columns appended.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    panel: PanelArgs,
    /// Kernel: linear, poly:p=<int>,m=<real> or rbf:sigma=<real>.
    #[arg(long)]
    kernel: KernelSpec,
    #[arg(long = "C", default_value_t = HARD_MARGIN_C)]
    c: f64,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    horizon: u8,
    /// Train on rows before this index (default: all rows).
    #[arg(long)]
    cut: Option<usize>,
    #[arg(long = "kkt-tol", default_value_t = DEFAULT_KKT_TOL)]
    kkt_tol: f64,
    /// Output model file.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Subset {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    cut: Option<usize>,
    /// Rows to evaluate; defaults to `test` with --cut and `all` without.
    #[arg(long, value_enum)]
    subset: Option<Subset>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    horizon: u8,
    #[arg(long)]
    cut: usize,
    /// Candidate kernel (repeatable); defaults to linear, poly p=1..5, rbf sigma 0.5/1/2.
    #[arg(long = "kernel")]
    kernels: Vec<KernelSpec>,
    /// Comma-separated C values.
    #[arg(long = "C-grid", value_delimiter = ',')]
    c_grid: Vec<f64>,
    #[arg(long = "kkt-tol", default_value_t = DEFAULT_KKT_TOL)]
    kkt_tol: f64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output file for the chosen model.
    #[arg(long)]
    model: PathBuf,
    /// Also write the candidate table to this file.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated feature row in model input space.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["input", "latest"])]
    features: Option<String>,
    /// Panel to take the latest month from (with --latest).
    #[arg(long, requires = "latest")]
    input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    latest: bool,
    #[arg(long, default_value_t = CRISIS_K)]
    k: f64,
    #[arg(long = "hp-lambda", default_value_t = DEFAULT_HP_LAMBDA)]
    hp_lambda: f64,
    #[arg(long = "raw-features")]
    raw_features: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Generator config (key=value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: PathBuf,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingSeed => Failure::Usage(e.to_string()),
            other => Failure::Run(other),
        }
    }
}

type CmdResult = std::result::Result<String, Failure>;

/// Runs the CLI with `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Label(a) => cmd_label(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Synth(a) => cmd_synth(&a),
    };
    match result {
        Ok(summary) => {
            let _ = out.write_all(summary.as_bytes());
            EXIT_OK
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_DATA
            }
        }
    }
}

/// Four decimals without a sign on values that round to zero.
fn fixed4(v: f64) -> String {
    let text = format!("{v:.4}");
    match text.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => text,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_prepared(panel: &PanelArgs, horizon: usize) -> Result<PreparedData, Error> {
    let p = load_panel_file(&panel.input)?;
    prepare(&p, &panel.pipeline(horizon))
}

fn cmd_label(a: &LabelArgs) -> CmdResult {
    let panel = load_panel_file(&a.input)?;
    let isp = crate::indicators::compute_isp(&panel)?;
    let flags = crate::indicators::label_crises(&isp, a.k)?;
    let months: Vec<String> = flags.crisis_months().iter().map(|m| m.to_string()).collect();

    if let Some(path) = &a.output {
        let mut csv = format!("{},isp,crisis_flag\n", crate::data_io::PANEL_HEADER);
        let raw = crate::data_io::panel_to_csv(&panel)?;
        for (t, line) in raw.lines().skip(2).enumerate() {
            let _ = writeln!(csv, "{line},{},{}", isp.values[t], u8::from(flags.flags[t]));
        }
        write_file(path, &csv)?;
    }

    let mut s = String::new();
    let _ = writeln!(s, "command: label");
    let _ = writeln!(s, "months: {}", panel.len());
    let _ = writeln!(s, "index_months: {}", isp.values.len());
    let _ = writeln!(s, "k: {}", fixed4(a.k));
    let _ = writeln!(s, "isp_mean: {}", fixed4(isp.mean));
    let _ = writeln!(s, "isp_std: {}", fixed4(isp.std));
    let _ = writeln!(s, "threshold: {}", fixed4(flags.threshold));
    let _ = writeln!(s, "crisis_months: {}", flags.count());
    let _ = writeln!(s, "flagged: {}", months.join(","));
    Ok(s)
}

fn train_rows(data: &SupervisedSet, cut: Option<usize>) -> Result<SupervisedSet, Error> {
    match cut {
        None => Ok(data.clone()),
        Some(cut) => split_train_test(data, cut).map(|(train, _)| train),
    }
}

fn cmd_train(a: &TrainArgs) -> CmdResult {
    let prepared = load_prepared(&a.panel, usize::from(a.horizon))?;
    let data = train_rows(&prepared.data, a.cut)?;
    let cfg = SolverConfig {
        c: a.c,
        kkt_tol: a.kkt_tol,
        max_passes: None,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let solution = train(&data, &a.kernel, &cfg)?;
    let model = TrainedModel::from_solution(&solution, &data, a.kernel, &cfg, prepared.feature_names())?;
    model.save(&a.model)?;
    let report = model.evaluate(&data)?;

    let mut s = String::new();
    let _ = writeln!(s, "command: train");
    let _ = writeln!(s, "kernel: {}", a.kernel);
    let _ = writeln!(s, "C: {}", a.c);
    let _ = writeln!(s, "horizon: {}", a.horizon);
    let _ = writeln!(s, "n_train: {}", data.len());
    let _ = writeln!(s, "n_non_crisis: {}", data.count(Label::NonCrisis));
    let _ = writeln!(s, "n_crisis: {}", data.count(Label::Crisis));
    let _ = writeln!(s, "iterations: {}", solution.iterations);
    let _ = writeln!(s, "model: {}", a.model.display());
    s.push_str(&report.render(a.kernel.polynomial_degree(), Some(model.support_vectors().len())));
    Ok(s)
}

fn cmd_eval(a: &EvalArgs) -> CmdResult {
    let model = TrainedModel::load(&a.model)?;
    let prepared = load_prepared(&a.panel, model.horizon())?;
    let data = &prepared.data;
    if data.dim() != model.feature_dim() {
        return Err(Failure::Run(Error::DimensionMismatch {
            expected: model.feature_dim(),
            found: data.dim(),
        }));
    }
    let subset = match (a.subset, a.cut) {
        (Some(Subset::All), _) | (None, None) => Subset::All,
        (Some(s), Some(_)) => s,
        (None, Some(_)) => Subset::Test,
        (Some(_), None) => return Err(Failure::Usage("--subset train/test requires --cut".into())),
    };
    let rows = match (subset, a.cut) {
        (Subset::All, _) => data.clone(),
        (Subset::Train, Some(cut)) => split_train_test(data, cut)?.0,
        (Subset::Test, Some(cut)) => split_train_test(data, cut)?.1,
        _ => unreachable!("subset resolved above"),
    };
    let report = model.evaluate(&rows)?;

    let mut s = String::new();
    let _ = writeln!(s, "command: eval");
    let _ = writeln!(s, "kernel: {}", model.kernel());
    let _ = writeln!(s, "horizon: {}", model.horizon());
    let _ = writeln!(
        s,
        "subset: {}",
        match subset {
            Subset::All => "all",
            Subset::Train => "train",
            Subset::Test => "test",
        }
    );
    s.push_str(&report.render(model.kernel().polynomial_degree(), Some(model.support_vectors().len())));
    Ok(s)
}

fn cmd_sweep(a: &SweepArgs) -> CmdResult {
    let prepared = load_prepared(&a.panel, usize::from(a.horizon))?;
    let cfg = SweepConfig {
        candidates: if a.kernels.is_empty() {
            default_candidates()
        } else {
            a.kernels.clone()
        },
        c_grid: if a.c_grid.is_empty() {
            default_c_grid()
        } else {
            a.c_grid.clone()
        },
        cut: a.cut,
        kkt_tol: a.kkt_tol,
        jobs: a.jobs.max(1),
    };
    let result = run_sweep(&prepared.data, &cfg, &prepared.feature_names())?;
    let table = result.render_table();
    if let Some(path) = &a.table {
        write_file(path, &table)?;
    }
    let record = result.chosen_record();
    let fit = result.chosen_fit();
    fit.model.save(&a.model)?;

    let mut s = table;
    s.push('\n');
    let _ = writeln!(s, "command: sweep");
    let _ = writeln!(s, "horizon: {}", a.horizon);
    let _ = writeln!(s, "candidates: {}", result.records.len());
    let _ = writeln!(s, "n_train: {}", result.n_train);
    let _ = writeln!(s, "n_test: {}", result.n_test);
    let _ = writeln!(s, "chosen: {}", result.chosen);
    let _ = writeln!(s, "chosen_kernel: {}", record.kernel);
    let _ = writeln!(s, "chosen_C: {}", record.c);
    let _ = writeln!(s, "separates_training: {}", fit.separates());
    let _ = writeln!(s, "training_nsr: {}", fit.train.nsr_text());
    let _ = writeln!(s, "model: {}", a.model.display());
    s.push_str(
        &fit.test
            .render(record.kernel.polynomial_degree(), Some(fit.support_vectors())),
    );
    Ok(s)
}

fn cmd_predict(a: &PredictArgs) -> CmdResult {
    let model = TrainedModel::load(&a.model)?;
    let (row, date) = match (&a.features, &a.input) {
        (Some(text), _) => {
            let row = text
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| Failure::Usage(format!("--features must be comma-separated numbers, got '{text}'")))?;
            (row, None)
        }
        (None, Some(input)) => {
            let panel = load_panel_file(input)?;
            let cfg = PipelineConfig {
                k: a.k,
                hp_lambda: a.hp_lambda,
                horizon: 0,
                standardize_features: !a.raw_features,
            };
            let prepared = prepare(&panel, &cfg)?;
            let last = prepared.features.rows.len() - 1;
            (
                prepared.features.rows[last].clone(),
                Some(prepared.features.dates[last]),
            )
        }
        (None, None) => return Err(Failure::Usage("pass --features or --input with --latest".into())),
    };
    let value = model.decision_value(&row)?;
    let label = Label::from_decision(value);

    let mut s = String::new();
    let _ = writeln!(s, "command: predict");
    if let Some(date) = date {
        let _ = writeln!(s, "date: {date}");
    }
    let _ = writeln!(s, "horizon: {}", model.horizon());
    let _ = writeln!(s, "decision_value: {}", fixed4(value));
    let _ = writeln!(s, "label: {label}");
    let _ = writeln!(
        s,
        "state: {}",
        match label {
            Label::Crisis => "crisis",
            Label::NonCrisis => "non-crisis",
        }
    );
    Ok(s)
}

fn cmd_synth(a: &SynthArgs) -> CmdResult {
    let text = match &a.config {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?,
        None => String::new(),
    };
    let spec = parse_synth_config(&text, a.seed)?;
    let panel = generate_synthetic(&spec)?;
    write_panel_file(&panel, &a.output)?;

    let mut s = String::new();
    let _ = writeln!(s, "command: synth");
    let _ = writeln!(s, "seed: {}", spec.seed);
    let _ = writeln!(s, "months: {}", panel.len());
    let _ = writeln!(s, "start: {}", spec.start);
    let _ = writeln!(s, "episodes: {}", spec.episodes.len());
    let _ = writeln!(s, "output: {}", a.output.display());
    Ok(s)
}
