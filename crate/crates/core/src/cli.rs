//! The `snowpipe` command line.
//!
//! Exit codes: 0 success, 1 usage error (bad or conflicting flags), 2 data
//! or validation error. Every command prints one summary line per regime on
//! stdout and writes its data to files.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::eval::{
    evaluate_model, residual_histogram, run_regime, write_report_csv, Axis, Histogram2D, Regime,
    RegimeOptions, SplitSpec, DEFAULT_BINS,
};
use crate::features::{assemble_with_layout, ChannelLayout};
use crate::gridstack::{load_grid, load_stack, save_grid, save_stack, valid_mask, Grid};
use crate::model::{load_model, predict, save_model, TrainConfig};
use crate::synth::{generate_scene, SynthConfig};

#[derive(Debug, Parser)]
#[command(
    name = "snowpipe",
    version,
    about = "InSAR snow-depth regression pipeline"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene directory (stack.json + .f32 grids).
    Synth(SynthArgs),
    /// Dump the per-pixel feature matrix as CSV.
    Features(FeaturesArgs),
    /// Train a model, optionally under a holdout or half-scene split.
    Train(TrainArgs),
    /// Write a predicted depth grid for every valid pixel of a stack.
    Predict(PredictArgs),
    /// Score a trained model on a stack.
    Evaluate(EvaluateArgs),
    /// Bin (truth, prediction) pairs from two .f32 grids.
    Histogram(HistogramArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Season seed (snow noise, accumulation, observation noise).
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Terrain seed; defaults to --seed.
    #[arg(long)]
    pub terrain_seed: Option<u64>,
    /// Scene size as WIDTHxHEIGHT.
    #[arg(long, default_value = "128x128", value_parser = parse_size)]
    pub size: (u32, u32),
    /// Double the snow-depth range.
    #[arg(long)]
    pub strong_shift: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub stack: PathBuf,
    #[arg(long, default_value = "features.csv")]
    pub out: PathBuf,
    /// Append the cumulative LOS proxy as a 22nd channel.
    #[arg(long)]
    pub with_los_channel: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub stack: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Centre training and test targets on their own means.
    #[arg(long)]
    pub debias: bool,
    /// Fraction of valid pixels held out for testing.
    #[arg(long, conflicts_with = "spatial_half")]
    pub holdout: Option<f64>,
    /// Train below the boundary, test beyond it: `row:FRAC` or `col:FRAC`.
    #[arg(long, value_parser = parse_spatial_half)]
    pub spatial_half: Option<(Axis, f64)>,
    #[arg(long)]
    pub with_los_channel: bool,
    /// Metrics CSV; defaults to report.csv next to the model.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub stack: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub stack: PathBuf,
    #[arg(long)]
    pub debias: bool,
    #[arg(long, default_value = "report.csv")]
    pub report: PathBuf,
    #[arg(long, default_value = "evaluate")]
    pub label: String,
    #[arg(long)]
    pub hist: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value = "0:2.5", value_parser = parse_range)]
    pub range: (f64, f64),
    /// Greyscale image of the histogram (requires --hist).
    #[arg(long, requires = "hist")]
    pub pgm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HistogramArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub width: u32,
    #[arg(long)]
    pub height: u32,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value = "0:2.5", value_parser = parse_range)]
    pub range: (f64, f64),
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let w = w.parse().map_err(|e| format!("width: {e}"))?;
    let h = h.parse().map_err(|e| format!("height: {e}"))?;
    Ok((w, h))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected MIN:MAX, got {s:?}"))?;
    let lo: f64 = lo.parse().map_err(|e| format!("min: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("max: {e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("range {s:?} must satisfy MIN < MAX"));
    }
    Ok((lo, hi))
}

fn parse_spatial_half(s: &str) -> Result<(Axis, f64), String> {
    let (axis, frac) = s
        .split_once(':')
        .ok_or_else(|| format!("expected row:FRAC or col:FRAC, got {s:?}"))?;
    let axis = match axis {
        "row" => Axis::Row,
        "col" => Axis::Col,
        other => return Err(format!("axis must be row or col, got {other:?}")),
    };
    let frac: f64 = frac.parse().map_err(|e| format!("fraction: {e}"))?;
    if !(frac > 0.0 && frac < 1.0) {
        return Err(format!("fraction must lie in (0, 1), got {frac}"));
    }
    Ok((axis, frac))
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Data(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e).into())
}

fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut out = create(path)?;
    f(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e).into())
}

fn layout(with_los: bool) -> ChannelLayout {
    if with_los {
        ChannelLayout::WithLos
    } else {
        ChannelLayout::Standard
    }
}

fn write_histogram(h: &Histogram2D, csv: &Path, pgm: Option<&Path>) -> CliResult<()> {
    write_with(csv, |w| h.write_csv(w))?;
    if let Some(pgm) = pgm {
        write_with(pgm, |w| h.write_pgm(w))?;
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let (width, height) = args.size;
    let mut cfg = SynthConfig::new(args.seed, width, height);
    cfg.terrain_seed = args.terrain_seed.unwrap_or(args.seed);
    if args.strong_shift {
        cfg = cfg.strong_shift(cfg.terrain_seed, cfg.seed);
    }
    let stack = generate_scene(&cfg)?;
    let manifest = save_stack(&stack, &args.out)?;
    let echo = serde_json::to_string_pretty(&cfg).map_err(|e| Error::SchemaError(e.to_string()))?;
    write_with(&args.out.join("synth.json"), |w| writeln!(w, "{echo}"))?;
    let _ = writeln!(
        out,
        "synth: {}x{} scene, season seed {}, terrain seed {}, {} valid pixels -> {}",
        width,
        height,
        cfg.seed,
        cfg.terrain_seed,
        valid_mask(&stack).len(),
        manifest.display()
    );
    Ok(())
}

fn cmd_features(args: &FeaturesArgs, out: &mut dyn Write) -> CliResult<()> {
    let stack = load_stack(&args.stack)?;
    let mask = valid_mask(&stack);
    let m = assemble_with_layout(&stack, &mask, layout(args.with_los_channel))?;
    write_with(&args.out, |w| m.write_csv(w))?;
    let _ = writeln!(
        out,
        "features: {} rows x {} channels -> {}",
        m.rows(),
        m.channels(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let config = TrainConfig {
        seed: args.seed,
        ..TrainConfig::default()
    };
    let options = RegimeOptions {
        debias: args.debias,
        layout: layout(args.with_los_channel),
        histogram: None,
    };
    let regime = match (args.holdout, args.spatial_half) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--holdout and --spatial-half are mutually exclusive".into(),
            ))
        }
        (Some(fraction), None) => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(CliError::Usage(format!(
                    "--holdout must lie in (0, 1), got {fraction}"
                )));
            }
            Some(Regime::Split(SplitSpec::Holdout {
                fraction,
                seed: args.seed,
            }))
        }
        (None, Some((axis, boundary_fraction))) => Some(Regime::Split(SplitSpec::SpatialHalf {
            axis,
            boundary_fraction,
        })),
        (None, None) => None,
    };
    let stack = load_stack(&args.stack)?;
    let (model, reports) = match regime {
        Some(regime) => {
            let outcome = run_regime(&stack, &regime, &config, &options)?;
            (outcome.model, vec![outcome.train, outcome.test])
        }
        None => {
            let outcome = run_regime(
                &stack,
                &Regime::Transfer {
                    test: &stack,
                    label: "full".into(),
                },
                &config,
                &options,
            )?;
            (outcome.model, vec![outcome.train])
        }
    };
    save_model(&model, &args.out)?;
    let report_path = args.report.clone().unwrap_or_else(|| {
        args.out
            .parent()
            .unwrap_or_else(|| Path::new(""))
            .join("report.csv")
    });
    write_with(&report_path, |w| write_report_csv(&reports, w))?;
    let log = &model.report;
    let _ = writeln!(
        out,
        "train: {} epochs ({:?}, best {}), model -> {}",
        log.epochs_run,
        log.stop_reason,
        log.best_epoch,
        args.out.display()
    );
    for r in &reports {
        let _ = writeln!(out, "{}", r.summary_line());
    }
    Ok(())
}

fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let stack = load_stack(&args.stack)?;
    let mask = valid_mask(&stack);
    let m = assemble_with_layout(&stack, &mask, model.layout)?;
    let pred = predict(&model, &m)?;
    let mut grid = Grid::filled(stack.width(), stack.height(), f32::NAN);
    for (&p, v) in mask.indices().iter().zip(&pred) {
        grid.values_mut()[p] = *v as f32;
    }
    save_grid(&grid, &args.out)?;
    let _ = writeln!(
        out,
        "predict: {} of {} pixels -> {}",
        pred.len(),
        stack.n_pixels(),
        args.out.display()
    );
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let stack = load_stack(&args.stack)?;
    let hist = args.hist.as_ref().map(|_| (args.bins, args.range));
    let eval = evaluate_model(&model, &stack, &args.label, args.debias, hist)?;
    write_with(&args.report, |w| {
        write_report_csv(std::slice::from_ref(&eval.report), w)
    })?;
    if let (Some(h), Some(path)) = (&eval.histogram, &args.hist) {
        write_histogram(h, path, args.pgm.as_deref())?;
    }
    let _ = writeln!(out, "{}", eval.report.summary_line());
    Ok(())
}

fn cmd_histogram(args: &HistogramArgs, out: &mut dyn Write) -> CliResult<()> {
    let pred = load_grid(&args.pred, args.width, args.height)?;
    let truth = load_grid(&args.truth, args.width, args.height)?;
    let (p, t): (Vec<f64>, Vec<f64>) = pred
        .values()
        .iter()
        .zip(truth.values())
        .filter(|(p, t)| !p.is_nan() && !t.is_nan())
        .map(|(p, t)| (*p as f64, *t as f64))
        .unzip();
    let h = residual_histogram(&p, &t, args.bins, args.range)?;
    write_histogram(&h, &args.out, args.pgm.as_deref())?;
    let _ = writeln!(
        out,
        "histogram: {} pairs in range, {} outside -> {}",
        h.total_in_range(),
        h.n_out_of_range,
        args.out.display()
    );
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, out),
        Command::Features(a) => cmd_features(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Histogram(a) => cmd_histogram(a, out),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}
