//! Command-line front end: `segment`, `train`, `evaluate`, `synth`.
//! Every command is deterministic given its flags and seed, and output files
//! carry a provenance header (tool version, command line, seed).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::eval::{
    leave_one_out, monte_carlo_cv, ratio_sweep, BetaHtChoice, Corpus, EvalConfig, EvalStrategy,
    EvaluationReport, Piece,
};
use crate::hmm::DecodeRule;
use crate::io::{
    load_activity_csv, load_manifest, load_params_csv, load_pianoroll_csv, load_transitions_csv,
    render_report_csv, render_report_text, render_roc_csv, save_params_csv, save_pianoroll_csv,
    save_transitions_csv, FileHeader, GroundTruthKind, LoadOptions, ManifestEntry,
};
use crate::midi::{parse_smf, smf_to_notes};
use crate::model::{sample_pianoroll, DEFAULT_FLOOR_DB, DEFAULT_FRAME_PERIOD_S, DEFAULT_PITCH_OFFSET};
use crate::optim::{
    default_threshold_grid, select_beta_ht, train_global, train_ost, RocCriterion, SimplexOptions,
    TrainingSet,
};
use crate::segment::{estimate_transitions_multi, segment, SegmentationStrategy, StrategyKind};
use crate::synth::{write_corpus, SynthSpec};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seed environment variable; precedence is flag > env > default 0.
pub const SEED_ENV_VAR: &str = "ROLLSEG_SEED";

#[derive(Debug, Parser)]
#[command(name = "rollseg", version, about = "Note segmentation of pitch-activity matrices")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment an activity CSV into a binary pianoroll CSV.
    Segment(SegmentArgs),
    /// Train per-pitch HMM parameters on a manifest of pieces.
    Train(TrainArgs),
    /// Run cross-validated evaluation of the segmentation strategies.
    Evaluate(EvaluateArgs),
    /// Generate a seeded synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyFlag {
    Ht,
    St,
    Ost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DecodeFlag {
    Posterior,
    Viterbi,
}

impl From<DecodeFlag> for DecodeRule {
    fn from(f: DecodeFlag) -> Self {
        match f {
            DecodeFlag::Posterior => DecodeRule::PosteriorThreshold,
            DecodeFlag::Viterbi => DecodeRule::Viterbi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RocFlag {
    Fmeasure,
    Youden,
}

impl From<RocFlag> for RocCriterion {
    fn from(f: RocFlag) -> Self {
        match f {
            RocFlag::Fmeasure => RocCriterion::FMeasure,
            RocFlag::Youden => RocCriterion::Youden,
        }
    }
}

#[derive(Debug, Args)]
struct CommonIoArgs {
    /// Replacement for `-inf` cells and lower clamp, dB.
    #[arg(long, default_value_t = DEFAULT_FLOOR_DB)]
    floor_db: f64,
    /// Lowest MIDI pitch represented by row 0.
    #[arg(long, default_value_t = DEFAULT_PITCH_OFFSET)]
    pitch_offset: u8,
    /// Seconds per analysis frame.
    #[arg(long, default_value_t = DEFAULT_FRAME_PERIOD_S)]
    frame_period: f64,
}

impl CommonIoArgs {
    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            floor_db: self.floor_db,
            pitch_offset: self.pitch_offset,
            frame_period_s: self.frame_period,
        }
    }
}

#[derive(Debug, Args)]
struct SegmentArgs {
    /// Segmentation strategy.
    #[arg(long, value_enum)]
    strategy: StrategyFlag,
    /// Hard/soft threshold beta, dB (ht and st).
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Per-pitch transition CSV (st).
    #[arg(long)]
    transitions: Option<PathBuf>,
    /// Trained parameter CSV (ost).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Zero active runs shorter than this many frames.
    #[arg(long, default_value_t = 0)]
    min_duration: usize,
    /// Posterior thresholding or Viterbi decoding.
    #[arg(long, value_enum, default_value = "posterior")]
    decode: DecodeFlag,
    #[command(flatten)]
    io: CommonIoArgs,
    #[arg(long, short = 'j')]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Input activity CSV.
    input: PathBuf,
    /// Output pianoroll CSV.
    output: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Output parameter CSV.
    #[arg(long)]
    out: PathBuf,
    /// Start beta for the optimizer (defaults to the ROC-selected value).
    #[arg(long, allow_hyphen_values = true)]
    beta_init: Option<f64>,
    /// Also run the ROC sweep and report the selected hard threshold.
    #[arg(long)]
    roc: bool,
    /// ROC selection criterion.
    #[arg(long, value_enum, default_value = "fmeasure")]
    roc_criterion: RocFlag,
    /// Where to write the ROC table (with --roc).
    #[arg(long)]
    roc_out: Option<PathBuf>,
    /// Where to write the estimated transition CSV.
    #[arg(long)]
    transitions_out: Option<PathBuf>,
    /// Optimize one shared (alpha, beta) pair instead of per-pitch pairs.
    #[arg(long)]
    global: bool,
    /// Check that every trained pitch's objective did not regress.
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    io: CommonIoArgs,
    #[arg(long, short = 'j')]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Dataset manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Cross-validation mode: loo or mc.
    #[arg(long)]
    mode: String,
    /// Comma-separated strategies to evaluate.
    #[arg(long, default_value = "ht,st,ost")]
    strategies: String,
    /// Fixed hard threshold, dB; omitted means per-fold ROC selection.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// ROC selection criterion when --beta is not given.
    #[arg(long, value_enum, default_value = "fmeasure")]
    roc_criterion: RocFlag,
    /// Training fraction for mc mode.
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
    /// Iteration count for mc mode.
    #[arg(long, default_value_t = 20)]
    iterations: usize,
    /// Emit (ratio, delta FMeas OST-HT) plot data for these ratios.
    #[arg(long)]
    sweep_ratios: Option<String>,
    /// Zero active runs shorter than this many frames.
    #[arg(long, default_value_t = 0)]
    min_duration: usize,
    #[arg(long, value_enum, default_value = "posterior")]
    decode: DecodeFlag,
    /// Output directory for report files.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    io: CommonIoArgs,
    #[arg(long, short = 'j')]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory for the corpus.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    pieces: usize,
    #[arg(long, default_value_t = 6000)]
    frames: usize,
    #[arg(long, default_value_t = 88)]
    pitches: usize,
    #[arg(long, default_value_t = 0.02)]
    tau0: f64,
    #[arg(long, default_value_t = 0.1)]
    tau1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    on_db: f64,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    off_db: f64,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 0.0)]
    leakage: f64,
    #[command(flatten)]
    io: CommonIoArgs,
    #[arg(long, short = 'j')]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Resolve the effective seed: flag > ROLLSEG_SEED env > 0.
fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var(SEED_ENV_VAR)
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

/// Provenance header for outputs. The recorded command line excludes the
/// --jobs flag so results are byte-identical regardless of worker count.
fn make_header(seed: u64) -> FileHeader {
    let mut args: Vec<String> = std::env::args().collect();
    let mut filtered = Vec::with_capacity(args.len());
    let mut skip_next = false;
    for arg in args.drain(..) {
        if skip_next {
            skip_next = false;
            continue;
        }
        if arg == "--jobs" || arg == "-j" {
            skip_next = true;
            continue;
        }
        if arg.starts_with("--jobs=") || arg.starts_with("-j=") {
            continue;
        }
        filtered.push(arg);
    }
    FileHeader {
        tool_version: TOOL_VERSION.to_string(),
        command_line: filtered.join(" "),
        seed: Some(seed),
    }
}

fn configure_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // ignore failure: the global pool can only be built once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Run the CLI; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(args) => cmd_segment(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn cmd_segment(args: SegmentArgs) -> Result<()> {
    configure_jobs(args.jobs);
    let seed = resolve_seed(args.seed);
    let matrix = load_activity_csv(&args.input, &args.io.load_options())?;
    let kind = match args.strategy {
        StrategyFlag::Ht => StrategyKind::HardThreshold {
            beta_ht: args.beta.ok_or_else(|| Error::Invalid("--strategy ht requires --beta".into()))?,
        },
        StrategyFlag::St => {
            let beta = args.beta.ok_or_else(|| Error::Invalid("--strategy st requires --beta".into()))?;
            let path = args
                .transitions
                .as_ref()
                .ok_or_else(|| Error::Invalid("--strategy st requires --transitions".into()))?;
            StrategyKind::SoftThreshold { beta_ht: beta, transitions: load_transitions_csv(path)? }
        }
        StrategyFlag::Ost => {
            let path = args
                .params
                .as_ref()
                .ok_or_else(|| Error::Invalid("--strategy ost requires --params".into()))?;
            StrategyKind::OptimizedSoftThreshold { params: load_params_csv(path)? }
        }
    };
    let strategy = SegmentationStrategy::new(kind)
        .with_min_duration(args.min_duration)
        .with_decode_rule(args.decode.into());
    let roll = segment(&matrix, &strategy)?;
    save_pianoroll_csv(&args.output, &roll, Some(&make_header(seed)))
}

/// Load every manifest entry; SMF ground truth is sampled onto the activity
/// matrix's own grid.
fn load_corpus(entries: &[ManifestEntry], options: &LoadOptions) -> Result<Corpus> {
    let pieces = entries
        .iter()
        .map(|entry| {
            let activity = load_activity_csv(&entry.activity_path, options)?;
            let truth = match entry.kind {
                GroundTruthKind::PianorollCsv => load_pianoroll_csv(&entry.groundtruth_path, options)?,
                GroundTruthKind::Smf => {
                    let bytes = std::fs::read(&entry.groundtruth_path)
                        .map_err(|e| Error::io(&entry.groundtruth_path, e))?;
                    let converted = smf_to_notes(&parse_smf(&bytes)?)?;
                    sample_pianoroll(
                        &converted.notes,
                        activity.grid,
                        activity.pitch_offset,
                        activity.num_pitches(),
                    )
                    .roll
                }
            };
            if truth.num_pitches() != activity.num_pitches()
                || truth.num_frames() != activity.num_frames()
            {
                return Err(Error::Shape(format!(
                    "piece {}: ground truth {}x{} does not match activity {}x{}",
                    entry.id,
                    truth.num_pitches(),
                    truth.num_frames(),
                    activity.num_pitches(),
                    activity.num_frames()
                )));
            }
            Ok(Piece { id: entry.id.clone(), activity, truth })
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(pieces)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    configure_jobs(args.jobs);
    let seed = resolve_seed(args.seed);
    let header = make_header(seed);
    let manifest = load_manifest(&args.manifest)?;
    let corpus = load_corpus(&manifest.entries, &args.io.load_options())?;

    let rolls: Vec<&crate::model::PianoRoll> = corpus.pieces.iter().map(|p| &p.truth).collect();
    let transitions = estimate_transitions_multi(&rolls)?;
    let training = TrainingSet::new(
        corpus
            .pieces
            .iter()
            .map(|p| (p.activity.clone(), p.truth.clone()))
            .collect(),
    )?;

    let criterion: RocCriterion = args.roc_criterion.into();
    let (beta_init, roc_table) = match args.beta_init {
        Some(beta) if !args.roc => (beta, None),
        _ => {
            let (beta, table) = select_beta_ht(&training, &default_threshold_grid(), criterion)?;
            (args.beta_init.unwrap_or(beta), Some((beta, table)))
        }
    };

    let options = SimplexOptions::default();
    let params = if args.global {
        train_global(&training, beta_init, &transitions, &options)?
    } else {
        let outcome = train_ost(&training, beta_init, &transitions, &options)?;
        if args.verify {
            for (p, (final_v, start_v)) in outcome.final_lmse.iter().zip(&outcome.start_lmse).enumerate() {
                if *final_v > start_v + 1e-12 {
                    return Err(Error::Numerical(format!(
                        "pitch {p}: trained objective {final_v} exceeds start {start_v}"
                    )));
                }
            }
            println!(
                "verify: all {} trained pitches at or below the start objective ({} fallback)",
                outcome.final_lmse.len(),
                outcome.fallback_pitches.len()
            );
        }
        outcome.params
    };

    save_params_csv(&args.out, &params, args.io.pitch_offset, Some(&header))?;
    if let Some(path) = &args.transitions_out {
        save_transitions_csv(path, &transitions, args.io.pitch_offset, Some(&header))?;
    }
    if args.roc {
        let (beta, table) = roc_table.expect("roc table computed when --roc is set");
        println!("selected beta_ht: {beta} dB");
        if let Some(path) = &args.roc_out {
            let body = format!("{}{}", header.render(), render_roc_csv(&table));
            std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}

fn parse_strategies(s: &str) -> Result<Vec<EvalStrategy>> {
    s.split(',')
        .map(|tok| match tok.trim() {
            "ht" => Ok(EvalStrategy::Ht),
            "st" => Ok(EvalStrategy::St),
            "ost" => Ok(EvalStrategy::Ost),
            other => Err(Error::Invalid(format!("unknown strategy {other:?}"))),
        })
        .collect()
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    configure_jobs(args.jobs);
    let seed = resolve_seed(args.seed);
    let header = make_header(seed);
    let manifest = load_manifest(&args.manifest)?;
    let corpus = load_corpus(&manifest.entries, &args.io.load_options())?;
    let strategies = parse_strategies(&args.strategies)?;

    let config = EvalConfig {
        beta_ht: match args.beta {
            Some(beta) => BetaHtChoice::Fixed(beta),
            None => BetaHtChoice::Roc(args.roc_criterion.into()),
        },
        min_duration_frames: args.min_duration,
        decode_rule: args.decode.into(),
        simplex: SimplexOptions::default(),
    };

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;

    let mut reports: Vec<EvaluationReport> = Vec::new();
    for strategy in &strategies {
        let report = match args.mode.as_str() {
            "loo" => leave_one_out(&corpus, *strategy, &config)?,
            "mc" => monte_carlo_cv(&corpus, *strategy, &config, args.ratio, args.iterations, seed)?,
            other => return Err(Error::Invalid(format!("unknown mode {other:?} (expected loo or mc)"))),
        };
        let text_path = args.out_dir.join(format!("report_{}.txt", strategy.name()));
        let body = format!("{}{}", header.render(), render_report_text(&report));
        std::fs::write(&text_path, body).map_err(|e| Error::io(&text_path, e))?;
        reports.push(report);
    }

    let csv_path = args.out_dir.join("report.csv");
    let refs: Vec<&EvaluationReport> = reports.iter().collect();
    let body = format!("{}{}", header.render(), render_report_csv(&refs));
    std::fs::write(&csv_path, body).map_err(|e| Error::io(&csv_path, e))?;

    // Table-1-shaped summary: strategy rows, Acc / FMeas columns (macro %)
    let summary_path = args.out_dir.join("summary.txt");
    let mut summary = header.render();
    summary.push_str("strategy  Acc(%)  FMeas(%)\n");
    for report in &reports {
        summary.push_str(&format!(
            "{:<9} {:>6.1} {:>8.1}\n",
            report.strategy,
            report.macro_avg.acc * 100.0,
            report.macro_avg.fmeas * 100.0
        ));
    }
    std::fs::write(&summary_path, summary).map_err(|e| Error::io(&summary_path, e))?;

    if let Some(spec) = &args.sweep_ratios {
        let ratios = spec
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Invalid(format!("bad ratio {tok:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let rows = ratio_sweep(&corpus, &config, &ratios, args.iterations, seed)?;
        let sweep_path = args.out_dir.join("ratio_sweep.csv");
        let mut body = header.render();
        body.push_str("ratio,delta_fmeas\n");
        for (ratio, delta) in rows {
            body.push_str(&format!("{ratio},{delta}\n"));
        }
        std::fs::write(&sweep_path, body).map_err(|e| Error::io(&sweep_path, e))?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    configure_jobs(args.jobs);
    let seed = resolve_seed(args.seed);
    let spec = SynthSpec {
        num_pitches: args.pitches,
        num_frames: args.frames,
        tau0: args.tau0,
        tau1: args.tau1,
        on_db: args.on_db,
        off_db: args.off_db,
        noise_std_db: args.noise,
        leakage: args.leakage,
        floor_db: args.io.floor_db,
        frame_period_s: args.io.frame_period,
        pitch_offset: args.io.pitch_offset,
        seed,
    };
    write_corpus(&args.out_dir, &spec, args.pieces, Some(&make_header(seed)))?;
    Ok(())
}
