//! Implementations of the `cenn` subcommands.

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde_json::json;

use cenn::dynamics::{op_count, run, RunOptions};
use cenn::error::{CennError, Result};
use cenn::fixed::{fixed_run, FixedGrid, ShiftCoeff, ShiftTemplate};
use cenn::grid::CellGrid;
use cenn::manifest::{PairEntry, TaskManifest};
use cenn::pgm::write_pgm;
use cenn::project::{equivalent_capacity, max_stages, speedup, Calibration, FillMode};
use cenn::pso::{accuracy_percent, pair_objective, TrainingPair};
use cenn::quant::{BatchMode, SelectionStrategy, ZeroRule};
use cenn::schedule::{
    analyze_template, build_schedule, cycles_per_pixel, ScheduleOptions, ShifterPooling,
};
use cenn::seeds::mix_seed;
use cenn::sweep::{run_sweep, train_float_baseline, FloatBaseline, SweepOutcome, SweepReport};
use cenn::synth::{synth_pair, SynthConfig, TaskKind};
use cenn::template::{SymmetryPattern, TemplateSet};

use crate::artifacts::{RoundsArtifact, TemplateArtifact};
use crate::settings::FileConfig;
use crate::{Cli, Command, Format};

pub fn dispatch(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = file.resolve_seed(cli.seed);
    let ctx = Context {
        seed,
        file,
        out: cli.out,
        format: cli.format,
    };
    match cli.command {
        Command::SynthData(args) => cmd_synth(&ctx, args),
        Command::Train(args) => cmd_train(&ctx, args),
        Command::Quantize(args) => cmd_quantize(&ctx, args),
        Command::Run(args) => cmd_run(&ctx, args),
        Command::FixedRun(args) => cmd_fixed_run(&ctx, args),
        Command::Analyze(args) => cmd_analyze(&ctx, args),
        Command::Project(args) => cmd_project(&ctx, args),
        Command::Bench(args) => cmd_bench(&ctx, args),
    }
}

struct Context {
    seed: u64,
    file: FileConfig,
    out: Option<PathBuf>,
    format: Format,
}

impl Context {
    fn out_dir(&self) -> Result<&Path> {
        let dir = self
            .out
            .as_deref()
            .ok_or_else(|| CennError::InvalidTask("--out <DIR> is required here".into()))?;
        std::fs::create_dir_all(dir)?;
        Ok(dir)
    }
}

// --- argument parsers for enum-like flags ---

fn parse_strategy(s: &str) -> std::result::Result<SelectionStrategy, String> {
    SelectionStrategy::ALL
        .iter()
        .copied()
        .find(|st| st.tag() == s)
        .ok_or_else(|| {
            format!(
                "unknown strategy {s:?} (choices: {})",
                SelectionStrategy::ALL.map(|st| st.tag()).join(", ")
            )
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchKind {
    Constant,
    LogScale,
}

fn parse_batch(s: &str) -> std::result::Result<BatchKind, String> {
    match s {
        "constant" => Ok(BatchKind::Constant),
        "logscale" => Ok(BatchKind::LogScale),
        _ => Err(format!("unknown batch schedule {s:?} (choices: constant, logscale)")),
    }
}

fn parse_zero_rule(s: &str) -> std::result::Result<ZeroRule, String> {
    match s {
        "half-smallest" => Ok(ZeroRule::HalfSmallest),
        "negated-exponent" => Ok(ZeroRule::NegatedExponent),
        _ => Err(format!(
            "unknown zero rule {s:?} (choices: half-smallest, negated-exponent)"
        )),
    }
}

fn parse_pooling(s: &str) -> std::result::Result<ShifterPooling, String> {
    match s {
        "per-unit" => Ok(ShifterPooling::PerUnit),
        "shared" => Ok(ShifterPooling::SharedPool),
        _ => Err(format!("unknown pooling {s:?} (choices: per-unit, shared)")),
    }
}

fn parse_fill_mode(s: &str) -> std::result::Result<FillMode, String> {
    match s {
        "multipliers" => Ok(FillMode::MultipliersOnly),
        "mixed" => Ok(FillMode::MultipliersThenShifters),
        _ => Err(format!("unknown fill mode {s:?} (choices: multipliers, mixed)")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindArg {
    Noise,
    Edge,
    Detect,
}

fn parse_kind(s: &str) -> std::result::Result<KindArg, String> {
    match s {
        "noise" => Ok(KindArg::Noise),
        "edge" => Ok(KindArg::Edge),
        "detect" => Ok(KindArg::Detect),
        _ => Err(format!("unknown task kind {s:?} (choices: noise, edge, detect)")),
    }
}

// --- synth-data ---

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Task kind: noise, edge, or detect.
    #[arg(long, value_parser = parse_kind)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 32)]
    pub width: usize,
    #[arg(long, default_value_t = 32)]
    pub height: usize,
    /// Number of image pairs.
    #[arg(long, default_value_t = 2)]
    pub count: usize,
    /// Fraction of cells flipped (noise tasks only).
    #[arg(long, default_value_t = 0.1)]
    pub level: f64,
    /// Symmetry pattern recorded in the manifest.
    #[arg(long, default_value = "segmentation")]
    pub pattern: String,
    /// Simulation iterations recorded in the manifest.
    #[arg(long, default_value_t = 15)]
    pub iterations: usize,
    /// Euler step size recorded in the manifest.
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
}

fn cmd_synth(ctx: &Context, args: SynthArgs) -> Result<()> {
    if args.count == 0 {
        return Err(CennError::InvalidTask("--count must be at least 1".into()));
    }
    let pattern = SymmetryPattern::by_name(&args.pattern)?;
    let dir = ctx.out_dir()?;
    let kind = match args.kind {
        KindArg::Noise => TaskKind::Noise { level: args.level },
        KindArg::Edge => TaskKind::Edge,
        KindArg::Detect => TaskKind::Detect,
    };
    let mut entries = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let cfg = SynthConfig {
            width: args.width,
            height: args.height,
            kind,
            seed: mix_seed(ctx.seed, i as u64),
        };
        let (input, target) = synth_pair(&cfg)?;
        let input_name = format!("pair_{i:03}_input.pgm");
        let target_name = format!("pair_{i:03}_target.pgm");
        write_pgm(dir.join(&input_name), &input)?;
        write_pgm(dir.join(&target_name), &target)?;
        entries.push(PairEntry {
            input: input_name.into(),
            target: target_name.into(),
        });
    }
    let manifest = TaskManifest {
        pairs: entries,
        pattern,
        cenn_iterations: args.iterations,
        dt: args.dt,
        boundary: Default::default(),
        init: Default::default(),
    };
    let manifest_path = dir.join("task.json");
    manifest.save(&manifest_path)?;
    println!("pairs={} manifest={}", args.count, manifest_path.display());
    Ok(())
}

// --- train ---

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Task manifest.
    #[arg(long)]
    pub task: PathBuf,
    /// Swarm size override.
    #[arg(long)]
    pub particles: Option<usize>,
    /// Swarm iteration override.
    #[arg(long = "pso-iterations")]
    pub pso_iterations: Option<usize>,
    /// Symmetric search bound override.
    #[arg(long)]
    pub bound: Option<f64>,
}

fn load_task(path: &Path) -> Result<(TaskManifest, Vec<TrainingPair>, RunOptions)> {
    let manifest = TaskManifest::load(path)?;
    let pairs = manifest.load_pairs()?;
    let opts = manifest.run_options();
    Ok((manifest, pairs, opts))
}

fn cmd_train(ctx: &Context, args: TrainArgs) -> Result<()> {
    let (manifest, pairs, opts) = load_task(&args.task)?;
    let pso = ctx.file.resolve_pso(args.particles, args.pso_iterations);
    let mut sweep_cfg = ctx.file.resolve_sweep(pso, ctx.seed);
    if let Some(b) = args.bound {
        sweep_cfg.train_bound = b;
    }
    let baseline = train_float_baseline(&manifest.pattern, manifest.dt, &pairs, &opts, &sweep_cfg)?;
    let accuracy = accuracy_percent(baseline.objective, pairs.len());
    let template = TemplateSet::from_params(&manifest.pattern, &baseline.params, manifest.dt)?;
    let artifact = TemplateArtifact::new(
        ctx.seed,
        baseline.objective,
        accuracy,
        baseline.params.clone(),
        template,
    );
    let dir = ctx.out_dir()?;
    let path = dir.join("trained.json");
    artifact.save(&path)?;
    println!(
        "objective={} accuracy={accuracy} artifact={}",
        baseline.objective,
        path.display()
    );
    Ok(())
}

// --- quantize ---

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    /// Task manifest.
    #[arg(long)]
    pub task: PathBuf,
    /// Start from this trained template instead of training first.
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Restrict the sweep to one selection strategy.
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<SelectionStrategy>,
    /// Restrict the sweep to one batch schedule.
    #[arg(long, value_parser = parse_batch)]
    pub batch: Option<BatchKind>,
    /// Batch fraction for --batch (defaults: constant 0.2, logscale 0.5).
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Restrict the exponent ranges, e.g. --m 2 or --m 0,1,2.
    #[arg(long = "m", value_delimiter = ',')]
    pub m: Option<Vec<i32>>,
    /// Rule for rounding small values to zero.
    #[arg(long = "zero-rule", value_parser = parse_zero_rule)]
    pub zero_rule: Option<ZeroRule>,
    /// Swarm size override.
    #[arg(long)]
    pub particles: Option<usize>,
    /// Swarm iteration override.
    #[arg(long = "pso-iterations")]
    pub pso_iterations: Option<usize>,
    /// Symmetric search bound override (used when training the baseline).
    #[arg(long)]
    pub bound: Option<f64>,
}

/// Baseline from an existing template artifact: its own outputs become the
/// reference targets.
fn baseline_from_template(
    path: &Path,
    manifest: &TaskManifest,
    pairs: &[TrainingPair],
    opts: &RunOptions,
) -> Result<FloatBaseline> {
    let tpl = TemplateArtifact::load_template(path)?;
    let params = tpl.to_params();
    let expected = manifest.pattern.free_count() + 1;
    if params.len() != expected {
        return Err(CennError::ParamLength {
            expected,
            got: params.len(),
        });
    }
    let tpl = TemplateSet::from_params(&manifest.pattern, &params, manifest.dt)?;
    let mut ideals = Vec::with_capacity(pairs.len());
    let mut objective = 0.0;
    for pair in pairs {
        objective += pair_objective(&tpl, pair, opts);
        let result = run(&tpl, &pair.input, opts)?;
        ideals.push(TrainingPair {
            input: pair.input.clone(),
            target: result.output,
        });
    }
    Ok(FloatBaseline {
        params,
        objective,
        ideals,
    })
}

fn cmd_quantize(ctx: &Context, args: QuantizeArgs) -> Result<()> {
    let (manifest, pairs, opts) = load_task(&args.task)?;
    let pso = ctx.file.resolve_pso(args.particles, args.pso_iterations);
    let mut cfg = ctx.file.resolve_sweep(pso, ctx.seed);
    if let Some(b) = args.bound {
        cfg.train_bound = b;
    }
    if let Some(strategy) = args.strategy {
        cfg.strategies = vec![strategy];
    }
    if let Some(kind) = args.batch {
        let batch = match kind {
            BatchKind::Constant => BatchMode::Constant {
                fraction: args.fraction.unwrap_or(0.2),
            },
            BatchKind::LogScale => BatchMode::LogScale {
                fraction: args.fraction.unwrap_or(0.5),
            },
        };
        batch.validate()?;
        cfg.batches = vec![batch];
    } else if args.fraction.is_some() {
        return Err(CennError::InvalidTask(
            "--fraction needs --batch to apply to".into(),
        ));
    }
    if let Some(m) = &args.m {
        cfg.max_exponents = m.clone();
    }
    if let Some(rule) = args.zero_rule {
        cfg.zero_rule = rule;
    }

    let baseline = match &args.template {
        Some(path) => baseline_from_template(path, &manifest, &pairs, &opts)?,
        None => train_float_baseline(&manifest.pattern, manifest.dt, &pairs, &opts, &cfg)?,
    };

    let dir = ctx.out_dir()?;
    let report_path = dir.join(match ctx.format {
        Format::Csv => "report.csv",
        Format::Json => "report.json",
    });
    let mut csv_file = match ctx.format {
        Format::Csv => {
            let mut f = File::create(&report_path)?;
            writeln!(
                f,
                "# seed={} version={} float_objective={}",
                ctx.seed,
                env!("CARGO_PKG_VERSION"),
                baseline.objective
            )?;
            f.write_all(SweepReport::CSV_HEADER.as_bytes())?;
            f.flush()?;
            Some(f)
        }
        Format::Json => None,
    };

    let mut rows = Vec::new();
    let flush_row = |outcome: &SweepOutcome,
                     rows: &mut Vec<cenn::sweep::SweepRow>,
                     csv_file: &mut Option<File>|
     -> Result<()> {
        rows.push(outcome.row.clone());
        // Flush the report after every row so an interrupted sweep still
        // leaves a usable partial report.
        match csv_file {
            Some(f) => {
                f.write_all(SweepReport::csv_row(&outcome.row).as_bytes())?;
                f.flush()?;
            }
            None => {
                let report = SweepReport::new(ctx.seed, baseline.objective, rows.clone());
                std::fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n")?;
            }
        }
        let stem = format!(
            "row_{:02}_{}_{}_m{}",
            outcome.spec.index, outcome.row.strategy, outcome.row.batch, outcome.row.m
        );
        let rounds = RoundsArtifact {
            seed: ctx.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            strategy: outcome.row.strategy.clone(),
            batch: outcome.row.batch.clone(),
            m: outcome.row.m,
            rounds: outcome.result.rounds.clone(),
        };
        std::fs::write(
            dir.join(format!("{stem}.rounds.json")),
            serde_json::to_string_pretty(&rounds)? + "\n",
        )?;
        TemplateArtifact::new(
            ctx.seed,
            outcome.result.objective,
            outcome.result.accuracy,
            outcome.result.params.clone(),
            outcome.result.template.clone(),
        )
        .save(&dir.join(format!("{stem}.template.json")))?;
        println!(
            "row {} {} {} m={} accuracy={:.2} rounds={}",
            outcome.spec.index,
            outcome.row.strategy,
            outcome.row.batch,
            outcome.row.m,
            outcome.row.accuracy,
            outcome.row.rounds
        );
        Ok(())
    };

    run_sweep(&manifest.pattern, manifest.dt, &baseline, &opts, &cfg, |o| {
        flush_row(o, &mut rows, &mut csv_file)
    })?;

    let best = rows
        .iter()
        .max_by(|a, b| a.accuracy.total_cmp(&b.accuracy))
        .expect("sweep produced rows");
    println!(
        "rows={} best={}/{} m={} accuracy={:.2} report={}",
        rows.len(),
        best.strategy,
        best.batch,
        best.m,
        best.accuracy,
        report_path.display()
    );
    Ok(())
}

// --- run / fixed-run ---

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Task manifest.
    #[arg(long)]
    pub task: PathBuf,
    /// Template to simulate (artifact or bare template JSON).
    #[arg(long)]
    pub template: PathBuf,
}

fn cmd_run(ctx: &Context, args: RunArgs) -> Result<()> {
    let (_, pairs, opts) = load_task(&args.task)?;
    let tpl = TemplateArtifact::load_template(&args.template)?;
    let mut objective = 0.0;
    for (i, pair) in pairs.iter().enumerate() {
        let result = run(&tpl, &pair.input, &opts)?;
        objective += pair.target.mean_abs_diff(&result.output)?;
        if let Some(dir) = &ctx.out {
            std::fs::create_dir_all(dir)?;
            write_pgm(dir.join(format!("output_{i:03}.pgm")), &result.output)?;
        }
    }
    let accuracy = accuracy_percent(objective, pairs.len());
    match ctx.format {
        Format::Csv => println!("objective={objective} accuracy={accuracy}"),
        Format::Json => println!(
            "{}",
            json!({"objective": objective, "accuracy": accuracy})
        ),
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct FixedRunArgs {
    /// Task manifest.
    #[arg(long)]
    pub task: PathBuf,
    /// Template to simulate; every coefficient must be zero or a power of two.
    #[arg(long)]
    pub template: PathBuf,
    /// Fraction bits of the 18-bit words.
    #[arg(long = "frac-bits", default_value_t = 12)]
    pub frac_bits: u32,
}

fn cmd_fixed_run(ctx: &Context, args: FixedRunArgs) -> Result<()> {
    let (_, pairs, opts) = load_task(&args.task)?;
    let tpl = TemplateArtifact::load_template(&args.template)?;
    let shift_tpl = ShiftTemplate::from_template(&tpl)?;
    let mut max_divergence: f64 = 0.0;
    let mut saturated = false;
    for (i, pair) in pairs.iter().enumerate() {
        let fixed_input = FixedGrid::from_grid(&pair.input, args.frac_bits)?;
        let fixed = fixed_run(&shift_tpl, &fixed_input, &opts)?;
        let float = run(&tpl, &pair.input, &opts)?;
        max_divergence = max_divergence.max(float.output.max_abs_diff(&fixed.output)?);
        saturated |= fixed.saturated;
        if let Some(dir) = &ctx.out {
            std::fs::create_dir_all(dir)?;
            write_pgm(dir.join(format!("fixed_output_{i:03}.pgm")), &fixed.output)?;
        }
    }
    match ctx.format {
        Format::Csv => println!("max_divergence={max_divergence} saturated={saturated}"),
        Format::Json => println!(
            "{}",
            json!({"max_divergence": max_divergence, "saturated": saturated})
        ),
    }
    Ok(())
}

// --- analyze ---

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Quantized template (artifact or bare template JSON).
    #[arg(long)]
    pub template: PathBuf,
    /// Shifters per convolution unit: 1, 3, or 9.
    #[arg(long, default_value_t = 1)]
    pub shifters: u32,
    /// Schedule zero coefficients instead of skipping them.
    #[arg(long = "keep-zeros")]
    pub keep_zeros: bool,
    /// Do not merge repeated coefficients.
    #[arg(long = "no-merge")]
    pub no_merge: bool,
    /// Pipeline overhead cycles added to the multiply cycles.
    #[arg(long, default_value_t = 2)]
    pub overhead: u32,
    /// Shifter pooling: per-unit or shared.
    #[arg(long, value_parser = parse_pooling, default_value = "per-unit")]
    pub pooling: ShifterPooling,
}

fn to_shift_matrix(m: &[[f64; 3]; 3]) -> Result<[[ShiftCoeff; 3]; 3]> {
    let mut out = [[ShiftCoeff::Zero; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = ShiftCoeff::from_f64(m[r][c])?;
        }
    }
    Ok(out)
}

fn cmd_analyze(ctx: &Context, args: AnalyzeArgs) -> Result<()> {
    let tpl = TemplateArtifact::load_template(&args.template)?;
    let opts = ScheduleOptions {
        skip_zeros: !args.keep_zeros,
        merge_repeats: !args.no_merge,
    };
    let a_stats = analyze_template(&tpl.a);
    let b_stats = analyze_template(&tpl.b);
    let plan_a = build_schedule(&to_shift_matrix(&tpl.a)?, args.shifters, &opts)?;
    let plan_b = build_schedule(&to_shift_matrix(&tpl.b)?, args.shifters, &opts)?;
    let cpp = cycles_per_pixel(&plan_a, &plan_b, args.pooling, args.overhead)?;
    match ctx.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "a_stats": a_stats,
                "b_stats": b_stats,
                "a_plan": plan_a,
                "b_plan": plan_b,
                "cycles_per_pixel": cpp,
            }))?
        ),
        Format::Csv => {
            println!(
                "feedback: {} zeros, {} distinct nonzero, max repetition {}",
                a_stats.zero_count, a_stats.distinct_nonzero_count, a_stats.max_repetition
            );
            print!("feedback schedule: {plan_a}");
            println!(
                "control: {} zeros, {} distinct nonzero, max repetition {}",
                b_stats.zero_count, b_stats.distinct_nonzero_count, b_stats.max_repetition
            );
            print!("control schedule: {plan_b}");
            println!("cycles_per_pixel={cpp}");
        }
    }
    Ok(())
}

// --- project ---

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Target device from the calibration catalog.
    #[arg(long, default_value = "XC4LX25")]
    pub device: String,
    /// Shifters per convolution unit: 1, 3, or 9.
    #[arg(long, default_value_t = 1)]
    pub shifters: u32,
    /// Fill mode: multipliers (baseline) or mixed.
    #[arg(long, value_parser = parse_fill_mode, default_value = "mixed")]
    pub mode: FillMode,
    /// Achievable clock in MHz.
    #[arg(long, default_value_t = 350.0)]
    pub clock: f64,
    /// Cycles per pixel of the projected design.
    #[arg(long, default_value_t = 9)]
    pub cpp: u32,
    /// Cycles per pixel of the multipliers-only baseline (defaults to
    /// --cpp).
    #[arg(long = "baseline-cpp")]
    pub baseline_cpp: Option<u32>,
    /// Calibration file overriding the built-in one.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Compare architectures at equal clocks.
    #[arg(long = "ignore-clock")]
    pub ignore_clock: bool,
}

fn cmd_project(ctx: &Context, args: ProjectArgs) -> Result<()> {
    let cal = match &args.calibration {
        Some(path) => Calibration::from_path(path)?,
        None => Calibration::builtin(),
    };
    let device = cal.device(&args.device)?;
    let cfg = cal.stage_config(args.shifters)?;
    let plan = max_stages(device, cfg, args.mode, args.clock, args.cpp)?;
    let baseline = max_stages(
        device,
        cfg,
        FillMode::MultipliersOnly,
        args.clock,
        args.baseline_cpp.unwrap_or(args.cpp),
    )?;
    let capacity = equivalent_capacity(&plan)?;
    let ratio = speedup(&plan, &baseline, args.ignore_clock)?;
    match ctx.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "device": device.name,
                "plan": plan,
                "baseline": baseline,
                "capacity": capacity,
                "speedup": ratio,
            }))?
        ),
        Format::Csv => {
            println!(
                "device,shifters,stages,mult_stages,shift_stages,le_used,reg_used,capacity,baseline_stages,speedup"
            );
            println!(
                "{},{},{},{},{},{},{},{:.2},{},{:.4}",
                device.name,
                args.shifters,
                plan.stage_count,
                plan.mult_stages,
                plan.shift_stages,
                plan.le_used,
                plan.reg_used,
                capacity,
                baseline.stage_count,
                ratio
            );
        }
    }
    if plan.budget_exceeded {
        eprintln!("warning: not even one stage fits this budget");
    }
    Ok(())
}

// --- bench ---

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Width of the hypothetical workload.
    #[arg(long, default_value_t = 1920)]
    pub width: u64,
    /// Height of the hypothetical workload.
    #[arg(long, default_value_t = 1080)]
    pub height: u64,
    /// Simulation iterations of the hypothetical workload.
    #[arg(long, default_value_t = 100)]
    pub iterations: u64,
    /// Edge length of the grid used for the timed measurement.
    #[arg(long = "measure-size", default_value_t = 128)]
    pub measure_size: usize,
    /// Simulation iterations for the timed measurement.
    #[arg(long = "measure-iterations", default_value_t = 50)]
    pub measure_iterations: usize,
}

fn cmd_bench(ctx: &Context, args: BenchArgs) -> Result<()> {
    let ops = op_count(args.width, args.height, args.iterations)?;

    // A dense template so the measurement covers the full update cost.
    let tpl = TemplateSet::new(
        [[0.1, 0.15, 0.1], [0.15, 2.0, 0.15], [0.1, 0.15, 0.1]],
        [[-0.1, 0.2, -0.1], [0.2, 0.8, 0.2], [-0.1, 0.2, -0.1]],
        -0.25,
        0.25,
    )?;
    let n = args.measure_size.max(8);
    let data = (0..n * n)
        .map(|i| if (i / n + i) % 2 == 0 { 0.75 } else { -0.75 })
        .collect();
    let input = CellGrid::from_vec(n, n, data)?;
    let opts = RunOptions {
        iterations: args.measure_iterations.max(1),
        ..RunOptions::default()
    };
    let started = Instant::now();
    let result = run(&tpl, &input, &opts)?;
    let elapsed = started.elapsed().as_secs_f64();
    let updates = (result.iterations_run * n * n) as f64;
    let ops_per_s = updates * 39.0 / elapsed;
    let projected_s = ops as f64 / ops_per_s;
    match ctx.format {
        Format::Json => println!(
            "{}",
            json!({
                "op_count": ops,
                "measured_mops_per_s": ops_per_s / 1e6,
                "projected_seconds": projected_s,
            })
        ),
        Format::Csv => {
            println!("op_count={ops}");
            println!("measured_mops_per_s={:.1}", ops_per_s / 1e6);
            println!("projected_seconds={projected_s:.2}");
        }
    }
    Ok(())
}
