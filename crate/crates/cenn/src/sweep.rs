//! Quantization sweeps: train one float template, freeze its outputs as the
//! reference behavior, then quantize it under every requested combination
//! of selection strategy, batch schedule, and coefficient range, reporting
//! how much behavior each combination preserves.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::{run, RunOptions};
use crate::error::Result;
use crate::pso::{train_template, PsoConfig, SearchSpace, TrainingPair};
use crate::quant::{
    incremental_quantize, BatchMode, QuantSet, QuantizeConfig, QuantizeResult, SelectionStrategy,
    ZeroRule,
};
use crate::seeds::mix_seed;
use crate::template::{SymmetryPattern, TemplateSet};

/// Everything a sweep varies, plus shared training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub strategies: Vec<SelectionStrategy>,
    pub batches: Vec<BatchMode>,
    /// Largest coefficient exponents `m` to try; each row uses the
    /// symmetric set with `k = -m`.
    pub max_exponents: Vec<i32>,
    #[serde(default)]
    pub zero_rule: ZeroRule,
    /// Swarm settings for the float training pass and for every
    /// quantization retraining round (seeds are derived per use).
    pub pso: PsoConfig,
    /// Symmetric search bound for the float training pass.
    pub train_bound: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            strategies: SelectionStrategy::ALL.to_vec(),
            batches: vec![
                BatchMode::Constant { fraction: 0.2 },
                BatchMode::LogScale { fraction: 0.5 },
            ],
            max_exponents: vec![0, 1, 2, 3, 4],
            zero_rule: ZeroRule::default(),
            pso: PsoConfig::default(),
            train_bound: 4.0,
            seed: 0,
        }
    }
}

/// One cell of the sweep grid, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowSpec {
    pub index: usize,
    pub strategy: SelectionStrategy,
    pub batch: BatchMode,
    pub max_exponent: i32,
}

/// The sweep grid in canonical order: strategies outermost, then batch
/// schedules, then exponent ranges. Row seeds derive from this order, so
/// a row's results do not depend on which other rows run.
pub fn enumerate_rows(cfg: &SweepConfig) -> Vec<RowSpec> {
    let mut rows = Vec::new();
    for &strategy in &cfg.strategies {
        for &batch in &cfg.batches {
            for &max_exponent in &cfg.max_exponents {
                rows.push(RowSpec {
                    index: rows.len(),
                    strategy,
                    batch,
                    max_exponent,
                });
            }
        }
    }
    rows
}

/// The float training result a sweep quantizes against.
#[derive(Debug, Clone)]
pub struct FloatBaseline {
    pub params: Vec<f64>,
    /// Objective against the original targets.
    pub objective: f64,
    /// The original inputs paired with the trained template's own outputs.
    /// Quantized rows are scored against these, so the float template
    /// itself scores a perfect 100%.
    pub ideals: Vec<TrainingPair>,
}

/// Trains the float template and freezes its outputs as reference targets.
pub fn train_float_baseline(
    pattern: &SymmetryPattern,
    dt: f64,
    pairs: &[TrainingPair],
    opts: &RunOptions,
    cfg: &SweepConfig,
) -> Result<FloatBaseline> {
    let space = SearchSpace::unconstrained(pattern.free_count() + 1, cfg.train_bound);
    let train_cfg = PsoConfig {
        seed: mix_seed(cfg.seed, 1),
        ..cfg.pso.clone()
    };
    let trained = train_template(pattern, dt, pairs, opts, &space, &train_cfg)?;
    let tpl = TemplateSet::from_params(pattern, &trained.params, dt)?;
    let mut ideals = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let result = run(&tpl, &pair.input, opts)?;
        ideals.push(TrainingPair {
            input: pair.input.clone(),
            target: result.output,
        });
    }
    Ok(FloatBaseline {
        params: trained.params,
        objective: trained.objective,
        ideals,
    })
}

/// One finished sweep row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: String,
    pub batch: String,
    /// Batch fraction, echoed so rows are self-describing.
    pub fraction: f64,
    /// Largest coefficient exponent; the set spans `{0} ∪ {±2^p : -m..=m}`.
    pub m: i32,
    pub objective: f64,
    pub accuracy: f64,
    pub rounds: usize,
    pub wall_time_s: f64,
}

/// A sweep row together with its full quantization record (round logs,
/// final template) for artifact dumps.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub spec: RowSpec,
    pub row: SweepRow,
    pub result: QuantizeResult,
}

/// Runs every row of the sweep against the baseline's reference outputs.
/// `on_row` fires as each row finishes (rows run in canonical order), so
/// callers can flush partial reports; its error aborts the sweep.
pub fn run_sweep(
    pattern: &SymmetryPattern,
    dt: f64,
    baseline: &FloatBaseline,
    opts: &RunOptions,
    cfg: &SweepConfig,
    mut on_row: impl FnMut(&SweepOutcome) -> Result<()>,
) -> Result<Vec<SweepOutcome>> {
    let mut outcomes = Vec::new();
    for spec in enumerate_rows(cfg) {
        let started = Instant::now();
        let m = spec.max_exponent;
        let quant_cfg = QuantizeConfig {
            set: QuantSet::new(-m, m)?,
            strategy: spec.strategy,
            batch: spec.batch,
            zero_rule: cfg.zero_rule,
            pso: cfg.pso.clone(),
            seed: mix_seed(cfg.seed, 1000 + spec.index as u64),
        };
        let result = incremental_quantize(
            pattern,
            dt,
            &baseline.ideals,
            opts,
            &baseline.params,
            &quant_cfg,
        )?;
        let fraction = spec.batch.fraction();
        let outcome = SweepOutcome {
            spec,
            row: SweepRow {
                strategy: spec.strategy.tag().to_string(),
                batch: spec.batch.tag().to_string(),
                fraction,
                m,
                objective: result.objective,
                accuracy: result.accuracy,
                rounds: result.rounds.len(),
                wall_time_s: started.elapsed().as_secs_f64(),
            },
            result,
        };
        on_row(&outcome)?;
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// The serialized sweep report: environment stamp plus one row per
/// combination, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub version: String,
    pub float_objective: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn new(seed: u64, float_objective: f64, rows: Vec<SweepRow>) -> SweepReport {
        SweepReport {
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            float_objective,
            rows,
        }
    }

    /// CSV rendering with a header line; `wall_time_s` is the only
    /// run-dependent column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "strategy,batch,fraction,m,objective,accuracy,rounds,wall_time_s\n",
        );
        for row in &self.rows {
            out.push_str(&Self::csv_row(row));
        }
        out
    }

    pub fn csv_row(row: &SweepRow) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3}\n",
            row.strategy,
            row.batch,
            row.fraction,
            row.m,
            row.objective,
            row.accuracy,
            row.rounds,
            row.wall_time_s
        )
    }

    pub const CSV_HEADER: &'static str =
        "strategy,batch,fraction,m,objective,accuracy,rounds,wall_time_s\n";
}
