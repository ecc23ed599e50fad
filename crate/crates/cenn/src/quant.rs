//! Incremental powers-of-two quantization of template coefficients.
//!
//! Coefficients are mapped onto the set `{0} U {±2^p : k <= p <= m}` a batch
//! at a time: a selection strategy picks which coefficients to quantize next,
//! those are frozen at their quantized values, and the remaining free
//! parameters (always including the bias) are retrained to compensate before
//! the next batch. The bias itself is never quantized; the final round leaves
//! only the bias free, so the loop ends with a bias-only retraining pass.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::RunOptions;
use crate::error::{CennError, Result};
use crate::pso::{
    accuracy_percent, train_template, PsoConfig, SearchSpace, TrainingPair,
};
use crate::seeds::mix_seed;
use crate::template::{SymmetryPattern, TemplateSet};

/// Exact power of two for small exponents.
#[inline]
pub fn pow2(p: i32) -> f64 {
    2.0f64.powi(p)
}

/// Exponent range limit; keeps every threshold comfortably inside normal
/// `f64` territory.
const MAX_ABS_EXPONENT: i32 = 60;

/// The target value set `{0} U {±2^p : k <= p <= m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantSet {
    k: i32,
    m: i32,
}

impl QuantSet {
    pub fn new(k: i32, m: i32) -> Result<Self> {
        if k > m {
            return Err(CennError::InvalidQuantRange { k, m });
        }
        for e in [k, m] {
            if e.abs() > MAX_ABS_EXPONENT {
                return Err(CennError::ExponentRange {
                    exponent: e,
                    min: -MAX_ABS_EXPONENT,
                    max: MAX_ABS_EXPONENT,
                });
            }
        }
        Ok(Self { k, m })
    }

    /// Smallest exponent in the set.
    pub fn k(&self) -> i32 {
        self.k
    }

    /// Largest exponent in the set.
    pub fn m(&self) -> i32 {
        self.m
    }

    /// Largest representable magnitude, `2^m`.
    pub fn max_value(&self) -> f64 {
        pow2(self.m)
    }

    /// Smallest nonzero magnitude, `2^k`.
    pub fn min_magnitude(&self) -> f64 {
        pow2(self.k)
    }

    /// Number of distinct values, `2 * (m - k + 1) + 1`.
    pub fn len(&self) -> usize {
        2 * (self.m - self.k + 1) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All values, sorted ascending.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for p in (self.k..=self.m).rev() {
            out.push(-pow2(p));
        }
        out.push(0.0);
        for p in self.k..=self.m {
            out.push(pow2(p));
        }
        out
    }

    /// Exact membership test.
    pub fn contains(&self, v: f64) -> bool {
        if v == 0.0 {
            return true;
        }
        match exact_log2(v.abs()) {
            Some(p) => p >= self.k && p <= self.m,
            None => false,
        }
    }

    /// Two's-complement bits needed to encode one coefficient: enough bits to
    /// enumerate all values, plus one for the sign.
    pub fn bit_width(&self) -> u32 {
        let count = self.len() as u32;
        let ceil_log2 = count.ilog2() + if count.is_power_of_two() { 0 } else { 1 };
        ceil_log2 + 1
    }
}

/// Returns `p` when `a == 2^p` exactly (for finite, normal, positive `a`).
fn exact_log2(a: f64) -> Option<i32> {
    if !(a.is_finite() && a > 0.0) {
        return None;
    }
    let bits = a.to_bits();
    let mantissa = bits & ((1u64 << 52) - 1);
    let exponent = ((bits >> 52) & 0x7FF) as i32;
    if mantissa == 0 && exponent != 0 {
        Some(exponent - 1023)
    } else {
        None
    }
}

/// The cutoff below which a coefficient collapses to zero instead of the
/// smallest power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroRule {
    /// Magnitudes below `2^(k-1)` — half the smallest representable power,
    /// the natural nearest-value boundary — become zero.
    HalfSmallest,
    /// Magnitudes below `2^(-k-1)` become zero. Compatibility alternative
    /// for setups that state the cutoff with the exponent sign flipped;
    /// equivalent to `HalfSmallest` only at `k = 0`.
    NegatedExponent,
}

impl Default for ZeroRule {
    fn default() -> Self {
        ZeroRule::HalfSmallest
    }
}

impl ZeroRule {
    fn threshold(&self, set: &QuantSet) -> f64 {
        match self {
            ZeroRule::HalfSmallest => pow2(set.k - 1),
            ZeroRule::NegatedExponent => pow2(-set.k - 1),
        }
    }
}

/// Maps a coefficient to the nearest value in the set, with ties broken
/// toward the larger magnitude, using the default zero cutoff.
pub fn quantize_value(set: &QuantSet, v: f64) -> f64 {
    quantize_value_with(set, v, ZeroRule::default())
}

/// [`quantize_value`] with an explicit zero cutoff rule.
pub fn quantize_value_with(set: &QuantSet, v: f64, rule: ZeroRule) -> f64 {
    debug_assert!(v.is_finite());
    if v == 0.0 {
        return 0.0;
    }
    let a = v.abs();
    if a < rule.threshold(set) {
        return 0.0;
    }
    let sign = if v < 0.0 { -1.0 } else { 1.0 };
    // Subnormals sit far below any permitted threshold, but the threshold
    // itself may be disabled by the flipped rule; treat them as zero.
    let Some(e) = floor_log2(a) else {
        return 0.0;
    };
    // Within [2^e, 2^(e+1)) the midpoint is 1.5 * 2^e; at or above it the
    // nearest power is 2^(e+1) (the "at" case is the larger-magnitude tie).
    let p = if a >= 1.5 * pow2(e) { e + 1 } else { e };
    sign * pow2(p.clamp(set.k, set.m))
}

/// `floor(log2(a))` for finite positive normal `a`, exact via bit extraction.
fn floor_log2(a: f64) -> Option<i32> {
    if !(a.is_finite() && a > 0.0) {
        return None;
    }
    let exponent = ((a.to_bits() >> 52) & 0x7FF) as i32;
    if exponent == 0 {
        None // subnormal
    } else {
        Some(exponent - 1023)
    }
}

/// Distance from a value to its nearest power of two (of either sign),
/// ignoring the set bounds. Zero maps to distance zero.
pub fn nn_distance(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let a = v.abs();
    let Some(e) = floor_log2(a) else {
        return a;
    };
    let lower = pow2(e);
    let upper = pow2(e + 1);
    if a >= 0.5 * (lower + upper) {
        upper - a
    } else {
        a - lower
    }
}

/// Order in which un-quantized coefficients are picked for freezing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    /// Uniformly random order.
    Random,
    /// Largest magnitude first.
    LargestMagnitude,
    /// Largest magnitude-times-occurrence first, prioritizing coefficients
    /// that appear in many template cells.
    WeightedMagnitude,
    /// Smallest distance to a power of two first.
    NearestPower,
    /// Smallest occurrence-normalized distance first: distance divided by
    /// how many template cells share the coefficient.
    WeightedNearestPower,
}

impl SelectionStrategy {
    pub const ALL: [SelectionStrategy; 5] = [
        SelectionStrategy::Random,
        SelectionStrategy::LargestMagnitude,
        SelectionStrategy::WeightedMagnitude,
        SelectionStrategy::NearestPower,
        SelectionStrategy::WeightedNearestPower,
    ];

    /// Short stable identifier used in file names and reports.
    pub fn tag(&self) -> &'static str {
        match self {
            SelectionStrategy::Random => "random",
            SelectionStrategy::LargestMagnitude => "magnitude",
            SelectionStrategy::WeightedMagnitude => "weighted-magnitude",
            SelectionStrategy::NearestPower => "nearest",
            SelectionStrategy::WeightedNearestPower => "weighted-nearest",
        }
    }
}

/// Reorders `candidates` (indices into `params`) by selection priority;
/// the first entries are quantized first. Deterministic strategies use a
/// stable sort, so ties keep their index order. Only [`SelectionStrategy::
/// Random`] consumes the RNG.
pub fn rank_candidates(
    strategy: SelectionStrategy,
    params: &[f64],
    occurrences: &[usize],
    candidates: &[usize],
    rng: &mut impl Rng,
) -> Vec<usize> {
    let mut order: Vec<usize> = candidates.to_vec();
    match strategy {
        SelectionStrategy::Random => order.shuffle(rng),
        SelectionStrategy::LargestMagnitude => {
            order.sort_by(|&a, &b| params[b].abs().total_cmp(&params[a].abs()));
        }
        SelectionStrategy::WeightedMagnitude => {
            let key = |i: usize| params[i].abs() * occurrences[i] as f64;
            order.sort_by(|&a, &b| key(b).total_cmp(&key(a)));
        }
        SelectionStrategy::NearestPower => {
            order.sort_by(|&a, &b| nn_distance(params[a]).total_cmp(&nn_distance(params[b])));
        }
        SelectionStrategy::WeightedNearestPower => {
            let key = |i: usize| nn_distance(params[i]) / occurrences[i] as f64;
            order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
        }
    }
    order
}

/// How many coefficients each round quantizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// A fixed share of the total coefficient count per round:
    /// `ceil(fraction * total)`.
    Constant { fraction: f64 },
    /// A share of the coefficients still un-quantized, shrinking every
    /// round: `round(fraction * remaining)`, at least 1.
    LogScale { fraction: f64 },
}

impl BatchMode {
    /// The configured fraction, whichever schedule applies it.
    pub fn fraction(&self) -> f64 {
        match self {
            BatchMode::Constant { fraction } | BatchMode::LogScale { fraction } => *fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.fraction();
        if !(f.is_finite() && f > 0.0 && f <= 1.0) {
            return Err(CennError::InvalidPsoConfig(format!(
                "batch fraction must be in (0, 1], got {f}"
            )));
        }
        Ok(())
    }

    /// Short stable identifier used in file names and reports.
    pub fn tag(&self) -> &'static str {
        match self {
            BatchMode::Constant { .. } => "constant",
            BatchMode::LogScale { .. } => "logscale",
        }
    }
}

/// Batch size for one round, given the total coefficient count and how many
/// are still un-quantized. Always in `1..=remaining` (for `remaining > 0`).
pub fn batch_size(mode: &BatchMode, total: usize, remaining: usize) -> usize {
    let raw = match mode {
        BatchMode::Constant { fraction } => (fraction * total as f64).ceil() as usize,
        // Round half up so e.g. half of 5 picks 3.
        BatchMode::LogScale { fraction } => (fraction * remaining as f64 + 0.5).floor() as usize,
    };
    raw.max(1).min(remaining)
}

/// Full configuration for the incremental loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizeConfig {
    pub set: QuantSet,
    pub strategy: SelectionStrategy,
    pub batch: BatchMode,
    #[serde(default)]
    pub zero_rule: ZeroRule,
    /// Swarm settings for each retraining round; its `seed` field is ignored
    /// in favor of per-round seeds derived from `seed` below.
    pub pso: PsoConfig,
    pub seed: u64,
}

/// What happened in one quantization round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Parameter indices frozen this round.
    pub selected: Vec<usize>,
    /// Quantized values assigned to those indices.
    pub values: Vec<f64>,
    /// Training objective after this round's retraining pass.
    pub objective_after: f64,
    pub accuracy_after: f64,
    /// Particle re-initializations during this round's retraining.
    pub retrain_reinits: usize,
}

/// Result of [`incremental_quantize`].
#[derive(Debug, Clone)]
pub struct QuantizeResult {
    /// Final parameter vector: every template coefficient is in the target
    /// set, the bias (last entry) stays continuous.
    pub params: Vec<f64>,
    /// The assembled quantized template.
    pub template: TemplateSet,
    pub objective: f64,
    pub accuracy: f64,
    pub rounds: Vec<RoundRecord>,
}

/// Runs the full partition / quantize / freeze / retrain loop from a trained
/// float parameter vector.
pub fn incremental_quantize(
    pattern: &SymmetryPattern,
    dt: f64,
    pairs: &[TrainingPair],
    opts: &RunOptions,
    start_params: &[f64],
    cfg: &QuantizeConfig,
) -> Result<QuantizeResult> {
    let free = pattern.free_count();
    if start_params.len() != free + 1 {
        return Err(CennError::ParamLength {
            expected: free + 1,
            got: start_params.len(),
        });
    }
    if start_params.iter().any(|v| !v.is_finite()) {
        return Err(CennError::NonFinite {
            context: "starting parameters".into(),
        });
    }
    cfg.batch.validate()?;

    let occurrences: Vec<usize> = (0..free).map(|i| pattern.occurrences(i)).collect();
    let mut space = SearchSpace {
        base: start_params.to_vec(),
        frozen: vec![false; free + 1],
        bound: cfg.set.max_value(),
    };
    let mut remaining: Vec<usize> = (0..free).collect();
    let mut selection_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 7));
    let mut rounds = Vec::new();
    let mut objective = f64::INFINITY;
    let mut round = 0usize;

    while !remaining.is_empty() {
        let size = batch_size(&cfg.batch, free, remaining.len());
        let order = rank_candidates(
            cfg.strategy,
            &space.base,
            &occurrences,
            &remaining,
            &mut selection_rng,
        );
        let selected: Vec<usize> = order[..size].to_vec();
        let mut values = Vec::with_capacity(size);
        for &idx in &selected {
            let q = quantize_value_with(&cfg.set, space.base[idx], cfg.zero_rule);
            space.freeze(idx, q);
            values.push(q);
        }
        remaining.retain(|idx| !selected.contains(idx));

        // Retrain everything still free (always at least the bias) so later
        // rounds start from compensated parameters. Results are kept even
        // when the objective regresses; the swarm is re-seeded per round.
        let round_cfg = PsoConfig {
            seed: mix_seed(cfg.seed, 101 + round as u64),
            ..cfg.pso.clone()
        };
        let result = train_template(pattern, dt, pairs, opts, &space, &round_cfg)?;
        space.base = result.params;
        objective = result.objective;

        rounds.push(RoundRecord {
            round,
            selected,
            values,
            objective_after: objective,
            accuracy_after: accuracy_percent(objective, pairs.len()),
            retrain_reinits: result.reinits,
        });
        round += 1;
    }

    debug_assert!(space.base[..free].iter().all(|&v| cfg.set.contains(v)));
    let template = TemplateSet::from_params(pattern, &space.base, dt)?;
    Ok(QuantizeResult {
        accuracy: accuracy_percent(objective, pairs.len()),
        params: space.base,
        template,
        objective,
        rounds,
    })
}

/// One-shot quantization of every template coefficient (bias untouched),
/// without retraining.
pub fn quantize_template(tpl: &TemplateSet, set: &QuantSet, rule: ZeroRule) -> TemplateSet {
    let mut out = tpl.clone();
    for r in 0..3 {
        for c in 0..3 {
            out.a[r][c] = quantize_value_with(set, tpl.a[r][c], rule);
            out.b[r][c] = quantize_value_with(set, tpl.b[r][c], rule);
        }
    }
    out
}
