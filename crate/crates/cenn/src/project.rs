//! Projection of stage designs onto FPGA budgets: how many processing
//! stages fit on a device, what pixel throughput that buys, and how two
//! designs compare. All resource numbers come from a calibration file
//! (synthesis results), not from first principles.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CennError, Result};

/// LE/register footprint of one synthesized block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCost {
    pub le: u32,
    pub registers: u32,
}

/// Footprint of a barrel shifter sized for coefficient exponents up to
/// `max_exponent` (coefficient sets `{0} ∪ {±2^p : -m <= p <= m}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShifterCost {
    pub max_exponent: u32,
    pub le: u32,
    pub registers: u32,
}

/// Synthesized footprints of the primitive blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCosts {
    /// Single-output shifters by largest supported exponent, ascending.
    pub single_shifter: Vec<ShifterCost>,
    /// A dual-output shifter wide enough for exponents up to 7.
    pub dual_shifter_m7: ResourceCost,
    /// An 18x18 two's-complement multiplier built from logic.
    pub multiplier: ResourceCost,
    /// One 18-bit adder.
    pub adder_le: u32,
}

impl ResourceCosts {
    /// Footprint of the smallest cataloged shifter covering `max_exponent`.
    pub fn single_shifter_cost(&self, max_exponent: u32) -> Option<&ShifterCost> {
        self.single_shifter
            .iter()
            .find(|s| s.max_exponent >= max_exponent)
    }

    /// LEs saved by one shifter relative to one logic multiplier.
    pub fn multiplier_savings(&self, max_exponent: u32) -> Option<i64> {
        self.single_shifter_cost(max_exponent)
            .map(|s| self.multiplier.le as i64 - s.le as i64)
    }
}

/// Footprint of one multiplier-based processing stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultStageCost {
    pub le: u32,
    pub registers: u32,
    /// Embedded multiplier blocks consumed per stage.
    pub mults: u32,
}

/// Footprint of one shifter-based processing stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftStageCost {
    pub le: u32,
    pub registers: u32,
}

/// Stage footprints for one shifter budget (shifters per convolution unit;
/// each stage holds two units).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageConfig {
    pub shifters_per_unit: u32,
    pub mult_stage: MultStageCost,
    pub shift_stage: ShiftStageCost,
}

fn default_cap() -> f64 {
    0.80
}

/// Resources available on one target device. `le_utilization_cap` holds
/// back a fraction of the fabric for routing and glue; it is applied to
/// logic elements and, conservatively, to registers. Embedded multiplier
/// blocks are a hard count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpgaBudget {
    pub name: String,
    pub total_le: u64,
    pub total_registers: u64,
    pub embedded_multipliers: u32,
    #[serde(default = "default_cap")]
    pub le_utilization_cap: f64,
}

impl FpgaBudget {
    pub fn validate(&self) -> Result<()> {
        if self.total_le == 0 || self.total_registers == 0 {
            return Err(CennError::InvalidBudget(format!(
                "device {} has an empty fabric",
                self.name
            )));
        }
        if !(self.le_utilization_cap > 0.0 && self.le_utilization_cap <= 1.0) {
            return Err(CennError::InvalidBudget(format!(
                "utilization cap {} outside (0, 1]",
                self.le_utilization_cap
            )));
        }
        Ok(())
    }
}

/// The full calibration bundle: primitive costs, per-configuration stage
/// footprints, and a device catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub resources: ResourceCosts,
    pub stages: Vec<StageConfig>,
    pub devices: Vec<FpgaBudget>,
}

const BUILTIN_CALIBRATION: &str = include_str!("../data/calibration.json");

impl Calibration {
    /// The calibration shipped with the crate.
    pub fn builtin() -> Calibration {
        serde_json::from_str(BUILTIN_CALIBRATION).expect("builtin calibration parses")
    }

    pub fn from_json_str(text: &str) -> Result<Calibration> {
        let cal: Calibration = serde_json::from_str(text)?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn from_path(path: &Path) -> Result<Calibration> {
        Calibration::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        for cfg in &self.stages {
            if cfg.mult_stage.mults == 0 {
                return Err(CennError::InvalidBudget(format!(
                    "stage config {} consumes no multipliers per stage",
                    cfg.shifters_per_unit
                )));
            }
        }
        for dev in &self.devices {
            dev.validate()?;
        }
        Ok(())
    }

    /// Stage footprints for the given shifters-per-unit count.
    pub fn stage_config(&self, shifters_per_unit: u32) -> Result<&StageConfig> {
        self.stages
            .iter()
            .find(|c| c.shifters_per_unit == shifters_per_unit)
            .ok_or(CennError::InvalidShifterCount(shifters_per_unit))
    }

    pub fn device(&self, name: &str) -> Result<&FpgaBudget> {
        self.devices
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| CennError::InvalidBudget(format!("unknown device {name:?}")))
    }
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration::builtin()
    }
}

/// How to fill a device with stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillMode {
    /// Multiplier-based stages only (the conventional design).
    MultipliersOnly,
    /// Multiplier-based stages until the embedded multiplier blocks run
    /// out, then shifter-based stages until the fabric cap binds.
    MultipliersThenShifters,
}

/// A concrete stage allocation on a device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub stage_count: u32,
    pub mult_stages: u32,
    pub shift_stages: u32,
    pub mults_used: u32,
    /// Shifters across all shifter stages (two convolution units each).
    pub shifters_used: u32,
    pub le_used: u64,
    pub reg_used: u64,
    /// Set when not even one stage fits the budget.
    pub budget_exceeded: bool,
    pub clock_mhz: f64,
    pub cycles_per_pixel: u32,
}

impl StagePlan {
    /// A plan with only throughput parameters, for what-if comparisons
    /// where resource accounting is supplied externally.
    pub fn hypothetical(stage_count: u32, clock_mhz: f64, cycles_per_pixel: u32) -> StagePlan {
        StagePlan {
            stage_count,
            mult_stages: 0,
            shift_stages: 0,
            mults_used: 0,
            shifters_used: 0,
            le_used: 0,
            reg_used: 0,
            budget_exceeded: false,
            clock_mhz,
            cycles_per_pixel,
        }
    }
}

/// Greedily packs stages onto a device. Multiplier stages are added while
/// embedded multiplier blocks and the fabric cap allow; under
/// [`FillMode::MultipliersThenShifters`], shifter stages then fill the
/// remaining fabric. A budget too small for a single stage yields an empty,
/// flagged plan rather than an error.
pub fn max_stages(
    budget: &FpgaBudget,
    cfg: &StageConfig,
    mode: FillMode,
    clock_mhz: f64,
    cycles_per_pixel: u32,
) -> Result<StagePlan> {
    budget.validate()?;
    if cfg.mult_stage.mults == 0 {
        return Err(CennError::InvalidBudget(
            "stage config consumes no multipliers per stage".into(),
        ));
    }
    if !(clock_mhz.is_finite() && clock_mhz > 0.0) {
        return Err(CennError::InvalidBudget(format!(
            "clock {clock_mhz} MHz is not positive"
        )));
    }
    if cycles_per_pixel == 0 {
        return Err(CennError::ZeroCycles);
    }
    let le_cap = budget.le_utilization_cap * budget.total_le as f64;
    let reg_cap = budget.le_utilization_cap * budget.total_registers as f64;
    let fits = |le: u64, reg: u64| le as f64 <= le_cap && reg as f64 <= reg_cap;

    let mut plan = StagePlan {
        stage_count: 0,
        mult_stages: 0,
        shift_stages: 0,
        mults_used: 0,
        shifters_used: 0,
        le_used: 0,
        reg_used: 0,
        budget_exceeded: false,
        clock_mhz,
        cycles_per_pixel,
    };
    loop {
        let mults = plan.mults_used + cfg.mult_stage.mults;
        let le = plan.le_used + cfg.mult_stage.le as u64;
        let reg = plan.reg_used + cfg.mult_stage.registers as u64;
        if mults > budget.embedded_multipliers || !fits(le, reg) {
            break;
        }
        plan.mult_stages += 1;
        plan.mults_used = mults;
        plan.le_used = le;
        plan.reg_used = reg;
    }
    if mode == FillMode::MultipliersThenShifters {
        loop {
            let le = plan.le_used + cfg.shift_stage.le as u64;
            let reg = plan.reg_used + cfg.shift_stage.registers as u64;
            if !fits(le, reg) {
                break;
            }
            plan.shift_stages += 1;
            plan.shifters_used += 2 * cfg.shifters_per_unit;
            plan.le_used = le;
            plan.reg_used = reg;
        }
    }
    plan.stage_count = plan.mult_stages + plan.shift_stages;
    plan.budget_exceeded = plan.stage_count == 0;
    Ok(plan)
}

/// Aggregate throughput of a plan, in stage-pixels per microsecond:
/// `stage_count * clock_mhz / cycles_per_pixel`. Stages run the same video
/// stream back to back, so capacity scales linearly in the stage count.
pub fn equivalent_capacity(plan: &StagePlan) -> Result<f64> {
    if plan.cycles_per_pixel == 0 {
        return Err(CennError::ZeroCycles);
    }
    Ok(plan.stage_count as f64 * plan.clock_mhz / plan.cycles_per_pixel as f64)
}

/// Capacity ratio of two plans. With `ignore_clock`, both clocks are
/// treated as equal so the ratio reflects architecture alone.
pub fn speedup(ours: &StagePlan, baseline: &StagePlan, ignore_clock: bool) -> Result<f64> {
    let capacity = |plan: &StagePlan| -> Result<f64> {
        if ignore_clock {
            let mut flat = *plan;
            flat.clock_mhz = 1.0;
            equivalent_capacity(&flat)
        } else {
            equivalent_capacity(plan)
        }
    };
    let base = capacity(baseline)?;
    if base <= 0.0 {
        return Err(CennError::ZeroCapacity);
    }
    Ok(capacity(ours)? / base)
}
