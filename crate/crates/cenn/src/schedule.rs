//! Convolution scheduling for shift-based stages: how many shifter cycles a
//! 3x3 template costs per pixel, with sparsity-induced (skip zero
//! coefficients) and repetition-induced (pre-sum operands that share a
//! coefficient) optimizations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CennError, Result};
use crate::fixed::ShiftCoeff;

/// Structural statistics of one 3x3 coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateStats {
    pub zero_count: usize,
    pub nonzero_count: usize,
    /// Distinct nonzero values (sign-sensitive, exact comparison).
    pub distinct_nonzero_count: usize,
    /// Largest number of cells sharing one nonzero value (0 for an all-zero
    /// matrix).
    pub max_repetition: usize,
}

/// Counts zeros, distinct nonzero values, and the largest repetition group
/// of a real-valued 3x3 matrix. Values are compared exactly, which is the
/// intended behavior for quantized templates; nearly-equal float values
/// count as distinct.
pub fn analyze_template(t: &[[f64; 3]; 3]) -> TemplateStats {
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    let mut zero_count = 0;
    for row in t {
        for &v in row {
            if v == 0.0 {
                zero_count += 1;
            } else if let Some(entry) = distinct.iter_mut().find(|(value, _)| *value == v) {
                entry.1 += 1;
            } else {
                distinct.push((v, 1));
            }
        }
    }
    TemplateStats {
        zero_count,
        nonzero_count: 9 - zero_count,
        distinct_nonzero_count: distinct.len(),
        max_repetition: distinct.iter().map(|(_, n)| *n).max().unwrap_or(0),
    }
}

/// Scheduler optimizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleOptions {
    /// Skip cycles for zero coefficients entirely.
    pub skip_zeros: bool,
    /// Pre-sum operands sharing a (sign, exponent) so the group costs one
    /// shift; the operand additions overlap the shifter pipeline. Only
    /// effective with a single shifter — with more shifters the win is
    /// marginal and the scheduler ignores it.
    pub merge_repeats: bool,
}

impl ScheduleOptions {
    pub const NONE: ScheduleOptions = ScheduleOptions {
        skip_zeros: false,
        merge_repeats: false,
    };
    pub const SPARSITY: ScheduleOptions = ScheduleOptions {
        skip_zeros: true,
        merge_repeats: false,
    };
    pub const FULL: ScheduleOptions = ScheduleOptions {
        skip_zeros: true,
        merge_repeats: true,
    };
}

/// One scheduled shift: a coefficient and the template cells whose operands
/// feed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftGroup {
    pub coeff: ShiftCoeff,
    /// (row, col) positions in the 3x3 template.
    pub cells: Vec<(usize, usize)>,
}

/// The cycle schedule for one 3x3 template convolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub groups: Vec<ShiftGroup>,
    pub skipped_zero_count: usize,
    pub shifter_count: u32,
    /// Multiply cycles: `ceil(groups / shifter_count)`.
    pub cycles: u32,
}

fn check_shifters(shifters: u32) -> Result<()> {
    if matches!(shifters, 1 | 3 | 9) {
        Ok(())
    } else {
        Err(CennError::InvalidShifterCount(shifters))
    }
}

/// Builds the cycle schedule for one template under a shifter budget.
///
/// With everything disabled each of the nine cells costs one cycle. Sparsity
/// drops zero cells; repetition merges equal (sign, exponent) coefficients
/// into one group each. Grouping is only applied for a single shifter.
pub fn build_schedule(
    coeffs: &[[ShiftCoeff; 3]; 3],
    shifters: u32,
    opts: &ScheduleOptions,
) -> Result<SchedulePlan> {
    check_shifters(shifters)?;
    let merge = opts.merge_repeats && shifters == 1;
    let mut groups: Vec<ShiftGroup> = Vec::new();
    let mut skipped_zero_count = 0;
    for (r, row) in coeffs.iter().enumerate() {
        for (c, &coeff) in row.iter().enumerate() {
            if coeff.is_zero() {
                if opts.skip_zeros {
                    skipped_zero_count += 1;
                    continue;
                }
                // Un-skipped zeros still occupy their own cycle slot.
                groups.push(ShiftGroup {
                    coeff,
                    cells: vec![(r, c)],
                });
                continue;
            }
            if merge {
                if let Some(g) = groups.iter_mut().find(|g| g.coeff == coeff) {
                    g.cells.push((r, c));
                    continue;
                }
            }
            groups.push(ShiftGroup {
                coeff,
                cells: vec![(r, c)],
            });
        }
    }
    let cycles = (groups.len() as u32).div_ceil(shifters);
    Ok(SchedulePlan {
        groups,
        skipped_zero_count,
        shifter_count: shifters,
        cycles,
    })
}

impl SchedulePlan {
    /// Evaluates the plan against raw operand values: each group pre-sums
    /// its operands in the widened accumulator and applies one shift. With
    /// left-shift-only arithmetic (see `headroom`) this is exact, so it must
    /// equal [`naive_sum`] for any grouping.
    pub fn evaluate(&self, operands: &[[i32; 3]; 3], headroom: u32) -> Result<i128> {
        let mut total = 0i128;
        for group in &self.groups {
            let ShiftCoeff::Pow2 { negative, exponent } = group.coeff else {
                continue;
            };
            let shift = headroom as i32 + exponent;
            if shift < 0 {
                return Err(CennError::InvalidBudget(format!(
                    "headroom {headroom} too small for exponent {exponent}"
                )));
            }
            let presum: i128 = group
                .cells
                .iter()
                .map(|&(r, c)| operands[r][c] as i128)
                .sum();
            let term = presum << shift as u32;
            total += if negative { -term } else { term };
        }
        Ok(total)
    }
}

/// Cell-by-cell weighted sum in the widened accumulator (row-major order):
/// the reference result any schedule must reproduce exactly.
pub fn naive_sum(
    coeffs: &[[ShiftCoeff; 3]; 3],
    operands: &[[i32; 3]; 3],
    headroom: u32,
) -> Result<i128> {
    let mut total = 0i128;
    for r in 0..3 {
        for c in 0..3 {
            let ShiftCoeff::Pow2 { negative, exponent } = coeffs[r][c] else {
                continue;
            };
            let shift = headroom as i32 + exponent;
            if shift < 0 {
                return Err(CennError::InvalidBudget(format!(
                    "headroom {headroom} too small for exponent {exponent}"
                )));
            }
            let term = (operands[r][c] as i128) << shift as u32;
            total += if negative { -term } else { term };
        }
    }
    Ok(total)
}

impl fmt::Display for SchedulePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} cycles on {} shifter(s), {} group(s), {} zero(s) skipped",
            self.cycles,
            self.shifter_count,
            self.groups.len(),
            self.skipped_zero_count
        )?;
        for group in &self.groups {
            let label = match group.coeff {
                ShiftCoeff::Zero => "0".to_string(),
                ShiftCoeff::Pow2 { negative, exponent } => {
                    format!("{}2^{}", if negative { "-" } else { "+" }, exponent)
                }
            };
            writeln!(f, "  {label:>6} <- {:?}", group.cells)?;
        }
        Ok(())
    }
}

/// Whether each of the two template convolution units has its own shifter
/// pool (they run concurrently; the slower one dominates) or both share one
/// pool (their cycles add).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShifterPooling {
    PerUnit,
    SharedPool,
}

impl Default for ShifterPooling {
    fn default() -> Self {
        ShifterPooling::PerUnit
    }
}

/// Pipeline cycles that are not multiply cycles (state decay, bias add,
/// step-size scaling, write-back). A calibration constant, not a derivation.
pub const DEFAULT_PIPELINE_OVERHEAD: u32 = 2;

/// Combines the two per-template schedules of a stage into cycles per pixel:
/// the dominating (or, for a shared pool, summed) multiply-cycle count plus
/// the pipeline overhead. A stage whose multiply work fits in a single cycle
/// streams one pixel per cycle — the overhead is absorbed by pipelining.
pub fn cycles_per_pixel(
    plan_a: &SchedulePlan,
    plan_b: &SchedulePlan,
    pooling: ShifterPooling,
    overhead: u32,
) -> Result<u32> {
    if plan_a.shifter_count != plan_b.shifter_count {
        return Err(CennError::MismatchedShifters {
            a: plan_a.shifter_count,
            b: plan_b.shifter_count,
        });
    }
    let mc = match pooling {
        ShifterPooling::PerUnit => plan_a.cycles.max(plan_b.cycles),
        ShifterPooling::SharedPool => plan_a.cycles + plan_b.cycles,
    };
    Ok(if mc <= 1 { 1 } else { mc + overhead })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(values: [[f64; 3]; 3]) -> [[ShiftCoeff; 3]; 3] {
        let mut out = [[ShiftCoeff::Zero; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                out[r][c] = ShiftCoeff::from_f64(values[r][c]).unwrap();
            }
        }
        out
    }

    /// Three zeros, one coefficient repeated three times, three singletons:
    /// 9 / 6 / 4 cycles for none / sparsity / both on one shifter.
    fn three_zero_three_repeat() -> [[f64; 3]; 3] {
        [[0.5, 0.0, 1.0], [0.5, 0.0, -1.0], [0.5, 0.0, 2.0]]
    }

    #[test]
    fn stats_examples() {
        assert_eq!(
            analyze_template(&[[0.0; 3]; 3]),
            TemplateStats {
                zero_count: 9,
                nonzero_count: 0,
                distinct_nonzero_count: 0,
                max_repetition: 0
            }
        );
        let mut center = [[0.0; 3]; 3];
        center[1][1] = 2.0;
        assert_eq!(
            analyze_template(&center),
            TemplateStats {
                zero_count: 8,
                nonzero_count: 1,
                distinct_nonzero_count: 1,
                max_repetition: 1
            }
        );
        assert_eq!(
            analyze_template(&three_zero_three_repeat()),
            TemplateStats {
                zero_count: 3,
                nonzero_count: 6,
                distinct_nonzero_count: 4,
                max_repetition: 3
            }
        );
    }

    #[test]
    fn cycle_counts_for_reference_structure() {
        let t = coeffs(three_zero_three_repeat());
        let none = build_schedule(&t, 1, &ScheduleOptions::NONE).unwrap();
        assert_eq!(none.cycles, 9);
        assert_eq!(none.skipped_zero_count, 0);
        let sparse = build_schedule(&t, 1, &ScheduleOptions::SPARSITY).unwrap();
        assert_eq!(sparse.cycles, 6);
        assert_eq!(sparse.skipped_zero_count, 3);
        let full = build_schedule(&t, 1, &ScheduleOptions::FULL).unwrap();
        assert_eq!(full.cycles, 4);
        assert_eq!(full.groups.len(), 4);
        // The repeated coefficient forms one three-operand group.
        let big = full.groups.iter().find(|g| g.cells.len() == 3).unwrap();
        assert_eq!(
            big.coeff,
            ShiftCoeff::Pow2 {
                negative: false,
                exponent: -1
            }
        );
    }

    #[test]
    fn shifter_budgets() {
        let t = coeffs(three_zero_three_repeat());
        // Nine shifters cover the whole template in one cycle even with
        // nothing skipped.
        let nine = build_schedule(&t, 9, &ScheduleOptions::NONE).unwrap();
        assert_eq!(nine.cycles, 1);
        // With more than one shifter, grouping is ignored: 6 nonzero cells
        // over 3 shifters.
        let three = build_schedule(&t, 3, &ScheduleOptions::FULL).unwrap();
        assert_eq!(three.cycles, 2);
        assert_eq!(three.groups.len(), 6);
        assert!(build_schedule(&t, 2, &ScheduleOptions::NONE).is_err());
        // All-zero template with sparsity: nothing to do.
        let empty = build_schedule(&[[ShiftCoeff::Zero; 3]; 3], 1, &ScheduleOptions::SPARSITY)
            .unwrap();
        assert_eq!(empty.cycles, 0);
        assert_eq!(empty.skipped_zero_count, 9);
    }

    /// Dense template with six distinct (sign, exponent) groups.
    fn dense_six_groups() -> [[f64; 3]; 3] {
        [[1.0, 1.0, 1.0], [0.5, 0.5, -0.5], [-1.0, 2.0, -2.0]]
    }

    #[test]
    fn pixel_cycles() {
        let naive_a = build_schedule(
            &coeffs(dense_six_groups()),
            1,
            &ScheduleOptions::NONE,
        )
        .unwrap();
        let naive_b = build_schedule(&coeffs([[1.0; 3]; 3]), 1, &ScheduleOptions::NONE).unwrap();
        assert_eq!(
            cycles_per_pixel(&naive_a, &naive_b, ShifterPooling::PerUnit, 2).unwrap(),
            11
        );

        let a = build_schedule(
            &coeffs(three_zero_three_repeat()),
            1,
            &ScheduleOptions::FULL,
        )
        .unwrap();
        let b = build_schedule(&coeffs(dense_six_groups()), 1, &ScheduleOptions::FULL).unwrap();
        assert_eq!(b.cycles, 6);
        assert_eq!(
            cycles_per_pixel(&a, &b, ShifterPooling::PerUnit, 2).unwrap(),
            8
        );
        assert_eq!(
            cycles_per_pixel(&a, &b, ShifterPooling::SharedPool, 2).unwrap(),
            12
        );

        // Single-cycle multiply work streams a pixel per cycle.
        let a9 = build_schedule(&coeffs(dense_six_groups()), 9, &ScheduleOptions::NONE).unwrap();
        let b9 = build_schedule(&coeffs([[1.0; 3]; 3]), 9, &ScheduleOptions::NONE).unwrap();
        assert_eq!(
            cycles_per_pixel(&a9, &b9, ShifterPooling::PerUnit, 2).unwrap(),
            1
        );
        assert!(cycles_per_pixel(&a9, &naive_b, ShifterPooling::PerUnit, 2).is_err());
    }

    #[test]
    fn grouped_evaluation_is_exact() {
        let t = coeffs(three_zero_three_repeat());
        let operands = [[1000, -2000, 3000], [-4000, 5000, -6000], [7000, -8000, 9000]];
        let naive = naive_sum(&t, &operands, 1).unwrap();
        for opts in [
            ScheduleOptions::NONE,
            ScheduleOptions::SPARSITY,
            ScheduleOptions::FULL,
        ] {
            let plan = build_schedule(&t, 1, &opts).unwrap();
            assert_eq!(plan.evaluate(&operands, 1).unwrap(), naive);
        }
        // Insufficient headroom is reported, not silently wrong.
        assert!(naive_sum(&t, &operands, 0).is_err());
    }

    #[test]
    fn plan_serialization_and_display() {
        let plan = build_schedule(
            &coeffs(three_zero_three_repeat()),
            1,
            &ScheduleOptions::FULL,
        )
        .unwrap();
        let json = serde_json::to_string(&plan).unwrap();
        let back: SchedulePlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back, plan);
        let text = format!("{plan}");
        assert!(text.contains("4 cycles"));
        assert!(text.contains("+2^-1"));
    }
}
