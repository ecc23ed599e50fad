//! 18-bit fixed-point arithmetic and a shift-only network engine.
//!
//! Cell states, inputs, and the bias live in 18-bit two's-complement words
//! with a configurable number of fraction bits. Template coefficients are
//! restricted to zero or signed powers of two, so every multiplication is a
//! bit shift plus an optional negation.
//!
//! The update step accumulates in a wide integer with enough headroom that
//! every coefficient application is an exact left shift; the only rounding
//! happens once per cell per step, when the accumulator is scaled back to
//! word precision (round to nearest, ties to even) and saturated. Keeping
//! the per-term arithmetic exact makes regrouped evaluation orders (used by
//! the hardware cost model) bit-identical to the naive order.

use serde::{Deserialize, Serialize};

use crate::dynamics::InitState;
use crate::error::{CennError, Result};
use crate::grid::{Boundary, CellGrid};
use crate::template::TemplateSet;

/// Word size in bits, including the sign.
pub const WORD_BITS: u32 = 18;
/// Largest raw word value, `2^17 - 1`.
pub const MAX_RAW: i32 = (1 << (WORD_BITS - 1)) - 1;
/// Smallest raw word value, `-2^17`.
pub const MIN_RAW: i32 = -(1 << (WORD_BITS - 1));
/// Upper limit on fraction bits; one integer bit must remain so that the
/// activation bounds of magnitude 1.0 stay representable.
pub const MAX_FRAC_BITS: u32 = 16;

/// Coefficient exponents are kept small enough that the wide accumulator can
/// never overflow.
const MAX_COEFF_EXP: i32 = 20;

fn check_frac_bits(frac_bits: u32) -> Result<()> {
    if frac_bits > MAX_FRAC_BITS {
        return Err(CennError::InvalidBudget(format!(
            "fraction bits {frac_bits} exceed the supported maximum {MAX_FRAC_BITS}"
        )));
    }
    Ok(())
}

/// One 18-bit two's-complement word with `frac_bits` fraction bits and a
/// sticky saturation flag. Equality ignores the flag.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FixedWord {
    raw: i32,
    frac_bits: u32,
    saturated: bool,
}

impl PartialEq for FixedWord {
    fn eq(&self, other: &Self) -> bool {
        self.raw == other.raw && self.frac_bits == other.frac_bits
    }
}

impl FixedWord {
    /// Encodes a real value: scale by `2^frac_bits`, round to nearest (ties
    /// to even), saturate to the word range.
    pub fn from_f64(value: f64, frac_bits: u32) -> Result<Self> {
        check_frac_bits(frac_bits)?;
        if !value.is_finite() {
            return Err(CennError::NonFinite {
                context: "fixed-point encoding".into(),
            });
        }
        let scaled = (value * (1u64 << frac_bits) as f64).round_ties_even();
        let (raw, saturated) = if scaled > MAX_RAW as f64 {
            (MAX_RAW, true)
        } else if scaled < MIN_RAW as f64 {
            (MIN_RAW, true)
        } else {
            (scaled as i32, false)
        };
        Ok(Self {
            raw,
            frac_bits,
            saturated,
        })
    }

    pub fn from_raw(raw: i32, frac_bits: u32) -> Result<Self> {
        check_frac_bits(frac_bits)?;
        if !(MIN_RAW..=MAX_RAW).contains(&raw) {
            return Err(CennError::Overflow {
                context: format!("raw word {raw} outside 18-bit range"),
            });
        }
        Ok(Self {
            raw,
            frac_bits,
            saturated: false,
        })
    }

    pub fn to_f64(&self) -> f64 {
        self.raw as f64 / (1u64 << self.frac_bits) as f64
    }

    pub fn raw(&self) -> i32 {
        self.raw
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }
}

/// A template coefficient in shift form: zero, or a signed power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftCoeff {
    Zero,
    Pow2 { negative: bool, exponent: i32 },
}

impl ShiftCoeff {
    /// Converts an exact zero-or-power-of-two value; anything else is an
    /// error.
    pub fn from_f64(v: f64) -> Result<Self> {
        if v == 0.0 {
            return Ok(ShiftCoeff::Zero);
        }
        if !v.is_finite() {
            return Err(CennError::NonFinite {
                context: "shift coefficient".into(),
            });
        }
        let a = v.abs();
        let bits = a.to_bits();
        let mantissa = bits & ((1u64 << 52) - 1);
        let biased = ((bits >> 52) & 0x7FF) as i32;
        if mantissa != 0 || biased == 0 {
            return Err(CennError::NotPowerOfTwo { value: v });
        }
        let exponent = biased - 1023;
        if exponent.abs() > MAX_COEFF_EXP {
            return Err(CennError::ExponentRange {
                exponent,
                min: -MAX_COEFF_EXP,
                max: MAX_COEFF_EXP,
            });
        }
        Ok(ShiftCoeff::Pow2 {
            negative: v < 0.0,
            exponent,
        })
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ShiftCoeff::Zero => 0.0,
            ShiftCoeff::Pow2 { negative, exponent } => {
                let mag = 2.0f64.powi(*exponent);
                if *negative {
                    -mag
                } else {
                    mag
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ShiftCoeff::Zero)
    }

    pub fn exponent(&self) -> Option<i32> {
        match self {
            ShiftCoeff::Zero => None,
            ShiftCoeff::Pow2 { exponent, .. } => Some(*exponent),
        }
    }
}

/// Multiplies a word by a shift coefficient the way a barrel shifter would:
/// shift first (left shifts saturate, right shifts are arithmetic and round
/// toward negative infinity), then negate for negative coefficients.
pub fn shift_mul(word: &FixedWord, coeff: &ShiftCoeff) -> FixedWord {
    let (raw, saturated) = match coeff {
        ShiftCoeff::Zero => (0, false),
        ShiftCoeff::Pow2 { negative, exponent } => {
            let shifted: i64 = if *exponent >= 0 {
                (word.raw as i64) << exponent.unsigned_abs()
            } else {
                (word.raw as i64) >> exponent.unsigned_abs()
            };
            let signed = if *negative { -shifted } else { shifted };
            if signed > MAX_RAW as i64 {
                (MAX_RAW, true)
            } else if signed < MIN_RAW as i64 {
                (MIN_RAW, true)
            } else {
                (signed as i32, false)
            }
        }
    };
    FixedWord {
        raw,
        frac_bits: word.frac_bits,
        saturated: word.saturated || saturated,
    }
}

/// A template whose coefficients are all in shift form. The bias stays a
/// real value (it is encoded per run at the working precision); the step
/// size must be `2^s` with `s` in `[-7, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftTemplate {
    pub a: [[ShiftCoeff; 3]; 3],
    pub b: [[ShiftCoeff; 3]; 3],
    pub bias: f64,
    pub dt_exp: i32,
}

impl ShiftTemplate {
    /// Converts a quantized template; fails if any coefficient is not zero or
    /// a power of two, or if the step size is unsupported.
    pub fn from_template(tpl: &TemplateSet) -> Result<Self> {
        let dt_exp = match ShiftCoeff::from_f64(tpl.dt)? {
            ShiftCoeff::Pow2 {
                negative: false,
                exponent,
            } if (-7..=0).contains(&exponent) => exponent,
            ShiftCoeff::Pow2 { exponent, .. } => {
                return Err(CennError::InvalidStepExponent { exponent })
            }
            ShiftCoeff::Zero => return Err(CennError::InvalidStepExponent { exponent: i32::MIN }),
        };
        let mut a = [[ShiftCoeff::Zero; 3]; 3];
        let mut b = [[ShiftCoeff::Zero; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] = ShiftCoeff::from_f64(tpl.a[r][c])?;
                b[r][c] = ShiftCoeff::from_f64(tpl.b[r][c])?;
            }
        }
        Ok(Self {
            a,
            b,
            bias: tpl.bias,
            dt_exp,
        })
    }

    /// Reconstructs the real-valued template.
    pub fn to_template(&self) -> Result<TemplateSet> {
        let mut a = [[0.0; 3]; 3];
        let mut b = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] = self.a[r][c].to_f64();
                b[r][c] = self.b[r][c].to_f64();
            }
        }
        TemplateSet::new(a, b, self.bias, 2.0f64.powi(self.dt_exp))
    }

    /// Most negative coefficient exponent across both templates, if any
    /// nonzero coefficient exists.
    pub fn min_exponent(&self) -> Option<i32> {
        self.a
            .iter()
            .chain(self.b.iter())
            .flatten()
            .filter_map(|c| c.exponent())
            .min()
    }

    /// Headroom (in bits) that turns every coefficient application into an
    /// exact left shift.
    pub fn headroom(&self) -> u32 {
        (-self.min_exponent().unwrap_or(0)).max(0) as u32
    }
}

/// Scales a wide accumulator down by `2^shift` with round-to-nearest,
/// ties-to-even semantics.
pub(crate) fn rne_shift(acc: i128, shift: u32) -> i128 {
    if shift == 0 {
        return acc;
    }
    let q = acc >> shift; // floors toward negative infinity
    let r = acc - (q << shift);
    let half = 1i128 << (shift - 1);
    if r > half || (r == half && (q & 1) == 1) {
        q + 1
    } else {
        q
    }
}

/// A grid of raw 18-bit words at a shared precision, with a grid-level
/// sticky saturation flag.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedGrid {
    width: usize,
    height: usize,
    raw: Vec<i32>,
    frac_bits: u32,
    saturated: bool,
}

impl FixedGrid {
    /// Encodes a real-valued grid; the flag records whether any cell
    /// saturated during encoding.
    pub fn from_grid(grid: &CellGrid, frac_bits: u32) -> Result<Self> {
        check_frac_bits(frac_bits)?;
        let mut raw = Vec::with_capacity(grid.area());
        let mut saturated = false;
        for &v in grid.as_slice() {
            let word = FixedWord::from_f64(v, frac_bits)?;
            saturated |= word.is_saturated();
            raw.push(word.raw());
        }
        Ok(Self {
            width: grid.width(),
            height: grid.height(),
            raw,
            frac_bits,
            saturated,
        })
    }

    pub fn to_grid(&self) -> CellGrid {
        let scale = (1u64 << self.frac_bits) as f64;
        let data = self.raw.iter().map(|&r| r as f64 / scale).collect();
        CellGrid::from_vec(self.width, self.height, data).expect("dimensions preserved")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn raw(&self, x: usize, y: usize) -> i32 {
        self.raw[y * self.width + x]
    }

    fn sample_raw(&self, x: isize, y: isize, boundary: Boundary) -> i32 {
        let w = self.width as isize;
        let h = self.height as isize;
        match boundary {
            Boundary::FixedZero => {
                if x < 0 || y < 0 || x >= w || y >= h {
                    0
                } else {
                    self.raw(x as usize, y as usize)
                }
            }
            Boundary::Replicate => {
                self.raw(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize)
            }
        }
    }
}

/// Saturating activation in the raw domain: clamp to `±2^frac_bits`.
#[inline]
fn activate_raw(raw: i32, frac_bits: u32) -> i32 {
    let one = 1i32 << frac_bits;
    raw.clamp(-one, one)
}

/// Adds one shifted term to the accumulator: `±(value << (headroom + exp))`.
#[inline]
fn accumulate(acc: &mut i128, raw: i32, coeff: &ShiftCoeff, headroom: u32) {
    if let ShiftCoeff::Pow2 { negative, exponent } = coeff {
        let shift = (headroom as i32 + exponent) as u32;
        let term = (raw as i128) << shift;
        if *negative {
            *acc -= term;
        } else {
            *acc += term;
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedRunResult {
    /// Final cell states.
    pub state: FixedGrid,
    /// Final outputs (activation applied), converted to real values; every
    /// raw output is exactly representable, so no rounding occurs here.
    pub output: CellGrid,
    pub iterations_run: usize,
    /// True if anything saturated: input encoding, the bias, or any state
    /// write-back during the run.
    pub saturated: bool,
}

/// Simulates a shift template entirely in fixed point. Mirrors the float
/// engine: snapshot updates, precomputed control contribution, same boundary
/// policies and initial-state options.
pub fn fixed_run(
    tpl: &ShiftTemplate,
    input: &FixedGrid,
    opts: &crate::dynamics::RunOptions,
) -> Result<FixedRunResult> {
    let frac_bits = input.frac_bits;
    let w = input.width;
    let h = input.height;
    let headroom = tpl.headroom();
    // The step-size division joins the final scale-down, so the single
    // rounding covers both.
    let down_shift = (headroom as i32 - tpl.dt_exp) as u32;

    let bias_word = FixedWord::from_f64(tpl.bias, frac_bits)?;
    let mut saturated = input.saturated || bias_word.is_saturated();
    let bias_term = (bias_word.raw() as i128) << headroom;

    // Control contribution per cell in accumulator units; the input image is
    // constant, so this is computed once.
    let mut feed = vec![0i128; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0i128;
            for r in 0..3 {
                for c in 0..3 {
                    let u = input.sample_raw(
                        x as isize + c as isize - 1,
                        y as isize + r as isize - 1,
                        opts.boundary,
                    );
                    accumulate(&mut acc, u, &tpl.b[r][c], headroom);
                }
            }
            feed[y * w + x] = acc;
        }
    }

    let mut state = match opts.init {
        InitState::Input => input.raw.clone(),
        InitState::Zero => vec![0i32; w * h],
    };
    let mut next = vec![0i32; w * h];
    let mut iterations_run = 0;
    let early_raw_tol = opts
        .early_stop_tol
        .map(|tol| (tol * (1u64 << frac_bits) as f64).floor() as i64);

    let as_fixed_grid = |raw: Vec<i32>, saturated: bool| FixedGrid {
        width: w,
        height: h,
        raw,
        frac_bits,
        saturated,
    };

    for n in 0..opts.iterations {
        let snapshot = as_fixed_grid(state.clone(), false);
        let mut max_delta = 0i64;
        for y in 0..h {
            for x in 0..w {
                let xc = snapshot.raw(x, y);
                let mut acc = bias_term - ((xc as i128) << headroom);
                for r in 0..3 {
                    for c in 0..3 {
                        let neighbor = snapshot.sample_raw(
                            x as isize + c as isize - 1,
                            y as isize + r as isize - 1,
                            opts.boundary,
                        );
                        accumulate(
                            &mut acc,
                            activate_raw(neighbor, frac_bits),
                            &tpl.a[r][c],
                            headroom,
                        );
                    }
                }
                acc += feed[y * w + x];
                let updated = xc as i128 + rne_shift(acc, down_shift);
                let clamped = if updated > MAX_RAW as i128 {
                    saturated = true;
                    MAX_RAW
                } else if updated < MIN_RAW as i128 {
                    saturated = true;
                    MIN_RAW
                } else {
                    updated as i32
                };
                max_delta = max_delta.max((clamped as i64 - xc as i64).abs());
                next[y * w + x] = clamped;
            }
        }
        std::mem::swap(&mut state, &mut next);
        iterations_run = n + 1;
        if matches!(early_raw_tol, Some(tol) if max_delta <= tol) {
            break;
        }
    }

    let output_raw: Vec<i32> = state
        .iter()
        .map(|&r| activate_raw(r, frac_bits))
        .collect();
    let output = as_fixed_grid(output_raw, saturated).to_grid();
    Ok(FixedRunResult {
        state: as_fixed_grid(state, saturated),
        output,
        iterations_run,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run, RunOptions};
    use crate::grid::CellGrid;

    #[test]
    fn encoding_basics() {
        let w = FixedWord::from_f64(0.5, 12).unwrap();
        assert_eq!(w.raw(), 2048);
        assert!(!w.is_saturated());
        assert_eq!(w.to_f64(), 0.5);

        let sat = FixedWord::from_f64(1000.0, 12).unwrap();
        assert_eq!(sat.raw(), MAX_RAW);
        assert!(sat.is_saturated());
        let neg = FixedWord::from_f64(-1000.0, 12).unwrap();
        assert_eq!(neg.raw(), MIN_RAW);
        assert!(neg.is_saturated());

        assert!(FixedWord::from_f64(0.5, 17).is_err());
        assert!(FixedWord::from_f64(f64::NAN, 12).is_err());
        assert!(FixedWord::from_raw(MAX_RAW + 1, 12).is_err());
    }

    #[test]
    fn encoding_rounds_ties_to_even() {
        // Exactly half an LSB above an even raw value rounds down...
        let w = FixedWord::from_f64(2048.5 / 4096.0, 12).unwrap();
        assert_eq!(w.raw(), 2048);
        // ...and half an LSB above an odd raw value rounds up.
        let w = FixedWord::from_f64(2049.5 / 4096.0, 12).unwrap();
        assert_eq!(w.raw(), 2050);
    }

    #[test]
    fn coefficient_conversion() {
        assert_eq!(ShiftCoeff::from_f64(0.0).unwrap(), ShiftCoeff::Zero);
        assert_eq!(
            ShiftCoeff::from_f64(0.5).unwrap(),
            ShiftCoeff::Pow2 {
                negative: false,
                exponent: -1
            }
        );
        assert_eq!(
            ShiftCoeff::from_f64(-4.0).unwrap(),
            ShiftCoeff::Pow2 {
                negative: true,
                exponent: 2
            }
        );
        assert!(ShiftCoeff::from_f64(0.3).is_err());
        assert!(ShiftCoeff::from_f64(2.0f64.powi(25)).is_err());
        assert_eq!(ShiftCoeff::from_f64(-4.0).unwrap().to_f64(), -4.0);
    }

    #[test]
    fn shift_multiplication() {
        let w = FixedWord::from_f64(0.75, 12).unwrap();
        let half = ShiftCoeff::from_f64(0.5).unwrap();
        let r = shift_mul(&w, &half);
        assert_eq!(r.raw(), 1536);
        assert_eq!(r.to_f64(), 0.375);

        let w = FixedWord::from_f64(-0.625, 12).unwrap();
        let minus_four = ShiftCoeff::from_f64(-4.0).unwrap();
        let r = shift_mul(&w, &minus_four);
        assert_eq!(r.raw(), 10240);
        assert_eq!(r.to_f64(), 2.5);

        // Arithmetic right shifts round toward negative infinity.
        let w = FixedWord::from_raw(-3, 12).unwrap();
        assert_eq!(shift_mul(&w, &half).raw(), -2);
        let w = FixedWord::from_raw(3, 12).unwrap();
        assert_eq!(shift_mul(&w, &half).raw(), 1);

        // Left shifts saturate and set the sticky flag.
        let w = FixedWord::from_f64(0.75, 12).unwrap();
        let big = ShiftCoeff::from_f64(1024.0).unwrap();
        let r = shift_mul(&w, &big);
        assert_eq!(r.raw(), MAX_RAW);
        assert!(r.is_saturated());
        let w = FixedWord::from_raw(MIN_RAW, 12).unwrap();
        let neg_one = ShiftCoeff::from_f64(-1.0).unwrap();
        let r = shift_mul(&w, &neg_one);
        assert_eq!(r.raw(), MAX_RAW);
        assert!(r.is_saturated());
    }

    #[test]
    fn rne_shift_cases() {
        assert_eq!(rne_shift(2048, 1), 1024);
        assert_eq!(rne_shift(3, 1), 2);
        assert_eq!(rne_shift(1, 1), 0);
        assert_eq!(rne_shift(-1, 1), 0);
        assert_eq!(rne_shift(-3, 1), -2);
        assert_eq!(rne_shift(5, 2), 1);
        assert_eq!(rne_shift(6, 2), 2);
        assert_eq!(rne_shift(-6, 2), -2);
        assert_eq!(rne_shift(7, 0), 7);
    }

    #[test]
    fn template_conversion() {
        let mut a = [[0.0; 3]; 3];
        a[1][1] = 2.0;
        let mut b = [[0.0; 3]; 3];
        b[1][1] = -0.5;
        let tpl = TemplateSet::new(a, b, 0.37, 0.25).unwrap();
        let shift = ShiftTemplate::from_template(&tpl).unwrap();
        assert_eq!(shift.dt_exp, -2);
        assert_eq!(shift.min_exponent(), Some(-1));
        assert_eq!(shift.headroom(), 1);
        assert_eq!(shift.to_template().unwrap().a[1][1], 2.0);

        let bad_dt = TemplateSet::new(a, b, 0.0, 2.0).unwrap();
        assert!(ShiftTemplate::from_template(&bad_dt).is_err());
        let tiny_dt = TemplateSet::new(a, b, 0.0, 2.0f64.powi(-8)).unwrap();
        assert!(ShiftTemplate::from_template(&tiny_dt).is_err());
        let mut odd = a;
        odd[0][0] = 0.3;
        let bad_coeff = TemplateSet::new(odd, b, 0.0, 0.5).unwrap();
        assert!(ShiftTemplate::from_template(&bad_coeff).is_err());
    }

    #[test]
    fn grid_round_trip() {
        let g = CellGrid::from_vec(2, 2, vec![0.5, -0.25, 0.0, 1.0]).unwrap();
        let f = FixedGrid::from_grid(&g, 12).unwrap();
        assert!(!f.is_saturated());
        assert_eq!(f.to_grid(), g);
        let noisy = CellGrid::from_vec(1, 1, vec![77.0]).unwrap();
        assert!(FixedGrid::from_grid(&noisy, 12).unwrap().is_saturated());
    }

    /// Dyadic test case where fixed and float arithmetic agree exactly.
    fn dyadic_case() -> (TemplateSet, CellGrid) {
        let mut a = [[0.0; 3]; 3];
        a[1][1] = 1.0;
        a[1][2] = 1.0;
        let mut b = [[0.0; 3]; 3];
        b[1][1] = 1.0;
        let tpl = TemplateSet::new(a, b, 0.25, 0.5).unwrap();
        let u = CellGrid::from_vec(2, 1, vec![0.5, -0.25]).unwrap();
        (tpl, u)
    }

    #[test]
    fn fixed_step_matches_hand_values() {
        let (tpl, u) = dyadic_case();
        let shift = ShiftTemplate::from_template(&tpl).unwrap();
        let input = FixedGrid::from_grid(&u, 12).unwrap();
        let opts = RunOptions {
            iterations: 1,
            ..RunOptions::default()
        };
        let result = fixed_run(&shift, &input, &opts).unwrap();
        assert_eq!(result.state.raw(0, 0), 3072);
        assert_eq!(result.state.raw(1, 0), -1024);
        assert_eq!(result.state.to_grid().as_slice(), &[0.75, -0.25]);
        assert!(!result.saturated);
    }

    #[test]
    fn fixed_matches_float_on_dyadic_values() {
        // Every value and coefficient is an exact dyadic rational well inside
        // the word range, so both engines compute identical trajectories.
        let (tpl, u) = dyadic_case();
        let shift = ShiftTemplate::from_template(&tpl).unwrap();
        let input = FixedGrid::from_grid(&u, 12).unwrap();
        for iterations in [1, 3, 10] {
            let opts = RunOptions {
                iterations,
                ..RunOptions::default()
            };
            let fixed = fixed_run(&shift, &input, &opts).unwrap();
            let float = run(&tpl, &u, &opts).unwrap();
            assert_eq!(
                fixed.output.as_slice(),
                float.output.as_slice(),
                "divergence at {iterations} iterations"
            );
        }
    }

    #[test]
    fn saturation_is_sticky() {
        // Feedback gain 32 on a unit state overflows the word range.
        let mut a = [[0.0; 3]; 3];
        a[1][1] = 32.0;
        let tpl = TemplateSet::new(a, [[0.0; 3]; 3], 0.0, 1.0).unwrap();
        let shift = ShiftTemplate::from_template(&tpl).unwrap();
        let u = CellGrid::filled(2, 2, 1.0).unwrap();
        let input = FixedGrid::from_grid(&u, 12).unwrap();
        let opts = RunOptions {
            iterations: 2,
            ..RunOptions::default()
        };
        let result = fixed_run(&shift, &input, &opts).unwrap();
        assert!(result.saturated);
        assert_eq!(result.state.raw(0, 0), MAX_RAW);
        // Outputs still clamp to the activation range.
        assert_eq!(result.output.get(0, 0), 1.0);
    }
}
