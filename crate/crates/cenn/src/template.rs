//! Cloning templates: the 3x3 feedback/control coefficient matrices, the bias,
//! and the symmetry patterns that tie template cells to shared parameters.

use serde::{Deserialize, Serialize};

use crate::error::{CennError, Result};

/// Index map describing which entries of the two 3x3 templates share a
/// parameter. Entry values index into the free-parameter vector; the same
/// index may appear in several cells (and in both templates).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PatternSpec", into = "PatternSpec")]
pub struct SymmetryPattern {
    name: String,
    a_map: [[usize; 3]; 3],
    b_map: [[usize; 3]; 3],
    free: usize,
}

/// Serialized form: either a registry name or explicit index maps.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PatternSpec {
    Named(String),
    Explicit {
        #[serde(default)]
        name: Option<String>,
        a: [[usize; 3]; 3],
        b: [[usize; 3]; 3],
    },
}

impl TryFrom<PatternSpec> for SymmetryPattern {
    type Error = CennError;

    fn try_from(spec: PatternSpec) -> Result<Self> {
        match spec {
            PatternSpec::Named(name) => SymmetryPattern::by_name(&name),
            PatternSpec::Explicit { name, a, b } => {
                SymmetryPattern::from_maps(name.unwrap_or_else(|| "custom".into()), a, b)
            }
        }
    }
}

impl From<SymmetryPattern> for PatternSpec {
    fn from(p: SymmetryPattern) -> Self {
        // Registry patterns round-trip by name; anything else keeps its maps.
        if let Ok(builtin) = SymmetryPattern::by_name(&p.name) {
            if builtin == p {
                return PatternSpec::Named(p.name);
            }
        }
        PatternSpec::Explicit {
            name: Some(p.name),
            a: p.a_map,
            b: p.b_map,
        }
    }
}

impl SymmetryPattern {
    /// Builds a pattern from explicit index maps, checking that the indices
    /// used form a contiguous range starting at zero.
    pub fn from_maps(
        name: impl Into<String>,
        a_map: [[usize; 3]; 3],
        b_map: [[usize; 3]; 3],
    ) -> Result<Self> {
        let mut max = 0usize;
        for row in a_map.iter().chain(b_map.iter()) {
            for &idx in row {
                max = max.max(idx);
            }
        }
        let free = max + 1;
        let mut seen = vec![false; free];
        for row in a_map.iter().chain(b_map.iter()) {
            for &idx in row {
                seen[idx] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(CennError::InvalidPattern(format!(
                "parameter index {missing} is never used"
            )));
        }
        Ok(Self {
            name: name.into(),
            a_map,
            b_map,
            free,
        })
    }

    /// Looks up a registry pattern by name.
    ///
    /// * `full` - all 18 template cells independent.
    /// * `segmentation` - point-symmetric feedback and control templates
    ///   (10 shared parameters).
    /// * `detection` - isotropic ring around an independent center in both
    ///   templates (4 shared parameters).
    pub fn by_name(name: &str) -> Result<Self> {
        let (a_map, b_map) = match name {
            "full" => (
                [[0, 1, 2], [3, 4, 5], [6, 7, 8]],
                [[9, 10, 11], [12, 13, 14], [15, 16, 17]],
            ),
            "segmentation" => (
                [[0, 1, 2], [3, 4, 3], [2, 1, 0]],
                [[5, 6, 7], [8, 9, 8], [7, 6, 5]],
            ),
            "detection" => (
                [[0, 0, 0], [0, 1, 0], [0, 0, 0]],
                [[2, 2, 2], [2, 3, 2], [2, 2, 2]],
            ),
            other => {
                return Err(CennError::InvalidPattern(format!(
                    "unknown pattern name {other:?}"
                )))
            }
        };
        Self::from_maps(name, a_map, b_map)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of free template parameters (excluding the bias).
    pub fn free_count(&self) -> usize {
        self.free
    }

    /// How many template cells (across both templates) share parameter `idx`.
    pub fn occurrences(&self, idx: usize) -> usize {
        self.a_map
            .iter()
            .chain(self.b_map.iter())
            .flatten()
            .filter(|&&i| i == idx)
            .count()
    }

    pub fn a_map(&self) -> &[[usize; 3]; 3] {
        &self.a_map
    }

    pub fn b_map(&self) -> &[[usize; 3]; 3] {
        &self.b_map
    }

    /// Expands a free-parameter slice into the two 3x3 coefficient matrices.
    pub fn expand(&self, params: &[f64]) -> Result<([[f64; 3]; 3], [[f64; 3]; 3])> {
        if params.len() != self.free {
            return Err(CennError::ParamLength {
                expected: self.free,
                got: params.len(),
            });
        }
        let mut a = [[0.0; 3]; 3];
        let mut b = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] = params[self.a_map[r][c]];
                b[r][c] = params[self.b_map[r][c]];
            }
        }
        Ok((a, b))
    }
}

/// A full cloning-template set: feedback template `a`, control template `b`,
/// bias, and the discretization step size used by the update rule.
///
/// When a [`SymmetryPattern`] is attached, the matrices are redundant
/// projections of a shorter parameter vector; [`TemplateSet::to_params`] and
/// [`TemplateSet::from_params`] convert between the two views. The parameter
/// vector always carries the bias as its final element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub a: [[f64; 3]; 3],
    pub b: [[f64; 3]; 3],
    #[serde(rename = "i")]
    pub bias: f64,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<SymmetryPattern>,
}

impl TemplateSet {
    pub fn new(a: [[f64; 3]; 3], b: [[f64; 3]; 3], bias: f64, dt: f64) -> Result<Self> {
        let all_finite = a
            .iter()
            .chain(b.iter())
            .flatten()
            .chain([&bias, &dt])
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(CennError::NonFinite {
                context: "template coefficients".into(),
            });
        }
        if dt <= 0.0 {
            return Err(CennError::InvalidTask(format!(
                "step size must be positive, got {dt}"
            )));
        }
        Ok(Self {
            a,
            b,
            bias,
            dt,
            pattern: None,
        })
    }

    pub fn with_pattern(mut self, pattern: SymmetryPattern) -> Self {
        self.pattern = Some(pattern);
        self
    }

    /// Builds a template set from a parameter vector (free template
    /// parameters followed by the bias).
    pub fn from_params(pattern: &SymmetryPattern, params: &[f64], dt: f64) -> Result<Self> {
        if params.len() != pattern.free_count() + 1 {
            return Err(CennError::ParamLength {
                expected: pattern.free_count() + 1,
                got: params.len(),
            });
        }
        let (a, b) = pattern.expand(&params[..pattern.free_count()])?;
        let bias = params[pattern.free_count()];
        Ok(Self::new(a, b, bias, dt)?.with_pattern(pattern.clone()))
    }

    /// Number of entries in the parameter vector (free parameters + bias).
    pub fn param_len(&self) -> usize {
        self.free_count() + 1
    }

    /// Number of free template parameters; 18 when no pattern is attached.
    pub fn free_count(&self) -> usize {
        self.pattern.as_ref().map_or(18, |p| p.free_count())
    }

    /// How many template cells share parameter `idx`; the bias (last index)
    /// occurs once.
    pub fn occurrences(&self, idx: usize) -> usize {
        if idx == self.free_count() {
            return 1;
        }
        match &self.pattern {
            Some(p) => p.occurrences(idx),
            None => 1,
        }
    }

    /// Extracts the parameter vector (free parameters + bias) by reading one
    /// representative cell per parameter.
    pub fn to_params(&self) -> Vec<f64> {
        let mut params = vec![0.0; self.param_len()];
        match &self.pattern {
            Some(p) => {
                for r in 0..3 {
                    for c in 0..3 {
                        params[p.a_map[r][c]] = self.a[r][c];
                        params[p.b_map[r][c]] = self.b[r][c];
                    }
                }
            }
            None => {
                for r in 0..3 {
                    for c in 0..3 {
                        params[3 * r + c] = self.a[r][c];
                        params[9 + 3 * r + c] = self.b[r][c];
                    }
                }
            }
        }
        params[self.param_len() - 1] = self.bias;
        params
    }

    /// Replaces all coefficients from a parameter vector, keeping `dt` and
    /// the attached pattern.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_len() {
            return Err(CennError::ParamLength {
                expected: self.param_len(),
                got: params.len(),
            });
        }
        match &self.pattern {
            Some(p) => {
                let (a, b) = p.expand(&params[..p.free_count()])?;
                self.a = a;
                self.b = b;
            }
            None => {
                for r in 0..3 {
                    for c in 0..3 {
                        self.a[r][c] = params[3 * r + c];
                        self.b[r][c] = params[9 + 3 * r + c];
                    }
                }
            }
        }
        self.bias = params[self.param_len() - 1];
        Ok(())
    }
}
