//! Serialized artifacts the commands exchange: trained templates, sweep
//! reports, and the shift-friendly coefficient encoding.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use cenn::error::{CennError, Result};
use cenn::fixed::ShiftCoeff;
use cenn::quant::RoundRecord;
use cenn::template::TemplateSet;

/// A trained (or quantized) template with its provenance stamp.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateArtifact {
    pub seed: u64,
    pub version: String,
    /// Training objective (sum of per-pair mean absolute errors).
    pub objective: f64,
    pub accuracy: f64,
    /// Flat parameter vector (pattern free values, bias last).
    pub params: Vec<f64>,
    pub template: TemplateSet,
    /// Per-coefficient shift encoding; present when every coefficient is a
    /// power of two or zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_encoding: Option<Value>,
}

impl TemplateArtifact {
    pub fn new(
        seed: u64,
        objective: f64,
        accuracy: f64,
        params: Vec<f64>,
        template: TemplateSet,
    ) -> TemplateArtifact {
        let shift_encoding = encode_template(&template);
        TemplateArtifact {
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            objective,
            accuracy,
            params,
            template,
            shift_encoding,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Loads a template from either an artifact file or a bare template
    /// JSON.
    pub fn load_template(path: &Path) -> Result<TemplateSet> {
        let text = std::fs::read_to_string(path)?;
        if let Ok(artifact) = serde_json::from_str::<TemplateArtifact>(&text) {
            return Ok(artifact.template);
        }
        serde_json::from_str::<TemplateSet>(&text).map_err(|e| {
            CennError::InvalidManifest(format!(
                "{}: neither a template artifact nor a template: {e}",
                path.display()
            ))
        })
    }
}

/// `0` for zero, `{"sign": ±1, "p": exponent}` for `±2^p`.
fn encode_coeff(v: f64) -> Option<Value> {
    match ShiftCoeff::from_f64(v) {
        Ok(ShiftCoeff::Zero) => Some(json!(0)),
        Ok(ShiftCoeff::Pow2 { negative, exponent }) => Some(json!({
            "sign": if negative { -1 } else { 1 },
            "p": exponent,
        })),
        Err(_) => None,
    }
}

/// Shift encoding of a whole template: both coefficient matrices as
/// sign/exponent pairs, the bias left as a real number. `None` when any
/// coefficient is not a power of two.
pub fn encode_template(tpl: &TemplateSet) -> Option<Value> {
    let encode_matrix = |m: &[[f64; 3]; 3]| -> Option<Value> {
        let rows: Option<Vec<Vec<Value>>> = m
            .iter()
            .map(|row| row.iter().map(|&v| encode_coeff(v)).collect())
            .collect();
        rows.map(|r| json!(r))
    };
    Some(json!({
        "a": encode_matrix(&tpl.a)?,
        "b": encode_matrix(&tpl.b)?,
        "bias": tpl.bias,
        "dt": tpl.dt,
    }))
}

/// Round-by-round log of one quantization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundsArtifact {
    pub seed: u64,
    pub version: String,
    pub strategy: String,
    pub batch: String,
    pub m: i32,
    pub rounds: Vec<RoundRecord>,
}
