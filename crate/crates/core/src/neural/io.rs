//! JSON model files: `{dims, W1, b1, W2, b2, feature_bounds, target_bounds, seed}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Bounds, NeuralModel};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    dims: [usize; 3],
    #[serde(rename = "W1")]
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    #[serde(rename = "W2")]
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_bounds: Option<Bounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_bounds: Option<Bounds>,
    seed: u64,
}

pub fn save_model(model: &NeuralModel, path: &Path) -> Result<()> {
    let file = ModelFile {
        dims: model.dims(),
        w1: model.w1.clone(),
        b1: model.b1.clone(),
        w2: model.w2.clone(),
        b2: model.b2.clone(),
        feature_bounds: model.feature_bounds.clone(),
        target_bounds: model.target_bounds.clone(),
        seed: model.seed,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<NeuralModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}

pub(crate) fn parse_model(text: &str, path: &Path) -> Result<NeuralModel> {
    let bad = |message: String| Error::ModelParse {
        path: path.to_path_buf(),
        message,
    };
    let file: ModelFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let [p, hidden, outputs] = file.dims;
    if p == 0 || hidden == 0 || outputs == 0 {
        return Err(bad(format!("dims {:?} must all be >= 1", file.dims)));
    }
    let check_matrix = |name: &str, m: &[Vec<f64>], rows: usize, cols: usize| -> Result<()> {
        if m.len() != rows {
            return Err(bad(format!(
                "field `{name}`: expected {rows} rows, found {}",
                m.len()
            )));
        }
        if let Some((r, row)) = m.iter().enumerate().find(|(_, row)| row.len() != cols) {
            return Err(bad(format!(
                "field `{name}`: row {r} has {} columns, expected {cols}",
                row.len()
            )));
        }
        Ok(())
    };
    check_matrix("W1", &file.w1, hidden, p)?;
    check_matrix("W2", &file.w2, outputs, hidden)?;
    if file.b1.len() != hidden {
        return Err(bad(format!(
            "field `b1`: expected {hidden} values, found {}",
            file.b1.len()
        )));
    }
    if file.b2.len() != outputs {
        return Err(bad(format!(
            "field `b2`: expected {outputs} values, found {}",
            file.b2.len()
        )));
    }
    let (feature_bounds, target_bounds) = match (file.feature_bounds, file.target_bounds) {
        (Some(f), Some(t)) => (f, t),
        (None, _) => {
            return Err(Error::Untrained(format!(
                "{}: missing `feature_bounds`",
                path.display()
            )))
        }
        (_, None) => {
            return Err(Error::Untrained(format!(
                "{}: missing `target_bounds`",
                path.display()
            )))
        }
    };
    if feature_bounds.len() != p {
        return Err(bad(format!("field `feature_bounds`: expected {p} pairs")));
    }
    if target_bounds.len() != outputs {
        return Err(bad(format!(
            "field `target_bounds`: expected {outputs} pairs"
        )));
    }
    if feature_bounds
        .iter()
        .chain(&target_bounds)
        .any(|(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi)
    {
        return Err(bad("bounds must satisfy min <= max".into()));
    }
    Ok(NeuralModel {
        w1: file.w1,
        b1: file.b1,
        w2: file.w2,
        b2: file.b2,
        feature_bounds: Some(feature_bounds),
        target_bounds: Some(target_bounds),
        seed: file.seed,
    })
}
