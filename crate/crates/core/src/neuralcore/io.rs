//! JSON model files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdamConfig, AdamState, ArchConfig, ModelParams, NeuralError, ParamGrads, Tensor};
use crate::txcore::ClassLabel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct NamedArray {
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AdamRecord {
    config: AdamConfig,
    step: u64,
    m: BTreeMap<String, NamedArray>,
    v: BTreeMap<String, NamedArray>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    arch: ArchConfig,
    class_order: Vec<String>,
    seed: u64,
    params: BTreeMap<String, NamedArray>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adam_state: Option<AdamRecord>,
}

/// A model with the seed it was initialised from and, optionally, its optimiser state.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: ModelParams,
    pub seed: u64,
    pub adam: Option<AdamState>,
}

fn to_named(arch: &ArchConfig, tensors: &[Tensor]) -> BTreeMap<String, NamedArray> {
    arch.param_names()
        .into_iter()
        .zip(tensors)
        .map(|(name, t)| {
            (
                name,
                NamedArray {
                    shape: t.shape().to_vec(),
                    values: t.data().to_vec(),
                },
            )
        })
        .collect()
}

fn from_named(
    arch: &ArchConfig,
    mut named: BTreeMap<String, NamedArray>,
    what: &str,
) -> Result<Vec<Tensor>, NeuralError> {
    let mut out = Vec::new();
    for (name, shape) in arch.param_names().into_iter().zip(arch.param_shapes()) {
        let arr = named
            .remove(&name)
            .ok_or_else(|| NeuralError::Format(format!("{what}: missing `{name}`")))?;
        if arr.shape != shape {
            return Err(NeuralError::ShapeMismatch(format!(
                "{what}: `{name}` has shape {:?}, architecture needs {shape:?}",
                arr.shape
            )));
        }
        out.push(
            Tensor::new(arr.shape, arr.values)
                .ok_or_else(|| NeuralError::ShapeMismatch(format!("{what}: `{name}` value count")))?,
        );
    }
    if let Some(extra) = named.keys().next() {
        return Err(NeuralError::Format(format!("{what}: unexpected `{extra}`")));
    }
    Ok(out)
}

pub fn model_to_json(model: &SavedModel) -> String {
    let arch = &model.params.arch;
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        arch: arch.clone(),
        class_order: ClassLabel::ALL.iter().map(|l| l.name().to_string()).collect(),
        seed: model.seed,
        params: to_named(arch, &model.params.tensors),
        adam_state: model.adam.as_ref().map(|s| AdamRecord {
            config: s.config,
            step: s.step,
            m: to_named(arch, &s.m.tensors),
            v: to_named(arch, &s.v.tensors),
        }),
    };
    serde_json::to_string(&file).expect("model serialises")
}

pub fn model_from_json(text: &str) -> Result<SavedModel, NeuralError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| NeuralError::Format(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(NeuralError::Format(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    let expected: Vec<&str> = ClassLabel::ALL.iter().map(|l| l.name()).collect();
    if file.class_order != expected {
        return Err(NeuralError::Format(format!(
            "class_order {:?} differs from {expected:?}",
            file.class_order
        )));
    }
    file.arch.validate()?;
    let params = ModelParams {
        tensors: from_named(&file.arch, file.params, "params")?,
        arch: file.arch,
    };
    params.validate()?;
    let adam = file
        .adam_state
        .map(|rec| -> Result<AdamState, NeuralError> {
            Ok(AdamState {
                config: rec.config,
                step: rec.step,
                m: ParamGrads {
                    tensors: from_named(&params.arch, rec.m, "adam.m")?,
                },
                v: ParamGrads {
                    tensors: from_named(&params.arch, rec.v, "adam.v")?,
                },
            })
        })
        .transpose()?;
    Ok(SavedModel {
        params,
        seed: file.seed,
        adam,
    })
}

pub fn save_model(model: &SavedModel, path: &Path) -> Result<(), NeuralError> {
    std::fs::write(path, model_to_json(model) + "\n")?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel, NeuralError> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralcore::{adam_step, init_model};

    #[test]
    fn round_trip_exact_with_adam() {
        let params = init_model(&ArchConfig::with_value(true), 9).unwrap();
        let mut p = params.clone();
        let mut s = AdamState::new(&p, AdamConfig::default());
        let mut g = ParamGrads::zeros_like(&p);
        g.tensors.iter_mut().for_each(|t| t.data_mut().fill(0.37));
        adam_step(&mut p, &mut s, &g).unwrap();
        let saved = SavedModel {
            params: p,
            seed: 9,
            adam: Some(s),
        };
        let back = model_from_json(&model_to_json(&saved)).unwrap();
        assert_eq!(back, saved);
    }

    #[test]
    fn rejects_bad_shapes() {
        let params = init_model(&ArchConfig::with_value(false), 1).unwrap();
        let json = model_to_json(&SavedModel {
            params,
            seed: 1,
            adam: None,
        });
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["params"]["dense.bias"]["shape"] = serde_json::json!([6]);
        assert!(matches!(
            model_from_json(&v.to_string()),
            Err(NeuralError::ShapeMismatch(_))
        ));
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["params"]["conv0.bias"]["values"] = serde_json::json!([0.0]);
        assert!(model_from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["class_order"] = serde_json::json!(["DoS"]);
        assert!(matches!(model_from_json(&v.to_string()), Err(NeuralError::Format(_))));
    }
}
