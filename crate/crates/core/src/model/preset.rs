use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{generate_model, GeneratorConfig, ModelSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PresetName {
    XXS,
    XS,
    S,
    M,
    L,
    XL,
}

impl PresetName {
    pub const ALL: [PresetName; 6] = [Self::XXS, Self::XS, Self::S, Self::M, Self::L, Self::XL];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::XXS => "XXS",
            Self::XS => "XS",
            Self::S => "S",
            Self::M => "M",
            Self::L => "L",
            Self::XL => "XL",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// A named model size with fixed modality and hidden-state counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPreset {
    pub name: PresetName,
    pub num_modalities: usize,
    pub total_hidden_states: usize,
    pub generator_params: GeneratorConfig,
}

// (name, modalities, sum of K_n, zero fraction of the per-modality tables)
const REGISTRY: [(PresetName, usize, usize, f64); 6] = [
    (PresetName::XXS, 16, 60, 0.610),
    (PresetName::XS, 46, 180, 0.597),
    (PresetName::S, 92, 364, 0.576),
    (PresetName::M, 154, 612, 0.564),
    (PresetName::L, 232, 924, 0.557),
    (PresetName::XL, 326, 1300, 0.552),
];

const MEAN_FACTOR_CARDINALITY: usize = 4;
const FACTOR_CARDINALITY_RANGE: (usize, usize) = (2, 6);
const OUTCOME_CARDINALITY_RANGE: (usize, usize) = (2, 12);
const DEPS_RANGE: (usize, usize) = (1, 3);
const PRESET_SEED_BASE: u64 = 0x00A1_F000;

impl ModelPreset {
    pub fn get(name: PresetName) -> Self {
        let (i, &(_, num_modalities, total_hidden_states, rho)) = REGISTRY
            .iter()
            .enumerate()
            .find(|(_, r)| r.0 == name)
            .expect("every preset name is registered");
        Self {
            name,
            num_modalities,
            total_hidden_states,
            generator_params: GeneratorConfig {
                seed: PRESET_SEED_BASE + i as u64,
                num_factors: total_hidden_states / MEAN_FACTOR_CARDINALITY,
                factor_cardinality_range: FACTOR_CARDINALITY_RANGE,
                num_modalities,
                outcome_cardinality_range: OUTCOME_CARDINALITY_RANGE,
                deps_per_modality_range: DEPS_RANGE,
                functional_sparsity_target: rho,
                total_hidden_states: Some(total_hidden_states),
            },
        }
    }

    pub fn all() -> Vec<Self> {
        PresetName::ALL.into_iter().map(Self::get).collect()
    }

    pub fn generate(&self) -> Result<ModelSpec> {
        generate_model(&self.generator_params)
    }
}

/// Looks up a preset by name (case-insensitive) and generates its model.
pub fn preset(name: &str) -> Result<(ModelPreset, ModelSpec)> {
    let p = ModelPreset::get(name.parse()?);
    let spec = p.generate()?;
    Ok((p, spec))
}
