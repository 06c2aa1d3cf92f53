//! Bundled reference inputs: the H100 profile, the reference coefficient
//! file, public model-card dimensions and the trace fixture.

use crate::xformer::ModelSpec;

pub const H100_SXM_PROFILE: &str = include_str!("../data/h100_sxm_fp32.hw");
pub const REFERENCE_COEFFS: &str = include_str!("../data/reference.coeffs");
/// Synthetic "thank you" trace whose full-generation component means are
/// 0.202 / 0.024 / 0.019 Wh (GPU / CPU / RAM).
pub const THANK_YOU_FIXTURE: &str = include_str!("../data/thank_you_fixture.csv");

const LLAMA_8B: &str = include_str!("../data/models/llama-3.1-8b.model");
const MISTRAL_7B: &str = include_str!("../data/models/mistral-7b-v0.3.model");
const QWEN: [&str; 5] = [
    include_str!("../data/models/qwen2.5-0.5b.model"),
    include_str!("../data/models/qwen2.5-1.5b.model"),
    include_str!("../data/models/qwen2.5-3b.model"),
    include_str!("../data/models/qwen2.5-7b.model"),
    include_str!("../data/models/qwen2.5-14b.model"),
];

fn parse(text: &str) -> ModelSpec {
    ModelSpec::from_kv_str(text).expect("bundled model spec is valid")
}

pub fn llama_8b() -> ModelSpec {
    parse(LLAMA_8B)
}

pub fn mistral_7b() -> ModelSpec {
    parse(MISTRAL_7B)
}

/// Qwen2.5 0.5B, 1.5B, 3B, 7B and 14B, in that order.
pub fn qwen_family() -> Vec<ModelSpec> {
    QWEN.iter().map(|t| parse(t)).collect()
}

pub fn bundled_models() -> Vec<ModelSpec> {
    let mut v = vec![llama_8b(), mistral_7b()];
    v.extend(qwen_family());
    v
}

/// Looks a bundled model up by its `name` field.
pub fn bundled_model(name: &str) -> Option<ModelSpec> {
    bundled_models().into_iter().find(|m| m.name() == name)
}
