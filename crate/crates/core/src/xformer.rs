//! FLOP and byte accounting for decoder-only transformer inference.
//!
//! Counting rules:
//!
//! - A `(m×k)·(k×n)` matmul costs `2·m·n·k` FLOPs.
//! - Attention follows the FlashAttention count: `4·q·c·h` FLOPs for `q`
//!   queries against `c` keys (scores plus value mixing), plus
//!   [`SOFTMAX_FLOPS_PER_SCORE`] per score per head. No `q×c` score matrix
//!   is ever written to device memory.
//! - Normalization FLOPs are not counted; norm weights are charged to the
//!   projection that consumes the normalized activations, so the weight
//!   bytes read per forward pass equal `n_params · bytes_per_param`.
//! - Every weight tensor is streamed from device memory once per operation,
//!   each activation is read once and written once, and nothing is credited
//!   to caches.
//! - Operation classes are aggregated over all layers: one [`OpCost`] per
//!   class, carrying `n_layers` times the per-layer work.
//! - The embedding lookup costs bytes only. An untied embedding table is
//!   streamed in full; a tied table is read by the LM head, and the lookup
//!   only gathers its rows.

use std::path::Path;

use serde::Deserialize;

use crate::error::{ConfigError, InvalidInput};
use crate::phase_model::{energy_from_power, Phase};
use crate::roofline::{boundedness, op_latency, Boundedness, HardwareProfile, OpCost};

pub const SOFTMAX_FLOPS_PER_SCORE: f64 = 5.0;

pub const EMBED: &str = "embed";
pub const QKV_PROJ: &str = "qkv_proj";
pub const ATTN: &str = "attn";
pub const OUT_PROJ: &str = "out_proj";
pub const FFN: &str = "ffn";
pub const LM_HEAD: &str = "lm_head";

/// Classes that are matrix multiplications.
pub const MATMUL_CLASSES: [&str; 5] = [QKV_PROJ, ATTN, OUT_PROJ, FFN, LM_HEAD];
/// Classes repeated once per transformer block.
pub const BLOCK_CLASSES: [&str; 4] = [QKV_PROJ, ATTN, OUT_PROJ, FFN];

/// Architecture of a dense decoder-only transformer.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ModelSpec {
    name: String,
    n_layers: u64,
    hidden: u64,
    n_heads: u64,
    head_dim: u64,
    kv_heads: u64,
    ffn_dim: u64,
    ffn_gated: bool,
    vocab: u64,
    tied_embeddings: bool,
    bytes_per_param: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    n_layers: u64,
    hidden: u64,
    n_heads: u64,
    head_dim: u64,
    kv_heads: Option<u64>,
    ffn_dim: u64,
    #[serde(default)]
    ffn_gated: bool,
    vocab: u64,
    #[serde(default)]
    tied_embeddings: bool,
    bytes_per_param: u64,
}

impl TryFrom<RawSpec> for ModelSpec {
    type Error = InvalidInput;

    fn try_from(r: RawSpec) -> Result<Self, InvalidInput> {
        ModelSpec::builder(r.name)
            .layers(r.n_layers)
            .attention(r.n_heads, r.head_dim, r.kv_heads.unwrap_or(r.n_heads))
            .hidden(r.hidden)
            .ffn(r.ffn_dim, r.ffn_gated)
            .vocab(r.vocab, r.tied_embeddings)
            .bytes_per_param(r.bytes_per_param)
            .build()
    }
}

/// Builder for [`ModelSpec`]; `hidden` defaults to `n_heads·head_dim`,
/// `kv_heads` to `n_heads`, precision to FP32.
#[derive(Debug, Clone)]
pub struct ModelSpecBuilder {
    name: String,
    n_layers: u64,
    hidden: Option<u64>,
    n_heads: u64,
    head_dim: u64,
    kv_heads: Option<u64>,
    ffn_dim: u64,
    ffn_gated: bool,
    vocab: u64,
    tied_embeddings: bool,
    bytes_per_param: u64,
}

impl ModelSpecBuilder {
    pub fn layers(mut self, n: u64) -> Self {
        self.n_layers = n;
        self
    }
    pub fn hidden(mut self, h: u64) -> Self {
        self.hidden = Some(h);
        self
    }
    pub fn attention(mut self, n_heads: u64, head_dim: u64, kv_heads: u64) -> Self {
        self.n_heads = n_heads;
        self.head_dim = head_dim;
        self.kv_heads = Some(kv_heads);
        self
    }
    pub fn ffn(mut self, dim: u64, gated: bool) -> Self {
        self.ffn_dim = dim;
        self.ffn_gated = gated;
        self
    }
    pub fn vocab(mut self, vocab: u64, tied: bool) -> Self {
        self.vocab = vocab;
        self.tied_embeddings = tied;
        self
    }
    pub fn bytes_per_param(mut self, b: u64) -> Self {
        self.bytes_per_param = b;
        self
    }

    pub fn build(self) -> Result<ModelSpec, InvalidInput> {
        let hidden = self.hidden.unwrap_or(self.n_heads * self.head_dim);
        let kv_heads = self.kv_heads.unwrap_or(self.n_heads);
        for (field, v) in [
            ("n_layers", self.n_layers),
            ("hidden", hidden),
            ("n_heads", self.n_heads),
            ("head_dim", self.head_dim),
            ("kv_heads", kv_heads),
            ("ffn_dim", self.ffn_dim),
            ("vocab", self.vocab),
            ("bytes_per_param", self.bytes_per_param),
        ] {
            if v == 0 {
                return Err(InvalidInput::field(field, "must be a positive integer"));
            }
        }
        if self.n_heads * self.head_dim != hidden {
            return Err(InvalidInput::field(
                "hidden",
                format!(
                    "n_heads*head_dim = {} but hidden = {hidden}",
                    self.n_heads * self.head_dim
                ),
            ));
        }
        if kv_heads > self.n_heads || !self.n_heads.is_multiple_of(kv_heads) {
            return Err(InvalidInput::field(
                "kv_heads",
                "must divide n_heads and not exceed it",
            ));
        }
        Ok(ModelSpec {
            name: self.name,
            n_layers: self.n_layers,
            hidden,
            n_heads: self.n_heads,
            head_dim: self.head_dim,
            kv_heads,
            ffn_dim: self.ffn_dim,
            ffn_gated: self.ffn_gated,
            vocab: self.vocab,
            tied_embeddings: self.tied_embeddings,
            bytes_per_param: self.bytes_per_param,
        })
    }
}

impl ModelSpec {
    pub fn builder(name: impl Into<String>) -> ModelSpecBuilder {
        ModelSpecBuilder {
            name: name.into(),
            n_layers: 0,
            hidden: None,
            n_heads: 0,
            head_dim: 0,
            kv_heads: None,
            ffn_dim: 0,
            ffn_gated: false,
            vocab: 0,
            tied_embeddings: false,
            bytes_per_param: 4,
        }
    }

    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_kv_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_kv_string(&self) -> String {
        format!(
            "name = {:?}\nn_layers = {}\nhidden = {}\nn_heads = {}\nhead_dim = {}\nkv_heads = {}\nffn_dim = {}\nffn_gated = {}\nvocab = {}\ntied_embeddings = {}\nbytes_per_param = {}\n",
            self.name,
            self.n_layers,
            self.hidden,
            self.n_heads,
            self.head_dim,
            self.kv_heads,
            self.ffn_dim,
            self.ffn_gated,
            self.vocab,
            self.tied_embeddings,
            self.bytes_per_param
        )
    }

    /// Copy with a different layer count.
    pub fn with_layers(&self, n_layers: u64) -> Result<Self, InvalidInput> {
        let mut m = self.clone();
        if n_layers == 0 {
            return Err(InvalidInput::field(
                "n_layers",
                "must be a positive integer",
            ));
        }
        m.n_layers = n_layers;
        Ok(m)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n_layers(&self) -> u64 {
        self.n_layers
    }
    pub fn hidden(&self) -> u64 {
        self.hidden
    }
    pub fn n_heads(&self) -> u64 {
        self.n_heads
    }
    pub fn head_dim(&self) -> u64 {
        self.head_dim
    }
    pub fn kv_heads(&self) -> u64 {
        self.kv_heads
    }
    pub fn ffn_dim(&self) -> u64 {
        self.ffn_dim
    }
    pub fn ffn_gated(&self) -> bool {
        self.ffn_gated
    }
    pub fn vocab(&self) -> u64 {
        self.vocab
    }
    pub fn tied_embeddings(&self) -> bool {
        self.tied_embeddings
    }
    pub fn bytes_per_param(&self) -> u64 {
        self.bytes_per_param
    }

    /// Width of the key (or value) projection output.
    pub fn kv_dim(&self) -> u64 {
        self.kv_heads * self.head_dim
    }

    fn ffn_matrices(&self) -> u64 {
        if self.ffn_gated {
            3
        } else {
            2
        }
    }

    /// Per-block weights: attention projections, FFN, and two norms.
    pub fn block_params(&self) -> u64 {
        let h = self.hidden;
        h * (h + 2 * self.kv_dim()) + h * h + self.ffn_matrices() * h * self.ffn_dim + 2 * h
    }

    /// Total parameter count, derived from the dimensions.
    pub fn n_params(&self) -> u64 {
        let tables = if self.tied_embeddings { 1 } else { 2 };
        self.n_layers * self.block_params() + tables * self.vocab * self.hidden + self.hidden
    }

    /// Bytes of every weight tensor at this precision.
    pub fn weight_bytes(&self) -> f64 {
        self.n_params() as f64 * self.bytes_per_param as f64
    }

    /// KV-cache bytes held for `context_len` tokens across all layers.
    pub fn kv_cache_bytes(&self, context_len: u64) -> f64 {
        2.0 * context_len as f64
            * self.n_layers as f64
            * self.kv_dim() as f64
            * self.bytes_per_param as f64
    }

    /// Costs of one forward pass over `queries` new tokens attending to
    /// `context` cached plus new positions.
    fn forward_costs(&self, queries: u64, context: u64) -> Vec<OpCost> {
        let p = self.bytes_per_param as f64;
        let n = self.n_layers as f64;
        let h = self.hidden as f64;
        let kv = self.kv_dim() as f64;
        let f = self.ffn_dim as f64;
        let v = self.vocab as f64;
        let m = queries as f64;
        let c = context as f64;
        let k = self.ffn_matrices() as f64;

        let embed_bytes = if self.tied_embeddings {
            2.0 * m * h
        } else {
            v * h + m * h
        };

        let qkv_w = h * (h + 2.0 * kv) + h;
        let qkv_flops = 2.0 * m * h * (h + 2.0 * kv);
        let qkv_bytes = qkv_w + m * h + m * (h + 2.0 * kv);

        let attn_flops = 4.0 * m * c * h + SOFTMAX_FLOPS_PER_SCORE * m * c * self.n_heads as f64;
        let attn_bytes = m * h + 2.0 * c * kv + m * h;

        let out_flops = 2.0 * m * h * h;
        let out_bytes = h * h + 2.0 * m * h;

        let ffn_w = k * h * f + h;
        let ffn_flops = 2.0 * k * m * h * f;
        let ffn_bytes = ffn_w + 2.0 * m * h + 2.0 * m * f;

        let head_flops = 2.0 * m * h * v;
        let head_bytes = v * h + h + m * h + m * v;

        let op = |label: &str, flops: f64, bytes: f64| {
            OpCost::new(label, flops, bytes * p).expect("positive dimensions give valid costs")
        };
        vec![
            op(EMBED, 0.0, embed_bytes),
            op(QKV_PROJ, n * qkv_flops, n * qkv_bytes),
            op(ATTN, n * attn_flops, n * attn_bytes),
            op(OUT_PROJ, n * out_flops, n * out_bytes),
            op(FFN, n * ffn_flops, n * ffn_bytes),
            op(LM_HEAD, head_flops, head_bytes),
        ]
    }
}

/// Operation costs of encoding an `s`-token prompt.
pub fn prefill_costs(model: &ModelSpec, s: u64) -> Result<Vec<OpCost>, InvalidInput> {
    if s == 0 {
        return Err(InvalidInput::Precondition("prefill needs s >= 1".into()));
    }
    Ok(model.forward_costs(s, s))
}

/// Operation costs of generating one token against `context_len` positions.
pub fn decode_step_costs(model: &ModelSpec, context_len: u64) -> Result<Vec<OpCost>, InvalidInput> {
    if context_len == 0 {
        return Err(InvalidInput::Precondition(
            "decode step needs context_len >= 1".into(),
        ));
    }
    Ok(model.forward_costs(1, context_len))
}

/// Latency attributed to one operation class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCost {
    pub label: String,
    /// Work summed over every step of the phase.
    pub cost: OpCost,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCostBreakdown {
    pub classes: Vec<ClassCost>,
    pub total_seconds: f64,
    pub dominant_class: String,
}

impl PhaseCostBreakdown {
    fn from_classes(classes: Vec<ClassCost>) -> Self {
        let total_seconds = classes.iter().map(|c| c.seconds).sum();
        let dominant_class = classes
            .iter()
            .fold(None::<&ClassCost>, |best, c| match best {
                Some(b) if b.seconds >= c.seconds => Some(b),
                _ => Some(c),
            })
            .map(|c| c.label.clone())
            .unwrap_or_default();
        PhaseCostBreakdown {
            classes,
            total_seconds,
            dominant_class,
        }
    }

    pub fn class(&self, label: &str) -> Option<&ClassCost> {
        self.classes.iter().find(|c| c.label == label)
    }

    /// Seconds spent in the per-block classes (everything that repeats
    /// `n_layers` times).
    pub fn block_seconds(&self) -> f64 {
        self.classes
            .iter()
            .filter(|c| BLOCK_CLASSES.contains(&c.label.as_str()))
            .map(|c| c.seconds)
            .sum()
    }
}

pub fn predict_prefill_latency(
    model: &ModelSpec,
    hw: &HardwareProfile,
    s: u64,
) -> Result<PhaseCostBreakdown, InvalidInput> {
    let classes = prefill_costs(model, s)?
        .into_iter()
        .map(|cost| ClassCost {
            label: cost.label().to_string(),
            seconds: op_latency(&cost, hw),
            cost,
        })
        .collect();
    Ok(PhaseCostBreakdown::from_classes(classes))
}

/// Sums decode steps `t = 1..=g`, step `t` attending to `s + t - 1`
/// positions.
pub fn predict_decode_latency(
    model: &ModelSpec,
    hw: &HardwareProfile,
    s: u64,
    g: u64,
) -> Result<PhaseCostBreakdown, InvalidInput> {
    if s == 0 || g == 0 {
        return Err(InvalidInput::Precondition(
            "decode needs s >= 1 and g >= 1".into(),
        ));
    }
    let mut acc: Vec<(String, f64, f64, f64)> = Vec::new();
    for t in 1..=g {
        for (i, cost) in decode_step_costs(model, s + t - 1)?.into_iter().enumerate() {
            let secs = op_latency(&cost, hw);
            if t == 1 {
                acc.push((cost.label().to_string(), cost.flops(), cost.bytes(), secs));
            } else {
                let a = &mut acc[i];
                a.1 += cost.flops();
                a.2 += cost.bytes();
                a.3 += secs;
            }
        }
    }
    let classes = acc
        .into_iter()
        .map(|(label, flops, bytes, seconds)| ClassCost {
            cost: OpCost::new(label.clone(), flops, bytes).expect("sum of valid costs"),
            label,
            seconds,
        })
        .collect();
    Ok(PhaseCostBreakdown::from_classes(classes))
}

/// Boundedness of every class of a prefill pass.
pub fn prefill_boundedness(
    model: &ModelSpec,
    hw: &HardwareProfile,
    s: u64,
) -> Result<Vec<(String, Boundedness)>, InvalidInput> {
    Ok(prefill_costs(model, s)?
        .iter()
        .map(|c| (c.label().to_string(), boundedness(c, hw)))
        .collect())
}

/// Boundedness of every class of one decode step.
pub fn decode_boundedness(
    model: &ModelSpec,
    hw: &HardwareProfile,
    context_len: u64,
) -> Result<Vec<(String, Boundedness)>, InvalidInput> {
    Ok(decode_step_costs(model, context_len)?
        .iter()
        .map(|c| (c.label().to_string(), boundedness(c, hw)))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub name: String,
    pub n_params: u64,
    pub hidden: u64,
    pub n_layers: u64,
    pub decode_seconds: f64,
    pub decode_wh: f64,
}

/// Predicted decode energy of each model, ordered by parameter count.
pub fn size_scaling_curve(
    models: &[ModelSpec],
    hw: &HardwareProfile,
    s: u64,
    g: u64,
) -> Result<Vec<ScalingRow>, InvalidInput> {
    if models.is_empty() {
        return Err(InvalidInput::Precondition("need at least one model".into()));
    }
    let mut rows = models
        .iter()
        .map(|m| {
            let t = predict_decode_latency(m, hw, s, g)?.total_seconds;
            Ok(ScalingRow {
                name: m.name().to_string(),
                n_params: m.n_params(),
                hidden: m.hidden(),
                n_layers: m.n_layers(),
                decode_seconds: t,
                decode_wh: energy_from_power(Phase::Decode, t, hw),
            })
        })
        .collect::<Result<Vec<_>, InvalidInput>>()?;
    rows.sort_by_key(|r| r.n_params);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mha(h: u64) -> ModelSpec {
        ModelSpec::builder("mha")
            .layers(8)
            .attention(h / 64, 64, h / 64)
            .ffn(4 * h, false)
            .vocab(32000, false)
            .build()
            .unwrap()
    }

    fn sum_flops(costs: &[OpCost], labels: &[&str]) -> f64 {
        costs
            .iter()
            .filter(|c| labels.contains(&c.label()))
            .map(|c| c.flops())
            .sum()
    }

    #[test]
    fn llama_param_count() {
        let m = crate::data::llama_8b();
        let n = m.n_params();
        assert!((8.0e9..8.1e9).contains(&(n as f64)), "{n}");
        // FP32 weights ≈ 3.2e10 bytes
        assert!((m.weight_bytes() / 3.2e10 - 1.0).abs() < 0.01);
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::builder("x")
            .layers(0)
            .attention(4, 16, 4)
            .ffn(64, false)
            .vocab(10, false)
            .build()
            .is_err());
        assert!(ModelSpec::builder("x")
            .layers(1)
            .attention(4, 16, 4)
            .hidden(100)
            .ffn(64, false)
            .vocab(10, false)
            .build()
            .is_err());
        assert!(ModelSpec::builder("x")
            .layers(1)
            .attention(4, 16, 3)
            .ffn(64, false)
            .vocab(10, false)
            .build()
            .is_err());
    }

    #[test]
    fn matmul_counting_rule() {
        // out_proj is one (s×h)·(h×h) matmul per layer
        let m = mha(512);
        let costs = prefill_costs(&m, 7).unwrap();
        let out = costs.iter().find(|c| c.label() == OUT_PROJ).unwrap();
        assert_eq!(out.flops(), 8.0 * 2.0 * 7.0 * 512.0 * 512.0);
        let attn = costs.iter().find(|c| c.label() == ATTN).unwrap();
        let matmul_part = 8.0 * 4.0 * 49.0 * 512.0;
        let softmax_part = 8.0 * SOFTMAX_FLOPS_PER_SCORE * 49.0 * 8.0;
        assert_eq!(attn.flops(), matmul_part + softmax_part);
    }

    #[test]
    fn per_token_prefill_flops_near_two_n_params() {
        let m = crate::data::llama_8b();
        let costs = prefill_costs(&m, 1).unwrap();
        let without_attn: f64 = costs
            .iter()
            .filter(|c| c.label() != ATTN)
            .map(|c| c.flops())
            .sum();
        let rule = 2.0 * m.n_params() as f64;
        assert!(
            (without_attn / rule - 1.0).abs() < 0.10,
            "{}",
            without_attn / rule
        );
    }

    #[test]
    fn doubling_hidden_quadruples_projection_flops() {
        let proj = [QKV_PROJ, OUT_PROJ, FFN];
        let a = sum_flops(&prefill_costs(&mha(1024), 300).unwrap(), &proj);
        let b = sum_flops(&prefill_costs(&mha(2048), 300).unwrap(), &proj);
        assert_eq!(b / a, 4.0);
    }

    #[test]
    fn zero_tokens_rejected() {
        let m = mha(256);
        assert!(prefill_costs(&m, 0).is_err());
        assert!(decode_step_costs(&m, 0).is_err());
        let hw = HardwareProfile::h100_sxm_fp32();
        assert!(predict_decode_latency(&m, &hw, 10, 0).is_err());
        assert!(predict_decode_latency(&m, &hw, 0, 10).is_err());
    }

    #[test]
    fn kv_cache_bytes_single_token_mha() {
        let m = mha(1024);
        let n = m.n_layers() as f64;
        let h = m.hidden() as f64;
        let attn_bytes = |l| {
            decode_step_costs(&m, l)
                .unwrap()
                .into_iter()
                .find(|c| c.label() == ATTN)
                .unwrap()
                .bytes()
        };
        let q_and_out = n * 2.0 * h * 4.0;
        assert_eq!(attn_bytes(1) - q_and_out, 2.0 * n * h * 4.0);
        assert_eq!(m.kv_cache_bytes(1), 2.0 * n * h * 4.0);
    }

    #[test]
    fn decode_bytes_linear_in_context() {
        let m = crate::data::llama_8b();
        let bytes = |l| {
            decode_step_costs(&m, l)
                .unwrap()
                .iter()
                .map(|c| c.bytes())
                .sum::<f64>()
        };
        let diff = bytes(2000) - bytes(1000);
        let want = 1000.0 * 2.0 * 32.0 * m.kv_dim() as f64 * 4.0;
        assert!((diff - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn decode_step_reads_all_weights() {
        for m in crate::data::bundled_models() {
            let costs = decode_step_costs(&m, 1).unwrap();
            let total: f64 = costs.iter().map(|c| c.bytes()).sum();
            let weights = m.weight_bytes();
            // activations and one cached position are a small remainder
            assert!(
                total > weights && total < weights * 1.005,
                "{} {} {}",
                m.name(),
                total,
                weights
            );
        }
    }

    #[test]
    fn prefill_breakdown_is_composition() {
        let m = crate::data::llama_8b();
        let hw = HardwareProfile::h100_sxm_fp32();
        let b = predict_prefill_latency(&m, &hw, 1000).unwrap();
        let direct = crate::roofline::total_latency(&prefill_costs(&m, 1000).unwrap(), &hw);
        assert_eq!(b.total_seconds, direct);
        assert_eq!(b.dominant_class, FFN);
        let sum: f64 = b.classes.iter().map(|c| c.seconds).sum();
        assert_eq!(sum, b.total_seconds);
    }

    #[test]
    fn single_decode_step() {
        let m = crate::data::llama_8b();
        let hw = HardwareProfile::h100_sxm_fp32();
        let one = predict_decode_latency(&m, &hw, 500, 1)
            .unwrap()
            .total_seconds;
        let step = crate::roofline::total_latency(&decode_step_costs(&m, 500).unwrap(), &hw);
        assert_eq!(one, step);
    }

    #[test]
    fn decode_is_convex_in_g() {
        let m = crate::data::llama_8b();
        let hw = HardwareProfile::h100_sxm_fp32();
        let lat = |g| {
            predict_decode_latency(&m, &hw, 1000, g)
                .unwrap()
                .total_seconds
        };
        assert!(lat(200) - lat(100) > lat(100));
    }

    #[test]
    fn kv_roundtrip() {
        let m = crate::data::llama_8b();
        assert_eq!(ModelSpec::from_kv_str(&m.to_kv_string()).unwrap(), m);
        let defaulted = ModelSpec::from_kv_str(
            "name = \"t\"\nn_layers = 2\nhidden = 64\nn_heads = 4\nhead_dim = 16\nffn_dim = 256\nvocab = 100\nbytes_per_param = 2\n",
        )
        .unwrap();
        assert_eq!(defaulted.kv_heads(), 4);
        assert!(!defaulted.ffn_gated());
    }

    #[test]
    fn scaling_curve_rows() {
        let hw = HardwareProfile::h100_sxm_fp32();
        let rows = size_scaling_curve(&[crate::data::llama_8b()], &hw, 100, 10).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(size_scaling_curve(&[], &hw, 100, 10).is_err());
        let rows = size_scaling_curve(&crate::data::qwen_family(), &hw, 500, 64).unwrap();
        assert!(rows.windows(2).all(|w| w[0].n_params < w[1].n_params));
    }
}
