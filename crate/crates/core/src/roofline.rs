//! Per-operation roofline latency model.
//!
//! An operation with `flops` arithmetic work and `bytes` of device-memory
//! traffic takes `max(flops / F_eff, bytes / B_eff)` seconds, where the
//! effective ceilings are the peak ceilings derated by empirical efficiency
//! factors. A sequence of operations is assumed to execute without any
//! compute/memory overlap, so its latency is the plain sum.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{ConfigError, InvalidInput};

/// Compute efficiency applied when a profile does not set `mu_comp`.
pub const DEFAULT_MU_COMP: f64 = 0.675;
/// Memory efficiency applied when a profile does not set `mu_mem`.
pub const DEFAULT_MU_MEM: f64 = 0.443;

/// Hardware ceilings, efficiency factors and mean per-phase board power.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct HardwareProfile {
    name: String,
    f_max: f64,
    b_max: f64,
    mu_comp: f64,
    mu_mem: f64,
    p_prefill: f64,
    p_decode: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    name: String,
    f_max: f64,
    b_max: f64,
    mu_comp: Option<f64>,
    mu_mem: Option<f64>,
    p_prefill: f64,
    p_decode: f64,
}

impl TryFrom<RawProfile> for HardwareProfile {
    type Error = InvalidInput;

    fn try_from(r: RawProfile) -> Result<Self, Self::Error> {
        HardwareProfile::new(
            r.name,
            r.f_max,
            r.b_max,
            r.mu_comp.unwrap_or(DEFAULT_MU_COMP),
            r.mu_mem.unwrap_or(DEFAULT_MU_MEM),
            r.p_prefill,
            r.p_decode,
        )
    }
}

fn positive(field: &'static str, v: f64) -> Result<f64, InvalidInput> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(InvalidInput::field(
            field,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn fraction(field: &'static str, v: f64) -> Result<f64, InvalidInput> {
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(InvalidInput::field(
            field,
            format!("must lie in (0, 1], got {v}"),
        ))
    }
}

impl HardwareProfile {
    /// `f_max` in FLOP/s, `b_max` in bytes/s, powers in W.
    pub fn new(
        name: impl Into<String>,
        f_max: f64,
        b_max: f64,
        mu_comp: f64,
        mu_mem: f64,
        p_prefill: f64,
        p_decode: f64,
    ) -> Result<Self, InvalidInput> {
        Ok(HardwareProfile {
            name: name.into(),
            f_max: positive("f_max", f_max)?,
            b_max: positive("b_max", b_max)?,
            mu_comp: fraction("mu_comp", mu_comp)?,
            mu_mem: fraction("mu_mem", mu_mem)?,
            p_prefill: positive("p_prefill", p_prefill)?,
            p_decode: positive("p_decode", p_decode)?,
        })
    }

    /// Parses the key-value profile format; missing efficiency factors take
    /// the calibrated defaults.
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_kv_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    /// The bundled example profile (H100 SXM, FP32 non-tensor ceiling).
    pub fn h100_sxm_fp32() -> Self {
        Self::from_kv_str(crate::data::H100_SXM_PROFILE).expect("bundled profile is valid")
    }

    pub fn to_kv_string(&self) -> String {
        format!(
            "name = {:?}\nf_max = {:e}\nb_max = {:e}\nmu_comp = {:e}\nmu_mem = {:e}\np_prefill = {:e}\np_decode = {:e}\n",
            self.name, self.f_max, self.b_max, self.mu_comp, self.mu_mem, self.p_prefill, self.p_decode
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn f_max(&self) -> f64 {
        self.f_max
    }
    pub fn b_max(&self) -> f64 {
        self.b_max
    }
    pub fn mu_comp(&self) -> f64 {
        self.mu_comp
    }
    pub fn mu_mem(&self) -> f64 {
        self.mu_mem
    }
    pub fn p_prefill(&self) -> f64 {
        self.p_prefill
    }
    pub fn p_decode(&self) -> f64 {
        self.p_decode
    }

    /// Same hardware, different efficiency factors.
    pub fn with_efficiency(&self, mu_comp: f64, mu_mem: f64) -> Result<Self, InvalidInput> {
        Ok(HardwareProfile {
            mu_comp: fraction("mu_comp", mu_comp)?,
            mu_mem: fraction("mu_mem", mu_mem)?,
            ..self.clone()
        })
    }
}

/// Derated ceilings: `(mu_comp·f_max, mu_mem·b_max)`.
pub fn effective_ceilings(hw: &HardwareProfile) -> (f64, f64) {
    (hw.mu_comp * hw.f_max, hw.mu_mem * hw.b_max)
}

/// FLOPs and device-memory bytes of one kernel-level operation.
#[derive(Debug, Clone, PartialEq)]
pub struct OpCost {
    label: String,
    flops: f64,
    bytes: f64,
}

impl OpCost {
    pub fn new(label: impl Into<String>, flops: f64, bytes: f64) -> Result<Self, InvalidInput> {
        let nonneg = |field, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(InvalidInput::field(
                    field,
                    format!("must be finite and >= 0, got {v}"),
                ))
            }
        };
        let flops = nonneg("flops", flops)?;
        let bytes = nonneg("bytes", bytes)?;
        if flops == 0.0 && bytes == 0.0 {
            return Err(InvalidInput::field(
                "flops",
                "flops and bytes cannot both be zero",
            ));
        }
        Ok(OpCost {
            label: label.into(),
            flops,
            bytes,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn flops(&self) -> f64 {
        self.flops
    }
    pub fn bytes(&self) -> f64 {
        self.bytes
    }

    /// FLOP per byte.
    pub fn arithmetic_intensity(&self) -> f64 {
        self.flops / self.bytes
    }

    /// Seconds spent on arithmetic and on memory traffic, respectively.
    pub fn resource_times(&self, hw: &HardwareProfile) -> (f64, f64) {
        let (f_eff, b_eff) = effective_ceilings(hw);
        (self.flops / f_eff, self.bytes / b_eff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundedness {
    ComputeBound,
    MemoryBound,
    /// Compute and memory time are exactly equal.
    Balanced,
}

impl fmt::Display for Boundedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundedness::ComputeBound => "compute-bound",
            Boundedness::MemoryBound => "memory-bound",
            Boundedness::Balanced => "balanced",
        })
    }
}

pub fn op_latency(cost: &OpCost, hw: &HardwareProfile) -> f64 {
    let (compute, memory) = cost.resource_times(hw);
    compute.max(memory)
}

pub fn boundedness(cost: &OpCost, hw: &HardwareProfile) -> Boundedness {
    let (compute, memory) = cost.resource_times(hw);
    if compute > memory {
        Boundedness::ComputeBound
    } else if compute < memory {
        Boundedness::MemoryBound
    } else {
        Boundedness::Balanced
    }
}

/// Sum of [`op_latency`]; zero for an empty sequence.
pub fn total_latency<'a, I>(costs: I, hw: &HardwareProfile) -> f64
where
    I: IntoIterator<Item = &'a OpCost>,
{
    costs.into_iter().map(|c| op_latency(c, hw)).sum()
}
