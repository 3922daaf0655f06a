//! Execution-time conversion between devices and energy to CO2 accounting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Grams of CO2 per kilojoule used when a scenario does not set its own.
pub const DEFAULT_CO2_G_PER_KJ: f64 = 0.1318;

#[derive(Debug, Error, PartialEq)]
pub enum ScalingError {
    #[error("hardware metric `{name}` must be positive and finite, got {value}")]
    InvalidMetric { name: &'static str, value: f64 },
    #[error("invalid scaling weights: {0}")]
    InvalidWeights(String),
    #[error("source time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("unknown hardware profile `{0}`")]
    UnknownProfile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareMetrics {
    /// FP32 throughput, TFLOPS.
    pub flops_fp32: f64,
    /// Memory bandwidth, GB/s.
    pub mem_bw: f64,
    /// Tensor-core throughput, TFLOPS.
    pub tensor_flops: f64,
    /// CPU benchmark score.
    pub cpu_mark: f64,
}

impl HardwareMetrics {
    pub const RTX_CLASS: HardwareMetrics = HardwareMetrics {
        flops_fp32: 27.8,
        mem_bw: 768.0,
        tensor_flops: 216.0,
        cpu_mark: 35000.0,
    };
    pub const JETSON_CLASS: HardwareMetrics = HardwareMetrics {
        flops_fp32: 2.7,
        mem_bw: 51.2,
        tensor_flops: 21.6,
        cpu_mark: 2500.0,
    };

    /// Built-in profiles: `rtx-class` (workstation GPU) and `jetson-class`.
    pub fn profile(name: &str) -> Result<Self, ScalingError> {
        match name {
            "rtx-class" => Ok(Self::RTX_CLASS),
            "jetson-class" => Ok(Self::JETSON_CLASS),
            other => Err(ScalingError::UnknownProfile(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), ScalingError> {
        for (name, value) in [
            ("flops_fp32", self.flops_fp32),
            ("mem_bw", self.mem_bw),
            ("tensor_flops", self.tensor_flops),
            ("cpu_mark", self.cpu_mark),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ScalingError::InvalidMetric { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub software_factor: f64,
    pub optimization_factor: f64,
}

impl Default for ScalingWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 0.5,
            w3: 0.8,
            w4: 0.3,
            software_factor: 1.0,
            optimization_factor: 1.0,
        }
    }
}

impl ScalingWeights {
    pub fn validate(&self) -> Result<(), ScalingError> {
        if [self.w1, self.w2, self.w3, self.w4].iter().any(|w| !w.is_finite()) {
            return Err(ScalingError::InvalidWeights("exponents must be finite".into()));
        }
        if !(self.software_factor > 0.0 && self.optimization_factor > 0.0) {
            return Err(ScalingError::InvalidWeights(format!(
                "SF and OF must be positive, got {} and {}",
                self.software_factor, self.optimization_factor
            )));
        }
        Ok(())
    }
}

/// Multiplier taking a source-device time to the target device.
pub fn scale_factor(src: &HardwareMetrics, tgt: &HardwareMetrics, w: &ScalingWeights) -> Result<f64, ScalingError> {
    src.validate()?;
    tgt.validate()?;
    w.validate()?;
    Ok((src.flops_fp32 / tgt.flops_fp32).powf(w.w1)
        * (src.mem_bw / tgt.mem_bw).powf(w.w2)
        * (src.tensor_flops / tgt.tensor_flops).powf(w.w3)
        * (src.cpu_mark / tgt.cpu_mark).powf(w.w4)
        * w.software_factor
        * w.optimization_factor)
}

pub fn scale_time(
    t_src_s: f64,
    src: &HardwareMetrics,
    tgt: &HardwareMetrics,
    w: &ScalingWeights,
) -> Result<f64, ScalingError> {
    if !(t_src_s >= 0.0) {
        return Err(ScalingError::NegativeTime(t_src_s));
    }
    Ok(t_src_s * scale_factor(src, tgt, w)?)
}

/// Grams of CO2 for `energy_kj`, proportional at `g_per_kj`.
pub fn energy_to_co2(energy_kj: f64, g_per_kj: f64) -> f64 {
    energy_kj * g_per_kj
}
