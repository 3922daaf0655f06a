use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::energy::{CommProfile, UavEnergyParams};
use crate::field::{FieldSpec, Layout, Point};
use crate::scaling::{HardwareMetrics, ScalingWeights, DEFAULT_CO2_G_PER_KJ};
use crate::split::FederationConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Greedy CSR placement with exact-TSP delayed-return rounds.
    EenergySplit,
    /// K-means cluster heads visited nearest-neighbour first.
    Kmeans,
    /// External baseline; listed in reports but never computed.
    Gasbac,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::EenergySplit => "eenergy-split",
            Method::Kmeans => "kmeans",
            Method::Gasbac => "gasbac",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named built-in profile or explicit metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HardwareRef {
    Named(String),
    Metrics(HardwareMetrics),
}

impl HardwareRef {
    pub fn resolve(&self) -> Result<HardwareMetrics, HarnessError> {
        let m = match self {
            HardwareRef::Named(name) => HardwareMetrics::profile(name).map_err(|e| HarnessError::Config(e.to_string()))?,
            HardwareRef::Metrics(m) => *m,
        };
        m.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardwareConfig {
    /// Device the modeled client times refer to.
    pub source: HardwareRef,
    /// Edge device the client times are scaled to.
    pub target: HardwareRef,
    pub weights: ScalingWeights,
    pub co2_g_per_kj: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            source: HardwareRef::Named("rtx-class".into()),
            target: HardwareRef::Named("jetson-class".into()),
            weights: ScalingWeights::default(),
            co2_g_per_kj: DEFAULT_CO2_G_PER_KJ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitLearningConfig {
    pub layer_sizes: Vec<usize>,
    /// Share of weight layers kept on the client, one training run each.
    pub split_fractions: Vec<f64>,
    pub federation: FederationConfig,
}

impl Default for SplitLearningConfig {
    fn default() -> Self {
        Self {
            layer_sizes: vec![4, 32, 32, 32, 12],
            split_fractions: vec![0.15, 0.25, 0.40, 0.75],
            federation: FederationConfig::default(),
        }
    }
}

/// Everything one `compare` run needs. Serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    /// Drives the field layout, the K-means initialisation and training.
    pub seed: u64,
    pub field: FieldSpec,
    pub comm_range_m: f64,
    pub uav_altitude_m: f64,
    #[serde(default)]
    pub uav: UavEnergyParams,
    #[serde(default)]
    pub comm: CommProfile,
    #[serde(default)]
    pub base_station: Point,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub split_learning: SplitLearningConfig,
    #[serde(default)]
    pub hardware: HardwareConfig,
    /// Bits each sensor uploads per round. When present, the per-edge
    /// communication time is the mean cluster upload time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_bits: Option<Vec<f64>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::table_ii(100.0, 25)
    }
}

impl ScenarioConfig {
    /// Square farm of `acres` with `sensors` seeded-random sensors,
    /// 200 m radios and both computed methods.
    pub fn table_ii(acres: f64, sensors: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: format!("{acres}ac-{sensors}s"),
            seed: 7,
            field: FieldSpec {
                acres,
                acres_per_sensor: acres / sensors as f64,
                sensor_count: Some(sensors),
                layout: Layout::SeededRandom,
                seed: 7,
            },
            comm_range_m: 200.0,
            uav_altitude_m: 100.0,
            uav: UavEnergyParams::default(),
            comm: CommProfile::default(),
            base_station: Point::new(0.0, 0.0),
            methods: vec![Method::EenergySplit, Method::Kmeans],
            split_learning: SplitLearningConfig::default(),
            hardware: HardwareConfig::default(),
            payload_bits: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Replaces every seed the scenario uses.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.field.seed = seed;
        self.split_learning.federation.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.methods.is_empty() {
            return bad("at least one method must be selected".into());
        }
        let n = self.field.sensor_count().map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(self.comm_range_m > 0.0 && self.uav_altitude_m >= 0.0 && self.uav_altitude_m < self.comm_range_m) {
            return bad(format!(
                "need 0 <= altitude < comm range, got h = {} and CR = {}",
                self.uav_altitude_m, self.comm_range_m
            ));
        }
        self.uav.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.comm.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if let Some(p) = &self.payload_bits {
            if p.len() != n || p.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                return bad(format!("payload_bits needs {n} non-negative entries, got {}", p.len()));
            }
        }
        let sl = &self.split_learning;
        if sl.split_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad(format!("split fractions must lie in [0, 1], got {:?}", sl.split_fractions));
        }
        sl.federation.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.hardware.source.resolve()?;
        self.hardware.target.resolve()?;
        self.hardware.weights.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(self.hardware.co2_g_per_kj >= 0.0) {
            return bad(format!("CO2 factor {}", self.hardware.co2_g_per_kj));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, lowercase hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
