use serde::{Deserialize, Serialize};

use super::config::{Method, ScenarioConfig};
use super::{HarnessError, Stage};
use crate::deployment::{deploy_greedy, kmeans_baseline, EdgeDeployment};
use crate::energy::{reception_range, transfer_time, CommProfile};
use crate::field::{build_adjacency, generate_field, SensorField};
use crate::planner::{evaluate_objective, plan_rounds, ObjectiveBounds, RoundPlan, Routing};
use crate::scaling::{energy_to_co2, scale_time};
use crate::split::{train, ModelSpec};

/// Placeholder carried by methods that are listed but not computed.
pub const EXTERNAL_BASELINE_NOTE: &str = "n/a: external baseline";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub acres: f64,
    pub sensors: usize,
    pub side_m: f64,
    pub comm_range_m: f64,
    pub uav_altitude_m: f64,
    pub reception_range_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub edge_count: usize,
    pub edges: Vec<usize>,
    pub tour_length_m: f64,
    pub round_energy_j: f64,
    /// Base, one full round, base.
    pub trip_energy_j: f64,
    pub gamma: u64,
    pub residual_energy_j: f64,
    pub feasible: bool,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MethodMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub fraction: f64,
    pub split_index: usize,
    pub final_accuracy: f64,
    /// Modeled client compute on the source device.
    pub client_time_source_s: f64,
    /// The same work scaled to the target edge device.
    pub client_time_s: f64,
    pub client_energy_j: f64,
    pub client_co2_g: f64,
    pub server_time_s: f64,
    pub server_energy_j: f64,
    pub server_co2_g: f64,
    pub comm_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    pub seed: u64,
    pub config_hash: String,
    pub schema_version: u32,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub field: FieldSummary,
    pub methods: Vec<MethodResult>,
    pub split_learning: Vec<SplitResult>,
    pub provenance: Provenance,
}

impl ComparisonReport {
    pub fn method(&self, m: Method) -> Option<&MethodMetrics> {
        self.methods.iter().find(|r| r.method == m).and_then(|r| r.metrics.as_ref())
    }
}

pub fn build_field(cfg: &ScenarioConfig) -> Result<SensorField, HarnessError> {
    generate_field(&cfg.field, cfg.comm_range_m, cfg.uav_altitude_m).map_err(|e| HarnessError::at(Stage::Field, e))
}

pub fn deploy(cfg: &ScenarioConfig, field: &SensorField, method: Method) -> Result<EdgeDeployment, HarnessError> {
    match method {
        Method::EenergySplit => {
            deploy_greedy(field, &build_adjacency(field)).map_err(|e| HarnessError::at(Stage::Deployment, e))
        }
        Method::Kmeans => Ok(kmeans_baseline(field, cfg.seed)),
        Method::Gasbac => Err(HarnessError::Config(format!("{method} is {EXTERNAL_BASELINE_NOTE}"))),
    }
}

pub fn routing(method: Method) -> Routing {
    match method {
        Method::Kmeans => Routing::NearestNeighbor,
        _ => Routing::ExactTsp,
    }
}

/// Per-edge dwell times; with payload sizes the upload time is the mean
/// over clusters, so the summed radio time equals the total upload time.
pub fn comm_profile(cfg: &ScenarioConfig, deployment: &EdgeDeployment) -> Result<CommProfile, HarnessError> {
    let Some(bits) = &cfg.payload_bits else {
        return Ok(cfg.comm.clone());
    };
    let total: f64 = bits.iter().sum();
    let per_edge = total / deployment.edge_count().max(1) as f64;
    Ok(CommProfile {
        comm_time_per_edge_s: transfer_time(per_edge, cfg.comm.data_rate_bps)
            .map_err(|e| HarnessError::at(Stage::Planning, e))?,
        ..cfg.comm.clone()
    })
}

pub fn plan(cfg: &ScenarioConfig, field: &SensorField, method: Method) -> Result<(EdgeDeployment, RoundPlan), HarnessError> {
    let dep = deploy(cfg, field, method)?;
    let profile = comm_profile(cfg, &dep)?;
    let plan = plan_rounds(cfg.base_station, field, &dep, &cfg.uav, &profile, routing(method))
        .map_err(|e| HarnessError::at(Stage::Planning, e))?;
    Ok((dep, plan))
}

/// Deployment and round planning for every computed method on one field.
pub fn run_methods(cfg: &ScenarioConfig, field: &SensorField) -> Result<Vec<MethodResult>, HarnessError> {
    let mut planned = Vec::new();
    for &m in &cfg.methods {
        if m != Method::Gasbac {
            planned.push((m, plan(cfg, field, m)?));
        }
    }
    let plans: Vec<&RoundPlan> = planned.iter().map(|(_, (_, p))| p).collect();
    let bounds = ObjectiveBounds::for_plans(field.len(), field.diagonal_m(), cfg.uav.beta_j, &plans);

    let mut out = Vec::with_capacity(cfg.methods.len());
    for &m in &cfg.methods {
        let Some((_, (dep, p))) = planned.iter().find(|(pm, _)| *pm == m) else {
            out.push(MethodResult {
                method: m,
                metrics: None,
                note: Some(EXTERNAL_BASELINE_NOTE.into()),
            });
            continue;
        };
        let score = evaluate_objective(p, dep.edge_count(), &bounds).map_err(|e| HarnessError::at(Stage::Planning, e))?;
        out.push(MethodResult {
            method: m,
            metrics: Some(MethodMetrics {
                edge_count: dep.edge_count(),
                edges: dep.edge_indices.clone(),
                tour_length_m: p.tour.length,
                round_energy_j: p.round_energy_j,
                trip_energy_j: p.trip_energy_j(),
                gamma: p.gamma,
                residual_energy_j: p.residual_energy_j,
                feasible: p.is_feasible(),
                objective: score.score,
            }),
            note: None,
        });
    }
    Ok(out)
}

/// One federated training run per configured split fraction.
pub fn run_split(cfg: &ScenarioConfig) -> Result<Vec<SplitResult>, HarnessError> {
    let sl = &cfg.split_learning;
    let hw = &cfg.hardware;
    let (src, tgt) = (hw.source.resolve()?, hw.target.resolve()?);
    let layers = sl.layer_sizes.len().saturating_sub(1);
    let fed = &sl.federation;
    let mut out = Vec::with_capacity(sl.split_fractions.len());
    for &fraction in &sl.split_fractions {
        let split = ModelSpec::split_for_fraction(layers, fraction);
        let spec = ModelSpec::new(sl.layer_sizes.clone(), split);
        let (trace, _) = train(&spec, fed).map_err(|e| HarnessError::at(Stage::SplitLearning, e))?;
        let client_time_s =
            scale_time(trace.t_total_s, &src, &tgt, &hw.weights).map_err(|e| HarnessError::at(Stage::Scaling, e))?;
        let client_energy_j = fed.client_power_w * client_time_s;
        out.push(SplitResult {
            fraction,
            split_index: split,
            final_accuracy: trace.final_accuracy,
            client_time_source_s: trace.t_total_s,
            client_time_s,
            client_energy_j,
            client_co2_g: energy_to_co2(client_energy_j / 1e3, hw.co2_g_per_kj),
            server_time_s: trace.server_t_total_s,
            server_energy_j: trace.server_e_total_j,
            server_co2_g: energy_to_co2(trace.server_e_total_j / 1e3, hw.co2_g_per_kj),
            comm_time_s: trace.comm_t_total_s,
        });
    }
    Ok(out)
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ComparisonReport, HarnessError> {
    cfg.validate()?;
    let field = build_field(cfg)?;
    let methods = run_methods(cfg, &field)?;
    let split_learning = run_split(cfg)?;
    Ok(ComparisonReport {
        field: FieldSummary {
            acres: cfg.field.acres,
            sensors: field.len(),
            side_m: field.side_m(),
            comm_range_m: cfg.comm_range_m,
            uav_altitude_m: cfg.uav_altitude_m,
            reception_range_m: reception_range(cfg.comm_range_m, cfg.uav_altitude_m)
                .map_err(|e| HarnessError::at(Stage::Field, e))?,
        },
        methods,
        split_learning,
        provenance: Provenance {
            scenario: cfg.name.clone(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            schema_version: cfg.schema_version,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}
