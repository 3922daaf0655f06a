//! Energy-budgeted round planning with delayed return.
//!
//! The UAV leaves the base, flies the closed tour over every edge device as
//! many times as the battery allows, and only returns to base after the last
//! round. Before each extra round it checks that the remaining energy covers
//! that round plus the flight home.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deployment::EdgeDeployment;
use crate::energy::{transfer_time, CommProfile, EnergyError, UavEnergyParams};
use crate::field::{distance, Point, SensorField};
use crate::tsp::{self, DistanceMatrix, Tour};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("deployment has no edge devices")]
    EmptyDeployment,
    #[error("objective normalization: {0}")]
    Normalization(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// A stop on the UAV route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Stop {
    Base,
    /// Edge device, by sensor index.
    Edge(usize),
}

impl fmt::Display for Stop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stop::Base => f.write_str("base"),
            Stop::Edge(i) => write!(f, "{i}"),
        }
    }
}

impl FromStr for Stop {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "base" {
            return Ok(Stop::Base);
        }
        s.parse().map(Stop::Edge).map_err(|_| format!("invalid stop {s:?}"))
    }
}

impl From<Stop> for String {
    fn from(s: Stop) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Stop {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LegPhase {
    /// Base to the first edge device.
    Approach,
    /// One leg of the closed tour; hover and radio energy are charged at
    /// the arrival edge.
    Round,
    /// Last edge device back to base.
    Return,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub phase: LegPhase,
    pub from: Stop,
    pub to: Stop,
    pub dist_m: f64,
    pub move_j: f64,
    pub hover_j: f64,
    pub comm_j: f64,
}

impl Leg {
    pub fn energy_j(&self) -> f64 {
        self.move_j + self.hover_j + self.comm_j
    }
}

/// Outcome of the round-counting loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundCount {
    pub gamma: u64,
    /// Battery left after the last round, before flying home.
    pub budget_before_return_j: f64,
    /// First round, `gamma - 1` repeats and the return flight; 0 when
    /// `gamma = 0`.
    pub consumed_j: f64,
    pub residual_j: f64,
}

/// Counts full rounds under budget `beta_j`.
///
/// `first_j` already includes one round. No round is flown when
/// `first_j + return_j > beta_j`.
pub fn round_count(round_j: f64, first_j: f64, return_j: f64, beta_j: f64) -> RoundCount {
    if first_j + return_j > beta_j {
        return RoundCount {
            gamma: 0,
            budget_before_return_j: beta_j,
            consumed_j: 0.0,
            residual_j: beta_j,
        };
    }
    let mut budget = beta_j - first_j;
    let mut gamma = 1u64;
    if round_j > 0.0 {
        while budget >= round_j + return_j {
            budget -= round_j;
            gamma += 1;
        }
    }
    let consumed = beta_j - budget + return_j;
    RoundCount {
        gamma,
        budget_before_return_j: budget,
        consumed_j: consumed,
        residual_j: budget - return_j,
    }
}

/// Energy of one closed tour: flight at cruise power plus, at each of the
/// `edge_count` devices, hover power for the hover time and radio power for
/// the communication time.
pub fn per_round_energy(
    tour_length_m: f64,
    edge_count: usize,
    params: &UavEnergyParams,
    profile: &CommProfile,
) -> Result<f64, PlanError> {
    let movement = tour_length_m / params.speed_mps * params.cruise_power()?;
    let dwell = edge_count as f64
        * (profile.hover_time_per_edge_s * params.hover_power()
            + profile.comm_time_per_edge_s * params.comm_power_w);
    Ok(movement + dwell)
}

/// Alias for [`transfer_time`]: seconds to ship `bits` of cut-layer
/// activations over the UAV link.
pub fn smashed_transfer_time(bits: f64, rate_bps: f64) -> Result<f64, PlanError> {
    Ok(transfer_time(bits, rate_bps)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Routing {
    /// Optimal closed tour (heuristic above the exact-solver cutoff), entered
    /// at the rotation and direction cheapest to reach from and return to
    /// the base.
    ExactTsp,
    /// Repeatedly fly to the nearest unvisited edge, starting from the base.
    NearestNeighbor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundPlan {
    pub origin: Point,
    /// Visit order by sensor index; `tour.length` is the closed length.
    pub tour: Tour,
    pub round_energy_j: f64,
    pub first_energy_j: f64,
    pub return_energy_j: f64,
    pub gamma: u64,
    pub budget_before_return_j: f64,
    pub consumed_j: f64,
    pub residual_energy_j: f64,
    pub legs: Vec<Leg>,
}

impl RoundPlan {
    pub fn edge_count(&self) -> usize {
        self.tour.order.len()
    }

    /// One sortie: base, one full round, back to base.
    pub fn trip_energy_j(&self) -> f64 {
        self.first_energy_j + self.return_energy_j
    }

    pub fn is_feasible(&self) -> bool {
        self.gamma > 0
    }

    fn phase_energy(&self, phase: LegPhase) -> f64 {
        self.legs.iter().filter(|l| l.phase == phase).map(Leg::energy_j).sum()
    }

    /// Per-round, first-round and return energies re-summed from the ledger.
    pub fn ledger_totals(&self) -> (f64, f64, f64) {
        let round = self.phase_energy(LegPhase::Round);
        (
            round,
            self.phase_energy(LegPhase::Approach) + round,
            self.phase_energy(LegPhase::Return),
        )
    }

    /// Writes `leg,from,to,dist_m,move_J,hover_J,comm_J` rows.
    pub fn write_legs_csv<W: Write>(&self, writer: W) -> Result<(), PlanError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["leg", "from", "to", "dist_m", "move_J", "hover_J", "comm_J"])?;
        for (i, l) in self.legs.iter().enumerate() {
            w.write_record([
                i.to_string(),
                l.from.to_string(),
                l.to.to_string(),
                l.dist_m.to_string(),
                l.move_j.to_string(),
                l.hover_j.to_string(),
                l.comm_j.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Plans rounds for a route given as `(sensor index, position)` stops in
/// visit order.
pub fn plan_route(
    origin: Point,
    stops: &[(usize, Point)],
    params: &UavEnergyParams,
    profile: &CommProfile,
) -> Result<RoundPlan, PlanError> {
    if stops.is_empty() {
        return Err(PlanError::EmptyDeployment);
    }
    params.validate()?;
    profile.validate()?;
    let cruise = params.cruise_power()?;
    let move_j = |d: f64| d / params.speed_mps * cruise;
    let hover_j = profile.hover_time_per_edge_s * params.hover_power();
    let comm_j = profile.comm_time_per_edge_s * params.comm_power_w;
    let m = stops.len();

    let mut legs = Vec::with_capacity(m + 2);
    let (first_id, first_pos) = stops[0];
    let (last_id, last_pos) = stops[m - 1];
    let approach = distance(origin, first_pos);
    legs.push(Leg {
        phase: LegPhase::Approach,
        from: Stop::Base,
        to: Stop::Edge(first_id),
        dist_m: approach,
        move_j: move_j(approach),
        hover_j: 0.0,
        comm_j: 0.0,
    });
    let mut tour_length = 0.0;
    for i in 0..m {
        let (a_id, a) = stops[i];
        let (b_id, b) = stops[(i + 1) % m];
        let d = distance(a, b);
        tour_length += d;
        legs.push(Leg {
            phase: LegPhase::Round,
            from: Stop::Edge(a_id),
            to: Stop::Edge(b_id),
            dist_m: d,
            move_j: move_j(d),
            hover_j,
            comm_j,
        });
    }
    let back = distance(last_pos, origin);
    legs.push(Leg {
        phase: LegPhase::Return,
        from: Stop::Edge(last_id),
        to: Stop::Base,
        dist_m: back,
        move_j: move_j(back),
        hover_j: 0.0,
        comm_j: 0.0,
    });

    let round_j = per_round_energy(tour_length, m, params, profile)?;
    let first_j = move_j(approach) + round_j;
    let return_j = move_j(back);
    let count = round_count(round_j, first_j, return_j, params.beta_j);
    Ok(RoundPlan {
        origin,
        tour: Tour {
            order: stops.iter().map(|&(id, _)| id).collect(),
            length: tour_length,
        },
        round_energy_j: round_j,
        first_energy_j: first_j,
        return_energy_j: return_j,
        gamma: count.gamma,
        budget_before_return_j: count.budget_before_return_j,
        consumed_j: count.consumed_j,
        residual_energy_j: count.residual_j,
        legs,
    })
}

/// Orders the deployment's edge devices by `routing` and plans rounds.
pub fn plan_rounds(
    origin: Point,
    field: &SensorField,
    deployment: &EdgeDeployment,
    params: &UavEnergyParams,
    profile: &CommProfile,
    routing: Routing,
) -> Result<RoundPlan, PlanError> {
    let positions = deployment.edge_positions(field);
    if positions.is_empty() {
        return Err(PlanError::EmptyDeployment);
    }
    let local = match routing {
        Routing::ExactTsp => {
            let tour = tsp::solve(&DistanceMatrix::from_points(&positions));
            best_entry(origin, &tour.order, &positions)
        }
        Routing::NearestNeighbor => nearest_neighbor_from(origin, &positions),
    };
    let stops: Vec<(usize, Point)> = local
        .iter()
        .map(|&k| (deployment.edge_indices[k], positions[k]))
        .collect();
    plan_route(origin, &stops, params, profile)
}

/// Rotation and direction of a closed tour minimising the approach plus
/// return distance. Ties keep the earliest candidate.
fn best_entry(origin: Point, cycle: &[usize], pos: &[Point]) -> Vec<usize> {
    let m = cycle.len();
    let mut best = cycle.to_vec();
    let mut best_cost = f64::INFINITY;
    let reversed: Vec<usize> = cycle.iter().rev().copied().collect();
    for base in [cycle.to_vec(), reversed] {
        for r in 0..m {
            let mut cand = base.clone();
            cand.rotate_left(r);
            let cost = distance(origin, pos[cand[0]]) + distance(pos[cand[m - 1]], origin);
            if cost < best_cost {
                best_cost = cost;
                best = cand;
            }
        }
    }
    best
}

fn nearest_neighbor_from(origin: Point, pos: &[Point]) -> Vec<usize> {
    let mut left: Vec<usize> = (0..pos.len()).collect();
    let mut here = origin;
    let mut order = Vec::with_capacity(pos.len());
    while !left.is_empty() {
        let (k, _) = left
            .iter()
            .enumerate()
            .min_by(|a, b| distance(here, pos[*a.1]).total_cmp(&distance(here, pos[*b.1])))
            .unwrap();
        let next = left.remove(k);
        here = pos[next];
        order.push(next);
    }
    order
}

/// Normalization constants for the placement/route objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds {
    pub max_edges: f64,
    pub max_tour_m: f64,
    pub max_gamma: f64,
}

impl ObjectiveBounds {
    /// `N` edges, `N` field diagonals of flight, and the round count of the
    /// cheapest plan's closed form `floor(beta / E_round)` (at least 1).
    pub fn for_plans(sensor_count: usize, field_diagonal_m: f64, beta_j: f64, plans: &[&RoundPlan]) -> Self {
        let cheapest = plans
            .iter()
            .map(|p| p.round_energy_j)
            .fold(f64::INFINITY, f64::min);
        let gamma = if cheapest.is_finite() && cheapest > 0.0 {
            (beta_j / cheapest).floor().max(1.0)
        } else {
            1.0
        };
        Self {
            max_edges: sensor_count as f64,
            max_tour_m: sensor_count as f64 * field_diagonal_m,
            max_gamma: gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveScore {
    pub edges_norm: f64,
    pub tour_norm: f64,
    pub gamma_norm: f64,
    /// `edges_norm + tour_norm - gamma_norm`; lower is better.
    pub score: f64,
}

pub fn evaluate_objective(
    plan: &RoundPlan,
    edge_count: usize,
    bounds: &ObjectiveBounds,
) -> Result<ObjectiveScore, PlanError> {
    let norm = |name: &str, v: f64, max: f64| {
        if !(max > 0.0) {
            return Err(PlanError::Normalization(format!("{name} bound must be > 0, got {max}")));
        }
        if v > max || v < 0.0 {
            return Err(PlanError::Normalization(format!("{name} = {v} outside [0, {max}]")));
        }
        Ok(v / max)
    };
    let edges_norm = norm("edge count", edge_count as f64, bounds.max_edges)?;
    let tour_norm = norm("tour length", plan.tour.length, bounds.max_tour_m)?;
    let gamma_norm = norm("rounds", plan.gamma as f64, bounds.max_gamma)?;
    Ok(ObjectiveScore {
        edges_norm,
        tour_norm,
        gamma_norm,
        score: edges_norm + tour_norm - gamma_norm,
    })
}
