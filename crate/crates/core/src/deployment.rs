//! Edge-device placement over a sensor field.
//!
//! The greedy placer repeatedly promotes the uncovered sensor that covers the
//! most still-uncovered sensors (itself included), breaking coverage ties by
//! the smallest summed distance to edges already placed and then by index.
//! Sensors are then assigned to the least-loaded edge in range.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{distance, AdjacencyCsr, Point, SensorField};

/// Largest field the exhaustive min-cover search accepts.
pub const MIN_COVER_ORACLE_LIMIT: usize = 15;

const KMEANS_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Error)]
pub enum DeploymentError {
    #[error("sensor {0} is not within range of any edge device")]
    Uncovered(usize),
    #[error("min-cover oracle supports at most {MIN_COVER_ORACLE_LIMIT} sensors, got {0}")]
    OracleLimit(usize),
    #[error("adjacency has {adjacency} rows but the field has {field} sensors")]
    Mismatch { adjacency: usize, field: usize },
    #[error("deployment invariant violated: {0}")]
    Invariant(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeploymentMethod {
    GreedyCsr,
    Kmeans,
}

/// Chosen edge devices and the sensor-to-edge assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDeployment {
    /// Sensor indices promoted to edge devices, in selection order.
    pub edge_indices: Vec<usize>,
    /// `assignment[s]` is the sensor index of the edge serving sensor `s`.
    pub assignment: Vec<usize>,
    /// Sensors served per edge, the edge itself included.
    pub loads: BTreeMap<usize, usize>,
    pub method: DeploymentMethod,
}

impl EdgeDeployment {
    pub fn edge_count(&self) -> usize {
        self.edge_indices.len()
    }

    pub fn edge_positions(&self, field: &SensorField) -> Vec<Point> {
        self.edge_indices.iter().map(|&e| field.sensors()[e]).collect()
    }

    /// Checks every structural and coverage invariant against `field`.
    pub fn verify(&self, field: &SensorField) -> Result<(), DeploymentError> {
        let n = field.len();
        let bad = |msg: String| Err(DeploymentError::Invariant(msg));
        if self.assignment.len() != n {
            return bad(format!("{} assignments for {n} sensors", self.assignment.len()));
        }
        let mut seen = vec![false; n];
        for &e in &self.edge_indices {
            if e >= n {
                return bad(format!("edge index {e} out of range"));
            }
            if std::mem::replace(&mut seen[e], true) {
                return bad(format!("edge {e} listed twice"));
            }
            if self.assignment[e] != e {
                return bad(format!("edge {e} is not assigned to itself"));
            }
        }
        let mut counted: BTreeMap<usize, usize> = self.edge_indices.iter().map(|&e| (e, 0)).collect();
        for (s, &e) in self.assignment.iter().enumerate() {
            let Some(count) = counted.get_mut(&e) else {
                return bad(format!("sensor {s} assigned to non-edge {e}"));
            };
            *count += 1;
            if field.dist(s, e) > field.comm_range_m() {
                return bad(format!("sensor {s} is out of range of its edge {e}"));
            }
        }
        if counted != self.loads {
            return bad("recorded loads disagree with the assignment".into());
        }
        Ok(())
    }

    /// Writes `sensor_id,assigned_edge_id,is_edge` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DeploymentError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["sensor_id", "assigned_edge_id", "is_edge"])?;
        for (s, &e) in self.assignment.iter().enumerate() {
            w.write_record([s.to_string(), e.to_string(), (s == e).to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn check_shapes(field: &SensorField, adj: &AdjacencyCsr) -> Result<(), DeploymentError> {
    if adj.node_count() != field.len() {
        return Err(DeploymentError::Mismatch {
            adjacency: adj.node_count(),
            field: field.len(),
        });
    }
    Ok(())
}

/// Greedy maximum-coverage edge selection. Returns edges in selection order.
pub fn deploy_edges(field: &SensorField, adj: &AdjacencyCsr) -> Result<Vec<usize>, DeploymentError> {
    check_shapes(field, adj)?;
    let n = field.len();
    let mut uncovered = vec![true; n];
    let mut remaining = n;
    let mut edges: Vec<usize> = Vec::new();

    while remaining > 0 {
        // (coverage, summed distance to placed edges, index)
        let mut best: Option<(usize, f64, usize)> = None;
        for s in (0..n).filter(|&s| uncovered[s]) {
            let gain = 1 + adj.neighbors(s).iter().filter(|&&u| uncovered[u]).count();
            let spread: f64 = edges.iter().map(|&e| field.dist(s, e)).sum();
            let better = match best {
                None => true,
                Some((g, d, _)) => gain > g || (gain == g && !edges.is_empty() && spread < d),
            };
            if better {
                best = Some((gain, spread, s));
            }
        }
        let (_, _, chosen) = best.expect("uncovered set is non-empty");
        for &u in std::iter::once(&chosen).chain(adj.neighbors(chosen)) {
            if std::mem::replace(&mut uncovered[u], false) {
                remaining -= 1;
            }
        }
        edges.push(chosen);
    }
    Ok(edges)
}

/// Load-balanced sensor assignment.
///
/// Non-edge sensors are visited in ascending index order. Each goes to the
/// in-range edge with the smallest current load, then the shortest distance,
/// then the lowest edge index.
pub fn assign_sensors(
    field: &SensorField,
    edges: &[usize],
    adj: &AdjacencyCsr,
) -> Result<(Vec<usize>, BTreeMap<usize, usize>), DeploymentError> {
    check_shapes(field, adj)?;
    let n = field.len();
    let mut is_edge = vec![false; n];
    let mut assignment = vec![usize::MAX; n];
    let mut loads = BTreeMap::new();
    for &e in edges {
        is_edge[e] = true;
        assignment[e] = e;
        loads.insert(e, 1usize);
    }
    for s in (0..n).filter(|&s| !is_edge[s]) {
        let chosen = adj
            .neighbors(s)
            .iter()
            .copied()
            .filter(|&e| is_edge[e])
            .min_by(|&a, &b| {
                loads[&a]
                    .cmp(&loads[&b])
                    .then(field.dist(s, a).total_cmp(&field.dist(s, b)))
                    .then(a.cmp(&b))
            })
            .ok_or(DeploymentError::Uncovered(s))?;
        assignment[s] = chosen;
        *loads.get_mut(&chosen).unwrap() += 1;
    }
    Ok((assignment, loads))
}

/// Greedy placement followed by load-balanced assignment.
pub fn deploy_greedy(field: &SensorField, adj: &AdjacencyCsr) -> Result<EdgeDeployment, DeploymentError> {
    let edge_indices = deploy_edges(field, adj)?;
    let (assignment, loads) = assign_sensors(field, &edge_indices, adj)?;
    Ok(EdgeDeployment {
        edge_indices,
        assignment,
        loads,
        method: DeploymentMethod::GreedyCsr,
    })
}

/// K-means clustering baseline.
///
/// Starts at `K = floor(sqrt(N))` and grows K until every sensor is within
/// communication range of its cluster head, the member nearest the centroid.
pub fn kmeans_baseline(field: &SensorField, seed: u64) -> EdgeDeployment {
    let n = field.len();
    let start = ((n as f64).sqrt().floor() as usize).max(1);
    for k in start..=n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let labels = lloyd(field.sensors(), k, &mut rng);
        if let Some(dep) = heads_if_feasible(field, &labels, k) {
            return dep;
        }
    }
    // Unreachable in practice: at K = N Lloyd starts from every sensor.
    let mut loads = BTreeMap::new();
    for s in 0..n {
        loads.insert(s, 1);
    }
    EdgeDeployment {
        edge_indices: (0..n).collect(),
        assignment: (0..n).collect(),
        loads,
        method: DeploymentMethod::Kmeans,
    }
}

fn nearest(p: Point, centers: &[Point]) -> usize {
    let mut best = 0;
    for (c, &q) in centers.iter().enumerate().skip(1) {
        if distance(p, q) < distance(p, centers[best]) {
            best = c;
        }
    }
    best
}

fn lloyd(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut init: Vec<usize> = sample(rng, points.len(), k).into_vec();
    init.sort_unstable();
    let mut centers: Vec<Point> = init.iter().map(|&i| points[i]).collect();
    let mut labels: Vec<usize> = points.iter().map(|&p| nearest(p, &centers)).collect();

    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l].0 += p.x;
            sums[l].1 += p.y;
            sums[l].2 += 1;
        }
        for (c, &(sx, sy, count)) in sums.iter().enumerate() {
            if count > 0 {
                centers[c] = Point::new(sx / count as f64, sy / count as f64);
            }
        }
        // An emptied cluster is re-seeded at the point farthest from its center.
        for c in 0..k {
            if sums[c].2 == 0 {
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        let da = distance(points[a], centers[labels[a]]);
                        let db = distance(points[b], centers[labels[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap();
                centers[c] = points[far];
            }
        }
        let next: Vec<usize> = points.iter().map(|&p| nearest(p, &centers)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

fn heads_if_feasible(field: &SensorField, labels: &[usize], k: usize) -> Option<EdgeDeployment> {
    let pts = field.sensors();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (s, &l) in labels.iter().enumerate() {
        members[l].push(s);
    }
    let mut edge_indices = Vec::new();
    let mut assignment = vec![0; pts.len()];
    let mut loads = BTreeMap::new();
    for group in members.iter().filter(|g| !g.is_empty()) {
        let n = group.len() as f64;
        let centroid = Point::new(
            group.iter().map(|&s| pts[s].x).sum::<f64>() / n,
            group.iter().map(|&s| pts[s].y).sum::<f64>() / n,
        );
        let head = *group
            .iter()
            .min_by(|&&a, &&b| distance(pts[a], centroid).total_cmp(&distance(pts[b], centroid)))
            .unwrap();
        if group.iter().any(|&s| field.dist(s, head) > field.comm_range_m()) {
            return None;
        }
        for &s in group {
            assignment[s] = head;
        }
        edge_indices.push(head);
        loads.insert(head, group.len());
    }
    Some(EdgeDeployment {
        edge_indices,
        assignment,
        loads,
        method: DeploymentMethod::Kmeans,
    })
}

/// Size of the smallest set of sensors whose range disks cover the field,
/// found by exhaustive search in increasing subset size.
pub fn min_cover_oracle(field: &SensorField, adj: &AdjacencyCsr) -> Result<usize, DeploymentError> {
    check_shapes(field, adj)?;
    let n = field.len();
    if n > MIN_COVER_ORACLE_LIMIT {
        return Err(DeploymentError::OracleLimit(n));
    }
    let masks: Vec<u32> = (0..n)
        .map(|s| adj.neighbors(s).iter().fold(1u32 << s, |m, &u| m | (1 << u)))
        .collect();
    let full: u32 = (1u32 << n) - 1;
    for size in 1..=n {
        let hit = (0u32..=full)
            .filter(|subset| subset.count_ones() as usize == size)
            .any(|subset| {
                (0..n)
                    .filter(|&s| subset & (1 << s) != 0)
                    .fold(0u32, |m, s| m | masks[s])
                    == full
            });
        if hit {
            return Ok(size);
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_adjacency;

    fn field(points: &[(f64, f64)], cr: f64) -> SensorField {
        let pts = points.iter().map(|&(x, y)| Point::new(x, y)).collect();
        SensorField::new(pts, 1000.0, cr, 0.0).unwrap()
    }

    #[test]
    fn collinear_single_edge() {
        let f = field(&[(0.0, 0.0), (100.0, 0.0), (200.0, 0.0)], 100.0);
        let adj = build_adjacency(&f);
        assert_eq!(deploy_edges(&f, &adj).unwrap(), vec![1]);
        assert_eq!(min_cover_oracle(&f, &adj).unwrap(), 1);
        let dep = deploy_greedy(&f, &adj).unwrap();
        dep.verify(&f).unwrap();
        assert_eq!(dep.loads[&1], 3);
    }

    #[test]
    fn single_sensor() {
        let f = field(&[(10.0, 10.0)], 100.0);
        let adj = build_adjacency(&f);
        assert_eq!(deploy_edges(&f, &adj).unwrap(), vec![0]);
        assert_eq!(min_cover_oracle(&f, &adj).unwrap(), 1);
    }

    #[test]
    fn square_needs_two_edges() {
        let f = field(&[(0.0, 0.0), (80.0, 0.0), (0.0, 80.0), (80.0, 80.0)], 100.0);
        let adj = build_adjacency(&f);
        assert_eq!(deploy_edges(&f, &adj).unwrap(), vec![0, 3]);
        assert_eq!(min_cover_oracle(&f, &adj).unwrap(), 2);
    }

    #[test]
    fn far_apart_pair() {
        let f = field(&[(0.0, 0.0), (300.0, 0.0)], 100.0);
        let adj = build_adjacency(&f);
        assert_eq!(min_cover_oracle(&f, &adj).unwrap(), 2);
        assert_eq!(deploy_edges(&f, &adj).unwrap(), vec![0, 1]);
    }

    #[test]
    fn distance_breaks_coverage_ties_after_first_pick() {
        // Three disjoint triples; after the first pick the two remaining
        // triple-centres tie on coverage, and the nearer one wins.
        let f = field(
            &[
                (0.0, 0.0),
                (10.0, 0.0),
                (20.0, 0.0),
                (500.0, 0.0),
                (510.0, 0.0),
                (520.0, 0.0),
                (100.0, 0.0),
                (110.0, 0.0),
                (120.0, 0.0),
            ],
            10.0,
        );
        let adj = build_adjacency(&f);
        let edges = deploy_edges(&f, &adj).unwrap();
        assert_eq!(edges, vec![1, 7, 4]);
    }

    #[test]
    fn one_edge_two_sensors() {
        let f = field(&[(50.0, 50.0), (60.0, 50.0), (40.0, 50.0)], 100.0);
        let adj = build_adjacency(&f);
        let (assignment, loads) = assign_sensors(&f, &[0], &adj).unwrap();
        assert_eq!(assignment, vec![0, 0, 0]);
        assert_eq!(loads[&0], 3);
    }

    #[test]
    fn balanced_alternation() {
        // Edges 0 and 1 at (0, +-10); sensors 2..6 equidistant on the x axis.
        let f = field(
            &[
                (500.0, 510.0),
                (500.0, 490.0),
                (530.0, 500.0),
                (470.0, 500.0),
                (500.0, 500.0),
                (520.0, 500.0),
            ],
            100.0,
        );
        let adj = build_adjacency(&f);
        let (assignment, loads) = assign_sensors(&f, &[0, 1], &adj).unwrap();
        assert_eq!(assignment, vec![0, 1, 0, 1, 0, 1]);
        assert_eq!(loads[&0], 3);
        assert_eq!(loads[&1], 3);
    }

    #[test]
    fn forced_assignment_ignores_load() {
        // Sensor 3 only reaches edge 0, even though edge 0 is already busier.
        let f = field(&[(0.0, 0.0), (150.0, 0.0), (75.0, 0.0), (0.0, 90.0)], 100.0);
        let adj = build_adjacency(&f);
        let (assignment, loads) = assign_sensors(&f, &[0, 1], &adj).unwrap();
        assert_eq!(assignment[2], 0);
        assert_eq!(assignment[3], 0);
        assert_eq!(loads[&0], 3);
    }

    #[test]
    fn uncovered_sensor_is_error() {
        let f = field(&[(0.0, 0.0), (500.0, 0.0)], 100.0);
        let adj = build_adjacency(&f);
        assert!(matches!(
            assign_sensors(&f, &[0], &adj),
            Err(DeploymentError::Uncovered(1))
        ));
    }

    #[test]
    fn kmeans_initial_k() {
        let grid = |n: usize| {
            let side = (n as f64).sqrt() as usize;
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|i| ((i % side) as f64 * 10.0, (i / side) as f64 * 10.0))
                .collect();
            field(&pts, 1000.0)
        };
        // With everything mutually in range the first K is already feasible.
        assert_eq!(kmeans_baseline(&grid(25), 1).edge_count(), 5);
        assert_eq!(kmeans_baseline(&grid(16), 1).edge_count(), 4);
    }

    #[test]
    fn kmeans_escalates_to_n() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64 * 150.0, 0.0)).collect();
        let f = field(&pts, 100.0);
        let dep = kmeans_baseline(&f, 3);
        assert_eq!(dep.edge_count(), 6);
        dep.verify(&f).unwrap();
    }

    #[test]
    fn oracle_limit() {
        let pts: Vec<(f64, f64)> = (0..16).map(|i| (i as f64, 0.0)).collect();
        let f = field(&pts, 100.0);
        let adj = build_adjacency(&f);
        assert!(matches!(min_cover_oracle(&f, &adj), Err(DeploymentError::OracleLimit(16))));
    }

    #[test]
    fn csv_header() {
        let f = field(&[(0.0, 0.0), (100.0, 0.0), (200.0, 0.0)], 100.0);
        let dep = deploy_greedy(&f, &build_adjacency(&f)).unwrap();
        let mut buf = Vec::new();
        dep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "sensor_id,assigned_edge_id,is_edge\n0,1,false\n1,1,true\n2,1,false\n"
        );
    }
}
