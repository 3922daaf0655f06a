//! Federated split training with modeled energy accounting.
//!
//! Each global round, every client runs `local_rounds` split steps against
//! the shared server in client order, then the client halves are replaced by
//! their arithmetic mean. Compute time is modeled as FLOPs over device
//! throughput, so traces are reproducible bit for bit.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{shard_by_class, synthetic_clusters, Dataset, DatasetSpec};
use super::model::{
    aggregate, build_split_model_with, client_backward, client_forward, server_forward_backward, Dense,
    ModelSpec, SplitModel,
};
use super::SplitError;
use crate::energy::transfer_time;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FederationConfig {
    pub clients: usize,
    pub global_rounds: usize,
    pub local_rounds: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Edge device draw while computing (W).
    pub client_power_w: f64,
    pub server_power_w: f64,
    /// Sustained FLOP/s used to model compute time.
    pub client_throughput_flops: f64,
    pub server_throughput_flops: f64,
    /// UAV relay link rate for smashed data and returned gradients.
    pub link_rate_bps: f64,
    pub bits_per_value: f64,
    pub dataset: DatasetSpec,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            clients: 4,
            global_rounds: 30,
            local_rounds: 5,
            batch_size: 32,
            learning_rate: 0.1,
            seed: 7,
            client_power_w: 30.0,
            server_power_w: 230.0,
            client_throughput_flops: 27.8e12,
            server_throughput_flops: 27.8e12,
            link_rate_bps: 2.0e6,
            bits_per_value: 32.0,
            dataset: DatasetSpec::default(),
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<(), SplitError> {
        let bad = |m: String| Err(SplitError::InvalidConfig(m));
        if self.clients == 0 || self.global_rounds == 0 || self.local_rounds == 0 || self.batch_size == 0 {
            return bad("clients, rounds and batch size must all be >= 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad(format!("learning rate {}", self.learning_rate));
        }
        for (name, v) in [
            ("client_throughput_flops", self.client_throughput_flops),
            ("server_throughput_flops", self.server_throughput_flops),
            ("link_rate_bps", self.link_rate_bps),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        for (name, v) in [
            ("client_power_w", self.client_power_w),
            ("server_power_w", self.server_power_w),
            ("bits_per_value", self.bits_per_value),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

/// Reshuffled-per-epoch mini-batch indices over a dataset of `len` rows.
#[derive(Debug, Clone)]
pub struct BatchSchedule {
    order: Vec<usize>,
    cursor: usize,
    batch: usize,
    rng: ChaCha8Rng,
}

impl BatchSchedule {
    pub fn new(len: usize, batch: usize, seed: u64) -> Self {
        let mut s = Self {
            order: (0..len).collect(),
            cursor: 0,
            batch: batch.min(len).max(1),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        s.order.shuffle(&mut s.rng);
        s
    }

    /// Next batch; a batch never straddles an epoch boundary.
    pub fn next_batch(&mut self) -> Vec<usize> {
        if self.cursor + self.batch > self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let out = self.order[self.cursor..self.cursor + self.batch].to_vec();
        self.cursor += self.batch;
        out
    }
}

/// Seed of client `k`'s batch schedule.
pub fn client_batch_seed(fed_seed: u64, client: usize) -> u64 {
    fed_seed
        .wrapping_mul(0x2545_F491_4F6C_DD1D)
        .wrapping_add(client as u64 + 1)
}

/// Per (global round, client) record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundEntry {
    pub round: usize,
    pub client: usize,
    /// Mean loss over the client's local steps.
    pub loss: f64,
    pub t_fwd_s: f64,
    pub t_bwd_s: f64,
    pub e_fwd_j: f64,
    pub e_bwd_j: f64,
    pub t_server_s: f64,
    pub e_server_j: f64,
    /// Smashed data up plus gradients down over the relay link.
    pub t_comm_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub entries: Vec<RoundEntry>,
    /// Loss of every split step in execution order.
    pub step_losses: Vec<f64>,
    /// Client compute energy and time, summed over entries.
    pub e_total_j: f64,
    pub t_total_s: f64,
    pub server_e_total_j: f64,
    pub server_t_total_s: f64,
    pub comm_t_total_s: f64,
    pub final_accuracy: f64,
    /// Measured host time around client compute; not reproducible.
    #[serde(skip)]
    pub wall_clock_s: f64,
}

impl TrainingTrace {
    /// Writes `round,client,loss,t_fwd_s,t_bwd_s,e_fwd_J,e_bwd_J` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["round", "client", "loss", "t_fwd_s", "t_bwd_s", "e_fwd_J", "e_bwd_J"])?;
        for e in &self.entries {
            w.write_record([
                e.round.to_string(),
                e.client.to_string(),
                e.loss.to_string(),
                e.t_fwd_s.to_string(),
                e.t_bwd_s.to_string(),
                e.e_fwd_j.to_string(),
                e.e_bwd_j.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn dense_fwd_flops(l: &Dense, batch: f64) -> f64 {
    batch * (2.0 * (l.fan_in() * l.fan_out()) as f64 + l.fan_out() as f64)
}

/// Weight and bias gradients, plus the input gradient when `upstream`.
fn dense_bwd_flops(l: &Dense, batch: f64, upstream: bool) -> f64 {
    let mac = 2.0 * (l.fan_in() * l.fan_out()) as f64;
    batch * (mac + l.fan_out() as f64 + if upstream { mac } else { 0.0 })
}

/// Modeled FLOPs for one step: (client forward, client backward, server
/// forward + backward).
pub fn step_flops(model: &SplitModel, batch: usize) -> (f64, f64, f64) {
    let b = batch as f64;
    let client = model.client.layers();
    let fwd = client.iter().map(|l| dense_fwd_flops(l, b)).sum();
    let bwd = client
        .iter()
        .enumerate()
        .map(|(i, l)| dense_bwd_flops(l, b, i > 0))
        .sum();
    let server = model
        .server
        .layers()
        .iter()
        .map(|l| dense_fwd_flops(l, b) + dense_bwd_flops(l, b, true))
        .sum();
    (fwd, bwd, server)
}

/// Generates the synthetic dataset, shards it by class and trains.
pub fn train(spec: &ModelSpec, fed: &FederationConfig) -> Result<(TrainingTrace, SplitModel), SplitError> {
    let (train_set, test_set) = synthetic_clusters(&fed.dataset)?;
    let shards = shard_by_class(&train_set, fed.dataset.classes, fed.clients)?;
    train_on(spec, fed, &shards, &test_set)
}

/// Trains with caller-supplied client shards; `shards.len()` must equal
/// `fed.clients`.
pub fn train_on(
    spec: &ModelSpec,
    fed: &FederationConfig,
    shards: &[Dataset],
    test: &Dataset,
) -> Result<(TrainingTrace, SplitModel), SplitError> {
    fed.validate()?;
    if shards.len() != fed.clients || shards.iter().any(Dataset::is_empty) {
        return Err(SplitError::InvalidConfig(format!(
            "expected {} non-empty client shards, got {}",
            fed.clients,
            shards.len()
        )));
    }
    let mut model = build_split_model_with(spec, fed.seed)?;
    let mut clients = vec![model.client.clone(); fed.clients];
    let mut schedules: Vec<BatchSchedule> = shards
        .iter()
        .enumerate()
        .map(|(k, s)| BatchSchedule::new(s.len(), fed.batch_size, client_batch_seed(fed.seed, k)))
        .collect();

    let mut entries = Vec::with_capacity(fed.global_rounds * fed.clients);
    let mut step_losses = Vec::with_capacity(fed.global_rounds * fed.clients * fed.local_rounds);
    let mut wall = 0.0;
    let lr = fed.learning_rate;

    for round in 0..fed.global_rounds {
        for (k, client) in clients.iter_mut().enumerate() {
            let mut entry = RoundEntry {
                round,
                client: k,
                loss: 0.0,
                t_fwd_s: 0.0,
                t_bwd_s: 0.0,
                e_fwd_j: 0.0,
                e_bwd_j: 0.0,
                t_server_s: 0.0,
                e_server_j: 0.0,
                t_comm_s: 0.0,
            };
            for _ in 0..fed.local_rounds {
                let batch = shards[k].select(&schedules[k].next_batch());
                let b = batch.len();

                let started = Instant::now();
                let (smashed, cache) = client_forward(client, &batch.features)?;
                wall += started.elapsed().as_secs_f64();

                let (loss, grad) = server_forward_backward(&mut model.server, &smashed, &batch.labels, lr)?;
                if !loss.is_finite() {
                    return Err(SplitError::Diverged { round });
                }

                let started = Instant::now();
                client_backward(client, &cache, &grad, lr)?;
                wall += started.elapsed().as_secs_f64();

                // Shapes never change, so the untouched template model suffices.
                let (f_fwd, f_bwd, f_srv) = step_flops(&model, b);
                let t_fwd = f_fwd / fed.client_throughput_flops;
                let t_bwd = f_bwd / fed.client_throughput_flops;
                let t_srv = f_srv / fed.server_throughput_flops;
                let bits = (smashed.len() + grad.len()) as f64 * fed.bits_per_value;

                entry.loss += loss;
                entry.t_fwd_s += t_fwd;
                entry.t_bwd_s += t_bwd;
                entry.e_fwd_j += fed.client_power_w * t_fwd;
                entry.e_bwd_j += fed.client_power_w * t_bwd;
                entry.t_server_s += t_srv;
                entry.e_server_j += fed.server_power_w * t_srv;
                entry.t_comm_s += transfer_time(bits, fed.link_rate_bps).map_err(|e| SplitError::InvalidConfig(e.to_string()))?;
                step_losses.push(loss);
            }
            entry.loss /= fed.local_rounds as f64;
            entries.push(entry);
        }
        let sets: Vec<Vec<Dense>> = clients.iter().map(|c| c.layers().to_vec()).collect();
        let mean = aggregate(&sets)?;
        for c in &mut clients {
            c.replace_layers(mean.clone())?;
        }
    }

    model.client = clients.swap_remove(0);
    let final_accuracy = model.accuracy(&test.features, &test.labels)?;
    let sum = |f: fn(&RoundEntry) -> f64| entries.iter().map(f).sum::<f64>();
    let trace = TrainingTrace {
        e_total_j: sum(|e| e.e_fwd_j + e.e_bwd_j),
        t_total_s: sum(|e| e.t_fwd_s + e.t_bwd_s),
        server_e_total_j: sum(|e| e.e_server_j),
        server_t_total_s: sum(|e| e.t_server_s),
        comm_t_total_s: sum(|e| e.t_comm_s),
        final_accuracy,
        wall_clock_s: wall,
        step_losses,
        entries,
    };
    Ok((trace, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (ModelSpec, FederationConfig) {
        let fed = FederationConfig {
            clients: 2,
            global_rounds: 3,
            local_rounds: 2,
            batch_size: 8,
            dataset: DatasetSpec {
                classes: 4,
                features: 2,
                train_per_class: 20,
                test_per_class: 10,
                ..Default::default()
            },
            ..Default::default()
        };
        (ModelSpec::new(vec![2, 6, 6, 4], 1), fed)
    }

    #[test]
    fn batches_cover_each_epoch_once() {
        let mut s = BatchSchedule::new(10, 5, 3);
        let mut seen: Vec<usize> = s.next_batch();
        seen.extend(s.next_batch());
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn zero_learning_rate_keeps_loss_per_batch() {
        let (spec, mut fed) = small();
        fed.learning_rate = 0.0;
        fed.clients = 1;
        fed.batch_size = 1000;
        let (trace, _) = train(&spec, &fed).unwrap();
        // Full-batch shuffles only reorder the summation.
        let first = trace.step_losses[0];
        assert!(trace.step_losses.iter().all(|&l| (l - first).abs() <= 1e-12 * first));
    }

    #[test]
    fn totals_are_sums_of_entries() {
        let (spec, fed) = small();
        let (trace, _) = train(&spec, &fed).unwrap();
        assert_eq!(trace.entries.len(), 6);
        assert_eq!(trace.step_losses.len(), 12);
        let e: f64 = trace.entries.iter().map(|e| e.e_fwd_j + e.e_bwd_j).sum();
        let t: f64 = trace.entries.iter().map(|e| e.t_fwd_s + e.t_bwd_s).sum();
        assert_eq!(trace.e_total_j, e);
        assert_eq!(trace.t_total_s, t);
        assert!(trace.e_total_j > 0.0);
    }

    #[test]
    fn repeated_runs_are_identical() {
        let (spec, fed) = small();
        let (mut a, ma) = train(&spec, &fed).unwrap();
        let (mut b, mb) = train(&spec, &fed).unwrap();
        a.wall_clock_s = 0.0;
        b.wall_clock_s = 0.0;
        assert_eq!(a, b);
        assert_eq!(ma.client.layers(), mb.client.layers());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        let (spec, mut fed) = small();
        fed.learning_rate = 1e200;
        assert!(matches!(train(&spec, &fed), Err(SplitError::Diverged { .. })));
    }

    #[test]
    fn csv_header() {
        let (spec, fed) = small();
        let (trace, _) = train(&spec, &fed).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("round,client,loss,t_fwd_s,t_bwd_s,e_fwd_J,e_bwd_J\n0,0,"));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn flop_counts() {
        let m = crate::split::build_split_model(&[2, 8, 8, 3], 1, 0).unwrap();
        let (f, b, s) = step_flops(&m, 10);
        assert_eq!(f, 10.0 * (2.0 * 16.0 + 8.0));
        assert_eq!(b, 10.0 * (2.0 * 16.0 + 8.0));
        let l2 = 10.0 * (2.0 * 64.0 + 8.0) + 10.0 * (4.0 * 64.0 + 8.0);
        let l3 = 10.0 * (2.0 * 24.0 + 3.0) + 10.0 * (4.0 * 24.0 + 3.0);
        assert_eq!(s, l2 + l3);
    }
}
