//! Synthetic Gaussian-cluster classification data and non-IID sharding.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SplitError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub classes: usize,
    pub features: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Spacing between neighbouring class means on the lattice.
    pub separation: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            classes: 12,
            features: 4,
            train_per_class: 100,
            test_per_class: 50,
            separation: 4.0,
            noise_std: 0.5,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(ndarray::Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }
}

/// Class means on the integer lattice `{0..b}^d` (first `classes` points in
/// counting order), scaled by `separation` and centred on the origin.
pub fn class_means(classes: usize, features: usize, separation: f64) -> Vec<Vec<f64>> {
    let base = (1..).find(|&b: &usize| b.pow(features as u32) >= classes).unwrap();
    let mut means: Vec<Vec<f64>> = (0..classes)
        .map(|c| {
            let mut rem = c;
            (0..features)
                .map(|_| {
                    let digit = rem % base;
                    rem /= base;
                    digit as f64 * separation
                })
                .collect()
        })
        .collect();
    for f in 0..features {
        let centre = means.iter().map(|m| m[f]).sum::<f64>() / classes as f64;
        for m in &mut means {
            m[f] -= centre;
        }
    }
    means
}

/// Draws `(train, test)` sets; samples are grouped by class.
pub fn synthetic_clusters(spec: &DatasetSpec) -> Result<(Dataset, Dataset), SplitError> {
    if spec.classes < 2 || spec.features == 0 {
        return Err(SplitError::InvalidConfig(format!(
            "need >= 2 classes and >= 1 feature, got {} and {}",
            spec.classes, spec.features
        )));
    }
    let noise = Normal::new(0.0, spec.noise_std)
        .map_err(|e| SplitError::InvalidConfig(format!("noise std {}: {e}", spec.noise_std)))?;
    let means = class_means(spec.classes, spec.features, spec.separation);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = |per_class: usize| {
        let n = per_class * spec.classes;
        let mut x = Array2::zeros((n, spec.features));
        let mut labels = Vec::with_capacity(n);
        for (c, mean) in means.iter().enumerate() {
            for k in 0..per_class {
                let row = c * per_class + k;
                for (f, &mu) in mean.iter().enumerate() {
                    x[[row, f]] = mu + noise.sample(&mut rng);
                }
                labels.push(c);
            }
        }
        Dataset { features: x, labels }
    };
    let train = draw(spec.train_per_class);
    let test = draw(spec.test_per_class);
    Ok((train, test))
}

/// Non-IID partition: class `c` goes entirely to client `c * M / C`, so each
/// client holds a contiguous block of classes and together they hold all.
pub fn shard_by_class(data: &Dataset, classes: usize, clients: usize) -> Result<Vec<Dataset>, SplitError> {
    if clients == 0 || clients > classes {
        return Err(SplitError::InvalidConfig(format!(
            "cannot shard {classes} classes over {clients} clients"
        )));
    }
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); clients];
    for (r, &y) in data.labels.iter().enumerate() {
        rows[y * clients / classes].push(r);
    }
    Ok(rows.iter().map(|r| data.select(r)).collect())
}
