//! Sensor field geometry and communication-range adjacency.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Square meters in one international acre.
pub const SQUARE_METERS_PER_ACRE: f64 = 4046.856_422_4;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid field spec: {0}")]
    InvalidSpec(String),
    #[error("invalid sensor field: {0}")]
    InvalidField(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// A position on the ground plane, in meters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Euclidean distance between two ground points.
pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    UniformGrid,
    SeededRandom,
}

/// How to lay sensors out over a square farm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub acres: f64,
    /// One sensor per this many acres.
    pub acres_per_sensor: f64,
    /// Explicit sensor count; takes precedence over the density when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor_count: Option<usize>,
    pub layout: Layout,
    #[serde(default)]
    pub seed: u64,
}

impl FieldSpec {
    pub fn sensor_count(&self) -> Result<usize, FieldError> {
        if !(self.acres.is_finite() && self.acres > 0.0) {
            return Err(FieldError::InvalidSpec(format!(
                "acres must be positive, got {}",
                self.acres
            )));
        }
        if let Some(n) = self.sensor_count {
            if n == 0 {
                return Err(FieldError::InvalidSpec("sensor count must be >= 1".into()));
            }
            return Ok(n);
        }
        if !(self.acres_per_sensor.is_finite() && self.acres_per_sensor > 0.0) {
            return Err(FieldError::InvalidSpec(format!(
                "sensor density must be positive, got one per {} acres",
                self.acres_per_sensor
            )));
        }
        let n = (self.acres / self.acres_per_sensor).floor() as usize;
        if n == 0 {
            return Err(FieldError::InvalidSpec(format!(
                "{} acres at one sensor per {} acres yields no sensors",
                self.acres, self.acres_per_sensor
            )));
        }
        Ok(n)
    }

    pub fn side_m(&self) -> f64 {
        (self.acres * SQUARE_METERS_PER_ACRE).sqrt()
    }
}

/// Sensors on a square field, plus the radio geometry shared by every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorField {
    sensors: Vec<Point>,
    side_m: f64,
    comm_range_m: f64,
    uav_altitude_m: f64,
}

impl SensorField {
    pub fn new(
        sensors: Vec<Point>,
        side_m: f64,
        comm_range_m: f64,
        uav_altitude_m: f64,
    ) -> Result<Self, FieldError> {
        if sensors.is_empty() {
            return Err(FieldError::InvalidField("at least one sensor required".into()));
        }
        if !(side_m.is_finite() && side_m > 0.0) {
            return Err(FieldError::InvalidField(format!("side must be positive, got {side_m}")));
        }
        if !(comm_range_m.is_finite() && comm_range_m > 0.0) {
            return Err(FieldError::InvalidField(format!(
                "communication range must be positive, got {comm_range_m}"
            )));
        }
        if !(uav_altitude_m.is_finite() && uav_altitude_m >= 0.0 && uav_altitude_m < comm_range_m)
        {
            return Err(FieldError::InvalidField(format!(
                "altitude must satisfy 0 <= h < CR, got h = {uav_altitude_m}, CR = {comm_range_m}"
            )));
        }
        for (i, p) in sensors.iter().enumerate() {
            let inside = |v: f64| v.is_finite() && (0.0..=side_m).contains(&v);
            if !inside(p.x) || !inside(p.y) {
                return Err(FieldError::InvalidField(format!(
                    "sensor {i} at ({}, {}) lies outside the {side_m} m field",
                    p.x, p.y
                )));
            }
        }
        Ok(Self {
            sensors,
            side_m,
            comm_range_m,
            uav_altitude_m,
        })
    }

    pub fn sensors(&self) -> &[Point] {
        &self.sensors
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn side_m(&self) -> f64 {
        self.side_m
    }

    pub fn area_acres(&self) -> f64 {
        self.side_m * self.side_m / SQUARE_METERS_PER_ACRE
    }

    pub fn diagonal_m(&self) -> f64 {
        self.side_m * std::f64::consts::SQRT_2
    }

    pub fn comm_range_m(&self) -> f64 {
        self.comm_range_m
    }

    pub fn uav_altitude_m(&self) -> f64 {
        self.uav_altitude_m
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        distance(self.sensors[i], self.sensors[j])
    }

    /// Writes `id,x_m,y_m` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FieldError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "x_m", "y_m"])?;
        for (i, p) in self.sensors.iter().enumerate() {
            w.write_record([i.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads `id,x_m,y_m` rows. Ids must be `0..N` in order.
    pub fn read_csv<R: Read>(
        reader: R,
        side_m: f64,
        comm_range_m: f64,
        uav_altitude_m: f64,
    ) -> Result<Self, FieldError> {
        #[derive(Deserialize)]
        struct Row {
            id: usize,
            x_m: f64,
            y_m: f64,
        }
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["id", "x_m", "y_m"] {
            return Err(FieldError::InvalidField(format!(
                "expected header id,x_m,y_m, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut sensors = Vec::new();
        for row in r.deserialize() {
            let row: Row = row?;
            if row.id != sensors.len() {
                return Err(FieldError::InvalidField(format!(
                    "sensor ids must be sequential; expected {}, got {}",
                    sensors.len(),
                    row.id
                )));
            }
            sensors.push(Point::new(row.x_m, row.y_m));
        }
        Self::new(sensors, side_m, comm_range_m, uav_altitude_m)
    }
}

/// Places sensors according to `spec` on a square field of the given area.
///
/// The grid layout uses the smallest `cols x rows` lattice with
/// `cols = ceil(sqrt(N))` that holds N sensors, filled row-major with sensors
/// at cell centers. A single sensor therefore lands at the field center.
pub fn generate_field(
    spec: &FieldSpec,
    comm_range_m: f64,
    uav_altitude_m: f64,
) -> Result<SensorField, FieldError> {
    let n = spec.sensor_count()?;
    let side = spec.side_m();
    let sensors = match spec.layout {
        Layout::UniformGrid => {
            let cols = (n as f64).sqrt().ceil() as usize;
            let rows = n.div_ceil(cols);
            let (dx, dy) = (side / cols as f64, side / rows as f64);
            (0..n)
                .map(|k| {
                    let (r, c) = (k / cols, k % cols);
                    Point::new((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy)
                })
                .collect()
        }
        Layout::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..n)
                .map(|_| {
                    Point::new(
                        rng.random::<f64>() * side,
                        rng.random::<f64>() * side,
                    )
                })
                .collect()
        }
    };
    SensorField::new(sensors, side, comm_range_m, uav_altitude_m)
}

/// Communication-range neighbourhoods in compressed sparse row form.
///
/// Row `i` lists, in ascending order, every `j != i` with `d(i, j) <= CR`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyCsr {
    row_offsets: Vec<usize>,
    column_indices: Vec<usize>,
}

impl AdjacencyCsr {
    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn column_indices(&self) -> &[usize] {
        &self.column_indices
    }

    pub fn node_count(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.column_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }
}

pub fn build_adjacency(field: &SensorField) -> AdjacencyCsr {
    let n = field.len();
    let cr = field.comm_range_m();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut column_indices = Vec::new();
    row_offsets.push(0);
    for i in 0..n {
        column_indices.extend((0..n).filter(|&j| j != i && field.dist(i, j) <= cr));
        row_offsets.push(column_indices.len());
    }
    AdjacencyCsr {
        row_offsets,
        column_indices,
    }
}
