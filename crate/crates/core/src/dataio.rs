//! Measurement-set ingestion, validation, filtering, train/test splitting,
//! and synthetic-data generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::CfmModel;

/// Expected CSV header, in order.
pub const CSV_HEADER: [&str; 6] = [
    "label",
    "distance_m",
    "height_m",
    "velocity_mps",
    "force_n",
    "repetition",
];

/// Default tolerance when matching sample coordinates against grid levels.
pub const STATE_MATCH_TOLERANCE: f64 = 1e-6;

/// One recorded impact: where, how fast, and the peak force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSample {
    /// Horizontal distance of the impact point from the robot base axis (m).
    pub distance_m: f64,
    /// Height of the impact point above the robot base (m).
    pub height_m: f64,
    /// Commanded end-effector speed at impact (m/s).
    pub velocity_mps: f64,
    /// Peak impact force (N).
    pub force_n: f64,
    /// 1-based index of the repeated measurement at the same state.
    pub repetition: u32,
}

impl MeasurementSample {
    fn validate(&self) -> std::result::Result<(), String> {
        let positive = [
            ("distance_m", self.distance_m),
            ("height_m", self.height_m),
            ("velocity_mps", self.velocity_mps),
            ("force_n", self.force_n),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(format!("{name} must be finite and > 0, got {value}"));
            }
        }
        if self.repetition < 1 {
            return Err("repetition must be >= 1".into());
        }
        Ok(())
    }
}

/// An ordered collection of samples sharing one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub label: String,
    pub samples: Vec<MeasurementSample>,
}

/// sorted axis levels defining a measurement or synthesis grid.
///
/// The velocity axis may be empty for purely positional sweeps (workspace
/// maps); operations that need velocities reject such grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub distances_m: Vec<f64>,
    pub heights_m: Vec<f64>,
    pub velocities_mps: Vec<f64>,
}

impl GridSpec {
    /// Full three-axis grid; every axis must be non-empty and strictly
    /// increasing.
    pub fn new(
        distances_m: Vec<f64>,
        heights_m: Vec<f64>,
        velocities_mps: Vec<f64>,
    ) -> Result<Self> {
        let grid = Self {
            distances_m,
            heights_m,
            velocities_mps,
        };
        grid.check_axis("distances_m", &grid.distances_m, false)?;
        grid.check_axis("heights_m", &grid.heights_m, false)?;
        grid.check_axis("velocities_mps", &grid.velocities_mps, false)?;
        Ok(grid)
    }

    /// Positional grid with no velocity axis, for workspace maps.
    pub fn planar(distances_m: Vec<f64>, heights_m: Vec<f64>) -> Result<Self> {
        let grid = Self {
            distances_m,
            heights_m,
            velocities_mps: Vec::new(),
        };
        grid.check_axis("distances_m", &grid.distances_m, false)?;
        grid.check_axis("heights_m", &grid.heights_m, false)?;
        Ok(grid)
    }

    fn check_axis(&self, name: &str, axis: &[f64], allow_empty: bool) -> Result<()> {
        if axis.is_empty() {
            if allow_empty {
                return Ok(());
            }
            return Err(Error::Contract(format!("grid axis {name} is empty")));
        }
        if !axis.iter().all(|x| x.is_finite()) {
            return Err(Error::Contract(format!(
                "grid axis {name} contains non-finite values"
            )));
        }
        if !axis.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Contract(format!(
                "grid axis {name} must be strictly increasing"
            )));
        }
        Ok(())
    }

    /// All (d, h, v) states in row-major order (d outermost, v innermost).
    pub fn states(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.distances_m.iter().flat_map(move |&d| {
            self.heights_m.iter().flat_map(move |&h| {
                self.velocities_mps.iter().map(move |&v| (d, h, v))
            })
        })
    }
}

/// Parses the CSV stream into one set per label, labels ordered by first
/// appearance. Line numbers in errors are 1-based (the header is line 1).
pub fn parse_datasets<R: std::io::Read>(reader: R) -> Result<Vec<MeasurementSet>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv_reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "unexpected header {:?}; expected {:?}",
                got.join(","),
                CSV_HEADER.join(",")
            ),
        });
    }

    let mut sets: Vec<MeasurementSet> = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = csv_reader.read_record(&mut record).map_err(|e| {
            let line = e
                .position()
                .map_or_else(|| csv_reader.position().line(), csv::Position::line);
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, csv::Position::line);
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", CSV_HEADER.len(), record.len()),
            });
        }
        let field = |idx: usize| record.get(idx).unwrap_or_default();
        let parse_f64 = |idx: usize| -> Result<f64> {
            field(idx).parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!(
                    "field '{}' is not a number: '{}'",
                    CSV_HEADER[idx],
                    field(idx)
                ),
            })
        };
        let label = field(0).to_string();
        if label.is_empty() {
            return Err(Error::Parse {
                line,
                message: "label is empty".into(),
            });
        }
        let sample = MeasurementSample {
            distance_m: parse_f64(1)?,
            height_m: parse_f64(2)?,
            velocity_mps: parse_f64(3)?,
            force_n: parse_f64(4)?,
            repetition: field(5).parse::<u32>().map_err(|_| Error::Parse {
                line,
                message: format!("field 'repetition' is not a positive integer: '{}'", field(5)),
            })?,
        };
        sample
            .validate()
            .map_err(|message| Error::InvalidSample { line, message })?;
        match sets.iter_mut().find(|s| s.label == label) {
            Some(set) => set.samples.push(sample),
            None => sets.push(MeasurementSet {
                label,
                samples: vec![sample],
            }),
        }
    }

    if sets.is_empty() {
        return Err(Error::EmptyDataset("CSV contains no data rows".into()));
    }
    Ok(sets)
}

/// Parses a stream that must contain exactly one label.
pub fn parse_dataset<R: std::io::Read>(reader: R) -> Result<MeasurementSet> {
    let mut sets = parse_datasets(reader)?;
    if sets.len() > 1 {
        let labels: Vec<String> = sets.iter().map(|s| s.label.clone()).collect();
        return Err(Error::Contract(format!(
            "expected a single label but found {}: {}",
            labels.len(),
            labels.join(", ")
        )));
    }
    Ok(sets.remove(0))
}

/// Writes sets back to the CSV schema. Floats are emitted in shortest
/// round-trip form, so parse -> write -> parse is lossless.
pub fn write_csv<W: std::io::Write>(writer: &mut W, sets: &[MeasurementSet]) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer
        .write_record(CSV_HEADER)
        .map_err(|e| Error::Serialization(e.to_string()))?;
    for set in sets {
        for s in &set.samples {
            csv_writer
                .write_record(&[
                    set.label.clone(),
                    format!("{}", s.distance_m),
                    format!("{}", s.height_m),
                    format!("{}", s.velocity_mps),
                    format!("{}", s.force_n),
                    format!("{}", s.repetition),
                ])
                .map_err(|e| Error::Serialization(e.to_string()))?;
        }
    }
    csv_writer
        .flush()
        .map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(())
}

/// Result of the force-cap filter.
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub set: MeasurementSet,
    /// Number of samples dropped for exceeding the cap.
    pub removed: usize,
}

/// Drops samples whose force exceeds `max_force_n`. A force exactly at the
/// cap is retained: only measurements beyond the device limit are unusable.
pub fn filter_valid(set: &MeasurementSet, max_force_n: f64) -> Result<FilterOutcome> {
    if !(max_force_n > 0.0) {
        return Err(Error::Contract(format!(
            "force cap must be > 0, got {max_force_n}"
        )));
    }
    let samples: Vec<MeasurementSample> = set
        .samples
        .iter()
        .copied()
        .filter(|s| s.force_n <= max_force_n)
        .collect();
    let removed = set.samples.len() - samples.len();
    if samples.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "all {} samples of '{}' exceed the {max_force_n} N cap",
            set.samples.len(),
            set.label
        )));
    }
    Ok(FilterOutcome {
        set: MeasurementSet {
            label: set.label.clone(),
            samples,
        },
        removed,
    })
}

/// Result of a train/test split.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub train: MeasurementSet,
    pub test: MeasurementSet,
    /// Train-grid states that matched no sample (warnings, not fatal).
    pub unmatched_states: Vec<(f64, f64, f64)>,
}

/// Sends samples matching a train-grid state (within `tolerance` per axis)
/// to the training set and everything else to the testing set.
pub fn split_train_test(
    set: &MeasurementSet,
    train_grid: &GridSpec,
    tolerance: f64,
) -> Result<SplitOutcome> {
    if train_grid.velocities_mps.is_empty() {
        return Err(Error::Contract(
            "train grid needs a velocity axis for splitting".into(),
        ));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::Contract(format!(
            "tolerance must be >= 0, got {tolerance}"
        )));
    }
    let near = |x: f64, levels: &[f64]| levels.iter().any(|&l| (x - l).abs() <= tolerance);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for &s in &set.samples {
        if near(s.distance_m, &train_grid.distances_m)
            && near(s.height_m, &train_grid.heights_m)
            && near(s.velocity_mps, &train_grid.velocities_mps)
        {
            train.push(s);
        } else {
            test.push(s);
        }
    }
    let unmatched_states = train_grid
        .states()
        .filter(|&(d, h, v)| {
            !train.iter().any(|s| {
                (s.distance_m - d).abs() <= tolerance
                    && (s.height_m - h).abs() <= tolerance
                    && (s.velocity_mps - v).abs() <= tolerance
            })
        })
        .collect();
    Ok(SplitOutcome {
        train: MeasurementSet {
            label: set.label.clone(),
            samples: train,
        },
        test: MeasurementSet {
            label: set.label.clone(),
            samples: test,
        },
        unmatched_states,
    })
}

/// Result of synthetic-data generation.
#[derive(Debug, Clone)]
pub struct SynthesizedSet {
    pub set: MeasurementSet,
    /// Indices of emitted samples whose grid state lies outside the model's
    /// training domain (extrapolated ground truth).
    pub out_of_domain: Vec<usize>,
}

/// Generates `repetitions` noisy measurements per grid state from a model.
///
/// Forces are the model prediction plus additive Gaussian noise in newtons
/// (repetition scatter is reported in newtons, not in ln-space). Draws that
/// would produce a non-positive force are redrawn, which keeps the output a
/// deterministic function of `seed`. States run d-major, then h, then v,
/// with repetitions innermost.
pub fn synthesize_dataset(
    model: &CfmModel,
    grid: &GridSpec,
    noise_sd_n: f64,
    repetitions: u32,
    seed: u64,
) -> Result<SynthesizedSet> {
    if repetitions < 1 {
        return Err(Error::Contract(format!(
            "repetitions must be >= 1, got {repetitions}"
        )));
    }
    if !(noise_sd_n >= 0.0) || !noise_sd_n.is_finite() {
        return Err(Error::Contract(format!(
            "noise SD must be finite and >= 0, got {noise_sd_n}"
        )));
    }
    if grid.velocities_mps.is_empty() {
        return Err(Error::Contract(
            "synthesis grid needs a velocity axis".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = if noise_sd_n > 0.0 {
        Some(Normal::new(0.0, noise_sd_n).map_err(|e| Error::Contract(e.to_string()))?)
    } else {
        None
    };
    let mut samples = Vec::new();
    let mut out_of_domain = Vec::new();
    for (d, h, v) in grid.states() {
        let clean = model.linear_predictor(d, h, v).exp();
        let outside = !model.domain.contains(d, h, v);
        for rep in 1..=repetitions {
            let force_n = match &normal {
                None => clean,
                Some(dist) => loop {
                    let candidate = clean + dist.sample(&mut rng);
                    if candidate > 0.0 {
                        break candidate;
                    }
                },
            };
            if outside {
                out_of_domain.push(samples.len());
            }
            samples.push(MeasurementSample {
                distance_m: d,
                height_m: h,
                velocity_mps: v,
                force_n,
                repetition: rep,
            });
        }
    }
    Ok(SynthesizedSet {
        set: MeasurementSet {
            label: model.label.clone(),
            samples,
        },
        out_of_domain,
    })
}
