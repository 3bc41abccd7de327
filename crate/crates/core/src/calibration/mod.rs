//! Chip-model calibration from single-photon current sweeps, and transfer-matrix
//! characterization with Sinkhorn-Knopp balancing.

mod fit;
mod sinkhorn;

pub use fit::{
    fit_chip_model, loss_and_gradient, predict_sample, EpochMetrics, FitConfig, FitReport,
    FIT_REPORT_SCHEMA,
};
pub use sinkhorn::{
    has_total_support, simulate_characterization, sinkhorn_knopp, transfer_matrix_fidelity,
    SinkhornResult, TransferMatrixCharacterization,
};

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::chip::{CHIP_MODES, MAX_CURRENT_MA, NUM_SHIFTERS};
use crate::circuit::{ChipModelParams, CircuitError, CurrentSetting};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("R² undefined: {0}")]
    UndefinedRSquared(String),
    #[error("training diverged: MSE rose for {epochs} consecutive epochs (last {last:.3e})")]
    Diverged { epochs: usize, last: f64, trace: Vec<EpochMetrics> },
    #[error("matrix must be square and non-negative: {0}")]
    InvalidMatrix(String),
    #[error("matrix lacks total support; it cannot be balanced")]
    NoTotalSupport,
    #[error("Sinkhorn-Knopp did not converge in {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("fidelity undefined for a zero matrix")]
    ZeroMatrix,
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn io_error(path: &Path, e: impl std::fmt::Display) -> CalibrationError {
    CalibrationError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// One `(port, x⃗, p⃗)` observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub port: usize,
    pub currents: CurrentSetting,
    pub distribution: [f64; CHIP_MODES],
}

/// Single-shifter sweeps: for each shifter and input port, `steps` currents
/// evenly spaced over `[0, max_current]` with all other currents at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub steps: usize,
    pub max_current: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            steps: 61,
            max_current: MAX_CURRENT_MA,
        }
    }
}

impl SweepSpec {
    pub fn settings(&self) -> Vec<(usize, CurrentSetting)> {
        let mut out = Vec::with_capacity(self.steps * NUM_SHIFTERS * CHIP_MODES);
        for shifter in 0..NUM_SHIFTERS {
            for port in 0..CHIP_MODES {
                for k in 0..self.steps {
                    let x = if self.steps > 1 {
                        self.max_current * k as f64 / (self.steps - 1) as f64
                    } else {
                        0.0
                    };
                    let mut c = [0.0; NUM_SHIFTERS];
                    c[shifter] = x;
                    out.push((port, CurrentSetting::new(c).expect("sweep within range")));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    None,
    /// Multinomial photocounting with this many detected photons per sample.
    Shots(u64),
}

/// Synthetic sweep data from a known chip model.
pub fn generate_calibration_data(
    truth: &ChipModelParams,
    sweep: &SweepSpec,
    noise: NoiseModel,
    seed: u64,
) -> Vec<CalibrationSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sweep
        .settings()
        .into_iter()
        .map(|(port, currents)| {
            let p = truth.predict(port, &currents);
            let distribution = match noise {
                NoiseModel::None => p,
                NoiseModel::Shots(n) => {
                    let draw = crate::linalg::sample_multinomial(n, &p, &mut rng);
                    std::array::from_fn(|j| draw[j] as f64 / n as f64)
                }
            };
            CalibrationSample {
                port,
                currents,
                distribution,
            }
        })
        .collect()
}

/// Nominal couplers with small fabrication offsets and the reference crosstalk,
/// zero-current phases and output efficiencies. Default synthetic ground truth.
pub fn synthetic_ground_truth() -> ChipModelParams {
    ChipModelParams::reference_fit().with_reflectivity_offsets(&[
        0.012, -0.008, 0.015, 0.005, -0.011, 0.009, -0.006, 0.013, 0.004, -0.010,
    ])
}

/// `1 − Σ(y − ŷ)² / Σ(y − ȳ)²`.
pub fn r_squared(y: &[f64], y_hat: &[f64]) -> Result<f64, CalibrationError> {
    if y.len() != y_hat.len() {
        return Err(CalibrationError::UndefinedRSquared(format!(
            "length mismatch {} vs {}",
            y.len(),
            y_hat.len()
        )));
    }
    if y.len() < 2 {
        return Err(CalibrationError::UndefinedRSquared("fewer than two values".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(CalibrationError::UndefinedRSquared("constant observations".into()));
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

const DATASET_HEADER: [&str; 1 + NUM_SHIFTERS + CHIP_MODES] = [
    "port", "x1_ma", "x2_ma", "x3_ma", "x4_ma", "x5_ma", "x6_ma", "p1", "p2", "p3", "p4", "p5",
];

/// CSV with columns `port, x1_ma..x6_ma, p1..p5`.
pub fn write_dataset(path: &Path, samples: &[CalibrationSample]) -> Result<(), CalibrationError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(DATASET_HEADER)?;
    for s in samples {
        let mut row = vec![s.port.to_string()];
        row.extend(s.currents.currents().iter().map(|x| x.to_string()));
        row.extend(s.distribution.iter().map(|p| p.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<CalibrationSample>, CalibrationError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_error(path, e))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != DATASET_HEADER {
        return Err(CalibrationError::Dataset(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let num = |i: usize| -> Result<f64, CalibrationError> {
            record[i]
                .parse::<f64>()
                .map_err(|e| CalibrationError::Dataset(format!("row {}: column {i}: {e}", line + 1)))
        };
        let port: usize = record[0]
            .parse()
            .map_err(|e| CalibrationError::Dataset(format!("row {}: port: {e}", line + 1)))?;
        if port >= CHIP_MODES {
            return Err(CalibrationError::Dataset(format!("row {}: port {port}", line + 1)));
        }
        let mut x = [0.0; NUM_SHIFTERS];
        for (k, v) in x.iter_mut().enumerate() {
            *v = num(1 + k)?;
        }
        let mut p = [0.0; CHIP_MODES];
        for (k, v) in p.iter_mut().enumerate() {
            *v = num(1 + NUM_SHIFTERS + k)?;
        }
        let total: f64 = p.iter().sum();
        if p.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(CalibrationError::Dataset(format!(
                "row {}: distribution must be non-negative and sum to 1",
                line + 1
            )));
        }
        out.push(CalibrationSample {
            port,
            currents: CurrentSetting::new(x)?,
            distribution: p,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_has_expected_size() {
        let data = generate_calibration_data(&synthetic_ground_truth(), &SweepSpec::default(), NoiseModel::None, 0);
        assert_eq!(data.len(), 1830);
        for s in &data {
            assert!((s.distribution.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(s.distribution.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn zero_current_sample_is_model_prediction() {
        let truth = synthetic_ground_truth();
        let data = generate_calibration_data(&truth, &SweepSpec::default(), NoiseModel::None, 0);
        let s = data.iter().find(|s| s.port == 2 && s.currents == CurrentSetting::zero()).unwrap();
        assert_eq!(s.distribution, truth.predict(2, &CurrentSetting::zero()));
    }

    #[test]
    fn generation_is_deterministic() {
        let truth = synthetic_ground_truth();
        let a = generate_calibration_data(&truth, &SweepSpec::default(), NoiseModel::Shots(10_000), 7);
        let b = generate_calibration_data(&truth, &SweepSpec::default(), NoiseModel::Shots(10_000), 7);
        assert_eq!(a, b);
        let c = generate_calibration_data(&truth, &SweepSpec::default(), NoiseModel::Shots(10_000), 8);
        assert_ne!(a, c);
    }

    #[test]
    fn r_squared_examples() {
        let y = [0.0, 1.0, 2.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        assert_eq!(r_squared(&y, &[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((r_squared(&y, &[0.0, 1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(r_squared(&[1.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(r_squared(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("photonchip-ds-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.csv");
        let data = generate_calibration_data(
            &synthetic_ground_truth(),
            &SweepSpec { steps: 3, max_current: 19.5 },
            NoiseModel::None,
            0,
        );
        write_dataset(&path, &data).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), data);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
