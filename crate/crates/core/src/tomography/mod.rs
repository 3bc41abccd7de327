//! Two-qubit state tomography through the chip's output MZIs.

mod measurement;
mod mle;

pub use measurement::{
    correct_for_output_efficiencies, ideal_projectors, projectors_from_chip_model,
    projectors_from_mzis, settings_for, simulate_measurements, CountsTable, MeasurementSetting,
    Pauli, ProjectorSet, SettingCounts, SettingPreset, COUNTS_SCHEMA,
};
pub use mle::{
    check_informational_completeness, log_likelihood, mle_reconstruct, MleConfig, MleResult,
    StopReason,
};

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

pub const DENSITY_SCHEMA: &str = "photonchip.density/v1";
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
pub const TRACE_TOLERANCE: f64 = 1e-10;
pub const EIGENVALUE_FLOOR: f64 = -1e-9;

#[derive(Debug, Error)]
pub enum TomographyError {
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("operator set is informationally incomplete (rank {rank} of 16); unconstrained directions: {}", null_directions.join("; "))]
    InformationallyIncomplete { rank: usize, null_directions: Vec<String> },
    #[error("counts table has {counts} settings but {projectors} projector sets")]
    SettingMismatch { counts: usize, projectors: usize },
    #[error("efficiency {0} must be strictly positive")]
    NonPositiveEfficiency(f64),
    #[error("no counts recorded")]
    NoCounts,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// 4×4 density matrix over |00⟩, |01⟩, |10⟩, |11⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensityMatrix(DMatrix<Complex64>);

impl TwoQubitDensityMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self, TomographyError> {
        if m.shape() != (4, 4) {
            return Err(TomographyError::InvalidDensityMatrix(format!(
                "shape {:?}, expected 4×4",
                m.shape()
            )));
        }
        let herm = linalg::max_abs_diff(&m, &m.adjoint());
        if herm > HERMITIAN_TOLERANCE {
            return Err(TomographyError::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = linalg::trace(&m);
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOLERANCE {
            return Err(TomographyError::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = linalg::hermitian_eigenvalues(&m)[0];
        if min < EIGENVALUE_FLOOR {
            return Err(TomographyError::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_unchecked(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    pub fn from_pure(amplitudes: &[Complex64; 4]) -> Self {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let v = nalgebra::DVector::from_iterator(4, amplitudes.iter().map(|a| a / norm));
        Self(&v * v.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self(DMatrix::identity(4, 4).scale(0.25))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.0)
    }

    pub fn purity(&self) -> f64 {
        linalg::trace(&(&self.0 * &self.0)).re
    }

    /// Transpose on the second qubit.
    pub fn partial_transpose(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(4, 4, |r, c| {
            let (a, b) = (r / 2, r % 2);
            let (a2, b2) = (c / 2, c % 2);
            self.0[(2 * a + b2, 2 * a2 + b)]
        })
    }

    /// Real/imaginary pairs, row-major.
    pub fn to_json(&self) -> String {
        let file = DensityFile {
            schema: DENSITY_SCHEMA.to_string(),
            entries: self.0.transpose().iter().map(|z| [z.re, z.im]).collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("density serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, TomographyError> {
        let file: DensityFile = serde_json::from_str(text)?;
        if file.schema != DENSITY_SCHEMA {
            return Err(TomographyError::InvalidDensityMatrix(format!(
                "schema '{}'",
                file.schema
            )));
        }
        if file.entries.len() != 16 {
            return Err(TomographyError::InvalidDensityMatrix(format!(
                "{} entries, expected 16",
                file.entries.len()
            )));
        }
        let m = DMatrix::from_row_iterator(
            4,
            4,
            file.entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
        );
        Self::new(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), TomographyError> {
        std::fs::write(path, self.to_json()).map_err(|e| io_error(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, TomographyError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::from_json(&text)
    }
}

pub(crate) fn io_error(path: &Path, e: std::io::Error) -> TomographyError {
    TomographyError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityFile {
    schema: String,
    entries: Vec<[f64; 2]>,
}

/// Uhlmann fidelity `(tr √(√ρ_e ρ_t √ρ_e))²`.
pub fn fidelity(rho_e: &TwoQubitDensityMatrix, rho_t: &TwoQubitDensityMatrix) -> f64 {
    let s = linalg::psd_sqrt(&rho_e.0);
    let inner = &s * &rho_t.0 * &s;
    let root = linalg::psd_sqrt(&inner);
    let f = linalg::trace(&root).re;
    (f * f).clamp(0.0, 1.0)
}

/// Sum of the magnitudes of the negative eigenvalues of the partial transpose.
pub fn negativity(rho: &TwoQubitDensityMatrix) -> f64 {
    linalg::hermitian_eigenvalues(&rho.partial_transpose())
        .into_iter()
        .filter(|&v| v < 0.0)
        .map(f64::abs)
        .sum()
}
