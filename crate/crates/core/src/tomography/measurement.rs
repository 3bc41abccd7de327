use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{io_error, TomographyError, TwoQubitDensityMatrix};
use crate::circuit::{ChipModelParams, ChipPhases};

pub const COUNTS_SCHEMA: &str = "photonchip.counts/v1";

/// Single-qubit measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// `(φ, θ)` of the output MZI that maps this basis onto the click detectors.
    pub fn phases(self) -> (f64, f64) {
        match self {
            Pauli::Z => (0.0, PI),
            Pauli::X => (0.0, FRAC_PI_2),
            Pauli::Y => (FRAC_PI_2, FRAC_PI_2),
        }
    }

    fn label(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Phases `(φ₁, θ₁; φ₂, θ₂)` of the two output MZIs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub label: String,
    pub phi1: f64,
    pub theta1: f64,
    pub phi2: f64,
    pub theta2: f64,
}

impl MeasurementSetting {
    pub fn product(a: Pauli, b: Pauli) -> Self {
        let (phi1, theta1) = a.phases();
        let (phi2, theta2) = b.phases();
        Self {
            label: format!("{}{}", a.label(), b.label()),
            phi1,
            theta1,
            phi2,
            theta2,
        }
    }

    pub fn chip_phases(&self, generation: (f64, f64)) -> ChipPhases {
        ChipPhases::default()
            .with_generation(generation.0, generation.1)
            .with_measurement(self.phi1, self.theta1, self.phi2, self.theta2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SettingPreset {
    /// All nine products of X, Y, Z.
    Pauli9,
    /// ZZ, XX, YY, XY.
    Four,
    /// ZZ, XX, YY, XY, YZ, ZX.
    Six,
}

pub fn settings_for(preset: SettingPreset) -> Vec<MeasurementSetting> {
    use Pauli::*;
    let pairs: &[(Pauli, Pauli)] = match preset {
        SettingPreset::Pauli9 => &[
            (Z, Z),
            (Z, X),
            (Z, Y),
            (X, Z),
            (X, X),
            (X, Y),
            (Y, Z),
            (Y, X),
            (Y, Y),
        ],
        SettingPreset::Four => &[(Z, Z), (X, X), (Y, Y), (X, Y)],
        SettingPreset::Six => &[(Z, Z), (X, X), (Y, Y), (X, Y), (Y, Z), (Z, X)],
    };
    pairs.iter().map(|&(a, b)| MeasurementSetting::product(a, b)).collect()
}

/// Four effects of one setting; index `2a + b` for a click on output `a` of
/// qubit A's MZI and output `b` of qubit B's.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSet {
    pub setting: MeasurementSetting,
    pub operators: [DMatrix<Complex64>; 4],
}

impl ProjectorSet {
    pub fn sum(&self) -> DMatrix<Complex64> {
        self.operators.iter().fold(DMatrix::zeros(4, 4), |acc, e| acc + e)
    }

    pub fn probabilities(&self, rho: &TwoQubitDensityMatrix) -> [f64; 4] {
        let mut p = [0.0; 4];
        for (k, e) in self.operators.iter().enumerate() {
            p[k] = crate::linalg::trace(&(rho.matrix() * e)).re.max(0.0);
        }
        p
    }
}

fn click_effects(w: &Matrix2<Complex64>) -> [DMatrix<Complex64>; 2] {
    let effect = |k: usize| {
        let row = DMatrix::from_fn(1, 2, |_, j| w[(k, j)]);
        row.adjoint() * row
    };
    [effect(0), effect(1)]
}

/// Effects `W_A†|a⟩⟨a|W_A ⊗ W_B†|b⟩⟨b|W_B` for given MZI transforms.
pub fn projectors_from_mzis(
    setting: MeasurementSetting,
    wa: &Matrix2<Complex64>,
    wb: &Matrix2<Complex64>,
) -> ProjectorSet {
    let ea = click_effects(wa);
    let eb = click_effects(wb);
    let operators = std::array::from_fn(|k| ea[k / 2].kronecker(&eb[k % 2]));
    ProjectorSet { setting, operators }
}

/// Measurement effects actually implemented by `chip` at `setting`.
pub fn projectors_from_chip_model(chip: &ChipModelParams, setting: &MeasurementSetting) -> ProjectorSet {
    let [wa, wb] = chip.measurement_unitaries(&setting.chip_phases((0.0, 0.0)));
    projectors_from_mzis(setting.clone(), &wa, &wb)
}

pub fn ideal_projectors(setting: &MeasurementSetting) -> ProjectorSet {
    projectors_from_chip_model(&ChipModelParams::ideal(), setting)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub setting: MeasurementSetting,
    /// Counts (or exact probabilities) per click pattern `2a + b`.
    pub counts: [f64; 4],
}

impl SettingCounts {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsTable {
    pub schema: String,
    /// `None` for exact-probability tables.
    pub shots: Option<u64>,
    pub settings: Vec<SettingCounts>,
}

impl CountsTable {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("counts serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, TomographyError> {
        let t: CountsTable = serde_json::from_str(text)?;
        if t.schema != COUNTS_SCHEMA {
            return Err(TomographyError::InvalidDensityMatrix(format!(
                "counts schema '{}'",
                t.schema
            )));
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<(), TomographyError> {
        std::fs::write(path, self.to_json()).map_err(|e| io_error(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, TomographyError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::from_json(&text)
    }
}

/// Channel efficiencies of a click pattern: qubit A output `a` uses channel `a`,
/// qubit B output `b` uses channel `2 + b`.
fn pattern_efficiency(k: usize, efficiencies: &[f64; 4]) -> f64 {
    efficiencies[k / 2] * efficiencies[2 + k % 2]
}

/// Born-rule click statistics for each projector set. With `shots = None` the
/// table holds exact probabilities; otherwise multinomial samples of `shots`
/// detected events per setting. `efficiencies` (signal channels 0..4) bias the
/// detected distribution as lossy channels would.
pub fn simulate_measurements<R: Rng + ?Sized>(
    rho: &TwoQubitDensityMatrix,
    projectors: &[ProjectorSet],
    shots: Option<u64>,
    efficiencies: Option<&[f64; 4]>,
    rng: &mut R,
) -> CountsTable {
    let settings = projectors
        .iter()
        .map(|set| {
            let mut p = set.probabilities(rho);
            if let Some(eta) = efficiencies {
                for (k, pk) in p.iter_mut().enumerate() {
                    *pk *= pattern_efficiency(k, eta);
                }
            }
            let total: f64 = p.iter().sum();
            if total > 0.0 {
                for pk in p.iter_mut() {
                    *pk /= total;
                }
            }
            let counts = match shots {
                None => p,
                Some(n) => {
                    let draw = crate::linalg::sample_multinomial(n, &p, rng);
                    std::array::from_fn(|k| draw[k] as f64)
                }
            };
            SettingCounts {
                setting: set.setting.clone(),
                counts,
            }
        })
        .collect();
    CountsTable {
        schema: super::COUNTS_SCHEMA.to_string(),
        shots,
        settings,
    }
}

/// Divides each count by the product of its two channel efficiencies.
pub fn correct_for_output_efficiencies(
    table: &CountsTable,
    efficiencies: &[f64; 4],
) -> Result<CountsTable, TomographyError> {
    if let Some(&e) = efficiencies.iter().find(|&&e| !(e > 0.0)) {
        return Err(TomographyError::NonPositiveEfficiency(e));
    }
    let mut out = table.clone();
    for s in out.settings.iter_mut() {
        for (k, c) in s.counts.iter_mut().enumerate() {
            *c /= pattern_efficiency(k, efficiencies);
        }
    }
    Ok(out)
}
