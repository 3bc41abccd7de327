//! Circuit elements, netlists and the parametric five-mode chip model.

pub mod bundled;
pub mod chip;
mod element;
mod netlist;

pub use chip::{ChipModelParams, ChipPhases, CurrentSetting};
pub use element::{
    dc_unitary, mzi_transmittance, mzi_unitary, phase_layer_unitary, CircuitElement, ElementKind,
};
pub use netlist::{Netlist, PhaseSettings, NETLIST_SCHEMA};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("reflectivity {0} outside [0, 1]")]
    ReflectivityOutOfRange(f64),
    #[error("current {0} mA outside [0, 19.5]")]
    CurrentOutOfRange(f64),
    #[error("mode {mode} out of range for {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("schema '{found}' does not match '{expected}'")]
    Schema { found: String, expected: &'static str },
    #[error("element {index}: {source}")]
    Element {
        index: usize,
        #[source]
        source: Box<CircuitError>,
    },
    #[error("duplicate phase shifter id '{0}'")]
    DuplicatePhaseShifter(String),
    #[error("unknown role '{0}'")]
    UnknownRole(String),
    #[error("unknown phase shifter '{0}'")]
    UnknownPhaseShifter(String),
    #[error("degenerate distribution: efficiency-weighted total is zero")]
    DegenerateDistribution,
    #[error("length mismatch: {0} entries vs {1} efficiencies")]
    LengthMismatch(usize, usize),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// `p̂_j ∝ T_j · p_j`, renormalized to sum to one.
pub fn apply_output_efficiencies(p: &[f64], efficiencies: &[f64]) -> Result<Vec<f64>, CircuitError> {
    rescale(p, efficiencies, |x, t| x * t)
}

/// Inverse of [`apply_output_efficiencies`]: divides by `T_j` and renormalizes.
pub fn remove_output_efficiencies(p: &[f64], efficiencies: &[f64]) -> Result<Vec<f64>, CircuitError> {
    if let Some(&t) = efficiencies.iter().find(|&&t| t <= 0.0) {
        return Err(CircuitError::Invalid(format!("efficiency {t} must be positive")));
    }
    rescale(p, efficiencies, |x, t| x / t)
}

fn rescale(p: &[f64], t: &[f64], f: impl Fn(f64, f64) -> f64) -> Result<Vec<f64>, CircuitError> {
    if p.len() != t.len() {
        return Err(CircuitError::LengthMismatch(p.len(), t.len()));
    }
    let out: Vec<f64> = p.iter().zip(t).map(|(&x, &t)| f(x, t)).collect();
    let total: f64 = out.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(CircuitError::DegenerateDistribution);
    }
    Ok(out.into_iter().map(|x| x / total).collect())
}
