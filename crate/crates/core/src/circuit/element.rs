use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CircuitError;
use crate::fock::ModeUnitary;

/// `U_DC(R) = [[√R, i√(1−R)], [i√(1−R), √R]]`.
pub fn dc_unitary(reflectivity: f64) -> Result<Matrix2<Complex64>, CircuitError> {
    check_reflectivity(reflectivity)?;
    let bar = Complex64::new(reflectivity.sqrt(), 0.0);
    let cross = Complex64::new(0.0, (1.0 - reflectivity).sqrt());
    Ok(Matrix2::new(bar, cross, cross, bar))
}

pub(crate) fn check_reflectivity(r: f64) -> Result<(), CircuitError> {
    if !(0.0..=1.0).contains(&r) {
        return Err(CircuitError::ReflectivityOutOfRange(r));
    }
    Ok(())
}

/// Diagonal unitary with `e^{iφ}` on each shifter mode and 1 elsewhere.
pub fn phase_layer_unitary(
    modes: usize,
    shifter_modes: &[usize],
    phases: &[f64],
) -> Result<ModeUnitary, CircuitError> {
    if shifter_modes.len() != phases.len() {
        return Err(CircuitError::Invalid(format!(
            "{} shifter modes but {} phases",
            shifter_modes.len(),
            phases.len()
        )));
    }
    let mut m = DMatrix::identity(modes, modes);
    for (&mode, &phi) in shifter_modes.iter().zip(phases) {
        if mode >= modes {
            return Err(CircuitError::ModeOutOfRange { mode, modes });
        }
        m[(mode, mode)] *= Complex64::from_polar(1.0, phi);
    }
    Ok(ModeUnitary::from_matrix_unchecked(m))
}

/// Cross-port transmittance `|U[1][0]|²` of `U_DC(R₂)·P(θ)·U_DC(R₁)`, with the
/// internal phase on the first arm.
pub fn mzi_transmittance(r1: f64, r2: f64, theta: f64) -> Result<f64, CircuitError> {
    let m = mzi_unitary(r1, r2, theta)?;
    Ok(m[(1, 0)].norm_sqr())
}

pub fn mzi_unitary(r1: f64, r2: f64, theta: f64) -> Result<Matrix2<Complex64>, CircuitError> {
    let p = Matrix2::new(
        Complex64::from_polar(1.0, theta),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    );
    Ok(dc_unitary(r2)? * p * dc_unitary(r1)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ElementKind {
    /// Directional coupler on an adjacent mode pair.
    DirectionalCoupler { modes: [usize; 2], reflectivity: f64 },
    /// Tunable phase on one mode; `phase` is the value used when no setting overrides it.
    PhaseShifter {
        id: String,
        mode: usize,
        #[serde(default)]
        phase: f64,
    },
    /// Ideal lossless waveguide crossing (mode swap).
    Crosser { modes: [usize; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitElement {
    #[serde(flatten)]
    pub kind: ElementKind,
    pub layer: usize,
}

impl CircuitElement {
    pub fn dc(a: usize, b: usize, reflectivity: f64, layer: usize) -> Self {
        Self {
            kind: ElementKind::DirectionalCoupler {
                modes: [a, b],
                reflectivity,
            },
            layer,
        }
    }

    pub fn phase(id: impl Into<String>, mode: usize, phase: f64, layer: usize) -> Self {
        Self {
            kind: ElementKind::PhaseShifter {
                id: id.into(),
                mode,
                phase,
            },
            layer,
        }
    }

    pub fn crosser(a: usize, b: usize, layer: usize) -> Self {
        Self {
            kind: ElementKind::Crosser { modes: [a, b] },
            layer,
        }
    }

    pub(crate) fn validate(&self, modes: usize) -> Result<(), CircuitError> {
        let in_range = |mode: usize| {
            if mode >= modes {
                Err(CircuitError::ModeOutOfRange { mode, modes })
            } else {
                Ok(())
            }
        };
        match &self.kind {
            ElementKind::DirectionalCoupler {
                modes: [a, b],
                reflectivity,
            } => {
                in_range(*a)?;
                in_range(*b)?;
                if a.abs_diff(*b) != 1 {
                    return Err(CircuitError::Invalid(format!(
                        "directional coupler on non-adjacent modes ({a}, {b})"
                    )));
                }
                check_reflectivity(*reflectivity)
            }
            ElementKind::PhaseShifter { mode, phase, .. } => {
                in_range(*mode)?;
                if !phase.is_finite() {
                    return Err(CircuitError::Invalid(format!("non-finite phase {phase}")));
                }
                Ok(())
            }
            ElementKind::Crosser { modes: [a, b] } => {
                in_range(*a)?;
                in_range(*b)?;
                if a == b {
                    return Err(CircuitError::Invalid(format!("crosser on a single mode {a}")));
                }
                Ok(())
            }
        }
    }

    /// Left-multiplies `u` (rows are output modes) by this element's mode transform.
    pub(crate) fn apply_left(&self, u: &mut DMatrix<Complex64>, phase: f64) {
        match &self.kind {
            ElementKind::DirectionalCoupler {
                modes: [a, b],
                reflectivity,
            } => {
                let (a, b) = (*a.min(b), *a.max(b));
                let bar = reflectivity.sqrt();
                let cross = Complex64::new(0.0, (1.0 - reflectivity).sqrt());
                for c in 0..u.ncols() {
                    let (x, y) = (u[(a, c)], u[(b, c)]);
                    u[(a, c)] = x * bar + cross * y;
                    u[(b, c)] = cross * x + y * bar;
                }
            }
            ElementKind::PhaseShifter { mode, .. } => {
                let f = Complex64::from_polar(1.0, phase);
                for c in 0..u.ncols() {
                    u[(*mode, c)] *= f;
                }
            }
            ElementKind::Crosser { modes: [a, b] } => u.swap_rows(*a, *b),
        }
    }
}
