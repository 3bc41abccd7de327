//! Heralded two-qubit dual-rail state generation.
//!
//! The five-mode generation circuit takes `|11101⟩` and, conditioned on two
//! photons in mode 4, leaves one photon in modes (0,1) and one in (2,3):
//! `cos α |00⟩ + sin α |11⟩` with probability `1/(6(1 + sin²α))`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::chip::{ChipModelParams, HERALD_MODE, NUM_DCS};
use crate::circuit::{CircuitError, Netlist, PhaseSettings};
use crate::fock::{self, FockError, FockState, ModeUnitary};

/// Dual-rail output patterns on modes 0..4 in logical order |00⟩, |01⟩, |10⟩, |11⟩.
pub const LOGICAL_PATTERNS: [[usize; 4]; 4] = [[1, 0, 1, 0], [1, 0, 0, 1], [0, 1, 1, 0], [0, 1, 0, 1]];

/// Leakage weight above which the strict variant refuses the state.
pub const LEAKAGE_TOLERANCE: f64 = 1e-9;
/// Coupler reflectivity offsets (±0.05) of the fixture chip used to study
/// state-preparation and measurement errors.
pub const SPAM_REFLECTIVITY_OFFSETS: [f64; NUM_DCS] = [0.05, 0.05, -0.05, -0.05, 0.05, -0.05, 0.05, -0.05, -0.05, 0.05];

const GAUGE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StateGenError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("alpha {0} outside [0, π/4]")]
    AlphaOutOfRange(f64),
    #[error("target transmittance {target} outside MZI range [{min}, {max}]")]
    TargetOutsideMziRange { target: f64, min: f64, max: f64 },
    #[error("non-dual-rail leakage {leakage:.3e} in the heralded state")]
    Leakage { leakage: f64, state: Box<HeraldedTwoQubitState> },
    #[error("generation circuit must have 5 modes, got {0}")]
    WrongModeCount(usize),
    #[error("phase optimization did not converge: {reason} (best fidelity {:.6})", best.fidelity)]
    NotConverged { reason: String, best: Box<GenerationOptimum> },
}

/// `T(α) = 1/(1 + 2 tan²α)`.
pub fn target_transmittance(alpha: f64) -> f64 {
    let t = alpha.tan();
    1.0 / (1.0 + 2.0 * t * t)
}

/// `p(α) = 1/(6(1 + sin²α))`.
pub fn ideal_success_probability(alpha: f64) -> f64 {
    let s = alpha.sin();
    1.0 / (6.0 * (1.0 + s * s))
}

/// `cos α |00⟩ + sin α |11⟩`.
pub fn target_state(alpha: f64) -> [Complex64; 4] {
    [
        Complex64::new(alpha.cos(), 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(alpha.sin(), 0.0),
    ]
}

/// `|⟨a|b⟩|²` for normalized four-component states.
pub fn state_fidelity(a: &[Complex64; 4], b: &[Complex64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

fn check_alpha(alpha: f64) -> Result<(), StateGenError> {
    if !(-1e-12..=FRAC_PI_4 + 1e-12).contains(&alpha) {
        return Err(StateGenError::AlphaOutOfRange(alpha));
    }
    Ok(())
}

/// Internal MZI phase giving transmittance `T(α)` for couplers `r1`, `r2`,
/// on the branch (−π, 0].
pub fn solve_theta_alpha(alpha: f64, r1: f64, r2: f64) -> Result<f64, StateGenError> {
    check_alpha(alpha)?;
    crate::circuit::dc_unitary(r1)?;
    crate::circuit::dc_unitary(r2)?;
    let target = target_transmittance(alpha);
    // T(θ) = a + b cos θ
    let a = r1 * (1.0 - r2) + r2 * (1.0 - r1);
    let b = 2.0 * (r1 * r2 * (1.0 - r1) * (1.0 - r2)).sqrt();
    let (min, max) = (a - b, a + b);
    if target < min - 1e-12 || target > max + 1e-12 || b == 0.0 {
        return Err(StateGenError::TargetOutsideMziRange { target, min, max });
    }
    let c = ((target - a) / b).clamp(-1.0, 1.0);
    Ok(-c.acos() + 0.0)
}

/// Phases `(θ_π/2, θ_α)` for a chip with nominal balanced couplers.
pub fn nominal_generation_phases(alpha: f64) -> Result<(f64, f64), StateGenError> {
    Ok((FRAC_PI_2, solve_theta_alpha(alpha, 0.5, 0.5)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeraldedTwoQubitState {
    /// Logical amplitudes |00⟩, |01⟩, |10⟩, |11⟩, normalized within the dual-rail
    /// sector, with the first non-negligible amplitude made real and non-negative.
    pub amplitudes: [Complex64; 4],
    /// Probability of the herald and a dual-rail output, before any detector
    /// resolution factor.
    pub success_probability: f64,
    /// Probability of the herald pattern alone.
    pub herald_probability: f64,
    /// Weight of the heralded state outside the dual-rail sector.
    pub leakage: f64,
    pub herald: String,
}

impl HeraldedTwoQubitState {
    pub fn fidelity_to(&self, target: &[Complex64; 4]) -> f64 {
        state_fidelity(&self.amplitudes, target)
    }

    pub fn density_matrix(&self) -> nalgebra::DMatrix<Complex64> {
        let v = nalgebra::DVector::from_row_slice(&self.amplitudes);
        &v * v.adjoint()
    }
}

/// The canonical input `|11101⟩`.
pub fn default_input() -> FockState {
    FockState::new(vec![1, 1, 1, 0, 1]).expect("five modes")
}

/// Heralded state from a five-mode unitary; errors if leakage exceeds [`LEAKAGE_TOLERANCE`].
pub fn heralded_state_from_unitary(
    u: &ModeUnitary,
    input: &FockState,
) -> Result<HeraldedTwoQubitState, StateGenError> {
    let state = postselected_state_from_unitary(u, input)?;
    if state.leakage > LEAKAGE_TOLERANCE {
        return Err(StateGenError::Leakage {
            leakage: state.leakage,
            state: Box::new(state),
        });
    }
    Ok(state)
}

/// Like [`heralded_state_from_unitary`] but always renormalizes within the
/// dual-rail sector and records the leakage instead of failing on it.
pub fn postselected_state_from_unitary(
    u: &ModeUnitary,
    input: &FockState,
) -> Result<HeraldedTwoQubitState, StateGenError> {
    if u.modes() != 5 {
        return Err(StateGenError::WrongModeCount(u.modes()));
    }
    let projection = fock::project_modes(u, input, &[HERALD_MODE], &[2])?;
    let mut amplitudes = [Complex64::new(0.0, 0.0); 4];
    for (k, pattern) in LOGICAL_PATTERNS.iter().enumerate() {
        let state = FockState::new(pattern.to_vec()).expect("non-empty");
        amplitudes[k] = projection.amplitude(&state);
    }
    let dual_rail: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let leakage = (1.0 - dual_rail).max(0.0);
    if dual_rail <= fock::IMPOSSIBLE_HERALD_THRESHOLD {
        return Err(FockError::ImpossibleHerald {
            probability: projection.probability * dual_rail,
        }
        .into());
    }
    let norm = dual_rail.sqrt();
    for a in amplitudes.iter_mut() {
        *a /= norm;
    }
    gauge(&mut amplitudes);
    Ok(HeraldedTwoQubitState {
        amplitudes,
        success_probability: projection.probability * dual_rail,
        herald_probability: projection.probability,
        leakage,
        herald: format!("{} photons in mode {HERALD_MODE}", 2),
    })
}

fn gauge(amplitudes: &mut [Complex64; 4]) {
    if let Some(lead) = amplitudes.iter().find(|a| a.norm() > GAUGE_THRESHOLD).copied() {
        let phase = lead.conj() / lead.norm();
        for a in amplitudes.iter_mut() {
            *a *= phase;
        }
    }
}

/// Heralded state of a netlist with the given phase settings.
pub fn heralded_state(
    netlist: &Netlist,
    phases: &PhaseSettings,
    input: &FockState,
) -> Result<HeraldedTwoQubitState, StateGenError> {
    let u = netlist.compose(phases)?;
    heralded_state_from_unitary(&u, input)
}

/// Heralded state of a netlist that carries `theta_pi2` and `theta_alpha` shifters,
/// set for entanglement parameter `alpha` with nominal balanced-coupler phases.
pub fn heralded_state_for_alpha(netlist: &Netlist, alpha: f64) -> Result<HeraldedTwoQubitState, StateGenError> {
    let (tp, ta) = nominal_generation_phases(alpha)?;
    let settings = PhaseSettings::new().with("theta_pi2", tp).with("theta_alpha", ta);
    heralded_state(netlist, &settings, &default_input())
}

/// Probability that `photons` photons entering cascade mode 0 end in distinct detectors.
pub fn pnr_resolve_probability(cascade: &Netlist, photons: usize) -> Result<f64, StateGenError> {
    if photons <= 1 {
        return Ok(1.0);
    }
    let u = cascade.compose(&PhaseSettings::new())?;
    let mut occ = vec![0; cascade.modes];
    occ[0] = photons;
    let input = FockState::new(occ)?;
    let dist = fock::output_distribution(&u, &input)?;
    Ok(dist
        .iter()
        .filter(|(s, _)| s.occupations().iter().all(|&k| k <= 1))
        .map(|(_, p)| p)
        .sum())
}

/// Single-photon amplitudes from cascade mode 0 to each detector.
pub fn cascade_amplitudes(cascade: &Netlist) -> Result<Vec<Complex64>, StateGenError> {
    let u = cascade.compose(&PhaseSettings::new())?;
    Ok((0..cascade.modes).map(|j| u.entry(j, 0)).collect())
}

/// `p(α) · pnr_factor`.
pub fn effective_success_probability(alpha: f64, pnr_factor: f64) -> Result<f64, StateGenError> {
    check_alpha(alpha)?;
    Ok(ideal_success_probability(alpha) * pnr_factor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOptimum {
    pub theta_pi2: f64,
    pub theta_alpha: f64,
    /// Model fidelity of the post-selected state against the target.
    pub fidelity: f64,
    pub state: HeraldedTwoQubitState,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Grid points per axis over (−π, π].
    pub grid_points: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evaluations: usize,
    /// Perturbation used to verify stationarity, rad.
    pub probe: f64,
    /// Largest fidelity gain a probe may find for the optimum to count as stationary.
    pub stationarity: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grid_points: 100,
            initial_step: PI / 100.0,
            min_step: 1e-9,
            max_evaluations: 50_000,
            probe: 1e-3,
            stationarity: 1e-4,
        }
    }
}

/// Fidelity of the model-predicted post-selected state at given generation phases.
pub fn model_fidelity(chip: &ChipModelParams, alpha: f64, theta_pi2: f64, theta_alpha: f64) -> Result<f64, StateGenError> {
    Ok(model_state(chip, theta_pi2, theta_alpha)?.fidelity_to(&target_state(alpha)))
}

pub fn model_state(chip: &ChipModelParams, theta_pi2: f64, theta_alpha: f64) -> Result<HeraldedTwoQubitState, StateGenError> {
    let u = chip.generation_unitary(theta_pi2, theta_alpha);
    postselected_state_from_unitary(&u, &default_input())
}

/// Maximizes the model fidelity against `cos α|00⟩ + sin α|11⟩` over
/// `(θ_π/2, θ_α)`: full grid, then compass-search refinement. Grid ties within
/// 1e-12 go to the lexicographically smallest phase pair.
pub fn optimize_generation_phases(
    chip: &ChipModelParams,
    alpha: f64,
    config: &OptimizerConfig,
) -> Result<GenerationOptimum, StateGenError> {
    check_alpha(alpha)?;
    let target = target_state(alpha);
    let evaluations = std::cell::Cell::new(0usize);
    let eval = |tp: f64, ta: f64| -> f64 {
        evaluations.set(evaluations.get() + 1);
        match model_state(chip, tp, ta) {
            Ok(s) => s.fidelity_to(&target),
            Err(_) => 0.0,
        }
    };

    let n = config.grid_points.max(1);
    let step = 2.0 * PI / n as f64;
    let axis: Vec<f64> = (1..=n).map(|k| -PI + k as f64 * step).collect();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &tp in &axis {
        for &ta in &axis {
            let f = eval(tp, ta);
            if f > best.0 + 1e-12 {
                best = (f, tp, ta);
            }
        }
    }

    let (mut f, mut x) = (best.0, [best.1, best.2]);
    let mut h = config.initial_step;
    let dirs = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
    while h > config.min_step {
        if evaluations.get() > config.max_evaluations {
            let state = model_state(chip, x[0], x[1])?;
            return Err(StateGenError::NotConverged {
                reason: format!("evaluation budget {} exhausted", config.max_evaluations),
                best: Box::new(GenerationOptimum {
                    theta_pi2: wrap(x[0]),
                    theta_alpha: wrap(x[1]),
                    fidelity: f,
                    state,
                    evaluations: evaluations.get(),
                }),
            });
        }
        let mut moved = false;
        for d in &dirs {
            let y = [x[0] + h * d[0], x[1] + h * d[1]];
            let g = eval(y[0], y[1]);
            if g > f {
                f = g;
                x = y;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }

    let x = [wrap(x[0]), wrap(x[1])];
    let state = model_state(chip, x[0], x[1])?;
    let optimum = GenerationOptimum {
        theta_pi2: x[0],
        theta_alpha: x[1],
        fidelity: f,
        state,
        evaluations: evaluations.get(),
    };
    for d in &dirs {
        let g = eval(x[0] + config.probe * d[0], x[1] + config.probe * d[1]);
        if g > f + config.stationarity {
            return Err(StateGenError::NotConverged {
                reason: format!("probe at distance {} improves fidelity by {:.3e}", config.probe, g - f),
                best: Box::new(optimum),
            });
        }
    }
    Ok(optimum)
}

/// Wraps into (−π, π].
pub fn wrap(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t <= -PI {
        t + 2.0 * PI
    } else {
        t
    }
}
