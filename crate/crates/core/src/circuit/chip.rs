//! Parametric model of the five-mode programmable chip.
//!
//! The chip is a product of mixing and phase layers, `U = M4·P3·M3·P2·M2·P1·M1`:
//!
//! | layer | content |
//! |-------|---------|
//! | M1 | DC0 on (0,1), DC1 on (3,4) |
//! | P1 | `theta_pi2` on mode 0, `theta_alpha` on mode 3 |
//! | M2 | DC2 on (1,2), DC3 on (3,4); then DC4 on (0,1), DC5 on (2,3); then crossers (1,2), (3,4) |
//! | P2 | `phi1` on mode 0, `phi2` on mode 2 |
//! | M3 | DC6 on (0,1), DC7 on (2,3) |
//! | P3 | `theta1` on mode 0, `theta2` on mode 2 |
//! | M4 | DC8 on (0,1), DC9 on (2,3) |
//!
//! M1 through M2 form the heralded generation core; P2 through M4 are the two
//! tomography MZIs acting on the dual-rail qubits (modes 0,1) and (2,3). Mode 4
//! carries the herald.
//!
//! Phases follow `φ = φ0 + A·x²` per phase layer, with `x` the two heater
//! currents of that layer. Thirty-three trainable parameters in total.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::element::{check_reflectivity, CircuitElement};
use super::netlist::Netlist;
use super::CircuitError;
use crate::fock::ModeUnitary;

pub const CHIP_MODEL_SCHEMA: &str = "photonchip.chip-model/v1";
pub const CHIP_MODES: usize = 5;
pub const NUM_DCS: usize = 10;
pub const NUM_PHASE_LAYERS: usize = 3;
pub const NUM_SHIFTERS: usize = 6;
pub const NUM_PARAMETERS: usize = NUM_DCS + 4 * NUM_PHASE_LAYERS + NUM_SHIFTERS + CHIP_MODES;
/// Upper end of the heater current sweep, mA.
pub const MAX_CURRENT_MA: f64 = 19.5;
/// Herald mode of the five-mode chip.
pub const HERALD_MODE: usize = 4;

/// Mode pair (upper index first) of each directional coupler.
pub const DC_MODES: [(usize, usize); NUM_DCS] = [
    (0, 1),
    (3, 4),
    (1, 2),
    (3, 4),
    (0, 1),
    (2, 3),
    (0, 1),
    (2, 3),
    (0, 1),
    (2, 3),
];

/// Nominal design reflectivities: balanced couplers plus one 1/3 coupler in the tritter.
pub const NOMINAL_REFLECTIVITIES: [f64; NUM_DCS] = [
    0.5,
    0.5,
    1.0 / 3.0,
    0.5,
    0.5,
    0.5,
    0.5,
    0.5,
    0.5,
    0.5,
];

/// Shifter modes per phase layer.
pub const PHASE_MODES: [[usize; 2]; NUM_PHASE_LAYERS] = [[0, 3], [0, 2], [0, 2]];

/// Phase-shifter ids in the order `[θ_π/2, θ_α, φ1, φ2, θ1, θ2]`.
pub const SHIFTER_IDS: [&str; NUM_SHIFTERS] =
    ["theta_pi2", "theta_alpha", "phi1", "phi2", "theta1", "theta2"];

/// Propagation-ordered construction of the chip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ChipStep {
    Dc(usize),
    Phase { layer: usize, slot: usize },
    Swap(usize, usize),
}

pub(crate) const CHIP_STEPS: [ChipStep; 18] = [
    ChipStep::Dc(0),
    ChipStep::Dc(1),
    ChipStep::Phase { layer: 0, slot: 0 },
    ChipStep::Phase { layer: 0, slot: 1 },
    ChipStep::Dc(2),
    ChipStep::Dc(3),
    ChipStep::Dc(4),
    ChipStep::Dc(5),
    ChipStep::Swap(1, 2),
    ChipStep::Swap(3, 4),
    ChipStep::Phase { layer: 1, slot: 0 },
    ChipStep::Phase { layer: 1, slot: 1 },
    ChipStep::Dc(6),
    ChipStep::Dc(7),
    ChipStep::Phase { layer: 2, slot: 0 },
    ChipStep::Phase { layer: 2, slot: 1 },
    ChipStep::Dc(8),
    ChipStep::Dc(9),
];

/// Number of leading steps that make up the generation core.
pub(crate) const GENERATION_STEPS: usize = 10;

/// Mixing-layer index (M1 = 0 … M4 = 3) of each coupler, for netlist layer metadata.
fn dc_layer(dc: usize) -> usize {
    match dc {
        0 | 1 => 0,
        2..=5 => 2,
        6 | 7 => 4,
        _ => 6,
    }
}

/// Heater currents in mA, one per phase shifter, ordered like [`SHIFTER_IDS`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; NUM_SHIFTERS]", into = "[f64; NUM_SHIFTERS]")]
pub struct CurrentSetting([f64; NUM_SHIFTERS]);

impl CurrentSetting {
    pub fn new(currents: [f64; NUM_SHIFTERS]) -> Result<Self, CircuitError> {
        for &x in &currents {
            if !(0.0..=MAX_CURRENT_MA).contains(&x) {
                return Err(CircuitError::CurrentOutOfRange(x));
            }
        }
        Ok(Self(currents))
    }

    pub fn zero() -> Self {
        Self([0.0; NUM_SHIFTERS])
    }

    pub fn currents(&self) -> &[f64; NUM_SHIFTERS] {
        &self.0
    }

    pub fn layer(&self, layer: usize) -> [f64; 2] {
        [self.0[2 * layer], self.0[2 * layer + 1]]
    }
}

impl TryFrom<[f64; NUM_SHIFTERS]> for CurrentSetting {
    type Error = CircuitError;

    fn try_from(value: [f64; NUM_SHIFTERS]) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<CurrentSetting> for [f64; NUM_SHIFTERS] {
    fn from(value: CurrentSetting) -> Self {
        value.0
    }
}

/// Phases in rad for all six shifters, ordered like [`SHIFTER_IDS`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChipPhases(pub [f64; NUM_SHIFTERS]);

impl ChipPhases {
    pub fn generation(&self) -> (f64, f64) {
        (self.0[0], self.0[1])
    }

    pub fn with_generation(mut self, theta_pi2: f64, theta_alpha: f64) -> Self {
        self.0[0] = theta_pi2;
        self.0[1] = theta_alpha;
        self
    }

    pub fn with_measurement(mut self, phi1: f64, theta1: f64, phi2: f64, theta2: f64) -> Self {
        self.0[2] = phi1;
        self.0[3] = phi2;
        self.0[4] = theta1;
        self.0[5] = theta2;
        self
    }

    pub fn layer(&self, layer: usize) -> [f64; 2] {
        [self.0[2 * layer], self.0[2 * layer + 1]]
    }
}

/// Trainable parameter set of the five-mode chip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChipModelParams {
    pub schema: String,
    /// One per directional coupler, in [`DC_MODES`] order.
    pub reflectivities: [f64; NUM_DCS],
    /// Crosstalk matrices `A_1..A_3` in rad/mA².
    pub crosstalk: [[[f64; 2]; 2]; NUM_PHASE_LAYERS],
    /// Zero-current phases `φ0` per layer, rad.
    pub initial_phases: [[f64; 2]; NUM_PHASE_LAYERS],
    /// Relative output-channel efficiencies.
    pub output_efficiencies: [f64; CHIP_MODES],
}

/// Initial crosstalk guess used to seed calibration, rad/mA².
pub const INITIAL_CROSSTALK: [[f64; 2]; 2] = [[2.14e-2, 0.53e-2], [0.53e-2, 2.14e-2]];

impl ChipModelParams {
    /// Nominal couplers, zero initial phases, unit efficiencies and the default
    /// crosstalk guess. This is also the calibration starting point.
    pub fn ideal() -> Self {
        Self {
            schema: CHIP_MODEL_SCHEMA.to_string(),
            reflectivities: NOMINAL_REFLECTIVITIES,
            crosstalk: [INITIAL_CROSSTALK; NUM_PHASE_LAYERS],
            initial_phases: [[0.0; 2]; NUM_PHASE_LAYERS],
            output_efficiencies: [1.0; CHIP_MODES],
        }
    }

    /// Calibration starting point: every coupler at 0.5.
    pub fn calibration_start() -> Self {
        Self {
            reflectivities: [0.5; NUM_DCS],
            ..Self::ideal()
        }
    }

    /// Nominal couplers with the published crosstalk matrices, zero-current phases
    /// and output efficiencies of the fabricated chip.
    pub fn reference_fit() -> Self {
        Self {
            schema: CHIP_MODEL_SCHEMA.to_string(),
            reflectivities: NOMINAL_REFLECTIVITIES,
            crosstalk: [
                [[2.24e-2, 0.53e-2], [0.40e-2, 2.03e-2]],
                [[1.71e-2, 0.82e-2], [0.53e-2, 3.57e-2]],
                [[3.06e-2, 0.78e-2], [0.93e-2, 2.62e-2]],
            ],
            initial_phases: [[-1.71, 0.21], [1.36, -3.01], [-0.80, 0.17]],
            output_efficiencies: [0.69, 1.00, 0.59, 0.94, 0.76],
        }
    }

    /// Same parameters with each reflectivity shifted by `offsets`, clamped to [0, 1].
    pub fn with_reflectivity_offsets(&self, offsets: &[f64; NUM_DCS]) -> Self {
        let mut p = self.clone();
        for (r, d) in p.reflectivities.iter_mut().zip(offsets) {
            *r = (*r + d).clamp(0.0, 1.0);
        }
        p
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.schema != CHIP_MODEL_SCHEMA {
            return Err(CircuitError::Schema {
                found: self.schema.clone(),
                expected: CHIP_MODEL_SCHEMA,
            });
        }
        for &r in &self.reflectivities {
            check_reflectivity(r)?;
        }
        for &t in &self.output_efficiencies {
            if !(t > 0.0 && t <= 1.0 + 1e-12) {
                return Err(CircuitError::Invalid(format!(
                    "output efficiency {t} outside (0, 1]"
                )));
            }
        }
        let max = self.output_efficiencies.iter().cloned().fold(0.0, f64::max);
        if (max - 1.0).abs() > 1e-9 {
            return Err(CircuitError::Invalid(format!(
                "output efficiencies must be max-normalized to 1 (max is {max})"
            )));
        }
        let all_finite = self
            .crosstalk
            .iter()
            .flatten()
            .flatten()
            .chain(self.initial_phases.iter().flatten())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(CircuitError::Invalid("non-finite crosstalk or phase".into()));
        }
        Ok(())
    }

    /// Rescales the output efficiencies so their maximum is 1.
    pub fn normalize_efficiencies(&mut self) {
        let max = self.output_efficiencies.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            for t in self.output_efficiencies.iter_mut() {
                *t /= max;
            }
        }
    }

    /// Flattened parameters: reflectivities, crosstalk (row-major per layer),
    /// initial phases, output efficiencies.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(NUM_PARAMETERS);
        v.extend_from_slice(&self.reflectivities);
        for a in &self.crosstalk {
            v.extend(a.iter().flatten());
        }
        v.extend(self.initial_phases.iter().flatten());
        v.extend_from_slice(&self.output_efficiencies);
        v
    }

    pub fn from_vector(v: &[f64]) -> Self {
        assert_eq!(v.len(), NUM_PARAMETERS);
        let mut p = Self::ideal();
        p.reflectivities.copy_from_slice(&v[..NUM_DCS]);
        let mut k = NUM_DCS;
        for a in p.crosstalk.iter_mut() {
            for row in a.iter_mut() {
                for e in row.iter_mut() {
                    *e = v[k];
                    k += 1;
                }
            }
        }
        for layer in p.initial_phases.iter_mut() {
            for e in layer.iter_mut() {
                *e = v[k];
                k += 1;
            }
        }
        p.output_efficiencies.copy_from_slice(&v[k..]);
        p
    }

    /// `φ = φ0 + A·(x²)` for one phase layer.
    pub fn currents_to_phases(&self, layer: usize, currents: &CurrentSetting) -> [f64; 2] {
        let x = currents.layer(layer);
        let sq = [x[0] * x[0], x[1] * x[1]];
        let a = &self.crosstalk[layer];
        let phi0 = &self.initial_phases[layer];
        [
            phi0[0] + a[0][0] * sq[0] + a[0][1] * sq[1],
            phi0[1] + a[1][0] * sq[0] + a[1][1] * sq[1],
        ]
    }

    pub fn phases_for_currents(&self, currents: &CurrentSetting) -> ChipPhases {
        let mut out = [0.0; NUM_SHIFTERS];
        for layer in 0..NUM_PHASE_LAYERS {
            let p = self.currents_to_phases(layer, currents);
            out[2 * layer] = p[0];
            out[2 * layer + 1] = p[1];
        }
        ChipPhases(out)
    }

    fn apply_steps(&self, steps: &[ChipStep], phases: &ChipPhases, u: &mut DMatrix<Complex64>) {
        for step in steps {
            apply_step(*step, &self.reflectivities, phases, u);
        }
    }

    /// Full five-mode unitary at the given shifter phases.
    pub fn unitary(&self, phases: &ChipPhases) -> ModeUnitary {
        let mut u = DMatrix::identity(CHIP_MODES, CHIP_MODES);
        self.apply_steps(&CHIP_STEPS, phases, &mut u);
        ModeUnitary::from_matrix_unchecked(u)
    }

    pub fn unitary_for_currents(&self, currents: &CurrentSetting) -> ModeUnitary {
        self.unitary(&self.phases_for_currents(currents))
    }

    /// Unitary of the generation core (M1, P1, M2) alone.
    pub fn generation_unitary(&self, theta_pi2: f64, theta_alpha: f64) -> ModeUnitary {
        let phases = ChipPhases::default().with_generation(theta_pi2, theta_alpha);
        let mut u = DMatrix::identity(CHIP_MODES, CHIP_MODES);
        self.apply_steps(&CHIP_STEPS[..GENERATION_STEPS], &phases, &mut u);
        ModeUnitary::from_matrix_unchecked(u)
    }

    /// 2×2 transforms of the two output MZIs (qubit A on modes 0,1; qubit B on 2,3),
    /// including the preceding `φ` shifters.
    pub fn measurement_unitaries(&self, phases: &ChipPhases) -> [nalgebra::Matrix2<Complex64>; 2] {
        let mut u = DMatrix::identity(CHIP_MODES, CHIP_MODES);
        self.apply_steps(&CHIP_STEPS[GENERATION_STEPS..], phases, &mut u);
        let block = |o: usize| {
            nalgebra::Matrix2::new(u[(o, o)], u[(o, o + 1)], u[(o + 1, o)], u[(o + 1, o + 1)])
        };
        [block(0), block(2)]
    }

    /// Single-photon output distribution for light injected at `port`, weighted by
    /// the output efficiencies and renormalized.
    pub fn predict(&self, port: usize, currents: &CurrentSetting) -> [f64; CHIP_MODES] {
        let u = self.unitary_for_currents(currents);
        let mut p = [0.0; CHIP_MODES];
        for (j, pj) in p.iter_mut().enumerate() {
            *pj = self.output_efficiencies[j] * u.entry(j, port).norm_sqr();
        }
        let total: f64 = p.iter().sum();
        for pj in p.iter_mut() {
            *pj /= total;
        }
        p
    }

    /// Equivalent netlist with phase shifters defaulting to `phases`.
    pub fn netlist(&self, phases: &ChipPhases) -> Netlist {
        let elements: Vec<CircuitElement> = CHIP_STEPS
            .iter()
            .map(|step| step_element(*step, &self.reflectivities, phases))
            .collect();
        let generation: Vec<usize> = (0..GENERATION_STEPS).collect();
        let tomography: Vec<usize> = (GENERATION_STEPS..CHIP_STEPS.len()).collect();
        Netlist::new(CHIP_MODES, elements)
            .and_then(|n| n.with_role("generation", generation))
            .and_then(|n| n.with_role("tomography", tomography))
            .expect("chip netlist is valid")
            .named("chip5")
    }

    /// Netlist of the generation core only.
    pub fn generation_netlist(&self, theta_pi2: f64, theta_alpha: f64) -> Netlist {
        let phases = ChipPhases::default().with_generation(theta_pi2, theta_alpha);
        let elements = CHIP_STEPS[..GENERATION_STEPS]
            .iter()
            .map(|step| step_element(*step, &self.reflectivities, &phases))
            .collect();
        Netlist::new(CHIP_MODES, elements)
            .expect("generation netlist is valid")
            .named("generation-core")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("chip model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let p: ChipModelParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, CircuitError> {
        let text = std::fs::read_to_string(path).map_err(|e| CircuitError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), CircuitError> {
        std::fs::write(path, self.to_json()).map_err(|e| CircuitError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

fn step_element(step: ChipStep, reflectivities: &[f64; NUM_DCS], phases: &ChipPhases) -> CircuitElement {
    match step {
        ChipStep::Dc(k) => {
            let (a, b) = DC_MODES[k];
            CircuitElement::dc(a, b, reflectivities[k], dc_layer(k))
        }
        ChipStep::Phase { layer, slot } => CircuitElement::phase(
            SHIFTER_IDS[2 * layer + slot],
            PHASE_MODES[layer][slot],
            phases.0[2 * layer + slot],
            2 * layer + 1,
        ),
        ChipStep::Swap(a, b) => CircuitElement::crosser(a, b, 2),
    }
}

/// Left-multiplies `u` by one chip step.
pub(crate) fn apply_step(
    step: ChipStep,
    reflectivities: &[f64; NUM_DCS],
    phases: &ChipPhases,
    u: &mut DMatrix<Complex64>,
) {
    match step {
        ChipStep::Dc(k) => {
            let (a, b) = DC_MODES[k];
            let bar = reflectivities[k].sqrt();
            let cross = Complex64::new(0.0, (1.0 - reflectivities[k]).sqrt());
            for c in 0..u.ncols() {
                let (x, y) = (u[(a, c)], u[(b, c)]);
                u[(a, c)] = x * bar + cross * y;
                u[(b, c)] = cross * x + y * bar;
            }
        }
        ChipStep::Phase { layer, slot } => {
            let mode = PHASE_MODES[layer][slot];
            let f = Complex64::from_polar(1.0, phases.0[2 * layer + slot]);
            for c in 0..u.ncols() {
                u[(mode, c)] *= f;
            }
        }
        ChipStep::Swap(a, b) => u.swap_rows(a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::netlist::PhaseSettings;
    use crate::fock::UNITARITY_TOLERANCE;
    use std::f64::consts::PI;

    #[test]
    fn parameter_count() {
        assert_eq!(NUM_PARAMETERS, 33);
        let p = ChipModelParams::reference_fit();
        let v = p.to_vector();
        assert_eq!(v.len(), 33);
        assert_eq!(ChipModelParams::from_vector(&v), p);
    }

    #[test]
    fn zero_current_gives_initial_phases() {
        let p = ChipModelParams::reference_fit();
        for layer in 0..3 {
            assert_eq!(
                p.currents_to_phases(layer, &CurrentSetting::zero()),
                p.initial_phases[layer]
            );
        }
        assert_eq!(p.currents_to_phases(0, &CurrentSetting::zero()), [-1.71, 0.21]);
    }

    #[test]
    fn initial_crosstalk_example() {
        let p = ChipModelParams::ideal();
        let x = CurrentSetting::new([10.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let phi = p.currents_to_phases(0, &x);
        assert!((phi[0] - 2.14).abs() < 1e-12);
        assert!((phi[1] - 0.53).abs() < 1e-12);
    }

    #[test]
    fn phase_is_quadratic_in_current() {
        let p = ChipModelParams::reference_fit();
        for layer in 0..3 {
            let mut x = [0.0; 6];
            x[2 * layer] = 4.3;
            x[2 * layer + 1] = 2.1;
            let mut x2 = x;
            for v in x2.iter_mut() {
                *v *= 2.0;
            }
            let base = p.currents_to_phases(layer, &CurrentSetting::zero());
            let one = p.currents_to_phases(layer, &CurrentSetting::new(x).unwrap());
            let two = p.currents_to_phases(layer, &CurrentSetting::new(x2).unwrap());
            for k in 0..2 {
                let ratio = (two[k] - base[k]) / (one[k] - base[k]);
                assert!((ratio - 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn current_range_is_enforced() {
        assert!(CurrentSetting::new([0.0, 19.5, 0.0, 0.0, 0.0, 0.0]).is_ok());
        assert!(matches!(
            CurrentSetting::new([0.0, 19.6, 0.0, 0.0, 0.0, 0.0]),
            Err(CircuitError::CurrentOutOfRange(_))
        ));
        assert!(CurrentSetting::new([-0.1, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn unitary_matches_netlist_composition() {
        let p = ChipModelParams::reference_fit().with_reflectivity_offsets(&[
            0.03, -0.02, 0.01, 0.0, -0.04, 0.02, 0.05, -0.05, 0.01, 0.0,
        ]);
        let phases = ChipPhases([0.3, -1.2, 2.0, 0.7, -0.4, 1.9]);
        let u = p.unitary(&phases);
        assert!(u.unitarity_defect() < UNITARITY_TOLERANCE);
        let v = p.netlist(&phases).compose(&PhaseSettings::new()).unwrap();
        assert!(crate::linalg::max_abs_diff(u.matrix(), v.matrix()) < 1e-14);

        let g = p.generation_unitary(0.3, -1.2);
        let h = p.netlist(&phases).role("generation").unwrap().compose(&PhaseSettings::new()).unwrap();
        assert!(crate::linalg::max_abs_diff(g.matrix(), h.matrix()) < 1e-14);
    }

    #[test]
    fn measurement_blocks_are_isolated() {
        let p = ChipModelParams::ideal();
        let phases = ChipPhases::default().with_measurement(0.2, PI / 2.0, -0.3, PI);
        let full = p.unitary(&phases);
        let gen = p.generation_unitary(0.0, 0.0);
        let [a, b] = p.measurement_unitaries(&phases);
        // full = tomography · generation, with the tomography part block diagonal.
        let mut t = DMatrix::identity(5, 5);
        for i in 0..2 {
            for j in 0..2 {
                t[(i, j)] = a[(i, j)];
                t[(2 + i, 2 + j)] = b[(i, j)];
            }
        }
        let expected = t * gen.matrix();
        assert!(crate::linalg::max_abs_diff(full.matrix(), &expected) < 1e-14);
    }

    #[test]
    fn predictions_are_distributions() {
        let p = ChipModelParams::reference_fit();
        let x = CurrentSetting::new([3.0, 12.0, 0.0, 19.5, 7.0, 1.0]).unwrap();
        for port in 0..5 {
            let d = p.predict(port, &x);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn json_round_trip() {
        let p = ChipModelParams::reference_fit();
        let text = p.to_json();
        let q = ChipModelParams::from_json(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.to_json(), text);
    }

    #[test]
    fn validation() {
        let mut p = ChipModelParams::ideal();
        p.output_efficiencies = [0.5; 5];
        assert!(p.validate().is_err());
        p.normalize_efficiencies();
        assert!(p.validate().is_ok());
        p.reflectivities[3] = 1.1;
        assert!(p.validate().is_err());
    }
}
