//! Single-photon source metrology, imperfect-source simulation and rate budgets.

mod rates;

pub use rates::{
    four_photon_rate, fraction_curve, heralding_efficiency, separate_click_fraction, write_fraction_curve,
    FractionPoint, HeraldingEfficiency, RateBudget, RateEstimate, DEFAULT_PUMP_RATE_HZ,
};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::chip::{CHIP_MODES, HERALD_MODE};
use crate::circuit::{ChipModelParams, CircuitError};
use crate::fock::{self, FockError, FockState, ModeUnitary};
use crate::stategen::{StateGenError, LOGICAL_PATTERNS};
use crate::tomography::{TomographyError, TwoQubitDensityMatrix};

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    StateGen(#[from] StateGenError),
    #[error(transparent)]
    Tomography(#[from] TomographyError),
    #[error("herald never fires for this circuit and input")]
    NoHeraldedEvents,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Coincidence-histogram peak areas: central peak and its two neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakAreas {
    pub a_c: f64,
    pub a_l: f64,
    pub a_r: f64,
}

impl PeakAreas {
    pub fn new(a_c: f64, a_l: f64, a_r: f64) -> Result<Self, SourceError> {
        let areas = Self { a_c, a_l, a_r };
        areas.side_sum()?;
        Ok(areas)
    }

    fn side_sum(&self) -> Result<f64, SourceError> {
        if [self.a_c, self.a_l, self.a_r].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(SourceError::InvalidInput("peak areas must be finite and non-negative".into()));
        }
        let s = self.a_l + self.a_r;
        if s <= 0.0 {
            return Err(SourceError::InvalidInput("side peaks have zero total area".into()));
        }
        Ok(s)
    }

    /// `2A_c / (A_l + A_r)`.
    pub fn central_ratio(&self) -> Result<f64, SourceError> {
        Ok(2.0 * self.a_c / self.side_sum()?)
    }
}

/// `g²(0) = 2A_c / (A_l + A_r)`.
pub fn g2_from_areas(areas: &PeakAreas) -> Result<f64, SourceError> {
    areas.central_ratio()
}

/// `1 − 2A_c / (A_l + A_r)`. Negative values are returned unchanged.
pub fn hom_uncorrected(areas: &PeakAreas) -> Result<f64, SourceError> {
    Ok(1.0 - areas.central_ratio()?)
}

/// HOM visibility corrected for classical-interference defect `e`, source `g2`
/// and beam-splitter reflectivity `r`:
/// `(1/(1−e²))·(3g²/2 + k − k·2A_c/(A_l+A_r))` with `k = (R²+T²)/(2RT)`, `T = 1−R`.
pub fn hom_corrected(areas: &PeakAreas, e: f64, g2: f64, r: f64) -> Result<f64, SourceError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(SourceError::InvalidInput(format!("reflectivity {r} outside (0, 1)")));
    }
    if !(0.0..1.0).contains(&e) {
        return Err(SourceError::InvalidInput(format!("interference defect {e} outside [0, 1)")));
    }
    if !(g2 >= 0.0) {
        return Err(SourceError::InvalidInput(format!("g² {g2} must be non-negative")));
    }
    let t = 1.0 - r;
    let k = (r * r + t * t) / (2.0 * r * t);
    Ok((1.5 * g2 + k - k * areas.central_ratio()?) / (1.0 - e * e))
}

/// Partial distinguishability and multiphoton contamination of the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    /// Pairwise HOM visibility.
    pub indistinguishability: f64,
    pub g2: f64,
}

impl SourceModel {
    pub fn new(indistinguishability: f64, g2: f64) -> Result<Self, SourceError> {
        let m = Self { indistinguishability, g2 };
        m.validate()?;
        Ok(m)
    }

    pub fn perfect() -> Self {
        Self {
            indistinguishability: 1.0,
            g2: 0.0,
        }
    }

    /// Single effective V from measured pair visibilities (geometric mean).
    pub fn from_pair_visibilities(pairs: &[f64], g2: f64) -> Result<Self, SourceError> {
        if pairs.is_empty() {
            return Err(SourceError::InvalidInput("no pair visibilities".into()));
        }
        if let Some(v) = pairs.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(SourceError::InvalidInput(format!("visibility {v} outside [0, 1]")));
        }
        let v = pairs.iter().map(|v| v.ln()).sum::<f64>() / pairs.len() as f64;
        Self::new(v.exp(), g2)
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        if !(0.0..=1.0).contains(&self.indistinguishability) {
            return Err(SourceError::InvalidInput(format!(
                "indistinguishability {} outside [0, 1]",
                self.indistinguishability
            )));
        }
        if !(0.0..1.0).contains(&self.g2) {
            return Err(SourceError::InvalidInput(format!("g² {} outside [0, 1)", self.g2)));
        }
        Ok(())
    }

    /// Probability that a photon occupies the common internal mode, `√V`.
    pub fn common_weight(&self) -> f64 {
        self.indistinguishability.sqrt()
    }

    /// Per-channel probability of one extra photon, `g²/2`.
    pub fn multiphoton_probability(&self) -> f64 {
        self.g2 / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImperfectSourceState {
    pub rho: TwoQubitDensityMatrix,
    /// Probability of the herald together with a dual-rail click pattern.
    pub success_probability: f64,
}

/// Photons sharing one internal mode, with their input modes.
struct Sector {
    label: u8,
    input: Vec<usize>,
}

type LabelKey = [Vec<u8>; 3];

/// Heralded logical state under partial distinguishability and multiphoton noise.
///
/// Every input photon sits in a common internal mode with probability `√V` and
/// otherwise in a personal orthogonal mode. With probability `g²/2` a channel
/// carries one extra, fully distinguishable photon (at most one extra per shot).
/// Signal modes use click detectors; the herald mode needs exactly
/// `herald_count` photons. Coherence between logical outcomes survives only when
/// the internal labels found on each qubit and in the herald coincide.
pub fn simulate_with_source_imperfections(
    u: &ModeUnitary,
    input: &FockState,
    herald_count: usize,
    source: &SourceModel,
) -> Result<ImperfectSourceState, SourceError> {
    source.validate()?;
    if u.modes() != CHIP_MODES || input.modes() != CHIP_MODES {
        return Err(SourceError::InvalidInput(format!(
            "expected {CHIP_MODES}-mode circuit and input"
        )));
    }
    if input.occupations().iter().any(|&k| k > 1) {
        return Err(SourceError::InvalidInput("each input channel must carry one photon".into()));
    }
    let photons = input.mode_list();
    let k = photons.len();
    let w = source.common_weight();
    let eps = source.multiphoton_probability();

    let mut rho = DMatrix::<Complex64>::zeros(4, 4);
    let extras: Vec<(Option<usize>, f64)> = std::iter::once((None, (1.0 - eps).powi(k as i32)))
        .chain((0..k).map(|c| (Some(photons[c]), eps * (1.0 - eps).powi(k as i32 - 1))))
        .filter(|(_, p)| *p > 0.0)
        .collect();

    for (extra, p_extra) in extras {
        for mask in 0u32..(1 << k) {
            let common = mask.count_ones() as i32;
            let p_mask = w.powi(common) * (1.0 - w).powi(k as i32 - common);
            if p_mask == 0.0 {
                continue;
            }
            let mut sectors = Vec::new();
            let common_input: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| photons[i]).collect();
            if !common_input.is_empty() {
                sectors.push(Sector { label: 0, input: common_input });
            }
            for i in (0..k).filter(|i| mask & (1 << i) == 0) {
                sectors.push(Sector {
                    label: 1 + i as u8,
                    input: vec![photons[i]],
                });
            }
            if let Some(mode) = extra {
                sectors.push(Sector {
                    label: 1 + k as u8,
                    input: vec![mode],
                });
            }
            let blocks = heralded_blocks(u, &sectors, herald_count)?;
            let weight = p_extra * p_mask;
            for v in blocks.values() {
                for a in 0..4 {
                    for b in 0..4 {
                        rho[(a, b)] += v[a] * v[b].conj() * weight;
                    }
                }
            }
        }
    }
    let p = rho.trace().re;
    if p <= fock::IMPOSSIBLE_HERALD_THRESHOLD {
        return Err(SourceError::NoHeraldedEvents);
    }
    let rho = rho.unscale(p);
    let rho = (&rho + rho.adjoint()).scale(0.5);
    Ok(ImperfectSourceState {
        rho: TwoQubitDensityMatrix::new(rho)?,
        success_probability: p,
    })
}

/// Amplitude vectors over logical outcomes, grouped by internal-label assignment.
fn heralded_blocks(
    u: &ModeUnitary,
    sectors: &[Sector],
    herald_count: usize,
) -> Result<BTreeMap<LabelKey, [Complex64; 4]>, SourceError> {
    let mut outputs = Vec::with_capacity(sectors.len());
    for s in sectors {
        let mut occ = vec![0; CHIP_MODES];
        for &m in &s.input {
            occ[m] += 1;
        }
        let amps: Vec<(FockState, Complex64)> = fock::output_amplitudes(u, &FockState::new(occ)?)?
            .into_iter()
            .filter(|(out, a)| out.occupation(HERALD_MODE) <= herald_count && a.norm_sqr() > 0.0)
            .collect();
        outputs.push(amps);
    }
    let mut blocks = BTreeMap::new();
    let mut labels: Vec<Vec<u8>> = vec![Vec::new(); CHIP_MODES];
    descend(sectors, &outputs, 0, Complex64::new(1.0, 0.0), &mut labels, herald_count, &mut blocks);
    Ok(blocks)
}

fn descend(
    sectors: &[Sector],
    outputs: &[Vec<(FockState, Complex64)>],
    depth: usize,
    amplitude: Complex64,
    labels: &mut Vec<Vec<u8>>,
    herald_count: usize,
    blocks: &mut BTreeMap<LabelKey, [Complex64; 4]>,
) {
    if depth == sectors.len() {
        if labels[HERALD_MODE].len() != herald_count {
            return;
        }
        let signal: Vec<usize> = (0..CHIP_MODES).filter(|&m| m != HERALD_MODE).collect();
        let clicks: Vec<usize> = signal.iter().map(|&m| usize::from(!labels[m].is_empty())).collect();
        let Some(outcome) = LOGICAL_PATTERNS.iter().position(|p| p[..] == clicks[..]) else {
            return;
        };
        let rail = |q: usize| {
            let m = signal[2 * q + usize::from(clicks[2 * q] == 0)];
            let mut l = labels[m].clone();
            l.sort_unstable();
            l
        };
        let mut herald = labels[HERALD_MODE].clone();
        herald.sort_unstable();
        let key = [rail(0), rail(1), herald];
        blocks.entry(key).or_insert([Complex64::new(0.0, 0.0); 4])[outcome] += amplitude;
        return;
    }
    let label = sectors[depth].label;
    for (out, a) in &outputs[depth] {
        if labels[HERALD_MODE].len() + out.occupation(HERALD_MODE) > herald_count {
            continue;
        }
        for (m, &n) in out.occupations().iter().enumerate() {
            labels[m].extend(std::iter::repeat_n(label, n));
        }
        descend(sectors, outputs, depth + 1, amplitude * a, labels, herald_count, blocks);
        for (m, &n) in out.occupations().iter().enumerate() {
            let len = labels[m].len();
            labels[m].truncate(len - n);
        }
    }
}

/// Imperfect-source state of a chip model at the given generation phases.
pub fn simulate_chip_with_source(
    chip: &ChipModelParams,
    theta_pi2: f64,
    theta_alpha: f64,
    source: &SourceModel,
) -> Result<ImperfectSourceState, SourceError> {
    let u = chip.generation_unitary(theta_pi2, theta_alpha);
    simulate_with_source_imperfections(&u, &crate::stategen::default_input(), 2, source)
}
