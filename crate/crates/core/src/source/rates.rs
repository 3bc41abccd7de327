use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SourceError;
use crate::circuit::{bundled, Netlist, PhaseSettings};
use crate::fock::{self, FockState};
use crate::stategen::nominal_generation_phases;

pub const DEFAULT_PUMP_RATE_HZ: f64 = 320e6;
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Pump rate and per-stage efficiencies of the four-photon experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBudget {
    pub pump_rate_hz: f64,
    pub fiber_coupling: f64,
    pub demultiplexing: f64,
    pub chip: f64,
    pub detection: f64,
}

impl RateBudget {
    /// Present setup.
    pub fn current() -> Self {
        Self {
            pump_rate_hz: DEFAULT_PUMP_RATE_HZ,
            fiber_coupling: 0.114,
            demultiplexing: 0.5,
            chip: 0.363,
            detection: 0.7,
        }
    }

    /// Projected setup with improved components.
    pub fn improved() -> Self {
        Self {
            pump_rate_hz: DEFAULT_PUMP_RATE_HZ,
            fiber_coupling: 0.5,
            demultiplexing: 0.9,
            chip: 0.8,
            detection: 0.9,
        }
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        if !(self.pump_rate_hz > 0.0) || !self.pump_rate_hz.is_finite() {
            return Err(SourceError::InvalidInput(format!("pump rate {}", self.pump_rate_hz)));
        }
        for (name, v) in [
            ("fiber_coupling", self.fiber_coupling),
            ("demultiplexing", self.demultiplexing),
            ("chip", self.chip),
            ("detection", self.detection),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(SourceError::InvalidInput(format!("{name} efficiency {v} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Per-photon transmission through the included stages.
    pub p: f64,
    pub rate_hz: f64,
}

/// `f = f_pump/4 · p⁴` with `p` the product of the included stage efficiencies.
pub fn four_photon_rate(budget: &RateBudget, include_chip: bool) -> Result<RateEstimate, SourceError> {
    budget.validate()?;
    let mut p = budget.fiber_coupling * budget.demultiplexing * budget.detection;
    if include_chip {
        p *= budget.chip;
    }
    Ok(RateEstimate {
        p,
        rate_hz: budget.pump_rate_hz / 4.0 * p.powi(4),
    })
}

/// Probability that every photon leaves in a different output mode, so each one
/// fires its own click detector.
pub fn separate_click_fraction(
    netlist: &Netlist,
    settings: &PhaseSettings,
    input: &FockState,
) -> Result<f64, SourceError> {
    let u = netlist.compose(settings)?;
    let dist = fock::output_distribution(&u, input)?;
    Ok(dist
        .iter()
        .filter(|(s, _)| s.occupations().iter().all(|&k| k <= 1))
        .map(|(_, p)| p)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionPoint {
    pub alpha_rad: f64,
    pub fraction: f64,
    pub predicted_rate_hz: f64,
}

/// Separate-click fraction of the eight-mode chip at nominal phases for each
/// `α`, scaled by the four-photon rate.
pub fn fraction_curve(alphas: &[f64], four_photon_rate_hz: f64) -> Result<Vec<FractionPoint>, SourceError> {
    let chip = bundled::chip8();
    let mut occ = vec![0; chip.modes];
    for m in [0, 1, 2, 4] {
        occ[m] = 1;
    }
    let input = FockState::new(occ)?;
    alphas
        .iter()
        .map(|&alpha| {
            let (tp, ta) = nominal_generation_phases(alpha)?;
            let settings = PhaseSettings::new().with("theta_pi2", tp).with("theta_alpha", ta);
            let fraction = separate_click_fraction(&chip, &settings, &input)?;
            Ok(FractionPoint {
                alpha_rad: alpha,
                fraction,
                predicted_rate_hz: fraction * four_photon_rate_hz,
            })
        })
        .collect()
}

/// CSV with columns `alpha_rad,fraction,predicted_rate_hz`.
pub fn write_fraction_curve(path: &Path, points: &[FractionPoint]) -> Result<(), SourceError> {
    let io = |e: std::io::Error| SourceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldingEfficiency {
    pub ratio: f64,
    /// Binomial standard error `√(p(1−p)/n)`.
    pub standard_error: f64,
    /// 95 % Wilson score interval.
    pub wilson_lower: f64,
    pub wilson_upper: f64,
}

/// Successful events over all events with two herald photons.
pub fn heralding_efficiency(successes: u64, heralds: u64) -> Result<HeraldingEfficiency, SourceError> {
    if heralds == 0 {
        return Err(SourceError::InvalidInput("no herald events".into()));
    }
    if successes > heralds {
        return Err(SourceError::InvalidInput(format!("{successes} successes exceed {heralds} heralds")));
    }
    let n = heralds as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = WILSON_Z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(HeraldingEfficiency {
        ratio: p,
        standard_error: (p * (1.0 - p) / n).sqrt(),
        wilson_lower: if successes == 0 { 0.0 } else { centre - half },
        wilson_upper: if successes == heralds { 1.0 } else { centre + half },
    })
}
