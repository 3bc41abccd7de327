use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};
use std::path::{Path, PathBuf};

use photonchip::circuit::chip::{CHIP_MODES, NUM_SHIFTERS};
use photonchip::circuit::ChipModelParams;
use photonchip::source::{RateBudget, SourceModel};
use photonchip::stategen::SPAM_REFLECTIVITY_OFFSETS;
use photonchip::tomography::SettingPreset;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One run's settings. Loaded from `--config` (JSON), overridden by flags, then
/// written back as `config.json` in the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub alphas: Vec<f64>,
    /// Generation netlist file; when absent the chip model is used.
    pub netlist: Option<PathBuf>,
    /// `ideal`, `reference`, `spam`, or a chip-model JSON path.
    pub chip_model: String,
    pub source: Option<SourceModel>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    /// Use exact probabilities instead of sampled counts.
    pub exact: bool,
    /// Optimize generation phases on the chip model instead of nominal values.
    pub optimize: bool,
    pub tomography: TomographyOptions,
    pub calibration: CalibrationOptions,
    pub rates: RatesOptions,
    pub characterize: CharacterizeOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alphas: Vec::new(),
            netlist: None,
            chip_model: "ideal".into(),
            source: None,
            shots: None,
            seed: None,
            exact: false,
            optimize: false,
            tomography: TomographyOptions::default(),
            calibration: CalibrationOptions::default(),
            rates: RatesOptions::default(),
            characterize: CharacterizeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographyOptions {
    pub preset: SettingPreset,
    /// Reconstruct with the chip model's measurement operators rather than ideal ones.
    pub model_projectors: bool,
    /// Bias counts by the chip's output efficiencies, then correct for them.
    pub output_efficiencies: bool,
}

impl Default for TomographyOptions {
    fn default() -> Self {
        Self {
            preset: SettingPreset::Pauli9,
            model_projectors: true,
            output_efficiencies: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationOptions {
    /// Sweep dataset CSV; when absent synthetic data is generated.
    pub data: Option<PathBuf>,
    pub sweep_steps: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub final_lr_fraction: f64,
    pub batch_size: usize,
    /// Consecutive rising-MSE epochs treated as divergence.
    pub divergence_patience: usize,
    pub curriculum: Vec<f64>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        let fit = photonchip::calibration::FitConfig::default();
        Self {
            data: None,
            sweep_steps: 61,
            epochs: fit.epochs,
            learning_rate: fit.learning_rate,
            final_lr_fraction: fit.final_lr_fraction,
            batch_size: fit.batch_size,
            divergence_patience: fit.divergence_patience,
            curriculum: fit.curriculum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedBudget {
    pub name: String,
    pub budget: RateBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldCounts {
    pub successes: u64,
    pub heralds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesOptions {
    pub budgets: Vec<NamedBudget>,
    /// Observed four-photon rate that scales the separate-click fraction curve.
    pub four_photon_rate_hz: f64,
    pub heralding: Option<HeraldCounts>,
}

impl Default for RatesOptions {
    fn default() -> Self {
        Self {
            budgets: vec![
                NamedBudget {
                    name: "current".into(),
                    budget: RateBudget::current(),
                },
                NamedBudget {
                    name: "improved".into(),
                    budget: RateBudget::improved(),
                },
            ],
            four_photon_rate_hz: 2.36,
            heralding: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharacterizeOptions {
    /// Heater currents in mA.
    pub currents: [f64; NUM_SHIFTERS],
    pub input_efficiencies: [f64; CHIP_MODES],
    /// Defaults to the chip model's output efficiencies.
    pub output_efficiencies: Option<[f64; CHIP_MODES]>,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        Self {
            currents: [0.0; NUM_SHIFTERS],
            input_efficiencies: [1.0; CHIP_MODES],
            output_efficiencies: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    /// Makes relative paths relative to `base` (the config file's directory).
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.netlist);
        fix(&mut self.calibration.data);
        if !matches!(self.chip_model.as_str(), "ideal" | "reference" | "spam") {
            let p = Path::new(&self.chip_model);
            if p.is_relative() {
                self.chip_model = base.join(p).display().to_string();
            }
        }
    }

    pub fn alphas_or(&self, default: &[f64]) -> Vec<f64> {
        if self.alphas.is_empty() {
            default.to_vec()
        } else {
            self.alphas.clone()
        }
    }

    pub fn require_seed(&self, why: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Validation(format!("a seed is required for {why}; pass --seed")))
    }

    pub fn load_chip(&self) -> Result<ChipModelParams, CliError> {
        Ok(match self.chip_model.as_str() {
            "ideal" => ChipModelParams::ideal(),
            "reference" => ChipModelParams::reference_fit(),
            "spam" => ChipModelParams::ideal().with_reflectivity_offsets(&SPAM_REFLECTIVITY_OFFSETS),
            path => ChipModelParams::load(Path::new(path))?,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

pub const TABLE_ALPHAS: [f64; 3] = [0.0, FRAC_PI_8, FRAC_PI_4];

/// Parses `0.3`, `pi`, `pi/8`, `3pi/16` or `3*pi/16`.
pub fn parse_alpha(text: &str) -> Result<f64, String> {
    let t = text.trim().to_ascii_lowercase().replace(' ', "");
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| format!("bad denominator in {text:?}"))?),
        None => (t.as_str(), 1.0),
    };
    let coeff = num
        .strip_suffix("pi")
        .ok_or_else(|| format!("cannot parse angle {text:?}"))?
        .trim_end_matches('*');
    let coeff = if coeff.is_empty() {
        1.0
    } else {
        coeff.parse::<f64>().map_err(|_| format!("bad coefficient in {text:?}"))?
    };
    Ok(coeff * PI / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_forms() {
        assert_eq!(parse_alpha("0.25").unwrap(), 0.25);
        assert_eq!(parse_alpha("pi/4").unwrap(), FRAC_PI_4);
        assert_eq!(parse_alpha("PI/8").unwrap(), FRAC_PI_8);
        assert!((parse_alpha("3pi/16").unwrap() - 3.0 * PI / 16.0).abs() < 1e-15);
        assert!((parse_alpha("3*pi/16").unwrap() - 3.0 * PI / 16.0).abs() < 1e-15);
        assert!(parse_alpha("tau").is_err());
        assert!(parse_alpha("pi/x").is_err());
    }

    #[test]
    fn config_round_trips() {
        let c = ExperimentConfig {
            alphas: vec![0.1],
            seed: Some(4),
            ..ExperimentConfig::default()
        };
        let back: ExperimentConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<ExperimentConfig>("{\"bogus\": 1}").is_err());
    }
}
