use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use photonchip::calibration::{
    fit_chip_model, generate_calibration_data, read_dataset, simulate_characterization, synthetic_ground_truth,
    write_dataset, FitConfig, NoiseModel, SweepSpec,
};
use photonchip::circuit::chip::NUM_DCS;
use photonchip::circuit::{ChipModelParams, CurrentSetting, Netlist, PhaseSettings};
use photonchip::source::{
    four_photon_rate, fraction_curve, heralding_efficiency, simulate_chip_with_source, HeraldingEfficiency,
};
use photonchip::stategen::{
    default_input, heralded_state, ideal_success_probability, model_state, nominal_generation_phases,
    optimize_generation_phases, target_state, OptimizerConfig,
};
use photonchip::tomography::{
    correct_for_output_efficiencies, fidelity, ideal_projectors, mle_reconstruct, negativity,
    projectors_from_chip_model, settings_for, simulate_measurements, MleConfig, ProjectorSet, StopReason,
    TwoQubitDensityMatrix,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, TABLE_ALPHAS};
use crate::error::CliError;
use crate::output::RunDir;

fn generation_phases(config: &ExperimentConfig, chip: &ChipModelParams, alpha: f64) -> Result<(f64, f64), CliError> {
    if config.optimize {
        let opt = optimize_generation_phases(chip, alpha, &OptimizerConfig::default())?;
        Ok((opt.theta_pi2, opt.theta_alpha))
    } else {
        Ok(nominal_generation_phases(alpha)?)
    }
}

#[derive(Serialize)]
struct GenerateRow {
    alpha_rad: f64,
    theta_pi2: f64,
    theta_alpha: f64,
    success_probability: f64,
    ideal_success_probability: f64,
    herald_probability: f64,
    leakage: f64,
    fidelity: f64,
}

#[derive(Serialize)]
struct GenerateEntry {
    #[serde(flatten)]
    row: GenerateRow,
    /// `|00⟩, |01⟩, |10⟩, |11⟩` as `[re, im]`.
    amplitudes: [Complex64; 4],
}

pub fn generate(config: &ExperimentConfig, out: &mut RunDir) -> Result<(), CliError> {
    let alphas = config.alphas_or(&TABLE_ALPHAS);
    let netlist = match &config.netlist {
        Some(path) => {
            let n = Netlist::load(path)?;
            for id in ["theta_pi2", "theta_alpha"] {
                if !n.phase_shifter_ids().contains(&id) {
                    return Err(CliError::Validation(format!("netlist has no phase shifter {id:?}")));
                }
            }
            if config.optimize {
                return Err(CliError::Validation("phase optimization needs a chip model, not a netlist".into()));
            }
            Some(n)
        }
        None => None,
    };
    let chip = config.load_chip()?;
    let mut entries = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let (tp, ta) = generation_phases(config, &chip, alpha)?;
        let state = match &netlist {
            Some(n) => {
                let settings = PhaseSettings::new().with("theta_pi2", tp).with("theta_alpha", ta);
                heralded_state(n, &settings, &default_input())?
            }
            None => model_state(&chip, tp, ta)?,
        };
        let row = GenerateRow {
            alpha_rad: alpha,
            theta_pi2: tp,
            theta_alpha: ta,
            success_probability: state.success_probability,
            ideal_success_probability: ideal_success_probability(alpha),
            herald_probability: state.herald_probability,
            leakage: state.leakage,
            fidelity: state.fidelity_to(&target_state(alpha)),
        };
        println!(
            "alpha={:.6} success_probability={:.9} fidelity={:.9}",
            alpha, row.success_probability, row.fidelity
        );
        entries.push(GenerateEntry {
            row,
            amplitudes: state.amplitudes,
        });
    }
    out.write_json("generate.json", &entries)?;
    let rows: Vec<&GenerateRow> = entries.iter().map(|e| &e.row).collect();
    out.write_csv("generate.csv", &rows)
}

#[derive(Serialize)]
struct TomographyEntry {
    alpha_rad: f64,
    theta_pi2: f64,
    theta_alpha: f64,
    fidelity_to_target: f64,
    fidelity_to_prepared: f64,
    negativity: f64,
    purity: f64,
    iterations: usize,
    stop: StopReason,
    counts_file: String,
    density_file: String,
}

pub fn tomography(config: &ExperimentConfig, out: &mut RunDir) -> Result<(), CliError> {
    let alphas = config.alphas_or(&TABLE_ALPHAS);
    let chip = config.load_chip()?;
    let shots = if config.exact { None } else { config.shots };
    let mut rng = match shots {
        Some(_) => ChaCha8Rng::seed_from_u64(config.require_seed("finite-shot tomography")?),
        None => ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0)),
    };
    let settings = settings_for(config.tomography.preset);
    let actual: Vec<ProjectorSet> = settings.iter().map(|s| projectors_from_chip_model(&chip, s)).collect();
    let assumed: Vec<ProjectorSet> = if config.tomography.model_projectors {
        actual.clone()
    } else {
        settings.iter().map(ideal_projectors).collect()
    };
    let efficiencies: [f64; 4] = std::array::from_fn(|k| chip.output_efficiencies[k]);
    let mut entries = Vec::with_capacity(alphas.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        let (tp, ta) = generation_phases(config, &chip, alpha)?;
        let prepared = match &config.source {
            Some(source) => simulate_chip_with_source(&chip, tp, ta, source)?.rho,
            None => TwoQubitDensityMatrix::from_pure(&model_state(&chip, tp, ta)?.amplitudes),
        };
        let eta = config.tomography.output_efficiencies.then_some(&efficiencies);
        let counts = simulate_measurements(&prepared, &actual, shots, eta, &mut rng);
        let corrected = match eta {
            Some(e) => correct_for_output_efficiencies(&counts, e)?,
            None => counts.clone(),
        };
        let result = mle_reconstruct(&corrected, &assumed, &MleConfig::default())?;
        let counts_file = format!("counts_{i}.json");
        let density_file = format!("rho_{i}.json");
        out.write_text(&counts_file, &counts.to_json())?;
        out.write_text(&density_file, &result.rho.to_json())?;
        let target = TwoQubitDensityMatrix::from_pure(&target_state(alpha));
        let entry = TomographyEntry {
            alpha_rad: alpha,
            theta_pi2: tp,
            theta_alpha: ta,
            fidelity_to_target: fidelity(&result.rho, &target),
            fidelity_to_prepared: fidelity(&result.rho, &prepared),
            negativity: negativity(&result.rho),
            purity: result.rho.purity(),
            iterations: result.iterations,
            stop: result.stop,
            counts_file,
            density_file,
        };
        if entry.stop != StopReason::Converged {
            eprintln!("warning: MLE for alpha={alpha:.6} stopped with {:?}", entry.stop);
        }
        println!(
            "alpha={:.6} fidelity={:.9} negativity={:.9} iterations={}",
            alpha, entry.fidelity_to_target, entry.negativity, entry.iterations
        );
        entries.push(entry);
    }
    out.write_json("tomography.json", &entries)
}

#[derive(Serialize)]
struct CalibrationSummary {
    samples: usize,
    synthetic: bool,
    train_size: usize,
    test_size: usize,
    train_mse: f64,
    test_mse: f64,
    test_r2: f64,
    total_r2: f64,
    /// Fitted minus true reflectivities (synthetic data only).
    reflectivity_errors: Option<[f64; NUM_DCS]>,
}

pub fn calibrate(config: &ExperimentConfig, out: &mut RunDir) -> Result<(), CliError> {
    let opts = &config.calibration;
    let seed = config.require_seed("calibration")?;
    let truth = synthetic_ground_truth();
    let (data, synthetic) = match &opts.data {
        Some(path) => (read_dataset(path)?, false),
        None => {
            let noise = match (config.exact, config.shots) {
                (false, Some(n)) => NoiseModel::Shots(n),
                _ => NoiseModel::None,
            };
            let sweep = SweepSpec {
                steps: opts.sweep_steps,
                ..SweepSpec::default()
            };
            let data = generate_calibration_data(&truth, &sweep, noise, seed);
            write_dataset(&out.path("dataset.csv"), &data)?;
            (data, true)
        }
    };
    let fit = FitConfig {
        learning_rate: opts.learning_rate,
        final_lr_fraction: opts.final_lr_fraction,
        batch_size: opts.batch_size,
        divergence_patience: opts.divergence_patience,
        epochs: opts.epochs,
        seed,
        curriculum: opts.curriculum.clone(),
        ..FitConfig::default()
    };
    let report = fit_chip_model(&data, &ChipModelParams::calibration_start(), &fit)?;
    report.save(&out.path("fit_report.json"))?;
    report.params.save(&out.path("chip_model.json"))?;
    report.write_trace_csv(&out.path("trace.csv"))?;
    let summary = CalibrationSummary {
        samples: data.len(),
        synthetic,
        train_size: report.train_size,
        test_size: report.test_size,
        train_mse: report.train_mse,
        test_mse: report.test_mse,
        test_r2: report.test_r2,
        total_r2: report.total_r2,
        reflectivity_errors: synthetic
            .then(|| std::array::from_fn(|k| report.params.reflectivities[k] - truth.reflectivities[k])),
    };
    println!("test_r2={:.9} test_mse={:.3e}", summary.test_r2, summary.test_mse);
    out.write_json("calibration.json", &summary)
}

#[derive(Serialize)]
struct RateRow {
    budget: String,
    include_chip: bool,
    p: f64,
    rate_hz: f64,
    note: Option<String>,
}

#[derive(Serialize)]
struct RatesReport {
    rates: Vec<RateRow>,
    heralding: Option<HeraldingEfficiency>,
}

pub fn rates(config: &ExperimentConfig, out: &mut RunDir) -> Result<(), CliError> {
    let opts = &config.rates;
    let mut rows = Vec::new();
    for nb in &opts.budgets {
        for include_chip in [false, true] {
            let r = four_photon_rate(&nb.budget, include_chip)?;
            let note = (nb.name == "improved" && include_chip).then(|| {
                "product of the listed stage efficiencies; a 1.45 MHz figure quoted for this budget is not reproduced by them".to_string()
            });
            println!(
                "{} {} p={:.6} rate_hz={:.6e}",
                nb.name,
                if include_chip { "with-chip" } else { "without-chip" },
                r.p,
                r.rate_hz
            );
            rows.push(RateRow {
                budget: nb.name.clone(),
                include_chip,
                p: r.p,
                rate_hz: r.rate_hz,
                note,
            });
        }
    }
    let heralding = opts
        .heralding
        .map(|h| heralding_efficiency(h.successes, h.heralds))
        .transpose()?;
    out.write_json("rates.json", &RatesReport { rates: rows, heralding })?;
    let default: Vec<f64> = (0..=20).map(|i| FRAC_PI_4 * i as f64 / 20.0).collect();
    let curve = fraction_curve(&config.alphas_or(&default), opts.four_photon_rate_hz)?;
    out.write_csv("fraction_curve.csv", &curve)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct CharacterizationReport {
    currents_ma: [f64; 6],
    input_efficiencies: [f64; 5],
    output_efficiencies: [f64; 5],
    theory: Vec<Vec<f64>>,
    raw: Vec<Vec<f64>>,
    doubly_stochastic: Vec<Vec<f64>>,
    efficiency: Vec<Vec<f64>>,
    row_scalings: Vec<f64>,
    col_scalings: Vec<f64>,
    fidelity: f64,
}

pub fn characterize(config: &ExperimentConfig, out: &mut RunDir) -> Result<(), CliError> {
    let chip = config.load_chip()?;
    let opts = &config.characterize;
    let currents = CurrentSetting::new(opts.currents)?;
    let phases = chip.phases_for_currents(&currents);
    let t_out = opts.output_efficiencies.unwrap_or(chip.output_efficiencies);
    let c = simulate_characterization(&chip, &phases, &opts.input_efficiencies, &t_out)?;
    println!("transfer_matrix_fidelity={:.12}", c.fidelity);
    out.write_json(
        "characterization.json",
        &CharacterizationReport {
            currents_ma: opts.currents,
            input_efficiencies: opts.input_efficiencies,
            output_efficiencies: t_out,
            theory: rows(&c.theory),
            raw: rows(&c.raw),
            doubly_stochastic: rows(&c.doubly_stochastic),
            efficiency: rows(&c.efficiency),
            row_scalings: c.row_scalings,
            col_scalings: c.col_scalings,
            fidelity: c.fidelity,
        },
    )
}

#[derive(Serialize)]
struct NetlistSummary<'a> {
    name: &'a str,
    modes: usize,
    elements: usize,
    phase_shifters: Vec<&'a str>,
    unitarity_defect: f64,
}

pub fn validate_netlist(path: &Path) -> Result<(), CliError> {
    let netlist = Netlist::load(path)?;
    let u = netlist.compose(&PhaseSettings::new())?;
    let summary = NetlistSummary {
        name: &netlist.name,
        modes: netlist.modes,
        elements: netlist.elements.len(),
        phase_shifters: netlist.phase_shifter_ids(),
        unitarity_defect: u.unitarity_defect(),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Other(e.to_string()))?
    );
    Ok(())
}
