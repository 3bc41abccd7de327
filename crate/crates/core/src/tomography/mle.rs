use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CountsTable, ProjectorSet, TomographyError, TwoQubitDensityMatrix};
use crate::linalg::{max_abs_diff, trace};

const PAULI_LABELS: [&str; 4] = ["I", "X", "Y", "Z"];

fn pauli(k: usize) -> DMatrix<Complex64> {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let v = match k {
        0 => [l, o, o, l],
        1 => [o, l, l, o],
        2 => [o, -i, i, o],
        _ => [l, o, o, -l],
    };
    DMatrix::from_row_slice(2, 2, &v)
}

/// Rank of the measured operators in the 16-dimensional Hermitian space; errors
/// with the unconstrained Pauli directions if below 16.
pub fn check_informational_completeness(sets: &[ProjectorSet]) -> Result<(), TomographyError> {
    let basis: Vec<DMatrix<Complex64>> = (0..16).map(|k| pauli(k / 4).kronecker(&pauli(k % 4))).collect();
    let rows: Vec<[f64; 16]> = sets
        .iter()
        .flat_map(|s| s.operators.iter())
        .map(|e| std::array::from_fn(|k| trace(&(e * &basis[k])).re / 4.0))
        .collect();
    let mut m = DMatrix::<f64>::zeros(rows.len().max(16), 16);
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            m[(r, c)] = *v;
        }
    }
    let svd = SVD::new(m, false, true);
    let v_t = svd.v_t.expect("requested");
    let scale = svd.singular_values.max().max(1e-300);
    let mut null_directions = Vec::new();
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s <= 1e-9 * scale {
            null_directions.push(describe_direction(v_t.row(idx).iter().copied()));
        }
    }
    if null_directions.is_empty() {
        Ok(())
    } else {
        Err(TomographyError::InformationallyIncomplete {
            rank: 16 - null_directions.len(),
            null_directions,
        })
    }
}

fn describe_direction(coeffs: impl Iterator<Item = f64>) -> String {
    let coeffs: Vec<f64> = coeffs.collect();
    let lead = coeffs.iter().cloned().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > 1e-6)
        .map(|(k, c)| format!("{:+.3}·{}{}", sign * c, PAULI_LABELS[k / 4], PAULI_LABELS[k % 4]))
        .collect();
    terms.join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    pub max_iterations: usize,
    /// Stop when successive iterates differ by at most this in max-abs entry.
    pub tolerance: f64,
    pub initial_step: f64,
    pub max_step: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-10,
            initial_step: 1.0,
            max_step: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// Step size shrank below machine resolution without improving the likelihood.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: TwoQubitDensityMatrix,
    pub iterations: usize,
    pub stop: StopReason,
    /// Log-likelihood after each accepted iteration, starting with the initial state.
    pub log_likelihood: Vec<f64>,
}

/// `Σ_s Σ_k n_sk log(tr ρE_sk / tr ρH_s)` with `H_s = Σ_k E_sk`.
pub fn log_likelihood(rho: &DMatrix<Complex64>, counts: &CountsTable, sets: &[ProjectorSet]) -> f64 {
    let mut l = 0.0;
    for (s, set) in counts.settings.iter().zip(sets) {
        let h = trace(&(rho * set.sum())).re;
        for (k, e) in set.operators.iter().enumerate() {
            let n = s.counts[k];
            if n > 0.0 {
                l += n * (trace(&(rho * e)).re / h).ln();
            }
        }
    }
    l
}

/// Maximum-likelihood density matrix via the diluted `RρR` iteration.
pub fn mle_reconstruct(
    counts: &CountsTable,
    sets: &[ProjectorSet],
    config: &MleConfig,
) -> Result<MleResult, TomographyError> {
    if counts.settings.len() != sets.len() {
        return Err(TomographyError::SettingMismatch {
            counts: counts.settings.len(),
            projectors: sets.len(),
        });
    }
    check_informational_completeness(sets)?;
    let total: f64 = counts.settings.iter().map(|s| s.total()).sum();
    if !(total > 0.0) {
        return Err(TomographyError::NoCounts);
    }
    let sums: Vec<DMatrix<Complex64>> = sets.iter().map(|s| s.sum()).collect();
    let id = DMatrix::<Complex64>::identity(4, 4);

    let mut rho = id.scale(0.25);
    let mut ll = log_likelihood(&rho, counts, sets);
    let mut trace_ll = vec![ll];
    let mut eps = config.initial_step;
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;

    while iterations < config.max_iterations {
        let mut r = DMatrix::<Complex64>::zeros(4, 4);
        let mut g = DMatrix::<Complex64>::zeros(4, 4);
        for ((s, set), h) in counts.settings.iter().zip(sets).zip(&sums) {
            for (k, e) in set.operators.iter().enumerate() {
                let n = s.counts[k];
                if n > 0.0 {
                    let p = trace(&(&rho * e)).re;
                    r += e.scale(n / p);
                }
            }
            let nh = s.total();
            if nh > 0.0 {
                g += h.scale(nh / trace(&(&rho * h)).re);
            }
        }
        let delta = (r - g).scale(1.0 / total);

        let (next, next_ll) = loop {
            let step = &id + delta.scale(eps);
            let mut cand = &step * &rho * &step;
            cand = (&cand + cand.adjoint()).scale(0.5);
            let tr = trace(&cand).re;
            cand = cand.scale(1.0 / tr);
            let cand_ll = log_likelihood(&cand, counts, sets);
            if cand_ll >= ll || eps < 1e-14 {
                break (cand, cand_ll);
            }
            eps *= 0.5;
        };
        if next_ll < ll {
            stop = StopReason::Stalled;
            break;
        }
        iterations += 1;
        let change = max_abs_diff(&next, &rho);
        rho = next;
        ll = next_ll;
        trace_ll.push(ll);
        eps = (eps * 2.0).min(config.max_step);
        if change <= config.tolerance {
            stop = StopReason::Converged;
            break;
        }
    }

    Ok(MleResult {
        rho: TwoQubitDensityMatrix::from_unchecked(rho),
        iterations,
        stop,
        log_likelihood: trace_ll,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ChipModelParams;
    use crate::tomography::{
        fidelity, ideal_projectors, projectors_from_chip_model, settings_for, simulate_measurements,
        SettingPreset,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pauli_sets() -> Vec<ProjectorSet> {
        settings_for(SettingPreset::Pauli9).iter().map(ideal_projectors).collect()
    }

    fn assert_monotone(result: &MleResult) {
        for w in result.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn reduced_presets_are_rejected_with_directions() {
        for preset in [SettingPreset::Four, SettingPreset::Six] {
            let sets: Vec<_> = settings_for(preset).iter().map(ideal_projectors).collect();
            match check_informational_completeness(&sets) {
                Err(TomographyError::InformationallyIncomplete { rank, null_directions }) => {
                    assert!(rank < 16);
                    assert_eq!(null_directions.len(), 16 - rank);
                    assert!(null_directions.iter().all(|d| !d.is_empty()));
                }
                other => panic!("{preset:?}: {other:?}"),
            }
        }
        let four: Vec<_> = settings_for(SettingPreset::Four).iter().map(ideal_projectors).collect();
        assert!(matches!(
            check_informational_completeness(&four),
            Err(TomographyError::InformationallyIncomplete { rank: 11, .. })
        ));
        assert!(check_informational_completeness(&pauli_sets()).is_ok());
    }

    #[test]
    fn bell_state_from_exact_probabilities() {
        let truth = TwoQubitDensityMatrix::from_pure(&[c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)]);
        let sets = pauli_sets();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let counts = simulate_measurements(&truth, &sets, None, None, &mut rng);
        let result = mle_reconstruct(&counts, &sets, &MleConfig::default()).unwrap();
        assert!(fidelity(&result.rho, &truth) >= 0.9999);
        assert!(TwoQubitDensityMatrix::new(result.rho.matrix().clone()).is_ok());
        assert_monotone(&result);
    }

    #[test]
    fn maximally_mixed_is_a_fixed_point() {
        let truth = TwoQubitDensityMatrix::maximally_mixed();
        let sets = pauli_sets();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let counts = simulate_measurements(&truth, &sets, None, None, &mut rng);
        let result = mle_reconstruct(&counts, &sets, &MleConfig::default()).unwrap();
        assert!(max_abs_diff(result.rho.matrix(), truth.matrix()) < 1e-6);
        assert_eq!(result.stop, StopReason::Converged);
    }

    #[test]
    fn spam_projectors_close_the_loop() {
        let chip = ChipModelParams::ideal().with_reflectivity_offsets(&[
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.05, -0.05, -0.05, 0.05,
        ]);
        let sets: Vec<_> = settings_for(SettingPreset::Pauli9)
            .iter()
            .map(|s| projectors_from_chip_model(&chip, s))
            .collect();
        let a = FRAC_PI_8;
        let truth = TwoQubitDensityMatrix::from_pure(&[c(a.cos()), c(0.0), c(0.0), c(a.sin())]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let counts = simulate_measurements(&truth, &sets, None, None, &mut rng);
        let result = mle_reconstruct(&counts, &sets, &MleConfig::default()).unwrap();
        assert!(fidelity(&result.rho, &truth) >= 0.999);
        assert_monotone(&result);
    }

    #[test]
    fn noisy_counts_stay_physical() {
        let sets = pauli_sets();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for shots in [10u64, 100, 10_000] {
            let truth = TwoQubitDensityMatrix::from_pure(&[c(0.6), c(0.0), c(0.0), c(0.8)]);
            let counts = simulate_measurements(&truth, &sets, Some(shots), None, &mut rng);
            let result = mle_reconstruct(&counts, &sets, &MleConfig { max_iterations: 2000, ..Default::default() }).unwrap();
            assert!(TwoQubitDensityMatrix::new(result.rho.matrix().clone()).is_ok());
            assert_monotone(&result);
        }
    }

    #[test]
    fn mismatched_inputs() {
        let sets = pauli_sets();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let counts = simulate_measurements(&TwoQubitDensityMatrix::maximally_mixed(), &sets[..3], None, None, &mut rng);
        assert!(matches!(
            mle_reconstruct(&counts, &sets, &MleConfig::default()),
            Err(TomographyError::SettingMismatch { .. })
        ));
    }
}
