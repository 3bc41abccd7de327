//! Exact multi-photon Fock-space simulation through linear-optical mode unitaries.
//!
//! Convention used throughout the crate: creation operators transform as
//! `a_i† -> Σ_j U[j][i] a_j†`, so column `i` of a [`ModeUnitary`] holds the output
//! amplitudes of a single photon injected into mode `i`.
//!
//! Sectors are enumerated exactly; anything beyond [`MAX_PHOTONS`] photons or
//! [`MAX_MODES`] modes is refused instead of truncated.

mod permanent;
mod state;

pub use permanent::permanent;
pub use state::{FockState, OutputDistribution};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Largest photon number the enumeration routines accept.
pub const MAX_PHOTONS: usize = 6;
/// Largest mode count the enumeration routines accept.
pub const MAX_MODES: usize = 12;
/// Maximum absolute entry deviation of `U·U†` from the identity.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;
/// Herald probabilities at or below this are reported as impossible.
pub const IMPOSSIBLE_HERALD_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not unitary (max |UU† - I| entry = {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("Fock state must span at least one mode")]
    NoModes,
    #[error("mode count mismatch: unitary has {unitary} modes, state has {state}")]
    ModeMismatch { unitary: usize, state: usize },
    #[error("photon number mismatch: input has {input}, output has {output}")]
    PhotonNumberMismatch { input: usize, output: usize },
    #[error("sector with {photons} photons in {modes} modes exceeds the exact-enumeration limit ({MAX_PHOTONS} photons, {MAX_MODES} modes)")]
    SectorTooLarge { photons: usize, modes: usize },
    #[error("invalid herald specification: {0}")]
    InvalidHerald(String),
    #[error("impossible herald: probability {probability:e}")]
    ImpossibleHerald { probability: f64 },
}

/// Complex m×m unitary acting on mode creation operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    matrix: DMatrix<Complex64>,
}

impl ModeUnitary {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self, FockError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(FockError::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let defect = unitarity_defect(&matrix);
        if defect > UNITARITY_TOLERANCE {
            return Err(FockError::NotUnitary { defect });
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix already known to be unitary (products of unitaries, for instance).
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<Complex64>) -> Self {
        debug_assert!(unitarity_defect(&matrix) <= 1e-8);
        Self { matrix }
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(modes, modes),
        }
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// The circuit that applies `self` first and then `later`.
    pub fn then(&self, later: &ModeUnitary) -> ModeUnitary {
        assert_eq!(self.modes(), later.modes(), "mode count mismatch");
        ModeUnitary::from_matrix_unchecked(&later.matrix * &self.matrix)
    }

    /// Block-diagonal combination, `other` acting on the modes after `self`.
    pub fn direct_sum(&self, other: &ModeUnitary) -> ModeUnitary {
        let (a, b) = (self.modes(), other.modes());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.matrix);
        m.view_mut((a, a), (b, b)).copy_from(&other.matrix);
        ModeUnitary::from_matrix_unchecked(m)
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }

    /// `|U[j][i]|²`, the single-photon transition intensities.
    pub fn intensities(&self) -> DMatrix<f64> {
        self.matrix.map(|z| z.norm_sqr())
    }
}

pub fn unitarity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let prod = m * m.adjoint();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

fn check_modes(u: &ModeUnitary, state: &FockState) -> Result<(), FockError> {
    if u.modes() != state.modes() {
        return Err(FockError::ModeMismatch {
            unitary: u.modes(),
            state: state.modes(),
        });
    }
    Ok(())
}

fn check_sector(photons: usize, modes: usize) -> Result<(), FockError> {
    if photons > MAX_PHOTONS || modes > MAX_MODES {
        return Err(FockError::SectorTooLarge { photons, modes });
    }
    Ok(())
}

fn sqrt_factorial_product(state: &FockState) -> f64 {
    state
        .occupations()
        .iter()
        .map(|&k| (1..=k).map(|v| v as f64).product::<f64>())
        .product::<f64>()
        .sqrt()
}

/// Amplitude `⟨output| Û |input⟩ = perm(U_{S,T}) / sqrt(Π s_i! Π t_j!)`.
pub fn transition_amplitude(
    u: &ModeUnitary,
    input: &FockState,
    output: &FockState,
) -> Result<Complex64, FockError> {
    check_modes(u, input)?;
    check_modes(u, output)?;
    if input.photons() != output.photons() {
        return Err(FockError::PhotonNumberMismatch {
            input: input.photons(),
            output: output.photons(),
        });
    }
    let cols = input.mode_list();
    Ok(amplitude_with_cols(u, &cols, input, output))
}

fn amplitude_with_cols(
    u: &ModeUnitary,
    cols: &[usize],
    input: &FockState,
    output: &FockState,
) -> Complex64 {
    let rows = output.mode_list();
    let n = rows.len();
    let sub = DMatrix::from_fn(n, n, |r, c| u.matrix[(rows[r], cols[c])]);
    permanent::ryser_gray(&sub) / (sqrt_factorial_product(input) * sqrt_factorial_product(output))
}

/// Amplitudes of every output pattern with the input's photon number, in the
/// enumeration order of [`FockState::all_with_photons`].
pub fn output_amplitudes(
    u: &ModeUnitary,
    input: &FockState,
) -> Result<Vec<(FockState, Complex64)>, FockError> {
    check_modes(u, input)?;
    check_sector(input.photons(), input.modes())?;
    let cols = input.mode_list();
    Ok(FockState::all_with_photons(input.photons(), input.modes())
        .into_iter()
        .map(|out| {
            let a = amplitude_with_cols(u, &cols, input, &out);
            (out, a)
        })
        .collect())
}

pub fn output_distribution(
    u: &ModeUnitary,
    input: &FockState,
) -> Result<OutputDistribution, FockError> {
    let amps = output_amplitudes(u, input)?;
    Ok(OutputDistribution::from_entries(
        input.modes(),
        input.photons(),
        amps.into_iter().map(|(s, a)| (s, a.norm_sqr())).collect(),
    ))
}

/// Pure conditional state left on the non-herald modes after a herald detection.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedProjection {
    /// Indices (in the full circuit) of the modes the conditional state lives on.
    pub remaining_modes: Vec<usize>,
    /// Normalized amplitudes over occupation patterns of `remaining_modes`.
    pub amplitudes: Vec<(FockState, Complex64)>,
    /// Probability of observing the herald pattern.
    pub probability: f64,
}

impl HeraldedProjection {
    pub fn amplitude(&self, pattern: &FockState) -> Complex64 {
        self.amplitudes
            .iter()
            .find(|(s, _)| s == pattern)
            .map(|(_, a)| *a)
            .unwrap_or_default()
    }
}

/// Conditions the output of `u` on `herald_pattern` photons in `herald_modes`.
pub fn project_modes(
    u: &ModeUnitary,
    input: &FockState,
    herald_modes: &[usize],
    herald_pattern: &[usize],
) -> Result<HeraldedProjection, FockError> {
    check_modes(u, input)?;
    let m = input.modes();
    check_sector(input.photons(), m)?;
    if herald_modes.len() != herald_pattern.len() {
        return Err(FockError::InvalidHerald(format!(
            "{} herald modes but {} pattern entries",
            herald_modes.len(),
            herald_pattern.len()
        )));
    }
    let mut is_herald = vec![false; m];
    for &h in herald_modes {
        if h >= m {
            return Err(FockError::InvalidHerald(format!(
                "mode {h} out of range for {m} modes"
            )));
        }
        if is_herald[h] {
            return Err(FockError::InvalidHerald(format!("mode {h} listed twice")));
        }
        is_herald[h] = true;
    }
    let remaining_modes: Vec<usize> = (0..m).filter(|&i| !is_herald[i]).collect();
    let heralded: usize = herald_pattern.iter().sum();
    let Some(left) = input.photons().checked_sub(heralded) else {
        return Err(FockError::ImpossibleHerald { probability: 0.0 });
    };
    if remaining_modes.is_empty() && left > 0 {
        return Err(FockError::ImpossibleHerald { probability: 0.0 });
    }

    let cols = input.mode_list();
    let mut amplitudes = Vec::new();
    let mut full = vec![0usize; m];
    for (&h, &k) in herald_modes.iter().zip(herald_pattern) {
        full[h] = k;
    }
    let patterns = if remaining_modes.is_empty() {
        Vec::new()
    } else {
        FockState::all_with_photons(left, remaining_modes.len())
    };
    for rest in patterns {
        for (slot, &mode) in remaining_modes.iter().enumerate() {
            full[mode] = rest.occupation(slot);
        }
        let out = FockState::from_occupations_unchecked(full.clone());
        amplitudes.push((rest, amplitude_with_cols(u, &cols, input, &out)));
    }
    if remaining_modes.is_empty() {
        let out = FockState::from_occupations_unchecked(full.clone());
        let a = amplitude_with_cols(u, &cols, input, &out);
        let probability = a.norm_sqr();
        if probability <= IMPOSSIBLE_HERALD_THRESHOLD {
            return Err(FockError::ImpossibleHerald { probability });
        }
        return Ok(HeraldedProjection {
            remaining_modes,
            amplitudes: Vec::new(),
            probability,
        });
    }

    let probability: f64 = amplitudes.iter().map(|(_, a)| a.norm_sqr()).sum();
    if probability <= IMPOSSIBLE_HERALD_THRESHOLD {
        return Err(FockError::ImpossibleHerald { probability });
    }
    let norm = probability.sqrt();
    for (_, a) in amplitudes.iter_mut() {
        *a /= norm;
    }
    Ok(HeraldedProjection {
        remaining_modes,
        amplitudes,
        probability,
    })
}
