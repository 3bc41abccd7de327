use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::CalibrationError;
use crate::circuit::chip::CHIP_MODES;
use crate::circuit::{ChipModelParams, ChipPhases};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    /// `diag(r)·M·diag(c)`.
    pub balanced: DMatrix<f64>,
    pub row_scalings: Vec<f64>,
    pub col_scalings: Vec<f64>,
    pub iterations: usize,
}

/// Kuhn augmenting-path matching restricted to positive entries, with one row and
/// one column optionally removed.
fn perfect_matching_exists(m: &DMatrix<f64>, skip: Option<(usize, usize)>) -> bool {
    let n = m.nrows();
    let rows: Vec<usize> = (0..n).filter(|&i| skip.map_or(true, |(r, _)| r != i)).collect();
    let cols_ok = |j: usize| skip.map_or(true, |(_, c)| c != j);
    let mut owner: Vec<Option<usize>> = vec![None; n];

    fn augment(
        i: usize,
        m: &DMatrix<f64>,
        cols_ok: &dyn Fn(usize) -> bool,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..m.ncols() {
            if m[(i, j)] > 0.0 && cols_ok(j) && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, m, cols_ok, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }

    rows.iter().all(|&i| {
        let mut seen = vec![false; n];
        augment(i, m, &cols_ok, &mut seen, &mut owner)
    })
}

/// Whether every positive entry lies on a positive diagonal (and one exists).
pub fn has_total_support(m: &DMatrix<f64>) -> bool {
    if !perfect_matching_exists(m, None) {
        return false;
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] > 0.0 && !perfect_matching_exists(m, Some((i, j))) {
                return false;
            }
        }
    }
    true
}

/// Alternating row/column normalization to a doubly stochastic matrix.
pub fn sinkhorn_knopp(m: &DMatrix<f64>, max_iterations: usize, tol: f64) -> Result<SinkhornResult, CalibrationError> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(CalibrationError::InvalidMatrix(format!("shape {:?}", m.shape())));
    }
    if m.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(CalibrationError::InvalidMatrix("negative or non-finite entry".into()));
    }
    if m.iter().any(|&v| v == 0.0) && !has_total_support(m) {
        return Err(CalibrationError::NoTotalSupport);
    }
    let mut r = vec![1.0; n];
    let mut c = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iterations {
        for i in 0..n {
            r[i] = 1.0 / (0..n).map(|j| m[(i, j)] * c[j]).sum::<f64>();
        }
        for j in 0..n {
            c[j] = 1.0 / (0..n).map(|i| r[i] * m[(i, j)]).sum::<f64>();
        }
        let balanced = DMatrix::from_fn(n, n, |i, j| r[i] * m[(i, j)] * c[j]);
        residual = (0..n)
            .map(|i| (balanced.row(i).sum() - 1.0).abs())
            .chain((0..n).map(|j| (balanced.column(j).sum() - 1.0).abs()))
            .fold(0.0, f64::max);
        if residual <= tol {
            return Ok(SinkhornResult {
                balanced,
                row_scalings: r,
                col_scalings: c,
                iterations: it,
            });
        }
    }
    Err(CalibrationError::NotConverged {
        iterations: max_iterations,
        residual,
    })
}

/// `|Tr(M_e† M_t)|² / (Tr(M_e† M_e) · Tr(M_t† M_t))` for real matrices.
pub fn transfer_matrix_fidelity(me: &DMatrix<f64>, mt: &DMatrix<f64>) -> Result<f64, CalibrationError> {
    if me.shape() != mt.shape() {
        return Err(CalibrationError::InvalidMatrix(format!(
            "shapes {:?} and {:?} differ",
            me.shape(),
            mt.shape()
        )));
    }
    let cross = me.dot(mt);
    let ee = me.dot(me);
    let tt = mt.dot(mt);
    if ee == 0.0 || tt == 0.0 {
        return Err(CalibrationError::ZeroMatrix);
    }
    Ok(cross * cross / (ee * tt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrixCharacterization {
    /// `|U|²` of the model (rows are outputs, columns inputs).
    pub theory: DMatrix<f64>,
    /// `diag(T_out)·|U|²·diag(T_in)`.
    pub raw: DMatrix<f64>,
    pub doubly_stochastic: DMatrix<f64>,
    /// `raw ÷ doubly_stochastic`, elementwise.
    pub efficiency: DMatrix<f64>,
    pub row_scalings: Vec<f64>,
    pub col_scalings: Vec<f64>,
    /// Fidelity of the balanced matrix against the theoretical intensities.
    pub fidelity: f64,
}

/// Laser transfer-matrix measurement of `chip` with coupling efficiencies.
pub fn simulate_characterization(
    chip: &ChipModelParams,
    phases: &ChipPhases,
    t_in: &[f64; CHIP_MODES],
    t_out: &[f64; CHIP_MODES],
) -> Result<TransferMatrixCharacterization, CalibrationError> {
    if let Some(&t) = t_in.iter().chain(t_out).find(|&&t| !(t > 0.0)) {
        return Err(CalibrationError::InvalidMatrix(format!("coupling efficiency {t} must be positive")));
    }
    let theory = chip.unitary(phases).intensities();
    let raw = DMatrix::from_fn(CHIP_MODES, CHIP_MODES, |i, j| t_out[i] * theory[(i, j)] * t_in[j]);
    let sk = sinkhorn_knopp(&raw, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE)?;
    let efficiency = raw.component_div(&sk.balanced);
    let fidelity = transfer_matrix_fidelity(&sk.balanced, &theory)?;
    Ok(TransferMatrixCharacterization {
        theory,
        raw,
        doubly_stochastic: sk.balanced,
        efficiency,
        row_scalings: sk.row_scalings,
        col_scalings: sk.col_scalings,
        fidelity,
    })
}
