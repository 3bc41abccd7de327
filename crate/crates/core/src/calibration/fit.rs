use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{io_error, r_squared, CalibrationError, CalibrationSample};
use crate::circuit::chip::{
    apply_step, ChipStep, CHIP_MODES, CHIP_STEPS, DC_MODES, NUM_DCS, NUM_PARAMETERS, NUM_PHASE_LAYERS,
    PHASE_MODES,
};
use crate::circuit::{ChipModelParams, ChipPhases};

pub const FIT_REPORT_SCHEMA: &str = "photonchip.fit-report/v1";

const A_OFFSET: usize = NUM_DCS;
const PHI0_OFFSET: usize = A_OFFSET + 4 * NUM_PHASE_LAYERS;
const T_OFFSET: usize = PHI0_OFFSET + 2 * NUM_PHASE_LAYERS;
/// Crosstalk entries are optimized in units of 10⁻² rad/mA² so one Adam step
/// moves every parameter group by a comparable phase.
const A_SCALE: f64 = 100.0;
const R_MIN: f64 = 0.001;
const R_MAX: f64 = 0.999;
const T_MIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub train_fraction: f64,
    pub learning_rate: f64,
    /// Learning rate at the last epoch as a fraction of the initial one
    /// (exponential decay); 1 keeps it constant.
    pub final_lr_fraction: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Consecutive rising-MSE epochs treated as divergence.
    pub divergence_patience: usize,
    /// Optional staged training on samples whose largest current is at most the
    /// given value; each stage runs `epochs` epochs. Empty means one stage on all data.
    pub curriculum: Vec<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            learning_rate: 1e-2,
            final_lr_fraction: 1e-2,
            batch_size: 32,
            epochs: 300,
            seed: 0,
            divergence_patience: 10,
            curriculum: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_mse: f64,
    pub test_mse: f64,
    pub test_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema: String,
    /// Fitted parameters with output efficiencies max-normalized.
    pub params: ChipModelParams,
    pub train_size: usize,
    pub test_size: usize,
    pub train_mse: f64,
    pub test_mse: f64,
    pub test_r2: f64,
    /// R² over every sample, train and test.
    pub total_r2: f64,
    pub trace: Vec<EpochMetrics>,
}

impl FitReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), CalibrationError> {
        std::fs::write(path, self.to_json()).map_err(|e| io_error(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Per-epoch metrics as CSV: `epoch,learning_rate,train_mse,test_mse,test_r2`.
    pub fn write_trace_csv(&self, path: &Path) -> Result<(), CalibrationError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
        for m in &self.trace {
            w.serialize(m)?;
        }
        w.flush().map_err(|e| io_error(path, e))?;
        Ok(())
    }
}

/// Model distribution for one sample.
pub fn predict_sample(params: &ChipModelParams, sample: &CalibrationSample) -> [f64; CHIP_MODES] {
    params.predict(sample.port, &sample.currents)
}

fn sample_mse(params: &ChipModelParams, s: &CalibrationSample) -> f64 {
    let p = predict_sample(params, s);
    p.iter().zip(&s.distribution).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / CHIP_MODES as f64
}

fn mean_mse(params: &ChipModelParams, samples: &[&CalibrationSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| sample_mse(params, s)).sum::<f64>() / samples.len() as f64
}

fn dataset_r2(params: &ChipModelParams, samples: &[&CalibrationSample]) -> Result<f64, CalibrationError> {
    let mut y = Vec::with_capacity(samples.len() * CHIP_MODES);
    let mut y_hat = Vec::with_capacity(samples.len() * CHIP_MODES);
    for s in samples {
        y.extend_from_slice(&s.distribution);
        y_hat.extend_from_slice(&predict_sample(params, s));
    }
    r_squared(&y, &y_hat)
}

/// Adds the gradient of one sample's MSE (in natural parameter units) to `grad`
/// and returns the loss.
fn accumulate_gradient(params: &ChipModelParams, s: &CalibrationSample, grad: &mut [f64]) -> f64 {
    let phases: ChipPhases = params.phases_for_currents(&s.currents);
    let zero = Complex64::new(0.0, 0.0);

    let mut states: Vec<[Complex64; CHIP_MODES]> = Vec::with_capacity(CHIP_STEPS.len());
    let mut v = nalgebra::DMatrix::from_element(CHIP_MODES, 1, zero);
    v[(s.port, 0)] = Complex64::new(1.0, 0.0);
    for step in CHIP_STEPS {
        states.push(std::array::from_fn(|j| v[(j, 0)]));
        apply_step(step, &params.reflectivities, &phases, &mut v);
    }

    let t = &params.output_efficiencies;
    let intensity: [f64; CHIP_MODES] = std::array::from_fn(|j| v[(j, 0)].norm_sqr());
    let z: f64 = (0..CHIP_MODES).map(|j| t[j] * intensity[j]).sum();
    let p_hat: [f64; CHIP_MODES] = std::array::from_fn(|j| t[j] * intensity[j] / z);
    let e: [f64; CHIP_MODES] =
        std::array::from_fn(|j| 2.0 / CHIP_MODES as f64 * (p_hat[j] - s.distribution[j]));
    let c: f64 = (0..CHIP_MODES).map(|j| e[j] * p_hat[j]).sum();
    let loss = (0..CHIP_MODES).map(|j| (p_hat[j] - s.distribution[j]).powi(2)).sum::<f64>() / CHIP_MODES as f64;

    for m in 0..CHIP_MODES {
        grad[T_OFFSET + m] += intensity[m] / z * (e[m] - c);
    }
    // Adjoint vector: df = 2 Re(w† dv).
    let mut w: [Complex64; CHIP_MODES] = std::array::from_fn(|j| v[(j, 0)] * (t[j] / z * (e[j] - c)));

    let x = s.currents.currents();
    for (i, step) in CHIP_STEPS.iter().enumerate().rev() {
        let st = &states[i];
        match *step {
            ChipStep::Dc(k) => {
                let (a, b) = DC_MODES[k];
                let r = params.reflectivities[k];
                let (sr, sc) = (r.sqrt(), (1.0 - r).sqrt());
                let (dsr, dsc) = (0.5 / sr, -0.5 / sc);
                let i_ = Complex64::new(0.0, 1.0);
                let da = st[a] * dsr + i_ * dsc * st[b];
                let db = i_ * dsc * st[a] + st[b] * dsr;
                grad[k] += 2.0 * (w[a].conj() * da + w[b].conj() * db).re;
                let (wa, wb) = (w[a], w[b]);
                w[a] = wa * sr - i_ * sc * wb;
                w[b] = -i_ * sc * wa + wb * sr;
            }
            ChipStep::Phase { layer, slot } => {
                let mode = PHASE_MODES[layer][slot];
                let f = Complex64::from_polar(1.0, phases.0[2 * layer + slot]);
                let g = 2.0 * (w[mode].conj() * Complex64::new(0.0, 1.0) * f * st[mode]).re;
                grad[PHI0_OFFSET + 2 * layer + slot] += g;
                for r in 0..2 {
                    let xr = x[2 * layer + r];
                    grad[A_OFFSET + 4 * layer + 2 * slot + r] += g * xr * xr;
                }
                w[mode] *= f.conj();
            }
            ChipStep::Swap(a, b) => w.swap(a, b),
        }
    }
    loss
}

/// Mean MSE over `samples` and its gradient with respect to
/// [`ChipModelParams::to_vector`] coordinates.
pub fn loss_and_gradient(params: &ChipModelParams, samples: &[&CalibrationSample]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; NUM_PARAMETERS];
    let mut loss = 0.0;
    for s in samples {
        loss += accumulate_gradient(params, s, &mut grad);
    }
    let n = samples.len().max(1) as f64;
    for g in grad.iter_mut() {
        *g /= n;
    }
    (loss / n, grad)
}

fn to_internal(v: &mut [f64]) {
    for a in &mut v[A_OFFSET..PHI0_OFFSET] {
        *a *= A_SCALE;
    }
}

fn from_internal(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    for a in &mut out[A_OFFSET..PHI0_OFFSET] {
        *a /= A_SCALE;
    }
    out
}

fn project(v: &mut [f64]) {
    for r in &mut v[..NUM_DCS] {
        *r = r.clamp(R_MIN, R_MAX);
    }
    for t in &mut v[T_OFFSET..] {
        *t = t.max(T_MIN);
    }
}

/// Seeded split, stratified by input port.
fn split(data: &[CalibrationSample], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for port in 0..CHIP_MODES {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data[i].port == port).collect();
        idx.shuffle(rng);
        let cut = (fraction * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    (train, test)
}

fn max_current(s: &CalibrationSample) -> f64 {
    s.currents.currents().iter().cloned().fold(0.0, f64::max)
}

/// Adam minimization of the per-sample MSE over the 33 chip parameters.
pub fn fit_chip_model(
    data: &[CalibrationSample],
    init: &ChipModelParams,
    config: &FitConfig,
) -> Result<FitReport, CalibrationError> {
    if data.len() < 2 {
        return Err(CalibrationError::Dataset("need at least two samples".into()));
    }
    init.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (train_idx, test_idx) = split(data, config.train_fraction, &mut rng);
    let train: Vec<&CalibrationSample> = train_idx.iter().map(|&i| &data[i]).collect();
    let test: Vec<&CalibrationSample> = test_idx.iter().map(|&i| &data[i]).collect();
    let all: Vec<&CalibrationSample> = data.iter().collect();

    let mut theta = init.to_vector();
    to_internal(&mut theta);
    let mut m = vec![0.0; NUM_PARAMETERS];
    let mut v = vec![0.0; NUM_PARAMETERS];
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut t = 0i32;

    let stages: Vec<f64> = if config.curriculum.is_empty() {
        vec![f64::INFINITY]
    } else {
        config.curriculum.clone()
    };
    let total_epochs = stages.len() * config.epochs;
    let mut trace = Vec::with_capacity(total_epochs);
    let mut epoch = 0usize;
    let batch = config.batch_size.max(1);

    for cap in stages {
        let mut stage: Vec<&CalibrationSample> = train.iter().copied().filter(|s| max_current(s) <= cap).collect();
        if stage.is_empty() {
            continue;
        }
        let mut rising = 0usize;
        let mut prev = f64::INFINITY;
        for _ in 0..config.epochs {
            let progress = if total_epochs > 1 {
                epoch as f64 / (total_epochs - 1) as f64
            } else {
                0.0
            };
            let lr = config.learning_rate * config.final_lr_fraction.powf(progress);
            stage.shuffle(&mut rng);
            for chunk in stage.chunks(batch) {
                let params = ChipModelParams::from_vector(&from_internal(&theta));
                let (_, mut g) = loss_and_gradient(&params, chunk);
                for a in &mut g[A_OFFSET..PHI0_OFFSET] {
                    *a /= A_SCALE;
                }
                t += 1;
                for k in 0..NUM_PARAMETERS {
                    m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                    v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                    let mh = m[k] / (1.0 - b1.powi(t));
                    let vh = v[k] / (1.0 - b2.powi(t));
                    theta[k] -= lr * mh / (vh.sqrt() + eps);
                }
                project(&mut theta);
            }
            let params = ChipModelParams::from_vector(&from_internal(&theta));
            let train_mse = mean_mse(&params, &stage);
            let test_mse = mean_mse(&params, &test);
            let test_r2 = dataset_r2(&params, &test).unwrap_or(f64::NAN);
            trace.push(EpochMetrics {
                epoch,
                learning_rate: lr,
                train_mse,
                test_mse,
                test_r2,
            });
            epoch += 1;
            if train_mse > prev {
                rising += 1;
                if rising >= config.divergence_patience {
                    return Err(CalibrationError::Diverged {
                        epochs: rising,
                        last: train_mse,
                        trace,
                    });
                }
            } else {
                rising = 0;
            }
            prev = train_mse;
        }
    }
    let mut params = ChipModelParams::from_vector(&from_internal(&theta));
    params.normalize_efficiencies();
    let train_mse = mean_mse(&params, &train);
    let test_mse = mean_mse(&params, &test);
    let test_r2 = dataset_r2(&params, &test)?;
    let total_r2 = dataset_r2(&params, &all)?;
    Ok(FitReport {
        schema: FIT_REPORT_SCHEMA.to_string(),
        params,
        train_size: train.len(),
        test_size: test.len(),
        train_mse,
        test_mse,
        test_r2,
        total_r2,
        trace,
    })
}
