//! Decay-rate estimation and the integral inequality `int_S^T E <= C E(S)`.

use nalgebra::{DMatrix, DVector};

use super::EnergyTrace;
use crate::error::{Error, Result};
use crate::spectrum::DecayPrediction;

/// Energies below this are treated as underflowed and dropped from the window.
const UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// The window is `[start_fraction * T, T]`.
    pub start_fraction: f64,
    pub min_samples: usize,
    /// Passes of peak resampling after the initial fit.
    pub peak_passes: usize,
    /// A first pass whose largest log-residual is below this is accepted as is.
    pub exact_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { start_fraction: 0.5, min_samples: 20, peak_passes: 2, exact_tol: 1e-9 }
    }
}

/// `log E ~ log_m + q log t - omega t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEnergyFit {
    pub log_m: f64,
    pub q: f64,
    pub omega: f64,
    pub max_residual: f64,
}

impl LogEnergyFit {
    pub fn predict(&self, t: f64) -> f64 {
        self.log_m + self.q * t.ln() - self.omega * t
    }
}

/// Least-squares fit of `log E` against `(1, log t, -t)`. Needs `t > 0`,
/// `E > 0` and at least three points.
pub fn fit_log_energy(times: &[f64], energy: &[f64]) -> Result<LogEnergyFit> {
    if times.len() != energy.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: energy.len() });
    }
    if times.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", times.len())));
    }
    if let Some(t) = times.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::Fit(format!("fit times must be positive, got {t}")));
    }
    if let Some(e) = energy.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::Fit(format!("energy must be positive on the fit window, got {e}")));
    }
    // Centre log t and t so the normal directions are well separated.
    let m = times.len();
    let mean_log = times.iter().map(|t| t.ln()).sum::<f64>() / m as f64;
    let mean_t = times.iter().sum::<f64>() / m as f64;
    let design = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => 1.0,
        1 => times[i].ln() - mean_log,
        _ => -(times[i] - mean_t),
    });
    let rhs = DVector::from_iterator(m, energy.iter().map(|e| e.ln()));
    let sol = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let (c0, q, omega) = (sol[0], sol[1], sol[2]);
    let fit = LogEnergyFit { log_m: c0 - q * mean_log + omega * mean_t, q, omega, max_residual: 0.0 };
    let max_residual = times
        .iter()
        .zip(&rhs)
        .map(|(&t, &y)| (y - fit.predict(t)).abs())
        .fold(0.0, f64::max);
    Ok(LogEnergyFit { max_residual, ..fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub omega_hat: f64,
    /// Fitted polynomial exponent `q` of `E ~ M t^q exp(-omega t)`.
    pub p_hat: f64,
    pub rel_err_omega: f64,
    pub log_m: f64,
    pub window: (f64, f64),
    pub points_used: usize,
    pub peak_sampled: bool,
}

/// Fits the late-time decay of `trace.energy` on `[T/2, T]`.
///
/// Oscillating energies are fitted through the local maxima of the residual
/// of a first straight fit, which lie on the envelope.
pub fn fit_decay(trace: &EnergyTrace, prediction: &DecayPrediction, options: &FitOptions) -> Result<DecayFit> {
    if trace.times.is_empty() {
        return Err(Error::Fit("empty trace".into()));
    }
    if let Some(e) = trace.energy.iter().find(|&&e| e < 0.0 || e.is_nan()) {
        return Err(Error::Fit(format!("non-positive energy {e}")));
    }
    // The window ends before the first underflowed sample.
    let end = trace.energy.iter().position(|&e| e < UNDERFLOW).unwrap_or(trace.energy.len());
    if end == 0 {
        return Err(Error::Fit("energy underflows immediately".into()));
    }
    let t_end = trace.times[end - 1];
    let start = options.start_fraction * t_end;
    let (times, energy): (Vec<f64>, Vec<f64>) = trace.times[..end]
        .iter()
        .zip(&trace.energy[..end])
        .filter(|(&t, _)| t >= start && t > 0.0)
        .map(|(&t, &e)| (t, e))
        .unzip();
    if times.len() < options.min_samples {
        return Err(Error::Fit(format!(
            "{} samples in the fit window, need {}",
            times.len(),
            options.min_samples
        )));
    }

    let mut fit = fit_log_energy(&times, &energy)?;
    let mut used = times.len();
    let mut peak_sampled = false;
    if fit.max_residual > options.exact_tol {
        for _ in 0..options.peak_passes {
            let resid: Vec<f64> = times.iter().zip(&energy).map(|(&t, &e)| e.ln() - fit.predict(t)).collect();
            let peaks: Vec<usize> = (1..resid.len() - 1)
                .filter(|&i| resid[i] >= resid[i - 1] && resid[i] > resid[i + 1])
                .collect();
            if peaks.len() < 4 {
                break;
            }
            let pt: Vec<f64> = peaks.iter().map(|&i| times[i]).collect();
            let pe: Vec<f64> = peaks.iter().map(|&i| energy[i]).collect();
            fit = fit_log_energy(&pt, &pe)?;
            used = peaks.len();
            peak_sampled = true;
        }
    }
    let omega = prediction.omega;
    Ok(DecayFit {
        omega_hat: fit.omega,
        p_hat: fit.q,
        rel_err_omega: (fit.omega - omega).abs() / omega,
        log_m: fit.log_m,
        window: (times[0], *times.last().unwrap()),
        points_used: used,
        peak_sampled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralInequality {
    /// `max_S int_S^T E / E(S)` over the full trace.
    pub c_hat: f64,
    /// The same over samples with `t <= T/2`.
    pub c_hat_half: f64,
    pub holds: bool,
    /// Largest `E(t) / (E(0) exp(1 - t / c_hat))` over samples `t >= c_hat`.
    pub bound_ratio: f64,
    pub bound_holds: bool,
}

/// Integral inequality for a non-increasing energy: uses the weighted series
/// when the trace carries one, the plain energy otherwise.
pub fn integral_inequality_check(trace: &EnergyTrace) -> Result<IntegralInequality> {
    let times = &trace.times;
    let energy = trace.weighted.as_ref().map_or(&trace.energy, |w| &w.values);
    if times.len() < 2 || energy.len() != times.len() {
        return Err(Error::Fit("integral inequality needs at least 2 samples".into()));
    }
    for (i, w) in energy.windows(2).enumerate() {
        if w[1] - w[0] > 1e-10 * w[0].abs() {
            return Err(Error::NotMonotone { index: i + 1, from: w[0], to: w[1] });
        }
    }
    if !(energy[0] > 0.0) {
        return Err(Error::Fit("initial energy must be positive".into()));
    }
    let t_end = *times.last().unwrap();
    let c_hat = max_ratio(times, energy);
    let half = times.iter().take_while(|&&t| t <= 0.5 * t_end + 1e-12 * t_end).count();
    let c_hat_half = if half >= 2 { max_ratio(&times[..half], &energy[..half]) } else { f64::NAN };
    let holds = c_hat.is_finite() && c_hat_half.is_finite() && c_hat / c_hat_half < 1.05;

    let mut bound_ratio = 0.0f64;
    if c_hat.is_finite() && c_hat > 0.0 {
        for (&t, &e) in times.iter().zip(energy) {
            if t >= c_hat {
                bound_ratio = bound_ratio.max(e / (energy[0] * (1.0 - t / c_hat).exp()));
            }
        }
    }
    Ok(IntegralInequality {
        c_hat,
        c_hat_half,
        holds,
        bound_ratio,
        bound_holds: bound_ratio <= 1.0 + 1e-9,
    })
}

/// `max_i (trapezoid int_{t_i}^{t_end} E) / E(t_i)`, skipping zero energies.
fn max_ratio(times: &[f64], energy: &[f64]) -> f64 {
    let mut tail = 0.0;
    let mut best = 0.0f64;
    for i in (0..times.len()).rev() {
        if i + 1 < times.len() {
            tail += 0.5 * (energy[i] + energy[i + 1]) * (times[i + 1] - times[i]);
        }
        if energy[i] > 0.0 {
            best = best.max(tail / energy[i]);
        }
    }
    best
}
