//! Fixed-step classical Runge–Kutta for the mode blocks.

use nalgebra::{Matrix4, Vector4};

use crate::coeffs::CoeffMatrix;
use crate::error::{Error, Result};
use crate::modal_sim::{mode_block, EnergyTrace, ModalState, ModeBlock};

fn steps(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("step must be positive, got {dt}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("integration time must be >= 0, got {t}")));
    }
    let n = (t / dt).ceil() as usize;
    Ok((n, if n == 0 { 0.0 } else { t / n as f64 }))
}

fn advance(m: &Matrix4<f64>, mut x: Vector4<f64>, n: usize, h: f64) -> Vector4<f64> {
    for _ in 0..n {
        let k1 = m * x;
        let k2 = m * (x + k1 * (0.5 * h));
        let k3 = m * (x + k2 * (0.5 * h));
        let k4 = m * (x + k3 * h);
        x += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
    }
    x
}

/// Integrates `x' = A_n x` to `t_end` with `ceil(t_end / dt)` equal steps.
pub fn rk4_integrate(block: &ModeBlock, state4: [f64; 4], t_end: f64, dt: f64) -> Result<[f64; 4]> {
    let (n, h) = steps(t_end, dt)?;
    let x = advance(&block.matrix, Vector4::from(state4), n, h);
    Ok([x[0], x[1], x[2], x[3]])
}

/// Energy trace by RK4, marching every mode from sample to sample with steps
/// no longer than `dt`.
pub fn rk4_trace(b: &CoeffMatrix, init: &ModalState, times: &[f64], dt: f64) -> Result<EnergyTrace> {
    let blocks: Vec<ModeBlock> = (1..=init.mode_count()).map(|n| mode_block(b, n)).collect::<Result<_>>()?;
    let mut state: Vec<Vector4<f64>> = init.modes().iter().map(|&m| Vector4::from(m)).collect();
    let mut t = 0.0;
    let mut energy = Vec::with_capacity(times.len());
    for &ts in times {
        let (n, h) = steps(ts - t, dt)?;
        for (x, blk) in state.iter_mut().zip(&blocks) {
            *x = advance(&blk.matrix, *x, n, h);
        }
        t = ts;
        let s = ModalState::new(state.iter().map(|x| [x[0], x[1], x[2], x[3]]).collect())?;
        energy.push(s.energy());
    }
    EnergyTrace::from_samples(times.to_vec(), energy)
}
