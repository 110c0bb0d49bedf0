//! Explicit finite-difference solver on a uniform grid of `(0, pi)`.
//!
//! Second-order central differences in `x` and `t`; the velocity terms use the
//! centred quotient `(w^{k+1} - w^{k-1}) / (2 dt)`, so each step solves the
//! constant 2x2 system `(I + dt/2 B) w^{k+1} = 2 w^k - w^{k-1} + dt^2 D2 w^k
//! + dt/2 B w^{k-1}` at every node.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use crate::coeffs::CoeffMatrix;
use crate::error::{Error, Result};
use crate::modal_sim::{EnergyTrace, ModalState};

/// Largest admissible `dt / dx`.
pub const CFL: f64 = 0.9;

/// Values at the interior nodes `x_j = j dx`, `j = 1..=M`, `dx = pi / (M + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
    pub v: Vec<f64>,
    pub v_t: Vec<f64>,
}

impl GridState {
    pub fn new(u: Vec<f64>, u_t: Vec<f64>, v: Vec<f64>, v_t: Vec<f64>) -> Result<Self> {
        let m = u.len();
        if m == 0 {
            return Err(Error::Domain("grid needs at least one interior point".into()));
        }
        for w in [&u_t, &v, &v_t] {
            if w.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: w.len() });
            }
        }
        if let Some(x) = [&u, &u_t, &v, &v_t].iter().flat_map(|w| w.iter()).find(|x| !x.is_finite()) {
            return Err(Error::NonFinite { field: "grid value", value: *x });
        }
        Ok(Self { u, u_t, v, v_t })
    }

    /// Samples `f(x) -> (u, u_t, v, v_t)` at the interior nodes.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> [f64; 4]) -> Result<Self> {
        let dx = PI / (m + 1) as f64;
        let vals: Vec<[f64; 4]> = (1..=m).map(|j| f(j as f64 * dx)).collect();
        Self::new(
            vals.iter().map(|w| w[0]).collect(),
            vals.iter().map(|w| w[1]).collect(),
            vals.iter().map(|w| w[2]).collect(),
            vals.iter().map(|w| w[3]).collect(),
        )
    }

    /// Evaluates a sine series on `m` interior nodes.
    pub fn from_modal(state: &ModalState, m: usize) -> Result<Self> {
        Self::from_fn(m, |x| {
            let mut w = [0.0; 4];
            for (i, c) in state.modes().iter().enumerate() {
                let s = ((i + 1) as f64 * x).sin();
                for k in 0..4 {
                    w[k] += c[k] * s;
                }
            }
            w
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn dx(&self) -> f64 {
        PI / (self.len() + 1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct FdRun {
    pub state: GridState,
    pub trace: EnergyTrace,
}

/// `(1/2) sum dx (u_t^2 + v_t^2) + (1/2) sum dx ((du/dx)^2 + (dv/dx)^2)` with
/// forward differences over the `M + 1` cells.
fn discrete_energy(u: &[f64], ut: &[f64], v: &[f64], vt: &[f64], dx: f64) -> f64 {
    let kinetic: f64 = ut.iter().chain(vt).map(|x| x * x).sum();
    let grad = |w: &[f64]| {
        let m = w.len();
        (0..=m)
            .map(|j| {
                let left = if j == 0 { 0.0 } else { w[j - 1] };
                let right = if j == m { 0.0 } else { w[j] };
                (right - left) * (right - left)
            })
            .sum::<f64>()
            / (dx * dx)
    };
    0.5 * dx * (kinetic + grad(u) + grad(v))
}

fn laplacian(w: &[f64], j: usize, dx2: f64) -> f64 {
    let left = if j == 0 { 0.0 } else { w[j - 1] };
    let right = if j + 1 == w.len() { 0.0 } else { w[j + 1] };
    (left - 2.0 * w[j] + right) / dx2
}

/// Marches to `t_end` with the largest step `<= dt` that divides `t_end`, and
/// records the discrete energy at `sample_times`, which must fall on the
/// time grid.
pub fn fd_leapfrog(b: &CoeffMatrix, init: &GridState, t_end: f64, dt: f64, sample_times: &[f64]) -> Result<FdRun> {
    let dx = init.dx();
    let max_dt = CFL * dx;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if dt > max_dt {
        return Err(Error::Cfl { dt, max_dt });
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be positive, got {t_end}")));
    }
    let steps = (t_end / dt).ceil() as usize;
    let h = t_end / steps as f64;
    let mut sample_steps = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        let k = (t / h).round();
        if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12)) || (k * h - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidTimes(format!("sample time {t} is not on the step grid h = {h}")));
        }
        sample_steps.push(k as usize);
    }
    if sample_steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimes("sample times must be increasing".into()));
    }

    let m = init.len();
    let dx2 = dx * dx;
    let bm = b.matrix();
    let lhs = (Matrix2::identity() + bm * (0.5 * h))
        .try_inverse()
        .ok_or_else(|| Error::Domain("I + dt/2 B is singular".into()))?;

    // Level 0 and level 1 (Taylor step using the equation for w_tt).
    let prev_u = init.u.clone();
    let prev_v = init.v.clone();
    let mut cur_u = vec![0.0; m];
    let mut cur_v = vec![0.0; m];
    for j in 0..m {
        let vel = Vector2::new(init.u_t[j], init.v_t[j]);
        let acc = Vector2::new(laplacian(&prev_u, j, dx2), laplacian(&prev_v, j, dx2)) - bm * vel;
        cur_u[j] = prev_u[j] + h * vel[0] + 0.5 * h * h * acc[0];
        cur_v[j] = prev_v[j] + h * vel[1] + 0.5 * h * h * acc[1];
    }
    let (mut prev_u, mut prev_v) = (prev_u, prev_v);

    let mut energy = Vec::with_capacity(sample_steps.len());
    let mut next_sample = 0;
    if sample_steps.first() == Some(&0) {
        energy.push(discrete_energy(&init.u, &init.u_t, &init.v, &init.v_t, dx));
        next_sample = 1;
    }
    let mut next_u = vec![0.0; m];
    let mut next_v = vec![0.0; m];
    let mut vel_u = vec![0.0; m];
    let mut vel_v = vec![0.0; m];
    // Loop invariant: cur = level k, prev = level k - 1.
    for k in 1..=steps {
        for j in 0..m {
            let cur = Vector2::new(cur_u[j], cur_v[j]);
            let old = Vector2::new(prev_u[j], prev_v[j]);
            let lap = Vector2::new(laplacian(&cur_u, j, dx2), laplacian(&cur_v, j, dx2));
            let rhs = 2.0 * cur - old + lap * (h * h) + bm * old * (0.5 * h);
            let new = lhs * rhs;
            next_u[j] = new[0];
            next_v[j] = new[1];
        }
        if next_sample < sample_steps.len() && sample_steps[next_sample] == k {
            for j in 0..m {
                vel_u[j] = (next_u[j] - prev_u[j]) / (2.0 * h);
                vel_v[j] = (next_v[j] - prev_v[j]) / (2.0 * h);
            }
            energy.push(discrete_energy(&cur_u, &vel_u, &cur_v, &vel_v, dx));
            next_sample += 1;
        }
        std::mem::swap(&mut prev_u, &mut cur_u);
        std::mem::swap(&mut cur_u, &mut next_u);
        std::mem::swap(&mut prev_v, &mut cur_v);
        std::mem::swap(&mut cur_v, &mut next_v);
    }
    // prev holds level `steps`; cur holds `steps + 1`.
    let u_t: Vec<f64> = (0..m).map(|j| (cur_u[j] - next_u[j]) / (2.0 * h)).collect();
    let v_t: Vec<f64> = (0..m).map(|j| (cur_v[j] - next_v[j]) / (2.0 * h)).collect();
    let state = GridState::new(prev_u, u_t, prev_v, v_t)?;
    let trace = EnergyTrace::from_samples(sample_times.to_vec(), energy)?;
    Ok(FdRun { state, trace })
}
