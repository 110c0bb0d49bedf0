//! Exact simulation on `(0, pi)` through the sine series
//! `u(x, t) = sum_n u_n(t) sin(nx)` (same for `u_t`, `v`, `v_t`).
//!
//! Each mode evolves independently under a 4x4 block acting on
//! `(u_n, y_n, v_n, z_n)`; a sample at time `t` is `exp(t A_n)` applied to the
//! initial coefficients, always starting from `t = 0`. The energy on `(0, pi)`
//! is `(pi / 4) sum_n [y_n^2 + n^2 u_n^2 + z_n^2 + n^2 v_n^2]`.

mod expm;
mod fit;
pub mod init;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::io::{self, Write};

use nalgebra::{Matrix4, Vector4};

use crate::coeffs::{CanonicalForm, CoeffMatrix, FormKind};
use crate::error::{Error, Result};
use crate::oracle::GridState;

pub use expm::expm;
pub use fit::{
    fit_decay, fit_log_energy, integral_inequality_check, DecayFit, FitOptions, IntegralInequality,
    LogEnergyFit,
};

/// The 4x4 generator of mode `n`:
/// `d/dt (u, y, v, z) = (y, -n^2 u - alpha y - beta z, z, -gamma y - n^2 v - eta z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBlock {
    pub n: usize,
    pub matrix: Matrix4<f64>,
}

impl ModeBlock {
    pub fn new(b: &CoeffMatrix, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("mode index must be >= 1".into()));
        }
        let n2 = (n * n) as f64;
        #[rustfmt::skip]
        let matrix = Matrix4::new(
            0.0, 1.0, 0.0, 0.0,
            -n2, -b.alpha, 0.0, -b.beta,
            0.0, 0.0, 0.0, 1.0,
            0.0, -b.gamma, -n2, -b.eta,
        );
        Ok(Self { n, matrix })
    }

    /// Monic characteristic polynomial `[1, c3, c2, c1, c0]` predicted from
    /// the trace and determinant of the coupling matrix:
    /// `l^4 + tr l^3 + (2n^2 + det) l^2 + tr n^2 l + n^4`.
    pub fn expected_char_poly(b: &CoeffMatrix, n: usize) -> [f64; 5] {
        let n2 = (n * n) as f64;
        let tr = b.trace();
        [1.0, tr, 2.0 * n2 + b.det(), tr * n2, n2 * n2]
    }

    /// Generator in energy coordinates `(n u, y, n v, z)`, where the undamped
    /// part is skew-symmetric.
    fn energy_scaled(&self) -> Matrix4<f64> {
        let n = self.n as f64;
        let d = Vector4::new(n, 1.0, n, 1.0);
        Matrix4::from_fn(|i, j| self.matrix[(i, j)] * d[i] / d[j])
    }
}

pub fn mode_block(b: &CoeffMatrix, n: usize) -> Result<ModeBlock> {
    ModeBlock::new(b, n)
}

struct Propagator {
    n: f64,
    scaled: Matrix4<f64>,
}

impl Propagator {
    fn new(block: &ModeBlock) -> Self {
        Self { n: block.n as f64, scaled: block.energy_scaled() }
    }

    fn apply(&self, x: [f64; 4], t: f64) -> [f64; 4] {
        if t == 0.0 {
            return x;
        }
        let n = self.n;
        let xs = Vector4::new(n * x[0], x[1], n * x[2], x[3]);
        let y = expm(&(self.scaled * t)) * xs;
        [y[0] / n, y[1], y[2] / n, y[3]]
    }
}

/// `exp(t A_n) x` by scaling and squaring.
pub fn evolve_mode(block: &ModeBlock, state4: [f64; 4], t: f64) -> Result<[f64; 4]> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("evolution time must be finite and >= 0, got {t}")));
    }
    Ok(Propagator::new(block).apply(state4, t))
}

/// Sine-series coefficients `(u_n, y_n, v_n, z_n)` for `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    modes: Vec<[f64; 4]>,
}

impl ModalState {
    pub fn new(modes: Vec<[f64; 4]>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Domain("modal state needs at least one mode".into()));
        }
        if let Some(bad) = modes.iter().flatten().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite { field: "modal coefficient", value: *bad });
        }
        Ok(Self { modes })
    }

    pub fn zeros(n_modes: usize) -> Result<Self> {
        Self::new(vec![[0.0; 4]; n_modes])
    }

    /// Packed `[u_1, y_1, v_1, z_1, u_2, ...]`.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() % 4 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 4 * values.len().div_ceil(4),
                found: values.len(),
            });
        }
        Self::new(values.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect())
    }

    pub fn random(n_modes: usize, seed: u64) -> Result<Self> {
        Self::new(init::random_coefficients(n_modes, seed))
    }

    /// Only mode `n` nonzero.
    pub fn single_mode(n_modes: usize, n: usize, coeffs: [f64; 4]) -> Result<Self> {
        if n == 0 || n > n_modes {
            return Err(Error::Domain(format!("mode {n} outside 1..={n_modes}")));
        }
        let mut modes = vec![[0.0; 4]; n_modes];
        modes[n - 1] = coeffs;
        Self::new(modes)
    }

    /// Discrete sine transform of gridded data by trapezoidal quadrature:
    /// `w_n = (2 / pi) sum_j w(x_j) sin(n x_j) dx`. Aliasing-free for `n <= M`;
    /// for smooth data the error is `O(dx^2)`.
    pub fn from_grid(grid: &GridState, n_modes: usize) -> Result<Self> {
        let dx = grid.dx();
        let modes = (1..=n_modes)
            .map(|n| {
                let mut acc = [0.0; 4];
                for j in 0..grid.len() {
                    let s = ((n * (j + 1)) as f64 * dx).sin();
                    acc[0] += grid.u[j] * s;
                    acc[1] += grid.u_t[j] * s;
                    acc[2] += grid.v[j] * s;
                    acc[3] += grid.v_t[j] * s;
                }
                acc.map(|a| a * dx * 2.0 / std::f64::consts::PI)
            })
            .collect();
        Self::new(modes)
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[[f64; 4]] {
        &self.modes
    }

    /// Coefficients of mode `n` (1-based).
    pub fn mode(&self, n: usize) -> [f64; 4] {
        self.modes[n - 1]
    }

    pub fn energy(&self) -> f64 {
        self.weighted_energy(1.0)
    }

    /// `(pi / 4) sum_n [kappa y^2 + kappa n^2 u^2 + z^2 + n^2 v^2]`.
    pub fn weighted_energy(&self, kappa: f64) -> f64 {
        let terms = self.modes.iter().enumerate().map(|(i, &[u, y, v, z])| {
            let n2 = ((i + 1) * (i + 1)) as f64;
            kappa * (y * y + n2 * u * u) + z * z + n2 * v * v
        });
        FRAC_PI_4 * compensated_sum(terms)
    }

    /// `(pi / 2) sum_n (y_n^2 + z_n^2)`, i.e. the integral of `u_t^2 + v_t^2`.
    pub fn velocity_norm_sq(&self) -> f64 {
        FRAC_PI_2 * compensated_sum(self.modes.iter().map(|m| m[1] * m[1] + m[3] * m[3]))
    }
}

/// Neumaier summation, in iteration order.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// The state at time `t` for coupling `b`.
pub fn evolve_state(b: &CoeffMatrix, init: &ModalState, t: f64) -> Result<ModalState> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("evolution time must be finite and >= 0, got {t}")));
    }
    let props = propagators(b, init.mode_count())?;
    ModalState::new(props.iter().zip(init.modes()).map(|(p, &x)| p.apply(x, t)).collect())
}

fn propagators(b: &CoeffMatrix, modes: usize) -> Result<Vec<Propagator>> {
    (1..=modes).map(|n| ModeBlock::new(b, n).map(|blk| Propagator::new(&blk))).collect()
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidTimes("no sample times".into()));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidTimes(format!("non-finite time {t}")));
    }
    if times[0] < 0.0 {
        return Err(Error::InvalidTimes(format!("first time {} is negative", times[0])));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimes(format!("times not increasing at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

/// Weighted energy samples and the weight used.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnergy {
    pub kappa: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub weighted: Option<WeightedEnergy>,
}

impl EnergyTrace {
    /// Wraps externally produced samples (synthetic traces, other solvers).
    pub fn from_samples(times: Vec<f64>, energy: Vec<f64>) -> Result<Self> {
        validate_times(&times)?;
        if energy.len() != times.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: energy.len() });
        }
        Ok(Self { times, energy, weighted: None })
    }

    /// `t,E,E_kappa,logE` with 17 significant digits and LF line endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,E,E_kappa,logE")?;
        for (i, (&t, &e)) in self.times.iter().zip(&self.energy).enumerate() {
            let ek = match &self.weighted {
                Some(wt) => fmt17(wt.values[i]),
                None => String::new(),
            };
            writeln!(w, "{},{},{},{}", fmt17(t), fmt17(e), ek, fmt17(e.ln()))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Decimal scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Evolves every mode from `t = 0` to each sample time and records the
/// energy, plus the weighted energy when `kappa` is given.
pub fn simulate(b: &CoeffMatrix, init: &ModalState, times: &[f64], kappa: Option<f64>) -> Result<EnergyTrace> {
    validate_times(times)?;
    if let Some(k) = kappa {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Domain(format!("kappa must be positive, got {k}")));
        }
    }
    let props = propagators(b, init.mode_count())?;
    let mut energy = Vec::with_capacity(times.len());
    let mut weighted = kappa.map(|_| Vec::with_capacity(times.len()));
    for &t in times {
        let state = ModalState { modes: props.iter().zip(init.modes()).map(|(p, &x)| p.apply(x, t)).collect() };
        energy.push(state.energy());
        if let (Some(w), Some(k)) = (weighted.as_mut(), kappa) {
            w.push(state.weighted_energy(k));
        }
    }
    Ok(EnergyTrace {
        times: times.to_vec(),
        energy,
        weighted: weighted.map(|values| WeightedEnergy { kappa: kappa.unwrap(), values }),
    })
}

/// `n` equally spaced samples on `[0, t_end]`.
pub fn uniform_times(t_end: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidTimes(format!("need >= 2 samples on (0, t_end], got {samples} on {t_end}")));
    }
    let step = t_end / (samples - 1) as f64;
    Ok((0..samples).map(|i| if i + 1 == samples { t_end } else { i as f64 * step }).collect())
}

/// Weight for the equivalent energy of the triangular form:
/// `kappa = max(1, b^2 / (2ac))`, which makes `b^2 - 4 kappa a c < 0`.
pub fn choose_kappa(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && c > 0.0) {
        return Err(Error::Domain(format!("choose_kappa needs a > 0 and c > 0, got a = {a}, c = {c}")));
    }
    Ok(f64::max(1.0, b * b / (2.0 * a * c)))
}

/// Largest deviation between the centered difference quotient of the energy
/// and the dissipation `-a (pi/2) sum (y^2 + z^2)` at the interval midpoints.
/// The times must be uniformly spaced; the deviation is `O(dt^2)`.
pub fn energy_dissipation_residual(form: &CanonicalForm, init: &ModalState, times: &[f64]) -> Result<f64> {
    if form.kind != FormKind::Rotation {
        return Err(Error::Domain("energy dissipation identity applies to the rotation form".into()));
    }
    if times.len() < 3 {
        return Err(Error::InvalidTimes(format!("need at least 3 samples, got {}", times.len())));
    }
    validate_times(times)?;
    let dt = times[1] - times[0];
    if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::InvalidTimes("samples must be uniformly spaced".into()));
    }
    let b = form.coeffs();
    let props = propagators(&b, init.mode_count())?;
    let at = |t: f64| ModalState { modes: props.iter().zip(init.modes()).map(|(p, &x)| p.apply(x, t)).collect() };

    let energies: Vec<f64> = times.iter().map(|&t| at(t).energy()).collect();
    let mut worst = 0.0f64;
    for (i, w) in times.windows(2).enumerate() {
        let h = w[1] - w[0];
        let slope = (energies[i + 1] - energies[i]) / h;
        let mid = at(0.5 * (w[0] + w[1]));
        let predicted = -form.a * mid.velocity_norm_sq();
        worst = worst.max((slope - predicted).abs());
    }
    Ok(worst)
}
