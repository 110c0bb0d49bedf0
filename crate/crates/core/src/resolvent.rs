//! Frequency-domain stability test: the spectrum must avoid the imaginary axis
//! and the resolvent `(i xi - A)^-1` must stay bounded along it.
//!
//! Norms are taken in the energy norm of mode `n`, i.e. the largest singular
//! value of `D (i xi - A_n)^-1 D^-1` with `D = diag(sqrt(k) n, sqrt(k), n, 1)`,
//! where `k` is the weight of the equivalent energy (1 for the rotation form).
//! In these coordinates `D A_n D^-1 = n S + A_1` with `S` skew with
//! eigenvalues `+-i` and `A_1` acting on the velocities only, which gives the
//! bound `|R_n(xi)| <= 1 / (dist(|xi|, n) - |A_1|)` used to skip far modes and
//! to bound the truncated tail.

use std::io::{self, Write};

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::coeffs::{CanonicalForm, FormKind};
use crate::error::{Error, Result};
use crate::modal_sim::{choose_kappa, fmt17};
use crate::spectrum::{eigenvalues_case_i, eigenvalues_case_ii};

/// Real parts at or above this count as touching the axis.
pub const AXIS_TOL: f64 = -1e-12;
/// `|R| |i xi - A|` beyond this is reported as a singular point.
pub const SINGULAR_COND: f64 = 1e14;
/// Relative change of the sup under grid halving accepted as converged.
pub const REFINE_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventOptions {
    pub xi_max: f64,
    pub grid_step: f64,
    pub n_max: usize,
}

impl ResolventOptions {
    /// Modes up to `2 xi_max + 16`.
    pub fn with_xi_max(xi_max: f64, grid_step: f64) -> Self {
        Self { xi_max, grid_step, n_max: (2.0 * xi_max).ceil() as usize + 16 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.xi_max > 0.0 && self.xi_max.is_finite()) {
            return Err(Error::Domain(format!("xi_max must be positive, got {}", self.xi_max)));
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(Error::Domain(format!("grid_step must be positive, got {}", self.grid_step)));
        }
        if self.n_max == 0 {
            return Err(Error::Domain("n_max must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for ResolventOptions {
    fn default() -> Self {
        Self::with_xi_max(80.0, 0.01)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisCheck {
    pub clear: bool,
    /// Largest real part over modes `1..=n_max`.
    pub max_re: f64,
    pub worst_mode: usize,
    pub worst_eigenvalue: Complex64,
    /// Largest real part at mode `n_max + 1`; the abscissa is monotone in the
    /// mode index beyond the first few modes, so this bounds the tail.
    pub tail_abscissa: f64,
}

fn mode_eigenvalues(form: &CanonicalForm, n: usize) -> Result<[Complex64; 4]> {
    match form.kind {
        FormKind::Rotation => eigenvalues_case_i(form.a, form.b, n),
        FormKind::Triangular => Ok(eigenvalues_case_ii(form.a, form.c, n)),
    }
}

pub fn imaginary_axis_clear(form: &CanonicalForm, n_max: usize) -> Result<AxisCheck> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be >= 1".into()));
    }
    let mut max_re = f64::NEG_INFINITY;
    let mut worst = (1, Complex64::new(0.0, 0.0));
    for n in 1..=n_max {
        for l in mode_eigenvalues(form, n)? {
            if l.re > max_re {
                max_re = l.re;
                worst = (n, l);
            }
        }
    }
    let tail_abscissa = mode_eigenvalues(form, n_max + 1)?.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(AxisCheck {
        clear: max_re <= AXIS_TOL && tail_abscissa <= AXIS_TOL,
        max_re,
        worst_mode: worst.0,
        worst_eigenvalue: worst.1,
        tail_abscissa,
    })
}

/// Weight of the energy norm: 1 for the rotation form, `choose_kappa` for a
/// dissipative triangular form and 1 otherwise.
pub fn norm_weight(form: &CanonicalForm) -> f64 {
    match form.kind {
        FormKind::Rotation => 1.0,
        FormKind::Triangular => choose_kappa(form.a, form.b, form.c).unwrap_or(1.0),
    }
}

/// Mode blocks in energy coordinates for a fixed form and weight.
struct ScaledBlocks {
    coupling: Matrix2<f64>,
    /// Spectral norm of the velocity coupling, the `A_1` above.
    coupling_norm: f64,
}

impl ScaledBlocks {
    fn new(form: &CanonicalForm, kappa: f64) -> Self {
        let b = form.coeffs();
        let sk = kappa.sqrt();
        let coupling = -Matrix2::new(b.alpha, b.beta * sk, b.gamma / sk, b.eta);
        let coupling_norm = coupling.singular_values().max();
        Self { coupling, coupling_norm }
    }

    /// `i xi I - (n S + A_1)`.
    fn shifted(&self, n: usize, xi: f64) -> Matrix4<Complex64> {
        let n = n as f64;
        let z = Complex64::new(0.0, 0.0);
        let r = |x: f64| Complex64::new(x, 0.0);
        let ix = Complex64::new(0.0, xi);
        let c = &self.coupling;
        #[rustfmt::skip]
        let m = Matrix4::new(
            ix, r(-n), z, z,
            r(n), ix - c[(0, 0)], z, r(-c[(0, 1)]),
            z, z, ix, r(-n),
            z, r(-c[(1, 0)]), r(n), ix - c[(1, 1)],
        );
        m
    }

    fn norm_at(&self, n: usize, xi: f64) -> f64 {
        let shifted = self.shifted(n, xi);
        match shifted.try_inverse() {
            Some(inv) => {
                let s = spectral_norm(&inv);
                if !s.is_finite() || s * frobenius(&shifted) > SINGULAR_COND {
                    f64::INFINITY
                } else {
                    s
                }
            }
            None => f64::INFINITY,
        }
    }

    /// Bound on `|R_n(xi)|` from the distance to the undamped spectrum.
    fn far_bound(&self, n: usize, xi: f64) -> f64 {
        let gap = (xi.abs() - n as f64).abs() - self.coupling_norm;
        if gap > 0.0 {
            1.0 / gap
        } else {
            f64::INFINITY
        }
    }
}

fn frobenius(m: &Matrix4<Complex64>) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value by power iteration on `M^H M`, started from the
/// dominant column of `(M^H M)^32`.
pub fn spectral_norm(m: &Matrix4<Complex64>) -> f64 {
    let gram = m.adjoint() * m;
    let scale = gram.trace().re;
    if !(scale > 0.0) || !scale.is_finite() {
        return if scale == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let mut h = gram / Complex64::new(scale, 0.0);
    for _ in 0..5 {
        h = h * h;
        let t = h.trace().re;
        h /= Complex64::new(t, 0.0);
    }
    let mut x = h.column_iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap().into_owned();
    x /= Complex64::new(x.norm(), 0.0);
    let mut lambda = (x.adjoint() * gram * &x)[(0, 0)].re;
    for _ in 0..200 {
        let mut y = h * &x;
        let ny = y.norm();
        if ny == 0.0 {
            break;
        }
        y /= Complex64::new(ny, 0.0);
        let next = (y.adjoint() * gram * &y)[(0, 0)].re;
        x = y;
        let done = (next - lambda).abs() <= 1e-10 * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    lambda.max(0.0).sqrt()
}

/// Energy-norm resolvent `|(i xi - A_n)^-1|`; infinite on the spectrum.
pub fn resolvent_norm(form: &CanonicalForm, kappa: f64, n: usize, xi: f64) -> f64 {
    ScaledBlocks::new(form, kappa).norm_at(n, xi)
}

/// Sup over `1..=n_max` at one frequency, visiting modes outward from the
/// nearest resonance and stopping once the far-mode bound cannot win.
fn sup_over_modes(blocks: &ScaledBlocks, xi: f64, n_max: usize) -> (f64, usize) {
    let centre = (xi.abs().round() as usize).clamp(1, n_max);
    let mut best = (0.0f64, centre);
    let visit = |n: usize, best: &mut (f64, usize)| {
        let v = blocks.norm_at(n, xi);
        if v > best.0 {
            *best = (v, n);
        }
    };
    visit(centre, &mut best);
    let (mut up, mut down) = (centre + 1, centre.saturating_sub(1));
    let (mut up_open, mut down_open) = (up <= n_max, down >= 1);
    while up_open || down_open {
        if up_open {
            if blocks.far_bound(up, xi) <= best.0 {
                up_open = false;
            } else {
                visit(up, &mut best);
                up += 1;
                up_open = up <= n_max;
            }
        }
        if down_open {
            if blocks.far_bound(down, xi) <= best.0 {
                down_open = false;
            } else {
                visit(down, &mut best);
                down -= 1;
                down_open = down >= 1;
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSweep {
    pub xi: Vec<f64>,
    pub sup_norm: Vec<f64>,
    pub argmax_n: Vec<usize>,
    pub n_max: usize,
    pub kappa: f64,
    pub global_sup: f64,
    pub argmax_xi: f64,
    /// Bound on the resolvent of every mode `n > n_max` for `|xi| <= xi_max`.
    pub tail_bound: f64,
}

impl ResolventSweep {
    /// `xi,sup_norm,argmax_n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "xi,sup_norm,argmax_n")?;
        for ((&x, &s), &n) in self.xi.iter().zip(&self.sup_norm).zip(&self.argmax_n) {
            writeln!(w, "{},{},{}", fmt17(x), fmt17(s), n)?;
        }
        Ok(())
    }
}

fn grid_points(opts: &ResolventOptions) -> usize {
    (opts.xi_max / opts.grid_step + 1e-9).floor() as usize
}

/// Resolvent norms on the symmetric grid `k * grid_step`, `|xi| <= xi_max`.
/// The norm is even in `xi` (conjugation), so only `xi >= 0` is computed.
pub fn resolvent_sup(form: &CanonicalForm, opts: &ResolventOptions) -> Result<ResolventSweep> {
    opts.validate()?;
    let kappa = norm_weight(form);
    let blocks = ScaledBlocks::new(form, kappa);
    let k_max = grid_points(opts);
    let half: Vec<(f64, usize)> =
        (0..=k_max).map(|k| sup_over_modes(&blocks, k as f64 * opts.grid_step, opts.n_max)).collect();

    let mut xi = Vec::with_capacity(2 * k_max + 1);
    let mut sup_norm = Vec::with_capacity(2 * k_max + 1);
    let mut argmax_n = Vec::with_capacity(2 * k_max + 1);
    for k in (1..=k_max).rev() {
        xi.push(-(k as f64) * opts.grid_step);
        sup_norm.push(half[k].0);
        argmax_n.push(half[k].1);
    }
    for (k, &(s, n)) in half.iter().enumerate() {
        xi.push(k as f64 * opts.grid_step);
        sup_norm.push(s);
        argmax_n.push(n);
    }
    let (k_best, &(global_sup, _)) = half
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("grid has at least one point");
    let gap = opts.n_max as f64 + 1.0 - opts.xi_max - blocks.coupling_norm;
    Ok(ResolventSweep {
        xi,
        sup_norm,
        argmax_n,
        n_max: opts.n_max,
        kappa,
        global_sup,
        argmax_xi: k_best as f64 * opts.grid_step,
        tail_bound: if gap > 0.0 { 1.0 / gap } else { f64::INFINITY },
    })
}

/// Sup over the midpoints of the grid, i.e. the extra points of the halved grid.
fn midpoint_sup(form: &CanonicalForm, opts: &ResolventOptions) -> f64 {
    let blocks = ScaledBlocks::new(form, norm_weight(form));
    (0..grid_points(opts))
        .map(|k| sup_over_modes(&blocks, (k as f64 + 0.5) * opts.grid_step, opts.n_max).0)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "STABLE",
            Verdict::Unstable => "UNSTABLE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventVerdict {
    pub verdict: Verdict,
    pub axis: AxisCheck,
    pub sup_norm: f64,
    pub argmax_xi: f64,
    /// Sup on the halved grid; `None` when no sweep was needed.
    pub refined_sup: Option<f64>,
    pub tail_bound: f64,
}

/// Stable iff the axis is clear and the sup is finite and unchanged (within
/// 5%) when the grid step is halved. The sweep is skipped when the axis
/// check already fails.
pub fn stability_via_resolvent(form: &CanonicalForm, opts: &ResolventOptions) -> Result<ResolventVerdict> {
    opts.validate()?;
    let axis = imaginary_axis_clear(form, opts.n_max)?;
    if !axis.clear {
        return Ok(ResolventVerdict {
            verdict: Verdict::Unstable,
            axis,
            sup_norm: f64::INFINITY,
            argmax_xi: axis.worst_eigenvalue.im,
            refined_sup: None,
            tail_bound: f64::INFINITY,
        });
    }
    let sweep = resolvent_sup(form, opts)?;
    Ok(verdict_from_sweep(form, opts, axis, &sweep))
}

/// Verdict for an already computed sweep.
pub fn verdict_from_sweep(
    form: &CanonicalForm,
    opts: &ResolventOptions,
    axis: AxisCheck,
    sweep: &ResolventSweep,
) -> ResolventVerdict {
    if !axis.clear {
        return ResolventVerdict {
            verdict: Verdict::Unstable,
            axis,
            sup_norm: sweep.global_sup,
            argmax_xi: sweep.argmax_xi,
            refined_sup: None,
            tail_bound: sweep.tail_bound,
        };
    }
    let refined = sweep.global_sup.max(midpoint_sup(form, opts));
    let converged = sweep.global_sup.is_finite()
        && refined.is_finite()
        && (refined - sweep.global_sup) < REFINE_TOL * sweep.global_sup;
    ResolventVerdict {
        verdict: if converged { Verdict::Stable } else { Verdict::Inconclusive },
        axis,
        sup_norm: sweep.global_sup,
        argmax_xi: sweep.argmax_xi,
        refined_sup: Some(refined),
        tail_bound: sweep.tail_bound,
    }
}
