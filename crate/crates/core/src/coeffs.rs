//! Coupling matrices, the exponential-stability test, and the reduction of an
//! arbitrary real 2x2 coupling matrix to one of two canonical forms:
//!
//! * rotation `[[a, b], [-b, a]]` with `b > 0` (complex eigenvalues `a +- ib`),
//! * lower triangular `[[a, 0], [b, c]]` with `a <= c` (real eigenvalues).
//!
//! The reduction is a real similarity `S^-1 B S`. For real eigenvalues, and for
//! normal matrices with complex eigenvalues, `S` is orthogonal. A non-normal
//! matrix with complex eigenvalues cannot be brought to rotation form by an
//! orthogonal matrix (the Frobenius norm would have to be preserved), so there
//! `S` is the best-conditioned real similarity: orthogonal columns scaled so
//! that `|det S| = 1`. The mode spectra only depend on the trace and the
//! determinant, so the canonical form carries the exact spectrum either way.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::modal_sim::ModalState;

/// Relative size below which the eigenvalue discriminant is treated as zero.
pub const DISCRIMINANT_TOL: f64 = 1e-14;

/// The coupling matrix `[[alpha, beta], [gamma, eta]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffMatrix {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl CoeffMatrix {
    pub fn new(alpha: f64, beta: f64, gamma: f64, eta: f64) -> Result<Self> {
        Ok(Self {
            alpha: ensure_finite("alpha", alpha)?,
            beta: ensure_finite("beta", beta)?,
            gamma: ensure_finite("gamma", gamma)?,
            eta: ensure_finite("eta", eta)?,
        })
    }

    pub fn from_matrix(m: &Matrix2<f64>) -> Result<Self> {
        Self::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.alpha, self.beta, self.gamma, self.eta)
    }

    pub fn trace(&self) -> f64 {
        self.alpha + self.eta
    }

    pub fn det(&self) -> f64 {
        self.alpha * self.eta - self.beta * self.gamma
    }

    /// `tr^2 - 4 det`, evaluated as `(alpha - eta)^2 + 4 beta gamma`.
    pub fn discriminant(&self) -> f64 {
        let d = self.alpha - self.eta;
        d * d + 4.0 * self.beta * self.gamma
    }

    /// Eigenvalues from the quadratic formula on trace and determinant,
    /// ordered by increasing real part (then imaginary part).
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = 0.5 * self.trace();
        let disc = self.discriminant();
        if disc >= 0.0 {
            let r = 0.5 * disc.sqrt();
            [Complex64::new(half_tr - r, 0.0), Complex64::new(half_tr + r, 0.0)]
        } else {
            let r = 0.5 * (-disc).sqrt();
            [Complex64::new(half_tr, -r), Complex64::new(half_tr, r)]
        }
    }

    fn frobenius_sq(&self) -> f64 {
        self.alpha * self.alpha + self.beta * self.beta + self.gamma * self.gamma + self.eta * self.eta
    }
}

/// Exponential stability of the coupled system: `trace > 0` and `det > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub trace: f64,
    pub det: f64,
}

pub fn classify_stability(b: &CoeffMatrix) -> Result<StabilityVerdict> {
    let b = CoeffMatrix::new(b.alpha, b.beta, b.gamma, b.eta)?;
    let trace = b.trace();
    let det = b.det();
    Ok(StabilityVerdict { stable: trace > 0.0 && det > 0.0, trace, det })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormKind {
    Rotation,
    Triangular,
}

/// A canonical coupling matrix together with the change of basis `p`
/// satisfying `p^-1 B p = canonical`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalForm {
    pub kind: FormKind,
    pub a: f64,
    pub b: f64,
    /// Always 0 for [`FormKind::Rotation`].
    pub c: f64,
    pub p: Matrix2<f64>,
}

impl CanonicalForm {
    /// `[[a, b], [-b, a]]` with identity change of basis.
    pub fn rotation(a: f64, b: f64) -> Result<Self> {
        ensure_finite("a", a)?;
        ensure_finite("b", b)?;
        if b == 0.0 {
            return Err(Error::Domain("rotation form requires b != 0".into()));
        }
        Ok(Self { kind: FormKind::Rotation, a, b, c: 0.0, p: Matrix2::identity() })
    }

    /// `[[a, 0], [b, c]]` with identity change of basis.
    pub fn triangular(a: f64, b: f64, c: f64) -> Result<Self> {
        ensure_finite("a", a)?;
        ensure_finite("b", b)?;
        ensure_finite("c", c)?;
        Ok(Self { kind: FormKind::Triangular, a, b, c, p: Matrix2::identity() })
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        match self.kind {
            FormKind::Rotation => Matrix2::new(self.a, self.b, -self.b, self.a),
            FormKind::Triangular => Matrix2::new(self.a, 0.0, self.b, self.c),
        }
    }

    /// The canonical matrix as a coupling matrix of the transformed system.
    pub fn coeffs(&self) -> CoeffMatrix {
        let m = self.matrix();
        CoeffMatrix { alpha: m[(0, 0)], beta: m[(0, 1)], gamma: m[(1, 0)], eta: m[(1, 1)] }
    }

    pub fn trace(&self) -> f64 {
        match self.kind {
            FormKind::Rotation => 2.0 * self.a,
            FormKind::Triangular => self.a + self.c,
        }
    }

    pub fn det(&self) -> f64 {
        match self.kind {
            FormKind::Rotation => self.a * self.a + self.b * self.b,
            FormKind::Triangular => self.a * self.c,
        }
    }

    /// Stability read off the canonical parameters.
    pub fn is_stable(&self) -> bool {
        match self.kind {
            FormKind::Rotation => self.a > 0.0,
            FormKind::Triangular => self.a > 0.0 && self.c > 0.0,
        }
    }

    /// Entrywise `max |p^T p - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.p.transpose() * self.p - Matrix2::identity()).amax()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonality_defect() <= 1e-12
    }

    /// Entrywise `max |p^-1 B p - canonical|`.
    pub fn reconstruction_residual(&self, b: &CoeffMatrix) -> f64 {
        match self.p.try_inverse() {
            Some(inv) => (inv * b.matrix() * self.p - self.matrix()).amax(),
            None => f64::INFINITY,
        }
    }

    /// Condition number of the change of basis (1 when orthogonal).
    pub fn basis_condition(&self) -> f64 {
        let sv = self.p.singular_values();
        sv.max() / sv.min()
    }
}

pub fn schur_canonicalize(b: &CoeffMatrix) -> Result<CanonicalForm> {
    let b = CoeffMatrix::new(b.alpha, b.beta, b.gamma, b.eta)?;
    let disc = b.discriminant();
    if disc < -DISCRIMINANT_TOL * b.frobenius_sq() {
        Ok(rotation_reduction(&b, disc))
    } else {
        Ok(triangular_reduction(&b, disc.max(0.0)))
    }
}

fn rotation_reduction(b: &CoeffMatrix, disc: f64) -> CanonicalForm {
    let a = 0.5 * b.trace();
    let im = 0.5 * (-disc).sqrt();
    let lambda = Complex64::new(a, im);

    // Null vector of B - lambda I, taken orthogonal to its larger row.
    let r00 = Complex64::new(b.alpha, 0.0) - lambda;
    let r11 = Complex64::new(b.eta, 0.0) - lambda;
    let row0 = r00.norm_sqr() + b.beta * b.beta;
    let row1 = b.gamma * b.gamma + r11.norm_sqr();
    let (v0, v1) = if row0 >= row1 {
        (Complex64::new(-b.beta, 0.0), r00)
    } else {
        (r11, Complex64::new(-b.gamma, 0.0))
    };

    // Rotate the phase so that Re v and Im v are orthogonal with |Re v| >= |Im v|.
    let x = Vector2::new(v0.re, v1.re);
    let y = Vector2::new(v0.im, v1.im);
    let d = x.norm_squared() - y.norm_squared();
    let xy = x.dot(&y);
    let theta = if d == 0.0 && xy == 0.0 { 0.0 } else { 0.5 * (-2.0 * xy).atan2(d) };
    let (s, c) = theta.sin_cos();
    let mut x2 = x * c - y * s;
    let mut y2 = x * s + y * c;
    let scale = (x2.norm() * y2.norm()).sqrt();
    x2 /= scale;
    y2 /= scale;
    if largest_abs_component(&x2) < 0.0 {
        x2 = -x2;
        y2 = -y2;
    }
    CanonicalForm {
        kind: FormKind::Rotation,
        a,
        b: im,
        c: 0.0,
        p: Matrix2::from_columns(&[x2, y2]),
    }
}

fn triangular_reduction(b: &CoeffMatrix, disc: f64) -> CanonicalForm {
    let half_tr = 0.5 * b.trace();
    let larger = half_tr + 0.5 * disc.sqrt();

    // Unit eigenvector for the larger eigenvalue becomes the second column.
    let r0 = Vector2::new(b.alpha - larger, b.beta);
    let r1 = Vector2::new(b.gamma, b.eta - larger);
    let tiny = 1e-15 * b.frobenius_sq().sqrt();
    let row = if r0.norm() >= r1.norm() { r0 } else { r1 };
    let mut v = if row.norm() <= tiny {
        Vector2::new(0.0, 1.0)
    } else {
        Vector2::new(-row[1], row[0]).normalize()
    };
    if largest_abs_component(&v) < 0.0 {
        v = -v;
    }
    let p0 = Vector2::new(v[1], -v[0]);
    let p = Matrix2::from_columns(&[p0, v]);
    let t = p.transpose() * b.matrix() * p;
    CanonicalForm { kind: FormKind::Triangular, a: t[(0, 0)], b: t[(1, 0)], c: t[(1, 1)], p }
}

fn largest_abs_component(v: &Vector2<f64>) -> f64 {
    if v[0].abs() >= v[1].abs() {
        v[0]
    } else {
        v[1]
    }
}

/// Right-multiplies the displacement pair `(u, v)` and the velocity pair
/// `(u_t, v_t)` of every mode by `p`.
pub fn transform_state(p: &Matrix2<f64>, state: &ModalState) -> Result<ModalState> {
    let modes = state
        .modes()
        .iter()
        .map(|&[u, y, v, z]| {
            let disp = Vector2::new(u, v).transpose() * p;
            let vel = Vector2::new(y, z).transpose() * p;
            [disp[0], vel[0], disp[1], vel[1]]
        })
        .collect();
    ModalState::new(modes)
}

/// Expresses `state` in the canonical coordinates of `b`.
///
/// With `w = (u, v)^T` the new unknowns are `S^-1 w`, i.e. the row pair is
/// multiplied by `S^-T`. For orthogonal `S` this is `(u, v) S` and the energy
/// is unchanged.
pub fn change_of_variables(b: &CoeffMatrix, state: &ModalState) -> Result<ModalState> {
    let form = schur_canonicalize(b)?;
    let inv = form
        .p
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular change of basis".into()))?;
    transform_state(&inv.transpose(), state)
}
