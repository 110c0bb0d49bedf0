//! Quartic roots by Durand–Kerner iteration and characteristic polynomials by
//! the Faddeev–LeVerrier recursion.

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 500;

/// `c[0] l^4 + c[1] l^3 + c[2] l^2 + c[3] l + c[4]` with `c[0] != 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartic {
    coeffs: [Complex64; 5],
}

impl Quartic {
    pub fn new(coeffs: [Complex64; 5]) -> Result<Self> {
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("quartic coefficients must be finite".into()));
        }
        if coeffs[0] == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("leading quartic coefficient is zero".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: [f64; 5]) -> Result<Self> {
        Self::new(coeffs.map(|c| Complex64::new(c, 0.0)))
    }

    pub fn coeffs(&self) -> &[Complex64; 5] {
        &self.coeffs
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `sum |c_i| |z|^i`, the natural scale of rounding errors in `eval`.
    pub fn magnitude(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().fold(0.0, |acc, c| acc * r + c.norm())
    }
}

/// All four roots of `q`, unordered.
///
/// Iterates from the staggered starts `rho (0.4 + 0.9i)^k` until every update
/// is below `1e-13 (1 + |z|)`, or until every residual is at rounding level
/// (multiple roots converge only linearly and stall there).
pub fn poly_roots(q: &Quartic) -> Result<[Complex64; 4]> {
    let lead = q.coeffs[0];
    let monic = Quartic { coeffs: q.coeffs.map(|c| c / lead) };
    let c = &monic.coeffs;
    // Fujiwara-type bound on the root moduli.
    let rho = (1..=4)
        .map(|k| c[k].norm().powf(1.0 / k as f64))
        .fold(0.0, f64::max)
        .max(1e-3)
        * 2.0;
    let seed = Complex64::new(0.4, 0.9);
    let mut z: [Complex64; 4] = std::array::from_fn(|k| seed.powu(k as u32) * rho);

    let rounding = |z: &[Complex64; 4]| {
        z.iter().all(|&x| monic.eval(x).norm() <= 8.0 * f64::EPSILON * monic.magnitude(x))
    };
    for _ in 0..MAX_ITERATIONS {
        let mut converged = true;
        for k in 0..4 {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom == Complex64::new(0.0, 0.0) {
                denom = Complex64::new(f64::EPSILON, 0.0);
            }
            let step = monic.eval(z[k]) / denom;
            z[k] -= step;
            if step.norm() > 1e-13 * (1.0 + z[k].norm()) {
                converged = false;
            }
        }
        if converged || rounding(&z) {
            return Ok(z);
        }
    }
    let residual = z.iter().map(|&x| monic.eval(x).norm()).fold(0.0, f64::max);
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual })
}

/// Characteristic polynomial `det(l I - m)` as `[1, c3, c2, c1, c0]`.
pub fn char_poly(m: &Matrix4<f64>) -> [f64; 5] {
    let mut coeffs = [1.0, 0.0, 0.0, 0.0, 0.0];
    let mut mk = Matrix4::<f64>::zeros();
    for k in 1..=4 {
        mk = m * mk + Matrix4::identity() * coeffs[k - 1];
        coeffs[k] = -(m * mk).trace() / k as f64;
    }
    coeffs
}

/// Smallest achievable `max_k |x_k - y_pi(k)|` over all pairings `pi`.
pub fn match_roots(x: &[Complex64; 4], y: &[Complex64; 4]) -> f64 {
    let mut best = f64::INFINITY;
    let mut perm = [0usize, 1, 2, 3];
    permute(&mut perm, 0, &mut |p| {
        let d = (0..4).map(|k| (x[k] - y[p[k]]).norm()).fold(0.0, f64::max);
        best = best.min(d);
    });
    best
}

fn permute(p: &mut [usize; 4], k: usize, f: &mut impl FnMut(&[usize; 4])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fourth_roots_of_unity() {
        let r = poly_roots(&Quartic::from_real([1.0, 0.0, 0.0, 0.0, -1.0]).unwrap()).unwrap();
        let want = [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)];
        assert!(match_roots(&r, &want) < 1e-12);
    }

    #[test]
    fn double_pair() {
        let r = poly_roots(&Quartic::from_real([1.0, 0.0, 2.0, 0.0, 1.0]).unwrap()).unwrap();
        let want = [c(0.0, 1.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, -1.0)];
        assert!(match_roots(&r, &want) < 1e-6);
    }

    #[test]
    fn quadruple_root() {
        // (l + 1)^4
        let q = Quartic::from_real([1.0, 4.0, 6.0, 4.0, 1.0]).unwrap();
        let r = poly_roots(&q).unwrap();
        for z in r {
            assert!(q.eval(z).norm() <= 1e-10 * 16.0 * z.norm().max(1.0).powi(4));
        }
    }

    #[test]
    fn leading_zero_rejected() {
        assert!(Quartic::from_real([0.0, 1.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn scaled_leading_coefficient() {
        let r = poly_roots(&Quartic::from_real([2.0, 0.0, 0.0, 0.0, -32.0]).unwrap()).unwrap();
        let want = [c(2.0, 0.0), c(-2.0, 0.0), c(0.0, 2.0), c(0.0, -2.0)];
        assert!(match_roots(&r, &want) < 1e-12);
    }

    #[test]
    fn faddeev_leverrier_on_companion() {
        #[rustfmt::skip]
        let m = Matrix4::new(
            0.0, 0.0, 0.0, -5.0,
            1.0, 0.0, 0.0, -4.0,
            0.0, 1.0, 0.0, -3.0,
            0.0, 0.0, 1.0, -2.0,
        );
        let p = char_poly(&m);
        assert_eq!(p, [1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn pairing_ignores_order() {
        let x = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)];
        let y = [c(4.0, 0.0), c(3.0, 0.0), c(2.0, 1e-3), c(1.0, 0.0)];
        assert!((match_roots(&x, &y) - 1e-3).abs() < 1e-15);
    }
}
