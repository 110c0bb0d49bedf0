//! Closed-form spectrum of the mode blocks for both canonical forms.
//!
//! For the rotation form `[[a, b], [-b, a]]` the quartic of mode `n` factors as
//! `(l^2 + (a - ib) l + n^2)(l^2 + (a + ib) l + n^2)`; for the triangular form
//! `[[a, 0], [b, c]]` as `(l^2 + a l + n^2)(l^2 + c l + n^2)`. The triangular
//! form has defective eigenvalues when `a` or `c` is an even positive integer
//! `2m` (at mode `n = m`) and when `a = c` with `b != 0`; those are returned as
//! Jordan chains `(A - l) v_0 = 0`, `(A - l) v_{k+1} = v_k`.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::coeffs::{CanonicalForm, FormKind};
use crate::error::{Error, Result};

pub type Vec4 = [Complex64; 4];

/// Modes scanned when locating the slowest eigenvalue.
pub const DOMINANCE_MODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    /// Rotation form.
    I,
    /// Triangular, `a != c`, neither even.
    II1,
    /// `a != c`, both even.
    II21,
    /// `a != c`, only `a` even.
    II22,
    /// `a != c`, only `c` even.
    II23,
    /// `a = c` not even, `b = 0`.
    II31,
    /// `a = c` not even, `b != 0`.
    II32,
    /// `a = c` even, `b = 0`.
    II41,
    /// `a = c` even, `b != 0`.
    II42,
}

impl CaseTag {
    pub const ALL: [CaseTag; 9] = [
        CaseTag::I,
        CaseTag::II1,
        CaseTag::II21,
        CaseTag::II22,
        CaseTag::II23,
        CaseTag::II31,
        CaseTag::II32,
        CaseTag::II41,
        CaseTag::II42,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::I => "I",
            CaseTag::II1 => "II-1",
            CaseTag::II21 => "II-2.1",
            CaseTag::II22 => "II-2.2",
            CaseTag::II23 => "II-2.3",
            CaseTag::II31 => "II-3.1",
            CaseTag::II32 => "II-3.2",
            CaseTag::II41 => "II-4.1",
            CaseTag::II42 => "II-4.2",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for CaseTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Eigenvector first, then successive root vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanChain {
    pub eigenvalue: Complex64,
    pub vectors: Vec<Vec4>,
}

impl JordanChain {
    fn new(eigenvalue: Complex64, mut vectors: Vec<Vec4>) -> Self {
        let scale = 1.0 / norm(&vectors[0]);
        for v in &mut vectors {
            for x in v.iter_mut() {
                *x *= scale;
            }
        }
        Self { eigenvalue, vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub n: usize,
    /// `[l1+, l1-, l2+, l2-]`; `+` has the larger real part.
    pub eigenvalues: [Complex64; 4],
    pub case_tag: CaseTag,
    pub chains: Vec<JordanChain>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPrediction {
    pub omega: f64,
    /// Polynomial correction `t^p` for the solution bound.
    pub p: u32,
    pub dominant_mode: usize,
    pub dominant_eigenvalue: Complex64,
    /// Length of the longest Jordan chain at the dominant eigenvalue; the
    /// energy then behaves like `t^(2(len - 1)) exp(-omega t)`.
    pub dominant_chain_len: usize,
}

impl DecayPrediction {
    pub fn energy_exponent(&self) -> usize {
        2 * (self.dominant_chain_len - 1)
    }
}

/// Tolerances deciding the (discontinuous) Jordan structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseTolerance {
    /// `|x - 2 round(x/2)| <= even` for even-integer membership.
    pub even: f64,
    /// `|a - c| <= equal * max(1, |a|, |c|)`.
    pub equal: f64,
    /// `|b| <= zero` for `b = 0`.
    pub zero: f64,
}

impl Default for CaseTolerance {
    fn default() -> Self {
        Self { even: 1e-9, equal: 1e-9, zero: 1e-9 }
    }
}

impl CaseTolerance {
    /// `Some(m)` when `|x| = 2m` with `m >= 1`.
    pub fn even_half(&self, x: f64) -> Option<usize> {
        let half = (x.abs() / 2.0).round();
        (half >= 1.0 && (x.abs() - 2.0 * half).abs() <= self.even).then_some(half as usize)
    }

    pub fn equal(&self, a: f64, c: f64) -> bool {
        (a - c).abs() <= self.equal * 1f64.max(a.abs()).max(c.abs())
    }

    pub fn is_zero(&self, b: f64) -> bool {
        b.abs() <= self.zero
    }
}

fn norm(v: &Vec4) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Roots of `l^2 + p l + q` (complex coefficients), avoiding cancellation.
fn quadratic_roots(p: Complex64, q: Complex64) -> [Complex64; 2] {
    let mut s = (p * p - 4.0 * q).sqrt();
    if (p.conj() * s).re < 0.0 {
        s = -s;
    }
    let big = -(p + s) * 0.5;
    if big == Complex64::new(0.0, 0.0) {
        return [big, big];
    }
    [big, q / big]
}

/// Orders a root pair as `(+, -)`: larger real part first, ties by smaller
/// imaginary part.
fn order_pair([x, y]: [Complex64; 2]) -> [Complex64; 2] {
    let scale = 1e-12 * (1.0 + x.norm().max(y.norm()));
    let x_first = if (x.re - y.re).abs() <= scale { x.im <= y.im } else { x.re > y.re };
    if x_first {
        [x, y]
    } else {
        [y, x]
    }
}

/// Rotation-form eigenvalues `[l1+, l1-, l2+, l2-]`: `l1` solves
/// `l^2 + (a - ib) l + n^2 = 0` and `l2 = conj(l1)`.
pub fn eigenvalues_case_i(a: f64, b: f64, n: usize) -> Result<[Complex64; 4]> {
    if b == 0.0 {
        return Err(Error::Domain("rotation form requires b != 0".into()));
    }
    if n == 0 {
        return Err(Error::Domain("mode index must be >= 1".into()));
    }
    let n2 = (n * n) as f64;
    let [p, m] = order_pair(quadratic_roots(Complex64::new(a, -b), cx(n2)));
    let [cp, cm] = order_pair([p.conj(), m.conj()]);
    Ok([p, m, cp, cm])
}

/// Triangular-form eigenvalues `[l1+, l1-, l2+, l2-]` from
/// `l^2 + a l + n^2` and `l^2 + c l + n^2`.
pub fn eigenvalues_case_ii(a: f64, c: f64, n: usize) -> [Complex64; 4] {
    let n2 = (n * n) as f64;
    let [p0, p1] = real_quadratic(a, n2);
    let [q0, q1] = real_quadratic(c, n2);
    [p0, p1, q0, q1]
}

fn real_quadratic(p: f64, q: f64) -> [Complex64; 2] {
    let disc = p * p - 4.0 * q;
    if disc >= 0.0 {
        let big = -0.5 * (p + p.signum() * disc.sqrt());
        let big = if big == 0.0 { -0.5 * disc.sqrt() } else { big };
        let other = if big == 0.0 { 0.0 } else { q / big };
        order_pair([cx(big), cx(other)])
    } else {
        let w = 0.5 * (-disc).sqrt();
        order_pair([Complex64::new(-0.5 * p, w), Complex64::new(-0.5 * p, -w)])
    }
}

/// The `(X_n, Y_n)` parametrisation of the rotation-form roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XyReport {
    pub x_n: f64,
    /// `a b / X_n`; `None` when `X_n = 0`.
    pub y_n: Option<f64>,
    /// `(+-X_n - a/2) - i(+-Y_n - b/2)`, i.e. without halving `X_n` and `Y_n`.
    pub printed: Option<[Complex64; 2]>,
    /// `(-a +- X_n)/2 + i(b -+ Y_n)/2`, which are the actual roots.
    pub corrected: Option<[Complex64; 2]>,
    /// Largest distance from the printed values to the true roots.
    pub printed_error: Option<f64>,
}

pub fn xy_report(a: f64, b: f64, n: usize) -> Result<XyReport> {
    let roots = eigenvalues_case_i(a, b, n)?;
    let n2 = (n * n) as f64;
    let d = a * a - b * b - 4.0 * n2;
    let x_n = (0.5 * ((d * d + 4.0 * a * a * b * b).sqrt() + d)).max(0.0).sqrt();
    if x_n == 0.0 {
        return Ok(XyReport { x_n, y_n: None, printed: None, corrected: None, printed_error: None });
    }
    let y_n = a * b / x_n;
    let printed = [
        Complex64::new(x_n - 0.5 * a, -(y_n - 0.5 * b)),
        Complex64::new(-x_n - 0.5 * a, -(-y_n - 0.5 * b)),
    ];
    let corrected = [
        Complex64::new(0.5 * (-a + x_n), 0.5 * (b - y_n)),
        Complex64::new(0.5 * (-a - x_n), 0.5 * (b + y_n)),
    ];
    let dist = |z: Complex64| roots[..2].iter().map(|r| (r - z).norm()).fold(f64::INFINITY, f64::min);
    let printed_error = printed.iter().map(|&z| dist(z)).fold(0.0, f64::max);
    Ok(XyReport { x_n, y_n: Some(y_n), printed: Some(printed), corrected: Some(corrected), printed_error: Some(printed_error) })
}

pub fn case_tag(form: &CanonicalForm, tol: &CaseTolerance) -> CaseTag {
    if form.kind == FormKind::Rotation {
        return CaseTag::I;
    }
    let (a, b, c) = (form.a, form.b, form.c);
    let a_even = tol.even_half(a).is_some();
    let c_even = tol.even_half(c).is_some();
    let b_zero = tol.is_zero(b);
    if tol.equal(a, c) {
        match (a_even, b_zero) {
            (false, true) => CaseTag::II31,
            (false, false) => CaseTag::II32,
            (true, true) => CaseTag::II41,
            (true, false) => CaseTag::II42,
        }
    } else {
        match (a_even, c_even) {
            (false, false) => CaseTag::II1,
            (true, true) => CaseTag::II21,
            (true, false) => CaseTag::II22,
            (false, true) => CaseTag::II23,
        }
    }
}

pub fn mode_structure(form: &CanonicalForm, n: usize) -> Result<ModeSpectrum> {
    mode_structure_with(form, n, &CaseTolerance::default())
}

pub fn mode_structure_with(form: &CanonicalForm, n: usize, tol: &CaseTolerance) -> Result<ModeSpectrum> {
    if n == 0 {
        return Err(Error::Domain("mode index must be >= 1".into()));
    }
    let tag = case_tag(form, tol);
    if tag == CaseTag::I {
        let eigenvalues = eigenvalues_case_i(form.a, form.b, n)?;
        let i = Complex64::i();
        let chains = eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let s = if k < 2 { -i } else { i };
                JordanChain::new(l, vec![[cx(1.0), l, s, s * l]])
            })
            .collect();
        return Ok(ModeSpectrum { n, eigenvalues, case_tag: tag, chains });
    }

    let (a, b, c) = (form.a, form.b, form.c);
    let a_double = tol.even_half(a) == Some(n);
    let c_double = tol.even_half(c) == Some(n);
    let mut eigenvalues = eigenvalues_case_ii(a, c, n);
    if a_double {
        eigenvalues[0] = cx(-0.5 * a);
        eigenvalues[1] = cx(-0.5 * a);
    }
    if c_double {
        eigenvalues[2] = cx(-0.5 * c);
        eigenvalues[3] = cx(-0.5 * c);
    }
    let one = cx(1.0);
    let zero = cx(0.0);
    let v_only = |l: Complex64| [zero, zero, one, l];
    let u_only = |l: Complex64| [one, l, zero, zero];
    // Root vectors of a double root of a single decoupled branch.
    let v_root = |l: Complex64| {
        let s = -1.0 / (2.0 * l);
        [zero, zero, s, -l * s]
    };
    let u_root = |l: Complex64| {
        let s = -1.0 / (2.0 * l);
        [s, -l * s, zero, zero]
    };

    let chains = match tag {
        CaseTag::II1 | CaseTag::II21 | CaseTag::II22 | CaseTag::II23 => {
            let r = cx(b / (a - c));
            let coupled = |l: Complex64| [one, l, r, l * r];
            let mut chains = Vec::with_capacity(4);
            if a_double {
                let l = eigenvalues[0];
                let s = -1.0 / (2.0 * l);
                chains.push(JordanChain::new(l, vec![coupled(l), [s, -l * s, r * s, -l * r * s]]));
            } else {
                chains.extend(eigenvalues[..2].iter().map(|&l| JordanChain::new(l, vec![coupled(l)])));
            }
            if c_double {
                let l = eigenvalues[2];
                chains.push(JordanChain::new(l, vec![v_only(l), v_root(l)]));
            } else {
                chains.extend(eigenvalues[2..].iter().map(|&l| JordanChain::new(l, vec![v_only(l)])));
            }
            chains
        }
        CaseTag::II31 | CaseTag::II41 => {
            if a_double {
                let l = eigenvalues[0];
                vec![
                    JordanChain::new(l, vec![u_only(l), u_root(l)]),
                    JordanChain::new(l, vec![v_only(l), v_root(l)]),
                ]
            } else {
                let mut chains: Vec<_> = eigenvalues[..2].iter().map(|&l| JordanChain::new(l, vec![u_only(l)])).collect();
                chains.extend(eigenvalues[..2].iter().map(|&l| JordanChain::new(l, vec![v_only(l)])));
                chains
            }
        }
        CaseTag::II32 | CaseTag::II42 => {
            if a_double {
                let l = eigenvalues[0];
                let bl = cx(b) * l;
                let v2 = [-1.0 / bl, cx(-1.0 / b), 1.0 / (2.0 * l * l), zero];
                let v3 = [3.0 / (2.0 * bl * l), 1.0 / (2.0 * bl), -1.0 / (2.0 * l * l * l), zero];
                vec![JordanChain::new(l, vec![v_only(l), v_root(l), v2, v3])]
            } else {
                eigenvalues[..2]
                    .iter()
                    .map(|&l| {
                        let k = cx(a) + 2.0 * l;
                        let v1 = [-k / (cx(b) * l), -k / b, -1.0 / (2.0 * l), cx(0.5)];
                        JordanChain::new(l, vec![v_only(l), v1])
                    })
                    .collect()
            }
        }
        CaseTag::I => unreachable!(),
    };
    Ok(ModeSpectrum { n, eigenvalues, case_tag: tag, chains })
}

/// Largest real part over the four eigenvalues of mode `n`.
fn abscissa(form: &CanonicalForm, n: usize) -> Result<Complex64> {
    let eig = match form.kind {
        FormKind::Rotation => eigenvalues_case_i(form.a, form.b, n)?,
        FormKind::Triangular => eigenvalues_case_ii(form.a, form.c, n),
    };
    Ok(eig.into_iter().fold(eig[0], |best, l| if l.re > best.re { l } else { best }))
}

/// Optimal decay rate `omega = -2 max Re(l)` and the polynomial correction.
pub fn decay_prediction(form: &CanonicalForm) -> Result<DecayPrediction> {
    let tol = CaseTolerance::default();
    let first = abscissa(form, 1)?;
    let mut worst = (1, first);
    for n in 2..=DOMINANCE_MODES {
        let l = abscissa(form, n)?;
        if l.re > worst.1.re {
            worst = (n, l);
        }
    }
    if !form.is_stable() || worst.1.re >= 0.0 {
        let (mode, eigenvalue) = if worst.1.re >= 0.0 { worst } else { (1, first) };
        return Err(Error::NotStable { eigenvalue, mode });
    }
    if worst.1.re > first.re + 1e-12 * (1.0 + first.re.abs()) {
        return Err(Error::DominanceViolated { mode: worst.0, re: worst.1.re, re_first: first.re });
    }
    let spectrum = mode_structure_with(form, 1, &tol)?;
    let scale = 1e-9 * (1.0 + first.norm());
    let dominant_chain_len = spectrum
        .chains
        .iter()
        .filter(|ch| (ch.eigenvalue.re - first.re).abs() <= scale)
        .map(JordanChain::len)
        .max()
        .unwrap_or(1);
    let p = match form.kind {
        FormKind::Rotation => 0,
        FormKind::Triangular => {
            let two = |x: f64| (x - 2.0).abs() <= tol.even;
            let (a2, c2) = (two(form.a), two(form.c));
            match (a2, c2) {
                (true, true) if !tol.is_zero(form.b) => 3,
                (true, true) => 1,
                (true, false) | (false, true) => 1,
                (false, false) => 0,
            }
        }
    };
    Ok(DecayPrediction {
        omega: -2.0 * first.re,
        p,
        dominant_mode: 1,
        dominant_eigenvalue: first,
        dominant_chain_len,
    })
}

/// Entry-wise `A x` for a real 4x4 matrix and complex vector.
pub fn apply_block(a: &nalgebra::Matrix4<f64>, x: &Vec4) -> Vec4 {
    let mut out = [cx(0.0); 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|j| x[j] * a[(i, j)]).sum();
    }
    out
}

/// Largest chain-relation residual `|(A - l) v_{k+1} - v_k|` (with `v_{-1} = 0`)
/// over all chains, relative to the largest vector norm in the chain.
pub fn chain_residual(block: &nalgebra::Matrix4<f64>, spectrum: &ModeSpectrum) -> f64 {
    let mut worst = 0.0f64;
    for chain in &spectrum.chains {
        let scale = chain.vectors.iter().map(norm).fold(0.0, f64::max);
        let mut prev = [cx(0.0); 4];
        for v in &chain.vectors {
            let av = apply_block(block, v);
            let r: Vec4 = std::array::from_fn(|i| av[i] - chain.eigenvalue * v[i] - prev[i]);
            worst = worst.max(norm(&r) / scale);
            prev = *v;
        }
    }
    worst
}

/// Gram determinant of the four chain vectors after normalising each one.
pub fn gram_determinant(spectrum: &ModeSpectrum) -> f64 {
    let vs: Vec<Vec4> = spectrum
        .chains
        .iter()
        .flat_map(|c| c.vectors.iter())
        .map(|v| {
            let s = 1.0 / norm(v);
            v.map(|x| x * s)
        })
        .collect();
    if vs.len() != 4 {
        return 0.0;
    }
    let gram = nalgebra::Matrix4::<Complex64>::from_fn(|i, j| (0..4).map(|k| vs[i][k].conj() * vs[j][k]).sum());
    gram.determinant().re
}

#[derive(Serialize)]
struct ModeJson<'a> {
    n: usize,
    case_tag: CaseTag,
    eigenvalues: Vec<[f64; 2]>,
    chains: Vec<ChainJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    xy: Option<&'a XyReport>,
}

#[derive(Serialize)]
struct ChainJson {
    eigenvalue: [f64; 2],
    vectors: Vec<Vec<[f64; 2]>>,
}

/// Spectrum export: one object per mode with eigenvalues as `[re, im]` pairs
/// and chains as nested arrays.
pub fn spectrum_json(modes: &[ModeSpectrum], xy: Option<&[XyReport]>) -> String {
    let pair = |z: Complex64| [z.re, z.im];
    let entries: Vec<ModeJson> = modes
        .iter()
        .enumerate()
        .map(|(k, m)| ModeJson {
            n: m.n,
            case_tag: m.case_tag,
            eigenvalues: m.eigenvalues.iter().map(|&z| pair(z)).collect(),
            chains: m
                .chains
                .iter()
                .map(|c| ChainJson {
                    eigenvalue: pair(c.eigenvalue),
                    vectors: c.vectors.iter().map(|v| v.iter().map(|&z| pair(z)).collect()).collect(),
                })
                .collect(),
            xy: xy.and_then(|r| r.get(k)),
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("spectrum serialises")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoeffMatrix;
    use crate::modal_sim::mode_block;

    fn close(z: Complex64, re: f64, im: f64, tol: f64) -> bool {
        (z.re - re).abs() <= tol && (z.im - im).abs() <= tol
    }

    fn quartic_residual(form: &CanonicalForm, n: usize, l: Complex64) -> f64 {
        let b = form.coeffs();
        let n2 = (n * n) as f64;
        let (tr, det) = (b.trace(), b.det());
        (l.powu(4) + tr * l.powu(3) + (2.0 * n2 + det) * l * l + tr * n2 * l + n2 * n2).norm()
    }

    #[test]
    fn rotation_undamped_is_imaginary() {
        let e = eigenvalues_case_i(0.0, 1.0, 1).unwrap();
        let s5 = 5f64.sqrt();
        for z in e {
            assert!(z.re.abs() < 1e-15);
        }
        let mut ims: Vec<f64> = e.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        let mut want = [-(1.0 + s5) / 2.0, (1.0 - s5) / 2.0, (s5 - 1.0) / 2.0, (1.0 + s5) / 2.0];
        want.sort_by(f64::total_cmp);
        for (x, y) in ims.iter().zip(want) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_a1_b1() {
        let e = eigenvalues_case_i(1.0, 1.0, 1).unwrap();
        assert!(close(e[0], -0.25706, -0.52909, 1e-5));
        assert!(close(e[1], -0.74294, 1.52909, 1e-5));
        assert_eq!(e[2], e[0].conj());
        assert_eq!(e[3], e[1].conj());
        assert!(eigenvalues_case_i(1.0, 0.0, 1).is_err());
    }

    #[test]
    fn rotation_roots_satisfy_quartic() {
        for &(a, b) in &[(1.0, 1.0), (0.3, -2.0), (4.0, 0.1), (-1.0, 3.0)] {
            let form = CanonicalForm::rotation(a, b).unwrap();
            for n in [1usize, 2, 7, 50] {
                for l in eigenvalues_case_i(a, b, n).unwrap() {
                    let scale = (n * n * n * n) as f64;
                    assert!(quartic_residual(&form, n, l) <= 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn triangular_examples() {
        let e = eigenvalues_case_ii(2.0, 5.0, 1);
        assert_eq!(e[0], cx(-1.0));
        assert_eq!(e[1], cx(-1.0));
        let e = eigenvalues_case_ii(0.0, 0.0, 3);
        assert!(e.iter().all(|z| z.re == 0.0 && (z.im.abs() - 3.0).abs() < 1e-15));
        let e = eigenvalues_case_ii(3.0, 1.0, 1);
        let s5 = 5f64.sqrt();
        assert!(close(e[0], (-3.0 + s5) / 2.0, 0.0, 1e-15));
        assert!(close(e[1], (-3.0 - s5) / 2.0, 0.0, 1e-15));
    }

    #[test]
    fn xy_printed_formula_is_off_by_half() {
        let r = xy_report(1.0, 1.0, 1).unwrap();
        let e = eigenvalues_case_i(1.0, 1.0, 1).unwrap();
        let c = r.corrected.unwrap();
        assert!((c[0] - e[0]).norm() < 1e-12 && (c[1] - e[1]).norm() < 1e-12);
        assert!(r.printed_error.unwrap() > 0.1);
        let r = xy_report(0.0, 1.0, 1).unwrap();
        assert_eq!(r.y_n, None);
    }

    fn check_case(form: CanonicalForm, n: usize, tag: CaseTag, lens: &[usize]) {
        let s = mode_structure(&form, n).unwrap();
        assert_eq!(s.case_tag, tag);
        let mut got: Vec<usize> = s.chains.iter().map(JordanChain::len).collect();
        got.sort();
        assert_eq!(got, lens, "{tag} at n = {n}");
        let blk = mode_block(&form.coeffs(), n).unwrap();
        let res = chain_residual(&blk.matrix, &s);
        assert!(res <= 1e-12, "{tag}: residual {res}");
        assert!(gram_determinant(&s) > 1e-10, "{tag}: dependent vectors");
        for l in s.eigenvalues {
            assert!(quartic_residual(&form, n, l) <= 1e-9 * (1.0 + l.norm().powi(4)));
        }
    }

    #[test]
    fn all_cases_have_valid_chains() {
        let tri = |a, b, c| CanonicalForm::triangular(a, b, c).unwrap();
        check_case(CanonicalForm::rotation(1.0, 1.0).unwrap(), 1, CaseTag::I, &[1, 1, 1, 1]);
        check_case(tri(1.0, 0.0, 3.0), 1, CaseTag::II1, &[1, 1, 1, 1]);
        check_case(tri(1.0, 1.0, 3.0), 2, CaseTag::II1, &[1, 1, 1, 1]);
        check_case(tri(2.0, 1.0, 4.0), 1, CaseTag::II21, &[1, 1, 2]);
        check_case(tri(2.0, 1.0, 4.0), 2, CaseTag::II21, &[1, 1, 2]);
        check_case(tri(2.0, 1.0, 4.0), 3, CaseTag::II21, &[1, 1, 1, 1]);
        check_case(tri(2.0, 0.0, 5.0), 1, CaseTag::II22, &[1, 1, 2]);
        check_case(tri(2.0, 1.0, 5.0), 1, CaseTag::II22, &[1, 1, 2]);
        check_case(tri(1.0, 1.0, 2.0), 1, CaseTag::II23, &[1, 1, 2]);
        check_case(tri(1.0, 0.0, 1.0), 1, CaseTag::II31, &[1, 1, 1, 1]);
        check_case(tri(1.0, 1.0, 1.0), 1, CaseTag::II32, &[2, 2]);
        check_case(tri(0.0, 1.0, 0.0), 2, CaseTag::II32, &[2, 2]);
        check_case(tri(2.0, 0.0, 2.0), 1, CaseTag::II41, &[2, 2]);
        check_case(tri(2.0, 0.0, 2.0), 3, CaseTag::II41, &[1, 1, 1, 1]);
        check_case(tri(2.0, 1.0, 2.0), 1, CaseTag::II42, &[4]);
        check_case(tri(2.0, 1.0, 2.0), 2, CaseTag::II42, &[2, 2]);
        check_case(tri(6.0, -2.5, 6.0), 3, CaseTag::II42, &[4]);
        check_case(tri(-2.0, 1.0, 3.0), 1, CaseTag::II22, &[1, 1, 2]);
    }

    #[test]
    fn case_ii_42_chain_at_minus_one() {
        let s = mode_structure(&CanonicalForm::triangular(2.0, 1.0, 2.0).unwrap(), 1).unwrap();
        assert_eq!(s.chains[0].eigenvalue, cx(-1.0));
    }

    #[test]
    fn even_membership() {
        let t = CaseTolerance::default();
        assert_eq!(t.even_half(2.0), Some(1));
        assert_eq!(t.even_half(4.0 + 1e-10), Some(2));
        assert_eq!(t.even_half(4.0 + 1e-8), None);
        assert_eq!(t.even_half(0.0), None);
        assert_eq!(t.even_half(3.0), None);
        assert_eq!(t.even_half(-6.0), Some(3));
    }

    #[test]
    fn predictions() {
        let p = decay_prediction(&CanonicalForm::triangular(2.0, 0.0, 5.0).unwrap()).unwrap();
        assert!((p.omega - (5.0 - 21f64.sqrt())).abs() < 1e-14);
        assert_eq!(p.p, 1);
        assert_eq!(p.dominant_chain_len, 1);

        let p = decay_prediction(&CanonicalForm::triangular(2.0, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!(p.omega, 2.0);
        assert_eq!(p.p, 3);
        assert_eq!(p.dominant_chain_len, 4);
        assert_eq!(p.energy_exponent(), 6);

        let p = decay_prediction(&CanonicalForm::rotation(1.0, 1.0).unwrap()).unwrap();
        assert!((p.omega - 0.5141317282433546).abs() < 1e-12);
        assert_eq!((p.p, p.dominant_mode), (0, 1));

        let p = decay_prediction(&CanonicalForm::rotation(1.0, 2.0).unwrap()).unwrap();
        assert!((p.omega - 0.27121410952922875).abs() < 1e-12);
    }

    #[test]
    fn unstable_prediction_rejected() {
        let err = decay_prediction(&CanonicalForm::triangular(1.0, 0.0, -1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotStable { .. }));
        let err = decay_prediction(&CanonicalForm::rotation(0.0, 1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotStable { .. }));
    }

    #[test]
    fn json_shape() {
        let b = CoeffMatrix::new(1.0, 1.0, -1.0, 1.0).unwrap();
        let form = crate::coeffs::schur_canonicalize(&b).unwrap();
        let modes: Vec<_> = (1..=2).map(|n| mode_structure(&form, n).unwrap()).collect();
        let json = spectrum_json(&modes, None);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v[0]["case_tag"], "I");
        assert_eq!(v[1]["n"], 2);
        assert_eq!(v[0]["eigenvalues"].as_array().unwrap().len(), 4);
        assert_eq!(v[0]["chains"][0]["vectors"][0].as_array().unwrap().len(), 4);
        assert_eq!(json, spectrum_json(&modes, None));
    }
}
