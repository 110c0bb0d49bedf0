//! Matrix exponential of a 4x4 real matrix by scaling and squaring with the
//! diagonal [13/13] Padé approximant.

use nalgebra::Matrix4;

/// Padé [13/13] numerator coefficients; the denominator uses alternating signs.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the [13/13] approximant is accurate to unit roundoff.
const THETA13: f64 = 5.371920351148152;

fn norm1(m: &Matrix4<f64>) -> f64 {
    m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

pub fn expm(a: &Matrix4<f64>) -> Matrix4<f64> {
    let norm = norm1(a);
    if norm == 0.0 {
        return Matrix4::identity();
    }
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * 2f64.powi(-squarings);

    let b = &PADE13;
    let ident = Matrix4::<f64>::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;

    let u_inner = a6 * (a6 * b[13] + a4 * b[11] + a2 * b[9]) + a6 * b[7] + a4 * b[5] + a2 * b[3] + ident * b[1];
    let u = a * u_inner;
    let v = a6 * (a6 * b[12] + a4 * b[10] + a2 * b[8]) + a6 * b[6] + a4 * b[4] + a2 * b[2] + ident * b[0];

    let num = v + u;
    let den = v - u;
    let mut r = den
        .lu()
        .solve(&num)
        .expect("Padé denominator is nonsingular after scaling");
    for _ in 0..squarings {
        r = r * r;
    }
    r
}
