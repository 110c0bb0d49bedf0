//! Reproducible initial data.

/// 64-bit linear congruential generator with Knuth's MMIX constants:
/// `s <- s * 6364136223846793005 + 1442695040888963407 (mod 2^64)`.
/// A uniform draw in `[0, 1)` is the top 53 bits of the new state over `2^53`.
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub const MULTIPLIER: u64 = 6364136223846793005;
    pub const INCREMENT: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        self.state
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Per-mode coefficients for "random seed=k" initial data.
///
/// For `n = 1..=modes` four draws `r_u, r_y, r_v, r_z` uniform in `[-1, 1)` are
/// taken in that order and scaled to `(r_u / n^2, r_y / n, r_v / n^2, r_z / n)`,
/// so each mode carries energy of order `1 / n^2`.
pub fn random_coefficients(modes: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = Lcg64::new(seed);
    (1..=modes)
        .map(|n| {
            let n = n as f64;
            let ru = rng.uniform(-1.0, 1.0);
            let ry = rng.uniform(-1.0, 1.0);
            let rv = rng.uniform(-1.0, 1.0);
            let rz = rng.uniform(-1.0, 1.0);
            [ru / (n * n), ry / n, rv / (n * n), rz / n]
        })
        .collect()
}
