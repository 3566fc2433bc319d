//! Small numerical helpers shared by the moment and convolution code.

use statrs::function::gamma::ln_gamma;

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Binomial coefficient C(m, d) in floating point (exact for small arguments).
pub fn binomial(m: usize, d: usize) -> f64 {
    if d > m {
        return 0.0;
    }
    let d = d.min(m - d);
    let mut c = 1.0;
    for j in 0..d {
        c = c * (m - j) as f64 / (j + 1) as f64;
    }
    c
}

pub fn ln_binomial(m: f64, d: f64) -> f64 {
    ln_gamma(m + 1.0) - ln_gamma(d + 1.0) - ln_gamma(m - d + 1.0)
}

pub fn ln_factorial(k: f64) -> f64 {
    ln_gamma(k + 1.0)
}

/// Euler–Maclaurin estimate of `sum_{m > cut} m^{-s}` for `s > 1` and `cut >= 1`.
pub fn power_tail_sum(s: f64, cut: usize) -> f64 {
    debug_assert!(s > 1.0);
    let m = cut as f64;
    m.powf(1.0 - s) / (s - 1.0) - m.powf(-s) / 2.0 + s * m.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * m.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * m.powf(-s - 5.0) / 30240.0
}

/// Magnitude of the first omitted term of [`power_tail_sum`].
pub fn power_tail_error(s: f64, cut: usize) -> f64 {
    let rising: f64 = (0..7).map(|j| s + j as f64).product();
    rising * (cut as f64).powf(-s - 7.0) / 1_209_600.0
}

/// Signed Stirling numbers of the first kind: coefficients of the falling
/// factorial `m (m-1) ... (m-d+1) = sum_j s(d, j) m^j`.
pub fn falling_factorial_coefficients(d: usize) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for j in 0..d {
        // multiply by (m - j)
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= j as f64 * c;
        }
        coeffs = next;
    }
    coeffs
}

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
