//! Bessel functions J_nu of the first kind for nu on the half-integer
//! lattice (nu = n/2, n >= 0), which is exactly the set of orders the
//! d-dimensional radial Fourier transform needs (nu = d/2 - 1).
//!
//! Power series below the crossover, Hankel asymptotic expansion above.
//! Both branches are accurate to ~1e-12 for the orders used here (nu <= 6).

use super::special::gamma_half;
use std::f64::consts::PI;

const CROSSOVER: f64 = 14.0;

/// J_nu(x) with nu = nu2/2, for x >= 0.
pub fn bessel_j_half(nu2: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return if nu2 == 0 { 1.0 } else { 0.0 };
    }
    if x < CROSSOVER {
        series(nu2, x)
    } else {
        asymptotic(nu2, x)
    }
}

/// Ascending series sum_k (-1)^k (x/2)^{nu+2k} / (k! Gamma(nu+k+1)).
fn series(nu2: u32, x: f64) -> f64 {
    let nu = nu2 as f64 / 2.0;
    let half = 0.5 * x;
    // leading term (x/2)^nu / Gamma(nu+1)
    let mut term = half.powf(nu) / gamma_half(nu2 + 2);
    let q = half * half;
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= -q / (kf * (nu + kf));
        sum += term;
        if term.abs() < sum.abs() * 1e-17 + 1e-300 {
            break;
        }
    }
    sum
}

/// Hankel expansion: J_nu(x) ~ sqrt(2/(pi x)) (P cos chi - Q sin chi),
/// chi = x - (2 nu + 1) pi / 4.
fn asymptotic(nu2: u32, x: f64) -> f64 {
    let mu = (nu2 as f64) * (nu2 as f64); // 4 nu^2
    let mut p = 1.0;
    let mut q = 0.0;
    let mut c = 1.0; // c_k = a_k / x^k
    let mut prev = f64::INFINITY;
    for k in 1..40u32 {
        let odd = (2 * k - 1) as f64;
        c *= (mu - odd * odd) / (8.0 * k as f64 * x);
        if c.abs() >= prev {
            break; // asymptotic series started diverging
        }
        prev = c.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * c;
        } else {
            q += sign * c;
        }
        if c.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (nu2 as f64 + 1.0) * PI / 4.0;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
