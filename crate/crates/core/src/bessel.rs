//! The entire function Λ_ν(z) = z^{-ν} J_ν(z) for integer and half-integer ν ≥ -1/2.

use std::f64::consts::PI;

use crate::special::gamma;

fn series(nu: f64, z: f64) -> f64 {
    // z^{-ν} J_ν(z) = 2^{-ν} Σ_k (-z²/4)^k / (k! Γ(k+ν+1))
    let q = -z * z / 4.0;
    let mut term = 1.0 / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k as f64 + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * 2f64.powf(-nu)
}

fn asymptotic_j(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let chi = z - (nu / 2.0 + 0.25) * PI;
    let (mut p, mut q) = (0.0, 0.0);
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * z);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn trapezoid_j(n: i32, z: f64) -> f64 {
    // J_n(z) = (1/2π) ∫_0^{2π} cos(nτ − z sin τ) dτ; exponentially accurate for periodic integrands.
    let m = (z + n as f64) as usize + 64;
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|i| {
            let tau = i as f64 * h;
            (n as f64 * tau - z * tau.sin()).cos()
        })
        .sum::<f64>()
        / m as f64
}

/// z^{-n} j_n(z)·√(2/π) with spherical Bessel j_n, n ≥ -1, by upward recurrence.
fn half_integer(n: i32, z: f64) -> f64 {
    let (s, c) = z.sin_cos();
    let mut jm1 = c / z; // j_{-1}
    let mut j0 = s / z;
    if n == -1 {
        return (2.0 / PI).sqrt() * c;
    }
    for k in 0..n {
        let next = (2 * k + 1) as f64 / z * j0 - jm1;
        jm1 = j0;
        j0 = next;
    }
    (2.0 / PI).sqrt() * j0 / z.powi(n)
}

/// Λ_ν(z) = z^{-ν} J_ν(z) for z ≥ 0, where 2ν is an integer ≥ -1.
pub fn lambda_nu(nu: f64, z: f64) -> f64 {
    let twice = (2.0 * nu).round() as i32;
    debug_assert!((2.0 * nu - twice as f64).abs() < 1e-12 && twice >= -1);
    if twice % 2 != 0 {
        let n = (twice - 1) / 2;
        if n == -1 || z > 1.5 * n as f64 + 2.0 {
            return half_integer(n, z);
        }
        return series(nu, z);
    }
    let n = twice / 2;
    if z < 4.0 {
        series(nu, z)
    } else if z < 40.0 + 2.0 * n as f64 {
        trapezoid_j(n, z) / z.powi(n)
    } else {
        asymptotic_j(nu, z) / z.powi(n)
    }
}
