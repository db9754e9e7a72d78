//! Transition densities p_t(x) of subordinate Brownian motions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bessel::lambda_nu;
use crate::error::{invalid, Error, Result};
use crate::mc::{mean, Estimate};
use crate::quadrature::{integrate_panels, Tolerance};
use crate::special::gamma;
use crate::subordinator::{StableIndex, SubordinatorSpec};

/// Surface area w_d = 2π^{d/2}/Γ(d/2) of the unit sphere in d dimensions.
pub fn surface_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(invalid("dimension must be at least 1"))
    } else {
        Ok(())
    }
}

/// p_1^{(α)}(0) = w_d Γ(d/α) / ((2π)^d α).
pub fn kernel_at_zero(d: usize, alpha: f64) -> Result<f64> {
    check_dim(d)?;
    StableIndex::new(alpha)?;
    let df = d as f64;
    Ok(surface_area(d) * gamma(df / alpha) / ((2.0 * PI).powf(df) * alpha))
}

/// p_t^{(α)}(0) = t^{-d/α} p_1^{(α)}(0).
pub fn kernel_at_zero_t(d: usize, alpha: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    Ok(t.powf(-(d as f64) / alpha) * kernel_at_zero(d, alpha)?)
}

/// C_{d,α} = π^{d/2} / p_1^{(α)}(0).
pub fn c_constant(d: usize, alpha: f64) -> Result<f64> {
    Ok(PI.powf(d as f64 / 2.0) / kernel_at_zero(d, alpha)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelQuery {
    pub d: usize,
    pub t: f64,
    /// Only |x| matters.
    pub x: Vec<f64>,
    pub spec: SubordinatorSpec,
}

impl KernelQuery {
    pub fn stable(alpha: f64, t: f64, x: Vec<f64>) -> Self {
        Self { d: x.len(), t, x, spec: SubordinatorSpec::Stable { alpha } }
    }
}

const MAX_OSCILLATION_PANELS: usize = 200_000;

/// p_t^{(α)}(x) by quadrature of the radial Fourier inversion integral
/// (2π)^{-d/2} ∫_0^∞ ρ^{d-1} (rρ)^{-ν} J_ν(rρ) e^{-tρ^α} dρ, ν = d/2 − 1.
pub fn kernel_value(q: &KernelQuery) -> Result<f64> {
    check_dim(q.d)?;
    if q.x.len() != q.d {
        return Err(invalid(format!("point has {} coordinates, expected {}", q.x.len(), q.d)));
    }
    let alpha = match q.spec {
        SubordinatorSpec::Stable { alpha } => alpha,
        _ => return Err(invalid("kernel_value supports the stable family only")),
    };
    StableIndex::new(alpha)?;
    let t = q.t;
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    let d = q.d as f64;
    let r = q.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nu = d / 2.0 - 1.0;
    // Truncate where e^{-tR^α} drops below 1e-16.
    let cutoff = (16.0 * 10f64.ln() / t).powf(1.0 / alpha);

    let mut points: Vec<f64> = (1..=10).map(|k| cutoff * 10f64.powi(-k)).collect();
    points.push(0.0);
    points.push(cutoff);
    if r > 0.0 {
        let width = PI / r;
        let n = (cutoff / width).ceil() as usize;
        if n > MAX_OSCILLATION_PANELS {
            return Err(Error::Quadrature(format!(
                "|x| = {r} needs {n} oscillation panels (limit {MAX_OSCILLATION_PANELS})"
            )));
        }
        points.extend((1..n).map(|k| k as f64 * width));
    }
    points.sort_by(f64::total_cmp);
    points.dedup();

    let scale = kernel_at_zero_t(q.d, alpha, t)?;
    let prefactor = (2.0 * PI).powf(-d / 2.0);
    let integrand = |rho: f64| {
        rho.powf(d - 1.0) * lambda_nu(nu, r * rho) * (-t * rho.powf(alpha)).exp()
    };
    let tol = Tolerance {
        abs: 1e-11 * scale / prefactor,
        rel: 1e-10,
        max_intervals: points.len() + 100_000,
    };
    let quad = integrate_panels(integrand, &points, tol)?;
    Ok(prefactor * quad.value)
}

pub const MIN_SAMPLES: u64 = 100;

fn check_samples(n: u64) -> Result<()> {
    if n < MIN_SAMPLES {
        Err(invalid(format!("need at least {MIN_SAMPLES} samples, got {n}")))
    } else {
        Ok(())
    }
}

/// Monte Carlo p_t^{(α,m)}(0) = (4π)^{-d/2} t^{-d/α} e^{mt} E[S_1^{-d/2} e^{-(tm)^{2/α} S_1}].
pub fn relativistic_kernel_at_zero(
    d: usize,
    alpha: f64,
    m: f64,
    t: f64,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    check_dim(d)?;
    SubordinatorSpec::Relativistic { alpha, m }.validate()?;
    if !(t > 0.0) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    check_samples(n_samples)?;
    let idx = StableIndex::new(alpha)?;
    let tilt = (t * m).powf(2.0 / alpha);
    let half_d = d as f64 / 2.0;
    let est = mean(n_samples, seed, |rng| {
        let s = idx.draw_unit(rng);
        s.powf(-half_d) * (-tilt * s).exp()
    });
    let factor = (4.0 * PI).powf(-half_d) * t.powf(-(d as f64) / alpha) * (m * t).exp();
    Ok(est.scaled(factor))
}

/// Monte Carlo p_t^{(a)}(0) = (4π)^{-d/2} E[(t^{2/α} S_1^{α} + (at)^{2/β} S_1^{β})^{-d/2}].
pub fn mixed_kernel_at_zero(
    d: usize,
    alpha: f64,
    beta: f64,
    a: f64,
    t: f64,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    check_dim(d)?;
    SubordinatorSpec::Mixed { alpha, beta, a }.validate()?;
    if !(t > 0.0) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    check_samples(n_samples)?;
    let lo = StableIndex::new(alpha)?;
    let hi = StableIndex::new(beta)?;
    let (c_lo, c_hi) = (t.powf(2.0 / alpha), (a * t).powf(2.0 / beta));
    let half_d = d as f64 / 2.0;
    let est = mean(n_samples, seed, |rng| {
        (c_lo * lo.draw_unit(rng) + c_hi * hi.draw_unit(rng)).powf(-half_d)
    });
    Ok(est.scaled((4.0 * PI).powf(-half_d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subordinator::{density_half, stable_moment};
    use crate::quadrature::integrate_to_infinity;

    fn cauchy(d: usize, t: f64, r: f64) -> f64 {
        let k = (d as f64 + 1.0) / 2.0;
        gamma(k) / PI.powf(k) * t / (t * t + r * r).powf(k)
    }

    #[test]
    fn at_zero_examples() {
        assert!((kernel_at_zero(1, 2.0).unwrap() - (4.0 * PI).powf(-0.5)).abs() < 1e-15);
        assert!((kernel_at_zero(1, 1.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((kernel_at_zero(2, 1.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((kernel_at_zero(2, 1.0).unwrap() - cauchy(2, 1.0, 0.0)).abs() < 1e-15);
        assert!(kernel_at_zero(0, 1.0).is_err());
        assert!(kernel_at_zero(1, 0.0).is_err());
    }

    #[test]
    fn c_constant_at_two_is_two_pi_power() {
        for d in 1..4 {
            let c = c_constant(d, 2.0).unwrap();
            assert!((c / (2.0 * PI).powi(d as i32) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn moment_identity() {
        for d in 1..=3 {
            for alpha in [0.5, 1.0, 1.5, 2.0] {
                let lhs = (4.0 * PI).powf(d as f64 / 2.0) * kernel_at_zero(d, alpha).unwrap();
                let rhs = stable_moment(alpha, -(d as f64) / 2.0).unwrap();
                assert!((lhs / rhs - 1.0).abs() < 1e-10, "d={d} alpha={alpha}");
            }
        }
    }

    #[test]
    fn value_examples() {
        let v = kernel_value(&KernelQuery::stable(1.0, 1.0, vec![0.0])).unwrap();
        assert!((v - 1.0 / PI).abs() < 1e-9);
        let v = kernel_value(&KernelQuery::stable(1.0, 2.0, vec![1.0])).unwrap();
        assert!((v - 2.0 / (5.0 * PI)).abs() < 1e-9);
        let v = kernel_value(&KernelQuery::stable(2.0, 1.0, vec![1.0])).unwrap();
        assert!((v - (4.0 * PI).powf(-0.5) * (-0.25f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_queries() {
        assert!(kernel_value(&KernelQuery::stable(1.0, 0.0, vec![0.0])).is_err());
        let q = KernelQuery { d: 1, t: 1.0, x: vec![0.0], spec: SubordinatorSpec::Relativistic { alpha: 1.0, m: 1.0 } };
        assert!(kernel_value(&q).is_err());
    }

    #[test]
    fn bessel_reduction_matches_closed_forms() {
        for d in [2usize, 3] {
            for (t, r) in [(1.0, 0.0), (1.0, 0.7), (0.5, 2.0), (2.0, 5.0)] {
                let mut x = vec![0.0; d];
                x[0] = r;
                let c = kernel_value(&KernelQuery::stable(1.0, t, x.clone())).unwrap();
                assert!((c / cauchy(d, t, r) - 1.0).abs() < 1e-8, "cauchy d={d} t={t} r={r}");
                let g = kernel_value(&KernelQuery::stable(2.0, t, x)).unwrap();
                let want = (4.0 * PI * t).powf(-(d as f64) / 2.0) * (-r * r / (4.0 * t)).exp();
                assert!((g / want - 1.0).abs() < 1e-8, "gauss d={d} t={t} r={r}");
            }
        }
    }

    #[test]
    fn scaling_law() {
        for (d, alpha, t, r) in [(1usize, 0.7, 0.3, 0.5), (1, 1.5, 2.0, 1.3), (2, 1.2, 0.5, 0.4), (3, 0.9, 1.7, 0.8)] {
            let mut x = vec![0.0; d];
            x[0] = r;
            let lhs = kernel_value(&KernelQuery::stable(alpha, t, x.clone())).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| v * t.powf(-1.0 / alpha)).collect();
            let rhs = t.powf(-(d as f64) / alpha) * kernel_value(&KernelQuery::stable(alpha, 1.0, xs)).unwrap();
            assert!((lhs / rhs - 1.0).abs() < 1e-6, "d={d} alpha={alpha}");
        }
    }

    #[test]
    fn subordination_consistency() {
        for (t, x) in [(1.0f64, 0.5f64), (0.5, 1.0), (2.0, 3.0)] {
            let direct = kernel_value(&KernelQuery::stable(1.0, t, vec![x])).unwrap();
            let f = |s: f64| {
                if s <= 0.0 {
                    return 0.0;
                }
                (4.0 * PI * s).powf(-0.5) * (-x * x / (4.0 * s)).exp() * density_half(t, s).unwrap()
            };
            let sub = integrate_to_infinity(f, 0.0, Tolerance::new(1e-13, 1e-11)).unwrap().value;
            assert!((direct / sub - 1.0).abs() < 1e-6, "t={t} x={x}: {direct} {sub}");
        }
    }

    #[test]
    fn radial_decrease_and_zero_dominance() {
        for alpha in [0.6, 1.0, 1.7] {
            let at_zero = kernel_at_zero_t(1, alpha, 0.8).unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..12 {
                let v = kernel_value(&KernelQuery::stable(alpha, 0.8, vec![0.25 * k as f64])).unwrap();
                assert!(v < prev && v <= at_zero * (1.0 + 1e-9), "alpha={alpha} k={k}");
                prev = v;
            }
        }
    }
}
