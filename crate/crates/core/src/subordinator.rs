//! Stable, relativistic and mixed subordinators: exact samplers, moments,
//! the α = 1 density and the lower tail bound.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::gamma;

/// Stability index α of the process; the subordinator has index ρ = α/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableIndex {
    alpha: f64,
    rho: f64,
}

impl StableIndex {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(invalid(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        Ok(Self { alpha, rho: alpha / 2.0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// α = 2 gives the deterministic subordinator S_t = t.
    pub fn is_deterministic(&self) -> bool {
        self.alpha == 2.0
    }

    /// One draw of S_1.
    pub fn draw_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_deterministic() {
            1.0
        } else {
            kanter(self.rho, rng)
        }
    }

    /// One draw of S_t, using S_t = t^{2/α} S_1 in distribution.
    pub fn draw<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        if self.is_deterministic() {
            t
        } else {
            t.powf(1.0 / self.rho) * kanter(self.rho, rng)
        }
    }
}

// Kanter's representation of a one-sided stable variable with E e^{-λS} = e^{-λ^ρ}.
fn kanter<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> f64 {
    let u01: f64 = Open01.sample(rng);
    let u = PI * u01;
    let e: f64 = Exp1.sample(rng);
    let log_s = (rho * u).sin().ln() - (u.sin().ln()) / rho
        + (1.0 - rho) / rho * (((1.0 - rho) * u).sin().ln() - e.ln());
    log_s.exp()
}

/// Subordinator family and its Laplace exponent φ, with E e^{-λS_t} = e^{-tφ(λ)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SubordinatorSpec {
    Stable { alpha: f64 },
    Relativistic { alpha: f64, m: f64 },
    Mixed { alpha: f64, beta: f64, a: f64 },
}

impl SubordinatorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Stable { alpha } => StableIndex::new(alpha).map(|_| ()),
            Self::Relativistic { alpha, m } => {
                if !(alpha > 0.0 && alpha < 2.0) {
                    return Err(invalid(format!("relativistic alpha must lie in (0, 2), got {alpha}")));
                }
                if !(m > 0.0 && m.is_finite()) {
                    return Err(invalid(format!("mass m must be positive, got {m}")));
                }
                Ok(())
            }
            Self::Mixed { alpha, beta, a } => {
                if !(alpha > 0.0 && alpha < beta && beta < 2.0) {
                    return Err(invalid(format!("mixed indices need 0 < alpha < beta < 2, got ({alpha}, {beta})")));
                }
                if !(a > 0.0 && a.is_finite()) {
                    return Err(invalid(format!("mixing weight a must be positive, got {a}")));
                }
                Ok(())
            }
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Self::Stable { alpha } | Self::Relativistic { alpha, .. } | Self::Mixed { alpha, .. } => alpha,
        }
    }

    pub fn laplace_exponent(&self, lambda: f64) -> f64 {
        match *self {
            Self::Stable { alpha } => lambda.powf(alpha / 2.0),
            Self::Relativistic { alpha, m } => {
                (lambda + m.powf(2.0 / alpha)).powf(alpha / 2.0) - m
            }
            Self::Mixed { alpha, beta, a } => lambda.powf(alpha / 2.0) + a * lambda.powf(beta / 2.0),
        }
    }

    /// One draw of S_t for this family.
    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<f64> {
        self.validate()?;
        match *self {
            Self::Stable { alpha } => sample_stable(StableIndex::new(alpha)?, t, rng),
            Self::Relativistic { alpha, m } => sample_relativistic(alpha, m, t, rng),
            Self::Mixed { alpha, beta, a } => sample_mixed(alpha, beta, a, t, rng),
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("time must be positive and finite, got {t}")))
    }
}

pub fn sample_stable<R: Rng + ?Sized>(index: StableIndex, t: f64, rng: &mut R) -> Result<f64> {
    check_time(t)?;
    Ok(index.draw(t, rng))
}

/// E[S_1^η] = Γ(1 − 2η/α)/Γ(1 − η) for η < α/2.
pub fn stable_moment(alpha: f64, eta: f64) -> Result<f64> {
    stable_moment_with(&gamma, alpha, eta)
}

/// [`stable_moment`] with an injected gamma function (used for fault injection).
pub fn stable_moment_with(gamma_fn: &dyn Fn(f64) -> f64, alpha: f64, eta: f64) -> Result<f64> {
    StableIndex::new(alpha)?;
    if !(eta < alpha / 2.0) {
        return Err(invalid(format!(
            "moment of order {eta} diverges: need eta < alpha/2 = {}",
            alpha / 2.0
        )));
    }
    if eta == 0.0 {
        return Ok(1.0);
    }
    Ok(gamma_fn(1.0 - 2.0 * eta / alpha) / gamma_fn(1.0 - eta))
}

/// Independent increments of S attached to an ordered simplex point λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementPartition {
    pub lambda: Vec<f64>,
    /// Sample of S*_{1-(λ_1-λ_j)}.
    pub head: f64,
    /// Samples of S*_{λ_k-λ_{k+1}}, k = 1..j-1.
    pub increments: Vec<f64>,
    /// head + Σ increments, a sample of S_1.
    pub total: f64,
}

pub fn check_simplex_point(lambda: &[f64]) -> Result<()> {
    if lambda.len() < 2 {
        return Err(invalid(format!("lambda needs at least 2 entries, got {}", lambda.len())));
    }
    let in_range = lambda.iter().all(|&l| l > 0.0 && l < 1.0);
    let decreasing = lambda.windows(2).all(|w| w[0] > w[1]);
    if !(in_range && decreasing) {
        return Err(invalid(format!("lambda must be strictly decreasing in (0, 1): {lambda:?}")));
    }
    Ok(())
}

/// Fills `increments` and returns (head, total). `lambda` must already be checked.
pub(crate) fn fill_increments<R: Rng + ?Sized>(
    index: &StableIndex,
    lambda: &[f64],
    increments: &mut [f64],
    rng: &mut R,
) -> (f64, f64) {
    let j = lambda.len();
    let head = index.draw(1.0 - (lambda[0] - lambda[j - 1]), rng);
    let mut total = head;
    for k in 0..j - 1 {
        increments[k] = index.draw(lambda[k] - lambda[k + 1], rng);
        total += increments[k];
    }
    (head, total)
}

pub fn sample_increments<R: Rng + ?Sized>(
    index: StableIndex,
    lambda: &[f64],
    rng: &mut R,
) -> Result<IncrementPartition> {
    check_simplex_point(lambda)?;
    let mut increments = vec![0.0; lambda.len() - 1];
    let (head, total) = fill_increments(&index, lambda, &mut increments, rng);
    Ok(IncrementPartition { lambda: lambda.to_vec(), head, increments, total })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub v_alpha: f64,
    pub p_lower: f64,
}

/// v_α = (2−α) α^{α/(2−α)} 2^{−2/(2−α)} and the guaranteed mass (1 − e^{−v_α})/2 of (1, N_α).
pub fn tail_lower_bound(alpha: f64) -> Result<TailBound> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    let v_alpha = (2.0 - alpha) * alpha.powf(alpha / (2.0 - alpha)) * 2f64.powf(-2.0 / (2.0 - alpha));
    Ok(TailBound { v_alpha, p_lower: (1.0 - (-v_alpha).exp()) / 2.0 })
}

/// Closed-form N_1 = {1 − (√π/2)(e^{1/4} − 1)}^{−2} for α = 1.
pub fn n1_closed_form() -> f64 {
    (1.0 - PI.sqrt() / 2.0 * (0.25f64.exp() - 1.0)).powi(-2)
}

/// An explicit N_α with P(S_1 ≥ N_α) ≤ (1 − e^{−v_α})/2, from Markov's
/// inequality on S_1^η, minimized over a grid of η in (0, α/2).
pub fn tail_threshold(alpha: f64) -> Result<f64> {
    let eps = tail_lower_bound(alpha)?.p_lower;
    let mut best = f64::INFINITY;
    for i in 1..200 {
        let eta = alpha / 2.0 * i as f64 / 200.0;
        let moment = stable_moment(alpha, eta)?;
        let n = (moment / eps).powf(1.0 / eta);
        if n.is_finite() && n < best {
            best = n;
        }
    }
    Ok(best.max(1.0 + f64::EPSILON))
}

pub const DEFAULT_ACCEPTANCE_FLOOR: f64 = 1e-3;

/// Rejection sampler for S_{t,m}: draw a stable S_t, accept with probability e^{−m^{2/α} s}.
#[derive(Debug, Clone, Copy)]
pub struct RelativisticSampler {
    index: StableIndex,
    t: f64,
    tilt: f64,
    acceptance: f64,
}

impl RelativisticSampler {
    pub fn new(alpha: f64, m: f64, t: f64, floor: f64) -> Result<Self> {
        SubordinatorSpec::Relativistic { alpha, m }.validate()?;
        check_time(t)?;
        let acceptance = (-m * t).exp();
        if acceptance < floor {
            return Err(Error::AcceptanceFloor { rate: acceptance, floor });
        }
        Ok(Self { index: StableIndex::new(alpha)?, t, tilt: m.powf(2.0 / alpha), acceptance })
    }

    /// Expected acceptance rate e^{−mt}.
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance
    }

    /// A sample together with the number of proposals it took.
    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        let mut attempts = 0;
        loop {
            attempts += 1;
            let s = self.index.draw(self.t, rng);
            let u: f64 = rng.random();
            if u < (-self.tilt * s).exp() {
                return (s, attempts);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_counted(rng).0
    }
}

pub fn sample_relativistic<R: Rng + ?Sized>(alpha: f64, m: f64, t: f64, rng: &mut R) -> Result<f64> {
    Ok(RelativisticSampler::new(alpha, m, t, DEFAULT_ACCEPTANCE_FLOOR)?.sample(rng))
}

/// S_{t,α/2} + a^{2/β} S_{t,β/2} with independent summands.
pub fn sample_mixed<R: Rng + ?Sized>(alpha: f64, beta: f64, a: f64, t: f64, rng: &mut R) -> Result<f64> {
    SubordinatorSpec::Mixed { alpha, beta, a }.validate()?;
    check_time(t)?;
    let lo = StableIndex::new(alpha)?;
    let hi = StableIndex::new(beta)?;
    Ok(lo.draw(t, rng) + a.powf(2.0 / beta) * hi.draw(t, rng))
}

/// Density of the 1/2-subordinator: t (2√π)^{-1} s^{-3/2} e^{-t²/(4s)}.
pub fn density_half(t: f64, s: f64) -> Result<f64> {
    check_time(t)?;
    if !(s > 0.0) {
        return Err(invalid(format!("s must be positive, got {s}")));
    }
    Ok(t / (2.0 * PI.sqrt()) * s.powf(-1.5) * (-t * t / (4.0 * s)).exp())
}

/// Distribution function of the 1/2-subordinator at time t: erfc(t/(2√s)).
pub fn cdf_half(t: f64, s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        libm::erfc(t / (2.0 * s.sqrt()))
    }
}
