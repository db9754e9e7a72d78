//! Gaussian-family test potentials with closed-form Fourier transforms and functionals.
//!
//! Fourier convention: V̂(ξ) = ∫ e^{-i⟨x,ξ⟩} V(x) dx.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// c·exp(−|x − x₀|²/s²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
}

impl GaussianTerm {
    fn rate(&self) -> f64 {
        1.0 / (self.width * self.width)
    }

    /// Fourier amplitude c(s√π)^d, the value of V̂ at 0.
    fn fourier_mass(&self, d: usize) -> f64 {
        self.amplitude * (self.width * PI.sqrt()).powi(d as i32)
    }
}

/// Finite sum of Gaussians in `d` dimensions. The empty sum is the zero potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    d: usize,
    terms: Vec<GaussianTerm>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dot_diff(m: &[f64], a: &[f64], b: &[f64]) -> f64 {
    m.iter().zip(a).zip(b).map(|((m, a), b)| (m - a) * (m - b)).sum()
}

/// A product of Gaussians written as `prefactor · exp(−rate |x − center|²)`.
struct Product {
    prefactor: f64,
    rate: f64,
    center: Vec<f64>,
}

impl Product {
    fn of(terms: &[&GaussianTerm], d: usize) -> Self {
        let rate: f64 = terms.iter().map(|g| g.rate()).sum();
        let mut center = vec![0.0; d];
        for g in terms {
            for (c, x) in center.iter_mut().zip(&g.center) {
                *c += g.rate() * x / rate;
            }
        }
        let spread: f64 = terms.iter().map(|g| g.rate() * dist2(&g.center, &center)).sum();
        let amp: f64 = terms.iter().map(|g| g.amplitude).product();
        Self { prefactor: amp * (-spread).exp(), rate, center }
    }

    /// ∫ prefactor·exp(−rate|x−m|²) dx.
    fn mass(&self, d: usize) -> f64 {
        self.prefactor * (PI / self.rate).powf(d as f64 / 2.0)
    }

    /// ∫ (x−a)·(x−b) prefactor·exp(−rate|x−m|²) dx.
    fn cross_moment(&self, d: usize, a: &[f64], b: &[f64]) -> f64 {
        self.mass(d) * (d as f64 / (2.0 * self.rate) + dot_diff(&self.center, a, b))
    }
}

impl Potential {
    pub fn zero(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(Self { d, terms: Vec::new() })
    }

    pub fn gaussian(d: usize, amplitude: f64, width: f64, center: Vec<f64>) -> Result<Self> {
        Self::zero(d)?.with_term(amplitude, width, center)
    }

    /// Unit-width, centered Gaussian with amplitude `c`.
    pub fn centered(d: usize, amplitude: f64) -> Result<Self> {
        Self::gaussian(d, amplitude, 1.0, vec![0.0; d])
    }

    pub fn with_term(mut self, amplitude: f64, width: f64, center: Vec<f64>) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid(format!("width must be positive, got {width}")));
        }
        if !amplitude.is_finite() {
            return Err(invalid("amplitude must be finite"));
        }
        if center.len() != self.d {
            return Err(invalid(format!("center has {} coordinates, expected {}", center.len(), self.d)));
        }
        self.terms.push(GaussianTerm { amplitude, width, center });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|g| g.amplitude == 0.0)
    }

    /// V(−x) = V(x) holds termwise.
    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|g| g.center.iter().all(|&c| c == 0.0))
    }

    pub fn min_width(&self) -> Option<f64> {
        self.terms.iter().map(|g| g.width).reduce(f64::min)
    }

    fn check_point(&self, x: &[f64]) {
        assert_eq!(x.len(), self.d, "point dimension mismatch");
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.check_point(x);
        self.terms
            .iter()
            .map(|g| g.amplitude * (-dist2(x, &g.center) * g.rate()).exp())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.check_point(x);
        let mut out = vec![0.0; self.d];
        for g in &self.terms {
            let v = g.amplitude * (-dist2(x, &g.center) * g.rate()).exp();
            for ((o, xi), ci) in out.iter_mut().zip(x).zip(&g.center) {
                *o += -2.0 * g.rate() * (xi - ci) * v;
            }
        }
        out
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        self.check_point(x);
        self.terms
            .iter()
            .map(|g| {
                let a = g.rate();
                let r2 = dist2(x, &g.center);
                g.amplitude * (4.0 * a * a * r2 - 2.0 * a * self.d as f64) * (-a * r2).exp()
            })
            .sum()
    }

    pub fn fourier(&self, xi: &[f64]) -> Complex64 {
        self.check_point(xi);
        let k2: f64 = xi.iter().map(|v| v * v).sum();
        self.terms
            .iter()
            .map(|g| {
                let phase: f64 = g.center.iter().zip(xi).map(|(c, x)| c * x).sum();
                let w2 = g.width * g.width;
                Complex64::from_polar(g.fourier_mass(self.d) * (-w2 * k2 / 4.0).exp(), -phase)
            })
            .sum()
    }

    /// ‖V‖_∞: exact for a single term, the triangle-inequality bound Σ|c| for sums.
    pub fn sup_norm(&self) -> f64 {
        self.terms.iter().map(|g| g.amplitude.abs()).sum()
    }

    /// ‖V‖₁: exact for a single term, the bound Σ|c|(s√π)^d for sums.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|g| g.fourier_mass(self.d).abs()).sum()
    }

    /// Upper bound on ∫_{outside [−L,L]^d} |V|.
    pub fn mass_outside_box(&self, half_period: f64) -> f64 {
        self.terms
            .iter()
            .map(|g| {
                let inside: f64 = g
                    .center
                    .iter()
                    .map(|&c| 0.5 * (libm::erf((half_period - c) / g.width) + libm::erf((half_period + c) / g.width)))
                    .product();
                g.fourier_mass(self.d).abs() * (1.0 - inside).max(0.0)
            })
            .sum()
    }

    fn tuples(&self, k: usize) -> impl Iterator<Item = Vec<&GaussianTerm>> + '_ {
        let n = self.terms.len();
        let total = if n == 0 { 0 } else { n.pow(k as u32) };
        (0..total).map(move |mut idx| {
            (0..k)
                .map(|_| {
                    let g = &self.terms[idx % n];
                    idx /= n;
                    g
                })
                .collect()
        })
    }

    /// ∫V^k.
    pub fn integral_power(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Err(invalid("power must be at least 1"));
        }
        Ok(self.tuples(k as usize).map(|gs| Product::of(&gs, self.d).mass(self.d)).sum())
    }

    /// ∫|∇V|².
    pub fn dirichlet_energy(&self) -> f64 {
        self.tuples(2)
            .map(|gs| {
                let p = Product::of(&gs, self.d);
                4.0 * gs[0].rate() * gs[1].rate() * p.cross_moment(self.d, &gs[0].center, &gs[1].center)
            })
            .sum()
    }

    /// ∫V|∇V|².
    pub fn weighted_gradient(&self) -> f64 {
        self.tuples(3)
            .map(|gs| {
                let p = Product::of(&gs, self.d);
                4.0 * gs[1].rate() * gs[2].rate() * p.cross_moment(self.d, &gs[1].center, &gs[2].center)
            })
            .sum()
    }

    /// ∫|ΔV|² = (2π)^{-d} ∫|ξ|⁴|V̂(ξ)|² dξ, evaluated pairwise in closed form.
    pub fn biharmonic_energy(&self) -> f64 {
        let d = self.d as f64;
        self.tuples(2)
            .map(|gs| {
                let (g, h) = (gs[0], gs[1]);
                let b = (g.width * g.width + h.width * h.width) / 4.0;
                let beta = 1.0 / (4.0 * b);
                let r2 = dist2(&g.center, &h.center);
                // Δ² of (π/b)^{d/2} exp(−β|δ|²) at δ = x_g − x_h.
                let poly = 16.0 * beta.powi(4) * r2 * r2 - 16.0 * beta.powi(3) * (d + 2.0) * r2
                    + 4.0 * beta * beta * d * (d + 2.0);
                g.fourier_mass(self.d) * h.fourier_mass(self.d) * (PI / b).powf(d / 2.0) * poly * (-beta * r2).exp()
            })
            .sum::<f64>()
            / (2.0 * PI).powf(d)
    }

    /// Importance proposal for θ-space sampling, proportional to Σ|c_i|(s_i√π)^d e^{−s_i²|θ|²/4}.
    pub fn fourier_proposal(&self) -> Result<FourierProposal> {
        let weights: Vec<f64> = self
            .terms
            .iter()
            .map(|g| g.fourier_mass(self.d).abs() * (4.0 * PI / (g.width * g.width)).powf(self.d as f64 / 2.0))
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numerical("zero potential has no Fourier proposal".into()));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w / total;
            cumulative.push(acc);
        }
        Ok(FourierProposal {
            d: self.d,
            cumulative,
            probs: weights.iter().map(|w| w / total).collect(),
            sigmas: self.terms.iter().map(|g| 2f64.sqrt() / g.width).collect(),
        })
    }
}

/// Gaussian mixture on θ-space; component i has per-coordinate standard deviation √2/s_i.
#[derive(Debug, Clone)]
pub struct FourierProposal {
    d: usize,
    cumulative: Vec<f64>,
    probs: Vec<f64>,
    sigmas: Vec<f64>,
}

impl FourierProposal {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let u: f64 = rng.random();
        let i = self.cumulative.iter().position(|&c| u < c).unwrap_or(self.cumulative.len() - 1);
        for o in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *o = self.sigmas[i] * z;
        }
    }

    pub fn density(&self, theta: &[f64]) -> f64 {
        let r2: f64 = theta.iter().map(|v| v * v).sum();
        self.probs
            .iter()
            .zip(&self.sigmas)
            .map(|(p, s)| p * (2.0 * PI * s * s).powf(-(self.d as f64) / 2.0) * (-r2 / (2.0 * s * s)).exp())
            .sum()
    }
}

impl fmt::Display for Potential {
    /// Round-trips through [`Potential::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "zero");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|g| {
                let mut s = format!("gaussian:c={},s={}", g.amplitude, g.width);
                if g.center.iter().any(|&c| c != 0.0) {
                    let c: Vec<String> = g.center.iter().map(|v| v.to_string()).collect();
                    s.push_str(&format!(",x0={}", c.join("|")));
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join(";"))
    }
}

impl Potential {
    /// Parses `zero` or `;`-separated terms `gaussian:c=<amp>,s=<width>[,x0=<x1>|<x2>...]`.
    pub fn parse(text: &str, d: usize) -> Result<Self> {
        let mut v = Self::zero(d)?;
        let text = text.trim();
        if text == "zero" || text.is_empty() {
            return Ok(v);
        }
        for term in text.split(';') {
            let body = term
                .trim()
                .strip_prefix("gaussian:")
                .ok_or_else(|| invalid(format!("unknown potential family in '{term}'")))?;
            let (mut c, mut s, mut x0) = (1.0, 1.0, vec![0.0; d]);
            for kv in body.split(',').filter(|p| !p.is_empty()) {
                let (k, val) = kv
                    .split_once('=')
                    .ok_or_else(|| invalid(format!("expected key=value, got '{kv}'")))?;
                let num = |t: &str| t.trim().parse::<f64>().map_err(|_| invalid(format!("bad number '{t}'")));
                match k.trim() {
                    "c" => c = num(val)?,
                    "s" => s = num(val)?,
                    "x0" => x0 = val.split('|').map(num).collect::<Result<_>>()?,
                    other => return Err(invalid(format!("unknown gaussian parameter '{other}'"))),
                }
            }
            v = v.with_term(c, s, x0)?;
        }
        Ok(v)
    }
}
