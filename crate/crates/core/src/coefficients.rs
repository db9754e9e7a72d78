//! The L_j functional, Monte Carlo estimators of expansion coefficients and
//! closed-family constants, exponent schedules and validity checks.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::heat_kernel::c_constant;
use crate::mc::{mean, Estimate};
use crate::potential::Potential;
use crate::quadrature::{integrate, Tolerance};
use crate::special::gamma;
use crate::subordinator::{fill_increments, IncrementPartition, StableIndex};

/// Negative round-off of the compact form below this relative size is clamped to zero.
pub const CLAMP_REL: f64 = 1e-12;

/// Expanded form S_1^{-1}[head·Σ S*_k|γ_k|² + Σ_{r<s} S*_r S*_s |γ_r − γ_s|²];
/// every term is nonnegative. `gammas` is flat with stride `d`.
fn lj_expanded(head: f64, increments: &[f64], total: f64, gammas: &[f64], d: usize) -> f64 {
    let k = increments.len();
    let norm2 = |r: usize| gammas[r * d..(r + 1) * d].iter().map(|v| v * v).sum::<f64>();
    let mut diag = 0.0;
    for (r, inc) in increments.iter().enumerate() {
        diag += inc * norm2(r);
    }
    let mut cross = 0.0;
    for r in 0..k {
        for s in r + 1..k {
            let diff2: f64 = (0..d).map(|i| (gammas[r * d + i] - gammas[s * d + i]).powi(2)).sum();
            cross += increments[r] * increments[s] * diff2;
        }
    }
    (head * diag + cross) / total
}

fn partial_sums(thetas: &[Vec<f64>], d: usize) -> Result<Vec<f64>> {
    let mut gammas = Vec::with_capacity(thetas.len() * d);
    let mut acc = vec![0.0; d];
    for th in thetas {
        if th.len() != d {
            return Err(invalid(format!("theta has {} coordinates, expected {d}", th.len())));
        }
        for (a, x) in acc.iter_mut().zip(th) {
            *a += x;
        }
        gammas.extend_from_slice(&acc);
    }
    Ok(gammas)
}

fn check_lj_shapes(partition: &IncrementPartition, thetas: &[Vec<f64>]) -> Result<usize> {
    let j = partition.lambda.len();
    if partition.increments.len() + 1 != j || thetas.len() + 1 != j {
        return Err(invalid(format!(
            "length mismatch: lambda {j}, increments {}, thetas {}",
            partition.increments.len(),
            thetas.len()
        )));
    }
    Ok(thetas.first().map_or(1, Vec::len))
}

/// L_j evaluated through the manifestly nonnegative expanded form.
pub fn eval_lj(partition: &IncrementPartition, thetas: &[Vec<f64>]) -> Result<f64> {
    let d = check_lj_shapes(partition, thetas)?;
    let gammas = partial_sums(thetas, d)?;
    Ok(lj_expanded(partition.head, &partition.increments, partition.total, &gammas, d))
}

/// L_j = Σ S*_k|γ_k|² − |Σ S*_k γ_k|²/S_1 in its compact form. Negative
/// round-off up to [`CLAMP_REL`] relative is clamped; anything larger is an error.
pub fn eval_lj_compact(partition: &IncrementPartition, thetas: &[Vec<f64>]) -> Result<f64> {
    let d = check_lj_shapes(partition, thetas)?;
    let gammas = partial_sums(thetas, d)?;
    let mut first = 0.0;
    let mut weighted = vec![0.0; d];
    for (r, s) in partition.increments.iter().enumerate() {
        let g = &gammas[r * d..(r + 1) * d];
        first += s * g.iter().map(|v| v * v).sum::<f64>();
        for (w, x) in weighted.iter_mut().zip(g) {
            *w += s * x;
        }
    }
    let value = first - weighted.iter().map(|v| v * v).sum::<f64>() / partition.total;
    if value >= 0.0 {
        Ok(value)
    } else if -value <= CLAMP_REL * first {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("L_j compact form is negative beyond round-off: {value:e}")))
    }
}

/// A full L_j evaluation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LjEvaluation {
    pub partition: IncrementPartition,
    pub thetas: Vec<Vec<f64>>,
    pub gammas: Vec<Vec<f64>>,
    pub value: f64,
}

impl LjEvaluation {
    pub fn new(partition: IncrementPartition, thetas: Vec<Vec<f64>>) -> Result<Self> {
        let value = eval_lj(&partition, &thetas)?;
        let d = thetas.first().map_or(1, Vec::len);
        let gammas = partial_sums(&thetas, d)?.chunks(d).map(<[f64]>::to_vec).collect();
        Ok(Self { partition, thetas, gammas, value })
    }
}

/// A uniform point of the ordered simplex I_j (density j!).
pub fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = rng.random();
    }
    out.sort_by(|a, b| b.total_cmp(a));
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KConstant {
    K1,
    K2,
    K3,
}

impl KConstant {
    /// Simplex dimension j of the defining integral.
    pub fn simplex_dim(self) -> usize {
        match self {
            Self::K1 | Self::K2 => 2,
            Self::K3 => 3,
        }
    }

    fn integrand(self, head: f64, incs: &[f64], total: f64, d: usize) -> f64 {
        let p = d as f64 / 2.0;
        match self {
            Self::K1 => head * incs[0] / total.powf(1.0 + p),
            Self::K2 => (head * incs[0]).powi(2) / total.powf(2.0 + p),
            Self::K3 => (head * incs[0] + head * incs[1] + incs[0] * incs[1]) / total.powf(1.0 + p),
        }
    }

    /// Parameter ranges where the constant is known to be finite and positive.
    pub fn check_validity(self, d: usize, alpha: f64) -> Result<()> {
        StableIndex::new(alpha)?;
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if alpha == 2.0 {
            return Ok(());
        }
        let ok = match self {
            Self::K1 | Self::K3 => d >= 2 || alpha > 0.5,
            Self::K2 => d >= 4 || (d >= 2 && alpha > 1.0),
        };
        if ok {
            Ok(())
        } else {
            let rule = match self {
                Self::K1 | Self::K3 => "d >= 2, or d = 1 with alpha > 1/2",
                Self::K2 => "d >= 4, or d >= 2 with 1 < alpha < 2",
            };
            Err(Error::Validity(format!("{self} needs {rule}; got d = {d}, alpha = {alpha}")))
        }
    }
}

impl fmt::Display for KConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::K1 => "K1",
            Self::K2 => "K2",
            Self::K3 => "K3",
        };
        f.write_str(s)
    }
}

impl FromStr for KConstant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K1" | "k1" => Ok(Self::K1),
            "K2" | "k2" => Ok(Self::K2),
            "K3" | "k3" => Ok(Self::K3),
            _ => Err(invalid(format!("unknown constant '{s}' (expected K1, K2 or K3)"))),
        }
    }
}

/// Labels attached to a Monte Carlo coefficient estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientParams {
    pub quantity: String,
    pub n: Option<u32>,
    pub j: Option<u32>,
    pub alpha: f64,
    pub d: usize,
    pub potential: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub params: CoefficientParams,
}

impl CoefficientEstimate {
    fn from_estimate(est: Estimate, seed: u64, params: CoefficientParams) -> Self {
        Self { value: est.value, stderr: est.stderr, n_samples: est.n_samples, seed, params }
    }

    pub fn z_score(&self, target: f64) -> f64 {
        Estimate { value: self.value, stderr: self.stderr, n_samples: self.n_samples }.z_score(target)
    }
}

/// Monte Carlo K over the simplex: λ uniform on I_j, increments exact, times vol(I_j) = 1/j!.
pub fn mc_constant_k(which: KConstant, d: usize, alpha: f64, n_samples: u64, seed: u64) -> Result<CoefficientEstimate> {
    which.check_validity(d, alpha)?;
    let idx = StableIndex::new(alpha)?;
    let j = which.simplex_dim();
    let est = mean(n_samples, seed, |rng| {
        let mut lambda = [0.0; 3];
        let mut incs = [0.0; 2];
        sample_simplex(rng, &mut lambda[..j]);
        let (head, total) = fill_increments(&idx, &lambda[..j], &mut incs[..j - 1], rng);
        which.integrand(head, &incs[..j - 1], total, d)
    });
    let params = CoefficientParams { quantity: which.to_string(), n: None, j: Some(j as u32), alpha, d, potential: None };
    Ok(CoefficientEstimate::from_estimate(est.scaled(1.0 / factorial(j as u32)), seed, params))
}

/// K at α = 2, where increments equal their time lengths, by nested quadrature.
pub fn constant_k_deterministic(which: KConstant, d: usize) -> Result<f64> {
    which.check_validity(d, 2.0)?;
    let tol = Tolerance::new(1e-15, 1e-13);
    let k2 = |l1: f64, l2: f64| which.integrand(1.0 - (l1 - l2), &[l1 - l2], 1.0, d);
    let k3 = |l1: f64, l2: f64, l3: f64| which.integrand(1.0 - (l1 - l3), &[l1 - l2, l2 - l3], 1.0, d);
    let outer = |l1: f64| -> Result<f64> {
        match which {
            KConstant::K1 | KConstant::K2 => Ok(integrate(|l2| k2(l1, l2), 0.0, l1, tol)?.value),
            KConstant::K3 => {
                let mid = |l2: f64| integrate(|l3| k3(l1, l2, l3), 0.0, l2, tol).map(|q| q.value).unwrap_or(f64::NAN);
                Ok(integrate(mid, 0.0, l1, tol)?.value)
            }
        }
    };
    let value = integrate(|l1| outer(l1).unwrap_or(f64::NAN), 0.0, 1.0, tol)?.value;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Quadrature(format!("{which} deterministic quadrature failed")))
    }
}

/// Which closed-family constant: 𝓛 = C K₁/(2π)^d, 𝓝 = C K₂/(2(2π)^d), 𝓜 = C K₃/(2π)^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyConstant {
    L,
    M,
    N,
}

impl FamilyConstant {
    pub fn k(self) -> KConstant {
        match self {
            Self::L => KConstant::K1,
            Self::N => KConstant::K2,
            Self::M => KConstant::K3,
        }
    }

    /// Multiplier turning K into the constant.
    pub fn factor(self, d: usize, alpha: f64) -> Result<f64> {
        let base = c_constant(d, alpha)? / (2.0 * PI).powf(d as f64);
        Ok(if self == Self::N { base / 2.0 } else { base })
    }
}

impl FromStr for FamilyConstant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" => Ok(Self::L),
            "M" => Ok(Self::M),
            "N" => Ok(Self::N),
            _ => Err(invalid(format!("unknown constant '{s}' (expected L, M or N)"))),
        }
    }
}

pub fn mc_family_constant(which: FamilyConstant, d: usize, alpha: f64, n_samples: u64, seed: u64) -> Result<CoefficientEstimate> {
    let k = mc_constant_k(which.k(), d, alpha, n_samples, seed)?;
    let f = which.factor(d, alpha)?;
    let quantity = match which {
        FamilyConstant::L => "L",
        FamilyConstant::M => "M",
        FamilyConstant::N => "N",
    };
    Ok(CoefficientEstimate {
        value: k.value * f,
        stderr: k.stderr * f,
        params: CoefficientParams { quantity: quantity.into(), ..k.params },
        ..k
    })
}

pub fn constant_l(d: usize, alpha: f64, n_samples: u64, seed: u64) -> Result<CoefficientEstimate> {
    mc_family_constant(FamilyConstant::L, d, alpha, n_samples, seed)
}

pub fn constant_m(d: usize, alpha: f64, n_samples: u64, seed: u64) -> Result<CoefficientEstimate> {
    mc_family_constant(FamilyConstant::M, d, alpha, n_samples, seed)
}

pub fn constant_n(d: usize, alpha: f64, n_samples: u64, seed: u64) -> Result<CoefficientEstimate> {
    mc_family_constant(FamilyConstant::N, d, alpha, n_samples, seed)
}

/// Admissibility of an integer M under the two finiteness conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub d: usize,
    pub alpha: f64,
    pub m: u32,
    /// M < (d+α)/2.
    pub basic_ok: bool,
    /// M/2 − d/4 < α/2 on a route where it applies.
    pub improved_ok: bool,
    /// Largest admissible M under the best applicable condition (0 if none).
    pub max_m: u32,
}

/// (d, M) pairs where the improved condition has been established.
pub const IMPROVED_ROUTES: [(usize, u32); 5] = [(1, 1), (1, 2), (2, 2), (3, 1), (3, 2)];

fn basic_holds(d: usize, alpha: f64, m: u32) -> bool {
    (m as f64) < (d as f64 + alpha) / 2.0
}

fn improved_holds(d: usize, alpha: f64, m: u32) -> bool {
    IMPROVED_ROUTES.contains(&(d, m)) && m as f64 / 2.0 - d as f64 / 4.0 < alpha / 2.0
}

pub fn validate_params(d: usize, alpha: f64, m: u32) -> ValidityReport {
    let max_m = (1..=64).filter(|&k| basic_holds(d, alpha, k) || improved_holds(d, alpha, k)).max().unwrap_or(0);
    ValidityReport {
        d,
        alpha,
        m,
        basic_ok: basic_holds(d, alpha, m),
        improved_ok: improved_holds(d, alpha, m),
        max_m,
    }
}

impl ValidityReport {
    pub fn admissible(&self) -> bool {
        self.basic_ok || self.improved_ok
    }

    /// Err naming the violated inequalities when M is not admissible.
    pub fn require(&self) -> Result<()> {
        if self.admissible() {
            return Ok(());
        }
        let (d, a, m) = (self.d as f64, self.alpha, self.m as f64);
        let mut msg = format!("M < (d+α)/2 violated: M = {m}, (d+α)/2 = {}", (d + a) / 2.0);
        if IMPROVED_ROUTES.contains(&(self.d, self.m)) {
            msg.push_str(&format!("; M/2 − d/4 < α/2 violated: {} ≥ {}", m / 2.0 - d / 4.0, a / 2.0));
        } else {
            msg.push_str(&format!("; no improved route for (d, M) = ({}, {})", self.d, self.m));
        }
        Err(Error::Validity(msg))
    }
}

/// Φ_{J+1}(M) = min{J+1, 2 + 2M/α}.
pub fn phi_exponent(j_max: u32, m: u32, alpha: f64) -> f64 {
    ((j_max + 1) as f64).min(2.0 + 2.0 * m as f64 / alpha)
}

/// C_{n,j}(V) by importance-sampled Monte Carlo over (λ, θ, increments).
pub fn mc_coefficient_cnj(
    v: &Potential,
    n: u32,
    j: u32,
    alpha: f64,
    n_samples: u64,
    seed: u64,
) -> Result<CoefficientEstimate> {
    let d = v.dim();
    let idx = StableIndex::new(alpha)?;
    if j < 2 {
        return Err(invalid(format!("j must be at least 2, got {j}")));
    }
    if n > 0 && alpha < 2.0 {
        let report = validate_params(d, alpha, n);
        if n > report.max_m {
            return Err(Error::Validity(format!(
                "n = {n} exceeds M_max = {} for d = {d}, alpha = {alpha}: {}",
                report.max_m,
                match report.require() {
                    Err(Error::Validity(m)) => m,
                    _ => String::new(),
                }
            )));
        }
    }
    let params = CoefficientParams {
        quantity: "C".into(),
        n: Some(n),
        j: Some(j),
        alpha,
        d,
        potential: Some(v.to_string()),
    };
    if v.is_zero() {
        return Ok(CoefficientEstimate { value: 0.0, stderr: 0.0, n_samples, seed, params });
    }
    let proposal = v.fourier_proposal()?;
    let ju = j as usize;
    let k = ju - 1;
    let half_d = d as f64 / 2.0;
    let est = mean(n_samples, seed, |rng| {
        let mut lambda = vec![0.0; ju];
        let mut incs = vec![0.0; k];
        let mut thetas = vec![0.0; k * d];
        let mut gammas = vec![0.0; k * d];
        sample_simplex(rng, &mut lambda);
        let (head, total) = fill_increments(&idx, &lambda, &mut incs, rng);
        let mut weight = num_complex::Complex64::new(1.0, 0.0);
        for i in 0..k {
            let th = &mut thetas[i * d..(i + 1) * d];
            proposal.sample(rng, th);
            weight *= v.fourier(th) / proposal.density(th);
            for c in 0..d {
                gammas[i * d + c] = th[c] + if i > 0 { gammas[(i - 1) * d + c] } else { 0.0 };
            }
        }
        let minus_sum: Vec<f64> = gammas[(k - 1) * d..].iter().map(|x| -x).collect();
        weight *= v.fourier(&minus_sum);
        let lj = if n == 0 { 1.0 } else { lj_expanded(head, &incs, total, &gammas, d).powi(n as i32) };
        total.powf(-half_d) * lj * weight.re
    });
    let prefactor = c_constant(d, alpha)? / ((2.0 * PI).powf((j as usize * d) as f64) * factorial(n)) / factorial(j);
    Ok(CoefficientEstimate::from_estimate(est.scaled(prefactor), seed, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub exponent: f64,
    pub n: u32,
    pub j: u32,
    /// (−1)^{n+j}
    pub sign: i8,
}

/// Powers 2n/α + j of the small-time expansion below the cutoff Φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSchedule {
    pub entries: Vec<ScheduleEntry>,
    pub cutoff: f64,
    pub j_max: u32,
    pub m: u32,
    pub alpha: f64,
    pub d: usize,
}

pub fn exponent_schedule(j_max: u32, m: u32, alpha: f64, d: usize) -> Result<ExponentSchedule> {
    if j_max < 2 || m < 1 {
        return Err(invalid(format!("need J >= 2 and M >= 1, got J = {j_max}, M = {m}")));
    }
    StableIndex::new(alpha)?;
    let cutoff = phi_exponent(j_max, m, alpha);
    let entry = |n: u32, j: u32| ScheduleEntry {
        exponent: 2.0 * n as f64 / alpha + j as f64,
        n,
        j,
        sign: if (n + j).is_multiple_of(2) { 1 } else { -1 },
    };
    let mut entries = vec![entry(0, 1)];
    for n in 0..m {
        for j in 2..=j_max {
            let e = entry(n, j);
            if e.exponent < cutoff {
                entries.push(e);
            }
        }
    }
    entries.sort_by(|a, b| a.exponent.total_cmp(&b.exponent).then(a.n.cmp(&b.n)));
    Ok(ExponentSchedule { entries, cutoff, j_max, m, alpha, d })
}

/// Lower-triangular (J−1)×(J−1) matrix with a_{r,s} = r − s + 2 + (2/α)(s − 1) for r ≥ s.
pub fn matrix_aj(j_max: u32, alpha: f64) -> Result<Vec<Vec<f64>>> {
    if j_max < 2 {
        return Err(invalid(format!("need J >= 2, got {j_max}")));
    }
    StableIndex::new(alpha)?;
    let size = (j_max - 1) as usize;
    Ok((1..=size)
        .map(|r| {
            (1..=size)
                .map(|s| if r >= s { (r - s + 2) as f64 + 2.0 / alpha * (s - 1) as f64 } else { 0.0 })
                .collect()
        })
        .collect())
}

/// (2π)^{(J+2)d} ‖V‖_∞^J e^{t‖V‖_∞} ‖V‖₁ / (J+1)!, bounding |r_{J+1}(t)| / p_t(0).
pub fn remainder_bound(v: &Potential, j_max: u32, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid(format!("t must lie in (0, 1), got {t}")));
    }
    let d = v.dim() as f64;
    let sup = v.sup_norm();
    Ok((2.0 * PI).powf((j_max as f64 + 2.0) * d) * sup.powi(j_max as i32) * (t * sup).exp() * v.l1_norm()
        / gamma(j_max as f64 + 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::subordinator::{check_simplex_point, sample_increments};
    use proptest::prelude::*;
    use rand::Rng;

    fn partition(alpha: f64, lambda: &[f64], seed: u64) -> IncrementPartition {
        sample_increments(StableIndex::new(alpha).unwrap(), lambda, &mut stream(seed)).unwrap()
    }

    #[test]
    fn lj_examples() {
        let p = partition(2.0, &[0.6, 0.2], 0);
        assert_eq!(eval_lj(&p, &[vec![0.0]]).unwrap(), 0.0);
        let v = eval_lj(&p, &[vec![1.0]]).unwrap();
        assert!((v - 0.24).abs() < 1e-15);
        let v = eval_lj(&p, &[vec![0.6, 0.8]]).unwrap();
        assert!((v - 0.24).abs() < 1e-15);
    }

    #[test]
    fn lj_rejects_mismatch() {
        let p = partition(1.0, &[0.7, 0.5, 0.1], 1);
        assert!(eval_lj(&p, &[vec![1.0]]).is_err());
        assert!(eval_lj(&p, &[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn lj_record() {
        let p = partition(1.3, &[0.9, 0.4, 0.3], 2);
        let e = LjEvaluation::new(p, vec![vec![1.0, 0.0], vec![-0.5, 2.0]]).unwrap();
        assert_eq!(e.gammas, vec![vec![1.0, 0.0], vec![0.5, 2.0]]);
        assert!(e.value >= 0.0);
    }

    #[test]
    fn forms_agree_on_random_inputs() {
        let mut rng = stream(42);
        for i in 0..10_000 {
            let j = 2 + i % 4;
            let d = 1 + i % 3;
            let alpha = rng.random_range(0.6..2.0);
            let mut lambda = vec![0.0; j];
            sample_simplex(&mut rng, &mut lambda);
            let p = sample_increments(StableIndex::new(alpha).unwrap(), &lambda, &mut rng).unwrap();
            let thetas: Vec<Vec<f64>> = (0..j - 1).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let a = eval_lj(&p, &thetas).unwrap();
            let b = eval_lj_compact(&p, &thetas).unwrap();
            let scale = p.total * partial_sums(&thetas, d).unwrap().iter().map(|x| x * x).sum::<f64>();
            assert!((a - b).abs() <= 1e-10 * a.max(1e-300) || (a - b).abs() <= 1e-13 * scale, "a={a} b={b}");
        }
    }

    #[test]
    fn deterministic_k_values() {
        for d in 1..=4 {
            assert!((constant_k_deterministic(KConstant::K1, d).unwrap() - 1.0 / 12.0).abs() < 1e-10);
        }
        assert!((constant_k_deterministic(KConstant::K2, 2).unwrap() - 1.0 / 60.0).abs() < 1e-10);
        // The K3 display evaluates to 1/24 at α = 2.
        assert!((constant_k_deterministic(KConstant::K3, 1).unwrap() - 1.0 / 24.0).abs() < 1e-10);
    }

    #[test]
    fn family_constants_at_two() {
        for d in 1..=3 {
            let l = FamilyConstant::L.factor(d, 2.0).unwrap() * constant_k_deterministic(KConstant::K1, d).unwrap();
            assert!((l - 1.0 / 12.0).abs() < 1e-10);
            let n = FamilyConstant::N.factor(d, 2.0).unwrap() * constant_k_deterministic(KConstant::K2, d).unwrap();
            assert!((n - 1.0 / 120.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mc_at_two_matches_quadrature() {
        for which in [KConstant::K1, KConstant::K2, KConstant::K3] {
            let est = mc_constant_k(which, 2, 2.0, 2_000_000, 7).unwrap();
            let exact = constant_k_deterministic(which, 2).unwrap();
            assert!((est.value / exact - 1.0).abs() < 1e-3, "{which}: {} vs {exact}", est.value);
        }
    }

    #[test]
    fn k_validity_ranges() {
        assert!(mc_constant_k(KConstant::K1, 1, 0.4, 1000, 0).is_err());
        assert!(mc_constant_k(KConstant::K2, 1, 1.5, 1000, 0).is_err());
        assert!(mc_constant_k(KConstant::K2, 3, 0.9, 1000, 0).is_err());
        assert!(mc_constant_k(KConstant::K2, 4, 0.9, 1000, 0).is_ok());
        assert!(mc_constant_k(KConstant::K1, 2, 0.3, 1000, 0).is_ok());
    }

    #[test]
    fn k1_upper_bound_for_d_at_least_two() {
        for alpha in [0.8, 1.4] {
            let est = mc_constant_k(KConstant::K1, 3, alpha, 400_000, 3).unwrap();
            let bound = crate::subordinator::stable_moment(alpha, 1.0 - 1.5).unwrap() / 4.0;
            assert!(est.value > 0.0 && est.value <= bound, "{} vs {bound}", est.value);
        }
    }

    #[test]
    fn validity_examples() {
        for alpha in [0.6, 0.9, 1.1, 1.5] {
            let r = validate_params(1, alpha, 1);
            assert_eq!(r.basic_ok, alpha > 1.0);
            assert_eq!(r.improved_ok, alpha > 0.5);
            let r = validate_params(3, alpha, 2);
            assert_eq!(r.improved_ok, alpha > 0.5);
        }
        assert!(!validate_params(1, 0.4, 1).admissible());
        let msg = validate_params(1, 0.4, 1).require().unwrap_err().to_string();
        assert!(msg.contains("M < (d+α)/2 violated"));
        assert_eq!(validate_params(1, 1.0, 1).max_m, 1);
        assert_eq!(phi_exponent(3, 1, 1.0), 4.0);
    }

    #[test]
    fn schedule_example() {
        let s = exponent_schedule(5, 2, 1.0, 1).unwrap();
        let exps: Vec<f64> = s.entries.iter().map(|e| e.exponent).collect();
        assert_eq!(exps, vec![1.0, 2.0, 3.0, 4.0, 4.0, 5.0, 5.0]);
        assert_eq!(s.cutoff, 6.0);
        for e in &s.entries {
            assert_eq!(e.exponent, (2 * e.n + e.j) as f64);
            assert_eq!(e.sign, if (e.n + e.j).is_multiple_of(2) { 1 } else { -1 });
        }
    }

    #[test]
    fn printed_matrices() {
        let a6 = matrix_aj(6, 1.0).unwrap();
        let rows: Vec<Vec<f64>> = vec![vec![2.], vec![3., 4.], vec![4., 5., 6.], vec![5., 6., 7., 8.], vec![6., 7., 8., 9., 10.]];
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(&a6[r][..=r], &row[..]);
            assert!(a6[r][r + 1..].iter().all(|&x| x == 0.0));
        }
        let a2 = matrix_aj(5, 2.0).unwrap();
        for (r, row) in a2.iter().enumerate() {
            assert!(row[..=r].iter().all(|&x| x == (r + 2) as f64));
        }
    }

    #[test]
    fn remainder_examples() {
        assert_eq!(remainder_bound(&Potential::zero(1).unwrap(), 2, 0.5).unwrap(), 0.0);
        let v = Potential::centered(1, 1.0).unwrap();
        let want = (2.0 * PI).powi(4) * 0.5f64.exp() * PI.sqrt() / 6.0;
        assert!((remainder_bound(&v, 2, 0.5).unwrap() / want - 1.0).abs() < 1e-14);
        assert!(remainder_bound(&v, 2, 1.0).is_err());
        let mut prev = 0.0;
        for k in 1..10 {
            let b = remainder_bound(&v, 3, k as f64 / 10.0).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn coefficient_of_zero_potential() {
        let est = mc_coefficient_cnj(&Potential::zero(1).unwrap(), 1, 2, 1.5, 1000, 1).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn coefficient_rejects_beyond_max_m() {
        let v = Potential::centered(1, 1.0).unwrap();
        let err = mc_coefficient_cnj(&v, 2, 2, 1.5, 1000, 1).unwrap_err();
        assert!(matches!(err, Error::Validity(_)));
        assert!(mc_coefficient_cnj(&v, 0, 1, 1.5, 1000, 1).is_err());
    }

    #[test]
    fn coefficient_n0_two_dimensional_offcenter() {
        // End-to-end convention check with complex V̂ and a sign-changing sum.
        let v = Potential::gaussian(2, 1.0, 1.0, vec![0.3, 0.0]).unwrap().with_term(-0.5, 1.5, vec![0.0, -0.4]).unwrap();
        for j in [2u32, 3] {
            let est = mc_coefficient_cnj(&v, 0, j, 1.2, 400_000, 5).unwrap();
            let want = v.integral_power(j).unwrap() / factorial(j);
            assert!(est.z_score(want) < 4.0, "j={j}: {} ± {} vs {want}", est.value, est.stderr);
        }
    }

    proptest! {
        #[test]
        fn lj_nonnegative_and_bounded(alpha in 0.3f64..2.0, seed in any::<u64>(), j in 2usize..6, thetas in proptest::collection::vec(-5.0f64..5.0, 10)) {
            let mut rng = stream(seed);
            let mut lambda = vec![0.0; j];
            sample_simplex(&mut rng, &mut lambda);
            prop_assume!(check_simplex_point(&lambda).is_ok());
            let p = sample_increments(StableIndex::new(alpha).unwrap(), &lambda, &mut rng).unwrap();
            let th: Vec<Vec<f64>> = (0..j - 1).map(|i| vec![thetas[2 * i], thetas[2 * i + 1]]).collect();
            let v = eval_lj(&p, &th).unwrap();
            let g2: f64 = partial_sums(&th, 2).unwrap().iter().map(|x| x * x).sum();
            prop_assert!(v >= 0.0);
            prop_assert!(v <= p.total * g2 * (1.0 + 1e-12));
        }

        #[test]
        fn schedule_sorted_below_cutoff(j_max in 2u32..9, m in 1u32..5, alpha in 0.2f64..2.0) {
            let s = exponent_schedule(j_max, m, alpha, 1).unwrap();
            prop_assert!(s.entries.windows(2).all(|w| w[0].exponent <= w[1].exponent));
            prop_assert!(s.entries.iter().all(|e| e.exponent < s.cutoff));
            prop_assert!(s.entries.iter().any(|e| e.n == 0 && e.j == 1));
            prop_assert_eq!(s.cutoff, ((j_max + 1) as f64).min(2.0 + 2.0 * m as f64 / alpha));
        }

        #[test]
        fn schedule_groups_by_order_near_two(j_max in 4u32..9, m in 1u32..5, u in 0.01f64..0.99) {
            let lo = 2.0 * (j_max as f64 - 3.0) / (j_max as f64 - 2.0);
            let alpha = lo + u * (2.0 - lo);
            let s = exponent_schedule(j_max, m, alpha, 1).unwrap();
            for a in &s.entries {
                for b in &s.entries {
                    if a.n + a.j < b.n + b.j {
                        prop_assert!(a.exponent < b.exponent);
                    }
                }
            }
        }

        #[test]
        fn improved_only_on_routes(d in 1usize..6, alpha in 0.05f64..1.99, m in 1u32..6) {
            let r = validate_params(d, alpha, m);
            if r.improved_ok {
                prop_assert!(IMPROVED_ROUTES.contains(&(d, m)));
            }
            prop_assert!(r.max_m == 0 || validate_params(d, alpha, r.max_m).admissible());
        }
    }
}
