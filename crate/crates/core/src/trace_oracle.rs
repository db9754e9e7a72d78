//! Pseudospectral oracle: H_α and H_V on the torus [−L, L]^d in the Fourier
//! basis, exact semigroup traces from one dense eigendecomposition, and
//! weighted least-squares fits of the small-time expansion.
//!
//! Besides the raw trace difference and its continuum normalization, curves
//! carry a `windowed` column: the trace restricted to Fourier modes at least
//! `margin` away from the frequency cutoff, normalized by the matching
//! discrete free trace. Modes near the cutoff feel the truncation of the
//! coupling and bias the continuum-normalized curve at small t.

use std::f64::consts::PI;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::coefficients::ExponentSchedule;
use crate::error::{invalid, Error, Result};
use crate::heat_kernel::kernel_at_zero_t;
use crate::potential::Potential;
use crate::subordinator::StableIndex;

/// Largest matrix dimension N^d accepted for a dense eigensolve.
pub const MAX_DIM: usize = 8192;

/// Relative tolerance of the free-trace, grid and domain gates.
pub const FREE_TRACE_TOL: f64 = 1e-3;
pub const CONVERGENCE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    d: usize,
    half_period: f64,
    modes: usize,
}

impl SpectralGrid {
    pub fn new(d: usize, half_period: f64, modes: usize) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(invalid(format!("spectral grid supports d = 1 or 2, got {d}")));
        }
        if !(half_period > 0.0 && half_period.is_finite()) {
            return Err(invalid(format!("half-period L must be positive, got {half_period}")));
        }
        if modes < 16 || !modes.is_multiple_of(2) {
            return Err(invalid(format!("N must be even and at least 16, got {modes}")));
        }
        let size = modes.checked_pow(d as u32).unwrap_or(usize::MAX);
        if size > MAX_DIM {
            return Err(invalid(format!("grid of {size} modes exceeds the dense limit {MAX_DIM}")));
        }
        Ok(Self { d, half_period, modes })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Matrix dimension N^d.
    pub fn size(&self) -> usize {
        self.modes.pow(self.d as u32)
    }

    /// ξ_k = πk/L for k = −N/2, …, N/2 − 1.
    pub fn frequencies(&self) -> Vec<f64> {
        let half = (self.modes / 2) as i64;
        (-half..half).map(|k| PI * k as f64 / self.half_period).collect()
    }

    /// Largest |ξ| along an axis.
    pub fn xi_max(&self) -> f64 {
        PI * (self.modes / 2) as f64 / self.half_period
    }

    /// All frequency points, flat with stride d, first axis slowest.
    pub fn points(&self) -> Vec<f64> {
        let f = self.frequencies();
        match self.d {
            1 => f,
            _ => f.iter().flat_map(|&a| f.iter().flat_map(move |&b| [a, b])).collect(),
        }
    }
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dense Fourier-basis matrix of H_V. Complex Hermitian couplings (non-even V)
/// are stored through the real symmetric embedding [[A, −B], [B, A]], which
/// doubles every eigenvalue.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: SpectralGrid,
    alpha: f64,
    matrix: Mat<f64>,
    embedded: bool,
    free: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Hamiltonian {
    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_embedded(&self) -> bool {
        self.embedded
    }

    pub fn matrix(&self) -> faer::MatRef<'_, f64> {
        self.matrix.as_ref()
    }

    /// Free symbol |ξ_k|^α in basis order.
    pub fn free_symbol(&self) -> &[f64] {
        &self.free
    }
}

pub fn build_hamiltonian(grid: SpectralGrid, alpha: f64, v: Option<&Potential>) -> Result<Hamiltonian> {
    StableIndex::new(alpha)?;
    let d = grid.dim();
    let pts = grid.points();
    let n = grid.size();
    let free: Vec<f64> = pts.chunks(d).map(|p| norm(p).powf(alpha)).collect();
    let mut warnings = Vec::new();
    let v = match v {
        Some(v) if !v.is_zero() => v,
        _ => {
            let matrix = Mat::from_fn(n, n, |i, j| if i == j { free[i] } else { 0.0 });
            return Ok(Hamiltonian { grid, alpha, matrix, embedded: false, free, warnings });
        }
    };
    if v.dim() != d {
        return Err(invalid(format!("potential is {}-dimensional, grid is {d}-dimensional", v.dim())));
    }
    let outside = v.mass_outside_box(grid.half_period());
    if outside > 1e-10 * v.l1_norm() {
        warnings.push(format!(
            "potential mass {outside:.3e} outside [-L, L]^d exceeds 1e-10 of its L1 norm; periodization error"
        ));
    }
    let scale = (2.0 * grid.half_period()).powi(d as i32).recip();
    let coupling = |i: usize, j: usize| {
        let diff: Vec<f64> = (0..d).map(|c| pts[i * d + c] - pts[j * d + c]).collect();
        v.fourier(&diff) * scale
    };
    let embedded = !v.is_even();
    let matrix = if embedded {
        let mut m = Mat::<f64>::zeros(2 * n, 2 * n);
        for (i, &fi) in free.iter().enumerate() {
            for j in 0..=i {
                let h = coupling(i, j);
                let re = h.re + if i == j { fi } else { 0.0 };
                let im = if i == j { 0.0 } else { h.im };
                // H = A + iB with A symmetric, B antisymmetric.
                for (r, c, a, b) in [(i, j, re, im), (j, i, re, -im)] {
                    m[(r, c)] = a;
                    m[(r + n, c + n)] = a;
                    m[(r, c + n)] = -b;
                    m[(r + n, c)] = b;
                }
            }
        }
        m
    } else {
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let h = coupling(i, j).re + if i == j { free[i] } else { 0.0 };
                m[(i, j)] = h;
                m[(j, i)] = h;
            }
        }
        m
    };
    Ok(Hamiltonian { grid, alpha, matrix, embedded, free, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    Free,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpectrum {
    pub eigenvalues: Vec<f64>,
    pub which: SpectrumKind,
}

pub fn free_spectrum(grid: SpectralGrid, alpha: f64) -> Result<OperatorSpectrum> {
    StableIndex::new(alpha)?;
    let mut eigenvalues: Vec<f64> = grid.points().chunks(grid.dim()).map(|p| norm(p).powf(alpha)).collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(OperatorSpectrum { eigenvalues, which: SpectrumKind::Free })
}

fn evd_error(e: impl std::fmt::Debug) -> Error {
    Error::Numerical(format!("eigendecomposition failed: {e:?}"))
}

/// Eigenvalues of H_V (each doubled eigenvalue of an embedding reported once).
pub fn perturbed_spectrum(h: &Hamiltonian) -> Result<OperatorSpectrum> {
    let mut ev = h.matrix.self_adjoint_eigenvalues(Side::Lower).map_err(evd_error)?;
    ev.sort_by(f64::total_cmp);
    if h.embedded {
        ev = ev.into_iter().step_by(2).collect();
    }
    Ok(OperatorSpectrum { eigenvalues: ev, which: SpectrumKind::Perturbed })
}

/// Eigenvalues with their mass on the interior modes.
struct WindowedSpectrum {
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
    /// 1/2 for the embedding, which lists every eigenpair twice.
    multiplicity: f64,
}

fn windowed_spectrum(h: &Hamiltonian, interior: &[bool]) -> Result<WindowedSpectrum> {
    let evd = h.matrix.self_adjoint_eigen(Side::Lower).map_err(evd_error)?;
    let u = evd.U();
    let s = evd.S().column_vector();
    let n = interior.len();
    let dim = u.nrows();
    let eigenvalues: Vec<f64> = (0..dim).map(|i| s[i]).collect();
    let weights = (0..dim)
        .map(|col| {
            let mut w = 0.0;
            for (k, &inside) in interior.iter().enumerate() {
                if inside {
                    w += u[(k, col)].powi(2);
                    if h.embedded {
                        w += u[(k + n, col)].powi(2);
                    }
                }
            }
            w
        })
        .collect();
    Ok(WindowedSpectrum { eigenvalues, weights, multiplicity: if h.embedded { 0.5 } else { 1.0 } })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl GateResult {
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value < threshold, value, threshold }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Frequency margin of the interior window; defaults to 12 / (narrowest width).
    pub margin: Option<f64>,
}


/// Sampled trace differences on a t grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceCurve {
    pub t: Vec<f64>,
    /// Tr(e^{−tH_V}) − Tr(e^{−tH_α}) over the full discrete spectra.
    pub raw: Vec<f64>,
    /// raw / p_t^{(α)}(0) with the continuum kernel.
    pub normalized: Vec<f64>,
    /// Interior-window trace difference over the matching discrete free density.
    pub windowed: Vec<f64>,
    pub alpha: f64,
    pub grid: SpectralGrid,
    pub margin: f64,
    pub potential: String,
    pub free_trace_gate: GateResult,
    pub warnings: Vec<String>,
}

impl TraceCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,raw,normalized,windowed\n");
        for i in 0..self.t.len() {
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", self.t[i], self.raw[i], self.normalized[i], self.windowed[i]));
        }
        out
    }

    pub fn column(&self, which: CurveColumn) -> &[f64] {
        match which {
            CurveColumn::Normalized => &self.normalized,
            CurveColumn::Windowed => &self.windowed,
        }
    }
}

/// `n` geometrically spaced times from `t_min` to `t_max`.
pub fn geometric_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && n >= 2) {
        return Err(invalid(format!("need 0 < t_min < t_max and n >= 2, got ({t_min}, {t_max}, {n})")));
    }
    let r = (t_max / t_min).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { t_max } else { t_min * (r * i as f64).exp() }).collect())
}

pub fn trace_difference_curve(v: &Potential, alpha: f64, grid: SpectralGrid, t_grid: &[f64]) -> Result<TraceCurve> {
    trace_difference_curve_with(v, alpha, grid, t_grid, TraceOptions::default())
}

pub fn trace_difference_curve_with(
    v: &Potential,
    alpha: f64,
    grid: SpectralGrid,
    t_grid: &[f64],
    opts: TraceOptions,
) -> Result<TraceCurve> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(invalid("t values must lie in (0, 1)"));
    }
    let d = grid.dim();
    let margin = opts.margin.unwrap_or_else(|| 12.0 / v.min_width().unwrap_or(1.0));
    let radius = grid.xi_max() - margin;
    let h = build_hamiltonian(grid, alpha, Some(v))?;
    let interior: Vec<bool> = grid.points().chunks(d).map(|p| norm(p) <= radius).collect();
    let mut warnings = h.warnings.clone();
    if !interior.iter().any(|&b| b) {
        warnings.push(format!("interior window is empty (margin {margin} >= xi_max {}); windowed column is NaN", grid.xi_max()));
    }
    let mut free_sorted = h.free.clone();
    free_sorted.sort_by(f64::total_cmp);
    let (ws, mut perturbed) = if v.is_zero() {
        let ws = WindowedSpectrum {
            eigenvalues: h.free.clone(),
            weights: interior.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            multiplicity: 1.0,
        };
        (ws, free_sorted.clone())
    } else {
        let ws = windowed_spectrum(&h, &interior)?;
        let mut ev = ws.eigenvalues.clone();
        ev.sort_by(f64::total_cmp);
        if h.embedded {
            ev = ev.into_iter().step_by(2).collect();
        }
        (ws, ev)
    };
    perturbed.truncate(free_sorted.len());
    let cell = (2.0 * grid.half_period()).powi(d as i32);

    let mut raw = Vec::with_capacity(t_grid.len());
    let mut normalized = Vec::with_capacity(t_grid.len());
    let mut windowed = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        // Pairing sorted spectra keeps the difference accurate.
        let r: f64 = perturbed.iter().zip(&free_sorted).map(|(m, f)| (-t * m).exp() - (-t * f).exp()).sum();
        raw.push(r);
        normalized.push(r / kernel_at_zero_t(d, alpha, t)?);
        let inside_free: f64 = h.free.iter().zip(&interior).filter(|(_, &b)| b).map(|(f, _)| (-t * f).exp()).sum();
        let inside: f64 = ws.multiplicity
            * ws.eigenvalues.iter().zip(&ws.weights).map(|(m, w)| (-t * m).exp() * w).sum::<f64>();
        windowed.push((inside - inside_free) / (inside_free / cell));
    }

    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let riemann: f64 = h.free.iter().map(|f| (-t_max * f).exp()).sum();
    let continuum = cell * kernel_at_zero_t(d, alpha, t_max)?;
    let free_trace_gate = GateResult::below("free_trace", (riemann / continuum - 1.0).abs(), FREE_TRACE_TOL);

    Ok(TraceCurve {
        t: t_grid.to_vec(),
        raw,
        normalized,
        windowed,
        alpha,
        grid,
        margin,
        potential: v.to_string(),
        free_trace_gate,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// N doubled at fixed L.
    pub grid: GateResult,
    /// L and N doubled together (fixed mode density).
    pub domain: GateResult,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.grid.passed && self.domain.passed
    }
}

fn max_rel_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((y - x) / x).abs()).fold(0.0, f64::max)
}

/// Grid and domain convergence of the windowed curve of `base`.
pub fn convergence_gates(base: &TraceCurve, v: &Potential) -> Result<ConvergenceReport> {
    let g = base.grid;
    let opts = TraceOptions { margin: Some(base.margin) };
    let finer = SpectralGrid::new(g.dim(), g.half_period(), 2 * g.modes())?;
    let wider = SpectralGrid::new(g.dim(), 2.0 * g.half_period(), 2 * g.modes())?;
    let c_fine = trace_difference_curve_with(v, base.alpha, finer, &base.t, opts)?;
    let c_wide = trace_difference_curve_with(v, base.alpha, wider, &base.t, opts)?;
    Ok(ConvergenceReport {
        grid: GateResult::below("grid", max_rel_change(&base.windowed, &c_fine.windowed), CONVERGENCE_TOL),
        domain: GateResult::below("domain", max_rel_change(&base.windowed, &c_wide.windowed), CONVERGENCE_TOL),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveColumn {
    Normalized,
    Windowed,
}

/// A term with known coefficient, subtracted before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownTerm {
    pub exponent: f64,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Exponents closer than this are merged into one column.
    pub merge_tol: f64,
    pub known: Vec<KnownTerm>,
    /// Extra exponents fitted alongside the schedule (e.g. the first remainder power).
    pub extra: Vec<f64>,
    pub column: CurveColumn,
    pub max_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { merge_tol: 0.05, known: Vec::new(), extra: Vec::new(), column: CurveColumn::Windowed, max_condition: 1e12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTerm {
    pub exponent: f64,
    /// (n, j) labels merged into this column; empty for extra terms.
    pub labels: Vec<(u32, u32)>,
    pub coefficient: f64,
    /// Least-squares standard error.
    pub stat_err: f64,
    /// |full fit − fit on the lower half of the t range|.
    pub sys_err: f64,
    /// hypot(stat_err, sys_err).
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub schedule: Option<ExponentSchedule>,
    pub terms: Vec<FittedTerm>,
    /// Max |y − fit|/|y| over the fit grid.
    pub residual: f64,
    pub condition_number: f64,
    pub n_points: usize,
    pub known: Vec<KnownTerm>,
}

impl ExpansionFit {
    pub fn term_at(&self, exponent: f64) -> Option<&FittedTerm> {
        self.terms.iter().find(|t| (t.exponent - exponent).abs() < 1e-9)
    }
}

struct Solution {
    coefs: Vec<f64>,
    stat: Vec<f64>,
    cond: f64,
}

fn weighted_lsq(t: &[f64], y: &[f64], exps: &[f64], max_condition: f64) -> Result<Solution> {
    let (m, p) = (t.len(), exps.len());
    let e_min = exps.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = t.iter().map(|ti| ti.powf(-e_min)).collect();
    let mut a = Mat::<f64>::from_fn(m, p, |i, j| w[i] * t[i].powf(exps[j]));
    let col_norms: Vec<f64> = (0..p).map(|j| (0..m).map(|i| a[(i, j)].powi(2)).sum::<f64>().sqrt()).collect();
    for j in 0..p {
        for i in 0..m {
            a[(i, j)] /= col_norms[j];
        }
    }
    let b: Vec<f64> = (0..m).map(|i| w[i] * y[i]).collect();
    let svd = a.thin_svd().map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let smax = (0..p).map(|k| s[k]).fold(0.0, f64::max);
    let smin = (0..p).map(|k| s[k]).fold(f64::INFINITY, f64::min);
    let cond = smax / smin;
    if !(cond < max_condition) {
        return Err(Error::RankDeficient { cond });
    }
    let utb: Vec<f64> = (0..p).map(|k| (0..m).map(|i| u[(i, k)] * b[i]).sum::<f64>() / s[k]).collect();
    let scaled: Vec<f64> = (0..p).map(|j| (0..p).map(|k| v[(j, k)] * utb[k]).sum()).collect();
    let rss: f64 = (0..m)
        .map(|i| {
            let fit: f64 = (0..p).map(|j| a[(i, j)] * scaled[j]).sum();
            (b[i] - fit).powi(2)
        })
        .sum();
    let sigma2 = if m > p { rss / (m - p) as f64 } else { 0.0 };
    let stat = (0..p)
        .map(|j| {
            let var: f64 = (0..p).map(|k| (v[(j, k)] / s[k]).powi(2)).sum::<f64>() * sigma2;
            var.sqrt() / col_norms[j]
        })
        .collect();
    let coefs = (0..p).map(|j| scaled[j] / col_norms[j]).collect();
    Ok(Solution { coefs, stat, cond })
}

/// Fit y(t) ≈ Σ known + Σ c_e t^e with weights t^{−e_min}.
pub fn fit_series(t: &[f64], y: &[f64], terms: &[(f64, Vec<(u32, u32)>)], opts: &FitOptions) -> Result<ExpansionFit> {
    if t.len() != y.len() {
        return Err(invalid("t and y lengths differ"));
    }
    if t.iter().chain(y).any(|x| !x.is_finite()) {
        return Err(invalid("fit data contain non-finite values"));
    }
    let mut sorted = terms.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, Vec<(u32, u32)>)> = Vec::new();
    for (e, labels) in sorted {
        match merged.last_mut() {
            Some(last) if e - last.0 < opts.merge_tol => last.1.extend(labels),
            _ => merged.push((e, labels)),
        }
    }
    let p = merged.len();
    if p == 0 {
        return Err(invalid("no terms to fit"));
    }
    if t.len() < 2 * p {
        return Err(invalid(format!("need at least {} t points for {p} terms, got {}", 2 * p, t.len())));
    }
    let (t_min, t_max) = t.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if t_max / t_min < 100.0 * (1.0 - 1e-9) {
        return Err(invalid(format!("t grid spans {:.2} decades; need at least 2", (t_max / t_min).log10())));
    }
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let ts: Vec<f64> = order.iter().map(|&i| t[i]).collect();
    let ys: Vec<f64> = order
        .iter()
        .map(|&i| y[i] - opts.known.iter().map(|k| k.coefficient * t[i].powf(k.exponent)).sum::<f64>())
        .collect();
    let exps: Vec<f64> = merged.iter().map(|m| m.0).collect();
    let full = weighted_lsq(&ts, &ys, &exps, opts.max_condition)?;
    let half = ts.len().div_ceil(2);
    let lower = weighted_lsq(&ts[..half], &ys[..half], &exps, opts.max_condition)?;

    let residual = order
        .iter()
        .zip(&ts)
        .zip(&ys)
        .map(|((&i, &ti), &yi)| {
            let fit: f64 = exps.iter().zip(&full.coefs).map(|(e, c)| c * ti.powf(*e)).sum();
            (yi - fit).abs() / y[i].abs().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);

    let terms = merged
        .into_iter()
        .enumerate()
        .map(|(k, (exponent, labels))| {
            let sys_err = (full.coefs[k] - lower.coefs[k]).abs();
            FittedTerm {
                exponent,
                labels,
                coefficient: full.coefs[k],
                stat_err: full.stat[k],
                sys_err,
                uncertainty: full.stat[k].hypot(sys_err),
            }
        })
        .collect();
    Ok(ExpansionFit {
        schedule: None,
        terms,
        residual,
        condition_number: full.cond,
        n_points: ts.len(),
        known: opts.known.clone(),
    })
}

/// Fit a trace curve against the exponents of `schedule` plus `opts.extra`.
pub fn fit_expansion(curve: &TraceCurve, schedule: &ExponentSchedule, opts: &FitOptions) -> Result<ExpansionFit> {
    let mut terms: Vec<(f64, Vec<(u32, u32)>)> = schedule.entries.iter().map(|e| (e.exponent, vec![(e.n, e.j)])).collect();
    terms.extend(opts.extra.iter().map(|&e| (e, Vec::new())));
    let mut fit = fit_series(&curve.t, curve.column(opts.column), &terms, opts)?;
    fit.schedule = Some(schedule.clone());
    Ok(fit)
}
