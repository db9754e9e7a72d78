//! Experiment execution, manifests and the content-addressed result cache.
//!
//! Every run lands in `<root>/<config hash>/` with `manifest.json` and one
//! result file (`result.json` or `result.csv`). A later run of the same
//! canonical config is served from there unless the cache is bypassed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::acceptance::{run_selected, AcceptanceOptions, CRITERIA};
use crate::coefficients::{
    constant_k_deterministic, exponent_schedule, matrix_aj, mc_coefficient_cnj, mc_constant_k, mc_family_constant,
    validate_params, FamilyConstant, KConstant,
};
use crate::config::{Experiment, Format, RunConfig};
use crate::error::{Error, Result};
use crate::heat_kernel::{kernel_at_zero_t, kernel_value, mixed_kernel_at_zero, relativistic_kernel_at_zero, KernelQuery};
use crate::mc::mean_many;
use crate::potential::Potential;
use crate::rng::stream;
use crate::subordinator::{stable_moment, RelativisticSampler, StableIndex, SubordinatorSpec, DEFAULT_ACCEPTANCE_FLOOR};
use crate::trace_oracle::{
    convergence_gates, fit_expansion, fit_series, geometric_grid, trace_difference_curve_with, CurveColumn,
    ExpansionFit, FitOptions, SpectralGrid, TraceOptions,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const OUTPUT_ROOT_ENV: &str = "FRACTRACE_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "fractrace-runs";

/// Numeric table written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    /// Human-readable result printed by the CLI.
    pub summary: String,
    pub result: Value,
    pub table: Table,
    /// False when the experiment ran but its check failed (acceptance).
    pub success: bool,
    /// Every parameter the experiment used, defaults included.
    pub effective: BTreeMap<String, String>,
}

/// Typed access to string parameters that records what was used.
struct Params<'a> {
    experiment: Experiment,
    raw: &'a BTreeMap<String, String>,
    used: BTreeMap<String, String>,
}

impl<'a> Params<'a> {
    fn new(rc: &'a RunConfig) -> Self {
        Self { experiment: rc.experiment, raw: &rc.params, used: BTreeMap::new() }
    }

    fn bad(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("{}: parameter '{key}': {msg}", self.experiment))
    }

    fn text(&mut self, key: &str, default: Option<&str>) -> Result<String> {
        let v = match (self.raw.get(key), default) {
            (Some(v), _) => v.clone(),
            (None, Some(d)) => d.to_string(),
            (None, None) => return Err(self.bad(key, "required")),
        };
        self.used.insert(key.into(), v.clone());
        Ok(v)
    }

    fn parse<T>(&mut self, key: &str, default: Option<T>) -> Result<T>
    where
        T: std::str::FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let default = default.map(|d| d.to_string());
        let s = self.text(key, default.as_deref())?;
        s.parse().map_err(|e: T::Err| self.bad(key, format!("cannot parse '{s}': {e}")))
    }

    fn f64(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        self.parse(key, default)
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let d = default.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let s = self.text(key, Some(&d))?;
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| self.bad(key, format!("'{x}' is not a number"))))
            .collect()
    }

    fn finish(self) -> Result<BTreeMap<String, String>> {
        let unknown: Vec<&String> = self.raw.keys().filter(|k| !self.used.contains_key(*k)).collect();
        if let Some(k) = unknown.first() {
            return Err(Error::Config(format!("{}: unknown parameter '{k}'", self.experiment)));
        }
        Ok(self.used)
    }
}

fn output(summary: String, result: Value, table: Table, p: Params) -> Result<ExperimentOutput> {
    Ok(ExperimentOutput { summary, result, table, success: true, effective: p.finish()? })
}

/// Run the experiment named by `rc` without touching the filesystem cache.
pub fn execute(rc: &RunConfig) -> Result<ExperimentOutput> {
    let mut p = Params::new(rc);
    match rc.experiment {
        Experiment::Sample => sample(rc.seed, &mut p).and_then(|(s, r, t)| output(s, r, t, p)),
        Experiment::Moments => moments(rc.seed, &mut p).and_then(|(s, r, t)| output(s, r, t, p)),
        Experiment::Kernel => kernel(&mut p).and_then(|(s, r, t)| output(s, r, t, p)),
        Experiment::Constants => constants(rc.seed, &mut p).and_then(|(s, r, t)| output(s, r, t, p)),
        Experiment::Coeff => coeff(rc.seed, &mut p).and_then(|(s, r, t)| output(s, r, t, p)),
        Experiment::Trace => trace(&mut p).and_then(|(s, r, t)| output(s, r, t, p)),
        Experiment::Fit => fit(&mut p).and_then(|(s, r, t)| output(s, r, t, p)),
        Experiment::Schedule => schedule(&mut p).and_then(|(s, r, t)| output(s, r, t, p)),
        Experiment::Relativistic => relativistic(rc.seed, &mut p).and_then(|(s, r, t)| output(s, r, t, p)),
        Experiment::Mixed => mixed(rc.seed, &mut p).and_then(|(s, r, t)| output(s, r, t, p)),
        Experiment::Acceptance => acceptance(rc.seed, p),
    }
}

type Parts = (String, Value, Table);

fn spec_from(p: &mut Params) -> Result<SubordinatorSpec> {
    let family = p.text("family", Some("stable"))?;
    let alpha = p.f64("alpha", None)?;
    let spec = match family.as_str() {
        "stable" => SubordinatorSpec::Stable { alpha },
        "relativistic" => SubordinatorSpec::Relativistic { alpha, m: p.f64("m", None)? },
        "mixed" => SubordinatorSpec::Mixed { alpha, beta: p.f64("beta", None)?, a: p.f64("a", None)? },
        other => return Err(p.bad("family", format!("unknown family '{other}'"))),
    };
    spec.validate()?;
    Ok(spec)
}

fn sample(seed: u64, p: &mut Params) -> Result<Parts> {
    let spec = spec_from(p)?;
    let t = p.f64("t", Some(1.0))?;
    let n: usize = p.parse("n", Some(1000))?;
    let mut rng = stream(seed);
    let samples = (0..n).map(|_| spec.sample(t, &mut rng)).collect::<Result<Vec<f64>>>()?;
    let avg = samples.iter().sum::<f64>() / n.max(1) as f64;
    let mut table = Table::new(&["s"]);
    table.rows = samples.iter().map(|&s| vec![s]).collect();
    Ok((format!("{n} samples, mean {avg}"), json!({ "samples": samples, "mean": avg }), table))
}

fn moments(seed: u64, p: &mut Params) -> Result<Parts> {
    let alpha = p.f64("alpha", None)?;
    let etas = p.list("eta", &[-1.5, -1.0, -0.5])?;
    let n: u64 = p.parse("n", Some(1_000_000))?;
    let idx = StableIndex::new(alpha)?;
    let exact = etas.iter().map(|&e| stable_moment(alpha, e)).collect::<Result<Vec<f64>>>()?;
    let est = mean_many(n, seed, etas.len(), |rng, out| {
        let s = idx.draw_unit(rng);
        for (o, e) in out.iter_mut().zip(&etas) {
            *o = s.powf(*e);
        }
    });
    let mut table = Table::new(&["eta", "exact", "mc", "stderr", "z"]);
    let mut lines = Vec::new();
    for ((e, x), m) in etas.iter().zip(&exact).zip(&est) {
        table.rows.push(vec![*e, *x, m.value, m.stderr, m.z_score(*x)]);
        lines.push(format!("eta={e}: exact {x}, mc {} ± {} (z {:.2})", m.value, m.stderr, m.z_score(*x)));
    }
    let result = json!({ "rows": table.rows, "columns": table.columns });
    Ok((lines.join("\n"), result, table))
}

fn kernel(p: &mut Params) -> Result<Parts> {
    let d: usize = p.parse("d", Some(1))?;
    let alpha = p.f64("alpha", None)?;
    let t = p.f64("t", Some(1.0))?;
    let x = p.list("x", &vec![0.0; d])?;
    let value = kernel_value(&KernelQuery { d, t, x: x.clone(), spec: SubordinatorSpec::Stable { alpha } })?;
    let at_zero = kernel_at_zero_t(d, alpha, t)?;
    let mut table = Table::new(&["t", "value", "at_zero"]);
    table.rows.push(vec![t, value, at_zero]);
    Ok((format!("{value}"), json!({ "value": value, "at_zero": at_zero, "x": x }), table))
}

fn constants(seed: u64, p: &mut Params) -> Result<Parts> {
    let which = p.text("which", None)?;
    let d: usize = p.parse("d", None)?;
    let alpha = p.f64("alpha", None)?;
    let analytic: bool = p.parse("analytic", Some(false))?;
    let (k, family) = match which.as_str() {
        "L" | "M" | "N" => {
            let f: FamilyConstant = which.parse()?;
            (f.k(), Some(f))
        }
        _ => (which.parse::<KConstant>()?, None),
    };
    let mut table = Table::new(&["value", "stderr"]);
    if analytic {
        if alpha != 2.0 {
            return Err(p.bad("analytic", "the deterministic path exists only at alpha = 2"));
        }
        let mut value = constant_k_deterministic(k, d)?;
        if let Some(f) = family {
            value *= f.factor(d, alpha)?;
        }
        table.rows.push(vec![value, 0.0]);
        return Ok((format!("{value}"), json!({ "which": which, "value": value, "method": "quadrature" }), table));
    }
    let n: u64 = p.parse("n", Some(1_000_000))?;
    let est = match family {
        Some(f) => mc_family_constant(f, d, alpha, n, seed)?,
        None => mc_constant_k(k, d, alpha, n, seed)?,
    };
    table.rows.push(vec![est.value, est.stderr]);
    let summary = format!("{} ± {}", est.value, est.stderr);
    Ok((summary, json!({ "which": which, "value": est.value, "stderr": est.stderr, "n_samples": n, "method": "monte-carlo" }), table))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn coeff(seed: u64, p: &mut Params) -> Result<Parts> {
    let d: usize = p.parse("d", Some(1))?;
    let v = Potential::parse(&p.text("potential", Some("gaussian:c=1,s=1"))?, d)?;
    let n: u32 = p.parse("n", Some(0))?;
    let j: u32 = p.parse("j", Some(2))?;
    let alpha = p.f64("alpha", None)?;
    let samples: u64 = p.parse("samples", Some(1_000_000))?;
    let est = mc_coefficient_cnj(&v, n, j, alpha, samples, seed)?;
    let reference = if n == 0 { Some(v.integral_power(j)? / factorial(j)) } else { None };
    let mut table = Table::new(&["value", "stderr", "reference"]);
    table.rows.push(vec![est.value, est.stderr, reference.unwrap_or(f64::NAN)]);
    let mut summary = format!("C({n},{j}) = {} ± {}", est.value, est.stderr);
    if let Some(r) = reference {
        summary.push_str(&format!(" (int V^{j}/{j}! = {r})"));
    }
    Ok((summary, json!({ "estimate": est, "reference": reference }), table))
}

struct FitSetup {
    alpha: f64,
    d: usize,
    j_max: u32,
    m: u32,
    extra: Vec<f64>,
    column: CurveColumn,
}

fn fit_setup(p: &mut Params, alpha: f64, d: usize) -> Result<FitSetup> {
    let j_max: u32 = p.parse("J", Some(3))?;
    let m: u32 = p.parse("M", Some(1))?;
    if alpha < 2.0 {
        validate_params(d, alpha, m).require()?;
    }
    let cutoff = exponent_schedule(j_max, m, alpha, d)?.cutoff;
    let extra = p.list("extra", &[cutoff])?;
    let column = match p.text("column", Some("windowed"))?.as_str() {
        "windowed" => CurveColumn::Windowed,
        "normalized" => CurveColumn::Normalized,
        other => return Err(p.bad("column", format!("expected windowed or normalized, got '{other}'"))),
    };
    Ok(FitSetup { alpha, d, j_max, m, extra, column })
}

type FitReport = (Vec<Vec<f64>>, Vec<String>, Vec<Value>);

/// Fit table rows and summary lines, with n = 0 references when V is known.
fn fit_report(fit: &ExpansionFit, v: Option<&Potential>) -> Result<FitReport> {
    let mut rows = Vec::new();
    let mut lines = vec![format!("condition {:.3e}, max relative residual {:.3e}", fit.condition_number, fit.residual)];
    let mut refs = Vec::new();
    for term in &fit.terms {
        let reference = match (v, term.labels.as_slice()) {
            (Some(v), [(0, j)]) => Some(if j.is_multiple_of(2) { 1.0 } else { -1.0 } * v.integral_power(*j)? / factorial(*j)),
            _ => None,
        };
        rows.push(vec![term.exponent, term.coefficient, term.stat_err, term.sys_err, term.uncertainty, reference.unwrap_or(f64::NAN)]);
        let labels: Vec<String> = term.labels.iter().map(|(n, j)| format!("({n},{j})")).collect();
        let mut line = format!(
            "t^{:.4} {}: {} ± {}",
            term.exponent,
            if labels.is_empty() { "[nuisance]".to_string() } else { labels.join("+") },
            term.coefficient,
            term.uncertainty
        );
        if let Some(r) = reference {
            line.push_str(&format!("  reference {r} (rel {:.2e})", ((term.coefficient - r) / r).abs()));
        }
        lines.push(line);
        refs.push(json!(reference));
    }
    Ok((rows, lines, refs))
}

const FIT_COLUMNS: [&str; 6] = ["exponent", "coefficient", "stat_err", "sys_err", "uncertainty", "reference"];

fn trace(p: &mut Params) -> Result<Parts> {
    let d: usize = p.parse("d", Some(1))?;
    let alpha = p.f64("alpha", None)?;
    let v = Potential::parse(&p.text("potential", Some("gaussian:c=-1,s=1"))?, d)?;
    let l = p.f64("l", Some(if d == 1 { 40.0 } else { 10.0 }))?;
    let modes: usize = p.parse("modes", Some(if d == 1 { 1024 } else { 64 }))?;
    let t_min = p.f64("t_min", Some(1e-3))?;
    let t_max = p.f64("t_max", Some(1e-1))?;
    let points: usize = p.parse("points", Some(40))?;
    let margin = p.f64("margin", Some(12.0 / v.min_width().unwrap_or(1.0)))?;
    let do_fit: bool = p.parse("fit", Some(false))?;
    let do_gates: bool = p.parse("gates", Some(do_fit))?;
    let setup = if do_fit { Some(fit_setup(p, alpha, d)?) } else { None };

    let grid = SpectralGrid::new(d, l, modes)?;
    let t = geometric_grid(t_min, t_max, points)?;
    let curve = trace_difference_curve_with(&v, alpha, grid, &t, TraceOptions { margin: Some(margin) })?;
    let mut table = Table::new(&["t", "raw", "normalized", "windowed"]);
    table.rows = (0..t.len()).map(|i| vec![t[i], curve.raw[i], curve.normalized[i], curve.windowed[i]]).collect();
    let mut lines = vec![format!(
        "{} t points, free-trace check {} ({:.2e})",
        t.len(),
        if curve.free_trace_gate.passed { "ok" } else { "off" },
        curve.free_trace_gate.value
    )];
    lines.extend(curve.warnings.iter().map(|w| format!("warning: {w}")));
    let mut result = json!({ "curve": curve });
    if do_gates {
        let gates = convergence_gates(&curve, &v)?;
        lines.push(format!(
            "grid gate {} ({:.2e}), domain gate {} ({:.2e})",
            if gates.grid.passed { "pass" } else { "FAIL" },
            gates.grid.value,
            if gates.domain.passed { "pass" } else { "FAIL" },
            gates.domain.value
        ));
        result["gates"] = json!(gates);
    }
    if let Some(s) = setup {
        let schedule = exponent_schedule(s.j_max, s.m, s.alpha, s.d)?;
        let opts = FitOptions { extra: s.extra, column: s.column, ..FitOptions::default() };
        let fit = fit_expansion(&curve, &schedule, &opts)?;
        let (rows, fit_lines, refs) = fit_report(&fit, Some(&v))?;
        lines.extend(fit_lines);
        result["fit"] = json!(fit);
        result["fit_references"] = json!(refs);
        result["fit_table"] = json!({ "columns": FIT_COLUMNS, "rows": rows });
    }
    Ok((lines.join("\n"), result, table))
}

fn read_curve(path: &Path, column: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let find = |name: &str| {
        header.iter().position(|h| *h == name).ok_or_else(|| Error::Config(format!("{}: no '{name}' column", path.display())))
    };
    let (ti, yi) = (find("t")?, find(column)?);
    let mut t = Vec::new();
    let mut y = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| -> Result<f64> {
            cells
                .get(i)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| Error::Config(format!("{}: bad value on data line {}", path.display(), n + 1)))
        };
        t.push(get(ti)?);
        y.push(get(yi)?);
    }
    Ok((t, y))
}

fn fit(p: &mut Params) -> Result<Parts> {
    let input = PathBuf::from(p.text("input", None)?);
    let d: usize = p.parse("d", Some(1))?;
    let alpha = p.f64("alpha", None)?;
    let s = fit_setup(p, alpha, d)?;
    let column = match s.column {
        CurveColumn::Windowed => "windowed",
        CurveColumn::Normalized => "normalized",
    };
    let (t, y) = read_curve(&input, column)?;
    let schedule = exponent_schedule(s.j_max, s.m, alpha, d)?;
    let mut terms: Vec<(f64, Vec<(u32, u32)>)> = schedule.entries.iter().map(|e| (e.exponent, vec![(e.n, e.j)])).collect();
    terms.extend(s.extra.iter().map(|&e| (e, Vec::new())));
    let mut fit = fit_series(&t, &y, &terms, &FitOptions { column: s.column, ..FitOptions::default() })?;
    fit.schedule = Some(schedule);
    let (rows, lines, _) = fit_report(&fit, None)?;
    let mut table = Table::new(&FIT_COLUMNS);
    table.rows = rows;
    Ok((lines.join("\n"), json!({ "fit": fit }), table))
}

fn schedule(p: &mut Params) -> Result<Parts> {
    let j_max: u32 = p.parse("J", None)?;
    let alpha = p.f64("alpha", None)?;
    let m: u32 = p.parse("M", Some(1))?;
    let d: usize = p.parse("d", Some(1))?;
    let a = matrix_aj(j_max, alpha)?;
    let sched = exponent_schedule(j_max, m, alpha, d)?;
    let width = a.iter().flatten().map(|x| format!("{x}").len()).max().unwrap_or(1);
    let lines: Vec<String> = a
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, x)| if c <= r { format!("{x:>width$}") } else { format!("{:>width$}", ".") })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let mut table = Table::new(&(1..=a.len()).map(|s| format!("s{s}")).collect::<Vec<_>>().iter().map(|s| s.as_str()).collect::<Vec<_>>());
    table.rows = a.clone();
    Ok((lines.join("\n"), json!({ "matrix": a, "schedule": sched }), table))
}

fn laplace_rows(est: &[crate::mc::Estimate], lambdas: &[f64], t: f64, spec: &SubordinatorSpec, table: &mut Table) -> f64 {
    let mut worst: f64 = 0.0;
    for (e, &l) in est.iter().zip(lambdas) {
        let exact = (-t * spec.laplace_exponent(l)).exp();
        let z = e.z_score(exact);
        worst = worst.max(z);
        table.rows.push(vec![l, e.value, e.stderr, exact, z]);
    }
    worst
}

fn relativistic(seed: u64, p: &mut Params) -> Result<Parts> {
    let alpha = p.f64("alpha", None)?;
    let m = p.f64("m", None)?;
    let t = p.f64("t", Some(0.5))?;
    let d: usize = p.parse("d", Some(1))?;
    let n: u64 = p.parse("n", Some(1_000_000))?;
    let lambdas = p.list("lambdas", &[0.5, 1.0, 2.0, 5.0])?;
    let floor = p.f64("floor", Some(DEFAULT_ACCEPTANCE_FLOOR))?;
    let spec = SubordinatorSpec::Relativistic { alpha, m };
    let sampler = RelativisticSampler::new(alpha, m, t, floor)?;
    let est = mean_many(n, seed, lambdas.len() + 1, |rng, out| {
        let (s, attempts) = sampler.sample_counted(rng);
        for (o, l) in out.iter_mut().zip(&lambdas) {
            *o = (-l * s).exp();
        }
        out[lambdas.len()] = attempts as f64;
    });
    let mut table = Table::new(&["lambda", "mc", "stderr", "exact", "z"]);
    let worst = laplace_rows(&est[..lambdas.len()], &lambdas, t, &spec, &mut table);
    let rate = 1.0 / est[lambdas.len()].value;
    let kernel = relativistic_kernel_at_zero(d, alpha, m, t, n, seed.wrapping_add(1))?;
    let summary = format!(
        "Laplace law max z {worst:.2}; acceptance {rate} (expected {}); p_t(0) = {} ± {}",
        sampler.acceptance_rate(),
        kernel.value,
        kernel.stderr
    );
    let result = json!({
        "laplace": { "columns": table.columns, "rows": table.rows },
        "acceptance_rate": rate,
        "expected_acceptance_rate": sampler.acceptance_rate(),
        "kernel_at_zero": kernel,
    });
    Ok((summary, result, table))
}

fn mixed(seed: u64, p: &mut Params) -> Result<Parts> {
    let alpha = p.f64("alpha", None)?;
    let beta = p.f64("beta", None)?;
    let a = p.f64("a", None)?;
    let t = p.f64("t", Some(1.0))?;
    let d: usize = p.parse("d", Some(2))?;
    let n: u64 = p.parse("n", Some(1_000_000))?;
    let lambdas = p.list("lambdas", &[0.5, 1.0, 2.0, 5.0])?;
    let spec = SubordinatorSpec::Mixed { alpha, beta, a };
    spec.validate()?;
    let est = mean_many(n, seed, lambdas.len(), |rng, out| {
        let s = spec.sample(t, rng).expect("validated spec");
        for (o, l) in out.iter_mut().zip(&lambdas) {
            *o = (-l * s).exp();
        }
    });
    let mut table = Table::new(&["lambda", "mc", "stderr", "exact", "z"]);
    let worst = laplace_rows(&est, &lambdas, t, &spec, &mut table);
    let kernel = mixed_kernel_at_zero(d, alpha, beta, a, t, n, seed.wrapping_add(1))?;
    let summary = format!("Laplace law max z {worst:.2}; p_t(0) = {} ± {}", kernel.value, kernel.stderr);
    let result = json!({ "laplace": { "columns": table.columns, "rows": table.rows }, "kernel_at_zero": kernel });
    Ok((summary, result, table))
}

fn acceptance(seed: u64, mut p: Params) -> Result<ExperimentOutput> {
    let all: Vec<f64> = CRITERIA.map(f64::from).collect();
    let ids = p.list("criteria", &all)?;
    let ids: Vec<u32> = ids
        .iter()
        .map(|&x| if x.fract() == 0.0 && CRITERIA.contains(&(x as u32)) { Ok(x as u32) } else { Err(p.bad("criteria", format!("no criterion {x}"))) })
        .collect::<Result<_>>()?;
    let report = run_selected(&AcceptanceOptions { seed, ..AcceptanceOptions::default() }, ids);
    let summary = report.results.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("\n");
    let mut table = Table::new(&["id", "passed"]);
    table.rows = report.results.iter().map(|r| vec![r.id as f64, if r.passed { 1.0 } else { 0.0 }]).collect();
    // Timings go to stdout only, so the result file stays reproducible.
    let results: Vec<Value> = report
        .results
        .iter()
        .map(|r| json!({ "id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail }))
        .collect();
    let result = json!({ "seed": seed, "passed": report.passed(), "results": results });
    Ok(ExperimentOutput { summary, result, table, success: report.passed(), effective: p.finish()? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub canonical_config: String,
    pub experiment: Experiment,
    pub label: Option<String>,
    pub seed: u64,
    pub format: Format,
    pub effective_params: BTreeMap<String, String>,
    pub version: String,
    pub wall_time_secs: f64,
    pub created_unix: u64,
    pub success: bool,
    pub summary: String,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub cached: bool,
}

/// Explicit root, else `$FRACTRACE_OUTPUT_ROOT`, else `./fractrace-runs`.
pub fn resolve_root(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_OUTPUT_ROOT.into()),
    }
}

fn read_manifest(dir: &Path) -> Result<Manifest> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?)
}

fn check_cached(dir: &Path, rc: &RunConfig) -> Result<Manifest> {
    let m = read_manifest(dir)?;
    if m.canonical_config != rc.canonical() {
        return Err(Error::CacheConflict(format!(
            "{} holds a different config under hash {}",
            dir.display(),
            rc.hash()
        )));
    }
    Ok(m)
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Run `rc` through the cache rooted at `resolve_root(rc.output)`.
pub fn run(rc: &RunConfig, no_cache: bool) -> Result<RunRecord> {
    let root = resolve_root(rc.output.as_deref());
    let hash = rc.hash();
    let dir = root.join(&hash);
    if !no_cache && dir.join("manifest.json").exists() {
        let manifest = check_cached(&dir, rc)?;
        return Ok(RunRecord { dir, manifest, cached: true });
    }

    let start = Instant::now();
    let out = execute(rc)?;
    let wall_time_secs = start.elapsed().as_secs_f64();

    fs::create_dir_all(&root)?;
    let tmp = root.join(format!(
        ".tmp-{hash}-{}-{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::create_dir(&tmp)?;
    let file = match rc.format {
        Format::Json => {
            fs::write(tmp.join("result.json"), serde_json::to_string_pretty(&out.result)? + "\n")?;
            "result.json"
        }
        Format::Csv => {
            fs::write(tmp.join("result.csv"), out.table.to_csv())?;
            "result.csv"
        }
    };
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config_hash: hash,
        canonical_config: rc.canonical(),
        experiment: rc.experiment,
        label: rc.label.clone(),
        seed: rc.seed,
        format: rc.format,
        effective_params: out.effective,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_secs,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        success: out.success,
        summary: out.summary,
        files: vec![file.into()],
    };
    fs::write(tmp.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;

    if no_cache && dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    if fs::rename(&tmp, &dir).is_err() {
        // Another run published the same hash first.
        fs::remove_dir_all(&tmp)?;
        let manifest = check_cached(&dir, rc)?;
        return Ok(RunRecord { dir, manifest, cached: true });
    }
    Ok(RunRecord { dir, manifest, cached: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_constant_is_one_twelfth() {
        let rc = RunConfig::new(Experiment::Constants).param("which", "K1").param("d", 2).param("alpha", 2).param("analytic", true);
        let out = execute(&rc).unwrap();
        assert_eq!(out.summary, "0.08333333333333333");
    }

    #[test]
    fn effective_params_include_defaults() {
        let rc = RunConfig::new(Experiment::Kernel).param("alpha", 1);
        let out = execute(&rc).unwrap();
        assert_eq!(out.effective["d"], "1");
        assert_eq!(out.effective["t"], "1");
        assert_eq!(out.effective["x"], "0");
        assert!((out.result["value"].as_f64().unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn unknown_and_missing_params_are_rejected() {
        let err = execute(&RunConfig::new(Experiment::Kernel).param("alpha", 1).param("bogus", 3)).unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let err = execute(&RunConfig::new(Experiment::Kernel)).unwrap_err();
        assert!(err.to_string().contains("alpha"));
    }

    #[test]
    fn validity_violation_is_named() {
        let rc = RunConfig::new(Experiment::Trace).param("alpha", 0.5).param("M", 3).param("fit", true);
        let err = execute(&rc).unwrap_err();
        assert!(err.to_string().contains("M < (d+α)/2 violated"), "{err}");
    }

    #[test]
    fn schedule_prints_lower_triangle() {
        let out = execute(&RunConfig::new(Experiment::Schedule).param("J", 4).param("alpha", 1)).unwrap();
        assert_eq!(out.summary, "2 . .\n3 4 .\n4 5 6");
    }
}
