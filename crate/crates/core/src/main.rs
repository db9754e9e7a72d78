use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fractrace::config::{parse_config, Experiment, Format, RunConfig, DEFAULT_SEED};
use fractrace::runner::{execute, run, OUTPUT_ROOT_ENV};

const AFTER_HELP: &str = "\
Results are printed to stdout. With --output (or FRACTRACE_OUTPUT_ROOT set) each run is
also stored under <root>/<config sha256>/ as manifest.json plus result.json or result.csv,
and an identical later run is served from there unless --no-cache is given.

CSV columns:
  sample        s
  moments       eta, exact, mc, stderr, z
  kernel        t, value, at_zero
  constants     value, stderr
  coeff         value, stderr, reference (int V^j / j! when n = 0)
  trace         t, raw, normalized, windowed
  fit           exponent, coefficient, stat_err, sys_err, uncertainty, reference
  schedule      s1..s{J-1} (rows of A_J)
  relativistic  lambda, mc, stderr, exact, z
  mixed         lambda, mc, stderr, exact, z
  acceptance    id, passed";

#[derive(Parser)]
#[command(name = "fractrace", version, about = "Heat-trace expansions for fractional Schrödinger operators", after_help = AFTER_HELP)]
struct Cli {
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, default_value = "json")]
    format: Format,
    /// Output root for manifests and results.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV)]
    output: Option<PathBuf>,
    /// Recompute even if a cached result exists.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct SubordinatorArgs {
    /// stable, relativistic or mixed.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "J")]
    j_max: Option<u32>,
    #[arg(long = "M")]
    m_max: Option<u32>,
    /// Extra exponents fitted as nuisance terms, comma separated.
    #[arg(long)]
    extra: Option<String>,
    /// windowed or normalized.
    #[arg(long)]
    column: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw subordinator samples.
    Sample {
        #[command(flatten)]
        sub: SubordinatorArgs,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Monte Carlo moments of S_1 against the closed form.
    Moments {
        #[arg(long)]
        alpha: Option<f64>,
        /// Comma-separated exponents.
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Stable heat kernel p_t(x).
    Kernel {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        /// Point, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
    },
    /// K1, K2, K3 or the family constants L, M, N.
    Constants {
        #[arg(long)]
        which: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Deterministic quadrature (alpha = 2 only).
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Monte Carlo expansion coefficient C_{n,j}(V).
    Coeff {
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        j: Option<u32>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Spectral trace difference curve, optionally fitted.
    Trace {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        potential: Option<String>,
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        fit: bool,
        /// Grid and domain convergence gates (default: on with --fit).
        #[arg(long)]
        gates: Option<bool>,
        #[command(flatten)]
        fit_args: FitArgs,
    },
    /// Fit a trace curve CSV against an exponent schedule.
    Fit {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        fit_args: FitArgs,
    },
    /// The exponent matrix A_J(alpha).
    Schedule {
        #[arg(long = "J")]
        j_max: Option<u32>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "M")]
        m_max: Option<u32>,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Relativistic subordinator: Laplace law, acceptance rate, p_t(0).
    Relativistic {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        lambdas: Option<String>,
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Mixed subordinator: Laplace law and p_t(0).
    Mixed {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        lambdas: Option<String>,
    },
    /// Run the acceptance criteria; exits nonzero if any fails.
    Acceptance {
        /// Comma-separated criterion ids (default: all).
        #[arg(long)]
        criteria: Option<String>,
    },
    /// Run every section of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

struct Builder(RunConfig);

impl Builder {
    fn opt(mut self, key: &str, value: Option<impl ToString>) -> Self {
        if let Some(v) = value {
            self.0.params.insert(key.into(), v.to_string());
        }
        self
    }

    fn flag(self, key: &str, on: bool) -> Self {
        self.opt(key, on.then_some(true))
    }

    fn sub(self, s: SubordinatorArgs) -> Self {
        self.opt("family", s.family).opt("alpha", s.alpha).opt("m", s.m).opt("beta", s.beta).opt("a", s.a)
    }

    fn fit(self, f: FitArgs) -> Self {
        self.opt("J", f.j_max).opt("M", f.m_max).opt("extra", f.extra).opt("column", f.column)
    }
}

fn build(command: Command) -> Option<RunConfig> {
    let b = |e| Builder(RunConfig::new(e));
    let rc = match command {
        Command::Sample { sub, t, n } => b(Experiment::Sample).sub(sub).opt("t", t).opt("n", n),
        Command::Moments { alpha, eta, n } => b(Experiment::Moments).opt("alpha", alpha).opt("eta", eta).opt("n", n),
        Command::Kernel { d, alpha, t, x } => b(Experiment::Kernel).opt("d", d).opt("alpha", alpha).opt("t", t).opt("x", x),
        Command::Constants { which, d, alpha, analytic, n } => b(Experiment::Constants)
            .opt("which", which)
            .opt("d", d)
            .opt("alpha", alpha)
            .flag("analytic", analytic)
            .opt("n", n),
        Command::Coeff { potential, d, n, j, alpha, samples } => b(Experiment::Coeff)
            .opt("potential", potential)
            .opt("d", d)
            .opt("n", n)
            .opt("j", j)
            .opt("alpha", alpha)
            .opt("samples", samples),
        Command::Trace { d, alpha, potential, l, modes, t_min, t_max, points, margin, fit, gates, fit_args } => {
            b(Experiment::Trace)
                .opt("d", d)
                .opt("alpha", alpha)
                .opt("potential", potential)
                .opt("l", l)
                .opt("modes", modes)
                .opt("t_min", t_min)
                .opt("t_max", t_max)
                .opt("points", points)
                .opt("margin", margin)
                .flag("fit", fit)
                .opt("gates", gates)
                .fit(fit_args)
        }
        Command::Fit { input, d, alpha, fit_args } => b(Experiment::Fit)
            .opt("input", input.map(|p| p.display().to_string()))
            .opt("d", d)
            .opt("alpha", alpha)
            .fit(fit_args),
        Command::Schedule { j_max, alpha, m_max, d } => {
            b(Experiment::Schedule).opt("J", j_max).opt("alpha", alpha).opt("M", m_max).opt("d", d)
        }
        Command::Relativistic { alpha, m, t, d, n, lambdas, floor } => b(Experiment::Relativistic)
            .opt("alpha", alpha)
            .opt("m", m)
            .opt("t", t)
            .opt("d", d)
            .opt("n", n)
            .opt("lambdas", lambdas)
            .opt("floor", floor),
        Command::Mixed { alpha, beta, a, t, d, n, lambdas } => b(Experiment::Mixed)
            .opt("alpha", alpha)
            .opt("beta", beta)
            .opt("a", a)
            .opt("t", t)
            .opt("d", d)
            .opt("n", n)
            .opt("lambdas", lambdas),
        Command::Acceptance { criteria } => b(Experiment::Acceptance).opt("criteria", criteria),
        Command::Run { .. } => return None,
    };
    Some(rc.0)
}

fn persist(rc: &RunConfig, no_cache: bool) -> Result<bool, fractrace::Error> {
    let rec = run(rc, no_cache)?;
    println!("{}", rec.manifest.summary);
    eprintln!("{} {}", if rec.cached { "cached" } else { "wrote" }, rec.dir.display());
    Ok(rec.manifest.success)
}

fn main_inner(cli: Cli) -> Result<bool, fractrace::Error> {
    if let Command::Run { config } = &cli.command {
        let text = std::fs::read_to_string(config)?;
        let mut ok = true;
        for mut rc in parse_config(&text)? {
            if rc.output.is_none() {
                rc.output = cli.output.clone();
            }
            let name = match &rc.label {
                Some(l) => format!("{}.{l}", rc.experiment),
                None => rc.experiment.to_string(),
            };
            println!("[{name}]");
            ok &= persist(&rc, cli.no_cache)?;
        }
        return Ok(ok);
    }
    let mut rc = build(cli.command).expect("run handled above");
    rc.seed = cli.seed;
    rc.format = cli.format;
    rc.output = cli.output;
    if rc.output.is_some() {
        return persist(&rc, cli.no_cache);
    }
    let out = execute(&rc)?;
    println!("{}", out.summary);
    Ok(out.success)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
