//! Command line front end: one binary, one subcommand per experiment.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Mode};
use crate::eigensolver::second_eigen_mu2;
use crate::error::{Error, Result};
use crate::inequalities::{four_point_check, pointwise_check_a3, pointwise_check_a4, FourPointInput};
use crate::io::{emit_results, read_grid_csv, versioned, write_json, Format};
use crate::kernel::build_kernel;
use crate::lattice::{ReflectionParam, Variant};
use crate::nehari::lens_minimize;
use crate::nonlinearity::Nonlinearity;
use crate::payne::run_payne_experiment;
use crate::polarization::{equality_case, polarization_identities_check, polarize};

/// Exit status when every check passed.
pub const EXIT_OK: i32 = 0;
/// Exit status for operational errors (bad input, I/O, solver failure).
pub const EXIT_ERROR: i32 = 1;
/// Exit status when an inequality or invariant was found violated.
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fraclap", version, about = "Fractional p-Laplacian lattice experiments")]
pub struct Cli {
    /// Experiment configuration (JSON). Command line flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "FRAC_PLAP_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Domain spec (JSON): `{dim, h, box, shape: {kind, params}}`.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Eigen,
    Lens,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    P,
    Tilde,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Polarize a grid function and report the pairing deficits.
    Polarize {
        /// Grid-function CSV (`x1[,x2],value`).
        #[arg(long)]
        input: PathBuf,
        /// Reflection parameter, a multiple of h/2.
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, value_enum, default_value = "p")]
        variant: VariantArg,
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Second eigenvalue and eigenfunction.
    Eigen {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        multistarts: Option<usize>,
    },
    /// Least energy nodal solution for `f(z) = |z|^{q-2} z`.
    Lens {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        multistarts: Option<usize>,
    },
    /// Support, nodal-set and polarization diagnostics of a computed solution.
    Payne {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        multistarts: Option<usize>,
        /// Report path (default `<out>/payne_report.json`).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Random sweeps of the pointwise inequalities.
    VerifyInequalities {
        /// Samples per inequality and exponent.
        #[arg(long, default_value_t = 10_000)]
        sweep: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.5, 2.0, 3.0])]
        p_list: Vec<f64>,
    },
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_VIOLATION
        }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))
}

struct Overrides<'a> {
    problem: &'a ProblemArgs,
    mode: Option<Mode>,
    q: Option<f64>,
    multistarts: Option<usize>,
}

fn experiment(cli: &Cli, o: Overrides) -> Result<ExperimentConfig> {
    let mut v = match &cli.config {
        Some(path) => {
            let value = read_json(path)?;
            if !value.is_object() {
                return Err(Error::Config(vec![format!("$: {} must hold a JSON object", path.display())]));
            }
            value
        }
        None => json!({}),
    };
    let set = |v: &mut Value, key: &str, x: Value| {
        v[key] = x;
    };
    if let Some(path) = &o.problem.domain {
        set(&mut v, "domain", read_json(path)?);
    }
    if let Some(p) = o.problem.p {
        set(&mut v, "p", p.into());
    }
    if let Some(s) = o.problem.s {
        set(&mut v, "s", s.into());
    }
    if let Some(tol) = o.problem.tol {
        set(&mut v, "tol", tol.into());
    }
    if let Some(q) = o.q {
        set(&mut v, "q", q.into());
    }
    if let Some(m) = o.multistarts {
        set(&mut v, "multistarts", m.into());
    }
    if let Some(seed) = cli.seed {
        set(&mut v, "seed", seed.into());
    }
    match o.mode {
        Some(mode) => set(&mut v, "mode", serde_json::to_value(mode)?),
        None if v.get("mode").is_none() => set(&mut v, "mode", "eigen".into()),
        None => {}
    }
    ExperimentConfig::from_value(v)
}

fn mode_of(m: ModeArg) -> Mode {
    match m {
        ModeArg::Eigen => Mode::Eigen,
        ModeArg::Lens => Mode::Lens,
    }
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Parameter("--threads must be positive".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one command. `Ok` carries whether all checks passed; `Err` is an
/// operational failure.
pub fn run(cli: &Cli) -> Result<Outcome> {
    configure_threads(cli.threads)?;
    let out = &cli.out;
    let mut files = Vec::new();
    let mut emit = |name: &Path, value: &Value| -> Result<()> {
        write_json(value, name)?;
        files.push(name.to_path_buf());
        Ok(())
    };
    let passed = match &cli.command {
        Command::Eigen { problem, multistarts } => {
            let cfg = experiment(cli, Overrides { problem, mode: Some(Mode::Eigen), q: None, multistarts: *multistarts })?;
            let domain = cfg.domain.build()?;
            let k = build_kernel(domain.window(), cfg.s, cfg.p)?;
            let r = second_eigen_mu2(&domain, &k, &cfg.eigen_options())?;
            emit(&out.join("config.json"), &serde_json::to_value(&cfg)?)?;
            emit(&out.join("eigen_report.json"), &versioned(&r)?)?;
            emit_results(&r, Format::Csv, &out.join("u2.csv"))?;
            files.push(out.join("u2.csv"));
            println!("lambda1 = {:.12e}  mu2 = {:.12e}  residuals = ({:.2e}, {:.2e})", r.lambda1, r.mu2, r.residuals.plus, r.residuals.minus);
            r.residuals.plus <= 1e-6 && r.residuals.minus <= 1e-6 && r.mu2 >= r.lambda1 * (1.0 - 1e-12)
        }
        Command::Lens { problem, q, multistarts } => {
            let cfg = experiment(cli, Overrides { problem, mode: Some(Mode::Lens), q: *q, multistarts: *multistarts })?;
            let domain = cfg.domain.build()?;
            let k = build_kernel(domain.window(), cfg.s, cfg.p)?;
            let nl = Nonlinearity::power(cfg.p, cfg.exponent_q())?;
            let r = lens_minimize(&domain, &k, &nl, &cfg.nehari_options())?;
            emit(&out.join("config.json"), &serde_json::to_value(&cfg)?)?;
            emit(&out.join("nehari_report.json"), &versioned(&r)?)?;
            emit_results(&r, Format::Csv, &out.join("u.csv"))?;
            files.push(out.join("u.csv"));
            println!("m = {:.12e}  residuals = ({:.2e}, {:.2e})", r.m, r.residual_plus, r.residual_minus);
            r.residual_plus <= 1e-8 && r.residual_minus <= 1e-8 && r.g_identity_gap <= 1e-10 * r.m.abs()
        }
        Command::Payne { mode, problem, q, multistarts, report } => {
            let cfg = experiment(cli, Overrides { problem, mode: mode.map(mode_of), q: *q, multistarts: *multistarts })?;
            let domain = cfg.domain.build()?;
            let k = build_kernel(domain.window(), cfg.s, cfg.p)?;
            let r = run_payne_experiment(&domain, &k, &cfg.payne_options())?;
            emit(&out.join("config.json"), &serde_json::to_value(&cfg)?)?;
            let path = report.clone().unwrap_or_else(|| out.join("payne_report.json"));
            emit(&path, &versioned(&r)?)?;
            emit_results(&r, Format::Csv, &out.join("u.csv"))?;
            files.push(out.join("u.csv"));
            println!(
                "support distances = ({}, {})  nodal distance = {:?}  threshold = {}",
                r.support_distance_plus, r.support_distance_minus, r.nodal_distance, r.touch_threshold
            );
            r.touches_plus && r.touches_minus && r.nodal_touches && r.sweep.iter().all(|e| e.nonnegative)
        }
        Command::Polarize { input, a, variant, problem } => {
            let cfg = experiment(cli, Overrides { problem, mode: None, q: None, multistarts: None })?;
            let domain = cfg.domain.build()?;
            let u = read_grid_csv(input, domain.window())?;
            let a_param = ReflectionParam::new(*a, cfg.domain.h)?;
            let window = domain.window().enlarged_for(a_param);
            let u = u.embed(&window)?;
            let k = build_kernel(&window, cfg.s, cfg.p)?;
            let variant = match variant {
                VariantArg::P => Variant::P,
                VariantArg::Tilde => Variant::Tilde,
            };
            let pu = polarize(&u, a_param, variant)?;
            let (case, deficits) = equality_case(&u, a_param, &k)?;
            let nl = Nonlinearity::power(cfg.p, cfg.exponent_q())?;
            let identities = polarization_identities_check(&u, a_param, &nl)?;
            #[derive(Serialize)]
            struct PolarizeReport<'a> {
                a: f64,
                variant: &'a str,
                deficits: crate::polarization::Deficits,
                case: crate::polarization::EqualityCase,
                identities: crate::polarization::IdentityReport,
            }
            let report = PolarizeReport {
                a: *a,
                variant: if variant == Variant::P { "p" } else { "tilde" },
                deficits,
                case,
                identities: identities.clone(),
            };
            emit(&out.join("deficits.json"), &versioned(&report)?)?;
            emit_results(&pu, Format::Csv, &out.join("polarized.csv"))?;
            files.push(out.join("polarized.csv"));
            println!(
                "deficits = ({:.3e}, {:.3e}, {:.3e})  case = {case:?}",
                deficits.deficit_plus, deficits.deficit_minus, deficits.seminorm_deficit
            );
            deficits.nonnegative() && identities.holds(1e-12)
        }
        Command::VerifyInequalities { sweep, p_list } => {
            let seed = cli.seed.unwrap_or(0);
            let summary = verify_inequalities(*sweep, p_list, seed)?;
            let passed = summary.passed;
            emit(&out.join("inequalities.json"), &versioned(&summary)?)?;
            for r in &summary.results {
                println!(
                    "p = {}: four-point {} violations, A3 {}, A4 {}",
                    r.p, r.four_point.violations, r.a3.violations, r.a4.violations
                );
            }
            passed
        }
    };
    Ok(Outcome { passed, files })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SweepSummary {
    pub samples: usize,
    pub violations: usize,
    /// Inputs where the equality flag disagrees with its characterization.
    pub equality_mismatches: usize,
    /// Smallest slack over the sweep (negative means violated).
    pub worst_slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentSummary {
    pub p: f64,
    pub four_point: SweepSummary,
    pub a3: SweepSummary,
    pub a4: SweepSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalitySummary {
    pub seed: u64,
    pub sweep: usize,
    pub results: Vec<ExponentSummary>,
    pub passed: bool,
}

/// Opposite-signed pair `(U, V)`, occasionally with a zero entry.
fn opposite_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u: f64 = rng.gen_range(0.0..2.0);
    let v: f64 = -rng.gen_range(0.0..2.0);
    let (u, v) = match rng.gen_range(0..8) {
        0 => (0.0, v),
        1 => (u, 0.0),
        _ => (u, v),
    };
    if rng.gen_bool(0.5) {
        (u, v)
    } else {
        (-u, -v)
    }
}

pub fn verify_inequalities(sweep: usize, p_list: &[f64], seed: u64) -> Result<InequalitySummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();
    for &p in p_list {
        let mut four = SweepSummary { samples: sweep, worst_slack: f64::INFINITY, ..Default::default() };
        for _ in 0..sweep {
            let a = rng.gen_range(-2.0..2.0);
            let b = rng.gen_range(-2.0..2.0);
            let big_a = a + rng.gen_range(1e-3..2.0);
            let big_b = b + rng.gen_range(1e-3..2.0);
            let r = four_point_check(&FourPointInput::new(a, big_a, b, big_b, p)?)?;
            let slack = (r.expr - (r.lower - r.tau)).min((r.upper + r.tau).min(r.tau) - r.expr);
            four.worst_slack = four.worst_slack.min(slack);
            four.violations += usize::from(!r.bounds_hold);
            four.equality_mismatches += usize::from(!r.equality_consistent);
        }
        let mut a3 = SweepSummary { samples: sweep, worst_slack: f64::INFINITY, ..Default::default() };
        let mut a4 = SweepSummary { samples: sweep, worst_slack: f64::INFINITY, ..Default::default() };
        for _ in 0..sweep {
            let (u, v) = opposite_pair(&mut rng);
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = pointwise_check_a3(u, v, theta.cos(), theta.sin(), p)?;
            let scale = (u - v).abs().powf(p).max(f64::MIN_POSITIVE);
            a3.worst_slack = a3.worst_slack.min((r.lhs - r.rhs) / scale);
            a3.violations += usize::from(!r.holds);
            let (u, v) = opposite_pair(&mut rng);
            let s: f64 = rng.gen_range(0.0..=1.0);
            let r = pointwise_check_a4(u, v, s, p)?;
            let scale = (u - v).abs().powf(p).max(f64::MIN_POSITIVE);
            a4.worst_slack = a4.worst_slack.min(((r.lhs1 - r.rhs1).min(r.lhs2 - r.rhs2)) / scale);
            a4.violations += usize::from(!(r.ineq1_ok && r.ineq2_ok));
        }
        results.push(ExponentSummary { p, four_point: four, a3, a4 });
    }
    let passed = results
        .iter()
        .all(|r| r.four_point.violations + r.four_point.equality_mismatches + r.a3.violations + r.a4.violations == 0);
    Ok(InequalitySummary { seed, sweep, results, passed })
}

/// Parses `args`, runs the command and maps the result to an exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
