//! `seqchi`: evaluate joint rejection probabilities of the two-stage
//! sequential chi-squared test from the command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 domain or validity error,
//! 4 tolerance not reached (the result is still printed).

mod record;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use seqchi_core::asymptotics::{
    alpha_asym, alpha_bracket, alpha_bracket_with, alpha_equal_levels, alpha_from_levels,
    invert_chi2_tail, AlphaBracket, EpsilonPolicy, LevelSpec,
};
use seqchi_core::bessel_process::{map_to_chi2, BesselQuery};
use seqchi_core::montecarlo::{
    simulate_bessel_joint_with_threads, simulate_pearson_joint_with_threads, McEstimate,
    TrialScheme,
};
use seqchi_core::quadrature::bonferroni_orders;
use seqchi_core::special_fn::{crossover, infeld_scaled, ln_infeld_scaled, psi_envelope};
use seqchi_core::{alpha_quad, BesselOrder, CriticalPair, QuadResult, TestDesign};

use record::{Format, RunRecord, Sink};

#[derive(Debug, Parser)]
#[command(name = "seqchi", version, about, args_override_self = true)]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Suppress notes on standard error
    #[arg(long, global = true)]
    quiet: bool,

    /// CSV of parameter rows; the header names flags (without dashes) and
    /// each row is appended to the command line
    #[arg(long, global = true, value_name = "PATH")]
    grid: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Joint rejection probability α(x1*, x2*) of the two-stage test
    Alpha(AlphaArgs),
    /// α from the marginal significance levels α1, α2
    Levels(LevelsArgs),
    /// Joint two-time tail of the Bessel process
    Bessel(BesselArgs),
    /// Monte Carlo estimate
    Mc(McArgs),
    /// Bonferroni bounds from marginal and pairwise levels
    Bonferroni(BonferroniArgs),
    /// Scaled modified Bessel function e^{-x} I_nu(x) with its enclosure
    Infeld(InfeldArgs),
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// Number of outcomes N
    #[arg(long)]
    n_categories: u32,

    /// Limit ratio c = sqrt(n1/n2)
    #[arg(long, conflicts_with_all = ["n1", "n2"], required_unless_present_all = ["n1", "n2"])]
    c: Option<f64>,

    /// First-stage sample size
    #[arg(long, requires = "n2")]
    n1: Option<u64>,

    /// Second-stage sample size
    #[arg(long, requires = "n1")]
    n2: Option<u64>,
}

impl DesignArgs {
    fn design(&self) -> seqchi_core::Result<TestDesign> {
        match (self.c, self.n1, self.n2) {
            (Some(c), _, _) => TestDesign::new(self.n_categories, c),
            (None, Some(n1), Some(n2)) => TestDesign::from_sample_sizes(self.n_categories, n1, n2),
            _ => unreachable!("clap enforces --c or --n1/--n2"),
        }
    }

    fn record(&self, r: &mut RunRecord) {
        r.input("n_categories", self.n_categories);
        if let Some(c) = self.c {
            r.input("c", c);
        }
        if let (Some(n1), Some(n2)) = (self.n1, self.n2) {
            r.input("n1", n1).input("n2", n2);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Quad,
    Asym,
    Bracket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EpsChoice {
    Default,
    Refined,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_enum, default_value_t = Method::Quad)]
    method: Method,

    /// Relative tolerance of the quadrature
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,

    /// Choice of the bracket parameter epsilon
    #[arg(long, value_enum, default_value_t = EpsChoice::Refined)]
    eps_policy: EpsChoice,

    /// Explicit bracket parameter epsilon (overrides --eps-policy)
    #[arg(long)]
    eps: Option<f64>,
}

impl EvalArgs {
    fn record(&self, r: &mut RunRecord) {
        r.input("method", format!("{:?}", self.method).to_lowercase());
        match self.method {
            Method::Quad => {
                r.input("rel_tol", self.rel_tol);
            }
            Method::Bracket => match self.eps {
                Some(e) => {
                    r.input("eps", e);
                }
                None => {
                    r.input(
                        "eps_policy",
                        format!("{:?}", self.eps_policy).to_lowercase(),
                    );
                }
            },
            Method::Asym => {}
        }
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct AlphaArgs {
    #[command(flatten)]
    design: DesignArgs,

    /// First-stage critical level x1*
    #[arg(long)]
    x1: f64,

    /// Second-stage critical level x2*
    #[arg(long)]
    x2: f64,

    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct LevelsArgs {
    #[command(flatten)]
    design: DesignArgs,

    /// First-stage marginal level α1
    #[arg(long)]
    alpha1: f64,

    /// Ratio P = sqrt(ln α2 / ln α1)
    #[arg(long, conflicts_with = "alpha2", required_unless_present = "alpha2")]
    p: Option<f64>,

    /// Second-stage marginal level α2
    #[arg(long)]
    alpha2: Option<f64>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct BesselArgs {
    /// Dimension d of the Brownian motion
    #[arg(long)]
    d: u32,
    /// First observation time
    #[arg(long)]
    s1: f64,
    /// Second observation time, s2 > s1
    #[arg(long)]
    s2: f64,
    /// Threshold for the norm at s1
    #[arg(long)]
    x1: f64,
    /// Threshold for the norm at s2
    #[arg(long)]
    x2: f64,

    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum McMode {
    Pearson,
    Bessel,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct McArgs {
    #[arg(long, value_enum)]
    mode: McMode,

    #[arg(long, default_value_t = 1_000_000)]
    reps: u64,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Worker threads; the output does not depend on this
    #[arg(long, env = "SEQCHI_THREADS")]
    threads: Option<usize>,

    /// Number of outcomes N (pearson)
    #[arg(long, required_if_eq("mode", "pearson"))]
    n_categories: Option<u32>,

    /// Outcome probabilities, comma separated (pearson; default uniform)
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,

    /// Sample sizes (pearson)
    #[arg(long, required_if_eq("mode", "pearson"))]
    n1: Option<u64>,
    #[arg(long, required_if_eq("mode", "pearson"))]
    n2: Option<u64>,

    /// Dimension (bessel)
    #[arg(long, required_if_eq("mode", "bessel"))]
    d: Option<u32>,
    #[arg(long, required_if_eq("mode", "bessel"))]
    s1: Option<f64>,
    #[arg(long, required_if_eq("mode", "bessel"))]
    s2: Option<f64>,

    /// Thresholds: critical levels x* (pearson) or norms (bessel)
    #[arg(long)]
    x1: f64,
    #[arg(long)]
    x2: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct BonferroniArgs {
    /// Marginal levels α_k, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    marginals: Vec<f64>,

    /// Pairwise levels α_jk as a full symmetric matrix: rows separated by
    /// ';', entries by ','
    #[arg(long, default_value = "")]
    pairwise: String,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct InfeldArgs {
    /// Order nu >= 0
    #[arg(long)]
    nu: f64,
    /// Argument x >= 0
    #[arg(long)]
    x: f64,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<seqchi_core::Error> for Failure {
    fn from(e: seqchi_core::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

struct Outcome {
    record: RunRecord,
    tolerance_met: bool,
}

impl Outcome {
    fn ok(record: RunRecord) -> Self {
        Self {
            record,
            tolerance_met: true,
        }
    }
}

fn quad_outputs(r: &mut RunRecord, q: &QuadResult) -> bool {
    r.log_alpha(q.log_alpha)
        .output("est_abs_error", q.est_abs_error)
        .output("est_rel_error", q.est_rel_error)
        .output("panels", q.panels)
        .output("converged", q.converged);
    q.converged
}

fn bracket_outputs(r: &mut RunRecord, b: &AlphaBracket) {
    let e = b.enclosure;
    let l = b.ledger;
    // log_alpha reports the certified upper endpoint.
    r.log_alpha(e.ln_hi)
        .output("log_lo", e.ln_lo)
        .output("log_hi", e.ln_hi)
        .output("alpha_lo", e.ln_lo.exp())
        .output("alpha_hi", e.ln_hi.exp())
        .output("rel_half_width", e.rel_half_width())
        .output("epsilon", l.epsilon)
        .output("psi", l.theta1_bound)
        .output("i4_tilde_bound", l.i4_tilde_bound)
        .output("lo_clamped", l.lo_clamped);
}

fn evaluate(
    r: &mut RunRecord,
    levels: &CriticalPair,
    design: &TestDesign,
    eval: &EvalArgs,
) -> Result<bool, Failure> {
    match eval.method {
        Method::Quad => {
            let q = alpha_quad(levels, design, eval.rel_tol)?;
            Ok(quad_outputs(r, &q))
        }
        Method::Asym => {
            let rho = levels.rho().ok_or_else(|| {
                Failure::Domain("rho window: rho undefined for x1* = 0".to_string())
            })?;
            r.log_alpha(alpha_asym(levels.x1_star, rho, design)?);
            r.output("rho", rho);
            Ok(true)
        }
        Method::Bracket => {
            let b = match eval.eps {
                Some(eps) => alpha_bracket(levels, design, eps)?,
                None => {
                    let policy = match eval.eps_policy {
                        EpsChoice::Default => EpsilonPolicy::Default,
                        EpsChoice::Refined => EpsilonPolicy::Refined,
                    };
                    alpha_bracket_with(levels, design, policy)?
                }
            };
            bracket_outputs(r, &b);
            Ok(true)
        }
    }
}

fn run_alpha(a: &AlphaArgs) -> Result<Outcome, Failure> {
    let mut r = RunRecord::new("alpha");
    a.design.record(&mut r);
    r.input("x1", a.x1).input("x2", a.x2);
    a.eval.record(&mut r);
    let design = a.design.design()?;
    let levels = CriticalPair::new(a.x1, a.x2)?;
    let ok = evaluate(&mut r, &levels, &design, &a.eval)?;
    Ok(Outcome {
        record: r,
        tolerance_met: ok,
    })
}

fn run_levels(a: &LevelsArgs) -> Result<Outcome, Failure> {
    let mut r = RunRecord::new("levels");
    a.design.record(&mut r);
    r.input("alpha1", a.alpha1);
    let spec = match (a.p, a.alpha2) {
        (Some(p), _) => {
            r.input("p", p);
            LevelSpec::from_p(a.alpha1, p)?
        }
        (None, Some(a2)) => {
            r.input("alpha2", a2);
            LevelSpec::from_alphas(a.alpha1, a2)?
        }
        _ => unreachable!("clap enforces --p or --alpha2"),
    };
    let design = a.design.design()?;
    let ln_alpha = if spec.p_ratio == 1.0 {
        alpha_equal_levels(spec.alpha1, &design)?
    } else {
        alpha_from_levels(&spec, &design)?
    };
    let dof = design.n_outcomes() - 1;
    r.log_alpha(ln_alpha)
        .output("p_ratio", spec.p_ratio)
        .output("alpha2", spec.alpha2)
        .output("x1_star", invert_chi2_tail(spec.alpha1, dof)?)
        .output("x2_star", invert_chi2_tail(spec.alpha2, dof)?);
    Ok(Outcome::ok(r))
}

fn run_bessel(a: &BesselArgs) -> Result<Outcome, Failure> {
    let mut r = RunRecord::new("bessel");
    r.input("d", a.d)
        .input("s1", a.s1)
        .input("s2", a.s2)
        .input("x1", a.x1)
        .input("x2", a.x2);
    a.eval.record(&mut r);
    let q = BesselQuery::new(a.d, a.s1, a.s2, a.x1, a.x2)?;
    let (levels, design) = map_to_chi2(&q)?;
    r.output("x1_star", levels.x1_star)
        .output("x2_star", levels.x2_star)
        .output("c", design.c())
        .output("n_categories", design.n_outcomes());
    let ok = evaluate(&mut r, &levels, &design, &a.eval)?;
    Ok(Outcome {
        record: r,
        tolerance_met: ok,
    })
}

fn mc_outputs(r: &mut RunRecord, e: &McEstimate) {
    r.log_alpha(e.p_hat.ln())
        .output("alpha", e.p_hat)
        .output("p_hat", e.p_hat)
        .output("std_err", e.std_err)
        .output("hits", e.hits)
        .output("reps", e.reps);
    r.seed = Some(e.seed);
}

fn run_mc(a: &McArgs) -> Result<Outcome, Failure> {
    let mut r = RunRecord::new("mc");
    r.input("mode", format!("{:?}", a.mode).to_lowercase())
        .input("reps", a.reps)
        .input("x1", a.x1)
        .input("x2", a.x2);
    let est = match a.mode {
        McMode::Pearson => {
            let (n, n1, n2) = (
                a.n_categories.expect("required"),
                a.n1.expect("required"),
                a.n2.expect("required"),
            );
            r.input("n_categories", n).input("n1", n1).input("n2", n2);
            let scheme = match &a.probs {
                Some(p) => {
                    if p.len() != n as usize {
                        return Err(Failure::Usage(format!(
                            "--probs has {} entries but --n-categories is {n}",
                            p.len()
                        )));
                    }
                    r.input("probs", p.clone());
                    TrialScheme::new(p.clone(), n1, n2)?
                }
                None => TrialScheme::uniform(n as usize, n1, n2)?,
            };
            simulate_pearson_joint_with_threads(&scheme, a.x1, a.x2, a.reps, a.seed, a.threads)?
        }
        McMode::Bessel => {
            let (d, s1, s2) = (
                a.d.expect("required"),
                a.s1.expect("required"),
                a.s2.expect("required"),
            );
            r.input("d", d).input("s1", s1).input("s2", s2);
            let q = BesselQuery::new(d, s1, s2, a.x1, a.x2)?;
            simulate_bessel_joint_with_threads(&q, a.reps, a.seed, a.threads)?
        }
    };
    mc_outputs(&mut r, &est);
    Ok(Outcome::ok(r))
}

fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>, Failure> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Failure::Usage(format!("--pairwise entry `{v}`: {e}")))
                })
                .collect()
        })
        .collect()
}

fn run_bonferroni(a: &BonferroniArgs) -> Result<Outcome, Failure> {
    let mut r = RunRecord::new("bonferroni");
    let pairwise = parse_matrix(&a.pairwise)?;
    r.input("marginals", a.marginals.clone())
        .input("pairwise", pairwise.clone());
    if a.marginals.len() > 1 && pairwise.is_empty() {
        return Err(Failure::Usage(
            "--pairwise is required for more than one event".to_string(),
        ));
    }
    let b = bonferroni_orders(&a.marginals, &pairwise)?;
    let best = b.best();
    r.log_alpha(best.hi.ln())
        .output("alpha", best.hi)
        .output("log_lo", best.lo.ln())
        .output("log_hi", best.hi.ln())
        .output("lo", best.lo)
        .output("hi", best.hi)
        .output("first_order_lo", b.first_order.lo)
        .output("first_order_hi", b.first_order.hi)
        .output("second_order_lo", b.second_order.lo)
        .output("second_order_hi", b.second_order.hi);
    Ok(Outcome::ok(r))
}

fn run_infeld(a: &InfeldArgs) -> Result<Outcome, Failure> {
    let mut r = RunRecord::new("infeld");
    r.input("nu", a.nu).input("x", a.x);
    let nu = BesselOrder::new(a.nu)?;
    let enc = infeld_scaled(nu, a.x)?;
    let ln_scaled = ln_infeld_scaled(nu, a.x);
    r.output("log_value", ln_scaled + a.x)
        .output("scaled_value", ln_scaled.exp())
        .output("scaled_lo", enc.lo)
        .output("scaled_hi", enc.hi)
        .output(
            "enclosure",
            serde_json::to_value(enc.tag).unwrap_or(Value::Null),
        )
        .output("crossover", crossover(nu));
    if a.x > 0.0 {
        if let Ok(psi) = psi_envelope(nu, a.x) {
            r.output("psi", psi);
        }
    }
    Ok(Outcome::ok(r))
}

fn dispatch(cmd: &Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Alpha(a) => run_alpha(a),
        Command::Levels(a) => run_levels(a),
        Command::Bessel(a) => run_bessel(a),
        Command::Mc(a) => run_mc(a),
        Command::Bonferroni(a) => run_bonferroni(a),
        Command::Infeld(a) => run_infeld(a),
    }
}

const EXIT_USAGE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_TOLERANCE: u8 = 4;

/// Removes `--grid PATH` or `--grid=PATH` from the arguments.
fn split_grid(args: Vec<OsString>) -> (Vec<OsString>, Option<Option<PathBuf>>) {
    let mut rest = Vec::with_capacity(args.len());
    let mut grid = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--grid" {
            grid = Some(it.next().map(PathBuf::from));
        } else if let Some(p) = s.strip_prefix("--grid=") {
            grid = Some(Some(PathBuf::from(p)));
        } else {
            rest.push(a);
        }
    }
    (rest, grid)
}

fn read_grid(path: &PathBuf) -> Result<Vec<Vec<OsString>>, String> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let header = reader
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .clone();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let mut extra = Vec::new();
        for (name, value) in header.iter().zip(rec.iter()) {
            let (name, value) = (name.trim(), value.trim());
            if name.is_empty() || value.is_empty() {
                continue;
            }
            extra.push(OsString::from(format!(
                "--{}",
                name.trim_start_matches('-')
            )));
            extra.push(OsString::from(value));
        }
        rows.push(extra);
    }
    Ok(rows)
}

struct Runner {
    sink: Sink<std::io::StdoutLock<'static>>,
    quiet: bool,
    exit: u8,
}

impl Runner {
    fn run(&mut self, argv: Vec<OsString>) {
        let cli = match Cli::try_parse_from(argv) {
            Ok(c) => c,
            Err(e) => {
                let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
                let _ = e.print();
                self.exit = self.exit.max(code);
                return;
            }
        };
        self.quiet |= cli.quiet;
        match dispatch(&cli.command) {
            Ok(out) => {
                if let Err(e) = self.sink.write(&out.record) {
                    eprintln!("error: writing output: {e}");
                    self.exit = self.exit.max(1);
                }
                if !out.tolerance_met {
                    if !self.quiet {
                        eprintln!("note: requested tolerance not reached; result flagged");
                    }
                    self.exit = self.exit.max(EXIT_TOLERANCE);
                }
            }
            Err(Failure::Usage(msg)) => {
                eprintln!("error: {msg}");
                self.exit = self.exit.max(EXIT_USAGE);
            }
            Err(Failure::Domain(msg)) => {
                eprintln!("error: {msg}");
                self.exit = self.exit.max(EXIT_DOMAIN);
            }
        }
    }
}

fn main() -> ExitCode {
    let (argv, grid) = split_grid(std::env::args_os().collect());

    // Output format is needed before the per-row parse; read it leniently.
    let format = argv
        .windows(2)
        .rev()
        .find(|w| w[0] == "--format")
        .and_then(|w| Format::from_str(&w[1].to_string_lossy(), true).ok())
        .or_else(|| {
            argv.iter().rev().find_map(|a| {
                a.to_string_lossy()
                    .strip_prefix("--format=")
                    .and_then(|v| Format::from_str(v, true).ok())
            })
        })
        .unwrap_or(Format::Json);
    let quiet = argv.iter().any(|a| a == "--quiet");

    let mut runner = Runner {
        sink: Sink::new(std::io::stdout().lock(), format),
        quiet,
        exit: 0,
    };
    match grid {
        None => runner.run(argv),
        Some(None) => {
            eprintln!("error: --grid needs a file path");
            return ExitCode::from(EXIT_USAGE);
        }
        Some(Some(path)) => match read_grid(&path) {
            Ok(rows) => {
                for extra in rows {
                    let mut row_argv = argv.clone();
                    row_argv.extend(extra);
                    runner.run(row_argv);
                }
            }
            Err(msg) => {
                eprintln!("error: --grid {msg}");
                return ExitCode::from(EXIT_USAGE);
            }
        },
    }
    ExitCode::from(runner.exit)
}
