use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pacp_core::campaign::{partition, run_replicates};
use pacp_core::inference::{localize_tau, lr_test, mle, plugin_lr_test};
use pacp_core::likelihood::{log_likelihood, log_lr_sequential, log_lr_tail};
use pacp_core::reduction::{
    self, event_bn, log_permuted_lr, Preconditions, ProbeConfig, ReductionContext,
};
use pacp_core::simulator::{simulate, simulate_with};
use pacp_core::theory::{asymptotic_variance, degree_moment, limit_loglr_rate, DegreeLaw};
use pacp_core::{AttachmentLog, DeltaProfile, Hypothesis};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::output::{envelope, write_csv, write_json, write_text, CliResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "pacp", version, about = "Preferential attachment with a change point: simulation and inference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output file (JSON result; the PALOG graph for `simulate`). Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Per-replicate or per-row table as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Worker threads for campaigns (0 = all cores). PACP_THREADS overrides it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a graph and write it as PALOG.
    Simulate(SimulateArgs),
    /// Log-likelihood of a graph under a constant or step profile.
    Loglik(LoglikArgs),
    /// Log likelihood ratio of the step alternative against the null.
    Lr(LrArgs),
    /// Change-detection test on one graph or as a Monte Carlo campaign.
    Test(TestArgs),
    /// Maximum-likelihood estimates of both shifts for a known change time.
    Mle(MleArgs),
    /// Change-time estimate from the step likelihood profile.
    Localize(LocalizeArgs),
    /// Bold vertices, the event B_n and the permuted likelihood ratio of a graph.
    Reduce(ReduceArgs),
    /// Monte Carlo probes of the permutation-reduction bounds.
    Contiguity(ContiguityArgs),
    /// Limiting degree law, separation rates and asymptotic variances.
    Theory(TheoryArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    /// Shift before the change (or throughout).
    #[arg(long, allow_hyphen_values = true)]
    pub delta0: f64,
    /// Shift after the change; requires --tau.
    #[arg(long, allow_hyphen_values = true)]
    pub delta1: Option<f64>,
    /// Last arrival with the initial shift; requires --delta1.
    #[arg(long)]
    pub tau: Option<usize>,
}

impl ProfileArgs {
    fn profile(&self, m: usize) -> CliResult<DeltaProfile> {
        let p = match (self.delta1, self.tau) {
            (None, None) => DeltaProfile::constant(self.delta0),
            (Some(d1), Some(tau)) => DeltaProfile::step(self.delta0, d1, tau),
            _ => return Err(Failure::usage("BadArguments", "--delta1 and --tau must be given together")),
        };
        p.validate(m).map_err(bad_args)?;
        Ok(p)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct LoglikArgs {
    /// PALOG file.
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub profile: ProfileArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LrArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub tau: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub delta0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta1: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Likelihood ratio at the given shifts.
    Known,
    /// Likelihood ratio at the maximum-likelihood shifts.
    Plugin,
}

#[derive(Debug, Args, Serialize)]
pub struct TestArgs {
    #[arg(long, value_enum, default_value_t = Mode::Known)]
    pub mode: Mode,
    /// Test this graph; without it a campaign is simulated.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub tau: usize,
    /// Null shift (known mode, and the simulation law of campaigns).
    #[arg(long, allow_hyphen_values = true)]
    pub delta0: Option<f64>,
    /// Alternative shift (known mode, and the simulation law of campaigns).
    #[arg(long, allow_hyphen_values = true)]
    pub delta1: Option<f64>,
    /// Campaign graph size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Replicates per hypothesis.
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct MleArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub tau: usize,
    /// Confidence level of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct LocalizeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub delta0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta1: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReduceArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub tau: usize,
    #[arg(long)]
    pub tau_prime: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta1: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Probe {
    /// E_0[Y^2 1_B] against its bound.
    SecondMoment,
    /// P_1(B^c) and the bold-set sizes.
    EventBn,
    /// Tail frequencies of the late-weight average.
    Martingale,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyArg {
    Enforce,
    Report,
}

#[derive(Debug, Args, Serialize)]
pub struct ContiguityArgs {
    #[arg(long, value_enum)]
    pub probe: Probe,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub delta0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta1: f64,
    /// Change time; defaults to n.
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub tau_prime: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    /// Constant of the event bound, or of the tail bound (default derived from the increment bound).
    #[arg(long)]
    pub c: Option<f64>,
    /// Tail thresholds for the martingale probe.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2])]
    pub x: Vec<f64>,
    /// What to do when the second-moment hypotheses fail.
    #[arg(long, value_enum, default_value_t = PolicyArg::Enforce)]
    pub preconditions: PolicyArg,
}

#[derive(Debug, Args, Serialize)]
pub struct TheoryArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub delta0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta1: f64,
    /// Largest degree listed in the pmf table.
    #[arg(long, default_value_t = 20)]
    pub kmax: usize,
    /// Also report exact degree moments of vertex u after arrival t.
    #[arg(long, requires = "t")]
    pub u: Option<usize>,
    #[arg(long, requires = "u")]
    pub t: Option<usize>,
}

fn bad_args(e: pacp_core::Error) -> Failure {
    Failure::usage(e.kind(), e.to_string())
}

fn threads(cli: &Cli) -> CliResult<usize> {
    match std::env::var("PACP_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| Failure::usage("BadArguments", format!("PACP_THREADS = {v:?} is not a count"))),
        Err(_) => Ok(cli.threads),
    }
}

fn load_graph(path: &Path) -> CliResult<AttachmentLog> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    AttachmentLog::parse_palog(&text).map_err(|e| Failure::usage(e.kind(), format!("{}: {e}", path.display())))
}

fn check_delta(m: usize, name: &str, delta: f64) -> CliResult<()> {
    if delta.is_finite() && delta > -(m as f64) {
        Ok(())
    } else {
        Err(Failure::usage("BadArguments", format!("--{name} = {delta} must exceed -m = -{m}")))
    }
}

fn require(cond: bool, message: impl Into<String>) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(Failure::usage("BadArguments", message))
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    let threads = threads(cli)?;
    let (result, config, seed): (Value, Value, Option<u64>) = match &cli.command {
        Command::Simulate(a) => {
            require(a.n >= 1 && a.m >= 1, "--n and --m must be at least 1")?;
            let profile = a.profile.profile(a.m)?;
            if let DeltaProfile::Step { tau, .. } = profile {
                require(tau >= 1 && tau <= a.n, format!("--tau = {tau} must lie in 1..={}", a.n))?;
            }
            let g = simulate(a.n, a.m, &profile, a.seed)?;
            let text = g.to_palog();
            let max_degree = g.degrees().into_iter().max().unwrap_or(0);
            let summary = json!({
                "n": g.n(),
                "m": g.m(),
                "profile": to_value(&profile),
                "edges": g.m() * g.n(),
                "max_degree": max_degree,
                "path": out.map(|p| p.display().to_string()),
            });
            match out {
                Some(p) => {
                    write_text(Some(p), &text)?;
                    write_json(None, &envelope(summary, a, Some(a.seed)))?;
                }
                None => write_text(None, &text)?,
            }
            return Ok(());
        }
        Command::Loglik(a) => {
            let g = load_graph(&a.graph)?;
            let profile = a.profile.profile(g.m())?;
            if let DeltaProfile::Step { tau, .. } = profile {
                require(tau <= g.n(), format!("--tau = {tau} exceeds n = {}", g.n()))?;
            }
            (to_value(&log_likelihood(&g, &profile)?), to_value(a), None)
        }
        Command::Lr(a) => {
            let g = load_graph(&a.graph)?;
            check_delta(g.m(), "delta0", a.delta0)?;
            check_delta(g.m(), "delta1", a.delta1)?;
            require(a.tau >= 1 && a.tau <= g.n(), format!("--tau = {} must lie in 1..={}", a.tau, g.n()))?;
            let tail = log_lr_tail(&g, a.tau, a.delta0, a.delta1)?;
            let seq = log_lr_sequential(&g, a.tau, a.delta0, a.delta1)?;
            (json!({ "log_lr": tail, "log_lr_sequential": seq }), to_value(a), None)
        }
        Command::Test(a) => run_test(a, threads, cli.csv.as_deref())?,
        Command::Mle(a) => {
            let g = load_graph(&a.graph)?;
            require(a.tau >= 1 && a.tau < g.n(), format!("--tau = {} must lie in 1..{}", a.tau, g.n()))?;
            require(a.level > 0.0 && a.level < 1.0, "--level must lie in (0, 1)")?;
            let r = mle(&g, a.tau)?;
            let (ci0, ci1) = r.confidence_intervals(a.level);
            let mut v = to_value(&r);
            v["ci0"] = json!([ci0.0, ci0.1]);
            v["ci1"] = json!([ci1.0, ci1.1]);
            (v, to_value(a), None)
        }
        Command::Localize(a) => {
            let g = load_graph(&a.graph)?;
            check_delta(g.m(), "delta0", a.delta0)?;
            check_delta(g.m(), "delta1", a.delta1)?;
            require(a.delta0 != a.delta1, "--delta0 and --delta1 must differ")?;
            let loc = localize_tau(&g, a.delta0, a.delta1)?;
            if let Some(p) = &cli.csv {
                #[derive(Serialize)]
                struct Row {
                    tau: usize,
                    loglik: f64,
                }
                let rows: Vec<Row> = loc.profile.iter().enumerate().map(|(tau, &loglik)| Row { tau, loglik }).collect();
                write_csv(p, &rows)?;
            }
            (json!({ "tau_hat": loc.tau_hat, "loglik": loc.profile[loc.tau_hat] }), to_value(a), None)
        }
        Command::Reduce(a) => {
            let g = load_graph(&a.graph)?;
            check_delta(g.m(), "delta0", a.delta0)?;
            check_delta(g.m(), "delta1", a.delta1)?;
            require(a.tau_prime < a.tau && a.tau <= g.n(), "need --tau-prime < --tau <= n")?;
            require(a.alpha > 0.0, "--alpha must be positive")?;
            let ctx = ReductionContext::new(&g, a.tau, a.tau_prime, a.alpha, a.delta0, a.delta1)?;
            let log_y = log_permuted_lr(&ctx)?;
            if let Some(p) = &cli.csv {
                #[derive(Serialize)]
                struct Row {
                    vertex: usize,
                    weight: f64,
                    post_change: bool,
                }
                let w = ctx.bold.weights.clone().unwrap_or_default();
                let rows: Vec<Row> = ctx
                    .bold
                    .members
                    .iter()
                    .zip(w)
                    .map(|(&vertex, weight)| Row { vertex, weight, post_change: vertex > a.tau })
                    .collect();
                write_csv(p, &rows)?;
            }
            let v = json!({
                "bold": ctx.bold.members,
                "bold_count": ctx.bold.len(),
                "r": ctx.r,
                "bn_threshold": ctx.bn_threshold(),
                "event_bn": event_bn(&ctx),
                "log_y": log_y,
                "y": log_y.exp(),
            });
            (v, to_value(a), None)
        }
        Command::Contiguity(a) => run_contiguity(a, threads, cli.csv.as_deref())?,
        Command::Theory(a) => run_theory(a)?,
    };
    write_json(out, &envelope(result, &config, seed))
}

#[derive(Debug, Clone, Copy, Serialize)]
struct TestRow {
    replicate: usize,
    hypothesis: &'static str,
    statistic: Option<f64>,
    reject: Option<bool>,
    abstained: bool,
}

fn run_test(a: &TestArgs, threads: usize, csv: Option<&Path>) -> CliResult<(Value, Value, Option<u64>)> {
    if let Some(path) = &a.graph {
        let g = load_graph(path)?;
        let verdict = match a.mode {
            Mode::Known => {
                let (Some(d0), Some(d1)) = (a.delta0, a.delta1) else {
                    return Err(Failure::usage("BadArguments", "known mode needs --delta0 and --delta1"));
                };
                check_delta(g.m(), "delta0", d0)?;
                check_delta(g.m(), "delta1", d1)?;
                require(a.tau >= 1 && a.tau <= g.n(), format!("--tau = {} must lie in 1..={}", a.tau, g.n()))?;
                lr_test(&g, a.tau, d0, d1)?
            }
            Mode::Plugin => {
                require(a.tau >= 1 && a.tau < g.n(), format!("--tau = {} must lie in 1..{}", a.tau, g.n()))?;
                plugin_lr_test(&g, a.tau)?
            }
        };
        return Ok((to_value(&verdict), to_value(a), None));
    }
    let (Some(n), Some(d0), Some(d1)) = (a.n, a.delta0, a.delta1) else {
        return Err(Failure::usage("BadArguments", "a campaign needs --n, --delta0 and --delta1 (or pass --graph)"));
    };
    require(a.m >= 1, "--m must be at least 1")?;
    require(a.replicates >= 1, "--replicates must be at least 1")?;
    require(a.tau >= 1 && a.tau < n, format!("--tau = {} must lie in 1..{n}", a.tau))?;
    check_delta(a.m, "delta0", d0)?;
    check_delta(a.m, "delta1", d1)?;
    let null = DeltaProfile::constant(d0);
    let alt = DeltaProfile::step(d0, d1, a.tau);
    // even streams simulate the null, odd streams the alternative
    let outcomes = run_replicates(2 * a.replicates, a.seed, threads, |r, rng| {
        let h1 = r % 2 == 1;
        let g = simulate_with(n, a.m, if h1 { &alt } else { &null }, rng)?;
        let v = match a.mode {
            Mode::Known => lr_test(&g, a.tau, d0, d1).ok(),
            Mode::Plugin => plugin_lr_test(&g, a.tau).ok(),
        };
        Ok(TestRow {
            replicate: r / 2,
            hypothesis: if h1 { "h1" } else { "h0" },
            statistic: v.map(|v| v.statistic),
            reject: v.map(|v| v.reject),
            abstained: v.is_none(),
        })
    });
    let (rows, failures) = partition(outcomes);
    let count = |h: &str, f: &dyn Fn(&TestRow) -> bool| rows.iter().filter(|r| r.hypothesis == h && f(r)).count();
    let per = a.replicates as f64;
    let type1 = count("h0", &|r| r.reject == Some(true)) as f64 / per;
    let type2 = count("h1", &|r| r.reject == Some(false)) as f64 / per;
    let abstain0 = count("h0", &|r| r.abstained);
    let abstain1 = count("h1", &|r| r.abstained);
    let v = json!({
        "mode": to_value(&a.mode),
        "replicates": a.replicates,
        "type1": type1,
        "type2": type2,
        "total_error": type1 + type2,
        "abstentions_h0": abstain0,
        "abstentions_h1": abstain1,
        "failures": failures,
    });
    if let Some(p) = csv {
        write_csv(p, &rows)?;
    }
    Ok((v, to_value(a), Some(a.seed)))
}

fn run_contiguity(a: &ContiguityArgs, threads: usize, csv: Option<&Path>) -> CliResult<(Value, Value, Option<u64>)> {
    require(a.m >= 1 && a.n >= 2, "--n must be at least 2 and --m at least 1")?;
    require(a.replicates >= 1, "--replicates must be at least 1")?;
    require(a.alpha > 0.0, "--alpha must be positive")?;
    check_delta(a.m, "delta0", a.delta0)?;
    check_delta(a.m, "delta1", a.delta1)?;
    let tau = a.tau.unwrap_or(a.n);
    require(tau <= a.n, "--tau must not exceed --n")?;
    require(a.tau_prime < a.n, "--tau-prime must be below --n")?;
    let cfg = ProbeConfig {
        n: a.n,
        m: a.m,
        delta0: a.delta0,
        delta1: a.delta1,
        tau,
        tau_prime: a.tau_prime,
        alpha: a.alpha,
        replicates: a.replicates,
        seed: a.seed,
        threads,
    };
    let result = match a.probe {
        Probe::SecondMoment => {
            let policy = match a.preconditions {
                PolicyArg::Enforce => Preconditions::Enforce,
                PolicyArg::Report => Preconditions::Report,
            };
            let (res, rows) = reduction::second_moment_probe(&cfg, a.c1, a.c2, policy)?;
            if let Some(p) = csv {
                write_csv(p, &rows)?;
            }
            to_value(&res)
        }
        Probe::EventBn => {
            let (res, rows) = reduction::event_bn_failure_probe(&cfg, a.c.unwrap_or(1.0))?;
            if let Some(p) = csv {
                write_csv(p, &rows)?;
            }
            to_value(&res)
        }
        Probe::Martingale => {
            let (res, points, rows) = reduction::martingale_tail_probe(&cfg, &a.x, a.c)?;
            if let Some(p) = csv {
                write_csv(p, &rows)?;
            }
            let mut v = to_value(&res);
            v["tails"] = to_value(&points);
            v
        }
    };
    Ok((result, to_value(a), Some(a.seed)))
}

fn run_theory(a: &TheoryArgs) -> CliResult<(Value, Value, Option<u64>)> {
    require(a.m >= 1, "--m must be at least 1")?;
    check_delta(a.m, "delta0", a.delta0)?;
    check_delta(a.m, "delta1", a.delta1)?;
    let law = DegreeLaw::new(a.m, a.delta0)?;
    let mut p = Map::new();
    let mut tail = Map::new();
    for k in a.m..=a.kmax.max(a.m) {
        p.insert(k.to_string(), json!(law.pmf(k)));
        tail.insert(k.to_string(), json!(law.tail(k)));
    }
    let l0 = limit_loglr_rate(a.delta0, a.delta1, a.m, Hypothesis::H0)?;
    let l1 = limit_loglr_rate(a.delta0, a.delta1, a.m, Hypothesis::H1)?;
    let nu0 = asymptotic_variance(0, a.delta0, a.delta1, a.m)?;
    let nu1 = asymptotic_variance(1, a.delta0, a.delta1, a.m)?;
    let mut remainders = BTreeMap::new();
    remainders.insert("ell_inf_0", l0.remainder);
    remainders.insert("ell_inf_1", l1.remainder);
    remainders.insert("nu0", nu0.remainder);
    remainders.insert("nu1", nu1.remainder);
    let mut v = json!({
        "p": p,
        "tail": tail,
        "ell_inf_0": l0.value,
        "ell_inf_1": l1.value,
        "nu0": nu0.value,
        "nu1": nu1.value,
        "truncation": remainders,
    });
    if let (Some(u), Some(t)) = (a.u, a.t) {
        v["moments"] = to_value(&degree_moment(u, t, a.m, a.delta0).map_err(bad_args)?);
    }
    Ok((v, to_value(a), None))
}
