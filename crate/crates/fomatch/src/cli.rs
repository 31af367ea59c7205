//! Command line front end.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage error, 3 IO or input-file
//! error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use fomatch_core::constants::{linear_gain_area, omega_constant, omega_fixed_point, ranking_gain_constant, two_minus_sqrt2, SQRT_2};
use fomatch_core::gain::{linear_gain, GainFunction, RankingGain};
use fomatch_core::generalized::gen_generalized_hard_instance;
use fomatch_core::generate::random_instance;
use fomatch_core::ranking::{thresholds, trial_rng, TrialRecord};
use fomatch_core::ranking_hardness::{gen_ranking_hard_instance, HardRatio};
use fomatch_core::special::SpecialFunctions;
use fomatch_core::waterfill::WaterFilling;
use fomatch_core::wf_hardness::{emit_edge_arrival_trace, gen_wf_hard_instance, random_relabel, stationary_profile};
use fomatch_core::{achieved_ratio, certify_duals, opt_bipartite, opt_fractional_general, Instance, RankVector, VertexId};

use crate::checks::{run_suite, SuiteOptions};
use crate::format::{parse_instance, write_instance, write_outcome_csv, write_trace, write_trial_log};
use crate::meta::{Artifact, Stopwatch};
use crate::parallel;
use crate::sweep::{default_points, run_sweep, write_report_csv, SweepFamily};

#[derive(Parser, Debug)]
#[command(name = "fomatch", version, about = "Water-filling and Ranking for fully online matching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write an instance file from a generator.
    Gen(Opts),
    /// Run water-filling and certify its duals.
    Waterfill(Opts),
    /// Fixed point of the level dynamics on the water-filling hard instance.
    Stationary(Opts),
    /// Monte Carlo ratio of Ranking.
    Ranking(Opts),
    /// Marginal-rank thresholds of one edge.
    Thresholds(Opts),
    /// Run the numerical check suite.
    Verify(Opts),
    /// Print the constants used as targets.
    Constants(Opts),
    /// Ratio-versus-size tables.
    Report(Opts),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    WfHard,
    RankHard,
    WfHardGeneral,
    Random,
    /// Only meaningful for `report`.
    Stationary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Opts {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of interleaved copies for `wf-hard-general`.
    #[arg(long = "L")]
    pub copies: Option<usize>,
    /// Vertex count for `random`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Edge probability for `random`.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, env = "FOM_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated check names for `verify`.
    #[arg(long)]
    pub only: Option<String>,
    /// Tolerance override for `verify`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Plateau of the Ranking gain, to inject a fault.
    #[arg(long)]
    pub plateau: Option<f64>,
    /// Random family without a bipartition.
    #[arg(long)]
    pub general: bool,
    /// Randomly relabel the generated instance.
    #[arg(long)]
    pub relabel: bool,
    /// Write the edge-arrival trace instead of the instance.
    #[arg(long)]
    pub trace: bool,
    /// Edge endpoints for `thresholds`.
    #[arg(long)]
    pub u: Option<usize>,
    #[arg(long)]
    pub v: Option<usize>,
    /// Comma-separated `k` values for `report`.
    #[arg(long, value_delimiter = ',')]
    pub ks: Vec<usize>,
    /// Random cases per sampled check in `verify`.
    #[arg(long)]
    pub cases: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<fomatch_core::Error> for CliError {
    fn from(e: fomatch_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

type CmdResult = Result<Status, CliError>;

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(Status::Pass) => 0,
        Ok(Status::Fail) => 1,
        Err(e) => {
            eprintln!("fomatch: {e}");
            match e {
                CliError::Usage(_) => 2,
                CliError::Io(_) => 3,
            }
        }
    }
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Gen(o) => cmd_gen(&o),
        Command::Waterfill(o) => cmd_waterfill(&o),
        Command::Stationary(o) => cmd_stationary(&o),
        Command::Ranking(o) => cmd_ranking(&o),
        Command::Thresholds(o) => cmd_thresholds(&o),
        Command::Verify(o) => cmd_verify(&o),
        Command::Constants(o) => cmd_constants(&o),
        Command::Report(o) => cmd_report(&o),
    }
}

impl Opts {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn emit(opts: &Opts, text: &str) -> Result<(), CliError> {
    match &opts.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(opts: &Opts, clock: &Stopwatch, data: &T) -> Result<(), CliError> {
    let artifact = Artifact { meta: clock.metadata(), data };
    let mut text = serde_json::to_string_pretty(&artifact).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    emit(opts, &text)
}

/// An instance together with a description of where it came from.
struct Loaded {
    instance: Instance,
    source: String,
}

fn load(opts: &Opts) -> Result<Loaded, CliError> {
    if let Some(path) = &opts.input {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let instance = parse_instance(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        return Ok(Loaded { instance, source: format!("in={}", path.display()) });
    }
    let family = opts.family.ok_or_else(|| CliError::Usage("give --in PATH or --family".into()))?;
    let k = opts.k.unwrap_or(4);
    let m = opts.m.unwrap_or(2);
    let (instance, source) = match family {
        Family::WfHard => (gen_wf_hard_instance(k, m)?.instance, format!("family=wf-hard k={k} m={m}")),
        Family::RankHard => (gen_ranking_hard_instance(k, m)?.instance, format!("family=rank-hard k={k} m={m}")),
        Family::WfHardGeneral => {
            let copies = opts.copies.unwrap_or(1);
            (gen_generalized_hard_instance(k, m, copies)?.instance, format!("family=wf-hard-general k={k} m={m} L={copies}"))
        }
        Family::Random => {
            let n = opts.n.unwrap_or(8);
            let p = opts.p.unwrap_or(0.5);
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Usage(format!("--p {p} is outside [0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed());
            let inst = random_instance(&mut rng, n, p, !opts.general);
            (inst, format!("family=random n={n} p={p} bipartite={}", !opts.general))
        }
        Family::Stationary => return Err(CliError::Usage("the stationary family only applies to report".into())),
    };
    if opts.relabel {
        let (relabeled, _) = random_relabel(&instance, opts.seed());
        return Ok(Loaded { instance: relabeled, source: format!("{source} relabel=true") });
    }
    Ok(Loaded { instance, source })
}

fn opt_value(instance: &Instance) -> f64 {
    match opt_bipartite(instance) {
        Ok(opt) => opt.value(),
        Err(_) => opt_fractional_general(instance).value(),
    }
}

fn cmd_gen(opts: &Opts) -> CmdResult {
    let clock = Stopwatch::start("gen", opts.seed());
    let loaded = load(opts)?;
    let comments = [clock.stable_comment(), loaded.source.clone()];
    let text = if opts.trace { write_trace(&emit_edge_arrival_trace(&loaded.instance), &comments) } else { write_instance(&loaded.instance, &comments) };
    emit(opts, &text)?;
    let inst = &loaded.instance;
    eprintln!(
        "{}",
        json!({
            "meta": clock.metadata(),
            "vertices": inst.vertex_count(),
            "edges": inst.edge_count(),
            "opt": opt_value(inst),
        })
    );
    Ok(Status::Pass)
}

fn cmd_waterfill(opts: &Opts) -> CmdResult {
    let clock = Stopwatch::start("waterfill", opts.seed());
    let loaded = load(opts)?;
    let inst = &loaded.instance;
    let outcome = WaterFilling::new(linear_gain()).log_pours(false).run(inst);
    let target = two_minus_sqrt2();
    let cert = certify_duals(&outcome, inst, target)?;
    let ratio = achieved_ratio(&outcome, inst).ok();
    let status = if cert.pass { Status::Pass } else { Status::Fail };
    eprintln!("waterfill: primal={} ratio={ratio:?} certificate={}", outcome.primal(), if cert.pass { "pass" } else { "FAIL" });
    match opts.format_or(Format::Json) {
        Format::Csv => emit(opts, &write_outcome_csv(inst, &outcome, &[clock.comment(), loaded.source])),
        Format::Json => emit_json(
            opts,
            &clock,
            &json!({
                "source": loaded.source,
                "vertices": inst.vertex_count(),
                "edges": inst.edge_count(),
                "primal": outcome.primal(),
                "dual": outcome.dual(),
                "opt": opt_value(inst),
                "ratio": ratio,
                "target": target,
                "cert": cert,
            }),
        ),
    }?;
    Ok(status)
}

fn cmd_stationary(opts: &Opts) -> CmdResult {
    let k = opts.k.unwrap_or(1000);
    let clock = Stopwatch::start("stationary", opts.seed());
    let prof = stationary_profile(k)?;
    let target = two_minus_sqrt2();
    match opts.format_or(Format::Json) {
        Format::Csv => {
            use std::fmt::Write as _;
            let mut text = format!("# {}\nk,ratio,target,gap,iterations\n", clock.comment());
            let _ = writeln!(text, "{k},{},{target},{},{}", prof.ratio, prof.ratio - target, prof.iterations);
            text.push_str("i,a,cutoff,p_star\n");
            for i in 0..k {
                let _ = writeln!(text, "{},{},{},{}", i + 1, prof.a[i], prof.cutoff[i], prof.p_star[i]);
            }
            emit(opts, &text)?;
        }
        Format::Json => emit_json(
            opts,
            &clock,
            &json!({
                "k": k,
                "ratio": prof.ratio,
                "target": target,
                "gap": prof.ratio - target,
                "iterations": prof.iterations,
                "distance_to_tau": prof.distance_to_tau(),
                "a": prof.a,
                "cutoff": prof.cutoff,
                "p_star": prof.p_star,
            }),
        )?,
    }
    Ok(Status::Pass)
}

fn cmd_ranking(opts: &Opts) -> CmdResult {
    let seed = opts.seed();
    let trials = opts.trials.unwrap_or(1000);
    let clock = Stopwatch::start("ranking", seed);
    if opts.input.is_none() && opts.family == Some(Family::RankHard) {
        let (k, m) = (opts.k.unwrap_or(100), opts.m.unwrap_or(50));
        let hard = gen_ranking_hard_instance(k, m)?;
        let runs = parallel::hard_trials(&hard, trials, seed);
        let summary = HardRatio::from_trials(&hard, seed, &runs);
        eprintln!("ranking: bulk={} ± {} overall={}", summary.bulk.mean, summary.bulk.stderr, summary.overall.mean);
        match opts.format_or(Format::Json) {
            Format::Csv => {
                let opt = k * m;
                let log: Vec<TrialRecord> =
                    runs.iter().map(|r| TrialRecord { trial: r.trial, seed, matched: r.matched, opt, ratio: r.matched as f64 / opt as f64 }).collect();
                emit(opts, &write_trial_log(&log, &[clock.comment(), format!("family=rank-hard k={k} m={m}")]))?;
            }
            Format::Json => emit_json(opts, &clock, &json!({ "family": "rank-hard", "target": omega_constant(), "result": summary }))?,
        }
        return Ok(Status::Pass);
    }
    let loaded = load(opts)?;
    let (estimate, log) = parallel::estimate_ratio_logged(&loaded.instance, trials, seed)?;
    eprintln!("ranking: ratio={} ± {}", estimate.mean, estimate.stderr);
    match opts.format_or(Format::Json) {
        Format::Csv => emit(opts, &write_trial_log(&log, &[clock.comment(), loaded.source]))?,
        Format::Json => {
            emit_json(opts, &clock, &json!({ "source": loaded.source, "trials": trials, "opt": log.first().map(|r| r.opt), "estimate": estimate }))?
        }
    }
    Ok(Status::Pass)
}

fn cmd_thresholds(opts: &Opts) -> CmdResult {
    let clock = Stopwatch::start("thresholds", opts.seed());
    let loaded = load(opts)?;
    let inst = &loaded.instance;
    let n = inst.vertex_count();
    let (u, v) = match (opts.u, opts.v) {
        (Some(u), Some(v)) if u < n && v < n => (VertexId::new(u), VertexId::new(v)),
        (Some(_), Some(_)) => return Err(CliError::Usage("--u/--v out of range".into())),
        (None, None) => {
            let &(a, b) = inst.edges().first().ok_or_else(|| CliError::Usage("instance has no edges".into()))?;
            if inst.deadline_step(a) < inst.deadline_step(b) {
                (a, b)
            } else {
                (b, a)
            }
        }
        _ => return Err(CliError::Usage("give both --u and --v".into())),
    };
    let ranks = RankVector::random(n, &mut trial_rng(opts.seed(), 0));
    match thresholds(inst, u, v, &ranks) {
        Ok(report) => {
            emit_json(opts, &clock, &report)?;
            Ok(if report.constancy_pass { Status::Pass } else { Status::Fail })
        }
        Err(e @ fomatch_core::Error::ConstancyViolation(..)) => {
            eprintln!("thresholds: {e}");
            Ok(Status::Fail)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_verify(opts: &Opts) -> CmdResult {
    let clock = Stopwatch::start("verify", opts.seed());
    let suite = SuiteOptions { seed: opts.seed(), tol: opts.tol, plateau: opts.plateau, cases: opts.cases.unwrap_or(SuiteOptions::default().cases) };
    let report = run_suite(opts.only.as_deref(), &suite).map_err(|e| CliError::Usage(e.to_string()))?;
    for c in &report.checks {
        eprintln!("{:5} {}/{} residual={:e} tol={:e}", if c.pass { "pass" } else { "FAIL" }, c.check, c.identity, c.max_residual, c.tolerance);
    }
    emit_json(opts, &clock, &report)?;
    Ok(if report.pass { Status::Pass } else { Status::Fail })
}

/// Every target, computed from first principles.
pub fn constants_table() -> Vec<(&'static str, f64)> {
    let ranking = RankingGain::new();
    vec![
        ("sqrt2", SQRT_2),
        ("two_minus_sqrt2", two_minus_sqrt2()),
        ("linear_gain_area", linear_gain_area()),
        ("omega", omega_constant()),
        ("omega_fixed_point", omega_fixed_point()),
        ("ranking_gain_constant", ranking_gain_constant()),
        ("ranking_gain_breakpoint", ranking.breakpoint()),
        ("ranking_gain_plateau", ranking.plateau()),
        ("ranking_gain_area", ranking.integral(1.0)),
        ("special_c", SpecialFunctions::new().c()),
    ]
}

fn cmd_constants(opts: &Opts) -> CmdResult {
    let clock = Stopwatch::start("constants", opts.seed());
    let table = constants_table();
    match opts.format_or(Format::Json) {
        Format::Csv => {
            let mut text = format!("# {}\nname,value\n", clock.comment());
            for (name, value) in &table {
                text.push_str(&format!("{name},{value}\n"));
            }
            emit(opts, &text)?;
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = table.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            emit_json(opts, &clock, &json!({ "constants": map }))?;
        }
    }
    Ok(Status::Pass)
}

fn cmd_report(opts: &Opts) -> CmdResult {
    let seed = opts.seed();
    let clock = Stopwatch::start("report", seed);
    let families: Vec<SweepFamily> = match opts.family {
        None => vec![SweepFamily::WfHard, SweepFamily::RankHard, SweepFamily::Stationary],
        Some(Family::WfHard) => vec![SweepFamily::WfHard],
        Some(Family::RankHard) => vec![SweepFamily::RankHard],
        Some(Family::Stationary) => vec![SweepFamily::Stationary],
        Some(other) => return Err(CliError::Usage(format!("report has no sweep for {other:?}"))),
    };
    let ks = (!opts.ks.is_empty()).then_some(opts.ks.as_slice());
    let ks = ks.or(opts.k.as_ref().map(std::slice::from_ref));
    let points = default_points(&families, ks, opts.m, opts.trials.unwrap_or(1000), seed);
    let rows = run_sweep(&points)?;
    match opts.format_or(Format::Csv) {
        Format::Csv => emit(opts, &write_report_csv(&rows, &[clock.comment()]))?,
        Format::Json => emit_json(opts, &clock, &json!({ "rows": rows }))?,
    }
    Ok(Status::Pass)
}
