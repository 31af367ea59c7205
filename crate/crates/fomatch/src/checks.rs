//! The verification suite behind `fomatch verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use fomatch_core::constants::{linear_gain_area, omega_constant, omega_fixed_point, ranking_gain_constant, two_minus_sqrt2};
use fomatch_core::gain::{linear_gain, GainFunction, RankingGain};
use fomatch_core::generate::random_instance;
use fomatch_core::pair_gain::{analyze_edge, expected_edge_gain_with, lemma7_bound, GainMode};
use fomatch_core::ranking::check_lemma1_monotonicity;
use fomatch_core::special::SpecialFunctions;
use fomatch_core::waterfill::WaterFilling;
use fomatch_core::wf_hardness::{gen_wf_hard_instance, stationary_profile, verify_f_ode, verify_lemma3, ResidualReport};
use fomatch_core::{certify_duals, opt_bipartite, Instance, RankVector, VertexId};

pub const CHECKS: &[&str] =
    &["omega", "special-values", "lemma3", "f-ode", "stationary", "dual-cert", "lemma1", "lemma5", "lemma6", "fact1", "lemma7", "edge-gain"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: &'static str,
    pub identity: String,
    pub grid: usize,
    pub value: Option<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Replaces every default tolerance.
    pub tol: Option<f64>,
    /// Plateau of the Ranking gain, for fault injection.
    pub plateau: Option<f64>,
    /// Random cases per sampled check.
    pub cases: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0, tol: None, plateau: None, cases: 500 }
    }
}

impl SuiteOptions {
    fn gain(&self) -> RankingGain {
        self.plateau.map_or_else(RankingGain::new, RankingGain::with_plateau)
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn rng(&self, check: &str) -> ChaCha8Rng {
        let salt = CHECKS.iter().position(|c| *c == check).unwrap_or(0) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(salt);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown check `{0}`; expected one of: {list}", list = CHECKS.join(", "))]
pub struct UnknownCheck(pub String);

/// Deviation check `|value - target| < tol`.
fn closeness(check: &'static str, identity: &str, value: f64, target: f64, tol: f64) -> CheckResult {
    let residual = (value - target).abs();
    CheckResult {
        check,
        identity: identity.to_owned(),
        grid: 1,
        value: Some(value),
        max_residual: residual,
        tolerance: tol,
        pass: residual < tol,
        detail: None,
    }
}

/// Lower-bound check `value >= bound - tol`; the residual is the shortfall.
fn at_least(check: &'static str, identity: &str, grid: usize, value: f64, bound: f64, tol: f64) -> CheckResult {
    let shortfall = (bound - value).max(0.0);
    CheckResult {
        check,
        identity: identity.to_owned(),
        grid,
        value: Some(value),
        max_residual: shortfall,
        tolerance: tol,
        pass: value >= bound - tol,
        detail: None,
    }
}

fn from_residual(check: &'static str, r: ResidualReport, tol: Option<f64>) -> CheckResult {
    let tolerance = tol.unwrap_or(r.tolerance);
    let pass = if r.identity == "harmonic-bound" { r.pass } else { r.max_residual < tolerance };
    CheckResult { check, identity: r.identity.to_owned(), grid: r.grid, value: r.value, max_residual: r.max_residual, tolerance, pass, detail: None }
}

fn failed(check: &'static str, identity: &str, err: impl std::fmt::Display) -> CheckResult {
    CheckResult {
        check,
        identity: identity.to_owned(),
        grid: 0,
        value: None,
        max_residual: f64::INFINITY,
        tolerance: 0.0,
        pass: false,
        detail: Some(err.to_string()),
    }
}

/// Random bipartite instance with at least one edge, at most `max_n` vertices.
pub fn random_bipartite(rng: &mut ChaCha8Rng, max_n: usize) -> Instance {
    loop {
        let n = rng.gen_range(2..=max_n);
        let p = rng.gen_range(0.25..0.9);
        let inst = random_instance(rng, n, p, true);
        if inst.edge_count() > 0 {
            return inst;
        }
    }
}

/// Edges oriented so the first endpoint reaches its deadline first.
pub fn oriented_edges(inst: &Instance) -> Vec<(VertexId, VertexId)> {
    inst.edges().iter().map(|&(a, b)| if inst.deadline_step(a) < inst.deadline_step(b) { (a, b) } else { (b, a) }).collect()
}

fn omega(opts: &SuiteOptions) -> Vec<CheckResult> {
    let w = omega_constant();
    let c = ranking_gain_constant();
    vec![
        closeness("omega", "omega-exp-omega", w * w.exp(), 1.0, opts.tol(1e-13)),
        closeness("omega", "fixed-point", omega_fixed_point(), w, opts.tol(1e-12)),
        closeness("omega", "ranking-constant", c - c * (c / (1.0 - c)).ln(), w, opts.tol(1e-12)),
    ]
}

fn special_values(opts: &SuiteOptions) -> Vec<CheckResult> {
    let sf = SpecialFunctions::new();
    let c = sf.c();
    let mut out = Vec::new();
    for (identity, value, target, tol) in [
        ("f(0)=1", sf.f(0.0), 1.0, 1e-12),
        ("f(c)=0", sf.f(c), 0.0, 1e-12),
        ("h(0)=1", sf.h(0.0), 1.0, 1e-10),
        ("h(1)=0", sf.h(1.0), 0.0, 1e-10),
        ("G(1)=1-sqrt2/4", Ok(linear_gain().integral(1.0)), linear_gain_area(), 1e-12),
    ] {
        out.push(match value {
            Ok(v) => closeness("special-values", identity, v, target, opts.tol(tol)),
            Err(e) => failed("special-values", identity, e),
        });
    }
    out
}

fn lemma3(opts: &SuiteOptions) -> Vec<CheckResult> {
    match verify_lemma3(200) {
        Ok(r) => [r.cumulative, r.tau_integral, r.harmonic_bound].into_iter().map(|x| from_residual("lemma3", x, opts.tol)).collect(),
        Err(e) => vec![failed("lemma3", "lemma3", e)],
    }
}

fn f_ode(opts: &SuiteOptions) -> Vec<CheckResult> {
    match verify_f_ode(10_000) {
        Ok(r) => vec![from_residual("f-ode", r, opts.tol)],
        Err(e) => vec![failed("f-ode", "f-ode", e)],
    }
}

fn stationary(opts: &SuiteOptions) -> Vec<CheckResult> {
    match stationary_profile(1000) {
        Ok(p) => vec![closeness("stationary", "ratio_k(k=1000)", p.ratio, two_minus_sqrt2(), opts.tol(0.01))],
        Err(e) => vec![failed("stationary", "ratio_k(k=1000)", e)],
    }
}

/// Smallest `α_u + α_v` over random instances and a hard instance, and the
/// largest primal-dual gap.
pub fn dual_certificate_sweep(cases: usize, seed: u64, hard_k: usize, hard_m: usize) -> (f64, f64, usize) {
    let ratio = two_minus_sqrt2();
    let wf = WaterFilling::new(linear_gain()).log_pours(false);
    let mut instances: Vec<Instance> = (0..cases as u64)
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(case);
            let n = rng.gen_range(1..=12);
            let p = rng.gen_range(0.1..0.9);
            random_instance(&mut rng, n, p, case % 2 == 0)
        })
        .collect();
    if hard_k > 0 {
        instances.push(gen_wf_hard_instance(hard_k, hard_m).expect("hard instance size is within limits").instance);
    }
    instances
        .par_iter()
        .map(|inst| {
            let out = wf.run(inst);
            let cert = certify_duals(&out, inst, ratio).expect("outcome belongs to the instance");
            let min = if inst.edge_count() == 0 { f64::INFINITY } else { cert.min_edge_sum };
            (min, cert.objective_gap, 1)
        })
        .reduce(|| (f64::INFINITY, 0.0, 0), |a, b| (a.0.min(b.0), a.1.max(b.1), a.2 + b.2))
}

fn dual_cert(opts: &SuiteOptions) -> Vec<CheckResult> {
    let (min_sum, gap, count) = dual_certificate_sweep(opts.cases, opts.seed, 20, 20);
    let tol = opts.tol(1e-9);
    vec![
        at_least("dual-cert", "min-edge-sum", count, min_sum, two_minus_sqrt2(), tol),
        CheckResult {
            check: "dual-cert",
            identity: "objective-gap".into(),
            grid: count,
            value: Some(gap),
            max_residual: gap,
            tolerance: tol,
            pass: gap <= tol,
            detail: None,
        },
    ]
}

/// Runs `cases` random monotonicity checks; returns `(cases, violations)`.
pub fn lemma1_sweep(cases: usize, seed: u64) -> (usize, usize) {
    let violations: usize = (0..cases as u64)
        .into_par_iter()
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(case);
            let n = rng.gen_range(2..=8);
            let p = rng.gen_range(0.2..0.9);
            let inst = random_instance(&mut rng, n, p, true);
            let ranks = RankVector::random(n, &mut rng);
            let u = VertexId::new(rng.gen_range(0..n));
            check_lemma1_monotonicity(&inst, &ranks, u).expect("bipartite by construction").violations.len()
        })
        .sum();
    (cases, violations)
}

fn lemma1(opts: &SuiteOptions) -> Vec<CheckResult> {
    let (cases, violations) = lemma1_sweep(opts.cases * 10, opts.seed);
    vec![CheckResult {
        check: "lemma1",
        identity: "neighbor-never-better".into(),
        grid: cases,
        value: Some(violations as f64),
        max_residual: violations as f64,
        tolerance: 0.0,
        pass: violations == 0,
        detail: None,
    }]
}

/// Per-edge analyses over random small bipartite instances.
struct EdgeSweep {
    edges: usize,
    lemma5: f64,
    lemma6: f64,
    fact1: f64,
    above_bound: f64,
    error: Option<String>,
}

fn edge_sweep(opts: &SuiteOptions, check: &str) -> EdgeSweep {
    let gain = opts.gain();
    let mut rng = opts.rng(check);
    let cases: Vec<(Instance, RankVector)> = (0..opts.cases / 2)
        .map(|_| {
            let inst = random_bipartite(&mut rng, 8);
            let ranks = RankVector::random(inst.vertex_count(), &mut rng);
            (inst, ranks)
        })
        .collect();
    let results: Vec<_> =
        cases.par_iter().flat_map_iter(|(inst, ranks)| oriented_edges(inst).into_iter().map(move |(u, v)| analyze_edge(inst, u, v, ranks, gain))).collect();
    let mut s = EdgeSweep { edges: 0, lemma5: 0.0, lemma6: f64::INFINITY, fact1: f64::INFINITY, above_bound: f64::INFINITY, error: None };
    for r in results {
        match r {
            Ok(a) => {
                s.edges += 1;
                s.lemma5 = s.lemma5.max((a.lemma5_lhs - a.lemma5_rhs).abs());
                s.lemma6 = s.lemma6.min(a.lemma6_slack);
                s.fact1 = s.fact1.min(a.fact1_slack);
                s.above_bound = s.above_bound.min(a.expected_gain - a.lemma7_value);
            }
            Err(e) => s.error = Some(e.to_string()),
        }
    }
    s
}

fn with_error(mut r: CheckResult, error: &Option<String>) -> CheckResult {
    if let Some(e) = error {
        r.pass = false;
        r.detail = Some(e.clone());
    }
    r
}

fn lemma5(opts: &SuiteOptions) -> Vec<CheckResult> {
    let s = edge_sweep(opts, "lemma5");
    let tol = opts.tol(1e-9);
    let r = CheckResult {
        check: "lemma5",
        identity: "passive-gain-identity".into(),
        grid: s.edges,
        value: None,
        max_residual: s.lemma5,
        tolerance: tol,
        pass: s.lemma5 <= tol,
        detail: None,
    };
    vec![with_error(r, &s.error)]
}

fn lemma6(opts: &SuiteOptions) -> Vec<CheckResult> {
    let s = edge_sweep(opts, "lemma6");
    vec![with_error(at_least("lemma6", "active-gain-bound-slack", s.edges, s.lemma6, 0.0, opts.tol(1e-9)), &s.error)]
}

fn fact1(opts: &SuiteOptions) -> Vec<CheckResult> {
    let s = edge_sweep(opts, "fact1");
    vec![with_error(at_least("fact1", "single-threshold-bound-slack", s.edges, s.fact1, 0.0, opts.tol(1e-9)), &s.error)]
}

fn lemma7(opts: &SuiteOptions) -> Vec<CheckResult> {
    let gain = opts.gain();
    let tol = opts.tol(1e-9);
    let mut out = vec![match lemma7_bound(&gain, 100, &[gain.breakpoint()]) {
        Ok(b) => at_least("lemma7", "min-three-threshold-bound", 101, b.value, omega_constant(), tol),
        Err(e) => failed("lemma7", "min-three-threshold-bound", e),
    }];
    let s = edge_sweep(opts, "lemma7");
    out.push(with_error(at_least("lemma7", "edge-gain-above-bound", s.edges, s.above_bound, 0.0, tol), &s.error));
    out
}

/// Smallest exact expected gain over optimum-matching edges of random small
/// bipartite instances.
pub fn opt_edge_gain_sweep<G: GainFunction + Copy + Sync>(cases: usize, seed: u64, gain: G) -> Result<(usize, f64), String> {
    let results: Vec<Result<(usize, f64), String>> = (0..cases as u64)
        .into_par_iter()
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(case);
            let inst = random_bipartite(&mut rng, 8);
            let ranks = RankVector::random(inst.vertex_count(), &mut rng);
            let opt = opt_bipartite(&inst).map_err(|e| e.to_string())?;
            let mut worst = f64::INFINITY;
            for w in &opt.witness {
                let (u, v) = if inst.deadline_step(w.u) < inst.deadline_step(w.v) { (w.u, w.v) } else { (w.v, w.u) };
                let est = expected_edge_gain_with(&inst, u, v, &ranks, GainMode::Exhaustive, gain).map_err(|e| e.to_string())?;
                worst = worst.min(est.mean);
            }
            Ok((opt.witness.len(), worst))
        })
        .collect();
    let mut edges = 0;
    let mut worst = f64::INFINITY;
    for r in results {
        let (e, w) = r?;
        edges += e;
        worst = worst.min(w);
    }
    Ok((edges, worst))
}

fn edge_gain(opts: &SuiteOptions) -> Vec<CheckResult> {
    match opt_edge_gain_sweep(opts.cases, opts.seed, opts.gain()) {
        Ok((edges, worst)) => vec![at_least("edge-gain", "opt-edge-gain", edges, worst, omega_constant(), opts.tol(1e-9))],
        Err(e) => vec![failed("edge-gain", "opt-edge-gain", e)],
    }
}

fn run_one(name: &str, opts: &SuiteOptions) -> Vec<CheckResult> {
    match name {
        "omega" => omega(opts),
        "special-values" => special_values(opts),
        "lemma3" => lemma3(opts),
        "f-ode" => f_ode(opts),
        "stationary" => stationary(opts),
        "dual-cert" => dual_cert(opts),
        "lemma1" => lemma1(opts),
        "lemma5" => lemma5(opts),
        "lemma6" => lemma6(opts),
        "fact1" => fact1(opts),
        "lemma7" => lemma7(opts),
        "edge-gain" => edge_gain(opts),
        _ => unreachable!("names are validated by run_suite"),
    }
}

/// Runs every check, or only `only` (a comma-separated list of names).
pub fn run_suite(only: Option<&str>, opts: &SuiteOptions) -> Result<VerifyReport, UnknownCheck> {
    let selected: Vec<&str> = match only {
        None => CHECKS.to_vec(),
        Some(list) => {
            let mut names = Vec::new();
            for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let known = CHECKS.iter().find(|c| **c == name).ok_or_else(|| UnknownCheck(name.to_owned()))?;
                names.push(*known);
            }
            names
        }
    };
    let checks: Vec<CheckResult> = selected.iter().flat_map(|name| run_one(name, opts)).collect();
    Ok(VerifyReport { pass: checks.iter().all(|c| c.pass), checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SuiteOptions {
        SuiteOptions { cases: 20, ..SuiteOptions::default() }
    }

    #[test]
    fn cheap_checks_pass() {
        let rep = run_suite(Some("omega,special-values,f-ode,lemma1,lemma5,lemma6,fact1,edge-gain"), &quick()).unwrap();
        assert!(rep.pass, "{rep:#?}");
        assert!(rep.checks.iter().any(|c| c.check == "fact1"));
    }

    #[test]
    fn lemma7_catches_a_low_plateau() {
        let good = run_suite(Some("lemma7"), &quick()).unwrap();
        assert!(good.pass, "{good:#?}");
        let bad = run_suite(Some("lemma7"), &SuiteOptions { plateau: Some(0.6), ..quick() }).unwrap();
        assert!(!bad.checks[0].pass);
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert_eq!(run_suite(Some("nope"), &quick()), Err(UnknownCheck("nope".into())));
        assert_eq!(run_suite(Some("f-ode"), &quick()).unwrap().checks.len(), 1);
    }

    #[test]
    fn tolerance_override_applies() {
        let rep = run_suite(Some("omega"), &SuiteOptions { tol: Some(0.0), ..quick() }).unwrap();
        assert!(rep.checks.iter().all(|c| c.tolerance == 0.0));
    }
}
