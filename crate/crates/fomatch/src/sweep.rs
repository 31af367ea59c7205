//! Convergence tables for `fomatch report`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use fomatch_core::constants::{omega_constant, two_minus_sqrt2};
use fomatch_core::gain::linear_gain;
use fomatch_core::wf_hardness::{ratio_on_hard_instance, stationary_profile};
use fomatch_core::Result;

use crate::parallel::hard_instance_ratio;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepFamily {
    WfHard,
    RankHard,
    Stationary,
}

impl SweepFamily {
    pub fn name(self) -> &'static str {
        match self {
            SweepFamily::WfHard => "wf-hard",
            SweepFamily::RankHard => "rank-hard",
            SweepFamily::Stationary => "stationary",
        }
    }
}

/// One configuration point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub family: SweepFamily,
    pub k: usize,
    pub m: usize,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub family: SweepFamily,
    pub k: usize,
    pub m: Option<usize>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub ratio: f64,
    pub stderr: f64,
    pub target: f64,
    /// `ratio - target`.
    pub gap: f64,
}

fn evaluate(p: &SweepPoint) -> Result<ReportRow> {
    let row = |m, trials, seed, ratio, stderr, target: f64| ReportRow { family: p.family, k: p.k, m, trials, seed, ratio, stderr, target, gap: ratio - target };
    Ok(match p.family {
        SweepFamily::WfHard => {
            let rep = ratio_on_hard_instance(p.k, p.m, linear_gain())?;
            row(Some(p.m), None, None, rep.ratio, 0.0, two_minus_sqrt2())
        }
        SweepFamily::RankHard => {
            let r = hard_instance_ratio(p.k, p.m, p.trials, p.seed)?;
            row(Some(p.m), Some(p.trials), Some(p.seed), r.bulk.mean, r.bulk.stderr, omega_constant())
        }
        SweepFamily::Stationary => {
            let prof = stationary_profile(p.k)?;
            row(None, None, None, prof.ratio, 0.0, two_minus_sqrt2())
        }
    })
}

/// Evaluates every point; rows come back sorted by `(family, k, m)`.
pub fn run_sweep(points: &[SweepPoint]) -> Result<Vec<ReportRow>> {
    let mut rows = points.par_iter().map(evaluate).collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.family, r.k, r.m));
    Ok(rows)
}

/// The default sweeps: water-filling and Ranking hard instances of growing
/// `k`, and the stationary profile.
pub fn default_points(families: &[SweepFamily], ks: Option<&[usize]>, m: Option<usize>, trials: u64, seed: u64) -> Vec<SweepPoint> {
    let mut points = Vec::new();
    for &family in families {
        let (default_ks, default_m): (&[usize], usize) = match family {
            SweepFamily::WfHard => (&[10, 50, 200], 200),
            SweepFamily::RankHard => (&[10, 50, 100], 50),
            SweepFamily::Stationary => (&[10, 100, 1000], 0),
        };
        for &k in ks.unwrap_or(default_ks) {
            let m = if family == SweepFamily::Stationary { 0 } else { m.unwrap_or(default_m) };
            points.push(SweepPoint { family, k, m, trials, seed });
        }
    }
    points
}

pub fn write_report_csv(rows: &[ReportRow], comments: &[String]) -> String {
    let opt = |x: Option<String>| x.unwrap_or_default();
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str("family,k,m,trials,seed,ratio,stderr,target,gap\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.family.name(),
            r.k,
            opt(r.m.map(|x| x.to_string())),
            opt(r.trials.map(|x| x.to_string())),
            opt(r.seed.map(|x| x.to_string())),
            r.ratio,
            r.stderr,
            r.target,
            r.gap
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_is_sorted_and_deterministic() {
        let fams = [SweepFamily::Stationary, SweepFamily::RankHard, SweepFamily::WfHard];
        let points = default_points(&fams, Some(&[8, 4]), Some(8), 50, 3);
        let rows = run_sweep(&points).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!((rows[0].family, rows[0].k), (SweepFamily::WfHard, 4));
        assert_eq!(rows[5].family, SweepFamily::Stationary);
        assert_eq!(rows, run_sweep(&points).unwrap());
        let csv = write_report_csv(&rows, &[]);
        assert!(csv.starts_with("family,k,m,trials,seed,ratio,stderr,target,gap\nwf-hard,4,8,,,"));
        assert!(csv.contains("\nstationary,4,,,,"));
    }
}
