//! Rayon fan-out for Monte Carlo work. Each trial draws from its own seeded
//! stream and results are collected in trial order, so the output is
//! identical to the sequential functions in `fomatch_core`.

use rayon::prelude::*;

use fomatch_core::ranking::{integral_opt, run_trial, Estimate, Simulator, TrialRecord};
use fomatch_core::ranking_hardness::{gen_ranking_hard_instance, hard_trial, HardRatio, HardTrial, RankingHardInstance};
use fomatch_core::{Instance, Result};

pub fn estimate_ratio_logged(instance: &Instance, trials: u64, seed: u64) -> Result<(Estimate, Vec<TrialRecord>)> {
    let opt = integral_opt(instance)?;
    let log: Vec<TrialRecord> = (0..trials).into_par_iter().map_init(Simulator::new, |sim, t| run_trial(sim, instance, opt, seed, t)).collect();
    Ok((Estimate::from_samples(log.iter().map(|r| r.ratio)), log))
}

pub fn hard_trials(hard: &RankingHardInstance, trials: u64, seed: u64) -> Vec<HardTrial> {
    (0..trials).into_par_iter().map_init(Simulator::new, |sim, t| hard_trial(sim, hard, seed, t)).collect()
}

pub fn hard_instance_ratio(k: usize, m: usize, trials: u64, seed: u64) -> Result<HardRatio> {
    let hard = gen_ranking_hard_instance(k, m)?;
    Ok(HardRatio::from_trials(&hard, seed, &hard_trials(&hard, trials, seed)))
}
