use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::error::{Error, Result};
use crate::protocol::{run_protocol, spread, ConfidenceSchedule, RunOptions, Trajectory};

/// Spread threshold, relative to `eta`, below which agents count as agreeing.
pub const CONSENSUS_TOL: f64 = 1e-3;

/// Scalar outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u64,
    /// Estimated common limit of the legitimate states.
    pub limit: f64,
    /// `|limit - x_ss*|`.
    pub final_deviation: f64,
    pub final_spread: f64,
    /// First round from which the spread stays below `CONSENSUS_TOL * eta`.
    pub time_to_consensus: Option<usize>,
    pub t_f: usize,
    pub t_f_m: usize,
    pub t_f_l: usize,
    /// `T_f` reached the horizon, so the true value is unknown.
    pub censored: bool,
    pub censored_m: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub mean_final_deviation: f64,
    pub std_final_deviation: f64,
    /// Mean over trials that reached consensus.
    pub mean_time_to_consensus: Option<f64>,
    pub consensus_trials: usize,
    pub censored_trials: usize,
    /// Trials whose realized `T_f` exceeds 50 rounds.
    pub late_classification_trials: usize,
}

/// Aggregated Monte Carlo results for one schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub schedule: ConfidenceSchedule,
    pub trials: usize,
    pub master_seed: u64,
    pub horizon: usize,
    /// `x_ss* = v^T x0`.
    pub nominal_consensus: f64,
    /// Trial mean of `(1/L) sum_i |x_i(t) - x_ss*|` for `t = 0..=horizon`.
    pub mean_deviation: Vec<f64>,
    /// Trial mean of the spread for `t = 0..=horizon`.
    pub mean_spread: Vec<f64>,
    pub per_trial: Vec<TrialSummary>,
    pub summary: EnsembleSummary,
}

impl EnsembleReport {
    /// Uncensored realized `T_f`.
    pub fn t_f_samples(&self) -> Vec<usize> {
        self.per_trial.iter().filter(|t| !t.censored).map(|t| t.t_f).collect()
    }

    /// Uncensored realized `T_f^M`.
    pub fn t_f_m_samples(&self) -> Vec<usize> {
        self.per_trial.iter().filter(|t| !t.censored_m).map(|t| t.t_f_m).collect()
    }
}

/// Limit of the legitimate states assuming the nominal weights are used from
/// the last round on: `v^T x` then follows
/// `v^T x(t+1) = lambda_t v^T x0 + (1 - lambda_t) v^T x(t)`.
///
/// For schedules that do not vanish there is no common limit and the trial
/// mean of the final states is returned instead.
pub(crate) fn estimated_limit(traj: &Trajectory, perron: &[f64], schedule: &ConfidenceSchedule) -> f64 {
    let dot = |x: &[f64]| perron.iter().zip(x).map(|(v, x)| v * x).sum::<f64>();
    let last = &traj.states[traj.horizon()];
    if !schedule.is_vanishing() {
        return last.iter().sum::<f64>() / last.len() as f64;
    }
    let tail = schedule.tail_product(traj.horizon());
    tail * dot(last) + (1.0 - tail) * dot(&traj.x0)
}

fn time_to_consensus(traj: &Trajectory, tol: f64) -> Option<usize> {
    let last_bad = (0..=traj.horizon()).rev().find(|&t| traj.spread(t) >= tol);
    match last_bad {
        None => Some(0),
        Some(t) if t == traj.horizon() => None,
        Some(t) => Some(t + 1),
    }
}

struct TrialOutcome {
    summary: TrialSummary,
    deviation: Vec<f64>,
    spread: Vec<f64>,
}

/// Runs `trials` independent seeded trials of one schedule.
///
/// Trials execute on the current rayon pool; the reduction runs in trial
/// order, so the report does not depend on the number of threads.
pub fn run_ensemble(
    scenario: &Scenario,
    schedule: &ConfidenceSchedule,
    trials: usize,
    master_seed: u64,
) -> Result<EnsembleReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    scenario.validate()?;
    schedule.validate()?;
    let perron = scenario.perron()?;
    let x_star: f64 = perron.iter().zip(&scenario.x0).map(|(v, x)| v * x).sum();
    let tol = CONSENSUS_TOL * scenario.eta;

    let outcomes: Vec<TrialOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let opts = RunOptions { horizon: scenario.horizon, master_seed, trial, record_weights: false };
            let traj =
                run_protocol(&scenario.graph, &scenario.trust, schedule, &scenario.adversary, &scenario.x0, &opts)?;
            let limit = estimated_limit(&traj, &perron, schedule);
            let deviation = traj
                .states
                .iter()
                .map(|x| x.iter().map(|v| (v - x_star).abs()).sum::<f64>() / x.len() as f64)
                .collect();
            let spread_series: Vec<f64> = traj.states.iter().map(|x| spread(x)).collect();
            let c = &traj.classification;
            let summary = TrialSummary {
                trial,
                limit,
                final_deviation: (limit - x_star).abs(),
                final_spread: *spread_series.last().unwrap(),
                time_to_consensus: time_to_consensus(&traj, tol),
                t_f: c.t_f,
                t_f_m: c.t_f_m,
                t_f_l: c.t_f_l,
                censored: c.censored,
                censored_m: c.censored_m,
            };
            Ok(TrialOutcome { summary, deviation, spread: spread_series })
        })
        .collect::<Result<_>>()?;

    let len = scenario.horizon + 1;
    let mut mean_deviation = vec![0.0; len];
    let mut mean_spread = vec![0.0; len];
    let mut per_trial = Vec::with_capacity(trials);
    for o in outcomes {
        for (acc, v) in mean_deviation.iter_mut().zip(&o.deviation) {
            *acc += v;
        }
        for (acc, v) in mean_spread.iter_mut().zip(&o.spread) {
            *acc += v;
        }
        per_trial.push(o.summary);
    }
    let n = trials as f64;
    mean_deviation.iter_mut().for_each(|v| *v /= n);
    mean_spread.iter_mut().for_each(|v| *v /= n);

    let (mean, std) = mean_std(per_trial.iter().map(|t| t.final_deviation));
    let times: Vec<f64> = per_trial.iter().filter_map(|t| t.time_to_consensus).map(|t| t as f64).collect();
    let summary = EnsembleSummary {
        mean_final_deviation: mean,
        std_final_deviation: std,
        mean_time_to_consensus: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
        consensus_trials: per_trial.iter().filter(|t| t.final_spread < tol).count(),
        censored_trials: per_trial.iter().filter(|t| t.censored).count(),
        late_classification_trials: per_trial.iter().filter(|t| t.t_f > 50).count(),
    };
    Ok(EnsembleReport {
        schedule: *schedule,
        trials,
        master_seed,
        horizon: scenario.horizon,
        nominal_consensus: x_star,
        mean_deviation,
        mean_spread,
        per_trial,
        summary,
    })
}

/// Sample mean and (n - 1)-normalized standard deviation.
pub(crate) fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One ensemble per schedule, all on the same trust streams.
pub fn sweep(
    scenario: &Scenario,
    schedules: &[ConfidenceSchedule],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<EnsembleReport>> {
    schedules.iter().map(|s| run_ensemble(scenario, s, trials, master_seed)).collect()
}

/// Paired exponential-versus-window comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowComparison {
    pub exponential: EnsembleReport,
    pub window: EnsembleReport,
    /// Rounds where the two mean-deviation curves swap order.
    pub crossings: Vec<usize>,
    /// Trials in which the exponential arm ends closer to `x_ss*`.
    pub exponential_wins: usize,
}

pub fn compare_with_window_baseline(
    scenario: &Scenario,
    c: f64,
    gamma: f64,
    t0: usize,
    trials: usize,
    master_seed: u64,
) -> Result<WindowComparison> {
    let exponential = run_ensemble(scenario, &ConfidenceSchedule::exponential(c, gamma)?, trials, master_seed)?;
    let window = run_ensemble(scenario, &ConfidenceSchedule::step_window(t0), trials, master_seed)?;
    let sign: Vec<i8> = exponential
        .mean_deviation
        .iter()
        .zip(&window.mean_deviation)
        .map(|(a, b)| {
            if a < b {
                -1
            } else if a > b {
                1
            } else {
                0
            }
        })
        .collect();
    let mut crossings = Vec::new();
    let mut prev = 0;
    for (t, &s) in sign.iter().enumerate() {
        if s != 0 {
            if prev != 0 && s != prev {
                crossings.push(t);
            }
            prev = s;
        }
    }
    let exponential_wins = exponential
        .per_trial
        .iter()
        .zip(&window.per_trial)
        .filter(|(e, w)| e.final_deviation < w.final_deviation)
        .count();
    Ok(WindowComparison { exponential, window, crossings, exponential_wins })
}
