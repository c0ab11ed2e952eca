use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{estimated_limit, mean_std};
use super::Scenario;
use crate::bounds::{deviation_bound_leg, deviation_bound_mal, tail_bound_p, BoundParams, ClassTimes, RateEvaluator};
use crate::error::{Error, Result};
use crate::protocol::{run_protocol, ConfidenceSchedule, RunOptions};

/// Absolute slack, relative to `eta`, for floating-point noise in the rate check.
const RATE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub k: usize,
    /// Fraction of trials with `T_f > k`; censored trials count as exceeding.
    pub empirical: f64,
    pub bound: f64,
}

/// Violation counts of the analytic bounds on one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValidation {
    pub trials: usize,
    /// Trials whose `T_f` reached the horizon; excluded from the rate and
    /// deviation checks.
    pub censored: usize,
    pub rate_checks: u64,
    /// Rounds with `||x(t) - x_ss||_inf > eta rho(t)`.
    pub rate_violations: u64,
    /// Largest `||x(t) - x_ss||_inf / (eta rho(t) + slack)` seen.
    pub worst_rate_ratio: f64,
    pub mean_deviation: f64,
    /// `3 sigma / sqrt(n)`.
    pub deviation_margin: f64,
    /// `eta (u_leg + u_mal)` with `T_f` averaged over the uncensored samples.
    pub deviation_bound: f64,
    pub deviation_ok: bool,
    pub tail: Vec<TailCheck>,
    pub tail_violations: usize,
    pub params: BoundParams,
}

impl BoundValidation {
    pub fn all_ok(&self) -> bool {
        self.rate_violations == 0 && self.tail_violations == 0 && self.deviation_ok
    }
}

struct TrialCheck {
    censored: bool,
    t_f: usize,
    t_f_m: usize,
    censored_m: bool,
    deviation: f64,
    checks: u64,
    violations: u64,
    worst: f64,
}

/// Checks the convergence-rate bound on every round after the realized
/// `T_f`, the expected limit deviation and the tail `P(T_f > k) <= p(k)` for
/// `k = 1..=max_k`.
pub fn validate_bounds(
    scenario: &Scenario,
    c: f64,
    gamma: f64,
    trials: usize,
    master_seed: u64,
    max_k: usize,
) -> Result<BoundValidation> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    scenario.validate()?;
    let schedule = ConfidenceSchedule::exponential(c, gamma)?;
    let profile = scenario.spectral_profile()?;
    let x_star: f64 = profile.perron.iter().zip(&scenario.x0).map(|(v, x)| v * x).sum();
    let eta = scenario.eta;
    let horizon = scenario.horizon;
    let mut params = BoundParams::from_parts(
        &scenario.graph,
        &profile,
        &scenario.trust,
        c,
        gamma,
        eta,
        ClassTimes::Fixed(0),
        ClassTimes::Fixed(0),
    );
    let eval = RateEvaluator::new(&params, horizon + 1)?;

    let checks: Vec<TrialCheck> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let opts = RunOptions { horizon, master_seed, trial, record_weights: false };
            let traj =
                run_protocol(&scenario.graph, &scenario.trust, &schedule, &scenario.adversary, &scenario.x0, &opts)?;
            let c = &traj.classification;
            let limit = estimated_limit(&traj, &profile.perron, &schedule);
            let mut out = TrialCheck {
                censored: c.censored,
                t_f: c.t_f,
                t_f_m: c.t_f_m,
                censored_m: c.censored_m,
                deviation: (limit - x_star).abs(),
                checks: 0,
                violations: 0,
                worst: 0.0,
            };
            if c.censored {
                return Ok(out);
            }
            for r in eval.series(c.t_f, c.t_f_m, horizon)? {
                let err = traj.states[r.t].iter().map(|x| (x - limit).abs()).fold(0.0, f64::max);
                let cap = eta * r.rho.value + RATE_SLACK * eta;
                out.checks += 1;
                if err > cap {
                    out.violations += 1;
                }
                out.worst = out.worst.max(err / cap);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let uncensored: Vec<&TrialCheck> = checks.iter().filter(|c| !c.censored).collect();
    let censored = trials - uncensored.len();
    let t_f_samples: Vec<usize> = uncensored.iter().map(|c| c.t_f).collect();

    let (mean_deviation, std) = mean_std(uncensored.iter().map(|c| c.deviation));
    let n = uncensored.len().max(1) as f64;
    let deviation_margin = 3.0 * std / n.sqrt();
    let deviation_bound = if t_f_samples.is_empty() {
        params.t_f = ClassTimes::Fixed(horizon);
        f64::INFINITY
    } else {
        params.t_f = ClassTimes::Samples(t_f_samples);
        let u_leg = deviation_bound_leg(c, gamma, params.d_max, &params.t_f)?.total.value;
        let u_mal = if params.malicious_links == 0 {
            0.0
        } else if params.is_valid() {
            deviation_bound_mal(c, gamma, params.e_m, params.malicious_links)?.u_mal
        } else {
            f64::INFINITY
        };
        eta * (u_leg + u_mal)
    };
    let t_f_m_samples: Vec<usize> = checks.iter().filter(|c| !c.censored_m).map(|c| c.t_f_m).collect();
    params.t_f_m =
        if t_f_m_samples.is_empty() { ClassTimes::Fixed(horizon) } else { ClassTimes::Samples(t_f_m_samples) };

    let tail: Vec<TailCheck> = (1..=max_k)
        .map(|k| {
            let exceed = checks.iter().filter(|c| c.censored || c.t_f > k).count();
            let bound = if params.is_valid() {
                tail_bound_p(k, params.legit_links, params.malicious_links, params.e_l, params.e_m).value
            } else {
                1.0
            };
            TailCheck { k, empirical: exceed as f64 / trials as f64, bound }
        })
        .collect();
    let tail_violations = tail.iter().filter(|c| c.empirical > c.bound).count();

    Ok(BoundValidation {
        trials,
        censored,
        rate_checks: uncensored.iter().map(|c| c.checks).sum(),
        rate_violations: uncensored.iter().map(|c| c.violations).sum(),
        worst_rate_ratio: uncensored.iter().map(|c| c.worst).fold(0.0, f64::max),
        mean_deviation,
        deviation_margin,
        deviation_bound,
        deviation_ok: mean_deviation <= deviation_bound + deviation_margin,
        tail,
        tail_violations,
        params,
    })
}
