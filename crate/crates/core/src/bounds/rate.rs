use serde::{Deserialize, Serialize};

use super::{exp_lambda, BoundParams, Clamped};
use crate::error::{Error, Result};
use crate::protocol::ConfidenceSchedule;

/// Convergence-rate bound at one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    pub t: usize,
    pub rho_l: f64,
    pub rho_m: f64,
    /// `min(b m sqrt(L) rho_l + D_1 rho_m, 2)`.
    pub rho: Clamped,
}

/// `C(n, k) sigma^{n - k}`, zero when `n < k`.
fn mode_decay(n: i64, m_sigma: usize, sigma: f64) -> f64 {
    let k = m_sigma as i64;
    if n < k {
        return 0.0;
    }
    let mut binom = 1.0;
    for i in 0..k {
        binom = binom * (n - i) as f64 / (i + 1) as f64;
    }
    binom * sigma.powi((n - k) as i32)
}

/// Precomputed schedule products for rounds `0..len`.
#[derive(Debug, Clone)]
pub struct RateEvaluator {
    params: BoundParams,
    lambdas: Vec<f64>,
    /// `log_prefix[t] = sum_{k < t} ln(1 - lambda_k)`.
    log_prefix: Vec<f64>,
    /// `tail[t] = prod_{k >= t} (1 - lambda_k)`.
    tail: Vec<f64>,
}

impl RateEvaluator {
    /// Evaluator valid for rounds `t < len`.
    pub fn new(params: &BoundParams, len: usize) -> Result<Self> {
        params.validate()?;
        let lambdas: Vec<f64> = (0..len).map(|k| exp_lambda(params.c, params.gamma, k)).collect();
        let mut log_prefix = Vec::with_capacity(len + 1);
        log_prefix.push(0.0);
        for &l in &lambdas {
            log_prefix.push(log_prefix.last().unwrap() + (-l).ln_1p());
        }
        let schedule = ConfidenceSchedule::exponential(params.c, params.gamma)?;
        let mut tail = vec![0.0; len];
        if len > 0 {
            tail[len - 1] = schedule.tail_product(len - 1);
            for t in (0..len - 1).rev() {
                tail[t] = tail[t + 1] * (1.0 - lambdas[t]);
            }
        }
        Ok(Self { params: params.clone(), lambdas, log_prefix, tail })
    }

    /// `prod_{k=s}^{t} (1 - lambda_k)`, 1 when empty.
    fn prod(&self, s: usize, t: i64) -> f64 {
        if t < s as i64 {
            1.0
        } else {
            (self.log_prefix[t as usize + 1] - self.log_prefix[s]).exp()
        }
    }

    fn check(&self, t: usize, t_f: usize) -> Result<()> {
        if t <= t_f {
            return Err(Error::Domain(format!("rate bound needs t > T_f, got t = {t}, T_f = {t_f}")));
        }
        if t >= self.lambdas.len() {
            return Err(Error::Domain(format!("round {t} beyond evaluator range {}", self.lambdas.len())));
        }
        Ok(())
    }

    /// Legitimate component evaluated term by term.
    pub fn rho_l(&self, t: usize, t_f: usize) -> Result<f64> {
        self.check(t, t_f)?;
        let p = &self.params;
        let ti = t as i64;
        let mut total = self.prod(0, ti - 1) * mode_decay(ti - t_f as i64, p.m_sigma, p.sigma);
        for k in 0..t {
            let start = t_f.max(k + 1) as i64;
            total += self.prod(k + 1, ti - 1) * self.lambdas[k] * mode_decay(ti - start, p.m_sigma, p.sigma);
        }
        Ok(total)
    }

    /// Malicious component.
    pub fn rho_m(&self, t: usize, t_f_m: usize) -> Result<f64> {
        if t >= self.lambdas.len() {
            return Err(Error::Domain(format!("round {t} beyond evaluator range {}", self.lambdas.len())));
        }
        let ti = t as i64;
        let weight: f64 = (0..t_f_m).map(|k| self.prod(k, ti - 1)).sum();
        Ok(self.rho_m_weighted(t, t_f_m, weight))
    }

    /// `rho_m` given `sum_{k < T_f^M} prod_{j=k}^{t-1} (1 - lambda_j)`.
    fn rho_m_weighted(&self, t: usize, t_f_m: usize, weight: f64) -> f64 {
        if weight == 0.0 {
            return 0.0;
        }
        let p = &self.params;
        let modes = p.b * p.m as f64 * mode_decay(t as i64 - t_f_m as i64, p.m_sigma, p.sigma);
        let drift = p.legit_count as f64 * p.v_max * (1.0 - self.tail[t]);
        weight * (modes + drift)
    }

    fn combine(&self, t: usize, rho_l: f64, rho_m: f64) -> RateBound {
        let p = &self.params;
        let raw = p.b * p.m as f64 * (p.legit_count as f64).sqrt() * rho_l + p.d1 * rho_m;
        RateBound { t, rho_l, rho_m, rho: Clamped::new(raw, 2.0) }
    }

    pub fn rate(&self, t: usize, t_f: usize, t_f_m: usize) -> Result<RateBound> {
        let rho_l = self.rho_l(t, t_f)?;
        let rho_m = self.rho_m(t, t_f_m)?;
        Ok(self.combine(t, rho_l, rho_m))
    }

    /// Bounds for `t = T_f + 1, ..., t_max`.
    ///
    /// With `m_sigma = 0` the legitimate component obeys
    /// `rho_l(t + 1) = (1 - lambda_t) sigma rho_l(t) + lambda_t` from
    /// `rho_l(T_f) = 1`, which makes the series linear in its length. The
    /// malicious weight shrinks by `1 - lambda_{t-1}` per round once
    /// `t > T_f >= T_f^M`.
    pub fn series(&self, t_f: usize, t_f_m: usize, t_max: usize) -> Result<Vec<RateBound>> {
        if t_max >= self.lambdas.len() {
            return Err(Error::Domain(format!("round {t_max} beyond evaluator range {}", self.lambdas.len())));
        }
        let p = &self.params;
        let mut out = Vec::with_capacity(t_max.saturating_sub(t_f));
        let mut legit = 1.0;
        let mut weight = None;
        for t in t_f + 1..=t_max {
            let rho_l = if p.m_sigma == 0 {
                let l = self.lambdas[t - 1];
                legit = (1.0 - l) * p.sigma * legit + l;
                legit
            } else {
                self.rho_l(t, t_f)?
            };
            let rho_m = if t_f_m <= t_f {
                let w = match weight {
                    None => (0..t_f_m).map(|k| self.prod(k, t as i64 - 1)).sum(),
                    Some(w) => w * (1.0 - self.lambdas[t - 1]),
                };
                weight = Some(w);
                self.rho_m_weighted(t, t_f_m, w)
            } else {
                self.rho_m(t, t_f_m)?
            };
            out.push(self.combine(t, rho_l, rho_m));
        }
        Ok(out)
    }

    /// `rho(t; k, k)`, defined as 2 for `t <= k`.
    pub fn rate_or_cap(&self, t: usize, k: usize) -> Result<f64> {
        if t <= k {
            return Ok(2.0);
        }
        Ok(self.rate(t, k, k)?.rho.value)
    }
}

/// Convergence-rate bound for fixed classification times.
pub fn convergence_rate_bound(params: &BoundParams, t: usize, t_f: usize, t_f_m: usize) -> Result<RateBound> {
    RateEvaluator::new(params, t + 1)?.rate(t, t_f, t_f_m)
}

/// Limits of the rate bound as `gamma -> inf` and `gamma -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateAsymptotes {
    pub gamma_inf: f64,
    pub gamma_zero: f64,
}

pub fn rate_asymptotes(params: &BoundParams, t: usize, t_f: usize, t_f_m: usize) -> Result<RateAsymptotes> {
    if t <= t_f {
        return Err(Error::Domain(format!("rate bound needs t > T_f, got t = {t}, T_f = {t_f}")));
    }
    let p = params;
    let bm = p.b * p.m as f64;
    let ti = t as i64;
    let gamma_inf = bm * (p.legit_count as f64).sqrt() * mode_decay(ti - t_f as i64, p.m_sigma, p.sigma)
        + bm * p.d1 * t_f_m as f64 * mode_decay(ti - t_f_m as i64, p.m_sigma, p.sigma);
    Ok(RateAsymptotes { gamma_inf, gamma_zero: 2.0 })
}

/// Bound on the expected distance from the limit at round `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRate {
    pub t: usize,
    /// Minimizing `k`.
    pub k_star: usize,
    /// `eta min_k (rho(t; k, k) + 2 p(k))`, capped at `2 eta`.
    pub bound: Clamped,
}

pub fn expected_rate_bound(params: &BoundParams, t: usize) -> Result<ExpectedRate> {
    let eval = RateEvaluator::new(params, t + 1)?;
    expected_rate_with(&eval, t)
}

pub(crate) fn expected_rate_with(eval: &RateEvaluator, t: usize) -> Result<ExpectedRate> {
    if t == 0 {
        return Err(Error::Domain("expected rate bound needs t >= 1".into()));
    }
    let p = &eval.params;
    let mut best = (f64::INFINITY, 1);
    for k in 1..=t {
        let tail = super::tail_bound_p(k, p.legit_links, p.malicious_links, p.e_l, p.e_m).value;
        let v = eval.rate_or_cap(t, k)? + 2.0 * tail;
        if v < best.0 {
            best = (v, k);
        }
    }
    Ok(ExpectedRate { t, k_star: best.1, bound: Clamped::new(p.eta * best.0, 2.0 * p.eta) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_convention() {
        assert_eq!(mode_decay(2, 3, 0.5), 0.0);
        assert_eq!(mode_decay(0, 0, 0.0), 1.0);
        assert!((mode_decay(5, 2, 0.5) - 10.0 * 0.125).abs() < 1e-15);
    }
}
