use serde::{Deserialize, Serialize};

use super::{exp_lambda, Clamped, ClassTimes};
use crate::error::{Error, Result};

/// Below this `x` the series form of `s(x)` is used; it converges like
/// `x^n`, so at most about 50 terms are needed.
const SERIES_CUTOFF: f64 = 0.5;

pub(crate) fn check_schedule(c: f64, gamma: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("c must lie in (0, 1), got {c}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

/// `s(x) = 1 + ln(1 - x) (1 - x) / x = sum_{n >= 1} x^n / (n (n + 1))`.
fn s_of(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let mut sum: f64 = 0.0;
        let mut power = x;
        let mut n = 1.0;
        while power > 1e-18 * sum.max(f64::MIN_POSITIVE) {
            sum += power / (n * (n + 1.0));
            power *= x;
            n += 1.0;
        }
        sum
    } else {
        1.0 + (-x).ln_1p() * (1.0 - x) / x
    }
}

/// `z(gamma; k) = -s(x) / gamma` with `x = c e^{-gamma (k + 1)}`.
pub fn z_value(gamma: f64, c: f64, k: usize) -> Result<f64> {
    check_schedule(c, gamma)?;
    let x = c * (-gamma * (k as f64 + 1.0)).exp();
    Ok(-s_of(x) / gamma)
}

/// Deviation bound due to legitimate agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegDeviation {
    pub autonomous: f64,
    pub input: f64,
    /// `min(autonomous + input, 1)`.
    pub total: Clamped,
}

/// Bound on the expected deviation caused by misclassified legitimate
/// neighbours, with `T_f` either plugged in or averaged over samples.
pub fn deviation_bound_leg(c: f64, gamma: f64, d_max: usize, t_f: &ClassTimes) -> Result<LegDeviation> {
    check_schedule(c, gamma)?;
    let samples = t_f.samples()?;
    let base = d_max as f64 + 1.0;
    let mean_tf = samples.iter().sum::<usize>() as f64 / samples.len() as f64;
    let autonomous = 2.0 * z_value(gamma, c, 0)?.exp() * (1.0 - base.powf(-mean_tf));

    let longest = samples.iter().copied().max().unwrap_or(0);
    // weight[k] = e^{z(gamma; k + 1)} lambda_k
    let weight: Vec<f64> = (0..longest.saturating_sub(1))
        .map(|k| Ok(z_value(gamma, c, k + 1)?.exp() * exp_lambda(c, gamma, k)))
        .collect::<Result<_>>()?;
    let per_sample = |tf: usize| -> f64 {
        (0..tf.saturating_sub(1)).map(|k| weight[k] * (1.0 - base.powi(-((tf - k - 1) as i32)))).sum()
    };
    let input = 2.0 * samples.iter().map(|&tf| per_sample(tf)).sum::<f64>() / samples.len() as f64;
    Ok(LegDeviation { autonomous, input, total: Clamped::new(autonomous + input, 1.0) })
}

/// Deviation bound due to malicious agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MalDeviation {
    pub zeta: f64,
    /// `D_M^2 zeta / 2`.
    pub u_mal: f64,
}

fn check_malicious_gap(e_m: f64) -> Result<()> {
    if !(e_m < 0.0) {
        return Err(Error::Domain(format!("malicious trust gap must be negative, got {e_m}")));
    }
    Ok(())
}

/// Coefficients and ratios of `(1 - lambda_{j+1})(1 - lambda_j) = sum_p A_p r_p^j`.
fn product_terms(c: f64, gamma: f64) -> [(f64, f64); 3] {
    let r = (-gamma).exp();
    [(1.0, 1.0), (-c * (1.0 + r), r), (c * c * r, r * r)]
}

/// Closed form of `sum_{k < T} (1 - lambda_{k+1})(1 - lambda_k) e^{-2 (k+1) E_M^2}`.
pub fn xi_value(t_f_m: usize, gamma: f64, c: f64, e_m: f64) -> Result<f64> {
    check_schedule(c, gamma)?;
    let e2 = 2.0 * e_m * e_m;
    if e2 == 0.0 {
        return Err(Error::Domain("malicious trust gap must be nonzero".into()));
    }
    let t = t_f_m as f64;
    let g = gamma;
    let first = -(-e2 * t).exp_m1() / e2.exp_m1();
    let second = c * (1.0 + (-g).exp()) * -(-(g + e2) * t).exp_m1() / (e2.exp() - (-g).exp());
    let third = c * c * (-g).exp() * -(-(2.0 * g + e2) * t).exp_m1() / (e2.exp() - (-2.0 * g).exp());
    Ok(first - second + third)
}

/// `zeta = sum_{k >= 0} xi(k) e^{-2 E_M^2 k}` in closed form.
pub fn zeta_value(gamma: f64, c: f64, e_m: f64) -> Result<f64> {
    check_schedule(c, gamma)?;
    check_malicious_gap(e_m)?;
    let e2 = 2.0 * e_m * e_m;
    let g = gamma;
    let head = 1.0 / -(-e2).exp_m1();
    let first = (head - 1.0 / -(-2.0 * e2).exp_m1()) / e2.exp_m1();
    let second = c * (1.0 + (-g).exp()) / (e2.exp() - (-g).exp()) * (head - 1.0 / -(-2.0 * e2 - g).exp_m1());
    let third = c * c * (-g).exp() / (e2.exp() - (-2.0 * g).exp()) * (head - 1.0 / -(-2.0 * e2 - 2.0 * g).exp_m1());
    Ok(first - second + third)
}

/// Bound on the expected deviation caused by malicious agents.
pub fn deviation_bound_mal(c: f64, gamma: f64, e_m: f64, malicious_links: usize) -> Result<MalDeviation> {
    let zeta = zeta_value(gamma, c, e_m)?;
    let d = malicious_links as f64;
    Ok(MalDeviation { zeta, u_mal: d * d * zeta / 2.0 })
}

/// Markov bound on `P(lim |x_i - x*| > eps)`: `min(eta (u_leg + u_mal) / eps, 1)`.
pub fn total_deviation_bound(eta: f64, eps: f64, u_leg: f64, u_mal: f64) -> Result<Clamped> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
    }
    Ok(Clamped::new(eta / eps * (u_leg + u_mal), 1.0))
}

/// `floor(ln(arg) / rate)`, or -1 when negative.
fn threshold(arg: f64, rate: f64) -> i64 {
    let k = (arg.ln() / rate).floor();
    if k < 0.0 {
        -1
    } else {
        k as i64
    }
}

/// Refined malicious deviation bound (already multiplied by `eta`).
///
/// Evaluates the three-piece expression with the thresholds
/// `k1 = floor(ln(D_M / (2 D_1)) / (2 E_M^2))` and `k2 = floor(ln(D_M) / (2 E_M^2))`
/// exactly: finite ranges are summed term by term using closed-form partial
/// sums of `S_1` and `S_2`, and the infinite tail uses geometric series.
pub fn tighter_mal_bound(c: f64, gamma: f64, e_m: f64, malicious_links: usize, d1: f64, eta: f64) -> Result<f64> {
    check_schedule(c, gamma)?;
    check_malicious_gap(e_m)?;
    if malicious_links == 0 {
        return Ok(0.0);
    }
    let dm = malicious_links as f64;
    let rate = 2.0 * e_m * e_m;
    let a = (-rate).exp();
    let k1 = threshold(dm / (2.0 * d1), rate);
    let k2 = threshold(dm, rate);
    let terms = product_terms(c, gamma);

    // sum_{j=lo}^{hi} r^j, zero when hi < lo
    let geo = |r: f64, lo: i64, hi: i64| -> f64 {
        if hi < lo {
            return 0.0;
        }
        let n = (hi - lo + 1) as f64;
        if r == 1.0 {
            n
        } else {
            r.powi(lo as i32) * -(n * r.ln()).exp_m1() / (1.0 - r)
        }
    };
    let s1 = |t: i64| d1 * terms.iter().map(|&(amp, r)| amp * geo(r, 0, t)).sum::<f64>();

    let piece1: f64 = (0..=k2).map(s1).sum::<f64>() * eta / 2.0;
    let piece2: f64 = (k2 + 1..=k1).map(|k| s1(k) * a.powi(k as i32)).sum::<f64>() * dm * eta / 2.0;

    // sum_{k >= k2 + 1} (S_1(k1) + S_2(k)) a^k
    let start = k2 + 1;
    let s1_part = s1(k1) * a.powi(start as i32) / (1.0 - a);
    // S_2(k) vanishes for k <= k1 + 1; beyond that it equals
    // (D_M / 2) a sum_p A_p (q_p^{k1+1} - q_p^k) / (1 - q_p) with q_p = r_p a
    let from = start.max(k1 + 1);
    let s2_part: f64 = dm / 2.0
        * a
        * terms
            .iter()
            .map(|&(amp, r)| {
                let q = r * a;
                let lead = q.powi((k1 + 1) as i32) * a.powi(from as i32) / (1.0 - a);
                let decay = (q * a).powi(from as i32) / (1.0 - q * a);
                amp * (lead - decay) / (1.0 - q)
            })
            .sum::<f64>();
    let piece3 = (s1_part + s2_part) * dm * eta / 2.0;
    Ok(piece1 + piece2 + piece3)
}
