use serde::{Deserialize, Serialize};

use super::Clamped;

/// Probability that a single edge is misclassified at round `t`:
/// `exp(-2 E^2 (t + 1))`.
pub fn misclassification_bound(e: f64, t: usize) -> f64 {
    (-2.0 * e * e * (t as f64 + 1.0)).exp()
}

/// Bound on `P(T_f > t)`:
/// `D_L e^{-2 t E_L^2} / (1 - e^{-2 E_L^2}) + D_M e^{-2 t E_M^2} / (1 - e^{-2 E_M^2})`, capped at 1.
pub fn tail_bound_p(t: usize, legit_links: usize, malicious_links: usize, e_l: f64, e_m: f64) -> Clamped {
    let term = |d: usize, e: f64| {
        if d == 0 {
            return 0.0;
        }
        let rate = 2.0 * e * e;
        d as f64 * (-rate * t as f64).exp() / -(-rate).exp_m1()
    };
    Clamped::new(term(legit_links, e_l) + term(malicious_links, e_m), 1.0)
}

/// Bounds on the probability mass of the classification times at `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfBounds {
    pub k: usize,
    /// Union bound `D_M e^{-2 E_M^2 k}` on `P(T_f^M = k)`.
    pub malicious: Clamped,
    /// Union bound `D_L e^{-2 E_L^2 k}` on `P(T_f^L = k)`.
    pub legit: Clamped,
    /// Sum of both on `P(T_f = k)`.
    pub total: Clamped,
    /// `1 - (1 - e^{-2 E_M^2 k})^{D_M}`.
    pub malicious_tight: f64,
    /// `1 - (1 - e^{-2 E_L^2 k})^{D_L}`.
    pub legit_tight: f64,
    /// `2 - (1 - e^{-2 E_M^2 k})^{D_M} - (1 - e^{-2 E_L^2 k})^{D_L}`, capped at 1.
    pub total_tight: Clamped,
}

pub fn classification_pmf_bounds(
    k: usize,
    legit_links: usize,
    malicious_links: usize,
    e_l: f64,
    e_m: f64,
) -> PmfBounds {
    let decay = |e: f64| (-2.0 * e * e * k as f64).exp();
    let (a_l, a_m) = (decay(e_l), decay(e_m));
    let union_m = malicious_links as f64 * a_m;
    let union_l = legit_links as f64 * a_l;
    let keep_m = (1.0 - a_m).powi(malicious_links as i32);
    let keep_l = (1.0 - a_l).powi(legit_links as i32);
    PmfBounds {
        k,
        malicious: Clamped::new(union_m, 1.0),
        legit: Clamped::new(union_l, 1.0),
        total: Clamped::new(union_m + union_l, 1.0),
        malicious_tight: 1.0 - keep_m,
        legit_tight: 1.0 - keep_l,
        total_tight: Clamped::new(2.0 - keep_m - keep_l, 1.0),
    }
}
