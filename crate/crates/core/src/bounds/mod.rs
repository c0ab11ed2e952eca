//! Closed-form deviation, convergence-rate and classification-time bounds
//! for exponentially decaying confidence schedules `lambda_t = c e^{-gamma t}`.

mod deviation;
mod probability;
mod rate;

pub use deviation::{
    deviation_bound_leg, deviation_bound_mal, tighter_mal_bound, total_deviation_bound, xi_value, z_value, zeta_value,
    LegDeviation, MalDeviation,
};
pub use probability::{classification_pmf_bounds, misclassification_bound, tail_bound_p, PmfBounds};
pub use rate::{
    convergence_rate_bound, expected_rate_bound, rate_asymptotes, ExpectedRate, RateAsymptotes, RateBound,
    RateEvaluator,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CommGraph, SpectralProfile};
use crate::trust::TrustModel;

/// A bound after capping, with the uncapped value kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clamped {
    pub value: f64,
    pub raw: f64,
}

impl Clamped {
    pub fn new(raw: f64, cap: f64) -> Self {
        Self { value: if raw.is_nan() { cap } else { raw.min(cap) }, raw }
    }

    pub fn is_clamped(&self) -> bool {
        self.value != self.raw
    }
}

/// Classification time: a plug-in value or realized samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTimes {
    Fixed(usize),
    Samples(Vec<usize>),
}

impl ClassTimes {
    fn samples(&self) -> Result<&[usize]> {
        match self {
            ClassTimes::Fixed(t) => Ok(std::slice::from_ref(t)),
            ClassTimes::Samples(s) if s.is_empty() => Err(Error::Input("empty classification-time sample set".into())),
            ClassTimes::Samples(s) => Ok(s),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        let s = self.samples()?;
        Ok(s.iter().sum::<usize>() as f64 / s.len() as f64)
    }
}

pub(crate) fn exp_lambda(c: f64, gamma: f64, k: usize) -> f64 {
    c * (-gamma * k as f64).exp()
}

/// Every scalar the bounds depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub c: f64,
    pub gamma: f64,
    pub e_l: f64,
    pub e_m: f64,
    /// `d_M`: maximal in-degree of legitimate agents.
    pub d_max: usize,
    /// `D_M`: malicious-to-legitimate links.
    pub malicious_links: usize,
    /// `D_L`: legitimate-to-legitimate links.
    pub legit_links: usize,
    /// `D_1`: largest weight share malicious neighbours can get.
    pub d1: f64,
    pub eta: f64,
    pub legit_count: usize,
    pub sigma: f64,
    pub m_sigma: usize,
    pub m: usize,
    pub b: f64,
    pub v_max: f64,
    pub v_min: f64,
    pub t_f: ClassTimes,
    pub t_f_m: ClassTimes,
}

impl BoundParams {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        graph: &CommGraph,
        profile: &SpectralProfile,
        trust: &TrustModel,
        c: f64,
        gamma: f64,
        eta: f64,
        t_f: ClassTimes,
        t_f_m: ClassTimes,
    ) -> Self {
        let stats = graph.degree_stats();
        Self {
            c,
            gamma,
            e_l: trust.e_l(),
            e_m: trust.e_m(),
            d_max: stats.d_max,
            malicious_links: stats.malicious_links,
            legit_links: stats.legit_links,
            d1: stats.malicious_weight_cap,
            eta,
            legit_count: graph.legit_count(),
            sigma: profile.sigma,
            m_sigma: profile.m_sigma,
            m: profile.m,
            b: profile.b,
            v_max: profile.v_max,
            v_min: profile.v_min,
            t_f,
            t_f_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        deviation::check_schedule(self.c, self.gamma)?;
        if !(self.eta > 0.0) {
            return Err(Error::Domain(format!("eta must be positive, got {}", self.eta)));
        }
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(Error::Domain(format!("sigma must lie in [0, 1), got {}", self.sigma)));
        }
        if self.m < self.m_sigma + 1 {
            return Err(Error::Domain("Jordan block sizes must satisfy m >= m_sigma + 1".into()));
        }
        Ok(())
    }

    /// Whether trust observations are informative (`E_L > 0 > E_M`); the
    /// probabilistic bounds are vacuous otherwise.
    pub fn is_valid(&self) -> bool {
        self.e_l > 0.0 && self.e_m < 0.0
    }
}

/// Rate bound row with both components and the two schedule limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    #[serde(flatten)]
    pub bound: RateBound,
    pub p: Clamped,
    pub asymptotes: RateAsymptotes,
}

/// Every bound for one parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub params: BoundParams,
    /// False when `E_L <= 0` or `E_M >= 0`; probabilistic bounds then report
    /// their caps.
    pub valid: bool,
    pub u_leg: LegDeviation,
    pub mal: MalDeviation,
    /// `(epsilon, delta(epsilon))`.
    pub delta: Vec<(f64, Clamped)>,
    pub rate: Vec<RateRow>,
    pub expected_rate: Vec<ExpectedRate>,
    pub pmf: Vec<PmfBounds>,
    pub tighter_mal: f64,
}

/// Rounds, epsilons and classification-time range a report covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportGrid {
    pub t_max: usize,
    pub epsilons: Vec<f64>,
    pub expected_at: Vec<usize>,
    pub pmf_max_k: usize,
}

impl BoundsReport {
    /// Evaluates every bound. The rate series uses `T_f` and `T_f^M` rounded
    /// up from their means when samples are given.
    pub fn build(params: &BoundParams, grid: &ReportGrid) -> Result<Self> {
        params.validate()?;
        let valid = params.is_valid();
        let u_leg = deviation_bound_leg(params.c, params.gamma, params.d_max, &params.t_f)?;
        let mal = if valid {
            deviation_bound_mal(params.c, params.gamma, params.e_m, params.malicious_links)?
        } else {
            MalDeviation { zeta: f64::INFINITY, u_mal: f64::INFINITY }
        };
        let delta = grid
            .epsilons
            .iter()
            .map(|&eps| Ok((eps, total_deviation_bound(params.eta, eps, u_leg.total.value, mal.u_mal)?)))
            .collect::<Result<_>>()?;

        let t_f = params.t_f.mean()?.ceil() as usize;
        let t_f_m = params.t_f_m.mean()?.ceil() as usize;
        let horizon = grid.t_max.max(grid.expected_at.iter().copied().max().unwrap_or(0));
        let eval = RateEvaluator::new(params, horizon + 1)?;
        let rate = eval
            .series(t_f, t_f_m, grid.t_max)?
            .into_iter()
            .map(|bound| {
                Ok(RateRow {
                    p: probability_or_cap(params, bound.t),
                    asymptotes: rate_asymptotes(params, bound.t, t_f, t_f_m)?,
                    bound,
                })
            })
            .collect::<Result<_>>()?;
        let expected_rate = grid
            .expected_at
            .iter()
            .map(|&t| {
                let mut e = rate::expected_rate_with(&eval, t)?;
                if !valid {
                    e.bound = Clamped::new(f64::INFINITY, 2.0 * params.eta);
                }
                Ok(e)
            })
            .collect::<Result<_>>()?;
        let pmf = (0..=grid.pmf_max_k)
            .map(|k| classification_pmf_bounds(k, params.legit_links, params.malicious_links, params.e_l, params.e_m))
            .collect();
        let tighter_mal = if valid {
            tighter_mal_bound(params.c, params.gamma, params.e_m, params.malicious_links, params.d1, params.eta)?
        } else {
            f64::INFINITY
        };
        Ok(Self { params: params.clone(), valid, u_leg, mal, delta, rate, expected_rate, pmf, tighter_mal })
    }
}

fn probability_or_cap(params: &BoundParams, t: usize) -> Clamped {
    if params.is_valid() {
        tail_bound_p(t, params.legit_links, params.malicious_links, params.e_l, params.e_m)
    } else {
        Clamped::new(f64::INFINITY, 1.0)
    }
}
