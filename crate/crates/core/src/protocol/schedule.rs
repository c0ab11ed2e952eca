use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stop summing the tail of an exponential schedule once its remaining mass
/// is below this.
const TAIL_TOL: f64 = 1e-12;

/// Confidence schedule `lambda_t`: the weight each legitimate agent keeps on
/// its own initial state at round `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfidenceSchedule {
    /// `c * exp(-gamma * t)`.
    Exponential {
        c: f64,
        gamma: f64,
    },
    /// 1 before `t0`, 0 from `t0` on: the observation-window baseline.
    StepWindow {
        t0: usize,
    },
    Constant {
        lambda: f64,
    },
    Zero,
}

impl ConfidenceSchedule {
    pub fn exponential(c: f64, gamma: f64) -> Result<Self> {
        let s = ConfidenceSchedule::Exponential { c, gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn step_window(t0: usize) -> Self {
        ConfidenceSchedule::StepWindow { t0 }
    }

    pub fn constant(lambda: f64) -> Result<Self> {
        let s = ConfidenceSchedule::Constant { lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConfidenceSchedule::Exponential { c, gamma } => {
                if !(c > 0.0 && c < 1.0) {
                    return Err(Error::Config(format!("exponential schedule needs c in (0, 1), got {c}")));
                }
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::Config(format!("exponential schedule needs gamma > 0, got {gamma}")));
                }
                Ok(())
            }
            ConfidenceSchedule::Constant { lambda } if !(0.0..=1.0).contains(&lambda) => {
                Err(Error::Config(format!("constant schedule needs lambda in [0, 1], got {lambda}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: usize) -> f64 {
        match *self {
            ConfidenceSchedule::Exponential { c, gamma } => c * (-gamma * t as f64).exp(),
            ConfidenceSchedule::StepWindow { t0 } => {
                if t < t0 {
                    1.0
                } else {
                    0.0
                }
            }
            ConfidenceSchedule::Constant { lambda } => lambda,
            ConfidenceSchedule::Zero => 0.0,
        }
    }

    /// `lambda_0, ..., lambda_{len-1}`.
    pub fn series(&self, len: usize) -> Vec<f64> {
        (0..len).map(|t| self.eval(t)).collect()
    }

    /// Whether `lambda_t -> 0`.
    pub fn is_vanishing(&self) -> bool {
        !matches!(*self, ConfidenceSchedule::Constant { lambda } if lambda > 0.0)
    }

    /// Infinite product `prod_{k >= t} (1 - lambda_k)`.
    pub fn tail_product(&self, t: usize) -> f64 {
        match *self {
            ConfidenceSchedule::Exponential { c, gamma } => {
                let ratio = (-gamma).exp();
                let mut log = 0.0;
                let mut k = t;
                loop {
                    let lambda = c * (-gamma * k as f64).exp();
                    log += (-lambda).ln_1p();
                    // sum_{j > k} lambda_j <= lambda_k * ratio / (1 - ratio)
                    if lambda * ratio / (1.0 - ratio) < TAIL_TOL {
                        break;
                    }
                    k += 1;
                }
                log.exp()
            }
            ConfidenceSchedule::StepWindow { t0 } => {
                if t < t0 {
                    0.0
                } else {
                    1.0
                }
            }
            ConfidenceSchedule::Constant { lambda } => {
                if lambda > 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            ConfidenceSchedule::Zero => 1.0,
        }
    }
}

impl fmt::Display for ConfidenceSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfidenceSchedule::Exponential { c, gamma } => write!(f, "exp:{c},{gamma}"),
            ConfidenceSchedule::StepWindow { t0 } => write!(f, "step:{t0}"),
            ConfidenceSchedule::Constant { lambda } => write!(f, "const:{lambda}"),
            ConfidenceSchedule::Zero => write!(f, "zero"),
        }
    }
}

/// Parses `exp:c,gamma`, `step:T0`, `const:lambda` or `zero`.
impl FromStr for ConfidenceSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("invalid schedule `{s}`: {why}"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("expected a number"));
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "exp" => {
                let (c, gamma) = args.split_once(',').ok_or_else(|| bad("expected exp:c,gamma"))?;
                ConfidenceSchedule::exponential(num(c)?, num(gamma)?)
            }
            "step" => {
                let t0 = args.trim().parse::<usize>().map_err(|_| bad("expected step:T0 with integer T0"))?;
                Ok(ConfidenceSchedule::step_window(t0))
            }
            "const" => ConfidenceSchedule::constant(num(args)?),
            "zero" if args.is_empty() => Ok(ConfidenceSchedule::Zero),
            _ => Err(bad("expected exp:c,gamma | step:T0 | const:lambda | zero")),
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn exponential_values() {
        let s = ConfidenceSchedule::exponential(0.9, 0.05).unwrap();
        assert_eq!(s.eval(0), 0.9);
        assert!((s.eval(100) - 0.9 * (-5.0f64).exp()).abs() < 1e-15);
        assert!((s.eval(100) - 0.006064).abs() < 1e-6);
    }

    #[test]
    fn step_window_edges() {
        let s = ConfidenceSchedule::step_window(50);
        assert_eq!(s.eval(49), 1.0);
        assert_eq!(s.eval(50), 0.0);
        assert_eq!(ConfidenceSchedule::step_window(0).eval(0), 0.0);
    }

    #[test]
    fn constructor_validation() {
        assert!(ConfidenceSchedule::exponential(1.0, 0.1).is_err());
        assert!(ConfidenceSchedule::exponential(0.5, 0.0).is_err());
        assert!(ConfidenceSchedule::constant(1.2).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for text in ["exp:0.9,0.05", "step:50", "const:0.25", "zero"] {
            let s: ConfidenceSchedule = text.parse().unwrap();
            assert_eq!(s.to_string(), text);
        }
        for text in ["exp:0.9", "exp:1.5,0.1", "step:-1", "const:x", "zero:1", "linear:3"] {
            assert!(matches!(text.parse::<ConfidenceSchedule>(), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn tail_product_matches_long_finite_product() {
        let s = ConfidenceSchedule::exponential(0.9, 0.05).unwrap();
        for t in [0, 3, 40] {
            let oracle: f64 = (t..20_000).map(|k| 1.0 - s.eval(k)).product();
            assert!((s.tail_product(t) - oracle).abs() < 1e-11, "t = {t}");
        }
        assert_eq!(ConfidenceSchedule::step_window(5).tail_product(4), 0.0);
        assert_eq!(ConfidenceSchedule::step_window(5).tail_product(5), 1.0);
    }

    proptest! {
        #[test]
        fn exponential_is_decreasing_in_unit_interval(c in 0.01f64..0.99, gamma in 0.001f64..5.0, t in 0usize..2000) {
            let s = ConfidenceSchedule::exponential(c, gamma).unwrap();
            let (a, b) = (s.eval(t), s.eval(t + 1));
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b < a || a == 0.0);
        }
    }
}
