use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, CommGraph};

/// What malicious agents transmit each round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryStrategy {
    /// Always the same value.
    Constant { value: f64 },
    /// Independent uniform draws on `[-eta, eta]`.
    BoundedRandom { eta: f64 },
    /// The state legitimate agent `source` held `lag` rounds ago (its initial
    /// state before that).
    Replay { source: AgentId, lag: usize },
}

impl AdversaryStrategy {
    /// Checks that every emitted value stays within `[-eta, eta]` given
    /// initial states bounded by `eta`.
    pub fn validate(&self, graph: &CommGraph, eta: f64) -> Result<()> {
        match *self {
            AdversaryStrategy::Constant { value } if value.abs() > eta => {
                Err(Error::Config(format!("adversary value {value} exceeds the state bound {eta}")))
            }
            AdversaryStrategy::BoundedRandom { eta: bound } if !(bound >= 0.0 && bound <= eta) => {
                Err(Error::Config(format!("adversary bound {bound} must lie in [0, {eta}]")))
            }
            AdversaryStrategy::Replay { source, .. } if graph.legit_index(source).is_none() => {
                Err(Error::Config(format!("replay source {source} is not a legitimate agent")))
            }
            _ => Ok(()),
        }
    }

    /// Value transmitted at round `t`. `history[s]` holds the legitimate
    /// states of round `s` for `s <= t`.
    pub fn emit<R: Rng + ?Sized>(&self, graph: &CommGraph, t: usize, history: &[Vec<f64>], rng: &mut R) -> f64 {
        match *self {
            AdversaryStrategy::Constant { value } => value,
            AdversaryStrategy::BoundedRandom { eta } => {
                if eta == 0.0 {
                    0.0
                } else {
                    rng.random_range(-eta..=eta)
                }
            }
            AdversaryStrategy::Replay { source, lag } => {
                let col = graph.legit_index(source).expect("validated replay source");
                history[t.saturating_sub(lag)][col]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn graph() -> CommGraph {
        CommGraph::new(3, &[2], &[(0, 1), (1, 0), (0, 2)]).unwrap()
    }

    #[test]
    fn values_respect_bound() {
        let g = graph();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let adv = AdversaryStrategy::BoundedRandom { eta: 2.0 };
        adv.validate(&g, 2.0).unwrap();
        let history = vec![vec![0.0, 0.0]];
        for _ in 0..1000 {
            assert!(adv.emit(&g, 0, &history, &mut rng).abs() <= 2.0);
        }
        assert!(AdversaryStrategy::Constant { value: 3.0 }.validate(&g, 2.0).is_err());
        assert!(AdversaryStrategy::Replay { source: 2, lag: 1 }.validate(&g, 2.0).is_err());
    }

    #[test]
    fn replay_reads_lagged_state() {
        let g = graph();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let adv = AdversaryStrategy::Replay { source: 1, lag: 2 };
        let history = vec![vec![0.0, 10.0], vec![0.0, 11.0], vec![0.0, 12.0], vec![0.0, 13.0]];
        assert_eq!(adv.emit(&g, 0, &history, &mut rng), 10.0);
        assert_eq!(adv.emit(&g, 1, &history, &mut rng), 10.0);
        assert_eq!(adv.emit(&g, 3, &history, &mut rng), 11.0);
    }
}
