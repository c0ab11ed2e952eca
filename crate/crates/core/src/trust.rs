//! Trust observations, aggregate trust and classification times.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, CommGraph};

/// Distribution of a single trust observation on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrustDist {
    Beta([f64; 2]),
    Point(f64),
}

impl TrustDist {
    pub fn mean(&self) -> f64 {
        match *self {
            TrustDist::Beta([a, b]) => a / (a + b),
            TrustDist::Point(x) => x,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            TrustDist::Beta([a, b]) => a * b / ((a + b).powi(2) * (a + b + 1.0)),
            TrustDist::Point(_) => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            TrustDist::Beta([a, b]) if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() => Ok(()),
            TrustDist::Beta([a, b]) => Err(Error::Config(format!("Beta({a}, {b}) needs positive finite shapes"))),
            TrustDist::Point(x) if (0.0..=1.0).contains(&x) => Ok(()),
            TrustDist::Point(x) => Err(Error::Config(format!("point trust {x} outside [0, 1]"))),
        }
    }
}

/// Which distribution an edge draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Legitimate,
    Malicious,
}

/// Trust observation model: one distribution for transmissions from
/// legitimate agents and one for malicious agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustModel {
    pub legit: TrustDist,
    pub malicious: TrustDist,
}

impl TrustModel {
    pub fn new(legit: TrustDist, malicious: TrustDist) -> Result<Self> {
        legit.validate()?;
        malicious.validate()?;
        Ok(Self { legit, malicious })
    }

    /// Legitimate trust gap `E_L = E[alpha] - 1/2`.
    pub fn e_l(&self) -> f64 {
        self.legit.mean() - 0.5
    }

    /// Malicious trust gap `E_M = E[alpha] - 1/2`.
    pub fn e_m(&self) -> f64 {
        self.malicious.mean() - 0.5
    }

    /// Whether observations are informative: `E_L > 0 > E_M`. The protocol
    /// runs either way but the probabilistic bounds become vacuous.
    pub fn is_informative(&self) -> bool {
        self.e_l() > 0.0 && self.e_m() < 0.0
    }

    pub fn sampler(&self) -> Result<TrustSampler> {
        Ok(TrustSampler { legit: Sampler::new(self.legit)?, malicious: Sampler::new(self.malicious)? })
    }
}

#[derive(Debug, Clone)]
enum Sampler {
    Beta(Beta<f64>),
    Point(f64),
}

impl Sampler {
    fn new(dist: TrustDist) -> Result<Self> {
        dist.validate()?;
        Ok(match dist {
            TrustDist::Beta([a, b]) => Sampler::Beta(Beta::new(a, b).map_err(|e| Error::Config(e.to_string()))?),
            TrustDist::Point(x) => Sampler::Point(x),
        })
    }
}

/// Ready-to-draw form of a [`TrustModel`].
#[derive(Debug, Clone)]
pub struct TrustSampler {
    legit: Sampler,
    malicious: Sampler,
}

impl TrustSampler {
    pub fn sample<R: Rng + ?Sized>(&self, kind: EdgeKind, rng: &mut R) -> f64 {
        let sampler = match kind {
            EdgeKind::Legitimate => &self.legit,
            EdgeKind::Malicious => &self.malicious,
        };
        match sampler {
            Sampler::Beta(beta) => beta.sample(rng),
            Sampler::Point(x) => *x,
        }
    }
}

/// One trust observation for an edge of the given kind.
pub fn sample_trust<R: Rng + ?Sized>(model: &TrustModel, kind: EdgeKind, rng: &mut R) -> Result<f64> {
    Ok(model.sampler()?.sample(kind, rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LedgerRow {
    agent: AgentId,
    neighbors: Vec<AgentId>,
    beta: Vec<f64>,
}

/// Aggregate trust `beta_ij` for every in-edge of every legitimate agent.
///
/// Rows follow ascending legitimate id and entries follow
/// [`CommGraph::in_neighbors`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustLedger {
    rows: Vec<LedgerRow>,
    row_of: Vec<Option<usize>>,
    round: usize,
}

impl TrustLedger {
    pub fn new(graph: &CommGraph) -> Self {
        let rows: Vec<LedgerRow> = graph
            .legitimate()
            .into_iter()
            .map(|agent| {
                let neighbors = graph.in_neighbors(agent).to_vec();
                LedgerRow { agent, beta: vec![0.0; neighbors.len()], neighbors }
            })
            .collect();
        let row_of = (0..graph.agent_count()).map(|id| graph.legit_index(id)).collect();
        Self { rows, row_of, round: 0 }
    }

    /// Number of completed rounds.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Adds one round of observations, laid out like [`TrustLedger::beta`].
    pub fn update(&mut self, observations: &[Vec<f64>]) -> Result<()> {
        if observations.len() != self.rows.len() {
            return Err(Error::Input(format!(
                "expected observations for {} legitimate agents, got {}",
                self.rows.len(),
                observations.len()
            )));
        }
        for (row, obs) in self.rows.iter().zip(observations) {
            if obs.len() != row.neighbors.len() {
                return Err(Error::Input(format!(
                    "agent {} has {} in-edges but {} observations",
                    row.agent,
                    row.neighbors.len(),
                    obs.len()
                )));
            }
        }
        for (row, obs) in self.rows.iter_mut().zip(observations) {
            for (b, a) in row.beta.iter_mut().zip(obs) {
                *b += a - 0.5;
            }
        }
        self.round += 1;
        Ok(())
    }

    /// Aggregate trust of legitimate agent `i` in each of its in-neighbours.
    pub fn beta(&self, i: AgentId) -> Result<&[f64]> {
        Ok(&self.rows[self.row(i)?].beta)
    }

    /// Like [`TrustLedger::update`], drawing the observation of edge
    /// `from -> to` from `draw(to, from)` in ledger order.
    pub fn update_with(&mut self, mut draw: impl FnMut(AgentId, AgentId) -> f64) {
        for row in &mut self.rows {
            for (&j, b) in row.neighbors.iter().zip(row.beta.iter_mut()) {
                *b += draw(row.agent, j) - 0.5;
            }
        }
        self.round += 1;
    }

    /// `(agent, in-neighbours, beta)` for every legitimate agent, ascending.
    pub fn rows(&self) -> impl Iterator<Item = (AgentId, &[AgentId], &[f64])> {
        self.rows.iter().map(|r| (r.agent, r.neighbors.as_slice(), r.beta.as_slice()))
    }

    fn row(&self, i: AgentId) -> Result<usize> {
        self.row_of
            .get(i)
            .copied()
            .flatten()
            .ok_or_else(|| Error::Input(format!("agent {i} is not a legitimate agent")))
    }

    /// In-neighbours `j` of `i` with `beta_ij >= 0`, ascending.
    pub fn trusted_neighborhood(&self, i: AgentId) -> Result<Vec<AgentId>> {
        let row = &self.rows[self.row(i)?];
        Ok(row.neighbors.iter().zip(&row.beta).filter(|(_, &b)| b >= 0.0).map(|(&j, _)| j).collect())
    }

    /// Whether every edge is classified according to ground truth.
    pub fn edge_status(&self, graph: &CommGraph) -> RoundStatus {
        let mut status = RoundStatus { malicious_ok: true, legit_ok: true };
        for row in &self.rows {
            for (&j, &b) in row.neighbors.iter().zip(&row.beta) {
                if graph.is_malicious(j) {
                    status.malicious_ok &= b < 0.0;
                } else {
                    status.legit_ok &= b >= 0.0;
                }
            }
        }
        status
    }
}

/// Online weights of agent `i`: uniform over itself and its trusted
/// neighbours. Entries are `(agent, weight)` in ascending agent order.
pub fn online_weight_row(trusted: &[AgentId], i: AgentId) -> Vec<(AgentId, f64)> {
    let share = 1.0 / (trusted.len() + 1) as f64;
    let mut row: Vec<(AgentId, f64)> = trusted.iter().map(|&j| (j, share)).collect();
    let at = row.partition_point(|&(j, _)| j < i);
    row.insert(at, (i, share));
    row
}

/// Classification outcome of a single round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStatus {
    /// Every malicious in-edge of every legitimate agent has `beta < 0`.
    pub malicious_ok: bool,
    /// Every legitimate in-edge has `beta >= 0`.
    pub legit_ok: bool,
}

impl RoundStatus {
    pub fn all_ok(&self) -> bool {
        self.malicious_ok && self.legit_ok
    }
}

/// Realized classification times of one run over a finite horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub horizon: usize,
    /// First round from which all malicious edges stay distrusted.
    pub t_f_m: usize,
    /// First round from which all legitimate edges stay trusted.
    pub t_f_l: usize,
    /// First round from which every edge stays correctly classified.
    pub t_f: usize,
    pub censored_m: bool,
    pub censored_l: bool,
    pub censored: bool,
    /// `T(t)` for `t = 0..=horizon`: start of the correct streak that runs
    /// through round `t - 1`.
    pub running: Vec<usize>,
    pub rounds: Vec<RoundStatus>,
}

/// Classification times from per-round statuses of rounds `0..horizon`.
pub fn classify_run(rounds: &[RoundStatus]) -> Result<ClassificationRecord> {
    let horizon = rounds.len();
    if horizon == 0 {
        return Err(Error::Input("classification needs a horizon of at least one round".into()));
    }
    let settle = |ok: &dyn Fn(&RoundStatus) -> bool| rounds.iter().rposition(|r| !ok(r)).map_or(0, |k| k + 1);
    let t_f_m = settle(&|r| r.malicious_ok);
    let t_f_l = settle(&|r| r.legit_ok);
    let t_f = settle(&RoundStatus::all_ok);
    let mut running = Vec::with_capacity(horizon + 1);
    running.push(0);
    for (t, r) in rounds.iter().enumerate() {
        let prev = running[t];
        running.push(if r.all_ok() { prev } else { t + 1 });
    }
    Ok(ClassificationRecord {
        horizon,
        t_f_m,
        t_f_l,
        t_f,
        censored_m: t_f_m == horizon,
        censored_l: t_f_l == horizon,
        censored: t_f == horizon,
        running,
        rounds: rounds.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn pair_graph() -> CommGraph {
        // 0, 1 legitimate; 2 malicious feeding 0
        CommGraph::new(3, &[2], &[(0, 1), (1, 0), (0, 2)]).unwrap()
    }

    #[test]
    fn point_mass_is_constant() {
        let model = TrustModel::new(TrustDist::Point(1.0), TrustDist::Point(0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(sample_trust(&model, EdgeKind::Legitimate, &mut rng).unwrap(), 1.0);
            assert_eq!(sample_trust(&model, EdgeKind::Malicious, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        assert!(TrustModel::new(TrustDist::Beta([0.0, 1.0]), TrustDist::Point(0.0)).is_err());
        assert!(TrustModel::new(TrustDist::Point(1.5), TrustDist::Point(0.0)).is_err());
        let flipped = TrustModel::new(TrustDist::Point(0.2), TrustDist::Point(0.8)).unwrap();
        assert!(!flipped.is_informative());
    }

    #[test]
    fn beta_moments() {
        let model = TrustModel::new(TrustDist::Beta([1.5, 1.0]), TrustDist::Beta([0.75, 1.0])).unwrap();
        assert!((model.e_l() - 0.1).abs() < 1e-15);
        assert!((model.e_m() + 1.0 / 14.0).abs() < 1e-15);
        let sampler = model.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for (kind, dist) in [(EdgeKind::Legitimate, model.legit), (EdgeKind::Malicious, model.malicious)] {
            let n = 1_000_000;
            let draws: Vec<f64> = (0..n).map(|_| sampler.sample(kind, &mut rng)).collect();
            assert!(draws.iter().all(|x| (0.0..=1.0).contains(x)));
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!((mean - dist.mean()).abs() < 0.002, "{kind:?} mean {mean}");
            assert!((mean - dist.mean()).abs() < 3.0 * (dist.variance() / n as f64).sqrt() + 1e-4);
            assert!((var - dist.variance()).abs() < 0.002, "{kind:?} variance {var}");
        }
    }

    #[test]
    fn ledger_arithmetic() {
        let g = pair_graph();
        let mut ledger = TrustLedger::new(&g);
        ledger.update(&[vec![0.5, 0.7], vec![0.5]]).unwrap();
        assert_eq!(ledger.beta(0).unwrap(), &[0.0, 0.19999999999999996]);
        ledger.update(&[vec![0.5, 0.8], vec![0.5]]).unwrap();
        assert!((ledger.beta(0).unwrap()[1] - 0.5).abs() < 1e-15);
        assert_eq!(ledger.round(), 2);
        assert!(matches!(ledger.update(&[vec![0.5], vec![0.5]]), Err(Error::Input(_))));
        assert!(matches!(ledger.update(&[vec![0.5, 0.5]]), Err(Error::Input(_))));
    }

    #[test]
    fn trusted_neighborhood_includes_ties() {
        let g = pair_graph();
        let mut ledger = TrustLedger::new(&g);
        ledger.update(&[vec![0.5, 0.2], vec![0.1]]).unwrap();
        assert_eq!(ledger.trusted_neighborhood(0).unwrap(), vec![1]);
        assert!(ledger.trusted_neighborhood(1).unwrap().is_empty());
        assert!(matches!(ledger.trusted_neighborhood(2), Err(Error::Input(_))));
        assert!(matches!(ledger.trusted_neighborhood(9), Err(Error::Input(_))));
    }

    #[test]
    fn weight_rows() {
        assert_eq!(online_weight_row(&[], 4), vec![(4, 1.0)]);
        let third = 1.0 / 3.0;
        assert_eq!(online_weight_row(&[2, 3], 1), vec![(1, third), (2, third), (3, third)]);
        assert_eq!(online_weight_row(&[0, 3], 1), vec![(0, third), (1, third), (3, third)]);
    }

    #[test]
    fn classification_times() {
        let ok = RoundStatus { malicious_ok: true, legit_ok: true };
        let bad_m = RoundStatus { malicious_ok: false, legit_ok: true };
        let bad_l = RoundStatus { malicious_ok: true, legit_ok: false };
        let rec = classify_run(&[bad_m, ok, bad_l, ok, ok]).unwrap();
        assert_eq!((rec.t_f_m, rec.t_f_l, rec.t_f), (1, 3, 3));
        assert_eq!(rec.running, vec![0, 1, 1, 3, 3, 3]);
        assert!(!rec.censored);
        let rec = classify_run(&[ok, bad_m]).unwrap();
        assert!(rec.censored && rec.censored_m && !rec.censored_l);
        assert_eq!(classify_run(&[ok; 3]).unwrap().t_f, 0);
        assert!(matches!(classify_run(&[]), Err(Error::Input(_))));
    }

    #[test]
    fn serde_shape_of_distributions() {
        let json = serde_json::to_string(&TrustDist::Beta([1.5, 1.0])).unwrap();
        assert_eq!(json, r#"{"beta":[1.5,1.0]}"#);
        let back: TrustDist = serde_json::from_str(r#"{"point":0.25}"#).unwrap();
        assert_eq!(back, TrustDist::Point(0.25));
    }
}
