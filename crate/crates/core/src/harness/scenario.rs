use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    build_nominal_weights, check_primitive, perron_vector, spectral_profile, AgentId, CommGraph, SpectralProfile,
};
use crate::protocol::AdversaryStrategy;
use crate::trust::{TrustDist, TrustModel};

/// Everything needed to run the protocol except the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub graph: CommGraph,
    pub trust: TrustModel,
    /// Initial legitimate states in ascending legitimate id order.
    pub x0: Vec<f64>,
    pub adversary: AdversaryStrategy,
    /// Bound on every state and every transmitted value.
    pub eta: f64,
    pub horizon: usize,
}

impl Scenario {
    pub fn new(
        graph: CommGraph,
        trust: TrustModel,
        x0: Vec<f64>,
        adversary: AdversaryStrategy,
        eta: f64,
        horizon: usize,
    ) -> Result<Self> {
        let s = Self { graph, trust, x0, adversary, eta, horizon };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Scenario(format!("state bound must be positive, got {}", self.eta)));
        }
        if self.horizon == 0 {
            return Err(Error::Scenario("horizon must be at least 1".into()));
        }
        if self.x0.len() != self.graph.legit_count() {
            return Err(Error::Scenario(format!(
                "x0 has {} entries but the graph has {} legitimate agents",
                self.x0.len(),
                self.graph.legit_count()
            )));
        }
        if let Some(v) = self.x0.iter().find(|v| !(v.abs() <= self.eta)) {
            return Err(Error::Scenario(format!("initial state {v} exceeds the state bound {}", self.eta)));
        }
        self.adversary.validate(&self.graph, self.eta).map_err(|e| Error::Scenario(e.to_string()))?;
        let nominal = build_nominal_weights(&self.graph)?;
        if !check_primitive(&nominal) {
            return Err(Error::Scenario(
                "legitimate subgraph is not strongly connected, so its nominal weights are not primitive".into(),
            ));
        }
        Ok(())
    }

    pub fn perron(&self) -> Result<Vec<f64>> {
        perron_vector(&build_nominal_weights(&self.graph)?)
    }

    /// Nominal consensus `v^T x0`.
    pub fn nominal_consensus(&self) -> Result<f64> {
        Ok(self.perron()?.iter().zip(&self.x0).map(|(v, x)| v * x).sum())
    }

    pub fn spectral_profile(&self) -> Result<SpectralProfile> {
        spectral_profile(&build_nominal_weights(&self.graph)?)
    }
}

/// Graph file layout. Agent ids are 1-based; an edge `[from, to]` means
/// `from` transmits to `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub agents: usize,
    #[serde(default)]
    pub malicious: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
}

impl GraphSpec {
    pub fn from_graph(graph: &CommGraph) -> Self {
        let edges = (0..graph.agent_count())
            .flat_map(|to| graph.in_neighbors(to).iter().map(move |&from| [from + 1, to + 1]))
            .collect();
        Self { agents: graph.agent_count(), malicious: graph.malicious().iter().map(|m| m + 1).collect(), edges }
    }

    pub fn to_graph(&self) -> Result<CommGraph> {
        let zero = |id: usize| {
            if id == 0 || id > self.agents {
                Err(Error::Config(format!("agent id {id} outside 1..={}", self.agents)))
            } else {
                Ok(id - 1)
            }
        };
        let malicious = self.malicious.iter().map(|&m| zero(m)).collect::<Result<Vec<_>>>()?;
        let edges = self.edges.iter().map(|&[from, to]| Ok((zero(to)?, zero(from)?))).collect::<Result<Vec<_>>>()?;
        CommGraph::new(self.agents, &malicious, &edges)
    }
}

/// Knobs of the built-in two-platoon merge. Platoon A is agents `0..5`,
/// platoon B is `5..10` and malicious agents follow from id 10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatoonConfig {
    pub speed_a: f64,
    pub speed_b: f64,
    pub eta: f64,
    pub horizon: usize,
    pub trust: TrustModel,
    pub adversary: AdversaryStrategy,
    /// Legitimate targets of each malicious vehicle.
    pub attackers: Vec<Vec<AgentId>>,
    /// Bidirectional links between the two platoons.
    pub cross_links: Vec<(AgentId, AgentId)>,
}

pub const PLATOON_SIZE: usize = 5;

impl Default for PlatoonConfig {
    fn default() -> Self {
        Self {
            speed_a: 20.0,
            speed_b: 30.0,
            eta: 60.0,
            horizon: 2000,
            trust: TrustModel { legit: TrustDist::Beta([1.5, 1.0]), malicious: TrustDist::Beta([0.75, 1.0]) },
            adversary: AdversaryStrategy::Constant { value: 60.0 },
            // tails of both platoons and both leaders
            attackers: vec![vec![3, 4], vec![8, 9], vec![0, 5]],
            // each leader hears the first two vehicles of the other platoon
            cross_links: vec![(0, 5), (0, 6), (5, 1)],
        }
    }
}

/// Two platoons of five vehicles with links to the two nearest vehicles
/// ahead and behind, plus malicious vehicles broadcasting to chosen targets.
pub fn build_platoon_scenario(cfg: &PlatoonConfig) -> Result<Scenario> {
    let legit = 2 * PLATOON_SIZE;
    let n = legit + cfg.attackers.len();
    let mut edges = Vec::new();
    let mut link = |a: AgentId, b: AgentId| {
        edges.push((a, b));
        edges.push((b, a));
    };
    for base in [0, PLATOON_SIZE] {
        for i in 0..PLATOON_SIZE {
            for d in 1..=2 {
                if i + d < PLATOON_SIZE {
                    link(base + i, base + i + d);
                }
            }
        }
    }
    for &(a, b) in &cfg.cross_links {
        if a >= legit || b >= legit {
            return Err(Error::Scenario(format!("cross link ({a}, {b}) must join legitimate vehicles")));
        }
        link(a, b);
    }
    for (k, targets) in cfg.attackers.iter().enumerate() {
        for &t in targets {
            if t >= legit {
                return Err(Error::Scenario(format!(
                    "malicious vehicle {} targets non-legitimate agent {t}",
                    legit + k
                )));
            }
            edges.push((t, legit + k));
        }
    }
    let malicious: Vec<AgentId> = (legit..n).collect();
    let graph = CommGraph::new(n, &malicious, &edges).map_err(|e| Error::Scenario(e.to_string()))?;
    let mut x0 = vec![cfg.speed_a; PLATOON_SIZE];
    x0.extend(std::iter::repeat_n(cfg.speed_b, PLATOON_SIZE));
    Scenario::new(graph, cfg.trust, x0, cfg.adversary, cfg.eta, cfg.horizon)
}
