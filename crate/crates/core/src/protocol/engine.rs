use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AdversaryStrategy, ConfidenceSchedule};
use crate::error::{Error, Result};
use crate::graph::{build_nominal_weights, check_primitive, perron_vector, AgentId, CommGraph, WeightMatrix};
use crate::rng::{adversary_stream, edge_stream};
use crate::trust::{classify_run, ClassificationRecord, EdgeKind, TrustLedger, TrustModel};

const ROW_SUM_TOL: f64 = 1e-12;

/// One nominal round: `W x`.
pub fn nom_step(x: &[f64], w: &WeightMatrix) -> Result<Vec<f64>> {
    w.mul_vec(x)
}

/// One resilient round.
///
/// `x` holds the current state of every agent by id (malicious entries are
/// the values they transmit), `x0` the legitimate initial states and `rows`
/// one online weight row per legitimate agent, ascending.
pub fn res_step(x: &[f64], x0: &[f64], lambda: f64, rows: &[Vec<(AgentId, f64)>]) -> Result<Vec<f64>> {
    if rows.len() != x0.len() {
        return Err(Error::Input(format!("{} weight rows for {} legitimate agents", rows.len(), x0.len())));
    }
    rows.iter()
        .zip(x0)
        .map(|(row, &anchor)| {
            let total: f64 = row.iter().map(|&(_, w)| w).sum();
            if (total - 1.0).abs() > ROW_SUM_TOL || row.iter().any(|&(_, w)| w < 0.0) {
                return Err(Error::Invariant(format!("weight row sums to {total}")));
            }
            let mut s = 0.0;
            for &(j, w) in row {
                let xj = x.get(j).ok_or_else(|| Error::Input(format!("agent {j} missing from state vector")))?;
                s += w * xj;
            }
            Ok(lambda * anchor + (1.0 - lambda) * s)
        })
        .collect()
}

/// Realized weights of one round, split by sender class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundWeights {
    /// Legitimate-to-legitimate block, `L x L`.
    pub legit: WeightMatrix,
    /// Malicious-to-legitimate block, `L x M`.
    pub malicious: WeightMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub horizon: usize,
    pub master_seed: u64,
    pub trial: u64,
    /// Keep every realized weight matrix (needed by the decomposition).
    pub record_weights: bool,
}

/// Everything a single run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x0: Vec<f64>,
    /// Legitimate states for rounds `0..=horizon`.
    pub states: Vec<Vec<f64>>,
    /// Values transmitted by malicious agents in rounds `0..horizon`.
    pub malicious_states: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
    pub weights: Option<Vec<RoundWeights>>,
    pub classification: ClassificationRecord,
    /// `v^T x0`, or `None` when the legitimate subgraph is not primitive.
    pub nominal_consensus: Option<f64>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    /// `max_i x_i(t) - min_i x_i(t)` over legitimate agents.
    pub fn spread(&self, t: usize) -> f64 {
        spread(&self.states[t])
    }
}

pub(crate) fn spread(x: &[f64]) -> f64 {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// One trust stream per in-edge, in ledger order.
pub(crate) fn edge_streams(
    graph: &CommGraph,
    ledger: &TrustLedger,
    master_seed: u64,
    trial: u64,
) -> Vec<(EdgeKind, ChaCha8Rng)> {
    ledger
        .rows()
        .flat_map(|(i, nbrs, _)| nbrs.iter().map(move |&j| (i, j)))
        .map(|(i, j)| {
            let kind = if graph.is_malicious(j) { EdgeKind::Malicious } else { EdgeKind::Legitimate };
            (kind, edge_stream(master_seed, trial, i, j))
        })
        .collect()
}

/// Runs the resilient protocol for `opts.horizon` rounds.
///
/// Each round samples a trust observation for every in-edge, updates the
/// ledger, lets malicious agents transmit, derives the online weights from
/// the updated ledger and applies the update. Draws come from per-edge
/// streams keyed by `(master_seed, trial, edge)`, so two runs that differ only
/// in the schedule see identical trust histories.
pub fn run_protocol(
    graph: &CommGraph,
    trust: &TrustModel,
    schedule: &ConfidenceSchedule,
    adversary: &AdversaryStrategy,
    x0: &[f64],
    opts: &RunOptions,
) -> Result<Trajectory> {
    if opts.horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if x0.len() != graph.legit_count() {
        return Err(Error::Config(format!(
            "x0 has {} entries but the graph has {} legitimate agents",
            x0.len(),
            graph.legit_count()
        )));
    }
    schedule.validate()?;
    if let AdversaryStrategy::Replay { source, .. } = *adversary {
        if graph.legit_index(source).is_none() {
            return Err(Error::Config(format!("replay source {source} is not a legitimate agent")));
        }
    }

    let nominal = build_nominal_weights(graph)?;
    let nominal_consensus = if check_primitive(&nominal) {
        let v = perron_vector(&nominal)?;
        Some(v.iter().zip(x0).map(|(a, b)| a * b).sum())
    } else {
        None
    };

    let sampler = trust.sampler()?;
    let mut ledger = TrustLedger::new(graph);
    let mut edge_rngs = edge_streams(graph, &ledger, opts.master_seed, opts.trial);
    let malicious = graph.malicious();
    let mut adv_rngs: Vec<ChaCha8Rng> =
        malicious.iter().map(|&m| adversary_stream(opts.master_seed, opts.trial, m)).collect();

    let legit = graph.legitimate();
    let (l, m) = (legit.len(), malicious.len());
    let mut x = vec![0.0; graph.agent_count()];
    for (&i, &v) in legit.iter().zip(x0) {
        x[i] = v;
    }

    let mut states = Vec::with_capacity(opts.horizon + 1);
    states.push(x0.to_vec());
    let mut malicious_states = Vec::with_capacity(opts.horizon);
    let mut lambdas = Vec::with_capacity(opts.horizon);
    let mut weights = opts.record_weights.then(|| Vec::with_capacity(opts.horizon));
    let mut rounds = Vec::with_capacity(opts.horizon);

    for t in 0..opts.horizon {
        let mut edge = 0;
        ledger.update_with(|_, _| {
            let (kind, rng) = &mut edge_rngs[edge];
            edge += 1;
            sampler.sample(*kind, rng)
        });
        rounds.push(ledger.edge_status(graph));

        let mut sent = Vec::with_capacity(m);
        for (&a, rng) in malicious.iter().zip(adv_rngs.iter_mut()) {
            let value = adversary.emit(graph, t, &states, rng);
            x[a] = value;
            sent.push(value);
        }
        malicious_states.push(sent);

        let lambda = schedule.eval(t);
        lambdas.push(lambda);
        let mut realized = weights
            .as_ref()
            .map(|_| RoundWeights { legit: WeightMatrix::zeros(l, l), malicious: WeightMatrix::zeros(l, m) });
        let mut next = Vec::with_capacity(l);
        for (row, ((i, nbrs, beta), &anchor)) in ledger.rows().zip(x0).enumerate() {
            let trusted = beta.iter().filter(|&&b| b >= 0.0).count();
            let share = 1.0 / (trusted + 1) as f64;
            // ascending over {i} and trusted neighbours, matching nom_step
            let mut s = 0.0;
            let mut self_done = false;
            for (&j, &b) in nbrs.iter().zip(beta) {
                if !self_done && j > i {
                    s += share * x[i];
                    self_done = true;
                }
                if b >= 0.0 {
                    s += share * x[j];
                    if let Some(w) = realized.as_mut() {
                        match graph.legit_index(j) {
                            Some(col) => w.legit.set(row, col, share),
                            None => w.malicious.set(row, graph.malicious_index(j).unwrap(), share),
                        }
                    }
                }
            }
            if !self_done {
                s += share * x[i];
            }
            if let Some(w) = realized.as_mut() {
                w.legit.set(row, row, share);
            }
            next.push(lambda * anchor + (1.0 - lambda) * s);
        }
        for (&i, &v) in legit.iter().zip(&next) {
            x[i] = v;
        }
        states.push(next);
        if let (Some(all), Some(w)) = (weights.as_mut(), realized) {
            all.push(w);
        }
    }

    Ok(Trajectory {
        x0: x0.to_vec(),
        states,
        malicious_states,
        lambdas,
        weights,
        classification: classify_run(&rounds)?,
        nominal_consensus,
    })
}
