use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::protocol::edge_streams;
use crate::trust::{classify_run, ClassificationRecord, TrustLedger, TrustModel};

/// Misclassified edges at one round, summed over trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisclassificationCounts {
    pub t: usize,
    pub legit_wrong: u64,
    pub legit_total: u64,
    pub malicious_wrong: u64,
    pub malicious_total: u64,
}

impl MisclassificationCounts {
    pub fn legit_rate(&self) -> f64 {
        self.legit_wrong as f64 / self.legit_total.max(1) as f64
    }

    pub fn malicious_rate(&self) -> f64 {
        self.malicious_wrong as f64 / self.malicious_total.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationEnsemble {
    pub records: Vec<ClassificationRecord>,
    pub checkpoints: Vec<MisclassificationCounts>,
}

/// Runs only the trust ledger for `trials` independent trials.
///
/// Streams are keyed exactly as in the protocol engine, so trial `k` here
/// realizes the same classification times as trial `k` of a protocol run
/// with the same master seed.
pub fn simulate_classification(
    graph: &CommGraph,
    trust: &TrustModel,
    horizon: usize,
    trials: usize,
    master_seed: u64,
    checkpoints: &[usize],
) -> Result<ClassificationEnsemble> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if let Some(&t) = checkpoints.iter().find(|&&t| t >= horizon) {
        return Err(Error::Config(format!("checkpoint {t} is not below the horizon {horizon}")));
    }
    let sampler = trust.sampler()?;
    let per_trial: Vec<(ClassificationRecord, Vec<MisclassificationCounts>)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut ledger = TrustLedger::new(graph);
            let mut rngs = edge_streams(graph, &ledger, master_seed, trial);
            let mut rounds = Vec::with_capacity(horizon);
            let mut counts = Vec::with_capacity(checkpoints.len());
            for t in 0..horizon {
                let mut edge = 0;
                ledger.update_with(|_, _| {
                    let (kind, rng) = &mut rngs[edge];
                    edge += 1;
                    sampler.sample(*kind, rng)
                });
                rounds.push(ledger.edge_status(graph));
                if checkpoints.contains(&t) {
                    counts.push(count_wrong(graph, &ledger, t));
                }
            }
            Ok((classify_run(&rounds)?, counts))
        })
        .collect::<Result<_>>()?;

    let mut checkpoints_out: Vec<MisclassificationCounts> = Vec::new();
    let mut records = Vec::with_capacity(trials);
    for (record, counts) in per_trial {
        records.push(record);
        if checkpoints_out.is_empty() {
            checkpoints_out = counts;
        } else {
            for (acc, c) in checkpoints_out.iter_mut().zip(counts) {
                acc.legit_wrong += c.legit_wrong;
                acc.legit_total += c.legit_total;
                acc.malicious_wrong += c.malicious_wrong;
                acc.malicious_total += c.malicious_total;
            }
        }
    }
    checkpoints_out.sort_by_key(|c| c.t);
    Ok(ClassificationEnsemble { records, checkpoints: checkpoints_out })
}

fn count_wrong(graph: &CommGraph, ledger: &TrustLedger, t: usize) -> MisclassificationCounts {
    let mut c = MisclassificationCounts { t, legit_wrong: 0, legit_total: 0, malicious_wrong: 0, malicious_total: 0 };
    for (_, nbrs, beta) in ledger.rows() {
        for (&j, &b) in nbrs.iter().zip(beta) {
            if graph.is_malicious(j) {
                c.malicious_total += 1;
                c.malicious_wrong += u64::from(b >= 0.0);
            } else {
                c.legit_total += 1;
                c.legit_wrong += u64::from(b < 0.0);
            }
        }
    }
    c
}
