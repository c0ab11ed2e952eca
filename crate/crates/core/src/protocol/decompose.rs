use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::graph::WeightMatrix;

/// Split of the legitimate states into what legitimate and malicious
/// transmissions contributed, for rounds `0..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contributions {
    pub legit: Vec<Vec<f64>>,
    pub malicious: Vec<Vec<f64>>,
}

/// Transition matrices of round `t`: the product of past legitimate blocks
/// acting on the initial states, and the accumulated anchor input.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrices {
    pub autonomous: WeightMatrix,
    pub input: WeightMatrix,
}

/// Contributions of legitimate and malicious transmissions.
///
/// Uses the recursions
/// `xl(t+1) = lambda_t x0 + (1 - lambda_t) W^L_t xl(t)` and
/// `xm(t+1) = (1 - lambda_t) (W^L_t xm(t) + W^M_t x^M(t))`,
/// so `xl(t) + xm(t) = x^L(t)` up to rounding.
pub fn decompose_contributions(traj: &Trajectory) -> Result<Contributions> {
    let weights =
        traj.weights.as_ref().ok_or_else(|| Error::Input("trajectory was recorded without weight history".into()))?;
    let mut legit = vec![traj.x0.clone()];
    let mut malicious = vec![vec![0.0; traj.x0.len()]];
    for (t, w) in weights.iter().enumerate() {
        let lambda = traj.lambdas[t];
        let keep = 1.0 - lambda;
        let xl = w.legit.mul_vec(&legit[t])?;
        let next_l = xl.iter().zip(&traj.x0).map(|(a, x0)| lambda * x0 + keep * a).collect();
        let xm = w.legit.mul_vec(&malicious[t])?;
        let inject = w.malicious.mul_vec(&traj.malicious_states[t])?;
        let next_m = xm.iter().zip(&inject).map(|(a, b)| keep * (a + b)).collect();
        legit.push(next_l);
        malicious.push(next_m);
    }
    Ok(Contributions { legit, malicious })
}

/// Transition matrices at round `t`, built recursively:
/// `A(t+1) = (1 - lambda_t) W^L_t A(t)` with `A(0) = I`, and
/// `B(t+1) = (1 - lambda_t) W^L_t B(t) + lambda_t I` with `B(0) = 0`.
pub fn transition_matrices(traj: &Trajectory, t: usize) -> Result<TransitionMatrices> {
    let weights =
        traj.weights.as_ref().ok_or_else(|| Error::Input("trajectory was recorded without weight history".into()))?;
    if t > weights.len() {
        return Err(Error::Input(format!("round {t} beyond recorded horizon {}", weights.len())));
    }
    let n = traj.x0.len();
    let mut autonomous = WeightMatrix::identity(n);
    let mut input = WeightMatrix::zeros(n, n);
    for (w, &lambda) in weights[..t].iter().zip(&traj.lambdas) {
        let step = w.legit.scale(1.0 - lambda);
        autonomous = step.matmul(&autonomous)?;
        input = step.matmul(&input)?.add(&WeightMatrix::identity(n).scale(lambda))?;
    }
    Ok(TransitionMatrices { autonomous, input })
}
