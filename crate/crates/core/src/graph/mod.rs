//! Directed communication graphs and the nominal weight matrix.

mod primitive;
mod spectral;

pub use primitive::check_primitive;
pub use spectral::{perron_vector, spectral_profile, SpectralProfile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero-based agent identifier.
pub type AgentId = usize;

/// Fixed directed communication graph with ground-truth labels.
///
/// An edge `(to, from)` means `from` transmits to `to`. Only the in-edges of
/// legitimate agents influence the dynamics; malicious agents never update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommGraph {
    agent_count: usize,
    malicious: Vec<bool>,
    in_edges: Vec<Vec<AgentId>>,
}

impl CommGraph {
    /// Builds a graph from the malicious set and a list of `(to, from)` edges.
    ///
    /// Duplicate edges are merged. Self-loops, out-of-range ids and an empty
    /// legitimate set are rejected.
    pub fn new(agent_count: usize, malicious: &[AgentId], edges: &[(AgentId, AgentId)]) -> Result<Self> {
        if agent_count == 0 {
            return Err(Error::Config("graph must contain at least one agent".into()));
        }
        let mut flags = vec![false; agent_count];
        for &m in malicious {
            if m >= agent_count {
                return Err(Error::Config(format!("malicious agent {m} out of range 0..{agent_count}")));
            }
            flags[m] = true;
        }
        if flags.iter().all(|&f| f) {
            return Err(Error::Config("legitimate set is empty".into()));
        }
        let mut in_edges = vec![Vec::new(); agent_count];
        for &(to, from) in edges {
            if to >= agent_count || from >= agent_count {
                return Err(Error::Config(format!("edge ({to}, {from}) references an unknown agent")));
            }
            if to == from {
                return Err(Error::Config(format!("self-loop on agent {to}")));
            }
            in_edges[to].push(from);
        }
        for list in &mut in_edges {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { agent_count, malicious: flags, in_edges })
    }

    /// Builds a graph from explicit legitimate and malicious sets, which must
    /// partition `0..agent_count`.
    pub fn from_partition(
        agent_count: usize,
        legitimate: &[AgentId],
        malicious: &[AgentId],
        edges: &[(AgentId, AgentId)],
    ) -> Result<Self> {
        let mut seen = vec![0u8; agent_count];
        for &id in legitimate.iter().chain(malicious) {
            if id >= agent_count {
                return Err(Error::Config(format!("agent {id} out of range 0..{agent_count}")));
            }
            seen[id] += 1;
        }
        if let Some(id) = seen.iter().position(|&c| c != 1) {
            return Err(Error::Config(format!(
                "legitimate and malicious sets must partition the agents (agent {id} appears {} times)",
                seen[id]
            )));
        }
        Self::new(agent_count, malicious, edges)
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn is_malicious(&self, id: AgentId) -> bool {
        self.malicious[id]
    }

    /// Legitimate agents in ascending id order; this order indexes the rows
    /// of every legitimate-state vector and weight matrix.
    pub fn legitimate(&self) -> Vec<AgentId> {
        (0..self.agent_count).filter(|&i| !self.malicious[i]).collect()
    }

    pub fn malicious(&self) -> Vec<AgentId> {
        (0..self.agent_count).filter(|&i| self.malicious[i]).collect()
    }

    pub fn legit_count(&self) -> usize {
        self.malicious.iter().filter(|&&m| !m).count()
    }

    pub fn malicious_count(&self) -> usize {
        self.agent_count - self.legit_count()
    }

    /// Position of `id` among legitimate agents, if legitimate.
    pub fn legit_index(&self, id: AgentId) -> Option<usize> {
        if id >= self.agent_count || self.malicious[id] {
            return None;
        }
        Some(self.malicious[..id].iter().filter(|&&m| !m).count())
    }

    /// Position of `id` among malicious agents, if malicious.
    pub fn malicious_index(&self, id: AgentId) -> Option<usize> {
        if id >= self.agent_count || !self.malicious[id] {
            return None;
        }
        Some(self.malicious[..id].iter().filter(|&&m| m).count())
    }

    /// In-neighbours of `id`, ascending.
    pub fn in_neighbors(&self, id: AgentId) -> &[AgentId] {
        &self.in_edges[id]
    }

    fn legit_in_degree(&self, id: AgentId) -> usize {
        self.in_edges[id].iter().filter(|&&j| !self.malicious[j]).count()
    }

    fn malicious_in_degree(&self, id: AgentId) -> usize {
        self.in_edges[id].iter().filter(|&&j| self.malicious[j]).count()
    }

    /// Maximal in-degree of legitimate agents, malicious neighbours included.
    pub fn max_legit_in_degree(&self) -> usize {
        self.legitimate().into_iter().map(|i| self.in_edges[i].len()).max().unwrap_or(0)
    }

    /// Number of malicious-to-legitimate links.
    pub fn malicious_link_count(&self) -> usize {
        self.legitimate().into_iter().map(|i| self.malicious_in_degree(i)).sum()
    }

    /// Number of legitimate-to-legitimate links.
    pub fn legit_link_count(&self) -> usize {
        self.legitimate().into_iter().map(|i| self.legit_in_degree(i)).sum()
    }

    /// Largest share of weight a legitimate agent can give to malicious
    /// neighbours: `max_i n_i / (n_i + 1)` with `n_i` its malicious in-degree.
    pub fn malicious_weight_cap(&self) -> f64 {
        self.legitimate()
            .into_iter()
            .map(|i| {
                let n = self.malicious_in_degree(i) as f64;
                n / (n + 1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Degree statistics used by the bounds.
    pub fn degree_stats(&self) -> DegreeStats {
        DegreeStats {
            d_max: self.max_legit_in_degree(),
            malicious_links: self.malicious_link_count(),
            legit_links: self.legit_link_count(),
            malicious_weight_cap: self.malicious_weight_cap(),
        }
    }

    /// Copy of the graph with every malicious agent and its links removed.
    /// Legitimate agents keep their relative order but are renumbered.
    pub fn legitimate_subgraph(&self) -> CommGraph {
        let legit = self.legitimate();
        let edges: Vec<_> = legit
            .iter()
            .enumerate()
            .flat_map(|(row, &i)| {
                self.in_edges[i].iter().filter_map(|&j| self.legit_index(j)).map(move |col| (row, col))
            })
            .collect();
        CommGraph::new(legit.len(), &[], &edges).expect("legitimate subgraph is valid by construction")
    }
}

/// Degree statistics of a [`CommGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    /// Maximal in-degree of legitimate agents, malicious neighbours included.
    pub d_max: usize,
    /// Total malicious-to-legitimate links.
    pub malicious_links: usize,
    /// Total legitimate-to-legitimate links.
    pub legit_links: usize,
    /// `max_i n_i / (n_i + 1)` over legitimate agents.
    pub malicious_weight_cap: f64,
}

/// Dense row-major weight matrix.
///
/// Rows are indexed by legitimate agents. Columns cover either the
/// legitimate agents (square) or a caller-defined column set such as the
/// malicious agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut w = Self::zeros(n, n);
        for i in 0..n {
            w.set(i, i, 1.0);
        }
        w
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Input("ragged weight matrix".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.data.iter().all(|&w| w >= 0.0) && self.row_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    /// `W x`, summing each row in ascending column order.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Input(format!(
                "dimension mismatch: matrix has {} columns, vector has {} entries",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(w, v)| w * v).sum()).collect())
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &WeightMatrix) -> Result<WeightMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Input("dimension mismatch in matrix product".into()));
        }
        let mut out = WeightMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> WeightMatrix {
        WeightMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|w| w * factor).collect() }
    }

    pub fn add(&self, rhs: &WeightMatrix) -> Result<WeightMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Input("dimension mismatch in matrix sum".into()));
        }
        Ok(WeightMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Nominal weights over legitimate agents: each legitimate agent splits its
/// weight uniformly over itself and its legitimate in-neighbours.
pub fn build_nominal_weights(graph: &CommGraph) -> Result<WeightMatrix> {
    let legit = graph.legitimate();
    if legit.is_empty() {
        return Err(Error::Config("legitimate set is empty".into()));
    }
    let mut w = WeightMatrix::zeros(legit.len(), legit.len());
    for (row, &i) in legit.iter().enumerate() {
        let share = 1.0 / (graph.legit_in_degree(i) + 1) as f64;
        w.set(row, row, share);
        for &j in graph.in_neighbors(i) {
            if let Some(col) = graph.legit_index(j) {
                w.set(row, col, share);
            }
        }
    }
    Ok(w)
}
