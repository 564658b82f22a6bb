//! Validated stochastic and substochastic matrices, ergodicity and stability tests.

use serde::{Deserialize, Serialize};

use crate::dense::{Matrix, MatrixRepr};
use crate::error::{Error, Result};
use crate::graph::{is_aperiodic, strong_components, WeightedDigraph};
use crate::tolerances::{EIG_TOL, FLUSH_TOL, ROW_SUM_TOL};

fn flush_and_check_sign(mut m: Matrix) -> Result<Matrix> {
    let n = m.n();
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            if v.abs() < FLUSH_TOL {
                m.set(i, j, 0.0);
            } else if v < 0.0 {
                return Err(Error::NegativeWeight { row: i, col: j, value: v });
            }
        }
    }
    Ok(m)
}

/// Nonnegative matrix whose rows sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct RowStochasticMatrix {
    m: Matrix,
}

impl TryFrom<MatrixRepr> for RowStochasticMatrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        RowStochasticMatrix::new(r.into_matrix()?)
    }
}

impl From<RowStochasticMatrix> for MatrixRepr {
    fn from(w: RowStochasticMatrix) -> Self {
        MatrixRepr::from_matrix(&w.m)
    }
}

impl RowStochasticMatrix {
    /// Validates entries and row sums. Rows whose sum already equals one up to
    /// rounding are kept bit-for-bit; other accepted rows are rescaled.
    pub fn new(m: Matrix) -> Result<Self> {
        let mut m = flush_and_check_sign(m)?;
        let n = m.n();
        let slack = 4.0 * n as f64 * f64::EPSILON;
        for i in 0..n {
            let sum = m.row_sum(i);
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::RowSum { row: i, sum });
            }
            if (sum - 1.0).abs() > slack {
                for v in m.row_mut(i) {
                    *v /= sum;
                }
            }
        }
        Ok(RowStochasticMatrix { m })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        RowStochasticMatrix { m: Matrix::identity(n) }
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m.get(i, j)
    }

    pub fn graph(&self) -> WeightedDigraph {
        WeightedDigraph::new(self.m.clone())
    }

    /// One averaging step `W x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.m.mul_vec(x)
    }

    pub fn into_substochastic(self) -> SubstochasticMatrix {
        SubstochasticMatrix { deficiency_set: Vec::new(), m: self.m }
    }
}

/// Nonnegative matrix whose rows sum to at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct SubstochasticMatrix {
    m: Matrix,
    deficiency_set: Vec<usize>,
}

impl TryFrom<MatrixRepr> for SubstochasticMatrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        SubstochasticMatrix::new(r.into_matrix()?)
    }
}

impl From<SubstochasticMatrix> for MatrixRepr {
    fn from(a: SubstochasticMatrix) -> Self {
        MatrixRepr::from_matrix(&a.m)
    }
}

impl SubstochasticMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let m = flush_and_check_sign(m)?;
        let mut deficiency_set = Vec::new();
        for i in 0..m.n() {
            let sum = m.row_sum(i);
            if sum > 1.0 + ROW_SUM_TOL {
                return Err(Error::RowSum { row: i, sum });
            }
            if sum < 1.0 - ROW_SUM_TOL {
                deficiency_set.push(i);
            }
        }
        Ok(SubstochasticMatrix { m, deficiency_set })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    /// Rows summing to strictly less than one.
    pub fn deficiency_set(&self) -> &[usize] {
        &self.deficiency_set
    }

    pub fn graph(&self) -> WeightedDigraph {
        WeightedDigraph::new(self.m.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiaReason {
    Ok,
    MultipleSources,
    PeriodicSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiaVerdict {
    pub is_sia: bool,
    /// Stationary left vector, present only for SIA matrices.
    pub pi: Option<Vec<f64>>,
    pub reason: SiaReason,
}

/// SIA test through the graph criterion: one source component, and it is aperiodic.
pub fn check_sia(w: &RowStochasticMatrix) -> SiaVerdict {
    let g = w.graph();
    let scc = strong_components(&g);
    let sources = scc.sources();
    if sources.len() != 1 {
        return SiaVerdict { is_sia: false, pi: None, reason: SiaReason::MultipleSources };
    }
    let source = &scc.components[sources[0]];
    if !is_aperiodic(&g, source).expect("components are strongly connected") {
        return SiaVerdict { is_sia: false, pi: None, reason: SiaReason::PeriodicSource };
    }
    SiaVerdict { is_sia: true, pi: Some(stationary_on(w.matrix(), source)), reason: SiaReason::Ok }
}

/// Left Perron vector of the (stochastic, primitive) block on `nodes`, padded with zeros.
fn stationary_on(w: &Matrix, nodes: &[usize]) -> Vec<f64> {
    let k = nodes.len();
    let mut pi = vec![1.0 / k as f64; k];
    let max_iters = 200_000;
    for _ in 0..max_iters {
        // lazy chain (W + I)/2 shares the stationary vector and cannot oscillate
        let mut next = vec![0.0; k];
        for (a, &i) in nodes.iter().enumerate() {
            next[a] += 0.5 * pi[a];
            for (b, &j) in nodes.iter().enumerate() {
                next[b] += 0.5 * pi[a] * w.get(i, j);
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if change < 1e-16 {
            break;
        }
    }
    let mut full = vec![0.0; w.n()];
    for (a, &i) in nodes.iter().enumerate() {
        full[i] = pi[a];
    }
    full
}

/// Strongly connected and aperiodic graph.
pub fn is_primitive(w: &RowStochasticMatrix) -> bool {
    let g = w.graph();
    let scc = strong_components(&g);
    scc.is_strong && is_aperiodic(&g, &scc.components[0]).expect("single component")
}

/// Whether some power up to the Wielandt bound `n² − 2n + 2` of the
/// zero pattern is entrywise positive.
pub fn positive_power_within_wielandt(w: &RowStochasticMatrix) -> bool {
    let n = w.n();
    let pattern: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| w.get(i, j) > 0.0).collect()).collect();
    let mut power = pattern.clone();
    let bound = n * n - 2 * n + 2;
    for _ in 1..bound {
        if power.iter().all(|r| r.iter().all(|&b| b)) {
            return true;
        }
        power = (0..n).map(|i| (0..n).map(|j| (0..n).any(|l| power[i][l] && pattern[l][j])).collect()).collect();
    }
    power.iter().all(|r| r.iter().all(|&b| b))
}

/// Spectral radius of a nonnegative matrix: maximum over irreducible diagonal blocks,
/// each estimated by power iteration on `B + I` with Collatz–Wielandt brackets.
pub fn spectral_radius(a: &SubstochasticMatrix) -> f64 {
    spectral_radius_nonneg(a.matrix())
}

pub(crate) fn spectral_radius_nonneg(m: &Matrix) -> f64 {
    let scc = strong_components(&WeightedDigraph::new(m.clone()));
    scc.components.iter().map(|nodes| block_radius(m, nodes)).fold(0.0, f64::max)
}

fn block_radius(m: &Matrix, nodes: &[usize]) -> f64 {
    let k = nodes.len();
    if k == 1 {
        return m.get(nodes[0], nodes[0]);
    }
    let mut v = vec![1.0; k];
    let max_iters = 100 * k * 1000;
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;
    for _ in 0..max_iters {
        let mut next = v.clone();
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                next[a] += m.get(i, j) * v[b];
            }
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for a in 0..k {
            let r = next[a] / v[a];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        lower = lo - 1.0;
        upper = hi - 1.0;
        let scale = next.iter().cloned().fold(0.0, f64::max);
        v = next.into_iter().map(|x| x / scale).collect();
        if upper - lower < EIG_TOL * 0.1 {
            break;
        }
    }
    0.5 * (lower + upper).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub unreachable_nodes: Vec<usize>,
}

/// Schur stability of a substochastic matrix: every node must be reachable from a deficient row.
pub fn schur_stability_by_reachability(a: &SubstochasticMatrix) -> StabilityReport {
    let seen = a.graph().reachable_from(a.deficiency_set());
    let unreachable_nodes: Vec<usize> = (0..a.n()).filter(|&i| !seen[i]).collect();
    StabilityReport { stable: unreachable_nodes.is_empty(), unreachable_nodes }
}

/// Spreads each row's missing mass uniformly: `w_ij = a_ij + (1 − Σ_l a_il)/n`.
pub fn stochastic_completion(a: &SubstochasticMatrix) -> RowStochasticMatrix {
    let n = a.n();
    let m = a.matrix();
    let mut w = m.clone();
    for i in 0..n {
        let deficit = 1.0 - m.row_sum(i);
        if deficit != 0.0 {
            for v in w.row_mut(i) {
                *v += deficit / n as f64;
            }
        }
    }
    RowStochasticMatrix::new(w).expect("completion of a substochastic matrix is stochastic")
}
