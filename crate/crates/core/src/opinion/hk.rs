//! Bounded-confidence dynamics with optional attraction toward a truth value.

use serde::{Deserialize, Serialize};

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::rai::Trajectory;
use crate::stochastic::RowStochasticMatrix;
use crate::tolerances::CLUSTER_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HkConfig {
    pub epsilon: f64,
    pub truth: f64,
    /// Per-agent weight on the truth value; zero for ignorant agents.
    pub awareness: Vec<f64>,
}

impl HkConfig {
    pub fn pure(n: usize, epsilon: f64) -> Self {
        HkConfig { epsilon, truth: 0.0, awareness: vec![0.0; n] }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::OutOfRange(format!("confidence radius {} must be positive", self.epsilon)));
        }
        if !self.truth.is_finite() {
            return Err(Error::OutOfRange("truth value must be finite".into()));
        }
        if self.awareness.len() != n {
            return Err(Error::Dimension { expected: n, found: self.awareness.len() });
        }
        if let Some(a) = self.awareness.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::OutOfRange(format!("awareness {a} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Agents `j` with `|x_j − x_i| < ε` (strict), ascending.
fn neighbors(x: &[f64], i: usize, epsilon: f64) -> Vec<usize> {
    (0..x.len()).filter(|&j| (x[j] - x[i]).abs() < epsilon).collect()
}

fn check_state(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    Ok(())
}

/// Each row uniform over the agents within confidence radius.
pub fn hk_weights(x: &[f64], epsilon: f64) -> Result<RowStochasticMatrix> {
    check_state(x)?;
    if !(epsilon > 0.0) {
        return Err(Error::OutOfRange(format!("confidence radius {epsilon} must be positive")));
    }
    let n = x.len();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        let nb = neighbors(x, i, epsilon);
        let share = 1.0 / nb.len() as f64;
        for j in nb {
            m.set(i, j, share);
        }
    }
    RowStochasticMatrix::new(m)
}

/// Neighborhood mean written as an offset from the neighborhood minimum, so equal
/// opinions average to themselves exactly and equal neighborhoods give equal results.
fn neighborhood_mean(x: &[f64], nb: &[usize]) -> f64 {
    let base = nb.iter().map(|&j| x[j]).fold(f64::INFINITY, f64::min);
    let offset: f64 = nb.iter().map(|&j| x[j] - base).sum();
    base + offset / nb.len() as f64
}

fn hk_step(x: &[f64], cfg: &HkConfig) -> (Vec<f64>, Vec<Vec<usize>>) {
    let n = x.len();
    let hoods: Vec<Vec<usize>> = (0..n).map(|i| neighbors(x, i, cfg.epsilon)).collect();
    let next = (0..n)
        .map(|i| {
            let m = neighborhood_mean(x, &hoods[i]);
            let a = cfg.awareness[i];
            if a == 0.0 {
                m
            } else {
                (1.0 - a) * m + a * cfg.truth
            }
        })
        .collect();
    (next, hoods)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Agents grouped by terminal value, groups ordered by value.
    pub clusters: Vec<Vec<usize>>,
    pub values: Vec<f64>,
    /// Smallest distance between consecutive cluster values; `None` for a single cluster.
    pub min_gap: Option<f64>,
    /// Agents ending within the cluster tolerance of the truth value.
    pub truth_cluster: Vec<usize>,
    /// Whether every pair of distinct clusters is at least `ε − tol` apart.
    pub gap_respected: bool,
}

impl ClusterReport {
    pub fn from_state(x: &[f64], epsilon: f64, truth: f64) -> Self {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for i in order {
            match clusters.last_mut() {
                Some(c) if x[i] - x[*c.last().expect("nonempty")] <= CLUSTER_TOL => c.push(i),
                _ => clusters.push(vec![i]),
            }
        }
        let values: Vec<f64> = clusters.iter().map(|c| c.iter().map(|&i| x[i]).sum::<f64>() / c.len() as f64).collect();
        let min_gap = values.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
        let mut truth_cluster: Vec<usize> = (0..x.len()).filter(|&i| (x[i] - truth).abs() < CLUSTER_TOL).collect();
        truth_cluster.sort_unstable();
        for c in &mut clusters {
            c.sort_unstable();
        }
        ClusterReport {
            gap_respected: min_gap.is_none_or(|g| g >= epsilon - CLUSTER_TOL),
            clusters,
            values,
            min_gap,
            truth_cluster,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HkRun {
    /// Opinions with residuals taken against the confidence weights of each step.
    pub trajectory: Trajectory,
    /// Distances `|x_i(k) − t|` with residuals against the same weights.
    pub truth_gap: Trajectory,
    pub report: ClusterReport,
    /// First step whose state is an exact fixed point, if reached.
    pub stationary_at: Option<usize>,
    /// Per agent, the step from which its opinion never changed again.
    pub frozen_since: Vec<usize>,
    /// Per ordered pair `(i, j)`, `i ≠ j`, the last step at which `j` was in `i`'s neighborhood.
    pub last_interaction: Vec<Vec<Option<usize>>>,
}

/// Iterates `x(k+1) = (I − A) W̄(x(k)) x(k) + t A 𝟙` until the state repeats exactly or `max_steps`.
pub fn run_hk(x0: &[f64], cfg: &HkConfig, max_steps: usize) -> Result<HkRun> {
    check_state(x0)?;
    let n = x0.len();
    cfg.validate(n)?;
    let gap = |x: &[f64]| -> Vec<f64> { x.iter().map(|v| (v - cfg.truth).abs()).collect() };
    let mut states = vec![x0.to_vec()];
    let mut residuals = Vec::new();
    let mut gap_states = vec![gap(x0)];
    let mut gap_residuals = Vec::new();
    let mut last_interaction = vec![vec![None; n]; n];
    let mut stationary_at = None;
    let mut x = x0.to_vec();
    for k in 0..max_steps {
        let (next, hoods) = hk_step(&x, cfg);
        if next == x {
            stationary_at = Some(k);
            break;
        }
        for (i, hood) in hoods.iter().enumerate() {
            for &j in hood {
                if j != i {
                    last_interaction[i][j] = Some(k);
                }
            }
        }
        let g_now = gap(&x);
        let g_next = gap(&next);
        let mut delta = Vec::with_capacity(n);
        let mut gap_delta = Vec::with_capacity(n);
        for i in 0..n {
            delta.push(neighborhood_mean(&x, &hoods[i]) - next[i]);
            let avg_gap = hoods[i].iter().map(|&j| g_now[j]).sum::<f64>() / hoods[i].len() as f64;
            gap_delta.push(avg_gap - g_next[i]);
        }
        residuals.push(delta);
        gap_residuals.push(gap_delta);
        states.push(next.clone());
        gap_states.push(g_next);
        x = next;
    }
    if stationary_at.is_none() && hk_step(&x, cfg).0 == x {
        stationary_at = Some(states.len() - 1);
    }
    let last = states.len() - 1;
    let frozen_since = (0..n)
        .map(|i| {
            let mut k = last;
            while k > 0 && states[k - 1][i] == states[last][i] {
                k -= 1;
            }
            k
        })
        .collect();
    let report = ClusterReport::from_state(&x, cfg.epsilon, cfg.truth);
    Ok(HkRun {
        trajectory: Trajectory::from_parts(states, residuals, Vec::new())?,
        truth_gap: Trajectory::from_parts(gap_states, gap_residuals, Vec::new())?,
        report,
        stationary_at,
        frozen_since,
        last_interaction,
    })
}

/// Confidence-weight matrices of a pure bounded-confidence run, one per step;
/// after stationarity the last matrix repeats.
pub fn hk_weight_sequence(x0: &[f64], epsilon: f64, steps: usize) -> Result<Vec<RowStochasticMatrix>> {
    check_state(x0)?;
    let cfg = HkConfig::pure(x0.len(), epsilon);
    cfg.validate(x0.len())?;
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps.max(1) {
        out.push(hk_weights(&x, epsilon)?);
        x = hk_step(&x, &cfg).0;
    }
    Ok(out)
}
