use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::graph::{strong_components, ComponentClass, Cut};
use crate::sequences::MatrixSequence;
use crate::stochastic::RowStochasticMatrix;
use crate::tolerances::{tail_window, CONSENSUS_TOL, DIVERGENCE_FLOOR, FEAS_TOL, RESIDUAL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AgentStatus {
    Converged { limit: f64 },
    DivergingToMinusInfinity,
    Oscillating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub status: Vec<AgentStatus>,
    pub consensus: bool,
    pub consensus_value: Option<f64>,
    /// Every agent drifts to −∞ together.
    pub common_divergence: bool,
    pub residual_vanishes: Vec<bool>,
    pub tail_window: usize,
}

impl ConvergenceVerdict {
    pub fn any_oscillating(&self) -> bool {
        self.status.iter().any(|s| matches!(s, AgentStatus::Oscillating))
    }

    pub fn any_diverging(&self) -> bool {
        self.status.iter().any(|s| matches!(s, AgentStatus::DivergingToMinusInfinity))
    }
}

fn diverges(tail: &[f64]) -> bool {
    let steps: Vec<f64> = tail.windows(2).map(|w| w[0] - w[1]).collect();
    if steps.iter().any(|&d| d < 0.0) || steps.iter().all(|&d| d == 0.0) {
        return false;
    }
    if *tail.last().expect("nonempty tail") < -DIVERGENCE_FLOOR {
        return true;
    }
    // decrements that do not shrink keep pushing the state down without bound
    let half = steps.len() / 2;
    let early_mean = steps[..half].iter().sum::<f64>() / half as f64;
    let late_min = steps[half..].iter().cloned().fold(f64::INFINITY, f64::min);
    late_min >= 0.5 * early_mean
}

/// Per-agent convergence over the last `tail_window(K)` steps.
pub fn classify(traj: &Trajectory) -> Result<ConvergenceVerdict> {
    let steps = traj.steps();
    let tail = tail_window(steps);
    if steps < tail {
        return Err(Error::TooShort { len: steps + 1, required: tail + 1 });
    }
    let n = traj.n();
    let start = steps - tail;
    let mut status = Vec::with_capacity(n);
    let mut residual_vanishes = Vec::with_capacity(n);
    for i in 0..n {
        let values: Vec<f64> = (start..=steps).map(|k| traj.state(k)[i]).collect();
        let variation: f64 = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        status.push(if variation < CONSENSUS_TOL {
            AgentStatus::Converged { limit: values[tail] }
        } else if diverges(&values) {
            AgentStatus::DivergingToMinusInfinity
        } else {
            AgentStatus::Oscillating
        });
        let worst = (start..steps).map(|k| traj.residual(k)[i].abs()).fold(0.0, f64::max);
        residual_vanishes.push(worst < RESIDUAL_TOL);
    }
    let limits: Vec<f64> = status
        .iter()
        .filter_map(|s| match s {
            AgentStatus::Converged { limit } => Some(*limit),
            _ => None,
        })
        .collect();
    let consensus = limits.len() == n && {
        let hi = limits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = limits.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo < CONSENSUS_TOL
    };
    let consensus_value = consensus.then(|| limits.iter().sum::<f64>() / n as f64);
    let common_divergence = status.iter().all(|s| matches!(s, AgentStatus::DivergingToMinusInfinity));
    Ok(ConvergenceVerdict {
        status,
        consensus,
        consensus_value,
        common_divergence,
        residual_vanishes,
        tail_window: tail,
    })
}

/// Which exponent the product and contraction estimates use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentConvention {
    /// `exp(−η · s)`.
    AsStated,
    /// `exp(−s / η)`, the form that holds for every admissible input.
    Corrected,
}

impl ExponentConvention {
    fn apply(self, sum: f64, eta: f64) -> f64 {
        match self {
            ExponentConvention::AsStated => (-eta * sum).exp(),
            ExponentConvention::Corrected => (-sum / eta).exp(),
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("eta {eta} must lie in (0, 1]")))
    }
}

/// Returns `(Π(1 − a_i), exp bound)` for `a_i ∈ [0, 1 − η]`.
pub fn exp_product_bound(a: &[f64], eta: f64, convention: ExponentConvention) -> Result<(f64, f64)> {
    check_eta(eta)?;
    if let Some(&bad) = a.iter().find(|&&v| !(0.0..=1.0 - eta).contains(&v)) {
        return Err(Error::OutOfRange(format!("factor {bad} outside [0, {}]", 1.0 - eta)));
    }
    let product = a.iter().map(|v| 1.0 - v).product();
    Ok((product, convention.apply(a.iter().sum(), eta)))
}

fn check_window(k0: usize, k0p: usize, k1: usize) -> Result<()> {
    if k0 <= k0p && k0p <= k1 {
        Ok(())
    } else {
        Err(Error::InvalidWindow { k0, k1 })
    }
}

/// Flow from the right side into the left side over `[from, to]`.
fn windowed_flow(seq: &MatrixSequence, cut: &Cut, from: usize, to: usize, eta: f64) -> Result<f64> {
    if cut.n() != seq.n() {
        return Err(Error::Dimension { expected: seq.n(), found: cut.n() });
    }
    let mut flow = 0.0;
    for k in from..=to {
        let w = seq.at(k)?;
        if let Some(i) = (0..seq.n()).find(|&i| w.get(i, i) < eta) {
            return Err(Error::OutOfRange(format!("w[{i}][{i}]({k}) below eta {eta}")));
        }
        for &i in cut.left() {
            for &j in cut.right() {
                flow += w.get(i, j);
            }
        }
    }
    Ok(flow)
}

/// Contraction coefficient `θ` with `M_I(k1+1) ≤ θ M_I(k0') + (1 − θ) M(k0)`.
pub fn flow_contraction_bound(
    seq: &MatrixSequence,
    cut: &Cut,
    k0: usize,
    k0p: usize,
    k1: usize,
    eta: f64,
    convention: ExponentConvention,
) -> Result<f64> {
    check_eta(eta)?;
    check_window(k0, k0p, k1)?;
    windowed_flow(seq, cut, k0, k1, eta)?;
    let flow = windowed_flow(seq, cut, k0p, k1, eta)?;
    Ok(convention.apply(flow, eta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayedBound {
    pub theta: f64,
    /// Set when the coefficient leaves `[0, 1]` and the estimate says nothing.
    pub exceeds_one: bool,
}

/// `θ̄ = η^{d*} exp(−η^{d*+1} w_{I,J}(k0':k1))` for delayed recursions.
pub fn delayed_flow_contraction_bound(
    seq: &MatrixSequence,
    cut: &Cut,
    k0: usize,
    k0p: usize,
    k1: usize,
    eta: f64,
    d_star: usize,
) -> Result<DelayedBound> {
    check_eta(eta)?;
    check_window(k0, k0p, k1)?;
    windowed_flow(seq, cut, k0, k1, eta)?;
    let flow = windowed_flow(seq, cut, k0p, k1, eta)?;
    let d = d_star as i32;
    let theta = eta.powi(d) * (-eta.powi(d + 1) * flow).exp();
    Ok(DelayedBound { theta, exceeds_one: theta > 1.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortedTransform {
    /// Ascending rearrangement `y(k)` of each state.
    pub sorted_states: Vec<Vec<f64>>,
    /// `σ(k)`: `y_i(k) = x_{σ_i(k)}(k)`.
    pub permutations: Vec<Vec<usize>>,
    /// `V(k)` with `v_ij(k) = w_{σ_i(k+1), σ_j(k)}(k)`.
    pub permuted: Vec<Matrix>,
    /// Whether `y(k+1) ≤ V(k) y(k)` held at every step (up to the feasibility tolerance).
    pub inequality_holds: bool,
}

pub fn sorted_transform(traj: &Trajectory, seq: &MatrixSequence) -> Result<SortedTransform> {
    if traj.n() != seq.n() {
        return Err(Error::Dimension { expected: seq.n(), found: traj.n() });
    }
    let n = traj.n();
    let permutations: Vec<Vec<usize>> = traj
        .states()
        .map(|x| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let sorted_states: Vec<Vec<f64>> =
        traj.states().zip(&permutations).map(|(x, s)| s.iter().map(|&i| x[i]).collect()).collect();
    let scale = sorted_states.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut permuted = Vec::with_capacity(traj.steps());
    let mut inequality_holds = true;
    for k in 0..traj.steps() {
        let w = seq.at(k)?;
        let (next, now) = (&permutations[k + 1], &permutations[k]);
        let v = Matrix::from_fn(n, |i, j| w.get(next[i], now[j]));
        let bound = v.mul_vec(&sorted_states[k]);
        if sorted_states[k + 1].iter().zip(&bound).any(|(y, b)| *y > b + FEAS_TOL * scale) {
            inequality_holds = false;
        }
        permuted.push(v);
    }
    Ok(SortedTransform { sorted_states, permutations, permuted, inequality_holds })
}

/// For a matrix whose graph has a non-isolated strong component, builds a feasible
/// non-convergent solution: a source component held at 1, one of its out-neighbors
/// alternating between its incoming weight and 0, everyone else at 0.
/// Returns `None` when every component is isolated.
pub fn non_convergent_witness(w: &RowStochasticMatrix, steps: usize) -> Result<Option<Trajectory>> {
    let g = w.graph();
    let scc = strong_components(&g);
    let Some(source) = (0..scc.components.len()).find(|&c| scc.classes[c] == ComponentClass::Source) else {
        return Ok(None);
    };
    let members = &scc.components[source];
    let (from, to) = members
        .iter()
        .find_map(|&i| g.out_neighbors(i).find(|&j| scc.component_of[j] != source).map(|j| (i, j)))
        .expect("source components have an outgoing arc");
    let weight = w.get(to, from);
    let n = w.n();
    let states: Vec<Vec<f64>> = (0..=steps)
        .map(|k| {
            let mut x = vec![0.0; n];
            for &i in members {
                x[i] = 1.0;
            }
            if k % 2 == 1 {
                x[to] = weight;
            }
            x
        })
        .collect();
    let seq = MatrixSequence::constant(w.clone());
    Ok(Some(Trajectory::from_states(&seq, &states)?))
}
