//! Trajectory engines for averaging recursions, with nonnegative disturbances and delays.

mod diagnostics;
mod io;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::sequences::MatrixSequence;
use crate::stochastic::{RowStochasticMatrix, SubstochasticMatrix};
use crate::tolerances::FEAS_TOL;

pub use diagnostics::{
    classify, delayed_flow_contraction_bound, exp_product_bound, flow_contraction_bound, non_convergent_witness,
    sorted_transform, AgentStatus, ConvergenceVerdict, DelayedBound, ExponentConvention, SortedTransform,
};
pub use io::TrajectoryRecord;

/// States `x(0..=K)`, residuals `Δ(0..K)` and, for delayed runs, the states before time zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n: usize,
    states: Vec<f64>,
    residuals: Vec<f64>,
    /// `x(−d*) … x(−1)`, oldest first.
    history: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Smallest residual entry over the run.
    pub min_residual: f64,
    /// Largest one-step increase of the running maximum (windowed over the delay bound).
    pub max_increase: f64,
    pub tolerance: f64,
}

impl Trajectory {
    fn start(n: usize, x0: &[f64], history: Vec<Vec<f64>>, steps: usize) -> Self {
        let mut states = Vec::with_capacity((steps + 1) * n);
        states.extend_from_slice(x0);
        Trajectory { n, states, residuals: Vec::with_capacity(steps * n), history }
    }

    fn push(&mut self, x: &[f64], delta: &[f64]) {
        self.states.extend_from_slice(x);
        self.residuals.extend_from_slice(delta);
    }

    /// Builds a trajectory from observed states, deriving `Δ(k) = W(k)x(k) − x(k+1)`.
    pub fn from_states(seq: &MatrixSequence, states: &[Vec<f64>]) -> Result<Self> {
        let n = seq.n();
        let first = states.first().ok_or(Error::Empty)?;
        check_len(n, first.len())?;
        let mut traj = Trajectory::start(n, first, Vec::new(), states.len() - 1);
        for k in 0..states.len() - 1 {
            check_len(n, states[k + 1].len())?;
            let pred = seq.at(k)?.apply(&states[k]);
            let delta: Vec<f64> = pred.iter().zip(&states[k + 1]).map(|(p, x)| p - x).collect();
            traj.push(&states[k + 1], &delta);
        }
        Ok(traj)
    }

    /// Builds a trajectory from states and residuals given directly.
    pub fn from_parts(states: Vec<Vec<f64>>, residuals: Vec<Vec<f64>>, history: Vec<Vec<f64>>) -> Result<Self> {
        let first = states.first().ok_or(Error::Empty)?;
        let n = first.len();
        if residuals.len() + 1 != states.len() {
            return Err(Error::Dimension { expected: states.len() - 1, found: residuals.len() });
        }
        for v in states.iter().chain(&residuals).chain(&history) {
            check_len(n, v.len())?;
        }
        Ok(Trajectory { n, states: states.concat(), residuals: residuals.concat(), history })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of recorded steps `K`; states are indexed `0..=K`.
    pub fn steps(&self) -> usize {
        self.states.len() / self.n - 1
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.n..(k + 1) * self.n]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.steps())
    }

    pub fn residual(&self, k: usize) -> &[f64] {
        &self.residuals[k * self.n..(k + 1) * self.n]
    }

    pub fn history(&self) -> &[Vec<f64>] {
        &self.history
    }

    pub fn delay_bound(&self) -> usize {
        self.history.len()
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks(self.n)
    }

    pub fn agent(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().skip(i).step_by(self.n).copied()
    }

    pub fn max(&self, k: usize) -> f64 {
        self.state(k).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self, k: usize) -> f64 {
        self.state(k).iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self, k: usize) -> f64 {
        self.max(k) - self.min(k)
    }

    /// `max{M(k), …, M(k − d*)}`, reaching into the stored history when needed.
    pub fn window_max(&self, k: usize) -> f64 {
        let d = self.delay_bound();
        let mut m = f64::NEG_INFINITY;
        for back in 0..=d {
            let v = if back <= k {
                self.max(k - back)
            } else {
                let idx = d - (back - k);
                self.history[idx].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            };
            m = m.max(v);
        }
        m
    }

    /// Residual sign and running-maximum monotonicity, with tolerance scaled by the state magnitude.
    pub fn feasibility(&self) -> FeasibilityReport {
        let scale = self.states.iter().chain(self.history.iter().flatten()).fold(1.0f64, |a, &v| a.max(v.abs()));
        let tolerance = FEAS_TOL * scale;
        let min_residual = self.residuals.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut max_increase = f64::NEG_INFINITY;
        for k in 0..self.steps() {
            max_increase = max_increase.max(self.window_max(k + 1) - self.window_max(k));
        }
        let min_residual = if self.residuals.is_empty() { 0.0 } else { min_residual };
        let max_increase = if self.steps() == 0 { 0.0 } else { max_increase };
        FeasibilityReport {
            feasible: min_residual >= -tolerance && max_increase <= tolerance,
            min_residual,
            max_increase,
            tolerance,
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceKind {
    Zero,
    /// `Δ_i(k) = scale · u · decay^k` with `u` uniform on `[0, 1)`.
    VanishingRandom {
        scale: f64,
        decay: f64,
    },
    /// `Δ_i(k) = scale · u`.
    ConstantRandom {
        scale: f64,
    },
    /// Replays the listed vectors; past the end they repeat when `cyclic`, else are zero.
    AdversarialReplay {
        deltas: Vec<Vec<f64>>,
        #[serde(default)]
        cyclic: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbancePolicy {
    #[serde(flatten)]
    pub kind: DisturbanceKind,
    #[serde(default)]
    pub seed: u64,
}

impl DisturbancePolicy {
    pub fn zero() -> Self {
        DisturbancePolicy { kind: DisturbanceKind::Zero, seed: 0 }
    }

    pub fn vanishing(scale: f64, decay: f64, seed: u64) -> Self {
        DisturbancePolicy { kind: DisturbanceKind::VanishingRandom { scale, decay }, seed }
    }

    pub fn constant(scale: f64, seed: u64) -> Self {
        DisturbancePolicy { kind: DisturbanceKind::ConstantRandom { scale }, seed }
    }

    pub fn replay(deltas: Vec<Vec<f64>>, cyclic: bool) -> Self {
        DisturbancePolicy { kind: DisturbanceKind::AdversarialReplay { deltas, cyclic }, seed: 0 }
    }

    fn sampler(&self, n: usize) -> Result<Sampler<'_>> {
        match &self.kind {
            DisturbanceKind::VanishingRandom { scale, decay } => {
                if !(*scale >= 0.0 && scale.is_finite() && (0.0..1.0).contains(decay)) {
                    return Err(Error::OutOfRange("vanishing disturbance needs scale ≥ 0 and decay in [0, 1)".into()));
                }
            }
            DisturbanceKind::ConstantRandom { scale } => {
                if !(*scale >= 0.0 && scale.is_finite()) {
                    return Err(Error::OutOfRange("disturbance scale must be finite and nonnegative".into()));
                }
            }
            DisturbanceKind::AdversarialReplay { deltas, cyclic } => {
                if let Some(bad) = deltas.iter().find(|d| d.len() != n) {
                    return Err(Error::Dimension { expected: n, found: bad.len() });
                }
                if *cyclic && deltas.is_empty() {
                    return Err(Error::OutOfRange("cyclic replay needs at least one vector".into()));
                }
            }
            DisturbanceKind::Zero => {}
        }
        Ok(Sampler { policy: self, rng: ChaCha8Rng::seed_from_u64(self.seed), buf: vec![0.0; n] })
    }
}

struct Sampler<'a> {
    policy: &'a DisturbancePolicy,
    rng: ChaCha8Rng,
    buf: Vec<f64>,
}

impl Sampler<'_> {
    fn next(&mut self, k: usize) -> Result<&[f64]> {
        match &self.policy.kind {
            DisturbanceKind::Zero => self.buf.iter_mut().for_each(|v| *v = 0.0),
            DisturbanceKind::VanishingRandom { scale, decay } => {
                let factor = scale * decay.powi(k.min(i32::MAX as usize) as i32);
                for v in &mut self.buf {
                    *v = factor * self.rng.gen::<f64>();
                }
            }
            DisturbanceKind::ConstantRandom { scale } => {
                for v in &mut self.buf {
                    *v = scale * self.rng.gen::<f64>();
                }
            }
            DisturbanceKind::AdversarialReplay { deltas, cyclic } => {
                let src = if *cyclic { deltas.get(k % deltas.len()) } else { deltas.get(k) };
                match src {
                    Some(d) => self.buf.copy_from_slice(d),
                    None => self.buf.iter_mut().for_each(|v| *v = 0.0),
                }
            }
        }
        for (agent, &value) in self.buf.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(Error::NegativeDisturbance { step: k, agent, value });
            }
        }
        Ok(&self.buf)
    }
}

/// `x(k+1) = W(k) x(k)`.
pub fn run_degroot(seq: &MatrixSequence, x0: &[f64], steps: usize) -> Result<Trajectory> {
    run_rai(seq, x0, &DisturbancePolicy::zero(), steps)
}

/// `x(k+1) = W(k) x(k) − Δ(k)` with `Δ(k) ≥ 0` drawn from the policy.
pub fn run_rai(seq: &MatrixSequence, x0: &[f64], policy: &DisturbancePolicy, steps: usize) -> Result<Trajectory> {
    let n = seq.n();
    check_len(n, x0.len())?;
    let mut sampler = policy.sampler(n)?;
    let mut traj = Trajectory::start(n, x0, Vec::new(), steps);
    let mut x = x0.to_vec();
    for k in 0..steps {
        let mut next = seq.at(k)?.apply(&x);
        let delta = sampler.next(k)?;
        for (v, d) in next.iter_mut().zip(delta) {
            *v -= d;
        }
        traj.push(&next, delta);
        x = next;
    }
    Ok(traj)
}

/// Integer delay matrices `d_ij(k)` bounded by `d_star`, with zero diagonal.
#[derive(Clone)]
pub struct DelaySpec {
    n: usize,
    d_star: usize,
    source: DelaySource,
}

#[derive(Clone)]
enum DelaySource {
    Cyclic(Vec<Vec<Vec<usize>>>),
    Generator(Arc<dyn Fn(usize) -> Vec<Vec<usize>> + Send + Sync>),
}

impl std::fmt::Debug for DelaySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DelaySpec").field("n", &self.n).field("d_star", &self.d_star).finish_non_exhaustive()
    }
}

/// JSON form: `{"d_star": 1, "pattern": [D(0), D(1), ...]}` with the list repeating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayConfig {
    pub d_star: usize,
    pub pattern: Vec<Vec<Vec<usize>>>,
}

fn validate_delays(d: &[Vec<usize>], n: usize, d_star: usize) -> Result<()> {
    check_len(n, d.len())?;
    for (i, row) in d.iter().enumerate() {
        check_len(n, row.len())?;
        if row[i] != 0 {
            return Err(Error::InvalidDelay(format!("self delay d[{i}][{i}] must be 0")));
        }
        if let Some(&bad) = row.iter().find(|&&v| v > d_star) {
            return Err(Error::InvalidDelay(format!("delay {bad} exceeds bound {d_star}")));
        }
    }
    Ok(())
}

impl DelaySpec {
    pub fn constant(d: Vec<Vec<usize>>, d_star: usize) -> Result<Self> {
        Self::cyclic(vec![d], d_star)
    }

    pub fn zero(n: usize) -> Self {
        DelaySpec { n, d_star: 0, source: DelaySource::Cyclic(vec![vec![vec![0; n]; n]]) }
    }

    /// Delay matrices repeating with the length of `pattern`.
    pub fn cyclic(pattern: Vec<Vec<Vec<usize>>>, d_star: usize) -> Result<Self> {
        let n = pattern.first().ok_or(Error::Empty)?.len();
        for d in &pattern {
            validate_delays(d, n, d_star)?;
        }
        Ok(DelaySpec { n, d_star, source: DelaySource::Cyclic(pattern) })
    }

    /// Generated delays; bounds are checked at each step of a run.
    pub fn from_generator(n: usize, d_star: usize, f: Arc<dyn Fn(usize) -> Vec<Vec<usize>> + Send + Sync>) -> Self {
        DelaySpec { n, d_star, source: DelaySource::Generator(f) }
    }

    pub fn from_config(cfg: &DelayConfig) -> Result<Self> {
        Self::cyclic(cfg.pattern.clone(), cfg.d_star)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_star(&self) -> usize {
        self.d_star
    }

    /// The delay matrix when it does not depend on `k`.
    pub fn as_constant(&self) -> Option<&Vec<Vec<usize>>> {
        match &self.source {
            DelaySource::Cyclic(p) if p.iter().all(|d| d == &p[0]) => Some(&p[0]),
            _ => None,
        }
    }

    pub fn at(&self, k: usize) -> Result<Vec<Vec<usize>>> {
        match &self.source {
            DelaySource::Cyclic(p) => Ok(p[k % p.len()].clone()),
            DelaySource::Generator(f) => {
                let d = f(k);
                validate_delays(&d, self.n, self.d_star)?;
                Ok(d)
            }
        }
    }
}

/// Delayed step `Σ_r Σ_j [d_ij = r] w_ij x_j(k − r)`: delay classes outer, columns inner,
/// zero weights skipped. This ordering matches a row of the stacked matrix exactly.
fn delayed_apply(w: &Matrix, d: &[Vec<usize>], window: &[Vec<f64>], d_star: usize) -> Vec<f64> {
    let n = w.n();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for r in 0..=d_star {
                let past = &window[r];
                for j in 0..n {
                    let wij = w.get(i, j);
                    if wij != 0.0 && d[i][j] == r {
                        acc += wij * past[j];
                    }
                }
            }
            acc
        })
        .collect()
}

fn run_delayed_core(
    n: usize,
    matrix_at: impl Fn(usize) -> Result<Matrix>,
    delays: &DelaySpec,
    history: &[Vec<f64>],
    policy: &DisturbancePolicy,
    steps: usize,
) -> Result<Trajectory> {
    check_len(n, delays.n())?;
    let d_star = delays.d_star();
    if history.len() != d_star + 1 {
        return Err(Error::HistoryLength { expected: d_star + 1, found: history.len() });
    }
    for h in history {
        check_len(n, h.len())?;
    }
    let mut sampler = policy.sampler(n)?;
    let x0 = &history[d_star];
    let mut traj = Trajectory::start(n, x0, history[..d_star].to_vec(), steps);
    // window[r] = x(k − r)
    let mut window: Vec<Vec<f64>> = history.iter().rev().cloned().collect();
    for k in 0..steps {
        let d = delays.at(k)?;
        let w = matrix_at(k)?;
        let mut next = delayed_apply(&w, &d, &window, d_star);
        let delta = sampler.next(k)?;
        for (v, dv) in next.iter_mut().zip(delta) {
            *v -= dv;
        }
        traj.push(&next, delta);
        window.pop();
        window.insert(0, next);
    }
    Ok(traj)
}

/// `x_i(k+1) = Σ_j w_ij(k) x_j(k − d_ij(k)) − Δ_i(k)`, started from `history = [x(−d*), …, x(0)]`.
pub fn run_delayed_rai(
    seq: &MatrixSequence,
    delays: &DelaySpec,
    history: &[Vec<f64>],
    policy: &DisturbancePolicy,
    steps: usize,
) -> Result<Trajectory> {
    run_delayed_core(seq.n(), |k| Ok(seq.at(k)?.matrix().clone()), delays, history, policy, steps)
}

/// Undisturbed delayed recursion driven by a constant substochastic matrix.
pub fn run_delayed_linear(
    a: &SubstochasticMatrix,
    delays: &DelaySpec,
    history: &[Vec<f64>],
    steps: usize,
) -> Result<Trajectory> {
    let m = a.matrix().clone();
    run_delayed_core(a.n(), |_| Ok(m.clone()), delays, history, &DisturbancePolicy::zero(), steps)
}

/// Stacked delay-free matrix over `(x(k), x(k−1), …, x(k−d*))`: first block row holds
/// `W_r` (entries of `W` whose delay is `r`), identity shift blocks sit below.
pub fn xiao_stack(w: &RowStochasticMatrix, delays: &[Vec<usize>], d_star: usize) -> Result<RowStochasticMatrix> {
    let n = w.n();
    validate_delays(delays, n, d_star)?;
    let size = n * (d_star + 1);
    let mut xi = Matrix::zeros(size);
    for i in 0..n {
        for j in 0..n {
            let v = w.get(i, j);
            if v != 0.0 {
                xi.set(i, delays[i][j] * n + j, v);
            }
        }
    }
    for r in 0..d_star {
        for i in 0..n {
            xi.set((r + 1) * n + i, r * n + i, 1.0);
        }
    }
    RowStochasticMatrix::new(xi)
}

/// Stacks a history `[x(−d*), …, x(0)]` into the initial stacked state.
pub fn stack_history(history: &[Vec<f64>]) -> Vec<f64> {
    history.iter().rev().flatten().copied().collect()
}
