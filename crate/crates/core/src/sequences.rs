//! Time-varying matrix sequences and the reciprocity and balance checks run on them.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dense::{gcd, Matrix};
use crate::error::{Error, Result};
use crate::graph::{raw_cut_flow, Cut, WeightedDigraph};
use crate::stochastic::RowStochasticMatrix;
use crate::tolerances::{CUT_ENUMERATION_LIMIT, DIVERGENCE_THRESHOLD};

/// Pure map from a step index to the matrix used at that step.
pub type Generator = Arc<dyn Fn(usize) -> RowStochasticMatrix + Send + Sync>;

#[derive(Clone)]
pub enum SequenceSource {
    Constant(RowStochasticMatrix),
    /// Finite list; with `cyclic` it repeats forever.
    Explicit {
        matrices: Vec<RowStochasticMatrix>,
        cyclic: bool,
    },
    Generator(Generator),
}

impl fmt::Debug for SequenceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceSource::Constant(w) => f.debug_tuple("Constant").field(w).finish(),
            SequenceSource::Explicit { matrices, cyclic } => {
                f.debug_struct("Explicit").field("len", &matrices.len()).field("cyclic", cyclic).finish()
            }
            SequenceSource::Generator(_) => f.write_str("Generator(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixSequence {
    n: usize,
    source: SequenceSource,
    period: usize,
    horizon: usize,
}

fn default_horizon(n: usize, period: usize) -> usize {
    10 * n * period.max(1)
}

impl MatrixSequence {
    pub fn constant(w: RowStochasticMatrix) -> Self {
        let n = w.n();
        MatrixSequence { n, source: SequenceSource::Constant(w), period: 1, horizon: default_horizon(n, 1) }
    }

    /// Finite list of matrices. A cyclic list has period equal to its length;
    /// otherwise the sequence is only defined up to the list length, which is also its horizon.
    pub fn explicit(matrices: Vec<RowStochasticMatrix>, cyclic: bool) -> Result<Self> {
        let first = matrices.first().ok_or(Error::Empty)?;
        let n = first.n();
        if let Some(bad) = matrices.iter().find(|w| w.n() != n) {
            return Err(Error::Dimension { expected: n, found: bad.n() });
        }
        let len = matrices.len();
        let (period, horizon) = if cyclic { (len, default_horizon(n, len)) } else { (0, len) };
        Ok(MatrixSequence { n, source: SequenceSource::Explicit { matrices, cyclic }, period, horizon })
    }

    /// Procedural sequence. `period` is 0 when the generator is not periodic;
    /// a declared period is trusted, so `f(k + period)` must equal `f(k)`.
    pub fn from_generator(n: usize, period: usize, f: Generator) -> Self {
        MatrixSequence { n, source: SequenceSource::Generator(f), period, horizon: default_horizon(n, period) }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Declared period, 0 if none.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.period > 0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn source(&self) -> &SequenceSource {
        &self.source
    }

    /// Largest step index + 1 at which the sequence is defined, if bounded.
    pub fn defined_len(&self) -> Option<usize> {
        match &self.source {
            SequenceSource::Explicit { matrices, cyclic: false } => Some(matrices.len()),
            _ => None,
        }
    }

    pub fn at(&self, k: usize) -> Result<Cow<'_, RowStochasticMatrix>> {
        let w = match &self.source {
            SequenceSource::Constant(w) => Cow::Borrowed(w),
            SequenceSource::Explicit { matrices, cyclic } => {
                if *cyclic {
                    Cow::Borrowed(&matrices[k % matrices.len()])
                } else {
                    Cow::Borrowed(matrices.get(k).ok_or_else(|| {
                        Error::OutOfRange(format!("step {k} beyond sequence length {}", matrices.len()))
                    })?)
                }
            }
            SequenceSource::Generator(f) => Cow::Owned(f(k)),
        };
        if w.n() != self.n {
            return Err(Error::Dimension { expected: self.n, found: w.n() });
        }
        Ok(w)
    }

    fn matrices(&self, from: usize, to: usize) -> Result<Vec<Matrix>> {
        (from..to).map(|k| Ok(self.at(k)?.matrix().clone())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistentGraphEstimate {
    /// 0/1 weights on persistent arcs, self-loops included.
    pub graph: WeightedDigraph,
    /// Σ_{k < horizon} w_ij(k).
    pub partial_sums: Matrix,
    pub divergence_threshold: f64,
    /// True for periodic sequences, where the verdict does not depend on the threshold.
    pub exact: bool,
}

pub fn persistent_graph(seq: &MatrixSequence) -> Result<PersistentGraphEstimate> {
    persistent_graph_with_threshold(seq, DIVERGENCE_THRESHOLD)
}

pub fn persistent_graph_with_threshold(seq: &MatrixSequence, threshold: f64) -> Result<PersistentGraphEstimate> {
    let n = seq.n();
    let mut partial_sums = Matrix::zeros(n);
    let horizon = match seq.defined_len() {
        Some(len) => seq.horizon().min(len),
        None => seq.horizon(),
    };
    for k in 0..horizon {
        let w = seq.at(k)?;
        for i in 0..n {
            for j in 0..n {
                partial_sums.set(i, j, partial_sums.get(i, j) + w.get(i, j));
            }
        }
    }
    let mut marks = Matrix::zeros(n);
    if seq.is_periodic() {
        let mut period_sums = Matrix::zeros(n);
        for k in 0..seq.period() {
            let w = seq.at(k)?;
            for i in 0..n {
                for j in 0..n {
                    period_sums.set(i, j, period_sums.get(i, j) + w.get(i, j));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if period_sums.get(i, j) > 0.0 {
                    marks.set(i, j, 1.0);
                }
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                if partial_sums.get(i, j) >= threshold {
                    marks.set(i, j, 1.0);
                }
            }
        }
    }
    Ok(PersistentGraphEstimate {
        graph: WeightedDigraph::new(marks),
        partial_sums,
        divergence_threshold: threshold,
        exact: seq.is_periodic(),
    })
}

fn validate_sets(n: usize, left: &[usize], right: &[usize]) -> Result<()> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::InvalidNodeSet("node sets must be nonempty".into()));
    }
    let mut seen = vec![false; n];
    for &v in left.iter().chain(right) {
        if v >= n {
            return Err(Error::InvalidNodeSet(format!("node {v} outside 0..{n}")));
        }
        if seen[v] {
            return Err(Error::InvalidNodeSet(format!("node {v} repeated or in both sets")));
        }
        seen[v] = true;
    }
    Ok(())
}

/// Number of distinct pairs `(i, j) ∈ I × J` with `w_ij(k) > 0` for some `k ∈ [k0, k1]`,
/// i.e. distinct arcs from `J` into `I` seen in the window.
pub fn arc_count(seq: &MatrixSequence, into: &[usize], from: &[usize], k0: usize, k1: usize) -> Result<usize> {
    validate_sets(seq.n(), into, from)?;
    if k0 > k1 || seq.defined_len().is_some_and(|len| k1 >= len) {
        return Err(Error::InvalidWindow { k0, k1 });
    }
    let mut seen = vec![false; into.len() * from.len()];
    for k in k0..=k1 {
        let w = seq.at(k)?;
        for (a, &i) in into.iter().enumerate() {
            for (b, &j) in from.iter().enumerate() {
                if w.get(i, j) > 0.0 {
                    seen[a * from.len() + b] = true;
                }
            }
        }
    }
    Ok(seen.iter().filter(|&&s| s).count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocityReport {
    pub holds: bool,
    pub m: usize,
    pub t: usize,
    /// Left side receives `m` arcs in the window without answering within `t` more steps.
    pub violating_cut: Option<Cut>,
    pub violating_window: Option<(usize, usize)>,
    pub exact: bool,
}

fn require_enumerable(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidNodeSet("cuts need at least two nodes".into()));
    }
    if n > CUT_ENUMERATION_LIMIT {
        return Err(Error::TooManyNodes { n, limit: CUT_ENUMERATION_LIMIT });
    }
    Ok(())
}

/// Off-diagonal positive arcs `(i, j)` per step (influence of `j` on `i`).
fn arc_lists(mats: &[Matrix]) -> Vec<Vec<(usize, usize)>> {
    mats.iter()
        .map(|m| {
            let n = m.n();
            let mut arcs = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i != j && m.get(i, j) > 0.0 {
                        arcs.push((i, j));
                    }
                }
            }
            arcs
        })
        .collect()
}

/// Checks that `m` arcs from `J` into `I` within any window `[k0, k1]` force an arc from
/// `I` into `J` within `[k0, k1 + t]`, over every oriented cut. Exact for periodic sequences.
pub fn check_reciprocity(seq: &MatrixSequence, m: usize, t: usize) -> Result<ReciprocityReport> {
    if m == 0 {
        return Err(Error::OutOfRange("reciprocity count must be at least 1".into()));
    }
    let n = seq.n();
    require_enumerable(n)?;
    let periodic = seq.is_periodic();
    // periodic: window starts cover one period and arc sets saturate after one more period
    let (starts, total) = if periodic {
        let p = seq.period();
        (p, 2 * p + t)
    } else {
        let h = match seq.defined_len() {
            Some(len) => seq.horizon().min(len),
            None => seq.horizon(),
        };
        (h, h)
    };
    let arcs = arc_lists(&seq.matrices(0, total)?);
    let full: u64 = (1u64 << n) - 1;
    let mut pairs_seen = vec![false; n * n];
    for mask in 1..full {
        let in_left = |v: usize| mask >> v & 1 == 1;
        for k0 in 0..starts {
            let last_k1 = if periodic { k0 + seq.period() - 1 } else { total - 1 };
            pairs_seen.iter_mut().for_each(|s| *s = false);
            let mut count = 0;
            let mut trigger = None;
            for (k, step_arcs) in arcs.iter().enumerate().take(last_k1 + 1).skip(k0) {
                for &(i, j) in step_arcs {
                    if in_left(i) && !in_left(j) && !pairs_seen[i * n + j] {
                        pairs_seen[i * n + j] = true;
                        count += 1;
                    }
                }
                if count >= m {
                    trigger = Some(k);
                    break;
                }
            }
            let Some(k1) = trigger else { continue };
            if k1 + t >= total {
                continue;
            }
            let answered = arcs[k0..=k1 + t].iter().any(|step| step.iter().any(|&(i, j)| !in_left(i) && in_left(j)));
            if !answered {
                return Ok(ReciprocityReport {
                    holds: false,
                    m,
                    t,
                    violating_cut: Some(Cut::from_mask(n, mask)?),
                    violating_window: Some((k0, k1)),
                    exact: periodic,
                });
            }
        }
    }
    Ok(ReciprocityReport { holds: true, m, t, violating_cut: None, violating_window: None, exact: periodic })
}

/// Sums `W(k0) + … + W(k0 + window)` for every start the checkers consider.
fn window_sums(seq: &MatrixSequence, window: usize) -> Result<(Vec<Matrix>, bool)> {
    let periodic = seq.is_periodic();
    let starts = if periodic {
        seq.period()
    } else {
        let h = match seq.defined_len() {
            Some(len) => seq.horizon().min(len),
            None => seq.horizon(),
        };
        h.saturating_sub(window)
    };
    let mats = seq.matrices(0, starts + window)?;
    let n = seq.n();
    let sums = (0..starts)
        .map(|k0| {
            let mut s = Matrix::zeros(n);
            for m in &mats[k0..=k0 + window] {
                for i in 0..n {
                    for j in 0..n {
                        s.set(i, j, s.get(i, j) + m.get(i, j));
                    }
                }
            }
            s
        })
        .collect();
    Ok((sums, periodic))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformCutBalanceReport {
    pub holds: bool,
    pub c: Option<f64>,
    /// Cut and window start where one windowed flow is positive and the other zero.
    pub witness: Option<(Cut, usize)>,
    pub exact: bool,
}

/// Windowed cut balance over windows of `window + 1` steps.
pub fn check_uniform_cut_balance(seq: &MatrixSequence, window: usize) -> Result<UniformCutBalanceReport> {
    let n = seq.n();
    require_enumerable(n)?;
    let (sums, exact) = window_sums(seq, window)?;
    let full: u64 = (1u64 << n) - 1;
    let mut c: f64 = 1.0;
    for mask in 1..full {
        let cut = Cut::from_mask(n, mask)?;
        for (k0, s) in sums.iter().enumerate() {
            let (into, out) = raw_cut_flow(s, &cut);
            if (into > 0.0) != (out > 0.0) {
                return Ok(UniformCutBalanceReport { holds: false, c: None, witness: Some((cut, k0)), exact });
            }
            if into > 0.0 {
                c = c.max(into / out);
            }
        }
    }
    Ok(UniformCutBalanceReport { holds: true, c: Some(c), witness: None, exact })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcBalanceReport {
    pub holds: bool,
    pub c: Option<f64>,
    pub exact: bool,
}

/// Windowed arc balance across the off-diagonal arcs of a persistent graph estimate.
pub fn check_arc_balance(
    seq: &MatrixSequence,
    persistent: &PersistentGraphEstimate,
    window: usize,
) -> Result<ArcBalanceReport> {
    if persistent.graph.n() != seq.n() {
        return Err(Error::Dimension { expected: seq.n(), found: persistent.graph.n() });
    }
    let arcs: Vec<(usize, usize)> = persistent.graph.arcs().into_iter().filter(|&(src, dst)| src != dst).collect();
    let (sums, exact) = window_sums(seq, window)?;
    if arcs.len() < 2 {
        return Ok(ArcBalanceReport { holds: true, c: Some(1.0), exact });
    }
    let mut c: f64 = 1.0;
    for s in &sums {
        let vals: Vec<f64> = arcs.iter().map(|&(src, dst)| s.get(dst, src)).collect();
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi == 0.0 {
            continue;
        }
        if lo == 0.0 {
            return Ok(ArcBalanceReport { holds: false, c: None, exact });
        }
        c = c.max(hi / lo);
    }
    Ok(ArcBalanceReport { holds: true, c: Some(c), exact })
}

/// Gossip schedule with silence between fires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GossipSpec {
    pub n: usize,
    /// Arcs `(j, i)`: at a fire, agent `i` averages with agent `j`.
    pub schedule: Vec<(usize, usize)>,
    pub alphas: Vec<f64>,
    /// Strictly increasing fire steps; offsets within one cycle when `cycle_length` is set.
    pub fire_times: Vec<usize>,
    #[serde(default)]
    pub cycle_length: Option<usize>,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    0.01
}

/// Builds the gossip sequence: at the `s`-th fire row `i_s` becomes
/// `α_s e_i + (1 − α_s) e_j`; every other step is the identity.
pub fn gossip_sequence(spec: &GossipSpec) -> Result<MatrixSequence> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::Empty);
    }
    if !(spec.eta > 0.0 && spec.eta <= 0.5) {
        return Err(Error::OutOfRange(format!("eta {} must lie in (0, 1/2]", spec.eta)));
    }
    for &(j, i) in &spec.schedule {
        if i >= n || j >= n || i == j {
            return Err(Error::InvalidNodeSet(format!("invalid gossip arc ({j}, {i})")));
        }
    }
    if spec.schedule.is_empty() {
        return Ok(MatrixSequence::constant(RowStochasticMatrix::identity(n)));
    }
    if spec.alphas.is_empty() {
        return Err(Error::OutOfRange("at least one alpha is required".into()));
    }
    for &a in &spec.alphas {
        if !(a >= spec.eta && a <= 1.0 - spec.eta) {
            return Err(Error::OutOfRange(format!("alpha {a} outside [{}, {}]", spec.eta, 1.0 - spec.eta)));
        }
    }
    if spec.fire_times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("fire times must be strictly increasing".into()));
    }
    if let Some(len) = spec.cycle_length {
        if len == 0 || spec.fire_times.last().is_some_and(|&t| t >= len) {
            return Err(Error::OutOfRange("fire offsets must lie inside the cycle".into()));
        }
    }

    let schedule = spec.schedule.clone();
    let alphas = spec.alphas.clone();
    let fires = spec.fire_times.clone();
    let cycle = spec.cycle_length;
    let per_cycle = fires.len();
    let period = match cycle {
        Some(len) if per_cycle > 0 => {
            let m = schedule.len();
            let a = alphas.len();
            let cycles_m = m / gcd(per_cycle, m);
            let cycles_a = a / gcd(per_cycle, a);
            len * (cycles_m / gcd(cycles_m, cycles_a) * cycles_a)
        }
        Some(_) => 1,
        None => 0,
    };
    let fire_index = move |k: usize| -> Option<usize> {
        match cycle {
            Some(len) => fires.binary_search(&(k % len)).ok().map(|idx| (k / len) * per_cycle + idx),
            None => fires.binary_search(&k).ok(),
        }
    };
    let f: Generator = Arc::new(move |k| match fire_index(k) {
        None => RowStochasticMatrix::identity(n),
        Some(s) => {
            let (j, i) = schedule[s % schedule.len()];
            let alpha = alphas[s % alphas.len()];
            let mut m = Matrix::identity(n);
            m.set(i, i, alpha);
            m.set(i, j, 1.0 - alpha);
            RowStochasticMatrix::new(m).expect("gossip rows are stochastic")
        }
    });
    let seq = MatrixSequence::from_generator(n, period, f);
    Ok(match (cycle, spec.fire_times.last()) {
        (None, Some(&last)) => seq.with_horizon(last + 1),
        _ => seq,
    })
}

/// Sequence description as accepted in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceConfig {
    Constant {
        matrix: RowStochasticMatrix,
        #[serde(default)]
        horizon: Option<usize>,
    },
    Explicit {
        matrices: Vec<RowStochasticMatrix>,
        #[serde(default)]
        cyclic: bool,
        #[serde(default)]
        horizon: Option<usize>,
    },
    Gossip {
        #[serde(flatten)]
        spec: GossipSpec,
        #[serde(default)]
        horizon: Option<usize>,
    },
    /// Confidence-weight matrices along a bounded-confidence run from `x0`.
    HkInduced { x0: Vec<f64>, epsilon: f64, steps: usize },
}

impl SequenceConfig {
    pub fn build(&self) -> Result<MatrixSequence> {
        let (seq, horizon) = match self {
            SequenceConfig::Constant { matrix, horizon } => (MatrixSequence::constant(matrix.clone()), *horizon),
            SequenceConfig::Explicit { matrices, cyclic, horizon } => {
                (MatrixSequence::explicit(matrices.clone(), *cyclic)?, *horizon)
            }
            SequenceConfig::Gossip { spec, horizon } => (gossip_sequence(spec)?, *horizon),
            SequenceConfig::HkInduced { x0, epsilon, steps } => {
                let mats = crate::opinion::hk::hk_weight_sequence(x0, *epsilon, *steps)?;
                (MatrixSequence::explicit(mats, false)?, None)
            }
        };
        Ok(match horizon {
            Some(h) => seq.with_horizon(h),
            None => seq,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_gossip(fire_times: Vec<usize>, cycle: Option<usize>) -> MatrixSequence {
        gossip_sequence(&GossipSpec {
            n: 3,
            schedule: vec![(0, 1), (1, 2), (2, 0)],
            alphas: vec![0.5],
            fire_times,
            cycle_length: cycle,
            eta: 0.01,
        })
        .unwrap()
    }

    #[test]
    fn two_agent_gossip_fire() {
        let seq = gossip_sequence(&GossipSpec {
            n: 2,
            schedule: vec![(0, 1)],
            alphas: vec![0.5],
            fire_times: vec![0],
            cycle_length: None,
            eta: 0.01,
        })
        .unwrap();
        assert_eq!(seq.at(0).unwrap().matrix().rows(), vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert_eq!(*seq.at(1).unwrap(), RowStochasticMatrix::identity(2));
        assert_eq!(*seq.at(57).unwrap(), RowStochasticMatrix::identity(2));
    }

    #[test]
    fn empty_gossip_schedule_is_identity() {
        let seq = gossip_sequence(&GossipSpec {
            n: 3,
            schedule: vec![],
            alphas: vec![],
            fire_times: vec![1, 2],
            cycle_length: None,
            eta: 0.1,
        })
        .unwrap();
        for k in 0..5 {
            assert_eq!(*seq.at(k).unwrap(), RowStochasticMatrix::identity(3));
        }
    }

    #[test]
    fn gossip_rejects_alpha_outside_range() {
        let spec = GossipSpec {
            n: 2,
            schedule: vec![(0, 1)],
            alphas: vec![0.995],
            fire_times: vec![0],
            cycle_length: None,
            eta: 0.01,
        };
        assert!(matches!(gossip_sequence(&spec), Err(Error::OutOfRange(_))));
        let spec = GossipSpec { schedule: vec![(1, 1)], alphas: vec![0.5], ..spec };
        assert!(gossip_sequence(&spec).is_err());
    }

    #[test]
    fn cyclic_gossip_period_and_persistent_ring() {
        let seq = ring_gossip(vec![0, 10, 100], Some(111));
        assert_eq!(seq.period(), 111);
        for k in 0..seq.period() {
            assert_eq!(seq.at(k).unwrap(), seq.at(k + seq.period()).unwrap());
        }
        let est = persistent_graph(&seq).unwrap();
        assert!(est.exact);
        let mut expected = vec![(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0)];
        expected.sort_by_key(|&(s, d)| (d, s));
        assert_eq!(est.graph.arcs(), expected);
    }

    #[test]
    fn constant_sequence_persistent_graph_is_its_graph() {
        let w = RowStochasticMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let est = persistent_graph(&MatrixSequence::constant(w.clone())).unwrap();
        assert_eq!(est.graph.arcs(), w.graph().arcs());
    }

    #[test]
    fn geometric_weight_is_not_persistent() {
        let f: Generator = Arc::new(|k| {
            let a = 0.5f64.powi(k as i32 + 1);
            RowStochasticMatrix::from_rows(vec![vec![1.0 - a, a], vec![0.0, 1.0]]).unwrap()
        });
        let seq = MatrixSequence::from_generator(2, 0, f).with_horizon(200);
        let est = persistent_graph(&seq).unwrap();
        assert!(!est.exact);
        assert!(!est.graph.has_arc(1, 0));
        assert!((est.partial_sums.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn arc_count_uses_distinct_pairs() {
        let seq = ring_gossip(vec![0, 3, 6], Some(9));
        assert_eq!(arc_count(&seq, &[1], &[0], 0, 30).unwrap(), 1);
        let id = MatrixSequence::constant(RowStochasticMatrix::identity(3));
        assert_eq!(arc_count(&id, &[0], &[1, 2], 0, 10).unwrap(), 0);
        assert!(matches!(arc_count(&id, &[0], &[1], 5, 2), Err(Error::InvalidWindow { .. })));
        assert!(arc_count(&id, &[0], &[0], 0, 2).is_err());
    }

    #[test]
    fn reciprocity_examples() {
        let sym = RowStochasticMatrix::from_rows(vec![vec![0.5, 0.5, 0.0], vec![0.25, 0.5, 0.25], vec![0.0, 0.5, 0.5]])
            .unwrap();
        let r = check_reciprocity(&MatrixSequence::constant(sym), 1, 0).unwrap();
        assert!(r.holds && r.exact);

        let gossip = ring_gossip(vec![0, 10, 100], Some(111));
        assert!(check_reciprocity(&gossip, 3, 0).unwrap().holds);
        let r = check_reciprocity(&gossip, 1, 0).unwrap();
        assert!(!r.holds);

        let one_way = RowStochasticMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let r = check_reciprocity(&MatrixSequence::constant(one_way), 1, 5).unwrap();
        assert!(!r.holds);
        assert_eq!(r.violating_cut.unwrap().left(), &[1]);
    }

    #[test]
    fn uniform_cut_balance_examples() {
        let sym = RowStochasticMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let r = check_uniform_cut_balance(&MatrixSequence::constant(sym), 3).unwrap();
        assert!(r.holds);
        assert_eq!(r.c, Some(1.0));
        let french = RowStochasticMatrix::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        ])
        .unwrap();
        let r = check_uniform_cut_balance(&MatrixSequence::constant(french), 0).unwrap();
        assert!(!r.holds);
        assert!(r.witness.is_some());
    }

    #[test]
    fn arc_balance_examples() {
        let a = RowStochasticMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        let b = RowStochasticMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let alt = MatrixSequence::explicit(vec![a.clone(), b.clone()], true).unwrap();
        let est = persistent_graph(&alt).unwrap();
        let r = check_arc_balance(&alt, &est, 1).unwrap();
        assert!(r.holds);
        assert_eq!(r.c, Some(1.0));
        assert!(!check_arc_balance(&alt, &est, 0).unwrap().holds);

        let same =
            MatrixSequence::constant(RowStochasticMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap());
        let r = check_arc_balance(&same, &persistent_graph(&same).unwrap(), 0).unwrap();
        assert_eq!(r.c, Some(1.0));

        // second arc fires at steps 2^m only
        let f: Generator = Arc::new(move |k| if (k + 1).is_power_of_two() { b.clone() } else { a.clone() });
        let geo = MatrixSequence::from_generator(2, 0, f).with_horizon(4096);
        let persistent = persistent_graph_with_threshold(&geo, 2.0).unwrap();
        assert!(persistent.graph.has_arc(0, 1));
        for window in [0, 5, 50] {
            assert!(!check_arc_balance(&geo, &persistent, window).unwrap().holds);
        }
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{"kind":"gossip","n":3,"schedule":[[0,1],[1,2],[2,0]],"alphas":[0.5],
                       "fire_times":[0,1,11],"cycle_length":111}"#;
        let cfg: SequenceConfig = serde_json::from_str(text).unwrap();
        let seq = cfg.build().unwrap();
        assert_eq!(seq.period(), 111);
        let again: SequenceConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
        let bad = r#"{"kind":"explicit","matrices":[[[1,0],[0.2,0.2]]]}"#;
        assert!(serde_json::from_str::<SequenceConfig>(bad).is_err());
    }
}
