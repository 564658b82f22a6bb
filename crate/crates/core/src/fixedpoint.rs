//! Paracontracting maps, Euclidean projectors, and distributed common-fixed-point iterations.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rai::Trajectory;
use crate::sequences::{MatrixSequence, SequenceConfig};
use crate::tolerances::{FP_TOL, SOLVER_MAX_ITERS, SOLVER_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "norm", rename_all = "snake_case")]
pub enum NormTag {
    Euclidean,
    PNorm { p: f64 },
    Weighted { w: Vec<f64> },
}

impl NormTag {
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            NormTag::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormTag::PNorm { p } if p.is_infinite() => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormTag::PNorm { p } => v.iter().map(|x| x.abs().powf(*p)).sum::<f64>().powf(1.0 / p),
            NormTag::Weighted { w } => v.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&diff)
    }
}

/// A map that strictly shrinks the distance to each of its fixed points from any non-fixed point.
pub trait Paracontraction: Send + Sync {
    fn dimension(&self) -> usize;

    fn apply(&self, xi: &[f64]) -> Vec<f64>;

    fn norm_tag(&self) -> NormTag {
        NormTag::Euclidean
    }

    fn is_fixed(&self, xi: &[f64]) -> bool {
        self.norm_tag().distance(&self.apply(xi), xi) < FP_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    /// `{x : aᵀx = b}`.
    Hyperplane {
        a: Vec<f64>,
        b: f64,
    },
    /// `{x : aᵀx ≤ b}`.
    Halfspace {
        a: Vec<f64>,
        b: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `{x : A x = b}`, rows of `A` given.
    AffineSubspace {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
}

/// Euclidean projector onto a closed convex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConvexSet", into = "ConvexSet")]
pub struct ConvexProjector {
    set: ConvexSet,
    dim: usize,
    /// Pseudo-inverse of `A` for affine subspaces.
    pinv: Option<DMatrix<f64>>,
}

impl TryFrom<ConvexSet> for ConvexProjector {
    type Error = Error;

    fn try_from(set: ConvexSet) -> Result<Self> {
        ConvexProjector::new(set)
    }
}

impl From<ConvexProjector> for ConvexSet {
    fn from(p: ConvexProjector) -> Self {
        p.set
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl ConvexProjector {
    pub fn new(set: ConvexSet) -> Result<Self> {
        let degenerate = |msg: &str| Err(Error::DegenerateSet(msg.into()));
        let (dim, pinv) = match &set {
            ConvexSet::Hyperplane { a, b } | ConvexSet::Halfspace { a, b } => {
                if a.is_empty() || !all_finite(a) || !b.is_finite() {
                    return degenerate("normal vector must be nonempty and finite");
                }
                if dot(a, a) == 0.0 {
                    return degenerate("normal vector is zero");
                }
                (a.len(), None)
            }
            ConvexSet::Ball { center, radius } => {
                if center.is_empty() || !all_finite(center) {
                    return degenerate("ball center must be nonempty and finite");
                }
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return degenerate("ball radius must be finite and nonnegative");
                }
                (center.len(), None)
            }
            ConvexSet::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return degenerate("box bounds must be nonempty and of equal length");
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || l.is_nan() || h.is_nan()) {
                    return degenerate("box has lo > hi");
                }
                (lo.len(), None)
            }
            ConvexSet::AffineSubspace { a, b } => {
                let d = a.first().map_or(0, Vec::len);
                if a.is_empty() || d == 0 || a.len() != b.len() || a.iter().any(|r| r.len() != d) {
                    return degenerate("constraint matrix must be nonempty, rectangular and match b");
                }
                if !a.iter().all(|r| all_finite(r)) || !all_finite(b) {
                    return degenerate("constraints must be finite");
                }
                let am = DMatrix::from_fn(a.len(), d, |i, j| a[i][j]);
                let scale = am.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if scale == 0.0 {
                    return degenerate("constraint matrix is zero");
                }
                let pinv = am.clone().pseudo_inverse(1e-12 * scale).map_err(|e| Error::DegenerateSet(e.into()))?;
                let bv = DVector::from_column_slice(b);
                let resid = &am * (&pinv * &bv) - &bv;
                if resid.amax() > 1e-9 * (1.0 + bv.amax()) {
                    return degenerate("affine constraints are inconsistent");
                }
                (d, Some(pinv))
            }
        };
        Ok(ConvexProjector { set, dim, pinv })
    }

    pub fn hyperplane(a: Vec<f64>, b: f64) -> Result<Self> {
        Self::new(ConvexSet::Hyperplane { a, b })
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn project(&self, xi: &[f64]) -> Vec<f64> {
        assert_eq!(xi.len(), self.dim, "point dimension must match the set");
        match &self.set {
            ConvexSet::Hyperplane { a, b } => {
                let t = (dot(a, xi) - b) / dot(a, a);
                xi.iter().zip(a).map(|(x, a)| x - t * a).collect()
            }
            ConvexSet::Halfspace { a, b } => {
                let excess = dot(a, xi) - b;
                if excess <= 0.0 {
                    return xi.to_vec();
                }
                let t = excess / dot(a, a);
                xi.iter().zip(a).map(|(x, a)| x - t * a).collect()
            }
            ConvexSet::Ball { center, radius } => {
                let r = NormTag::Euclidean.distance(xi, center);
                if r <= *radius {
                    return xi.to_vec();
                }
                let s = radius / r;
                xi.iter().zip(center).map(|(x, c)| c + s * (x - c)).collect()
            }
            ConvexSet::Box { lo, hi } => xi.iter().zip(lo.iter().zip(hi)).map(|(x, (l, h))| x.clamp(*l, *h)).collect(),
            ConvexSet::AffineSubspace { a, b } => {
                let pinv = self.pinv.as_ref().expect("affine projector carries its pseudo-inverse");
                let excess = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(r, b)| dot(r, xi) - b));
                let corr = pinv * excess;
                xi.iter().zip(corr.iter()).map(|(x, c)| x - c).collect()
            }
        }
    }

    /// Euclidean distance from `xi` to the set.
    pub fn distance(&self, xi: &[f64]) -> f64 {
        NormTag::Euclidean.distance(&self.project(xi), xi)
    }
}

impl Paracontraction for ConvexProjector {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn apply(&self, xi: &[f64]) -> Vec<f64> {
        self.project(xi)
    }
}

/// Wraps an arbitrary map, for auditing candidate paracontractions.
type VecMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct MapFn {
    dim: usize,
    norm: NormTag,
    f: VecMap,
}

impl MapFn {
    pub fn new(dim: usize, norm: NormTag, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        MapFn { dim, norm, f: Arc::new(f) }
    }
}

impl fmt::Debug for MapFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapFn").field("dim", &self.dim).field("norm", &self.norm).finish_non_exhaustive()
    }
}

impl Paracontraction for MapFn {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn apply(&self, xi: &[f64]) -> Vec<f64> {
        (self.f)(xi)
    }

    fn norm_tag(&self) -> NormTag {
        self.norm.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// `ξ^i ← P_i[Σ_j w_ij ξ^j]`.
    PreProject,
    /// `ξ^i ← P_i[Σ_j w_ij P_j(ξ^j)]`.
    DoubleProject,
    /// `ξ^i ← w_ii P_i(ξ^i) + Σ_{j≠i} w_ij ξ^j`.
    ConvexBlend,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::PreProject, Algorithm::DoubleProject, Algorithm::ConvexBlend];
}

#[derive(Clone)]
pub struct MultiAgentProblem {
    maps: Vec<Arc<dyn Paracontraction>>,
    weights: MatrixSequence,
    algorithm: Algorithm,
}

impl fmt::Debug for MultiAgentProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiAgentProblem")
            .field("agents", &self.maps.len())
            .field("dimension", &self.dimension())
            .field("algorithm", &self.algorithm)
            .finish()
    }
}

impl MultiAgentProblem {
    pub fn new(maps: Vec<Arc<dyn Paracontraction>>, weights: MatrixSequence, algorithm: Algorithm) -> Result<Self> {
        let first = maps.first().ok_or(Error::Empty)?;
        if maps.len() != weights.n() {
            return Err(Error::Dimension { expected: weights.n(), found: maps.len() });
        }
        let (d, tag) = (first.dimension(), first.norm_tag());
        for p in &maps {
            if p.dimension() != d {
                return Err(Error::Dimension { expected: d, found: p.dimension() });
            }
            if p.norm_tag() != tag {
                return Err(Error::OutOfRange("all agents must use the same norm".into()));
            }
        }
        Ok(MultiAgentProblem { maps, weights, algorithm })
    }

    pub fn from_projectors(
        projectors: Vec<ConvexProjector>,
        weights: MatrixSequence,
        algorithm: Algorithm,
    ) -> Result<Self> {
        let maps = projectors.into_iter().map(|p| Arc::new(p) as Arc<dyn Paracontraction>).collect();
        Self::new(maps, weights, algorithm)
    }

    pub fn with_algorithm(&self, algorithm: Algorithm) -> Self {
        MultiAgentProblem { algorithm, ..self.clone() }
    }

    pub fn agents(&self) -> usize {
        self.maps.len()
    }

    pub fn dimension(&self) -> usize {
        self.maps[0].dimension()
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn weights(&self) -> &MatrixSequence {
        &self.weights
    }

    pub fn norm_tag(&self) -> NormTag {
        self.maps[0].norm_tag()
    }

    fn check_states(&self, states: &[Vec<f64>]) -> Result<()> {
        if states.len() != self.agents() {
            return Err(Error::Dimension { expected: self.agents(), found: states.len() });
        }
        if let Some(s) = states.iter().find(|s| s.len() != self.dimension()) {
            return Err(Error::Dimension { expected: self.dimension(), found: s.len() });
        }
        Ok(())
    }

    /// One synchronous round; every agent reads the time-`k` states.
    pub fn step(&self, states: &[Vec<f64>], k: usize) -> Result<Vec<Vec<f64>>> {
        self.check_states(states)?;
        let w = self.weights.at(k)?;
        let n = self.agents();
        let d = self.dimension();
        let mix = |i: usize, src: &[Vec<f64>]| -> Vec<f64> {
            let mut acc = vec![0.0; d];
            for (j, &wij) in w.matrix().row(i).iter().enumerate() {
                if wij != 0.0 {
                    for (a, x) in acc.iter_mut().zip(&src[j]) {
                        *a += wij * x;
                    }
                }
            }
            acc
        };
        let next = match self.algorithm {
            Algorithm::PreProject => (0..n).map(|i| self.maps[i].apply(&mix(i, states))).collect(),
            Algorithm::DoubleProject => {
                let projected: Vec<Vec<f64>> = (0..n).map(|j| self.maps[j].apply(&states[j])).collect();
                (0..n).map(|i| self.maps[i].apply(&mix(i, &projected))).collect()
            }
            Algorithm::ConvexBlend => (0..n)
                .map(|i| {
                    let own = self.maps[i].apply(&states[i]);
                    let mut acc = vec![0.0; d];
                    for (j, &wij) in w.matrix().row(i).iter().enumerate() {
                        if wij != 0.0 {
                            let src = if j == i { &own } else { &states[j] };
                            for (a, x) in acc.iter_mut().zip(src) {
                                *a += wij * x;
                            }
                        }
                    }
                    acc
                })
                .collect(),
        };
        Ok(next)
    }

    /// `max_{i,j} ‖ξ^i − ξ^j‖`.
    pub fn disagreement(&self, states: &[Vec<f64>]) -> f64 {
        let tag = self.norm_tag();
        let mut worst = 0.0f64;
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                worst = worst.max(tag.distance(&states[i], &states[j]));
            }
        }
        worst
    }

    /// `max_i ‖P_i(ξ^i) − ξ^i‖`.
    pub fn violation(&self, states: &[Vec<f64>]) -> f64 {
        let tag = self.norm_tag();
        self.maps.iter().zip(states).map(|(p, s)| tag.distance(&p.apply(s), s)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub disagreement: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Mean of the agents' final states.
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub agent_disagreement: f64,
    pub constraint_violation: f64,
    pub converged: bool,
    pub final_states: Vec<Vec<f64>>,
    pub history: Vec<IterationRecord>,
}

impl SolveReport {
    pub fn history_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["k", "disagreement", "violation"]).expect("in-memory write");
        for r in &self.history {
            wtr.write_record([r.k.to_string(), r.disagreement.to_string(), r.violation.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Iterates until disagreement and violation both drop below `tol`, or `max_iters` rounds.
/// Running out of rounds is reported through `converged`, not as an error.
pub fn solve(problem: &MultiAgentProblem, init: &[Vec<f64>], max_iters: usize, tol: f64) -> Result<SolveReport> {
    problem.check_states(init)?;
    let mut states = init.to_vec();
    let mut history = Vec::new();
    let mut k = 0;
    let (disagreement, violation) = loop {
        let dis = problem.disagreement(&states);
        let vio = problem.violation(&states);
        history.push(IterationRecord { k, disagreement: dis, violation: vio });
        if (dis < tol && vio < tol) || k >= max_iters || !dis.is_finite() {
            break (dis, vio);
        }
        states = problem.step(&states, k)?;
        k += 1;
    };
    let n = states.len() as f64;
    let solution = (0..problem.dimension()).map(|c| states.iter().map(|s| s[c]).sum::<f64>() / n).collect();
    Ok(SolveReport {
        solution,
        iterations: k,
        agent_disagreement: disagreement,
        constraint_violation: violation,
        converged: disagreement < tol && violation < tol,
        final_states: states,
        history,
    })
}

pub fn solve_default(problem: &MultiAgentProblem, init: &[Vec<f64>]) -> Result<SolveReport> {
    solve(problem, init, SOLVER_MAX_ITERS, SOLVER_TOL)
}

/// Distances `‖ξ^i(k) − ξ⁰‖` along `steps` rounds, as a trajectory against the problem's weights.
pub fn distance_trajectory(
    problem: &MultiAgentProblem,
    init: &[Vec<f64>],
    anchor: &[f64],
    steps: usize,
) -> Result<Trajectory> {
    problem.check_states(init)?;
    if anchor.len() != problem.dimension() {
        return Err(Error::Dimension { expected: problem.dimension(), found: anchor.len() });
    }
    let tag = problem.norm_tag();
    let mut states = init.to_vec();
    let mut dist = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        dist.push(states.iter().map(|s| tag.distance(s, anchor)).collect::<Vec<f64>>());
        if k < steps {
            states = problem.step(&states, k)?;
        }
    }
    Trajectory::from_states(problem.weights(), &dist)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub samples: usize,
    /// Non-fixed samples whose distance to the fixed point did not shrink.
    pub violations: usize,
    /// Smallest `‖ξ − ξ₀‖ − ‖M(ξ) − ξ₀‖` over non-fixed samples.
    pub worst_margin: Option<f64>,
}

const AUDIT_SPREAD: f64 = 10.0;
const PICARD_LIMIT: usize = 10_000;

/// Spot-checks strict distance decrease on random points. When `M` of a random point
/// is itself fixed, that image serves as `ξ₀`; otherwise the supplied or discovered fixed point does.
pub fn paracontraction_audit(
    p: &dyn Paracontraction,
    samples: usize,
    seed: u64,
    known_fixed: Option<&[f64]>,
) -> Result<AuditReport> {
    let d = p.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |center: &[f64]| -> Vec<f64> {
        center.iter().map(|c| c + rng.gen_range(-AUDIT_SPREAD..AUDIT_SPREAD)).collect()
    };
    let fixed = match known_fixed {
        Some(f) => {
            if f.len() != d {
                return Err(Error::Dimension { expected: d, found: f.len() });
            }
            if !p.is_fixed(f) {
                return Err(Error::NoFixedPoint);
            }
            f.to_vec()
        }
        None => {
            let mut x = draw(&vec![0.0; d]);
            let mut found = None;
            for _ in 0..PICARD_LIMIT {
                if p.is_fixed(&x) {
                    found = Some(x);
                    break;
                }
                x = p.apply(&x);
                if !all_finite(&x) {
                    break;
                }
            }
            found.ok_or(Error::NoFixedPoint)?
        }
    };
    let tag = p.norm_tag();
    let mut violations = 0;
    let mut worst: Option<f64> = None;
    for _ in 0..samples {
        let xi = draw(&fixed);
        let image = p.apply(&xi);
        if tag.distance(&image, &xi) < FP_TOL {
            continue;
        }
        let probe = p.apply(&draw(&fixed));
        let anchor = if p.is_fixed(&probe) { probe } else { fixed.clone() };
        let margin = tag.distance(&xi, &anchor) - tag.distance(&image, &anchor);
        if !(margin > 0.0) {
            violations += 1;
        }
        worst = Some(worst.map_or(margin, |w: f64| w.min(margin)));
    }
    Ok(AuditReport { samples, violations, worst_margin: worst })
}

/// Serializable problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub sets: Vec<ConvexSet>,
    pub algorithm: Algorithm,
    pub weights: SequenceConfig,
    /// One starting point per agent; all zeros when omitted.
    #[serde(default)]
    pub initial: Option<Vec<Vec<f64>>>,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<(MultiAgentProblem, Vec<Vec<f64>>)> {
        let projectors = self.sets.iter().cloned().map(ConvexProjector::new).collect::<Result<Vec<_>>>()?;
        let problem = MultiAgentProblem::from_projectors(projectors, self.weights.build()?, self.algorithm)?;
        let init = match &self.initial {
            Some(v) => v.clone(),
            None => vec![vec![0.0; problem.dimension()]; problem.agents()],
        };
        problem.check_states(&init)?;
        Ok((problem, init))
    }
}

/// One hyperplane `{x : a_i x = b_i}` per row.
pub fn row_hyperplanes(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<ConvexProjector>> {
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: a.len(), found: b.len() });
    }
    a.iter().zip(b).map(|(r, &bi)| ConvexProjector::hyperplane(r.clone(), bi)).collect()
}
