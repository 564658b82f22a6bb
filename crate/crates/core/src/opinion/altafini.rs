//! Signed averaging `x(k+1) = A(k) x(k)` where `|A(k)|` is row-stochastic.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dense::{Matrix, MatrixRepr};
use crate::error::{Error, Result};
use crate::rai::{classify, Trajectory};
use crate::stochastic::RowStochasticMatrix;
use crate::tolerances::{CONSENSUS_TOL, FEAS_TOL, FLUSH_TOL, ROW_SUM_TOL};

/// Square matrix with nonnegative diagonal and row-stochastic absolute values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct SignedMatrix {
    m: Matrix,
}

impl TryFrom<MatrixRepr> for SignedMatrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        SignedMatrix::new(r.into_matrix()?)
    }
}

impl From<SignedMatrix> for MatrixRepr {
    fn from(a: SignedMatrix) -> Self {
        MatrixRepr::from_matrix(&a.m)
    }
}

impl SignedMatrix {
    pub fn new(mut m: Matrix) -> Result<Self> {
        let n = m.n();
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if v.abs() < FLUSH_TOL {
                    m.set(i, j, 0.0);
                } else if i == j && v < 0.0 {
                    return Err(Error::NegativeWeight { row: i, col: j, value: v });
                }
            }
        }
        let slack = 4.0 * n as f64 * f64::EPSILON;
        for i in 0..n {
            let sum: f64 = m.row(i).iter().map(|v| v.abs()).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::RowSum { row: i, sum });
            }
            if (sum - 1.0).abs() > slack {
                for v in m.row_mut(i) {
                    *v /= sum;
                }
            }
        }
        Ok(SignedMatrix { m })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// `D W D` for a sign vector `D`.
    pub fn gauge_transform(w: &RowStochasticMatrix, gauge: &[i8]) -> Result<Self> {
        check_gauge(w.n(), gauge)?;
        let m = Matrix::from_fn(w.n(), |i, j| {
            let v = w.get(i, j);
            if gauge[i] == gauge[j] {
                v
            } else {
                -v
            }
        });
        Ok(SignedMatrix { m })
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

    /// Entrywise absolute values.
    pub fn modulus(&self) -> RowStochasticMatrix {
        RowStochasticMatrix::new(self.m.map(f64::abs)).expect("absolute values are row-stochastic by construction")
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.m.mul_vec(x)
    }
}

fn check_gauge(n: usize, gauge: &[i8]) -> Result<()> {
    if gauge.len() != n {
        return Err(Error::Dimension { expected: n, found: gauge.len() });
    }
    if gauge.iter().any(|&d| d != 1 && d != -1) {
        return Err(Error::OutOfRange("gauge entries must be +1 or -1".into()));
    }
    Ok(())
}

pub type SignedGenerator = Arc<dyn Fn(usize) -> SignedMatrix + Send + Sync>;

#[derive(Clone)]
pub enum SignedMatrixSequence {
    Constant(SignedMatrix),
    Cyclic(Vec<SignedMatrix>),
    Generator { n: usize, f: SignedGenerator },
}

impl fmt::Debug for SignedMatrixSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignedMatrixSequence::Constant(a) => f.debug_tuple("Constant").field(a).finish(),
            SignedMatrixSequence::Cyclic(v) => f.debug_tuple("Cyclic").field(v).finish(),
            SignedMatrixSequence::Generator { n, .. } => {
                f.debug_struct("Generator").field("n", n).finish_non_exhaustive()
            }
        }
    }
}

impl SignedMatrixSequence {
    pub fn constant(a: SignedMatrix) -> Self {
        SignedMatrixSequence::Constant(a)
    }

    pub fn cyclic(matrices: Vec<SignedMatrix>) -> Result<Self> {
        let n = matrices.first().ok_or(Error::Empty)?.n();
        if let Some(a) = matrices.iter().find(|a| a.n() != n) {
            return Err(Error::Dimension { expected: n, found: a.n() });
        }
        Ok(SignedMatrixSequence::Cyclic(matrices))
    }

    pub fn from_generator(n: usize, f: SignedGenerator) -> Self {
        SignedMatrixSequence::Generator { n, f }
    }

    pub fn n(&self) -> usize {
        match self {
            SignedMatrixSequence::Constant(a) => a.n(),
            SignedMatrixSequence::Cyclic(v) => v[0].n(),
            SignedMatrixSequence::Generator { n, .. } => *n,
        }
    }

    pub fn at(&self, k: usize) -> Result<SignedMatrix> {
        let a = match self {
            SignedMatrixSequence::Constant(a) => a.clone(),
            SignedMatrixSequence::Cyclic(v) => v[k % v.len()].clone(),
            SignedMatrixSequence::Generator { n, f } => {
                let a = f(k);
                if a.n() != *n {
                    return Err(Error::Dimension { expected: *n, found: a.n() });
                }
                a
            }
        };
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AltafiniRun {
    pub trajectory: Trajectory,
    /// `ξ(k) = |x(k)|` with residuals `|A(k)| ξ(k) − ξ(k+1)`.
    pub companion: Trajectory,
    pub companion_feasible: bool,
}

pub fn run_altafini(seq: &SignedMatrixSequence, x0: &[f64], steps: usize) -> Result<AltafiniRun> {
    let n = seq.n();
    if x0.len() != n {
        return Err(Error::Dimension { expected: n, found: x0.len() });
    }
    let abs = |x: &[f64]| -> Vec<f64> { x.iter().map(|v| v.abs()).collect() };
    let mut states = vec![x0.to_vec()];
    let mut residuals = Vec::with_capacity(steps);
    let mut xi_states = vec![abs(x0)];
    let mut xi_residuals = Vec::with_capacity(steps);
    let mut x = x0.to_vec();
    for k in 0..steps {
        let a = seq.at(k)?;
        let next = a.apply(&x);
        let xi = abs(&x);
        let xi_next = abs(&next);
        let bound = a.modulus().apply(&xi);
        xi_residuals.push(bound.iter().zip(&xi_next).map(|(b, v)| b - v).collect());
        residuals.push(vec![0.0; n]);
        states.push(next.clone());
        xi_states.push(xi_next);
        x = next;
    }
    let trajectory = Trajectory::from_parts(states, residuals, Vec::new())?;
    let companion = Trajectory::from_parts(xi_states, xi_residuals, Vec::new())?;
    let scale = companion.states().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let companion_feasible =
        (0..companion.steps()).all(|k| companion.residual(k).iter().all(|&d| d >= -FEAS_TOL * scale));
    Ok(AltafiniRun { trajectory, companion, companion_feasible })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusVerdict {
    pub modulus_consensus: bool,
    pub limit_magnitude: Option<f64>,
    /// Agents grouped by terminal sign, positive block first; `None` unless the common magnitude is positive.
    pub polarization: Option<Vec<Vec<usize>>>,
    /// Common magnitude is zero.
    pub degenerate: bool,
}

pub fn modulus_consensus_verdict(traj: &Trajectory) -> Result<ModulusVerdict> {
    let abs_states: Vec<Vec<f64>> = traj.states().map(|x| x.iter().map(|v| v.abs()).collect()).collect();
    let zeros = vec![vec![0.0; traj.n()]; traj.steps()];
    let verdict = classify(&Trajectory::from_parts(abs_states, zeros, Vec::new())?)?;
    let limit_magnitude = verdict.consensus_value;
    let degenerate = limit_magnitude.is_some_and(|m| m < CONSENSUS_TOL);
    let polarization = limit_magnitude.filter(|_| !degenerate).map(|_| {
        let last = traj.final_state();
        let (pos, neg): (Vec<usize>, Vec<usize>) = (0..traj.n()).partition(|&i| last[i] > 0.0);
        [pos, neg].into_iter().filter(|b| !b.is_empty()).collect()
    });
    Ok(ModulusVerdict { modulus_consensus: verdict.consensus, limit_magnitude, polarization, degenerate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub balanced: bool,
    /// `D` with `sgn a_ij(k) = d_i d_j` on every nonzero off-diagonal entry of the tail;
    /// the smallest node of each linked group gets `+1`.
    pub gauge: Option<Vec<i8>>,
}

/// Union-find carrying the parity of each node relative to its root.
struct ParityForest {
    parent: Vec<usize>,
    parity: Vec<u8>,
}

impl ParityForest {
    fn new(n: usize) -> Self {
        ParityForest { parent: (0..n).collect(), parity: vec![0; n] }
    }

    fn find(&mut self, i: usize) -> (usize, u8) {
        let p = self.parent[i];
        if p == i {
            return (i, 0);
        }
        let (root, up) = self.find(p);
        self.parent[i] = root;
        self.parity[i] ^= up;
        (root, self.parity[i])
    }

    /// Records `d_i d_j = (−1)^odd`; false on contradiction.
    fn relate(&mut self, i: usize, j: usize, odd: u8) -> bool {
        let (ri, pi) = self.find(i);
        let (rj, pj) = self.find(j);
        if ri == rj {
            return pi ^ pj == odd;
        }
        let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
        self.parent[hi] = lo;
        self.parity[hi] = pi ^ pj ^ odd;
        true
    }
}

/// Looks for a gauge explaining every sign in the last quarter of `[0, horizon)`.
pub fn recover_structural_balance(seq: &SignedMatrixSequence, horizon: usize) -> Result<BalanceReport> {
    if horizon == 0 {
        return Err(Error::TooShort { len: 0, required: 1 });
    }
    let n = seq.n();
    let tail = (horizon / 4).max(1);
    let mut forest = ParityForest::new(n);
    for k in horizon - tail..horizon {
        let a = seq.at(k)?;
        for i in 0..n {
            for j in 0..n {
                let v = a.get(i, j);
                if i != j && v != 0.0 && !forest.relate(i, j, u8::from(v < 0.0)) {
                    return Ok(BalanceReport { balanced: false, gauge: None });
                }
            }
        }
    }
    // roots are the smallest member of each group, so they take +1
    let gauge = (0..n).map(|i| if forest.find(i).1 == 0 { 1 } else { -1 }).collect();
    Ok(BalanceReport { balanced: true, gauge: Some(gauge) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rai::run_degroot;
    use crate::sequences::MatrixSequence;

    fn primitive3() -> RowStochasticMatrix {
        RowStochasticMatrix::from_rows(vec![vec![0.5, 0.25, 0.25], vec![0.2, 0.6, 0.2], vec![0.1, 0.3, 0.6]]).unwrap()
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(SignedMatrix::from_rows(vec![vec![-0.5, 0.5], vec![0.0, 1.0]]).is_err());
        assert!(SignedMatrix::from_rows(vec![vec![0.5, -0.25], vec![0.0, 1.0]]).is_err());
        assert!(SignedMatrix::from_rows(vec![vec![0.5, -0.5], vec![-0.5, 0.5]]).is_ok());
    }

    #[test]
    fn bipartite_fixed_point() {
        let a = SignedMatrix::from_rows(vec![vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        let run = run_altafini(&SignedMatrixSequence::constant(a), &[1.0, -1.0], 60).unwrap();
        assert!(run.trajectory.states().all(|x| x == [1.0, -1.0]));
        assert!(run.companion_feasible);
        let v = modulus_consensus_verdict(&run.trajectory).unwrap();
        assert!(v.modulus_consensus);
        assert_eq!(v.limit_magnitude, Some(1.0));
        assert_eq!(v.polarization, Some(vec![vec![0], vec![1]]));
        assert!(!v.degenerate);
    }

    #[test]
    fn nonnegative_case_matches_degroot() {
        let w = primitive3();
        let a = SignedMatrix::new(w.matrix().clone()).unwrap();
        let x0 = [3.0, -1.0, 0.5];
        let run = run_altafini(&SignedMatrixSequence::constant(a), &x0, 40).unwrap();
        let plain = run_degroot(&MatrixSequence::constant(w), &x0, 40).unwrap();
        assert_eq!(run.trajectory.states().collect::<Vec<_>>(), plain.states().collect::<Vec<_>>());
    }

    #[test]
    fn gauge_equivalence_is_exact() {
        let w = primitive3();
        let d = [1i8, -1, 1];
        let a = SignedMatrix::gauge_transform(&w, &d).unwrap();
        let x0 = [0.3, 0.9, -0.4];
        let dx0: Vec<f64> = x0.iter().zip(&d).map(|(v, &s)| v * f64::from(s)).collect();
        let run = run_altafini(&SignedMatrixSequence::constant(a.clone()), &x0, 200).unwrap();
        let plain = run_degroot(&MatrixSequence::constant(w), &dx0, 200).unwrap();
        for (x, y) in run.trajectory.states().zip(plain.states()) {
            for i in 0..3 {
                assert_eq!(x[i], f64::from(d[i]) * y[i]);
            }
        }
        let v = modulus_consensus_verdict(&run.trajectory).unwrap();
        assert!(v.modulus_consensus);
        assert_eq!(v.polarization.unwrap().len(), 2);
        let bal = recover_structural_balance(&SignedMatrixSequence::constant(a), 40).unwrap();
        assert_eq!(bal.gauge, Some(vec![1, -1, 1]));
    }

    #[test]
    fn nonnegative_sequence_is_balanced() {
        let a = SignedMatrix::new(primitive3().matrix().clone()).unwrap();
        let bal = recover_structural_balance(&SignedMatrixSequence::constant(a), 8).unwrap();
        assert_eq!(bal, BalanceReport { balanced: true, gauge: Some(vec![1, 1, 1]) });
    }

    #[test]
    fn odd_negative_cycle_is_unbalanced() {
        let a = SignedMatrix::from_rows(vec![vec![0.5, 0.0, -0.5], vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5]]).unwrap();
        let seq = SignedMatrixSequence::constant(a);
        assert!(!recover_structural_balance(&seq, 10).unwrap().balanced);
        let run = run_altafini(&seq, &[1.0, -2.0, 0.5], 400).unwrap();
        let v = modulus_consensus_verdict(&run.trajectory).unwrap();
        assert!(v.modulus_consensus && v.degenerate);
        assert!(v.limit_magnitude.unwrap() < CONSENSUS_TOL);
    }

    #[test]
    fn only_the_tail_is_examined() {
        let early = SignedMatrix::from_rows(vec![vec![0.5, -0.5], vec![0.5, 0.5]]).unwrap();
        let late = SignedMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let seq = SignedMatrixSequence::from_generator(
            2,
            Arc::new(move |k| if k < 6 { early.clone() } else { late.clone() }),
        );
        assert!(recover_structural_balance(&seq, 8).unwrap().balanced);
        assert!(!recover_structural_balance(&seq, 4).unwrap().balanced);
    }

    #[test]
    fn serde_round_trip() {
        let a = SignedMatrix::from_rows(vec![vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<SignedMatrix>(&s).unwrap(), a);
    }
}
