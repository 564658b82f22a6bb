//! Weighted digraphs, strong components and cut predicates.
//!
//! Arc convention: `weights[i][j]` is the influence of node `j` on node `i`, so a
//! nonzero entry at `(i, j)` is the arc `j → i`. An entry of exactly `0.0` means
//! there is no arc; no thresholding happens at this layer.

use std::collections::VecDeque;
use std::fmt::Write as _;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::dense::{gcd, Matrix, MatrixRepr};
use crate::error::{Error, Result};
use crate::tolerances::CUT_ENUMERATION_LIMIT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct WeightedDigraph {
    weights: Matrix,
}

impl TryFrom<MatrixRepr> for WeightedDigraph {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        Ok(WeightedDigraph { weights: r.into_matrix()? })
    }
}

impl From<WeightedDigraph> for MatrixRepr {
    fn from(g: WeightedDigraph) -> Self {
        MatrixRepr::from_matrix(&g.weights)
    }
}

impl WeightedDigraph {
    pub fn new(weights: Matrix) -> Self {
        WeightedDigraph { weights }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Ok(WeightedDigraph { weights: Matrix::from_rows(rows)? })
    }

    /// Graph with `n` nodes and unit weights on the given `(src, dst)` arcs.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut m = Matrix::zeros(n);
        for &(src, dst) in arcs {
            if src >= n || dst >= n {
                return Err(Error::InvalidNodeSet(format!("arc ({src}, {dst}) outside 0..{n}")));
            }
            m.set(dst, src, 1.0);
        }
        Ok(WeightedDigraph { weights: m })
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    /// Weight of the arc `j → i`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }

    pub fn has_arc(&self, src: usize, dst: usize) -> bool {
        self.weights.get(dst, src) != 0.0
    }

    pub fn out_neighbors(&self, src: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&dst| self.has_arc(src, dst))
    }

    pub fn in_neighbors(&self, dst: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&src| self.has_arc(src, dst))
    }

    /// All arcs as `(src, dst)` pairs, ordered by destination then source.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for dst in 0..n {
            for src in 0..n {
                if self.has_arc(src, dst) {
                    out.push((src, dst));
                }
            }
        }
        out
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.is_nonnegative()
    }

    /// Graph of entrywise absolute values.
    pub fn abs(&self) -> WeightedDigraph {
        WeightedDigraph { weights: self.weights.map(f64::abs) }
    }

    fn require_nonnegative(&self) -> Result<()> {
        match self.weights.first_negative() {
            Some((row, col, value)) => Err(Error::NegativeWeight { row, col, value }),
            None => Ok(()),
        }
    }

    /// Nodes reachable by walks starting in `sources` (sources included).
    pub fn reachable_from(&self, sources: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in sources {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for v in self.out_neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Whether a single root reaches every node.
    pub fn has_spanning_root(&self) -> bool {
        (0..self.n()).any(|r| self.reachable_from(&[r]).iter().all(|&b| b))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Edge list with a `# nodes N` header and one `j i w` line per arc `j → i`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes {}\n", self.n());
        for (src, dst) in self.arcs() {
            let _ = writeln!(out, "{} {} {}", src, dst, self.weight(dst, src));
        }
        out
    }

    /// Parses the edge-list form. Without a `# nodes N` header the node count
    /// is one more than the largest index mentioned.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                if parts.next() == Some("nodes") {
                    let n = parts
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse(format!("line {}: bad node header", lineno + 1)))?;
                    declared = Some(n);
                }
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected `j i w`", lineno + 1)));
            }
            let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
            let src: usize = parts[0].parse().map_err(|_| bad("source"))?;
            let dst: usize = parts[1].parse().map_err(|_| bad("target"))?;
            let w: f64 = parts[2].parse().map_err(|_| bad("weight"))?;
            if !w.is_finite() {
                return Err(bad("weight"));
            }
            entries.push((src, dst, w));
        }
        let implied = entries.iter().map(|&(s, d, _)| s.max(d) + 1).max().unwrap_or(0);
        let n = declared.unwrap_or(implied);
        if n == 0 {
            return Err(Error::Empty);
        }
        if implied > n {
            return Err(Error::Parse(format!("node index {} outside 0..{n}", implied - 1)));
        }
        let mut m = Matrix::zeros(n);
        for (src, dst, w) in entries {
            m.set(dst, src, w);
        }
        Ok(WeightedDigraph { weights: m })
    }
}

/// Partition of the nodes into two nonempty sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Cut {
    pub fn new(n: usize, left: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut in_left = vec![false; n];
        for i in left {
            if i >= n {
                return Err(Error::InvalidNodeSet(format!("node {i} outside 0..{n}")));
            }
            in_left[i] = true;
        }
        Self::from_membership(&in_left)
    }

    /// Cut whose left side is the set bits of `mask`.
    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        let in_left: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        Self::from_membership(&in_left)
    }

    fn from_membership(in_left: &[bool]) -> Result<Self> {
        let left: Vec<usize> = (0..in_left.len()).filter(|&i| in_left[i]).collect();
        let right: Vec<usize> = (0..in_left.len()).filter(|&i| !in_left[i]).collect();
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidNodeSet("both sides of a cut must be nonempty".into()));
        }
        Ok(Cut { left, right })
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn n(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn reversed(&self) -> Cut {
        Cut { left: self.right.clone(), right: self.left.clone() }
    }
}

/// Every cut of `n` nodes, each unordered partition appearing in both orientations.
pub fn all_cuts(n: usize) -> impl Iterator<Item = Cut> {
    let top: u64 = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    (1..top).map(move |mask| Cut::from_mask(n, mask).expect("proper nonempty mask"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentClass {
    Source,
    Sink,
    Isolated,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccDecomposition {
    /// Components sorted internally and ordered by smallest member.
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
    /// Successor lists of the condensation: `a → b` when some arc leaves `a` for `b`.
    pub condensation: Vec<Vec<usize>>,
    pub classes: Vec<ComponentClass>,
    pub is_strong: bool,
    pub is_quasi_strong: bool,
}

impl SccDecomposition {
    pub fn sources(&self) -> Vec<usize> {
        self.indices_where(|c| matches!(c, ComponentClass::Source | ComponentClass::Isolated))
    }

    pub fn sinks(&self) -> Vec<usize> {
        self.indices_where(|c| matches!(c, ComponentClass::Sink | ComponentClass::Isolated))
    }

    fn indices_where(&self, pred: impl Fn(ComponentClass) -> bool) -> Vec<usize> {
        (0..self.components.len()).filter(|&c| pred(self.classes[c])).collect()
    }

    pub fn all_isolated(&self) -> bool {
        self.classes.iter().all(|&c| c == ComponentClass::Isolated)
    }
}

pub fn strong_components(g: &WeightedDigraph) -> SccDecomposition {
    let n = g.n();
    let mut pg: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
    let idx: Vec<_> = (0..n).map(|_| pg.add_node(())).collect();
    for (src, dst) in g.arcs() {
        pg.add_edge(idx[src], idx[dst], ());
    }
    let mut components: Vec<Vec<usize>> = tarjan_scc(&pg)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    components.sort_by_key(|c| c[0]);

    let mut component_of = vec![0; n];
    for (c, nodes) in components.iter().enumerate() {
        for &v in nodes {
            component_of[v] = c;
        }
    }
    let count = components.len();
    let mut condensation = vec![Vec::new(); count];
    let mut has_in = vec![false; count];
    for (src, dst) in g.arcs() {
        let (a, b) = (component_of[src], component_of[dst]);
        if a != b {
            condensation[a].push(b);
            has_in[b] = true;
        }
    }
    for succ in &mut condensation {
        succ.sort_unstable();
        succ.dedup();
    }
    let classes: Vec<ComponentClass> = (0..count)
        .map(|c| match (has_in[c], !condensation[c].is_empty()) {
            (false, false) => ComponentClass::Isolated,
            (false, true) => ComponentClass::Source,
            (true, false) => ComponentClass::Sink,
            (true, true) => ComponentClass::Internal,
        })
        .collect();
    let source_count = has_in.iter().filter(|&&b| !b).count();
    SccDecomposition {
        is_strong: count == 1,
        is_quasi_strong: source_count == 1,
        components,
        component_of,
        condensation,
        classes,
    }
}

fn check_strongly_connected(g: &WeightedDigraph, nodes: &[usize]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::InvalidNodeSet("empty component".into()));
    }
    let n = g.n();
    let mut member = vec![false; n];
    for &v in nodes {
        if v >= n {
            return Err(Error::InvalidNodeSet(format!("node {v} outside 0..{n}")));
        }
        member[v] = true;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![nodes[0]];
        seen[nodes[0]] = true;
        while let Some(u) = stack.pop() {
            for v in nodes.iter().copied() {
                let arc = if forward { g.has_arc(u, v) } else { g.has_arc(v, u) };
                if arc && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        nodes.iter().all(|&v| seen[v])
    };
    if reach(true) && reach(false) {
        Ok(())
    } else {
        Err(Error::NotStronglyConnected)
    }
}

/// Period of a strongly connected node set; `0` for a single node without a self-loop.
pub fn period(g: &WeightedDigraph, component: &[usize]) -> Result<usize> {
    check_strongly_connected(g, component)?;
    let n = g.n();
    let mut level = vec![usize::MAX; n];
    let mut member = vec![false; n];
    for &v in component {
        member[v] = true;
    }
    let root = component[0];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in component {
            if g.has_arc(u, v) && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut p = 0;
    for &u in component {
        for &v in component {
            if g.has_arc(u, v) {
                p = gcd(p, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    Ok(p)
}

/// Whether the gcd of cycle lengths inside a strongly connected set is one.
pub fn is_aperiodic(g: &WeightedDigraph, component: &[usize]) -> Result<bool> {
    Ok(period(g, component)? == 1)
}

/// Returns `(Σ_{i∈I,j∈J} b_ij, Σ_{i∈I,j∈J} b_ji)`: flow into the left side, then out of it.
pub fn cut_flow(g: &WeightedDigraph, cut: &Cut) -> Result<(f64, f64)> {
    g.require_nonnegative()?;
    if cut.n() != g.n() {
        return Err(Error::Dimension { expected: g.n(), found: cut.n() });
    }
    Ok(raw_cut_flow(g.weights(), cut))
}

pub(crate) fn raw_cut_flow(w: &Matrix, cut: &Cut) -> (f64, f64) {
    let mut into_left = 0.0;
    let mut out_of_left = 0.0;
    for &i in cut.left() {
        for &j in cut.right() {
            into_left += w.get(i, j);
            out_of_left += w.get(j, i);
        }
    }
    (into_left, out_of_left)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutBalanceCertificate {
    pub balanced: bool,
    /// Largest ratio of opposite cut flows; `None` when unbalanced or above the enumeration limit.
    pub constant_c: Option<f64>,
    /// A cut with one flow positive and the opposite one zero.
    pub witness_cut: Option<Cut>,
}

/// Decides cut-balance through component isolation and, for small graphs,
/// computes the balance constant by enumerating every cut.
pub fn cut_balance_certificate(g: &WeightedDigraph) -> Result<CutBalanceCertificate> {
    g.require_nonnegative()?;
    let scc = strong_components(g);
    if scc.all_isolated() {
        let constant_c = if g.n() <= CUT_ENUMERATION_LIMIT { Some(max_flow_ratio(g.weights())) } else { None };
        return Ok(CutBalanceCertificate { balanced: true, constant_c, witness_cut: None });
    }
    let source = scc
        .sources()
        .into_iter()
        .find(|&c| scc.classes[c] == ComponentClass::Source)
        .expect("a non-isolated component implies a source with an outgoing arc");
    let cut = Cut::new(g.n(), scc.components[source].iter().copied())?;
    Ok(CutBalanceCertificate { balanced: false, constant_c: None, witness_cut: Some(cut) })
}

/// Max of `flow_in / flow_out` over cuts where both are positive, at least one.
fn max_flow_ratio(w: &Matrix) -> f64 {
    let mut c: f64 = 1.0;
    for cut in all_cuts(w.n()) {
        let (a, b) = raw_cut_flow(w, &cut);
        if a > 0.0 && b > 0.0 {
            c = c.max(a / b);
        }
    }
    c
}

/// Cut-balance by definition: some `C ≥ 1` bounds every cut ratio in both directions.
pub fn cut_balanced_exhaustive(g: &WeightedDigraph) -> Result<bool> {
    g.require_nonnegative()?;
    if g.n() > CUT_ENUMERATION_LIMIT {
        return Err(Error::TooManyNodes { n: g.n(), limit: CUT_ENUMERATION_LIMIT });
    }
    let c = max_flow_ratio(g.weights()) * (1.0 + 1e-12);
    Ok(all_cuts(g.n()).all(|cut| {
        let (a, b) = raw_cut_flow(g.weights(), &cut);
        b <= c * a && a <= c * b
    }))
}

/// Every cut has both flows positive or both zero.
pub fn flow_positivity_symmetric(g: &WeightedDigraph) -> Result<bool> {
    g.require_nonnegative()?;
    if g.n() > CUT_ENUMERATION_LIMIT {
        return Err(Error::TooManyNodes { n: g.n(), limit: CUT_ENUMERATION_LIMIT });
    }
    Ok(all_cuts(g.n()).all(|cut| {
        let (a, b) = raw_cut_flow(g.weights(), &cut);
        (a > 0.0) == (b > 0.0)
    }))
}

pub fn all_components_isolated(g: &WeightedDigraph) -> bool {
    strong_components(g).all_isolated()
}

/// A walk `i → j` exists exactly when a walk `j → i` does.
pub fn reachability_symmetric(g: &WeightedDigraph) -> bool {
    let reach: Vec<Vec<bool>> = (0..g.n()).map(|i| g.reachable_from(&[i])).collect();
    (0..g.n()).all(|i| (0..g.n()).all(|j| reach[i][j] == reach[j][i]))
}
