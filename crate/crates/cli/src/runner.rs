use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rai_core::fixedpoint::{distance_trajectory, solve, ProblemConfig, SolveReport};
use rai_core::graph::{
    all_components_isolated, cut_balance_certificate, cut_balanced_exhaustive, flow_positivity_symmetric, period,
    reachability_symmetric, strong_components, WeightedDigraph,
};
use rai_core::opinion::{
    modulus_consensus_verdict, recover_structural_balance, run_altafini, run_hk, HkConfig, SignedMatrix,
    SignedMatrixSequence,
};
use rai_core::rai::{
    classify, run_delayed_rai, run_rai, DelayConfig, DelaySpec, DisturbanceKind, DisturbancePolicy, Trajectory,
};
use rai_core::sequences::{
    check_arc_balance, check_reciprocity, check_uniform_cut_balance, persistent_graph, persistent_graph_with_threshold,
    SequenceConfig,
};
use rai_core::stochastic::{
    check_sia, is_primitive, positive_power_within_wielandt, schur_stability_by_reachability, spectral_radius,
    RowStochasticMatrix, SubstochasticMatrix,
};
use rai_core::tolerances::{
    tail_window, CLUSTER_TOL, CUT_ENUMERATION_LIMIT, EIG_TOL, ROW_SUM_TOL, SOLVER_MAX_ITERS, SOLVER_TOL,
};
use rai_core::Matrix;

use crate::error::CliError;
use crate::scenario::{Scenario, ScenarioKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub enum Artifact {
    Trajectory(Trajectory),
    Solve(Box<SolveReport>),
}

impl Artifact {
    pub fn render(&self, format: Format) -> String {
        match (self, format) {
            (Artifact::Trajectory(t), Format::Csv) => t.to_csv_string(),
            (Artifact::Trajectory(t), Format::Json) => to_json_line(&t.to_record()),
            (Artifact::Solve(r), Format::Csv) => r.history_csv(),
            (Artifact::Solve(r), Format::Json) => to_json_line(&r.history),
        }
    }
}

fn to_json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("artifacts serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub verdict: Value,
    pub artifact: Option<Artifact>,
    pub converged: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            0
        } else {
            3
        }
    }

    pub fn verdict_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.verdict).expect("verdicts serialize");
        s.push('\n');
        s
    }
}

fn params<T: DeserializeOwned>(v: &Value) -> Result<T, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::Schema(format!("parameters: {e}")))
}

fn value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// Runs a scenario with the given effective seed.
pub fn run(scenario: &Scenario, seed: u64) -> Result<Outcome, CliError> {
    let (result, artifact, converged) = match scenario.kind {
        ScenarioKind::AnalyzeGraph => analyze_graph(params(&scenario.parameters)?)?,
        ScenarioKind::AnalyzeMatrix => analyze_matrix(params(&scenario.parameters)?)?,
        ScenarioKind::CheckSequence => check_sequence(params(&scenario.parameters)?)?,
        ScenarioKind::SimulateRai => simulate_rai(params(&scenario.parameters)?, seed)?,
        ScenarioKind::SimulateHk => simulate_hk(params(&scenario.parameters)?)?,
        ScenarioKind::SimulateAltafini => simulate_altafini(params(&scenario.parameters)?, seed)?,
        ScenarioKind::SolveFixedpoint => solve_fixedpoint(params(&scenario.parameters)?)?,
    };
    let verdict = json!({
        "scenario": scenario.name,
        "kind": scenario.kind,
        "seed": seed,
        "converged": converged,
        "result": result,
    });
    Ok(Outcome { verdict, artifact, converged })
}

type Run = (Value, Option<Artifact>, bool);

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphParams {
    #[serde(default)]
    graph: Option<WeightedDigraph>,
    #[serde(default)]
    edge_list: Option<String>,
}

fn analyze_graph(p: GraphParams) -> Result<Run, CliError> {
    let g = match (p.graph, p.edge_list) {
        (Some(g), None) => g,
        (None, Some(text)) => WeightedDigraph::from_edge_list(&text)?,
        _ => return Err(CliError::Schema("parameters: give exactly one of graph, edge_list".into())),
    };
    let scc = strong_components(&g);
    let periods = scc.components.iter().map(|c| period(&g, c)).collect::<Result<Vec<_>, _>>()?;
    let small = g.n() <= CUT_ENUMERATION_LIMIT;
    let (certificate, characterizations) = if g.is_nonnegative() {
        let chars = if small {
            json!({
                "cut_balanced_exhaustive": cut_balanced_exhaustive(&g)?,
                "flow_positivity_symmetric": flow_positivity_symmetric(&g)?,
                "all_components_isolated": all_components_isolated(&g),
                "reachability_symmetric": reachability_symmetric(&g),
            })
        } else {
            json!({
                "all_components_isolated": all_components_isolated(&g),
                "reachability_symmetric": reachability_symmetric(&g),
            })
        };
        (value(&cut_balance_certificate(&g)?), chars)
    } else {
        (Value::Null, Value::Null)
    };
    let result = json!({
        "n": g.n(),
        "arcs": g.arcs().len(),
        "components": scc.components,
        "classes": scc.classes,
        "periods": periods,
        "is_strong": scc.is_strong,
        "is_quasi_strong": scc.is_quasi_strong,
        "has_spanning_root": g.has_spanning_root(),
        "cut_balance": certificate,
        "characterizations": characterizations,
    });
    Ok((result, None, true))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixParams {
    #[serde(default)]
    matrix: Option<Matrix>,
    #[serde(default)]
    matrices: Option<Vec<Matrix>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

fn matrix_report(m: Matrix) -> Result<Value, CliError> {
    let stochastic = (0..m.n()).all(|i| (m.row_sum(i) - 1.0).abs() <= ROW_SUM_TOL);
    if stochastic {
        let w = RowStochasticMatrix::new(m)?;
        let scc = strong_components(&w.graph());
        return Ok(json!({
            "type": "stochastic",
            "sia": check_sia(&w),
            "primitive": is_primitive(&w),
            "positive_power_within_wielandt": positive_power_within_wielandt(&w),
            "components": scc.components,
            "classes": scc.classes,
        }));
    }
    let a = SubstochasticMatrix::new(m)?;
    let rho = spectral_radius(&a);
    let reach = schur_stability_by_reachability(&a);
    let by_radius = rho < 1.0 - EIG_TOL;
    Ok(json!({
        "type": "substochastic",
        "deficiency_set": a.deficiency_set(),
        "spectral_radius": rho,
        "stable_by_reachability": reach.stable,
        "unreachable_nodes": reach.unreachable_nodes,
        "stable_by_radius": by_radius,
        "criteria_agree": by_radius == reach.stable,
    }))
}

fn analyze_matrix(p: MatrixParams) -> Result<Run, CliError> {
    let (list, single) = match (p.matrix, p.matrices) {
        (Some(m), None) => (vec![m], true),
        (None, Some(v)) if !v.is_empty() => (v, false),
        _ => return Err(CliError::Schema("parameters: give exactly one of matrix, matrices (nonempty)".into())),
    };
    if let Some(labels) = &p.labels {
        if labels.len() != list.len() {
            return Err(CliError::Schema(format!("parameters: {} labels for {} matrices", labels.len(), list.len())));
        }
    }
    let mut reports = Vec::with_capacity(list.len());
    for (idx, m) in list.into_iter().enumerate() {
        let mut r = matrix_report(m)?;
        let label = p.labels.as_ref().map_or_else(|| idx.to_string(), |l| l[idx].clone());
        r["label"] = Value::String(label);
        reports.push(r);
    }
    let result = if single { reports.pop().expect("one report") } else { json!({ "matrices": reports }) };
    Ok((result, None, true))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReciprocityParams {
    m: usize,
    t: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckParams {
    sequence: SequenceConfig,
    #[serde(default)]
    reciprocity: Option<ReciprocityParams>,
    #[serde(default)]
    window: Option<usize>,
    #[serde(default)]
    persistence_threshold: Option<f64>,
}

fn check_sequence(p: CheckParams) -> Result<Run, CliError> {
    let seq = p.sequence.build()?;
    let persistent = match p.persistence_threshold {
        Some(t) => persistent_graph_with_threshold(&seq, t)?,
        None => persistent_graph(&seq)?,
    };
    let pscc = strong_components(&persistent.graph);
    let arcs: Vec<(usize, usize)> = persistent.graph.arcs().into_iter().filter(|(s, d)| s != d).collect();
    let window = p.window.unwrap_or(seq.period().max(1) - 1);
    let reciprocity = match p.reciprocity {
        Some(r) => value(&check_reciprocity(&seq, r.m, r.t)?),
        None => Value::Null,
    };
    let result = json!({
        "n": seq.n(),
        "periodic": seq.is_periodic(),
        "period": seq.period(),
        "horizon": seq.horizon(),
        "window": window,
        "persistent": {
            "arcs": arcs,
            "exact": persistent.exact,
            "threshold": persistent.divergence_threshold,
            "strong": pscc.is_strong,
            "quasi_strong": pscc.is_quasi_strong,
        },
        "reciprocity": reciprocity,
        "uniform_cut_balance": check_uniform_cut_balance(&seq, window)?,
        "arc_balance": check_arc_balance(&seq, &persistent, window)?,
    });
    Ok((result, None, true))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RaiParams {
    sequence: SequenceConfig,
    #[serde(default)]
    x0: Option<Vec<f64>>,
    #[serde(default)]
    history: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    delays: Option<DelayConfig>,
    #[serde(default)]
    disturbance: Option<DisturbanceKind>,
    steps: usize,
}

fn simulate_rai(p: RaiParams, seed: u64) -> Result<Run, CliError> {
    let seq = p.sequence.build()?;
    let policy = DisturbancePolicy { kind: p.disturbance.unwrap_or(DisturbanceKind::Zero), seed };
    let traj = match (p.delays, p.x0, p.history) {
        (Some(cfg), None, Some(history)) => {
            run_delayed_rai(&seq, &DelaySpec::from_config(&cfg)?, &history, &policy, p.steps)?
        }
        (None, Some(x0), None) => run_rai(&seq, &x0, &policy, p.steps)?,
        (None, None, Some(h)) if h.len() == 1 => run_rai(&seq, &h[0], &policy, p.steps)?,
        _ => {
            return Err(CliError::Schema("parameters: give x0 without delays, or delays together with history".into()))
        }
    };
    let verdict = classify(&traj)?;
    let n = traj.n();
    let totals: Vec<f64> = (0..n).map(|i| (0..traj.steps()).map(|k| traj.residual(k)[i]).sum()).collect();
    let converged = !verdict.any_oscillating() && !verdict.any_diverging();
    let result = json!({
        "steps": traj.steps(),
        "final_state": traj.final_state(),
        "feasibility": traj.feasibility(),
        "classification": verdict,
        "disturbance_totals": totals,
    });
    Ok((result, Some(Artifact::Trajectory(traj)), converged))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HkParams {
    x0: Vec<f64>,
    epsilon: f64,
    #[serde(default)]
    truth: f64,
    #[serde(default)]
    awareness: Option<Vec<f64>>,
    max_steps: usize,
}

fn simulate_hk(p: HkParams) -> Result<Run, CliError> {
    let n = p.x0.len();
    let cfg = HkConfig { epsilon: p.epsilon, truth: p.truth, awareness: p.awareness.unwrap_or_else(|| vec![0.0; n]) };
    let run = run_hk(&p.x0, &cfg, p.max_steps)?;
    let seekers: Vec<usize> = (0..n).filter(|&i| cfg.awareness[i] > 0.0).collect();
    let x = run.trajectory.final_state();
    let at_truth = seekers.iter().all(|&i| (x[i] - cfg.truth).abs() < CLUSTER_TOL);
    let steps = run.trajectory.steps();
    let converged = run.stationary_at.is_some()
        || (steps >= tail_window(steps)
            && classify(&run.trajectory)?
                .status
                .iter()
                .all(|s| matches!(s, rai_core::rai::AgentStatus::Converged { .. })));
    let result = json!({
        "steps": steps,
        "stationary_at": run.stationary_at,
        "final_state": x,
        "clusters": run.report,
        "frozen_since": run.frozen_since,
        "truth_seekers": seekers,
        "truth_seekers_at_truth": at_truth,
        "truth_gap_feasible": run.truth_gap.feasibility().feasible,
    });
    Ok((result, Some(Artifact::Trajectory(run.trajectory)), converged))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AltafiniParams {
    #[serde(default)]
    matrix: Option<SignedMatrix>,
    #[serde(default)]
    matrices: Option<Vec<SignedMatrix>>,
    x0: Vec<f64>,
    steps: usize,
    #[serde(default)]
    random_starts: usize,
    #[serde(default)]
    balance_horizon: Option<usize>,
}

fn simulate_altafini(p: AltafiniParams, seed: u64) -> Result<Run, CliError> {
    let seq = match (p.matrix, p.matrices) {
        (Some(a), None) => SignedMatrixSequence::constant(a),
        (None, Some(v)) => SignedMatrixSequence::cyclic(v)?,
        _ => return Err(CliError::Schema("parameters: give exactly one of matrix, matrices".into())),
    };
    let run = run_altafini(&seq, &p.x0, p.steps)?;
    let modulus = modulus_consensus_verdict(&run.trajectory)?;
    let balance = recover_structural_balance(&seq, p.balance_horizon.unwrap_or(p.steps))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::with_capacity(p.random_starts);
    let mut all_consensus = modulus.modulus_consensus;
    for _ in 0..p.random_starts {
        let x0: Vec<f64> = (0..seq.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = modulus_consensus_verdict(&run_altafini(&seq, &x0, p.steps)?.trajectory)?;
        all_consensus &= v.modulus_consensus;
        starts.push(json!({
            "modulus_consensus": v.modulus_consensus,
            "limit_magnitude": v.limit_magnitude,
            "degenerate": v.degenerate,
        }));
    }
    let result = json!({
        "steps": p.steps,
        "final_state": run.trajectory.final_state(),
        "modulus": modulus,
        "balance": balance,
        "companion_feasible": run.companion_feasible,
        "random_starts": starts,
    });
    Ok((result, Some(Artifact::Trajectory(run.trajectory)), all_consensus))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveParams {
    problem: ProblemConfig,
    #[serde(default)]
    max_iters: Option<usize>,
    #[serde(default)]
    tol: Option<f64>,
    /// A known common fixed point; when given, the induced distance vector is checked.
    #[serde(default)]
    anchor: Option<Vec<f64>>,
}

fn solve_fixedpoint(p: SolveParams) -> Result<Run, CliError> {
    let (problem, init) = p.problem.build()?;
    let tol = p.tol.unwrap_or(SOLVER_TOL);
    if !(tol > 0.0) {
        return Err(CliError::Schema("parameters: tol must be positive".into()));
    }
    let report = solve(&problem, &init, p.max_iters.unwrap_or(SOLVER_MAX_ITERS), tol)?;
    let distance = match &p.anchor {
        Some(anchor) => {
            let steps = report.iterations.min(1000);
            let f = distance_trajectory(&problem, &init, anchor, steps)?.feasibility();
            json!({ "steps": steps, "feasibility": f })
        }
        None => Value::Null,
    };
    let result = json!({
        "algorithm": problem.algorithm(),
        "converged": report.converged,
        "iterations": report.iterations,
        "solution": report.solution,
        "agent_disagreement": report.agent_disagreement,
        "constraint_violation": report.constraint_violation,
        "final_states": report.final_states,
        "distance_check": distance,
    });
    let converged = report.converged;
    Ok((result, Some(Artifact::Solve(Box::new(report))), converged))
}

/// Writes the verdict and, if any, the artifact into `dir`; returns the written paths.
pub fn write_outputs(
    scenario: &Scenario,
    outcome: &Outcome,
    dir: &Path,
    format: Format,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let verdict_name = scenario.outputs.verdict.clone().unwrap_or_else(|| format!("{}.verdict.json", scenario.name));
    let verdict_path = dir.join(verdict_name);
    fs::write(&verdict_path, outcome.verdict_text())?;
    written.push(verdict_path);
    if let Some(artifact) = &outcome.artifact {
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let name = scenario.outputs.trajectory.clone().unwrap_or_else(|| format!("{}.trajectory.{ext}", scenario.name));
        let path = dir.join(name);
        fs::write(&path, artifact.render(format))?;
        written.push(path);
    }
    Ok(written)
}
