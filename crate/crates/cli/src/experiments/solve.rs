//! Generic tree solve from explicit node files and penalties.

use crate::config::{SolveSection, SolverSection};
use crate::output::{ensure_out_dir, write_diagnostics, RunSummary};
use crate::{CliError, CliResult};
use std::path::Path;
use umot::kernels::CostMatrix;
use umot::solver::{node_marginal, tree_sinkhorn, ProblemNode, TreeProblem};
use umot::{DiscreteMeasure, MarginalPenalty};

pub struct SolveOutcome {
    pub summary: RunSummary,
    pub marginals: Vec<(usize, DiscreteMeasure)>,
}

pub fn run(
    section: &SolveSection,
    solver: &SolverSection,
    out_dir: &Path,
    seed: Option<u64>,
    log_json: bool,
) -> CliResult<SolveOutcome> {
    ensure_out_dir(out_dir)?;
    let tree = section.tree.to_tree()?;
    let n = tree.node_count();
    if section.nodes.len() != n {
        return Err(CliError::input(format!(
            "{} node specs for a {n}-node tree",
            section.nodes.len()
        )));
    }

    let mut nodes: Vec<Option<ProblemNode>> = vec![None; n];
    for spec in &section.nodes {
        if spec.id == 0 || spec.id > n {
            return Err(CliError::input(format!("node id {} out of range", spec.id)));
        }
        let idx = spec.id - 1;
        let node = match (&spec.measure, &spec.support) {
            (Some(path), None) => {
                let m = super::load_measure(path, &section.normalize, section.weight_floor)?;
                let penalty = spec
                    .penalty
                    .as_ref()
                    .ok_or_else(|| {
                        CliError::input(format!("node {} has a measure but no penalty", spec.id))
                    })?
                    .to_penalty()?;
                ProblemNode::new(m, penalty)
            }
            (None, Some(path)) => {
                let m = super::load_measure(path, &section.normalize, 0.0)?;
                if let Some(p) = &spec.penalty {
                    if p.to_penalty()? != MarginalPenalty::Free {
                        return Err(CliError::input(format!(
                            "support-only node {} must have a free penalty",
                            spec.id
                        )));
                    }
                }
                ProblemNode::free(m)
            }
            _ => {
                return Err(CliError::input(format!(
                    "node {} needs exactly one of measure or support",
                    spec.id
                )))
            }
        };
        if nodes[idx].is_some() {
            return Err(CliError::input(format!("duplicate node id {}", spec.id)));
        }
        nodes[idx] = Some(node);
    }
    let nodes: Vec<ProblemNode> = nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.ok_or_else(|| CliError::input(format!("node {} missing", i + 1))))
        .collect::<CliResult<_>>()?;

    let costs: Vec<CostMatrix> = tree
        .edges()
        .iter()
        .map(|&(a, b)| {
            Ok(CostMatrix::squared_distance(&nodes[a].measure, &nodes[b].measure)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let problem = TreeProblem::new(tree.clone(), nodes, costs, section.epsilon)?;
    let (state, diag) = tree_sinkhorn(&problem, &solver.to_config())?;

    let mut summary = RunSummary::new("solve", section.epsilon);
    summary.seed = seed;
    summary.absorb_diagnostics(&diag);
    if log_json {
        let path = write_diagnostics(out_dir, "diagnostics.jsonl", &diag)?;
        summary.record_output(&path);
    }

    let mut marginals = Vec::new();
    for j in 0..n {
        let weights = node_marginal(&problem, &state, j)?;
        let m = problem.node(j).measure.with_weights(weights)?;
        summary.masses.insert(format!("marginal_node_{}", j + 1), m.total_mass());
        let path = if m.grid_shape().is_some() {
            let p = out_dir.join(format!("marginal_node_{}.pgm", j + 1));
            m.write_pgm(&p, None)?;
            p
        } else {
            let p = out_dir.join(format!("marginal_node_{}.csv", j + 1));
            m.write_csv(&p)?;
            p
        };
        summary.record_output(&path);
        marginals.push((j + 1, m));
    }

    let path = summary.write(out_dir)?;
    summary.outputs.push(path.display().to_string());
    Ok(SolveOutcome { summary, marginals })
}
