//! Particle tracking with transfer operators on a drifting-dots sequence.
//!
//! The noisy frames enter a line-tree UMOT solve with TV penalties; the
//! pair marginal between the first and last frame, row-normalized by its
//! source marginal, gives the joint transfer operator.  The baseline chains
//! the operators of the individual two-marginal solves between consecutive
//! frames.  Both operators propagate the clean first frame; squared errors
//! against the clean last frame are reported.

use crate::config::{SolverSection, TrackSection};
use crate::output::{ensure_out_dir, write_diagnostics, RunSummary};
use crate::synth::{dot_sequence, normalize_weights};
use crate::{CliError, CliResult};
use ndarray::Array1;
use std::path::Path;
use umot::kernels::CostMatrix;
use umot::problems::TransferOperator;
use umot::solver::{
    edge_marginal, node_marginal, tree_sinkhorn, ProblemNode, TreeProblem,
};
use umot::tree::TreeGraph;
use umot::{DiscreteMeasure, MarginalPenalty};

pub struct TrackOutcome {
    pub summary: RunSummary,
    pub umot_error: f64,
    pub uot_error: f64,
}

fn squared_error(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn run(
    section: &TrackSection,
    solver: &SolverSection,
    out_dir: &Path,
    seed: u64,
    log_json: bool,
) -> CliResult<TrackOutcome> {
    ensure_out_dir(out_dir)?;
    let n = section.frames;
    if n < 2 {
        return Err(CliError::input("tracking needs at least two frames"));
    }
    let g = section.grid;
    let noise = if section.noiseless { 0.0 } else { section.noise_density };
    let seq = dot_sequence(
        seed,
        g,
        n,
        section.shift,
        section.dot_density,
        noise,
        section.blur_sigma,
    );

    // Equality penalties need strictly positive weights; TV tolerates the
    // zeros of the dot images.
    let penalty = if section.noiseless {
        MarginalPenalty::Equality
    } else {
        MarginalPenalty::tv(section.tv_weight)?
    };
    let floor = if section.noiseless {
        section.weight_floor.max(1e-12)
    } else {
        section.weight_floor
    };

    let clean: Vec<Array1<f64>> =
        seq.clean.iter().map(|w| normalize_weights(w, floor)).collect();
    let noisy: Vec<Array1<f64>> =
        seq.noisy.iter().map(|w| normalize_weights(w, floor)).collect();
    let frames: Vec<DiscreteMeasure> = noisy
        .iter()
        .map(|w| Ok(DiscreteMeasure::grid(g, g, w.clone())?))
        .collect::<CliResult<Vec<_>>>()?;

    let mut summary = RunSummary::new("track", section.epsilon);
    summary.seed = Some(seed);

    for (i, w) in clean.iter().enumerate() {
        let m = DiscreteMeasure::grid(g, g, w.clone())?;
        let path = out_dir.join(format!("clean_{}.pgm", i + 1));
        m.write_pgm(&path, None)?;
        summary.record_output(&path);
    }
    for (i, m) in frames.iter().enumerate() {
        let path = out_dir.join(format!("noisy_{}.pgm", i + 1));
        m.write_pgm(&path, None)?;
        summary.record_output(&path);
    }

    // Joint solve on the line tree with equal edge weights.
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let edge_weight = 1.0 / (n - 1) as f64;
    let weights = vec![edge_weight; n - 1];
    let given: Vec<usize> = (0..n).collect();
    let tree = TreeGraph::validate(n, &edges, &weights, &given)?;
    let nodes: Vec<ProblemNode> = frames
        .iter()
        .map(|m| ProblemNode::new(m.clone(), penalty))
        .collect();
    let costs: Vec<CostMatrix> = (0..n - 1)
        .map(|i| Ok(CostMatrix::squared_distance(&frames[i], &frames[i + 1])?))
        .collect::<CliResult<Vec<_>>>()?;
    let problem = TreeProblem::new(tree, nodes, costs, section.epsilon)?;
    let config = solver.to_config();
    let (state, diag) = tree_sinkhorn(&problem, &config)?;
    summary.absorb_diagnostics(&diag);
    if log_json {
        let path = write_diagnostics(out_dir, "diagnostics.jsonl", &diag)?;
        summary.record_output(&path);
    }

    for i in 0..n {
        let weights = node_marginal(&problem, &state, i)?;
        let m = DiscreteMeasure::grid(g, g, weights)?;
        summary.masses.insert(format!("umot_marginal_{}", i + 1), m.total_mass());
        let path = out_dir.join(format!("umot_marginal_{}.pgm", i + 1));
        m.write_pgm(&path, None)?;
        summary.record_output(&path);
    }

    // Transfer operator from the first-to-last pair marginal.
    let pair = edge_marginal(&problem, &state, 0, n - 1)?;
    let source = node_marginal(&problem, &state, 0)?;
    let source_measure = frames[0].with_weights(source)?;
    let k_umot = TransferOperator::from_plan(&pair, &source_measure)?;

    // Baseline: chain the operators of consecutive two-marginal solves,
    // each with the same per-edge kernel exp(−t_e·c/ε) = exp(−c/(ε/t_e)).
    let leg_epsilon = section.epsilon / edge_weight;
    let mut k_uot: Option<TransferOperator> = None;
    for i in 0..n - 1 {
        let tree = TreeGraph::validate(2, &[(0, 1)], &[1.0], &[0, 1])?;
        let nodes = vec![
            ProblemNode::new(frames[i].clone(), penalty),
            ProblemNode::new(frames[i + 1].clone(), penalty),
        ];
        let cost = CostMatrix::squared_distance(&frames[i], &frames[i + 1])?;
        let leg = TreeProblem::new(tree, nodes, vec![cost], leg_epsilon)?;
        let (leg_state, leg_diag) = tree_sinkhorn(&leg, &config)?;
        summary
            .metrics
            .insert(format!("uot_leg_{}_sweeps", i + 1), leg_diag.sweeps as f64);
        let plan = edge_marginal(&leg, &leg_state, 0, 1)?;
        let leg_source = node_marginal(&leg, &leg_state, 0)?;
        let leg_source_measure = frames[i].with_weights(leg_source)?;
        let op = TransferOperator::from_plan(&plan, &leg_source_measure)?;
        k_uot = Some(match k_uot {
            None => op,
            Some(prev) => prev.compose(&op)?,
        });
    }
    let k_uot = k_uot.expect("at least one leg");

    let propagated_umot = k_umot.propagate(&clean[0])?;
    let propagated_uot = k_uot.propagate(&clean[0])?;
    let truth = &clean[n - 1];
    let umot_error = squared_error(&propagated_umot, truth);
    let uot_error = squared_error(&propagated_uot, truth);

    for (name, w) in [("propagated_umot", &propagated_umot), ("propagated_uot", &propagated_uot)] {
        let m = DiscreteMeasure::grid(g, g, w.clone())?;
        let path = out_dir.join(format!("{name}.pgm"));
        m.write_pgm(&path, None)?;
        summary.record_output(&path);
    }

    summary.metrics.insert("umot_squared_error".into(), umot_error);
    summary.metrics.insert("uot_squared_error".into(), uot_error);
    summary
        .metrics
        .insert("umot_beats_uot".into(), f64::from(umot_error <= uot_error));
    summary.masses.insert("propagated_umot".into(), propagated_umot.sum());
    summary.masses.insert("propagated_uot".into(), propagated_uot.sum());

    let path = summary.write(out_dir)?;
    summary.outputs.push(path.display().to_string());
    Ok(TrackOutcome { summary, umot_error, uot_error })
}
