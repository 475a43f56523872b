//! Unbalanced barycenters of 1D measures via the star-tree solve, with an
//! optional comparison against the coupled (pinned-sum) barycenter.

use crate::config::{BarycenterSection, SolverSection};
use crate::output::{ensure_out_dir, write_diagnostics, RunSummary};
use crate::synth::truncated_gaussian_1d;
use crate::{CliError, CliResult};
use std::path::Path;
use umot::measures::neg_entropy;
use umot::problems::{
    build_barycenter_problem, coupled_barycenter, extract_barycenter, CoupledConfig,
};
use umot::solver::{node_marginal, tree_sinkhorn};
use umot::DiscreteMeasure;

pub struct BarycenterOutcome {
    pub summary: RunSummary,
    /// Per requested weight vector: (label, barycenter, sharpness E°).
    pub barycenters: Vec<(String, DiscreteMeasure, f64)>,
    /// Sharpness of the coupled barycenter per label, when requested.
    pub coupled_sharpness: Vec<(String, f64)>,
}

fn input_measures(section: &BarycenterSection) -> CliResult<Vec<DiscreteMeasure>> {
    if let Some(synth) = &section.synthetic {
        if !section.inputs.is_empty() {
            return Err(CliError::input("give either synthetic inputs or files, not both"));
        }
        let n = synth.means.len();
        if synth.sigmas.len() != n || synth.masses.len() != n {
            return Err(CliError::input("synthetic means/sigmas/masses must have equal length"));
        }
        Ok((0..n)
            .map(|i| {
                truncated_gaussian_1d(
                    section.grid_points,
                    synth.means[i],
                    synth.sigmas[i],
                    synth.masses[i],
                )
            })
            .collect())
    } else if !section.inputs.is_empty() {
        section
            .inputs
            .iter()
            .map(|p| Ok(DiscreteMeasure::read_csv(p)?))
            .collect()
    } else {
        Err(CliError::input("barycenter needs synthetic inputs or CSV files"))
    }
}

fn weight_vectors(section: &BarycenterSection, n: usize) -> CliResult<Vec<(String, Vec<f64>)>> {
    let mut sets = Vec::new();
    for &t in &section.t_values {
        if n != 2 {
            return Err(CliError::input("t_values applies to exactly two inputs"));
        }
        sets.push((format!("t{t:.3}"), vec![1.0 - t, t]));
    }
    for (i, w) in section.weight_sets.iter().enumerate() {
        if w.len() != n {
            return Err(CliError::input(format!(
                "weight set {i} has {} entries for {n} inputs",
                w.len()
            )));
        }
        sets.push((format!("w{i}"), w.clone()));
    }
    if sets.is_empty() {
        return Err(CliError::input("no t_values or weight_sets given"));
    }
    Ok(sets)
}

pub fn run(
    section: &BarycenterSection,
    solver: &SolverSection,
    out_dir: &Path,
    seed: Option<u64>,
    log_json: bool,
) -> CliResult<BarycenterOutcome> {
    ensure_out_dir(out_dir)?;
    let measures = input_measures(section)?;
    let penalty = section.penalty.to_penalty()?;
    let penalties = vec![penalty; measures.len()];
    let support = DiscreteMeasure::support_only(measures[0].points().clone())?;
    let config = solver.to_config();

    let mut summary = RunSummary::new("barycenter", section.epsilon);
    summary.seed = seed;
    for (i, m) in measures.iter().enumerate() {
        summary.masses.insert(format!("input_{}", i + 1), m.total_mass());
        let path = out_dir.join(format!("input_{}.csv", i + 1));
        m.write_csv(&path)?;
        summary.record_output(&path);
    }

    let mut barycenters = Vec::new();
    let mut coupled_sharpness = Vec::new();
    for (label, weights) in weight_vectors(section, measures.len())? {
        let problem =
            build_barycenter_problem(&measures, &penalties, &weights, &support, section.epsilon)?;
        let (state, diag) = tree_sinkhorn(&problem, &config)?;
        let bary = extract_barycenter(&problem, &state)?;

        let path = out_dir.join(format!("barycenter_{label}.csv"));
        bary.write_csv(&path)?;
        summary.record_output(&path);
        for i in 0..measures.len() {
            let marginal = node_marginal(&problem, &state, i)?;
            let m = measures[i].with_weights(marginal)?;
            let path = out_dir.join(format!("marginal_{}_{label}.csv", i + 1));
            m.write_csv(&path)?;
            summary.masses.insert(format!("marginal_{}_{label}", i + 1), m.total_mass());
            summary.record_output(&path);
        }
        if log_json {
            let path = write_diagnostics(out_dir, &format!("diagnostics_{label}.jsonl"), &diag)?;
            summary.record_output(&path);
        }

        summary.absorb_diagnostics(&diag);
        summary.masses.insert(format!("barycenter_{label}"), bary.total_mass());
        summary.metrics.insert(format!("dual_{label}"), diag.final_dual);
        summary.metrics.insert(format!("sweeps_{label}"), diag.sweeps as f64);
        let sharpness = neg_entropy(bary.weights());
        summary.metrics.insert(format!("neg_entropy_{label}"), sharpness);

        if let Some(coupled) = &section.coupled {
            if coupled.enabled {
                let outer = CoupledConfig {
                    max_outer: coupled.max_outer,
                    gradient_tolerance: coupled.gradient_tolerance,
                    ..Default::default()
                };
                let result = coupled_barycenter(
                    &measures,
                    &penalties,
                    &weights,
                    &support,
                    section.epsilon,
                    &config,
                    &outer,
                )?;
                let path = out_dir.join(format!("coupled_{label}.csv"));
                result.xi.write_csv(&path)?;
                summary.record_output(&path);
                let sharp_c = neg_entropy(result.xi.weights());
                summary.masses.insert(format!("coupled_{label}"), result.xi.total_mass());
                summary.metrics.insert(format!("coupled_neg_entropy_{label}"), sharp_c);
                summary
                    .metrics
                    .insert(format!("coupled_gradient_{label}"), result.gradient_norm);
                coupled_sharpness.push((label.clone(), sharp_c));
            }
        }

        barycenters.push((label, bary, sharpness));
    }

    let path = summary.write(out_dir)?;
    summary.outputs.push(path.display().to_string());
    Ok(BarycenterOutcome { summary, barycenters, coupled_sharpness })
}
