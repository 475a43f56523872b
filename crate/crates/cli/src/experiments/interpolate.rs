//! Image interpolation along a tree: either one joint solve whose free-node
//! marginals are the interpolants, or a star-shaped decomposition solving
//! one barycenter problem per inner node.

use crate::config::{InterpolateSection, SolverSection};
use crate::output::{ensure_out_dir, write_diagnostics, RunSummary};
use crate::synth::{blob_image, normalize_weights};
use crate::{CliError, CliResult};
use std::path::Path;
use umot::problems::{build_interpolation_problem, extract_barycenter, star_decomposition};
use umot::solver::{node_marginal, tree_sinkhorn};
use umot::{DiscreteMeasure, MarginalPenalty};

pub struct InterpolateOutcome {
    pub summary: RunSummary,
    /// (node id 1-based, marginal) for every emitted marginal.
    pub marginals: Vec<(usize, DiscreteMeasure)>,
}

fn leaf_images(
    section: &InterpolateSection,
    given: &[usize],
) -> CliResult<Vec<DiscreteMeasure>> {
    if let Some(synth) = &section.synthetic {
        if !section.images.is_empty() {
            return Err(CliError::input("give either synthetic images or files, not both"));
        }
        let n = given.len();
        if synth.centers.len() != n || synth.sigmas.len() != n || synth.masses.len() != n {
            return Err(CliError::input(format!(
                "synthetic blobs need {n} centers/sigmas/masses (one per given node)"
            )));
        }
        (0..n)
            .map(|i| {
                let raw = blob_image(
                    synth.size,
                    (synth.centers[i][0], synth.centers[i][1]),
                    synth.sigmas[i],
                    synth.masses[i],
                );
                let mass = raw.sum();
                let mut w = normalize_weights(&raw, section.weight_floor);
                w.mapv_inplace(|v| v * mass);
                Ok(DiscreteMeasure::grid(synth.size, synth.size, w)?)
            })
            .collect()
    } else {
        if section.images.len() != given.len() {
            return Err(CliError::input(format!(
                "{} images for {} given nodes",
                section.images.len(),
                given.len()
            )));
        }
        section
            .images
            .iter()
            .map(|p| super::load_measure(p, &section.normalize, section.weight_floor))
            .collect()
    }
}

pub fn run(
    section: &InterpolateSection,
    solver: &SolverSection,
    out_dir: &Path,
    seed: Option<u64>,
    log_json: bool,
) -> CliResult<InterpolateOutcome> {
    ensure_out_dir(out_dir)?;
    let tree = section.tree.to_tree()?;
    let given: Vec<usize> = tree.given_nodes().collect();
    let images = leaf_images(section, &given)?;
    let grid = images[0]
        .grid_shape()
        .ok_or_else(|| CliError::input("interpolation inputs must be grid measures"))?;
    for img in &images {
        if img.grid_shape() != Some(grid) {
            return Err(CliError::input("all images must share one grid"));
        }
    }
    let penalty = section.penalty.to_penalty()?;
    let config = solver.to_config();

    // Node measures: images at given nodes, bare supports elsewhere.
    let support = DiscreteMeasure::grid(grid.0, grid.1, ndarray::Array1::ones(grid.0 * grid.1))?;
    let mut node_measures = vec![support; tree.node_count()];
    let mut penalties = vec![MarginalPenalty::Free; tree.node_count()];
    for (slot, &node) in given.iter().enumerate() {
        node_measures[node] = images[slot].clone();
        penalties[node] = penalty;
    }

    let mut summary = RunSummary::new("interpolate", section.epsilon);
    summary.seed = seed;
    for (slot, &node) in given.iter().enumerate() {
        summary
            .masses
            .insert(format!("input_node_{}", node + 1), images[slot].total_mass());
    }

    let mut marginals: Vec<(usize, DiscreteMeasure)> = Vec::new();
    match section.mode.as_str() {
        "tree" => {
            let problem = build_interpolation_problem(
                &tree,
                &node_measures,
                &penalties,
                section.epsilon,
            )?;
            let (state, diag) = tree_sinkhorn(&problem, &config)?;
            summary.absorb_diagnostics(&diag);
            if log_json {
                let path = write_diagnostics(out_dir, "diagnostics.jsonl", &diag)?;
                summary.record_output(&path);
            }
            for node in 0..tree.node_count() {
                let weights = node_marginal(&problem, &state, node)?;
                let m = node_measures[node].with_weights(weights)?;
                summary.masses.insert(format!("marginal_node_{}", node + 1), m.total_mass());
                marginals.push((node + 1, m));
            }
        }
        "stars" => {
            for center in tree.free_nodes().collect::<Vec<_>>() {
                let (problem, weights) = star_decomposition(
                    &tree,
                    center,
                    &node_measures,
                    &penalties,
                    section.epsilon,
                )?;
                let (state, diag) = tree_sinkhorn(&problem, &config)?;
                summary.absorb_diagnostics(&diag);
                if log_json {
                    let path = write_diagnostics(
                        out_dir,
                        &format!("diagnostics_node_{}.jsonl", center + 1),
                        &diag,
                    )?;
                    summary.record_output(&path);
                }
                let m = extract_barycenter(&problem, &state)?;
                summary
                    .masses
                    .insert(format!("marginal_node_{}", center + 1), m.total_mass());
                summary.metrics.insert(
                    format!("star_weight_sum_node_{}", center + 1),
                    weights.iter().sum(),
                );
                marginals.push((center + 1, m));
            }
        }
        other => {
            return Err(CliError::input(format!(
                "unknown interpolation mode '{other}' (expected tree|stars)"
            )))
        }
    }

    // One shared intensity scale keeps the emitted images comparable.
    let global_max = marginals
        .iter()
        .flat_map(|(_, m)| m.weights().iter().copied())
        .fold(f64::MIN_POSITIVE, f64::max);
    for (node, m) in &marginals {
        let path = out_dir.join(format!("marginal_node_{node}.pgm"));
        m.write_pgm(&path, Some(global_max))?;
        summary.record_output(&path);
    }

    let path = summary.write(out_dir)?;
    summary.outputs.push(path.display().to_string());
    Ok(InterpolateOutcome { summary, marginals })
}
