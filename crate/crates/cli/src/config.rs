//! TOML experiment configuration.
//!
//! One file can hold the sections for several subcommands; each command
//! reads its own table plus the shared `[solver]` block.  Node and tree
//! indices in config files are 1-based to match the usual numbering in
//! problem write-ups; they are shifted to 0-based on conversion.

use crate::{CliError, CliResult};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use umot::solver::SolverConfig;
use umot::{MarginalPenalty, TreeGraph};

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub solver: SolverSection,
    pub solve: Option<SolveSection>,
    pub barycenter: Option<BarycenterSection>,
    pub interpolate: Option<InterpolateSection>,
    pub track: Option<TrackSection>,
    pub validate: Option<ValidateSection>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::input(format!("cannot parse {}: {e}", path.display())))
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_cadence")]
    pub dual_cadence: usize,
}

fn default_max_sweeps() -> usize {
    5000
}
fn default_tolerance() -> f64 {
    1e-8
}
fn default_cadence() -> usize {
    10
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            max_sweeps: default_max_sweeps(),
            tolerance: default_tolerance(),
            dual_cadence: default_cadence(),
        }
    }
}

impl SolverSection {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            max_sweeps: self.max_sweeps,
            tolerance: self.tolerance,
            dual_cadence: self.dual_cadence,
            ..Default::default()
        }
    }
}

/// Penalty spec as written in configs: `{ kind = "kl", weight = 1.0 }`.
#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct PenaltySpec {
    pub kind: String,
    pub weight: Option<f64>,
}

impl PenaltySpec {
    pub fn to_penalty(&self) -> CliResult<MarginalPenalty> {
        match self.kind.as_str() {
            "equality" => Ok(MarginalPenalty::Equality),
            "free" => Ok(MarginalPenalty::Free),
            "kl" => {
                let w = self
                    .weight
                    .ok_or_else(|| CliError::input("kl penalty needs a weight"))?;
                Ok(MarginalPenalty::kl(w)?)
            }
            "tv" => {
                let w = self
                    .weight
                    .ok_or_else(|| CliError::input("tv penalty needs a weight"))?;
                Ok(MarginalPenalty::tv(w)?)
            }
            other => Err(CliError::input(format!(
                "unknown penalty kind '{other}' (expected equality|free|kl|tv)"
            ))),
        }
    }
}

/// Tree description with 1-based node indices.
#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    pub edges: Vec<[usize; 2]>,
    /// Defaults to equal weights summing to one.
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub given: Vec<usize>,
}

impl TreeSpec {
    pub fn node_count(&self) -> usize {
        self.edges.iter().flat_map(|e| e.iter().copied()).max().unwrap_or(0)
    }

    pub fn to_tree(&self) -> CliResult<TreeGraph> {
        let n = self.node_count();
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&[a, b]| {
                if a == 0 || b == 0 {
                    Err(CliError::input("tree node indices are 1-based"))
                } else {
                    Ok((a - 1, b - 1))
                }
            })
            .collect::<CliResult<_>>()?;
        let weights = match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0 / edges.len() as f64; edges.len()],
        };
        let given: Vec<usize> = self
            .given
            .iter()
            .map(|&g| {
                if g == 0 {
                    Err(CliError::input("tree node indices are 1-based"))
                } else {
                    Ok(g - 1)
                }
            })
            .collect::<CliResult<_>>()?;
        Ok(TreeGraph::validate(n, &edges, &weights, &given)?)
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct SolveNodeSpec {
    /// 1-based node id.
    pub id: usize,
    /// Measure file (CSV or PGM) for penalized nodes.
    pub measure: Option<PathBuf>,
    /// Support file for free nodes (weights are ignored).
    pub support: Option<PathBuf>,
    pub penalty: Option<PenaltySpec>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub epsilon: f64,
    pub tree: TreeSpec,
    pub nodes: Vec<SolveNodeSpec>,
    /// Applied to PGM inputs: "mass" (unit mass), "max" or "none".
    #[serde(default = "default_normalize")]
    pub normalize: String,
    #[serde(default)]
    pub weight_floor: f64,
}

pub fn default_normalize() -> String {
    "mass".into()
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct SyntheticGaussians {
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub masses: Vec<f64>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct CoupledSpec {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_outer")]
    pub max_outer: usize,
    #[serde(default = "default_gradient_tolerance")]
    pub gradient_tolerance: f64,
}

fn default_outer() -> usize {
    300
}
fn default_gradient_tolerance() -> f64 {
    1e-7
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct BarycenterSection {
    pub epsilon: f64,
    /// Interpolation parameters t; each run uses weights (1−t, t) for two
    /// inputs.  For more inputs use `weight_sets`.
    #[serde(default)]
    pub t_values: Vec<f64>,
    #[serde(default)]
    pub weight_sets: Vec<Vec<f64>>,
    pub penalty: PenaltySpec,
    /// CSV inputs; mutually exclusive with `synthetic`.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    pub synthetic: Option<SyntheticGaussians>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    pub coupled: Option<CoupledSpec>,
}

fn default_grid_points() -> usize {
    60
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct SyntheticBlobs {
    pub size: usize,
    /// One blob per leaf image: (row, col) in [0,1]², sigma, mass.
    pub centers: Vec<[f64; 2]>,
    pub sigmas: Vec<f64>,
    pub masses: Vec<f64>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct InterpolateSection {
    pub epsilon: f64,
    pub penalty: PenaltySpec,
    pub tree: TreeSpec,
    /// "tree" for the joint solve, "stars" for per-node star decomposition.
    #[serde(default = "default_mode")]
    pub mode: String,
    /// PGM inputs for the given nodes, in ascending node order.
    #[serde(default)]
    pub images: Vec<PathBuf>,
    pub synthetic: Option<SyntheticBlobs>,
    #[serde(default = "default_normalize")]
    pub normalize: String,
    #[serde(default = "default_floor")]
    pub weight_floor: f64,
}

fn default_mode() -> String {
    "tree".into()
}
fn default_floor() -> f64 {
    1e-10
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct TrackSection {
    pub epsilon: f64,
    pub tv_weight: f64,
    #[serde(default = "default_track_grid")]
    pub grid: usize,
    #[serde(default = "default_frames")]
    pub frames: usize,
    /// Downward shift per time step, in pixels.
    #[serde(default = "default_shift")]
    pub shift: usize,
    /// Fraction of pixels kept as dots in the base image.
    #[serde(default = "default_dot_density")]
    pub dot_density: f64,
    /// Fraction of pixels added as noise dots per frame.
    #[serde(default = "default_noise_density")]
    pub noise_density: f64,
    /// Gaussian blur standard deviation in pixels.
    #[serde(default = "default_blur")]
    pub blur_sigma: f64,
    /// Use equality penalties and no added noise (sanity mode).
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub weight_floor: f64,
}

fn default_track_grid() -> usize {
    32
}
fn default_frames() -> usize {
    5
}
fn default_shift() -> usize {
    2
}
fn default_dot_density() -> f64 {
    0.01
}
fn default_noise_density() -> f64 {
    0.005
}
fn default_blur() -> f64 {
    0.7
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_samples")]
    pub aprox_samples: usize,
}

fn default_instances() -> usize {
    20
}
fn default_samples() -> usize {
    500
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self { instances: default_instances(), aprox_samples: default_samples() }
    }
}
