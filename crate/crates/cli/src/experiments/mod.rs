//! The five experiment runners behind the CLI subcommands.

pub mod barycenter;
pub mod interpolate;
pub mod solve;
pub mod track;
pub mod validate;

use crate::config::PenaltySpec;
use crate::{CliError, CliResult};
use ndarray::Array1;
use std::path::Path;
use umot::measures::PgmScale;
use umot::DiscreteMeasure;

/// Loads a measure by extension: `.csv` point clouds, `.pgm` grids.
pub fn load_measure(path: &Path, normalize: &str, floor: f64) -> CliResult<DiscreteMeasure> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "csv" => Ok(DiscreteMeasure::read_csv(path)?),
        "pgm" => {
            let scale = match normalize {
                "mass" => PgmScale::UnitMass,
                "max" => PgmScale::MaxValue,
                "none" => PgmScale::Factor(1.0),
                other => {
                    return Err(CliError::input(format!(
                        "unknown normalize mode '{other}' (expected mass|max|none)"
                    )))
                }
            };
            let m = DiscreteMeasure::read_pgm(path, scale)?;
            if floor > 0.0 {
                let floored: Array1<f64> = m.weights().mapv(|w| w.max(floor));
                Ok(m.with_weights(floored)?)
            } else {
                Ok(m)
            }
        }
        other => Err(CliError::input(format!(
            "unsupported measure extension '.{other}' in {}",
            path.display()
        ))),
    }
}

/// Penalties parsed for a list of nodes.
pub fn parse_penalties(specs: &[PenaltySpec]) -> CliResult<Vec<umot::MarginalPenalty>> {
    specs.iter().map(|s| s.to_penalty()).collect()
}
