use std::fs;
use std::path::Path;

use quench_core::experiments::SweepGrid;
use quench_core::{build_params, SystemParams};
use serde_json::{Map, Value};

use crate::args::Common;
use crate::error::{CliError, CliResult};

fn read_json(path: &Path, what: &str) -> CliResult<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{what} {} is not valid JSON: {e}", path.display())))
}

/// Resolves parameters with precedence flags > config file > defaults.
pub fn resolve_params(common: &Common) -> CliResult<SystemParams> {
    let mut raw = match read_json(&common.config, "config file")? {
        Value::Object(map) => map,
        _ => {
            return Err(CliError::Config(format!(
                "{} must hold a JSON object",
                common.config.display()
            )))
        }
    };
    apply_overrides(&mut raw, common);
    Ok(build_params(&raw)?)
}

fn apply_overrides(raw: &mut Map<String, Value>, common: &Common) {
    let numbers = [
        ("omega0_ghz", common.omega0_ghz),
        ("omegac_ghz", common.omegac_ghz),
        ("hop_ghz", common.hop_ghz),
        ("g0_ghz", common.g0_ghz),
    ];
    for (key, value) in numbers {
        if let Some(v) = value {
            raw.insert(key.to_string(), Value::from(v));
        }
    }
    if let Some(n) = common.n_sites {
        raw.insert("n_sites".to_string(), Value::from(n));
    }
    if let Some(b) = &common.boundary {
        raw.insert("boundary".to_string(), Value::from(b.as_str()));
    }
    if let Some(f) = &common.frame {
        raw.insert("frame".to_string(), Value::from(f.as_str()));
    }
}

/// Reads a sweep grid and rejects values no grid point could use.
pub fn read_grid(path: &Path) -> CliResult<SweepGrid> {
    let grid: SweepGrid = serde_json::from_value(read_json(path, "grid file")?)
        .map_err(|e| CliError::Config(format!("grid file {}: {e}", path.display())))?;
    if grid.tau_ns.is_empty() || grid.delta_ns.is_empty() || grid.omega0_ghz.is_empty() {
        return Err(CliError::Config(format!(
            "grid file {}: tau_ns, delta_ns and omega0_ghz each need at least one value",
            path.display()
        )));
    }
    let check = |key: &str, values: &[f64], positive: bool| -> CliResult<()> {
        for &v in values {
            let ok = v.is_finite() && if positive { v > 0.0 } else { v >= 0.0 };
            if !ok {
                let bound = if positive { "positive" } else { "non-negative" };
                return Err(CliError::Config(format!(
                    "grid file {}: {key} value {v} must be {bound}",
                    path.display()
                )));
            }
        }
        Ok(())
    };
    check("tau_ns", &grid.tau_ns, true)?;
    check("delta_ns", &grid.delta_ns, false)?;
    check("omega0_ghz", &grid.omega0_ghz, false)?;
    Ok(grid)
}
