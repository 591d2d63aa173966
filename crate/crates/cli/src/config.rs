//! Validation of flags into library configurations, before any data is read.

use std::collections::BTreeSet;
use std::fs;

use belief::{ExpansionConfig, VariableSpec};

use crate::args::ExpansionArgs;
use crate::error::{CliError, CliResult};

/// Parses one `--depth` item: `NAME=DEPTH`, `NAME=DEPTH@LO:HI` or
/// `NAME=binary:LEVEL`.
pub fn parse_variable(item: &str) -> CliResult<VariableSpec> {
    let bad = |why: &str| CliError::Usage(format!("--depth `{item}`: {why}"));
    let (name, rest) = item
        .split_once('=')
        .ok_or_else(|| bad("expected NAME=DEPTH"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(bad("empty variable name"));
    }
    if let Some(level) = rest.strip_prefix("binary:") {
        return Ok(VariableSpec::binary(name, level.trim()));
    }
    let (depth, range) = match rest.split_once('@') {
        Some((d, r)) => (d, Some(r)),
        None => (rest, None),
    };
    let depth: usize = depth
        .trim()
        .parse()
        .map_err(|_| bad("depth must be a positive integer"))?;
    match range {
        None => Ok(VariableSpec::ecdf(name, depth)),
        Some(r) => {
            let (lo, hi) = r
                .split_once(':')
                .ok_or_else(|| bad("range must be LO:HI"))?;
            let lo: f64 = lo.trim().parse().map_err(|_| bad("LO is not a number"))?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad("HI is not a number"))?;
            Ok(VariableSpec::known_range(name, lo, hi, depth))
        }
    }
}

pub fn expansion_config(args: &ExpansionArgs) -> CliResult<ExpansionConfig> {
    let cfg = match (&args.config, args.depth.is_empty()) {
        (Some(_), false) => {
            return Err(CliError::Usage(
                "--depth and --config are mutually exclusive".into(),
            ))
        }
        (None, true) => {
            return Err(CliError::Usage(
                "one of --depth or --config is required".into(),
            ))
        }
        (Some(path), true) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str::<ExpansionConfig>(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        (None, false) => ExpansionConfig {
            variables: args
                .depth
                .iter()
                .map(|s| parse_variable(s))
                .collect::<CliResult<_>>()?,
        },
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

pub fn check_response_not_predictor(cfg: &ExpansionConfig, response: &str) -> CliResult<()> {
    if cfg.variables.iter().any(|v| v.name == response) {
        return Err(CliError::Usage(format!(
            "response `{response}` is also listed as a predictor"
        )));
    }
    Ok(())
}

/// Codes a response column as `-1/+1`.
///
/// With a positive level, rows equal to it are `+1` and all others `-1`.
/// Without one, the column must already be coded `-1/+1` or `0/1`.
pub fn code_response(
    column: &str,
    values: &[String],
    positive: Option<&str>,
) -> CliResult<Vec<i8>> {
    let levels: BTreeSet<&str> = values.iter().map(String::as_str).collect();
    if levels.len() > 2 {
        return Err(CliError::Data(format!(
            "response `{column}` has {} distinct values, expected at most 2",
            levels.len()
        )));
    }
    if let Some(pos) = positive {
        if !levels.contains(pos) {
            return Err(CliError::Data(format!(
                "positive level `{pos}` does not occur in response `{column}`"
            )));
        }
        return Ok(values
            .iter()
            .map(|v| if v == pos { 1 } else { -1 })
            .collect());
    }
    let numeric: Option<BTreeSet<i64>> = levels
        .iter()
        .map(|l| {
            l.parse::<f64>()
                .ok()
                .filter(|x| x.fract() == 0.0)
                .map(|x| x as i64)
        })
        .collect();
    let coded = match numeric {
        Some(set) if set.iter().all(|v| *v == -1 || *v == 1) => true,
        Some(set) if set.iter().all(|v| *v == 0 || *v == 1) => true,
        _ => false,
    };
    if !coded {
        return Err(CliError::Data(format!(
            "response `{column}` is not coded -1/+1 or 0/1; pass --positive-level"
        )));
    }
    Ok(values
        .iter()
        .map(|v| if v.parse::<f64>() == Ok(1.0) { 1 } else { -1 })
        .collect())
}
