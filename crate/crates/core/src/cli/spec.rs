//! Text forms of functions and draw sequences.

use std::fs;

use crate::error::{Error, Result};
use crate::model::{Function, GridFunction, StepFunction};

fn numbers(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad {what} `{t}`")))).collect()
}

/// Parses a regression function:
///
/// * `const:p`
/// * `step:b:pL,pR` or `step:b1,b2:l1,l2,l3`
/// * `grid:v0,v1,...` (piecewise-linear through equispaced nodes)
/// * `smooth` (the built-in smooth example)
/// * anything else is read as a JSON file holding
///   `{"breakpoints": [...], "levels": [...]}` or `{"values": [...]}`.
pub fn parse_function(s: &str) -> Result<Function> {
    let s = s.trim();
    if s == "smooth" {
        return Ok(GridFunction::smooth_example().into());
    }
    if let Some(p) = s.strip_prefix("const:") {
        let p = p.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad level in `{s}`")))?;
        return Ok(StepFunction::constant(p)?.into());
    }
    if let Some(rest) = s.strip_prefix("step:") {
        let (b, levels) =
            rest.split_once(':').ok_or_else(|| Error::Config(format!("expected step:b:levels, got `{s}`")))?;
        return Ok(StepFunction::new(numbers(b, "breakpoint")?, numbers(levels, "level")?)?.into());
    }
    if let Some(vals) = s.strip_prefix("grid:") {
        return Ok(GridFunction::new(numbers(vals, "grid value")?)?.into());
    }
    if s.is_empty() {
        return Err(Error::Config("empty function".into()));
    }
    let text = fs::read_to_string(s).map_err(|e| Error::Config(format!("function `{s}`: {e}")))?;
    Ok(serde_json::from_str(&text)?)
}

/// Draw sequences such as `111;0101`; an empty entry is the empty prefix.
pub fn parse_prefixes(s: &str) -> Result<Vec<Vec<bool>>> {
    s.split(';')
        .map(|p| {
            p.trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::Config(format!("prefix `{p}` must contain only 0 and 1"))),
                })
                .collect()
        })
        .collect()
}
