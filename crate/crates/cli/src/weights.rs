//! Weight specs: `poly:c0,c1,…`, `trig:k,s,c;…`, `table:@file.csv`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use strc_core::kernel::TrigTerm;
use strc_core::{Interval, WeightFunction};

fn numbers(field: &str, list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("invalid `{field}`: `{}` is not a number", s.trim()))
        })
        .collect()
}

/// Parses `spec` into a weight on `interval`. `field` names the option in
/// error messages.
pub fn parse_weight(field: &str, spec: &str, interval: Interval) -> Result<WeightFunction> {
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("invalid `{field}`: expected poly:…, trig:… or table:@file, got `{spec}`"))?;
    let w = match kind.trim() {
        "poly" => WeightFunction::polynomial(interval, numbers(field, body)?),
        "trig" => {
            let mut terms = Vec::new();
            for term in body.split(';').filter(|t| !t.trim().is_empty()) {
                let v = numbers(field, term)?;
                let [k, s, c] = v[..] else {
                    bail!("invalid `{field}`: trig terms are `k,s,c`, got `{term}`");
                };
                if k < 0.0 || k.fract() != 0.0 {
                    bail!("invalid `{field}`: frequency must be a non-negative integer, got {k}");
                }
                terms.push(TrigTerm {
                    frequency: k as u32,
                    sin_amp: s,
                    cos_amp: c,
                });
            }
            WeightFunction::trig(interval, terms)
        }
        "table" => {
            let path = body
                .strip_prefix('@')
                .ok_or_else(|| anyhow!("invalid `{field}`: tables are given as table:@file.csv"))?;
            let (grid, values) = read_table(field, Path::new(path))?;
            WeightFunction::tabulated(interval, grid, values)
        }
        other => bail!("invalid `{field}`: unknown weight kind `{other}`"),
    };
    w.map_err(|e| anyhow!("invalid `{field}`: {e}"))
}

/// Two numeric columns `t,value`; a non-numeric first line is a header.
fn read_table(field: &str, path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("invalid `{field}`: cannot read `{}`", path.display()))?;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                grid.push(v[0]);
                values.push(v[1]);
            }
            None if k == 0 => continue,
            _ => bail!("invalid `{field}`: line {} of `{}` is not `t,value`", k + 1, path.display()),
        }
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        bail!("invalid `{field}`: table grid in `{}` must be strictly increasing", path.display());
    }
    Ok((grid, values))
}
