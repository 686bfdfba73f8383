//! Parsing of command-line values and auxiliary input files.

use std::fs;
use std::path::Path;

use stable_consensus::graph::Graph;

use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn read_graph(path: &Path) -> Result<Graph, CliError> {
    let text = read_text(path)?;
    Graph::parse_edge_list(&text).map_err(|e| CliError::Core(e).context(path))
}

/// `start:stop:step` (stop inclusive), a comma list, or a single value.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Input(format!("bad grid `{spec}` (expected start:stop:step or a comma list)"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=count)
                .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad()),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

/// Either a single α or a grid; exactly one must be given.
pub fn alphas(alpha: Option<f64>, grid: Option<&str>) -> Result<Vec<f64>, CliError> {
    match (alpha, grid) {
        (Some(a), None) => Ok(vec![a]),
        (None, Some(g)) => parse_grid(g),
        (Some(_), Some(_)) => Err(CliError::Input("give either --alpha or --alpha-grid, not both".into())),
        (None, None) => Err(CliError::Input("one of --alpha or --alpha-grid is required".into())),
    }
}

/// Whitespace or comma separated numbers, `#` comments allowed.
pub fn read_numbers(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            out.push(
                tok.parse::<f64>()
                    .map_err(|_| CliError::Input(format!("{}: line {}: bad number `{tok}`", path.display(), k + 1)))?,
            );
        }
    }
    Ok(out)
}

/// Per-node skewness from `--beta` (uniform) or `--beta-file` (one per node).
pub fn betas(beta: Option<f64>, beta_file: Option<&Path>, n: usize) -> Result<Vec<f64>, CliError> {
    match (beta, beta_file) {
        (Some(_), Some(_)) => Err(CliError::Input("give either --beta or --beta-file, not both".into())),
        (Some(b), None) => Ok(vec![b; n]),
        (None, Some(path)) => {
            let v = read_numbers(path)?;
            if v.len() != n {
                return Err(CliError::Input(format!(
                    "{} lists {} skewness values, graph has {n} nodes",
                    path.display(),
                    v.len()
                )));
            }
            Ok(v)
        }
        (None, None) => Ok(vec![0.0; n]),
    }
}

/// `i-j` or `i j` (1-based) into a 0-based pair.
pub fn parse_pair(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Input(format!("bad node pair `{s}` (expected i-j, 1-based)"));
    let fields: Vec<&str> = s
        .split(|c: char| c == '-' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect();
    if fields.len() != 2 {
        return Err(bad());
    }
    let id = |t: &str| match t.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(bad()),
    };
    Ok((id(fields[0])?, id(fields[1])?))
}

/// `all` or a file with one pair per line.
pub fn candidates(spec: &str) -> Result<Option<Vec<(usize, usize)>>, CliError> {
    if spec == "all" {
        return Ok(None);
    }
    let path = Path::new(spec);
    let text = read_text(path)?;
    let pairs = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(parse_pair)
        .collect::<Result<Vec<_>, _>>()?;
    if pairs.is_empty() {
        return Err(CliError::Input(format!("{} lists no candidates", path.display())));
    }
    Ok(Some(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.2:2:0.1").unwrap().len(), 19);
        assert_eq!(parse_grid("0.2:2:0.1").unwrap()[1], 0.3);
        assert_eq!(parse_grid("0.5,1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert_eq!(parse_grid("1.5").unwrap(), vec![1.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn pairs() {
        assert_eq!(parse_pair("2-4").unwrap(), (1, 3));
        assert_eq!(parse_pair("10 3").unwrap(), (9, 2));
        assert!(parse_pair("0-1").is_err());
        assert!(parse_pair("1-2-3").is_err());
    }
}
