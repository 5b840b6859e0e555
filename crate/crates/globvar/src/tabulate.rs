//! CSV tabulation of a Lagrange function over a product grid.

use std::str::FromStr;

use globvar_core::atlas::box_contains;
use globvar_core::expr::EvalError;
use globvar_core::jet::JetPoint;

use crate::config::{ConfigError, LoadedChart};

/// Canonical column order; the last axis varies fastest.
pub const COLUMNS: [&str; 7] = ["t", "x", "y", "xd", "yd", "xdd", "ydd"];

/// Upper bound on the number of rows.
pub const MAX_ROWS: usize = 1_000_000;

/// One axis: a variable and its values. `var=v` is a single value and
/// `var=lo:hi:n` is `n` evenly spaced values including both ends.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub var: String,
    pub values: Vec<f64>,
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Axis, String> {
        let (var, range) = s.split_once('=').ok_or_else(|| format!("`{s}`: expected var=value or var=lo:hi:n"))?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{s}`: bad number `{t}`"));
        let parts: Vec<&str> = range.split(':').collect();
        let values = match parts.as_slice() {
            [v] => vec![num(v)?],
            [lo, hi, n] => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                let n: usize = n.trim().parse().map_err(|_| format!("`{s}`: bad count `{n}`"))?;
                match n {
                    0 => return Err(format!("`{s}`: count must be positive")),
                    1 => vec![lo],
                    _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
                }
            }
            _ => return Err(format!("`{s}`: expected var=value or var=lo:hi:n")),
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(format!("`{s}`: values must be finite"));
        }
        Ok(Axis { var: var.trim().to_string(), values })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl FromStr for Grid {
    type Err = String;

    /// Comma-separated axes.
    fn from_str(s: &str) -> Result<Grid, String> {
        let axes = s.split(',').filter(|a| !a.trim().is_empty()).map(str::parse).collect::<Result<_, _>>()?;
        Ok(Grid { axes })
    }
}

impl Grid {
    pub fn extend(&mut self, other: Grid) {
        self.axes.extend(other.axes);
    }

    /// Values per canonical column. Axes may use the chart's coordinate
    /// names; positions not on an axis sit at the centre of the chart box and
    /// everything else at 0.
    fn columns(&self, chart: &LoadedChart) -> Result<Vec<Vec<f64>>, ConfigError> {
        let mut cols: Vec<Option<Vec<f64>>> = vec![None; COLUMNS.len()];
        for axis in &self.axes {
            let canon = chart.scope.renames.get(&axis.var).map(String::as_str).unwrap_or(&axis.var);
            let k = COLUMNS
                .iter()
                .position(|c| *c == canon)
                .ok_or_else(|| ConfigError::Invalid(format!("grid: unknown variable `{}`", axis.var)))?;
            if cols[k].is_some() {
                return Err(ConfigError::Invalid(format!("grid: `{}` given twice", axis.var)));
            }
            cols[k] = Some(axis.values.clone());
        }
        let centre = chart.domain.map(|i| i.clipped(globvar_core::sample::DEFAULT_RADIUS).center());
        Ok(cols
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                c.unwrap_or_else(|| match k {
                    1 | 2 => vec![centre[k - 1]],
                    _ => vec![0.0],
                })
            })
            .collect())
    }
}

/// CSV with columns chart, t, x, y, xd, yd, xdd, ydd, L. Points outside
/// the chart, or where `lagrangian` cannot be evaluated, get an empty L.
pub fn tabulate(
    grid: &Grid,
    chart: &LoadedChart,
    lagrangian: impl Fn(&JetPoint) -> Result<f64, EvalError>,
) -> Result<String, ConfigError> {
    let cols = grid.columns(chart)?;
    let rows = cols.iter().map(Vec::len).try_fold(1usize, |a, n| a.checked_mul(n)).unwrap_or(usize::MAX);
    if rows > MAX_ROWS {
        return Err(ConfigError::Invalid(format!("grid has {rows} points, more than {MAX_ROWS}")));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| ConfigError::Invalid(format!("csv: {e}"));
    w.write_record(["chart", "t", "x", "y", "xd", "yd", "xdd", "ydd", "L"]).map_err(io)?;
    let mut index = [0usize; 7];
    for _ in 0..rows {
        let v: Vec<f64> = (0..7).map(|k| cols[k][index[k]]).collect();
        let p = JetPoint::second(v[0], v[1], v[2], v[3], v[4], v[5], v[6]);
        let l = if box_contains(&chart.domain, p.position()) {
            lagrangian(&p).ok().filter(|l| l.is_finite())
        } else {
            None
        };
        let mut record = vec![chart.name.clone()];
        record.extend(v.iter().map(|x| x.to_string()));
        record.push(l.map(|l| l.to_string()).unwrap_or_default());
        w.write_record(&record).map_err(io)?;
        for k in (0..7).rev() {
            index[k] += 1;
            if index[k] < cols[k].len() {
                break;
            }
            index[k] = 0;
        }
    }
    let bytes = w.into_inner().map_err(|e| ConfigError::Invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_parse() {
        let a: Axis = "xd=-1:1:5".parse().unwrap();
        assert_eq!(a.values, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let g: Grid = "x=0.5, y=0:1:2".parse().unwrap();
        assert_eq!(g.axes.len(), 2);
        assert_eq!(g.axes[1].values, vec![0.0, 1.0]);
        for bad in ["x", "x=a", "x=0:1", "x=0:1:0", "x=0:inf:3"] {
            assert!(bad.parse::<Axis>().is_err(), "{bad}");
        }
    }
}
