//! Reading and writing weighted data sets and iterate traces.
//!
//! JSON data sets look like
//!
//! ```json
//! {"manifold": {"kind": "sphere", "dim": 2},
//!  "points": [[1, 0, 0], [0, 1, 0]],
//!  "weights": [0.5, 0.5]}
//! ```
//!
//! `weights` may be omitted for equal weights. CSV data sets have a header
//! row, one point per row and a `weight` column; the remaining columns are
//! ambient coordinates in order. The manifold is given by a leading comment
//! `# manifold: sphere 2` or by the caller.

use geodescent::descent::IterateTrace;
use geodescent::frechet::WeightedPoints;
use geodescent::{Manifold, Point};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Weight sums this close to one are rescaled (with a warning) instead of
/// rejected.
pub const WEIGHT_NORMALIZE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: field `{field}`: {message}", path.display())]
    Parse { path: PathBuf, line: usize, field: String, message: String },
    #[error("{}", invariant_message(.index, .message))]
    InvariantViolation { index: Option<usize>, message: String },
}

fn invariant_message(index: &Option<usize>, message: &str) -> String {
    match index {
        Some(i) => format!("point {i}: {message}"),
        None => message.to_string(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDataset {
    manifold: Manifold,
    points: Vec<Vec<f64>>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

/// Loads a JSON or CSV data set (chosen by extension, JSON otherwise).
///
/// `manifold` is required for CSV files without a `# manifold:` comment and
/// must agree with the file when both are given.
pub fn load_dataset(path: &Path, manifold: Option<Manifold>) -> Result<WeightedPoints, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.into(), source })?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (m, rows, weights) = if is_csv { parse_csv(path, &text, manifold)? } else { parse_json(path, &text, manifold)? };
    build(m, rows, weights)
}

/// Manifold, point rows and optional weights as read from a file.
type Parsed = (Manifold, Vec<Vec<f64>>, Option<Vec<f64>>);

fn parse_json(
    path: &Path,
    text: &str,
    hint: Option<Manifold>,
) -> Result<Parsed, DatasetError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: JsonDataset = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        DatasetError::Parse { path: path.into(), line: inner.line(), field, message: inner.to_string() }
    })?;
    if let Some(h) = hint {
        if h != raw.manifold {
            return Err(DatasetError::InvariantViolation {
                index: None,
                message: format!("data set is on {}, configuration expects {h}", raw.manifold),
            });
        }
    }
    Ok((raw.manifold, raw.points, raw.weights))
}

fn parse_manifold_comment(line: &str) -> Option<Result<Manifold, String>> {
    let rest = line.trim_start_matches('#').trim();
    let spec = rest.strip_prefix("manifold:")?.trim();
    let mut parts = spec.split_whitespace();
    let (kind, dim) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    Some(match dim.parse::<usize>() {
        Ok(d) => match kind.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Manifold::Euclidean { dim: d }),
            "sphere" => Ok(Manifold::Sphere { dim: d }),
            "hyperbolic" => Ok(Manifold::Hyperbolic { dim: d }),
            "spd" => Ok(Manifold::Spd { n: d }),
            other => Err(format!("unknown manifold kind `{other}`")),
        },
        Err(_) => Err(format!("bad dimension `{dim}`")),
    })
}

fn parse_csv(
    path: &Path,
    text: &str,
    hint: Option<Manifold>,
) -> Result<Parsed, DatasetError> {
    let parse_err = |line: usize, field: &str, message: String| DatasetError::Parse {
        path: path.into(),
        line,
        field: field.into(),
        message,
    };
    let mut declared = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if !t.starts_with('#') {
            break;
        }
        if let Some(m) = parse_manifold_comment(t) {
            declared = Some(m.map_err(|msg| parse_err(i + 1, "manifold", msg))?);
        }
    }
    let m = match (declared, hint) {
        (Some(d), Some(h)) if d != h => {
            return Err(DatasetError::InvariantViolation {
                index: None,
                message: format!("data set is on {d}, configuration expects {h}"),
            })
        }
        (Some(d), _) => d,
        (None, Some(h)) => h,
        (None, None) => return Err(parse_err(1, "manifold", "no `# manifold: <kind> <dim>` line and none configured".into())),
    };

    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse_err(csv_line(&e), "header", e.to_string()))?.clone();
    let weight_col = headers.iter().position(|h| h.eq_ignore_ascii_case("weight") || h.eq_ignore_ascii_case("w"));
    let weight_col = weight_col.ok_or_else(|| parse_err(1, "weight", "no `weight` column".into()))?;

    let mut rows = Vec::new();
    let mut weights = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(csv_line(&e), "row", e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut coords = Vec::with_capacity(record.len().saturating_sub(1));
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| parse_err(line, &headers[j], format!("`{cell}` is not a number")))?;
            if j == weight_col {
                weights.push(v);
            } else {
                coords.push(v);
            }
        }
        rows.push(coords);
    }
    Ok((m, rows, Some(weights)))
}

fn csv_line(e: &csv::Error) -> usize {
    e.position().map_or(0, |p| p.line() as usize)
}

fn build(m: Manifold, rows: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<WeightedPoints, DatasetError> {
    let violation = |index, message| DatasetError::InvariantViolation { index, message };
    let mut points = Vec::with_capacity(rows.len());
    for (i, coords) in rows.into_iter().enumerate() {
        points.push(m.point(coords).map_err(|e| violation(Some(i), e.to_string()))?);
    }
    let n = points.len();
    let weights = match weights {
        Some(w) => normalize_weights(w)?,
        None if n > 0 => vec![1.0 / n as f64; n],
        None => Vec::new(),
    };
    WeightedPoints::new(points, weights).map_err(|e| violation(None, e.to_string()))
}

/// Checks that weights are positive and sum to one, rescaling sums within
/// [`WEIGHT_NORMALIZE_TOL`] of one.
pub fn normalize_weights(mut w: Vec<f64>) -> Result<Vec<f64>, DatasetError> {
    if let Some(i) = w.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(DatasetError::InvariantViolation { index: Some(i), message: format!("weight {} is not positive", w[i]) });
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_NORMALIZE_TOL {
        return Err(DatasetError::InvariantViolation { index: None, message: format!("weights sum to {sum}, not 1") });
    }
    if sum != 1.0 {
        log::warn!("weights sum to {sum}; rescaling to 1");
        w.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(w)
}

/// Writes a data set in the JSON format read by [`load_dataset`].
pub fn save_dataset(data: &WeightedPoints, path: &Path) -> Result<(), DatasetError> {
    let raw = JsonDataset {
        manifold: data.manifold(),
        points: data.points().iter().map(|p| p.coords().to_vec()).collect(),
        weights: Some(data.weights().to_vec()),
    };
    write_json(path, &raw)
}

/// Writes a trace as CSV (`.csv`) or JSON (anything else).
pub fn emit_trace(trace: &IterateTrace, path: &Path) -> Result<(), DatasetError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let io_err = |source| DatasetError::Io { path: path.into(), source };
        let file = fs::File::create(path).map_err(io_err)?;
        let mut out = BufWriter::new(file);
        trace.write_csv(&mut out).map_err(io_err)?;
        out.flush().map_err(io_err)
    } else {
        write_json(path, trace)
    }
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io { path: path.into(), source };
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(io::Error::other(e)))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err)
}

/// Convenience for callers holding raw coordinates.
pub fn points_from_rows(m: Manifold, rows: &[Vec<f64>]) -> Result<Vec<Point>, DatasetError> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| m.point(r.clone()).map_err(|e| DatasetError::InvariantViolation { index: Some(i), message: e.to_string() }))
        .collect()
}
