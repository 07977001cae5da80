//! TOML spec files.
//!
//! ```toml
//! dimension = 2
//!
//! [directing]
//! family = "sigma_stable"      # sigma_stable_normalized, gamma_process, finite_exponential
//! sigma = 0.5
//!
//! [base]
//! total_mass = 1.0
//! window_end = 1.0             # optional, defaults to 1
//!
//! [[score]]                    # one block per coordinate, or one block shared by all
//! family = "gamma"             # beta { alpha, beta }, exponential {}
//! shape = 0.3
//! rate = 1.0
//! ```

use serde::Deserialize;
use toml::Spanned;

use crate::directing::{DirectingFamily, DirectingMeasure};
use crate::error::{Error, Result};
use crate::model::{BaseMeasure, CormSpec};
use crate::score::{ScoreFamily, ScoreModel};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dimension: Spanned<usize>,
    directing: Spanned<DirectingFamily>,
    base: Spanned<RawBase>,
    score: Spanned<toml::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBase {
    total_mass: f64,
    #[serde(default = "one")]
    window_end: f64,
}

fn one() -> f64 {
    1.0
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

fn at<T>(text: &str, item: &Spanned<T>, err: impl std::fmt::Display) -> Error {
    Error::SpecFile(format!("line {}: {err}", line_of(text, item.span().start)))
}

fn score_family(value: toml::Value) -> std::result::Result<ScoreFamily, String> {
    ScoreFamily::deserialize(value).map_err(|e| e.message().to_owned())
}

/// Parses a spec file; errors carry the offending line.
pub fn parse_spec(text: &str) -> Result<CormSpec> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| match e.span() {
        Some(span) => Error::SpecFile(format!(
            "line {}: {}",
            line_of(text, span.start),
            e.message()
        )),
        None => Error::SpecFile(e.message().to_owned()),
    })?;
    let d = *raw.dimension.get_ref();
    if d == 0 {
        return Err(at(text, &raw.dimension, "dimension must be at least 1"));
    }
    let blocks = match raw.score.get_ref().clone() {
        toml::Value::Array(items) => items,
        table @ toml::Value::Table(_) => vec![table],
        _ => {
            return Err(at(
                text,
                &raw.score,
                "score must be a table or an array of tables",
            ))
        }
    };
    let mut families = blocks
        .into_iter()
        .map(score_family)
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| at(text, &raw.score, e))?;
    match families.len() {
        1 => families = vec![families[0]; d],
        n if n == d => {}
        n => {
            return Err(at(
                text,
                &raw.score,
                format!("{n} score blocks for dimension {d}; give one block or {d}"),
            ))
        }
    }
    let score = ScoreModel::from_families(&families).map_err(|e| at(text, &raw.score, e))?;
    let directing =
        DirectingMeasure::new(*raw.directing.get_ref()).map_err(|e| at(text, &raw.directing, e))?;
    let b = raw.base.get_ref();
    let base = BaseMeasure::new(b.total_mass, b.window_end).map_err(|e| at(text, &raw.base, e))?;
    CormSpec::new(d, score, directing, base)
}

/// Reads and parses a spec file from disk.
pub fn load_spec(path: &std::path::Path) -> Result<CormSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::SpecFile(format!("{}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| match e {
        Error::SpecFile(msg) => Error::SpecFile(format!("{}: {msg}", path.display())),
        other => other,
    })
}
