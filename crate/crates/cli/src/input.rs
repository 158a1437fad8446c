use anyhow::{anyhow, bail, Context, Result};
use ergodic_core::io::{self, LoadedSystem, SystemDescription};
use ergodic_core::rational::parse_rational;
use ergodic_core::verify::IntervalLambda;
use ergodic_core::{Observable, Rational};

/// Reads a system from a path, `-` for stdin, or inline JSON text.
pub fn read_system(source: &str) -> Result<(SystemDescription, LoadedSystem)> {
    let text = if source.trim_start().starts_with('{') {
        source.to_string()
    } else if source == "-" {
        std::io::read_to_string(std::io::stdin()).context("reading system from stdin")?
    } else {
        std::fs::read_to_string(source).with_context(|| format!("reading {source}"))?
    };
    let description =
        io::parse_description(&text).with_context(|| format!("malformed system file {}", label(source)))?;
    let loaded = description.build().with_context(|| format!("invalid system {}", label(source)))?;
    Ok((description, loaded))
}

fn label(source: &str) -> String {
    if source.trim_start().starts_with('{') {
        "<inline>".to_string()
    } else {
        source.to_string()
    }
}

pub fn rational(text: &str) -> Result<Rational> {
    parse_rational(text).map_err(|e| anyhow!("{e}"))
}

pub fn rationals(text: &str) -> Result<Vec<Rational>> {
    text.split(',').map(|t| rational(t.trim())).collect()
}

pub fn point_index(text: &str, n: usize) -> Result<usize> {
    let x: usize = text
        .trim()
        .parse()
        .map_err(|_| anyhow!("`{text}` is not a point index"))?;
    if x >= n {
        bail!("point {x} is outside 0..{n}");
    }
    Ok(x)
}

/// A position on the unit interval: `p/q` is exact, anything else a float.
pub enum Position {
    Exact(Rational),
    Float(f64),
}

pub fn position(text: &str) -> Result<Position> {
    if text.contains('/') {
        Ok(Position::Exact(rational(text)?))
    } else {
        text.trim()
            .parse::<f64>()
            .map(Position::Float)
            .map_err(|_| anyhow!("`{text}` is not a position in [0, 1)"))
    }
}

/// λ on a finite system: a constant, or one value per point.
pub fn finite_lambda(text: Option<&str>, n: usize) -> Result<Observable> {
    let text = text.ok_or_else(|| anyhow!("--lambda is required"))?;
    let values = rationals(text)?;
    match values.len() {
        1 => Ok(Observable::constant(values[0].clone(), n)),
        len if len == n => Ok(Observable::new(values)),
        len => bail!("--lambda has {len} values but the system has {n} points"),
    }
}

pub fn interval_lambda(text: Option<&str>) -> Result<IntervalLambda> {
    let text = text.ok_or_else(|| anyhow!("--lambda is required"))?.trim();
    if text == "non-integrable" {
        return Ok(IntervalLambda::NonIntegrable);
    }
    let value = if text.contains('/') {
        ergodic_core::rational::to_f64(&rational(text)?)
    } else {
        text.parse::<f64>()
            .map_err(|_| anyhow!("interval λ must be a constant or `non-integrable`, got `{text}`"))?
    };
    Ok(IntervalLambda::Constant(value))
}

/// `3`, `1,2,4` or `1..16` (inclusive).
pub fn index_list(text: &str) -> Result<Vec<u64>> {
    let parse = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|_| anyhow!("`{t}` is not a positive integer"))
    };
    let list = match text.split_once("..") {
        Some((lo, hi)) => (parse(lo)?..=parse(hi)?).collect(),
        None => text.split(',').map(parse).collect::<Result<Vec<_>>>()?,
    };
    if list.is_empty() || list.contains(&0) {
        bail!("indices must be a nonempty list of positive integers, got `{text}`");
    }
    Ok(list)
}
