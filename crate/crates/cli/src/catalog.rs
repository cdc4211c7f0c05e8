//! Parsing of `--space` and `--field` specifications.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use kslab_core::io::{read_field_csv, read_space};
use kslab_core::{circle_grid, interval_grid, random_cloud, torus2d_grid, IndexSet, PointCloudSpace, Sampler, ScalarField};

use crate::error::CliError;

fn looks_like_path(spec: &str) -> bool {
    spec.contains('/') || spec.contains('\\') || spec.ends_with(".csv") || spec.ends_with(".json")
}

fn num<T: std::str::FromStr>(spec: &str, part: Option<&str>, what: &str) -> Result<T, CliError> {
    let part = part.ok_or_else(|| CliError::Config(format!("`{spec}`: missing {what}")))?;
    part.parse().map_err(|_| CliError::Config(format!("`{spec}`: cannot parse {what} `{part}`")))
}

/// `circle:N`, `interval:N`, `torus2d:N`, `random:N:SEED:SAMPLER`, or a file path.
pub fn parse_space(spec: &str, sidecar: Option<&Path>) -> Result<PointCloudSpace, CliError> {
    if looks_like_path(spec) {
        let path = PathBuf::from(spec);
        if !path.exists() {
            return Err(CliError::Config(format!("space file `{spec}` does not exist")));
        }
        return Ok(read_space(&path, sidecar)?);
    }
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or_default();
    let space = match kind {
        "circle" => circle_grid(num(spec, parts.next(), "point count")?)?,
        "interval" => interval_grid(num(spec, parts.next(), "point count")?)?,
        "torus2d" => torus2d_grid(num(spec, parts.next(), "grid side")?)?,
        "random" => {
            let n = num(spec, parts.next(), "point count")?;
            let seed = num(spec, parts.next(), "seed")?;
            let sampler: Sampler = parts.next().unwrap_or("square").parse()?;
            random_cloud(n, seed, sampler)?
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown space `{other}` (circle:N | interval:N | torus2d:N | random:N:SEED:SAMPLER | path)"
            )))
        }
    };
    if parts.next().is_some() {
        return Err(CliError::Config(format!("`{spec}`: too many components")));
    }
    Ok(space)
}

fn smooth_step(t: f64, a: f64, b: f64, w: f64) -> f64 {
    let up = ((t - a) / w).clamp(-0.5, 0.5);
    let dn = ((t - b) / w).clamp(-0.5, 0.5);
    0.5 * ((PI * up).sin() - (PI * dn).sin())
}

/// Coordinate arc `[a, b)` along the first coordinate.
pub fn arc(space: &PointCloudSpace, a: f64, b: f64) -> Result<IndexSet, CliError> {
    if !space.has_coordinates() {
        return Err(CliError::Config("arcs need a coordinate space".into()));
    }
    Ok(IndexSet::from_predicate(space.len(), |i| (a..b).contains(&space.coords(i)[0])))
}

/// `constant[:c]`, `ramp`, `sine`, `indicator:a:b`, `smooth-indicator[:a:b[:w]]`,
/// `random:SEED`, `smooth-random:SEED`, or a CSV path.
pub fn parse_field(space: &PointCloudSpace, spec: &str) -> Result<ScalarField, CliError> {
    if looks_like_path(spec) {
        let path = PathBuf::from(spec);
        if !path.exists() {
            return Err(CliError::Config(format!("field file `{spec}` does not exist")));
        }
        return Ok(read_field_csv(space, &path)?);
    }
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or_default();
    if kind != "constant" && kind != "random" && kind != "indicator" && !space.has_coordinates() {
        return Err(CliError::Config(format!(
            "field `{kind}` is evaluated on coordinates; explicit-table spaces accept CSV fields only"
        )));
    }
    let field = match kind {
        "constant" => ScalarField::constant(space, parts.next().map(|c| num(spec, Some(c), "value")).transpose()?.unwrap_or(1.0)),
        "ramp" => ScalarField::from_fn(space, |x| x[0])?,
        "sine" => ScalarField::from_fn(space, |x| (2.0 * PI * x[0]).sin())?,
        "indicator" => {
            let (a, b) = (num(spec, parts.next(), "arc start")?, num(spec, parts.next(), "arc end")?);
            ScalarField::indicator(space, &arc(space, a, b)?)
        }
        "smooth-indicator" => {
            let a = parts.next().map(|v| num(spec, Some(v), "arc start")).transpose()?.unwrap_or(0.25);
            let b = parts.next().map(|v| num(spec, Some(v), "arc end")).transpose()?.unwrap_or(0.75);
            let w = parts.next().map(|v| num(spec, Some(v), "width")).transpose()?.unwrap_or(0.05);
            ScalarField::from_fn(space, |x| smooth_step(x[0], a, b, w))?
        }
        "random" => ScalarField::random_uniform(space, num(spec, parts.next(), "seed")?),
        "smooth-random" => ScalarField::random_smooth(space, num(spec, parts.next(), "seed")?, 3)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown field `{other}` (constant | ramp | sine | indicator:a:b | smooth-indicator | random:SEED | smooth-random:SEED | path)"
            )))
        }
    };
    if parts.next().is_some() {
        return Err(CliError::Config(format!("`{spec}`: too many components")));
    }
    Ok(field)
}
