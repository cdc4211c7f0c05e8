//! File formats.
//!
//! | data | format |
//! |------|--------|
//! | coordinate space | CSV `id,c0[,c1,...],weight` plus optional torus sidecar JSON |
//! | table space | JSON `{ "metric": "table", "d": [[...]], "w": [...] }` |
//! | field | CSV `id,value` |
//! | index set | CSV with an `id` column |
//! | boundary data | CSV `id,value` |
//! | cells | one index-set CSV per cell, or JSON list of lists |
//! | net | JSON `{ "eps": e, "centers": [...] }` |
//! | partition | CSV `center_id,point_id,value` |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::covers::{EpsNet, PartitionOfUnity};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::space::{IndexSet, MetricKind, PointCloudSpace};

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line: line as usize, msg: msg.into() }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    parse_err(path, line, e.to_string())
}

/// Rows of a headered numeric CSV: `(line, values)`.
fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<(u64, Vec<f64>)>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = reader.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let values = record
            .iter()
            .enumerate()
            .map(|(k, cell)| {
                cell.parse::<f64>()
                    .map_err(|_| parse_err(path, line, format!("column `{}`: cannot parse `{cell}` as a number", header[k])))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, values));
    }
    Ok((header, rows))
}

fn parse_id(path: &Path, line: u64, v: f64, n: Option<usize>) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 {
        return Err(parse_err(path, line, format!("id `{v}` is not a nonnegative integer")));
    }
    let id = v as usize;
    if let Some(n) = n {
        if id >= n {
            return Err(parse_err(path, line, format!("id {id} out of range for a space of {n} points")));
        }
    }
    Ok(id)
}

/// Places rows keyed by `id` into slots `0..N`, requiring each id exactly once.
fn by_id<T: Clone>(path: &Path, keyed: Vec<(u64, usize, T)>) -> Result<Vec<T>> {
    let n = keyed.len();
    let mut slots: Vec<Option<T>> = vec![None; n];
    for (line, id, v) in keyed {
        if id >= n {
            return Err(parse_err(path, line, format!("id {id} out of range for {n} rows")));
        }
        if slots[id].is_some() {
            return Err(parse_err(path, line, format!("duplicate id {id}")));
        }
        slots[id] = Some(v);
    }
    Ok(slots.into_iter().map(|s| s.expect("ids form a permutation")).collect())
}

#[derive(Deserialize)]
struct Sidecar {
    metric: String,
    #[serde(default)]
    period: Vec<f64>,
}

pub fn read_sidecar(path: &Path) -> Result<MetricKind> {
    let sidecar: Sidecar = serde_json::from_reader(File::open(path)?)?;
    match sidecar.metric.as_str() {
        "torus" => Ok(MetricKind::Torus { period: sidecar.period }),
        "euclidean" => Ok(MetricKind::Euclidean),
        other => Err(parse_err(path, 1, format!("unknown metric `{other}` (torus | euclidean)"))),
    }
}

pub fn read_space_csv(path: &Path, sidecar: Option<&Path>) -> Result<PointCloudSpace> {
    let (header, rows) = read_numeric_csv(path)?;
    let dim = header.len().saturating_sub(2);
    let expected: Vec<String> =
        std::iter::once("id".to_string()).chain((0..dim).map(|k| format!("c{k}"))).chain(std::iter::once("weight".into())).collect();
    if dim == 0 || header != expected {
        return Err(parse_err(path, 1, format!("expected header `id,c0[,c1,...],weight`, found `{}`", header.join(","))));
    }
    let keyed = rows
        .into_iter()
        .map(|(line, v)| Ok((line, parse_id(path, line, v[0], None)?, v[1..].to_vec())))
        .collect::<Result<Vec<_>>>()?;
    let rows = by_id(path, keyed)?;
    let coords = rows.iter().flat_map(|r| r[..dim].iter().copied()).collect();
    let weights = rows.iter().map(|r| r[dim]).collect();
    let metric = sidecar.map(read_sidecar).transpose()?.unwrap_or(MetricKind::Euclidean);
    PointCloudSpace::from_coordinates(dim, coords, weights, metric)
}

#[derive(Deserialize)]
struct TableFile {
    metric: String,
    d: Vec<Vec<f64>>,
    w: Vec<f64>,
}

pub fn read_table_json(path: &Path) -> Result<PointCloudSpace> {
    let table: TableFile = serde_json::from_reader(File::open(path)?)?;
    if table.metric != "table" {
        return Err(parse_err(path, 1, format!("expected `\"metric\": \"table\"`, found `{}`", table.metric)));
    }
    PointCloudSpace::from_table(table.d, table.w)
}

/// `.json` files are tables, anything else a coordinate CSV.
pub fn read_space(path: &Path, sidecar: Option<&Path>) -> Result<PointCloudSpace> {
    if path.extension().is_some_and(|e| e == "json") {
        read_table_json(path)
    } else {
        read_space_csv(path, sidecar)
    }
}

pub fn write_space_csv(space: &PointCloudSpace, path: &Path) -> Result<()> {
    if !space.has_coordinates() {
        return Err(Error::NoCoordinates);
    }
    let mut out = BufWriter::new(File::create(path)?);
    let cols: Vec<String> = (0..space.dim()).map(|k| format!("c{k}")).collect();
    writeln!(out, "id,{},weight", cols.join(","))?;
    for i in 0..space.len() {
        let c: Vec<String> = space.coords(i).iter().map(f64::to_string).collect();
        writeln!(out, "{i},{},{}", c.join(","), space.weight(i))?;
    }
    out.flush()?;
    Ok(())
}

fn id_value_rows(path: &Path, n: usize) -> Result<Vec<(u64, usize, f64)>> {
    let (header, rows) = read_numeric_csv(path)?;
    if header != ["id", "value"] {
        return Err(parse_err(path, 1, format!("expected header `id,value`, found `{}`", header.join(","))));
    }
    rows.into_iter().map(|(line, v)| Ok((line, parse_id(path, line, v[0], Some(n))?, v[1]))).collect()
}

pub fn read_field_csv(space: &PointCloudSpace, path: &Path) -> Result<ScalarField> {
    let rows = id_value_rows(path, space.len())?;
    if rows.len() != space.len() {
        return Err(parse_err(path, 1, format!("{} rows for a space of {} points", rows.len(), space.len())));
    }
    ScalarField::new(space, by_id(path, rows)?)
}

pub fn field_csv(field: &ScalarField) -> String {
    let mut out = String::from("id,value\n");
    for (i, v) in field.values().iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

pub fn write_field_csv(field: &ScalarField, path: &Path) -> Result<()> {
    std::fs::write(path, field_csv(field))?;
    Ok(())
}

/// Boundary data: point ids with prescribed values.
pub fn read_boundary_csv(space: &PointCloudSpace, path: &Path) -> Result<(IndexSet, Vec<f64>)> {
    let mut rows = id_value_rows(path, space.len())?;
    rows.sort_by_key(|r| r.1);
    if let Some(w) = rows.windows(2).find(|w| w[0].1 == w[1].1) {
        return Err(parse_err(path, w[1].0, format!("duplicate id {}", w[1].1)));
    }
    let ids = rows.iter().map(|r| r.1).collect();
    Ok((IndexSet::new(ids, space.len())?, rows.into_iter().map(|r| r.2).collect()))
}

/// Point ids from the `id` column (other columns are ignored).
pub fn read_index_set_csv(space: &PointCloudSpace, path: &Path) -> Result<IndexSet> {
    let (header, rows) = read_numeric_csv(path)?;
    let col = header
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| parse_err(path, 1, format!("no `id` column in header `{}`", header.join(","))))?;
    let ids = rows.into_iter().map(|(line, v)| parse_id(path, line, v[col], Some(space.len()))).collect::<Result<Vec<_>>>()?;
    IndexSet::new(ids, space.len())
}

/// Cells from a single JSON list-of-lists or one CSV per cell.
pub fn read_cells(space: &PointCloudSpace, paths: &[impl AsRef<Path>]) -> Result<Vec<IndexSet>> {
    match paths {
        [one] if one.as_ref().extension().is_some_and(|e| e == "json") => {
            let lists: Vec<Vec<usize>> = serde_json::from_reader(File::open(one.as_ref())?)?;
            lists.into_iter().map(|l| IndexSet::new(l, space.len())).collect()
        }
        _ => paths.iter().map(|p| read_index_set_csv(space, p.as_ref())).collect(),
    }
}

pub fn write_net_json(net: &EpsNet, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&net.to_json())?)?;
    Ok(())
}

pub fn write_partition_csv(pou: &PartitionOfUnity, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "center_id,point_id,value")?;
    for (c, j, v) in pou.sparse_rows() {
        writeln!(out, "{c},{j},{v}")?;
    }
    out.flush()?;
    Ok(())
}
