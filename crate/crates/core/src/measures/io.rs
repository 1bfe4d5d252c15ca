//! Columnar text format for measures.
//!
//! ```text
//! N d1:n1,d2:n2,... total_mass
//! x1 ... xN weight [V]
//! ```
//!
//! The header lists each component's nominal dimension and atom count in
//! order. Numbers are written with the shortest round-trip representation.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::{Component, PointCloudMeasure, SignedDensity};

pub fn write_measure<W: Write>(
    out: &mut W,
    measure: &PointCloudMeasure,
    density: Option<&SignedDensity>,
) -> Result<()> {
    let dims: Vec<String> = measure
        .components()
        .iter()
        .map(|c| format!("{}:{}", c.nominal_dim, c.range.len()))
        .collect();
    writeln!(
        out,
        "{} {} {}",
        measure.ambient_dim(),
        dims.join(","),
        measure.total_mass()
    )?;
    for i in 0..measure.len() {
        let mut line: Vec<String> = measure.position(i).iter().map(|x| x.to_string()).collect();
        line.push(measure.weight(i).to_string());
        if let Some(v) = density {
            line.push(v.values()[i].to_string());
        }
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

fn parse_f64(token: &str) -> Result<f64> {
    token
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: `{token}`")))
}

pub fn read_measure<R: BufRead>(input: R) -> Result<(PointCloudMeasure, Option<SignedDensity>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty measure file".into()))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Parse(format!("bad header `{header}`")));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension `{}`", fields[0])))?;
    let mut components = Vec::new();
    let mut start = 0;
    for spec in fields[1].split(',') {
        let (d, count) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad component `{spec}`")))?;
        let count: usize = count
            .parse()
            .map_err(|_| Error::Parse(format!("bad count `{count}`")))?;
        components.push(Component {
            range: start..start + count,
            nominal_dim: parse_f64(d)?,
            label: format!("component-{}", components.len()),
        });
        start += count;
    }
    let declared_mass = parse_f64(fields[2])?;

    let mut positions = Vec::with_capacity(start * n);
    let mut weights = Vec::with_capacity(start);
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(parse_f64)
            .collect::<Result<_>>()?;
        match row.len() {
            k if k == n + 1 => {}
            k if k == n + 2 => values.push(row[n + 1]),
            k => return Err(Error::Parse(format!("row has {k} columns, expected {} or {}", n + 1, n + 2))),
        }
        positions.extend_from_slice(&row[..n]);
        weights.push(row[n]);
    }
    let measure = PointCloudMeasure::with_components(n, positions, weights, components)?;
    if (measure.total_mass() - declared_mass).abs() > 1e-12 * declared_mass.abs().max(1.0) {
        return Err(Error::Parse(format!(
            "declared mass {declared_mass} but weights sum to {}",
            measure.total_mass()
        )));
    }
    let density = match values.len() {
        0 => None,
        k if k == measure.len() => Some(SignedDensity::new(values)?),
        _ => return Err(Error::Parse("density column present on only some rows".into())),
    };
    Ok((measure, density))
}
