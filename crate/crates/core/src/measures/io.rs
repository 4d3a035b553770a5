use std::io::{Read, Write};
use std::path::Path;

use super::DiscreteMeasure;
use crate::error::{Error, Result};

/// Reads a measure from CSV with header `atom,weight` (or just `atom`, which
/// means uniform weights). Lines starting with `#` are ignored.
pub fn read_measure_csv(path: &Path) -> Result<DiscreteMeasure> {
    let file = std::fs::File::open(path)?;
    parse_measure_csv(file)
}

pub fn parse_measure_csv<R: Read>(reader: R) -> Result<DiscreteMeasure> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let atom_col = headers
        .iter()
        .position(|h| h == "atom")
        .ok_or_else(|| Error::InvalidMeasure("CSV has no `atom` column".into()))?;
    let weight_col = headers.iter().position(|h| h == "weight");

    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let field = |col: usize| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            raw.parse::<f64>().map_err(|_| {
                Error::InvalidMeasure(format!(
                    "row {}: cannot parse `{raw}` as a number",
                    line + 1
                ))
            })
        };
        atoms.push(field(atom_col)?);
        if let Some(col) = weight_col {
            weights.push(field(col)?);
        }
    }
    DiscreteMeasure::new(&atoms, weight_col.map(|_| weights.as_slice()))
}

/// Reads the raw `atom` column, keeping repeats and file order. A `weight`
/// column is accepted only if all weights are equal.
pub fn read_points_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let atom_col = headers
        .iter()
        .position(|h| h == "atom")
        .ok_or_else(|| Error::InvalidMeasure("CSV has no `atom` column".into()))?;
    let weight_col = headers.iter().position(|h| h == "weight");
    let mut atoms = Vec::new();
    let mut first_weight = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let parse = |col: usize| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            raw.parse::<f64>().map_err(|_| {
                Error::InvalidMeasure(format!(
                    "row {}: cannot parse `{raw}` as a number",
                    line + 1
                ))
            })
        };
        atoms.push(parse(atom_col)?);
        if let Some(col) = weight_col {
            let w = parse(col)?;
            if *first_weight.get_or_insert(w) != w {
                return Err(Error::InvalidMeasure(
                    "point lists need equal weights; repeat atoms to express multiplicity".into(),
                ));
            }
        }
    }
    if atoms.is_empty() {
        return Err(Error::InvalidMeasure("CSV has no rows".into()));
    }
    Ok(atoms)
}

pub fn write_measure_csv<W: Write>(mut out: W, measure: &DiscreteMeasure) -> Result<()> {
    writeln!(out, "atom,weight")?;
    for (a, w) in measure.iter() {
        writeln!(out, "{a},{w}")?;
    }
    Ok(())
}
