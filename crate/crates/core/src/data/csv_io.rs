use std::io::{Read, Write};
use std::path::Path;

use super::{Cell, Codebook, Cohort, VariableSpec};
use crate::error::{Error, Result};

/// Read an RFC-4180 CSV (header row, UTF-8) under `codebook`. Every header
/// must be described by the codebook.
pub fn read_cohort_from<R: Read>(reader: R, codebook: &Codebook) -> Result<Cohort> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let specs: Vec<&VariableSpec> = headers
        .iter()
        .map(|h| codebook.get(h).ok_or_else(|| Error::Config(format!("column `{h}` is not in the codebook"))))
        .collect::<Result<_>>()?;
    let mut cells: Vec<Vec<Cell>> = vec![Vec::new(); specs.len()];
    for record in rdr.records() {
        let record = record?;
        if record.len() != specs.len() {
            return Err(Error::Parse(format!("record has {} fields, header has {}", record.len(), specs.len())));
        }
        for (j, tok) in record.iter().enumerate() {
            cells[j].push(specs[j].parse_token(tok)?);
        }
    }
    let rows = cells.first().map_or(0, Vec::len);
    let mut cohort = Cohort::new(rows);
    for (spec, col) in specs.into_iter().zip(cells) {
        cohort.push_column(spec.clone(), col)?;
    }
    Ok(cohort)
}

pub fn read_cohort(data: &Path, codebook: &Codebook) -> Result<Cohort> {
    let f = std::fs::File::open(data).map_err(|e| Error::Io(format!("{}: {e}", data.display())))?;
    read_cohort_from(std::io::BufReader::new(f), codebook)
}

/// Write cells as codes / shortest round-trip floats; Missing is the empty field.
pub fn write_cohort_to<W: Write>(writer: W, cohort: &Cohort) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(cohort.names())?;
    for r in 0..cohort.n_rows() {
        w.write_record(cohort.columns().iter().map(|c| VariableSpec::format_cell(&c.cells[r])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cohort(path: &Path, cohort: &Cohort) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_cohort_to(std::io::BufWriter::new(f), cohort)
}
