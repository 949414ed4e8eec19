//! CSV serialization of dense matrices and vectors.
//!
//! The first line is a header `# field=real|complex, m=<rows>, n=<cols>`.
//! Each following line is one matrix row. Complex entries take two adjacent
//! columns (real part, imaginary part). Values are written with Rust's
//! shortest round-trip formatting, so real entries survive a write/read
//! cycle bit-exactly.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Entries, Field, VectorEntries, C64};

pub fn write_entries<W: Write>(out: W, entries: &Entries) -> Result<()> {
    let (m, n) = entries.shape();
    let mut out = out;
    writeln!(out, "# field={}, m={m}, n={n}", entries.field())?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..m {
        let record: Vec<String> = match entries {
            Entries::Real(a) => (0..n).map(|j| format!("{}", a[(i, j)])).collect(),
            Entries::Complex(a) => (0..n)
                .flat_map(|j| [format!("{}", a[(i, j)].re), format!("{}", a[(i, j)].im)])
                .collect(),
        };
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector<W: Write>(out: W, v: &VectorEntries) -> Result<()> {
    let entries = match v {
        VectorEntries::Real(v) => Entries::Real(DMatrix::from_column_slice(v.len(), 1, v.as_slice())),
        VectorEntries::Complex(v) => Entries::Complex(DMatrix::from_column_slice(v.len(), 1, v.as_slice())),
    };
    write_entries(out, &entries)
}

fn parse_header(line: &str) -> Result<(Field, usize, usize)> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse(format!("missing `#` header: {line:?}")))?;
    let (mut field, mut m, mut n) = (None, None, None);
    for part in body.split(',') {
        let (k, v) = part
            .trim()
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header item {part:?}")))?;
        match k.trim() {
            "field" => {
                field = Some(match v.trim() {
                    "real" => Field::Real,
                    "complex" => Field::Complex,
                    other => return Err(Error::Parse(format!("unknown field {other:?}"))),
                })
            }
            "m" => m = Some(v.trim().parse().map_err(|_| Error::Parse(format!("bad m {v:?}")))?),
            "n" => n = Some(v.trim().parse().map_err(|_| Error::Parse(format!("bad n {v:?}")))?),
            other => return Err(Error::Parse(format!("unknown header key {other:?}"))),
        }
    }
    match (field, m, n) {
        (Some(f), Some(m), Some(n)) => Ok((f, m, n)),
        _ => Err(Error::Parse("header needs field, m and n".into())),
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

pub fn read_entries<R: Read>(input: R) -> Result<Entries> {
    let mut reader = BufReader::new(input);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let (field, m, n) = parse_header(&header)?;
    let width = match field {
        Field::Real => n,
        Field::Complex => 2 * n,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut values = Vec::with_capacity(m * width);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::Parse(format!("row {rows} has {} columns, expected {width}", rec.len())));
        }
        for cell in rec.iter() {
            values.push(parse_f64(cell)?);
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::Parse(format!("expected {m} rows, found {rows}")));
    }
    Ok(match field {
        Field::Real => Entries::Real(DMatrix::from_row_slice(m, n, &values)),
        Field::Complex => {
            let pairs: Vec<C64> = values.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
            Entries::Complex(DMatrix::from_row_slice(m, n, &pairs))
        }
    })
}

pub fn read_vector<R: Read>(input: R) -> Result<VectorEntries> {
    match read_entries(input)? {
        Entries::Real(a) if a.ncols() == 1 => Ok(VectorEntries::Real(DVector::from_column_slice(a.as_slice()))),
        Entries::Complex(a) if a.ncols() == 1 => Ok(VectorEntries::Complex(DVector::from_column_slice(a.as_slice()))),
        other => Err(Error::Parse(format!("expected a single column, got shape {:?}", other.shape()))),
    }
}
