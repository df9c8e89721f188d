//! On-disk network formats.
//!
//! * Edge list: CSV with header `t,i,j`, one row per directed link, all
//!   indices one-based.
//! * Dense slices: a directory of `slice_<t>.csv` files (`t` one-based, zero
//!   padded to four digits when written). Each file is an `n x n` 0/1 matrix
//!   without header; rows are sources `i`, columns are targets `j`.

use std::collections::BTreeSet;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::NetworkSeries;

/// Declared dimensions of a series on disk. `None` infers from the records.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dimensions {
    pub nodes: Option<usize>,
    pub slices: Option<usize>,
}

fn parse_index(field: &str, what: &str, line: u64) -> Result<usize> {
    field
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what} {field:?}")))
}

fn check_header(rdr: &mut csv::Reader<impl Read>) -> Result<()> {
    let header = rdr.headers()?;
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != ["t", "i", "j"] {
        return Err(Error::Parse(format!(
            "expected header t,i,j, found {}",
            names.join(",")
        )));
    }
    Ok(())
}

/// Reads a one-based `t,i,j` edge list.
pub fn read_edge_list<R: Read>(reader: R, dims: Dimensions) -> Result<NetworkSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(&mut rdr)?;
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(Error::Parse(format!("line {line}: expected 3 fields")));
        }
        let t = parse_index(&row[0], "t", line)?;
        let i = parse_index(&row[1], "i", line)?;
        let j = parse_index(&row[2], "j", line)?;
        if t == 0 || i == 0 || j == 0 {
            return Err(Error::Parse(format!("line {line}: indices are one-based")));
        }
        records.push((t - 1, i - 1, j - 1));
    }
    let n = dims.nodes.unwrap_or_else(|| {
        records
            .iter()
            .map(|&(_, i, j)| i.max(j) + 1)
            .max()
            .unwrap_or(0)
    });
    let slices = dims
        .slices
        .unwrap_or_else(|| records.iter().map(|&(t, _, _)| t + 1).max().unwrap_or(0));
    NetworkSeries::from_edges(n, slices, records)
}

/// Reads an edge list whose `i`, `j` fields are opaque labels.
///
/// Labels are sorted and mapped to contiguous node indices.
pub fn read_labeled_edge_list<R: Read>(reader: R, slices: Option<usize>) -> Result<NetworkSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(&mut rdr)?;
    let mut raw = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(Error::Parse(format!("line {line}: expected 3 fields")));
        }
        let t = parse_index(&row[0], "t", line)?;
        if t == 0 {
            return Err(Error::Parse(format!("line {line}: t is one-based")));
        }
        raw.push((t - 1, row[1].to_string(), row[2].to_string()));
    }
    let labels: Vec<String> = raw
        .iter()
        .flat_map(|(_, a, b)| [a.clone(), b.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |l: &str| {
        labels
            .binary_search_by(|x| x.as_str().cmp(l))
            .expect("label present")
    };
    let slices = slices.unwrap_or_else(|| raw.iter().map(|(t, _, _)| t + 1).max().unwrap_or(0));
    let edges: Vec<_> = raw
        .iter()
        .map(|(t, a, b)| (*t, index(a), index(b)))
        .collect();
    NetworkSeries::from_edges(labels.len(), slices, edges)?.with_labels(labels)
}

pub fn write_edge_list<W: Write>(series: &NetworkSeries, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["t", "i", "j"])?;
    for (t, i, j) in series.edges() {
        wtr.write_record([
            (t + 1).to_string(),
            (i + 1).to_string(),
            (j + 1).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_edge_list(path: &Path, dims: Dimensions) -> Result<NetworkSeries> {
    read_edge_list(fs::File::open(path)?, dims)
}

pub fn save_edge_list(series: &NetworkSeries, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    write_edge_list(series, std::io::BufWriter::new(file))
}

fn slice_index(name: &str) -> Option<usize> {
    name.strip_prefix("slice_")?
        .strip_suffix(".csv")?
        .parse()
        .ok()
}

/// Reads one dense 0/1 slice.
pub fn read_dense_slice<R: Read>(reader: R, t: usize) -> Result<Vec<Vec<u8>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (row_idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(rec.len());
        for (col, field) in rec.iter().enumerate() {
            match field {
                "0" => row.push(0),
                "1" => row.push(1),
                other => {
                    return Err(Error::NonBinary {
                        t,
                        row: row_idx,
                        col,
                        value: other.to_string(),
                    })
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads every `slice_<t>.csv` in `dir`; indices must run `1..=T` without gaps.
pub fn load_dense_dir(dir: &Path) -> Result<NetworkSeries> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if let Some(t) = entry.file_name().to_str().and_then(slice_index) {
            files.push((t, entry.path()));
        }
    }
    files.sort();
    for (expected, (t, _)) in files.iter().enumerate() {
        if *t != expected + 1 {
            return Err(Error::Parse(format!(
                "dense slices must be numbered 1..T, missing slice {}",
                expected + 1
            )));
        }
    }
    let dense = files
        .iter()
        .map(|(t, path)| read_dense_slice(fs::File::open(path)?, t - 1))
        .collect::<Result<Vec<_>>>()?;
    NetworkSeries::from_dense(&dense)
}

pub fn save_dense_dir(series: &NetworkSeries, dir: &Path) -> Result<()> {
    for t in 0..series.len() {
        let path = dir.join(format!("slice_{:04}.csv", t + 1));
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        for row in series.dense_slice(t) {
            wtr.write_record(row.iter().map(u8::to_string))?;
        }
        wtr.flush()?;
    }
    Ok(())
}
