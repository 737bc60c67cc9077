//! Dataset files.
//!
//! Feature CSV: header `f0,…,f{d-1},label` (decimal floats) or `seq,label`.
//! Precomputed metric: a text file whose first line is the side `n`,
//! followed by `n` lines of `n` space-separated non-negative decimals, plus
//! a CSV with header `id,label` whose ids index the matrix. Probe files for
//! prediction may omit the `label` column.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metric::{Dataset, DistanceMatrix, Label, PointSet};

enum Layout {
    Dense(usize),
    Seq,
    Id,
}

fn layout(headers: &csv::StringRecord) -> Result<(Layout, bool)> {
    let names: Vec<&str> = headers.iter().collect();
    let has_label = names.last() == Some(&"label");
    let features = &names[..names.len() - usize::from(has_label)];
    match features {
        ["seq"] => Ok((Layout::Seq, has_label)),
        ["id"] => Ok((Layout::Id, has_label)),
        [] => Err(Error::parse("no feature columns")),
        cols => {
            for (j, c) in cols.iter().enumerate() {
                if *c != format!("f{j}") {
                    return Err(Error::parse(format!("expected column `f{j}`, found `{c}`")));
                }
            }
            Ok((Layout::Dense(cols.len()), has_label))
        }
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, row: usize, col: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::parse(format!("row {row}: cannot parse `{s}` in column `{col}`")))
}

/// Reads points and, when a `label` column is present, labels.
pub fn read_points<R: Read>(r: R) -> Result<(PointSet, Option<Vec<Label>>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = rdr.headers()?.clone();
    let (layout, has_label) = layout(&headers)?;
    let mut labels = Vec::new();
    let mut coords = Vec::new();
    let mut seqs = Vec::new();
    let mut ids = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = row + 1;
        match layout {
            Layout::Dense(d) => {
                for j in 0..d {
                    coords.push(parse_field::<f64>(&rec[j], row, &headers[j])?);
                }
            }
            Layout::Seq => seqs.push(rec[0].as_bytes().to_vec()),
            Layout::Id => ids.push(parse_field::<usize>(&rec[0], row, "id")?),
        }
        if has_label {
            labels.push(parse_field::<Label>(&rec[rec.len() - 1], row, "label")?);
        }
    }
    let points = match layout {
        Layout::Dense(d) => PointSet::dense(d, coords)?,
        Layout::Seq => PointSet::seqs(seqs)?,
        Layout::Id => PointSet::ids(ids),
    };
    Ok((points, has_label.then_some(labels)))
}

pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let (points, labels) = read_points(r)?;
    let labels = labels.ok_or_else(|| Error::parse("dataset has no `label` column"))?;
    Dataset::new(points, labels)
}

pub fn read_dataset_file(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(File::open(path)?)
}

pub fn read_points_file(path: impl AsRef<Path>) -> Result<(PointSet, Option<Vec<Label>>)> {
    read_points(File::open(path)?)
}

pub fn write_dataset<W: Write>(ds: &Dataset, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = match ds.points() {
        PointSet::Dense { dim, .. } => (0..*dim).map(|j| format!("f{j}")).collect(),
        PointSet::Seq(_) => vec!["seq".into()],
        PointSet::Ids(_) => vec!["id".into()],
    };
    header.push("label".into());
    out.write_record(&header)?;
    for i in 0..ds.len() {
        let mut rec: Vec<String> = match ds.points() {
            PointSet::Dense { dim, coords } => coords[i * dim..(i + 1) * dim].iter().map(f64::to_string).collect(),
            PointSet::Seq(s) => vec![String::from_utf8_lossy(&s[i]).into_owned()],
            PointSet::Ids(ids) => vec![ids[i].to_string()],
        };
        rec.push(ds.label(i).to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(r: R) -> Result<DistanceMatrix> {
    let mut lines = BufReader::new(r).lines();
    let first = lines.next().ok_or_else(|| Error::parse("empty matrix file"))??;
    let side: usize = parse_field(&first, 0, "n")?;
    let mut data = Vec::with_capacity(side * side);
    for row in 0..side {
        let line = lines.next().ok_or_else(|| Error::parse(format!("matrix has fewer than {side} rows")))??;
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(parse_field::<f64>(tok, row + 1, "matrix")?);
        }
        if data.len() - before != side {
            return Err(Error::parse(format!("matrix row {} has {} entries, expected {side}", row + 1, data.len() - before)));
        }
    }
    for line in lines {
        if !line?.trim().is_empty() {
            return Err(Error::parse(format!("matrix has more than {side} rows")));
        }
    }
    DistanceMatrix::new(side, data)
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    read_matrix(File::open(path)?)
}

pub fn write_matrix<W: Write>(m: &DistanceMatrix, mut w: W) -> Result<()> {
    writeln!(w, "{}", m.side())?;
    for i in 0..m.side() {
        let row: Vec<String> = (0..m.side()).map(|j| m.get(i, j).to_string()).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::PointRef;

    #[test]
    fn dense_csv() {
        let ds = read_dataset("f0,f1,label\n0.5,1,0\n-2,3e2,4\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.point(1), PointRef::Dense(&[-2.0, 300.0]));
        assert_eq!(ds.labels(), &[0, 4]);
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn seq_and_id_csv() {
        let ds = read_dataset("seq,label\nabc,1\nabd,0\n".as_bytes()).unwrap();
        assert_eq!(ds.point(0), PointRef::Seq(b"abc"));
        let ds = read_dataset("id,label\n3,1\n0,0\n".as_bytes()).unwrap();
        assert_eq!(ds.point(0), PointRef::Id(3));
    }

    #[test]
    fn probes_without_labels() {
        let (ps, labels) = read_points("f0\n1\n2\n".as_bytes()).unwrap();
        assert_eq!(ps.len(), 2);
        assert!(labels.is_none());
        assert!(read_dataset("f0\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn bad_csv() {
        assert!(read_dataset("x0,label\n1,0\n".as_bytes()).is_err());
        assert!(read_dataset("f0,label\nfoo,0\n".as_bytes()).is_err());
        assert!(read_dataset("f0,label\n1,-1\n".as_bytes()).is_err());
        assert!(read_dataset("f0,label\nNaN,0\n".as_bytes()).is_err());
        assert!(read_dataset("label\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn matrix_file() {
        let m = read_matrix("3\n0 1 2\n1 0 1\n2 1 0\n".as_bytes()).unwrap();
        assert_eq!(m.get(0, 2), 2.0);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
        assert!(read_matrix("2\n0 1\n".as_bytes()).is_err());
        assert!(read_matrix("2\n0 1 3\n1 0\n".as_bytes()).is_err());
        assert!(read_matrix("2\n0 1\n2 0\n".as_bytes()).is_err());
    }
}
