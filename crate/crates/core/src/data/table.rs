//! CSV interchange: a header row `label,f0,…,f{D-1}` then one sample per row.

use std::io::{Read, Write};
use std::path::Path;

use super::EmbeddingDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Reads a labelled CSV table. The class count is one more than the largest
/// label seen.
pub fn read_csv<R: Read>(reader: R) -> Result<EmbeddingDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("label") {
        return Err(Error::parse(0, "first CSV column must be `label`"));
    }
    let dim = headers.len() - 1;
    for (j, h) in headers.iter().skip(1).enumerate() {
        if h.trim() != format!("f{j}") {
            return Err(Error::parse(0, format!("expected column f{j}, found `{h}`")));
        }
    }

    let mut labels = Vec::new();
    let mut data = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let offset = record.position().map_or(0, |p| p.byte() as usize);
        if record.len() != dim + 1 {
            return Err(Error::parse(
                offset,
                format!("row {i} has {} fields, expected {}", record.len(), dim + 1),
            ));
        }
        let label: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(offset, format!("row {i}: bad label `{}`", &record[0])))?;
        labels.push(label);
        for field in record.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(offset, format!("row {i}: bad feature `{field}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(offset, format!("row {i}: non-finite feature")));
            }
            data.push(v);
        }
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let n = labels.len();
    EmbeddingDataset::new(Matrix::from_vec(n, dim, data)?, labels, num_classes)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<EmbeddingDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_csv(std::io::BufReader::new(file))
}

pub fn write_csv<W: Write>(ds: &EmbeddingDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["label".to_string()];
    header.extend((0..ds.dim()).map(|j| format!("f{j}")));
    wtr.write_record(&header)?;
    for (row, label) in ds.features().row_iter().zip(ds.labels()) {
        let mut rec = Vec::with_capacity(row.len() + 1);
        rec.push(label.to_string());
        rec.extend(row.iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv_file(ds: &EmbeddingDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
    write_csv(ds, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_table() {
        let text = "label,f0,f1\n1,0.5,-2\n0,3,4e-1\n";
        let ds = read_csv(text.as_bytes()).unwrap();
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(ds.features().row(1), &[3.0, 0.4]);

        let mut out = Vec::new();
        write_csv(&ds, &mut out).unwrap();
        assert_eq!(read_csv(&out[..]).unwrap(), ds);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read_csv("x,f0\n0,1\n".as_bytes()).is_err());
        assert!(read_csv("label,f1\n0,1\n".as_bytes()).is_err());
        assert!(read_csv("label,f0\n-1,1\n".as_bytes()).is_err());
        assert!(read_csv("label,f0\n0,abc\n".as_bytes()).is_err());
        assert!(read_csv("label,f0\n0,NaN\n".as_bytes()).is_err());
    }
}
