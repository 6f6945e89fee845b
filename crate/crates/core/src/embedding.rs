//! Per-document vector representations and their on-disk formats.
//!
//! Two formats are supported:
//!
//! * CSV with header `id,v0,...,v{d-1}`, values written with 17 significant
//!   digits.
//! * Binary `EMB1`: the magic bytes, `u32` row count, `u32` dimension,
//!   row-major little-endian `f64` values, then newline-separated ids.
//!
//! [`EmbeddingMatrix::save`] and [`EmbeddingMatrix::load`] pick the format from
//! the file extension (`.csv` for CSV, anything else for binary).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const MAGIC: &[u8; 4] = b"EMB1";

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    doc_ids: Vec<String>,
    vectors: Matrix,
}

impl EmbeddingMatrix {
    /// Validates that ids are unique, match the row count and that every
    /// value is finite.
    pub fn new(doc_ids: Vec<String>, vectors: Matrix) -> Result<Self> {
        if doc_ids.len() != vectors.rows() {
            return Err(Error::DimensionMismatch {
                expected: doc_ids.len(),
                found: vectors.rows(),
            });
        }
        if !vectors.is_finite() {
            return Err(Error::Format("embedding contains non-finite values".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(doc_ids.len());
        for id in &doc_ids {
            if id.contains('\n') {
                return Err(Error::Format(format!("document id {id:?} contains a newline")));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::Format(format!("duplicate document id {id:?}")));
            }
        }
        Ok(EmbeddingMatrix { doc_ids, vectors })
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    /// Map from document id to row index.
    pub fn index(&self) -> HashMap<&str, usize> {
        self.doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect()
    }

    /// Rows for the given ids, in the given order.
    pub fn select<'a, I>(&self, ids: I) -> Result<Matrix>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let index = self.index();
        let mut data = Vec::new();
        let mut rows = 0;
        for id in ids {
            let &i = index
                .get(id)
                .ok_or_else(|| Error::invalid(format!("document {id:?} has no embedding")))?;
            data.extend_from_slice(self.row(i));
            rows += 1;
        }
        Matrix::from_vec(rows, self.dim(), data)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        write!(out, "id")?;
        for j in 0..self.dim() {
            write!(out, ",v{j}")?;
        }
        writeln!(out)?;
        for (id, row) in self.doc_ids.iter().zip(self.vectors.iter_rows()) {
            write_csv_field(&mut out, id)?;
            for v in row {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty CSV".into()))??;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"id") {
            return Err(Error::Format("CSV header must start with `id`".into()));
        }
        for (j, c) in cols.iter().enumerate().skip(1) {
            if *c != format!("v{}", j - 1) {
                return Err(Error::Format(format!("unexpected CSV column {c:?}")));
            }
        }
        let dim = cols.len() - 1;
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (id, rest) = split_csv_id(&line)
                .ok_or_else(|| Error::Format(format!("line {}: bad id field", lineno + 2)))?;
            let values: Vec<&str> = if dim == 0 { Vec::new() } else { rest.split(',').collect() };
            if values.len() != dim {
                return Err(Error::Format(format!(
                    "line {}: expected {dim} values, found {}",
                    lineno + 2,
                    values.len()
                )));
            }
            for v in values {
                data.push(v.parse::<f64>().map_err(|e| {
                    Error::Format(format!("line {}: {v:?}: {e}", lineno + 2))
                })?);
            }
            ids.push(id);
        }
        let vectors = Matrix::from_vec(ids.len(), dim, data)?;
        EmbeddingMatrix::new(ids, vectors)
    }

    pub fn write_binary<W: Write>(&self, out: W) -> Result<()> {
        let rows = u32::try_from(self.len()).map_err(|_| Error::Format("too many rows".into()))?;
        let dim = u32::try_from(self.dim()).map_err(|_| Error::Format("dimension too large".into()))?;
        let mut out = BufWriter::new(out);
        out.write_all(MAGIC)?;
        out.write_all(&rows.to_le_bytes())?;
        out.write_all(&dim.to_le_bytes())?;
        for v in self.vectors.as_slice() {
            out.write_all(&v.to_le_bytes())?;
        }
        for id in &self.doc_ids {
            out.write_all(id.as_bytes())?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(input: R) -> Result<Self> {
        let mut input = BufReader::new(input);
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("missing EMB1 magic".into()));
        }
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        let rows = u32::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let dim = u32::from_le_bytes(word) as usize;
        let mut data = Vec::with_capacity(rows * dim);
        let mut buf = [0u8; 8];
        for _ in 0..rows * dim {
            input.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        let mut rest = String::new();
        input.read_to_string(&mut rest)?;
        let ids: Vec<String> = rest.split_terminator('\n').map(str::to_owned).collect();
        if ids.len() != rows {
            return Err(Error::Format(format!("expected {rows} ids, found {}", ids.len())));
        }
        EmbeddingMatrix::new(ids, Matrix::from_vec(rows, dim, data)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        if is_csv(path) {
            self.write_csv(file)
        } else {
            self.write_binary(file)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::file(path, e))?;
        if is_csv(path) {
            Self::read_csv(file)
        } else {
            Self::read_binary(file)
        }
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub(crate) fn write_csv_field<W: Write>(out: &mut W, field: &str) -> std::io::Result<()> {
    if field.contains([',', '"', '\n', '\r']) {
        write!(out, "\"{}\"", field.replace('"', "\"\""))
    } else {
        write!(out, "{field}")
    }
}

fn split_csv_id(line: &str) -> Option<(String, &str)> {
    if let Some(quoted) = line.strip_prefix('"') {
        let mut id = String::new();
        let mut chars = quoted.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if c == '"' {
                if matches!(chars.peek(), Some((_, '"'))) {
                    id.push('"');
                    chars.next();
                } else {
                    let rest = &quoted[i + 1..];
                    return Some((id, rest.strip_prefix(',').unwrap_or(rest)));
                }
            } else {
                id.push(c);
            }
        }
        None
    } else {
        match line.split_once(',') {
            Some((id, rest)) => Some((id.to_owned(), rest)),
            None => Some((line.to_owned(), "")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingMatrix {
        EmbeddingMatrix::new(
            vec!["a".into(), "b,c".into(), "q\"x".into()],
            Matrix::from_rows(&[
                [0.1, -2.5e-300, 1.0 / 3.0],
                [f64::MAX, f64::MIN_POSITIVE, -0.0],
                [1e10, 2.0, std::f64::consts::PI],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn binary_round_trip_is_bitwise() {
        let m = sample();
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"EMB1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        let back = EmbeddingMatrix::read_binary(&buf[..]).unwrap();
        assert_eq!(back.doc_ids(), m.doc_ids());
        for (x, y) in back.vectors().as_slice().iter().zip(m.vectors().as_slice()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_with_17_digits() {
        let m = sample();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,v0,v1,v2\n"));
        assert!(text.contains("\"b,c\","));
        assert!(text.contains("3.3333333333333331e-1"));
        let back = EmbeddingMatrix::read_csv(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn zero_dimensional() {
        let m = EmbeddingMatrix::new(vec!["a".into()], Matrix::zeros(1, 0)).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(EmbeddingMatrix::read_csv(&buf[..]).unwrap(), m);
    }

    #[test]
    fn rejects_invalid() {
        assert!(EmbeddingMatrix::new(vec!["a".into(), "a".into()], Matrix::zeros(2, 1)).is_err());
        assert!(EmbeddingMatrix::new(vec!["a".into()], Matrix::zeros(2, 1)).is_err());
        let nan = Matrix::from_rows(&[[f64::NAN]]).unwrap();
        assert!(EmbeddingMatrix::new(vec!["a".into()], nan).is_err());
        assert!(EmbeddingMatrix::read_binary(&b"EMB2"[..]).is_err());
    }

    #[test]
    fn select_rows() {
        let m = sample();
        let sel = m.select(["q\"x", "a"]).unwrap();
        assert_eq!(sel.row(0), m.row(2));
        assert!(m.select(["missing"]).is_err());
    }
}
