//! Dense and column-compressed storage for geometry matrices, plus the
//! `lingeo-matrix v1` text format.
//!
//! Matrices with at most [`DENSE_LIMIT`] columns are kept dense; larger ones
//! are stored column-compressed with entries below [`SPARSE_DROP`] in
//! magnitude dropped. Column access is the hot path: both the Markov
//! normalization and the document transform `x -> Hx` walk columns.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest dimension stored densely.
pub const DENSE_LIMIT: usize = 5000;
/// Magnitude below which sparse storage drops an entry.
pub const SPARSE_DROP: f64 = 1e-8;

/// Column-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColumns {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseColumns {
    /// Builds from per-column `(row, value)` lists; entries are sorted and
    /// duplicates summed.
    pub fn from_columns(rows: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        let cols = columns.len();
        let mut col_ptr = Vec::with_capacity(cols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|&(r, _)| r);
            let mut last: Option<usize> = None;
            for (r, v) in col {
                debug_assert!(r < rows);
                if last == Some(r) {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(r);
                    values.push(v);
                    last = Some(r);
                }
            }
            col_ptr.push(row_idx.len());
        }
        let mut out = Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        };
        out.prune();
        out
    }

    fn prune(&mut self) {
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::with_capacity(self.row_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                if self.values[k].abs() >= SPARSE_DROP {
                    row_idx.push(self.row_idx[k]);
                    values.push(self.values[k]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        self.col_ptr = col_ptr;
        self.row_idx = row_idx;
        self.values = values;
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// A real matrix in whichever storage suits its size.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Dense(DMatrix<f64>),
    Sparse(SparseColumns),
}

impl Matrix {
    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.nrows(),
            Matrix::Sparse(s) => s.rows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.ncols(),
            Matrix::Sparse(s) => s.cols,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Matrix::Sparse(_))
    }

    /// Chooses storage from the column count.
    pub fn from_columns(rows: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        if columns.len() <= DENSE_LIMIT {
            let mut m = DMatrix::zeros(rows, columns.len());
            for (j, col) in columns.into_iter().enumerate() {
                for (i, v) in col {
                    m[(i, j)] += v;
                }
            }
            Matrix::Dense(m)
        } else {
            Matrix::Sparse(SparseColumns::from_columns(rows, columns))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Matrix::Dense(m) => m[(i, j)],
            Matrix::Sparse(s) => s.column(j).find(|&(r, _)| r == i).map_or(0.0, |(_, v)| v),
        }
    }

    /// Nonzero entries of column `j` in row order.
    pub fn column_entries(&self, j: usize) -> Vec<(usize, f64)> {
        match self {
            Matrix::Dense(m) => m
                .column(j)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
            Matrix::Sparse(s) => s.column(j).collect(),
        }
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        match self {
            Matrix::Dense(m) => m.column(j).sum(),
            Matrix::Sparse(s) => s.column(j).map(|(_, v)| v).sum(),
        }
    }

    /// Multiplies column `j` by `factor` for every `j`.
    pub fn scale_columns(&mut self, factors: &[f64]) {
        assert_eq!(factors.len(), self.ncols());
        match self {
            Matrix::Dense(m) => {
                for (j, &f) in factors.iter().enumerate() {
                    m.column_mut(j).scale_mut(f);
                }
            }
            Matrix::Sparse(s) => {
                for (j, &f) in factors.iter().enumerate() {
                    for k in s.col_ptr[j]..s.col_ptr[j + 1] {
                        s.values[k] *= f;
                    }
                }
                s.prune();
            }
        }
    }

    /// `self * x` for a sparse `x` given as `(index, value)` pairs.
    pub fn mul_sparse_vec(&self, x: &[(usize, f64)]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        for &(j, xj) in x {
            match self {
                Matrix::Dense(m) => {
                    for (o, &v) in out.iter_mut().zip(m.column(j).iter()) {
                        *o += v * xj;
                    }
                }
                Matrix::Sparse(s) => {
                    for (i, v) in s.column(j) {
                        out[i] += v * xj;
                    }
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Matrix::Dense(m) => m.clone(),
            Matrix::Sparse(s) => {
                let mut m = DMatrix::zeros(s.rows, s.cols);
                for j in 0..s.cols {
                    for (i, v) in s.column(j) {
                        m[(i, j)] = v;
                    }
                }
                m
            }
        }
    }

    /// Returns a copy with `rows` rows, padding with zero rows.
    pub fn pad_rows(&self, rows: usize) -> Matrix {
        assert!(rows >= self.nrows());
        match self {
            Matrix::Dense(m) => {
                let mut out = DMatrix::zeros(rows, m.ncols());
                out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
                Matrix::Dense(out)
            }
            Matrix::Sparse(s) => Matrix::Sparse(SparseColumns { rows, ..s.clone() }),
        }
    }

    /// Writes the `lingeo-matrix v1` text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Matrix::Dense(m) => {
                writeln!(out, "lingeo-matrix v1 {} {} dense", m.nrows(), m.ncols()).unwrap();
                for i in 0..m.nrows() {
                    let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
                    out.push_str(&row.join(" "));
                    out.push('\n');
                }
            }
            Matrix::Sparse(s) => {
                writeln!(out, "lingeo-matrix v1 {} {} sparse", s.rows, s.cols).unwrap();
                // Row-major triple order.
                let mut triples: Vec<(usize, usize, f64)> = (0..s.cols)
                    .flat_map(|j| s.column(j).map(move |(i, v)| (i, j, v)))
                    .collect();
                triples.sort_by_key(|&(i, j, _)| (i, j));
                for (i, j, v) in triples {
                    writeln!(out, "{i} {j} {}", fmt_f64(v)).unwrap();
                }
            }
        }
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Matrix> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(source, 1, "missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "lingeo-matrix" || fields[1] != "v1" {
            return Err(Error::parse(
                source,
                1,
                "expected 'lingeo-matrix v1 <rows> <cols> <dense|sparse>'",
            ));
        }
        let rows: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(source, 1, "bad row count"))?;
        let cols: usize = fields[3]
            .parse()
            .map_err(|_| Error::parse(source, 1, "bad column count"))?;
        let parse_f = |s: &str, line: usize| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(source, line, format!("bad number {s:?}")))
        };
        match fields[4] {
            "dense" => {
                let mut m = DMatrix::zeros(rows, cols);
                let mut i = 0;
                for (ln, line) in lines {
                    if i >= rows {
                        return Err(Error::parse(source, ln + 1, "too many rows"));
                    }
                    let vals: Vec<&str> = line.split_whitespace().collect();
                    if vals.len() != cols {
                        return Err(Error::parse(source, ln + 1, "wrong number of columns"));
                    }
                    for (j, v) in vals.into_iter().enumerate() {
                        m[(i, j)] = parse_f(v, ln + 1)?;
                    }
                    i += 1;
                }
                if i != rows {
                    return Err(Error::parse(source, i + 1, "too few rows"));
                }
                Ok(Matrix::Dense(m))
            }
            "sparse" => {
                let mut columns = vec![Vec::new(); cols];
                for (ln, line) in lines {
                    let parts: Vec<&str> = line.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(Error::parse(source, ln + 1, "expected 'i j value'"));
                    }
                    let i: usize = parts[0]
                        .parse()
                        .map_err(|_| Error::parse(source, ln + 1, "bad row index"))?;
                    let j: usize = parts[1]
                        .parse()
                        .map_err(|_| Error::parse(source, ln + 1, "bad column index"))?;
                    if i >= rows || j >= cols {
                        return Err(Error::parse(source, ln + 1, "index out of range"));
                    }
                    columns[j].push((i, parse_f(parts[2], ln + 1)?));
                }
                Ok(Matrix::Sparse(SparseColumns::from_columns(rows, columns)))
            }
            other => Err(Error::parse(source, 1, format!("unknown storage {other:?}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Matrix> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Matrix::from_text(&text, &path.display().to_string())
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
