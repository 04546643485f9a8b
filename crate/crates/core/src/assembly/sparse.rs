//! Compressed-sparse-row matrices.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Compress a coordinate list: duplicates are summed, exact zeros dropped
    /// and column indices sorted within each row.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(i, j, _) in &triplets {
            if i >= nrows {
                return Err(Error::OutOfRange {
                    what: "row",
                    index: i,
                    count: nrows,
                });
            }
            if j >= ncols {
                return Err(Error::OutOfRange {
                    what: "column",
                    index: j,
                    count: ncols,
                });
            }
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut k = 0;
        while k < triplets.len() {
            let (i, j, mut v) = triplets[k];
            k += 1;
            while k < triplets.len() && triplets[k].0 == i && triplets[k].1 == j {
                v += triplets[k].2;
                k += 1;
            }
            if v != 0.0 {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        indptr.push(0);
        for (i, &v) in d.iter().enumerate() {
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: n,
            ncols: n,
            indptr,
            indices,
            values,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        assert_eq!(y.len(), self.nrows, "matvec output length");
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y += a A x`.
    pub fn matvec_add(&self, a: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        assert_eq!(y.len(), self.nrows, "matvec output length");
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yi += a * s;
        }
    }

    /// `y = Aᵀ x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "transpose matvec input length");
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += self.values[k] * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut count = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            count[j + 1] += 1;
        }
        for c in 0..self.ncols {
            count[c + 1] += count[c];
        }
        let indptr = count.clone();
        let mut next = count;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                indices[next[j]] = i;
                values[next[j]] = self.values[k];
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            values,
        }
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out.drop_zeros();
        out
    }

    /// `diag(left) A diag(right)`.
    pub fn scale_rows_cols(&self, left: Option<&[f64]>, right: Option<&[f64]>) -> Self {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let mut v = out.values[k];
                if let Some(l) = left {
                    v *= l[i];
                }
                if let Some(r) = right {
                    v *= r[self.indices[k]];
                }
                out.values[k] = v;
            }
        }
        out.drop_zeros();
        out
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows * self.ncols,
                actual: other.nrows * other.ncols,
            });
        }
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, a * v)));
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                actual: other.nrows,
            });
        }
        let mut t = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.ncols];
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                t.push((i, j, acc[j]));
                acc[j] = 0.0;
                mark[j] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            t.extend(self.row(i).map(|(j, v)| (i, j, v)));
        }
        t
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let t = self.transpose();
        match self.add_scaled(-1.0, &t) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        *self = Self::from_triplets(self.nrows, self.ncols, self.triplets())
            .expect("indices of an existing matrix are in range");
    }

    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
        }
        s
    }

    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_matrix_market()).map_err(|e| Error::io(path, e))
    }

    pub fn read_matrix_market(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('%'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty Matrix Market text".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Format(format!("bad size line '{header}'"))))
            .collect::<Result<_>>()?;
        let [nrows, ncols, nnz] = dims[..] else {
            return Err(Error::Format(format!("bad size line '{header}'")));
        };
        let mut t = Vec::with_capacity(nnz);
        for line in lines {
            let mut it = line.split_whitespace();
            let parse_err = || Error::Format(format!("bad entry '{line}'"));
            let i: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            let j: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            let v: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            if i == 0 || j == 0 {
                return Err(parse_err());
            }
            t.push((i - 1, j - 1, v));
        }
        if t.len() != nnz {
            return Err(Error::Format(format!("expected {nnz} entries, found {}", t.len())));
        }
        Self::from_triplets(nrows, ncols, t)
    }
}
