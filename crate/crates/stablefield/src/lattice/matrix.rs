use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn cap(op: &str) -> Error {
    Error::Capacity(format!("integer overflow in {op}"))
}

/// Dense integer matrix with exact arithmetic, stored row-major.
///
/// Serializes as nested row arrays, e.g. a column vector `(1,0)^T` is
/// `[[1],[0]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Domain("ragged rows in integer matrix".into()));
        }
        Ok(IntMatrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(d: usize, cols: &[Vec<i64>]) -> Result<Self> {
        if cols.iter().any(|c| c.len() != d) {
            return Err(Error::Domain(
                "column length does not match dimension".into(),
            ));
        }
        let mut m = IntMatrix::zeros(d, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: i64) {
        self.data[i * self.cols + j] = x;
    }

    pub fn col(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hconcat(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.rows != other.rows {
            return Err(Error::Domain("hconcat: row count mismatch".into()));
        }
        let mut m = IntMatrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.get(i, j));
            }
            for j in 0..other.cols {
                m.set(i, self.cols + j, other.get(i, j));
            }
        }
        Ok(m)
    }

    pub fn checked_mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::Domain("matrix product shape mismatch".into()));
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: i128 = 0;
                for k in 0..self.cols {
                    let term = (self.get(i, k) as i128) * (other.get(k, j) as i128);
                    acc = acc.checked_add(term).ok_or_else(|| cap("matrix product"))?;
                }
                out.set(i, j, i64::try_from(acc).map_err(|_| cap("matrix product"))?);
            }
        }
        Ok(out)
    }

    /// Matrix-vector product with exact overflow checks.
    pub fn checked_mul_vec(&self, v: &[i64]) -> Result<Vec<i64>> {
        if self.cols != v.len() {
            return Err(Error::Domain("matrix-vector shape mismatch".into()));
        }
        let mut out = vec![0i64; self.rows];
        for i in 0..self.rows {
            let mut acc: i128 = 0;
            for k in 0..self.cols {
                acc = acc
                    .checked_add((self.get(i, k) as i128) * (v[k] as i128))
                    .ok_or_else(|| cap("matrix-vector product"))?;
            }
            out[i] = i64::try_from(acc).map_err(|_| cap("matrix-vector product"))?;
        }
        Ok(out)
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<i64> {
        if self.rows != self.cols {
            return Err(Error::Domain("determinant of non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(1);
        }
        let mut m: Vec<i128> = self.data.iter().map(|&x| x as i128).collect();
        let at = |m: &Vec<i128>, i: usize, j: usize| m[i * n + j];
        let mut sign: i128 = 1;
        let mut prev: i128 = 1;
        for k in 0..n - 1 {
            if at(&m, k, k) == 0 {
                // pivot by row swap
                let Some(r) = (k + 1..n).find(|&r| at(&m, r, k) != 0) else {
                    return Ok(0);
                };
                for j in 0..n {
                    m.swap(k * n + j, r * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let a = at(&m, i, j)
                        .checked_mul(at(&m, k, k))
                        .ok_or_else(|| cap("determinant"))?;
                    let b = at(&m, i, k)
                        .checked_mul(at(&m, k, j))
                        .ok_or_else(|| cap("determinant"))?;
                    let num = a.checked_sub(b).ok_or_else(|| cap("determinant"))?;
                    m[i * n + j] = num / prev; // exact by Bareiss
                }
                m[i * n + k] = 0;
            }
            prev = at(&m, k, k);
        }
        let det = sign * at(&m, n - 1, n - 1);
        i64::try_from(det).map_err(|_| cap("determinant"))
    }

    /// Adjugate matrix (transpose of cofactors), so
    /// `self * adj = det * I` exactly.
    pub fn adjugate(&self) -> Result<IntMatrix> {
        if self.rows != self.cols {
            return Err(Error::Domain("adjugate of non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(IntMatrix::zeros(0, 0));
        }
        let mut adj = IntMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(i, j);
                let c = minor.det()?;
                let sgn = if (i + j) % 2 == 0 { 1 } else { -1 };
                adj.set(j, i, c.checked_mul(sgn).ok_or_else(|| cap("adjugate"))?);
            }
        }
        Ok(adj)
    }

    fn minor(&self, drop_row: usize, drop_col: usize) -> IntMatrix {
        let n = self.rows;
        let mut m = IntMatrix::zeros(n - 1, n - 1);
        let mut r = 0;
        for i in 0..n {
            if i == drop_row {
                continue;
            }
            let mut c = 0;
            for j in 0..n {
                if j == drop_col {
                    continue;
                }
                m.set(r, c, self.get(i, j));
                c += 1;
            }
            r += 1;
        }
        m
    }

    /// Solves `self * x = b` exactly over the integers via Cramer's rule.
    /// Returns `None` when the solution exists over the rationals but is
    /// not integral.
    pub fn solve_integer(&self, b: &[i64]) -> Result<Option<Vec<i64>>> {
        if self.rows != self.cols || b.len() != self.rows {
            return Err(Error::Domain("solve: shape mismatch".into()));
        }
        let det = self.det()?;
        if det == 0 {
            return Err(Error::Domain("solve: singular matrix".into()));
        }
        let n = self.rows;
        let mut x = vec![0i64; n];
        for j in 0..n {
            let mut m = self.clone();
            for i in 0..n {
                m.set(i, j, b[i]);
            }
            let dj = m.det()?;
            if dj % det != 0 {
                return Ok(None);
            }
            x[j] = dj / det;
        }
        Ok(Some(x))
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<i64>>::deserialize(d)?;
        IntMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Sup-norm of an integer vector.
pub(crate) fn linf(v: &[i64]) -> i64 {
    v.iter().map(|&x| x.abs()).max().unwrap_or(0)
}
