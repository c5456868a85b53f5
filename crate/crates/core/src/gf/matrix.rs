use std::fmt;

use super::element::{FieldElement, PrimeField};
use crate::error::{Error, Result};

/// Dense row-major matrix over GF(q).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    field: PrimeField,
    data: Vec<u64>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize, field: PrimeField) -> Self {
        Self {
            rows,
            cols,
            field,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize, field: PrimeField) -> Self {
        let mut m = Self::zeros(n, n, field);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from residue rows; entries are reduced mod q.
    pub fn from_rows(field: PrimeField, rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            field,
            data: rows.iter().flatten().map(|&v| field.reduce(v)).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.field.element(self.at(r, c))
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = self.field.reduce(v);
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn mul(&self, rhs: &FieldMatrix) -> Result<FieldMatrix> {
        if self.cols != rhs.rows || self.field != rhs.field {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let f = self.field;
        let mut out = FieldMatrix::zeros(self.rows, rhs.cols, f);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let idx = i * rhs.cols + j;
                    out.data[idx] = f.add(out.data[idx], f.mul(a, rhs.at(k, j)));
                }
            }
        }
        Ok(out)
    }

    /// Submatrix made of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.rows, cols.len(), self.field);
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.data[r * cols.len() + j] = self.at(r, c);
            }
        }
        out
    }

    pub fn determinant(&self) -> Result<u64> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch("determinant of non-square matrix".into()));
        }
        let f = self.field;
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1u64;
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| a[r * n + col] != 0) else {
                return Ok(0);
            };
            if p != col {
                for j in 0..n {
                    a.swap(p * n + j, col * n + j);
                }
                det = f.neg(det);
            }
            let pivot = a[col * n + col];
            det = f.mul(det, pivot);
            let inv = f.inv(pivot)?;
            for r in col + 1..n {
                let factor = f.mul(a[r * n + col], inv);
                if factor == 0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] = f.sub(a[r * n + j], f.mul(factor, a[col * n + j]));
                }
            }
        }
        Ok(det)
    }
}

impl fmt::Display for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(u64::to_string).collect();
            writeln!(f, "[{}]", line.join(" "))?;
        }
        Ok(())
    }
}

/// Reed-Solomon (Vandermonde) generator: entry `(r, c)` is `(c+1)^r mod q`
/// for `r < P`, `c < M`. Every `P x P` column submatrix is invertible when
/// `q > M`.
pub fn rs_generator(p: usize, m: usize, q: u64) -> Result<FieldMatrix> {
    let field = PrimeField::new(q)?;
    if q <= m as u64 {
        return Err(Error::FieldTooSmall { q, messages: m });
    }
    if p == 0 || p > m {
        return Err(Error::InvalidParams(format!("need 1 <= P <= M, got P={p}, M={m}")));
    }
    let mut g = FieldMatrix::zeros(p, m, field);
    for c in 0..m {
        for r in 0..p {
            g.set(r, c, field.pow(c as u64 + 1, r as u64));
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    #[test]
    fn generator_3x5_over_gf7() {
        let g = rs_generator(3, 5, 7).unwrap();
        assert_eq!(
            g.to_rows(),
            vec![vec![1, 1, 1, 1, 1], vec![1, 2, 3, 4, 5], vec![1, 4, 2, 2, 4]]
        );
    }

    #[test]
    fn single_row_generator_is_all_ones() {
        let g = rs_generator(1, 3, 5).unwrap();
        assert_eq!(g.to_rows(), vec![vec![1, 1, 1]]);
    }

    #[test]
    fn field_must_exceed_message_count() {
        assert_eq!(
            rs_generator(2, 5, 5),
            Err(Error::FieldTooSmall { q: 5, messages: 5 })
        );
        assert_eq!(rs_generator(2, 3, 4), Err(Error::NotPrime(4)));
    }

    /// Independent minor check: 2x2 determinants written out by hand.
    #[test]
    fn every_2x2_minor_of_2x4_is_nonzero() {
        let g = rs_generator(2, 4, 5).unwrap();
        for (a, b) in (0..4).tuple_combinations() {
            let det = (5 + g.at(0, a) * g.at(1, b) % 5 - g.at(0, b) * g.at(1, a) % 5) % 5;
            assert_ne!(det, 0, "columns {a},{b}");
        }
    }

    #[test]
    fn all_maximal_minors_nonzero() {
        for m in 1..=8usize {
            let q = super::super::next_prime_above(m as u64);
            for p in 1..=m {
                let g = rs_generator(p, m, q).unwrap();
                for cols in (0..m).combinations(p) {
                    let det = g.select_columns(&cols).determinant().unwrap();
                    assert_ne!(det, 0, "M={m} P={p} cols={cols:?}");
                }
            }
        }
    }

    #[test]
    fn permuting_generator_columns() {
        // column order 2,1,3 applied to the 2x3 generator
        let g = rs_generator(2, 3, 5).unwrap();
        let gs = g.select_columns(&[1, 0, 2]);
        assert_eq!(gs.to_rows(), vec![vec![1, 1, 1], vec![2, 1, 3]]);
    }

    #[test]
    fn determinant_matches_identity_and_swap() {
        let f = PrimeField::new(7).unwrap();
        assert_eq!(FieldMatrix::identity(3, f).determinant().unwrap(), 1);
        let swap = FieldMatrix::from_rows(f, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(swap.determinant().unwrap(), 6);
    }
}
