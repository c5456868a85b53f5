use super::matrix::FieldMatrix;
use crate::error::{Error, Result};

/// Result of Gauss-Jordan elimination on `A x = b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSolution {
    /// One solution, with free variables set to zero.
    pub particular: Vec<u64>,
    /// `determined[j]` is true iff `x_j` takes the same value in every solution.
    pub determined: Vec<bool>,
    pub rank: usize,
    pub pivot_columns: Vec<usize>,
}

impl LinearSolution {
    pub fn value(&self, j: usize) -> Option<u64> {
        self.determined[j].then(|| self.particular[j])
    }

    pub fn is_unique(&self) -> bool {
        self.determined.iter().all(|&d| d)
    }
}

/// Solves `A x = b` over GF(q).
///
/// Columns are scanned left to right and the pivot is the first row (from the
/// current one down) holding a nonzero entry, so pivot reports are stable.
pub fn solve_linear(a: &FieldMatrix, b: &[u64]) -> Result<LinearSolution> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} equations but {} right-hand sides",
            a.rows(),
            b.len()
        )));
    }
    let f = a.field();
    let (rows, cols) = (a.rows(), a.cols());
    let mut m: Vec<Vec<u64>> = a.to_rows();
    let mut rhs: Vec<u64> = b.iter().map(|&v| f.reduce(v)).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, p);
        rhs.swap(r, p);
        let inv = f.inv(m[r][c])?;
        for v in m[r].iter_mut() {
            *v = f.mul(*v, inv);
        }
        rhs[r] = f.mul(rhs[r], inv);
        for i in 0..rows {
            if i == r || m[i][c] == 0 {
                continue;
            }
            let factor = m[i][c];
            for j in 0..cols {
                let t = f.mul(factor, m[r][j]);
                m[i][j] = f.sub(m[i][j], t);
            }
            rhs[i] = f.sub(rhs[i], f.mul(factor, rhs[r]));
        }
        pivots.push(c);
        r += 1;
    }
    if rhs[r..].iter().any(|&v| v != 0) {
        return Err(Error::Inconsistent);
    }
    let mut is_pivot = vec![false; cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let mut particular = vec![0; cols];
    let mut determined = vec![false; cols];
    for (row, &c) in pivots.iter().enumerate() {
        particular[c] = rhs[row];
        determined[c] = (0..cols).all(|j| is_pivot[j] || m[row][j] == 0);
    }
    Ok(LinearSolution {
        particular,
        determined,
        rank: pivots.len(),
        pivot_columns: pivots,
    })
}
