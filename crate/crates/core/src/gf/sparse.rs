use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::element::PrimeField;
use crate::error::{Error, Result};

/// Sparse linear system over GF(q), solved by Gauss-Jordan elimination with
/// Markowitz-style pivoting (shortest row first, rarest column within it).
///
/// Query tables produce a few thousand equations with a handful of terms
/// each; a dense solve would be quadratic in the unknown count.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    field: PrimeField,
    num_vars: usize,
    rows: Vec<Vec<(usize, u64)>>,
    rhs: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSolution {
    /// `Some(v)` for every variable fixed by the system.
    pub values: Vec<Option<u64>>,
    pub rank: usize,
}

impl SparseSolution {
    pub fn determined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

impl SparseSystem {
    pub fn new(field: PrimeField, num_vars: usize) -> Self {
        Self {
            field,
            num_vars,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `sum coeff * x_var = rhs`; repeated variables are merged.
    pub fn push_row<I>(&mut self, terms: I, rhs: u64) -> Result<()>
    where
        I: IntoIterator<Item = (usize, u64)>,
    {
        let f = self.field;
        let mut row: Vec<(usize, u64)> = Vec::new();
        for (var, c) in terms {
            if var >= self.num_vars {
                return Err(Error::IndexOutOfRange(format!(
                    "variable {var} of {}",
                    self.num_vars
                )));
            }
            row.push((var, f.reduce(c)));
        }
        row.sort_unstable_by_key(|t| t.0);
        let mut merged: Vec<(usize, u64)> = Vec::with_capacity(row.len());
        for (var, c) in row {
            match merged.last_mut() {
                Some(last) if last.0 == var => last.1 = f.add(last.1, c),
                _ => merged.push((var, c)),
            }
        }
        merged.retain(|t| t.1 != 0);
        self.rows.push(merged);
        self.rhs.push(f.reduce(rhs));
        Ok(())
    }

    pub fn solve(mut self) -> Result<SparseSolution> {
        let f = self.field;
        let nrows = self.rows.len();
        let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.num_vars];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, _) in row {
                col_rows[c].insert(r);
            }
        }
        let mut done = vec![false; nrows];
        let mut pivot_of_row: Vec<Option<usize>> = vec![None; nrows];
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> = self
            .rows
            .iter()
            .enumerate()
            .map(|(r, row)| Reverse((row.len(), r)))
            .collect();

        while let Some(Reverse((len, r))) = heap.pop() {
            if done[r] {
                continue;
            }
            if len != self.rows[r].len() {
                heap.push(Reverse((self.rows[r].len(), r)));
                continue;
            }
            done[r] = true;
            if self.rows[r].is_empty() {
                if self.rhs[r] != 0 {
                    return Err(Error::Inconsistent);
                }
                continue;
            }
            let pc = self.rows[r]
                .iter()
                .map(|&(c, _)| c)
                .min_by_key(|&c| (col_rows[c].len(), c))
                .expect("nonempty row");
            let lead = self.rows[r].iter().find(|t| t.0 == pc).unwrap().1;
            let inv = f.inv(lead)?;
            for t in self.rows[r].iter_mut() {
                t.1 = f.mul(t.1, inv);
            }
            self.rhs[r] = f.mul(self.rhs[r], inv);
            pivot_of_row[r] = Some(pc);

            let pivot_row = std::mem::take(&mut self.rows[r]);
            let targets: Vec<usize> = col_rows[pc].iter().copied().filter(|&i| i != r).collect();
            for i in targets {
                let factor = self.rows[i].iter().find(|t| t.0 == pc).map(|t| t.1).unwrap_or(0);
                if factor == 0 {
                    continue;
                }
                let old = std::mem::take(&mut self.rows[i]);
                let mut merged = Vec::with_capacity(old.len() + pivot_row.len());
                let (mut a, mut b) = (0, 0);
                while a < old.len() || b < pivot_row.len() {
                    let take_old = b == pivot_row.len()
                        || (a < old.len() && old[a].0 < pivot_row[b].0);
                    let take_piv = a == old.len()
                        || (b < pivot_row.len() && pivot_row[b].0 < old[a].0);
                    if take_old {
                        merged.push(old[a]);
                        a += 1;
                    } else if take_piv {
                        let (c, v) = pivot_row[b];
                        merged.push((c, f.neg(f.mul(factor, v))));
                        col_rows[c].insert(i);
                        b += 1;
                    } else {
                        let (c, v) = old[a];
                        let nv = f.sub(v, f.mul(factor, pivot_row[b].1));
                        if nv == 0 {
                            col_rows[c].remove(&i);
                        } else {
                            merged.push((c, nv));
                        }
                        a += 1;
                        b += 1;
                    }
                }
                self.rows[i] = merged;
                self.rhs[i] = f.sub(self.rhs[i], f.mul(factor, self.rhs[r]));
                if !done[i] {
                    heap.push(Reverse((self.rows[i].len(), i)));
                } else if self.rows[i].is_empty() && self.rhs[i] != 0 {
                    return Err(Error::Inconsistent);
                }
            }
            self.rows[r] = pivot_row;
        }

        let mut values = vec![None; self.num_vars];
        let mut rank = 0;
        for r in 0..nrows {
            if let Some(c) = pivot_of_row[r] {
                rank += 1;
                if self.rows[r].len() == 1 {
                    values[c] = Some(self.rhs[r]);
                }
            }
        }
        Ok(SparseSolution { values, rank })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{solve_linear, FieldMatrix};
    use proptest::prelude::*;

    #[test]
    fn chain_of_sums() {
        // x0 = 3, x0 + x1 = 5, x1 + x2 = 6 over GF(7)
        let f = PrimeField::new(7).unwrap();
        let mut s = SparseSystem::new(f, 3);
        s.push_row([(0, 1)], 3).unwrap();
        s.push_row([(0, 1), (1, 1)], 5).unwrap();
        s.push_row([(1, 1), (2, 1)], 6).unwrap();
        let sol = s.solve().unwrap();
        assert_eq!(sol.values, vec![Some(3), Some(2), Some(4)]);
        assert_eq!(sol.rank, 3);
    }

    #[test]
    fn sum_alone_is_not_determined() {
        let f = PrimeField::new(2).unwrap();
        let mut s = SparseSystem::new(f, 3);
        s.push_row([(1, 1), (2, 1)], 1).unwrap();
        s.push_row([(0, 1), (1, 1), (2, 1)], 0).unwrap();
        let sol = s.solve().unwrap();
        assert_eq!(sol.values, vec![Some(1), None, None]);
    }

    #[test]
    fn inconsistent_rows() {
        let f = PrimeField::new(5).unwrap();
        let mut s = SparseSystem::new(f, 2);
        s.push_row([(0, 1), (1, 1)], 1).unwrap();
        s.push_row([(0, 2), (1, 2)], 3).unwrap();
        assert_eq!(s.solve(), Err(Error::Inconsistent));
    }

    #[test]
    fn duplicate_terms_merge() {
        let f = PrimeField::new(5).unwrap();
        let mut s = SparseSystem::new(f, 1);
        s.push_row([(0, 2), (0, 4)], 2).unwrap();
        assert_eq!(s.solve().unwrap().values, vec![Some(2)]);
    }

    proptest! {
        #[test]
        fn agrees_with_dense_solver(
            q in prop::sample::select(vec![2u64, 3, 5, 11]),
            vars in 1usize..7,
            rows in 1usize..9,
            density in prop::collection::vec((0u64..100, 0u64..4), 64),
            rhs_seed in prop::collection::vec(0u64..100, 9),
        ) {
            let f = PrimeField::new(q).unwrap();
            let dense: Vec<Vec<u64>> = (0..rows)
                .map(|r| (0..vars).map(|c| {
                    let (v, keep) = density[(r * 7 + c) % 64];
                    if keep == 0 { v % q } else { 0 }
                }).collect())
                .collect();
            // consistent right-hand side from a hidden solution
            let hidden: Vec<u64> = (0..vars).map(|c| rhs_seed[c % 9] % q).collect();
            let b: Vec<u64> = dense.iter().map(|row| row.iter().zip(&hidden).map(|(a, x)| a * x).sum::<u64>() % q).collect();
            let dsol = solve_linear(&FieldMatrix::from_rows(f, &dense).unwrap(), &b).unwrap();
            let mut sys = SparseSystem::new(f, vars);
            for (row, &rhs) in dense.iter().zip(&b) {
                sys.push_row(row.iter().enumerate().map(|(c, &v)| (c, v)), rhs).unwrap();
            }
            let ssol = sys.solve().unwrap();
            prop_assert_eq!(ssol.rank, dsol.rank);
            for j in 0..vars {
                prop_assert_eq!(ssol.values[j], dsol.value(j));
                if let Some(v) = ssol.values[j] {
                    prop_assert_eq!(v, hidden[j]);
                }
            }
        }
    }
}
