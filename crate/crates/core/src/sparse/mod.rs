//! Sparse storage and solvers for complex symmetric systems.

mod cocg;
mod multifrontal;

pub use cocg::{cocg, CocgReport};
pub use multifrontal::{FactorStats, Multifrontal};

use num_complex::Complex64 as C64;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    /// Sums duplicate entries. The summation order follows the triplet order,
    /// so identical inputs give bit-identical matrices.
    pub fn from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, C64)]) -> Self {
        let mut count = vec![0usize; nrows + 1];
        for &(r, c, _) in trip {
            assert!(r < nrows && c < ncols, "triplet out of range");
            count[r + 1] += 1;
        }
        for i in 0..nrows {
            count[i + 1] += count[i];
        }
        let mut next = count.clone();
        let mut cols = vec![0usize; trip.len()];
        let mut vals = vec![C64::new(0.0, 0.0); trip.len()];
        for &(r, c, v) in trip {
            let p = next[r];
            cols[p] = c;
            vals[p] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut out = Vec::with_capacity(trip.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..nrows {
            let (a, b) = (count[r], count[r + 1]);
            order.clear();
            order.extend(a..b);
            order.sort_by_key(|&p| cols[p]);
            let mut last = usize::MAX;
            for &p in &order {
                if cols[p] == last {
                    *out.last_mut().unwrap() += vals[p];
                } else {
                    col_idx.push(cols[p]);
                    out.push(vals[p]);
                    last = cols[p];
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            vals: out,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[C64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.vals[a..b])
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn vals(&self) -> &[C64] {
        &self.vals
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(p) => vals[p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut acc = C64::new(0.0, 0.0);
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] = acc;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// `y += alpha A x`.
    pub fn matvec_acc(&self, x: &[C64], alpha: C64, y: &mut [C64]) {
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut acc = C64::new(0.0, 0.0);
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] += alpha * acc;
        }
    }

    /// Submatrix picking rows `rows` and the columns flagged in `col_map`
    /// (`col_map[c] = Some(new_c)`).
    pub fn extract(&self, rows: &[usize], col_map: &[Option<usize>], ncols: usize) -> Csr {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut tmp: Vec<(usize, C64)> = Vec::new();
        for &r in rows {
            let (cols, vs) = self.row(r);
            tmp.clear();
            for (c, v) in cols.iter().zip(vs) {
                if let Some(nc) = col_map[*c] {
                    tmp.push((nc, *v));
                }
            }
            tmp.sort_by_key(|t| t.0);
            for (c, v) in &tmp {
                col_idx.push(*c);
                vals.push(*v);
            }
            row_ptr.push(col_idx.len());
        }
        Csr {
            nrows: rows.len(),
            ncols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// `self + alpha * other` (same shape).
    pub fn add_scaled(&self, other: &Csr, alpha: C64) -> Csr {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            let (c1, v1) = self.row(r);
            for (c, v) in c1.iter().zip(v1) {
                trip.push((r, *c, *v));
            }
            let (c2, v2) = other.row(r);
            for (c, v) in c2.iter().zip(v2) {
                trip.push((r, *c, alpha * v));
            }
        }
        Csr::from_triplets(self.nrows, self.ncols, &trip)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.nrows.min(self.ncols))
            .map(|r| self.get(r, r))
            .collect()
    }

    /// Induced 1-norm (max column sum of moduli).
    pub fn norm_one(&self) -> f64 {
        let mut col = vec![0.0f64; self.ncols];
        for (c, v) in self.col_idx.iter().zip(&self.vals) {
            col[*c] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(*c, r)).norm());
            }
        }
        worst
    }
}

pub(crate) fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let t = [
            (0, 1, C64::new(1.0, 0.0)),
            (0, 1, C64::new(2.0, 1.0)),
            (1, 0, C64::new(0.5, 0.0)),
            (0, 0, C64::new(4.0, 0.0)),
        ];
        let a = Csr::from_triplets(2, 2, &t);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), C64::new(3.0, 1.0));
        assert_eq!(a.row(0).0, &[0, 1]);
        let y = a.mul_vec(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        assert_eq!(y[0], C64::new(4.0, 0.0) + C64::new(3.0, 1.0) * C64::new(0.0, 1.0));
    }
}
