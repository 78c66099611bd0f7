//! Dense exact linear algebra over the rationals: reduced row echelon form,
//! rank, and null space. Everything here is deterministic.

use crate::rational::{rat, Rational};
use num::Zero;

#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rational>,
}

impl QMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![rat(0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, rat(1));
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: Rational) {
        let cur = self.get(r, c).clone();
        self.set(r, c, cur + v);
    }

    /// In-place reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            let pivot_row = (row..self.rows).find(|&r| !self.get(r, col).is_zero());
            let Some(p) = pivot_row else { continue };
            // swap rows p and row
            for c in 0..self.cols {
                let a = self.get(row, c).clone();
                let b = self.get(p, c).clone();
                self.set(row, c, b);
                self.set(p, c, a);
            }
            let inv = rat(1) / self.get(row, col).clone();
            for c in 0..self.cols {
                let v = self.get(row, c).clone() * inv.clone();
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r != row && !self.get(r, col).is_zero() {
                    let f = self.get(r, col).clone();
                    for c in 0..self.cols {
                        let v = self.get(r, c).clone() - f.clone() * self.get(row, c).clone();
                        self.set(r, c, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the null space, as column vectors.
    pub fn null_space(&self) -> Vec<Vec<Rational>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let mut free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.sort();
        let mut basis = Vec::new();
        for &fc in &free {
            let mut v = vec![rat(0); self.cols];
            v[fc] = rat(1);
            for (ri, &pc) in pivots.iter().enumerate() {
                v[pc] = -m.get(ri, fc).clone();
            }
            basis.push(v);
        }
        basis
    }
}

/// Sparse column echelon over an ordered row index: certifies that the given
/// columns are linearly independent by reducing each column at its least row
/// key against the pivots found so far. A column that empties out is a
/// dependency; a column whose lead climbs past `cap` cannot be certified
/// within the window.
pub enum EchelonOutcome {
    Independent,
    Dependent,
    WindowExhausted,
}

pub fn sparse_columns_independent<K: Ord + Clone>(
    columns: Vec<BTreeMap<K, Rational>>,
    cap: &K,
) -> EchelonOutcome {
    use std::collections::BTreeMap as Map;
    let mut pivots: Map<K, Map<K, Rational>> = Map::new();
    for mut col in columns {
        loop {
            col.retain(|_, v| !v.is_zero());
            let Some((lead, lead_val)) = col.iter().next().map(|(k, v)| (k.clone(), v.clone()))
            else {
                return EchelonOutcome::Dependent;
            };
            if &lead > cap {
                return EchelonOutcome::WindowExhausted;
            }
            match pivots.get(&lead) {
                None => {
                    // normalize and register
                    let inv = rat(1) / lead_val;
                    for v in col.values_mut() {
                        *v = v.clone() * inv.clone();
                    }
                    pivots.insert(lead, col);
                    break;
                }
                Some(p) => {
                    let f = lead_val;
                    for (k, v) in p.clone() {
                        let cur = col.remove(&k).unwrap_or_else(Rational::zero);
                        let nv = cur - f.clone() * v;
                        if !nv.is_zero() {
                            col.insert(k, nv);
                        }
                    }
                }
            }
        }
    }
    EchelonOutcome::Independent
}

use std::collections::BTreeMap;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_null_space() {
        // [[1, 2, 3], [2, 4, 6]]: rank 1, nullity 2
        let mut m = QMatrix::zero(2, 3);
        m.set(0, 0, rat(1));
        m.set(0, 1, rat(2));
        m.set(0, 2, rat(3));
        m.set(1, 0, rat(2));
        m.set(1, 1, rat(4));
        m.set(1, 2, rat(6));
        assert_eq!(m.rank(), 1);
        let ns = m.null_space();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let dot = v[0].clone() * rat(1) + v[1].clone() * rat(2) + v[2].clone() * rat(3);
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn identity_has_trivial_kernel() {
        let m = QMatrix::identity(4);
        assert_eq!(m.rank(), 4);
        assert!(m.null_space().is_empty());
    }

    #[test]
    fn sparse_echelon_detects_cancelling_leads() {
        // columns (1, 1) and (-1, 1) at rows 0, 1: leads at row 0 cancel but
        // the columns are independent through row 1
        let col = |v: &[(i64, i64)]| -> BTreeMap<i64, Rational> {
            v.iter().map(|&(k, c)| (k, rat(c))).collect()
        };
        let cols = vec![col(&[(0, 1), (1, 1)]), col(&[(0, -1), (1, 1)])];
        assert!(matches!(
            sparse_columns_independent(cols, &10),
            EchelonOutcome::Independent
        ));
        let cols = vec![col(&[(0, 1), (1, 1)]), col(&[(0, 2), (1, 2)])];
        assert!(matches!(
            sparse_columns_independent(cols, &10),
            EchelonOutcome::Dependent
        ));
        let cols = vec![col(&[(0, 1)]), col(&[(0, 2), (20, 1)])];
        assert!(matches!(
            sparse_columns_independent(cols, &10),
            EchelonOutcome::WindowExhausted
        ));
    }
}
