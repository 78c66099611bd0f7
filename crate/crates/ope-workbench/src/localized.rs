//! Polynomials localized at pairwise coordinate differences.
//!
//! A `LocalizedPoly` is `numerator / prod (x_i - x_j)^{k_ij}` with `i < j`.
//! Canonical form: the numerator is not divisible by any difference that
//! occurs in the denominator, so equality is structural.

use std::collections::BTreeMap;
use std::fmt;

use num::Zero;

use crate::error::AlgebraError;
use crate::poly::{MultiPoly, Var};
use crate::rational::{rat, Rational};

pub type DiffKey = (u8, u8);

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LocalizedPoly {
    num: MultiPoly,
    /// (i, j) with i < j, meaning `(x_i - x_j)^k` in the denominator.
    den: BTreeMap<DiffKey, u32>,
}

impl LocalizedPoly {
    pub fn from_poly(num: MultiPoly) -> Self {
        LocalizedPoly {
            num,
            den: BTreeMap::new(),
        }
    }

    pub fn zero(vars: &[Var]) -> Self {
        Self::from_poly(MultiPoly::zero(vars))
    }

    pub fn one(vars: &[Var]) -> Self {
        Self::from_poly(MultiPoly::one(vars))
    }

    pub fn constant(vars: &[Var], c: Rational) -> Self {
        Self::from_poly(MultiPoly::constant(vars, c))
    }

    /// `num / prod (x_i - x_j)^{k}`; orientation is normalized to i < j with
    /// the sign absorbed into the numerator.
    pub fn new(num: MultiPoly, den: &[(u8, u8, u32)]) -> Self {
        let mut n = num;
        let mut d: BTreeMap<DiffKey, u32> = BTreeMap::new();
        for &(i, j, k) in den {
            if k == 0 {
                continue;
            }
            assert_ne!(i, j, "difference of a variable with itself");
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if i > j && k % 2 == 1 {
                n = n.neg();
            }
            *d.entry((a, b)).or_insert(0) += k;
        }
        let mut out = LocalizedPoly { num: n, den: d };
        out.reduce();
        out
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        let keys: Vec<DiffKey> = self.den.keys().cloned().collect();
        for (i, j) in keys {
            while self.den.get(&(i, j)).copied().unwrap_or(0) > 0 {
                match self.num.div_by_coord_diff(i, j) {
                    Some(q) => {
                        self.num = q;
                        let k = self.den.get_mut(&(i, j)).unwrap();
                        *k -= 1;
                        if *k == 0 {
                            self.den.remove(&(i, j));
                        }
                    }
                    None => break,
                }
            }
        }
    }

    pub fn numerator(&self) -> &MultiPoly {
        &self.num
    }

    pub fn denominator_exponents(&self) -> &BTreeMap<DiffKey, u32> {
        &self.den
    }

    pub fn vars(&self) -> &[Var] {
        self.num.vars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    fn den_poly(vars: &[Var], den: &BTreeMap<DiffKey, u32>) -> MultiPoly {
        let mut p = MultiPoly::one(vars);
        for (&(i, j), &k) in den {
            p = p.mul(&MultiPoly::coord_diff(vars, i, j).pow(k));
        }
        p
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        if self.vars() != other.vars() {
            return Err(AlgebraError::VariableMismatch);
        }
        let vars = self.vars().to_vec();
        // common denominator: max exponent per pair
        let mut den: BTreeMap<DiffKey, u32> = self.den.clone();
        for (k, v) in &other.den {
            let e = den.entry(*k).or_insert(0);
            *e = (*e).max(*v);
        }
        let scale = |p: &LocalizedPoly| -> MultiPoly {
            let mut missing: BTreeMap<DiffKey, u32> = BTreeMap::new();
            for (k, v) in &den {
                let have = p.den.get(k).copied().unwrap_or(0);
                if *v > have {
                    missing.insert(*k, v - have);
                }
            }
            p.num.mul(&Self::den_poly(&vars, &missing))
        };
        let num = scale(self).add(&scale(other));
        let mut out = LocalizedPoly { num, den };
        out.reduce();
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("variable lists must match")
    }

    pub fn neg(&self) -> Self {
        LocalizedPoly {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.vars());
        }
        LocalizedPoly {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        if self.vars() != other.vars() {
            return Err(AlgebraError::VariableMismatch);
        }
        let num = self.num.mul(&other.num);
        let mut den = self.den.clone();
        for (k, v) in &other.den {
            *den.entry(*k).or_insert(0) += v;
        }
        let mut out = LocalizedPoly { num, den };
        out.reduce();
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("variable lists must match")
    }

    /// Multiply by `(x_i - x_j)^e` with `e` of either sign (i < j required).
    pub fn mul_diff_power(&self, i: u8, j: u8, e: i64) -> Self {
        assert!(i < j);
        if self.is_zero() || e == 0 {
            return self.clone();
        }
        if e > 0 {
            let p = MultiPoly::coord_diff(self.vars(), i, j).pow(e as u32);
            self.mul(&Self::from_poly(p))
        } else {
            let mut den = self.den.clone();
            *den.entry((i, j)).or_insert(0) += (-e) as u32;
            let mut out = LocalizedPoly {
                num: self.num.clone(),
                den,
            };
            out.reduce();
            out
        }
    }

    /// Clear the denominator: returns the numerator after multiplying by the
    /// minimal monomial in differences, together with the exponents used.
    pub fn clear_denominators(&self) -> (MultiPoly, BTreeMap<DiffKey, u32>) {
        (self.num.clone(), self.den.clone())
    }

    /// Invert, if the element is a unit given that the differences in
    /// `invertible` may be inverted: i.e. `c * prod (x_i - x_j)^{a_ij}`.
    pub fn try_invert(&self, invertible: &[DiffKey]) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::NotInvertible("zero element".into()));
        }
        // peel invertible difference factors off the numerator
        let mut core = self.num.clone();
        let mut peeled: BTreeMap<DiffKey, u32> = BTreeMap::new();
        let mut progress = true;
        while progress {
            progress = false;
            for &(i, j) in invertible {
                if let Some(q) = core.div_by_coord_diff(i, j) {
                    core = q;
                    *peeled.entry((i, j)).or_insert(0) += 1;
                    progress = true;
                }
            }
        }
        let c = core.as_constant().ok_or_else(|| {
            AlgebraError::NotInvertible(format!("numerator {} is not a unit", self.num))
        })?;
        if c.is_zero() {
            return Err(AlgebraError::NotInvertible("zero element".into()));
        }
        // inverse = den_poly / (c * peeled)
        let vars = self.vars().to_vec();
        let num = Self::den_poly(&vars, &self.den).scale(&(rat(1) / c));
        let mut out = LocalizedPoly { num, den: peeled };
        out.reduce();
        Ok(out)
    }

    pub fn embed(&self, vars: &[Var]) -> Self {
        LocalizedPoly {
            num: self.num.embed(vars),
            den: self.den.clone(),
        }
    }
}

impl fmt::Display for LocalizedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_empty() {
            return write!(f, "{}", self.num);
        }
        write!(f, "({})", self.num)?;
        for (&(i, j), &k) in &self.den {
            write!(f, "/(x{i}-x{j})")?;
            if k > 1 {
                write!(f, "^{k}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XYZ: &[Var] = &[Var::X(1), Var::X(2), Var::X(3)];

    fn diff(i: u8, j: u8) -> MultiPoly {
        MultiPoly::coord_diff(XYZ, i, j)
    }

    #[test]
    fn cancellation() {
        // (x-y)^{-1} * (x-y) = 1
        let inv = LocalizedPoly::new(MultiPoly::one(XYZ), &[(1, 2, 1)]);
        let d = LocalizedPoly::from_poly(diff(1, 2));
        assert_eq!(inv.mul(&d), LocalizedPoly::one(XYZ));
    }

    #[test]
    fn exponent_addition() {
        let inv = LocalizedPoly::new(MultiPoly::one(XYZ), &[(1, 2, 1)]);
        let sq = inv.mul(&inv);
        assert_eq!(sq.denominator_exponents().get(&(1, 2)), Some(&2));
        assert_eq!(sq.numerator(), &MultiPoly::one(XYZ));
    }

    #[test]
    fn cross_cancellation() {
        // ((x-y)/(y-z)) * ((y-z)/(x-y)) = 1
        let a = LocalizedPoly::new(diff(1, 2), &[(2, 3, 1)]);
        let b = LocalizedPoly::new(diff(2, 3), &[(1, 2, 1)]);
        assert_eq!(a.mul(&b), LocalizedPoly::one(XYZ));
    }

    #[test]
    fn orientation_absorbs_sign() {
        // 1/(x2 - x1) = -1/(x1 - x2)
        let p = LocalizedPoly::new(MultiPoly::one(XYZ), &[(2, 1, 1)]);
        let q = LocalizedPoly::new(MultiPoly::one(XYZ).neg(), &[(1, 2, 1)]);
        assert_eq!(p, q);
    }

    #[test]
    fn clear_denominators_cases() {
        let inv2 = LocalizedPoly::new(MultiPoly::one(XYZ), &[(1, 2, 2)]);
        let (n, e) = inv2.clear_denominators();
        assert_eq!(n, MultiPoly::one(XYZ));
        assert_eq!(e.get(&(1, 2)), Some(&2));

        let x = MultiPoly::var(XYZ, Var::X(1));
        let p = LocalizedPoly::new(x.clone(), &[(1, 2, 1)]);
        let (n, e) = p.clear_denominators();
        assert_eq!(n, x);
        assert_eq!(e.get(&(1, 2)), Some(&1));

        let poly = LocalizedPoly::from_poly(diff(1, 3));
        let (n, e) = poly.clear_denominators();
        assert_eq!(n, diff(1, 3));
        assert!(e.is_empty());
    }

    #[test]
    fn canonical_reduction() {
        // (x-y)^2 / (x-y) reduces to (x-y)
        let p = LocalizedPoly::new(diff(1, 2).pow(2), &[(1, 2, 1)]);
        assert!(p.is_polynomial());
        assert_eq!(p.numerator(), &diff(1, 2));
    }

    #[test]
    fn unit_inversion() {
        // (x1-x2)^2/(x2-x3) is a unit when both pairs are invertible
        let u = LocalizedPoly::new(diff(1, 2).pow(2).scale(&rat(3)), &[(2, 3, 1)]);
        let inv = u.try_invert(&[(1, 2), (2, 3)]).unwrap();
        assert_eq!(u.mul(&inv), LocalizedPoly::one(XYZ));
        // x1 is not a unit
        let x = LocalizedPoly::from_poly(MultiPoly::var(XYZ, Var::X(1)));
        assert!(x.try_invert(&[(1, 2)]).is_err());
        // (x1-x3) is not a unit if only (1,2) may be inverted
        let d = LocalizedPoly::from_poly(diff(1, 3));
        assert!(d.try_invert(&[(1, 2)]).is_err());
    }
}
