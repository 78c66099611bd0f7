//! Sparse multivariate polynomials over the rationals.
//!
//! A `MultiPoly` carries its ordered variable list explicitly; operations on
//! mismatched variable lists are structural errors. Canonical form: no zero
//! coefficients are stored, so equality is structural comparison.

use std::collections::BTreeMap;
use std::fmt;

use num::Zero;

use crate::error::AlgebraError;
use crate::rational::{factorial, rat, Rational};

/// A symbol with a fixed global order: coordinates first, then chart series
/// slots, then the formal parameters of the lambda calculus.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Var {
    /// Coordinate `x_i` on an affine space.
    X(u8),
    /// Auxiliary slot for the `level`-th series variable of a chart tower.
    D(u8),
    Lambda,
    Mu,
    T,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{i}"),
            Var::D(i) => write!(f, "d{i}"),
            Var::Lambda => write!(f, "λ"),
            Var::Mu => write!(f, "μ"),
            Var::T => write!(f, "T"),
        }
    }
}

/// Sparse polynomial: exponent vector -> nonzero rational coefficient.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiPoly {
    vars: Vec<Var>,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl MultiPoly {
    pub fn zero(vars: &[Var]) -> Self {
        MultiPoly {
            vars: vars.to_vec(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &[Var], c: Rational) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; vars.len()], c);
        }
        p
    }

    pub fn one(vars: &[Var]) -> Self {
        Self::constant(vars, rat(1))
    }

    pub fn var(vars: &[Var], v: Var) -> Self {
        Self::monomial(vars, &[(v, 1)], rat(1))
    }

    /// `c * prod v_i^{e_i}`. Panics if a variable is absent from `vars`.
    pub fn monomial(vars: &[Var], pows: &[(Var, u32)], c: Rational) -> Self {
        let mut p = Self::zero(vars);
        if c.is_zero() {
            return p;
        }
        let mut exps = vec![0u32; vars.len()];
        for (v, e) in pows {
            let idx = vars
                .iter()
                .position(|w| w == v)
                .unwrap_or_else(|| panic!("variable {v} not in ambient list"));
            exps[idx] += e;
        }
        p.terms.insert(exps, c);
        p
    }

    /// The difference `x_i - x_j` as a polynomial.
    pub fn coord_diff(vars: &[Var], i: u8, j: u8) -> Self {
        let a = Self::var(vars, Var::X(i));
        let b = Self::var(vars, Var::X(j));
        a.sub(&b)
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    /// The constant term.
    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&vec![0; self.vars.len()])
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// As a constant, if the polynomial is one.
    pub fn as_constant(&self) -> Option<Rational> {
        if self.is_constant() {
            Some(self.constant_term())
        } else {
            None
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn insert_term(&mut self, exps: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        if self.vars != other.vars {
            return Err(AlgebraError::VariableMismatch);
        }
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("variable lists must match")
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(&self.vars);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = v.clone() * c.clone();
        }
        out
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        if self.vars != other.vars {
            return Err(AlgebraError::VariableMismatch);
        }
        let mut out = Self::zero(&self.vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert_term(exps, ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("variable lists must match")
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one(&self.vars);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn degree_in(&self, v: Var) -> Option<u32> {
        let idx = self.vars.iter().position(|w| *w == v)?;
        self.terms.keys().map(|e| e[idx]).max()
    }

    /// Coefficient of `v^k`, as a polynomial in the same ambient list with the
    /// `v`-exponent zeroed out.
    pub fn coeff_of(&self, v: Var, k: u32) -> Self {
        let idx = match self.vars.iter().position(|w| *w == v) {
            Some(i) => i,
            None => {
                return if k == 0 {
                    self.clone()
                } else {
                    Self::zero(&self.vars)
                }
            }
        };
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            if e[idx] == k {
                let mut e2 = e.clone();
                e2[idx] = 0;
                out.insert_term(e2, c.clone());
            }
        }
        out
    }

    /// Substitute `v := repl` (same ambient variable list).
    pub fn substitute(&self, v: Var, repl: &Self) -> Self {
        assert_eq!(self.vars, repl.vars, "substitution needs matching ambient");
        let idx = match self.vars.iter().position(|w| *w == v) {
            Some(i) => i,
            None => return self.clone(),
        };
        let max_deg = self.terms.keys().map(|e| e[idx]).max().unwrap_or(0);
        let mut powers: Vec<MultiPoly> = Vec::with_capacity(max_deg as usize + 1);
        powers.push(Self::one(&self.vars));
        for k in 1..=max_deg {
            powers.push(powers[(k - 1) as usize].mul(repl));
        }
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let k = e2[idx];
            e2[idx] = 0;
            let mut base = Self::zero(&self.vars);
            base.insert_term(e2, c.clone());
            out = out.add(&base.mul(&powers[k as usize]));
        }
        out
    }

    /// Reinterpret the polynomial over a superset variable list.
    pub fn embed(&self, vars: &[Var]) -> Self {
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| {
                vars.iter()
                    .position(|w| w == v)
                    .expect("target list must contain all variables")
            })
            .collect();
        let mut out = Self::zero(vars);
        for (e, c) in &self.terms {
            let mut e2 = vec![0u32; vars.len()];
            for (i, k) in e.iter().enumerate() {
                e2[map[i]] = *k;
            }
            out.insert_term(e2, c.clone());
        }
        out
    }

    /// Restrict to a variable sublist; fails if a dropped variable occurs.
    pub fn restrict(&self, vars: &[Var]) -> Result<Self, AlgebraError> {
        let mut map: Vec<Option<usize>> = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            map.push(vars.iter().position(|w| w == v));
        }
        let mut out = Self::zero(vars);
        for (e, c) in &self.terms {
            let mut e2 = vec![0u32; vars.len()];
            for (i, k) in e.iter().enumerate() {
                if *k > 0 {
                    match map[i] {
                        Some(j) => e2[j] = *k,
                        None => return Err(AlgebraError::VariableMismatch),
                    }
                }
            }
            out.insert_term(e2, c.clone());
        }
        Ok(out)
    }

    /// Exact division by `x_i - x_j`; `None` when not divisible.
    ///
    /// Uses the telescoping identity `x_i^k - x_j^k = (x_i - x_j) * sum`, after
    /// checking that the polynomial vanishes on the hyperplane `x_i = x_j`.
    pub fn div_by_coord_diff(&self, i: u8, j: u8) -> Option<Self> {
        let xi = Var::X(i);
        let xj = Var::X(j);
        let on_diag = self.substitute(xi, &Self::var(&self.vars, xj));
        if !on_diag.is_zero() {
            return None;
        }
        // p = sum_k c_k(rest) x_i^k with p(x_i = x_j) = 0, so
        // p = sum_k c_k (x_i^k - x_j^k) and each x_i^k - x_j^k divides exactly.
        let idx = self.vars.iter().position(|w| *w == xi)?;
        let jdx = self.vars.iter().position(|w| *w == xj)?;
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let k = e[idx];
            // telescoping quotient of x_i^k - x_j^k: sum_{t=0}^{k-1} x_i^t x_j^{k-1-t}
            for t in 0..k {
                let mut e2 = e.clone();
                e2[idx] = t;
                e2[jdx] += k - 1 - t;
                out.insert_term(e2, c.clone());
            }
        }
        Some(out)
    }

    /// The polynomial `C(v + shift, j)` in the variable `v`, falling-factorial
    /// convention.
    pub fn binom_poly(vars: &[Var], v: Var, shift: i64, j: u32) -> Self {
        let mut out = Self::one(vars);
        let vp = Self::var(vars, v);
        for t in 0..j as i64 {
            let lin = vp.add(&Self::constant(vars, rat(shift - t)));
            out = out.mul(&lin);
        }
        out.scale(&(rat(1) / factorial(j)))
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let mut mon = String::new();
            for (i, k) in e.iter().enumerate() {
                if *k > 0 {
                    mon.push_str(&format!("{}", self.vars[i]));
                    if *k > 1 {
                        mon.push_str(&format!("^{k}"));
                    }
                    mon.push('*');
                }
            }
            mon.pop();
            let neg = c < &Rational::zero();
            let mag = if neg { -c.clone() } else { c.clone() };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if mon.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == rat(1) {
                write!(f, "{mon}")?;
            } else {
                write!(f, "{mag}*{mon}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XY: &[Var] = &[Var::X(1), Var::X(2)];

    fn x() -> MultiPoly {
        MultiPoly::var(XY, Var::X(1))
    }
    fn y() -> MultiPoly {
        MultiPoly::var(XY, Var::X(2))
    }

    #[test]
    fn additive_inverse_cancels() {
        let d = x().sub(&y());
        let e = y().sub(&x());
        assert!(d.add(&e).is_zero());
    }

    #[test]
    fn like_terms_combine() {
        let p = x().mul(&x());
        let q = p.scale(&rat(2));
        assert_eq!(p.add(&q), p.scale(&rat(3)));
    }

    #[test]
    fn disjoint_terms_coexist() {
        let vars = &[Var::Lambda, Var::T];
        let l = MultiPoly::var(vars, Var::Lambda);
        let t = MultiPoly::var(vars, Var::T);
        let sum = l.mul(&t).add(&l.add(&t));
        assert_eq!(sum.num_terms(), 3);
    }

    #[test]
    fn variable_mismatch_is_error() {
        let p = MultiPoly::var(&[Var::X(1)], Var::X(1));
        let q = MultiPoly::var(XY, Var::X(2));
        assert!(p.try_add(&q).is_err());
        assert!(p.try_mul(&q).is_err());
    }

    #[test]
    fn substitution() {
        // (x^2 + x) with x := y+1
        let p = x().mul(&x()).add(&x());
        let repl = y().add(&MultiPoly::one(XY));
        let q = p.substitute(Var::X(1), &repl);
        // (y+1)^2 + (y+1) = y^2 + 3y + 2
        let expect = y()
            .mul(&y())
            .add(&y().scale(&rat(3)))
            .add(&MultiPoly::constant(XY, rat(2)));
        assert_eq!(q, expect);
    }

    #[test]
    fn exact_division_by_difference() {
        // x^3 - y^3 = (x-y)(x^2+xy+y^2)
        let p = x().pow(3).sub(&y().pow(3));
        let q = p.div_by_coord_diff(1, 2).unwrap();
        let expect = x()
            .pow(2)
            .add(&x().mul(&y()))
            .add(&y().pow(2));
        assert_eq!(q, expect);
        assert!(x().add(&y()).div_by_coord_diff(1, 2).is_none());
    }

    #[test]
    fn binom_poly_matches_scalar() {
        use crate::rational::binom;
        let vars = &[Var::Lambda];
        let b = MultiPoly::binom_poly(vars, Var::Lambda, 3, 2);
        for p in -5i64..5 {
            let val = b
                .substitute(Var::Lambda, &MultiPoly::constant(vars, rat(p)))
                .constant_term();
            assert_eq!(val, binom(p + 3, 2));
        }
    }
}
