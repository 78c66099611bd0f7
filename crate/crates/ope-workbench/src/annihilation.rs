//! The Lie algebra of modes `Lie R = (R ⊗ C[t,t^{-1}]) / (1⊗∂_t + T⊗1)`.
//!
//! Elements are kept in normal form: only pure generator modes `a_m` appear,
//! with `(T^k a)_m` rewritten through the defining relation
//! `(Ta)_m = -m a_{m-1}`. Binomials with negative upper index use the
//! falling-factorial convention, which is what makes the Witt re-indexing
//! fixture pass.

use std::collections::BTreeMap;
use std::fmt;

use crate::conformal::{GenIdx, LcaElement, SharedPresentation, LMT};
use crate::error::AlgebraError;
use crate::poly::Var;
use crate::rational::{binom, factorial, falling, rat, Rational};

/// Finite combination of modes `a_m`; keys are (generator, mode).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LieRElement {
    pub terms: BTreeMap<(GenIdx, i64), Rational>,
}

impl LieRElement {
    pub fn zero() -> Self {
        LieRElement::default()
    }

    pub fn mode(g: GenIdx, m: i64) -> Self {
        let mut out = Self::zero();
        out.add_term(g, m, rat(1));
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, g: GenIdx, m: i64, c: Rational) {
        if c == rat(0) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((g, m)) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = e.get().clone() + c;
                if s == rat(0) {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((g, m), c) in &other.terms {
            out.add_term(*g, *m, c.clone());
        }
        out
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

    pub fn scale(&self, k: &Rational) -> Self {
        let mut out = Self::zero();
        for ((g, m), c) in &self.terms {
            out.add_term(*g, *m, c.clone() * k.clone());
        }
        out
    }
}

impl fmt::Display for LieRElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((g, m), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}·g{g}[{m}]")?;
        }
        Ok(())
    }
}

/// The mode algebra attached to a presentation.
pub struct ModeAlgebra {
    pub pres: SharedPresentation,
    /// nth-product tables on generator pairs, indexed [a][b][j].
    nth: Vec<Vec<Vec<LcaElement>>>,
}

impl ModeAlgebra {
    pub fn new(pres: &SharedPresentation) -> Self {
        let n = pres.num_generators();
        let mut nth = Vec::with_capacity(n);
        for a in 0..n {
            let mut row = Vec::with_capacity(n);
            for b in 0..n {
                row.push(pres.nth_table(a, b));
            }
            nth.push(row);
        }
        ModeAlgebra {
            pres: pres.clone(),
            nth,
        }
    }

    /// Normal form of `(p(T) a)_m`: `(T^k a)_m = (-1)^k m(m-1)...(m-k+1) a_{m-k}`.
    pub fn normalize(&self, a: &LcaElement, m: i64) -> LieRElement {
        let mut out = LieRElement::zero();
        for (g, p) in &a.coeffs {
            for (exps, c) in p.terms() {
                // coefficient polynomials live in (λ, μ, T); only T may occur
                let k = {
                    let mut k = 0u32;
                    for (i, v) in LMT.iter().enumerate() {
                        match v {
                            Var::T => k = exps[i],
                            _ => assert_eq!(exps[i], 0, "mode coefficients must be T-polynomials"),
                        }
                    }
                    k
                };
                let sign = if k % 2 == 0 { rat(1) } else { rat(-1) };
                let coef = sign * falling(m, k) * c.clone();
                out.add_term(*g, m - k as i64, coef);
            }
        }
        out
    }

    /// `[a_m, b_n] = sum_{j>=0} C(m,j) [a_(j) b]_{m+n-j}`, bilinear, normalized.
    pub fn bracket(&self, u: &LieRElement, v: &LieRElement) -> LieRElement {
        let mut out = LieRElement::zero();
        for ((ga, m), ca) in &u.terms {
            for ((gb, n), cb) in &v.terms {
                let scale = ca.clone() * cb.clone();
                for (j, prod) in self.nth[*ga][*gb].iter().enumerate() {
                    if prod.is_zero() {
                        continue;
                    }
                    let coef = binom(*m, j as u32) * scale.clone();
                    if coef == rat(0) {
                        continue;
                    }
                    let normal = self.normalize(prod, m + n - j as i64);
                    out = out.add(&normal.scale(&coef));
                }
            }
        }
        out
    }

    /// `T(a_m) = -m a_{m-1}`, extended linearly.
    pub fn t_action(&self, u: &LieRElement) -> LieRElement {
        let mut out = LieRElement::zero();
        for ((g, m), c) in &u.terms {
            out.add_term(*g, m - 1, rat(-*m) * c.clone());
        }
        out
    }

    /// Split into (plus part: modes < 0, minus part: modes >= 0).
    pub fn split(&self, u: &LieRElement) -> (LieRElement, LieRElement) {
        let mut plus = LieRElement::zero();
        let mut minus = LieRElement::zero();
        for ((g, m), c) in &u.terms {
            if *m < 0 {
                plus.add_term(*g, *m, c.clone());
            } else {
                minus.add_term(*g, *m, c.clone());
            }
        }
        (plus, minus)
    }

    /// Inverse of the normal form on strictly negative modes:
    /// `a_{-1-k} = (T^k a)_{-1} / k!`.
    fn pull_back(&self, u: &LieRElement) -> Result<LcaElement, AlgebraError> {
        let mut out = LcaElement::zero();
        let t = crate::poly::MultiPoly::var(LMT, Var::T);
        for ((g, m), c) in &u.terms {
            if *m >= 0 {
                return Err(AlgebraError::PullbackFailure(format!(
                    "mode {m} is not in the image of a -> a_{{-1}}"
                )));
            }
            let k = (-1 - m) as u32;
            let coef = c.clone() / factorial(k);
            out = out.add(&LcaElement::with_coeff(*g, t.pow(k).scale(&coef)));
        }
        Ok(out)
    }

    /// The transported Lie bracket on R: `[a_{-1}, b_{-1}]` pulled back
    /// through the isomorphism `a -> a_{-1}`.
    pub fn transported_bracket(
        &self,
        a: &LcaElement,
        b: &LcaElement,
    ) -> Result<LcaElement, AlgebraError> {
        let u = self.normalize(a, -1);
        let v = self.normalize(b, -1);
        let w = self.bracket(&u, &v);
        self.pull_back(&w)
    }

    /// Class of `u` in `Lie R / Lie R_-`, pulled back to R through `a -> a_{-1}`.
    pub fn tangent_quotient(&self, u: &LieRElement) -> LcaElement {
        let (plus, _minus) = self.split(u);
        self.pull_back(&plus)
            .expect("plus part has strictly negative modes")
    }

    /// Jacobi on all generator-mode triples with |m| <= window. Returns the
    /// violating triples with their residuals.
    pub fn jacobi_window_check(&self, window: i64) -> Vec<(String, LieRElement)> {
        let n = self.pres.num_generators();
        let mut failures = Vec::new();
        let mut elements = Vec::new();
        for g in 0..n {
            for m in -window..=window {
                elements.push((g, m));
            }
        }
        for &(g1, m1) in &elements {
            for &(g2, m2) in &elements {
                for &(g3, m3) in &elements {
                    let u = LieRElement::mode(g1, m1);
                    let v = LieRElement::mode(g2, m2);
                    let w = LieRElement::mode(g3, m3);
                    let r = self
                        .bracket(&self.bracket(&u, &v), &w)
                        .add(&self.bracket(&self.bracket(&v, &w), &u))
                        .add(&self.bracket(&self.bracket(&w, &u), &v));
                    if !r.is_zero() {
                        failures.push((
                            format!("jacobi(g{g1}[{m1}],g{g2}[{m2}],g{g3}[{m3}])"),
                            r,
                        ));
                    }
                }
            }
        }
        failures
    }

    /// For the Virasoro presentation: check the Witt re-indexing
    /// `L_{n+1} -> L(n)`, `[L(m), L(n)] = (m-n) L(m+n)`, and `T = ad L(-1)`,
    /// for all |m|, |n| <= window.
    pub fn witt_isomorphism_check(&self, window: i64) -> Result<(), String> {
        if self.pres.num_generators() != 1 {
            return Err("witt check applies to the one-generator presentation".into());
        }
        for m in -window..=window {
            for n in -window..=window {
                // L(m) = L_{m+1}
                let lhs = self.bracket(&LieRElement::mode(0, m + 1), &LieRElement::mode(0, n + 1));
                let expect = LieRElement::mode(0, m + n + 1).scale(&rat(m - n));
                if lhs != expect {
                    return Err(format!(
                        "[L({m}),L({n})] = {lhs}, expected (m-n)L(m+n) = {expect}"
                    ));
                }
            }
        }
        // T = ad L(-1): T(L_m) = [L_0, L_m]
        for m in -window..=window {
            let lhs = self.t_action(&LieRElement::mode(0, m));
            let rhs = self.bracket(&LieRElement::mode(0, 0), &LieRElement::mode(0, m));
            if lhs != rhs {
                return Err(format!("T(L_{m}) = {lhs} but [L(-1), ·] gives {rhs}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{builtin_sl2, builtin_virasoro};
    use crate::poly::MultiPoly;

    fn vir() -> ModeAlgebra {
        ModeAlgebra::new(&builtin_virasoro())
    }

    fn sl2() -> ModeAlgebra {
        ModeAlgebra::new(&builtin_sl2())
    }

    #[test]
    fn normalize_t_powers() {
        let a = vir();
        let l = LcaElement::generator(0);
        let tl = l.apply_t();
        // (TL)_m = -m L_{m-1}
        for m in -3i64..=3 {
            let got = a.normalize(&tl, m);
            let expect = LieRElement::mode(0, m - 1).scale(&rat(-m));
            assert_eq!(got, expect);
        }
        // (TL)_0 = 0
        assert!(a.normalize(&tl, 0).is_zero());
        // (T^2 L)_{-1} = 2 L_{-3}
        let t2l = tl.apply_t();
        assert_eq!(
            a.normalize(&t2l, -1),
            LieRElement::mode(0, -3).scale(&rat(2))
        );
    }

    #[test]
    fn current_modes_are_loop_algebra() {
        let a = sl2();
        // [e_1, f_{-1}] = h_0
        let br = a.bracket(&LieRElement::mode(0, 1), &LieRElement::mode(2, -1));
        assert_eq!(br, LieRElement::mode(1, 0));
    }

    #[test]
    fn virasoro_modes_satisfy_shifted_witt() {
        let a = vir();
        // [L_2, L_1] = (m-n) L_{m+n-1} with m=2, n=1 -> L_2
        let br = a.bracket(&LieRElement::mode(0, 2), &LieRElement::mode(0, 1));
        assert_eq!(br, LieRElement::mode(0, 2));
        // antisymmetry on the nose
        let u = LieRElement::mode(0, 3).add(&LieRElement::mode(0, -2).scale(&rat(5)));
        assert!(a.bracket(&u, &u).is_zero());
    }

    #[test]
    fn t_action_examples() {
        let a = vir();
        assert!(a.t_action(&LieRElement::mode(0, 0)).is_zero());
        assert_eq!(
            a.t_action(&LieRElement::mode(0, 2)),
            LieRElement::mode(0, 1).scale(&rat(-2))
        );
        let c = sl2();
        // T(e_{-1}) = e_{-2}
        assert_eq!(
            c.t_action(&LieRElement::mode(0, -1)),
            LieRElement::mode(0, -2)
        );
    }

    #[test]
    fn split_parts() {
        let a = vir();
        let u = LieRElement::mode(0, -1).add(&LieRElement::mode(0, 0));
        let (plus, minus) = a.split(&u);
        assert_eq!(plus, LieRElement::mode(0, -1));
        assert_eq!(minus, LieRElement::mode(0, 0));
        let (p0, m0) = a.split(&LieRElement::zero());
        assert!(p0.is_zero() && m0.is_zero());
    }

    #[test]
    fn transported_bracket_examples() {
        let v = vir();
        let l = LcaElement::generator(0);
        // [L_{-1}, L_{-1}] = 0 by antisymmetry
        assert!(v.transported_bracket(&l, &l).unwrap().is_zero());

        let c = sl2();
        let e = LcaElement::generator(0);
        let f = LcaElement::generator(2);
        // [e_{-1}, f_{-1}] = h_{-2} = (Th)_{-1}, so the pullback is Th
        let got = c.transported_bracket(&e, &f).unwrap();
        let h = LcaElement::generator(1);
        assert_eq!(got, h.apply_t());

        // abelian current: everything vanishes
        let ab = ModeAlgebra::new(
            &crate::conformal::builtin_current("ab", &["a"], &vec![vec![vec![rat(0)]]]).unwrap(),
        );
        let x = LcaElement::generator(0);
        assert!(ab.transported_bracket(&x, &x).unwrap().is_zero());
    }

    #[test]
    fn tangent_quotient_examples() {
        let v = vir();
        // L_0 lies in Lie R_-
        assert!(v.tangent_quotient(&LieRElement::mode(0, 0)).is_zero());
        // L_{-1} -> L
        assert_eq!(
            v.tangent_quotient(&LieRElement::mode(0, -1)),
            LcaElement::generator(0)
        );
        // L_{-2} -> TL
        assert_eq!(
            v.tangent_quotient(&LieRElement::mode(0, -2)),
            LcaElement::generator(0).apply_t()
        );
    }

    #[test]
    fn tangent_quotient_inverts_normalize() {
        let v = vir();
        let t = MultiPoly::var(LMT, Var::T);
        let a = LcaElement::with_coeff(0, t.pow(3).scale(&rat(2)).add(&t.pow(1)));
        let back = v.tangent_quotient(&v.normalize(&a, -1));
        assert_eq!(back, a);
    }

    #[test]
    fn witt_windows() {
        assert!(vir().witt_isomorphism_check(3).is_ok());
        assert!(vir().witt_isomorphism_check(6).is_ok());
    }

    #[test]
    fn witt_detects_mutation() {
        use crate::conformal::{BracketPoly, LcaPresentation};
        use std::sync::Arc;
        let t = MultiPoly::var(LMT, Var::T);
        let lam3 = MultiPoly::var(LMT, Var::Lambda).scale(&rat(3));
        let mut entry = BracketPoly::zero();
        entry.coeffs.insert(0, t.add(&lam3));
        let bad: SharedPresentation =
            Arc::new(LcaPresentation::new("bad", &["L"], &[(0, 0, entry)]));
        let a = ModeAlgebra::new(&bad);
        assert!(a.witt_isomorphism_check(3).is_err());
    }

    #[test]
    fn jacobi_windows() {
        assert!(vir().jacobi_window_check(4).is_empty());
        assert!(sl2().jacobi_window_check(4).is_empty());
    }

    #[test]
    fn jacobi_detects_corruption() {
        use crate::conformal::{BracketPoly, LcaPresentation};
        use std::sync::Arc;
        // non-Jacobi antisymmetric constants as a current-type table
        let mut e01 = BracketPoly::zero();
        e01.coeffs.insert(2, MultiPoly::one(LMT));
        let mut e10 = BracketPoly::zero();
        e10.coeffs.insert(2, MultiPoly::one(LMT).neg());
        let mut e02 = BracketPoly::zero();
        e02.coeffs.insert(0, MultiPoly::one(LMT));
        let mut e20 = BracketPoly::zero();
        e20.coeffs.insert(0, MultiPoly::one(LMT).neg());
        let mut e12 = BracketPoly::zero();
        e12.coeffs.insert(1, MultiPoly::one(LMT));
        let mut e21 = BracketPoly::zero();
        e21.coeffs.insert(1, MultiPoly::one(LMT).neg());
        let bad: SharedPresentation = Arc::new(LcaPresentation::new(
            "bad3",
            &["a", "b", "c"],
            &[(0, 1, e01), (1, 0, e10), (0, 2, e02), (2, 0, e20), (1, 2, e12), (2, 1, e21)],
        ));
        let alg = ModeAlgebra::new(&bad);
        assert!(!alg.jacobi_window_check(2).is_empty());
    }

    #[test]
    fn modes_intertwine_t() {
        // a -> a_{-1} intertwines T on R with the t-action on modes
        let algebras = [vir(), sl2()];
        for alg in &algebras {
            for g in 0..alg.pres.num_generators() {
                let a = LcaElement::generator(g);
                let lhs = alg.normalize(&a.apply_t(), -1);
                let rhs = alg.t_action(&alg.normalize(&a, -1));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn minus_part_closed_under_bracket() {
        let a = vir();
        for m in 0..4i64 {
            for n in 0..4i64 {
                let br = a.bracket(&LieRElement::mode(0, m), &LieRElement::mode(0, n));
                let (plus, _) = a.split(&br);
                assert!(plus.is_zero(), "[L_{m}, L_{n}] left Lie R_-");
            }
        }
    }
}
