//! Lie conformal algebra presentations and the lambda-bracket calculus.
//!
//! A presentation is a free C[T]-module on finitely many generators with the
//! bracket given on generator pairs by structure polynomials in λ and T; the
//! bracket of arbitrary elements is forced by sesquilinearity. Axioms are
//! verified symbolically in the free variables λ, μ, T, so a pass is a
//! complete proof at the level of the table.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::AlgebraError;
use crate::poly::{MultiPoly, Var};
use crate::rational::{factorial, rat, Rational};

/// Ambient variables for all bracket computations.
pub const LMT: &[Var] = &[Var::Lambda, Var::Mu, Var::T];

/// Index of a generator in its presentation.
pub type GenIdx = usize;

/// Element of the free C[T]-module: generator -> polynomial in T.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LcaElement {
    pub coeffs: BTreeMap<GenIdx, MultiPoly>,
}

impl LcaElement {
    pub fn zero() -> Self {
        LcaElement::default()
    }

    pub fn generator(g: GenIdx) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(g, MultiPoly::one(LMT));
        LcaElement { coeffs }
    }

    pub fn with_coeff(g: GenIdx, p: MultiPoly) -> Self {
        let mut out = LcaElement::zero();
        out.add_term(g, p);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add_term(&mut self, g: GenIdx, p: MultiPoly) {
        if p.is_zero() {
            return;
        }
        match self.coeffs.get_mut(&g) {
            Some(q) => {
                let s = q.add(&p);
                if s.is_zero() {
                    self.coeffs.remove(&g);
                } else {
                    *q = s;
                }
            }
            None => {
                self.coeffs.insert(g, p);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (g, p) in &other.coeffs {
            out.add_term(*g, p.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for p in out.coeffs.values_mut() {
            *p = p.neg();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = LcaElement::zero();
        for (g, p) in &self.coeffs {
            out.add_term(*g, p.scale(c));
        }
        out
    }

    /// Left multiplication by T in the C[T]-module.
    pub fn apply_t(&self) -> Self {
        let t = MultiPoly::var(LMT, Var::T);
        let mut out = LcaElement::zero();
        for (g, p) in &self.coeffs {
            out.add_term(*g, p.mul(&t));
        }
        out
    }
}

/// Bracket value: a polynomial in λ (and possibly μ) with coefficients in the
/// module, stored collapsed as generator -> polynomial in λ, μ, T.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct BracketPoly {
    pub coeffs: BTreeMap<GenIdx, MultiPoly>,
}

impl BracketPoly {
    pub fn zero() -> Self {
        BracketPoly::default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add_term(&mut self, g: GenIdx, p: MultiPoly) {
        if p.is_zero() {
            return;
        }
        match self.coeffs.get_mut(&g) {
            Some(q) => {
                let s = q.add(&p);
                if s.is_zero() {
                    self.coeffs.remove(&g);
                } else {
                    *q = s;
                }
            }
            None => {
                self.coeffs.insert(g, p);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (g, p) in &other.coeffs {
            out.add_term(*g, p.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for p in out.coeffs.values_mut() {
            *p = p.neg();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Degree in λ.
    pub fn lambda_degree(&self) -> Option<u32> {
        self.coeffs
            .values()
            .filter_map(|p| p.degree_in(Var::Lambda))
            .max()
    }

    /// Coefficient of λ^n as a module element (must not involve μ).
    pub fn lambda_coeff(&self, n: u32) -> LcaElement {
        let mut out = LcaElement::zero();
        for (g, p) in &self.coeffs {
            out.add_term(*g, p.coeff_of(Var::Lambda, n));
        }
        out
    }

    /// Substitute λ := expr on every coefficient.
    pub fn substitute_lambda(&self, expr: &MultiPoly) -> Self {
        let mut out = BracketPoly::zero();
        for (g, p) in &self.coeffs {
            out.add_term(*g, p.substitute(Var::Lambda, expr));
        }
        out
    }
}

impl fmt::Display for BracketPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (g, p) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({p})·g{g}")?;
        }
        Ok(())
    }
}

/// A Lie conformal algebra presentation: named generators and the bracket
/// table on generator pairs.
#[derive(Clone, Debug)]
pub struct LcaPresentation {
    pub name: String,
    pub generators: Vec<String>,
    /// `table[a][b]` = [a_λ b] as a BracketPoly in λ and T.
    table: Vec<Vec<BracketPoly>>,
}

pub type SharedPresentation = Arc<LcaPresentation>;

impl LcaPresentation {
    pub fn new(name: &str, generators: &[&str], entries: &[(usize, usize, BracketPoly)]) -> Self {
        let n = generators.len();
        let mut table = vec![vec![BracketPoly::zero(); n]; n];
        for (a, b, p) in entries {
            table[*a][*b] = table[*a][*b].add(p);
        }
        LcaPresentation {
            name: name.to_string(),
            generators: generators.iter().map(|s| s.to_string()).collect(),
            table,
        }
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn generator_index(&self, name: &str) -> Option<GenIdx> {
        self.generators.iter().position(|g| g == name)
    }

    pub fn table_entry(&self, a: GenIdx, b: GenIdx) -> &BracketPoly {
        &self.table[a][b]
    }

    /// Maximal λ-degree over the whole table.
    pub fn max_lambda_degree(&self) -> u32 {
        let mut d = 0;
        for row in &self.table {
            for e in row {
                if let Some(k) = e.lambda_degree() {
                    d = d.max(k);
                }
            }
        }
        d
    }

    /// Maximal T-degree over the whole table.
    pub fn max_t_degree(&self) -> u32 {
        let mut d = 0;
        for row in &self.table {
            for e in row {
                for p in e.coeffs.values() {
                    if let Some(k) = p.degree_in(Var::T) {
                        d = d.max(k);
                    }
                }
            }
        }
        d
    }

    /// Full lambda bracket of two module elements, extended from the table by
    /// sesquilinearity: `[p(T)a_λ q(T)b] = p(-λ) q(λ+T) [a_λ b]`.
    pub fn lambda_bracket(&self, a: &LcaElement, b: &LcaElement) -> BracketPoly {
        let neg_lambda = MultiPoly::var(LMT, Var::Lambda).neg();
        let lambda_plus_t = MultiPoly::var(LMT, Var::Lambda).add(&MultiPoly::var(LMT, Var::T));
        let mut out = BracketPoly::zero();
        for (ga, pa) in &a.coeffs {
            let pa_sub = pa.substitute(Var::T, &neg_lambda);
            for (gb, pb) in &b.coeffs {
                let pb_sub = pb.substitute(Var::T, &lambda_plus_t);
                let scalar = pa_sub.mul(&pb_sub);
                if scalar.is_zero() {
                    continue;
                }
                for (gc, pc) in &self.table[*ga][*gb].coeffs {
                    out.add_term(*gc, scalar.mul(pc));
                }
            }
        }
        out
    }

    /// The n-th product `a_(n) b = n! * [λ^n] [a_λ b]` for n >= 0.
    pub fn nth_product(&self, a: &LcaElement, b: &LcaElement, n: i64) -> Result<LcaElement, AlgebraError> {
        if n < 0 {
            return Err(AlgebraError::NegativeProduct);
        }
        let br = self.lambda_bracket(a, b);
        Ok(br.lambda_coeff(n as u32).scale(&factorial(n as u32)))
    }

    /// Table of n-th products on generator pairs, indexed by j.
    pub fn nth_table(&self, a: GenIdx, b: GenIdx) -> Vec<LcaElement> {
        let e = &self.table[a][b];
        let deg = e.lambda_degree().map(|d| d + 1).unwrap_or(0);
        (0..deg)
            .map(|j| e.lambda_coeff(j).scale(&factorial(j)))
            .collect()
    }

    /// Antisymmetry and Jacobi, verified symbolically on generators.
    pub fn check_axioms(&self) -> AxiomReport {
        let mut report = AxiomReport::default();
        let n = self.num_generators();
        let lambda = MultiPoly::var(LMT, Var::Lambda);
        let t = MultiPoly::var(LMT, Var::T);
        // antisymmetry: [a_λ b] = -[b_{-λ-T} a], with T acting on the output
        for a in 0..n {
            for b in 0..n {
                let lhs = self.table[a][b].clone();
                let rhs = self.table[b][a].substitute_lambda(&lambda.neg().sub(&t));
                let residual = lhs.add(&rhs);
                report.push(
                    format!(
                        "antisymmetry({},{})",
                        self.generators[a], self.generators[b]
                    ),
                    residual,
                );
            }
        }
        // Jacobi: [a_λ [b_μ c]] = [[a_λ b]_{λ+μ} c] + [b_μ [a_λ c]]
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let lhs = self.nested_outer(a, self.bracket_in_mu(b, c));
                    let term2 = self.nested_outer_mu(b, self.table[a][c].clone());
                    let term1 = self.first_arg_bracket(&self.table[a][b], c);
                    let residual = lhs.sub(&term1).sub(&term2);
                    report.push(
                        format!(
                            "jacobi({},{},{})",
                            self.generators[a], self.generators[b], self.generators[c]
                        ),
                        residual,
                    );
                }
            }
        }
        report
    }

    /// `[b_μ c]`: the table entry with λ renamed to μ.
    fn bracket_in_mu(&self, b: GenIdx, c: GenIdx) -> BracketPoly {
        self.table[b][c].substitute_lambda(&MultiPoly::var(LMT, Var::Mu))
    }

    /// `[a_λ X]` for X a BracketPoly (μ a spectator):
    /// `[a_λ p(μ,T)g] = p(μ, λ+T) [a_λ g]`.
    fn nested_outer(&self, a: GenIdx, x: BracketPoly) -> BracketPoly {
        let lambda_plus_t = MultiPoly::var(LMT, Var::Lambda).add(&MultiPoly::var(LMT, Var::T));
        let mut out = BracketPoly::zero();
        for (g, p) in &x.coeffs {
            let p_shift = p.substitute(Var::T, &lambda_plus_t);
            for (gc, pc) in &self.table[a][*g].coeffs {
                out.add_term(*gc, p_shift.mul(pc));
            }
        }
        out
    }

    /// `[b_μ X]` with X in λ: `[b_μ p(λ,T)g] = p(λ, μ+T) ([b_λ g] with λ:=μ)`.
    fn nested_outer_mu(&self, b: GenIdx, x: BracketPoly) -> BracketPoly {
        let mu_plus_t = MultiPoly::var(LMT, Var::Mu).add(&MultiPoly::var(LMT, Var::T));
        let mu = MultiPoly::var(LMT, Var::Mu);
        let mut out = BracketPoly::zero();
        for (g, p) in &x.coeffs {
            let p_shift = p.substitute(Var::T, &mu_plus_t);
            for (gc, pc) in &self.table[b][*g].coeffs {
                let pc_mu = pc.substitute(Var::Lambda, &mu);
                out.add_term(*gc, p_shift.mul(&pc_mu));
            }
        }
        out
    }

    /// `[X_{λ+μ} c]` for X = [a_λ b]:
    /// `[p(λ,T)g_{ν} c] = p(λ, -ν) [g_ν c]` at ν = λ+μ.
    fn first_arg_bracket(&self, x: &BracketPoly, c: GenIdx) -> BracketPoly {
        let nu = MultiPoly::var(LMT, Var::Lambda).add(&MultiPoly::var(LMT, Var::Mu));
        let neg_nu = nu.neg();
        let mut out = BracketPoly::zero();
        for (g, p) in &x.coeffs {
            let p_sub = p.substitute(Var::T, &neg_nu);
            for (gc, pc) in &self.table[*g][c].coeffs {
                let pc_nu = pc.substitute(Var::Lambda, &nu);
                out.add_term(*gc, p_sub.mul(&pc_nu));
            }
        }
        out
    }
}

/// Result of a symbolic axiom check: named identities with exact residuals.
#[derive(Clone, Debug, Default)]
pub struct AxiomReport {
    pub checks: Vec<(String, BracketPoly)>,
}

impl AxiomReport {
    fn push(&mut self, name: String, residual: BracketPoly) {
        self.checks.push((name, residual));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, r)| r.is_zero())
    }

    pub fn failures(&self) -> impl Iterator<Item = &(String, BracketPoly)> {
        self.checks.iter().filter(|(_, r)| !r.is_zero())
    }
}

/// The Virasoro conformal algebra: one generator L with [L_λ L] = (T + 2λ)L.
pub fn builtin_virasoro() -> SharedPresentation {
    let t = MultiPoly::var(LMT, Var::T);
    let two_lambda = MultiPoly::var(LMT, Var::Lambda).scale(&rat(2));
    let mut entry = BracketPoly::zero();
    entry.add_term(0, t.add(&two_lambda));
    Arc::new(LcaPresentation::new("virasoro", &["L"], &[(0, 0, entry)]))
}

/// Structure constants of a finite-dimensional Lie algebra: `c[a][b]` is the
/// coordinate vector of [a, b].
pub type StructureConstants = Vec<Vec<Vec<Rational>>>;

/// Verify the Lie axioms for structure constants (antisymmetry + Jacobi).
pub fn check_lie_structure(c: &StructureConstants) -> Result<(), AlgebraError> {
    let n = c.len();
    for row in c {
        if row.len() != n || row.iter().any(|v| v.len() != n) {
            return Err(AlgebraError::InvalidStructureConstants(
                "shape must be n x n x n".into(),
            ));
        }
    }
    for a in 0..n {
        for b in 0..n {
            for k in 0..n {
                if c[a][b][k].clone() + c[b][a][k].clone() != rat(0) {
                    return Err(AlgebraError::InvalidStructureConstants(format!(
                        "antisymmetry fails on ({a},{b})"
                    )));
                }
            }
        }
    }
    // [[a,b],c] + [[b,c],a] + [[c,a],b] = 0
    for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                for k in 0..n {
                    let mut s = rat(0);
                    for m in 0..n {
                        s += c[a][b][m].clone() * c[m][d][k].clone();
                        s += c[b][d][m].clone() * c[m][a][k].clone();
                        s += c[d][a][m].clone() * c[m][b][k].clone();
                    }
                    if s != rat(0) {
                        return Err(AlgebraError::InvalidStructureConstants(format!(
                            "Jacobi fails on ({a},{b},{d})"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// The current conformal algebra Cur g = C[T] ⊗ g with [a_λ b] = [a, b].
pub fn builtin_current(
    name: &str,
    generators: &[&str],
    constants: &StructureConstants,
) -> Result<SharedPresentation, AlgebraError> {
    check_lie_structure(constants)?;
    let n = generators.len();
    let mut entries = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let mut e = BracketPoly::zero();
            for (k, coef) in constants[a][b].iter().enumerate() {
                e.add_term(k, MultiPoly::constant(LMT, coef.clone()));
            }
            if !e.is_zero() {
                entries.push((a, b, e));
            }
        }
    }
    Ok(Arc::new(LcaPresentation::new(name, generators, &entries)))
}

/// sl2 structure constants in the basis (e, h, f):
/// [h,e] = 2e, [h,f] = -2f, [e,f] = h.
pub fn sl2_constants() -> StructureConstants {
    let n = 3;
    let (e, h, f) = (0usize, 1usize, 2usize);
    let mut c = vec![vec![vec![rat(0); n]; n]; n];
    c[h][e][e] = rat(2);
    c[e][h][e] = rat(-2);
    c[h][f][f] = rat(-2);
    c[f][h][f] = rat(2);
    c[e][f][h] = rat(1);
    c[f][e][h] = rat(-1);
    c
}

pub fn builtin_sl2() -> SharedPresentation {
    builtin_current("cur_sl2", &["e", "h", "f"], &sl2_constants()).expect("sl2 is a Lie algebra")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virasoro_bracket_table() {
        let vir = builtin_virasoro();
        let l = LcaElement::generator(0);
        let br = vir.lambda_bracket(&l, &l);
        // [L_λ L] = TL + 2λL
        let expect = MultiPoly::var(LMT, Var::T)
            .add(&MultiPoly::var(LMT, Var::Lambda).scale(&rat(2)));
        assert_eq!(br.coeffs.get(&0), Some(&expect));
    }

    #[test]
    fn current_bracket_is_lie_bracket() {
        let sl2 = builtin_sl2();
        let e = LcaElement::generator(0);
        let f = LcaElement::generator(2);
        let br = sl2.lambda_bracket(&e, &f);
        // [e_λ f] = h, λ-degree 0
        assert_eq!(br.coeffs.get(&1), Some(&MultiPoly::one(LMT)));
        assert_eq!(br.lambda_degree(), Some(0));
    }

    #[test]
    fn sesquilinearity_is_forced() {
        let vir = builtin_virasoro();
        let l = LcaElement::generator(0);
        let tl = l.apply_t();
        // [TL_λ L] = -λ [L_λ L]
        let br = vir.lambda_bracket(&tl, &l);
        let expect = vir
            .lambda_bracket(&l, &l)
            .coeffs
            .get(&0)
            .unwrap()
            .mul(&MultiPoly::var(LMT, Var::Lambda).neg());
        assert_eq!(br.coeffs.get(&0), Some(&expect));
    }

    #[test]
    fn nth_products_virasoro() {
        let vir = builtin_virasoro();
        let l = LcaElement::generator(0);
        // L_(0) L = TL
        let p0 = vir.nth_product(&l, &l, 0).unwrap();
        assert_eq!(p0, l.apply_t());
        // L_(1) L = 2L
        let p1 = vir.nth_product(&l, &l, 1).unwrap();
        assert_eq!(p1, l.scale(&rat(2)));
        // L_(2) L = 0
        assert!(vir.nth_product(&l, &l, 2).unwrap().is_zero());
        // negative products are a domain error
        assert!(matches!(
            vir.nth_product(&l, &l, -1),
            Err(AlgebraError::NegativeProduct)
        ));
    }

    #[test]
    fn builtin_axioms_pass() {
        assert!(builtin_virasoro().check_axioms().passed());
        assert!(builtin_sl2().check_axioms().passed());
    }

    #[test]
    fn mutated_virasoro_fails_jacobi() {
        // [L_λ L] = TL + 3λL: antisymmetry and Jacobi both break
        let t = MultiPoly::var(LMT, Var::T);
        let three_lambda = MultiPoly::var(LMT, Var::Lambda).scale(&rat(3));
        let mut entry = BracketPoly::zero();
        entry.add_term(0, t.add(&three_lambda));
        let bad = LcaPresentation::new("bad_vir", &["L"], &[(0, 0, entry)]);
        let report = bad.check_axioms();
        assert!(!report.passed());
        assert!(report.failures().any(|(name, r)| {
            name.starts_with("jacobi") && !r.is_zero()
        }));
    }

    #[test]
    fn abelian_current_is_trivial() {
        let c = vec![vec![vec![rat(0)]]];
        let ab = builtin_current("abelian", &["a"], &c).unwrap();
        let a = LcaElement::generator(0);
        assert!(ab.lambda_bracket(&a, &a).is_zero());
        assert!(ab.check_axioms().passed());
    }

    #[test]
    fn invalid_constants_rejected() {
        // antisymmetric but not Jacobi: [e1,e2]=e3, [e1,e3]=e1, [e2,e3]=e2
        let n = 3;
        let mut c = vec![vec![vec![rat(0); n]; n]; n];
        c[0][1][2] = rat(1);
        c[1][0][2] = rat(-1);
        c[0][2][0] = rat(1);
        c[2][0][0] = rat(-1);
        c[1][2][1] = rat(1);
        c[2][1][1] = rat(-1);
        assert!(matches!(
            builtin_current("bad", &["a", "b", "c"], &c),
            Err(AlgebraError::InvalidStructureConstants(_))
        ));
    }

    #[test]
    fn antisymmetry_and_jacobi_on_random_elements() {
        // axiom checks on the table extend to arbitrary elements
        let vir = builtin_virasoro();
        let t = MultiPoly::var(LMT, Var::T);
        let a = LcaElement::with_coeff(0, t.pow(2).add(&MultiPoly::constant(LMT, rat(3))));
        let b = LcaElement::with_coeff(0, t.clone().add(&MultiPoly::one(LMT)));
        // antisymmetry for elements with T-polynomial coefficients
        let lhs = vir.lambda_bracket(&a, &b);
        let lam = MultiPoly::var(LMT, Var::Lambda);
        let rhs = vir
            .lambda_bracket(&b, &a)
            .substitute_lambda(&lam.neg().sub(&t));
        assert!(lhs.add(&rhs).is_zero());
    }
}
