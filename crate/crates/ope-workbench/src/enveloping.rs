//! The universal enveloping vertex algebra of a presentation, truncated by
//! conformal weight.
//!
//! States are combinations of PBW monomials `a_{m_1} ... a_{m_k} |0>` with
//! strictly negative modes sorted ascending by (mode, generator); the weight
//! of a factor `a_m` is `-m`. Mode actions are computed by exact straightening
//! (adjacent transposition plus bracket insertion), so every coefficient that
//! comes out of this module is exact; windows only bound which coefficients
//! of a field are materialized.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use dashmap::DashMap;
use num::{ToPrimitive, Zero};

use crate::annihilation::{LieRElement, ModeAlgebra};
use crate::charts::overlap_z123;
use crate::conformal::{GenIdx, LcaElement, SharedPresentation};
use crate::error::AlgebraError;
use crate::localized::LocalizedPoly;
use crate::poly::{MultiPoly, Var};
use crate::rational::{binom, factorial, rat, Rational};
use crate::report::Verdict;
use crate::tower::{expand_in_chart, RingDescriptor, SeriesMode, TowerLevel, TowerSeries, Window, HI_INF};

/// Normally ordered word of creation modes; the vacuum is the empty word.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct PbwMonomial(pub Vec<(GenIdx, i64)>);

impl PbwMonomial {
    pub fn vacuum() -> Self {
        PbwMonomial(Vec::new())
    }

    pub fn generator(g: GenIdx) -> Self {
        PbwMonomial(vec![(g, -1)])
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Conformal weight by the mode convention: sum of -m over the factors.
    pub fn weight(&self) -> i64 {
        self.0.iter().map(|(_, m)| -m).sum()
    }
}

impl fmt::Display for PbwMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (g, m) in &self.0 {
            write!(f, "g{g}[{m}]")?;
        }
        write!(f, "|0>")
    }
}

/// Exact state: sparse combination of PBW monomials.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct VaElement {
    pub terms: BTreeMap<PbwMonomial, Rational>,
}

impl VaElement {
    pub fn zero() -> Self {
        VaElement::default()
    }

    pub fn vacuum() -> Self {
        Self::monomial(PbwMonomial::vacuum(), rat(1))
    }

    pub fn monomial(m: PbwMonomial, c: Rational) -> Self {
        let mut out = Self::zero();
        out.add_term(m, c);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: PbwMonomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = e.get().clone() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
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
        if k.is_zero() {
            return Self::zero();
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.clone() * k.clone();
        }
        out
    }

    pub fn max_weight(&self) -> i64 {
        self.terms.keys().map(|m| m.weight()).max().unwrap_or(0)
    }
}

impl fmt::Display for VaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}·{m}")?;
        }
        Ok(())
    }
}

/// Solve a positive grading for the presentation: weights `Δ_g > 0` with
/// `Δ_a + Δ_b - j - 1 = Δ_c + k` for every table monomial.
fn solve_weights(pres: &SharedPresentation) -> Result<Vec<Rational>, AlgebraError> {
    let n = pres.num_generators();
    // rows: coefficients on the n unknowns, then the right-hand side
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for (j, prod) in pres.nth_table(a, b).iter().enumerate() {
                for (c, p) in &prod.coeffs {
                    for (exps, coef) in p.terms() {
                        if coef.is_zero() {
                            continue;
                        }
                        let k = exps
                            .iter()
                            .zip(crate::conformal::LMT)
                            .find(|(_, v)| **v == Var::T)
                            .map(|(e, _)| *e)
                            .unwrap_or(0);
                        let mut row = vec![rat(0); n + 1];
                        row[a] += rat(1);
                        row[b] += rat(1);
                        row[*c] -= rat(1);
                        row[n] = rat(j as i64 + 1 + k as i64);
                        rows.push(row);
                    }
                }
            }
        }
    }
    // Gaussian elimination
    let mut pivots: Vec<Option<usize>> = vec![None; n];
    let mut reduced: Vec<Vec<Rational>> = Vec::new();
    for mut row in rows {
        for r in &reduced {
            let col = r.iter().position(|c| !c.is_zero()).unwrap();
            if !row[col].is_zero() {
                let f = row[col].clone() / r[col].clone();
                for i in 0..=n {
                    row[i] = row[i].clone() - f.clone() * r[i].clone();
                }
            }
        }
        if let Some(col) = row[..n].iter().position(|c| !c.is_zero()) {
            pivots[col] = Some(reduced.len());
            reduced.push(row);
        } else if !row[n].is_zero() {
            return Err(AlgebraError::NotGraded);
        }
    }
    // back-substitute with free unknowns set to 1
    let mut sol = vec![rat(1); n];
    for col in (0..n).rev() {
        if let Some(ri) = pivots[col] {
            let row = &reduced[ri];
            let mut v = row[n].clone();
            for c2 in col + 1..n {
                v -= row[c2].clone() * sol[c2].clone();
            }
            sol[col] = v / row[col].clone();
        }
    }
    if sol.iter().any(|w| *w <= rat(0)) {
        return Err(AlgebraError::NotGraded);
    }
    Ok(sol)
}

type ModeKey = (GenIdx, i64, PbwMonomial);
type ProductKey = (PbwMonomial, i64, PbwMonomial);

/// The enveloping vertex algebra at a weight cutoff.
pub struct EnvelopingModule {
    pub pres: SharedPresentation,
    pub modes: ModeAlgebra,
    /// Solved conformal weights of the generators (all positive).
    pub gen_weights: Vec<Rational>,
    pub cutoff: i64,
    basis: Vec<PbwMonomial>,
    act_cache: DashMap<ModeKey, VaElement>,
    product_cache: DashMap<ProductKey, VaElement>,
}

impl EnvelopingModule {
    pub fn new(pres: &SharedPresentation, cutoff: i64) -> Result<Arc<Self>, AlgebraError> {
        let gen_weights = solve_weights(pres)?;
        let modes = ModeAlgebra::new(pres);
        let mut basis = Vec::new();
        let mut stack = vec![PbwMonomial::vacuum()];
        // enumerate sorted words of weight <= cutoff
        fn extend(
            word: &PbwMonomial,
            cutoff: i64,
            ngens: usize,
            out: &mut Vec<PbwMonomial>,
        ) {
            out.push(word.clone());
            let remaining = cutoff - word.weight();
            let min_factor = word.0.last().cloned();
            for m in (-remaining..=-1).rev() {
                for g in 0..ngens {
                    if let Some((lg, lm)) = min_factor {
                        // keep ascending (m, g) order reading left to right;
                        // new factor goes at the end
                        if (m, g) < (lm, lg) {
                            continue;
                        }
                    }
                    let mut w = word.clone();
                    w.0.push((g, m));
                    extend(&w, cutoff, ngens, out);
                }
            }
        }
        let root = stack.pop().unwrap();
        extend(&root, cutoff, pres.num_generators(), &mut basis);
        basis.sort();
        basis.dedup();
        Ok(Arc::new(EnvelopingModule {
            pres: pres.clone(),
            modes,
            gen_weights,
            cutoff,
            basis,
            act_cache: DashMap::new(),
            product_cache: DashMap::new(),
        }))
    }

    /// PBW basis of the weight-cutoff module, sorted.
    pub fn basis(&self) -> &[PbwMonomial] {
        &self.basis
    }

    pub fn basis_of_weight(&self, w: i64) -> impl Iterator<Item = &PbwMonomial> {
        self.basis.iter().filter(move |m| m.weight() == w)
    }

    /// Standard conformal weight of a monomial (used for vanishing bounds):
    /// sum of `Δ_g - m - 1` over the factors.
    pub fn delta(&self, m: &PbwMonomial) -> Rational {
        let mut d = rat(0);
        for (g, mode) in &m.0 {
            d += self.gen_weights[*g].clone() - rat(*mode) - rat(1);
        }
        d
    }

    pub fn delta_ceil(&self, v: &VaElement) -> i64 {
        v.terms
            .keys()
            .map(|m| {
                let d = self.delta(m);
                d.ceil().to_integer().to_i64().expect("small weight")
            })
            .max()
            .unwrap_or(0)
    }

    /// Exact vanishing bound: `u_(n) v = 0` for all `n >= bound(u, v)`.
    pub fn vanishing_bound(&self, u: &VaElement, v: &VaElement) -> i64 {
        self.delta_ceil(u) + self.delta_ceil(v)
    }

    /// Normalize a raw word of modes applied to the vacuum.
    fn normalize_word(&self, coef: Rational, word: Vec<(GenIdx, i64)>) -> VaElement {
        let mut out = VaElement::zero();
        let mut work = vec![(coef, word)];
        while let Some((c, w)) = work.pop() {
            // first adjacent inversion in the ascending (mode, generator) order
            let inv = w
                .windows(2)
                .position(|p| (p[0].1, p[0].0) > (p[1].1, p[1].0));
            match inv {
                None => {
                    // sorted; annihilate on the vacuum if the rightmost mode >= 0
                    if let Some(&(_, m_last)) = w.last() {
                        if m_last >= 0 {
                            continue;
                        }
                    }
                    out.add_term(PbwMonomial(w), c);
                }
                Some(i) => {
                    let (g1, m1) = w[i];
                    let (g2, m2) = w[i + 1];
                    // swap term
                    let mut swapped = w.clone();
                    swapped.swap(i, i + 1);
                    work.push((c.clone(), swapped));
                    // bracket term: [a_{m1}, b_{m2}] replaces the pair
                    let br = self
                        .modes
                        .bracket(&LieRElement::mode(g1, m1), &LieRElement::mode(g2, m2));
                    for ((g, m), bc) in &br.terms {
                        let mut shorter = Vec::with_capacity(w.len() - 1);
                        shorter.extend_from_slice(&w[..i]);
                        shorter.push((*g, *m));
                        shorter.extend_from_slice(&w[i + 2..]);
                        work.push((c.clone() * bc.clone(), shorter));
                    }
                }
            }
        }
        out
    }

    /// Action of a single mode `g_m` on a state.
    pub fn act_mode(&self, g: GenIdx, m: i64, v: &VaElement) -> VaElement {
        let mut out = VaElement::zero();
        for (mon, c) in &v.terms {
            let key = (g, m, mon.clone());
            let cached = self.act_cache.get(&key).map(|r| r.clone());
            let res = match cached {
                Some(r) => r,
                None => {
                    let mut word = Vec::with_capacity(mon.0.len() + 1);
                    word.push((g, m));
                    word.extend_from_slice(&mon.0);
                    let r = self.normalize_word(rat(1), word);
                    self.act_cache.insert(key, r.clone());
                    r
                }
            };
            out = out.add(&res.scale(c));
        }
        out
    }

    /// Action of a mode combination (the induced-module structure).
    pub fn act_lie(&self, u: &LieRElement, v: &VaElement) -> VaElement {
        let mut out = VaElement::zero();
        for ((g, m), c) in &u.terms {
            out = out.add(&self.act_mode(*g, *m, v).scale(c));
        }
        out
    }

    /// Mode action of an LCA element placed at mode `n` (sesquilinear data).
    pub fn act_lca(&self, a: &LcaElement, n: i64, v: &VaElement) -> VaElement {
        self.act_lie(&self.modes.normalize(a, n), v)
    }

    /// Translation operator: derivation with `T(a_m w) = -m a_{m-1} w + a_m T(w)`
    /// and `T|0> = 0`.
    pub fn translate(&self, v: &VaElement) -> VaElement {
        let mut out = VaElement::zero();
        for (mon, c) in &v.terms {
            for i in 0..mon.0.len() {
                let (g, m) = mon.0[i];
                let mut word = mon.0.clone();
                word[i] = (g, m - 1);
                let coef = c.clone() * rat(-m);
                if !coef.is_zero() {
                    out = out.add(&self.normalize_word(coef, word));
                }
            }
        }
        out
    }

    /// `T^{(j)} = T^j / j!`.
    pub fn translate_divided(&self, v: &VaElement, j: u32) -> VaElement {
        let mut out = v.clone();
        for _ in 0..j {
            out = self.translate(&out);
        }
        out.scale(&(rat(1) / factorial(j)))
    }

    /// The n-th product `u_(n) v` on basis monomials, by the normally ordered
    /// reconstruction: peel the leftmost factor `a_{-1-k}` of `u = a_{-1-k} w`,
    /// then
    /// `u_(n) = sum_j (-1)^k [ C(-1-j,k) a_{-1-j-k} w_(n+j) + C(j,k) w_(n-1-j) a_{j-k} ]`.
    pub fn mode_product_basis(&self, u: &PbwMonomial, n: i64, v: &PbwMonomial) -> VaElement {
        if u.is_vacuum() {
            return if n == -1 {
                VaElement::monomial(v.clone(), rat(1))
            } else {
                VaElement::zero()
            };
        }
        let key = (u.clone(), n, v.clone());
        if let Some(r) = self.product_cache.get(&key) {
            return r.clone();
        }
        let (g, m) = u.0[0];
        let k = (-1 - m) as u32;
        let w = PbwMonomial(u.0[1..].to_vec());
        let v_el = VaElement::monomial(v.clone(), rat(1));
        let sign = if k % 2 == 0 { rat(1) } else { rat(-1) };
        let mut acc = VaElement::zero();
        // creation side: a_{-1-j-k} (w_(n+j) v)
        let w_bound = self.delta_ceil(&VaElement::monomial(w.clone(), rat(1)))
            + self.delta_ceil(&v_el);
        let mut j = 0i64;
        while n + j < w_bound {
            let inner = self.mode_product_basis(&w, n + j, v);
            if !inner.is_zero() {
                let coef = sign.clone() * binom(-1 - j, k);
                if !coef.is_zero() {
                    acc = acc.add(&self.act_mode(g, -1 - j - k as i64, &inner).scale(&coef));
                }
            }
            j += 1;
        }
        // annihilation side: w_(n-1-j) (a_{j-k} v)
        let gen_delta = self.gen_weights[g]
            .ceil()
            .to_integer()
            .to_i64()
            .expect("small weight");
        let a_bound = gen_delta + self.delta_ceil(&v_el);
        let mut j = 0i64;
        while j - (k as i64) < a_bound {
            let coef = sign.clone() * binom(j, k);
            if !coef.is_zero() {
                let av = self.act_mode(g, j - k as i64, &v_el);
                if !av.is_zero() {
                    let outer = self.mode_product(
                        &VaElement::monomial(w.clone(), rat(1)),
                        n - 1 - j,
                        &av,
                    );
                    acc = acc.add(&outer.scale(&coef));
                }
            }
            j += 1;
        }
        self.product_cache.insert(key, acc.clone());
        acc
    }

    /// Bilinear extension of the n-th product to states.
    pub fn mode_product(&self, u: &VaElement, n: i64, v: &VaElement) -> VaElement {
        let mut out = VaElement::zero();
        for (mu, cu) in &u.terms {
            for (mv, cv) in &v.terms {
                let p = self.mode_product_basis(mu, n, mv);
                if !p.is_zero() {
                    out = out.add(&p.scale(&(cu.clone() * cv.clone())));
                }
            }
        }
        out
    }
}

/// A field `Y(u, z) v`: coefficients of `u_(n) v` for `n` in the window
/// `[n_lo, vanish_above)`; everything at or above `vanish_above` is exactly
/// zero, everything below `n_lo` was not materialized.
#[derive(Clone, Debug)]
pub struct FieldExpansion {
    pub coeffs: BTreeMap<i64, VaElement>,
    pub n_lo: i64,
    pub vanish_above: i64,
}

impl FieldExpansion {
    pub fn coeff(&self, n: i64) -> VaElement {
        self.coeffs.get(&n).cloned().unwrap_or_else(VaElement::zero)
    }

    /// Largest n with a nonzero coefficient, i.e. the pole order minus one.
    pub fn max_nonzero(&self) -> Option<i64> {
        self.coeffs.iter().rev().find(|(_, v)| !v.is_zero()).map(|(n, _)| *n)
    }
}

/// The binary OPE datum of the module: the bilinear map
/// `(u, v) -> Y(u, x-y) v`, with optional scripted mutation.
pub struct Ope {
    pub module: Arc<EnvelopingModule>,
    pub mutation: Option<Mutation>,
}

/// A named, scripted correction to the OPE on finitely many basis pairs.
#[derive(Clone, Debug, Default)]
pub struct Mutation {
    pub name: String,
    pub entries: Vec<(PbwMonomial, PbwMonomial, i64, VaElement)>,
}

impl Mutation {
    pub fn max_mode(&self) -> i64 {
        self.entries.iter().map(|(_, _, n, _)| *n + 1).max().unwrap_or(0)
    }
}

impl Ope {
    pub fn new(module: Arc<EnvelopingModule>) -> Self {
        Ope { module, mutation: None }
    }

    pub fn with_mutation(module: Arc<EnvelopingModule>, mutation: Mutation) -> Self {
        Ope { module, mutation: Some(mutation) }
    }

    pub fn mode_basis(&self, u: &PbwMonomial, n: i64, v: &PbwMonomial) -> VaElement {
        let mut out = self.module.mode_product_basis(u, n, v);
        if let Some(mu) = &self.mutation {
            for (a, b, nn, delta) in &mu.entries {
                if a == u && b == v && *nn == n {
                    out = out.add(delta);
                }
            }
        }
        out
    }

    pub fn mode(&self, u: &VaElement, n: i64, v: &VaElement) -> VaElement {
        let mut out = VaElement::zero();
        for (mu, cu) in &u.terms {
            for (mv, cv) in &v.terms {
                let p = self.mode_basis(mu, n, mv);
                if !p.is_zero() {
                    out = out.add(&p.scale(&(cu.clone() * cv.clone())));
                }
            }
        }
        out
    }

    /// `u_(n) v = 0` for all `n >= bound`.
    pub fn vanishing_bound(&self, u: &VaElement, v: &VaElement) -> i64 {
        let base = self.module.vanishing_bound(u, v);
        match &self.mutation {
            Some(m) => base.max(m.max_mode()),
            None => base,
        }
    }

    /// `Y(u, z) v` down to `n_lo`.
    pub fn field(&self, u: &VaElement, v: &VaElement, n_lo: i64) -> FieldExpansion {
        let hi = self.vanishing_bound(u, v);
        let mut coeffs = BTreeMap::new();
        for n in n_lo..hi {
            let c = self.mode(u, n, v);
            if !c.is_zero() {
                coeffs.insert(n, c);
            }
        }
        FieldExpansion { coeffs, n_lo, vanish_above: hi }
    }

    /// Pole order of `Y(u, x-y) v`: one past the largest non-negative n with
    /// `u_(n) v != 0`. Exact.
    pub fn pole_order(&self, u: &VaElement, v: &VaElement) -> i64 {
        let hi = self.vanishing_bound(u, v);
        let mut order = 0;
        for n in 0..hi {
            if !self.mode(u, n, v).is_zero() {
                order = n + 1;
            }
        }
        order
    }

    /// Skew-symmetry of the OPE: checks
    /// `v_(n) u = -sum_j (-1)^{n+j} T^{(j)} (u_(n+j) v)` for all `n >= n_lo`
    /// (everything above the vanishing bound is zero on both sides).
    pub fn commutativity_check(&self, u: &VaElement, v: &VaElement, n_lo: i64) -> Result<(), (i64, VaElement)> {
        let hi = self.vanishing_bound(u, v).max(self.vanishing_bound(v, u));
        for n in n_lo..hi {
            let lhs = self.mode(v, n, u);
            let mut rhs = VaElement::zero();
            let mut j = 0i64;
            while n + j < hi {
                let inner = self.mode(u, n + j, v);
                if !inner.is_zero() {
                    let sign = if (n + j) % 2 == 0 { rat(-1) } else { rat(1) };
                    rhs = rhs.add(
                        &self
                            .module
                            .translate_divided(&inner, j as u32)
                            .scale(&sign),
                    );
                }
                j += 1;
            }
            let resid = lhs.sub(&rhs);
            if !resid.is_zero() {
                return Err((n, resid));
            }
        }
        Ok(())
    }
}

/// Exact operator locality order for a pair of generators: the minimal N with
/// `(z-w)^N [Y(a,z), Y(b,w)] = 0`, decided symbolically via the mode algebra.
pub fn locality_order_generators(module: &EnvelopingModule, a: GenIdx, b: GenIdx) -> u32 {
    // (z-w)^N [Y(a,z),Y(b,w)] = 0 iff for all p, q:
    //   sum_k (-1)^k C(N,k) [a_{p+N-k}, b_{q+k}] = 0 in Lie R.
    // Expanding [a_P, b_Q] = sum_j C(P,j) normalize([a_(j)b], P+Q-j) and
    // grouping by generator and mode offset from p+q+N gives polynomial
    // identities in formal p, q.
    let table = module.pres.nth_table(a, b);
    let tmax = module.pres.max_t_degree();
    let vars: &[Var] = &[Var::Lambda, Var::Mu];
    'next_n: for n in 0u32..=(table.len() as u32 + tmax + 1) {
        // accumulated[(generator, offset)] = polynomial in (p, q)
        let mut acc: BTreeMap<(GenIdx, i64), MultiPoly> = BTreeMap::new();
        for k in 0..=n {
            let sign = if k % 2 == 0 { rat(1) } else { rat(-1) };
            let ck = binom(n as i64, k) * sign;
            // P = p + N - k as a polynomial in p
            for (j, prod) in table.iter().enumerate() {
                if prod.is_zero() {
                    continue;
                }
                // C(P, j) as a polynomial in p
                let cpj = MultiPoly::binom_poly(vars, Var::Lambda, n as i64 - k as i64, j as u32);
                // normalize(prod, M) with M = p + q + N - j formal:
                // (T^s c)_M = (-1)^s M(M-1)...(M-s+1) c_{M-s}
                for (c_gen, tpoly) in &prod.coeffs {
                    for (exps, coef) in tpoly.terms() {
                        let s = exps
                            .iter()
                            .zip(crate::conformal::LMT)
                            .find(|(_, v)| **v == Var::T)
                            .map(|(e, _)| *e)
                            .unwrap_or(0);
                        let mut fall = MultiPoly::constant(vars, coef.clone());
                        if s % 2 == 1 {
                            fall = fall.neg();
                        }
                        // falling factorial of M = p + q + N - j, s steps
                        let m_shift = n as i64 - j as i64;
                        let p_plus_q = MultiPoly::var(vars, Var::Lambda)
                            .add(&MultiPoly::var(vars, Var::Mu));
                        for t in 0..s as i64 {
                            fall = fall.mul(
                                &p_plus_q.add(&MultiPoly::constant(vars, rat(m_shift - t))),
                            );
                        }
                        let total = cpj.mul(&fall).scale(&ck);
                        let offset = j as i64 + s as i64;
                        let entry = acc
                            .entry((*c_gen, offset))
                            .or_insert_with(|| MultiPoly::zero(vars));
                        *entry = entry.add(&total);
                    }
                }
            }
        }
        for poly in acc.values() {
            if !poly.is_zero() {
                continue 'next_n;
            }
        }
        return n;
    }
    unreachable!("locality holds at lambda-degree + T-degree + 1")
}

/// Window-based locality on a sample vector: minimal N <= cap such that all
/// `(z-w)^N`-contracted commutator coefficients vanish on the checked window.
pub fn locality_on_sample(
    ope: &Ope,
    a: &VaElement,
    b: &VaElement,
    v: &VaElement,
    n_lo: i64,
    cap: u32,
) -> Option<u32> {
    let p_hi = ope.vanishing_bound(a, &VaElement::vacuum()) + ope.vanishing_bound(b, v) + 2;
    let q_hi = p_hi;
    let mut comm: BTreeMap<(i64, i64), VaElement> = BTreeMap::new();
    for p in n_lo..p_hi {
        for q in n_lo..q_hi {
            let bv = ope.mode(b, q, v);
            let t1 = ope.mode(a, p, &bv);
            let av = ope.mode(a, p, v);
            let t2 = ope.mode(b, q, &av);
            let c = t1.sub(&t2);
            if !c.is_zero() {
                comm.insert((p, q), c);
            }
        }
    }
    'candidate: for n in 0..=cap {
        for p in n_lo..p_hi - n as i64 {
            for q in n_lo..q_hi - n as i64 {
                let mut s = VaElement::zero();
                for k in 0..=n {
                    let sign = if k % 2 == 0 { rat(1) } else { rat(-1) };
                    let coef = binom(n as i64, k) * sign;
                    if let Some(c) = comm.get(&(p + n as i64 - k as i64, q + k as i64)) {
                        s = s.add(&c.scale(&coef));
                    }
                }
                if !s.is_zero() {
                    continue 'candidate;
                }
            }
        }
        return Some(n);
    }
    None
}

/// Outcome of an associativity comparison.
#[derive(Clone, Debug)]
pub struct AssocReport {
    pub verdict: Verdict,
    pub detail: String,
    /// Total difference degree up to which the comparison was exact.
    pub compared_degree: i64,
}

/// V-valued series over a chart: one scalar tower series per PBW monomial.
pub struct ModuleSeries {
    pub descr: Arc<RingDescriptor>,
    pub windows: Vec<Window>,
    pub comps: BTreeMap<PbwMonomial, TowerSeries>,
}

impl ModuleSeries {
    pub fn new(descr: &Arc<RingDescriptor>, windows: &[Window]) -> Self {
        ModuleSeries {
            descr: descr.clone(),
            windows: windows.to_vec(),
            comps: BTreeMap::new(),
        }
    }

    pub fn add_term(&mut self, exps: &[i64], value: &VaElement) {
        let vars = self.descr.base_poly_vars();
        for (mon, c) in &value.terms {
            let ts = self
                .comps
                .entry(mon.clone())
                .or_insert_with(|| TowerSeries::zero(&self.descr, &self.windows));
            let cur = ts.coeff(exps);
            ts.set_coeff(
                exps.to_vec(),
                cur.add(&LocalizedPoly::constant(&vars, c.clone())),
            );
        }
    }

    pub fn mul_scalar(&self, s: &TowerSeries) -> Self {
        let mut out = ModuleSeries {
            descr: self.descr.clone(),
            windows: Vec::new(),
            comps: BTreeMap::new(),
        };
        let mut windows = None;
        for (mon, ts) in &self.comps {
            let prod = ts.mul(s);
            if windows.is_none() {
                windows = Some(prod.windows.clone());
            }
            out.comps.insert(mon.clone(), prod);
        }
        out.windows = windows.unwrap_or_else(|| self.windows.clone());
        out
    }

    /// Smallest `hi` across levels and components, minus one: the total
    /// difference degree up to which coefficients are trustworthy.
    pub fn trusted_degree(&self) -> i64 {
        self.comps
            .values()
            .flat_map(|ts| ts.windows.iter().map(|w| w.hi))
            .min()
            .unwrap_or(HI_INF)
            - 1
    }

    /// True when no stored coefficient has a negative exponent at any level.
    /// Sound because window lower bounds are support bounds.
    pub fn polynomial_violation(&self) -> Option<(PbwMonomial, Vec<i64>)> {
        for (mon, ts) in &self.comps {
            for (e, c) in ts.coeffs() {
                if !c.is_zero() && e.iter().any(|&x| x < 0) {
                    return Some((mon.clone(), e.clone()));
                }
            }
        }
        None
    }
}

/// Canonical bi-degree map in the differences `t1 = x1-x3`, `t2 = x2-x3`.
pub type CanonicalPoly = BTreeMap<(PbwMonomial, i64, i64), Rational>;

/// Convert a cleared (polynomial) chart series into canonical (t1, t2)
/// coordinates. `conv` maps a chart monomial (e0, e1) to its expansion.
fn to_canonical(
    ms: &ModuleSeries,
    conv: impl Fn(i64, i64) -> Vec<(i64, i64, Rational)>,
    max_degree: i64,
) -> CanonicalPoly {
    let mut out: CanonicalPoly = BTreeMap::new();
    for (mon, ts) in &ms.comps {
        for (e, c) in ts.coeffs() {
            let scalar = c.as_constant().expect("equivariant data has constant coefficients");
            if scalar.is_zero() {
                continue;
            }
            for (a, b, k) in conv(e[0], e[1]) {
                if a + b > max_degree {
                    continue;
                }
                let key = (mon.clone(), a, b);
                let v = out.remove(&key).unwrap_or_else(Rational::zero) + k * scalar.clone();
                if v.is_zero() {
                    out.remove(&key);
                } else {
                    out.insert(key, v);
                }
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// The three expansions of a triple product, cleared and compared.
///
/// Chart A carries `Y(a,z) Y(b,w) c` with z inner, chart B carries
/// `Y(b,w) Y(a,z) c` with w inner, chart C carries `Y(Y(a,z-w)b, w) c` with
/// w inner and z-w outer. Each is multiplied by
/// `(x1-x3)^A (x2-x3)^B (x1-x2)^C` and the results must agree as polynomials.
pub fn verify_associativity(
    ope: &Ope,
    a: &VaElement,
    b: &VaElement,
    c: &VaElement,
    degree: i64,
) -> AssocReport {
    let module = &ope.module;
    let da = module.delta_ceil(a);
    let db = module.delta_ceil(b);
    let dc = module.delta_ceil(c);
    // clearing exponents: the pairwise OPE pole orders (exact, mutation-aware)
    let pa = ope.pole_order(a, c); // for x1-x3
    let pb = ope.pole_order(b, c); // for x2-x3
    let pc = ope.pole_order(a, b); // for x1-x2
    let extra = ope.mutation.as_ref().map(|m| m.max_mode()).unwrap_or(0);
    let dabc = da + db + dc + 3 * extra;
    // all cleared content of interest lives at total degree <= t_deg
    let t_deg = pa + pb + pc + degree;

    let coord_vars: &[Var] = &[Var::X(1), Var::X(2), Var::X(3)];
    let clearing = LocalizedPoly::from_poly(
        MultiPoly::coord_diff(coord_vars, 1, 3)
            .pow(pa as u32)
            .mul(&MultiPoly::coord_diff(coord_vars, 2, 3).pow(pb as u32))
            .mul(&MultiPoly::coord_diff(coord_vars, 1, 2).pow(pc as u32)),
    );

    // chart A: inner (1,3) = z, outer (2,3) = w
    let chart_a = overlap_z123(2, 3);
    // chart B: inner (2,3) = w, outer (1,3) = z
    let chart_b = overlap_z123(1, 3);
    // chart C: inner (2,3) = w, outer (1,2) = z-w
    let chart_c = RingDescriptor::new(
        &[3],
        &[],
        &[
            TowerLevel { diff: (2, 3), mode: SeriesMode::Laurent },
            TowerLevel { diff: (1, 2), mode: SeriesMode::Laurent },
        ],
    );

    // expansion boxes [lo, hi) per level: hi so the cleared windows reach
    // total degree t_deg, lo covering every possibly-nonzero coefficient
    // (outer-level poles are bounded by the pair pole order; inner-level
    // poles grow with the outer exponent, bounded through the vanishing
    // degree of the whole triple)
    let inner_hi_a = t_deg + 2 - pa;
    let outer_hi_a = t_deg + 2 - pb;
    let box_a = [
        Window::new(-(dabc + outer_hi_a + 2), inner_hi_a),
        Window::new(-pb, outer_hi_a),
    ];
    let inner_hi_b = t_deg + 2 - pb;
    let outer_hi_b = t_deg + 2 - pa;
    let box_b = [
        Window::new(-(dabc + outer_hi_b + 2), inner_hi_b),
        Window::new(-pa, outer_hi_b),
    ];
    let inner_hi_c = t_deg + 2 - pb;
    let outer_hi_c = t_deg + 2 - pc;
    let box_c = [
        Window::new(-(dabc + outer_hi_c + 2), inner_hi_c),
        Window::new(-pc, outer_hi_c),
    ];

    // E1: coefficients a_(p)(b_(q) c) at (z-exp, w-exp) = (-p-1, -q-1)
    let mut e1 = ModuleSeries::new(&chart_a, &box_a);
    for ew in box_a[1].lo..box_a[1].hi {
        let q = -ew - 1;
        let inner = ope.mode(b, q, c);
        if inner.is_zero() {
            continue;
        }
        for ez in box_a[0].lo..box_a[0].hi {
            let p = -ez - 1;
            let outer = ope.mode(a, p, &inner);
            if !outer.is_zero() {
                e1.add_term(&[ez, ew], &outer);
            }
        }
    }
    // E2: coefficients b_(q)(a_(p) c) at (w-exp, z-exp)
    let mut e2 = ModuleSeries::new(&chart_b, &box_b);
    for ez in box_b[1].lo..box_b[1].hi {
        let p = -ez - 1;
        let inner = ope.mode(a, p, c);
        if inner.is_zero() {
            continue;
        }
        for ew in box_b[0].lo..box_b[0].hi {
            let q = -ew - 1;
            let outer = ope.mode(b, q, &inner);
            if !outer.is_zero() {
                e2.add_term(&[ew, ez], &outer);
            }
        }
    }
    // E3: coefficients (a_(n) b)_(q) c at (w-exp, u-exp) with u = z-w
    let mut e3 = ModuleSeries::new(&chart_c, &box_c);
    for eu in box_c[1].lo..box_c[1].hi {
        let n = -eu - 1;
        let d = ope.mode(a, n, b);
        if d.is_zero() {
            continue;
        }
        for ew in box_c[0].lo..box_c[0].hi {
            let q = -ew - 1;
            let outer = ope.mode(&d, q, c);
            if !outer.is_zero() {
                e3.add_term(&[ew, eu], &outer);
            }
        }
    }

    let full = [Window::new(0, HI_INF), Window::new(0, HI_INF)];
    let clear_a = expand_in_chart(&clearing, &chart_a, &full).expect("clearing is polynomial");
    let clear_b = expand_in_chart(&clearing, &chart_b, &full).expect("clearing is polynomial");
    let clear_c = expand_in_chart(&clearing, &chart_c, &full).expect("clearing is polynomial");

    let g1 = e1.mul_scalar(&clear_a);
    let g2 = e2.mul_scalar(&clear_b);
    let g3 = e3.mul_scalar(&clear_c);

    let dcmp = [&g1, &g2, &g3]
        .iter()
        .map(|g| g.trusted_degree())
        .min()
        .unwrap()
        .min(t_deg);
    if dcmp < 0 {
        return AssocReport {
            verdict: Verdict::Inconclusive,
            detail: format!("window exhausted before degree 0 (trusted {dcmp})"),
            compared_degree: dcmp,
        };
    }
    for (label, g) in [("zw-chart", &g1), ("wz-chart", &g2), ("(z-w)w-chart", &g3)] {
        if let Some((mon, e)) = g.polynomial_violation() {
            return AssocReport {
                verdict: Verdict::Fail,
                detail: format!(
                    "cleared expansion in {label} has a pole: component {mon} at exponents {e:?}"
                ),
                compared_degree: dcmp,
            };
        }
    }

    // chart A monomials: (e0, e1) = t1^{e0} t2^{e1}
    let m1 = to_canonical(&g1, |e0, e1| vec![(e0, e1, rat(1))], dcmp);
    // chart B monomials: (e0, e1) = t2^{e0} t1^{e1}
    let m2 = to_canonical(&g2, |e0, e1| vec![(e1, e0, rat(1))], dcmp);
    // chart C monomials: (e0, e1) = t2^{e0} (t1 - t2)^{e1}
    let m3 = to_canonical(
        &g3,
        |e0, e1| {
            let mut v = Vec::new();
            for k in 0..=e1 {
                let sign = if (e1 - k) % 2 == 0 { rat(1) } else { rat(-1) };
                v.push((k, e0 + e1 - k, binom(e1, k as u32) * sign));
            }
            v
        },
        dcmp,
    );

    for (label, x, y) in [("zw vs wz", &m1, &m2), ("zw vs (z-w)w", &m1, &m3)] {
        let keys: std::collections::BTreeSet<_> = x.keys().chain(y.keys()).cloned().collect();
        for key in keys {
            let cx = x.get(&key).cloned().unwrap_or_else(Rational::zero);
            let cy = y.get(&key).cloned().unwrap_or_else(Rational::zero);
            if cx != cy {
                return AssocReport {
                    verdict: Verdict::Fail,
                    detail: format!(
                        "{label}: component {} at t1^{} t2^{}: {} vs {}",
                        key.0, key.1, key.2, cx, cy
                    ),
                    compared_degree: dcmp,
                };
            }
        }
    }

    AssocReport {
        verdict: Verdict::Pass,
        detail: String::new(),
        compared_degree: dcmp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{builtin_sl2, builtin_virasoro};

    fn vir(cutoff: i64) -> Arc<EnvelopingModule> {
        EnvelopingModule::new(&builtin_virasoro(), cutoff).unwrap()
    }

    fn sl2(cutoff: i64) -> Arc<EnvelopingModule> {
        EnvelopingModule::new(&builtin_sl2(), cutoff).unwrap()
    }

    fn lmon(modes: &[i64]) -> PbwMonomial {
        PbwMonomial(modes.iter().map(|&m| (0usize, m)).collect())
    }

    fn lstate(modes: &[i64]) -> VaElement {
        VaElement::monomial(lmon(modes), rat(1))
    }

    #[test]
    fn weights_solved() {
        assert_eq!(vir(4).gen_weights, vec![rat(2)]);
        assert_eq!(sl2(4).gen_weights, vec![rat(1), rat(1), rat(1)]);
    }

    #[test]
    fn basis_counts_are_partitions() {
        // Virasoro basis at weight w: partitions of w
        let m = vir(6);
        let expect = [1usize, 1, 2, 3, 5, 7, 11];
        for (w, e) in expect.iter().enumerate() {
            assert_eq!(m.basis_of_weight(w as i64).count(), *e, "weight {w}");
        }
    }

    #[test]
    fn act_examples() {
        let m = vir(6);
        // L_0 |0> = 0
        assert!(m.act_mode(0, 0, &VaElement::vacuum()).is_zero());
        // L_1 (L_{-1}|0>) = [L_1, L_{-1}]|0> = 2 L_{-1}... modes bracket:
        // (1 - (-1)) L_{1+(-1)-1} = 2 L_{-1}, then L_{-1} L_1 |0> = 0
        let v = lstate(&[-1]);
        assert_eq!(m.act_mode(0, 1, &v), lstate(&[-1]).scale(&rat(2)));
        // already normally ordered
        let s = sl2(4);
        let f = VaElement::monomial(PbwMonomial(vec![(2, -1)]), rat(1));
        let ef = s.act_mode(0, -1, &f);
        assert_eq!(
            ef,
            VaElement::monomial(PbwMonomial(vec![(0, -1), (2, -1)]), rat(1))
        );
    }

    #[test]
    fn straightening_equal_modes_commute() {
        // [L_{-1}, L_{-2}] = L_{-4}: straighten L_{-1} L_{-2} |0>
        let m = vir(6);
        let got = m.act_mode(0, -1, &lstate(&[-2]));
        let mut expect = VaElement::monomial(lmon(&[-2, -1]), rat(1));
        expect.add_term(lmon(&[-4]), rat(1));
        assert_eq!(got, expect);
    }

    #[test]
    fn translation_examples() {
        let m = vir(8);
        assert!(m.translate(&VaElement::vacuum()).is_zero());
        // T(L_{-1}|0>) = L_{-2}|0>
        assert_eq!(m.translate(&lstate(&[-1])), lstate(&[-2]));
        // T is a derivation against the module action
        let u = LieRElement::mode(0, -2);
        let v = lstate(&[-1]);
        let lhs = m.translate(&m.act_lie(&u, &v));
        let rhs = m
            .act_lie(&m.modes.t_action(&u), &v)
            .add(&m.act_lie(&u, &m.translate(&v)));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn vacuum_field_is_identity() {
        let m = vir(6);
        let v = lstate(&[-2, -1]);
        assert_eq!(m.mode_product_basis(&PbwMonomial::vacuum(), -1, &lmon(&[-2, -1])), v);
        assert!(m.mode_product_basis(&PbwMonomial::vacuum(), 0, &lmon(&[-1])).is_zero());
        assert!(m.mode_product_basis(&PbwMonomial::vacuum(), -2, &lmon(&[-1])).is_zero());
    }

    #[test]
    fn generator_field_matches_mode_action() {
        let m = vir(8);
        let ope = Ope::new(m.clone());
        // Y(L, z) v: coefficient at n equals the action of L_n
        let l = VaElement::monomial(PbwMonomial::generator(0), rat(1));
        let v = lstate(&[-1]);
        for n in -4..4i64 {
            let got = ope.mode(&l, n, &v);
            let expect = m.act_mode(0, n, &v);
            assert_eq!(got, expect, "mode {n}");
        }
        // spec example: coefficient of z^{-2} (n = 1) on L_{-1}|0> is 2 L_{-1}|0>
        assert_eq!(ope.mode(&l, 1, &v), v.scale(&rat(2)));
    }

    #[test]
    fn creation_property() {
        let m = sl2(5);
        let ope = Ope::new(m.clone());
        for mon in m.basis() {
            let u = VaElement::monomial(mon.clone(), rat(1));
            let f = ope.field(&u, &VaElement::vacuum(), -(m.cutoff + 2));
            for (n, c) in &f.coeffs {
                assert!(*n < 0, "pole against the vacuum at mode {n} for {mon}");
                let _ = c;
            }
            assert_eq!(f.coeff(-1), u, "z^0 coefficient of Y({mon},z)|0>");
        }
    }

    #[test]
    fn nested_product_hand_value() {
        // (L_{-1}L_{-1}|0>)_(0) L_{-1}|0> = 6 L_{-2}L_{-1}|0> + 2 L_{-4}|0>
        let m = vir(8);
        let got = m.mode_product_basis(&lmon(&[-1, -1]), 0, &lmon(&[-1]));
        let mut expect = VaElement::monomial(lmon(&[-2, -1]), rat(6));
        expect.add_term(lmon(&[-4]), rat(2));
        assert_eq!(got, expect);
    }

    #[test]
    fn translation_mode_identity() {
        // (Tu)_(n) v = -n u_(n-1) v
        let m = vir(7);
        let u = lstate(&[-2, -1]);
        let v = lstate(&[-1]);
        let tu = m.translate(&u);
        for n in -5..6i64 {
            let lhs = m.mode_product(&tu, n, &v);
            let rhs = m.mode_product(&u, n - 1, &v).scale(&rat(-n));
            assert_eq!(lhs, rhs, "mode {n}");
        }
    }

    #[test]
    fn operator_locality_orders() {
        let v = vir(4);
        assert_eq!(locality_order_generators(&v, 0, 0), 2);
        let s = sl2(4);
        // (e, f): lambda-degree 0, so N = 1
        assert_eq!(locality_order_generators(&s, 0, 2), 1);
        // (e, e): bracket vanishes identically, N = 0
        assert_eq!(locality_order_generators(&s, 0, 0), 0);
    }

    #[test]
    fn sample_locality_matches_operator_locality() {
        let m = vir(8);
        let ope = Ope::new(m.clone());
        let l = VaElement::monomial(PbwMonomial::generator(0), rat(1));
        let got = locality_on_sample(&ope, &l, &l, &lstate(&[-1]), -6, 6);
        assert_eq!(got, Some(2));

        let s = sl2(6);
        let opes = Ope::new(s.clone());
        let e = VaElement::monomial(PbwMonomial::generator(0), rat(1));
        let f = VaElement::monomial(PbwMonomial::generator(2), rat(1));
        let got = locality_on_sample(&opes, &e, &f, &VaElement::vacuum(), -6, 6);
        assert_eq!(got, Some(1));
        // the vacuum commutes with everything
        let got = locality_on_sample(&opes, &VaElement::vacuum(), &f, &e, -6, 6);
        assert_eq!(got, Some(0));
    }

    #[test]
    fn skew_symmetry_holds() {
        let m = vir(8);
        let ope = Ope::new(m.clone());
        let a = lstate(&[-2, -1]);
        let b = lstate(&[-1]);
        assert!(ope.commutativity_check(&a, &b, -8).is_ok());
        let s = sl2(6);
        let opes = Ope::new(s.clone());
        let e = VaElement::monomial(PbwMonomial::generator(0), rat(1));
        let f = VaElement::monomial(PbwMonomial::generator(2), rat(1));
        assert!(opes.commutativity_check(&e, &f, -6).is_ok());
    }

    #[test]
    fn associativity_on_virasoro_triple() {
        let m = vir(8);
        let ope = Ope::new(m.clone());
        let l = VaElement::monomial(PbwMonomial::generator(0), rat(1));
        let rep = verify_associativity(&ope, &l, &l, &l, 4);
        assert_eq!(rep.verdict, Verdict::Pass, "{}", rep.detail);
        assert!(rep.compared_degree >= 4);
    }

    #[test]
    fn associativity_vacuum_trivial() {
        let m = vir(6);
        let ope = Ope::new(m.clone());
        let l = VaElement::monomial(PbwMonomial::generator(0), rat(1));
        let rep = verify_associativity(&ope, &VaElement::vacuum(), &l, &l, 3);
        assert_eq!(rep.verdict, Verdict::Pass, "{}", rep.detail);
    }

    #[test]
    fn associativity_detects_broken_commutator() {
        // adding |0> to L_(3)L (the central-charge direction without a
        // central element) keeps skew-symmetry but breaks associativity
        let m = vir(8);
        let mutation = Mutation {
            name: "vir-charge".into(),
            entries: vec![(
                PbwMonomial::generator(0),
                PbwMonomial::generator(0),
                3,
                VaElement::vacuum(),
            )],
        };
        let ope = Ope::with_mutation(m.clone(), mutation);
        let l = VaElement::monomial(PbwMonomial::generator(0), rat(1));
        assert!(ope.commutativity_check(&l, &l, -8).is_ok());
        let rep = verify_associativity(&ope, &l, &l, &l, 4);
        assert_eq!(rep.verdict, Verdict::Fail);
    }
}
