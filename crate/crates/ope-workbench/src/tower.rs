//! Desk-scale models of iterated Laurent/power-series rings.
//!
//! A ring is described by a localized polynomial base together with a tower of
//! series variables, each a coordinate difference `x_a - x_b`, nested from
//! inner (level 0) to outer. Elements carry explicit truncation windows per
//! level; every operation computes the largest window on which its output is
//! provably exact, so a stored coefficient inside the window is always the
//! true coefficient.
//!
//! Window semantics are hierarchical: at the outermost level the lower bound
//! is an absolute support bound; at an inner level it bounds the support of
//! all terms whose outer exponents lie inside their windows.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::AlgebraError;
use crate::localized::{DiffKey, LocalizedPoly};
use crate::poly::{MultiPoly, Var};
use crate::rational::Rational;

pub const HI_INF: i64 = i64::MAX / 8;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SeriesMode {
    PowerSeries,
    Laurent,
}

/// Truncation window `[lo, hi)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Self {
        Window { lo, hi }
    }

    pub fn contains(&self, e: i64) -> bool {
        self.lo <= e && e < self.hi
    }

    fn meet(self, other: Window) -> Window {
        Window {
            lo: self.lo.min(other.lo),
            hi: self.hi.min(other.hi),
        }
    }
}

/// One series level: the difference `x_a - x_b` (oriented) and its mode.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TowerLevel {
    /// `(a, b)` meaning the variable `x_a - x_b`.
    pub diff: (u8, u8),
    pub mode: SeriesMode,
}

/// Base ring plus series tower; level 0 is innermost.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RingDescriptor {
    pub base_vars: Vec<u8>,
    /// Differences of base coordinates inverted in the base ring, i < j.
    pub inverted: Vec<DiffKey>,
    pub tower: Vec<TowerLevel>,
}

impl RingDescriptor {
    pub fn new(base_vars: &[u8], inverted: &[DiffKey], tower: &[TowerLevel]) -> Arc<Self> {
        let d = RingDescriptor {
            base_vars: base_vars.to_vec(),
            inverted: inverted.to_vec(),
            tower: tower.to_vec(),
        };
        d.validate();
        Arc::new(d)
    }

    fn validate(&self) {
        for w in self.tower.windows(2) {
            assert_ne!(w[0].diff, w[1].diff, "tower variables must be distinct");
        }
        let mut seen = Vec::new();
        for t in &self.tower {
            assert!(!seen.contains(&t.diff), "tower variables must be distinct");
            seen.push(t.diff);
            assert_ne!(t.diff.0, t.diff.1);
        }
        for &(i, j) in &self.inverted {
            assert!(i < j, "inverted pairs stored with i < j");
            assert!(
                self.base_vars.contains(&i) && self.base_vars.contains(&j),
                "inverted pair must consist of base variables"
            );
        }
    }

    pub fn depth(&self) -> usize {
        self.tower.len()
    }

    /// Ambient polynomial variables of base coefficients.
    pub fn base_poly_vars(&self) -> Vec<Var> {
        let mut v: Vec<Var> = self.base_vars.iter().map(|&i| Var::X(i)).collect();
        v.sort();
        v
    }

    /// All coordinates known to the chart: base variables plus any coordinate
    /// reachable through a tower difference.
    pub fn coordinates(&self) -> Vec<u8> {
        let mut coords: Vec<u8> = self.base_vars.clone();
        let mut changed = true;
        while changed {
            changed = false;
            for t in &self.tower {
                let (a, b) = t.diff;
                if coords.contains(&b) && !coords.contains(&a) {
                    coords.push(a);
                    changed = true;
                }
                if coords.contains(&a) && !coords.contains(&b) {
                    coords.push(b);
                    changed = true;
                }
            }
        }
        coords.sort();
        coords
    }

    /// Express the coordinate `x_c` as `x_base + sum of signed tower slots`.
    /// Returns (base variable, per-level signed multiplicity).
    fn resolve_coordinate(&self, c: u8) -> Result<(u8, Vec<i64>), AlgebraError> {
        if self.base_vars.contains(&c) {
            return Ok((c, vec![0; self.depth()]));
        }
        // BFS from c toward a base variable through difference edges
        let mut frontier = vec![(c, vec![0i64; self.depth()])];
        let mut visited = vec![c];
        while let Some((v, path)) = frontier.pop() {
            for (lvl, t) in self.tower.iter().enumerate() {
                let (a, b) = t.diff;
                // x_a = x_b + d_lvl ; x_b = x_a - d_lvl
                let next = if v == a {
                    Some((b, 1i64))
                } else if v == b {
                    Some((a, -1i64))
                } else {
                    None
                };
                if let Some((w, sign)) = next {
                    if visited.contains(&w) {
                        continue;
                    }
                    let mut p = path.clone();
                    p[lvl] += sign;
                    if self.base_vars.contains(&w) {
                        return Ok((w, p));
                    }
                    visited.push(w);
                    frontier.push((w, p));
                }
            }
        }
        Err(AlgebraError::NoCanonicalMap(format!(
            "coordinate x{c} is not reachable from the chart base"
        )))
    }

    /// Family membership predicate distinguishing descriptors by nesting.
    ///
    /// `exps[level] = (intercept, slope)` describes the affine exponent at
    /// each level of the monomial family `m_n`, `n >= 0`. The infinite sum
    /// `sum_n m_n` is an element of the ring iff power-series levels stay
    /// non-negative and, scanning from the outermost level inward, the first
    /// level with nonzero slope has positive slope.
    pub fn admits_family(&self, exps: &[(i64, i64)]) -> bool {
        assert_eq!(exps.len(), self.depth());
        for (lvl, &(b, a)) in exps.iter().enumerate() {
            if self.tower[lvl].mode == SeriesMode::PowerSeries && (a < 0 || b < 0) {
                return false;
            }
        }
        for lvl in (0..self.depth()).rev() {
            let (_, slope) = exps[lvl];
            if slope > 0 {
                return true;
            }
            if slope < 0 {
                return false;
            }
        }
        // constant family: infinitely many copies of one monomial
        false
    }
}

/// Truncated element of an iterated series ring.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TowerSeries {
    pub descr: Arc<RingDescriptor>,
    pub windows: Vec<Window>,
    /// exponent vector (level 0 first) -> base coefficient
    coeffs: BTreeMap<Vec<i64>, LocalizedPoly>,
}

impl TowerSeries {
    pub fn zero(descr: &Arc<RingDescriptor>, windows: &[Window]) -> Self {
        assert_eq!(windows.len(), descr.depth());
        for (w, t) in windows.iter().zip(&descr.tower) {
            if t.mode == SeriesMode::PowerSeries {
                assert!(w.lo >= 0, "power-series window must start at or above 0");
            }
        }
        TowerSeries {
            descr: descr.clone(),
            windows: windows.to_vec(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(descr: &Arc<RingDescriptor>, windows: &[Window]) -> Self {
        let vars = descr.base_poly_vars();
        let mut s = Self::zero(descr, windows);
        s.set_coeff(vec![0; descr.depth()], LocalizedPoly::one(&vars));
        s
    }

    pub fn set_coeff(&mut self, exps: Vec<i64>, c: LocalizedPoly) {
        assert_eq!(exps.len(), self.descr.depth());
        for (e, w) in exps.iter().zip(&self.windows) {
            assert!(w.contains(*e), "exponent {e} outside window {w:?}");
        }
        if c.is_zero() {
            self.coeffs.remove(&exps);
        } else {
            self.coeffs.insert(exps, c);
        }
    }

    pub fn coeff(&self, exps: &[i64]) -> LocalizedPoly {
        self.coeffs
            .get(exps)
            .cloned()
            .unwrap_or_else(|| LocalizedPoly::zero(&self.descr.base_poly_vars()))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Vec<i64>, &LocalizedPoly)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Provable support lower bound per level: everything strictly below the
    /// window is absent, and stored-but-zero positions inside the window are
    /// exactly zero, so the bound tightens to the least stored exponent (or
    /// to `hi` for a series that vanishes on its whole window).
    pub fn support_lo(&self) -> Vec<i64> {
        (0..self.descr.depth())
            .map(|l| {
                self.coeffs
                    .keys()
                    .map(|e| e[l])
                    .min()
                    .unwrap_or(self.windows[l].hi)
                    .max(self.windows[l].lo)
            })
            .collect()
    }

    /// Restrict to smaller windows, dropping terms outside.
    pub fn truncate(&self, windows: &[Window]) -> Self {
        let mut out = TowerSeries {
            descr: self.descr.clone(),
            windows: self
                .windows
                .iter()
                .zip(windows)
                .map(|(a, b)| Window::new(a.lo.max(b.lo), a.hi.min(b.hi)))
                .collect(),
            coeffs: BTreeMap::new(),
        };
        for (e, c) in &self.coeffs {
            if e.iter().zip(&out.windows).all(|(x, w)| w.contains(*x)) {
                out.coeffs.insert(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        if self.descr != other.descr {
            return Err(AlgebraError::DescriptorMismatch);
        }
        let windows: Vec<Window> = self
            .windows
            .iter()
            .zip(&other.windows)
            .map(|(a, b)| a.meet(*b))
            .collect();
        let mut out = TowerSeries {
            descr: self.descr.clone(),
            windows,
            coeffs: BTreeMap::new(),
        };
        for (e, c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            if !e.iter().zip(&out.windows).all(|(x, w)| w.contains(*x)) {
                continue;
            }
            let cur = out.coeff(e);
            out.set_coeff(e.clone(), cur.add(c));
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("descriptors must match")
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = TowerSeries {
            descr: self.descr.clone(),
            windows: self.windows.clone(),
            coeffs: BTreeMap::new(),
        };
        for (e, v) in &self.coeffs {
            let s = v.scale(c);
            if !s.is_zero() {
                out.coeffs.insert(e.clone(), s);
            }
        }
        out
    }

    pub fn scale_base(&self, c: &LocalizedPoly) -> Self {
        let mut out = TowerSeries {
            descr: self.descr.clone(),
            windows: self.windows.clone(),
            coeffs: BTreeMap::new(),
        };
        for (e, v) in &self.coeffs {
            let s = v.mul(c);
            if !s.is_zero() {
                out.coeffs.insert(e.clone(), s);
            }
        }
        out
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        if self.descr != other.descr {
            return Err(AlgebraError::DescriptorMismatch);
        }
        let lo_f = self.support_lo();
        let lo_g = other.support_lo();
        let windows: Vec<Window> = (0..self.descr.depth())
            .map(|l| Window {
                lo: lo_f[l] + lo_g[l],
                hi: (self.windows[l].hi.saturating_add(lo_g[l]))
                    .min(other.windows[l].hi.saturating_add(lo_f[l])),
            })
            .collect();
        let mut acc: BTreeMap<Vec<i64>, LocalizedPoly> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let e: Vec<i64> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                if !e.iter().zip(&windows).all(|(x, w)| w.contains(*x)) {
                    continue;
                }
                let prod = ca.mul(cb);
                if prod.is_zero() {
                    continue;
                }
                match acc.get_mut(&e) {
                    Some(cur) => {
                        let s = cur.add(&prod);
                        if s.is_zero() {
                            acc.remove(&e);
                        } else {
                            *cur = s;
                        }
                    }
                    None => {
                        acc.insert(e, prod);
                    }
                }
            }
        }
        Ok(TowerSeries {
            descr: self.descr.clone(),
            windows,
            coeffs: acc,
        })
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("descriptors must match")
    }

    /// Shift the outermost exponent by `delta`, adjusting the window.
    fn shift_outer(&self, delta: i64) -> Self {
        let lvl = self.descr.depth() - 1;
        if self.descr.tower[lvl].mode == SeriesMode::PowerSeries {
            assert!(
                self.support_lo()[lvl] + delta >= 0,
                "shift would leave the power-series ring"
            );
        }
        let mut out = TowerSeries {
            descr: self.descr.clone(),
            windows: self.windows.clone(),
            coeffs: BTreeMap::new(),
        };
        out.windows[lvl] = Window::new(
            self.support_lo()[lvl] + delta,
            self.windows[lvl].hi.saturating_add(delta),
        );
        for (e, c) in &self.coeffs {
            let mut e2 = e.clone();
            e2[lvl] += delta;
            out.coeffs.insert(e2, c.clone());
        }
        out
    }

    /// Multiplicative inverse on the element's own windows.
    pub fn tower_invert(&self) -> Result<Self, AlgebraError> {
        assert!(
            self.windows.iter().all(|w| w.hi < HI_INF),
            "inverting an exact series needs an explicit target window"
        );
        self.invert_to(&self.windows)
    }

    /// Multiplicative inverse, computed so that the result is provably exact
    /// on as much of `target` as the input's windows allow. Errors when the
    /// leading coefficient is not a unit.
    pub fn invert_to(&self, target: &[Window]) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::NotInvertible("zero element".into()));
        }
        let depth = self.descr.depth();
        assert_eq!(target.len(), depth);
        if depth == 0 {
            let c = self.coeff(&[]).try_invert(&self.descr.inverted)?;
            let mut out = Self::zero(&self.descr, &[]);
            out.set_coeff(vec![], c);
            return Ok(out);
        }
        // working windows: target inflated enough to feed the Neumann terms
        let slack: i64 = target
            .iter()
            .map(|w| (w.hi - w.lo).max(0))
            .sum::<i64>()
            .max(4);
        let work: Vec<Window> = (0..depth)
            .map(|l| {
                let mut lo = target[l].lo - slack;
                if self.descr.tower[l].mode == SeriesMode::PowerSeries {
                    lo = lo.max(0);
                }
                Window::new(lo, target[l].hi.saturating_add(slack))
            })
            .collect();
        // leading exponent at the outermost level
        let lvl = depth - 1;
        let v = self.coeffs.keys().map(|e| e[lvl]).min().unwrap();
        if self.descr.tower[lvl].mode == SeriesMode::PowerSeries && v > 0 {
            return Err(AlgebraError::NotInvertible(format!(
                "leading term divisible by the level-{lvl} series variable"
            )));
        }
        // f = t^v * (c0 + higher) with c0 the inner series at the leading exponent
        let inner_descr = Arc::new(RingDescriptor {
            base_vars: self.descr.base_vars.clone(),
            inverted: self.descr.inverted.clone(),
            tower: self.descr.tower[..lvl].to_vec(),
        });
        let mut c0 = TowerSeries::zero(&inner_descr, &self.windows[..lvl]);
        for (e, c) in &self.coeffs {
            if e[lvl] == v {
                c0.set_coeff(e[..lvl].to_vec(), c.clone());
            }
        }
        let c0_inv = c0.invert_to(&work[..lvl])?;
        // lift c0_inv to the full tower, constant in the outer variable (so
        // exact at every outer order)
        let c0_inv_full = {
            let mut w = c0_inv.windows.clone();
            w.push(Window::new(0, HI_INF));
            let mut out = TowerSeries {
                descr: self.descr.clone(),
                windows: w,
                coeffs: BTreeMap::new(),
            };
            for (e, c) in &c0_inv.coeffs {
                let mut e2 = e.clone();
                e2.push(0);
                out.coeffs.insert(e2, c.clone());
            }
            out
        };
        // u = t^{-v} f c0^{-1} = 1 + r with r supported at outer exponents >= 1
        let u = self.shift_outer(-v).mul(&c0_inv_full).truncate(&work);
        let one = Self::one(&self.descr, &u.windows);
        let neg_r = one.sub(&u);
        // Neumann series 1 + (-r) + (-r)^2 + ...: each power raises the least
        // outer exponent, so finitely many terms matter within the window
        let mut total = Self::one(&self.descr, &u.windows);
        let mut pw = Self::one(&self.descr, &u.windows);
        let cap = (work[lvl].hi - work[lvl].lo).max(1);
        for _ in 1..=cap {
            pw = pw.mul(&neg_r).truncate(&work);
            if pw.is_zero() {
                break;
            }
            total = total.add(&pw);
        }
        Ok(total.mul(&c0_inv_full).shift_outer(-v))
    }
}

impl fmt::Display for TowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let names: Vec<String> = self
            .descr
            .tower
            .iter()
            .map(|t| format!("(x{}-x{})", t.diff.0, t.diff.1))
            .collect();
        let mut first = true;
        for (e, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "[{c}]")?;
            for (l, k) in e.iter().enumerate() {
                if *k != 0 {
                    write!(f, "{}^{}", names[l], k)?;
                }
            }
        }
        Ok(())
    }
}

/// `expand_in_chart`: canonical image of a localized polynomial in a chart,
/// rewriting each inverted difference as a geometric series where needed.
pub fn expand_in_chart(
    p: &LocalizedPoly,
    descr: &Arc<RingDescriptor>,
    windows: &[Window],
) -> Result<TowerSeries, AlgebraError> {
    let num = expand_polynomial(p.numerator(), descr)?;
    let mut out = num;
    for (&(i, j), &k) in p.denominator_exponents() {
        let dpoly = MultiPoly::coord_diff(p.numerator().vars(), i, j);
        let dexp = expand_polynomial(&dpoly, descr)?;
        let dinv = dexp.invert_to(windows).map_err(|e| match e {
            AlgebraError::NotInvertible(m) => AlgebraError::NoCanonicalMap(format!(
                "difference x{i}-x{j} is not invertible: {m}"
            )),
            other => other,
        })?;
        for _ in 0..k {
            out = out.mul(&dinv);
        }
    }
    Ok(out.truncate(windows))
}

/// Expand a plain polynomial in chart coordinates; exact at all orders.
fn expand_polynomial(
    p: &MultiPoly,
    descr: &Arc<RingDescriptor>,
) -> Result<TowerSeries, AlgebraError> {
    let depth = descr.depth();
    let base_vars = descr.base_poly_vars();
    // ambient: the input's variables, the base coordinates, and one slot
    // variable per tower level
    let mut ambient: Vec<Var> = base_vars.clone();
    for v in p.vars() {
        if !ambient.contains(v) {
            ambient.push(*v);
        }
    }
    for l in 0..depth {
        ambient.push(Var::D(l as u8));
    }
    ambient.sort();
    // substitute every coordinate of p
    let mut q = p.embed(&ambient);
    for v in p.vars() {
        if let Var::X(c) = v {
            if q.degree_in(*v).unwrap_or(0) == 0 {
                continue;
            }
            let (base, path) = descr.resolve_coordinate(*c)?;
            let mut repl = MultiPoly::var(&ambient, Var::X(base));
            for (lvl, &mult) in path.iter().enumerate() {
                if mult != 0 {
                    let slot = MultiPoly::var(&ambient, Var::D(lvl as u8));
                    let signed = if mult > 0 { slot } else { slot.neg() };
                    for _ in 0..mult.abs() {
                        repl = repl.add(&signed);
                    }
                }
            }
            if Var::X(*c) != Var::X(base) || path.iter().any(|&m| m != 0) {
                q = q.substitute(*v, &repl);
            }
        }
    }
    // exact objects: support starts at 0 on every level, provable to HI_INF
    let full: Vec<Window> = (0..depth).map(|_| Window::new(0, HI_INF)).collect();
    let mut out = TowerSeries::zero(descr, &full);
    // split off the slot exponents
    let mut groups: BTreeMap<Vec<i64>, MultiPoly> = BTreeMap::new();
    for (e, c) in q.terms() {
        let mut key = vec![0i64; depth];
        let mut rest = vec![0u32; ambient.len()];
        for (idx, k) in e.iter().enumerate() {
            match ambient[idx] {
                Var::D(l) => key[l as usize] = *k as i64,
                _ => rest[idx] = *k,
            }
        }
        let mono = MultiPoly::monomial(
            &ambient,
            &ambient
                .iter()
                .enumerate()
                .filter(|(i, _)| rest[*i] > 0)
                .map(|(i, v)| (*v, rest[i]))
                .collect::<Vec<_>>(),
            c.clone(),
        );
        match groups.get_mut(&key) {
            Some(g) => *g = g.add(&mono),
            None => {
                groups.insert(key, mono);
            }
        }
    }
    for (key, poly) in groups {
        let restricted = poly.restrict(&base_vars)?;
        if !restricted.is_zero() {
            out.set_coeff(key, LocalizedPoly::from_poly(restricted));
        }
    }
    Ok(out)
}

/// Normally ordered tensor product: `f` over ring A becomes the inner block
/// of the concatenated tower, `g` over ring B the outer block.
pub fn nott_product(f: &TowerSeries, g: &TowerSeries) -> Result<TowerSeries, AlgebraError> {
    let a = &f.descr;
    let b = &g.descr;
    let a_coords = a.coordinates();
    let b_coords = b.coordinates();
    if a_coords.iter().any(|c| b_coords.contains(c)) {
        return Err(AlgebraError::VariableCollision);
    }
    let mut base: Vec<u8> = a.base_vars.clone();
    base.extend(&b.base_vars);
    base.sort();
    let mut inverted = a.inverted.clone();
    inverted.extend(&b.inverted);
    inverted.sort();
    let mut tower = a.tower.clone();
    tower.extend(&b.tower);
    let descr = RingDescriptor::new(&base, &inverted, &tower);
    let vars = descr.base_poly_vars();
    let mut windows = f.windows.clone();
    windows.extend(&g.windows);
    let mut out = TowerSeries::zero(&descr, &windows);
    for (ea, ca) in f.coeffs() {
        for (eb, cb) in g.coeffs() {
            let mut e = ea.clone();
            e.extend(eb);
            let c = ca.embed(&vars).mul(&cb.embed(&vars));
            if !c.is_zero() {
                out.set_coeff(e, c);
            }
        }
    }
    Ok(out)
}

/// The two region expansions of `1/(x1-x2)` over the base `x3`, and their
/// difference against the formal delta, checked coefficientwise to order `n`.
pub fn delta_identity_check(order: i64, corrupt: bool) -> bool {
    assert!(order >= 1);
    let vars: &[Var] = &[Var::X(1), Var::X(2), Var::X(3)];
    let p = LocalizedPoly::new(MultiPoly::one(vars), &[(1, 2, 1)]);
    let win = Window::new(-order - 1, order + 1);
    // region |x1-x3| >> |x2-x3|: inner (1,3), outer (2,3)
    let d_plus = RingDescriptor::new(
        &[3],
        &[],
        &[
            TowerLevel { diff: (1, 3), mode: SeriesMode::Laurent },
            TowerLevel { diff: (2, 3), mode: SeriesMode::Laurent },
        ],
    );
    // the opposite region: inner (2,3), outer (1,3)
    let d_minus = RingDescriptor::new(
        &[3],
        &[],
        &[
            TowerLevel { diff: (2, 3), mode: SeriesMode::Laurent },
            TowerLevel { diff: (1, 3), mode: SeriesMode::Laurent },
        ],
    );
    let e_plus = expand_in_chart(&p, &d_plus, &[win, win]).unwrap();
    let mut e_minus = expand_in_chart(&p, &d_minus, &[win, win]).unwrap();
    if corrupt {
        e_minus = e_minus.neg();
    }
    // compare as coefficient maps (exponent of x1-x3, exponent of x2-x3)
    let mut diff: BTreeMap<(i64, i64), Rational> = BTreeMap::new();
    for (e, c) in e_plus.coeffs() {
        if let Some(k) = c.as_constant() {
            diff.insert((e[0], e[1]), k);
        } else {
            return false;
        }
    }
    for (e, c) in e_minus.coeffs() {
        // e_minus keys are (exp of (2,3), exp of (1,3))
        let key = (e[1], e[0]);
        let k = match c.as_constant() {
            Some(k) => k,
            None => return false,
        };
        let cur = diff.remove(&key).unwrap_or_else(num::Zero::zero);
        let v = cur - k;
        if !num::Zero::is_zero(&v) {
            diff.insert(key, v);
        }
    }
    // delta = sum_n z^{-n-1} w^n: every anti-diagonal coefficient in the
    // checked range must be 1, and nothing else may survive
    for n in -order..=order {
        let key = (-n - 1, n);
        if !win.contains(key.0) || !win.contains(key.1) {
            continue;
        }
        match diff.remove(&key) {
            Some(c) if c == crate::rational::rat(1) => {}
            _ => return false,
        }
    }
    // window corners can hold delta terms beyond the checked order
    diff.iter()
        .all(|(&(a, b), c)| a == -b - 1 && *c == crate::rational::rat(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn tilde_delta() -> Arc<RingDescriptor> {
        // C[x2]((x1-x2))
        RingDescriptor::new(
            &[2],
            &[],
            &[TowerLevel { diff: (1, 2), mode: SeriesMode::Laurent }],
        )
    }

    fn hat_delta() -> Arc<RingDescriptor> {
        RingDescriptor::new(
            &[2],
            &[],
            &[TowerLevel { diff: (1, 2), mode: SeriesMode::PowerSeries }],
        )
    }

    fn vars12() -> Vec<Var> {
        vec![Var::X(1), Var::X(2)]
    }

    #[test]
    fn mul_cancels_inverse_monomials() {
        let d = tilde_delta();
        let w = Window::new(-4, 6);
        let mut t = TowerSeries::zero(&d, &[w]);
        t.set_coeff(vec![1], LocalizedPoly::one(&d.base_poly_vars()));
        let mut tinv = TowerSeries::zero(&d, &[w]);
        tinv.set_coeff(vec![-1], LocalizedPoly::one(&d.base_poly_vars()));
        let prod = t.mul(&tinv);
        assert_eq!(prod.coeff(&[0]).as_constant(), Some(rat(1)));
        assert_eq!(prod.coeffs().count(), 1);
    }

    #[test]
    fn mul_of_one_plus_minus() {
        // (1+t)(1-t) = 1 - t^2
        let d = tilde_delta();
        let w = Window::new(0, 8);
        let one = TowerSeries::one(&d, &[w]);
        let mut t = TowerSeries::zero(&d, &[w]);
        t.set_coeff(vec![1], LocalizedPoly::one(&d.base_poly_vars()));
        let prod = one.add(&t).mul(&one.sub(&t));
        assert_eq!(prod.coeff(&[0]).as_constant(), Some(rat(1)));
        assert_eq!(prod.coeff(&[2]).as_constant(), Some(rat(-1)));
        assert_eq!(prod.coeffs().count(), 2);
    }

    #[test]
    fn geometric_sum_times_complement_is_one() {
        // oracle: direct summation of sum_{n<=N} t^n against (1-t)
        let d = tilde_delta();
        let n = 7i64;
        let w = Window::new(0, n + 1);
        let mut geo = TowerSeries::zero(&d, &[w]);
        for k in 0..=n {
            geo.set_coeff(vec![k], LocalizedPoly::one(&d.base_poly_vars()));
        }
        let one = TowerSeries::one(&d, &[w]);
        let mut t = TowerSeries::zero(&d, &[w]);
        t.set_coeff(vec![1], LocalizedPoly::one(&d.base_poly_vars()));
        let prod = geo.mul(&one.sub(&t));
        // within the provable window the product is exactly 1
        assert_eq!(prod.coeff(&[0]).as_constant(), Some(rat(1)));
        for k in 1..prod.windows[0].hi {
            assert!(prod.coeff(&[k]).is_zero());
        }
    }

    #[test]
    fn invert_monomial_laurent_vs_power() {
        let w = Window::new(-4, 6);
        let dl = tilde_delta();
        let mut t = TowerSeries::zero(&dl, &[w]);
        t.set_coeff(vec![1], LocalizedPoly::one(&dl.base_poly_vars()));
        let inv = t.tower_invert().unwrap();
        assert_eq!(inv.coeff(&[-1]).as_constant(), Some(rat(1)));
        assert_eq!(inv.coeffs().count(), 1);

        let dp = hat_delta();
        let mut tp = TowerSeries::zero(&dp, &[Window::new(0, 6)]);
        tp.set_coeff(vec![1], LocalizedPoly::one(&dp.base_poly_vars()));
        assert!(matches!(
            tp.tower_invert(),
            Err(AlgebraError::NotInvertible(_))
        ));
    }

    #[test]
    fn invert_one_minus_t_is_geometric_series() {
        let d = tilde_delta();
        let w = Window::new(0, 9);
        let one = TowerSeries::one(&d, &[w]);
        let mut t = TowerSeries::zero(&d, &[w]);
        t.set_coeff(vec![1], LocalizedPoly::one(&d.base_poly_vars()));
        let inv = one.sub(&t).tower_invert().unwrap();
        for k in 0..inv.windows[0].hi {
            assert_eq!(inv.coeff(&[k]).as_constant(), Some(rat(1)), "at order {k}");
        }
        // two-sided inverse within truncation
        let prod = inv.mul(&one.sub(&t));
        assert_eq!(prod.coeff(&[0]).as_constant(), Some(rat(1)));
        for k in 1..prod.windows[0].hi {
            assert!(prod.coeff(&[k]).is_zero());
        }
    }

    #[test]
    fn expand_two_regions() {
        let vars: &[Var] = &[Var::X(1), Var::X(2), Var::X(3)];
        let p = LocalizedPoly::new(MultiPoly::one(vars), &[(1, 2, 1)]);
        let win = Window::new(-5, 5);
        // C[x3]((x1-x3))((x2-x3)): 1/(x1-x2) = sum_{n>=0} w^n z^{-n-1}
        let d1 = RingDescriptor::new(
            &[3],
            &[],
            &[
                TowerLevel { diff: (1, 3), mode: SeriesMode::Laurent },
                TowerLevel { diff: (2, 3), mode: SeriesMode::Laurent },
            ],
        );
        let e1 = expand_in_chart(&p, &d1, &[win, win]).unwrap();
        for n in 0..4 {
            assert_eq!(e1.coeff(&[-n - 1, n]).as_constant(), Some(rat(1)));
        }
        assert!(e1.coeff(&[0, 0]).is_zero());
        // other region: -sum_{n>=0} z^n w^{-n-1}
        let d2 = RingDescriptor::new(
            &[3],
            &[],
            &[
                TowerLevel { diff: (2, 3), mode: SeriesMode::Laurent },
                TowerLevel { diff: (1, 3), mode: SeriesMode::Laurent },
            ],
        );
        let e2 = expand_in_chart(&p, &d2, &[win, win]).unwrap();
        for n in 0..4 {
            assert_eq!(e2.coeff(&[-n - 1, n]).as_constant(), Some(rat(-1)));
        }
    }

    #[test]
    fn expand_polynomial_is_identity_like() {
        let vars = vars12();
        let p = LocalizedPoly::from_poly(
            MultiPoly::coord_diff(&vars, 1, 2)
                .pow(2)
                .add(&MultiPoly::var(&vars, Var::X(2))),
        );
        let d = hat_delta();
        let e = expand_in_chart(&p, &d, &[Window::new(0, 8)]).unwrap();
        assert_eq!(e.coeff(&[2]).as_constant(), Some(rat(1)));
        assert_eq!(
            e.coeff(&[0]),
            LocalizedPoly::from_poly(MultiPoly::var(&d.base_poly_vars(), Var::X(2)))
        );
        assert_eq!(e.coeffs().count(), 2);
    }

    #[test]
    fn expand_error_when_not_invertible() {
        // 1/(x1-x2) has no canonical image in C[x2][[x1-x2]]
        let vars = vars12();
        let p = LocalizedPoly::new(MultiPoly::one(&vars), &[(1, 2, 1)]);
        let d = hat_delta();
        assert!(matches!(
            expand_in_chart(&p, &d, &[Window::new(0, 6)]),
            Err(AlgebraError::NoCanonicalMap(_))
        ));
    }

    #[test]
    fn nott_concatenates_towers() {
        // s^{-1} nott t^{-1} = s^{-1} t^{-1} in C((s))((t))
        let a = RingDescriptor::new(
            &[2],
            &[],
            &[TowerLevel { diff: (1, 2), mode: SeriesMode::Laurent }],
        );
        let b = RingDescriptor::new(
            &[4],
            &[],
            &[TowerLevel { diff: (3, 4), mode: SeriesMode::Laurent }],
        );
        let w = Window::new(-3, 3);
        let mut f = TowerSeries::zero(&a, &[w]);
        f.set_coeff(vec![-1], LocalizedPoly::one(&a.base_poly_vars()));
        let mut g = TowerSeries::zero(&b, &[w]);
        g.set_coeff(vec![-1], LocalizedPoly::one(&b.base_poly_vars()));
        let prod = nott_product(&f, &g).unwrap();
        assert_eq!(prod.descr.depth(), 2);
        assert_eq!(prod.coeff(&[-1, -1]).as_constant(), Some(rat(1)));

        // unit on the left acts as identity on coefficients
        let one = TowerSeries::one(&a, &[w]);
        let p2 = nott_product(&one, &g).unwrap();
        assert_eq!(p2.coeff(&[0, -1]).as_constant(), Some(rat(1)));

        // variable collision rejected
        assert!(matches!(
            nott_product(&f, &f.clone()),
            Err(AlgebraError::VariableCollision)
        ));
    }

    #[test]
    fn membership_predicate_distinguishes_nesting() {
        let d_st = RingDescriptor::new(
            &[3],
            &[],
            &[
                TowerLevel { diff: (1, 3), mode: SeriesMode::Laurent },
                TowerLevel { diff: (2, 3), mode: SeriesMode::Laurent },
            ],
        );
        // sum_n s^{-n} t^n: admissible in C((s))((t))
        assert!(d_st.admits_family(&[(0, -1), (0, 1)]));
        // sum_n s^n t^{-n}: not an element (outer exponents unbounded below)
        assert!(!d_st.admits_family(&[(0, 1), (0, -1)]));
        // power-series level may not go negative
        let d_pw = RingDescriptor::new(
            &[3],
            &[],
            &[
                TowerLevel { diff: (1, 3), mode: SeriesMode::PowerSeries },
                TowerLevel { diff: (2, 3), mode: SeriesMode::Laurent },
            ],
        );
        assert!(!d_pw.admits_family(&[(0, -1), (0, 1)]));
        assert!(d_pw.admits_family(&[(0, 1), (0, 1)]));
        // constant family diverges
        assert!(!d_st.admits_family(&[(0, 0), (0, 0)]));
    }

    #[test]
    fn delta_identity_holds_and_detects_corruption() {
        assert!(delta_identity_check(1, false));
        assert!(delta_identity_check(6, false));
        assert!(!delta_identity_check(6, true));
    }

    #[test]
    fn truncation_monotonicity() {
        let vars: &[Var] = &[Var::X(1), Var::X(2), Var::X(3)];
        let p = LocalizedPoly::new(
            MultiPoly::var(vars, Var::X(3)).add(&MultiPoly::one(vars)),
            &[(1, 2, 2), (2, 3, 1)],
        );
        let d = RingDescriptor::new(
            &[3],
            &[],
            &[
                TowerLevel { diff: (2, 3), mode: SeriesMode::Laurent },
                TowerLevel { diff: (1, 3), mode: SeriesMode::Laurent },
            ],
        );
        let small = [Window::new(-3, 3), Window::new(-3, 3)];
        let large = [Window::new(-6, 6), Window::new(-6, 6)];
        let es = expand_in_chart(&p, &d, &small).unwrap();
        let el = expand_in_chart(&p, &d, &large).unwrap();
        for (e, c) in es.coeffs() {
            assert_eq!(&el.coeff(e), c, "disagreement at {e:?}");
        }
        // and the large window agrees with the small one on the overlap
        for (e, c) in el.coeffs() {
            if e.iter().zip(&es.windows).all(|(x, w)| w.contains(*x)) {
                assert_eq!(&es.coeff(e), c);
            }
        }
    }
}
