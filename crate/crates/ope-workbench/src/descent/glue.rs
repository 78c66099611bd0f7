//! The gluing engine: reconstruct a module over the plane from its
//! restrictions to the punctured plane and the formal neighborhood of the
//! diagonal.
//!
//! Inputs are free modules at each truncation level: `F` over
//! `C[x,y]_{x-y}`, `G` over `C[y][[x-y]]`, and a transition matrix over
//! `C[y]((x-y))`. The glued module is the kernel of the induced map
//! `F -> G_{x-y}/G`, computed degreewise by exact linear algebra. The
//! polynomial variable `y` is a spectator throughout (all data here is
//! translation equivariant), so slices are indexed by the `(x-y)`-exponent
//! alone, with an optional weight attached to each basis label.
//!
//! When the datum carries grades (the transition homogeneous of degree zero
//! for `grade(f_j) - d` against `grade(g_i) - e`), the kernel decomposes into
//! independent blocks and all linear algebra runs per block.

use std::collections::BTreeMap;

use num::Zero;

use crate::descent::linalg::QMatrix;
use crate::error::AlgebraError;
use crate::rational::{rat, Rational};
use crate::report::Verdict;

/// A Laurent-series matrix entry: exponent of (x-y) -> coefficient.
pub type LaurentEntry = BTreeMap<i64, Rational>;

/// Descent datum for the two-chart covering of the plane.
#[derive(Clone, Debug)]
pub struct BlDatum {
    pub f_labels: Vec<String>,
    /// Optional weight per F-basis label (used for filtration tables).
    pub f_weights: Vec<i64>,
    pub g_labels: Vec<String>,
    /// `phi[i][j]` = G-coordinate i of the image of F-basis j.
    pub phi: Vec<Vec<LaurentEntry>>,
    /// Optional grading making phi homogeneous:
    /// `f_grades[j] - d == g_grades[i] - e` on every entry.
    pub f_grades: Option<Vec<i64>>,
    pub g_grades: Option<Vec<i64>>,
}

impl BlDatum {
    pub fn new(f_labels: Vec<String>, g_labels: Vec<String>, phi: Vec<Vec<LaurentEntry>>) -> Self {
        let n = f_labels.len();
        BlDatum {
            f_labels,
            f_weights: vec![0; n],
            g_labels,
            phi,
            f_grades: None,
            g_grades: None,
        }
    }

    fn min_phi_exp(&self) -> i64 {
        self.phi
            .iter()
            .flatten()
            .flat_map(|e| e.keys())
            .min()
            .copied()
            .unwrap_or(0)
    }

    fn max_phi_exp(&self) -> i64 {
        self.phi
            .iter()
            .flatten()
            .flat_map(|e| e.keys())
            .max()
            .copied()
            .unwrap_or(0)
    }

    /// Grade of the slice column (j, d), when graded.
    fn col_grade(&self, j: usize, d: i64) -> i64 {
        match &self.f_grades {
            Some(g) => g[j] - d,
            None => 0,
        }
    }

    fn row_grade(&self, i: usize, e: i64) -> i64 {
        match &self.g_grades {
            Some(g) => g[i] - e,
            None => 0,
        }
    }

    fn validate_homogeneous(&self) -> Result<(), AlgebraError> {
        if self.f_grades.is_none() {
            return Ok(());
        }
        for (i, row) in self.phi.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                for e in entry.keys() {
                    if self.col_grade(j, 0) != self.row_grade(i, *e) {
                        return Err(AlgebraError::Other(format!(
                            "transition entry ({i},{j}) at exponent {e} is not graded"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A basis vector of the glued module, sparse over (F-basis index, exponent).
pub type GluedVector = Vec<(usize, i64, Rational)>;

#[derive(Clone, Debug)]
pub struct GluedModule {
    /// Slice window `[lo, hi)` of (x-y)-exponents the kernel was computed on.
    pub window: (i64, i64),
    pub basis: Vec<GluedVector>,
    /// `dims[d0]` = dim of the glued slice supported on exponents `>= d0`.
    pub dims: BTreeMap<i64, usize>,
    /// Leading-order profile of the echelonized kernel: order -> count.
    pub profile: BTreeMap<i64, usize>,
    /// Localizing (x-y) recovers F on an inner window.
    pub alpha: Verdict,
    /// Completing along the diagonal recovers G on an inner window.
    pub beta: Verdict,
}

/// Glue `(F, G, phi)` on the slice `[lo, hi)` of (x-y)-exponents.
pub fn bl_glue(datum: &BlDatum, lo: i64, hi: i64) -> Result<GluedModule, AlgebraError> {
    check_phi_invertible(datum, lo, hi)?;
    bl_glue_unchecked(datum, lo, hi)
}

/// The kernel-and-checks part of the gluing; the invertibility precondition
/// is the caller's responsibility (`bl_glue` certifies it generically, the
/// equivariant OPE path certifies it by the triangular leading-term
/// argument).
pub fn bl_glue_unchecked(datum: &BlDatum, lo: i64, hi: i64) -> Result<GluedModule, AlgebraError> {
    assert!(lo < hi);
    let nf = datum.f_labels.len();
    let ng = datum.g_labels.len();
    if datum.phi.len() != ng || datum.phi.iter().any(|r| r.len() != nf) {
        return Err(AlgebraError::Other("phi shape mismatch".into()));
    }
    datum.validate_homogeneous()?;
    // (x-y)-regularity of G on the slice: multiplication by (x-y) must be
    // injective. G is free at each level here, so this is a rank statement
    // per label.
    let h = (hi - lo).max(1) as usize;
    for _ in 0..ng.min(1) {
        let mut mult = QMatrix::zero(h + 1, h);
        for e in 0..h {
            mult.set(e + 1, e, rat(1));
        }
        if mult.rank() != h {
            return Err(AlgebraError::NotRegular);
        }
    }

    // kernel of the polar part of phi, per grade block
    let mut blocks: BTreeMap<i64, Vec<(usize, i64)>> = BTreeMap::new();
    for j in 0..nf {
        for d in lo..hi {
            blocks.entry(datum.col_grade(j, d)).or_default().push((j, d));
        }
    }
    let mut basis: Vec<GluedVector> = Vec::new();
    for cols in blocks.values() {
        let mut rows: BTreeMap<(usize, i64), usize> = BTreeMap::new();
        let mut entries: Vec<(usize, usize, Rational)> = Vec::new();
        let mut has_polar = vec![false; cols.len()];
        for (ci, &(j, d)) in cols.iter().enumerate() {
            for i in 0..ng {
                for (e, c) in &datum.phi[i][j] {
                    let out = e + d;
                    if out < 0 {
                        let next = rows.len();
                        let ri = *rows.entry((i, out)).or_insert(next);
                        entries.push((ri, ci, c.clone()));
                        has_polar[ci] = true;
                    }
                }
            }
        }
        // pole-free columns are kernel vectors outright
        let active: Vec<usize> = (0..cols.len()).filter(|&c| has_polar[c]).collect();
        for (ci, &(j, d)) in cols.iter().enumerate() {
            if !has_polar[ci] {
                basis.push(vec![(j, d, rat(1))]);
            }
        }
        if active.is_empty() {
            continue;
        }
        let remap: BTreeMap<usize, usize> =
            active.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let mut mat = QMatrix::zero(rows.len().max(1), active.len());
        for (r, c, v) in entries {
            if let Some(&ck) = remap.get(&c) {
                mat.add_to(r, ck, v);
            }
        }
        for vec in mat.null_space() {
            let mut out = Vec::new();
            for (ck, coef) in vec.iter().enumerate() {
                if !coef.is_zero() {
                    let (j, d) = cols[active[ck]];
                    out.push((j, d, coef.clone()));
                }
            }
            basis.push(out);
        }
    }
    basis.sort();

    // filtration dims: dim of the kernel supported on exponents >= d0
    let col_grade = |j: usize, d: i64| datum.col_grade(j, d);
    let mut dims = BTreeMap::new();
    for d0 in lo..hi {
        dims.insert(
            d0,
            graded_subspace_dim(&basis, &col_grade, lo, hi, |(_, d)| d >= d0),
        );
    }
    let profile = leading_profile(&basis, nf, lo, hi);

    let span_pad = datum.max_phi_exp().max(-datum.min_phi_exp()).max(1);
    let alpha = check_alpha(datum, &basis, lo, hi, span_pad);
    let beta = check_beta(datum, &basis, lo, hi, span_pad);

    Ok(GluedModule {
        window: (lo, hi),
        basis,
        dims,
        profile,
        alpha,
        beta,
    })
}

/// Exact invertibility of a square Laurent matrix: rank over Q of the banded
/// slice map must be full on the interior band. Used for ungraded data of
/// small rank.
fn check_phi_invertible(datum: &BlDatum, lo: i64, hi: i64) -> Result<(), AlgebraError> {
    let nf = datum.f_labels.len();
    let ng = datum.g_labels.len();
    if nf != ng {
        return Err(AlgebraError::TransitionNotInvertible);
    }
    if nf == 0 {
        return Ok(());
    }
    let spread = datum.max_phi_exp() - datum.min_phi_exp();
    let out_lo = lo + datum.min_phi_exp();
    let out_hi = hi + datum.max_phi_exp();
    let in_h = (hi - lo) as usize;
    let out_h = (out_hi - out_lo) as usize;
    let mut mat = QMatrix::zero(ng * out_h, nf * in_h);
    for j in 0..nf {
        for d in lo..hi {
            let col = j * in_h + (d - lo) as usize;
            for i in 0..ng {
                for (e, c) in &datum.phi[i][j] {
                    let row = i * out_h + (e + d - out_lo) as usize;
                    mat.add_to(row, col, c.clone());
                }
            }
        }
    }
    let interior = (hi - lo) - spread;
    if interior <= 0 {
        return Err(AlgebraError::TransitionNotInvertible);
    }
    if mat.rank() < nf * interior as usize {
        return Err(AlgebraError::TransitionNotInvertible);
    }
    Ok(())
}

/// Injectivity certificate for a (possibly non-square) transition on the
/// slice: per grade block, the image columns are echelonized from their
/// lowest output level; full column rank within the banded window certifies
/// injectivity over the Laurent ring.
pub fn check_phi_triangular(datum: &BlDatum, lo: i64, hi: i64) -> Result<(), AlgebraError> {
    use crate::descent::linalg::{sparse_columns_independent, EchelonOutcome};
    let nf = datum.f_labels.len();
    let mut blocks: BTreeMap<i64, Vec<(usize, i64)>> = BTreeMap::new();
    for j in 0..nf {
        for d in lo..hi {
            blocks.entry(datum.col_grade(j, d)).or_default().push((j, d));
        }
    }
    let cap_e = hi + datum.max_phi_exp();
    for cols in blocks.values() {
        let columns: Vec<BTreeMap<(i64, usize), Rational>> = cols
            .iter()
            .map(|&(j, d)| {
                let mut col = BTreeMap::new();
                for (i, row) in datum.phi.iter().enumerate() {
                    for (e, c) in &row[j] {
                        col.insert((e + d, i), c.clone());
                    }
                }
                col
            })
            .collect();
        match sparse_columns_independent(columns, &(cap_e, usize::MAX)) {
            EchelonOutcome::Independent => {}
            EchelonOutcome::Dependent | EchelonOutcome::WindowExhausted => {
                return Err(AlgebraError::TransitionNotInvertible);
            }
        }
    }
    Ok(())
}

/// Dimension of the intersection of the span of `basis` with the coordinate
/// subspace selected by `allowed`, block-decomposed by column grade. The
/// input vectors need not be independent:
/// `dim(span ∩ S) = rank(vectors) - rank(projection onto the complement)`.
pub fn graded_subspace_dim(
    basis: &[GluedVector],
    col_grade: &impl Fn(usize, i64) -> i64,
    lo: i64,
    hi: i64,
    allowed: impl Fn((usize, i64)) -> bool,
) -> usize {
    let _ = (lo, hi);
    let mut by_grade: BTreeMap<i64, Vec<&GluedVector>> = BTreeMap::new();
    for vec in basis {
        if let Some((j, d, _)) = vec.first() {
            by_grade.entry(col_grade(*j, *d)).or_default().push(vec);
        }
    }
    let mut total = 0;
    for vecs in by_grade.values() {
        let mut cols: BTreeMap<(usize, i64), usize> = BTreeMap::new();
        let mut comp: BTreeMap<(usize, i64), usize> = BTreeMap::new();
        for vec in vecs {
            for (j, d, _) in vec.iter() {
                let next = cols.len();
                cols.entry((*j, *d)).or_insert(next);
                if !allowed((*j, *d)) {
                    let next = comp.len();
                    comp.entry((*j, *d)).or_insert(next);
                }
            }
        }
        let mut full = QMatrix::zero(vecs.len(), cols.len().max(1));
        let mut proj = QMatrix::zero(vecs.len(), comp.len().max(1));
        for (r, vec) in vecs.iter().enumerate() {
            for (j, d, c) in vec.iter() {
                full.add_to(r, cols[&(*j, *d)], c.clone());
                if let Some(&ci) = comp.get(&(*j, *d)) {
                    proj.add_to(r, ci, c.clone());
                }
            }
        }
        total += full.rank() - proj.rank();
    }
    total
}

/// Rank of a family of sparse vectors, block-decomposed by column grade.
pub fn graded_rank(
    vectors: &[GluedVector],
    col_grade: &impl Fn(usize, i64) -> i64,
) -> usize {
    let mut by_grade: BTreeMap<i64, Vec<&GluedVector>> = BTreeMap::new();
    for vec in vectors {
        if let Some((j, d, _)) = vec.first() {
            by_grade.entry(col_grade(*j, *d)).or_default().push(vec);
        }
    }
    let mut total = 0;
    for vecs in by_grade.values() {
        let mut cols: BTreeMap<(usize, i64), usize> = BTreeMap::new();
        for vec in vecs {
            for (j, d, _) in vec.iter() {
                let next = cols.len();
                cols.entry((*j, *d)).or_insert(next);
            }
        }
        let mut mat = QMatrix::zero(vecs.len(), cols.len().max(1));
        for (r, vec) in vecs.iter().enumerate() {
            for (j, d, c) in vec.iter() {
                mat.add_to(r, cols[&(*j, *d)], c.clone());
            }
        }
        total += mat.rank();
    }
    total
}

/// Echelonize by lowest (x-y)-order and count leading orders, per block.
fn leading_profile(
    basis: &[GluedVector],
    nf: usize,
    lo: i64,
    hi: i64,
) -> BTreeMap<i64, usize> {
    let mut cols: Vec<(i64, usize)> = Vec::new();
    for d in lo..hi {
        for j in 0..nf {
            cols.push((d, j));
        }
    }
    let mut mat = QMatrix::zero(basis.len().max(1), cols.len());
    for (r, vec) in basis.iter().enumerate() {
        for (j, d, c) in vec {
            let ci = cols.binary_search(&(*d, *j)).unwrap();
            mat.add_to(r, ci, c.clone());
        }
    }
    let pivots = mat.rref();
    let mut profile = BTreeMap::new();
    for p in pivots {
        let (d, _) = cols[p];
        *profile.entry(d).or_insert(0) += 1;
    }
    profile
}

fn check_alpha(
    datum: &BlDatum,
    basis: &[GluedVector],
    lo: i64,
    hi: i64,
    pad: i64,
) -> Verdict {
    let nf = datum.f_labels.len();
    let inner_lo = lo + pad;
    let inner_hi = hi - pad;
    if inner_lo >= inner_hi {
        return Verdict::Inconclusive;
    }
    let mut shifted: Vec<GluedVector> = Vec::new();
    for vec in basis {
        let dmin = vec.iter().map(|(_, d, _)| *d).min().unwrap_or(lo);
        let dmax = vec.iter().map(|(_, d, _)| *d).max().unwrap_or(lo);
        for k in (dmax - (hi - 1)).min(0)..=(dmin - lo) {
            let moved: GluedVector = vec
                .iter()
                .map(|(j, d, c)| (*j, d - k, c.clone()))
                .collect();
            if moved.iter().all(|(_, d, _)| *d >= lo && *d < hi) {
                shifted.push(moved);
            }
        }
    }
    let col_grade = |j: usize, d: i64| datum.col_grade(j, d);
    let target = nf as i64 * (inner_hi - inner_lo);
    let got =
        graded_subspace_dim(&shifted, &col_grade, lo, hi, |(_, d)| d >= inner_lo && d < inner_hi)
            as i64;
    if got == target {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    }
}

fn check_beta(datum: &BlDatum, basis: &[GluedVector], lo: i64, hi: i64, pad: i64) -> Verdict {
    let ng = datum.g_labels.len();
    let inner_hi = hi - pad + datum.min_phi_exp();
    if inner_hi <= 0 {
        return Verdict::Inconclusive;
    }
    // images phi(m) t^k for k >= 0, restricted to G-coordinates [0, inner_hi),
    // must fill that slice of G
    let mut images: Vec<GluedVector> = Vec::new();
    for vec in basis {
        for k in 0..(hi - lo) {
            let mut img: BTreeMap<(usize, i64), Rational> = BTreeMap::new();
            for (j, d, c) in vec {
                for i in 0..ng {
                    for (e, pc) in &datum.phi[i][*j] {
                        let out = e + d + k;
                        if out >= 0 && out < inner_hi {
                            let cur = img.remove(&(i, out)).unwrap_or_else(Rational::zero);
                            let s = cur + pc.clone() * c.clone();
                            if !s.is_zero() {
                                img.insert((i, out), s);
                            }
                        }
                    }
                }
            }
            if !img.is_empty() {
                images.push(img.into_iter().map(|((i, e), c)| (i, e, c)).collect());
            }
        }
    }
    let row_grade = |i: usize, e: i64| datum.row_grade(i, e);
    let got = graded_rank(&images, &row_grade);
    if got == ng * inner_hi as usize {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    }
}
