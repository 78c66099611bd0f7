//! The chart coverings of the affine plane and 3-space used for descent.
//!
//! Coordinates are `x1, x2` on the plane and `x1, x2, x3` on 3-space. Chart
//! rings follow the covering by the fully punctured locus, the partial formal
//! neighborhoods of the pairwise diagonals, and the formal neighborhood of
//! the principal diagonal.

use std::sync::Arc;

use crate::tower::{RingDescriptor, SeriesMode, TowerLevel};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Chart {
    /// Punctured plane: C[x1,x2] localized at x1-x2.
    U,
    /// Formal neighborhood of the plane diagonal: C[x2][[x1-x2]].
    HatDelta,
    /// Punctured formal neighborhood: C[x2]((x1-x2)).
    TildeDelta,
    /// Fully punctured 3-space: C[x1,x2,x3] localized at all differences.
    Z1,
    /// Partial formal neighborhood along x_i = x_j, punctured elsewhere.
    Z2(u8, u8),
    /// Formal neighborhood of the principal diagonal: C[x3][[x1-x3, x2-x3]].
    Z3,
}

/// The third coordinate index for a pair (i, j) in {1,2,3}.
pub fn complement(i: u8, j: u8) -> u8 {
    6 - i - j
}

impl Chart {
    pub fn descriptor(&self) -> Arc<RingDescriptor> {
        match self {
            Chart::U => RingDescriptor::new(&[1, 2], &[(1, 2)], &[]),
            Chart::HatDelta => RingDescriptor::new(
                &[2],
                &[],
                &[TowerLevel { diff: (1, 2), mode: SeriesMode::PowerSeries }],
            ),
            Chart::TildeDelta => RingDescriptor::new(
                &[2],
                &[],
                &[TowerLevel { diff: (1, 2), mode: SeriesMode::Laurent }],
            ),
            Chart::Z1 => {
                RingDescriptor::new(&[1, 2, 3], &[(1, 2), (1, 3), (2, 3)], &[])
            }
            Chart::Z2(i, j) => {
                let k = complement(*i, *j);
                let (a, b) = if k < *j { (k, *j) } else { (*j, k) };
                RingDescriptor::new(
                    &[*j, k],
                    &[(a, b)],
                    &[TowerLevel { diff: (*i, *j), mode: SeriesMode::PowerSeries }],
                )
            }
            Chart::Z3 => RingDescriptor::new(
                &[3],
                &[],
                &[
                    TowerLevel { diff: (1, 3), mode: SeriesMode::PowerSeries },
                    TowerLevel { diff: (2, 3), mode: SeriesMode::PowerSeries },
                ],
            ),
        }
    }
}

/// Overlap `Z1 x Z2^(ij)`: C[x_j, x_k]((x_i-x_j)) localized at the
/// differences with x_k.
pub fn overlap_z12(i: u8, j: u8) -> Arc<RingDescriptor> {
    let k = complement(i, j);
    let (a, b) = if k < j { (k, j) } else { (j, k) };
    RingDescriptor::new(
        &[j, k],
        &[(a, b)],
        &[TowerLevel { diff: (i, j), mode: SeriesMode::Laurent }],
    )
}

/// Overlap `Z2^(ij) x Z3`: C[x_j]((x_k-x_j))[[x_i-x_j]].
pub fn overlap_z23(i: u8, j: u8) -> Arc<RingDescriptor> {
    let k = complement(i, j);
    RingDescriptor::new(
        &[j],
        &[],
        &[
            TowerLevel { diff: (k, j), mode: SeriesMode::Laurent },
            TowerLevel { diff: (i, j), mode: SeriesMode::PowerSeries },
        ],
    )
}

/// Triple overlap `Z1 x Z2^(ij) x Z3`: C[x_j]((x_k-x_j))((x_i-x_j)).
pub fn overlap_z123(i: u8, j: u8) -> Arc<RingDescriptor> {
    let k = complement(i, j);
    RingDescriptor::new(
        &[j],
        &[],
        &[
            TowerLevel { diff: (k, j), mode: SeriesMode::Laurent },
            TowerLevel { diff: (i, j), mode: SeriesMode::Laurent },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localized::LocalizedPoly;
    use crate::poly::{MultiPoly, Var};
    use crate::rational::rat;
    use crate::tower::{expand_in_chart, Window};

    #[test]
    fn chart_descriptors_expose_paper_rings() {
        let z2 = Chart::Z2(1, 2).descriptor();
        assert_eq!(z2.base_vars, vec![2, 3]);
        assert_eq!(z2.tower.len(), 1);
        assert_eq!(z2.tower[0].diff, (1, 2));
        assert_eq!(z2.inverted, vec![(2, 3)]);

        let z123 = overlap_z123(2, 3);
        assert_eq!(z123.base_vars, vec![3]);
        assert_eq!(z123.tower[0].diff, (1, 3));
        assert_eq!(z123.tower[1].diff, (2, 3));
    }

    #[test]
    fn localized_difference_expands_in_z2() {
        // 1/(x_k - x_i) becomes a geometric series in Z2^(ij)
        let vars: &[Var] = &[Var::X(1), Var::X(2), Var::X(3)];
        let p = LocalizedPoly::new(MultiPoly::one(vars), &[(1, 3, 1)]);
        let d = Chart::Z2(1, 2).descriptor();
        let win = [Window::new(0, 5)];
        let e = expand_in_chart(&p, &d, &win).unwrap();
        // 1/(x1-x3) = 1/((x2-x3) + t) = sum_n (-1)^n t^n / (x2-x3)^{n+1}
        for n in 0..4i64 {
            let c = e.coeff(&[n]);
            let sign = if n % 2 == 0 { rat(1) } else { rat(-1) };
            let expect = LocalizedPoly::new(
                MultiPoly::constant(&d.base_poly_vars(), sign),
                &[(2, 3, n as u32 + 1)],
            );
            assert_eq!(c, expect, "coefficient at t^{n}");
        }
    }

    #[test]
    fn z3_rejects_diagonal_inverses() {
        let vars: &[Var] = &[Var::X(1), Var::X(2), Var::X(3)];
        let p = LocalizedPoly::new(MultiPoly::one(vars), &[(1, 2, 1)]);
        let d = Chart::Z3.descriptor();
        assert!(expand_in_chart(&p, &d, &[Window::new(0, 4), Window::new(0, 4)]).is_err());
    }
}
