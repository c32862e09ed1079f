//! Column reduction to weak Popov form (Mulders–Storjohann).
//!
//! The routine is generic over the entry type so the same loop runs on exact
//! polynomial matrices and on Laurent-series matrices with honest windows.

use crate::ffield::{Fe, FieldSpec, LaurentSeries, Poly};

/// What is known about the degree of an entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryDeg {
    Zero,
    Known(i64),
    /// Nonzero-or-zero with degree at most the bound.
    AtMost(i64),
}

pub trait Entry: Clone {
    fn deg(&self) -> EntryDeg;
    fn lead(&self) -> Fe;
    /// `self += c * X^k * other`, `k >= 0`.
    fn add_scaled_shifted(&mut self, c: Fe, k: i64, other: &Self, f: &FieldSpec);
}

impl Entry for Poly {
    fn deg(&self) -> EntryDeg {
        match self.degree() {
            None => EntryDeg::Zero,
            Some(d) => EntryDeg::Known(d as i64),
        }
    }

    fn lead(&self) -> Fe {
        self.leading()
    }

    fn add_scaled_shifted(&mut self, c: Fe, k: i64, other: &Self, f: &FieldSpec) {
        Poly::add_scaled_shifted(self, c, k as usize, other, f)
    }
}

impl Entry for LaurentSeries {
    fn deg(&self) -> EntryDeg {
        match self.order() {
            Some(v) => EntryDeg::Known(-v),
            None if self.is_exact() => EntryDeg::Zero,
            None => EntryDeg::AtMost(-self.known_through() - 1),
        }
    }

    fn lead(&self) -> Fe {
        self.leading()
    }

    fn add_scaled_shifted(&mut self, c: Fe, k: i64, other: &Self, f: &FieldSpec) {
        LaurentSeries::add_scaled_shifted(self, c, k, other, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceFailure {
    /// A column became zero: the columns were dependent.
    Singular { column: usize },
    /// A pivot depends on coefficients outside the known window.
    Indeterminate { column: usize },
}

/// Pivot row and degree of a column: the lowest row attaining the maximal degree.
pub fn pivot<E: Entry>(col: &[E], column: usize) -> Result<(usize, i64), ReduceFailure> {
    let mut best: Option<(usize, i64)> = None;
    for (i, e) in col.iter().enumerate() {
        if let EntryDeg::Known(d) = e.deg() {
            if best.map_or(true, |(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
    }
    let unknown = col.iter().enumerate().filter_map(|(i, e)| match e.deg() {
        EntryDeg::AtMost(b) => Some((i, b)),
        _ => None,
    });
    match best {
        None => {
            if col.iter().any(|e| matches!(e.deg(), EntryDeg::AtMost(_))) {
                Err(ReduceFailure::Indeterminate { column })
            } else {
                Err(ReduceFailure::Singular { column })
            }
        }
        Some((row, d)) => {
            for (i, b) in unknown {
                if b > d || (b == d && i < row) {
                    return Err(ReduceFailure::Indeterminate { column });
                }
            }
            Ok((row, d))
        }
    }
}

/// Reduces `cols` (each a column of length `r`) in place. Column operations
/// are mirrored on `transform` when given, so `original * U = reduced`.
/// Returns pivot rows and column degrees.
pub fn weak_popov_in_place<E: Entry>(
    cols: &mut [Vec<E>],
    f: &FieldSpec,
    mut transform: Option<&mut [Vec<Poly>]>,
) -> Result<Vec<(usize, i64)>, ReduceFailure> {
    let r = cols.len();
    let mut piv: Vec<(usize, i64)> = Vec::with_capacity(r);
    for (j, c) in cols.iter().enumerate() {
        piv.push(pivot(c, j)?);
    }
    loop {
        // First pivot row (in row order) shared by two columns.
        let mut conflict: Option<(usize, usize)> = None;
        'search: for row in 0..cols.first().map_or(0, |c| c.len()) {
            let mut lo: Option<usize> = None;
            let mut hi: Option<usize> = None;
            for j in 0..r {
                if piv[j].0 != row {
                    continue;
                }
                let key = (piv[j].1, j);
                if lo.map_or(true, |l| key < (piv[l].1, l)) {
                    lo = Some(j);
                }
                if hi.map_or(true, |h| key > (piv[h].1, h)) {
                    hi = Some(j);
                }
            }
            if let (Some(l), Some(h)) = (lo, hi) {
                if l != h {
                    conflict = Some((h, l));
                    break 'search;
                }
            }
        }
        let Some((target, by)) = conflict else {
            return Ok(piv);
        };
        let (row, dt) = piv[target];
        let db = piv[by].1;
        let shift = dt - db;
        let c = f.neg(f.div(cols[target][row].lead(), cols[by][row].lead()).expect("pivot is nonzero"));
        let (src, dst) = borrow_two(cols, by, target);
        for (d, s) in dst.iter_mut().zip(src.iter()) {
            d.add_scaled_shifted(c, shift, s, f);
        }
        if let Some(u) = transform.as_deref_mut() {
            let (src, dst) = borrow_two(u, by, target);
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                d.add_scaled_shifted(c, shift as usize, s, f);
            }
        }
        piv[target] = pivot(&cols[target], target)?;
    }
}

fn borrow_two<T>(v: &mut [T], src: usize, dst: usize) -> (&T, &mut T) {
    assert_ne!(src, dst);
    if src < dst {
        let (a, b) = v.split_at_mut(dst);
        (&a[src], &mut b[0])
    } else {
        let (a, b) = v.split_at_mut(src);
        (&b[0], &mut a[dst])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_cols(f: &FieldSpec, cols: &[&[&[u32]]]) -> Vec<Vec<Poly>> {
        cols.iter().map(|c| c.iter().map(|e| Poly::from_codes(f, e)).collect()).collect()
    }

    #[test]
    fn pivot_prefers_lowest_row_on_ties() {
        let f = FieldSpec::prime(2).unwrap();
        let col = &poly_cols(&f, &[&[&[0, 1], &[1, 1]]])[0];
        assert_eq!(pivot(col, 0), Ok((0, 1)));
    }

    #[test]
    fn indeterminate_window_is_reported() {
        let col = vec![LaurentSeries::x_pow(-2), LaurentSeries::zero_through(1)];
        // the unknown entry can at most tie, and from a later row
        assert_eq!(pivot(&col, 0), Ok((0, -2)));
        let col = vec![LaurentSeries::zero_through(1), LaurentSeries::x_pow(-2)];
        assert_eq!(pivot(&col, 0), Err(ReduceFailure::Indeterminate { column: 0 }));
        let col = vec![LaurentSeries::zero_through(1), LaurentSeries::x_pow(-3)];
        assert_eq!(pivot(&col, 0), Err(ReduceFailure::Indeterminate { column: 0 }));
    }

    #[test]
    fn transform_tracks_column_operations() {
        let f = FieldSpec::prime(3).unwrap();
        let orig = poly_cols(&f, &[&[&[1, 2, 1], &[0, 1]], &[&[2, 0, 0, 1], &[1, 1, 1]]]);
        let mut cols = orig.clone();
        let mut u = vec![vec![Poly::one(), Poly::zero()], vec![Poly::zero(), Poly::one()]];
        weak_popov_in_place(&mut cols, &f, Some(&mut u)).unwrap();
        for j in 0..2 {
            for i in 0..2 {
                let mut acc = Poly::zero();
                for k in 0..2 {
                    acc = acc.add(&orig[k][i].mul(&u[j][k], &f), &f);
                }
                assert_eq!(acc, cols[j][i]);
            }
        }
    }
}
