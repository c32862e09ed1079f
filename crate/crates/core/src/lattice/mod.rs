//! Free `F_s[X]`-lattices in `k^r`: reduction, shortest vectors, successive minima.
//!
//! A basis is stored by columns. Norms are sup-norms `‖v‖ = max_i |v_i|`, and
//! `Δ(Λ) = -log_s min ‖v‖` over nonzero lattice vectors.
//!
//! Two reduction routes are provided. [`LatticeBasis::reduce`] scales by
//! `X^M`, truncates to polynomials, reduces exactly, and then certifies that
//! the dropped tails could not have changed the column degrees.
//! [`LatticeBasis::reduce_in_window`] reduces the Laurent entries directly
//! and fails as soon as a pivot depends on an unknown coefficient.

mod enumerate;
pub mod popov;

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::ffield::{text, Fe, FieldError, FieldSpec, LaurentSeries, Norm, Poly};
use popov::{weak_popov_in_place, ReduceFailure};

pub use enumerate::{enumerate_short_vectors, min_norm_by_enumeration, ShortVector, DEFAULT_NODE_CAP};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("basis must be a nonempty square matrix")]
    NotSquare,
    #[error("column {0} is zero")]
    ZeroColumn(usize),
    #[error("columns are linearly dependent")]
    Singular,
    #[error("pivot of column {column} depends on coefficients beyond the precision window")]
    Indeterminate { column: usize },
    #[error("delta {computed} is not certified; entries must be known through index {needed_precision}")]
    Uncertified { computed: i64, needed_precision: i64 },
    #[error("enumeration needs exact entries")]
    InexactEntries,
    #[error("search visited more than {cap} nodes")]
    SearchCap { cap: u64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl From<ReduceFailure> for LatticeError {
    fn from(e: ReduceFailure) -> Self {
        match e {
            ReduceFailure::Singular { .. } => LatticeError::Singular,
            ReduceFailure::Indeterminate { column } => LatticeError::Indeterminate { column },
        }
    }
}

/// `Δ(Λ)` and whether truncation provably did not affect it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaValue {
    pub value: i64,
    pub certified: bool,
}

/// A rank-`r` lattice given by `r` column generators.
#[derive(Clone, PartialEq, Eq)]
pub struct LatticeBasis {
    field: FieldSpec,
    cols: Vec<Vec<LaurentSeries>>,
    unimodular: bool,
}

impl LatticeBasis {
    pub fn new(field: &FieldSpec, cols: Vec<Vec<LaurentSeries>>) -> Result<Self, LatticeError> {
        let r = cols.len();
        if r == 0 || cols.iter().any(|c| c.len() != r) {
            return Err(LatticeError::NotSquare);
        }
        if let Some(j) = cols.iter().position(|c| c.iter().all(|e| e.is_known_zero())) {
            return Err(LatticeError::ZeroColumn(j));
        }
        let mut out = LatticeBasis { field: field.clone(), cols, unimodular: false };
        out.unimodular = out.determinant().norm() == Ok(Norm::ONE);
        Ok(out)
    }

    /// Builds from rows (`rows[i][j]` is the entry in row `i`, column `j`).
    pub fn from_rows(field: &FieldSpec, rows: Vec<Vec<LaurentSeries>>) -> Result<Self, LatticeError> {
        let r = rows.len();
        if r == 0 || rows.iter().any(|row| row.len() != r) {
            return Err(LatticeError::NotSquare);
        }
        let cols = (0..r).map(|j| rows.iter().map(|row| row[j].clone()).collect()).collect();
        Self::new(field, cols)
    }

    /// Trusted constructor for callers that know the determinant has norm one.
    pub(crate) fn unimodular_unchecked(field: &FieldSpec, cols: Vec<Vec<LaurentSeries>>) -> Self {
        LatticeBasis { field: field.clone(), cols, unimodular: true }
    }

    pub fn identity(field: &FieldSpec, r: usize) -> Self {
        Self::diagonal(field, &vec![0; r])
    }

    /// `diag(X^{e_1}, …, X^{e_r}) Z^r`.
    pub fn diagonal(field: &FieldSpec, exps: &[i64]) -> Self {
        let r = exps.len();
        let cols = (0..r)
            .map(|j| {
                (0..r)
                    .map(|i| if i == j { LaurentSeries::x_pow(exps[j]) } else { LaurentSeries::zero() })
                    .collect()
            })
            .collect();
        LatticeBasis { field: field.clone(), cols, unimodular: exps.iter().sum::<i64>() == 0 }
    }

    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn columns(&self) -> &[Vec<LaurentSeries>] {
        &self.cols
    }

    pub fn entry(&self, row: usize, col: usize) -> &LaurentSeries {
        &self.cols[col][row]
    }

    pub fn is_unimodular(&self) -> bool {
        self.unimodular
    }

    pub fn is_exact(&self) -> bool {
        self.cols.iter().flatten().all(|e| e.is_exact())
    }

    /// Smallest precision window over the entries; `None` if all are exact.
    pub fn precision(&self) -> Option<i64> {
        self.cols.iter().flatten().filter_map(|e| e.precision()).min()
    }

    /// Left multiplication by `diag(X^{e_1}, …, X^{e_r})`.
    pub fn scale_rows(&self, exps: &[i64]) -> Self {
        let mut out = self.clone();
        out.scale_rows_in_place(exps);
        out
    }

    pub fn scale_rows_in_place(&mut self, exps: &[i64]) {
        assert_eq!(exps.len(), self.rank());
        for col in self.cols.iter_mut() {
            for (e, &k) in col.iter_mut().zip(exps) {
                e.shift_in_place(k);
            }
        }
        if exps.iter().sum::<i64>() != 0 {
            self.unimodular = false;
        }
    }

    /// `X^c · Λ`.
    pub fn scale(&self, c: i64) -> Self {
        let mut out = self.scale_rows(&vec![c; self.rank()]);
        out.unimodular = self.unimodular && c == 0;
        out
    }

    /// Basis change `B ↦ B U` for a polynomial matrix `U` given by columns.
    pub fn right_mul(&self, u: &[Vec<Poly>]) -> Self {
        let f = &self.field;
        let r = self.rank();
        let cols = (0..r)
            .map(|j| {
                (0..r)
                    .map(|i| {
                        let mut acc = LaurentSeries::zero();
                        for k in 0..r {
                            acc = acc.add(&self.cols[k][i].mul(&LaurentSeries::from_poly(&u[j][k]), f), f);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        LatticeBasis { field: self.field.clone(), cols, unimodular: self.unimodular }
    }

    /// Drops every coefficient past index `n`.
    pub fn truncate(&self, n: i64) -> Self {
        let cols = self.cols.iter().map(|c| c.iter().map(|e| e.truncate(n)).collect()).collect();
        LatticeBasis { field: self.field.clone(), cols, unimodular: self.unimodular }
    }

    /// Determinant by cofactor expansion along the first column.
    pub fn determinant(&self) -> LaurentSeries {
        let rows: Vec<usize> = (0..self.rank()).collect();
        let cols: Vec<usize> = (0..self.rank()).collect();
        minor(&self.field, &self.cols, &rows, &cols)
    }

    /// Reduction through polynomial scaling, with the truncation certificate.
    pub fn reduce(&self) -> Result<ReducedBasis, LatticeError> {
        let f = &self.field;
        let r = self.rank();
        let known = |e: &LaurentSeries| match e.precision() {
            Some(n) => Some(n),
            None => e.last_index(),
        };
        let m = self.cols.iter().flatten().filter_map(known).max().unwrap_or(0).max(0);
        let mut cols: Vec<Vec<Poly>> = self
            .cols
            .iter()
            .map(|c| {
                c.iter()
                    .map(|e| e.shift(m).known_polynomial_part())
                    .collect()
            })
            .collect();
        if let Some(j) = cols.iter().position(|c| c.iter().all(|p| p.is_zero())) {
            return Err(if self.cols[j].iter().all(|e| e.is_exact()) {
                LatticeError::Singular
            } else {
                LatticeError::Uncertified { computed: 0, needed_precision: m + 1 }
            });
        }
        let mut u: Vec<Vec<Poly>> = (0..r)
            .map(|j| (0..r).map(|i| if i == j { Poly::one() } else { Poly::zero() }).collect())
            .collect();
        let piv = weak_popov_in_place(&mut cols, f, Some(&mut u))?;
        let degrees: Vec<i64> = piv.iter().map(|p| p.1).collect();

        // Column j of the scaled input lost a tail of norm ≤ s^{M - N_j - 1}.
        // Reduced column i moves by at most max_j s^{deg U_ji + M - N_j - 1};
        // it keeps its degree and leading row when that is below s^{d_i}.
        let col_prec: Vec<Option<i64>> =
            self.cols.iter().map(|c| c.iter().filter_map(|e| e.precision()).min()).collect();
        let mut certified = true;
        let mut needed = i64::MIN;
        for i in 0..r {
            for j in 0..r {
                let (Some(nj), Some(du)) = (col_prec[j], u[i][j].degree()) else {
                    continue;
                };
                let du = du as i64;
                if du + m - nj - 1 >= degrees[i] {
                    certified = false;
                }
                needed = needed.max(du + m - degrees[i]);
            }
        }
        Ok(ReducedBasis {
            columns: cols,
            scale: m,
            pivots: piv.iter().map(|p| p.0).collect(),
            degrees,
            transform: u,
            certified,
            needed_precision: (needed > i64::MIN).then_some(needed),
        })
    }

    /// Certified `Δ(Λ)`.
    pub fn delta(&self) -> Result<DeltaValue, LatticeError> {
        let red = self.reduce()?;
        let value = red.delta();
        if !red.certified {
            return Err(LatticeError::Uncertified {
                computed: value,
                needed_precision: red.needed_precision.unwrap_or(0),
            });
        }
        Ok(DeltaValue { value, certified: true })
    }

    /// Sorted `log_s λ_1 ≤ … ≤ log_s λ_r`.
    pub fn successive_minima(&self) -> Result<Vec<i64>, LatticeError> {
        let red = self.reduce()?;
        if !red.certified {
            return Err(LatticeError::Uncertified {
                computed: red.delta(),
                needed_precision: red.needed_precision.unwrap_or(0),
            });
        }
        Ok(red.successive_minima())
    }

    /// Reduces the Laurent entries directly, keeping honest windows.
    /// Returns the reduced basis and its column degrees.
    pub fn reduce_in_window(&self) -> Result<(LatticeBasis, Vec<i64>), LatticeError> {
        let mut out = self.clone();
        let deg = out.reduce_in_window_in_place()?;
        Ok((out, deg))
    }

    pub fn reduce_in_window_in_place(&mut self) -> Result<Vec<i64>, LatticeError> {
        let piv = weak_popov_in_place(&mut self.cols, &self.field, None)?;
        Ok(piv.iter().map(|p| p.1).collect())
    }
}

fn minor(f: &FieldSpec, cols: &[Vec<LaurentSeries>], rows: &[usize], use_cols: &[usize]) -> LaurentSeries {
    if rows.len() == 1 {
        return cols[use_cols[0]][rows[0]].clone();
    }
    let c0 = use_cols[0];
    let rest = &use_cols[1..];
    let mut acc = LaurentSeries::zero();
    for (k, &i) in rows.iter().enumerate() {
        let e = &cols[c0][i];
        if e.is_known_zero() {
            continue;
        }
        let sub_rows: Vec<usize> = rows.iter().copied().filter(|&x| x != i).collect();
        let term = e.mul(&minor(f, cols, &sub_rows, rest), f);
        acc = if k % 2 == 0 { acc.add(&term, f) } else { acc.sub(&term, f) };
    }
    acc
}

impl fmt::Debug for LatticeBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticeBasis [\n{}]", render_matrix(self))
    }
}

/// Polynomial matrix in weak Popov form, the result of reducing `X^M · B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedBasis {
    pub columns: Vec<Vec<Poly>>,
    /// `M`: the input basis was multiplied by `X^M` before truncation.
    pub scale: i64,
    pub degrees: Vec<i64>,
    pub pivots: Vec<usize>,
    /// `U` with `X^M B U = columns` (columns of `U`).
    pub transform: Vec<Vec<Poly>>,
    pub certified: bool,
    /// Window that would certify the result.
    pub needed_precision: Option<i64>,
}

impl ReducedBasis {
    pub fn delta(&self) -> i64 {
        self.scale - self.degrees.iter().min().copied().unwrap_or(0)
    }

    pub fn successive_minima(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.degrees.iter().map(|d| d - self.scale).collect();
        v.sort_unstable();
        v
    }
}

/// Weak Popov form of a nonsingular polynomial matrix given by columns.
pub fn weak_popov(f: &FieldSpec, cols: &[Vec<Poly>]) -> Result<ReducedBasis, LatticeError> {
    let r = cols.len();
    if r == 0 || cols.iter().any(|c| c.len() != r) {
        return Err(LatticeError::NotSquare);
    }
    let mut work = cols.to_vec();
    let mut u: Vec<Vec<Poly>> = (0..r)
        .map(|j| (0..r).map(|i| if i == j { Poly::one() } else { Poly::zero() }).collect())
        .collect();
    let piv = weak_popov_in_place(&mut work, f, Some(&mut u))?;
    Ok(ReducedBasis {
        columns: work,
        scale: 0,
        degrees: piv.iter().map(|p| p.1).collect(),
        pivots: piv.iter().map(|p| p.0).collect(),
        transform: u,
        certified: true,
        needed_precision: None,
    })
}

/// Row-major text: one row per line, entries separated by `;`.
pub fn render_matrix(b: &LatticeBasis) -> String {
    let r = b.rank();
    let mut out = String::new();
    for i in 0..r {
        let row: Vec<String> = (0..r).map(|j| text::render(b.entry(i, j))).collect();
        out.push_str(&row.join("; "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(s: &str, f: &FieldSpec) -> Result<LatticeBasis, LatticeError> {
    let rows = s
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(';').map(|e| text::parse(e, f)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    LatticeBasis::from_rows(f, rows)
}

/// A random lattice of determinant one with exact Laurent-polynomial entries
/// of degree at most `max_deg` and order at most `max_deg`.
///
/// Built from a random diagonal `diag(X^{a_i})` with `Σ a_i = 0` and random
/// elementary row and column operations with monomial multipliers.
pub fn random_unimodular<R: Rng + ?Sized>(f: &FieldSpec, r: usize, max_deg: i64, rng: &mut R) -> LatticeBasis {
    let within = |b: &LatticeBasis| {
        b.cols.iter().flatten().all(|e| match (e.order(), e.last_index()) {
            (Some(v), Some(l)) => -v <= max_deg && l <= max_deg,
            _ => true,
        })
    };
    let span = max_deg.clamp(0, 2);
    loop {
        let mut a: Vec<i64> = (0..r).map(|_| rng.gen_range(-span..=span)).collect();
        let total: i64 = a.iter().sum();
        a[r - 1] -= total;
        if a[r - 1].abs() > max_deg {
            continue;
        }
        let mut b = LatticeBasis::diagonal(f, &a);
        let ops = rng.gen_range(r..=3 * r);
        for _ in 0..ops {
            let i = rng.gen_range(0..r);
            let mut j = rng.gen_range(0..r - 1);
            if j >= i {
                j += 1;
            }
            let c = Fe(rng.gen_range(1..f.size()) as u16);
            let k = rng.gen_range(-span..=span);
            let mut next = b.clone();
            if rng.gen_bool(0.5) {
                // column i += c X^k column j
                let src = next.cols[j].clone();
                for (d, s) in next.cols[i].iter_mut().zip(&src) {
                    d.add_scaled_shifted(c, k, s, f);
                }
            } else {
                // row i += c X^k row j
                for col in next.cols.iter_mut() {
                    let s = col[j].clone();
                    col[i].add_scaled_shifted(c, k, &s, f);
                }
            }
            if within(&next) {
                b = next;
            }
        }
        b.unimodular = true;
        return b;
    }
}
