//! Brute-force short vectors, used as ground truth for the reduction.
//!
//! For `v = B q` with `‖v‖ ≤ s^b`, Cramer's rule bounds
//! `deg q_i ≤ b + max_j (deg adj(B)_ij - deg det B)`. Inside that box the
//! coefficients of `q` are chosen from the top degree down; once every term
//! that can reach a coordinate's degree `e` is fixed, that coefficient of `v`
//! is final and must vanish when `e > b`.

use crate::ffield::{Fe, FieldSpec, LaurentSeries, Norm, Poly};

use super::{LatticeBasis, LatticeError};

pub const DEFAULT_NODE_CAP: u64 = 20_000_000;

/// A nonzero lattice vector `v = B q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortVector {
    pub q: Vec<Poly>,
    pub v: Vec<LaurentSeries>,
    pub norm: Norm,
}

/// Per-coordinate dense coefficients by degree.
struct Dense {
    lo: i64,
    c: Vec<Fe>,
}

struct Search<'a> {
    f: &'a FieldSpec,
    r: usize,
    /// `cols[i][j]`: dense form of `B_ji`.
    cols: Vec<Vec<Dense>>,
    bounds: Vec<i64>,
    /// Highest degree over row `j` of `B`.
    row_hi: Vec<i64>,
    v: Vec<Dense>,
    q: Vec<Vec<Fe>>,
    b: i64,
    visited: u64,
    cap: u64,
    out: Vec<ShortVector>,
}

fn dense(e: &LaurentSeries) -> Option<Dense> {
    let v = e.order()?;
    // degree of coefficient k is -(v + k); store ascending degree
    let mut c: Vec<Fe> = e.coeffs().to_vec();
    c.reverse();
    Some(Dense { lo: -(v + e.coeffs().len() as i64 - 1), c })
}

impl Search<'_> {
    fn add_term(&mut self, i: usize, c: Fe, k: i64) {
        for j in 0..self.r {
            let src = &self.cols[i][j];
            if src.c.is_empty() {
                continue;
            }
            let dst = &mut self.v[j];
            let off = (src.lo + k - dst.lo) as usize;
            self.f.axpy(&mut dst.c[off..off + src.c.len()], c, &src.c);
        }
    }

    fn coeff(&self, j: usize, deg: i64) -> Fe {
        let d = &self.v[j];
        let k = deg - d.lo;
        if k < 0 || k >= d.c.len() as i64 {
            Fe::ZERO
        } else {
            d.c[k as usize]
        }
    }

    fn run(&mut self, k: i64) -> Result<(), LatticeError> {
        self.visited += 1;
        if self.visited > self.cap {
            return Err(LatticeError::SearchCap { cap: self.cap });
        }
        if k < 0 {
            self.leaf();
            return Ok(());
        }
        let active: Vec<usize> = (0..self.r).filter(|&i| self.bounds[i] >= k).collect();
        let s = self.f.size() as u64;
        let total = s.pow(active.len() as u32);
        for code in 0..total {
            let mut rest = code;
            let digits: Vec<Fe> = active
                .iter()
                .map(|_| {
                    let d = Fe((rest % s) as u16);
                    rest /= s;
                    d
                })
                .collect();
            for (&i, &c) in active.iter().zip(&digits) {
                if !c.is_zero() {
                    self.add_term(i, c, k);
                    self.q[i][k as usize] = c;
                }
            }
            // Degree k + row_hi[j] of coordinate j is now final.
            let ok = (0..self.r).all(|j| {
                let e = k + self.row_hi[j];
                e <= self.b || self.coeff(j, e).is_zero()
            });
            if ok {
                self.run(k - 1)?;
            }
            for (&i, &c) in active.iter().zip(&digits) {
                if !c.is_zero() {
                    self.add_term(i, self.f.neg(c), k);
                    self.q[i][k as usize] = Fe::ZERO;
                }
            }
        }
        Ok(())
    }

    fn leaf(&mut self) {
        if self.q.iter().all(|qi| qi.iter().all(|c| c.is_zero())) {
            return;
        }
        let mut top: Option<i64> = None;
        for d in &self.v {
            if let Some(k) = d.c.iter().rposition(|c| !c.is_zero()) {
                let deg = d.lo + k as i64;
                top = Some(top.map_or(deg, |t: i64| t.max(deg)));
            }
        }
        let Some(top) = top else { return };
        if top > self.b {
            return;
        }
        let v = self
            .v
            .iter()
            .map(|d| {
                let mut c = d.c.clone();
                c.reverse();
                LaurentSeries::from_coeffs(-(d.lo + d.c.len() as i64 - 1), c, None)
            })
            .collect();
        let q = self.q.iter().map(|qi| Poly::from_coeffs(qi.clone())).collect();
        self.out.push(ShortVector { q, v, norm: Norm::Pow(top) });
    }
}

fn degree(e: &LaurentSeries) -> Option<i64> {
    e.order().map(|v| -v)
}

/// Every nonzero `v ∈ Λ` with `‖v‖ ≤ s^{log_bound}`. Needs exact entries.
/// `node_cap` bounds the number of search nodes.
pub fn enumerate_short_vectors(
    lattice: &LatticeBasis,
    log_bound: i64,
    node_cap: u64,
) -> Result<Vec<ShortVector>, LatticeError> {
    if !lattice.is_exact() {
        return Err(LatticeError::InexactEntries);
    }
    let f = lattice.field();
    let r = lattice.rank();
    let cols = lattice.columns();
    let det = lattice.determinant();
    let det_deg = degree(&det).ok_or(LatticeError::Singular)?;

    // deg q_i ≤ b + max_j deg adj_ij - deg det, adj_ij = ± minor(row j, col i removed)
    let mut bounds = vec![i64::MIN; r];
    for (i, bound) in bounds.iter_mut().enumerate() {
        for j in 0..r {
            let rows: Vec<usize> = (0..r).filter(|&x| x != j).collect();
            let use_cols: Vec<usize> = (0..r).filter(|&x| x != i).collect();
            let adj = if r == 1 {
                LaurentSeries::one()
            } else {
                super::minor(f, cols, &rows, &use_cols)
            };
            if let Some(d) = degree(&adj) {
                *bound = (*bound).max(log_bound + d - det_deg);
            }
        }
    }
    let kmax = bounds.iter().copied().max().unwrap_or(i64::MIN);
    if kmax < 0 {
        return Ok(Vec::new());
    }

    let dense_cols: Vec<Vec<Dense>> = cols
        .iter()
        .map(|c| c.iter().map(|e| dense(e).unwrap_or(Dense { lo: 0, c: Vec::new() })).collect())
        .collect();
    let mut row_hi = vec![i64::MIN / 4; r];
    let mut row_lo = vec![i64::MAX / 4; r];
    for (i, col) in dense_cols.iter().enumerate() {
        if bounds[i] < 0 {
            continue;
        }
        for (j, d) in col.iter().enumerate() {
            if !d.c.is_empty() {
                row_hi[j] = row_hi[j].max(d.lo + d.c.len() as i64 - 1);
                row_lo[j] = row_lo[j].min(d.lo);
            }
        }
    }
    let v = (0..r)
        .map(|j| {
            if row_hi[j] < row_lo[j] {
                Dense { lo: 0, c: Vec::new() }
            } else {
                Dense { lo: row_lo[j], c: vec![Fe::ZERO; (row_hi[j] + kmax - row_lo[j] + 1) as usize] }
            }
        })
        .collect();
    let mut search = Search {
        f,
        r,
        cols: dense_cols,
        q: bounds.iter().map(|&b| vec![Fe::ZERO; (b + 1).max(0) as usize]).collect(),
        bounds,
        row_hi,
        v,
        b: log_bound,
        visited: 0,
        cap: node_cap,
        out: Vec::new(),
    };
    search.run(kmax)?;
    Ok(search.out)
}

/// `log_s` of the minimal norm, by enumeration below the Minkowski bound
/// `λ_1 ≤ s^{⌊deg det / r⌋}`.
pub fn min_norm_by_enumeration(lattice: &LatticeBasis, node_cap: u64) -> Result<i64, LatticeError> {
    let det_deg = degree(&lattice.determinant()).ok_or(LatticeError::Singular)?;
    let b = det_deg.div_euclid(lattice.rank() as i64);
    let found = enumerate_short_vectors(lattice, b, node_cap)?;
    found
        .iter()
        .filter_map(|sv| sv.norm.log())
        .min()
        .ok_or(LatticeError::Singular)
}
