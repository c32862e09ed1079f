//! Diagonal flows on unimodular lattices, the `ψ ↔ r` transform, tail
//! distributions of `Δ` and Borel–Cantelli statistics.
//!
//! For `m + n = r` the flow is `g_t = diag(X^{nt} I_m, X^{-mt} I_n)` and
//! `Λ_A = (I_m A; 0 I_n) Z^r` for an `m × n` matrix `A` over `O`.

mod rate;
mod stats;
mod trajectory;

use thiserror::Error;

use crate::ffield::{FieldSpec, LaurentSeries};
use crate::lattice::{LatticeBasis, LatticeError};

pub use rate::{psi_to_rate, rate_to_psi, PsiFamily, PsiFunction, RateFunction, RateKind};
pub use stats::{
    quasi_independence_report, strong_bc_experiment, tail_distribution, wilson_interval, BcSummary,
    DiagnosticsReport, HaarSampler, StrongBcResult, TailBin, TailTable,
};
pub(crate) use stats::quartiles;
pub use trajectory::{delta_trajectory, recommended_precision, trajectory_csv, DeltaPoint, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DaniError {
    #[error("m and n must be positive")]
    BadDimensions,
    #[error("entry ({row}, {col}) of A has negative order")]
    NegativeOrder { row: usize, col: usize },
    #[error("A must be {m} x {n}")]
    Shape { m: usize, n: usize },
    #[error("drift vector must sum to zero")]
    DriftSum,
    #[error("psi is not non-increasing near log_s x = {at}")]
    NotMonotone { at: f64 },
    #[error("rate bisection could not bracket a root at a = {a}")]
    Bracket { a: f64 },
    #[error("certification failed at t = {t}; precision {needed_precision} suffices")]
    Certification { t: i64, needed_precision: i64 },
    #[error("no tail bin in range has enough samples")]
    InsufficientSamples,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Dimensions of the flow and the base field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSpec {
    pub m: usize,
    pub n: usize,
    pub field: FieldSpec,
}

impl FlowSpec {
    pub fn new(m: usize, n: usize, field: FieldSpec) -> Result<Self, DaniError> {
        if m == 0 || n == 0 {
            return Err(DaniError::BadDimensions);
        }
        Ok(FlowSpec { m, n, field })
    }

    pub fn rank(&self) -> usize {
        self.m + self.n
    }

    pub fn s(&self) -> u32 {
        self.field.size()
    }

    /// Row exponents of `g_t`.
    pub fn exponents(&self, t: i64) -> Vec<i64> {
        let mut e = vec![self.n as i64 * t; self.m];
        e.extend(std::iter::repeat(-(self.m as i64) * t).take(self.n));
        e
    }
}

/// `t ∈ Z^r` with `Σ t_i = 0`, acting as `diag(X^{t_1}, …, X^{t_r})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DriftVector(Vec<i64>);

impl DriftVector {
    pub fn new(t: Vec<i64>) -> Result<Self, DaniError> {
        if t.iter().sum::<i64>() != 0 {
            return Err(DaniError::DriftSum);
        }
        Ok(DriftVector(t))
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// `‖t‖₋ = max{|t_i| : t_i ≤ 0}`.
    pub fn norm_minus(&self) -> i64 {
        self.0.iter().filter(|&&x| x <= 0).map(|x| -x).max().unwrap_or(0)
    }
}

/// `Λ_A` for `A` given by rows (`m` rows of `n` entries in `O`).
pub fn unipotent_lattice(a: &[Vec<LaurentSeries>], spec: &FlowSpec) -> Result<LatticeBasis, DaniError> {
    let (m, n) = (spec.m, spec.n);
    if a.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(DaniError::Shape { m, n });
    }
    for (i, row) in a.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if e.order_lower_bound() < 0 {
                return Err(DaniError::NegativeOrder { row: i, col: j });
            }
        }
    }
    let r = m + n;
    let unit = |i: usize, j: usize| if i == j { LaurentSeries::one() } else { LaurentSeries::zero() };
    let mut cols: Vec<Vec<LaurentSeries>> = (0..m).map(|j| (0..r).map(|i| unit(i, j)).collect()).collect();
    for j in 0..n {
        let mut col: Vec<LaurentSeries> = (0..m).map(|i| a[i][j].clone()).collect();
        col.extend((0..n).map(|i| unit(i, j)));
        cols.push(col);
    }
    Ok(LatticeBasis::unimodular_unchecked(&spec.field, cols))
}

/// `g_t Λ`.
pub fn flow_apply(lattice: &LatticeBasis, spec: &FlowSpec, t: i64) -> LatticeBasis {
    lattice.scale_rows(&spec.exponents(t))
}

/// `diag(X^{t_1}, …, X^{t_r}) Λ`.
pub fn flow_apply_drift(lattice: &LatticeBasis, drift: &DriftVector) -> LatticeBasis {
    lattice.scale_rows(drift.coords())
}
