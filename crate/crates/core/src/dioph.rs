//! Direct Diophantine enumeration over `F_s[X]`: `ψ`-approximations of a
//! matrix `A`, the Khintchine–Groshev dichotomy by sampling, multiplicative
//! approximations of lattice vectors, and checks of the dictionary between
//! short vectors along the flow and approximations.
//!
//! All norms are powers of `s`, so every inequality is compared in `log_s`
//! coordinates. Strictness follows the definitions: `‖p + Aq‖^m < ψ(‖q‖^n)`
//! for matrices, `‖v^{(m)}‖^m ≤ ψ(‖v_{(n)}‖^n)` for lattices and
//! `Π(v) ≤ ‖v‖ ψ(‖v‖)` multiplicatively.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::daniflow::{psi_to_rate, unipotent_lattice, DaniError, FlowSpec, HaarSampler, PsiFamily, PsiFunction};
use crate::ffield::{content, text, FieldError, FieldSpec, LaurentSeries, Norm, Poly};
use crate::lattice::{enumerate_short_vectors, LatticeBasis, LatticeError};
use crate::rng::stream;

/// Slack for comparing `log_s ψ` values computed in floating point.
const LOG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiophError {
    #[error("A must be {m} x {n}")]
    Shape { m: usize, n: usize },
    #[error("fractional part of Aq is not determined; A is known only through index {known_through}")]
    Precision { known_through: i64 },
    #[error("search would visit {needed} candidates, cap is {cap}")]
    SearchCap { needed: u128, cap: u64 },
    #[error("delta at t = {t} is not certified")]
    Uncertified { t: i64 },
    #[error("x psi(x) must be non-increasing for the multiplicative check")]
    NotAdmissible,
    #[error("lattice must have rank at least 2")]
    Rank,
    #[error(transparent)]
    Dani(#[from] DaniError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A solution `(p, q)` of `‖p + Aq‖^m < ψ(‖q‖^n)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ApproxSolution {
    pub q: Vec<Poly>,
    pub p: Vec<Poly>,
    pub error: Norm,
    /// `log_s ‖q‖`.
    pub q_exp: i64,
}

/// `log_s ψ(s^y)` with the zero function mapped to `-∞`.
fn log_psi(psi: &PsiFunction<f64>, y: f64) -> f64 {
    psi.log_eval(y)
}

fn log_of(n: Norm) -> f64 {
    n.log().map_or(f64::NEG_INFINITY, |k| k as f64)
}

fn poly_norm(p: &Poly) -> Norm {
    p.degree().map_or(Norm::Zero, |d| Norm::Pow(d as i64))
}

fn vec_norm(v: &[Poly]) -> Norm {
    v.iter().map(poly_norm).max().unwrap_or(Norm::Zero)
}

fn check_shape(a: &[Vec<LaurentSeries>], m: usize, n: usize) -> Result<(), DiophError> {
    if a.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(DiophError::Shape { m, n });
    }
    Ok(())
}

/// Rows of `Aq`.
fn apply(a: &[Vec<LaurentSeries>], q: &[Poly], f: &FieldSpec) -> Vec<LaurentSeries> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(q)
                .fold(LaurentSeries::zero(), |acc, (e, qj)| acc.add(&e.mul(&LaurentSeries::from_poly(qj), f), f))
        })
        .collect()
}

/// `p = −⌊Aq⌋` and `‖p + Aq‖ = ‖{Aq}‖ ≤ s^{-1}`.
pub fn best_integer_approx(a: &[Vec<LaurentSeries>], q: &[Poly], f: &FieldSpec) -> Result<(Vec<Poly>, Norm), DiophError> {
    let n = q.len();
    check_shape(a, a.len(), n)?;
    let mut p = Vec::with_capacity(a.len());
    let mut err = Norm::Zero;
    for row in apply(a, q, f) {
        let (poly, frac) = row.polynomial_part()?;
        let e = frac.norm().map_err(|_| DiophError::Precision { known_through: frac.known_through() })?;
        err = err.max(e);
        p.push(poly.neg(f));
    }
    Ok((p, err))
}

/// Every polynomial of degree `≤ d`, in a fixed order.
fn polys_up_to(f: &FieldSpec, d: i64) -> impl Iterator<Item = Poly> + '_ {
    let s = f.size() as u64;
    let len = (d + 1).max(0) as u32;
    (0..s.pow(len)).map(move |mut code| {
        let mut c = Vec::with_capacity(len as usize);
        for _ in 0..len {
            c.push((code % s) as u32);
            code /= s;
        }
        Poly::from_codes(f, &c)
    })
}

/// Nonzero vectors of `n` polynomials of degree `≤ d` whose first nonzero
/// entry is monic: one representative per `F_s^*`-orbit.
fn normalized_vectors(f: &FieldSpec, n: usize, d: i64) -> Vec<Vec<Poly>> {
    let all: Vec<Poly> = polys_up_to(f, d).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * all.len());
        for v in &out {
            for p in &all {
                let mut w: Vec<Poly> = v.clone();
                w.push(p.clone());
                next.push(w);
            }
        }
        out = next;
    }
    out.into_iter()
        .filter(|v| v.iter().find(|p| !p.is_zero()).is_some_and(|p| p.leading() == f.from_int(1)))
        .collect()
}

fn candidate_count(f: &FieldSpec, n: usize, d: i64) -> u128 {
    (f.size() as u128).pow(((d + 1).max(0) as u32) * n as u32)
}

fn is_primitive(p: &[Poly], q: &[Poly], f: &FieldSpec) -> bool {
    let all: Vec<Poly> = p.iter().chain(q).cloned().collect();
    content(&all, f) == Poly::one()
}

/// Primitive solutions with `‖q‖ ≤ s^{q_max_log}`: one per ray `F_s[X]·(p, q)`,
/// normalized so that the first nonzero entry of `q` is monic.
pub fn kg_solutions(
    a: &[Vec<LaurentSeries>],
    psi: &PsiFunction<f64>,
    q_max_log: i64,
    f: &FieldSpec,
    cap: u64,
) -> Result<Vec<ApproxSolution>, DiophError> {
    search(a, psi, q_max_log, f, cap, true)
}

/// Like [`kg_solutions`] but keeping non-primitive multiples.
pub fn kg_solutions_raw(
    a: &[Vec<LaurentSeries>],
    psi: &PsiFunction<f64>,
    q_max_log: i64,
    f: &FieldSpec,
    cap: u64,
) -> Result<Vec<ApproxSolution>, DiophError> {
    search(a, psi, q_max_log, f, cap, false)
}

fn search(
    a: &[Vec<LaurentSeries>],
    psi: &PsiFunction<f64>,
    q_max_log: i64,
    f: &FieldSpec,
    cap: u64,
    primitive: bool,
) -> Result<Vec<ApproxSolution>, DiophError> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    check_shape(a, m, n)?;
    let needed = candidate_count(f, n, q_max_log);
    if needed > cap as u128 {
        return Err(DiophError::SearchCap { needed, cap });
    }
    let mut out = Vec::new();
    for q in normalized_vectors(f, n, q_max_log) {
        let (p, error) = best_integer_approx(a, &q, f)?;
        let q_exp = vec_norm(&q).log().expect("nonzero q");
        let lhs = m as f64 * log_of(error);
        if lhs < log_psi(psi, (n as i64 * q_exp) as f64) - LOG_TOL && (!primitive || is_primitive(&p, &q, f)) {
            out.push(ApproxSolution { q, p, error, q_exp });
        }
    }
    out.sort();
    Ok(out)
}

/// Raw solutions by the naive double loop over `(p, q)` with all degrees
/// `≤ d`, reduced to primitive normalized rays. Ground truth for
/// [`kg_solutions`] on small instances.
pub fn kg_solutions_double_loop(
    a: &[Vec<LaurentSeries>],
    psi: &PsiFunction<f64>,
    d: i64,
    f: &FieldSpec,
) -> Result<Vec<ApproxSolution>, DiophError> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let ps: Vec<Vec<Poly>> = {
        let all: Vec<Poly> = polys_up_to(f, d).collect();
        let mut out = vec![Vec::new()];
        for _ in 0..m {
            out = out
                .iter()
                .flat_map(|v: &Vec<Poly>| {
                    all.iter().map(move |p| {
                        let mut w = v.clone();
                        w.push(p.clone());
                        w
                    })
                })
                .collect();
        }
        out
    };
    let mut found = BTreeSet::new();
    for q in normalized_vectors(f, n, d) {
        let aq = apply(a, &q, f);
        let q_exp = vec_norm(&q).log().expect("nonzero q");
        let bound = log_psi(psi, (n as i64 * q_exp) as f64);
        for p in &ps {
            let mut err = Norm::Zero;
            for (row, pi) in aq.iter().zip(p) {
                let e = row.add(&LaurentSeries::from_poly(pi), f);
                err = err.max(e.norm().map_err(|_| DiophError::Precision { known_through: e.known_through() })?);
            }
            if (m as f64 * log_of(err)) < bound - LOG_TOL && is_primitive(p, &q, f) {
                found.insert(ApproxSolution { q: q.clone(), p: p.clone(), error: err, q_exp });
            }
        }
    }
    Ok(found.into_iter().collect())
}

pub fn solutions_csv(sols: &[ApproxSolution]) -> String {
    let render = |v: &[Poly]| -> String {
        v.iter().map(|p| text::render(&LaurentSeries::from_poly(p))).collect::<Vec<_>>().join(";")
    };
    let mut s = String::from("# ffdyn-kg-solutions v1\nq,p,err_exp,q_exp\n");
    for sol in sols {
        let err = sol.error.log().map_or("-inf".to_string(), |k| k.to_string());
        s.push_str(&format!("{},{},{},{}\n", render(&sol.q), render(&sol.p), err, sol.q_exp));
    }
    s
}

pub fn psi_label(psi: &PsiFunction<f64>) -> String {
    match &psi.family {
        PsiFamily::PowerLaw { c, tau } => format!("power_law(c={c},tau={tau})"),
        PsiFamily::LogPower { sigma } => format!("log_power(sigma={sigma})"),
        PsiFamily::Table { points } => format!("table({} points)", points.len()),
        PsiFamily::Zero => "zero".to_string(),
        PsiFamily::FromRate(_) => "from_rate".to_string(),
    }
}

/// Parameters of a dichotomy run.
#[derive(Debug, Clone)]
pub struct KgConfig {
    pub spec: FlowSpec,
    pub trials: usize,
    /// `log_s` of the horizon on `‖q‖`.
    pub horizon: i64,
    /// Last known index of the sampled entries of `A`.
    pub precision: i64,
    pub seed: u64,
    pub cap: u64,
}

/// Thresholds `⌊H/2⌋, ⌊H/4⌋, …` down to 1, largest first.
pub fn ladder(horizon: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut l = horizon / 2;
    while l >= 1 {
        out.push(l);
        l /= 2;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KgReport {
    pub schema: &'static str,
    pub psi: String,
    pub m: usize,
    pub n: usize,
    pub s: u32,
    pub horizon: i64,
    pub trials: usize,
    pub ladder: Vec<i64>,
    /// Fraction of samples with a solution beyond every ladder threshold.
    pub persistent_fraction: f64,
    /// Number of samples by terminal solution count.
    pub counts_histogram: BTreeMap<usize, u64>,
    /// Mean number of solutions with `log_s ‖q‖ ≤ d`, for `d = 0..=H`.
    pub mean_cumulative_counts: Vec<f64>,
    /// Mean count gained over the second half of the horizon.
    pub late_increment: f64,
    pub plateau: bool,
}

impl KgReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Samples `A` uniformly in `Mat_{m×n}(O)` to the configured precision and
/// records, for each sample, the primitive solutions up to the horizon.
pub fn kg_monte_carlo(psi: &PsiFunction<f64>, cfg: &KgConfig) -> Result<KgReport, DiophError> {
    let f = &cfg.spec.field;
    let sampler = HaarSampler { spec: cfg.spec.clone(), burn_in: 0, precision: cfg.precision };
    let ladder = ladder(cfg.horizon);
    let per_trial: Vec<Vec<i64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, "dioph-kg", i as u64);
            let a = sampler.sample_matrix(&mut rng);
            let sols = kg_solutions(&a, psi, cfg.horizon, f, cfg.cap)?;
            Ok(sols.iter().map(|s| s.q_exp).collect())
        })
        .collect::<Result<_, DiophError>>()?;
    let persistent = per_trial
        .iter()
        .filter(|exps| ladder.iter().all(|&l| exps.iter().any(|&e| e > l)))
        .count();
    let mut counts_histogram = BTreeMap::new();
    for exps in &per_trial {
        *counts_histogram.entry(exps.len()).or_insert(0) += 1;
    }
    let trials = cfg.trials.max(1) as f64;
    let mean_cumulative_counts: Vec<f64> = (0..=cfg.horizon)
        .map(|d| per_trial.iter().map(|e| e.iter().filter(|&&x| x <= d).count()).sum::<usize>() as f64 / trials)
        .collect();
    let h = cfg.horizon.max(0) as usize;
    let late_increment = mean_cumulative_counts[h] - mean_cumulative_counts[h / 2];
    Ok(KgReport {
        schema: "ffdyn-kg v1",
        psi: psi_label(psi),
        m: cfg.spec.m,
        n: cfg.spec.n,
        s: f.size(),
        horizon: cfg.horizon,
        trials: cfg.trials,
        ladder,
        persistent_fraction: persistent as f64 / trials,
        counts_histogram,
        mean_cumulative_counts,
        late_increment,
        plateau: late_increment < 0.1,
    })
}

/// A lattice vector with `Π(v) ≤ ‖v‖ ψ(‖v‖)` and no zero coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicativeSolution {
    /// Coefficients in the basis.
    pub coeffs: Vec<Poly>,
    pub v: Vec<LaurentSeries>,
    /// `log_s Π(v)`.
    pub prod_log: i64,
    /// `log_s ‖v‖`.
    pub norm_log: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultReport {
    pub solutions: Vec<MultiplicativeSolution>,
    /// Vectors in the search range with a zero coordinate.
    pub degenerate: usize,
    pub searched: usize,
}

fn coordinate_logs(v: &[LaurentSeries]) -> Result<Option<Vec<i64>>, DiophError> {
    let mut out = Vec::with_capacity(v.len());
    for x in v {
        match x.norm()? {
            Norm::Zero => return Ok(None),
            Norm::Pow(k) => out.push(k),
        }
    }
    Ok(Some(out))
}

fn mult_holds(psi: &PsiFunction<f64>, prod_log: i64, norm_log: i64) -> bool {
    prod_log as f64 <= norm_log as f64 + log_psi(psi, norm_log as f64) + LOG_TOL
}

/// Every nonzero `v ∈ Λ` with `‖v‖ ≤ s^{bound_log}`, split into
/// multiplicative solutions and degenerate vectors. Needs exact entries.
pub fn mult_solutions(
    lattice: &LatticeBasis,
    psi: &PsiFunction<f64>,
    bound_log: i64,
    node_cap: u64,
) -> Result<MultReport, DiophError> {
    if lattice.rank() < 2 {
        return Err(DiophError::Rank);
    }
    let found = enumerate_short_vectors(lattice, bound_log, node_cap)?;
    let mut solutions = Vec::new();
    let mut degenerate = 0;
    for sv in &found {
        let Some(logs) = coordinate_logs(&sv.v)? else {
            degenerate += 1;
            continue;
        };
        let prod_log: i64 = logs.iter().sum();
        let norm_log = *logs.iter().max().expect("rank ≥ 2");
        if mult_holds(psi, prod_log, norm_log) {
            solutions.push(MultiplicativeSolution { coeffs: sv.q.clone(), v: sv.v.clone(), prod_log, norm_log });
        }
    }
    Ok(MultReport { solutions, degenerate, searched: found.len() })
}

/// One time step of the flow check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceRow {
    pub t: i64,
    pub delta: i64,
    /// `⌈r(mnt)⌉`.
    pub threshold: i64,
    pub flagged: bool,
    /// The verified witness, for flagged times.
    pub witness: Option<ApproxSolution>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceReport {
    pub rows: Vec<CorrespondenceRow>,
    pub counterexamples: Vec<String>,
}

impl CorrespondenceReport {
    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("# ffdyn-correspondence v1\nt,delta,threshold,flagged,q_exp,err_exp\n");
        for r in &self.rows {
            let (q, e) = match &r.witness {
                Some(w) => (w.q_exp.to_string(), w.error.log().map_or("-inf".into(), |k| k.to_string())),
                None => (String::new(), String::new()),
            };
            s.push_str(&format!("{},{},{},{},{},{}\n", r.t, r.delta, r.threshold, r.flagged, q, e));
        }
        s
    }
}

fn ceil_threshold(r: f64) -> i64 {
    (r - LOG_TOL).ceil() as i64
}

/// For `t = 1..=horizon` computes `Δ(g_t Λ_A)`; whenever it reaches
/// `⌈r(mnt)⌉ = R` the shortest vector of `g_t Λ_A` gives `(p, q)`, which is
/// checked against `A` directly: `‖p + Aq‖ ≤ s^{-nt-R}`, `‖q‖ ≤ s^{mt-R}`,
/// `‖p + Aq‖^m ≤ ψ(‖q‖^n)`, and `p` is the best integer approximation.
/// Failures are collected, not raised.
pub fn correspondence_check(
    a: &[Vec<LaurentSeries>],
    spec: &FlowSpec,
    psi: &PsiFunction<f64>,
    horizon: i64,
) -> Result<CorrespondenceReport, DiophError> {
    let (m, n) = (spec.m, spec.n);
    let f = &spec.field;
    let lattice = unipotent_lattice(a, spec)?;
    let rate = psi_to_rate(psi, m as u32, n as u32);
    let mut rows = Vec::new();
    let mut counterexamples = Vec::new();
    for t in 1..=horizon {
        let red = lattice.scale_rows(&spec.exponents(t)).reduce()?;
        if !red.certified {
            return Err(DiophError::Uncertified { t });
        }
        let delta = red.delta();
        let threshold = ceil_threshold(rate.eval((m * n) as f64 * t as f64)?);
        let flagged = delta >= threshold;
        let mut witness = None;
        if flagged {
            let i = (0..red.degrees.len()).min_by_key(|&i| (red.degrees[i], i)).expect("nonempty basis");
            let c = &red.transform[i];
            let p: Vec<Poly> = c[..m].to_vec();
            let q: Vec<Poly> = c[m..].to_vec();
            match verify_witness(a, psi, f, &p, &q, n as i64 * t + threshold, m as i64 * t - threshold) {
                Ok(sol) => witness = Some(sol),
                Err(why) => counterexamples.push(format!("t = {t}, delta = {delta}, threshold = {threshold}: {why}")),
            }
        }
        rows.push(CorrespondenceRow { t, delta, threshold, flagged, witness });
    }
    Ok(CorrespondenceReport { rows, counterexamples })
}

/// Checks `(p, q)` against `A` with `‖p + Aq‖ ≤ s^{-err_depth}` and
/// `‖q‖ ≤ s^{q_log}` using only upper bounds on norms.
fn verify_witness(
    a: &[Vec<LaurentSeries>],
    psi: &PsiFunction<f64>,
    f: &FieldSpec,
    p: &[Poly],
    q: &[Poly],
    err_depth: i64,
    q_log: i64,
) -> Result<ApproxSolution, String> {
    let m = p.len() as f64;
    let n = q.len() as i64;
    let q_norm = vec_norm(q);
    let Norm::Pow(q_exp) = q_norm else {
        return Err("witness has q = 0".into());
    };
    if q_exp > q_log {
        return Err(format!("‖q‖ = s^{q_exp} exceeds s^{q_log}"));
    }
    let mut err = Norm::Zero;
    for (row, pi) in apply(a, q, f).iter().zip(p) {
        err = err.max(row.add(&LaurentSeries::from_poly(pi), f).norm_upper_bound());
    }
    if err > Norm::Pow(-err_depth) {
        return Err(format!("‖p + Aq‖ ≤ {err} is not within s^-{err_depth}"));
    }
    if m * log_of(err) > log_psi(psi, (n * q_exp) as f64) + LOG_TOL {
        return Err(format!("‖p + Aq‖^m ≤ {err}^m exceeds psi(‖q‖^n)"));
    }
    if err < Norm::ONE {
        let best = apply(a, q, f).iter().map(|row| row.known_polynomial_part()).collect::<Vec<_>>();
        if best.iter().zip(p).any(|(b, pi)| b.add(pi, f) != Poly::zero()) {
            return Err("p differs from the best integer approximation".into());
        }
    }
    Ok(ApproxSolution { q: q.to_vec(), p: p.to_vec(), error: err, q_exp })
}

/// Multiplicative counterpart over `t ∈ 𝔡` with `|t_i| ≤ bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultCorrespondenceReport {
    /// Flagged points per Weyl chamber, keyed by the sorting permutation of `t`.
    pub flagged_by_chamber: BTreeMap<Vec<usize>, usize>,
    pub scanned: usize,
    pub verified: usize,
    pub degenerate: usize,
    pub counterexamples: Vec<String>,
}

fn chamber(t: &[i64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..t.len()).collect();
    idx.sort_by_key(|&i| (t[i], i));
    idx
}

fn drift_box(r: usize, bound: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..r - 1 {
        out = out
            .iter()
            .flat_map(|v: &Vec<i64>| {
                (-bound..=bound).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out.into_iter()
        .filter_map(|mut v| {
            let last = -v.iter().sum::<i64>();
            (last.abs() <= bound).then(|| {
                v.push(last);
                v
            })
        })
        .collect()
}

/// For each `t` in the box with `Δ(g_t Λ) ≥ ⌈r(‖t‖₋)⌉ = R`, where `r` is the
/// rate for `(m, n) = (rank − 1, 1)`, the shortest vector `v` of `g_t Λ`
/// pulled back to `Λ` must satisfy `|v_i| ≤ s^{-R-t_i}` and
/// `Π(v) ≤ ‖v‖ ψ(‖v‖)` unless it has a zero coordinate.
pub fn mult_correspondence_check(
    lattice: &LatticeBasis,
    psi: &PsiFunction<f64>,
    bound: i64,
) -> Result<MultCorrespondenceReport, DiophError> {
    let r = lattice.rank();
    if r < 2 {
        return Err(DiophError::Rank);
    }
    if !psi.x_psi_non_increasing((r as i64 * bound + 2) as f64) {
        return Err(DiophError::NotAdmissible);
    }
    let f = lattice.field();
    let rate = psi_to_rate(psi, r as u32 - 1, 1);
    let mut report = MultCorrespondenceReport {
        flagged_by_chamber: BTreeMap::new(),
        scanned: 0,
        verified: 0,
        degenerate: 0,
        counterexamples: Vec::new(),
    };
    for t in drift_box(r, bound) {
        report.scanned += 1;
        let red = lattice.scale_rows(&t).reduce()?;
        if !red.certified {
            return Err(DiophError::Uncertified { t: t.iter().map(|x| x.abs()).max().unwrap_or(0) });
        }
        let norm_minus = t.iter().filter(|&&x| x <= 0).map(|x| -x).max().unwrap_or(0);
        let threshold = ceil_threshold(rate.eval(norm_minus as f64)?);
        if red.delta() < threshold {
            continue;
        }
        *report.flagged_by_chamber.entry(chamber(&t)).or_insert(0) += 1;
        let i = (0..red.degrees.len()).min_by_key(|&i| (red.degrees[i], i)).expect("nonempty basis");
        let c = &red.transform[i];
        let v: Vec<LaurentSeries> = (0..r)
            .map(|row| {
                lattice.columns().iter().zip(c).fold(LaurentSeries::zero(), |acc, (col, cj)| {
                    acc.add(&col[row].mul(&LaurentSeries::from_poly(cj), f), f)
                })
            })
            .collect();
        let Some(logs) = coordinate_logs(&v)? else {
            report.degenerate += 1;
            continue;
        };
        let bad_coord = logs.iter().zip(&t).position(|(&l, &ti)| l > -threshold - ti);
        let prod_log: i64 = logs.iter().sum();
        let norm_log = *logs.iter().max().expect("rank ≥ 2");
        if let Some(i) = bad_coord {
            report.counterexamples.push(format!("t = {t:?}: |v_{i}| = s^{} exceeds s^{}", logs[i], -threshold - t[i]));
        } else if !mult_holds(psi, prod_log, norm_log) {
            report.counterexamples.push(format!("t = {t:?}: Π(v) = s^{prod_log} exceeds ‖v‖ψ(‖v‖) at ‖v‖ = s^{norm_log}"));
        } else {
            report.verified += 1;
        }
    }
    Ok(report)
}

/// Outcome of the search for `v ∈ Λ` with `v^{(m)} = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroBlock {
    pub flag: bool,
    /// Coefficients of a vector with vanishing first block.
    pub witness: Option<Vec<Poly>>,
    pub searched_degree: i64,
}

/// Searches coefficient vectors of degree `≤ max_deg` for a nonzero lattice
/// vector whose first `m` coordinates vanish exactly. Such a `Λ` is
/// `(ψ, n)`-approximable for every `ψ`.
pub fn zero_block_detector(lattice: &LatticeBasis, m: usize, max_deg: i64, cap: u64) -> ZeroBlock {
    let f = lattice.field();
    let r = lattice.rank();
    let mut deg = max_deg;
    while deg >= 0 && candidate_count(f, r, deg) > cap as u128 {
        deg -= 1;
    }
    for c in normalized_vectors(f, r, deg) {
        let vanishes = (0..m.min(r)).all(|row| {
            lattice
                .columns()
                .iter()
                .zip(&c)
                .fold(LaurentSeries::zero(), |acc, (col, cj)| acc.add(&col[row].mul(&LaurentSeries::from_poly(cj), f), f))
                .is_known_zero()
        });
        if vanishes {
            return ZeroBlock { flag: true, witness: Some(c), searched_degree: deg };
        }
    }
    ZeroBlock { flag: false, witness: None, searched_degree: deg }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::Fe;

    fn f2() -> FieldSpec {
        FieldSpec::prime(2).unwrap()
    }

    fn x() -> Poly {
        Poly::x()
    }

    #[test]
    fn best_approx_examples() {
        let f = f2();
        let a = vec![vec![LaurentSeries::from_coeffs(1, vec![Fe(1), Fe(0), Fe(1)], None)]];
        let (p, err) = best_integer_approx(&a, &[x()], &f).unwrap();
        assert_eq!(p, vec![Poly::one().neg(&f)]);
        assert_eq!(err, Norm::Pow(-2));

        let zero = vec![vec![LaurentSeries::zero()]];
        for q in polys_up_to(&f, 3) {
            assert_eq!(best_integer_approx(&zero, &[q], &f).unwrap(), (vec![Poly::zero()], Norm::Zero));
        }

        let poly = vec![vec![LaurentSeries::from_poly(&Poly::from_codes(&f, &[1, 1]))]];
        assert_eq!(best_integer_approx(&poly, &[x()], &f).unwrap().1, Norm::Zero);
    }

    #[test]
    fn best_approx_needs_precision() {
        let f = f2();
        let a = vec![vec![LaurentSeries::from_coeffs(1, vec![], Some(3))]];
        assert!(matches!(best_integer_approx(&a, &[Poly::one()], &f), Err(DiophError::Precision { .. })));
    }

    #[test]
    fn zero_matrix_accepts_every_primitive_q() {
        let f = f2();
        let a = vec![vec![LaurentSeries::zero()]];
        let sols = kg_solutions(&a, &PsiFunction::inverse(2), 3, &f, 1 << 20).unwrap();
        // p = 0, so (0, q) is primitive only for q = 1
        assert_eq!(sols.len(), 1);
        assert!(sols.iter().all(|s| s.error == Norm::Zero));
    }

    #[test]
    fn ladder_halves() {
        assert_eq!(ladder(12), vec![6, 3, 1]);
        assert_eq!(ladder(1), Vec::<i64>::new());
    }

    #[test]
    fn drift_box_sums_to_zero() {
        let b = drift_box(3, 2);
        assert!(b.iter().all(|t| t.iter().sum::<i64>() == 0 && t.iter().all(|x| x.abs() <= 2)));
        assert_eq!(b.len(), 19);
    }
}
