//! Monte-Carlo statistics of `Δ` along the flow.
//!
//! Lattices are drawn by the usual horospherical surrogate for Haar measure:
//! `A` uniform in `Mat_{m×n}(O)` to a finite precision, pushed by `g_{t*}`.

use rand::Rng;
use rayon::prelude::*;

use crate::ffield::{Fe, LaurentSeries};
use crate::lattice::LatticeBasis;
use crate::rng::stream;

use super::{flow_apply, recommended_precision, unipotent_lattice, DaniError, FlowSpec, Trajectory};

#[derive(Debug, Clone)]
pub struct HaarSampler {
    pub spec: FlowSpec,
    pub burn_in: i64,
    /// Last index of `A` that is sampled.
    pub precision: i64,
}

impl HaarSampler {
    /// Sampler whose precision certifies trajectories up to `horizon` past burn-in.
    pub fn new(spec: FlowSpec, burn_in: i64, horizon: i64) -> Self {
        let precision = recommended_precision(&spec, burn_in + horizon);
        HaarSampler { spec, burn_in, precision }
    }

    pub fn sample_matrix<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<LaurentSeries>> {
        let s = self.spec.s();
        (0..self.spec.m)
            .map(|_| {
                (0..self.spec.n)
                    .map(|_| {
                        let c = (0..=self.precision).map(|_| Fe(rng.gen_range(0..s) as u16)).collect();
                        LaurentSeries::from_coeffs(0, c, Some(self.precision))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn sample_lattice<R: Rng + ?Sized>(&self, rng: &mut R) -> LatticeBasis {
        let a = self.sample_matrix(rng);
        let lat = unipotent_lattice(&a, &self.spec).expect("sampled entries lie in O");
        flow_apply(&lat, &self.spec, self.burn_in)
    }

    pub fn sample_delta<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<i64, DaniError> {
        let lat = self.sample_lattice(rng);
        Ok(Trajectory::new(&lat, &self.spec)?.delta())
    }

    /// `Δ(g_t x)` for `t = 1..=horizon`, with `x` a fresh sample.
    pub fn sample_trajectory<R: Rng + ?Sized>(&self, rng: &mut R, horizon: i64) -> Result<Vec<i64>, DaniError> {
        let lat = self.sample_lattice(rng);
        let mut traj = Trajectory::new(&lat, &self.spec)?;
        (0..horizon).map(|_| traj.advance()).collect()
    }
}

/// 95% Wilson score interval for `hits / n`.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = hits as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailBin {
    pub n: i64,
    pub hits: u64,
    pub samples: u64,
    pub phi: f64,
    pub ci: (f64, f64),
}

/// `Φ_Δ(n) = P(Δ ≥ n)` with a fit `Φ_Δ(n) ≈ C s^{-κ n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailTable {
    pub s: u32,
    pub bins: Vec<TailBin>,
    pub kappa: Option<f64>,
    pub c: Option<f64>,
}

/// Bins with fewer hits are left out of the fit.
pub const MIN_FIT_HITS: u64 = 50;

impl TailTable {
    /// Exact table, e.g. from tree masses; `phi(n)` for `n = 0..=n_max`.
    pub fn exact(s: u32, phi: impl Fn(i64) -> f64, n_max: i64) -> Self {
        let bins = (0..=n_max)
            .map(|n| {
                let p = phi(n);
                TailBin { n, hits: 0, samples: 0, phi: p, ci: (p, p) }
            })
            .collect();
        let mut t = TailTable { s, bins, kappa: None, c: None };
        t.fit_exact();
        t
    }

    fn fit_exact(&mut self) {
        let pts: Vec<(f64, f64)> = self
            .bins
            .iter()
            .filter(|b| b.n >= 1 && b.phi > 0.0)
            .map(|b| (b.n as f64, b.phi.log(self.s as f64)))
            .collect();
        if let Some((k, c)) = fit_line(&pts) {
            self.kappa = Some(k);
            self.c = Some(c);
        }
    }

    /// `Φ(n)`; beyond the table the fitted tail is used, below zero it is 1.
    pub fn phi(&self, n: i64) -> f64 {
        if n <= 0 {
            return 1.0;
        }
        match self.bins.iter().find(|b| b.n == n) {
            Some(b) => b.phi,
            None => match (self.kappa, self.c) {
                (Some(k), Some(c)) => (c * (self.s as f64).powf(-k * n as f64)).min(1.0),
                _ => 0.0,
            },
        }
    }
}

/// Least squares `y ≈ log_s C - κ x`; returns `(κ, C)`.
fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((-slope, my - slope * mx))
}

/// Empirical `Φ_Δ(n)` for `n = 0..=n_max` from `samples` independent draws.
pub fn tail_distribution(
    sampler: &HaarSampler,
    n_max: i64,
    samples: u64,
    seed: u64,
) -> Result<TailTable, DaniError> {
    let deltas: Vec<i64> = (0..samples)
        .into_par_iter()
        .map(|i| sampler.sample_delta(&mut stream(seed, "tail", i)))
        .collect::<Result<_, _>>()?;
    let s = sampler.spec.s();
    let bins: Vec<TailBin> = (0..=n_max)
        .map(|n| {
            let hits = deltas.iter().filter(|&&d| d >= n).count() as u64;
            TailBin { n, hits, samples, phi: hits as f64 / samples as f64, ci: wilson_interval(hits, samples) }
        })
        .collect();
    let pts: Vec<(f64, f64)> = bins
        .iter()
        .filter(|b| b.n >= 1 && b.hits >= MIN_FIT_HITS)
        .map(|b| (b.n as f64, b.phi.log(s as f64)))
        .collect();
    let (kappa, c_log) = fit_line(&pts).ok_or(DaniError::InsufficientSamples)?;
    Ok(TailTable { s, bins, kappa: Some(kappa), c: Some((s as f64).powf(c_log)) })
}

#[derive(Debug, Clone, PartialEq)]
pub enum BcSummary {
    /// Expected hit mass is large enough for ratios to mean something.
    Ratio { median: f64, q1: f64, q3: f64 },
    /// Expected mass below the floor: raw counts, reported as bounded or not.
    Convergent { max_count: u64, fraction_with_late_hits: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongBcResult {
    pub checkpoints: Vec<i64>,
    /// `Σ_{t ≤ N} Φ(r_t)` at each checkpoint.
    pub expected: Vec<f64>,
    /// Hit counts per trial at each checkpoint.
    pub counts: Vec<Vec<u64>>,
    pub terminal_ratios: Vec<f64>,
    pub summary: BcSummary,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub(crate) fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75))
}

/// Hit counts `#{t ≤ N : Δ(g_t x) ≥ r_t}` against `Σ_{t ≤ N} Φ(r_t)`.
/// `rates[t - 1]` is `r_t`.
pub fn strong_bc_experiment(
    sampler: &HaarSampler,
    rates: &[i64],
    table: &TailTable,
    trials: u64,
    seed: u64,
    mass_floor: f64,
) -> Result<StrongBcResult, DaniError> {
    let horizon = rates.len() as i64;
    let mut checkpoints: Vec<i64> = Vec::new();
    let mut c = 10;
    while c < horizon {
        checkpoints.push(c);
        c *= 10;
    }
    checkpoints.push(horizon);
    let mut expected = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut ci = 0;
    for (t, &r) in rates.iter().enumerate() {
        acc += table.phi(r);
        if ci < checkpoints.len() && t as i64 + 1 == checkpoints[ci] {
            expected.push(acc);
            ci += 1;
        }
    }
    let counts: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let traj = sampler.sample_trajectory(&mut stream(seed, "strong-bc", i), horizon)?;
            let mut out = Vec::with_capacity(checkpoints.len());
            let mut hits = 0u64;
            let mut ci = 0;
            for (t, (&d, &r)) in traj.iter().zip(rates).enumerate() {
                if d >= r {
                    hits += 1;
                }
                if ci < checkpoints.len() && t as i64 + 1 == checkpoints[ci] {
                    out.push(hits);
                    ci += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<_, DaniError>>()?;
    let total = *expected.last().unwrap_or(&0.0);
    let terminal_ratios: Vec<f64> =
        counts.iter().map(|c| *c.last().unwrap_or(&0) as f64 / total).collect();
    let summary = if total >= mass_floor {
        let (q1, median, q3) = quartiles(&terminal_ratios);
        BcSummary::Ratio { median, q1, q3 }
    } else {
        let max_count = counts.iter().map(|c| *c.last().unwrap_or(&0)).max().unwrap_or(0);
        // late hits: any hit after the middle checkpoint
        let mid = checkpoints.len().saturating_sub(2);
        let late = counts.iter().filter(|c| c.last() != c.get(mid)).count();
        BcSummary::Convergent { max_count, fraction_with_late_hits: late as f64 / trials.max(1) as f64 }
    };
    Ok(StrongBcResult { checkpoints, expected, counts, terminal_ratios, summary })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub window: (i64, i64),
    /// Mean of `S_{H,N'}` over trials, for `N' = M..=N`.
    pub s_partial: Vec<f64>,
    /// `E_{H,N'} = Σ_{t=M}^{N'} P(E_t)`, estimated.
    pub e_partial: Vec<f64>,
    /// `Σ_{s,t} (P(E_s ∩ E_t) - P(E_s) P(E_t))` over the window.
    pub correlation_excess: f64,
    /// `excess / E_{H,N}`, `None` when `E` vanishes.
    pub c_estimate: Option<f64>,
    /// Partial sums `Σ_{u=M}^{N'} ‖g_M g_u^{-1}‖^{-β}` for each β.
    pub ed_partial: Vec<(f64, Vec<f64>)>,
}

/// Pair-correlation diagnostics for events `E_t = {Δ(g_t x) ≥ r_t}`,
/// `M ≤ t ≤ N`; `rates[t - 1]` is `r_t`.
pub fn quasi_independence_report(
    sampler: &HaarSampler,
    rates: &[i64],
    window: (i64, i64),
    trials: u64,
    seed: u64,
    betas: &[f64],
) -> Result<DiagnosticsReport, DaniError> {
    let (lo, hi) = window;
    assert!(1 <= lo && lo <= hi && hi as usize <= rates.len());
    let width = (hi - lo + 1) as usize;
    let hits: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let traj = sampler.sample_trajectory(&mut stream(seed, "bc-diag", i), hi)?;
            Ok((lo..=hi).map(|t| traj[(t - 1) as usize] >= rates[(t - 1) as usize]).collect())
        })
        .collect::<Result<_, DaniError>>()?;
    let nt = trials.max(1) as f64;
    let p: Vec<f64> =
        (0..width).map(|k| hits.iter().filter(|h| h[k]).count() as f64 / nt).collect();
    let mut excess = 0.0;
    for a in 0..width {
        for b in 0..width {
            let joint = hits.iter().filter(|h| h[a] && h[b]).count() as f64 / nt;
            excess += joint - p[a] * p[b];
        }
    }
    let mut s_partial = Vec::with_capacity(width);
    let mut e_partial = Vec::with_capacity(width);
    let (mut s_acc, mut e_acc) = (0.0, 0.0);
    for (k, pk) in p.iter().enumerate() {
        s_acc += hits.iter().filter(|h| h[k]).count() as f64 / nt;
        e_acc += pk;
        s_partial.push(s_acc);
        e_partial.push(e_acc);
    }
    let spread = sampler.spec.m.max(sampler.spec.n) as f64;
    let s = sampler.spec.s() as f64;
    let ed_partial = betas
        .iter()
        .map(|&beta| {
            let mut acc = 0.0;
            let sums = (lo..=hi)
                .map(|u| {
                    acc += s.powf(-beta * spread * (u - lo) as f64);
                    acc
                })
                .collect();
            (beta, sums)
        })
        .collect();
    Ok(DiagnosticsReport {
        window,
        s_partial,
        e_partial,
        correlation_excess: excess,
        c_estimate: (e_acc > 0.0).then(|| excess / e_acc),
        ed_partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::FieldSpec;

    fn sampler(horizon: i64) -> HaarSampler {
        HaarSampler::new(FlowSpec::new(1, 1, FieldSpec::prime(2).unwrap()).unwrap(), 8, horizon)
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5 && lo > 0.39 && hi < 0.61);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn tail_starts_at_one_and_decreases() {
        let t = tail_distribution(&sampler(0), 4, 2000, 1).unwrap();
        assert_eq!(t.bins[0].phi, 1.0);
        for w in t.bins.windows(2) {
            assert!(w[1].phi <= w[0].phi);
        }
    }

    #[test]
    fn zero_thresholds_give_ratio_one() {
        let sm = sampler(50);
        let table = TailTable::exact(2, |n| if n <= 0 { 1.0 } else { 0.5f64.powi(2 * n as i32 - 1) }, 20);
        let res = strong_bc_experiment(&sm, &[0; 50], &table, 8, 3, 1.0).unwrap();
        assert!(res.terminal_ratios.iter().all(|&r| r == 1.0));
        assert_eq!(res.expected.last(), Some(&50.0));
    }

    #[test]
    fn single_time_excess_is_a_variance() {
        let sm = sampler(12);
        let rep = quasi_independence_report(&sm, &[1; 12], (10, 10), 200, 5, &[1.0]).unwrap();
        let p = rep.e_partial[0];
        assert!((rep.correlation_excess - p * (1.0 - p)).abs() < 1e-12);
        assert!(rep.correlation_excess >= 0.0);
    }

    #[test]
    fn ed_sums_converge_geometrically() {
        let sm = sampler(30);
        let rep = quasi_independence_report(&sm, &[0; 30], (1, 30), 4, 5, &[1.0]).unwrap();
        let sums = &rep.ed_partial[0].1;
        assert!((sums.last().unwrap() - 2.0).abs() < 1e-6);
    }
}
