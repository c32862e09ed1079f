//! The Bruhat–Tits tree of `SL_2(k)` modulo `SL_2(F_q[X])`.
//!
//! The quotient is the ray `v_0, v_1, …` where `v_j` is the class of the
//! lattice `O ⊕ X^j O`. Masses are proportional to `1/|Γ_{v_j}|`, and a
//! non-backtracking walk on the tree projects to a walk on the ray whose
//! transitions come from the edge indices.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::daniflow::quartiles;
use crate::ffield::{FieldSpec, Poly};
use crate::rng::stream;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("stabilizer enumeration exceeds {cap} candidates")]
    Cap { cap: u64 },
    #[error("stabilizer of v_{j}: enumeration gives {oracle}, closed form gives {closed}")]
    Mismatch { j: usize, oracle: u64, closed: u64 },
    #[error("index-weighted degree at v_{j} is {degree}, expected {expected}")]
    Irregular { j: usize, degree: u64, expected: u64 },
    #[error("stabilizer orders beyond v_{j_max} overflow 64 bits")]
    TooDeep { j_max: usize },
}

/// Default cap on candidate matrices in the stabilizer enumeration.
pub const STABILIZER_CAP: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StabilizerCount {
    pub order: u64,
    /// Every stabilizing matrix has entries of degree at most the bound used.
    pub certified: bool,
}

/// `|Γ_{v_j}| = q(q²−1)` for `j = 0`, else `(q−1)q^{j+1}`.
pub fn closed_form_order(q: u64, j: usize) -> u64 {
    if j == 0 {
        q * (q * q - 1)
    } else {
        (q - 1) * q.pow(j as u32 + 1)
    }
}

/// Order of the stabilizer of `v_j` in `SL_2(F_q[X])`, by enumeration over
/// matrices with entries of degree at most `degree_bound`.
pub fn stabilizer_order_oracle(f: &FieldSpec, j: usize, degree_bound: usize) -> Result<StabilizerCount, TreeError> {
    joint_stabilizer_order(f, &[j], degree_bound, STABILIZER_CAP)
}

/// Order of `Γ_{v_{j_1}} ∩ … ∩ Γ_{v_{j_k}}` restricted to entries of degree at
/// most `degree_bound`.
///
/// `g = (a b; c d)` fixes `O ⊕ X^j O` iff `diag(1, X^{-j}) g diag(1, X^j)` lies
/// in `GL_2(O)`, i.e. `deg a, deg d ≤ 0`, `deg b ≤ −j`, `deg c ≤ j`. The
/// entries are filtered one by one and the determinant is checked on the
/// product set.
pub fn joint_stabilizer_order(
    f: &FieldSpec,
    js: &[usize],
    degree_bound: usize,
    cap: u64,
) -> Result<StabilizerCount, TreeError> {
    let all = polys_up_to(f, degree_bound, cap)?;
    let keep = |shift: i64| -> Vec<Poly> {
        all.iter()
            .filter(|p| p.is_zero() || js.iter().all(|&j| p.degree_or_neg() <= shift * j as i64))
            .cloned()
            .collect()
    };
    let diag = keep(0);
    let upper = keep(-1);
    let lower = keep(1);
    let total = (diag.len() as u64)
        .saturating_mul(diag.len() as u64)
        .saturating_mul(upper.len() as u64)
        .saturating_mul(lower.len() as u64);
    if total > cap {
        return Err(TreeError::Cap { cap });
    }
    let one = Poly::one();
    let mut order = 0u64;
    for a in &diag {
        for d in &diag {
            let ad = a.mul(d, f);
            for b in &upper {
                for c in &lower {
                    if ad.sub(&b.mul(c, f), f) == one {
                        order += 1;
                    }
                }
            }
        }
    }
    let max_j = js.iter().copied().max().unwrap_or(0);
    Ok(StabilizerCount { order, certified: degree_bound >= max_j })
}

fn polys_up_to(f: &FieldSpec, degree: usize, cap: u64) -> Result<Vec<Poly>, TreeError> {
    let q = f.size() as u64;
    let count = (0..=degree).try_fold(1u64, |acc, _| acc.checked_mul(q)).filter(|&c| c <= cap);
    let Some(count) = count else { return Err(TreeError::Cap { cap }) };
    Ok((0..count)
        .map(|mut code| {
            let digits: Vec<u32> = (0..=degree)
                .map(|_| {
                    let d = (code % q) as u32;
                    code /= q;
                    d
                })
                .collect();
            Poly::from_codes(f, &digits)
        })
        .collect())
}

/// The quotient ray with exact masses and edge indices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientRay {
    pub q: u32,
    pub j_max: usize,
    /// `|Γ_{v_j}|` for `j ≤ j_max`.
    pub orders: Vec<u64>,
    /// Normalized masses `μ(v_j)` for `j ≤ j_max`.
    pub masses: Vec<Rational>,
    /// `Σ_{j > j_max} μ(v_j)`, exact.
    pub tail: Rational,
    /// Number of tree neighbours of a lift of `v_j` that project to `v_{j+1}`.
    pub up: Vec<u32>,
    /// Number projecting to `v_{j−1}` (zero at `v_0`).
    pub down: Vec<u32>,
    /// Decay exponent of `μ(A(r))` in base `q`.
    pub l_y: f64,
}

/// Builds the ray up to `j_max ≥ 1`, checking the closed-form orders against the
/// enumeration for `j ≤ oracle_depth`.
pub fn quotient_ray(f: &FieldSpec, j_max: usize, oracle_depth: usize) -> Result<QuotientRay, TreeError> {
    let q = f.size() as u64;
    let j_max = j_max.max(1);
    let fits = (q - 1).checked_pow(2).and_then(|c| q.checked_pow(j_max as u32 + 1)?.checked_mul(c)).is_some();
    if !fits {
        return Err(TreeError::TooDeep { j_max });
    }
    let order_at = |j: usize| -> Result<u64, TreeError> {
        let closed = closed_form_order(q, j);
        if j <= oracle_depth {
            let oracle = stabilizer_order_oracle(f, j, j)?.order;
            if oracle != closed {
                return Err(TreeError::Mismatch { j, oracle, closed });
            }
        }
        Ok(closed)
    };
    // |Γ_j ∩ Γ_{j+1}|
    let meet_at = |j: usize| -> Result<u64, TreeError> {
        let closed = if j == 0 { q * (q - 1) } else { closed_form_order(q, j) };
        if j < oracle_depth {
            let oracle = joint_stabilizer_order(f, &[j, j + 1], j + 1, STABILIZER_CAP)?.order;
            if oracle != closed {
                return Err(TreeError::Mismatch { j, oracle, closed });
            }
        }
        Ok(closed)
    };
    let orders = (0..=j_max).map(order_at).collect::<Result<Vec<_>, _>>()?;
    let meets = (0..=j_max).map(meet_at).collect::<Result<Vec<_>, _>>()?;
    let mut up = Vec::with_capacity(j_max + 1);
    let mut down = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        up.push((orders[j] / meets[j]) as u32);
        down.push(if j == 0 { 0 } else { (orders[j] / meets[j - 1]) as u32 });
        let degree = up[j] as u64 + down[j] as u64;
        if degree != q + 1 {
            return Err(TreeError::Irregular { j, degree, expected: q + 1 });
        }
    }

    let inv = |n: u64| Rational::new(BigInt::one(), BigInt::from(n));
    let weights: Vec<Rational> = orders.iter().map(|&o| inv(o)).collect();
    // Σ_{j > j_max} 1/((q−1)q^{j+1}) = 1/((q−1)² q^{j_max+1})
    let tail_weight = inv((q - 1) * (q - 1) * q.pow(j_max as u32 + 1));
    let total: Rational = weights.iter().fold(tail_weight.clone(), |acc, w| acc + w);
    let masses: Vec<Rational> = weights.iter().map(|w| w / &total).collect();
    let tail = tail_weight / &total;

    let mut ray = QuotientRay { q: q as u32, j_max, orders, masses, tail, up, down, l_y: 0.0 };
    ray.l_y = ray.fit_l_y();
    Ok(ray)
}

impl QuotientRay {
    pub fn mass(&self, j: usize) -> Rational {
        if j <= self.j_max {
            return self.masses[j].clone();
        }
        let q = BigInt::from(self.q);
        let steps = (j - self.j_max) as u32;
        &self.masses[self.j_max] / Rational::from_integer(q.pow(steps))
    }

    /// `μ(A(r)) = Σ_{j ≥ r} μ(v_j)`.
    pub fn tail_mass(&self, r: usize) -> Rational {
        if r > self.j_max {
            let q = BigInt::from(self.q);
            // geometric continuation of the last mass
            let first = self.mass(r);
            return first * Rational::new(q.clone(), q - 1);
        }
        self.masses[r..].iter().fold(self.tail.clone(), |acc, m| acc + m)
    }

    pub fn up_index(&self, j: usize) -> u32 {
        self.up[j.min(self.j_max)]
    }

    pub fn down_index(&self, j: usize) -> u32 {
        if j == 0 {
            0
        } else {
            self.down[j.min(self.j_max)]
        }
    }

    /// Least-squares slope of `−log_q μ(A(r))` over `1 ≤ r ≤ j_max`.
    fn fit_l_y(&self) -> f64 {
        let pts: Vec<(f64, f64)> = (1..=self.j_max)
            .map(|r| {
                let m = self.tail_mass(r).to_f64().unwrap_or(0.0);
                (r as f64, -m.ln() / (self.q as f64).ln())
            })
            .collect();
        if pts.len() < 2 {
            return f64::NAN;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    /// Total of the stored masses and the tail; exactly one.
    pub fn total_mass(&self) -> Rational {
        self.masses.iter().fold(self.tail.clone(), |acc, m| acc + m)
    }

    /// Probability of stepping up from level `j`, given how the walk arrived.
    pub fn up_probability(&self, j: usize, came_from_above: Option<bool>) -> f64 {
        let up = self.up_index(j) as f64;
        match came_from_above {
            None => up / (self.q as f64 + 1.0),
            Some(above) => (up - if above { 1.0 } else { 0.0 }) / self.q as f64,
        }
    }
}

impl std::fmt::Display for QuotientRay {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(fm, "quotient ray q = {}, l(Y) = {:.6}", self.q, self.l_y)?;
        for j in 0..=self.j_max {
            writeln!(fm, "v_{j}: |Γ| = {}, μ = {}, up {}, down {}", self.orders[j], self.masses[j], self.up[j], self.down[j])?;
        }
        write!(fm, "tail beyond v_{}: {}", self.j_max, self.tail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicTrace {
    pub seed: u64,
    /// `d_1, …, d_T`.
    pub positions: Vec<u32>,
}

impl GeodesicTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("# ffdyn-geodesic v1\nt,level\n");
        for (t, d) in self.positions.iter().enumerate() {
            s.push_str(&format!("{},{}\n", t + 1, d));
        }
        s
    }
}

/// Walks `steps` steps from `v_0`; calls `visit(t, d_t)` for `t = 1..=steps`.
pub fn walk<R: Rng + ?Sized>(ray: &QuotientRay, steps: u64, rng: &mut R, mut visit: impl FnMut(u64, u32)) {
    let q = ray.q;
    let mut level = 0usize;
    let mut from_above: Option<bool> = None;
    for t in 1..=steps {
        let up = ray.up_index(level);
        let go_up = match from_above {
            None => rng.gen_range(0..q + 1) < up,
            Some(above) => rng.gen_range(0..q) < up - above as u32,
        };
        if go_up {
            level += 1;
            from_above = Some(false);
        } else {
            level -= 1;
            from_above = Some(true);
        }
        visit(t, level as u32);
    }
}

/// Projection of a uniform non-backtracking walk started at a lift of `v_0`.
pub fn simulate_geodesic(ray: &QuotientRay, steps: u64, seed: u64) -> GeodesicTrace {
    let mut rng = stream(seed, "tree-geodesic", 0);
    let mut positions = Vec::with_capacity(steps as usize);
    walk(ray, steps, &mut rng, |_, d| positions.push(d));
    GeodesicTrace { seed, positions }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogLawStats {
    pub q: u32,
    pub steps: u64,
    pub trials: usize,
    pub l_y: f64,
    /// `max_{u ≤ T} d_u / log_q T` per trial.
    pub ratios: Vec<f64>,
    pub median_ratio: f64,
    pub quartiles: (f64, f64),
    /// Fitted `ℓ` with `P(excursion height ≥ h) ≈ C q^{−ℓ h}`.
    pub excursion_tail_rate: f64,
    pub excursions: u64,
}

impl LogLawStats {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"schema\":\"ffdyn-loglaw v1\",\"q\":{},\"T\":{},\"trials\":{},\"lY\":{},\"median_ratio\":{},\"quartiles\":[{},{}],\"excursion_tail_rate\":{}}}",
            self.q, self.steps, self.trials, self.l_y, self.median_ratio, self.quartiles.0, self.quartiles.1, self.excursion_tail_rate
        )
    }
}

/// Runs `trials` independent walks of length `steps`.
pub fn loglaw_experiment(ray: &QuotientRay, trials: usize, steps: u64, seed: u64) -> LogLawStats {
    let per_trial: Vec<(f64, Vec<u64>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "tree-loglaw", i as u64);
            let mut max_d = 0u32;
            let mut heights: Vec<u64> = Vec::new();
            let mut current = 0u32;
            walk(ray, steps, &mut rng, |_, d| {
                max_d = max_d.max(d);
                if d == 0 {
                    bump(&mut heights, current);
                    current = 0;
                } else {
                    current = current.max(d);
                }
            });
            let log_t = (steps as f64).ln() / (ray.q as f64).ln();
            (max_d as f64 / log_t, heights)
        })
        .collect();
    let ratios: Vec<f64> = per_trial.iter().map(|p| p.0).collect();
    let mut heights: Vec<u64> = Vec::new();
    for (_, h) in &per_trial {
        if heights.len() < h.len() {
            heights.resize(h.len(), 0);
        }
        for (a, b) in heights.iter_mut().zip(h) {
            *a += b;
        }
    }
    let excursions: u64 = heights.iter().sum();
    let excursion_tail_rate = fit_excursion_rate(&heights, ray.q);
    let (q1, median, q3) = quartiles(&ratios);
    LogLawStats {
        q: ray.q,
        steps,
        trials,
        l_y: ray.l_y,
        ratios,
        median_ratio: median,
        quartiles: (q1, q3),
        excursion_tail_rate,
        excursions,
    }
}

fn bump(hist: &mut Vec<u64>, h: u32) {
    let h = h as usize;
    if hist.len() <= h {
        hist.resize(h + 1, 0);
    }
    hist[h] += 1;
}

/// Slope of `−log_q P(height ≥ h)` over heights `h ≥ 1` whose survival count is at least 100.
fn fit_excursion_rate(hist: &[u64], q: u32) -> f64 {
    let total: u64 = hist.iter().sum();
    let mut survive = total;
    let mut pts = Vec::new();
    for (h, &c) in hist.iter().enumerate() {
        if h >= 1 && survive >= 100 {
            pts.push((h as f64, -((survive as f64) / total as f64).ln() / (q as f64).ln()));
        }
        survive -= c;
    }
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Floor,
    Ceil,
}

/// Thresholds `r_t = round(factor · log_q t / l(Y))`; a constant ladder when `factor = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ladder {
    pub factor: f64,
    pub rounding: Rounding,
}

impl Ladder {
    pub fn threshold(&self, t: u64, q: u32, l_y: f64) -> i64 {
        let x = self.factor * (t as f64).ln() / (q as f64).ln() / l_y;
        match self.rounding {
            Rounding::Floor => x.floor() as i64,
            Rounding::Ceil => x.ceil() as i64,
        }
    }

    /// `Σ q^{−l(Y) r_t}` behaves like `Σ t^{−factor}`.
    pub fn series_diverges(&self) -> bool {
        self.factor <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderVerdict {
    Divergent,
    Convergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderStats {
    pub ladder: Ladder,
    /// Fraction of trials with some `d_t ≥ r_t` for `t ∈ (T/10, T]`.
    pub late_fraction: f64,
    pub observed: LadderVerdict,
    pub predicted: LadderVerdict,
}

impl LadderStats {
    pub fn agrees(&self) -> bool {
        self.observed == self.predicted
    }
}

/// Fraction of walks still hitting `{d_t ≥ r_t}` in the last decade of time.
/// Above one half reads as divergent, at most `0.1` as convergent.
pub fn ladder_experiment(ray: &QuotientRay, ladder: Ladder, trials: usize, steps: u64, seed: u64) -> LadderStats {
    let late_start = steps / 10;
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = stream(seed, "tree-ladder", i as u64);
            let mut hit = false;
            walk(ray, steps, &mut rng, |t, d| {
                if t > late_start && !hit && d as i64 >= ladder.threshold(t, ray.q, ray.l_y) {
                    hit = true;
                }
            });
            hit
        })
        .count();
    let late_fraction = hits as f64 / trials.max(1) as f64;
    let observed = if late_fraction > 0.5 {
        LadderVerdict::Divergent
    } else if late_fraction <= 0.1 {
        LadderVerdict::Convergent
    } else {
        LadderVerdict::Inconclusive
    };
    let predicted = if ladder.series_diverges() { LadderVerdict::Divergent } else { LadderVerdict::Convergent };
    LadderStats { ladder, late_fraction, observed, predicted }
}

/// Total-variation distance between the level occupation of one walk and the ray masses.
pub fn occupation_distance(ray: &QuotientRay, steps: u64, seed: u64) -> f64 {
    let mut rng = stream(seed, "tree-occupation", 0);
    let mut counts: Vec<u64> = Vec::new();
    walk(ray, steps, &mut rng, |_, d| bump(&mut counts, d));
    let levels = counts.len().max(ray.j_max + 1);
    let mut tv = 0.0;
    let mut covered = 0.0;
    for j in 0..levels {
        let emp = counts.get(j).copied().unwrap_or(0) as f64 / steps as f64;
        let m = ray.mass(j).to_f64().unwrap_or(0.0);
        covered += m;
        tv += (emp - m).abs();
    }
    tv += (1.0 - covered).max(0.0);
    tv / 2.0
}

/// `Φ(n) = P(Δ ≥ n)` for rank-2 lattices, read off the ray: a lattice at the
/// even vertex `v_{2n}` has `Δ = n`, odd vertices sit off the unimodular locus.
pub fn rank2_delta_tail(ray: &QuotientRay, n: i64) -> f64 {
    let even_mass = |j: usize| ray.mass(j);
    let even_tail = |start: usize| -> Rational {
        // sum of masses at even j ≥ start with closed-form continuation
        let mut acc = Rational::zero();
        let mut j = start + start % 2;
        while j <= ray.j_max + 1 {
            acc += even_mass(j);
            j += 2;
        }
        let q2 = BigInt::from(ray.q).pow(2);
        acc + even_mass(j) * Rational::new(q2.clone(), q2 - 1)
    };
    let total = even_tail(0);
    let n = n.max(0) as usize;
    (even_tail(2 * n) / total).to_f64().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u32) -> FieldSpec {
        FieldSpec::prime(p).unwrap()
    }

    #[test]
    fn oracle_orders() {
        assert_eq!(stabilizer_order_oracle(&f(2), 0, 0).unwrap().order, 6);
        assert_eq!(stabilizer_order_oracle(&f(2), 1, 1).unwrap().order, 4);
        assert_eq!(stabilizer_order_oracle(&f(3), 2, 2).unwrap().order, 54);
        let c = stabilizer_order_oracle(&f(3), 2, 3).unwrap();
        assert!(c.certified);
        assert_eq!(c.order, 54);
        assert!(!stabilizer_order_oracle(&f(2), 3, 1).unwrap().certified);
    }

    #[test]
    fn cap_is_reported() {
        let err = joint_stabilizer_order(&f(3), &[0], 8, 1000).unwrap_err();
        assert_eq!(err, TreeError::Cap { cap: 1000 });
    }

    #[test]
    fn ray_for_q2() {
        let ray = quotient_ray(&f(2), 10, 4).unwrap();
        assert_eq!(ray.total_mass(), Rational::one());
        assert_eq!(ray.up[0], 3);
        assert!((ray.l_y - 1.0).abs() < 1e-9);
        for j in 1..10 {
            assert_eq!(&ray.masses[j] / &ray.masses[j + 1], Rational::from_integer(2.into()));
            assert_eq!((ray.up[j], ray.down[j]), (1, 2));
        }
        for r in 0..12 {
            assert!(ray.tail_mass(r + 1) < ray.tail_mass(r));
        }
    }

    #[test]
    fn walk_rules() {
        let ray = quotient_ray(&f(3), 6, 2).unwrap();
        assert_eq!(ray.up_probability(0, None), 1.0);
        assert_eq!(ray.up_probability(0, Some(true)), 1.0);
        assert!((ray.up_probability(2, Some(false)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ray.up_probability(2, Some(true)), 0.0);
        let tr = simulate_geodesic(&ray, 500, 1);
        assert_eq!(tr.positions[0], 1);
        let mut prev = 0i64;
        for &d in &tr.positions {
            assert_eq!((d as i64 - prev).abs(), 1);
            prev = d as i64;
        }
    }

    #[test]
    fn constant_ladder_always_hits() {
        let ray = quotient_ray(&f(2), 8, 3).unwrap();
        let zero = Ladder { factor: 0.0, rounding: Rounding::Floor };
        let st = ladder_experiment(&ray, zero, 20, 1000, 3);
        assert_eq!(st.late_fraction, 1.0);
        assert!(st.agrees());
    }

    #[test]
    fn rank2_tail_is_q_to_minus_2n_ish() {
        let ray = quotient_ray(&f(2), 12, 3).unwrap();
        assert!((rank2_delta_tail(&ray, 0) - 1.0).abs() < 1e-12);
        for n in 1..6 {
            let ratio = rank2_delta_tail(&ray, n + 1) / rank2_delta_tail(&ray, n);
            assert!((ratio - 0.25).abs() < 1e-12);
        }
    }
}
