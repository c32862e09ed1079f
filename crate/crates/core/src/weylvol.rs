//! Cusp-volume combinatorics for type `A_r`.
//!
//! Cocharacters are integer vectors of length `r + 1` with zero sum. `ρ` is
//! the sum of the positive roots, so `⟨ρ, λ⟩ = Σ_{i<j} (λ_i − λ_j)`.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeylError {
    #[error("rank must be at least 1")]
    Rank,
    #[error("cocharacter has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("cocharacter entries must sum to zero")]
    Sum,
    #[error("cocharacter is not dominant")]
    NotDominant,
    #[error("enumeration cap {cap} exceeded")]
    Cap { cap: u64 },
    #[error("field size must be at least 2")]
    FieldSize,
}

/// Root system of type `A_r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootSystemSpec {
    pub rank: usize,
}

impl RootSystemSpec {
    pub fn new(rank: usize) -> Result<Self, WeylError> {
        if rank == 0 {
            return Err(WeylError::Rank);
        }
        Ok(RootSystemSpec { rank })
    }

    /// `r + 1`.
    pub fn dim(&self) -> usize {
        self.rank + 1
    }

    /// Positive roots `e_i − e_j`, `i < j`, as index pairs.
    pub fn positive_roots(&self) -> Vec<(usize, usize)> {
        let d = self.dim();
        (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect()
    }

    /// `l(w_0) = r(r+1)/2`.
    pub fn longest_length(&self) -> i64 {
        (self.rank * (self.rank + 1) / 2) as i64
    }

    pub fn weyl_order(&self) -> u64 {
        (1..=self.dim() as u64).product()
    }

    pub fn check(&self, lambda: &[i64]) -> Result<(), WeylError> {
        if lambda.len() != self.dim() {
            return Err(WeylError::Length { got: lambda.len(), expected: self.dim() });
        }
        if lambda.iter().sum::<i64>() != 0 {
            return Err(WeylError::Sum);
        }
        Ok(())
    }
}

/// Weakly decreasing zero-sum cocharacter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DominantCocharacter(Vec<i64>);

impl DominantCocharacter {
    pub fn new(spec: &RootSystemSpec, lambda: Vec<i64>) -> Result<Self, WeylError> {
        spec.check(&lambda)?;
        if lambda.windows(2).any(|w| w[0] < w[1]) {
            return Err(WeylError::NotDominant);
        }
        Ok(DominantCocharacter(lambda))
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

/// `⟨ρ, λ⟩` for any cocharacter.
pub fn rho_pairing(lambda: &[i64]) -> i64 {
    let d = lambda.len();
    (0..d).flat_map(|i| (i + 1..d).map(move |j| lambda[i] - lambda[j])).sum()
}

/// All dominant `λ` with `⟨ρ, λ⟩ = l`.
///
/// Writing `a_k = λ_k − λ_{k+1} ≥ 0`, `⟨ρ, λ⟩ = Σ_k k(r+1−k) a_k` and `λ`
/// is integral iff `Σ_k k a_k ≡ 0 (mod r+1)`.
pub fn dominant_cocharacters(spec: &RootSystemSpec, l: i64) -> Vec<DominantCocharacter> {
    let r = spec.rank;
    let weights: Vec<i64> = (1..=r).map(|k| (k * (r + 1 - k)) as i64).collect();
    let mut out = Vec::new();
    let mut gaps = vec![0i64; r];
    fn rec(k: usize, left: i64, w: &[i64], gaps: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if k == w.len() {
            if left == 0 {
                out.push(gaps.clone());
            }
            return;
        }
        let mut a = 0;
        while a * w[k] <= left {
            gaps[k] = a;
            rec(k + 1, left - a * w[k], w, gaps, out);
            a += 1;
        }
        gaps[k] = 0;
    }
    if l < 0 {
        return out;
    }
    let mut all = Vec::new();
    rec(0, l, &weights, &mut gaps, &mut all);
    let d = (r + 1) as i64;
    for g in all {
        let moment: i64 = g.iter().enumerate().map(|(k, &a)| (k as i64 + 1) * a).sum();
        if moment % d != 0 {
            continue;
        }
        // λ_{r+1} = −moment/(r+1), λ_i = λ_{r+1} + Σ_{k ≥ i} a_k
        let mut lambda = vec![0i64; r + 1];
        lambda[r] = -moment / d;
        for i in (0..r).rev() {
            lambda[i] = lambda[i + 1] + g[i];
        }
        out.push(DominantCocharacter(lambda));
    }
    out
}

pub fn dominant_count(spec: &RootSystemSpec, l: i64) -> u64 {
    dominant_cocharacters(spec, l).len() as u64
}

/// Independent count: all weakly decreasing zero-sum vectors in a box.
pub fn dominant_count_by_box(spec: &RootSystemSpec, l: i64) -> u64 {
    let d = spec.dim();
    let bound = l.max(0);
    let mut count = 0;
    let mut v = vec![0i64; d];
    fn rec(i: usize, hi: i64, bound: i64, v: &mut Vec<i64>, l: i64, count: &mut u64) {
        let d = v.len();
        if i == d - 1 {
            let last = -v[..d - 1].iter().sum::<i64>();
            if last <= hi && last >= -bound {
                v[d - 1] = last;
                if rho_pairing(v) == l {
                    *count += 1;
                }
            }
            return;
        }
        let mut x = hi;
        while x >= -bound {
            v[i] = x;
            rec(i + 1, x, bound, v, l, count);
            x -= 1;
        }
    }
    rec(0, bound, bound, &mut v, l, &mut count);
    count
}

/// `w e^μ`, acting on the apartment by `x ↦ w(x + μ)`; `w` is a permutation
/// with `(w x)_{w(i)} = x_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineWeylElement {
    pub w: Vec<usize>,
    pub mu: Vec<i64>,
}

impl AffineWeylElement {
    pub fn translation(mu: Vec<i64>) -> Self {
        AffineWeylElement { w: (0..mu.len()).collect(), mu }
    }

    /// `D · w̃(x_0)` with `D = 2(r+1)` and `x_0 = ρ/(2(r+1))`, the barycentre-like
    /// point of the base alcove scaled to integers.
    fn image(&self) -> Vec<i64> {
        let d = self.mu.len();
        let big_d = 2 * d as i64;
        let x0 = base_point(d);
        let mut out = vec![0i64; d];
        for i in 0..d {
            out[self.w[i]] = x0[i] + big_d * self.mu[i];
        }
        out
    }
}

/// `2(r+1) x_0 = (r, r−2, …, −r)`.
fn base_point(d: usize) -> Vec<i64> {
    (0..d).map(|i| d as i64 - 1 - 2 * i as i64).collect()
}

/// Affine hyperplanes `⟨e_i − e_j, x⟩ = k` separating `x_0` from `w̃(x_0)`.
pub fn affine_length(el: &AffineWeylElement) -> i64 {
    length_of_image(&el.image())
}

/// Length of the element sending `x_0` to `p / 2(r+1)`.
pub fn length_of_image(p: &[i64]) -> i64 {
    let d = p.len();
    let big_d = 2 * d as i64;
    let x0 = base_point(d);
    let mut len = 0;
    for i in 0..d {
        for j in i + 1..d {
            let a = x0[i] - x0[j];
            let b = p[i] - p[j];
            len += (b.div_euclid(big_d) - a.div_euclid(big_d)).abs();
        }
    }
    len
}

/// Lengths by breadth-first search over words in the affine simple
/// reflections, acting on the left on images of `x_0`; keyed by image.
pub fn bfs_lengths(spec: &RootSystemSpec, max_len: i64, cap: u64) -> Result<HashMap<Vec<i64>, i64>, WeylError> {
    let d = spec.dim();
    let big_d = 2 * d as i64;
    let start = base_point(d);
    let mut seen: HashMap<Vec<i64>, i64> = HashMap::new();
    seen.insert(start.clone(), 0);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        let l = seen[&p];
        if l == max_len {
            continue;
        }
        let mut next = Vec::with_capacity(d);
        for i in 0..d - 1 {
            let mut q = p.clone();
            q.swap(i, i + 1);
            next.push(q);
        }
        // s_0: reflection in ⟨e_1 − e_{r+1}, x⟩ = 1
        let mut q = p.clone();
        let excess = p[0] - p[d - 1] - big_d;
        q[0] -= excess;
        q[d - 1] += excess;
        next.push(q);
        for q in next {
            if !seen.contains_key(&q) {
                if seen.len() as u64 >= cap {
                    return Err(WeylError::Cap { cap });
                }
                seen.insert(q.clone(), l + 1);
                queue.push_back(q);
            }
        }
    }
    Ok(seen)
}

/// BFS length of a single element, if within `max_len`.
pub fn bfs_length_of(table: &HashMap<Vec<i64>, i64>, el: &AffineWeylElement) -> Option<i64> {
    table.get(&el.image()).copied()
}

/// Lengths of `w e^μ` for `w ∈ W`, `μ ∈ W·λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberReport {
    pub lambda: Vec<i64>,
    pub rho_pairing: i64,
    pub lengths: Vec<i64>,
}

impl FiberReport {
    pub fn max_deviation(&self) -> i64 {
        self.lengths.iter().map(|l| (l - self.rho_pairing).abs()).max().unwrap_or(0)
    }

    /// `Σ q^{−l}` over the fiber divided by `q^{−⟨ρ,λ⟩}`.
    pub fn relative_volume(&self, q: f64) -> f64 {
        self.lengths.iter().map(|&l| q.powf((self.rho_pairing - l) as f64)).sum()
    }
}

pub fn fiber_report(spec: &RootSystemSpec, lambda: &DominantCocharacter) -> FiberReport {
    let perms = permutations(spec.dim());
    let mut orbit: Vec<Vec<i64>> = perms
        .iter()
        .map(|w| {
            let mut mu = vec![0i64; w.len()];
            for (i, &wi) in w.iter().enumerate() {
                mu[wi] = lambda.coords()[i];
            }
            mu
        })
        .collect();
    orbit.sort();
    orbit.dedup();
    let mut lengths = Vec::new();
    for mu in &orbit {
        for w in &perms {
            lengths.push(affine_length(&AffineWeylElement { w: w.clone(), mu: mu.clone() }));
        }
    }
    FiberReport { lambda: lambda.coords().to_vec(), rho_pairing: rho_pairing(lambda.coords()), lengths }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            let j = if k % 2 == 0 { i } else { 0 };
            cur.swap(j, k - 1);
        }
    }
    heap(n, &mut cur, &mut out);
    out.sort();
    out
}

/// `S(T)` against the comparator `Σ_{l ≥ T} q^{−l} l^{r−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuspTail {
    pub t: i64,
    pub tail: f64,
    pub comparator: f64,
    pub ratio: f64,
    /// Last `l` summed exactly.
    pub cutoff: i64,
    /// Rigorous bound on the omitted mass of `S(T)`.
    pub remainder_bound: f64,
}

const RELATIVE_CUTOFF: f64 = 1e-12;

/// Sums `Σ_{l ≥ t} g(l) q^{−l}` until the bound `B(L) = Σ_{l > L} (l+1)^{r−1} q^{−l}`
/// drops below `1e−12` of the partial sum; `count(l) ≤ (l+1)^{r−1}` holds
/// because `a_1, …, a_{r−1} ∈ [0, l]` determine `a_r`.
fn truncated_sum(t: i64, q: f64, r: usize, g: impl Fn(i64) -> f64) -> (f64, i64, f64) {
    let mut sum = 0.0;
    let mut l = t.max(0);
    loop {
        sum += g(l) * q.powf(-(l as f64));
        let bound = poly_geometric_tail(l, q, r);
        if (sum > 0.0 && bound <= RELATIVE_CUTOFF * sum) || l > 100_000 {
            return (sum, l, bound);
        }
        l += 1;
    }
}

/// Upper bound on `Σ_{l > big_l} (l+1)^{r−1} q^{−l}`.
fn poly_geometric_tail(big_l: i64, q: f64, r: usize) -> f64 {
    let e = (r as i32 - 1).max(0);
    let first = ((big_l + 2) as f64).powi(e) * q.powf(-((big_l + 1) as f64));
    let ratio = (((big_l + 3) as f64) / ((big_l + 2) as f64)).powi(e) / q;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    first / (1.0 - ratio)
}

pub fn cusp_tail(t: i64, spec: &RootSystemSpec, q: u32) -> Result<CuspTail, WeylError> {
    if q < 2 {
        return Err(WeylError::FieldSize);
    }
    let qf = q as f64;
    let r = spec.rank;
    let (tail, cutoff, remainder_bound) = truncated_sum(t, qf, r, |l| dominant_count(spec, l) as f64);
    let (comparator, _, _) = truncated_sum(t.max(1), qf, r, |l| (l as f64).powi(r as i32 - 1));
    Ok(CuspTail { t, tail, comparator, ratio: tail / comparator, cutoff, remainder_bound })
}

/// `max/min` of the ratio over `t_range`.
pub fn ratio_band(spec: &RootSystemSpec, q: u32, t_range: std::ops::RangeInclusive<i64>) -> Result<(f64, f64), WeylError> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for t in t_range {
        let c = cusp_tail(t, spec, q)?;
        lo = lo.min(c.ratio);
        hi = hi.max(c.ratio);
    }
    Ok((lo, hi))
}

pub fn cusp_tail_csv(rows: &[CuspTail]) -> String {
    let mut s = String::from("# ffdyn-cusp-volume v1\nT,S_T,comparator,ratio\n");
    for c in rows {
        s.push_str(&format!("{},{:e},{:e},{:.12}\n", c.t, c.tail, c.comparator, c.ratio));
    }
    s
}
