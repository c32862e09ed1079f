//! Iwasawa decomposition in `SL_2(k)` and the Harish-Chandra function.
//!
//! For `h ∈ SL_2(k)` write `h = κ p` with `κ ∈ SL_2(O)` and `p` upper
//! triangular. Then `Δ_B(p)^{−1/2} = 1/‖h e_1‖`, so
//! `Ξ(g) = ∫_K ‖g k e_1‖^{−1} dk`, and `k e_1` is Haar-uniform on primitive
//! vectors of `O²`. The integrand only depends on `k e_1` modulo a power of
//! `X^{-1}`, which makes the integral a finite sum.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::ffield::{Fe, FieldError, FieldSpec, LaurentSeries, Norm};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectralError {
    #[error("matrix is singular")]
    Singular,
    #[error("determinant is not 1")]
    NotSpecial,
    #[error("cannot compare |c| and |d| at the available precision")]
    Indeterminate,
    #[error("no stabilization by depth {depth}")]
    DepthCap { depth: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Row-major `2 × 2` matrix over `k`.
pub type Mat2 = [[LaurentSeries; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2, f: &FieldSpec) -> Mat2 {
    let e = |i: usize, j: usize| a[i][0].mul(&b[0][j], f).add(&a[i][1].mul(&b[1][j], f), f);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn det(a: &Mat2, f: &FieldSpec) -> LaurentSeries {
    a[0][0].mul(&a[1][1], f).sub(&a[0][1].mul(&a[1][0], f), f)
}

pub fn identity() -> Mat2 {
    let (o, z) = (LaurentSeries::one(), LaurentSeries::zero());
    [[o.clone(), z.clone()], [z, o]]
}

/// `diag(X^t, X^{−t})`.
pub fn diagonal(t: i64) -> Mat2 {
    [[LaurentSeries::x_pow(t), LaurentSeries::zero()], [LaurentSeries::zero(), LaurentSeries::x_pow(-t)]]
}

/// `g = b · κ` with `b` upper triangular and `κ ∈ SL_2(O)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaFactors {
    pub b: Mat2,
    pub kappa: Mat2,
    /// `(v(b_11), v(b_22))`.
    pub valuations: (i64, i64),
}

/// Column operations on `g`: clear `c` with an `O`-multiple of the second
/// column when `|c| ≤ |d|`, otherwise swap and clear. `cap` bounds the
/// quotient when it has to be expanded as a series.
pub fn iwasawa(g: &Mat2, f: &FieldSpec, cap: i64) -> Result<IwasawaFactors, SpectralError> {
    if det(g, f).compare_eq(&LaurentSeries::one(), f) == Some(false) {
        return Err(SpectralError::NotSpecial);
    }
    let [[a, b], [c, d]] = g;
    let z = LaurentSeries::zero;
    let o = LaurentSeries::one;
    let (bm, kappa) = if c.is_known_zero() {
        (g.clone(), identity())
    } else {
        let nc = c.norm().map_err(|_| SpectralError::Indeterminate)?;
        let nd = d.norm().map_err(|_| SpectralError::Indeterminate)?;
        if nc <= nd {
            // g (1 0; −r 1) = (a − b r, b; 0, d), κ = (1 0; r 1)
            let r = c.div(d, f, Some(cap))?;
            let b11 = a.sub(&b.mul(&r, f), f);
            ([[b11, b.clone()], [z(), d.clone()]], [[o(), z()], [r, o()]])
        } else {
            // g (−r −1; 1 0) = (b − a r, −a; d − c r, −c), κ = (0 1; −1 −r)
            let r = d.div(c, f, Some(cap))?;
            let b11 = b.sub(&a.mul(&r, f), f);
            ([[b11, a.neg(f)], [z(), c.neg(f)]], [[z(), o()], [o().neg(f), r.neg(f)]])
        }
    };
    let v11 = bm[0][0].valuation()?;
    let v22 = bm[1][1].valuation()?;
    let fin = |v| match v {
        crate::ffield::Valuation::Finite(x) => Ok(x),
        crate::ffield::Valuation::Infinite => Err(SpectralError::Singular),
    };
    Ok(IwasawaFactors { valuations: (fin(v11)?, fin(v22)?), b: bm, kappa })
}

/// `Δ_B(diag(u, u^{-1})) = |u|²`.
pub fn modular_delta_b(u: &LaurentSeries) -> Result<Norm, SpectralError> {
    match u.norm()? {
        Norm::Zero => Err(SpectralError::Singular),
        n => Ok(n.pow(2)),
    }
}

fn max_entry_log_norm(g: &Mat2) -> i64 {
    g.iter().flatten().map(|e| e.norm_upper_bound().log().unwrap_or(i64::MIN)).max().unwrap_or(0)
}

/// Result of the finite-sum evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct XiExact {
    pub value: Rational,
    /// Level `N` at which the level-`N` and level-`N+1` sums agree.
    pub depth: usize,
    pub stabilized: bool,
    /// Every class at level `depth` has a determined integrand.
    pub exhausted: bool,
}

impl XiExact {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }
}

struct Node {
    gw: [LaurentSeries; 2],
}

/// `Ξ(g)` as an exact rational: the level-`N` sum averages the integrand
/// over representatives of primitive vectors mod `X^{−N}`; subtrees whose
/// norm is already determined are summed in closed form.
pub fn xi_exact(g: &Mat2, f: &FieldSpec, max_depth: usize) -> Result<XiExact, SpectralError> {
    if g[0][1].is_known_zero() && g[1][0].is_known_zero() {
        let a = g[0][0].norm()?.log().ok_or(SpectralError::Singular)?;
        let b = g[1][1].norm()?.log().ok_or(SpectralError::Singular)?;
        return xi_exact_diagonal(a, b, f, max_depth);
    }
    xi_exact_digits(g, f, max_depth)
}

/// Digit-by-digit evaluation for arbitrary `g`.
pub fn xi_exact_digits(g: &Mat2, f: &FieldSpec, max_depth: usize) -> Result<XiExact, SpectralError> {
    let q = f.size() as u64;
    let m_log = max_entry_log_norm(g);
    // (depth, log‖gw‖) -> number of classes at that depth
    let mut settled: BTreeMap<(usize, i64), u64> = BTreeMap::new();
    let mut frontier: Vec<Node> = vec![Node { gw: [LaurentSeries::zero(), LaurentSeries::zero()] }];
    let mut previous: Option<Rational> = None;
    for depth in 1..=max_depth + 1 {
        let k = depth as i64 - 1;
        let mut next = Vec::new();
        for node in &frontier {
            for c0 in f.elements() {
                for c1 in f.elements() {
                    if depth == 1 && c0.is_zero() && c1.is_zero() {
                        continue;
                    }
                    let gw = extend(&node.gw, g, c0, c1, k, f);
                    let e = log_norm(&gw)?;
                    // unknown digits from index `depth` on move g w by at most s^{m_log − depth}
                    if e > m_log - depth as i64 {
                        *settled.entry((depth, e)).or_insert(0) += 1;
                    } else {
                        next.push(Node { gw });
                    }
                }
            }
        }
        frontier = next;
        let mut level: BTreeMap<(usize, i64), u64> = settled.clone();
        for node in &frontier {
            *level.entry((depth, log_norm(&node.gw)?)).or_insert(0) += 1;
        }
        let value = rational_sum(&level, q, f.size());
        if let Some(prev) = &previous {
            if *prev == value {
                return Ok(XiExact { value, depth: depth - 1, stabilized: true, exhausted: frontier.is_empty() });
            }
        }
        previous = Some(value);
    }
    Err(SpectralError::DepthCap { depth: max_depth })
}

/// Level-`N` sum for `diag(u, v)` with `log|u| = a`, `log|v| = b`: the
/// representatives are grouped by the valuations of their two coordinates.
fn xi_exact_diagonal(a: i64, b: i64, f: &FieldSpec, max_depth: usize) -> Result<XiExact, SpectralError> {
    let q = BigInt::from(f.size());
    let s = Rational::from_integer(BigInt::from(f.size()));
    let level_sum = |n: usize| -> Rational {
        // (count, log|w_i|) per valuation class mod X^{−n}; None is the zero class
        let classes: Vec<(BigInt, Option<i64>)> = (0..n)
            .map(|i| ((&q - 1u32) * q.pow((n - 1 - i) as u32), Some(-(i as i64))))
            .chain(std::iter::once((BigInt::one(), None)))
            .collect();
        let mut acc = Rational::zero();
        for (c1, l1) in &classes {
            for (c2, l2) in &classes {
                if l1 != &Some(0) && l2 != &Some(0) {
                    continue;
                }
                let e = l1.map(|l| l + a).into_iter().chain(l2.map(|l| l + b)).max().expect("primitive");
                acc += Rational::from_integer(c1 * c2) * num_traits::pow::Pow::pow(&s, -e);
            }
        }
        acc / Rational::from_integer((&q * &q - 1u32) * q.pow(2 * (n as u32 - 1)))
    };
    let mut previous = level_sum(1);
    for depth in 1..=max_depth {
        let value = level_sum(depth + 1);
        if value == previous {
            // some class is still undetermined at level `N` iff `N ≤ |a − b|`
            let exhausted = depth as i64 + 1 > (a - b).abs();
            return Ok(XiExact { value, depth, stabilized: true, exhausted });
        }
        previous = value;
    }
    Err(SpectralError::DepthCap { depth: max_depth })
}

fn extend(gw: &[LaurentSeries; 2], g: &Mat2, c0: Fe, c1: Fe, k: i64, f: &FieldSpec) -> [LaurentSeries; 2] {
    let mut out = gw.clone();
    for (i, o) in out.iter_mut().enumerate() {
        o.add_scaled_shifted(c0, -k, &g[i][0], f);
        o.add_scaled_shifted(c1, -k, &g[i][1], f);
    }
    out
}

fn log_norm(v: &[LaurentSeries; 2]) -> Result<i64, SpectralError> {
    let n = match (v[0].norm(), v[1].norm()) {
        (Ok(a), Ok(b)) => a.max(b),
        // a component that vanishes in its window is dominated by a larger known one
        (Ok(a), Err(e)) | (Err(e), Ok(a)) => {
            let other = if v[0].norm().is_ok() { &v[1] } else { &v[0] };
            if other.norm_upper_bound() < a {
                a
            } else {
                return Err(e.into());
            }
        }
        (Err(e), Err(_)) => return Err(e.into()),
    };
    n.log().ok_or(SpectralError::Singular)
}

/// `Σ count · s^{−e} / ((q²−1) q^{2(depth−1)})`.
fn rational_sum(level: &BTreeMap<(usize, i64), u64>, q: u64, s: u32) -> Rational {
    let qb = BigInt::from(q);
    let sb = Rational::from_integer(BigInt::from(s));
    level.iter().fold(Rational::zero(), |acc, (&(depth, e), &count)| {
        let classes = (&qb * &qb - 1u32) * qb.pow(2 * (depth as u32 - 1));
        acc + Rational::new(BigInt::from(count), classes) * num_traits::pow::Pow::pow(&sb, -e)
    })
}

/// Haar-random element of `SL_2(O)` to precision `prec`: uniform primitive
/// first row, completed to determinant one, then a uniform lower unipotent.
pub fn sample_sl2_o<R: Rng + ?Sized>(f: &FieldSpec, prec: i64, rng: &mut R) -> Mat2 {
    let digits = |rng: &mut R| -> LaurentSeries {
        let c: Vec<Fe> = (0..=prec).map(|_| Fe(rng.gen_range(0..f.size()) as u16)).collect();
        LaurentSeries::from_coeffs(0, c, Some(prec))
    };
    let (a, b) = loop {
        let a = digits(rng);
        let b = digits(rng);
        let unit = |x: &LaurentSeries| x.coeff(0).is_some_and(|c| !c.is_zero());
        if unit(&a) || unit(&b) {
            break (a, b);
        }
    };
    let a_unit = a.coeff(0).is_some_and(|c| !c.is_zero());
    let (c0, d0) = if a_unit {
        (LaurentSeries::zero(), a.invert(f, Some(prec)).expect("unit"))
    } else {
        (b.invert(f, Some(prec)).expect("unit").neg(f), LaurentSeries::zero())
    };
    let u = digits(rng);
    let c = c0.add(&u.mul(&a, f), f);
    let d = d0.add(&u.mul(&b, f), f);
    [[a, b], [c, d]]
}

/// Monte-Carlo estimate of `Ξ(g)` with its standard error.
pub fn xi_monte_carlo<R: Rng + ?Sized>(g: &Mat2, f: &FieldSpec, samples: usize, rng: &mut R) -> Result<(f64, f64), SpectralError> {
    let m_log = max_entry_log_norm(g);
    // ‖g w‖ ≥ s^{−m_log} for primitive w, so this window decides every norm
    let prec = 2 * m_log.max(0) + 2;
    let s = f.size() as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let k = sample_sl2_o(f, prec, rng);
        let col = [k[0][0].clone(), k[1][0].clone()];
        let gw = [
            g[0][0].mul(&col[0], f).add(&g[0][1].mul(&col[1], f), f),
            g[1][0].mul(&col[0], f).add(&g[1][1].mul(&col[1], f), f),
        ];
        let e = log_norm(&gw)?;
        let x = s.powi(-e as i32);
        sum += x;
        sum_sq += x * x;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok((mean, (var / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub t: i64,
    pub xi: f64,
    pub depth: usize,
    /// `Ξ(g_t) · s^t`.
    pub xi_times_norm: f64,
    /// `log_s(ς s^{−t/σ}) − log_s Ξ(g_t) ≥ 0`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub s: u32,
    pub sigma: u32,
    pub varsigma: f64,
    pub rows: Vec<DecayRow>,
    /// Whether `Ξ(g_t)·s^t` increases along the range.
    pub xi_times_norm_grows: bool,
}

impl DecayFit {
    pub fn to_json(&self) -> String {
        let res: Vec<String> = self.rows.iter().map(|r| format!("{}", r.residual)).collect();
        format!(
            "{{\"schema\":\"ffdyn-xi-fit v1\",\"s\":{},\"sigma\":{},\"varsigma\":{},\"residuals\":[{}]}}",
            self.s,
            self.sigma,
            self.varsigma,
            res.join(",")
        )
    }
}

/// Smallest integer `σ` for which `Ξ(g_t) s^{t/σ}` is non-increasing over the
/// second half of `values`, with `ς` its maximum over the whole range; then
/// `Ξ(g_t) ≤ ς ‖g_t‖^{−1/σ}` holds on the range with `‖g_t‖ = s^t`.
pub fn decay_check(values: &[(i64, f64, usize)], s: u32) -> DecayFit {
    let sf = s as f64;
    let scaled = |sigma: u32| -> Vec<f64> {
        values.iter().map(|&(t, xi, _)| xi * sf.powf(t as f64 / sigma as f64)).collect()
    };
    let mut sigma = 1;
    loop {
        let a = scaled(sigma);
        let half = a.len() / 2;
        if a[half..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) || sigma >= 64 {
            break;
        }
        sigma += 1;
    }
    let a = scaled(sigma);
    let varsigma = a.iter().cloned().fold(0.0, f64::max);
    let rows: Vec<DecayRow> = values
        .iter()
        .zip(&a)
        .map(|(&(t, xi, depth), &ai)| DecayRow {
            t,
            xi,
            depth,
            xi_times_norm: xi * sf.powi(t as i32),
            residual: (varsigma / ai).log(sf),
        })
        .collect();
    let xi_times_norm_grows = rows.windows(2).all(|w| w[1].xi_times_norm > w[0].xi_times_norm);
    DecayFit { s, sigma, varsigma, rows, xi_times_norm_grows }
}

/// Exact `Ξ(diag(X^t, X^{−t}))` for `t ∈ range`.
pub fn xi_diagonal_table(f: &FieldSpec, range: std::ops::RangeInclusive<i64>, max_depth: usize) -> Result<Vec<(i64, XiExact)>, SpectralError> {
    range.map(|t| Ok((t, xi_exact(&diagonal(t), f, max_depth)?))).collect()
}

pub fn xi_csv(rows: &[(i64, XiExact, f64, f64)]) -> String {
    let mut s = String::from("# ffdyn-xi v1\nt,xi_exact,stabilization_depth,xi_mc,stderr\n");
    for (t, x, mc, se) in rows {
        s.push_str(&format!("{},{},{},{},{}\n", t, x.to_f64(), x.depth, mc, se));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f(p: u32) -> FieldSpec {
        FieldSpec::prime(p).unwrap()
    }

    #[test]
    fn iwasawa_examples() {
        let fl = f(3);
        let g = diagonal(2);
        let iw = iwasawa(&g, &fl, 10).unwrap();
        assert_eq!(iw.b, g);
        assert_eq!(iw.kappa, identity());
        assert_eq!(iw.valuations, (-2, 2));

        // lower unipotent with |c| > 1
        let c = LaurentSeries::from_coeffs(-2, vec![Fe(1), Fe(2), Fe(0), Fe(1)], None);
        let g = [[LaurentSeries::one(), LaurentSeries::zero()], [c, LaurentSeries::one()]];
        let iw = iwasawa(&g, &fl, 10).unwrap();
        assert!(iw.b[1][0].is_known_zero());
        let back = mat_mul(&iw.b, &iw.kappa, &fl);
        for i in 0..2 {
            for j in 0..2 {
                assert!(!back[i][j].sub(&g[i][j], &fl).is_nonzero());
            }
        }
        assert!(!det(&iw.kappa, &fl).sub(&LaurentSeries::one(), &fl).is_nonzero());
        assert!(iw.kappa.iter().flatten().all(|e| e.order_lower_bound() >= 0));
    }

    #[test]
    fn modular_function() {
        assert_eq!(modular_delta_b(&LaurentSeries::x_pow(3)).unwrap(), Norm::Pow(6));
        assert_eq!(modular_delta_b(&LaurentSeries::x_pow(-1)).unwrap(), Norm::Pow(-2));
        let unit = LaurentSeries::from_coeffs(0, vec![Fe(2), Fe(1)], Some(5));
        assert_eq!(modular_delta_b(&unit).unwrap(), Norm::ONE);
    }

    #[test]
    fn xi_identity_is_one() {
        let x = xi_exact(&identity(), &f(2), 4).unwrap();
        assert_eq!(x.value, Rational::from_integer(1.into()));
        assert!(x.exhausted);
    }

    /// `Ξ(diag(X^t, X^{−t})) = q^{−t}(1 + 2t(q−1)/(q+1))`: the first column
    /// `(X^t k_11, X^{−t} k_21)` has norm `max(s^{t−v(k_11)}, s^{−t})` and
    /// `v(k_11) = j ≥ 1` has probability `(q−1)q^{−j}/(q+1)`.
    #[test]
    fn diagonal_closed_form() {
        for p in [2u32, 3] {
            let q = p as i64;
            for t in 0..=4 {
                let x = xi_exact(&diagonal(t), &f(p), 20).unwrap();
                let expected = Rational::new(BigInt::from((q + 1) + 2 * t * (q - 1)), BigInt::from((q + 1) * q.pow(t as u32)));
                assert_eq!(x.value, expected, "q = {q}, t = {t}");
            }
        }
    }

    #[test]
    fn grouped_diagonal_matches_digits() {
        for p in [2u32, 3] {
            for t in -3..=4 {
                let g = diagonal(t);
                assert_eq!(xi_exact(&g, &f(p), 20).unwrap(), xi_exact_digits(&g, &f(p), 20).unwrap(), "q = {p}, t = {t}");
            }
        }
    }

    #[test]
    fn sampled_k_is_special() {
        let fl = f(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let k = sample_sl2_o(&fl, 12, &mut rng);
            assert!(!det(&k, &fl).sub(&LaurentSeries::one(), &fl).is_nonzero());
        }
    }

    #[test]
    fn sigma_one_fails_sigma_two_holds() {
        let vals: Vec<(i64, f64, usize)> =
            (0..=8).map(|t| (t, 2f64.powi(-t as i32) * (1.0 + 2.0 * t as f64 / 3.0), 0)).collect();
        let fit = decay_check(&vals, 2);
        assert_eq!(fit.sigma, 2);
        assert!(fit.varsigma >= 1.0);
        assert!(fit.xi_times_norm_grows);
        assert!(fit.rows.iter().all(|r| r.residual >= -1e-12));
    }
}
