use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Fe, FieldError, FieldSpec, Poly};

/// An absolute value on `k`: zero, or an integer power of `s`.
///
/// Variant order gives the right ordering: `Zero < Pow(a) < Pow(b)` for `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Norm {
    Zero,
    /// `s^k`.
    Pow(i64),
}

impl Norm {
    pub const ONE: Norm = Norm::Pow(0);

    /// `log_s` of the norm, `None` for zero.
    pub fn log(self) -> Option<i64> {
        match self {
            Norm::Zero => None,
            Norm::Pow(k) => Some(k),
        }
    }

    pub fn mul(self, other: Norm) -> Norm {
        match (self, other) {
            (Norm::Pow(a), Norm::Pow(b)) => Norm::Pow(a + b),
            _ => Norm::Zero,
        }
    }

    /// `self^k` for `k >= 1`.
    pub fn pow(self, k: u32) -> Norm {
        match self {
            Norm::Zero => Norm::Zero,
            Norm::Pow(a) => Norm::Pow(a * k as i64),
        }
    }

    pub fn to_f64(self, s: u32) -> f64 {
        match self {
            Norm::Zero => 0.0,
            Norm::Pow(k) => (s as f64).powi(k as i32),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Zero => write!(f, "0"),
            Norm::Pow(k) => write!(f, "s^{k}"),
        }
    }
}

/// `v(a)`: the index of the first nonzero coefficient, `+∞` for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

/// A truncated element of `F_s((X^{-1}))`.
///
/// Coefficients are indexed by the exponent of `X^{-1}`, so
/// `a = Σ_{i ≥ v} a_i X^{-i}` and a polynomial of degree `d` has order `-d`.
/// All coefficients with index `≤ prec` are known. When `exact` is set the
/// series terminates inside the stored range and `prec` is ignored.
///
/// The stored range is trimmed: `coeffs` is empty or starts and ends with a
/// nonzero coefficient. An empty non-exact series is "zero within its
/// window", which is different from a known zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LaurentSeries {
    start: i64,
    coeffs: Vec<Fe>,
    prec: i64,
    exact: bool,
}

const INF: i64 = i64::MAX / 4;

impl LaurentSeries {
    /// The known zero.
    pub fn zero() -> Self {
        LaurentSeries { start: 0, coeffs: Vec::new(), prec: INF, exact: true }
    }

    /// A series known to vanish at every index `≤ prec`.
    pub fn zero_through(prec: i64) -> Self {
        LaurentSeries { start: 0, coeffs: Vec::new(), prec, exact: false }
    }

    pub fn one() -> Self {
        Self::monomial(Fe::ONE, 0)
    }

    /// `c * X^{-index}`, exact.
    pub fn monomial(c: Fe, index: i64) -> Self {
        Self::from_coeffs(index, vec![c], None)
    }

    /// `X^k`, exact.
    pub fn x_pow(k: i64) -> Self {
        Self::monomial(Fe::ONE, -k)
    }

    /// Builds a series whose coefficient at index `start + i` is `coeffs[i]`.
    /// With `prec = Some(N)` coefficients beyond `N` are dropped and the
    /// result is inexact; `None` marks the series exact.
    pub fn from_coeffs(start: i64, coeffs: Vec<Fe>, prec: Option<i64>) -> Self {
        let mut out = LaurentSeries {
            start,
            coeffs,
            prec: prec.unwrap_or(INF),
            exact: prec.is_none(),
        };
        if let Some(n) = prec {
            let keep = (n - start + 1).clamp(0, out.coeffs.len() as i64) as usize;
            out.coeffs.truncate(keep);
        }
        out.normalize();
        out
    }

    pub fn from_poly(p: &Poly) -> Self {
        match p.degree() {
            None => Self::zero(),
            Some(d) => {
                let coeffs: Vec<Fe> = p.coeffs().iter().rev().copied().collect();
                Self::from_coeffs(-(d as i64), coeffs, None)
            }
        }
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => {
                self.coeffs.clear();
                self.start = 0;
            }
            Some(k) => {
                if k > 0 {
                    self.coeffs.drain(..k);
                    self.start += k as i64;
                }
                while self.coeffs.last().is_some_and(|c| c.is_zero()) {
                    self.coeffs.pop();
                }
            }
        }
        if self.exact {
            self.prec = INF;
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Last known index; `None` when exact.
    pub fn precision(&self) -> Option<i64> {
        (!self.exact).then_some(self.prec)
    }

    /// Last known index, with a large sentinel for exact series.
    pub fn known_through(&self) -> i64 {
        self.prec
    }

    pub fn is_known_zero(&self) -> bool {
        self.exact && self.coeffs.is_empty()
    }

    pub fn is_zero_in_window(&self) -> bool {
        !self.exact && self.coeffs.is_empty()
    }

    pub fn is_nonzero(&self) -> bool {
        !self.coeffs.is_empty()
    }

    /// Index of the first nonzero coefficient, if one is known.
    pub fn order(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then_some(self.start)
    }

    /// Index of the last stored nonzero coefficient.
    pub fn last_index(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then(|| self.start + self.coeffs.len() as i64 - 1)
    }

    /// Lower bound for the order: the order itself, or `prec + 1` when zero in window.
    pub fn order_lower_bound(&self) -> i64 {
        if self.coeffs.is_empty() {
            if self.exact {
                INF
            } else {
                self.prec + 1
            }
        } else {
            self.start
        }
    }

    /// Leading coefficient (zero when none is known).
    pub fn leading(&self) -> Fe {
        self.coeffs.first().copied().unwrap_or(Fe::ZERO)
    }

    /// Stored coefficients starting at [`Self::order`].
    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    /// Coefficient at `index`, `None` if it lies beyond the window.
    pub fn coeff(&self, index: i64) -> Option<Fe> {
        if !self.exact && index > self.prec {
            return None;
        }
        let k = index - self.start;
        if k < 0 || k >= self.coeffs.len() as i64 {
            Some(Fe::ZERO)
        } else {
            Some(self.coeffs[k as usize])
        }
    }

    pub fn valuation(&self) -> Result<Valuation, FieldError> {
        if self.coeffs.is_empty() {
            if self.exact {
                Ok(Valuation::Infinite)
            } else {
                Err(FieldError::Indeterminate { known_through: self.prec })
            }
        } else {
            Ok(Valuation::Finite(self.start))
        }
    }

    /// `|a| = s^{-v(a)}`.
    pub fn norm(&self) -> Result<Norm, FieldError> {
        Ok(match self.valuation()? {
            Valuation::Infinite => Norm::Zero,
            Valuation::Finite(v) => Norm::Pow(-v),
        })
    }

    /// Upper bound on the norm that is always available.
    pub fn norm_upper_bound(&self) -> Norm {
        if self.is_known_zero() {
            Norm::Zero
        } else {
            Norm::Pow(-self.order_lower_bound())
        }
    }

    /// Drops everything past `n`.
    pub fn truncate(&self, n: i64) -> Self {
        if !self.exact && self.prec <= n {
            return self.clone();
        }
        Self::from_coeffs(self.start, self.coeffs.clone(), Some(n))
    }

    pub fn neg(&self, f: &FieldSpec) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = f.neg(*c);
        }
        out
    }

    pub fn scale(&self, c: Fe, f: &FieldSpec) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut out = self.clone();
        for a in out.coeffs.iter_mut() {
            *a = f.mul(*a, c);
        }
        out
    }

    /// Multiplication by `X^k`.
    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.shift_in_place(k);
        out
    }

    pub fn shift_in_place(&mut self, k: i64) {
        if !self.coeffs.is_empty() {
            self.start -= k;
        }
        if !self.exact {
            self.prec -= k;
        }
    }

    pub fn add(&self, other: &Self, f: &FieldSpec) -> Self {
        let mut out = self.clone();
        out.add_scaled_shifted(Fe::ONE, 0, other, f);
        out
    }

    pub fn sub(&self, other: &Self, f: &FieldSpec) -> Self {
        let mut out = self.clone();
        out.add_scaled_shifted(f.neg(Fe::ONE), 0, other, f);
        out
    }

    /// `self += c * X^k * other`, with the window shrunk to what both inputs justify.
    pub fn add_scaled_shifted(&mut self, c: Fe, k: i64, other: &Self, f: &FieldSpec) {
        let other_prec = if other.exact { INF } else { other.prec - k };
        let exact = self.exact && other.exact;
        let prec = self.prec.min(other_prec);
        if c.is_zero() || other.coeffs.is_empty() {
            if !exact {
                self.exact = false;
                self.prec = prec;
                let keep = (prec - self.start + 1).clamp(0, self.coeffs.len() as i64) as usize;
                self.coeffs.truncate(keep);
                self.normalize();
            }
            return;
        }
        let o_start = other.start - k;
        let o_end = o_start + other.coeffs.len() as i64 - 1;
        if self.coeffs.is_empty() {
            self.start = o_start;
        }
        let s_end = self.start + self.coeffs.len() as i64 - 1;
        let lo = self.start.min(o_start);
        let hi = s_end.max(o_end).min(prec);
        if hi < lo {
            self.coeffs.clear();
        } else {
            if lo < self.start {
                let pad = (self.start - lo) as usize;
                let mut v = Vec::with_capacity((hi - lo + 1) as usize);
                v.resize(pad, Fe::ZERO);
                v.extend_from_slice(&self.coeffs);
                self.coeffs = v;
                self.start = lo;
            }
            self.coeffs.resize((hi - lo + 1) as usize, Fe::ZERO);
            if o_start <= hi {
                let from = (o_start - lo) as usize;
                let len = ((hi - o_start + 1) as usize).min(other.coeffs.len());
                f.axpy(&mut self.coeffs[from..from + len], c, &other.coeffs[..len]);
            }
        }
        self.exact = exact;
        self.prec = prec;
        self.normalize();
    }

    pub fn mul(&self, other: &Self, f: &FieldSpec) -> Self {
        if self.is_known_zero() || other.is_known_zero() {
            return Self::zero();
        }
        let exact = self.exact && other.exact;
        let lv_a = self.order_lower_bound();
        let lv_b = other.order_lower_bound();
        let pa = if self.exact { INF } else { self.prec.saturating_add(lv_b) };
        let pb = if other.exact { INF } else { other.prec.saturating_add(lv_a) };
        let prec = pa.min(pb);
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero_through(prec);
        }
        let lo = self.start + other.start;
        let full_hi = lo + (self.coeffs.len() + other.coeffs.len()) as i64 - 2;
        let hi = full_hi.min(prec);
        if hi < lo {
            return Self::zero_through(prec);
        }
        let n = (hi - lo + 1) as usize;
        let mut out = vec![Fe::ZERO; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if i >= n {
                break;
            }
            let len = (n - i).min(other.coeffs.len());
            f.axpy(&mut out[i..i + len], a, &other.coeffs[..len]);
        }
        let mut r = LaurentSeries { start: lo, coeffs: out, prec, exact };
        r.normalize();
        r
    }

    /// Multiplicative inverse. Exact monomials invert exactly; other exact
    /// inputs need `cap`, the last index to compute. For inexact inputs the
    /// result window is the one the input justifies, shrunk to `cap` if given.
    pub fn invert(&self, f: &FieldSpec, cap: Option<i64>) -> Result<Self, FieldError> {
        if self.coeffs.is_empty() {
            return Err(FieldError::ZeroInversion);
        }
        let v = self.start;
        let u0_inv = f.inv(self.coeffs[0]).expect("leading coefficient is nonzero");
        if self.exact && self.coeffs.len() == 1 {
            return Ok(Self::monomial(u0_inv, -v));
        }
        let natural = if self.exact { None } else { Some(self.prec - 2 * v) };
        let prec = match (natural, cap) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => return Err(FieldError::PrecisionRequired),
        };
        if prec < -v {
            return Err(FieldError::EmptyWindow);
        }
        let n = (prec + v + 1) as usize;
        let mut w = vec![Fe::ZERO; n];
        w[0] = u0_inv;
        let neg_inv = f.neg(u0_inv);
        for k in 1..n {
            let mut acc = Fe::ZERO;
            for j in 1..=k.min(self.coeffs.len() - 1) {
                acc = f.add(acc, f.mul(self.coeffs[j], w[k - j]));
            }
            w[k] = f.mul(neg_inv, acc);
        }
        Ok(Self::from_coeffs(-v, w, Some(prec)))
    }

    /// `self / other`; `cap` bounds the inverse as in [`Self::invert`].
    pub fn div(&self, other: &Self, f: &FieldSpec, cap: Option<i64>) -> Result<Self, FieldError> {
        Ok(self.mul(&other.invert(f, cap)?, f))
    }

    /// Splits into the polynomial part (indices `≤ 0`) and the fractional
    /// part (indices `≥ 1`, norm `≤ s^{-1}`).
    pub fn polynomial_part(&self) -> Result<(Poly, LaurentSeries), FieldError> {
        if !self.exact && self.prec < 1 {
            return Err(FieldError::PrecisionExhausted { known_through: self.prec });
        }
        let mut poly = Vec::new();
        let mut frac_start = 1;
        let mut frac = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate() {
            let idx = self.start + i as i64;
            if idx <= 0 {
                let deg = (-idx) as usize;
                if poly.len() <= deg {
                    poly.resize(deg + 1, Fe::ZERO);
                }
                poly[deg] = c;
            } else {
                if frac.is_empty() {
                    frac_start = idx;
                }
                frac.push(c);
            }
        }
        let frac = LaurentSeries::from_coeffs(
            frac_start,
            frac,
            if self.exact { None } else { Some(self.prec) },
        );
        Ok((Poly::from_coeffs(poly), frac))
    }

    /// Polynomial formed by the stored coefficients at indices `≤ 0`,
    /// whatever the window.
    pub fn known_polynomial_part(&self) -> Poly {
        let mut poly = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate() {
            let idx = self.start + i as i64;
            if idx > 0 {
                break;
            }
            let deg = (-idx) as usize;
            if poly.len() <= deg {
                poly.resize(deg + 1, Fe::ZERO);
            }
            poly[deg] = c;
        }
        Poly::from_coeffs(poly)
    }

    /// Converts an exact series with no fractional part to a polynomial.
    pub fn to_poly(&self) -> Option<Poly> {
        if !self.exact {
            return None;
        }
        let (p, frac) = self.polynomial_part().ok()?;
        frac.is_known_zero().then_some(p)
    }

    /// `Some(true)` if the difference is a known zero, `Some(false)` if it
    /// is nonzero within the window, `None` if undecidable.
    pub fn compare_eq(&self, other: &Self, f: &FieldSpec) -> Option<bool> {
        let d = self.sub(other, f);
        if d.is_known_zero() {
            Some(true)
        } else if d.is_nonzero() {
            Some(false)
        } else {
            None
        }
    }
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentSeries(\"{}\")", super::text::render(self))
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::text::render(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f2() -> FieldSpec {
        FieldSpec::prime(2).unwrap()
    }

    fn series(start: i64, codes: &[u16], prec: Option<i64>) -> LaurentSeries {
        LaurentSeries::from_coeffs(start, codes.iter().map(|&c| Fe(c)).collect(), prec)
    }

    #[test]
    fn geometric_series_inverse() {
        let f = f2();
        // 1 - X^{-1} = 1 + X^{-1} in characteristic 2
        let a = series(0, &[1, 1], None);
        let inv = a.invert(&f, Some(8)).unwrap();
        assert_eq!(inv, series(0, &[1; 9], Some(8)));
        let prod = a.mul(&inv, &f);
        assert_eq!(prod.precision(), Some(8));
        assert_eq!(prod.coeffs(), &[Fe(1)]);
    }

    #[test]
    fn additive_inverse_is_exact_zero() {
        let f = FieldSpec::prime(3).unwrap();
        let a = series(-2, &[1, 2, 0, 1], None);
        let z = a.add(&a.neg(&f), &f);
        assert!(z.is_known_zero());
        assert_eq!(z.valuation().unwrap(), Valuation::Infinite);
    }

    #[test]
    fn inexact_cancellation_is_zero_in_window() {
        let f = FieldSpec::prime(3).unwrap();
        let a = series(-2, &[1, 2, 0, 1], Some(5));
        let z = a.sub(&a, &f);
        assert!(z.is_zero_in_window());
        assert_eq!(z.valuation(), Err(FieldError::Indeterminate { known_through: 5 }));
        assert_eq!(a.compare_eq(&a, &f), None);
    }

    /// (X + X^{-1}) * X^{-1} = 1 + X^{-2} over F_3, checked by convolution.
    #[test]
    fn product_over_f3() {
        let f = FieldSpec::prime(3).unwrap();
        let a = series(-1, &[1, 0, 1], None);
        let b = LaurentSeries::x_pow(-1);
        assert_eq!(a.mul(&b, &f), series(0, &[1, 0, 1], None));
    }

    #[test]
    fn valuation_conventions() {
        let f = f2();
        let a = LaurentSeries::from_poly(&Poly::from_codes(&f, &[1, 0, 1]));
        assert_eq!(a.valuation().unwrap(), Valuation::Finite(-2));
        assert_eq!(a.norm().unwrap(), Norm::Pow(2));
        assert_eq!(Norm::Pow(2).to_f64(2), 4.0);
        let b = LaurentSeries::x_pow(-3);
        assert_eq!(b.valuation().unwrap(), Valuation::Finite(3));
        assert_eq!(b.norm().unwrap(), Norm::Pow(-3));
        assert_eq!(LaurentSeries::zero().norm().unwrap(), Norm::Zero);
    }

    #[test]
    fn polynomial_part_examples() {
        let f = f2();
        let a = series(-1, &[1, 0, 0, 1], None);
        let (p, frac) = a.polynomial_part().unwrap();
        assert_eq!(p, Poly::x());
        assert_eq!(frac, LaurentSeries::x_pow(-2));

        let poly = Poly::from_codes(&f, &[1, 1, 1]);
        let (p, frac) = LaurentSeries::from_poly(&poly).polynomial_part().unwrap();
        assert_eq!(p, poly);
        assert!(frac.is_known_zero());

        let (p, frac) = LaurentSeries::x_pow(-1).polynomial_part().unwrap();
        assert!(p.is_zero());
        assert_eq!(frac, LaurentSeries::x_pow(-1));

        let short = series(-1, &[1, 1], Some(0));
        assert!(matches!(short.polynomial_part(), Err(FieldError::PrecisionExhausted { .. })));
    }

    #[test]
    fn precision_tracking_in_products() {
        let f = f2();
        // known through index 5, order 1
        let a = series(1, &[1, 0, 1], Some(5));
        // exact X^3 shifts the window down by 3
        let b = a.mul(&LaurentSeries::x_pow(3), &f);
        assert_eq!(b.precision(), Some(2));
        assert_eq!(b.order(), Some(-2));
        // two inexact factors: min(Na + vb, Nb + va)
        let c = series(0, &[1, 1], Some(3));
        assert_eq!(a.mul(&c, &f).precision(), Some(4));
        // zero-in-window times something stays zero-in-window with the right bound
        let z = LaurentSeries::zero_through(4);
        let zc = z.mul(&c, &f);
        assert!(zc.is_zero_in_window());
        assert_eq!(zc.precision(), Some(4));
    }

    #[test]
    fn inverse_of_inexact_series() {
        let f = FieldSpec::prime(3).unwrap();
        let a = series(-1, &[2, 1, 0, 2, 1], Some(6));
        let inv = a.invert(&f, None).unwrap();
        assert_eq!(inv.order(), Some(1));
        assert_eq!(inv.precision(), Some(8));
        let prod = a.mul(&inv, &f);
        assert_eq!(prod.coeffs(), &[Fe(1)]);
        assert_eq!(prod.order(), Some(0));
        assert!(LaurentSeries::zero_through(3).invert(&f, Some(4)).is_err());
    }

    fn arb_series() -> impl Strategy<Value = LaurentSeries> {
        (-4i64..4, prop::collection::vec(0u16..3, 0..8), prop::option::of(0i64..10))
            .prop_map(|(start, c, prec)| series(start, &c, prec.map(|p| p + start)))
    }

    proptest! {
        #[test]
        fn ultrametric_inequality(a in arb_series(), b in arb_series()) {
            let f = FieldSpec::prime(3).unwrap();
            let sum = a.add(&b, &f);
            if let (Ok(na), Ok(nb), Ok(ns)) = (a.norm(), b.norm(), sum.norm()) {
                prop_assert!(ns <= na.max(nb));
                if na != nb {
                    prop_assert_eq!(ns, na.max(nb));
                }
            }
            if let (Ok(na), Ok(nb)) = (a.norm(), b.norm()) {
                if na != nb {
                    // the larger term is always determined
                    prop_assert_eq!(sum.norm().unwrap(), na.max(nb));
                }
            }
        }

        #[test]
        fn valuation_is_additive(a in arb_series(), b in arb_series()) {
            let f = FieldSpec::prime(3).unwrap();
            if let (Ok(Valuation::Finite(va)), Ok(Valuation::Finite(vb))) = (a.valuation(), b.valuation()) {
                prop_assert_eq!(a.mul(&b, &f).valuation().unwrap(), Valuation::Finite(va + vb));
            }
        }

        #[test]
        fn polynomial_part_recomposes(a in arb_series()) {
            let f = FieldSpec::prime(3).unwrap();
            if let Ok((p, frac)) = a.polynomial_part() {
                prop_assert!(frac.norm_upper_bound() <= Norm::Pow(-1));
                let back = LaurentSeries::from_poly(&p).add(&frac, &f);
                prop_assert_eq!(back, a);
            }
        }
    }
}
