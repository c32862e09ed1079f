//! Approximation functions `ψ` and the rate `r(a)` they determine.
//!
//! Everything is in `log_s` coordinates: `y = log_s x` and
//! `log_s ψ(s^y)`. The rate solves
//! `log_s ψ(s^{a - n r}) = -a - m r`, so that `λ(a) = a - n r(a)` and
//! `L(a) = a + m r(a)` satisfy `ψ(s^{λ(a)}) = s^{-L(a)}`.

use std::sync::Arc;

use num_traits::Float;

use super::DaniError;

#[derive(Clone)]
pub enum PsiFamily<F> {
    /// `ψ(x) = s^{-c} x^{-τ}` on `x ≥ 1`.
    PowerLaw { c: F, tau: F },
    /// `ψ(x) = 1 / (x (log_s x)^σ)` on `x ≥ s`.
    LogPower { sigma: F },
    /// Piecewise linear in `(log_s x, log_s ψ)`; the last slope continues.
    Table { points: Vec<(F, F)> },
    /// `ψ ≡ 0`.
    Zero,
    /// Inverse of a rate function.
    FromRate(Arc<RateFunction<F>>),
}

/// An approximation function on `[x_0, ∞)`, extended as the constant
/// `ψ(x_0)` below `x_0`.
#[derive(Clone)]
pub struct PsiFunction<F> {
    pub s: u32,
    pub family: PsiFamily<F>,
    /// `log_s x_0`.
    pub y0: F,
}

fn lit<F: Float>(x: f64) -> F {
    F::from(x).expect("float literal")
}

impl<F: Float> PsiFunction<F> {
    pub fn power_law(s: u32, c: F, tau: F) -> Self {
        PsiFunction { s, family: PsiFamily::PowerLaw { c, tau }, y0: F::zero() }
    }

    /// `ψ(x) = 1/x`.
    pub fn inverse(s: u32) -> Self {
        Self::power_law(s, F::zero(), F::one())
    }

    /// `ψ ≡ 1`.
    pub fn one(s: u32) -> Self {
        Self::power_law(s, F::zero(), F::zero())
    }

    pub fn log_power(s: u32, sigma: F) -> Self {
        PsiFunction { s, family: PsiFamily::LogPower { sigma }, y0: F::one() }
    }

    pub fn zero(s: u32) -> Self {
        PsiFunction { s, family: PsiFamily::Zero, y0: F::zero() }
    }

    /// Table of `(log_s x, log_s ψ(x))`, sorted by `x`; must be non-increasing.
    pub fn table(s: u32, points: Vec<(F, F)>) -> Result<Self, DaniError> {
        if points.is_empty() {
            return Err(DaniError::NotMonotone { at: 0.0 });
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 > w[0].1 {
                return Err(DaniError::NotMonotone { at: w[1].0.to_f64().unwrap_or(f64::NAN) });
            }
        }
        let y0 = points[0].0;
        Ok(PsiFunction { s, family: PsiFamily::Table { points }, y0 })
    }

    fn ln_s(&self) -> F {
        lit::<F>(self.s as f64).ln()
    }

    /// `log_s ψ(s^y)`; `-∞` for the zero function.
    pub fn log_eval(&self, y: F) -> F {
        let y = if y < self.y0 { self.y0 } else { y };
        match &self.family {
            PsiFamily::PowerLaw { c, tau } => -*c - *tau * y,
            PsiFamily::LogPower { sigma } => -y - *sigma * (y.ln() / self.ln_s()),
            PsiFamily::Zero => F::neg_infinity(),
            PsiFamily::Table { points } => {
                let k = points.partition_point(|p| p.0 <= y);
                let (a, b) = if k == 0 {
                    return points[0].1;
                } else if k >= points.len() {
                    if points.len() == 1 {
                        return points[0].1;
                    }
                    (points[points.len() - 2], points[points.len() - 1])
                } else {
                    (points[k - 1], points[k])
                };
                a.1 + (b.1 - a.1) * (y - a.0) / (b.0 - a.0)
            }
            PsiFamily::FromRate(rate) => rate.psi_log_at(y),
        }
    }

    pub fn eval(&self, x: F) -> F {
        let y = x.ln() / self.ln_s();
        lit::<F>(self.s as f64).powf(self.log_eval(y))
    }

    /// Checks `ψ` is non-increasing on the grid `y0, y0 + step, …, y_max`.
    pub fn check_monotone(&self, y_max: F, step: F) -> Result<(), DaniError> {
        let mut y = self.y0;
        let mut prev = self.log_eval(y);
        while y <= y_max {
            y = y + step;
            let cur = self.log_eval(y);
            if cur > prev + lit(1e-12) {
                return Err(DaniError::NotMonotone { at: y.to_f64().unwrap_or(f64::NAN) });
            }
            prev = cur;
        }
        Ok(())
    }

    /// Whether `x ψ(x)` is non-increasing on the grid.
    pub fn x_psi_non_increasing(&self, y_max: F) -> bool {
        let mut y = self.y0;
        let mut prev = y + self.log_eval(y);
        while y <= y_max {
            y = y + F::one();
            let cur = y + self.log_eval(y);
            if cur > prev + lit(1e-12) {
                return false;
            }
            prev = cur;
        }
        true
    }
}

#[derive(Clone)]
pub enum RateKind<F> {
    FromPsi(PsiFunction<F>),
    Constant(F),
}

/// `r(a)` together with `λ(a)` and `L(a)`.
#[derive(Clone)]
pub struct RateFunction<F> {
    pub m: u32,
    pub n: u32,
    pub kind: RateKind<F>,
}

const BISECT_TOL: f64 = 1e-12;

fn bisect<F: Float>(mut lo: F, mut hi: F, g: impl Fn(F) -> F) -> F {
    let tol = lit::<F>(BISECT_TOL);
    for _ in 0..400 {
        if hi - lo <= tol * (F::one() + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = lo + (hi - lo) / lit(2.0);
        if g(mid) < F::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + (hi - lo) / lit(2.0)
}

impl<F: Float> RateFunction<F> {
    pub fn constant(m: u32, n: u32, c: F) -> Self {
        RateFunction { m, n, kind: RateKind::Constant(c) }
    }

    fn mf(&self) -> F {
        lit(self.m as f64)
    }

    fn nf(&self) -> F {
        lit(self.n as f64)
    }

    /// `r(a)`.
    pub fn eval(&self, a: F) -> Result<F, DaniError> {
        match &self.kind {
            RateKind::Constant(c) => Ok(*c),
            RateKind::FromPsi(psi) => {
                let (m, n) = (self.mf(), self.nf());
                let g = |r: F| psi.log_eval(a - n * r) + a + m * r;
                let mut lo = -a / m;
                let mut hi = a / n;
                if hi < lo {
                    std::mem::swap(&mut lo, &mut hi);
                }
                let mut width = (hi - lo).max(F::one());
                let mut tries = 0;
                while !(g(lo) <= F::zero()) || !(g(hi) >= F::zero()) {
                    tries += 1;
                    if tries > 200 || !g(lo).is_finite() {
                        return Err(DaniError::Bracket { a: a.to_f64().unwrap_or(f64::NAN) });
                    }
                    if !(g(lo) <= F::zero()) {
                        lo = lo - width;
                    }
                    if !(g(hi) >= F::zero()) {
                        hi = hi + width;
                    }
                    width = width * lit(2.0);
                }
                Ok(bisect(lo, hi, g))
            }
        }
    }

    /// `λ(a) = a - n r(a)`.
    pub fn lambda(&self, a: F) -> Result<F, DaniError> {
        Ok(a - self.nf() * self.eval(a)?)
    }

    /// `L(a) = a + m r(a)`.
    pub fn big_l(&self, a: F) -> Result<F, DaniError> {
        Ok(a + self.mf() * self.eval(a)?)
    }

    /// The point where `λ(a_0) = log_s x_0`.
    pub fn a0(&self) -> F {
        match &self.kind {
            RateKind::Constant(c) => self.nf() * *c,
            RateKind::FromPsi(psi) => {
                let (m, n) = (self.mf(), self.nf());
                (m * psi.y0 - n * psi.log_eval(psi.y0)) / (m + n)
            }
        }
    }

    /// `log_s ψ(s^y)` for the function this rate encodes: `-L(a)` at `λ(a) = y`.
    pub fn psi_log_at(&self, y: F) -> F {
        let g = |a: F| self.lambda(a).map(|l| l - y).unwrap_or(F::nan());
        let mut lo = y.min(F::zero()) - F::one();
        let mut hi = y.abs() + F::one();
        let mut width = hi - lo;
        for _ in 0..200 {
            let (gl, gh) = (g(lo), g(hi));
            if gl <= F::zero() && gh >= F::zero() {
                break;
            }
            if !(gl <= F::zero()) {
                lo = lo - width;
            }
            if !(gh >= F::zero()) {
                hi = hi + width;
            }
            width = width * lit(2.0);
        }
        let a = bisect(lo, hi, g);
        -self.big_l(a).unwrap_or(F::nan())
    }

    /// Residual of `log_s ψ(s^{λ(a)}) + L(a)`.
    pub fn residual(&self, a: F) -> Result<F, DaniError> {
        match &self.kind {
            RateKind::FromPsi(psi) => Ok(psi.log_eval(self.lambda(a)?) + self.big_l(a)?),
            RateKind::Constant(_) => Ok(F::zero()),
        }
    }
}

pub fn psi_to_rate<F: Float>(psi: &PsiFunction<F>, m: u32, n: u32) -> RateFunction<F> {
    RateFunction { m, n, kind: RateKind::FromPsi(psi.clone()) }
}

pub fn rate_to_psi<F: Float>(rate: &RateFunction<F>, s: u32) -> PsiFunction<F> {
    let y0 = rate.lambda(rate.a0()).unwrap_or(F::zero());
    PsiFunction { s, family: PsiFamily::FromRate(Arc::new(rate.clone())), y0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_function_has_zero_rate() {
        let psi = PsiFunction::<f64>::inverse(2);
        let rate = psi_to_rate(&psi, 2, 1);
        for a in [0.5, 3.0, 17.25] {
            assert!(rate.eval(a).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn shifted_inverse_has_constant_rate() {
        let psi = PsiFunction::<f64>::power_law(3, 2.0, 1.0);
        let rate = psi_to_rate(&psi, 1, 2);
        for a in [4.0, 9.0, 30.0] {
            assert!((rate.eval(a).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        }
    }

    /// The fixed point r = log_2(4 - r), found by direct iteration.
    #[test]
    fn log_power_example() {
        let mut r = 1.0f64;
        for _ in 0..200 {
            r = (4.0 - r).log2();
        }
        let rate = psi_to_rate(&PsiFunction::<f64>::log_power(2, 2.0), 1, 1);
        let got = rate.eval(4.0).unwrap();
        assert!((got - r).abs() < 1e-10);
        assert!((got - 1.386).abs() < 1e-3);
    }

    #[test]
    fn zero_function_fails_to_bracket() {
        let rate = psi_to_rate(&PsiFunction::<f64>::zero(2), 1, 1);
        assert!(matches!(rate.eval(3.0), Err(DaniError::Bracket { .. })));
    }

    #[test]
    fn table_must_be_monotone() {
        assert!(PsiFunction::<f64>::table(2, vec![(0.0, 0.0), (1.0, 0.5)]).is_err());
        let t = PsiFunction::<f64>::table(2, vec![(0.0, 0.0), (2.0, -2.0), (4.0, -6.0)]).unwrap();
        assert!((t.log_eval(1.0) + 1.0).abs() < 1e-15);
        assert!((t.log_eval(5.0) + 8.0).abs() < 1e-15);
        assert!(t.check_monotone(10.0, 0.5).is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let rate = psi_to_rate(&PsiFunction::<f32>::power_law(2, 1.0, 1.0), 1, 1);
        assert!((rate.eval(6.0).unwrap() - 0.5).abs() < 1e-5);
    }
}
