use super::{Fe, FieldError, FieldSpec};

/// A polynomial over `F_s`, coefficients stored low degree first with no
/// trailing zeros. The zero polynomial has an empty coefficient vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Poly {
    coeffs: Vec<Fe>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![Fe::ONE] }
    }

    pub fn constant(c: Fe) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// `c * X^k`.
    pub fn monomial(c: Fe, k: usize) -> Self {
        let mut coeffs = vec![Fe::ZERO; k + 1];
        coeffs[k] = c;
        Self::from_coeffs(coeffs)
    }

    /// The variable `X`.
    pub fn x() -> Self {
        Self::monomial(Fe::ONE, 1)
    }

    pub fn from_coeffs(mut coeffs: Vec<Fe>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    /// Builds a polynomial from integer codes, low degree first.
    pub fn from_codes(f: &FieldSpec, codes: &[u32]) -> Self {
        Self::from_coeffs(codes.iter().map(|&c| f.element(c % f.size()).unwrap()).collect())
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Fe {
        self.coeffs.get(k).copied().unwrap_or(Fe::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with `-1` standing in for the zero polynomial's `-∞`.
    pub fn degree_or_neg(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn leading(&self) -> Fe {
        self.coeffs.last().copied().unwrap_or(Fe::ZERO)
    }

    pub fn add(&self, other: &Poly, f: &FieldSpec) -> Poly {
        let (long, short) = if self.coeffs.len() >= other.coeffs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = long.coeffs.clone();
        f.axpy(&mut out, Fe::ONE, &short.coeffs);
        Poly::from_coeffs(out)
    }

    pub fn neg(&self, f: &FieldSpec) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|&c| f.neg(c)).collect() }
    }

    pub fn sub(&self, other: &Poly, f: &FieldSpec) -> Poly {
        self.add(&other.neg(f), f)
    }

    pub fn scale(&self, c: Fe, f: &FieldSpec) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|&a| f.mul(a, c)).collect())
    }

    /// Multiplication by `X^k`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![Fe::ZERO; k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly { coeffs }
    }

    pub fn mul(&self, other: &Poly, f: &FieldSpec) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Fe::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            f.axpy(&mut out[i..], a, &other.coeffs);
        }
        Poly::from_coeffs(out)
    }

    /// `self += c * X^k * other`, in place.
    pub fn add_scaled_shifted(&mut self, c: Fe, k: usize, other: &Poly, f: &FieldSpec) {
        if c.is_zero() || other.is_zero() {
            return;
        }
        let need = k + other.coeffs.len();
        if self.coeffs.len() < need {
            self.coeffs.resize(need, Fe::ZERO);
        }
        f.axpy(&mut self.coeffs[k..], c, &other.coeffs);
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    /// Quotient and remainder with `deg(rem) < deg(divisor)`.
    pub fn divmod(&self, divisor: &Poly, f: &FieldSpec) -> Result<(Poly, Poly), FieldError> {
        let db = divisor.degree().ok_or(FieldError::DivisionByZero)?;
        let inv_lc = f.inv(divisor.leading()).expect("nonzero leading coefficient");
        let mut rem = self.coeffs.clone();
        if rem.len() <= db {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut quot = vec![Fe::ZERO; rem.len() - db];
        for k in (0..quot.len()).rev() {
            let c = f.mul(rem[k + db], inv_lc);
            if c.is_zero() {
                continue;
            }
            quot[k] = c;
            f.axpy(&mut rem[k..k + db + 1], f.neg(c), &divisor.coeffs);
        }
        rem.truncate(db);
        Ok((Poly::from_coeffs(quot), Poly::from_coeffs(rem)))
    }

    /// Monic associate; zero stays zero.
    pub fn monic(&self, f: &FieldSpec) -> Poly {
        match f.inv(self.leading()) {
            Some(inv) => self.scale(inv, f),
            None => Poly::zero(),
        }
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &Poly, f: &FieldSpec) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.divmod(&b, f).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic(f)
    }

    pub fn eval(&self, x: Fe, f: &FieldSpec) -> Fe {
        self.coeffs.iter().rev().fold(Fe::ZERO, |acc, &c| f.add(f.mul(acc, x), c))
    }
}

/// Monic gcd of a vector of polynomials (the content); zero for the zero vector.
pub fn content(v: &[Poly], f: &FieldSpec) -> Poly {
    v.iter().fold(Poly::zero(), |acc, p| acc.gcd(p, f))
}
