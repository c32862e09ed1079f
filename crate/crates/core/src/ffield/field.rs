use std::fmt;
use std::sync::Arc;

use super::FieldError;

/// Largest supported field size.
pub const MAX_FIELD_SIZE: u32 = 1 << 16;

/// An element of `F_s`, stored as the base-`p` digit encoding of its
/// polynomial representative over `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fe(pub u16);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The finite field `F_s`, `s = p^e`.
///
/// Prime fields use direct modular arithmetic. Extension fields are realized
/// over a fixed primitive modulus (the lexicographically first monic
/// irreducible polynomial of degree `e` for which `X` generates the
/// multiplicative group) with log/antilog tables.
#[derive(Clone)]
pub struct FieldSpec {
    p: u32,
    e: u32,
    s: u32,
    /// Monic modulus, coefficients low to high; `[0, 1]` (the identity `X`) for prime fields.
    modulus: Vec<u32>,
    /// `exp[i] = g^i` for `i < 2(s-1)`.
    exp: Arc<[u16]>,
    /// `log[a]` for `a != 0`.
    log: Arc<[u32]>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("e", &self.e)
            .field("s", &self.s)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e
    }
}

impl Eq for FieldSpec {}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// Dense polynomial helpers over F_p used only while building the tables.
fn trim(v: &mut Vec<u32>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_rem_p(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    let inv_lc = mod_inverse(b[db], p);
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let c = r[r.len() - 1] * inv_lc % p;
        for (i, &bi) in b.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p * p - c * bi % p) % p;
        }
        trim(&mut r);
    }
    r
}

fn mod_inverse(a: u32, p: u32) -> u32 {
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        exp >>= 1;
    }
    result as u32
}

fn decode_poly(mut code: u32, p: u32, len: usize) -> Vec<u32> {
    let mut out = vec![0; len];
    for c in out.iter_mut() {
        *c = code % p;
        code /= p;
    }
    out
}

fn encode_poly(c: &[u32], p: u32) -> u32 {
    c.iter().rev().fold(0, |acc, &d| acc * p + d)
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        for code in 0..p.pow(d as u32) {
            let mut g = decode_poly(code, p, d);
            g.push(1);
            if poly_rem_p(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

impl FieldSpec {
    /// Builds `F_{p^e}`; rejects non-prime `p`, `e = 0` and `p^e > 2^16`.
    pub fn new(p: u32, e: u32) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if e == 0 {
            return Err(FieldError::BadDegree(e));
        }
        let s = (p as u64).checked_pow(e).filter(|&s| s <= MAX_FIELD_SIZE as u64);
        let s = s.ok_or(FieldError::TooLarge { p, e })? as u32;

        if e == 1 {
            let g = (1..p.max(2))
                .find(|&g| p == 2 || multiplicative_order_mod(g, p) == p - 1)
                .unwrap_or(1);
            let mut exp = Vec::with_capacity(2 * (s as usize - 1).max(1));
            let mut log = vec![0u32; s as usize];
            let mut x = 1u32;
            for i in 0..(p - 1) {
                exp.push(x as u16);
                log[x as usize] = i;
                x = x * g % p;
            }
            let head = exp.clone();
            exp.extend(head);
            return Ok(FieldSpec { p, e, s, modulus: vec![0, 1], exp: exp.into(), log: log.into() });
        }

        let mut chosen = None;
        for code in 0..p.pow(e) {
            let mut f = decode_poly(code, p, e as usize);
            f.push(1);
            if f[0] == 0 || !is_irreducible(&f, p) {
                continue;
            }
            if let Some(tables) = power_tables(&f, p, s) {
                chosen = Some((f, tables));
                break;
            }
        }
        let (modulus, (exp, log)) = chosen.ok_or(FieldError::NoModulus { p, e })?;
        Ok(FieldSpec { p, e, s, modulus, exp: exp.into(), log: log.into() })
    }

    /// `F_p`.
    pub fn prime(p: u32) -> Result<Self, FieldError> {
        Self::new(p, 1)
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn e(&self) -> u32 {
        self.e
    }

    /// Field size `s = p^e`.
    #[inline]
    pub fn size(&self) -> u32 {
        self.s
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn elements(&self) -> impl DoubleEndedIterator<Item = Fe> {
        (0..self.s).map(|a| Fe(a as u16))
    }

    pub fn nonzero_elements(&self) -> impl DoubleEndedIterator<Item = Fe> {
        (1..self.s).map(|a| Fe(a as u16))
    }

    /// Element from its integer code; `None` if out of range.
    pub fn element(&self, code: u32) -> Option<Fe> {
        (code < self.s).then_some(Fe(code as u16))
    }

    /// Image of an integer under `Z -> F_p -> F_s`.
    pub fn from_int(&self, n: i64) -> Fe {
        Fe(n.rem_euclid(self.p as i64) as u16)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if self.e == 1 {
            let x = a.0 as u32 + b.0 as u32;
            Fe(if x >= self.p { x - self.p } else { x } as u16)
        } else if self.p == 2 {
            Fe(a.0 ^ b.0)
        } else {
            let (mut x, mut y) = (a.0 as u32, b.0 as u32);
            let mut out = 0;
            let mut place = 1;
            while x > 0 || y > 0 {
                out += ((x % self.p + y % self.p) % self.p) * place;
                x /= self.p;
                y /= self.p;
                place *= self.p;
            }
            Fe(out as u16)
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        if self.e == 1 {
            Fe(if a.0 == 0 { 0 } else { self.p as u16 - a.0 })
        } else if self.p == 2 {
            a
        } else {
            let mut x = a.0 as u32;
            let mut out = 0;
            let mut place = 1;
            while x > 0 {
                out += ((self.p - x % self.p) % self.p) * place;
                x /= self.p;
                place *= self.p;
            }
            Fe(out as u16)
        }
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        if self.e == 1 {
            return Fe((a.0 as u32 * b.0 as u32 % self.p) as u16);
        }
        Fe(self.exp[(self.log[a.0 as usize] + self.log[b.0 as usize]) as usize])
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: Fe) -> Option<Fe> {
        if a.0 == 0 {
            return None;
        }
        let order = self.s - 1;
        let l = self.log[a.0 as usize];
        Some(Fe(self.exp[((order - l) % order) as usize]))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Option<Fe> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    pub fn pow(&self, a: Fe, mut k: u64) -> Fe {
        let mut acc = Fe::ONE;
        let mut base = a;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    /// `dst[i] += c * src[i]` over the common prefix.
    #[inline]
    pub fn axpy(&self, dst: &mut [Fe], c: Fe, src: &[Fe]) {
        if c.is_zero() {
            return;
        }
        if self.p == 2 && self.e == 1 {
            for (d, s) in dst.iter_mut().zip(src) {
                d.0 ^= s.0;
            }
        } else if self.e == 1 {
            let p = self.p;
            let c = c.0 as u32;
            for (d, s) in dst.iter_mut().zip(src) {
                d.0 = ((d.0 as u32 + c * s.0 as u32) % p) as u16;
            }
        } else {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = self.add(*d, self.mul(c, s));
            }
        }
    }
}

fn multiplicative_order_mod(g: u32, p: u32) -> u32 {
    let mut x = g % p;
    let mut k = 1;
    while x != 1 {
        x = x * g % p;
        k += 1;
    }
    k
}

/// Power tables of `X` modulo `f`, or `None` if `X` is not primitive.
fn power_tables(f: &[u32], p: u32, s: u32) -> Option<(Vec<u16>, Vec<u32>)> {
    let e = f.len() - 1;
    let order = s - 1;
    let mut exp = Vec::with_capacity(2 * order as usize);
    let mut log = vec![u32::MAX; s as usize];
    let mut cur = vec![0u32; e];
    cur[0] = 1;
    for i in 0..order {
        let code = encode_poly(&cur, p);
        if log[code as usize] != u32::MAX {
            return None;
        }
        log[code as usize] = i;
        exp.push(code as u16);
        // cur *= X mod f
        let top = cur[e - 1];
        for k in (1..e).rev() {
            cur[k] = cur[k - 1];
        }
        cur[0] = 0;
        for k in 0..e {
            cur[k] = (cur[k] + p * p - top * f[k] % p) % p;
        }
    }
    let head = exp.clone();
    exp.extend(head);
    Some((exp, log))
}
