//! Text form of series: `1 + X^-1 + 2*X^-3 (prec 8)`.
//!
//! Terms run from the highest power of `X` down. Coefficients are integer
//! codes of field elements. A missing `(prec N)` suffix means exact.

use super::{Fe, FieldError, FieldSpec, LaurentSeries};

pub fn render(a: &LaurentSeries) -> String {
    let mut terms = Vec::new();
    if let Some(v) = a.order() {
        for (i, c) in a.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let xexp = -(v + i as i64);
            terms.push(match (c.0, xexp) {
                (c, 0) => format!("{c}"),
                (1, 1) => "X".to_string(),
                (c, 1) => format!("{c}*X"),
                (1, k) => format!("X^{k}"),
                (c, k) => format!("{c}*X^{k}"),
            });
        }
    }
    let mut out = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
    if let Some(n) = a.precision() {
        out.push_str(&format!(" (prec {n})"));
    }
    out
}

fn err(msg: impl Into<String>) -> FieldError {
    FieldError::Parse(msg.into())
}

fn parse_term(term: &str, f: &FieldSpec) -> Result<(Fe, i64), FieldError> {
    let term = term.trim();
    let (coef, mono) = match term.split_once('*') {
        Some((c, m)) => (Some(c.trim()), Some(m.trim())),
        None if term.contains('X') => (None, Some(term)),
        None => (Some(term), None),
    };
    let c = match coef {
        None => Fe::ONE,
        Some(c) => {
            let code: u32 = c.parse().map_err(|_| err(format!("bad coefficient {c:?}")))?;
            f.element(code).ok_or_else(|| err(format!("coefficient {code} not below {}", f.size())))?
        }
    };
    let xexp = match mono {
        None => 0,
        Some("X") => 1,
        Some(m) => {
            let k = m.strip_prefix("X^").ok_or_else(|| err(format!("bad monomial {m:?}")))?;
            k.trim().parse().map_err(|_| err(format!("bad exponent {k:?}")))?
        }
    };
    Ok((c, xexp))
}

pub fn parse(text: &str, f: &FieldSpec) -> Result<LaurentSeries, FieldError> {
    let text = text.trim();
    let (body, prec) = match text.find('(') {
        Some(i) => {
            let tail = text[i..].trim();
            let n = tail
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .and_then(|t| t.trim().strip_prefix("prec"))
                .ok_or_else(|| err(format!("bad precision suffix {tail:?}")))?;
            let n: i64 = n.trim().parse().map_err(|_| err(format!("bad precision {n:?}")))?;
            (&text[..i], Some(n))
        }
        None => (text, None),
    };
    // Split on top-level signs; a '-' right after '^' belongs to the exponent.
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    let mut sign_seen = false;
    let mut prev = ' ';
    for ch in body.chars() {
        if (ch == '+' || ch == '-') && prev != '^' {
            if !cur.trim().is_empty() {
                terms.push((neg, std::mem::take(&mut cur)));
            } else if sign_seen || !terms.is_empty() {
                return Err(err("dangling sign"));
            }
            cur.clear();
            sign_seen = true;
            neg = ch == '-';
        } else {
            cur.push(ch);
        }
        if !ch.is_whitespace() {
            prev = ch;
        }
    }
    if cur.trim().is_empty() {
        return Err(err("empty term"));
    }
    terms.push((neg, cur));

    let mut out = LaurentSeries::zero();
    for (neg, t) in terms {
        let (mut c, xexp) = parse_term(&t, f)?;
        if neg {
            c = f.neg(c);
        }
        out = out.add(&LaurentSeries::monomial(c, -xexp), f);
    }
    Ok(match prec {
        Some(n) => out.truncate(n),
        None => out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_the_documented_example() {
        let f = FieldSpec::prime(2).unwrap();
        let a = LaurentSeries::from_coeffs(0, vec![Fe(1); 3], Some(8));
        assert_eq!(render(&a), "1 + X^-1 + X^-2 (prec 8)");
        assert_eq!(parse("1 + X^-1 + X^-2 (prec 8)", &f).unwrap(), a);
    }

    #[test]
    fn round_trips() {
        let f = FieldSpec::prime(3).unwrap();
        for text in ["0", "X", "2*X^3 + X + 1 + 2*X^-4", "X^-2 (prec 5)", "0 (prec -3)"] {
            let a = parse(text, &f).unwrap();
            assert_eq!(render(&a), text);
        }
    }

    #[test]
    fn signs_and_errors() {
        let f = FieldSpec::prime(3).unwrap();
        assert_eq!(render(&parse("X - 1", &f).unwrap()), "X + 2");
        assert_eq!(render(&parse("-X^-1", &f).unwrap()), "2*X^-1");
        assert!(parse("3*X", &f).is_err());
        assert!(parse("X^", &f).is_err());
        assert!(parse("1 +", &f).is_err());
        assert!(parse("1 (prec x)", &f).is_err());
    }
}
