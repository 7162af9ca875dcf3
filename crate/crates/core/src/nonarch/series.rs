use std::cmp::Ordering;
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{NonarchError, Result};

/// Default truncation order of parsed and constructed series.
pub const DEFAULT_TRUNCATION: i64 = 8;

/// A truncated real Puiseux series `Σ c_e t^e + O(t^trunc)`.
///
/// Terms are strictly ascending in the exponent, all below the truncation
/// order, with nonzero coefficients; there is at least one term.
#[derive(Debug, Clone, PartialEq)]
pub struct PuiseuxSeries {
    terms: Vec<(Rational64, f64)>,
    trunc: Rational64,
}

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

impl PuiseuxSeries {
    /// Sorts, merges equal exponents and drops zero coefficients and terms
    /// at or above `trunc`.
    pub fn new(terms: impl IntoIterator<Item = (Rational64, f64)>, trunc: Rational64) -> Result<Self> {
        let mut v: Vec<(Rational64, f64)> = terms.into_iter().filter(|(e, _)| *e < trunc).collect();
        v.sort_by_key(|a| a.0);
        let mut merged: Vec<(Rational64, f64)> = Vec::with_capacity(v.len());
        for (e, c) in v {
            if !c.is_finite() {
                return Err(NonarchError::NonFinite);
            }
            match merged.last_mut() {
                Some((le, lc)) if *le == e => *lc += c,
                _ => merged.push((e, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        if merged.is_empty() {
            return Err(NonarchError::ZeroBelowTruncation);
        }
        Ok(PuiseuxSeries { terms: merged, trunc })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::monomial(c, Rational64::zero())
    }

    pub fn monomial(c: f64, e: Rational64) -> Result<Self> {
        let trunc = Rational64::from_integer(DEFAULT_TRUNCATION).max(e + Rational64::one());
        Self::new([(e, c)], trunc)
    }

    /// The uniformizer `t`.
    pub fn t() -> Self {
        Self::monomial(1.0, Rational64::one()).expect("t is nonzero")
    }

    pub fn with_truncation(&self, trunc: Rational64) -> Result<Self> {
        Self::new(self.terms.iter().copied(), trunc.min(self.trunc))
    }

    pub fn terms(&self) -> &[(Rational64, f64)] {
        &self.terms
    }

    pub fn truncation(&self) -> Rational64 {
        self.trunc
    }

    /// Least exponent; `v(t) = 1`.
    pub fn valuation(&self) -> Rational64 {
        self.terms[0].0
    }

    pub fn leading_coefficient(&self) -> f64 {
        self.terms[0].1
    }

    pub fn is_positive(&self) -> bool {
        self.leading_coefficient() > 0.0
    }

    pub fn neg(&self) -> Self {
        PuiseuxSeries { terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(), trunc: self.trunc }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let trunc = self.trunc.min(other.trunc);
        Self::new(self.terms.iter().chain(&other.terms).copied(), trunc)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Known up to `min(a.trunc + v(b), b.trunc + v(a))`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let trunc = (self.trunc + other.valuation()).min(other.trunc + self.valuation());
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.push((ea + eb, ca * cb));
            }
        }
        Self::new(out, trunc)
    }

    /// `t^e · self`.
    pub fn shift(&self, e: Rational64) -> Self {
        PuiseuxSeries { terms: self.terms.iter().map(|(x, c)| (x + e, *c)).collect(), trunc: self.trunc + e }
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::new(self.terms.iter().map(|(e, x)| (*e, x * c)), self.trunc)
    }

    /// `(c t^v (1 + u))^α = c^α t^{αv} Σ_k binom(α, k) u^k`, truncated at the
    /// relative precision of `u`. Needs a positive leading coefficient.
    pub fn pow(&self, alpha: Rational64) -> Result<Self> {
        let (v, c) = self.terms[0];
        if c <= 0.0 {
            return Err(NonarchError::NonPositiveLeading);
        }
        let rel_trunc = self.trunc - v;
        let a = alpha.to_f64().expect("finite exponent");
        let lead = c.powf(a);
        if self.terms.len() == 1 {
            return Self::new([(alpha * v, lead)], alpha * v + rel_trunc);
        }
        // u = Σ (c_i / c) t^{e_i - v}, all exponents positive
        let u = PuiseuxSeries::new(self.terms[1..].iter().map(|(e, ci)| (e - v, ci / c)), rel_trunc)?;
        let delta = u.valuation();
        let mut acc: Vec<(Rational64, f64)> = vec![(Rational64::zero(), 1.0)];
        let mut power = u.clone();
        let mut binom = 1.0;
        let mut k = 1i64;
        while delta * k < rel_trunc {
            binom *= (a - (k - 1) as f64) / k as f64;
            if binom == 0.0 {
                break;
            }
            acc.extend(power.terms.iter().map(|(e, x)| (*e, x * binom)));
            k += 1;
            if delta * k >= rel_trunc {
                break;
            }
            power = match power.mul(&u) {
                Ok(p) => p.with_truncation(rel_trunc)?,
                Err(NonarchError::ZeroBelowTruncation) => break,
                Err(e) => return Err(e),
            };
        }
        let base = alpha * v;
        Self::new(acc.into_iter().map(|(e, x)| (e + base, x * lead)), base + rel_trunc)
    }

    /// Sign of `self - other`; `Indeterminate` when the difference vanishes
    /// below the truncation order.
    pub fn compare(&self, other: &Self) -> Result<Ordering> {
        match self.sub(other) {
            Ok(d) => Ok(if d.is_positive() { Ordering::Greater } else { Ordering::Less }),
            Err(NonarchError::ZeroBelowTruncation) => Err(NonarchError::Indeterminate),
            Err(e) => Err(e),
        }
    }

    /// Compares with a real number, read as a constant series.
    pub fn compare_real(&self, x: f64) -> Result<Ordering> {
        if x == 0.0 {
            return Ok(if self.is_positive() { Ordering::Greater } else { Ordering::Less });
        }
        let c = PuiseuxSeries::new([(Rational64::zero(), x)], self.trunc.max(Rational64::one()))?;
        self.compare(&c)
    }

    /// Numerical value of the truncated sum at a real `t > 0`.
    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|(e, c)| c * t.powf(e.to_f64().expect("finite exponent"))).sum()
    }
}

pub(crate) fn fmt_rational(r: &Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("({}/{})", r.numer(), r.denom())
    }
}

impl PuiseuxSeries {
    /// The known terms in the syntax read by [`parse_series`].
    pub fn terms_string(&self) -> String {
        let mut out = String::new();
        for (k, (e, c)) in self.terms.iter().enumerate() {
            let sep = match (k, c.is_sign_negative()) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            out.push_str(&format!("{sep}{}", c.abs()));
            if !e.is_zero() {
                out.push_str(&format!("*t^{}", fmt_rational(e)));
            }
        }
        out
    }
}

impl fmt::Display for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O(t^{})", self.terms_string(), fmt_rational(&self.trunc))
    }
}

/// Parses `c0*t^e0 + c1*t^e1 - ...` with rational exponents written `e`,
/// `p/q`, `(p/q)` or `(-p/q)`. A bare `t` or a bare coefficient is allowed.
pub fn parse_series(text: &str, trunc: Rational64) -> Result<PuiseuxSeries> {
    let err = |msg: String| NonarchError::Parse { line: 0, msg };
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(err("empty series".into()));
    }
    let mut terms = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let mut sign = 1.0;
        if bytes[i] == b'+' || bytes[i] == b'-' {
            if bytes[i] == b'-' {
                sign = -1.0;
            }
            i += 1;
        } else if i > 0 {
            return Err(err(format!("expected '+' or '-' at {i}")));
        }
        // term runs to the next top-level sign
        let start = i;
        let mut depth = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b'+' | b'-' if depth == 0 && i > start && !matches!(bytes[i - 1], b'e' | b'E' | b'^') => break,
                _ => {}
            }
            i += 1;
        }
        let term = &s[start..i];
        let (coef, power) = match term.find('t') {
            None => (term, None),
            Some(p) => {
                let c = term[..p].strip_suffix('*').unwrap_or(&term[..p]);
                (c, Some(&term[p + 1..]))
            }
        };
        let c: f64 = if coef.is_empty() { 1.0 } else { coef.parse().map_err(|_| err(format!("bad coefficient {coef:?}")))? };
        let e = match power {
            None => Rational64::zero(),
            Some("") => Rational64::one(),
            Some(p) => {
                let p = p.strip_prefix('^').ok_or_else(|| err(format!("expected '^' in {term:?}")))?;
                parse_rational(p).ok_or_else(|| err(format!("bad exponent {p:?}")))?
            }
        };
        terms.push((e, sign * c));
    }
    PuiseuxSeries::new(terms, trunc)
}

pub(crate) fn parse_rational(text: &str) -> Option<Rational64> {
    let t = text.trim();
    let t = t.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(t);
    match t.split_once('/') {
        Some((n, d)) => {
            let (n, d): (i64, i64) = (n.trim().parse().ok()?, d.trim().parse().ok()?);
            (d != 0).then(|| q(n, d))
        }
        None => t.parse::<i64>().ok().map(Rational64::from_integer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> PuiseuxSeries {
        parse_series(text, Rational64::from_integer(DEFAULT_TRUNCATION)).unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(s("t + t^2").mul(&s("t")).unwrap().terms(), s("t^2 + t^3").terms());
        assert_eq!(s("1 + t").add(&s("-1")).unwrap().terms(), s("t").terms());
        assert_eq!(s("1 + t").mul(&s("1 - t")).unwrap().terms(), s("1 - t^2").terms());
        assert!(matches!(s("1 + t").sub(&s("1 + t")), Err(NonarchError::ZeroBelowTruncation)));
    }

    #[test]
    fn multiplication_truncation() {
        let a = parse_series("t + t^2", q(4, 1)).unwrap();
        let b = parse_series("t^(1/2)", q(3, 1)).unwrap();
        // min(4 + 1/2, 3 + 1)
        assert_eq!(a.mul(&b).unwrap().truncation(), q(4, 1));
    }

    #[test]
    fn power_examples() {
        assert_eq!(s("t^2").pow(q(1, 2)).unwrap().terms(), &[(q(1, 1), 1.0)]);
        assert_eq!(s("4*t^2").pow(q(1, 2)).unwrap().terms(), &[(q(1, 1), 2.0)]);
        let r = s("1 + t").pow(q(1, 2)).unwrap();
        let expected = [1.0, 0.5, -0.125, 0.0625, -0.0390625];
        for (k, c) in expected.iter().enumerate() {
            assert_eq!(r.terms()[k].0, q(k as i64, 1));
            assert!((r.terms()[k].1 - c).abs() < 1e-15);
        }
        assert_eq!(r.truncation(), q(8, 1));
        assert!(matches!(s("-t").pow(q(1, 2)), Err(NonarchError::NonPositiveLeading)));
        // inverse through pow
        let inv = s("1 + t").pow(q(-1, 1)).unwrap();
        let one = inv.mul(&s("1 + t")).unwrap();
        assert_eq!(one.terms(), &[(q(0, 1), 1.0)]);
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(s("t^2 + 3*t^3").valuation(), q(2, 1));
        assert_eq!(s("5").valuation(), q(0, 1));
        assert_eq!(s("t^(1/2)").valuation(), q(1, 2));
    }

    #[test]
    fn order_examples() {
        assert!(s("t - t^2").is_positive());
        assert_eq!(s("t").compare_real(0.001).unwrap(), Ordering::Less);
        assert_eq!(s("1 + t").compare(&s("1")).unwrap(), Ordering::Greater);
        let a = parse_series("1 + t^9", q(10, 1)).unwrap();
        assert!(matches!(a.compare(&s("1")), Err(NonarchError::Indeterminate)));
    }

    #[test]
    fn display_and_parse() {
        let a = s("2 - 0.5*t^(1/3) + t^2");
        assert_eq!(a.to_string(), "2 - 0.5*t^(1/3) + 1*t^2 + O(t^8)");
        assert_eq!(s("3*t^(-1)").valuation(), q(-1, 1));
        assert_eq!(s("-t^(-1/2) + 1e-3").terms(), &[(q(-1, 2), -1.0), (q(0, 1), 1e-3)]);
        assert!(parse_series("2*x", q(8, 1)).is_err());
        assert!(parse_series("", q(8, 1)).is_err());
    }

    #[test]
    fn evaluation() {
        assert!((s("1 + t").eval(0.1) - 1.1).abs() < 1e-15);
        assert!((s("t^(1/2)").eval(0.01) - 0.1).abs() < 1e-15);
    }
}
