//! Truncated Puiseux series, their valuation and the patchworking families
//! obtained by substituting a real `t`.

mod series;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::amoeba::sampler::Halton;
use crate::tropical::{NewtonData, TropicalError};

pub use series::{parse_series, PuiseuxSeries, DEFAULT_TRUNCATION};

#[derive(Debug, Error)]
pub enum NonarchError {
    #[error("result is zero below the truncation order")]
    ZeroBelowTruncation,
    #[error("power of a series needs a positive leading coefficient")]
    NonPositiveLeading,
    #[error("difference vanishes below the truncation order")]
    Indeterminate,
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("t must lie in (0, 1), got {0}")]
    InvalidT(f64),
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Tropical(#[from] TropicalError),
}

pub type Result<T> = std::result::Result<T, NonarchError>;

/// A point with nonzero series coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuedPoint(pub Vec<PuiseuxSeries>);

impl ValuedPoint {
    pub fn is_positive(&self) -> bool {
        self.0.iter().all(PuiseuxSeries::is_positive)
    }
}

/// Component-wise `-v`.
pub fn log_map(p: &ValuedPoint) -> Vec<Rational64> {
    p.0.iter().map(|x| -x.valuation()).collect()
}

/// Laurent polynomial with series coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PuiseuxPolynomial {
    pub dim: usize,
    pub terms: BTreeMap<Vec<i64>, PuiseuxSeries>,
}

/// Laurent polynomial with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPolynomial {
    pub dim: usize,
    pub terms: Vec<(Vec<i64>, f64)>,
}

fn pairing(lambda: &[Rational64], omega: &[i64]) -> Rational64 {
    lambda.iter().zip(omega).map(|(l, &w)| l * w).sum()
}

impl PuiseuxPolynomial {
    pub fn new(dim: usize, terms: impl IntoIterator<Item = (Vec<i64>, PuiseuxSeries)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (w, c) in terms {
            if w.len() != dim {
                return Err(NonarchError::DimensionMismatch { expected: dim, got: w.len() });
            }
            let c = match map.remove(&w) {
                Some(prev) => PuiseuxSeries::add(&prev, &c)?,
                None => c,
            };
            map.insert(w, c);
        }
        Ok(PuiseuxPolynomial { dim, terms: map })
    }

    /// Each coefficient summed at the real value `t`.
    pub fn instantiate(&self, t: f64) -> Result<RealPolynomial> {
        if !(t > 0.0 && t < 1.0) {
            return Err(NonarchError::InvalidT(t));
        }
        Ok(RealPolynomial { dim: self.dim, terms: self.terms.iter().map(|(w, c)| (w.clone(), c.eval(t))).collect() })
    }

    /// Substitutes `x_i -> t^{-λ_i} x_i`.
    pub fn twist(&self, lambda: &[Rational64]) -> Result<Self> {
        self.check(lambda.len())?;
        let terms = self.terms.iter().map(|(w, c)| (w.clone(), c.shift(-pairing(lambda, w)))).collect();
        Ok(PuiseuxPolynomial { dim: self.dim, terms })
    }

    /// Least twisted valuation `μ = min_ω v(c_ω) - ⟨λ, ω⟩`.
    pub fn twisted_minimum(&self, lambda: &[Rational64]) -> Result<Rational64> {
        self.check(lambda.len())?;
        Ok(self.terms.iter().map(|(w, c)| c.valuation() - pairing(lambda, w)).min().unwrap_or_else(Rational64::zero))
    }

    /// Leading coefficients of the terms attaining `μ`.
    pub fn initial_form(&self, lambda: &[Rational64]) -> Result<RealPolynomial> {
        let mu = self.twisted_minimum(lambda)?;
        let terms = self
            .terms
            .iter()
            .filter(|(w, c)| c.valuation() - pairing(lambda, w) == mu)
            .map(|(w, c)| (w.clone(), c.leading_coefficient()))
            .collect();
        Ok(RealPolynomial { dim: self.dim, terms })
    }

    /// Tropical polynomial `max_ω ⟨ω, x⟩ - v(c_ω)`.
    pub fn newton_data(&self) -> Result<NewtonData> {
        let (support, weights) =
            self.terms.iter().map(|(w, c)| (w.clone(), -c.valuation().to_f64().expect("finite valuation"))).unzip();
        Ok(NewtonData::new(support, weights)?)
    }

    /// Value at a point with series coordinates.
    pub fn eval(&self, p: &ValuedPoint) -> Result<PuiseuxSeries> {
        self.check(p.0.len())?;
        let mut acc: Option<PuiseuxSeries> = None;
        for (w, c) in &self.terms {
            let mut m = c.clone();
            for (x, &k) in p.0.iter().zip(w) {
                m = m.mul(&powi(x, k)?)?;
            }
            acc = Some(match acc {
                None => m,
                Some(a) => a.add(&m)?,
            });
        }
        acc.ok_or(NonarchError::ZeroBelowTruncation)
    }

    fn check(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(NonarchError::DimensionMismatch { expected: self.dim, got });
        }
        Ok(())
    }

    /// Reads one monomial per line:
    /// `omega = (i1,…,in); coeff = c0*t^e0 + …` with an optional
    /// `; trunc = q` field. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut terms: Vec<(Vec<i64>, PuiseuxSeries)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let perr = |msg: String| NonarchError::Parse { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut omega = None;
            let mut coeff = None;
            let mut trunc = Rational64::from_integer(DEFAULT_TRUNCATION);
            for field in line.split(';').map(str::trim).filter(|f| !f.is_empty()) {
                let (key, value) = field.split_once('=').ok_or_else(|| perr(format!("expected key = value, got {field:?}")))?;
                match key.trim() {
                    "omega" => {
                        let v = value.trim();
                        let inner = v.strip_prefix('(').and_then(|v| v.strip_suffix(')')).ok_or_else(|| perr(format!("bad exponent vector {v:?}")))?;
                        let w: std::result::Result<Vec<i64>, _> = inner.split(',').map(|s| s.trim().parse::<i64>()).collect();
                        omega = Some(w.map_err(|_| perr(format!("bad exponent vector {v:?}")))?);
                    }
                    "coeff" => coeff = Some(value.to_string()),
                    "trunc" => trunc = series::parse_rational(value).ok_or_else(|| perr(format!("bad truncation {value:?}")))?,
                    other => return Err(perr(format!("unknown field {other:?}"))),
                }
            }
            let omega = omega.ok_or_else(|| perr("missing omega".into()))?;
            let coeff = coeff.ok_or_else(|| perr("missing coeff".into()))?;
            let c = parse_series(&coeff, trunc).map_err(|e| match e {
                NonarchError::Parse { msg, .. } => perr(msg),
                other => perr(other.to_string()),
            })?;
            match dim {
                None => dim = Some(omega.len()),
                Some(d) if d != omega.len() => return Err(perr(format!("expected {d} exponents, got {}", omega.len()))),
                _ => {}
            }
            if terms.iter().any(|(w, _)| *w == omega) {
                return Err(perr(format!("duplicate exponent vector {omega:?}")));
            }
            terms.push((omega, c));
        }
        let dim = dim.ok_or(NonarchError::Parse { line: 0, msg: "no monomials".into() })?;
        Self::new(dim, terms)
    }
}

impl fmt::Display for PuiseuxPolynomial {
    /// Writes the format read by [`PuiseuxPolynomial::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (w, c) in &self.terms {
            let omega: Vec<String> = w.iter().map(i64::to_string).collect();
            writeln!(f, "omega = ({}); coeff = {}; trunc = {}", omega.join(","), c.terms_string(), series::fmt_rational(&c.truncation()))?;
        }
        Ok(())
    }
}

fn powi(x: &PuiseuxSeries, k: i64) -> Result<PuiseuxSeries> {
    if k < 0 {
        let inv = if x.is_positive() { x.pow(Rational64::from_integer(-1))? } else { x.neg().pow(Rational64::from_integer(-1))?.neg() };
        return powi(&inv, -k);
    }
    let mut out = PuiseuxSeries::constant(1.0)?.with_truncation(x.truncation() - x.valuation())?;
    for _ in 0..k {
        out = out.mul(x)?;
    }
    Ok(out)
}

impl RealPolynomial {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(w, c)| c * w.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()).sum()
    }

    /// True when all coefficients share a sign, so there is no zero in the
    /// open positive orthant. Monomials are included.
    pub fn one_signed(&self) -> bool {
        let nz = self.terms.iter().filter(|(_, c)| *c != 0.0);
        let (pos, neg): (Vec<_>, Vec<_>) = nz.partition(|(_, c)| *c > 0.0);
        pos.is_empty() || neg.is_empty()
    }

    /// Positive roots of a univariate polynomial, located by sign changes
    /// on a log-spaced grid between the Cauchy bounds and refined by
    /// bisection. Roots of even multiplicity are not detected.
    pub fn positive_roots(&self) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(NonarchError::DimensionMismatch { expected: 1, got: self.dim });
        }
        let nz: Vec<(i64, f64)> = self.terms.iter().filter(|(_, c)| *c != 0.0).map(|(w, c)| (w[0], *c)).collect();
        if nz.len() < 2 {
            return Ok(Vec::new());
        }
        let (lo_deg, lo_c) = *nz.iter().min_by_key(|(k, _)| *k).unwrap();
        let (hi_deg, hi_c) = *nz.iter().max_by_key(|(k, _)| *k).unwrap();
        let upper = 1.0 + nz.iter().filter(|(k, _)| *k != hi_deg).map(|(_, c)| (c / hi_c).abs()).fold(0.0, f64::max);
        let lower = 1.0 / (1.0 + nz.iter().filter(|(k, _)| *k != lo_deg).map(|(_, c)| (c / lo_c).abs()).fold(0.0, f64::max));
        // divide out x^lo_deg so the value stays finite near 0
        let g = |u: f64| nz.iter().map(|(k, c)| c * ((k - lo_deg) as f64 * u).exp()).sum::<f64>();
        let (a, b) = (lower.ln() - 1e-9, upper.ln() + 1e-9);
        const STEPS: usize = 4000;
        let mut roots = Vec::new();
        let mut u0 = a;
        let mut g0 = g(u0);
        for i in 1..=STEPS {
            let u1 = a + (b - a) * i as f64 / STEPS as f64;
            let g1 = g(u1);
            if g0 == 0.0 {
                roots.push(u0.exp());
            } else if g1 != 0.0 && (g0 < 0.0) != (g1 < 0.0) {
                roots.push(bisect(&g, u0, u1, g0).exp());
            }
            u0 = u1;
            g0 = g1;
        }
        if g0 == 0.0 {
            roots.push(u0.exp());
        }
        Ok(roots)
    }
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

impl fmt::Display for RealPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (w, c)) in self.terms.iter().enumerate() {
            let sign = if c.is_sign_negative() { "-" } else { "+" };
            match k {
                0 if sign == "-" => write!(f, "-")?,
                0 => {}
                _ => write!(f, " {sign} ")?,
            }
            let vars: Vec<String> = w
                .iter()
                .enumerate()
                .filter(|(_, &e)| e != 0)
                .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
                .collect();
            match (vars.is_empty(), c.abs() == 1.0) {
                (true, _) => write!(f, "{}", c.abs())?,
                (false, true) => write!(f, "{}", vars.join("*"))?,
                (false, false) => write!(f, "{}*{}", c.abs(), vars.join("*"))?,
            }
        }
        Ok(())
    }
}

/// Answer of the initial-form test for `λ ∈ A(V)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaMembership {
    No,
    CandidateYes,
    /// A positive zero of the initial form.
    Yes(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct MembershipConfig {
    pub samples: usize,
    /// Box in `log10` coordinates searched for a sign change.
    pub log_box: (f64, f64),
    pub seed: u64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        MembershipConfig { samples: 4096, log_box: (-4.0, 4.0), seed: 0 }
    }
}

pub fn lambda_membership_hypersurface(f: &PuiseuxPolynomial, lambda: &[Rational64], cfg: &MembershipConfig) -> Result<LambdaMembership> {
    let g = f.initial_form(lambda)?;
    if g.terms.len() < 2 || g.one_signed() {
        return Ok(LambdaMembership::No);
    }
    let halton = Halton::new(g.dim, cfg.log_box.0, cfg.log_box.1, cfg.seed, 0);
    let value = |u: &[f64]| {
        let x: Vec<f64> = u.iter().map(|v| 10f64.powf(*v)).collect();
        g.eval(&x)
    };
    let (mut pos, mut neg) = (None, None);
    for i in 0..cfg.samples as u64 {
        let u = halton.point(i);
        let v = value(&u);
        if v == 0.0 {
            return Ok(LambdaMembership::Yes(u.iter().map(|v| 10f64.powf(*v)).collect()));
        }
        let slot = if v > 0.0 { &mut pos } else { &mut neg };
        if slot.is_none() {
            *slot = Some(u);
        }
        if let (Some(p), Some(n)) = (&pos, &neg) {
            let along = |s: f64| {
                let u: Vec<f64> = p.iter().zip(n).map(|(a, b)| a + s * (b - a)).collect();
                value(&u)
            };
            let s = bisect(&along, 0.0, 1.0, along(0.0));
            let x = p.iter().zip(n).map(|(a, b)| 10f64.powf(a + s * (b - a))).collect();
            return Ok(LambdaMembership::Yes(x));
        }
    }
    Ok(LambdaMembership::CandidateYes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    fn s(text: &str) -> PuiseuxSeries {
        parse_series(text, r(DEFAULT_TRUNCATION)).unwrap()
    }

    fn quadratic() -> PuiseuxPolynomial {
        PuiseuxPolynomial::parse("omega = (2); coeff = 1\nomega = (1); coeff = 1\nomega = (0); coeff = -t\n").unwrap()
    }

    #[test]
    fn log_map_examples() {
        assert_eq!(log_map(&ValuedPoint(vec![s("t"), s("1")])), vec![r(-1), r(0)]);
        assert_eq!(log_map(&ValuedPoint(vec![s("t^(1/2)"), s("t^2")])), vec![Rational64::new(-1, 2), r(-2)]);
        assert_eq!(log_map(&ValuedPoint(vec![s("5"), s("3*t^(-1)")])), vec![r(0), r(1)]);
    }

    #[test]
    fn instantiate_examples() {
        let f = quadratic().instantiate(0.01).unwrap();
        assert_eq!(f.to_string(), "-0.01 + x1 + x1^2");
        let g = PuiseuxPolynomial::new(1, [(vec![0], s("1 + t")), (vec![1], s("t^(1/2)"))]).unwrap();
        let gi = g.instantiate(0.01).unwrap();
        assert!((gi.terms[0].1 - 1.01).abs() < 1e-15 && (gi.terms[1].1 - 0.1).abs() < 1e-15);
        assert!((g.instantiate(0.1).unwrap().terms[0].1 - 1.1).abs() < 1e-15);
        assert!(quadratic().instantiate(1.0).is_err());
    }

    #[test]
    fn twist_examples() {
        let f = PuiseuxPolynomial::parse("omega = (1); coeff = 1\nomega = (0); coeff = -t").unwrap();
        let g = f.twist(&[r(-1)]).unwrap();
        assert_eq!(g.terms[&vec![1]].valuation(), r(1));
        assert_eq!(g.terms[&vec![0]].valuation(), r(1));
        assert_eq!(f.twist(&[r(0)]).unwrap(), f);
        let m = PuiseuxPolynomial::new(2, [(vec![2, -1], s("3*t"))]).unwrap();
        let mt = m.twist(&[Rational64::new(1, 2), r(2)]).unwrap();
        // t^{-(1 - 2)} · 3t = 3t^2
        assert_eq!(mt.terms[&vec![2, -1]].terms(), &[(r(2), 3.0)]);
    }

    #[test]
    fn initial_form_examples() {
        let f = quadratic();
        assert_eq!(f.initial_form(&[r(-1)]).unwrap().to_string(), "-1 + x1");
        assert_eq!(f.initial_form(&[r(-3)]).unwrap().to_string(), "-1");
        assert_eq!(f.initial_form(&[r(3)]).unwrap().to_string(), "x1^2");
        let g = PuiseuxPolynomial::parse("omega = (1,0); coeff = 2 + t\nomega = (0,1); coeff = -3\nomega = (0,0); coeff = 1").unwrap();
        assert_eq!(g.initial_form(&[r(0), r(0)]).unwrap().to_string(), "1 - 3*x2 + 2*x1");
    }

    #[test]
    fn membership_examples() {
        let cfg = MembershipConfig::default();
        match lambda_membership_hypersurface(&quadratic(), &[r(-1)], &cfg).unwrap() {
            LambdaMembership::Yes(x) => assert!((x[0] - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        assert_eq!(lambda_membership_hypersurface(&quadratic(), &[r(0)], &cfg).unwrap(), LambdaMembership::No);
        let m = PuiseuxPolynomial::parse("omega = (3, 1); coeff = -2*t").unwrap();
        for l in [[r(0), r(0)], [r(5), r(-2)]] {
            assert_eq!(lambda_membership_hypersurface(&m, &l, &cfg).unwrap(), LambdaMembership::No);
        }
    }

    #[test]
    fn membership_in_two_variables() {
        // x + y - 1 - t: the origin lies on the tropical line
        let f = PuiseuxPolynomial::parse("omega = (1,0); coeff = 1\nomega = (0,1); coeff = 1\nomega = (0,0); coeff = -1 - t").unwrap();
        let LambdaMembership::Yes(x) = lambda_membership_hypersurface(&f, &[r(0), r(0)], &MembershipConfig::default()).unwrap() else {
            panic!()
        };
        assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
        // (1, 1) is off the line: initial form x + y
        assert_eq!(lambda_membership_hypersurface(&f, &[r(1), r(1)], &MembershipConfig::default()).unwrap(), LambdaMembership::No);
    }

    #[test]
    fn puiseux_root_of_the_quadratic() {
        // x(t) = ((1 + 4t)^{1/2} - 1) / 2
        let x = s("1 + 4*t").pow(Rational64::new(1, 2)).unwrap().sub(&s("1")).unwrap().scale(0.5).unwrap();
        assert_eq!(x.terms()[0], (r(1), 1.0));
        assert_eq!(x.terms()[1], (r(2), -1.0));
        assert_eq!(log_map(&ValuedPoint(vec![x.clone()])), vec![r(-1)]);
        assert!(matches!(quadratic().eval(&ValuedPoint(vec![x])), Err(NonarchError::ZeroBelowTruncation)));
    }

    #[test]
    fn positive_roots_and_patchworking() {
        let t = 1e-6;
        let roots = quadratic().instantiate(t).unwrap().positive_roots().unwrap();
        assert_eq!(roots.len(), 1);
        let exact = 2.0 * t / (1.0 + (1.0 + 4.0 * t).sqrt());
        assert!((roots[0] - exact).abs() < 1e-12 * exact.max(1e-300) + 1e-18);
        let log = roots[0].ln() / (1.0 / t).ln();
        assert!((log + 1.0).abs() < 0.02);
        let p = RealPolynomial { dim: 1, terms: vec![(vec![0], 6.0), (vec![1], -5.0), (vec![2], 1.0)] };
        let r = p.positive_roots().unwrap();
        assert!(r.len() == 2 && (r[0] - 2.0).abs() < 1e-12 && (r[1] - 3.0).abs() < 1e-12);
        let none = RealPolynomial { dim: 1, terms: vec![(vec![0], 1.0), (vec![2], 1.0)] };
        assert!(none.positive_roots().unwrap().is_empty());
    }

    #[test]
    fn twisted_instantiation_converges_to_the_initial_form() {
        let f = PuiseuxPolynomial::parse("omega = (2,0); coeff = t^(1/2) + t\nomega = (0,1); coeff = -2 + t^2\nomega = (1,1); coeff = 3*t^(3/2)\nomega = (0,0); coeff = 5*t").unwrap();
        let lambda = [Rational64::new(1, 4), Rational64::new(-1, 2)];
        let mu = f.twisted_minimum(&lambda).unwrap().to_f64().unwrap();
        let init = f.initial_form(&lambda).unwrap();
        let twisted = f.twist(&lambda).unwrap();
        for k in 3..=6 {
            let t = 10f64.powi(-k);
            let inst = twisted.instantiate(t).unwrap();
            for (w, c) in &inst.terms {
                let limit = init.terms.iter().find(|(v, _)| v == w).map_or(0.0, |(_, c)| *c);
                let scaled = c * t.powf(-mu);
                assert!((scaled - limit).abs() < 10.0 * t.powf(0.25), "{w:?} at t={t}: {scaled} vs {limit}");
            }
        }
    }

    #[test]
    fn newton_data_weights() {
        let nd = quadratic().newton_data().unwrap();
        assert_eq!(nd.weights, vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn file_round_trip() {
        let text = "# patchwork\nomega = (1, -2); coeff = 2*t^(1/3) - t^2 ; trunc = 5\n\nomega = (0,0); coeff = -1\n";
        let f = PuiseuxPolynomial::parse(text).unwrap();
        assert_eq!(f.terms[&vec![1, -2]].truncation(), r(5));
        assert_eq!(PuiseuxPolynomial::parse(&f.to_string()).unwrap(), f);
        for bad in ["omega = (1); coeff = 1\nomega = (1,2); coeff = 1", "omega = 1; coeff = 1", "coeff = 1", "omega = (1); coeff = 1\nomega = (1); coeff = 2", "", "omega = (1); coef = 1"] {
            assert!(PuiseuxPolynomial::parse(bad).is_err(), "{bad:?}");
        }
        let Err(NonarchError::Parse { line, .. }) = PuiseuxPolynomial::parse("omega = (1); coeff = 1\nomega = (2); coeff = x") else { panic!() };
        assert_eq!(line, 2);
    }
}
