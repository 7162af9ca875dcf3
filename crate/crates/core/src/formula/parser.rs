//! Recursive-descent parser for the term/formula grammar.
//!
//! ```text
//! formula  := disj
//! disj     := conj ('|' conj)*
//! conj     := unary ('&' unary)*
//! unary    := '!' unary | ('E' | 'A') var '.' formula | '(' formula ')' | atom
//! atom     := term ('=' | '<=' | '>=') term
//! term     := product ('+' product)*
//! product  := power ('*' power)*
//! power    := primary ('^' exponent)?
//! primary  := var | ident | number | '(' term ')'
//! exponent := '-'? number | '(' '-'? number ')'
//! number   := decimal ('/' decimal)?
//! ```

use super::{Formula, FormulaError, Relation, Result, Term};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(usize),
    Ident(String),
    Num(f64),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
    Eq,
    Le,
    Ge,
    Amp,
    Bar,
    Bang,
    Dot,
}

fn syntax(pos: usize, msg: impl Into<String>) -> FormulaError {
    FormulaError::Syntax { pos, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '=' => Some(Tok::Eq),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Bar),
            '!' => Some(Tok::Bang),
            '.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => Some(Tok::Dot),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, start));
            i += 1;
            continue;
        }
        if c == '<' || c == '>' {
            if bytes.get(i + 1) == Some(&b'=') {
                out.push((if c == '<' { Tok::Le } else { Tok::Ge }, start));
                i += 2;
                continue;
            }
            return Err(syntax(start, format!("expected `{c}=`; strict relations are not in the language")));
        }
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| syntax(start, format!("bad number `{lit}`")))?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let tok = match word.strip_prefix('x') {
                Some(digits) if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) => {
                    let k: usize = digits.parse().map_err(|_| syntax(start, "variable index too large"))?;
                    if k == 0 {
                        return Err(syntax(start, "variables are numbered from x1"));
                    }
                    Tok::Var(k - 1)
                }
                _ => Tok::Ident(word.to_string()),
            };
            out.push((tok, start));
            continue;
        }
        return Err(syntax(start, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Self { toks: lex(text)?, pos: 0, end: text.len() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn finish(&self) -> Result<()> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(syntax(self.offset(), "unexpected trailing input"))
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let first = self.conj()?;
        if self.peek() != Some(&Tok::Bar) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(&Tok::Bar) {
            items.push(self.conj()?);
        }
        Ok(Formula::Or(items))
    }

    fn conj(&mut self) -> Result<Formula> {
        let first = self.unary()?;
        if self.peek() != Some(&Tok::Amp) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(&Tok::Amp) {
            items.push(self.unary()?);
        }
        Ok(Formula::And(items))
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.eat(&Tok::Bang) {
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        if let (Some(Tok::Ident(q)), Some(Tok::Var(v))) = (self.peek(), self.peek_at(1)) {
            if q == "E" || q == "A" {
                let exists = q == "E";
                let v = *v;
                self.pos += 2;
                self.expect(&Tok::Dot, "`.` after quantified variable")?;
                let body = Box::new(self.formula()?);
                return Ok(if exists { Formula::Exists(v, body) } else { Formula::Forall(v, body) });
            }
        }
        if self.peek() == Some(&Tok::LParen) {
            // `(` opens either a term or a sub-formula; try the atom first.
            let save = self.pos;
            match self.atom() {
                Ok(f) => return Ok(f),
                Err(atom_err) => {
                    let atom_reach = self.pos;
                    self.pos = save + 1;
                    let inner = self.formula().and_then(|f| {
                        self.expect(&Tok::RParen, "`)`")?;
                        Ok(f)
                    });
                    return match inner {
                        Ok(f) => Ok(f),
                        Err(_) if atom_reach > self.pos => Err(atom_err),
                        Err(e) => Err(e),
                    };
                }
            }
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula> {
        let lhs = self.term()?;
        let rel_pos = self.offset();
        let (rel, swap) = match self.peek() {
            Some(Tok::Eq) => (Relation::Eq, false),
            Some(Tok::Le) => (Relation::Leq, false),
            Some(Tok::Ge) => (Relation::Leq, true),
            _ => return Err(syntax(rel_pos, "expected `=`, `<=` or `>=`")),
        };
        self.pos += 1;
        let rhs = self.term()?;
        Ok(if swap {
            Formula::Atom { rel, lhs: rhs, rhs: lhs }
        } else {
            Formula::Atom { rel, lhs, rhs }
        })
    }

    fn term(&mut self) -> Result<Term> {
        let mut acc = self.product()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = acc.add(self.product()?);
            } else if self.peek() == Some(&Tok::Minus) {
                return Err(syntax(self.offset(), "subtraction is not in the language; use normalize_polynomial"));
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Term> {
        let mut acc = self.power()?;
        while self.eat(&Tok::Star) {
            acc = acc.mul(self.power()?);
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Term> {
        let base = self.primary()?;
        if !self.eat(&Tok::Caret) {
            return Ok(base);
        }
        let paren = self.eat(&Tok::LParen);
        let negative = self.eat(&Tok::Minus);
        let e = self.number()?;
        if paren {
            self.expect(&Tok::RParen, "`)` closing the exponent")?;
        }
        Ok(base.pow(if negative { -e } else { e }))
    }

    fn number(&mut self) -> Result<f64> {
        let pos = self.offset();
        let Some(Tok::Num(p)) = self.peek().cloned() else {
            return Err(syntax(pos, "expected a number"));
        };
        self.pos += 1;
        if self.eat(&Tok::Slash) {
            let qpos = self.offset();
            let Some(Tok::Num(q)) = self.peek().cloned() else {
                return Err(syntax(qpos, "expected a denominator"));
            };
            self.pos += 1;
            if q == 0.0 {
                return Err(syntax(qpos, "zero denominator"));
            }
            return Ok(p / q);
        }
        Ok(p)
    }

    fn primary(&mut self) -> Result<Term> {
        let pos = self.offset();
        match self.peek().cloned() {
            Some(Tok::Var(i)) => {
                self.pos += 1;
                Ok(Term::Var(i))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(Term::Param(name))
            }
            Some(Tok::Num(_)) => Ok(Term::Const(self.number()?)),
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(t)
            }
            Some(Tok::Minus) => Err(FormulaError::NegativeLiteral { pos }),
            _ => Err(syntax(pos, "expected a term")),
        }
    }
}

pub fn parse_term(text: &str) -> Result<Term> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

/// Parses a formula and checks that bound and free variables are disjoint.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.finish()?;
    f.validate()?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> Term {
        Term::Var(i)
    }

    #[test]
    fn term_examples() {
        let t = parse_term("x1^2 + x2^2 + a1").unwrap();
        assert_eq!(t, v(0).pow(2.0).add(v(1).pow(2.0)).add(Term::param("a1")));
        assert_eq!(parse_term("x1").unwrap(), v(0));
        assert_eq!(parse_term("x1^0.5 * x2").unwrap(), v(0).pow(0.5).mul(v(1)));
    }

    #[test]
    fn exponents_and_literals() {
        assert_eq!(parse_term("x1^1/2").unwrap(), v(0).pow(0.5));
        assert_eq!(parse_term("x1^(-2)").unwrap(), v(0).pow(-2.0));
        assert_eq!(parse_term("x1^-2*x2").unwrap(), v(0).pow(-2.0).mul(v(1)));
        assert_eq!(parse_term("27/4").unwrap(), Term::Const(6.75));
        assert_eq!(parse_term(".5").unwrap(), Term::Const(0.5));
    }

    #[test]
    fn negative_literal_is_rejected() {
        assert!(matches!(parse_term("-3"), Err(FormulaError::NegativeLiteral { pos: 0 })));
        assert!(matches!(parse_term("x1 * -3"), Err(FormulaError::NegativeLiteral { pos: 5 })));
        assert!(matches!(parse_term("x1 - x2"), Err(FormulaError::Syntax { pos: 3, .. })));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_term("x1 + * x2") {
            Err(FormulaError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_formula("x1 < x2"), Err(FormulaError::Syntax { pos: 3, .. })));
        assert!(parse_formula("x1 <= x2 &").is_err());
        assert!(parse_term("x0").is_err());
        assert!(parse_term("(x1 + x2").is_err());
    }

    #[test]
    fn formula_examples() {
        let f = parse_formula("x1^2 + x2^2 + a1 = a2*x1 + a3*x2").unwrap();
        assert!(matches!(f, Formula::Atom { rel: Relation::Eq, .. }));
        let f = parse_formula("x1^2 <= x2 & x2 <= x1^0.5").unwrap();
        assert_eq!(
            f,
            Formula::And(vec![Formula::leq(v(0).pow(2.0), v(1)), Formula::leq(v(1), v(0).pow(0.5))])
        );
        let f = parse_formula("!(x1 <= a1)").unwrap();
        assert_eq!(f, Formula::Not(Box::new(Formula::leq(v(0), Term::param("a1")))));
    }

    #[test]
    fn ge_is_sugar_for_swapped_leq() {
        assert_eq!(parse_formula("x1 >= 1/2").unwrap(), Formula::leq(Term::Const(0.5), v(0)));
    }

    #[test]
    fn parenthesized_terms_and_formulas() {
        let f = parse_formula("(x1 + x2)^2 <= x1").unwrap();
        assert!(matches!(f, Formula::Atom { .. }));
        let f = parse_formula("(x1 <= x2 | x2 <= x1) & x1 = 1").unwrap();
        assert!(matches!(&f, Formula::And(v) if matches!(v[0], Formula::Or(_))));
        let f = parse_formula("((x1 = 1))").unwrap();
        assert!(matches!(f, Formula::Atom { .. }));
    }

    #[test]
    fn quantifiers() {
        let f = parse_formula("E x2 . x1 = x2 & x2 <= a").unwrap();
        match f {
            Formula::Exists(1, body) => assert!(matches!(*body, Formula::And(_))),
            other => panic!("{other:?}"),
        }
        let f = parse_formula("A x1 . E x2 . x1 <= x2").unwrap();
        assert!(matches!(f, Formula::Forall(0, _)));
        // `E` alone is an ordinary parameter name
        assert_eq!(parse_term("E + x1").unwrap(), Term::param("E").add(v(0)));
    }
}
