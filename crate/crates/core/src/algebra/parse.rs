//! Expression text: numbers, variables, `+ - * / ^`, parentheses and `log(...)`.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' '-'? integer)?
//! atom  := integer | name | '(' expr ')' | 'log' '(' expr ')'
//! ```

use num_bigint::BigInt;

use super::jet::{JetExpression, JetSpace};
use super::{RationalFunction, Scalar};
use crate::error::{Error, Result};

/// Maps a variable name to its index.
pub type Resolver<'a> = &'a dyn Fn(&str) -> Option<usize>;

/// Resolver for `v1..vN` and jets `vA_K` over `n` fields.
pub fn jet_resolver(n: usize) -> impl Fn(&str) -> Option<usize> {
    let space = JetSpace::new(n);
    move |name: &str| {
        let rest = name.strip_prefix('v')?;
        let (field, order) = match rest.split_once('_') {
            Some((a, k)) => (a.parse::<usize>().ok()?, k.parse::<usize>().ok()?),
            None => (rest.parse::<usize>().ok()?, 0),
        };
        (1..=n)
            .contains(&field)
            .then(|| space.index(field - 1, order))
    }
}

pub fn parse_jet(src: &str, resolve: Resolver<'_>) -> Result<JetExpression> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        resolve,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

/// Parse a rational function in `v1..vN`.
pub fn parse_rational(src: &str, n: usize) -> Result<RationalFunction> {
    let resolve = move |name: &str| {
        let i = name.strip_prefix('v')?.parse::<usize>().ok()?;
        (1..=n).contains(&i).then_some(i - 1)
    };
    parse_jet(src, &resolve)?.to_rational()
}

pub fn parse_scalar(src: &str) -> Result<Scalar> {
    let e = parse_jet(src, &|_| None)?.to_rational()?;
    e.as_constant()
        .ok_or_else(|| Error::parse(format!("`{}` is not a constant", src.trim())))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    resolve: Resolver<'a>,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::parse(format!("{msg} at column {}", self.pos + 1))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<JetExpression> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<JetExpression> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                acc = acc.div(&rhs).map_err(|_| self.error("division by zero"))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<JetExpression> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<JetExpression> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let neg = self.eat(b'-');
        self.skip_ws();
        let digits = self.digits();
        if digits.is_empty() {
            return Err(self.error("expected an integer exponent"));
        }
        let e: i32 = digits
            .parse()
            .map_err(|_| self.error("exponent out of range"))?;
        let e = if neg { -e } else { e };
        base.pow(e).map_err(|_| self.error("zero raised to a negative power"))
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<JetExpression> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let digits = self.digits();
                if self.src.get(self.pos) == Some(&b'.') {
                    return Err(self.error("decimal literals are not allowed; write a fraction"));
                }
                let n: BigInt = digits.parse().expect("digits");
                Ok(JetExpression::constant(Scalar::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if name == "log" {
                    self.expect(b'(')?;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    return arg.log().map_err(|_| self.error("log(0)"));
                }
                match (self.resolve)(name) {
                    Some(i) => Ok(JetExpression::Rational(RationalFunction::var(i))),
                    None => Err(Error::UnknownVariable(name.to_string())),
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ratio;

    #[test]
    fn parses_prepotential() {
        let f = parse_rational("1/2*v1^2*v2 + 1/72*v2^4", 2).unwrap();
        assert_eq!(f.to_string(), "1/2*v1^2*v2 + 1/72*v2^4");
        let g = parse_rational(" (v1 ^2 * v2)/2+v2 ^ 4 / 72", 2).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn negative_exponents_and_fractions() {
        let f = parse_rational("1/(72*v2^2)", 2).unwrap();
        let g = parse_rational("1/72*v2^-2", 2).unwrap();
        assert_eq!(f, g);
        assert_eq!(parse_scalar("-5/6").unwrap(), ratio(-5, 6));
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse_rational("v3", 2),
            Err(Error::UnknownVariable("v3".into()))
        );
        assert!(matches!(parse_rational("v1 +", 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_rational("0.5*v1", 2), Err(Error::Parse { .. })));
        assert_eq!(parse_rational("log(v1)", 2), Err(Error::NotRational));
    }

    #[test]
    fn jets_and_logs() {
        let r = jet_resolver(2);
        let e = parse_jet("log(v2) + v1_2", &r).unwrap();
        let s = JetSpace::new(2);
        let d = e.partial(s.index(1, 0)).to_rational().unwrap();
        assert_eq!(d, s.var(1, 0).recip().unwrap());
        assert_eq!(e.partial(s.index(0, 2)), JetExpression::constant(ratio(1, 1)));
    }
}
