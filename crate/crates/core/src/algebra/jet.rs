//! Jet expressions: functions of fields `u^a` and their x-derivatives `u^a_k`,
//! closed under the total derivative and the logarithm.
//!
//! The jet variable `u^a_k` of a space with `m` fields is the plain polynomial
//! variable with index `k*m + a`, so order-zero jets coincide with the
//! ordinary coordinates and prolonging to higher order only appends variables.

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::{RationalFunction, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct JetSpace {
    fields: usize,
}

impl JetSpace {
    pub fn new(fields: usize) -> Self {
        assert!(fields > 0, "a jet space needs at least one field");
        JetSpace { fields }
    }

    pub fn fields(&self) -> usize {
        self.fields
    }

    pub fn index(&self, field: usize, order: usize) -> usize {
        debug_assert!(field < self.fields);
        order * self.fields + field
    }

    /// `(field, order)` of a jet variable index.
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index % self.fields, index / self.fields)
    }

    pub fn var(&self, field: usize, order: usize) -> RationalFunction {
        RationalFunction::var(self.index(field, order))
    }

    pub fn jet(&self, field: usize, order: usize) -> JetExpression {
        JetExpression::Rational(self.var(field, order))
    }

    /// Total x-derivative of a rational function in the jet variables.
    pub fn total_derivative(&self, e: &RationalFunction) -> RationalFunction {
        let mut acc = RationalFunction::zero();
        for k in 0..e.nvars() {
            let d = e.derivative(k);
            if d.is_zero() {
                continue;
            }
            acc = &acc + &(&d * &RationalFunction::var(k + self.fields));
        }
        acc
    }

    /// Default symbol name: `v{a}` for order zero, `v{a}_{k}` otherwise (1-based fields).
    pub fn name(&self, index: usize) -> String {
        let (a, k) = self.split(index);
        if k == 0 {
            format!("v{}", a + 1)
        } else {
            format!("v{}_{}", a + 1, k)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum JetExpression {
    Rational(RationalFunction),
    /// The branch constant `log(-1)`, kept symbolic.
    LogMinusOne,
    Sum(Vec<JetExpression>),
    Product(Vec<JetExpression>),
    Quotient(Box<JetExpression>, Box<JetExpression>),
    Power(Box<JetExpression>, i32),
    Log(Box<JetExpression>),
}

impl From<RationalFunction> for JetExpression {
    fn from(r: RationalFunction) -> Self {
        JetExpression::Rational(r)
    }
}

impl JetExpression {
    pub fn zero() -> Self {
        JetExpression::Rational(RationalFunction::zero())
    }

    pub fn constant(c: Scalar) -> Self {
        JetExpression::Rational(RationalFunction::constant(c))
    }

    pub fn as_rational(&self) -> Option<&RationalFunction> {
        match self {
            JetExpression::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_rational().is_some_and(RationalFunction::is_zero)
    }

    pub fn add(&self, rhs: &JetExpression) -> JetExpression {
        use JetExpression::*;
        match (self, rhs) {
            (Rational(a), Rational(b)) => Rational(a + b),
            _ if self.is_zero() => rhs.clone(),
            _ if rhs.is_zero() => self.clone(),
            _ => {
                let mut items = Vec::new();
                for e in [self, rhs] {
                    match e {
                        Sum(v) => items.extend(v.iter().cloned()),
                        other => items.push(other.clone()),
                    }
                }
                // fold all rational summands together
                let mut rat = RationalFunction::zero();
                let mut rest = Vec::new();
                for e in items {
                    match e {
                        Rational(r) => rat = &rat + &r,
                        other => rest.push(other),
                    }
                }
                if !rat.is_zero() {
                    rest.insert(0, Rational(rat));
                }
                match rest.len() {
                    0 => JetExpression::zero(),
                    1 => rest.pop().unwrap(),
                    _ => Sum(rest),
                }
            }
        }
    }

    pub fn sub(&self, rhs: &JetExpression) -> JetExpression {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> JetExpression {
        self.scale(&-Scalar::one())
    }

    pub fn scale(&self, c: &Scalar) -> JetExpression {
        match self {
            JetExpression::Rational(r) => JetExpression::Rational(r.scale(c)),
            _ if c.is_zero() => JetExpression::zero(),
            _ if c.is_one() => self.clone(),
            _ => JetExpression::constant(c.clone()).mul(self),
        }
    }

    pub fn mul(&self, rhs: &JetExpression) -> JetExpression {
        use JetExpression::*;
        match (self, rhs) {
            (Rational(a), Rational(b)) => Rational(a * b),
            _ if self.is_zero() || rhs.is_zero() => JetExpression::zero(),
            (Rational(a), _) if a.as_constant().is_some_and(|c| c.is_one()) => rhs.clone(),
            (_, Rational(b)) if b.as_constant().is_some_and(|c| c.is_one()) => self.clone(),
            _ => {
                let mut items = Vec::new();
                for e in [self, rhs] {
                    match e {
                        Product(v) => items.extend(v.iter().cloned()),
                        other => items.push(other.clone()),
                    }
                }
                let mut rat = RationalFunction::one();
                let mut rest = Vec::new();
                for e in items {
                    match e {
                        Rational(r) => rat = &rat * &r,
                        other => rest.push(other),
                    }
                }
                if rat.is_zero() {
                    return JetExpression::zero();
                }
                if !rat.as_constant().is_some_and(|c| c.is_one()) {
                    rest.insert(0, Rational(rat));
                }
                match rest.len() {
                    1 => rest.pop().unwrap(),
                    _ => Product(rest),
                }
            }
        }
    }

    pub fn div(&self, rhs: &JetExpression) -> Result<JetExpression> {
        use JetExpression::*;
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(match (self, rhs) {
            (Rational(a), Rational(b)) => Rational(a.checked_div(b)?),
            (_, Rational(b)) => self.mul(&Rational(b.recip()?)),
            _ if self.is_zero() => JetExpression::zero(),
            _ => Quotient(Box::new(self.clone()), Box::new(rhs.clone())),
        })
    }

    pub fn pow(&self, e: i32) -> Result<JetExpression> {
        Ok(match self {
            JetExpression::Rational(r) => JetExpression::Rational(r.pow(e)?),
            _ if e == 0 => JetExpression::constant(Scalar::one()),
            _ if e == 1 => self.clone(),
            _ => JetExpression::Power(Box::new(self.clone()), e),
        })
    }

    pub fn log(&self) -> Result<JetExpression> {
        if let Some(c) = self.as_rational().and_then(RationalFunction::as_constant) {
            if c.is_one() {
                return Ok(JetExpression::zero());
            }
            if c == -Scalar::one() {
                return Ok(JetExpression::LogMinusOne);
            }
            if c.is_zero() {
                return Err(Error::LogOfNonPositive(0.0));
            }
        }
        Ok(JetExpression::Log(Box::new(self.clone())))
    }

    /// Partial derivative with respect to the jet variable with index `var`.
    pub fn partial(&self, var: usize) -> JetExpression {
        use JetExpression::*;
        match self {
            Rational(r) => Rational(r.derivative(var)),
            LogMinusOne => JetExpression::zero(),
            Sum(v) => v
                .iter()
                .fold(JetExpression::zero(), |acc, e| acc.add(&e.partial(var))),
            Product(v) => {
                let mut acc = JetExpression::zero();
                for i in 0..v.len() {
                    let d = v[i].partial(var);
                    if d.is_zero() {
                        continue;
                    }
                    let mut term = d;
                    for (j, f) in v.iter().enumerate() {
                        if j != i {
                            term = term.mul(f);
                        }
                    }
                    acc = acc.add(&term);
                }
                acc
            }
            Quotient(a, b) => {
                let da = a.partial(var);
                let db = b.partial(var);
                let num = da.mul(b).sub(&a.mul(&db));
                num.div(&b.mul(b)).expect("nonzero denominator")
            }
            Power(b, e) => {
                let db = b.partial(var);
                if db.is_zero() {
                    return JetExpression::zero();
                }
                let base = b.pow(e - 1).expect("nonzero base");
                base.mul(&db).scale(&Scalar::from_integer((*e).into()))
            }
            Log(a) => a.partial(var).div(a).expect("nonzero log argument"),
        }
    }

    /// One past the largest jet variable index that occurs.
    pub fn nvars(&self) -> usize {
        use JetExpression::*;
        match self {
            Rational(r) => r.nvars(),
            LogMinusOne => 0,
            Sum(v) | Product(v) => v.iter().map(Self::nvars).max().unwrap_or(0),
            Quotient(a, b) => a.nvars().max(b.nvars()),
            Power(a, _) | Log(a) => a.nvars(),
        }
    }

    /// `D_x e = Σ ∂e/∂u^a_k · u^a_{k+1}`.
    pub fn total_derivative(&self, space: &JetSpace) -> JetExpression {
        use JetExpression::*;
        match self {
            Rational(r) => Rational(space.total_derivative(r)),
            LogMinusOne => JetExpression::zero(),
            Sum(v) => v
                .iter()
                .fold(JetExpression::zero(), |acc, e| acc.add(&e.total_derivative(space))),
            Product(v) => {
                let mut acc = JetExpression::zero();
                for i in 0..v.len() {
                    let mut term = v[i].total_derivative(space);
                    for (j, f) in v.iter().enumerate() {
                        if j != i {
                            term = term.mul(f);
                        }
                    }
                    acc = acc.add(&term);
                }
                acc
            }
            Quotient(a, b) => {
                let da = a.total_derivative(space);
                let db = b.total_derivative(space);
                da.mul(b)
                    .sub(&a.mul(&db))
                    .div(&b.mul(b))
                    .expect("nonzero denominator")
            }
            Power(b, e) => {
                let db = b.total_derivative(space);
                b.pow(e - 1)
                    .expect("nonzero base")
                    .mul(&db)
                    .scale(&Scalar::from_integer((*e).into()))
            }
            Log(a) => a.total_derivative(space).div(a).expect("nonzero log argument"),
        }
    }

    /// Collapse to a rational function; fails while any logarithm remains.
    pub fn to_rational(&self) -> Result<RationalFunction> {
        use JetExpression::*;
        match self {
            Rational(r) => Ok(r.clone()),
            LogMinusOne | Log(_) => Err(Error::NotRational),
            Sum(v) => v.iter().map(Self::to_rational).sum(),
            Product(v) => v
                .iter()
                .try_fold(RationalFunction::one(), |acc, e| Ok(&acc * &e.to_rational()?)),
            Quotient(a, b) => a.to_rational()?.checked_div(&b.to_rational()?),
            Power(a, e) => a.to_rational()?.pow(*e),
        }
    }

    /// Replace every jet variable `i` by `bindings[i]` (variables past the end stay).
    pub fn substitute(&self, bindings: &[RationalFunction]) -> Result<JetExpression> {
        use JetExpression::*;
        Ok(match self {
            Rational(r) => Rational(r.substitute(bindings)?),
            LogMinusOne => LogMinusOne,
            Sum(v) => v.iter().try_fold(JetExpression::zero(), |acc, e| {
                Ok::<_, Error>(acc.add(&e.substitute(bindings)?))
            })?,
            Product(v) => v.iter().try_fold(JetExpression::constant(Scalar::one()), |acc, e| {
                Ok::<_, Error>(acc.mul(&e.substitute(bindings)?))
            })?,
            Quotient(a, b) => a.substitute(bindings)?.div(&b.substitute(bindings)?)?,
            Power(a, e) => a.substitute(bindings)?.pow(*e)?,
            Log(a) => a.substitute(bindings)?.log()?,
        })
    }

    /// Real value; fails on `log(-1)` and on logarithms of non-positive numbers.
    pub fn evaluate(&self, value: &dyn Fn(usize) -> Option<f64>) -> Result<f64> {
        let (re, branch) = self.evaluate_split(value, false)?;
        debug_assert_eq!(branch, 0.0);
        Ok(re)
    }

    /// Evaluate as `re + branch·log(-1)`, taking `log(x) = ln|x| + log(-1)` for `x < 0`.
    /// Products of two branch terms are rejected.
    pub fn evaluate_branch(&self, value: &dyn Fn(usize) -> Option<f64>) -> Result<(f64, f64)> {
        self.evaluate_split(value, true)
    }

    fn evaluate_split(&self, value: &dyn Fn(usize) -> Option<f64>, allow_branch: bool) -> Result<(f64, f64)> {
        use JetExpression::*;
        match self {
            Rational(r) => Ok((r.eval_with(value)?, 0.0)),
            LogMinusOne => {
                if allow_branch {
                    Ok((0.0, 1.0))
                } else {
                    Err(Error::BranchConstant)
                }
            }
            Sum(v) => v.iter().try_fold((0.0, 0.0), |(a, b), e| {
                let (x, y) = e.evaluate_split(value, allow_branch)?;
                Ok((a + x, b + y))
            }),
            Product(v) => v.iter().try_fold((1.0, 0.0), |(a, b), e| {
                let (x, y) = e.evaluate_split(value, allow_branch)?;
                if b != 0.0 && y != 0.0 {
                    return Err(Error::BranchConstant);
                }
                Ok((a * x, a * y + b * x))
            }),
            Quotient(n, d) => {
                let (x, y) = n.evaluate_split(value, allow_branch)?;
                let (dx, dy) = d.evaluate_split(value, allow_branch)?;
                if dy != 0.0 {
                    return Err(Error::BranchConstant);
                }
                if dx == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                Ok((x / dx, y / dx))
            }
            Power(b, e) => {
                let (x, y) = b.evaluate_split(value, allow_branch)?;
                if y != 0.0 && *e != 1 {
                    return Err(Error::BranchConstant);
                }
                if x == 0.0 && *e < 0 {
                    return Err(Error::DivisionByZero);
                }
                Ok((x.powi(*e), y))
            }
            Log(a) => {
                let (x, y) = a.evaluate_split(value, allow_branch)?;
                if y != 0.0 {
                    return Err(Error::BranchConstant);
                }
                if x > 0.0 {
                    Ok((x.ln(), 0.0))
                } else if x < 0.0 && allow_branch {
                    Ok(((-x).ln(), 1.0))
                } else {
                    Err(Error::LogOfNonPositive(x))
                }
            }
        }
    }

    pub fn fmt_with(&self, f: &mut fmt::Formatter<'_>, name: &dyn Fn(usize) -> String) -> fmt::Result {
        use JetExpression::*;
        match self {
            Rational(r) => {
                let bare = r.is_polynomial()
                    && r.numerator().len() <= 1
                    && !r.numerator().leading_coefficient().is_negative();
                if !bare {
                    write!(f, "(")?;
                    r.fmt_with(f, name)?;
                    write!(f, ")")
                } else {
                    r.fmt_with(f, name)
                }
            }
            LogMinusOne => write!(f, "log(-1)"),
            Sum(v) => {
                write!(f, "(")?;
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    e.fmt_with(f, name)?;
                }
                write!(f, ")")
            }
            Product(v) => {
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    e.fmt_with(f, name)?;
                }
                Ok(())
            }
            Quotient(a, b) => {
                write!(f, "(")?;
                a.fmt_with(f, name)?;
                write!(f, ")/(")?;
                b.fmt_with(f, name)?;
                write!(f, ")")
            }
            Power(a, e) => {
                write!(f, "(")?;
                a.fmt_with(f, name)?;
                write!(f, ")^{e}")
            }
            Log(a) => {
                write!(f, "log(")?;
                a.fmt_with(f, name)?;
                write!(f, ")")
            }
        }
    }

    pub fn display<'a>(&'a self, space: &'a JetSpace) -> impl fmt::Display + 'a {
        struct D<'a>(&'a JetExpression, &'a JetSpace);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_with(f, &|i| self.1.name(i))
            }
        }
        D(self, space)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ratio;

    #[test]
    fn total_derivative_examples() {
        let s = JetSpace::new(2);
        assert_eq!(s.jet(0, 0).total_derivative(&s), s.jet(0, 1));
        // D_x log v2 = v2_1 / v2
        let l = s.jet(1, 0).log().unwrap();
        let d = l.total_derivative(&s).to_rational().unwrap();
        assert_eq!(d, &s.var(1, 1) / &s.var(1, 0));
        // D_x (v2_1)^2 = 2 v2_1 v2_2
        let e = s.jet(1, 1).pow(2).unwrap();
        let expect = (&s.var(1, 1) * &s.var(1, 2)).scale(&ratio(2, 1));
        assert_eq!(e.total_derivative(&s), JetExpression::Rational(expect));
    }

    #[test]
    fn log_evaluation() {
        let s = JetSpace::new(1);
        let l = s.jet(0, 0).log().unwrap();
        let x = l.evaluate(&|_| Some(std::f64::consts::E)).unwrap();
        assert!((x - 1.0).abs() < 1e-15);
        assert_eq!(
            l.evaluate(&|_| Some(-1.0)),
            Err(Error::LogOfNonPositive(-1.0))
        );
        let (re, br) = l.evaluate_branch(&|_| Some(-2.0)).unwrap();
        assert!((re - 2f64.ln()).abs() < 1e-15);
        assert_eq!(br, 1.0);
    }

    #[test]
    fn branch_constant_is_symbolic() {
        let e = JetExpression::constant(-Scalar::one()).log().unwrap();
        assert_eq!(e, JetExpression::LogMinusOne);
        assert_eq!(e.evaluate(&|_| None), Err(Error::BranchConstant));
        let half = e.scale(&ratio(1, 2));
        assert_eq!(half.evaluate_branch(&|_| None).unwrap(), (0.0, 0.5));
    }
}
