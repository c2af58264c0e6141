//! Rational functions in normal form: numerator and denominator share no
//! common factor and the denominator is monic in the lex order.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::gcd::gcd;
use super::poly::{default_var_name, forward_owned, Polynomial};
use super::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl Default for RationalFunction {
    fn default() -> Self {
        Self::zero()
    }
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(num: Polynomial, den: Polynomial) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        if let Some(c) = den.as_constant() {
            let inv = c.recip();
            return RationalFunction {
                num: num.scale(&inv),
                den: Polynomial::one(),
            };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.div_exact(&g).expect("gcd divides numerator"),
                den.div_exact(&g).expect("gcd divides denominator"),
            )
        };
        let lc = den.leading_coefficient();
        if lc.is_one() {
            RationalFunction { num, den }
        } else {
            let inv = lc.recip();
            RationalFunction {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn zero() -> Self {
        RationalFunction {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }

    pub fn one() -> Self {
        Self::constant(Scalar::one())
    }

    pub fn constant(c: Scalar) -> Self {
        Polynomial::constant(c).into()
    }

    pub fn from_int(c: i64) -> Self {
        Polynomial::from_int(c).into()
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::constant(Scalar::new(n.into(), d.into()))
    }

    pub fn var(i: usize) -> Self {
        Polynomial::var(i).into()
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        self.is_polynomial().then_some(&self.num)
    }

    pub fn as_constant(&self) -> Option<Scalar> {
        if self.is_polynomial() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars().max(self.den.nvars())
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RationalFunction {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn recip(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(&self.num * &rhs.den, &self.den * &rhs.num))
    }

    /// Integer power; negative exponents invert (zero base is an error).
    pub fn pow(&self, e: i32) -> Result<Self> {
        let k = e.unsigned_abs();
        let p = RationalFunction {
            num: self.num.pow(k),
            den: self.den.pow(k),
        };
        if e >= 0 {
            Ok(p)
        } else {
            p.recip()
        }
    }

    pub fn derivative(&self, var: usize) -> Self {
        let dn = self.num.derivative(var);
        if self.is_polynomial() {
            return dn.into();
        }
        let dd = self.den.derivative(var);
        if dd.is_zero() {
            return Self::normalized(dn, self.den.clone());
        }
        let num = &(&dn * &self.den) - &(&self.num * &dd);
        Self::normalized(num, &self.den * &self.den)
    }

    /// Compose with `bindings[i]` substituted for variable `i`. Variables
    /// beyond `bindings.len()` are left alone.
    pub fn substitute(&self, bindings: &[RationalFunction]) -> Result<Self> {
        let num = substitute_poly(&self.num, bindings);
        let den = substitute_poly(&self.den, bindings);
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        num.checked_div(&den)
    }

    pub fn eval_with(&self, value: &dyn Fn(usize) -> Option<f64>) -> Result<f64> {
        let d = self.den.eval_with(value)?;
        if d == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.num.eval_with(value)? / d)
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        self.eval_with(&|i| point.get(i).copied())
    }

    pub fn eval_scalar(&self, point: &[Scalar]) -> Result<Scalar> {
        let d = self.den.eval_scalar(point)?;
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.num.eval_scalar(point)? / d)
    }

    pub fn map_vars(&self, map: impl Fn(usize) -> usize + Copy) -> Self {
        Self::normalized(self.num.map_vars(map), self.den.map_vars(map))
    }

    pub fn fmt_with(&self, f: &mut fmt::Formatter<'_>, name: &dyn Fn(usize) -> String) -> fmt::Result {
        if self.is_polynomial() {
            return self.num.fmt_with(f, name);
        }
        write!(f, "(")?;
        self.num.fmt_with(f, name)?;
        write!(f, ")/(")?;
        self.den.fmt_with(f, name)?;
        write!(f, ")")
    }

    pub fn display_with<'a>(&'a self, name: &'a dyn Fn(usize) -> String) -> impl fmt::Display + 'a {
        struct D<'a>(&'a RationalFunction, &'a dyn Fn(usize) -> String);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_with(f, self.1)
            }
        }
        D(self, name)
    }
}

fn substitute_poly(p: &Polynomial, bindings: &[RationalFunction]) -> RationalFunction {
    // cache powers of each binding
    let mut powers: Vec<Vec<RationalFunction>> = vec![vec![RationalFunction::one()]; bindings.len()];
    let mut acc = RationalFunction::zero();
    // group terms sharing a common denominator to limit normalizations
    for (m, c) in p.terms() {
        let mut num = Polynomial::constant(c.clone());
        let mut den = Polynomial::one();
        let mut free: Vec<u32> = Vec::new();
        for (i, &e) in m.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if i < bindings.len() {
                let cache = &mut powers[i];
                while cache.len() <= e as usize {
                    let next = &cache[cache.len() - 1] * &bindings[i];
                    cache.push(next);
                }
                let f = &cache[e as usize];
                num = &num * &f.num;
                den = &den * &f.den;
            } else {
                if free.len() <= i {
                    free.resize(i + 1, 0);
                }
                free[i] = e;
            }
        }
        if !free.is_empty() {
            num = num.mul_monomial(&free, &Scalar::one());
        }
        acc = &acc + &RationalFunction::normalized(num, den);
    }
    acc
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        RationalFunction {
            num: p,
            den: Polynomial::one(),
        }
    }
}

impl From<Scalar> for RationalFunction {
    fn from(c: Scalar) -> Self {
        Self::constant(c)
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, &default_var_name)
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalFunction({self})")
    }
}

impl<'a> Add<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &'a RationalFunction) -> RationalFunction {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            let num = &self.num + &rhs.num;
            if self.is_polynomial() {
                return num.into();
            }
            return RationalFunction::normalized(num, self.den.clone());
        }
        let g = gcd(&self.den, &rhs.den);
        let a = self.den.div_exact(&g).expect("gcd divides");
        let b = rhs.den.div_exact(&g).expect("gcd divides");
        let num = &(&self.num * &b) + &(&rhs.num * &a);
        RationalFunction::normalized(num, &(&a * &b) * &g)
    }
}

impl<'a> Sub<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &'a RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &'a RationalFunction) -> RationalFunction {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero();
        }
        if self.is_polynomial() && rhs.is_polynomial() {
            return (&self.num * &rhs.num).into();
        }
        // cross-cancel before multiplying to keep the gcd small
        let g1 = gcd(&self.num, &rhs.den);
        let g2 = gcd(&rhs.num, &self.den);
        let n1 = self.num.div_exact(&g1).unwrap();
        let d2 = rhs.den.div_exact(&g1).unwrap();
        let n2 = rhs.num.div_exact(&g2).unwrap();
        let d1 = self.den.div_exact(&g2).unwrap();
        let num = &n1 * &n2;
        let den = &d1 * &d2;
        let lc = den.leading_coefficient();
        let inv = lc.recip();
        RationalFunction {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }
}

impl<'a> Div<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    /// Panics on division by the zero function; use `checked_div` to handle it.
    fn div(self, rhs: &'a RationalFunction) -> RationalFunction {
        self.checked_div(rhs).expect("division by zero rational function")
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Neg for RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        -&self
    }
}

forward_owned!(Add, add, RationalFunction);
forward_owned!(Sub, sub, RationalFunction);
forward_owned!(Mul, mul, RationalFunction);
forward_owned!(Div, div, RationalFunction);

impl std::iter::Sum for RationalFunction {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(RationalFunction::zero(), |a, b| &a + &b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> RationalFunction {
        RationalFunction::var(i)
    }

    fn q(n: i64, d: i64) -> RationalFunction {
        RationalFunction::from_ratio(n, d)
    }

    #[test]
    fn quotient_rule() {
        // d/dv2 [1/(72 v2^2)] = -1/(36 v2^3)
        let e = (&q(1, 72) * &v(1).pow(-2).unwrap()).derivative(1);
        assert_eq!(e, &q(-1, 36) * &v(1).pow(-3).unwrap());
    }

    #[test]
    fn substitution_examples() {
        let hat2 = v(1);
        let inv = -(hat2.recip().unwrap());
        // v2^2 with v2 -> -1/vh2 gives 1/vh2^2
        let e = v(1).pow(2).unwrap();
        assert_eq!(
            e.substitute(&[v(0), inv.clone()]).unwrap(),
            hat2.pow(-2).unwrap()
        );
        // v1 with v1 -> vh1
        assert_eq!(v(0).substitute(&[v(0)]).unwrap(), v(0));
        // v1*v2 with v1 -> -vh1/vh2, v2 -> -1/vh2 gives vh1/vh2^2
        let b1 = -(&v(0) / &v(1));
        let e = &v(0) * &v(1);
        assert_eq!(
            e.substitute(&[b1, inv]).unwrap(),
            &v(0) / &v(1).pow(2).unwrap()
        );
    }

    #[test]
    fn zero_denominator_after_substitution() {
        let e = v(0).recip().unwrap();
        assert_eq!(
            e.substitute(&[RationalFunction::zero()]),
            Err(Error::ZeroDenominator)
        );
    }

    #[test]
    fn normal_form_cancels() {
        let a = &v(0) + &v(1);
        let b = &v(0) - &v(1);
        let f = &(&a * &b) / &(&a * &a);
        assert_eq!(f, &b / &a);
        assert_eq!(&f - &(&b / &a), RationalFunction::zero());
    }
}
