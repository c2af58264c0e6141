//! Rational functions lowered to `f64` for repeated numeric evaluation.

use super::poly::{scalar_to_f64, Polynomial};
use super::RationalFunction;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    fn new(p: &Polynomial) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let factors = m
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| (i, e as i32))
                    .collect();
                (scalar_to_f64(c), factors)
            })
            .collect();
        CompiledPoly { terms }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, f)| f.iter().fold(*c, |acc, &(i, e)| acc * x[i].powi(e)))
            .sum()
    }
}

/// A rational function prepared for fast evaluation at many points.
#[derive(Clone, Debug)]
pub struct Compiled {
    num: CompiledPoly,
    den: Option<CompiledPoly>,
    nvars: usize,
}

impl Compiled {
    pub fn new(r: &RationalFunction) -> Self {
        Compiled {
            num: CompiledPoly::new(r.numerator()),
            den: (!r.is_polynomial()).then(|| CompiledPoly::new(r.denominator())),
            nvars: r.nvars(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() < self.nvars {
            return Err(Error::UnboundSymbol(format!("v{}", x.len() + 1)));
        }
        let n = self.num.eval(x);
        match &self.den {
            None => Ok(n),
            Some(d) => {
                let d = d.eval(x);
                if d == 0.0 {
                    Err(Error::DivisionByZero)
                } else {
                    Ok(n / d)
                }
            }
        }
    }
}
