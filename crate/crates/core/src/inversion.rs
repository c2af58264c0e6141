//! The inversion symmetry
//!
//! ```text
//! v̂^1 = ½ η_{αβ} v^α v^β / v^n,   v̂^i = v^i / v^n,   v̂^n = −1/v^n,
//! F̂(v̂) = (v^n)^{-2} (F(v) − ½ v^1 η_{αβ} v^α v^β),
//! ```
//!
//! and the identities that make it a symmetry of the WDVV equations.

use num_traits::One;

use crate::algebra::{ratio, Matrix, RationalFunction, Scalar};
use crate::error::{Error, Result};
use crate::frobenius::{dual, second_metric, ConformalData, WdvvSolution};

/// The change of coordinates `v ↔ v̂`; both sides use variables `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateMap {
    n: usize,
    forward: Vec<RationalFunction>,
    backward: Vec<RationalFunction>,
}

/// `½ η_{αβ} x^α x^β` in the variables `0..n`.
fn half_eta_square(n: usize) -> RationalFunction {
    let v = RationalFunction::var;
    (0..n)
        .map(|a| &v(a) * &v(dual(n, a)))
        .sum::<RationalFunction>()
        .scale(&ratio(1, 2))
}

pub fn inversion_map(n: usize) -> Result<CoordinateMap> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let last = RationalFunction::var(n - 1);
    let inv_last = last.recip()?;
    let q = half_eta_square(n);
    let mut forward = vec![&q * &inv_last];
    let mut backward = vec![&q * &inv_last];
    for i in 1..n - 1 {
        forward.push(&RationalFunction::var(i) * &inv_last);
        backward.push(-(&RationalFunction::var(i) * &inv_last));
    }
    forward.push(-inv_last.clone());
    backward.push(-inv_last);
    Ok(CoordinateMap {
        n,
        forward,
        backward,
    })
}

impl CoordinateMap {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `v̂^a` as functions of `v`.
    pub fn forward(&self) -> &[RationalFunction] {
        &self.forward
    }

    /// `v^α` as functions of `v̂`.
    pub fn backward(&self) -> &[RationalFunction] {
        &self.backward
    }

    /// Rewrite an expression in `v̂` as a function of `v`.
    pub fn pull_back(&self, e: &RationalFunction) -> Result<RationalFunction> {
        e.substitute(&self.forward)
    }

    /// Rewrite an expression in `v` as a function of `v̂`.
    pub fn push_forward(&self, e: &RationalFunction) -> Result<RationalFunction> {
        e.substitute(&self.backward)
    }

    /// `∂v̂^a/∂v^α` as an `n×n` matrix (row `a`, column `α`).
    pub fn jacobian(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |a, b| self.forward[a].derivative(b))
    }

    /// `backward ∘ forward` and `forward ∘ backward` both reduce to the identity.
    pub fn is_involutive(&self) -> Result<bool> {
        for (i, b) in self.backward.iter().enumerate() {
            if b.substitute(&self.forward)? != RationalFunction::var(i) {
                return Ok(false);
            }
        }
        for (i, f) in self.forward.iter().enumerate() {
            if f.substitute(&self.backward)? != RationalFunction::var(i) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Numeric forward map; fails near the singular locus `v^n = 0`.
    pub fn forward_point(&self, v: &[f64]) -> Result<Vec<f64>> {
        let vn = v[self.n - 1];
        if vn.abs() < 1e-6 {
            return Err(Error::SingularLocus(vn.abs()));
        }
        self.forward.iter().map(|f| f.eval_f64(v)).collect()
    }
}

/// Drop Laurent monomials with vanishing third derivatives (polynomial, degree ≤ 2).
pub fn drop_quadratic(f: &RationalFunction) -> RationalFunction {
    let den = f.denominator();
    if !den.is_monomial() {
        return f.clone();
    }
    let (dm, _) = den.leading().unwrap();
    let dm = dm.clone();
    let num = f.numerator().filter_terms(|m, _| {
        let len = m.len().max(dm.len());
        let e: Vec<i64> = (0..len)
            .map(|i| m.get(i).copied().unwrap_or(0) as i64 - dm.get(i).copied().unwrap_or(0) as i64)
            .collect();
        !(e.iter().all(|&x| x >= 0) && e.iter().sum::<i64>() <= 2)
    });
    RationalFunction::new(num, den.clone()).expect("nonzero denominator")
}

pub fn invert_solution(sol: &WdvvSolution) -> Result<WdvvSolution> {
    let n = sol.n();
    let map = inversion_map(n)?;
    let v1 = RationalFunction::var(0);
    let shifted = sol.prepotential() - &(&v1 * &half_eta_square(n));
    let scaled = &shifted * &RationalFunction::var(n - 1).pow(-2)?;
    let f_hat = drop_quadratic(&map.push_forward(&scaled)?);
    WdvvSolution::new(n, f_hat)
}

/// Charge and spectrum of the inverted solution.
pub fn transform_conformal(cd: &ConformalData) -> ConformalData {
    let n = cd.n();
    let one = Scalar::one();
    let mut mu = cd.mu.clone();
    mu[0] = &cd.mu[n - 1] - &one;
    mu[n - 1] = &cd.mu[0] + &one;
    ConformalData {
        d: Scalar::from_integer(2.into()) - &cd.d,
        mu,
        quad: crate::frobenius::Quadratic::zero(n),
    }
}

#[derive(Clone, Debug)]
pub struct CovarianceResiduals {
    /// `(v^n)^2 J^T η̂ J − η`.
    pub eta: Matrix,
    /// `(v^n)^2 J g^{αβ}(v) J^T − ĝ^{αβ}(v̂(v))`, the contravariant form of the
    /// same law for the intersection forms.
    pub g: Option<Matrix>,
}

/// Pull back `η̂` (and `ĝ` when both conformal structures are given) along the forward map,
/// with `J = ∂v̂/∂v`.
pub fn check_metric_covariance(
    sol: &WdvvSolution,
    sol_hat: &WdvvSolution,
    conformal: Option<(&ConformalData, &ConformalData)>,
) -> Result<CovarianceResiduals> {
    let n = sol.n();
    let map = inversion_map(n)?;
    let jac = map.jacobian();
    let vn2 = RationalFunction::var(n - 1).pow(2)?;
    let eta_hat = sol_hat.eta_matrix().try_map(|e| map.pull_back(e))?;
    let eta = jac.transpose().mul(&eta_hat).mul(&jac).scale(&vn2).sub(&sol.eta_matrix());
    let g = match conformal {
        None => None,
        Some((cd, cd_hat)) => {
            let g = second_metric(sol, cd).g;
            let g_hat = second_metric(sol_hat, cd_hat).g.try_map(|e| map.pull_back(e))?;
            Some(jac.mul(&g).mul(&jac.transpose()).scale(&vn2).sub(&g_hat))
        }
    };
    Ok(CovarianceResiduals { eta, g })
}

/// Third-derivative tensors of two prepotentials agree.
pub fn same_third_derivatives(a: &WdvvSolution, b: &WdvvSolution) -> bool {
    if a.n() != b.n() {
        return false;
    }
    let (ca, cb) = (a.structure_constants(), b.structure_constants());
    let n = a.n();
    (0..n).all(|i| (i..n).all(|j| (j..n).all(|k| ca.lower(i, j, k) == cb.lower(i, j, k))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse::parse_rational;
    use crate::frobenius::infer_spectrum;
    use num_traits::Zero;

    #[test]
    fn maps_for_small_n() {
        let m = inversion_map(2).unwrap();
        let v = RationalFunction::var;
        assert_eq!(m.forward()[0], v(0));
        assert_eq!(m.forward()[1], -v(1).recip().unwrap());
        assert_eq!(m.backward()[1], -v(1).recip().unwrap());
        let m3 = inversion_map(3).unwrap();
        assert_eq!(m3.forward()[1], &v(1) / &v(2));
        assert_eq!(m3.backward()[1], -(&v(1) / &v(2)));
        for n in 2..=4 {
            assert!(inversion_map(n).unwrap().is_involutive().unwrap());
        }
        assert_eq!(inversion_map(1), Err(Error::InvalidDimension(1)));
    }

    #[test]
    fn a2_inversion_closed_form() {
        let sol = WdvvSolution::new(2, parse_rational("1/2*v1^2*v2 + 1/72*v2^4", 2).unwrap())
            .unwrap();
        let hat = invert_solution(&sol).unwrap();
        let expect = parse_rational("1/2*v1^2*v2 + 1/(72*v2^2)", 2).unwrap();
        assert_eq!(hat.prepotential(), &expect);
        let cd = infer_spectrum(&hat).unwrap();
        assert_eq!(cd.d, ratio(5, 3));
        assert_eq!(cd.mu, vec![ratio(-5, 6), ratio(5, 6)]);
    }

    #[test]
    fn free_case_is_fixed() {
        let sol = WdvvSolution::new(2, parse_rational("1/2*v1^2*v2", 2).unwrap()).unwrap();
        let hat = invert_solution(&sol).unwrap();
        assert_eq!(hat.prepotential(), sol.prepotential());
    }

    #[test]
    fn spectrum_map_is_an_involution() {
        let cd = ConformalData::new(ratio(1, 2), vec![ratio(-1, 4), Scalar::zero(), ratio(1, 4)])
            .unwrap();
        let hat = transform_conformal(&cd);
        assert_eq!(hat.d, ratio(3, 2));
        assert_eq!(hat.mu, vec![ratio(-3, 4), Scalar::zero(), ratio(3, 4)]);
        assert_eq!(transform_conformal(&hat), cd);
    }
}
