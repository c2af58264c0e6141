//! Solutions of the WDVV equations, their conformal structure and the
//! flat pencil `(η, g)` attached to a conformal solution.

use num_traits::{One, Zero};

use crate::algebra::linalg::{self, LinearSolution};
use crate::algebra::{ratio, Matrix, Polynomial, RationalFunction, Scalar};
use crate::error::{Error, Result};

/// A prepotential `F(v^1, …, v^n)` with the antidiagonal metric `η_{αβ} = δ_{α+β,n+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WdvvSolution {
    n: usize,
    f: RationalFunction,
}

/// Index `n+1-α` in 0-based form.
#[inline]
pub fn dual(n: usize, a: usize) -> usize {
    n - 1 - a
}

impl WdvvSolution {
    /// Checks that `∂_1∂_α∂_β F = η_{αβ}` identically.
    pub fn new(n: usize, f: RationalFunction) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        if f.nvars() > n {
            return Err(Error::InvalidSolution(format!(
                "F involves v{} but n = {n}",
                f.nvars()
            )));
        }
        let sol = WdvvSolution { n, f };
        let f1 = sol.f.derivative(0);
        for a in 0..n {
            let fa = f1.derivative(a);
            for b in a..n {
                let got = fa.derivative(b);
                let want = RationalFunction::constant(sol.eta(a, b));
                if got != want {
                    return Err(Error::InvalidSolution(format!(
                        "d^3F/dv1 dv{} dv{} = {got}, expected {want}",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(sol)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prepotential(&self) -> &RationalFunction {
        &self.f
    }

    /// `η_{αβ}` (equal to `η^{αβ}` for the antidiagonal normalization).
    pub fn eta(&self, a: usize, b: usize) -> Scalar {
        if a + b + 1 == self.n {
            Scalar::one()
        } else {
            Scalar::zero()
        }
    }

    pub fn eta_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |a, b| RationalFunction::constant(self.eta(a, b)))
    }

    /// `v_α = η_{αβ} v^β`.
    pub fn lowered_coordinate(&self, a: usize) -> RationalFunction {
        RationalFunction::var(dual(self.n, a))
    }

    pub fn structure_constants(&self) -> StructureConstants {
        let n = self.n;
        let mut lower = vec![RationalFunction::zero(); n * n * n];
        for a in 0..n {
            let fa = self.f.derivative(a);
            for b in a..n {
                let fab = fa.derivative(b);
                for c in b..n {
                    let e = fab.derivative(c);
                    for (i, j, k) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        lower[(i * n + j) * n + k] = e.clone();
                    }
                }
            }
        }
        StructureConstants { n, lower }
    }

    /// Associativity residuals `c_{αβ}^λ c_{λγ}^ν − c_{γβ}^λ c_{λα}^ν` that are not identically zero.
    pub fn check_wdvv(&self) -> Vec<WdvvResidual> {
        self.structure_constants().wdvv_residuals()
    }
}

/// Third derivatives `c_{αβγ}` with index raising by the antidiagonal `η`.
#[derive(Clone, Debug)]
pub struct StructureConstants {
    n: usize,
    lower: Vec<RationalFunction>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WdvvResidual {
    /// 0-based `(α, β, γ, ν)`.
    pub indices: [usize; 4],
    pub residual: RationalFunction,
}

impl StructureConstants {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `c_{αβγ}`.
    pub fn lower(&self, a: usize, b: usize, c: usize) -> &RationalFunction {
        &self.lower[(a * self.n + b) * self.n + c]
    }

    /// `c^α_{βγ} = η^{αν} c_{νβγ}`.
    pub fn mixed(&self, a: usize, b: usize, c: usize) -> &RationalFunction {
        self.lower(dual(self.n, a), b, c)
    }

    /// `c^{αβ}_γ`.
    pub fn upper(&self, a: usize, b: usize, c: usize) -> &RationalFunction {
        self.lower(dual(self.n, a), dual(self.n, b), c)
    }

    pub fn wdvv_residuals(&self) -> Vec<WdvvResidual> {
        let n = self.n;
        let mut out = Vec::new();
        for a in 0..n {
            for c in (a + 1)..n {
                for b in 0..n {
                    for nu in 0..n {
                        let mut r = RationalFunction::zero();
                        for l in 0..n {
                            let x = self.mixed(l, a, b);
                            let y = self.mixed(nu, l, c);
                            if !x.is_zero() && !y.is_zero() {
                                r = &r + &(x * y);
                            }
                            let x = self.mixed(l, c, b);
                            let y = self.mixed(nu, l, a);
                            if !x.is_zero() && !y.is_zero() {
                                r = &r - &(x * y);
                            }
                        }
                        if !r.is_zero() {
                            out.push(WdvvResidual {
                                indices: [a, b, c, nu],
                                residual: r,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// `A_{αβ}`, `B_α`, `C` of `E(F) = (3−d)F + ½A_{αβ}v^αv^β + B_αv^α + C`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Quadratic {
    pub a: Vec<Vec<Scalar>>,
    pub b: Vec<Scalar>,
    pub c: Scalar,
}

impl Quadratic {
    pub fn zero(n: usize) -> Self {
        Quadratic {
            a: vec![vec![Scalar::zero(); n]; n],
            b: vec![Scalar::zero(); n],
            c: Scalar::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_zero()
            && self.b.iter().all(Zero::is_zero)
            && self.a.iter().flatten().all(Zero::is_zero)
    }

    pub fn polynomial(&self) -> Polynomial {
        let mut p = Polynomial::constant(self.c.clone());
        let half = ratio(1, 2);
        for (i, row) in self.a.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if !x.is_zero() {
                    p = &p + &(&Polynomial::var(i) * &Polynomial::var(j)).scale(&(x * &half));
                }
            }
        }
        for (i, x) in self.b.iter().enumerate() {
            p = &p + &Polynomial::var(i).scale(x);
        }
        p
    }
}

/// Charge `d` and spectrum `μ` of a conformal solution.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalData {
    pub d: Scalar,
    pub mu: Vec<Scalar>,
    pub quad: Quadratic,
}

impl ConformalData {
    /// Validates `μ_1 = −d/2` and `μ_α + μ_{n+1−α} = 0`.
    pub fn new(d: Scalar, mu: Vec<Scalar>) -> Result<Self> {
        let n = mu.len();
        let cd = ConformalData {
            quad: Quadratic::zero(n),
            d,
            mu,
        };
        cd.validate()?;
        Ok(cd)
    }

    pub fn with_quadratic(mut self, quad: Quadratic) -> Result<Self> {
        self.quad = quad;
        self.validate()?;
        let violations = self.normalization_violations();
        if let Some(v) = violations.first() {
            return Err(Error::InvalidSolution(v.clone()));
        }
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.mu.len();
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.mu[0] != -&self.d / Scalar::from_integer(2.into()) {
            return Err(Error::InvalidSolution(format!(
                "mu_1 = {} but -d/2 = {}",
                self.mu[0],
                -&self.d / Scalar::from_integer(2.into())
            )));
        }
        for a in 0..n {
            if !(&self.mu[a] + &self.mu[dual(n, a)]).is_zero() {
                return Err(Error::InvalidSolution(format!(
                    "mu_{} + mu_{} != 0",
                    a + 1,
                    dual(n, a) + 1
                )));
            }
        }
        Ok(())
    }

    /// Conditions on `A, B, C` that fail.
    pub fn normalization_violations(&self) -> Vec<String> {
        let n = self.mu.len();
        let mut out = Vec::new();
        let minus_one = -Scalar::one();
        let two = Scalar::from_integer(2.into());
        for a in 0..n {
            for b in 0..n {
                if self.quad.a[a][b].is_zero() {
                    continue;
                }
                if a == 0 || b == 0 || &self.mu[a] + &self.mu[b] != minus_one {
                    out.push(format!("A_{}{} must vanish", a + 1, b + 1));
                }
            }
            if !self.quad.b[a].is_zero() && (a == 0 || self.mu[a] != &self.d / &two - &two) {
                out.push(format!("B_{} must vanish", a + 1));
            }
        }
        if !self.quad.c.is_zero() && self.d != Scalar::from_integer(3.into()) {
            out.push("C must vanish".into());
        }
        out
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// Euler weight `d_α = 1 − d/2 − μ_α`.
    pub fn weight(&self, a: usize) -> Scalar {
        Scalar::one() - &self.d / Scalar::from_integer(2.into()) - &self.mu[a]
    }

    /// `E(f) = Σ d_α v^α ∂_α f`.
    pub fn euler(&self, f: &RationalFunction) -> RationalFunction {
        (0..self.n())
            .map(|a| {
                let w = self.weight(a);
                (&RationalFunction::var(a) * &f.derivative(a)).scale(&w)
            })
            .sum()
    }
}

/// `E(F) − (3−d)F − ½A v v − B v − C`.
pub fn check_conformal(sol: &WdvvSolution, cd: &ConformalData) -> Result<RationalFunction> {
    if cd.n() != sol.n() {
        return Err(Error::InvalidDimension(cd.n()));
    }
    let f = sol.prepotential();
    let three_minus_d = Scalar::from_integer(3.into()) - &cd.d;
    let quad: RationalFunction = cd.quad.polynomial().into();
    Ok(&(&cd.euler(f) - &f.scale(&three_minus_d)) - &quad)
}

/// Laurent terms of `F` when its denominator is a monomial.
fn laurent_terms(f: &RationalFunction, n: usize) -> Option<Vec<(Vec<i64>, Scalar)>> {
    let den = f.denominator();
    if !den.is_monomial() {
        return None;
    }
    let (dm, dc) = den.leading().unwrap();
    let inv = dc.recip();
    Some(
        f.numerator()
            .terms()
            .map(|(m, c)| {
                let e = (0..n)
                    .map(|i| {
                        m.get(i).copied().unwrap_or(0) as i64 - dm.get(i).copied().unwrap_or(0) as i64
                    })
                    .collect();
                (e, c * &inv)
            })
            .collect(),
    )
}

/// A Laurent monomial has vanishing third derivatives iff it is a polynomial of degree ≤ 2.
fn is_at_most_quadratic(e: &[i64]) -> bool {
    e.iter().all(|&x| x >= 0) && e.iter().sum::<i64>() <= 2
}

/// Solve for the degrees `deg v^α` and `3 − d` from the monomials of `F`.
pub fn infer_spectrum(sol: &WdvvSolution) -> Result<ConformalData> {
    let n = sol.n();
    let terms = laurent_terms(sol.prepotential(), n).ok_or_else(|| {
        Error::Inhomogeneous("degree inference needs a monomial denominator".into())
    })?;
    // unknowns: deg v^1..deg v^n, then D = 3 - d
    let mut rows: Vec<Vec<(usize, Scalar)>> = vec![vec![(0, Scalar::one())]];
    let mut rhs = vec![Scalar::one()];
    let mut sources: Vec<Option<&Vec<i64>>> = vec![None];
    for (e, _) in &terms {
        if is_at_most_quadratic(e) {
            continue;
        }
        let mut row: Vec<(usize, Scalar)> = e
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(i, &x)| (i, Scalar::from_integer(x.into())))
            .collect();
        row.push((n, -Scalar::one()));
        rows.push(row);
        rhs.push(Scalar::zero());
        sources.push(Some(e));
    }
    let fmt_mono = |e: &Vec<i64>| {
        e.iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(i, x)| format!("v{}^{}", i + 1, x))
            .collect::<Vec<_>>()
            .join("*")
    };
    let degrees = match linalg::solve(&rows, &rhs, n + 1) {
        LinearSolution::Inconsistent { equation } => {
            let bad = sources[equation].map(fmt_mono).unwrap_or_default();
            let first = sources.iter().flatten().next().map(|e| fmt_mono(e)).unwrap_or_default();
            return Err(Error::Inhomogeneous(format!(
                "monomials {first} and {bad} cannot have equal degree"
            )));
        }
        LinearSolution::Solved { x, free } => {
            if !free.is_empty() {
                let names: Vec<String> = free
                    .iter()
                    .map(|&i| if i == n { "d".to_string() } else { format!("deg v{}", i + 1) })
                    .collect();
                return Err(Error::Inhomogeneous(format!(
                    "underdetermined: {} not fixed by F",
                    names.join(", ")
                )));
            }
            x
        }
    };
    let d = Scalar::from_integer(3.into()) - &degrees[n];
    let half_d = &d / Scalar::from_integer(2.into());
    let mu: Vec<Scalar> = (0..n)
        .map(|a| Scalar::one() - &half_d - &degrees[a])
        .collect();
    let mut cd = ConformalData::new(d, mu)?;
    // whatever survives in E(F) - (3-d)F must be the quadratic correction
    let residual = check_conformal(sol, &cd)?;
    let quad = quadratic_from(&residual, n).ok_or_else(|| {
        Error::Inhomogeneous(format!("E(F) - (3-d)F = {residual} is not quadratic"))
    })?;
    cd.quad = quad;
    let violations = cd.normalization_violations();
    if !violations.is_empty() {
        return Err(Error::Inhomogeneous(format!(
            "quadratic part of F has the wrong degree ({})",
            violations.join(", ")
        )));
    }
    Ok(cd)
}

fn quadratic_from(r: &RationalFunction, n: usize) -> Option<Quadratic> {
    let p = r.as_polynomial()?;
    if p.total_degree() > 2 {
        return None;
    }
    let mut q = Quadratic::zero(n);
    for (m, c) in p.terms() {
        let idx: Vec<usize> = m
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize))
            .collect();
        match idx.as_slice() {
            [] => q.c = c.clone(),
            [i] => q.b[*i] = c.clone(),
            [i, j] if i == j => q.a[*i][*i] = c * Scalar::from_integer(2.into()),
            [i, j] => {
                q.a[*i][*j] = c.clone();
                q.a[*j][*i] = c.clone();
            }
            _ => unreachable!(),
        }
    }
    Some(q)
}

/// Intersection form `g^{αβ}` and contravariant connection `Γ^{αβ}_γ`.
#[derive(Clone, Debug)]
pub struct MetricPair {
    pub g: Matrix,
    /// `gamma[γ]` is the matrix `Γ^{αβ}_γ`.
    pub gamma: Vec<Matrix>,
}

pub fn second_metric(sol: &WdvvSolution, cd: &ConformalData) -> MetricPair {
    second_metric_with(&sol.structure_constants(), cd)
}

pub fn second_metric_with(c: &StructureConstants, cd: &ConformalData) -> MetricPair {
    let n = c.n();
    let g = Matrix::from_fn(n, n, |a, b| {
        (0..n)
            .filter(|&k| !c.upper(a, b, k).is_zero())
            .map(|k| (&RationalFunction::var(k) * c.upper(a, b, k)).scale(&cd.weight(k)))
            .sum()
    });
    let half = ratio(1, 2);
    let gamma = (0..n)
        .map(|k| Matrix::from_fn(n, n, |a, b| c.upper(a, b, k).scale(&(&half - &cd.mu[b]))))
        .collect();
    MetricPair { g, gamma }
}

impl MetricPair {
    /// `Γ^{αβ}_γ + Γ^{βα}_γ − ∂_γ g^{αβ}`, entries that do not vanish.
    pub fn compatibility_residuals(&self) -> Vec<((usize, usize, usize), RationalFunction)> {
        let n = self.g.rows();
        let mut out = Vec::new();
        for k in 0..n {
            for a in 0..n {
                for b in a..n {
                    let r = &(&self.gamma[k][(a, b)] + &self.gamma[k][(b, a)])
                        - &self.g[(a, b)].derivative(k);
                    if !r.is_zero() {
                        out.push(((a, b, k), r));
                    }
                }
            }
        }
        out
    }

    /// `g^{αλ}Γ^{βγ}_λ − g^{βλ}Γ^{αγ}_λ`, entries that do not vanish.
    pub fn symmetry_residuals(&self) -> Vec<((usize, usize, usize), RationalFunction)> {
        let n = self.g.rows();
        let contract = |a: usize, b: usize, c: usize| -> RationalFunction {
            (0..n)
                .filter(|&l| !self.g[(a, l)].is_zero() && !self.gamma[l][(b, c)].is_zero())
                .map(|l| &self.g[(a, l)] * &self.gamma[l][(b, c)])
                .sum()
        };
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in 0..n {
                    let r = &contract(a, b, c) - &contract(b, a, c);
                    if !r.is_zero() {
                        out.push(((a, b, c), r));
                    }
                }
            }
        }
        out
    }
}

/// Christoffel symbols `Γ^m_{jk}` of the covariant metric `(g^{αβ})^{-1}`,
/// indexed as `[m][(j, k)]`.
pub fn levi_civita(g_upper: &Matrix) -> Result<Vec<Matrix>> {
    let n = g_upper.rows();
    let g_lower = g_upper.inverse()?;
    let dg: Vec<Matrix> = (0..n).map(|k| g_lower.map(|e| e.derivative(k))).collect();
    let half = ratio(1, 2);
    // first kind: [l; j k] = ½(∂_j g_{lk} + ∂_k g_{lj} − ∂_l g_{jk})
    let first: Vec<Matrix> = (0..n)
        .map(|l| {
            Matrix::from_fn(n, n, |j, k| {
                (&(&dg[j][(l, k)] + &dg[k][(l, j)]) - &dg[l][(j, k)]).scale(&half)
            })
        })
        .collect();
    Ok((0..n)
        .map(|m| {
            Matrix::from_fn(n, n, |j, k| {
                (0..n)
                    .filter(|&l| !g_upper[(m, l)].is_zero() && !first[l][(j, k)].is_zero())
                    .map(|l| &g_upper[(m, l)] * &first[l][(j, k)])
                    .sum()
            })
        })
        .collect())
}

/// `∇^i∇_k v^n − ((1−d)/2) δ^i_k` with `∇` the Levi-Civita connection of `g`.
///
/// Uses the contravariant Christoffel symbols of the pencil, after confirming
/// they are metric and torsion free for `g`; then `∇^i∇_k v^n = Γ^{in}_k`.
pub fn check_hessian_identity(sol: &WdvvSolution, cd: &ConformalData) -> Result<Matrix> {
    let pair = second_metric(sol, cd);
    if !pair.compatibility_residuals().is_empty() || !pair.symmetry_residuals().is_empty() {
        return Err(Error::InvalidSolution(
            "the pencil connection is not the Levi-Civita connection of g".into(),
        ));
    }
    let n = sol.n();
    let c = (Scalar::one() - &cd.d) / Scalar::from_integer(2.into());
    Ok(Matrix::from_fn(n, n, |i, k| {
        let target = if i == k { c.clone() } else { Scalar::zero() };
        &pair.gamma[k][(i, n - 1)] - &RationalFunction::constant(target)
    }))
}

/// The same residual computed directly from `g` through its inverse.
pub fn hessian_identity_residual(g: &Matrix, d: &Scalar) -> Result<Matrix> {
    let n = g.rows();
    let christoffel = levi_civita(g)?;
    let last = n - 1;
    let c = (Scalar::one() - d) / Scalar::from_integer(2.into());
    // ∇_j∇_k v^n = −Γ^n_{jk}; raise j with g^{ij}
    Ok(Matrix::from_fn(n, n, |i, k| {
        let h: RationalFunction = (0..n)
            .filter(|&j| !g[(i, j)].is_zero())
            .map(|j| &g[(i, j)] * &christoffel[last][(j, k)])
            .sum();
        let target = if i == k { c.clone() } else { Scalar::zero() };
        &(-h) - &RationalFunction::constant(target)
    }))
}

/// `½ g^{nn} − ((1−d)/2) v^n`.
pub fn nonlocal_charge(sol: &WdvvSolution, cd: &ConformalData) -> RationalFunction {
    nonlocal_charge_of(&second_metric(sol, cd).g, &cd.d)
}

pub fn nonlocal_charge_of(g: &Matrix, d: &Scalar) -> RationalFunction {
    let n = g.rows();
    let c = (Scalar::one() - d) / Scalar::from_integer(2.into());
    &g[(n - 1, n - 1)].scale(&ratio(1, 2)) - &RationalFunction::var(n - 1).scale(&c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse::parse_rational;

    fn a2() -> WdvvSolution {
        WdvvSolution::new(2, parse_rational("1/2*v1^2*v2 + 1/72*v2^4", 2).unwrap()).unwrap()
    }

    #[test]
    fn a2_structure_constants() {
        let c = a2().structure_constants();
        assert_eq!(c.lower(0, 0, 1), &RationalFunction::one());
        assert_eq!(c.lower(1, 1, 1), &RationalFunction::var(1).scale(&ratio(1, 3)));
        assert!(c.lower(0, 0, 0).is_zero());
        assert!(c.lower(0, 1, 1).is_zero());
        // c^1_{βγ} = c_{2βγ}
        assert_eq!(c.mixed(0, 1, 1), c.lower(1, 1, 1));
    }

    #[test]
    fn eta_is_enforced() {
        let f = parse_rational("v1^2*v2", 2).unwrap();
        assert!(matches!(WdvvSolution::new(2, f), Err(Error::InvalidSolution(_))));
    }

    #[test]
    fn a2_second_metric() {
        let cd = ConformalData::new(ratio(1, 3), vec![ratio(-1, 6), ratio(1, 6)]).unwrap();
        let m = second_metric(&a2(), &cd);
        let v = |i| RationalFunction::var(i);
        assert_eq!(m.g[(0, 0)], (&v(1) * &v(1)).scale(&ratio(2, 9)));
        assert_eq!(m.g[(0, 1)], v(0));
        assert_eq!(m.g[(1, 1)], v(1).scale(&ratio(2, 3)));
        assert!(m.g.is_symmetric());
        assert!(m.compatibility_residuals().is_empty());
        assert!(nonlocal_charge(&a2(), &cd).is_zero());
        assert!(check_hessian_identity(&a2(), &cd).unwrap().is_zero());
        assert!(hessian_identity_residual(&second_metric(&a2(), &cd).g, &cd.d).unwrap().is_zero());
    }

    #[test]
    fn spectrum_of_a2() {
        let cd = infer_spectrum(&a2()).unwrap();
        assert_eq!(cd.d, ratio(1, 3));
        assert_eq!(cd.mu, vec![ratio(-1, 6), ratio(1, 6)]);
        assert!(cd.quad.is_zero());
    }

    #[test]
    fn wrong_charge_leaves_residual() {
        // the free prepotential is conformal for every admissible (d, mu)
        let free = WdvvSolution::new(2, parse_rational("1/2*v1^2*v2", 2).unwrap()).unwrap();
        let cd = ConformalData::new(ratio(1, 1), vec![ratio(-1, 2), ratio(1, 2)]).unwrap();
        assert!(check_conformal(&free, &cd).unwrap().is_zero());
        assert!(!check_conformal(&a2(), &cd).unwrap().is_zero());
    }

    #[test]
    fn inhomogeneous_rejected() {
        let sol = WdvvSolution::new(2, parse_rational("1/2*v1^2*v2 + v2^2 + v2^3", 2).unwrap())
            .unwrap();
        assert!(matches!(infer_spectrum(&sol), Err(Error::Inhomogeneous(_))));
    }
}
