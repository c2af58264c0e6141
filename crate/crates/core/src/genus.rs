//! Genus expansion bookkeeping: the genus-one free energy, the G-function
//! law under inversion, the Legendre-type expansion of the free energies and
//! the genus-one/two correction terms.
//!
//! Hatted quantities live on a jet space of the same shape whose
//! x-derivative is `∂_x̂ = (1/v^n) ∂_x`; [`pull_back_jets`] rewrites them in
//! unhatted jets so both sides can be compared exactly.

use num_traits::One;

use crate::algebra::{int, ratio, JetExpression, JetSpace, Matrix, RationalFunction, Scalar};
use crate::error::{Error, Result};
use crate::frobenius::{StructureConstants, WdvvSolution};
use crate::inversion::{inversion_map, invert_solution, CoordinateMap};

/// Free energies `F_1, F_2, …` as jet expressions (`terms[g-1] = F_g`).
#[derive(Clone, Debug, PartialEq)]
pub struct GenusSeries {
    terms: Vec<JetExpression>,
}

impl GenusSeries {
    pub fn new(terms: Vec<JetExpression>) -> Self {
        GenusSeries { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `F_g`, 1-based.
    pub fn get(&self, g: usize) -> Option<&JetExpression> {
        g.checked_sub(1).and_then(|i| self.terms.get(i))
    }

    pub fn terms(&self) -> &[JetExpression] {
        &self.terms
    }

    /// Genera whose term uses jets beyond order `3g-2`.
    pub fn order_violations(&self, space: &JetSpace) -> Vec<usize> {
        self.terms
            .iter()
            .enumerate()
            .filter_map(|(i, e)| {
                let g = i + 1;
                let top = e.nvars().checked_sub(1).map(|k| space.split(k).1).unwrap_or(0);
                (top > 3 * g - 2).then_some(g)
            })
            .collect()
    }
}

/// `M_{αβ} = c_{αβγ}(v) v^γ_x`.
pub fn contracted_structure(c: &StructureConstants, space: &JetSpace) -> Matrix {
    let n = c.n();
    Matrix::from_fn(n, n, |a, b| {
        (0..n)
            .map(|g| c.lower(a, b, g) * &space.var(g, 1))
            .sum()
    })
}

/// `F_1 = (1/24) log det(c_{αβγ} v^γ_x) + G(v)`.
pub fn genus1(sol: &WdvvSolution, g: &JetExpression) -> Result<JetExpression> {
    let space = JetSpace::new(sol.n());
    let det = contracted_structure(&sol.structure_constants(), &space).det();
    if det.is_zero() {
        return Err(Error::DegenerateDeterminant);
    }
    Ok(JetExpression::from(det).log()?.scale(&ratio(1, 24)).add(g))
}

/// The coefficient `n/24 - 1/2` of `log v^n` in the G-function law.
pub fn g_shift(n: usize) -> Scalar {
    ratio(n as i64, 24) - ratio(1, 2)
}

/// `Ĝ(v̂) = G(v) + (n/24 - 1/2) log v^n`, written in the hatted variables.
pub fn transform_g(g: &JetExpression, map: &CoordinateMap) -> Result<JetExpression> {
    let n = map.n();
    let back = map.backward();
    let vn = JetExpression::from(back[n - 1].clone());
    Ok(g.substitute(back)?.add(&vn.log()?.scale(&g_shift(n))))
}

/// `((1/v^n) D_x)^k v̂^α` for every hatted jet variable below `upto`.
fn hatted_jet_bindings(map: &CoordinateMap, upto: usize) -> Result<Vec<RationalFunction>> {
    let n = map.n();
    let space = JetSpace::new(n);
    let inv_vn = space.var(n - 1, 0).recip()?;
    let mut out: Vec<RationalFunction> = map.forward().to_vec();
    while out.len() < upto {
        let prev = &out[out.len() - n];
        out.push(&space.total_derivative(prev) * &inv_vn);
    }
    out.truncate(upto.max(n));
    Ok(out)
}

/// Rewrite an expression in hatted jets `v̂^α_k` (x̂-derivatives) in terms of
/// unhatted jets, using `∂_x̂ = (1/v^n) ∂_x`.
pub fn pull_back_jets(e: &JetExpression, map: &CoordinateMap) -> Result<JetExpression> {
    let bindings = hatted_jet_bindings(map, e.nvars())?;
    e.substitute(&bindings)
}

/// `det(ĉ(v̂) v̂_x̂)·(v^n)^n - det(c(v) v_x)`, pulled back to unhatted jets.
pub fn check_det_identity(sol: &WdvvSolution, map: &CoordinateMap) -> Result<RationalFunction> {
    let n = sol.n();
    let space = JetSpace::new(n);
    let hat = invert_solution(sol)?;
    let det = contracted_structure(&sol.structure_constants(), &space).det();
    let det_hat = contracted_structure(&hat.structure_constants(), &space).det();
    let pulled = pull_back_jets(&det_hat.into(), map)?.to_rational()?;
    let vn = space.var(n - 1, 0).pow(n as i32)?;
    Ok(&(&pulled * &vn) - &det)
}

/// `𝒢_1 = -½ log ŵ^n + ½ log(-1)` in hatted jets.
pub fn g1_formula(n: usize) -> Result<JetExpression> {
    let w = JetSpace::new(n).jet(n - 1, 0);
    Ok(w.log()?
        .scale(&ratio(-1, 2))
        .add(&JetExpression::LogMinusOne.scale(&ratio(1, 2))))
}

/// `𝒢_2 = ŵ^n_x̂x̂ / (8 (ŵ^n)²) - (ŵ^n_x̂)² / (12 (ŵ^n)³)` in hatted jets.
pub fn g2_formula(n: usize) -> RationalFunction {
    let s = JetSpace::new(n);
    let w = s.var(n - 1, 0);
    let wx = s.var(n - 1, 1);
    let wxx = s.var(n - 1, 2);
    let a = wxx.checked_div(&w.pow(2).unwrap().scale(&int(8))).unwrap();
    let b = (&wx * &wx).checked_div(&w.pow(3).unwrap().scale(&int(12))).unwrap();
    &a - &b
}

/// `F̃_1 - F̂_1 - 𝒢_1` pulled back to unhatted jets, where `F̂_1` uses the
/// inverted solution and `Ĝ` from [`transform_g`]. The `log(-1)` constants
/// cancel; the result is returned unsimplified.
pub fn g1_difference(sol: &WdvvSolution, g: &JetExpression) -> Result<JetExpression> {
    let n = sol.n();
    let map = inversion_map(n)?;
    let hat = invert_solution(sol)?;
    let f1 = genus1(sol, g)?;
    let f1_hat = genus1(&hat, &transform_g(g, &map)?)?;
    let rhs = f1_hat.add(&g1_formula(n)?);
    Ok(f1.sub(&pull_back_jets(&rhs, &map)?))
}

/// `D_x (F̃_1 - F̂_1 - 𝒢_1)`; exactly zero when the genus-one law holds.
pub fn check_g1(sol: &WdvvSolution, g: &JetExpression) -> Result<RationalFunction> {
    let space = JetSpace::new(sol.n());
    g1_difference(sol, g)?.total_derivative(&space).to_rational()
}

/// `[E^k]_m` for `E = Σ_{j≥1} s^j e_j`, all `k, m ≤ top`.
fn power_table(e: &[JetExpression], top: usize) -> Vec<Vec<JetExpression>> {
    let mut table = vec![vec![JetExpression::zero(); top + 1]; top + 1];
    table[0][0] = JetExpression::constant(Scalar::one());
    for k in 1..=top {
        for m in k..=top {
            let mut acc = JetExpression::zero();
            for j in 1..=(m + 1 - k).min(e.len()) {
                acc = acc.add(&e[j - 1].mul(&table[k - 1][m - j]));
            }
            table[k][m] = acc;
        }
    }
    table
}

fn factorial(k: usize) -> Scalar {
    (1..=k).fold(Scalar::one(), |acc, i| acc * int(i as i64))
}

/// Solve the Legendre expansion for `F̃_1..F̃_{g_max}` given the free energies
/// `F_g` in a frame with x-derivative `dx` and `v^n = vn`.
///
/// At order `ε^{2g-2}`:
///
/// ```text
/// F̃_g = F_g − Σ_{h<g} Σ_{k≥1} [E^k]_{g-h}/k! ∂_x̂^k F̃_h − Σ_{k≥2} [E^k]_g/k! ∂_x̂^{k-2} v̂^n
/// ```
///
/// with `E = Σ_j ε^{2j} ∂_x F_j`, `∂_x̂ = (1/v^n) ∂_x` and `v̂^n = -1/v^n`.
pub fn expand_with(
    series: &[JetExpression],
    vn: &JetExpression,
    dx: &dyn Fn(&JetExpression) -> JetExpression,
    g_max: usize,
) -> Result<Vec<JetExpression>> {
    if g_max > series.len() {
        return Err(Error::InsufficientData(format!(
            "{g_max} genera requested, {} supplied",
            series.len()
        )));
    }
    let one = JetExpression::constant(Scalar::one());
    let inv_vn = one.div(vn)?;
    let dhat = |e: &JetExpression| dx(e).mul(&inv_vn);
    let e: Vec<JetExpression> = series[..g_max.saturating_sub(1)].iter().map(dx).collect();
    let table = power_table(&e, g_max);

    // ∂_x̂^j v̂^n for j = 0..g_max-2
    let mut vhat = vec![inv_vn.neg()];
    while vhat.len() + 1 < g_max {
        let next = dhat(vhat.last().unwrap());
        vhat.push(next);
    }

    let mut out: Vec<JetExpression> = Vec::new();
    // derivs[h-1][k] = ∂_x̂^k F̃_h
    let mut derivs: Vec<Vec<JetExpression>> = Vec::new();
    for g in 1..=g_max {
        let mut f = series[g - 1].clone();
        for h in 1..g {
            for k in 1..=g - h {
                while derivs[h - 1].len() <= k {
                    let next = dhat(derivs[h - 1].last().unwrap());
                    derivs[h - 1].push(next);
                }
                let coeff = &table[k][g - h];
                if coeff.is_zero() {
                    continue;
                }
                let term = coeff.mul(&derivs[h - 1][k]);
                f = f.sub(&term.scale(&(Scalar::one() / factorial(k))));
            }
        }
        for k in 2..=g {
            let coeff = &table[k][g];
            if coeff.is_zero() {
                continue;
            }
            let term = coeff.mul(&vhat[k - 2]);
            f = f.sub(&term.scale(&(Scalar::one() / factorial(k))));
        }
        derivs.push(vec![f.clone()]);
        out.push(f);
    }
    Ok(out)
}

/// [`expand_with`] for free energies in the jets of `space`, with `vn` the
/// field `n-1`.
pub fn legendre_expand(series: &GenusSeries, space: &JetSpace, g_max: usize) -> Result<GenusSeries> {
    let vn = space.jet(space.fields() - 1, 0);
    let dx = |e: &JetExpression| e.total_derivative(space);
    Ok(GenusSeries::new(expand_with(series.terms(), &vn, &dx, g_max)?))
}

/// `F̃_2 - F̂_2 - 𝒢_2` in unhatted jets, with `ŵ` identified with `v̂`.
/// `f2_hat` is written in hatted jets.
pub fn check_g2(
    sol: &WdvvSolution,
    g: &JetExpression,
    f2: Option<&JetExpression>,
    f2_hat: Option<&JetExpression>,
) -> Result<RationalFunction> {
    let (f2, f2_hat) = match (f2, f2_hat) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InsufficientData(
                "genus-two data for both sides is required".into(),
            ))
        }
    };
    let n = sol.n();
    let space = JetSpace::new(n);
    let map = inversion_map(n)?;
    let series = GenusSeries::new(vec![genus1(sol, g)?, f2.clone()]);
    let tilde = legendre_expand(&series, &space, 2)?;
    let rhs = f2_hat.add(&g2_formula(n).into());
    tilde
        .get(2)
        .unwrap()
        .sub(&pull_back_jets(&rhs, &map)?)
        .to_rational()
}
