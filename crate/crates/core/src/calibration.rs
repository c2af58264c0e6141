//! Calibrations `θ_{α,p}` (deformed flat coordinates), their `Ω` tables, and
//! their transformation under inversion.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::algebra::linalg::{self, LinearSolution};
use crate::algebra::{int, Polynomial, RationalFunction, Scalar};
use crate::error::{Error, Result};
use crate::frobenius::{dual, ConformalData, StructureConstants, WdvvSolution};
use crate::inversion::{invert_solution, inversion_map, transform_conformal};

/// Sparse linear row.
type Row = Vec<(usize, Scalar)>;

/// `R_k` as an `n×n` table, `r[a][b] = (R_k)^a_b`.
pub type RMatrix = Vec<Vec<Scalar>>;

#[derive(Clone, Debug)]
pub struct Calibration {
    sol: WdvvSolution,
    cd: Option<ConformalData>,
    level: usize,
    /// `theta[α][p]` for `0 ≤ p ≤ level`.
    theta: Vec<Vec<RationalFunction>>,
    /// `r[k-1] = R_k` for `1 ≤ k ≤ level`.
    r: Vec<RMatrix>,
    notes: Vec<String>,
}

fn zero_r(n: usize) -> RMatrix {
    vec![vec![Scalar::zero(); n]; n]
}

impl Calibration {
    /// Assemble a calibration from explicit data (e.g. a file); nothing is checked here.
    pub fn from_parts(
        sol: WdvvSolution,
        cd: Option<ConformalData>,
        theta: Vec<Vec<RationalFunction>>,
        r: Vec<RMatrix>,
    ) -> Result<Self> {
        let n = sol.n();
        if theta.len() != n || theta.iter().any(|t| t.len() != theta[0].len()) || theta[0].is_empty() {
            return Err(Error::InvalidSolution("theta table must be n rows of equal length".into()));
        }
        let level = theta[0].len() - 1;
        let mut r = r;
        r.resize(level, zero_r(n));
        Ok(Calibration {
            sol,
            cd,
            level,
            theta,
            r,
            notes: Vec::new(),
        })
    }

    pub fn solution(&self) -> &WdvvSolution {
        &self.sol
    }

    pub fn conformal(&self) -> Option<&ConformalData> {
        self.cd.as_ref()
    }

    pub fn n(&self) -> usize {
        self.sol.n()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn theta(&self, a: usize, p: usize) -> Option<&RationalFunction> {
        self.theta.get(a)?.get(p)
    }

    /// `θ_{α,p}` with the convention `θ_{n,-1} = 1`.
    pub fn theta_ext(&self, a: usize, p: i64) -> Option<RationalFunction> {
        if p == -1 {
            return (a + 1 == self.n()).then(RationalFunction::one);
        }
        if p < 0 {
            return None;
        }
        self.theta(a, p as usize).cloned()
    }

    /// `R_k`, zero outside the stored range.
    pub fn r(&self, k: usize) -> RMatrix {
        if k == 0 || k > self.r.len() {
            zero_r(self.n())
        } else {
            self.r[k - 1].clone()
        }
    }

    /// `R_k` for any `k`; beyond the stored range it must vanish by the support
    /// condition, otherwise the level is too small.
    pub fn r_checked(&self, k: i64) -> Result<RMatrix> {
        if k < 1 || k as usize <= self.r.len() {
            return Ok(self.r(k.max(0) as usize));
        }
        if let Some(cd) = &self.cd {
            let n = self.n();
            let resonant = (0..n).any(|a| (0..n).any(|b| &cd.mu[a] - &cd.mu[b] == int(k)));
            if resonant {
                return Err(Error::LevelUnderflow {
                    have: self.r.len(),
                    need: k as usize,
                });
            }
        }
        Ok(zero_r(self.n()))
    }

    pub fn r_matrices(&self) -> &[RMatrix] {
        &self.r
    }

    /// Choices made while fixing integration constants (free unknowns set to zero).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Keep levels `0..=level`.
    pub fn truncate(&self, level: usize) -> Result<Calibration> {
        if level > self.level {
            return Err(Error::LevelUnderflow {
                have: self.level,
                need: level,
            });
        }
        let mut c = self.clone();
        c.level = level;
        for t in &mut c.theta {
            t.truncate(level + 1);
        }
        c.r.truncate(level);
        Ok(c)
    }

    pub fn omega_table(&self) -> Result<OmegaTable> {
        OmegaTable::build(self)
    }
}

/// Degree-`k` homogeneous parts of `h`, integrated twice along rays.
fn hessian_potential(h: &[Vec<Polynomial>]) -> Polynomial {
    let n = h.len();
    let mut acc = Polynomial::zero();
    for i in 0..n {
        for j in 0..n {
            for (m, c) in h[i][j].terms() {
                let k: u32 = m.iter().sum();
                let w = Scalar::new(1.into(), ((k + 1) * (k + 2)).into());
                let mut mm = m.clone();
                let len = mm.len().max(i.max(j) + 1);
                mm.resize(len, 0);
                mm[i] += 1;
                mm[j] += 1;
                acc = &acc + &Polynomial::term(mm, c * &w);
            }
        }
    }
    acc
}

/// Euler operator `Σ w_a v^a ∂_a` acting only on the first `n` variables.
fn euler_poly(p: &Polynomial, weights: &[Scalar]) -> Polynomial {
    Polynomial::from_terms(p.terms().map(|(m, c)| {
        let w: Scalar = m
            .iter()
            .zip(weights)
            .map(|(&e, w)| w * Scalar::from_integer(e.into()))
            .fold(Scalar::zero(), |a, b| a + b);
        (m.clone(), c * w)
    }))
}

/// Splits each term into its `v`-monomial (first `n` variables) and the
/// unknown it multiplies (if any), producing one linear equation per monomial.
fn collect_equations(
    p: &Polynomial,
    n: usize,
    rows: &mut Vec<Row>,
    rhs: &mut Vec<Scalar>,
) {
    let mut by_mono: BTreeMap<Vec<u32>, (Row, Scalar)> = BTreeMap::new();
    for (m, c) in p.terms() {
        let vpart: Vec<u32> = m.iter().take(n).copied().collect();
        let mut vpart = vpart;
        while vpart.last() == Some(&0) {
            vpart.pop();
        }
        let unknown = m.iter().enumerate().skip(n).find(|(_, &e)| e > 0).map(|(i, &e)| {
            debug_assert_eq!(e, 1, "equations must be linear in the unknowns");
            i - n
        });
        let entry = by_mono.entry(vpart).or_insert_with(|| (Vec::new(), Scalar::zero()));
        match unknown {
            Some(u) => entry.0.push((u, c.clone())),
            None => entry.1 -= c,
        }
    }
    for (_, (row, b)) in by_mono {
        rows.push(row);
        rhs.push(b);
    }
}

struct Unknowns {
    n: usize,
    names: Vec<String>,
}

impl Unknowns {
    fn fresh(&mut self, name: String) -> Polynomial {
        let i = self.names.len();
        self.names.push(name);
        Polynomial::var(self.n + i)
    }
}

/// Replace unknown `i` (variable `n+i`) by `values[i]`.
fn fix_unknowns(p: &Polynomial, n: usize, values: &[Scalar]) -> Polynomial {
    Polynomial::from_terms(p.terms().map(|(m, c)| {
        let mut c = c.clone();
        let mut v = m.clone();
        for (i, e) in m.iter().enumerate().skip(n) {
            if *e > 0 {
                c *= &values[i - n];
                v[i] = 0;
            }
        }
        (v, c)
    }))
}

fn grad(p: &Polynomial, n: usize) -> Vec<Polynomial> {
    (0..n).map(|a| p.derivative(a)).collect()
}

/// `Σ_μ ∂_μ a · η^{μν} ∂_ν b` for the antidiagonal metric.
fn eta_pair<T>(ga: &[T], gb: &[T]) -> T
where
    for<'x> &'x T: std::ops::Mul<&'x T, Output = T> + std::ops::Add<&'x T, Output = T>,
    T: Clone + Default,
{
    let n = ga.len();
    let mut acc = T::default();
    for m in 0..n {
        acc = &acc + &(&ga[m] * &gb[dual(n, m)]);
    }
    acc
}

/// Build a calibration through level `level` by integrating the Hessian recursion,
/// fixing integration constants from the conformal condition and orthonormality.
pub fn build_calibration(sol: &WdvvSolution, cd: Option<&ConformalData>, level: usize) -> Result<Calibration> {
    if level == 0 {
        return Err(Error::LevelUnderflow { have: 0, need: 1 });
    }
    let n = sol.n();
    let f = sol
        .prepotential()
        .as_polynomial()
        .ok_or_else(|| {
            Error::InvalidSolution("building a calibration needs a polynomial prepotential".into())
        })?
        .clone();
    if let Some(cd) = cd {
        if cd.n() != n {
            return Err(Error::InvalidDimension(cd.n()));
        }
    }
    let c = sol.structure_constants();
    let c_mixed: Vec<Vec<Vec<Polynomial>>> = (0..n)
        .map(|l| {
            (0..n)
                .map(|b| {
                    (0..n)
                        .map(|g| c.mixed(l, b, g).as_polynomial().cloned().expect("polynomial"))
                        .collect()
                })
                .collect()
        })
        .collect();
    let weights: Vec<Scalar> = cd.map(|cd| (0..n).map(|a| cd.weight(a)).collect()).unwrap_or_default();

    let top = level + 1;
    let mut theta: Vec<Vec<Polynomial>> = (0..n)
        .map(|a| vec![Polynomial::var(dual(n, a))])
        .collect();
    let mut r: Vec<RMatrix> = Vec::new();
    let mut notes = Vec::new();

    for q in 1..=top {
        let mut unknowns = Unknowns {
            n,
            names: Vec::new(),
        };
        // candidate θ_{α,q} (with unknown affine part) and unknown constants of θ_{α,q-1}
        let mut cand: Vec<Polynomial> = Vec::with_capacity(n);
        let mut prev: Vec<Polynomial> = Vec::with_capacity(n);
        for a in 0..n {
            if q == 1 {
                cand.push(f.derivative(a));
                prev.push(theta[a][0].clone());
                continue;
            }
            let gp = grad(&theta[a][q - 1], n);
            let h: Vec<Vec<Polynomial>> = (0..n)
                .map(|b| {
                    (0..n)
                        .map(|g| {
                            (0..n)
                                .filter(|&l| !c_mixed[l][b][g].is_zero() && !gp[l].is_zero())
                                .map(|l| &c_mixed[l][b][g] * &gp[l])
                                .fold(Polynomial::zero(), |x, y| &x + &y)
                        })
                        .collect()
                })
                .collect();
            let phi = hessian_potential(&h);
            for b in 0..n {
                for g in 0..n {
                    if phi.derivative(b).derivative(g) != h[b][g] {
                        return Err(Error::NonIntegrableHessian { alpha: a + 1, level: q });
                    }
                }
            }
            let k = unknowns.fresh(format!("const theta[{}][{}]", a + 1, q - 1));
            let mut t = &phi + &(&k * &Polynomial::var(0));
            for b in 1..n {
                let l = unknowns.fresh(format!("linear v{} in theta[{}][{}]", b + 1, a + 1, q));
                t = &t + &(&l * &Polynomial::var(b));
            }
            cand.push(t);
            prev.push(&theta[a][q - 1] + &k);
        }
        // R_q entries allowed by μ_a − μ_b = q
        let mut rq: Vec<Vec<Polynomial>> = vec![vec![Polynomial::zero(); n]; n];
        if let Some(cd) = cd {
            let qs = int(q as i64);
            for a in 0..n {
                for b in 0..n {
                    if &cd.mu[a] - &cd.mu[b] == qs {
                        rq[a][b] = unknowns.fresh(format!("(R_{q})^{}_{}", a + 1, b + 1));
                    }
                }
            }
        }

        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        // conformal condition at level q
        if let Some(cd) = cd {
            for a in 0..n {
                for b in 0..n {
                    let d = cand[a].derivative(b);
                    let coef = &int(q as i64) + &cd.mu[a] + &cd.mu[b];
                    let mut e = &euler_poly(&d, &weights) - &d.scale(&coef);
                    for k in 1..=q {
                        let rk: Vec<Vec<Polynomial>> = if k == q {
                            rq.clone()
                        } else {
                            r[k - 1]
                                .iter()
                                .map(|row| row.iter().map(|x| Polynomial::constant(x.clone())).collect())
                                .collect()
                        };
                        for g in 0..n {
                            if rk[g][a].is_zero() {
                                continue;
                            }
                            let src = if q - k == q - 1 && q > 1 { &prev[g] } else { &theta[g][q - k] };
                            e = &e - &(&src.derivative(b) * &rk[g][a]);
                        }
                    }
                    collect_equations(&e, n, &mut rows, &mut rhs);
                }
            }
            // antisymmetry of R_q
            let sign = if q % 2 == 0 { Scalar::one() } else { -Scalar::one() };
            for a in 0..n {
                for b in 0..n {
                    let e = &rq[dual(n, a)][b] + &rq[dual(n, b)][a].scale(&sign);
                    collect_equations(&e, n, &mut rows, &mut rhs);
                }
            }
        }
        // orthonormality at order z^q
        let grads: Vec<Vec<Vec<Polynomial>>> = (0..n)
            .map(|a| {
                (0..=q)
                    .map(|i| {
                        if i == q {
                            grad(&cand[a], n)
                        } else {
                            grad(&theta[a][i], n)
                        }
                    })
                    .collect()
            })
            .collect();
        for a in 0..n {
            for b in a..n {
                let mut e = Polynomial::zero();
                for i in 0..=q {
                    let term = eta_pair(&grads[a][i], &grads[b][q - i]);
                    e = if (q - i) % 2 == 0 { &e + &term } else { &e - &term };
                }
                collect_equations(&e, n, &mut rows, &mut rhs);
            }
        }

        let m = unknowns.names.len();
        let values = match linalg::solve(&rows, &rhs, m) {
            LinearSolution::Inconsistent { equation } => {
                return Err(Error::InconsistentResonance {
                    level: q,
                    detail: format!("equation {equation} has no solution"),
                })
            }
            LinearSolution::Solved { x, free } => {
                for i in free {
                    notes.push(format!("level {q}: {} is free, set to 0", unknowns.names[i]));
                }
                x
            }
        };
        for a in 0..n {
            let t = fix_unknowns(&cand[a], n, &values);
            if q > 1 {
                theta[a][q - 1] = fix_unknowns(&prev[a], n, &values);
            }
            theta[a].push(t);
        }
        let rq_val: RMatrix = rq
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| fix_unknowns(e, n, &values).constant_term())
                    .collect()
            })
            .collect();
        r.push(rq_val);
    }

    let theta = theta
        .into_iter()
        .map(|row| row.into_iter().take(level + 1).map(RationalFunction::from).collect())
        .collect();
    r.truncate(level);
    notes.retain(|s| !s.starts_with(&format!("level {top}:")) || top == level);
    Ok(Calibration {
        sol: sol.clone(),
        cd: cd.cloned(),
        level,
        theta,
        r,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum CalibrationIssue {
    InitialValue { alpha: usize },
    FirstLevel { alpha: usize },
    StringEquation { alpha: usize, p: usize },
    Hessian { alpha: usize, p: usize, beta: usize, gamma: usize },
    Orthonormality { order: usize, alpha: usize, beta: usize },
    Conformal { alpha: usize, p: usize, beta: usize },
    RSupport { k: usize, alpha: usize, beta: usize },
    RAntisymmetry { k: usize, alpha: usize, beta: usize },
}

impl fmt::Display for CalibrationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CalibrationIssue::*;
        match self {
            InitialValue { alpha } => write!(f, "theta[{alpha}][0] != v_{alpha}"),
            FirstLevel { alpha } => write!(f, "theta[{alpha}][1] != dF/dv{alpha}"),
            StringEquation { alpha, p } => {
                write!(f, "d/dv1 theta[{alpha}][{p}] != theta[{alpha}][{}]", p - 1)
            }
            Hessian { alpha, p, beta, gamma } => write!(
                f,
                "d2 theta[{alpha}][{p}]/dv{beta}dv{gamma} != c^l_({beta}{gamma}) d_l theta[{alpha}][{}]",
                p - 1
            ),
            Orthonormality { order, alpha, beta } => {
                write!(f, "orthonormality fails at z^{order} for ({alpha},{beta})")
            }
            Conformal { alpha, p, beta } => {
                write!(f, "conformal condition fails for d_{beta} theta[{alpha}][{p}]")
            }
            RSupport { k, alpha, beta } => {
                write!(f, "(R_{k})^{alpha}_{beta} != 0 but mu_{alpha} - mu_{beta} != {k}")
            }
            RAntisymmetry { k, alpha, beta } => {
                write!(f, "R_{k} violates eta-antisymmetry at ({alpha},{beta})")
            }
        }
    }
}

/// Independent re-verification of every calibration axiom through the stored level
/// (1-based indices in the report).
pub fn check_calibration(cal: &Calibration) -> Vec<CalibrationIssue> {
    use CalibrationIssue::*;
    let n = cal.n();
    let level = cal.level();
    let sol = cal.solution();
    let c = sol.structure_constants();
    let mut out = Vec::new();
    let th = |a: usize, p: usize| cal.theta(a, p).unwrap();
    let grads: Vec<Vec<Vec<RationalFunction>>> = (0..n)
        .map(|a| {
            (0..=level)
                .map(|p| (0..n).map(|b| th(a, p).derivative(b)).collect())
                .collect()
        })
        .collect();
    for a in 0..n {
        if th(a, 0) != &sol.lowered_coordinate(a) {
            out.push(InitialValue { alpha: a + 1 });
        }
        if level >= 1 && th(a, 1) != &sol.prepotential().derivative(a) {
            out.push(FirstLevel { alpha: a + 1 });
        }
        for p in 1..=level {
            if grads[a][p][0] != *th(a, p - 1) {
                out.push(StringEquation { alpha: a + 1, p });
            }
            for b in 0..n {
                for g in b..n {
                    let lhs = grads[a][p][b].derivative(g);
                    let rhs: RationalFunction = (0..n)
                        .filter(|&l| !c.mixed(l, b, g).is_zero())
                        .map(|l| c.mixed(l, b, g) * &grads[a][p - 1][l])
                        .sum();
                    if lhs != rhs {
                        out.push(Hessian {
                            alpha: a + 1,
                            p,
                            beta: b + 1,
                            gamma: g + 1,
                        });
                    }
                }
            }
        }
    }
    for order in 1..=level {
        for a in 0..n {
            for b in a..n {
                let mut e = RationalFunction::zero();
                for i in 0..=order {
                    let t = eta_pair(&grads[a][i], &grads[b][order - i]);
                    e = if (order - i) % 2 == 0 { &e + &t } else { &e - &t };
                }
                if !e.is_zero() {
                    out.push(Orthonormality {
                        order,
                        alpha: a + 1,
                        beta: b + 1,
                    });
                }
            }
        }
    }
    if let Some(cd) = cal.conformal() {
        for k in 1..=level {
            let rk = cal.r(k);
            for a in 0..n {
                for b in 0..n {
                    if !rk[a][b].is_zero() && &cd.mu[a] - &cd.mu[b] != int(k as i64) {
                        out.push(RSupport { k, alpha: a + 1, beta: b + 1 });
                    }
                    let sign = if k % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                    if !(&rk[dual(n, a)][b] + &(&rk[dual(n, b)][a] * &sign)).is_zero() {
                        out.push(RAntisymmetry { k, alpha: a + 1, beta: b + 1 });
                    }
                }
            }
        }
        for p in 0..=level {
            for a in 0..n {
                for b in 0..n {
                    let d = &grads[a][p][b];
                    let coef = &int(p as i64) + &cd.mu[a] + &cd.mu[b];
                    let mut e = &cd.euler(d) - &d.scale(&coef);
                    for k in 1..=p {
                        let rk = cal.r(k);
                        for g in 0..n {
                            if !rk[g][a].is_zero() {
                                e = &e - &grads[g][p - k][b].scale(&rk[g][a]);
                            }
                        }
                    }
                    if !e.is_zero() {
                        out.push(Conformal { alpha: a + 1, p, beta: b + 1 });
                    }
                }
            }
        }
    }
    out
}

/// `Ω_{α,p;β,q}` for `p + q ≤ level − 1`.
#[derive(Clone, Debug)]
pub struct OmegaTable {
    n: usize,
    level: usize,
    entries: BTreeMap<(usize, usize, usize, usize), RationalFunction>,
}

impl OmegaTable {
    fn build(cal: &Calibration) -> Result<Self> {
        let n = cal.n();
        let level = cal.level();
        let grads: Vec<Vec<Vec<RationalFunction>>> = (0..n)
            .map(|a| {
                (0..=level)
                    .map(|p| (0..n).map(|b| cal.theta(a, p).unwrap().derivative(b)).collect())
                    .collect()
            })
            .collect();
        let mut entries = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                for s in 0..level {
                    // s = p + q; walk p upwards
                    entries.insert((a, 0, b, s), grads[b][s + 1][a].clone());
                    for p in 1..=s {
                        let q = s - p;
                        let m = eta_pair(&grads[a][p], &grads[b][q + 1]);
                        let prev = &entries[&(a, p - 1, b, q + 1)];
                        entries.insert((a, p, b, q), &m - prev);
                    }
                }
            }
        }
        Ok(OmegaTable { n, level, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The calibration level the table was built from; entries exist for `p + q < level`.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn get(&self, a: usize, p: usize, b: usize, q: usize) -> Option<&RationalFunction> {
        self.entries.get(&(a, p, b, q))
    }

    /// `Ω` with the conventions `Ω_{α,p;n,-1} = Ω_{n,-1;β,q} = 0`.
    pub fn get_ext(&self, a: usize, p: i64, b: usize, q: i64) -> Result<RationalFunction> {
        if p == -1 || q == -1 {
            let ok = (p != -1 || a + 1 == self.n) && (q != -1 || b + 1 == self.n);
            return if ok {
                Ok(RationalFunction::zero())
            } else {
                Err(Error::MissingOmega(format!("({},{p};{},{q})", a + 1, b + 1)))
            };
        }
        self.get(a, p as usize, b, q as usize)
            .cloned()
            .ok_or_else(|| Error::MissingOmega(format!("({},{p};{},{q})", a + 1, b + 1)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize, usize, usize), &RationalFunction)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries with `Ω_{α,p;β,q} ≠ Ω_{β,q;α,p}`.
    pub fn symmetry_violations(&self) -> Vec<(usize, usize, usize, usize)> {
        self.entries
            .iter()
            .filter(|(&(a, p, b, q), e)| self.entries.get(&(b, q, a, p)) != Some(*e))
            .map(|(k, _)| *k)
            .collect()
    }

    /// Entries violating `∂_ξ Ω = ∂_σθ_{α,p} ∂_λθ_{β,q} c^{σλ}_ξ`.
    pub fn derivative_violations(&self, cal: &Calibration, c: &StructureConstants) -> Vec<(usize, usize, usize, usize)> {
        let n = self.n;
        let mut out = Vec::new();
        for (&(a, p, b, q), e) in &self.entries {
            let ga: Vec<_> = (0..n).map(|s| cal.theta(a, p).unwrap().derivative(s)).collect();
            let gb: Vec<_> = (0..n).map(|s| cal.theta(b, q).unwrap().derivative(s)).collect();
            for x in 0..n {
                let mut rhs = RationalFunction::zero();
                for s in 0..n {
                    if ga[s].is_zero() {
                        continue;
                    }
                    for l in 0..n {
                        let cc = c.upper(s, l, x);
                        if cc.is_zero() || gb[l].is_zero() {
                            continue;
                        }
                        rhs = &rhs + &(&(&ga[s] * &gb[l]) * cc);
                    }
                }
                if e.derivative(x) != rhs {
                    out.push((a, p, b, q));
                    break;
                }
            }
        }
        out
    }
}

/// `δ(α) = δ^1_α − δ^n_α`.
fn shift(n: usize, a: usize) -> i64 {
    (a == 0) as i64 - (a + 1 == n) as i64
}

/// Index relabeling `α + (n−1)δ(α)` (0-based).
fn relabel(n: usize, a: usize) -> usize {
    (a as i64 + (n as i64 - 1) * shift(n, a)) as usize
}

/// `(R̂_k)^α_β = (−1)^{δ^α_1+δ^1_β} (R_{k+δ(α)−δ(β)})^{α'}_{β'}` for `1 ≤ k ≤ upto`.
pub fn transform_r(r: &dyn Fn(i64) -> RMatrix, n: usize, upto: usize) -> Vec<RMatrix> {
    (1..=upto)
        .map(|k| {
            let mut m = zero_r(n);
            for a in 0..n {
                for b in 0..n {
                    let j = k as i64 + shift(n, a) - shift(n, b);
                    let src = r(j);
                    let mut x = src[relabel(n, a)][relabel(n, b)].clone();
                    if (a == 0) ^ (b == 0) {
                        x = -x;
                    }
                    m[a][b] = x;
                }
            }
            m
        })
        .collect()
}

/// The inverted calibration `θ̂` (expressed in `v̂`) of `F̂`, at level `P − 1`.
pub fn transform_calibration(cal: &Calibration) -> Result<Calibration> {
    let n = cal.n();
    let level = cal.level();
    if level < 2 {
        return Err(Error::LevelUnderflow { have: level, need: 2 });
    }
    let sol_hat = invert_solution(cal.solution())?;
    let map = inversion_map(n)?;
    let inv_vn = RationalFunction::var(n - 1).recip()?;
    let hat_level = level - 1;
    let mut theta = vec![Vec::with_capacity(hat_level + 1); n];
    for p in 0..=hat_level {
        for (a, row) in theta.iter_mut().enumerate() {
            let e = if a == 0 {
                -(&cal.theta_ext(n - 1, p as i64 - 1).unwrap() * &inv_vn)
            } else if a + 1 == n {
                &cal.theta_ext(0, p as i64 + 1).unwrap() * &inv_vn
            } else {
                &cal.theta_ext(a, p as i64).unwrap() * &inv_vn
            };
            row.push(map.push_forward(&e)?);
        }
    }
    let (cd_hat, r_hat) = match cal.conformal() {
        None => (None, Vec::new()),
        Some(cd) => {
            for j in -1..=(hat_level as i64 + 2) {
                cal.r_checked(j)?;
            }
            let get = |j: i64| cal.r_checked(j).expect("checked above");
            (Some(transform_conformal(cd)), transform_r(&get, n, hat_level))
        }
    };
    Calibration::from_parts(sol_hat, cd_hat, theta, r_hat)
}


#[cfg(test)]
mod example_tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn examples_and_their_inversions_are_calibrated() {
        for (name, text) in catalog::examples() {
            let sf = catalog::load(text).unwrap();
            let cal = build_calibration(&sf.solution, sf.conformal.as_ref(), 4).unwrap();
            assert_eq!(check_calibration(&cal), vec![], "{name}");
            let om = cal.omega_table().unwrap();
            assert!(om.symmetry_violations().is_empty(), "{name}");
            let hat = transform_calibration(&cal).unwrap();
            assert_eq!(hat.level(), 3);
            assert_eq!(check_calibration(&hat), vec![], "{name} hat");
        }
    }
}
