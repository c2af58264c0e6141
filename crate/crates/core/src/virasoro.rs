//! The Virasoro operators `L_{-1}` and `L_0` and their genus-zero constraints.
//!
//! ```text
//! L_{-1} = Σ_{p≥1} t^{α,p} ∂/∂t^{α,p−1} + ½ η_{αβ} t^{α,0} t^{β,0}
//! L_0    = Σ (p + ½ + μ_α) t^{α,p} ∂/∂t^{α,p} + Σ_{r≥1} (R_r)^β_α t^{α,p} ∂/∂t^{β,p−r}
//!          + ½ Σ (−1)^q (R_{p+q+1})^ξ_α η_{ξβ} t^{α,p} t^{β,q} + ¼ Σ_α (¼ − μ_α²)
//! ```
//!
//! On a genus-zero tau function the first-order part acts with `t̃` in place of `t`
//! and `∂ log τ` in place of `∂`; the constant `c0` belongs to the next order in the
//! genus expansion and does not enter the genus-zero residual.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::algebra::poly::scalar_to_f64;
use crate::algebra::{int, ratio, Polynomial, Scalar};
use crate::calibration::{Calibration, OmegaTable};
use crate::error::{Error, Result};
use crate::frobenius::dual;
use crate::hierarchy::{dlogtau, Slot, TimeConfiguration};

#[derive(Clone, Debug, PartialEq)]
pub struct VirasoroOperator {
    pub m: i32,
    pub n: usize,
    /// Highest `p` of any time the tables mention.
    pub level: usize,
    /// `(from, to) → b`: the term `b · t^{from} ∂/∂t^{to}`.
    pub b: BTreeMap<(Slot, Slot), Scalar>,
    /// `(s1, s2) → c`: the term `c · t^{s1} t^{s2}` (ordered pairs, both orders present).
    pub c2: BTreeMap<(Slot, Slot), Scalar>,
    pub c0: Scalar,
}

fn add(map: &mut BTreeMap<(Slot, Slot), Scalar>, key: (Slot, Slot), c: Scalar) {
    if c.is_zero() {
        return;
    }
    let e = map.entry(key).or_insert_with(Scalar::zero);
    *e += c;
    if e.is_zero() {
        map.remove(&key);
    }
}

/// `L_m` for `m ∈ {−1, 0}`, with all tables truncated to `p, q ≤ level`.
pub fn build_virasoro(cal: &Calibration, m: i32, level: usize) -> Result<VirasoroOperator> {
    let n = cal.n();
    let mut b = BTreeMap::new();
    let mut c2 = BTreeMap::new();
    let half = ratio(1, 2);
    match m {
        -1 => {
            for a in 0..n {
                for p in 1..=level {
                    add(&mut b, ((a, p), (a, p - 1)), Scalar::one());
                }
                add(&mut c2, ((a, 0), (dual(n, a), 0)), half.clone());
            }
            Ok(VirasoroOperator {
                m,
                n,
                level,
                b,
                c2,
                c0: Scalar::zero(),
            })
        }
        0 => {
            let cd = cal
                .conformal()
                .ok_or_else(|| Error::InsufficientData("L_0 needs conformal data".into()))?;
            for a in 0..n {
                for p in 0..=level {
                    add(&mut b, ((a, p), (a, p)), &int(p as i64) + &half + &cd.mu[a]);
                    for r in 1..=p {
                        let rr = cal.r_checked(r as i64)?;
                        for bb in 0..n {
                            add(&mut b, ((a, p), (bb, p - r)), rr[bb][a].clone());
                        }
                    }
                }
            }
            for p in 0..=level {
                for q in 0..=level {
                    let rk = cal.r_checked((p + q + 1) as i64)?;
                    let sign = if q % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                    for a in 0..n {
                        for bb in 0..n {
                            let x = &rk[dual(n, bb)][a] * &sign * &half;
                            add(&mut c2, ((a, p), (bb, q)), x);
                        }
                    }
                }
            }
            let quarter = ratio(1, 4);
            let c0 = cd
                .mu
                .iter()
                .map(|mu| &quarter - mu * mu)
                .fold(Scalar::zero(), |x, y| x + y)
                * &quarter;
            Ok(VirasoroOperator {
                m,
                n,
                level,
                b,
                c2,
                c0,
            })
        }
        other => Err(Error::UnsupportedVirasoro(other)),
    }
}

/// Genus-zero value `Σ b t̃ ∂log τ + Σ c2 t̃ t̃` with caller-supplied `∂ log τ`.
pub fn constraint_value(l: &VirasoroOperator, config: &TimeConfiguration, dlog: &dyn Fn(Slot) -> Result<f64>) -> Result<f64> {
    let active = config.active();
    if let Some(s) = active.iter().find(|s| s.1 > l.level) {
        return Err(Error::Truncation(format!(
            "time ({},{}) is above the operator level {}",
            s.0 + 1,
            s.1,
            l.level
        )));
    }
    let mut acc = 0.0;
    for ((from, to), c) in &l.b {
        if active.contains(from) {
            acc += scalar_to_f64(c) * config.tilde(*from) * dlog(*to)?;
        }
    }
    for ((s1, s2), c) in &l.c2 {
        if active.contains(s1) && active.contains(s2) {
            acc += scalar_to_f64(c) * config.tilde(*s1) * config.tilde(*s2);
        }
    }
    Ok(acc)
}

/// `|L_m τ|` at genus zero on a hodograph solution, with `∂ log τ = Σ t̃ Ω` exactly.
pub fn constraint_residual(l: &VirasoroOperator, om: &OmegaTable, config: &TimeConfiguration, v: &[f64]) -> Result<f64> {
    Ok(constraint_value(l, config, &|s| dlogtau(om, config, v, s))?.abs())
}

fn slot_var(n: usize, s: Slot) -> usize {
    s.1 * n + s.0
}

/// Apply `L` to a polynomial in the times (variable `p·n + α` is `t^{α,p}`).
pub fn apply(l: &VirasoroOperator, f: &Polynomial) -> Polynomial {
    let n = l.n;
    let mut out = f.scale(&l.c0);
    for ((from, to), c) in &l.b {
        let d = f.derivative(slot_var(n, *to));
        if !d.is_zero() {
            out = &out + &(&d * &Polynomial::var(slot_var(n, *from))).scale(c);
        }
    }
    if !f.is_zero() {
        for ((s1, s2), c) in &l.c2 {
            let m = &Polynomial::var(slot_var(n, *s1)) * &Polynomial::var(slot_var(n, *s2));
            out = &out + &(&m * f).scale(c);
        }
    }
    out
}

/// Monomials of degree ≤ 2 in the times up to `level`.
pub fn test_monomials(n: usize, level: usize) -> Vec<Polynomial> {
    let vars: Vec<usize> = (0..=level).flat_map(|p| (0..n).map(move |a| slot_var(n, (a, p)))).collect();
    let mut out = vec![Polynomial::one()];
    for (i, &x) in vars.iter().enumerate() {
        out.push(Polynomial::var(x));
        for &y in &vars[i..] {
            out.push(&Polynomial::var(x) * &Polynomial::var(y));
        }
    }
    out
}

/// `[L_{-1}, L_0] + L_{-1}` on all test monomials up to `test_level`; returns the
/// nonzero images (empty when the relation holds).
pub fn check_commutator(l_m1: &VirasoroOperator, l_0: &VirasoroOperator, test_level: usize) -> Result<Vec<(Polynomial, Polynomial)>> {
    if l_m1.m != -1 || l_0.m != 0 {
        return Err(Error::Truncation("expected L_{-1} and L_0".into()));
    }
    // highest level reached: test level + 1 from L_{-1}, plus the reach of the c2 table
    let reach = l_0.c2.keys().map(|(a, b)| a.1.max(b.1)).max().unwrap_or(0);
    let need = (test_level + 1).max(reach) + 1;
    if l_m1.level < need || l_0.level < need {
        return Err(Error::Truncation(format!(
            "operators at levels {} and {} but level {need} is needed",
            l_m1.level, l_0.level
        )));
    }
    let mut bad = Vec::new();
    for f in test_monomials(l_m1.n, test_level) {
        let lhs = &(&apply(l_m1, &apply(l_0, &f)) - &apply(l_0, &apply(l_m1, &f))) + &apply(l_m1, &f);
        if !lhs.is_zero() {
            bad.push((f, lhs));
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{build_calibration, transform_calibration};
    use crate::catalog;
    use crate::hierarchy::hodograph_solve;
    use crate::symmetry::hatted_point;

    fn a2_cal(level: usize) -> Calibration {
        let sf = catalog::a2();
        build_calibration(&sf.solution, sf.conformal.as_ref(), level).unwrap()
    }

    #[test]
    fn operator_tables() {
        let cal = a2_cal(2);
        let lm1 = build_virasoro(&cal, -1, 2).unwrap();
        assert_eq!(lm1.b[&((1, 2), (1, 1))], int(1));
        assert_eq!(lm1.c2[&((0, 0), (1, 0))], ratio(1, 2));
        assert_eq!(lm1.c0, int(0));
        let l0 = build_virasoro(&cal, 0, 2).unwrap();
        assert_eq!(l0.b[&((0, 0), (0, 0))], ratio(1, 3));
        assert_eq!(l0.c0, ratio(1, 9));
        assert!(l0.c2.is_empty());
        assert_eq!(build_virasoro(&cal, 1, 2), Err(Error::UnsupportedVirasoro(1)));
    }

    #[test]
    fn commutator_relation() {
        let cal = a2_cal(2);
        let lm1 = build_virasoro(&cal, -1, 4).unwrap();
        let l0 = build_virasoro(&cal, 0, 4).unwrap();
        assert_eq!(check_commutator(&lm1, &l0, 2).unwrap(), vec![]);
        assert!(check_commutator(&lm1, &l0, 3).is_err());
        // a wrong diagonal weight breaks it
        let mut bad = l0.clone();
        *bad.b.get_mut(&((0, 0), (0, 0))).unwrap() += int(1);
        assert!(!check_commutator(&lm1, &bad, 1).unwrap().is_empty());
    }

    #[test]
    fn commutator_with_resonant_r() {
        // synthetic R_2 for a resonant n = 3 spectrum: the relation does not depend on F
        let sf = catalog::load("n = 3\nF = 1/2*v1^2*v3 + 1/2*v1*v2^2\nd = 2\nmu = [-1, 0, 1]\n").unwrap();
        let cal = build_calibration(&sf.solution, sf.conformal.as_ref(), 2).unwrap();
        let mut r = cal.r_matrices().to_vec();
        r[0][1][0] = int(5);
        r[0][2][1] = int(5);
        let theta: Vec<Vec<_>> = (0..3).map(|a| (0..=2).map(|p| cal.theta(a, p).unwrap().clone()).collect()).collect();
        let syn = Calibration::from_parts(sf.solution.clone(), sf.conformal.clone(), theta, r).unwrap();
        let lm1 = build_virasoro(&syn, -1, 4).unwrap();
        let l0 = build_virasoro(&syn, 0, 4).unwrap();
        assert!(!l0.c2.is_empty());
        assert_eq!(check_commutator(&lm1, &l0, 2).unwrap(), vec![]);
        // an even-index R that is not η-antisymmetric breaks the relation
        let mut r = syn.r_matrices().to_vec();
        r[1][2][0] = int(5);
        let theta: Vec<Vec<_>> = (0..3).map(|a| (0..=2).map(|p| cal.theta(a, p).unwrap().clone()).collect()).collect();
        let bad = Calibration::from_parts(sf.solution, sf.conformal, theta, r).unwrap();
        let l0_bad = build_virasoro(&bad, 0, 4).unwrap();
        assert!(!check_commutator(&lm1, &l0_bad, 1).unwrap().is_empty());
    }

    #[test]
    fn constraints_on_a2_tau() {
        let cal = a2_cal(6);
        let om = cal.omega_table().unwrap();
        let cfg = TimeConfiguration::topological()
            .with_time((0, 0), 0.3)
            .with_time((1, 0), 0.1)
            .with_time((1, 1), 0.05);
        let sol = hodograph_solve(&cal, &cfg, &[0.3, 0.1]).unwrap();
        let lm1 = build_virasoro(&cal, -1, 6).unwrap();
        let l0 = build_virasoro(&cal, 0, 6).unwrap();
        assert!(constraint_residual(&lm1, &om, &cfg, &sol.v).unwrap() <= 1e-9);
        assert!(constraint_residual(&l0, &om, &cfg, &sol.v).unwrap() <= 1e-9);
        // the constant term would leave exactly c0 behind
        let with_c0 = constraint_residual(&l0, &om, &cfg, &sol.v).unwrap() + scalar_to_f64(&l0.c0);
        assert!((with_c0 - 1.0 / 9.0).abs() < 1e-9);
        // perturbed derivative data
        let off = constraint_value(&l0, &cfg, &|s| Ok(dlogtau(&om, &cfg, &sol.v, s)? + 0.01)).unwrap();
        assert!(off.abs() >= 1e-3);

        let hat = transform_calibration(&cal).unwrap();
        let om_hat = hat.omega_table().unwrap();
        let pt = hatted_point(&cal, &cfg, &[0.3, 0.1]).unwrap();
        let lm1_hat = build_virasoro(&hat, -1, 5).unwrap();
        let l0_hat = build_virasoro(&hat, 0, 5).unwrap();
        assert!(constraint_residual(&lm1_hat, &om_hat, &pt.config_hat, &pt.v_hat).unwrap() <= 1e-9);
        assert!(constraint_residual(&l0_hat, &om_hat, &pt.config_hat, &pt.v_hat).unwrap() <= 1e-9);
        // unhatted L_0 on the hatted tau; at v2 = 0.1 the hatted point sits at v̂2 = −10
        // where the mismatch is tiny, so use v2 = 0.5
        let far = TimeConfiguration::topological().with_time((0, 0), 0.3).with_time((1, 0), 0.5);
        let pt = hatted_point(&cal, &far, &[0.3, 0.5]).unwrap();
        let wrong = build_virasoro(&cal, 0, 5).unwrap();
        assert!(constraint_residual(&wrong, &om_hat, &pt.config_hat, &pt.v_hat).unwrap() >= 1e-3);
        assert!(constraint_residual(&l0_hat, &om_hat, &pt.config_hat, &pt.v_hat).unwrap() <= 1e-9);
    }
}
