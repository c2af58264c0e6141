//! End-to-end verification runs: every check on one solution, grouped in stages.

use std::collections::BTreeMap;

use crate::algebra::{int, JetExpression, JetSpace, Scalar};
use crate::calibration::{build_calibration, check_calibration, transform_calibration, Calibration, OmegaTable};
use crate::error::{Error, Result};
use crate::frobenius::{
    check_conformal, check_hessian_identity, infer_spectrum, nonlocal_charge, ConformalData, WdvvSolution,
};
use crate::genus::{check_det_identity, check_g1, expand_with, g2_formula};
use crate::hierarchy::{check_tau_def, dlogtau, hodograph_solve, Slot, TimeConfiguration};
use crate::inversion::{check_metric_covariance, invert_solution, inversion_map, same_third_derivatives, transform_conformal};
use crate::io::SolutionFile;
use crate::report::{CheckResult, RunReport};
use crate::symmetry::{check_omega_relation, check_hatted_el, flow_correspondence_residual, hatted_point, legendre_check, required_level};
use crate::virasoro::{build_virasoro, check_commutator, constraint_residual, constraint_value};

/// Numeric tolerances, addressable by name.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub values: BTreeMap<&'static str, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        let values = [
            ("identity", 1e-14),
            ("tau-def", 1e-6),
            ("richardson", 3.5),
            ("hatted-el", 1e-9),
            ("legendre", 1e-8),
            ("round-trip", 1e-9),
            ("virasoro", 1e-9),
            ("control", 1e-3),
            ("min-vn", 0.05),
        ]
        .into_iter()
        .collect();
        Tolerances { values }
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.values[name]
    }

    /// Override one tolerance; unknown names are rejected.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match self.values.get_mut(name) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(Error::parse(format!(
                "unknown tolerance `{name}` (known: {})",
                self.values.keys().copied().collect::<Vec<_>>().join(", ")
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Calibration level for the exact checks.
    pub level: usize,
    /// Base points `v = t^{·,0}`; empty means [`default_point`].
    pub points: Vec<Vec<f64>>,
    pub tol: Tolerances,
    /// Finite-difference step of the tau check.
    pub h: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            level: 4,
            points: Vec::new(),
            tol: Tolerances::default(),
            h: 1e-3,
        }
    }
}

pub fn default_point(n: usize) -> Vec<f64> {
    match n {
        2 => vec![0.3, 0.1],
        3 => vec![0.2, 0.1, 0.3],
        _ => (0..n).map(|a| if a + 1 == n { 0.3 } else { 0.1 * (a + 1) as f64 }).collect(),
    }
}

/// `v = t^{·,0}` at the topological point.
pub fn base_config(point: &[f64]) -> TimeConfiguration {
    point
        .iter()
        .enumerate()
        .fold(TimeConfiguration::topological(), |c, (a, &t)| c.with_time((a, 0), t))
}

/// Three configurations through a base point: trivial, with `t^{1,1}`, and with
/// `t^{2,1}` (`t^{n,1}` when `n = 2`).
pub fn sample_configs(point: &[f64]) -> Vec<TimeConfiguration> {
    let n = point.len();
    let base = base_config(point);
    let second = if n >= 3 { 1 } else { n - 1 };
    vec![
        base.clone(),
        base.clone().with_time((0, 1), 0.05),
        base.with_time((second, 1), 0.05),
    ]
}

fn slot_name(s: Slot) -> String {
    format!("t{},{}", s.0 + 1, s.1)
}

fn first<T: std::fmt::Debug>(items: &[T]) -> String {
    items.first().map(|x| format!("first: {x:?}")).unwrap_or_default()
}

pub fn check_solution(sol: &WdvvSolution, cd: Option<&ConformalData>) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let res = sol.check_wdvv();
    let detail = res
        .first()
        .map(|r| {
            let [a, b, c, d] = r.indices.map(|i| i + 1);
            format!("violated at (alpha,beta,gamma,nu) = ({a},{b},{c},{d})")
        })
        .unwrap_or_default();
    out.push(CheckResult::symbolic("wdvv", "associativity", res.len(), detail));
    match cd {
        None => out.push(CheckResult::skipped("conformal", "euler-homogeneity", "no conformal data")),
        Some(cd) => {
            match check_conformal(sol, cd) {
                Ok(r) => out.push(CheckResult::symbolic(
                    "conformal",
                    "euler-homogeneity",
                    usize::from(!r.is_zero()),
                    if r.is_zero() { String::new() } else { format!("E(F) - (3-d)F - quadratic = {r}") },
                )),
                Err(e) => out.push(CheckResult::error("conformal", "euler-homogeneity", e)),
            }
            let v = cd.normalization_violations();
            out.push(CheckResult::symbolic("conformal", "normalization", v.len(), v.join("; ")));
        }
    }
    out
}

pub fn check_inversion(sol: &WdvvSolution, cd: Option<&ConformalData>) -> Vec<CheckResult> {
    let stage = "inversion";
    let mut out = Vec::new();
    let hat = match invert_solution(sol) {
        Ok(h) => h,
        Err(e) => return vec![CheckResult::error(stage, "invert", e)],
    };
    out.push(CheckResult::symbolic(stage, "wdvv-of-inverse", hat.check_wdvv().len(), ""));
    match inversion_map(sol.n()).and_then(|m| m.is_involutive()) {
        Ok(ok) => out.push(CheckResult::symbolic(stage, "map-involutive", usize::from(!ok), "")),
        Err(e) => out.push(CheckResult::error(stage, "map-involutive", e)),
    }
    match invert_solution(&hat) {
        Ok(back) => out.push(CheckResult::symbolic(
            stage,
            "double-inversion",
            usize::from(!same_third_derivatives(sol, &back)),
            "compared through third derivatives",
        )),
        Err(e) => out.push(CheckResult::error(stage, "double-inversion", e)),
    }
    let cd_hat = cd.map(transform_conformal);
    if let (Some(cd), Some(cd_hat)) = (cd, cd_hat.as_ref()) {
        match infer_spectrum(&hat) {
            Ok(s) => {
                let ok = s.d == cd_hat.d && s.mu == cd_hat.mu;
                let detail = format!(
                    "d = {} -> {}, mu = {} -> {}",
                    cd.d,
                    s.d,
                    fmt_list(&cd.mu),
                    fmt_list(&s.mu)
                );
                out.push(CheckResult::symbolic(stage, "spectrum", usize::from(!ok), detail));
            }
            Err(e) => out.push(CheckResult::error(stage, "spectrum", e)),
        }
        match check_hessian_identity(sol, cd) {
            Ok(m) => out.push(CheckResult::symbolic(stage, "hessian-identity", m.nonzero_entries().count(), "")),
            Err(e) => out.push(CheckResult::error(stage, "hessian-identity", e)),
        }
        let q = nonlocal_charge(sol, cd);
        out.push(CheckResult::symbolic(stage, "nonlocal-charge", usize::from(!q.is_zero()), ""));
    }
    match check_metric_covariance(sol, &hat, cd.zip(cd_hat.as_ref())) {
        Ok(c) => {
            out.push(CheckResult::symbolic(stage, "eta-covariance", c.eta.nonzero_entries().count(), ""));
            match c.g {
                Some(g) => out.push(CheckResult::symbolic(stage, "g-covariance", g.nonzero_entries().count(), "")),
                None => out.push(CheckResult::skipped(stage, "g-covariance", "no conformal data")),
            }
        }
        Err(e) => out.push(CheckResult::error(stage, "eta-covariance", e)),
    }
    out
}

fn fmt_list(v: &[Scalar]) -> String {
    let items: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("[{}]", items.join(", "))
}

/// Calibration axioms and `Ω` table consistency for an already built calibration.
pub fn check_calibration_stage(stage: &str, cal: &Calibration) -> (Vec<CheckResult>, Option<OmegaTable>) {
    let mut out = Vec::new();
    let issues = check_calibration(cal);
    let detail = issues.first().map(ToString::to_string).unwrap_or_default();
    out.push(CheckResult::symbolic(stage, &format!("axioms@P={}", cal.level()), issues.len(), detail));
    let om = match cal.omega_table() {
        Ok(om) => om,
        Err(e) => {
            out.push(CheckResult::error(stage, "omega", e));
            return (out, None);
        }
    };
    let sym = om.symmetry_violations();
    out.push(CheckResult::symbolic(stage, "omega-symmetry", sym.len(), first(&sym)));
    let der = om.derivative_violations(cal, &cal.solution().structure_constants());
    out.push(CheckResult::symbolic(stage, "omega-derivative", der.len(), first(&der)));
    let mut bad = Vec::new();
    for b in 0..cal.n() {
        for q in 0..om.level() {
            if let (Some(o), Some(t)) = (om.get(0, 0, b, q), cal.theta(b, q)) {
                if o != t {
                    bad.push((b + 1, q));
                }
            }
        }
    }
    out.push(CheckResult::symbolic(stage, "omega-first-row", bad.len(), first(&bad)));
    (out, Some(om))
}

pub fn check_transform_stage(cal: &Calibration, om: &OmegaTable) -> Vec<CheckResult> {
    let stage = "transform";
    let hat = match transform_calibration(cal) {
        Ok(h) => h,
        Err(e) => return vec![CheckResult::error(stage, "transform", e)],
    };
    let (mut out, om_hat) = check_calibration_stage(stage, &hat);
    if let Some(om_hat) = om_hat {
        match check_omega_relation(cal, om, &om_hat) {
            Ok(r) => out.push(CheckResult::symbolic(stage, "omega-relation", r.failures.len(), format!("{} entries", r.checked))),
            Err(e) => out.push(CheckResult::error(stage, "omega-relation", e)),
        }
    }
    let mut bad = Vec::new();
    let top = hat.level().saturating_sub(1).min(1);
    for a in 0..cal.n() {
        for p in 0..=top {
            match flow_correspondence_residual(cal, &hat, (a, p)) {
                Ok(m) if m.is_zero() => {}
                Ok(_) => bad.push(slot_name((a, p))),
                Err(e) => return [out, vec![CheckResult::error(stage, "flows", e)]].concat(),
            }
        }
    }
    out.push(CheckResult::symbolic(stage, "flows", bad.len(), bad.join(" ")));
    out
}

/// Calibrations on both sides at a level that covers every configuration.
pub struct NumericSides {
    pub cal: Calibration,
    pub om: OmegaTable,
    pub hat: Calibration,
    pub om_hat: OmegaTable,
}

pub fn numeric_sides(sol: &WdvvSolution, cd: Option<&ConformalData>, configs: &[TimeConfiguration], min_level: usize) -> Result<NumericSides> {
    let n = sol.n();
    let level = configs.iter().map(|c| required_level(c, n)).fold(min_level, usize::max);
    let cal = build_calibration(sol, cd, level)?;
    let hat = transform_calibration(&cal)?;
    Ok(NumericSides {
        om: cal.omega_table()?,
        om_hat: hat.omega_table()?,
        cal,
        hat,
    })
}

fn tagged(name: &str, tag: &str) -> String {
    if tag.is_empty() {
        name.to_string()
    } else {
        format!("{name}@{tag}")
    }
}

pub fn check_hodograph_stage(s: &NumericSides, point: &[f64], tol: &Tolerances, h: f64, tag: &str) -> Vec<CheckResult> {
    let stage = "hodograph";
    let mut out = Vec::new();
    let base = base_config(point);
    let guess: Vec<f64> = point.iter().map(|x| x + 0.05).collect();
    match hodograph_solve(&s.cal, &base, &guess) {
        Ok(sol) => {
            let dev = sol.v.iter().zip(point).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            out.push(CheckResult::at_most(stage, &tagged("trivial-identity", tag), dev, tol.get("identity")));
        }
        Err(e) => out.push(CheckResult::error(stage, &tagged("trivial-identity", tag), e)),
    }
    let cfgs = sample_configs(point);
    for (i, cfg) in cfgs[..2].iter().enumerate() {
        let name = tagged(&format!("tau-def#{}", i + 1), tag);
        match check_tau_def(&s.cal, &s.om, cfg, point, h) {
            Ok(r) => {
                out.push(
                    CheckResult::at_most(stage, &name, r.deviation, tol.get("tau-def"))
                        .with_detail(format!("h = {:e}, {} pairs", r.h, r.pairs)),
                );
                out.push(CheckResult::at_least(stage, &tagged(&format!("richardson#{}", i + 1), tag), r.richardson, tol.get("richardson")));
            }
            Err(e) => out.push(CheckResult::error(stage, &name, e)),
        }
    }
    out
}

pub fn check_symmetry_stage(s: &NumericSides, point: &[f64], tol: &Tolerances, tag: &str) -> Vec<CheckResult> {
    let stage = "symmetry";
    let mut out = Vec::new();
    for (i, cfg) in sample_configs(point).iter().enumerate() {
        let k = i + 1;
        let sol = match hodograph_solve(&s.cal, cfg, point) {
            Ok(sol) => sol,
            Err(e) => {
                out.push(CheckResult::error(stage, &tagged(&format!("config#{k}"), tag), e));
                continue;
            }
        };
        let vn = sol.v[s.cal.n() - 1].abs();
        out.push(CheckResult::at_least(stage, &tagged(&format!("|v^n|#{k}"), tag), vn, tol.get("min-vn")));
        match check_hatted_el(&s.cal, &s.hat, cfg, point) {
            Ok(r) => out.push(CheckResult::at_most(stage, &tagged(&format!("hatted-el#{k}"), tag), r, tol.get("hatted-el"))),
            Err(e) => out.push(CheckResult::error(stage, &tagged(&format!("hatted-el#{k}"), tag), e)),
        }
        match legendre_check(&s.cal, &s.om, &s.hat, &s.om_hat, cfg, point) {
            Ok(l) => {
                out.push(CheckResult::at_most(stage, &tagged(&format!("legendre#{k}"), tag), l.two_sided(), tol.get("legendre")));
                out.push(CheckResult::at_most(stage, &tagged(&format!("round-trip#{k}"), tag), l.round_trip(), tol.get("round-trip")));
            }
            Err(e) => out.push(CheckResult::error(stage, &tagged(&format!("legendre#{k}"), tag), e)),
        }
    }
    out
}

/// Exact commutator relation for the operators of a calibration.
pub fn check_virasoro_algebra(cal: &Calibration) -> CheckResult {
    let stage = "virasoro";
    let level = cal.level();
    let test_level = level.saturating_sub(2).min(2);
    let run = || -> Result<usize> {
        let lm1 = build_virasoro(cal, -1, level)?;
        let l0 = build_virasoro(cal, 0, level)?;
        Ok(check_commutator(&lm1, &l0, test_level)?.len())
    };
    match run() {
        Ok(bad) => CheckResult::symbolic(stage, "commutator", bad, format!("monomials through level {test_level}")),
        Err(e) => CheckResult::error(stage, "commutator", e),
    }
}

pub fn check_virasoro_stage(s: &NumericSides, point: &[f64], tol: &Tolerances, tag: &str) -> Vec<CheckResult> {
    let stage = "virasoro";
    let mut out = Vec::new();
    let cfg = &sample_configs(point)[1];
    let run = |out: &mut Vec<CheckResult>| -> Result<()> {
        let sol = hodograph_solve(&s.cal, cfg, point)?;
        let pt = hatted_point(&s.cal, cfg, point)?;
        for m in [-1, 0] {
            let l = build_virasoro(&s.cal, m, s.cal.level())?;
            let r = constraint_residual(&l, &s.om, cfg, &sol.v)?;
            out.push(CheckResult::at_most(stage, &tagged(&format!("L{m}"), tag), r, tol.get("virasoro")));
            let lh = build_virasoro(&s.hat, m, s.hat.level())?;
            let r = constraint_residual(&lh, &s.om_hat, &pt.config_hat, &pt.v_hat)?;
            out.push(CheckResult::at_most(stage, &tagged(&format!("L{m}-hatted"), tag), r, tol.get("virasoro")));
            if m == 0 {
                let off = constraint_value(&l, cfg, &|sl| Ok(dlogtau(&s.om, cfg, &sol.v, sl)? + 0.01))?;
                out.push(
                    CheckResult::at_least(stage, &tagged("control-perturbed", tag), off.abs(), tol.get("control"))
                        .with_detail("derivatives of log tau shifted by 0.01"),
                );
            }
        }
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        out.push(CheckResult::error(stage, &tagged("constraints", tag), e));
    }
    out
}

/// Determinant identity, genus-one law, second-order expansion and `𝒢_2` at constant `ŵ`,
/// with `G` supplied by the caller.
pub fn check_genus_stage(sol: &WdvvSolution, g: &JetExpression) -> Vec<CheckResult> {
    let stage = "genus";
    let n = sol.n();
    let mut out = Vec::new();
    match inversion_map(n).and_then(|m| check_det_identity(sol, &m)) {
        Ok(r) => out.push(CheckResult::symbolic(stage, "det-identity", usize::from(!r.is_zero()), "")),
        Err(e) => out.push(CheckResult::error(stage, "det-identity", e)),
    }
    match check_g1(sol, g) {
        Ok(r) => out.push(CheckResult::symbolic(
            stage,
            "genus-one-law",
            usize::from(!r.is_zero()),
            "D_x (F~1 - F^1 - G1) at dispersionless order",
        )),
        Err(e) => out.push(CheckResult::error(stage, "genus-one-law", e)),
    }
    out.push(match expansion_closed_form() {
        Ok(ok) => CheckResult::symbolic(stage, "expansion-genus-two", usize::from(!ok), ""),
        Err(e) => CheckResult::error(stage, "expansion-genus-two", e),
    });
    let g2 = g2_formula(n);
    let s = JetSpace::new(n);
    let mut b: Vec<_> = (0..3 * n).map(crate::algebra::RationalFunction::var).collect();
    b[s.index(n - 1, 1)] = crate::algebra::RationalFunction::zero();
    b[s.index(n - 1, 2)] = crate::algebra::RationalFunction::zero();
    out.push(match g2.substitute(&b) {
        Ok(r) => CheckResult::symbolic(stage, "G2-constant", usize::from(!r.is_zero()), ""),
        Err(e) => CheckResult::error(stage, "G2-constant", e),
    });
    out
}

/// `F̃_1 = F_1` and `F̃_2 = F_2 − (∂_x F_1)²/(2v^n)` on generic symbols.
fn expansion_closed_form() -> Result<bool> {
    let s = JetSpace::new(3);
    let f = [s.jet(1, 0), s.jet(2, 0)];
    let out = expand_with(&f, &s.jet(0, 0), &|e| e.total_derivative(&s), 2)?;
    let f1x = s.var(1, 1);
    let expected = &s.var(2, 0) - &(&f1x * &f1x).checked_div(&s.var(0, 0).scale(&int(2)))?;
    Ok(out[0] == f[0] && out[1].to_rational()? == expected)
}

/// Run every stage on one solution.
pub fn verify_all(sf: &SolutionFile, g: &JetExpression, opts: &VerifyOptions, command: &str) -> RunReport {
    let mut report = RunReport::new(command);
    let sol = &sf.solution;
    let cd = sf.conformal.as_ref();
    report.extend(check_solution(sol, cd));
    if cd.is_none() {
        report.push(CheckResult::error("conformal", "required", "verify-all needs conformal data (d, mu)"));
        return report;
    }
    report.extend(check_inversion(sol, cd));

    match build_calibration(sol, cd, opts.level) {
        Ok(cal) => {
            let (checks, om) = check_calibration_stage("calibration", &cal);
            report.extend(checks);
            if let Some(om) = om {
                report.extend(check_transform_stage(&cal, &om));
            }
        }
        Err(e) => report.push(CheckResult::error("calibration", "build", e)),
    }

    let points = if opts.points.is_empty() {
        vec![default_point(sol.n())]
    } else {
        opts.points.clone()
    };
    for (i, p) in points.iter().enumerate() {
        if p.len() != sol.n() {
            report.push(CheckResult::error("hodograph", "point", Error::InvalidDimension(p.len())));
            continue;
        }
        let tag = if points.len() > 1 { format!("p{}", i + 1) } else { String::new() };
        match numeric_sides(sol, cd, &sample_configs(p), opts.level) {
            Ok(s) => {
                report.extend(check_hodograph_stage(&s, p, &opts.tol, opts.h, &tag));
                report.extend(check_symmetry_stage(&s, p, &opts.tol, &tag));
                if i == 0 {
                    report.push(check_virasoro_algebra(&s.cal));
                }
                report.extend(check_virasoro_stage(&s, p, &opts.tol, &tag));
            }
            Err(e) => report.push(CheckResult::error("hodograph", &tagged("calibration", &tag), e)),
        }
    }
    report.extend(check_genus_stage(sol, g));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn a2_passes_end_to_end() {
        let sf = catalog::a2();
        let r = verify_all(&sf, &JetExpression::zero(), &VerifyOptions::default(), "verify-all a2");
        let bad: Vec<_> = r.failures().collect();
        assert!(bad.is_empty(), "{}", r.to_text());
        assert_eq!(r.to_text(), verify_all(&sf, &JetExpression::zero(), &VerifyOptions::default(), "verify-all a2").to_text());
    }

    #[test]
    fn tolerance_names() {
        let mut t = Tolerances::default();
        t.set("hatted-el", 1e-6).unwrap();
        assert_eq!(t.get("hatted-el"), 1e-6);
        assert!(t.set("nope", 1.0).is_err());
    }
}
