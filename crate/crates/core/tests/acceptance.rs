//! Acceptance run: one line per criterion, then a hard assertion.
//!
//! `cargo test -p wdvv --test acceptance -- --nocapture` shows the table.

use std::time::{Duration, Instant};

use wdvv::algebra::parse::parse_rational;
use wdvv::algebra::{int, JetExpression, JetSpace, RationalFunction};
use wdvv::calibration::{build_calibration, check_calibration, transform_calibration};
use wdvv::catalog;
use wdvv::frobenius::{check_hessian_identity, infer_spectrum, nonlocal_charge};
use wdvv::genus::{check_det_identity, check_g1, g2_formula, genus1, legendre_expand, GenusSeries};
use wdvv::hierarchy::{check_tau_def, dlogtau, hodograph_solve};
use wdvv::inversion::{check_metric_covariance, invert_solution, inversion_map, same_third_derivatives, transform_conformal};
use wdvv::io::SolutionFile;
use wdvv::symmetry::{check_hatted_el, hatted_point, legendre_check};
use wdvv::verify::{base_config, default_point, numeric_sides, sample_configs, verify_all, VerifyOptions};
use wdvv::virasoro::{build_virasoro, check_commutator, constraint_residual, constraint_value};

const IDENTITY_TOL: f64 = 1e-14;
const TAU_DEF_TOL: f64 = 1e-6;
const TAU_DEF_H: f64 = 1e-3;
const RICHARDSON_MIN: f64 = 3.5;
const LEGENDRE_TOL: f64 = 1e-8;
const HATTED_EL_TOL: f64 = 1e-9;
const MIN_VN: f64 = 0.05;
const VIRASORO_TOL: f64 = 1e-9;
const CONTROL_MIN: f64 = 1e-3;
const PER_EXAMPLE_LIMIT: Duration = Duration::from_secs(60);
const A2_VERIFY_LIMIT: Duration = Duration::from_secs(60);
const A3_VERIFY_LIMIT: Duration = Duration::from_secs(600);

type Outcome = Result<String, String>;

fn examples() -> Vec<(&'static str, SolutionFile)> {
    catalog::examples()
        .into_iter()
        .map(|(name, text)| (name, catalog::load(text).unwrap()))
        .collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn wdvv_closure() -> Outcome {
    let mut slowest = Duration::ZERO;
    for (name, sf) in examples() {
        let start = Instant::now();
        let bad = sf.solution.check_wdvv().len();
        ensure(bad == 0, || format!("{name}: {bad} WDVV residuals"))?;
        let hat = invert_solution(&sf.solution).map_err(|e| format!("{name}: {e}"))?;
        let bad = hat.check_wdvv().len();
        ensure(bad == 0, || format!("{name}: {bad} WDVV residuals after inversion"))?;
        let t = start.elapsed();
        ensure(t <= PER_EXAMPLE_LIMIT, || format!("{name}: {t:?}"))?;
        slowest = slowest.max(t);
    }
    Ok(format!("5 examples, slowest {slowest:.2?}"))
}

fn a2_closed_form() -> Outcome {
    let sol = catalog::a2().solution;
    let hat = invert_solution(&sol).map_err(|e| e.to_string())?;
    // By hand for n = 2: v̂1 = v1, v̂2 = -1/v2, and
    // (F - v1^2 v2)/v2^2 = -v1^2/(2 v2) + v2^2/72; put v2 = -1/v̂2.
    let by_hand = parse_rational("-1/2*v1^2/v2 + 1/72*v2^2", 2)
        .unwrap()
        .substitute(&[RationalFunction::var(0), parse_rational("-1/v2", 2).unwrap()])
        .unwrap();
    let stated = parse_rational("1/2*v1^2*v2 + 1/(72*v2^2)", 2).unwrap();
    ensure(by_hand == stated, || format!("hand substitution gave {by_hand}"))?;
    ensure(*hat.prepotential() == stated, || format!("inverted prepotential is {}", hat.prepotential()))?;
    Ok(format!("F^ = {stated}"))
}

fn spectrum_law() -> Outcome {
    for (name, sf) in examples() {
        let cd = sf.conformal.as_ref().unwrap();
        let n = cd.mu.len();
        let hat = invert_solution(&sf.solution).map_err(|e| e.to_string())?;
        let got = infer_spectrum(&hat).map_err(|e| format!("{name}: {e}"))?;
        let mut mu = cd.mu.clone();
        mu[0] = &cd.mu[n - 1] - int(1);
        mu[n - 1] = &cd.mu[0] + int(1);
        let d = int(2) - &cd.d;
        ensure(got.d == d && got.mu == mu, || format!("{name}: got d = {}, mu = {:?}", got.d, got.mu))?;
    }
    Ok("d^ = 2 - d, mu^_1 = mu_n - 1, mu^_n = mu_1 + 1".into())
}

fn calibration_axioms() -> Outcome {
    for (name, sf) in examples() {
        let cal = build_calibration(&sf.solution, sf.conformal.as_ref(), 4).map_err(|e| format!("{name}: {e}"))?;
        let issues = check_calibration(&cal);
        ensure(issues.is_empty(), || format!("{name}: {}", issues[0]))?;
        let hat = transform_calibration(&cal).map_err(|e| format!("{name}: {e}"))?;
        ensure(hat.level() == 3, || format!("{name}: transformed level {}", hat.level()))?;
        let inverted = invert_solution(&sf.solution).unwrap();
        ensure(same_third_derivatives(hat.solution(), &inverted), || format!("{name}: transformed calibration is not over F^"))?;
        let issues = check_calibration(&hat);
        ensure(issues.is_empty(), || format!("{name} (hatted): {}", issues[0]))?;
    }
    Ok("P = 4 and transformed P = 3".into())
}

fn omega_consistency() -> Outcome {
    let mut entries = 0;
    for (name, sf) in examples() {
        let cal = build_calibration(&sf.solution, sf.conformal.as_ref(), 4).unwrap();
        let om = cal.omega_table().map_err(|e| format!("{name}: {e}"))?;
        entries += om.len();
        let sym = om.symmetry_violations();
        ensure(sym.is_empty(), || format!("{name}: symmetry fails at {:?}", sym[0]))?;
        let der = om.derivative_violations(&cal, &cal.solution().structure_constants());
        ensure(der.is_empty(), || format!("{name}: derivative relation fails at {:?}", der[0]))?;
        for b in 0..cal.n() {
            for q in 0..om.level() {
                if let Some(o) = om.get(0, 0, b, q) {
                    ensure(Some(o) == cal.theta(b, q), || format!("{name}: Omega(1,0;{},{q}) != theta", b + 1))?;
                }
            }
        }
    }
    Ok(format!("{entries} table entries"))
}

fn hodograph_and_tau() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, f64::INFINITY);
    for (name, sf) in examples() {
        let n = sf.solution.n();
        let point = default_point(n);
        let cal = build_calibration(&sf.solution, sf.conformal.as_ref(), 4).unwrap();
        let om = cal.omega_table().unwrap();
        let guess: Vec<f64> = point.iter().map(|x| x + 0.05).collect();
        let sol = hodograph_solve(&cal, &base_config(&point), &guess).map_err(|e| format!("{name}: {e}"))?;
        let dev = sol.v.iter().zip(&point).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(dev <= IDENTITY_TOL, || format!("{name}: trivial solution off by {dev:e}"))?;
        worst.0 = worst.0.max(dev);
        for cfg in &sample_configs(&point)[..2] {
            let r = check_tau_def(&cal, &om, cfg, &point, TAU_DEF_H).map_err(|e| format!("{name}: {e}"))?;
            ensure(r.deviation <= TAU_DEF_TOL, || format!("{name}: tau-def deviation {:e}", r.deviation))?;
            ensure(r.richardson >= RICHARDSON_MIN, || format!("{name}: Richardson ratio {}", r.richardson))?;
            worst.1 = worst.1.max(r.deviation);
            worst.2 = worst.2.min(r.richardson);
        }
    }
    Ok(format!("identity {:.1e}, tau-def {:.1e}, min ratio {:.2}", worst.0, worst.1, worst.2))
}

fn legendre_and_hatted_el() -> Outcome {
    let (mut leg, mut el) = (0.0f64, 0.0f64);
    for (name, sf) in examples() {
        let n = sf.solution.n();
        let point = default_point(n);
        let configs = sample_configs(&point);
        let s = numeric_sides(&sf.solution, sf.conformal.as_ref(), &configs, 4).map_err(|e| format!("{name}: {e}"))?;
        let mut distinct = 0;
        for cfg in &configs {
            let sol = hodograph_solve(&s.cal, cfg, &point).map_err(|e| format!("{name}: {e}"))?;
            let vn = sol.v[n - 1].abs();
            ensure(vn >= MIN_VN, || format!("{name}: |v^n| = {vn}"))?;
            let l = legendre_check(&s.cal, &s.om, &s.hat, &s.om_hat, cfg, &point).map_err(|e| format!("{name}: {e}"))?;
            ensure(l.two_sided() <= LEGENDRE_TOL, || format!("{name}: tau mismatch {:e}", l.two_sided()))?;
            let r = check_hatted_el(&s.cal, &s.hat, cfg, &point).map_err(|e| format!("{name}: {e}"))?;
            ensure(r <= HATTED_EL_TOL, || format!("{name}: hatted EL residual {r:e}"))?;
            leg = leg.max(l.two_sided());
            el = el.max(r);
            distinct += 1;
        }
        ensure(distinct >= 3, || format!("{name}: only {distinct} configurations"))?;
    }
    Ok(format!("legendre {leg:.1e}, hatted EL {el:.1e}, 3 configs each"))
}

fn proof_identities() -> Outcome {
    for (name, sf) in examples() {
        let cd = sf.conformal.as_ref().unwrap();
        let h = check_hessian_identity(&sf.solution, cd).map_err(|e| format!("{name}: {e}"))?;
        ensure(h.is_zero(), || format!("{name}: Hessian identity"))?;
        ensure(nonlocal_charge(&sf.solution, cd).is_zero(), || format!("{name}: nonlocal charge"))?;
        let hat = invert_solution(&sf.solution).unwrap();
        let cd_hat = transform_conformal(cd);
        let cov = check_metric_covariance(&sf.solution, &hat, Some((cd, &cd_hat))).map_err(|e| format!("{name}: {e}"))?;
        ensure(cov.eta.is_zero(), || format!("{name}: eta covariance"))?;
        ensure(cov.g.as_ref().is_some_and(|g| g.is_zero()), || format!("{name}: g covariance"))?;
    }
    Ok("Hessian, charge, eta and g covariance exact".into())
}

fn virasoro() -> Outcome {
    let mut worst = 0.0f64;
    for (name, sf) in examples() {
        let point = default_point(sf.solution.n());
        let configs = sample_configs(&point);
        let s = numeric_sides(&sf.solution, sf.conformal.as_ref(), &configs, 4).map_err(|e| format!("{name}: {e}"))?;
        for cfg in &configs {
            let sol = hodograph_solve(&s.cal, cfg, &point).map_err(|e| e.to_string())?;
            let pt = hatted_point(&s.cal, cfg, &point).map_err(|e| e.to_string())?;
            for m in [-1, 0] {
                let l = build_virasoro(&s.cal, m, s.cal.level()).unwrap();
                let r = constraint_residual(&l, &s.om, cfg, &sol.v).map_err(|e| e.to_string())?;
                let lh = build_virasoro(&s.hat, m, s.hat.level()).unwrap();
                let rh = constraint_residual(&lh, &s.om_hat, &pt.config_hat, &pt.v_hat).map_err(|e| e.to_string())?;
                ensure(r.max(rh) <= VIRASORO_TOL, || format!("{name}: L{m} residuals {r:e}, {rh:e}"))?;
                worst = worst.max(r).max(rh);
            }
        }
        let cal = build_calibration(&sf.solution, sf.conformal.as_ref(), 4).unwrap();
        let lm1 = build_virasoro(&cal, -1, 4).unwrap();
        let l0 = build_virasoro(&cal, 0, 4).unwrap();
        let bad = check_commutator(&lm1, &l0, 2).map_err(|e| e.to_string())?;
        ensure(bad.is_empty(), || format!("{name}: commutator fails on {}", bad[0].0))?;
    }

    // negative controls on A2
    let sf = catalog::a2();
    let point = [0.3, 0.5];
    let configs = sample_configs(&point);
    let s = numeric_sides(&sf.solution, sf.conformal.as_ref(), &configs, 4).unwrap();
    let cfg = &configs[1];
    let sol = hodograph_solve(&s.cal, cfg, &point).unwrap();
    let l0 = build_virasoro(&s.cal, 0, s.cal.level()).unwrap();
    let shifted = constraint_value(&l0, cfg, &|sl| Ok(dlogtau(&s.om, cfg, &sol.v, sl)? + 0.01))
        .unwrap()
        .abs();
    ensure(shifted >= CONTROL_MIN, || format!("perturbed control only {shifted:e}"))?;
    let pt = hatted_point(&s.cal, cfg, &point).unwrap();
    let l0_wrong = build_virasoro(&s.cal, 0, s.hat.level()).unwrap();
    let crossed = constraint_residual(&l0_wrong, &s.om_hat, &pt.config_hat, &pt.v_hat).map_err(|e| e.to_string())?;
    ensure(crossed >= CONTROL_MIN, || format!("unhatted L0 on hatted tau only {crossed:e}"))?;
    Ok(format!("max residual {worst:.1e}, controls {shifted:.1e} and {crossed:.1e}"))
}

fn genus_expansion() -> Outcome {
    for (name, sf) in examples() {
        let n = sf.solution.n();
        let r = check_det_identity(&sf.solution, &inversion_map(n).unwrap()).map_err(|e| format!("{name}: {e}"))?;
        ensure(r.is_zero(), || format!("{name}: det identity leaves {r}"))?;
        let r = check_g1(&sf.solution, &JetExpression::zero()).map_err(|e| format!("{name}: {e}"))?;
        ensure(r.is_zero(), || format!("{name}: genus-one law leaves {r}"))?;

        // constant w: every jet of order >= 1 vanishes
        let s = JetSpace::new(n);
        let mut b: Vec<RationalFunction> = (0..3 * n).map(RationalFunction::var).collect();
        b[s.index(n - 1, 1)] = RationalFunction::zero();
        b[s.index(n - 1, 2)] = RationalFunction::zero();
        let g2 = g2_formula(n).substitute(&b).map_err(|e| e.to_string())?;
        ensure(g2.is_zero(), || format!("{name}: G2 at constant w is {g2}"))?;
    }

    // second order on A2 data with an arbitrary F2
    let sf = catalog::a2();
    let s = JetSpace::new(2);
    let f1 = genus1(&sf.solution, &JetExpression::zero()).unwrap();
    let f2 = s.jet(0, 2).mul(&s.jet(1, 0)).add(&s.jet(1, 1).pow(3).unwrap());
    let out = legendre_expand(&GenusSeries::new(vec![f1.clone(), f2.clone()]), &s, 2).map_err(|e| e.to_string())?;
    let f1x = f1.total_derivative(&s);
    let expected = f2.sub(&f1x.mul(&f1x).div(&s.jet(1, 0).scale(&int(2))).unwrap());
    ensure(*out.get(1).unwrap() == f1, || "F~1 != F1".into())?;
    let diff = out.get(2).unwrap().sub(&expected).to_rational().map_err(|e| e.to_string())?;
    ensure(diff.is_zero(), || format!("F~2 differs by {diff}"))?;
    Ok("det identity, F~2 closed form, genus-one law, G2 at constant w".into())
}

fn timed_verify(sf: &SolutionFile, level: usize, limit: Duration) -> Outcome {
    let opts = VerifyOptions {
        level,
        ..VerifyOptions::default()
    };
    let start = Instant::now();
    let report = verify_all(sf, &JetExpression::zero(), &opts, "verify-all");
    let t = start.elapsed();
    let bad: Vec<String> = report.failures().map(|c| format!("{}/{}", c.stage, c.name)).collect();
    ensure(bad.is_empty(), || format!("failed: {}", bad.join(", ")))?;
    ensure(t <= limit, || format!("took {t:?}"))?;
    Ok(format!("{} checks in {t:.2?}", report.checks.len()))
}

type Criterion = Box<dyn Fn() -> Outcome>;

#[test]
fn acceptance() {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("1 WDVV closure under inversion", Box::new(wdvv_closure)),
        ("2 inversion closed form (A2)", Box::new(a2_closed_form)),
        ("3 spectrum of the inverse", Box::new(spectrum_law)),
        ("4 calibration axioms", Box::new(calibration_axioms)),
        ("5 Omega consistency", Box::new(omega_consistency)),
        ("6 hodograph and tau", Box::new(hodograph_and_tau)),
        ("7 Legendre tau and hatted EL", Box::new(legendre_and_hatted_el)),
        ("8 metric identities", Box::new(proof_identities)),
        ("9 Virasoro constraints", Box::new(virasoro)),
        ("10 genus expansion", Box::new(genus_expansion)),
        ("T1 verify-all A2 <= 60 s", Box::new(|| timed_verify(&catalog::a2(), 4, A2_VERIFY_LIMIT))),
        ("T2 verify-all A3 at P=3 <= 10 min", Box::new(|| timed_verify(&catalog::a3(), 3, A3_VERIFY_LIMIT))),
    ];
    let mut failed = Vec::new();
    for (name, run) in &criteria {
        match run() {
            Ok(detail) => println!("PASS  {name:<36} {detail}"),
            Err(why) => {
                println!("FAIL  {name:<36} {why}");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
