use std::fmt::Write as _;
use std::path::Path;

use wdvv::algebra::parse::parse_scalar;
use wdvv::algebra::{JetExpression, JetSpace};
use wdvv::calibration::{build_calibration, transform_calibration, Calibration};
use wdvv::genus::{check_det_identity, check_g1, check_g2, genus1, legendre_expand, GenusSeries};
use wdvv::hierarchy::{hodograph_solve, tau_log, Slot, TimeConfiguration, NEWTON_TOL};
use wdvv::inversion::{invert_solution, inversion_map, transform_conformal};
use wdvv::io::{format_calibration, format_solution, parse_calibration, parse_named_expressions, parse_solution, SolutionFile};
use wdvv::report::{CheckResult, RunReport};
use wdvv::symmetry::{check_hatted_el, hatted_point, legendre_check};
use wdvv::verify::{self, VerifyOptions};
use wdvv::virasoro::{build_virasoro, constraint_residual};

use crate::{in_file, read, write, CliError, Command, Format, GenusOp, Times};

pub(crate) fn run(cmd: Command, echo: &str) -> Result<u8, CliError> {
    let (report, format) = match cmd {
        Command::Check { file, out } => {
            let sf = load_solution(&file)?;
            let mut r = RunReport::new(echo);
            r.extend(verify::check_solution(&sf.solution, sf.conformal.as_ref()));
            (r, out.format)
        }
        Command::Invert { file, output, out } => {
            let sf = load_solution(&file)?;
            let hat = invert_solution(&sf.solution)?;
            let cd_hat = sf.conformal.as_ref().map(transform_conformal);
            write(&output, &format_solution(&hat, cd_hat.as_ref()))?;
            let mut r = RunReport::new(echo);
            r.extend(verify::check_inversion(&sf.solution, sf.conformal.as_ref()));
            (r, out.format)
        }
        Command::Calibrate {
            file,
            level,
            output,
            hat_output,
            out,
        } => {
            let sf = load_solution(&file)?;
            let cal = build_calibration(&sf.solution, sf.conformal.as_ref(), level)?;
            let mut r = RunReport::new(echo);
            let (checks, om) = verify::check_calibration_stage("calibration", &cal);
            r.extend(checks);
            if let Some(om) = om {
                r.extend(verify::check_transform_stage(&cal, &om));
            }
            if let Some(path) = output {
                write(&path, &format_calibration(&cal))?;
            }
            if let Some(path) = hat_output {
                write(&path, &format_calibration(&transform_calibration(&cal)?))?;
            }
            (r, out.format)
        }
        Command::Hodograph { cal, times, out } => {
            let c = load_calibration(&cal)?;
            let cfg = configuration(&times, c.n())?;
            let guess = guess(&times, &cfg, c.n())?;
            let sol = hodograph_solve(&c, &cfg, &guess)?;
            let om = c.omega_table()?;
            let logtau = tau_log(&om, &cfg, &sol.v)?;
            let mut rows: Vec<(String, f64)> = sol.v.iter().enumerate().map(|(i, x)| (format!("v{}", i + 1), *x)).collect();
            rows.push(("residual".into(), sol.residual_norm));
            rows.push(("log_tau".into(), logtau));
            print!("{}", value_table(echo, &rows, out.format));
            return Ok(u8::from(sol.residual_norm > NEWTON_TOL));
        }
        Command::LegendreCheck {
            cal,
            cal_hat,
            times,
            tol,
            out,
        } => {
            let c = load_calibration(&cal)?;
            let h = load_calibration(&cal_hat)?;
            if h.n() != c.n() {
                return Err(CliError::Usage(format!("dimensions differ: {} and {}", c.n(), h.n())));
            }
            let cfg = configuration(&times, c.n())?;
            let guess = guess(&times, &cfg, c.n())?;
            let l = legendre_check(&c, &c.omega_table()?, &h, &h.omega_table()?, &cfg, &guess)?;
            let el = check_hatted_el(&c, &h, &cfg, &guess)?;
            let mut r = RunReport::new(echo);
            r.push(CheckResult::at_most("symmetry", "legendre", l.two_sided(), tol).with_detail(format!(
                "log tau - x dlog tau/dx = {:.12e}, log tau^ = {:.12e}",
                l.from_unhatted, l.from_hatted
            )));
            r.push(CheckResult::at_most("symmetry", "round-trip", l.round_trip(), tol));
            r.push(CheckResult::at_most("symmetry", "hatted-el", el, tol));
            (r, out.format)
        }
        Command::Virasoro {
            cal,
            m,
            times,
            hat,
            tol,
            out,
        } => {
            let c = load_calibration(&cal)?;
            let cfg = configuration(&times, c.n())?;
            let guess = guess(&times, &cfg, c.n())?;
            let residual = if hat {
                let h = transform_calibration(&c)?;
                let pt = hatted_point(&c, &cfg, &guess)?;
                let l = build_virasoro(&h, m, h.level())?;
                constraint_residual(&l, &h.omega_table()?, &pt.config_hat, &pt.v_hat)?
            } else {
                let sol = hodograph_solve(&c, &cfg, &guess)?;
                let l = build_virasoro(&c, m, c.level())?;
                constraint_residual(&l, &c.omega_table()?, &cfg, &sol.v)?
            };
            let name = if hat { format!("L{m}-hatted") } else { format!("L{m}") };
            let mut r = RunReport::new(echo);
            r.push(CheckResult::at_most("virasoro", &name, residual, tol));
            (r, out.format)
        }
        Command::Genus { file, g, f2, op, out } => {
            let sf = load_solution(&file)?;
            let n = sf.solution.n();
            let g = load_g(&g, n)?;
            let mut r = RunReport::new(echo);
            genus(&mut r, &sf, &g, f2.as_deref(), op)?;
            (r, out.format)
        }
        Command::VerifyAll {
            file,
            g,
            level,
            points,
            tol,
            h,
            out,
        } => {
            let sf = load_solution(&file)?;
            let n = sf.solution.n();
            let g = match g {
                Some(path) => load_g(&path, n)?,
                None => JetExpression::zero(),
            };
            let mut opts = VerifyOptions {
                level,
                h,
                ..VerifyOptions::default()
            };
            for p in &points {
                opts.points.push(floats(p, n)?);
            }
            for t in &tol {
                let (name, value) = t
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("expected name=value, found `{t}`")))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("`{value}` is not a number")))?;
                opts.tol.set(name.trim(), value)?;
            }
            (verify::verify_all(&sf, &g, &opts, echo), out.format)
        }
    };
    print!(
        "{}",
        match format {
            Format::Text => report.to_text(),
            Format::Tsv => report.to_tsv(),
        }
    );
    Ok(report.exit_code() as u8)
}

fn genus(r: &mut RunReport, sf: &SolutionFile, g: &JetExpression, f2: Option<&Path>, op: GenusOp) -> Result<(), CliError> {
    let sol = &sf.solution;
    let n = sol.n();
    let space = JetSpace::new(n);
    let f2 = match f2 {
        Some(path) => Some(in_file(path, parse_named_expressions(&read(path)?, n))?),
        None => None,
    };
    let is_zero = |x: &wdvv::algebra::RationalFunction| usize::from(!x.is_zero());
    match op {
        GenusOp::Genus1 => {
            let f1 = genus1(sol, g)?;
            r.push(CheckResult::symbolic("genus", "genus-one-law", is_zero(&check_g1(sol, g)?), format!("F1 = {}", f1.display(&space))));
        }
        GenusOp::DetIdentity => {
            let res = check_det_identity(sol, &inversion_map(n)?)?;
            r.push(CheckResult::symbolic("genus", "det-identity", is_zero(&res), ""));
        }
        GenusOp::Expand => {
            let mut terms = vec![genus1(sol, g)?];
            if let Some(e) = f2.as_ref().and_then(|m| m.get("F2")) {
                terms.push(e.clone());
            }
            let series = GenusSeries::new(terms);
            let out = legendre_expand(&series, &space, series.len())?;
            let terms: Vec<String> = out
                .terms()
                .iter()
                .enumerate()
                .map(|(g, t)| format!("F~{} = {}", g + 1, t.display(&space)))
                .collect();
            r.push(CheckResult::symbolic("genus", "order-bound", out.order_violations(&space).len(), terms.join("; ")));
        }
        GenusOp::CheckG2 => {
            let m = f2.ok_or_else(|| CliError::Usage("check-g2 needs --F2".into()))?;
            let res = check_g2(sol, g, m.get("F2"), m.get("F2hat"))?;
            r.push(CheckResult::symbolic(
                "genus",
                "G2-law",
                is_zero(&res),
                if res.is_zero() { String::new() } else { format!("residual = {}", res.display_with(&|i| space.name(i))) },
            ));
        }
    }
    Ok(())
}

fn load_solution(path: &Path) -> Result<SolutionFile, CliError> {
    in_file(path, parse_solution(&read(path)?))
}

fn load_calibration(path: &Path) -> Result<Calibration, CliError> {
    in_file(path, parse_calibration(&read(path)?))
}

fn load_g(path: &Path, n: usize) -> Result<JetExpression, CliError> {
    let mut m = in_file(path, parse_named_expressions(&read(path)?, n))?;
    m.remove("G")
        .ok_or_else(|| CliError::Usage(format!("{}: no `G = ...` line", path.display())))
}

fn floats(src: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let xs = src
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("`{src}` is not a list of numbers")))?;
    if xs.len() != n {
        return Err(CliError::Usage(format!("`{src}` needs {n} components")));
    }
    Ok(xs)
}

/// `a,p=value` with `a` 1-based.
fn slot_assignment(src: &str, n: usize) -> Result<(Slot, String), CliError> {
    let bad = || CliError::Usage(format!("expected `a,p=value`, found `{src}`"));
    let (lhs, value) = src.split_once('=').ok_or_else(bad)?;
    let (a, p) = lhs.split_once(',').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let p: usize = p.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > n {
        return Err(CliError::Usage(format!("index {a} outside 1..={n}")));
    }
    Ok(((a - 1, p), value.trim().to_string()))
}

fn configuration(t: &Times, n: usize) -> Result<TimeConfiguration, CliError> {
    let mut cfg = if t.shifts.is_empty() {
        TimeConfiguration::topological()
    } else {
        TimeConfiguration::new()
    };
    for s in &t.shifts {
        let (slot, v) = slot_assignment(s, n)?;
        cfg = cfg.with_shift(slot, parse_scalar(&v)?);
    }
    for s in &t.times {
        let (slot, v) = slot_assignment(s, n)?;
        let x: f64 = v
            .parse()
            .map_err(|_| CliError::Usage(format!("`{v}` is not a number")))?;
        cfg = cfg.with_time(slot, x);
    }
    Ok(cfg)
}

/// `--guess`, or the primary times `t^{a,0}` with zeros nudged off the singular locus.
fn guess(t: &Times, cfg: &TimeConfiguration, n: usize) -> Result<Vec<f64>, CliError> {
    match &t.guess {
        Some(g) => floats(g, n),
        None => Ok((0..n)
            .map(|a| match cfg.time((a, 0)) {
                0.0 => 0.1,
                x => x,
            })
            .collect()),
    }
}

fn value_table(echo: &str, rows: &[(String, f64)], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Text => {
            writeln!(out, "# {echo}").unwrap();
            for (k, v) in rows {
                writeln!(out, "{k:<10}{v:.16e}").unwrap();
            }
        }
        Format::Tsv => {
            out.push_str("quantity\tvalue\n");
            for (k, v) in rows {
                writeln!(out, "{k}\t{v:.16e}").unwrap();
            }
        }
    }
    out
}
