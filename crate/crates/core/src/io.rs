//! Line-oriented text formats for solutions and calibrations.
//!
//! ```text
//! # comment
//! n = 2
//! F = 1/2*v1^2*v2 + 1/72*v2^4
//! d = 1/3
//! mu = [-1/6, 1/6]
//! ```
//!
//! Optional `A = [[..], ..]`, `B = [..]`, `C = ..` give the quadratic part of
//! `E(F)`. A calibration file repeats the header and adds `level = P`,
//! `[theta alpha=a p=p] <expr>` and `[R k=k] [[..], ..]` lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;

use crate::algebra::parse::{jet_resolver, parse_jet, parse_rational, parse_scalar};
use crate::algebra::JetExpression;
use crate::algebra::{RationalFunction, Scalar};
use crate::calibration::{Calibration, RMatrix};
use crate::error::{Error, Result};
use crate::frobenius::{ConformalData, Quadratic, WdvvSolution};

#[derive(Clone, Debug)]
pub struct SolutionFile {
    pub solution: WdvvSolution,
    pub conformal: Option<ConformalData>,
}

fn err(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

/// Split `[a, b, [c, d]]` at top-level commas.
fn split_list(src: &str, line: usize) -> Result<Vec<String>> {
    let s = src.trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err(line, format!("expected a bracketed list, found `{s}`")))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in inner.chars() {
        match ch {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur).trim().to_string());
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur.trim().to_string());
    Ok(out)
}

fn scalar_list(src: &str, line: usize) -> Result<Vec<Scalar>> {
    split_list(src, line)?
        .iter()
        .map(|s| parse_scalar(s).map_err(|e| err(line, e)))
        .collect()
}

fn scalar_matrix(src: &str, n: usize, line: usize) -> Result<Vec<Vec<Scalar>>> {
    let rows = split_list(src, line)?
        .iter()
        .map(|r| scalar_list(r, line))
        .collect::<Result<Vec<_>>>()?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(err(line, format!("expected a {n}x{n} matrix")));
    }
    Ok(rows)
}

struct Header {
    n: usize,
    f: Option<(usize, String)>,
    d: Option<Scalar>,
    mu: Option<(usize, Vec<Scalar>)>,
    quad: BTreeMap<String, (usize, String)>,
}

fn key_value(text: &str, line: usize) -> Result<(String, String)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| err(line, format!("expected `key = value`, found `{text}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn finish_header(h: Header) -> Result<SolutionFile> {
    let n = h.n;
    if n == 0 {
        return Err(err(0, "missing `n = ...`"));
    }
    let (fl, fsrc) = h.f.ok_or_else(|| err(0, "missing `F = ...`"))?;
    let f = parse_rational(&fsrc, n).map_err(|e| err(fl, e))?;
    let solution = WdvvSolution::new(n, f).map_err(|e| err(fl, e))?;
    let conformal = match (h.d, h.mu) {
        (None, None) => None,
        (Some(d), Some((ml, mu))) => {
            if mu.len() != n {
                return Err(err(ml, format!("mu has {} entries, expected {n}", mu.len())));
            }
            let mut cd = ConformalData::new(d, mu).map_err(|e| err(ml, e))?;
            if !h.quad.is_empty() {
                let mut q = Quadratic::zero(n);
                if let Some((l, s)) = h.quad.get("A") {
                    q.a = scalar_matrix(s, n, *l)?;
                }
                if let Some((l, s)) = h.quad.get("B") {
                    q.b = scalar_list(s, *l)?;
                    if q.b.len() != n {
                        return Err(err(*l, format!("B must have {n} entries")));
                    }
                }
                if let Some((l, s)) = h.quad.get("C") {
                    q.c = parse_scalar(s).map_err(|e| err(*l, e))?;
                }
                cd = cd.with_quadratic(q).map_err(|e| err(0, e))?;
            }
            Some(cd)
        }
        _ => return Err(err(0, "`d` and `mu` must be given together")),
    };
    Ok(SolutionFile {
        solution,
        conformal,
    })
}

/// Parse `name = <jet expression>` lines over `n` fields (`v2`, `v1_3`, `log(..)`).
pub fn parse_named_expressions(text: &str, n: usize) -> Result<BTreeMap<String, JetExpression>> {
    let resolve = jet_resolver(n);
    let mut out = BTreeMap::new();
    for (line, l) in content_lines(text) {
        let (k, v) = key_value(l, line)?;
        let e = parse_jet(&v, &resolve).map_err(|e| err(line, e))?;
        if out.insert(k.clone(), e).is_some() {
            return Err(err(line, format!("duplicate key `{k}`")));
        }
    }
    Ok(out)
}

fn header_line(h: &mut Header, key: &str, value: String, line: usize) -> Result<()> {
    match key {
        "n" => {
            h.n = value
                .parse()
                .map_err(|_| err(line, format!("`{value}` is not a dimension")))?;
        }
        "F" => h.f = Some((line, value)),
        "d" => h.d = Some(parse_scalar(&value).map_err(|e| err(line, e))?),
        "mu" => h.mu = Some((line, scalar_list(&value, line)?)),
        "A" | "B" | "C" => {
            h.quad.insert(key.to_string(), (line, value));
        }
        _ => return Err(err(line, format!("unknown key `{key}`"))),
    }
    Ok(())
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap().trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub fn parse_solution(text: &str) -> Result<SolutionFile> {
    let mut h = Header {
        n: 0,
        f: None,
        d: None,
        mu: None,
        quad: BTreeMap::new(),
    };
    for (line, l) in content_lines(text) {
        let (k, v) = key_value(l, line)?;
        header_line(&mut h, &k, v, line)?;
    }
    finish_header(h)
}

fn write_header(out: &mut String, sol: &WdvvSolution, cd: Option<&ConformalData>) {
    let list = |v: &[Scalar]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    writeln!(out, "n = {}", sol.n()).unwrap();
    writeln!(out, "F = {}", sol.prepotential()).unwrap();
    if let Some(cd) = cd {
        writeln!(out, "d = {}", cd.d).unwrap();
        writeln!(out, "mu = [{}]", list(&cd.mu)).unwrap();
        if !cd.quad.is_zero() {
            let rows: Vec<String> = cd.quad.a.iter().map(|r| format!("[{}]", list(r))).collect();
            writeln!(out, "A = [{}]", rows.join(", ")).unwrap();
            writeln!(out, "B = [{}]", list(&cd.quad.b)).unwrap();
            writeln!(out, "C = {}", cd.quad.c).unwrap();
        }
    }
}

pub fn format_solution(sol: &WdvvSolution, cd: Option<&ConformalData>) -> String {
    let mut out = String::new();
    write_header(&mut out, sol, cd);
    out
}

pub fn format_calibration(cal: &Calibration) -> String {
    let mut out = String::new();
    write_header(&mut out, cal.solution(), cal.conformal());
    writeln!(out, "level = {}", cal.level()).unwrap();
    for a in 0..cal.n() {
        for p in 0..=cal.level() {
            writeln!(out, "[theta alpha={} p={}] {}", a + 1, p, cal.theta(a, p).unwrap()).unwrap();
        }
    }
    if cal.conformal().is_some() {
        for (k, r) in cal.r_matrices().iter().enumerate() {
            if r.iter().flatten().all(Zero::is_zero) {
                continue;
            }
            let rows: Vec<String> = r
                .iter()
                .map(|row| {
                    let xs: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                    format!("[{}]", xs.join(", "))
                })
                .collect();
            writeln!(out, "[R k={}] [{}]", k + 1, rows.join(", ")).unwrap();
        }
    }
    out
}

fn section_attrs(head: &str, line: usize) -> Result<(String, BTreeMap<String, usize>)> {
    let mut parts = head.split_whitespace();
    let kind = parts.next().unwrap_or_default().to_string();
    let mut attrs = BTreeMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| err(line, format!("bad section attribute `{p}`")))?;
        let v: usize = v
            .parse()
            .map_err(|_| err(line, format!("`{v}` is not an index")))?;
        attrs.insert(k.to_string(), v);
    }
    Ok((kind, attrs))
}

pub fn parse_calibration(text: &str) -> Result<Calibration> {
    let mut h = Header {
        n: 0,
        f: None,
        d: None,
        mu: None,
        quad: BTreeMap::new(),
    };
    let mut level: Option<usize> = None;
    let mut theta_src: BTreeMap<(usize, usize), (usize, String)> = BTreeMap::new();
    let mut r_src: BTreeMap<usize, (usize, String)> = BTreeMap::new();
    for (line, l) in content_lines(text) {
        if let Some(rest) = l.strip_prefix('[') {
            let (head, body) = rest
                .split_once(']')
                .ok_or_else(|| err(line, "unterminated section header"))?;
            let (kind, attrs) = section_attrs(head, line)?;
            let get = |k: &str| {
                attrs
                    .get(k)
                    .copied()
                    .ok_or_else(|| err(line, format!("section needs `{k}=`")))
            };
            match kind.as_str() {
                "theta" => {
                    let a = get("alpha")?;
                    if a == 0 {
                        return Err(err(line, "alpha is 1-based"));
                    }
                    theta_src.insert((a - 1, get("p")?), (line, body.trim().to_string()));
                }
                "R" => {
                    r_src.insert(get("k")?, (line, body.trim().to_string()));
                }
                other => return Err(err(line, format!("unknown section `{other}`"))),
            }
            continue;
        }
        let (k, v) = key_value(l, line)?;
        if k == "level" {
            level = Some(
                v.parse()
                    .map_err(|_| err(line, format!("`{v}` is not a level")))?,
            );
        } else {
            header_line(&mut h, &k, v, line)?;
        }
    }
    let sf = finish_header(h)?;
    let n = sf.solution.n();
    let level = level.ok_or_else(|| err(0, "missing `level = ...`"))?;
    let mut theta: Vec<Vec<RationalFunction>> = vec![Vec::new(); n];
    for (a, row) in theta.iter_mut().enumerate() {
        for p in 0..=level {
            let (line, src) = theta_src
                .get(&(a, p))
                .ok_or_else(|| err(0, format!("missing theta alpha={} p={p}", a + 1)))?;
            row.push(parse_rational(src, n).map_err(|e| err(*line, e))?);
        }
    }
    let mut r: Vec<RMatrix> = vec![vec![vec![Scalar::zero(); n]; n]; level];
    for (k, (line, src)) in r_src {
        if k == 0 || k > level {
            return Err(err(line, format!("R index {k} outside 1..={level}")));
        }
        r[k - 1] = scalar_matrix(&src, n, line)?;
    }
    Calibration::from_parts(sf.solution, sf.conformal, theta, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ratio;
    use crate::calibration::build_calibration;

    #[test]
    fn solution_round_trip() {
        let text = "# A2\nn = 2\nF = 1/2*v1^2*v2 + 1/72*v2^4\nd = 1/3\nmu = [-1/6, 1/6]\n";
        let sf = parse_solution(text).unwrap();
        assert_eq!(sf.conformal.as_ref().unwrap().mu[1], ratio(1, 6));
        let again = format_solution(&sf.solution, sf.conformal.as_ref());
        let sf2 = parse_solution(&again).unwrap();
        assert_eq!(sf2.solution, sf.solution);
        assert_eq!(sf2.conformal, sf.conformal);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_solution("n = 2\n\nF = v1^2*v2 +\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = parse_solution("n = 2\nF = 1/2*v1^2*v2\nmu = [0.5, 1]\nd = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = parse_solution("n = 2\nF = 1/2*v1^2*v3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
    }

    #[test]
    fn calibration_round_trip() {
        let sf = parse_solution("n = 2\nF = 1/2*v1^2*v2 + 1/72*v2^4\nd = 1/3\nmu = [-1/6, 1/6]\n").unwrap();
        let cal = build_calibration(&sf.solution, sf.conformal.as_ref(), 3).unwrap();
        let text = format_calibration(&cal);
        let back = parse_calibration(&text).unwrap();
        assert_eq!(format_calibration(&back), text);
        assert_eq!(back.theta(0, 2), cal.theta(0, 2));
    }
}
