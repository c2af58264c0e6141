//! Check results and their text/TSV rendering.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Symbolic,
    Numeric,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Symbolic => "symbolic",
            Mode::Numeric => "numeric",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

/// How the residual is compared against the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub stage: String,
    pub name: String,
    pub mode: Mode,
    /// Number of nonzero symbolic residuals, or the numeric value.
    pub residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub status: Status,
    pub detail: String,
}

impl CheckResult {
    /// Passes when there are no failures.
    pub fn symbolic(stage: &str, name: &str, failures: usize, detail: impl Into<String>) -> Self {
        CheckResult {
            stage: stage.into(),
            name: name.into(),
            mode: Mode::Symbolic,
            residual: failures as f64,
            tolerance: 0.0,
            bound: Bound::AtMost,
            status: if failures == 0 { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    /// Passes when `value <= tol` (NaN fails).
    pub fn at_most(stage: &str, name: &str, value: f64, tol: f64) -> Self {
        Self::numeric(stage, name, value, tol, Bound::AtMost)
    }

    /// Passes when `value >= tol` (NaN fails).
    pub fn at_least(stage: &str, name: &str, value: f64, tol: f64) -> Self {
        Self::numeric(stage, name, value, tol, Bound::AtLeast)
    }

    fn numeric(stage: &str, name: &str, value: f64, tol: f64, bound: Bound) -> Self {
        let ok = match bound {
            Bound::AtMost => value <= tol,
            Bound::AtLeast => value >= tol,
        };
        CheckResult {
            stage: stage.into(),
            name: name.into(),
            mode: Mode::Numeric,
            residual: value,
            tolerance: tol,
            bound,
            status: if ok { Status::Pass } else { Status::Fail },
            detail: String::new(),
        }
    }

    /// A stage that could not run.
    pub fn error(stage: &str, name: &str, msg: impl std::fmt::Display) -> Self {
        CheckResult {
            stage: stage.into(),
            name: name.into(),
            mode: Mode::Symbolic,
            residual: f64::NAN,
            tolerance: 0.0,
            bound: Bound::AtMost,
            status: Status::Fail,
            detail: format!("error: {msg}"),
        }
    }

    pub fn skipped(stage: &str, name: &str, why: impl Into<String>) -> Self {
        CheckResult {
            stage: stage.into(),
            name: name.into(),
            mode: Mode::Symbolic,
            residual: 0.0,
            tolerance: 0.0,
            bound: Bound::AtMost,
            status: Status::Skipped,
            detail: why.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    fn residual_str(&self) -> String {
        if self.status == Status::Skipped {
            return "-".into();
        }
        match self.mode {
            Mode::Symbolic if self.residual.is_finite() => format!("{}", self.residual as u64),
            _ if self.residual.is_nan() => "nan".into(),
            _ => format!("{:.3e}", self.residual),
        }
    }

    fn tolerance_str(&self) -> String {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        match self.mode {
            Mode::Symbolic => format!("{op} 0"),
            Mode::Numeric => format!("{op} {:.1e}", self.tolerance),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub checks: Vec<CheckResult>,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        RunReport {
            command: command.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, c: CheckResult) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, cs: impl IntoIterator<Item = CheckResult>) {
        self.checks.extend(cs);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// 0 when every check passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_text(&self) -> String {
        let rows: Vec<[String; 6]> = self
            .checks
            .iter()
            .map(|c| {
                [
                    c.stage.clone(),
                    c.name.clone(),
                    c.mode.as_str().into(),
                    c.residual_str(),
                    c.tolerance_str(),
                    c.status.as_str().into(),
                ]
            })
            .collect();
        let head = ["stage", "check", "mode", "residual", "tolerance", "result"];
        let mut width = head.map(str::len);
        for r in &rows {
            for (w, cell) in width.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        writeln!(out, "# {}", self.command).unwrap();
        let line = |cells: &[&str]| {
            let mut s = String::new();
            for (i, c) in cells.iter().enumerate() {
                if i + 1 == cells.len() {
                    s.push_str(c);
                } else {
                    write!(s, "{c:<w$}  ", w = width[i]).unwrap();
                }
            }
            s
        };
        writeln!(out, "{}", line(&head)).unwrap();
        for (r, c) in rows.iter().zip(&self.checks) {
            let cells: Vec<&str> = r.iter().map(String::as_str).collect();
            writeln!(out, "{}", line(&cells)).unwrap();
            if !c.detail.is_empty() {
                writeln!(out, "    {}", c.detail).unwrap();
            }
        }
        let passed = self.checks.iter().filter(|c| c.status == Status::Pass).count();
        let skipped = self.checks.iter().filter(|c| c.status == Status::Skipped).count();
        writeln!(
            out,
            "overall: {} ({passed} passed, {} failed, {skipped} skipped)",
            if self.passed() { "pass" } else { "fail" },
            self.checks.len() - passed - skipped
        )
        .unwrap();
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("stage\tcheck\tmode\tresidual\ttolerance\tresult\tdetail\n");
        for c in &self.checks {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                c.stage,
                c.name,
                c.mode.as_str(),
                c.residual_str(),
                c.tolerance_str(),
                c.status.as_str(),
                c.detail.replace(['\t', '\n'], " ")
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_follows_checks() {
        let mut r = RunReport::new("check x");
        r.push(CheckResult::symbolic("wdvv", "associativity", 0, ""));
        r.push(CheckResult::skipped("conformal", "euler", "no conformal data"));
        assert_eq!(r.exit_code(), 0);
        r.push(CheckResult::at_most("tau", "deviation", 2e-6, 1e-6));
        assert_eq!(r.exit_code(), 1);
        assert_eq!(r.failures().count(), 1);
        r.push(CheckResult::at_least("tau", "ratio", f64::NAN, 3.5));
        assert_eq!(r.failures().count(), 2);
    }

    #[test]
    fn renderings_are_line_per_check() {
        let mut r = RunReport::new("check x");
        r.push(CheckResult::symbolic("wdvv", "associativity", 2, "first (1,2,2,1)"));
        r.push(CheckResult::at_most("hodograph", "identity", 1.5e-16, 1e-14));
        let tsv = r.to_tsv();
        assert_eq!(tsv.lines().count(), 3);
        assert!(tsv.contains("hodograph\tidentity\tnumeric\t1.500e-16\t<= 1.0e-14\tpass"));
        let text = r.to_text();
        assert!(text.starts_with("# check x\n"));
        assert!(text.ends_with("overall: fail (1 passed, 1 failed, 0 skipped)\n"));
    }
}
