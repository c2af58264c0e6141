//! Principal hierarchy flows, hodograph solutions and tau functions.
//!
//! Slots `(α, p)` are 0-based in `α`. The flow `∂v/∂t^{α,p} = A(v) v_x` has
//! `A^γ_ξ = η^{γβ} ∂_β∂_ξ θ_{α,p+1}`; a solution of
//! `Σ t̃^{α,p} ∂_γ θ_{α,p}(v) = 0` with `t̃ = t − c` solves all flows at once and
//! `log τ = ½ Σ t̃^{α,p} t̃^{β,q} Ω_{α,p;β,q}(v)`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::algebra::eval::Compiled;
use crate::algebra::poly::scalar_to_f64;
use crate::algebra::{JetSpace, Matrix, RationalFunction, Scalar};
use crate::calibration::{Calibration, OmegaTable};
use crate::error::{Error, Result};
use crate::frobenius::dual;

/// `(α, p)` with `α` 0-based.
pub type Slot = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct FlowRhs {
    pub slot: Slot,
    pub a: Matrix,
}

pub fn flow(cal: &Calibration, slot: Slot) -> Result<FlowRhs> {
    let (alpha, p) = slot;
    let n = cal.n();
    if p + 1 > cal.level() {
        return Err(Error::LevelUnderflow {
            have: cal.level(),
            need: p + 1,
        });
    }
    let th = cal.theta(alpha, p + 1).ok_or(Error::InvalidDimension(alpha + 1))?;
    let grad: Vec<RationalFunction> = (0..n).map(|b| th.derivative(b)).collect();
    let a = Matrix::from_fn(n, n, |g, x| grad[dual(n, g)].derivative(x));
    Ok(FlowRhs { slot, a })
}

/// `X(u^σ_k) = D^k (A u_x)^σ` applied to a function of jets up to order one.
fn apply_derivation(space: &JetSpace, f: &RationalFunction, rhs: &[RationalFunction], rhs_x: &[RationalFunction]) -> RationalFunction {
    let n = space.fields();
    let mut acc = RationalFunction::zero();
    for s in 0..n {
        let d0 = f.derivative(space.index(s, 0));
        if !d0.is_zero() {
            acc = &acc + &(&d0 * &rhs[s]);
        }
        let d1 = f.derivative(space.index(s, 1));
        if !d1.is_zero() {
            acc = &acc + &(&d1 * &rhs_x[s]);
        }
    }
    acc
}

/// `[∂_a, ∂_b] v^γ` for each component, computed on jets; all zero when the flows commute.
pub fn flow_commutator(fa: &FlowRhs, fb: &FlowRhs) -> Vec<RationalFunction> {
    let n = fa.a.rows();
    let space = JetSpace::new(n);
    let rhs = |f: &FlowRhs| -> Vec<RationalFunction> {
        (0..n)
            .map(|g| (0..n).map(|x| &f.a[(g, x)] * &space.var(x, 1)).sum())
            .collect()
    };
    let (ra, rb) = (rhs(fa), rhs(fb));
    let rax: Vec<_> = ra.iter().map(|e| space.total_derivative(e)).collect();
    let rbx: Vec<_> = rb.iter().map(|e| space.total_derivative(e)).collect();
    (0..n)
        .map(|g| &apply_derivation(&space, &ra[g], &rb, &rbx) - &apply_derivation(&space, &rb[g], &ra, &rax))
        .collect()
}

/// Times `t^{α,p}` and shifts `c^{α,p}`; both sparse.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeConfiguration {
    pub times: BTreeMap<Slot, f64>,
    pub shifts: BTreeMap<Slot, Scalar>,
}

impl TimeConfiguration {
    pub fn new() -> Self {
        Self::default()
    }

    /// The topological shift `c^{1,1} = 1`.
    pub fn topological() -> Self {
        Self::new().with_shift((0, 1), Scalar::from_integer(1.into()))
    }

    pub fn with_time(mut self, slot: Slot, t: f64) -> Self {
        self.times.insert(slot, t);
        self
    }

    pub fn with_shift(mut self, slot: Slot, c: Scalar) -> Self {
        self.shifts.insert(slot, c);
        self
    }

    pub fn time(&self, slot: Slot) -> f64 {
        self.times.get(&slot).copied().unwrap_or(0.0)
    }

    /// `t̃^{α,p} = t^{α,p} − c^{α,p}`.
    pub fn tilde(&self, slot: Slot) -> f64 {
        self.time(slot) - self.shifts.get(&slot).map(scalar_to_f64).unwrap_or(0.0)
    }

    /// Slots with a nonzero time or shift.
    pub fn active(&self) -> BTreeSet<Slot> {
        self.times
            .iter()
            .filter(|(_, t)| **t != 0.0)
            .map(|(s, _)| *s)
            .chain(self.shifts.iter().filter(|(_, c)| !c.is_zero()).map(|(s, _)| *s))
            .collect()
    }

    pub fn max_level(&self) -> usize {
        self.active().iter().map(|s| s.1).max().unwrap_or(0)
    }
}

/// Compiled gradient and Hessian of the `θ`s entering the Euler–Lagrange system.
struct ElSystem {
    n: usize,
    grads: BTreeMap<Slot, Vec<Compiled>>,
    hess: BTreeMap<Slot, Vec<Vec<Compiled>>>,
}

impl ElSystem {
    fn new(cal: &Calibration, slots: &BTreeSet<Slot>) -> Result<Self> {
        let n = cal.n();
        let mut grads = BTreeMap::new();
        let mut hess = BTreeMap::new();
        for &(a, p) in slots {
            let th = cal.theta(a, p).ok_or(Error::LevelUnderflow {
                have: cal.level(),
                need: p,
            })?;
            let g: Vec<RationalFunction> = (0..n).map(|b| th.derivative(b)).collect();
            hess.insert(
                (a, p),
                g.iter()
                    .map(|gi| (0..n).map(|b| Compiled::new(&gi.derivative(b))).collect())
                    .collect(),
            );
            grads.insert((a, p), g.iter().map(Compiled::new).collect());
        }
        Ok(ElSystem { n, grads, hess })
    }

    fn residual(&self, cfg: &TimeConfiguration, v: &[f64]) -> Result<DVector<f64>> {
        let mut r = DVector::zeros(self.n);
        for (slot, g) in &self.grads {
            let t = cfg.tilde(*slot);
            if t == 0.0 {
                continue;
            }
            for (k, gk) in g.iter().enumerate() {
                r[k] += t * gk.eval(v)?;
            }
        }
        Ok(r)
    }

    fn jacobian(&self, cfg: &TimeConfiguration, v: &[f64]) -> Result<DMatrix<f64>> {
        let mut j = DMatrix::zeros(self.n, self.n);
        for (slot, h) in &self.hess {
            let t = cfg.tilde(*slot);
            if t == 0.0 {
                continue;
            }
            for (a, row) in h.iter().enumerate() {
                for (b, e) in row.iter().enumerate() {
                    j[(a, b)] += t * e.eval(v)?;
                }
            }
        }
        Ok(j)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HodographSolution {
    pub config: TimeConfiguration,
    pub v: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

pub const NEWTON_TOL: f64 = 1e-12;
const MAX_ITER: usize = 50;

fn newton(sys: &ElSystem, cfg: &TimeConfiguration, guess: &[f64]) -> Result<(Vec<f64>, f64, usize)> {
    let mut v = DVector::from_column_slice(guess);
    let mut r = sys.residual(cfg, v.as_slice())?;
    let mut norm = r.amax();
    for it in 0..MAX_ITER {
        let j = sys.jacobian(cfg, v.as_slice())?;
        let step = j.lu().solve(&(-&r)).ok_or(Error::SingularJacobian)?;
        if !step.iter().all(|x| x.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        let mut lambda = 1.0;
        let (mut v_new, mut r_new);
        loop {
            v_new = &v + &step * lambda;
            r_new = sys.residual(cfg, v_new.as_slice())?;
            if r_new.amax() <= norm || lambda < 1e-3 {
                break;
            }
            lambda *= 0.5;
        }
        let new_norm = r_new.amax();
        let stalled = new_norm >= norm && norm <= NEWTON_TOL;
        if stalled {
            return Ok((v.as_slice().to_vec(), norm, it));
        }
        let small_step = step.amax() * lambda <= 1e-15 * (1.0 + v.amax());
        v = v_new;
        r = r_new;
        norm = new_norm;
        if norm == 0.0 || (small_step && norm <= NEWTON_TOL) {
            return Ok((v.as_slice().to_vec(), norm, it + 1));
        }
    }
    if norm <= NEWTON_TOL {
        Ok((v.as_slice().to_vec(), norm, MAX_ITER))
    } else {
        Err(Error::NewtonDivergence {
            iterations: MAX_ITER,
            residual: norm,
        })
    }
}

/// Solve the Euler–Lagrange system by damped Newton iteration from `guess`.
pub fn hodograph_solve(cal: &Calibration, config: &TimeConfiguration, guess: &[f64]) -> Result<HodographSolution> {
    if guess.len() != cal.n() {
        return Err(Error::InvalidDimension(guess.len()));
    }
    let sys = ElSystem::new(cal, &config.active())?;
    let (v, residual_norm, iterations) = newton(&sys, config, guess)?;
    Ok(HodographSolution {
        config: config.clone(),
        v,
        residual_norm,
        iterations,
    })
}

/// Local invertibility data at a point where `Σ c^{α,p} ∂θ_{α,p} = 0`.
#[derive(Clone, Debug)]
pub struct Genericity {
    pub v0: Vec<f64>,
    /// `A^σ_γ = Σ c^{α,p} η^{σξ}∂_ξ∂_γθ_{α,p}(v0)`.
    pub a: DMatrix<f64>,
    pub det: f64,
}

/// Find `v0` with `Σ c ∂θ(v0) = 0` and report whether `A` is invertible there.
pub fn check_genericity(cal: &Calibration, shifts: &BTreeMap<Slot, Scalar>, guess: &[f64]) -> Result<Genericity> {
    let mut cfg = TimeConfiguration::new();
    for (s, c) in shifts {
        cfg.shifts.insert(*s, -c);
    }
    let sys = ElSystem::new(cal, &cfg.active())?;
    let (v0, _, _) = newton(&sys, &cfg, guess)?;
    let n = cal.n();
    let hess = sys.jacobian(&cfg, &v0)?;
    let a = DMatrix::from_fn(n, n, |s, g| hess[(dual(n, s), g)]);
    let det = a.determinant();
    if det.abs() < 1e-12 {
        return Err(Error::SingularJacobian);
    }
    Ok(Genericity { v0, a, det })
}

fn omega_at(om: &OmegaTable, a: Slot, b: Slot, v: &[f64]) -> Result<f64> {
    om.get(a.0, a.1, b.0, b.1)
        .ok_or_else(|| Error::MissingOmega(format!("({},{};{},{})", a.0 + 1, a.1, b.0 + 1, b.1)))?
        .eval_f64(v)
}

/// `½ Σ t̃ t̃ Ω(v)` over the active slots.
pub fn tau_log(om: &OmegaTable, config: &TimeConfiguration, v: &[f64]) -> Result<f64> {
    let active: Vec<Slot> = config.active().into_iter().collect();
    let mut acc = 0.0;
    for (i, &a) in active.iter().enumerate() {
        for &b in &active[i..] {
            let w = if a == b { 0.5 } else { 1.0 };
            acc += w * config.tilde(a) * config.tilde(b) * omega_at(om, a, b, v)?;
        }
    }
    Ok(acc)
}

/// `∂ log τ / ∂t^{a} = Σ_b t̃^b Ω_{a;b}(v)`.
pub fn dlogtau(om: &OmegaTable, config: &TimeConfiguration, v: &[f64], slot: Slot) -> Result<f64> {
    config
        .active()
        .into_iter()
        .map(|b| Ok(config.tilde(b) * omega_at(om, slot, b, v)?))
        .sum()
}

/// `∂ log τ / ∂x = Σ t̃^{α,p} θ_{α,p}(v)`.
pub fn dlogtau_dx(cal: &Calibration, config: &TimeConfiguration, v: &[f64]) -> Result<f64> {
    config
        .active()
        .into_iter()
        .map(|(a, p)| {
            let th = cal.theta(a, p).ok_or(Error::LevelUnderflow {
                have: cal.level(),
                need: p,
            })?;
            Ok(config.tilde((a, p)) * th.eval_f64(v)?)
        })
        .sum()
}

/// Re-solve at perturbed times and return `log τ` there.
fn logtau_at(cal: &Calibration, om: &OmegaTable, cfg: &TimeConfiguration, guess: &[f64]) -> Result<f64> {
    let sol = hodograph_solve(cal, cfg, guess)?;
    tau_log(om, cfg, &sol.v)
}

fn bumped(cfg: &TimeConfiguration, moves: &[(Slot, f64)]) -> TimeConfiguration {
    let mut c = cfg.clone();
    for &(s, h) in moves {
        *c.times.entry(s).or_insert(0.0) += h;
    }
    c
}

/// Central-difference second derivative of `log τ` along slots `a`, `b`.
pub fn fd_second(cal: &Calibration, om: &OmegaTable, cfg: &TimeConfiguration, base: &[f64], a: Slot, b: Slot, h: f64) -> Result<f64> {
    let f = |m: &[(Slot, f64)]| logtau_at(cal, om, &bumped(cfg, m), base);
    if a == b {
        Ok((f(&[(a, h)])? - 2.0 * f(&[])? + f(&[(a, -h)])?) / (h * h))
    } else {
        let pp = f(&[(a, h), (b, h)])?;
        let pm = f(&[(a, h), (b, -h)])?;
        let mp = f(&[(a, -h), (b, h)])?;
        let mm = f(&[(a, -h), (b, -h)])?;
        Ok((pp - pm - mp + mm) / (4.0 * h * h))
    }
}

/// Central-difference `∂ log τ/∂t^a`.
pub fn fd_first(cal: &Calibration, om: &OmegaTable, cfg: &TimeConfiguration, base: &[f64], a: Slot, h: f64) -> Result<f64> {
    let f = |m: &[(Slot, f64)]| logtau_at(cal, om, &bumped(cfg, m), base);
    Ok((f(&[(a, h)])? - f(&[(a, -h)])?) / (2.0 * h))
}

/// Slots whose pairings with each other and with the active ones are all in the table.
pub fn sample_slots(om: &OmegaTable, config: &TimeConfiguration) -> Vec<Slot> {
    let n = om.n();
    let active = config.active();
    let top = om.level().saturating_sub(1) / 2;
    let mut out: Vec<Slot> = (0..n).flat_map(|a| (0..=top).map(move |p| (a, p))).collect();
    out.retain(|s| active.iter().all(|b| om.get(s.0, s.1, b.0, b.1).is_some()));
    out
}

#[derive(Clone, Debug)]
pub struct TauDefReport {
    pub h: f64,
    pub deviation: f64,
    pub deviation_half: f64,
    /// `deviation / deviation_half`, ≈ 4 for a second-order scheme.
    pub richardson: f64,
    pub pairs: usize,
}

/// Max `|∂²log τ/∂t^a∂t^b − Ω_{a;b}(v)|` over sample pairs at steps `h` and `h/2`.
pub fn check_tau_def(cal: &Calibration, om: &OmegaTable, config: &TimeConfiguration, guess: &[f64], h: f64) -> Result<TauDefReport> {
    let base = hodograph_solve(cal, config, guess)?;
    let slots = sample_slots(om, config);
    if slots.is_empty() {
        return Err(Error::InsufficientData("no slot pairs are covered by the table".into()));
    }
    let mut dev = 0.0f64;
    let mut dev_half = 0.0f64;
    let mut pairs = 0;
    for (i, &a) in slots.iter().enumerate() {
        for &b in &slots[i..] {
            let exact = omega_at(om, a, b, &base.v)?;
            dev = dev.max((fd_second(cal, om, config, &base.v, a, b, h)? - exact).abs());
            dev_half = dev_half.max((fd_second(cal, om, config, &base.v, a, b, h / 2.0)? - exact).abs());
            pairs += 1;
        }
    }
    Ok(TauDefReport {
        h,
        deviation: dev,
        deviation_half: dev_half,
        richardson: dev / dev_half,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse::parse_rational;
    use crate::calibration::build_calibration;
    use crate::catalog;

    fn a2_cal(level: usize) -> Calibration {
        let sf = catalog::a2();
        build_calibration(&sf.solution, sf.conformal.as_ref(), level).unwrap()
    }

    #[test]
    fn a2_flows() {
        let cal = a2_cal(3);
        let x = flow(&cal, (0, 0)).unwrap();
        assert_eq!(x.a, Matrix::identity(2));
        let f = flow(&cal, (1, 0)).unwrap();
        let p = |s: &str| parse_rational(s, 2).unwrap();
        assert_eq!(f.a[(0, 0)], p("0"));
        assert_eq!(f.a[(0, 1)], p("v2/3"));
        assert_eq!(f.a[(1, 0)], p("1"));
        assert_eq!(f.a[(1, 1)], p("0"));
        assert!(flow(&cal, (0, 3)).is_err());
    }

    #[test]
    fn a2_flows_commute() {
        let cal = a2_cal(3);
        let slots = [(0, 0), (1, 0), (0, 1), (1, 1)];
        for a in slots {
            for b in slots {
                let fa = flow(&cal, a).unwrap();
                let fb = flow(&cal, b).unwrap();
                assert!(flow_commutator(&fa, &fb).iter().all(|e| e.is_zero()), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn noncommuting_flows_are_detected() {
        let cal = a2_cal(2);
        let fa = flow(&cal, (1, 0)).unwrap();
        let mut fb = fa.clone();
        fb.a = Matrix::from_fn(2, 2, |i, j| if i == 0 && j == 0 { RationalFunction::var(1) } else { RationalFunction::zero() });
        assert!(!flow_commutator(&fa, &fb).iter().all(|e| e.is_zero()));
    }

    #[test]
    fn trivial_solution_is_the_identity() {
        let cal = a2_cal(4);
        let cfg = TimeConfiguration::topological().with_time((0, 0), 0.3).with_time((1, 0), 0.1);
        let sol = hodograph_solve(&cal, &cfg, &[0.2, 0.2]).unwrap();
        assert!((sol.v[0] - 0.3).abs() < 1e-14 && (sol.v[1] - 0.1).abs() < 1e-14, "{:?}", sol.v);
        assert!(sol.residual_norm <= 1e-14);
        let again = hodograph_solve(&cal, &cfg, &sol.v).unwrap();
        assert!(again.iterations <= 1);
    }

    #[test]
    fn nonlinear_solution_resubstitutes() {
        let cal = a2_cal(4);
        let cfg = TimeConfiguration::topological()
            .with_time((0, 0), 0.3)
            .with_time((1, 0), 0.1)
            .with_time((1, 1), 0.05);
        let sol = hodograph_solve(&cal, &cfg, &[0.3, 0.1]).unwrap();
        // independent residual: Σ t̃ ∂θ evaluated symbolically
        for g in 0..2 {
            let mut r = 0.0;
            for s in cfg.active() {
                r += cfg.tilde(s) * cal.theta(s.0, s.1).unwrap().derivative(g).eval_f64(&sol.v).unwrap();
            }
            assert!(r.abs() <= 1e-12);
        }
    }

    #[test]
    fn tau_of_trivial_solution() {
        let cal = a2_cal(4);
        let om = cal.omega_table().unwrap();
        let (x, s) = (0.3, 0.1);
        let cfg = TimeConfiguration::topological().with_time((0, 0), x).with_time((1, 0), s);
        let sol = hodograph_solve(&cal, &cfg, &[x, s]).unwrap();
        // at v = t: ½(x²v2 + 2xs v1 + s² v2²/6) − (x θ_{1,1} + s Ω_{2,0;1,1}) + ½ Ω_{1,1;1,1}
        let p = |e: &str| parse_rational(e, 2).unwrap().eval_f64(&[x, s]).unwrap();
        let o11 = om.get(0, 1, 0, 1).unwrap().eval_f64(&[x, s]).unwrap();
        let expect = 0.5 * (x * x * s + 2.0 * x * s * x + s * s * s * s / 6.0)
            - (x * p("v1*v2") + s * p("1/2*v1^2 + v2^3/9"))
            + 0.5 * o11;
        assert!((tau_log(&om, &cfg, &sol.v).unwrap() - expect).abs() < 1e-14);
        let d2 = fd_second(&cal, &om, &cfg, &sol.v, (0, 0), (0, 0), 1e-3).unwrap();
        assert!((d2 - s).abs() < 1e-6);
        let dx = fd_first(&cal, &om, &cfg, &sol.v, (0, 0), 1e-3).unwrap();
        assert!((dx - dlogtau_dx(&cal, &cfg, &sol.v).unwrap()).abs() < 1e-6);
        assert!((dlogtau(&om, &cfg, &sol.v, (0, 0)).unwrap() - dlogtau_dx(&cal, &cfg, &sol.v).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn genericity_of_topological_point() {
        let cal = a2_cal(2);
        let g = check_genericity(&cal, &TimeConfiguration::topological().shifts, &[0.1, 0.2]).unwrap();
        assert!(g.v0.iter().all(|x| x.abs() < 1e-12));
        assert!((g.det - 1.0).abs() < 1e-12);
    }
}

#[cfg(test)]
mod tau_def_tests {
    use super::*;
    use crate::calibration::build_calibration;
    use crate::catalog;

    #[test]
    fn tau_def_is_second_order() {
        for (name, text, cfg, guess) in [
            ("a2", catalog::A2, TimeConfiguration::topological().with_time((0, 0), 0.3).with_time((1, 0), 0.1), vec![0.3, 0.1]),
            ("a2 nonlinear", catalog::A2, TimeConfiguration::topological().with_time((0, 0), 0.3).with_time((1, 0), 0.1).with_time((1, 1), 0.05), vec![0.3, 0.1]),
            ("a3", catalog::A3, TimeConfiguration::topological().with_time((0, 0), 0.2).with_time((1, 0), 0.1).with_time((2, 0), 0.3), vec![0.2, 0.1, 0.3]),
        ] {
            let sf = catalog::load(text).unwrap();
            let cal = build_calibration(&sf.solution, sf.conformal.as_ref(), 4).unwrap();
            let om = cal.omega_table().unwrap();
            let r = check_tau_def(&cal, &om, &cfg, &guess, 1e-3).unwrap();
            eprintln!("{name}: {r:?}");
            assert!(r.deviation <= 1e-6, "{name}");
            assert!(r.richardson >= 3.5, "{name}");
        }
    }
}
