//! How inversion acts on times, tau functions and hierarchy flows.
//!
//! ```text
//! t̂^{1,0} = x̂,  t̂^{1,p} = −t^{n,p−1},  t̂^{i,p} = t^{i,p},  t̂^{n,p} = t^{1,p+1}
//! ĉ^{1,0} = 0,  ĉ^{1,p+1} = −c^{n,p},  ĉ^{i,p} = c^{i,p},  ĉ^{n,p} = c^{1,p+1}
//! x̂ = ∂_x log τ,   log τ̂ = log τ − x ∂_x log τ
//! ```

use crate::algebra::{Matrix, RationalFunction};
use crate::calibration::{Calibration, OmegaTable};
use crate::error::{Error, Result};
use crate::hierarchy::{dlogtau_dx, flow, hodograph_solve, tau_log, HodographSolution, Slot, TimeConfiguration};
use crate::inversion::inversion_map;

/// The hatted slot a slot moves to, with its sign. `(1,0)` has no image: it becomes `x̂`.
pub fn hat_slot(n: usize, slot: Slot) -> Option<(Slot, f64)> {
    let (a, p) = slot;
    if a == 0 {
        (p >= 1).then(|| ((n - 1, p - 1), 1.0))
    } else if a + 1 == n {
        Some(((0, p + 1), -1.0))
    } else {
        Some((slot, 1.0))
    }
}

/// Hatted times and shifts; `hat_x` fills `t̂^{1,0}`.
pub fn transform_times(config: &TimeConfiguration, n: usize, hat_x: f64) -> TimeConfiguration {
    let mut out = TimeConfiguration::new();
    out.times.insert((0, 0), hat_x);
    for (&s, &t) in &config.times {
        if let Some((h, sign)) = hat_slot(n, s) {
            out.times.insert(h, sign * t);
        }
    }
    for (&s, c) in &config.shifts {
        if let Some((h, sign)) = hat_slot(n, s) {
            out.shifts.insert(h, if sign < 0.0 { -c } else { c.clone() });
        }
    }
    out
}

/// Smallest calibration level whose `Ω` tables cover every active pair on both sides
/// (the hatted side has one level less).
pub fn required_level(config: &TimeConfiguration, n: usize) -> usize {
    let hat_top = config
        .active()
        .into_iter()
        .filter_map(|s| hat_slot(n, s))
        .map(|((_, p), _)| p)
        .max()
        .unwrap_or(0);
    (2 * config.max_level() + 1).max(2 * hat_top + 2).max(4)
}

/// `x̂ = ∂ log τ / ∂x` on a hodograph solution.
pub fn hat_x_of(cal: &Calibration, sol: &HodographSolution) -> Result<f64> {
    dlogtau_dx(cal, &sol.config, &sol.v)
}

pub fn legendre_tau(logtau: f64, x: f64, dlogtau_dx: f64) -> f64 {
    logtau - x * dlogtau_dx
}

/// Inverse transform: `(log τ, x)` from `log τ̂` at `x̂` with `x = −∂_{x̂} log τ̂`.
pub fn inverse_legendre_tau(logtau_hat: f64, hat_x: f64, dlogtau_hat_dhatx: f64) -> (f64, f64) {
    (logtau_hat - hat_x * dlogtau_hat_dhatx, -dlogtau_hat_dhatx)
}

/// Everything on both sides of the inversion for one time configuration.
#[derive(Clone, Debug)]
pub struct HattedPoint {
    pub sol: HodographSolution,
    pub v_hat: Vec<f64>,
    pub config_hat: TimeConfiguration,
    pub hat_x: f64,
}

pub fn hatted_point(cal: &Calibration, config: &TimeConfiguration, guess: &[f64]) -> Result<HattedPoint> {
    let n = cal.n();
    let sol = hodograph_solve(cal, config, guess)?;
    let map = inversion_map(n)?;
    let v_hat = map.forward_point(&sol.v)?;
    let hat_x = hat_x_of(cal, &sol)?;
    let config_hat = transform_times(config, n, hat_x);
    Ok(HattedPoint {
        sol,
        v_hat,
        config_hat,
        hat_x,
    })
}

/// `max_γ |Σ t̃̂^{α,p} ∂θ̂_{α,p}/∂v̂^γ (v̂)|`.
pub fn el_residual(cal_hat: &Calibration, config_hat: &TimeConfiguration, v_hat: &[f64]) -> Result<f64> {
    let n = cal_hat.n();
    let mut worst = 0.0f64;
    for g in 0..n {
        let mut r = 0.0;
        for s in config_hat.active() {
            let th = cal_hat.theta(s.0, s.1).ok_or(Error::LevelUnderflow {
                have: cal_hat.level(),
                need: s.1,
            })?;
            r += config_hat.tilde(s) * th.derivative(g).eval_f64(v_hat)?;
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// The hatted Euler–Lagrange residual at the image of a hodograph solution.
pub fn check_hatted_el(cal: &Calibration, cal_hat: &Calibration, config: &TimeConfiguration, guess: &[f64]) -> Result<f64> {
    let pt = hatted_point(cal, config, guess)?;
    el_residual(cal_hat, &pt.config_hat, &pt.v_hat)
}

#[derive(Clone, Debug)]
pub struct LegendreReport {
    /// `log τ − x ∂_x log τ`.
    pub from_unhatted: f64,
    /// `½ Σ t̃̂ t̃̂ Ω̂(v̂)`.
    pub from_hatted: f64,
    /// `x` recovered as `−∂_{x̂} log τ̂`.
    pub x_recovered: f64,
    /// `log τ` recovered by the inverse transform.
    pub logtau_recovered: f64,
    pub logtau: f64,
    pub x: f64,
}

impl LegendreReport {
    pub fn two_sided(&self) -> f64 {
        (self.from_unhatted - self.from_hatted).abs()
    }

    pub fn round_trip(&self) -> f64 {
        (self.x_recovered - self.x).abs().max((self.logtau_recovered - self.logtau).abs())
    }
}

pub fn legendre_check(
    cal: &Calibration,
    om: &OmegaTable,
    cal_hat: &Calibration,
    om_hat: &OmegaTable,
    config: &TimeConfiguration,
    guess: &[f64],
) -> Result<LegendreReport> {
    let pt = hatted_point(cal, config, guess)?;
    let logtau = tau_log(om, config, &pt.sol.v)?;
    let x = config.time((0, 0));
    let from_unhatted = legendre_tau(logtau, x, pt.hat_x);
    let from_hatted = tau_log(om_hat, &pt.config_hat, &pt.v_hat)?;
    let d_hat = dlogtau_dx(cal_hat, &pt.config_hat, &pt.v_hat)?;
    let (logtau_recovered, x_recovered) = inverse_legendre_tau(from_hatted, pt.hat_x, d_hat);
    Ok(LegendreReport {
        from_unhatted,
        from_hatted,
        x_recovered,
        logtau_recovered,
        logtau,
        x,
    })
}

/// `(α,p) ↦ (α',p')` for the `Ω`/`θ` relation, with `p' = −1` meaning the `(n,−1)` sentinel.
fn relation_slot(n: usize, a: usize, p: usize) -> (usize, i64) {
    if a == 0 {
        (n - 1, p as i64 - 1)
    } else if a + 1 == n {
        (0, p as i64 + 1)
    } else {
        (a, p as i64)
    }
}

#[derive(Clone, Debug)]
pub struct RelationReport {
    pub checked: usize,
    /// Hatted entries `(α,p,β,q)` (0-based `α`) whose identity fails.
    pub failures: Vec<(usize, usize, usize, usize)>,
}

/// `Ω̂_{α,p;β,q}(v̂(v)) = (−1)^{δ¹_α+δ¹_β}(Ω_{α',p';β',q'} − θ_{α',p'}θ_{β',q'}/v^n)` for every
/// hatted entry whose right-hand side is in the unhatted table.
pub fn check_omega_relation(cal: &Calibration, om: &OmegaTable, om_hat: &OmegaTable) -> Result<RelationReport> {
    let n = cal.n();
    let map = inversion_map(n)?;
    let inv_vn = RationalFunction::var(n - 1).recip()?;
    let mut checked = 0;
    let mut failures = Vec::new();
    for (&(a, p, b, q), e_hat) in om_hat.iter() {
        let (a1, p1) = relation_slot(n, a, p);
        let (b1, q1) = relation_slot(n, b, q);
        let (Ok(o), Some(ta), Some(tb)) = (om.get_ext(a1, p1, b1, q1), cal.theta_ext(a1, p1), cal.theta_ext(b1, q1)) else {
            continue;
        };
        let mut rhs = &o - &(&(&ta * &tb) * &inv_vn);
        if (a == 0) ^ (b == 0) {
            rhs = -rhs;
        }
        checked += 1;
        if map.pull_back(e_hat)? != rhs {
            failures.push((a, p, b, q));
        }
    }
    Ok(RelationReport { checked, failures })
}

/// Chain-rule image of a hatted flow in unhatted flows and `∂_x`:
/// `∂/∂t̂^{a} = ∂/∂t^{a'} ∓ (θ_{a'}/v^n) ∂_x`.
fn hatted_flow_in_v(cal: &Calibration, slot_hat: Slot) -> Result<Matrix> {
    let n = cal.n();
    let vn = RationalFunction::var(n - 1);
    let inv_vn = vn.recip()?;
    let (a, p) = slot_hat;
    let id = Matrix::identity(n);
    if a == 0 && p == 0 {
        return Ok(id.scale(&inv_vn));
    }
    let (src, sign) = if a == 0 {
        ((n - 1, p - 1), -1)
    } else if a + 1 == n {
        ((0, p + 1), 1)
    } else {
        ((a, p), 1)
    };
    let th = cal.theta(src.0, src.1).ok_or(Error::LevelUnderflow {
        have: cal.level(),
        need: src.1,
    })?;
    let m = flow(cal, src)?.a.sub(&id.scale(&(th * &inv_vn)));
    Ok(if sign < 0 { m.scale(&RationalFunction::from_int(-1)) } else { m })
}

/// `J M − (1/v^n) Â(v̂(v)) J` for a hatted slot; zero when the hatted flow is the
/// reciprocal image of the unhatted ones.
pub fn flow_correspondence_residual(cal: &Calibration, cal_hat: &Calibration, slot_hat: Slot) -> Result<Matrix> {
    let n = cal.n();
    let map = inversion_map(n)?;
    let jac = map.jacobian();
    let m = hatted_flow_in_v(cal, slot_hat)?;
    let a_hat = flow(cal_hat, slot_hat)?.a.try_map(|e| map.pull_back(e))?;
    let inv_vn = RationalFunction::var(n - 1).recip()?;
    Ok(jac.mul(&m).sub(&a_hat.mul(&jac).scale(&inv_vn)))
}
