//! Existence and boundedness gates for the multiplicative-noise heat
//! equation, and the deterministic (α, q) selection used by the
//! occupation-measure tightness argument.
//!
//! The gates are algebraic conditions on Υ_α(0) and the Lipschitz
//! constant of the noise coefficient b:
//!
//!   Dalang:      Υ_0(β) < ∞ for some (hence all) β > 0,
//!   zero-shift:  Υ(0) := Υ_0(0) < ∞,
//!   smallness:   128 · L_b² · Υ(0) < 1,
//!
//! and the selection picks α inside (64 L_b² Υ(0), α_max) with
//! Υ_{2α}(0) < ∞ and q inside (1/α, 1/(64 L_b² Υ(0))). The bounds only
//! assert the windows are nonempty; the midpoint/geometric-mean picks
//! below make runs reproducible.

use crate::kernels::SpectralModel;
use crate::specfun::gamma;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Lipschitz data of the noise coefficient: |b(x,u)−b(x,v)| ≤ L_b|u−v|
/// and |b(x,0)| ≤ L_0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSpec {
    pub l_b: f64,
    pub l_0: f64,
}

impl LipschitzSpec {
    /// L_b = 0 is allowed as the degenerate (deterministic) case.
    pub fn new(l_b: f64, l_0: f64) -> Result<Self, String> {
        if !(l_b >= 0.0) || !(l_0 >= 0.0) {
            return Err(format!("Lipschitz data must be nonnegative, got ({l_b}, {l_0})"));
        }
        Ok(LipschitzSpec { l_b, l_0 })
    }

    /// ς̄ = L_0/L_b, the relative size of the additive part.
    pub fn varsigma_bar(&self) -> f64 {
        if self.l_b == 0.0 {
            if self.l_0 == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.l_0 / self.l_b
        }
    }

    /// Moment growth rate γ_p = 32 p L_b², strictly increasing in p
    /// whenever L_b > 0.
    pub fn gamma_p(&self, p: f64) -> f64 {
        32.0 * p * self.l_b * self.l_b
    }
}

/// Outcome of the gate evaluation. `interval` is the statement-level
/// α window (2^7 L_b² Υ(0), 1); the selected pair lives in the tighter
/// proof-level window, see [`select_alpha_q`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub dalang_ok: bool,
    pub upsilon0: f64,
    pub dalang00_ok: bool,
    pub lip_ok: bool,
    pub interval: (f64, f64),
    pub alpha_star: Option<f64>,
    pub q_star: Option<f64>,
    /// Secondary check: α⋆ also lies in the statement-level interval
    /// with Υ_{α⋆}(0) < ∞. The statement and the proof carry slightly
    /// different windows; selection follows the proof, this flag
    /// reports the statement.
    pub statement_window_ok: Option<bool>,
    pub hua_ok: bool,
}

/// Selection outcome for the (α, q) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AlphaQSelection {
    Pair { alpha: f64, q: f64 },
    Empty { binding_constraint: String },
}

impl AlphaQSelection {
    pub fn pair(&self) -> Option<(f64, f64)> {
        match self {
            AlphaQSelection::Pair { alpha, q } => Some((*alpha, *q)),
            AlphaQSelection::Empty { .. } => None,
        }
    }
}

/// Largest admissible Lipschitz constant (128 Υ(0))^{−1/2}, or 0 when
/// Υ(0) = ∞ (no admissible constant; the zero flag is the sentinel).
pub fn max_lipschitz(model: &SpectralModel) -> f64 {
    let u0 = model.upsilon(0.0, 0.0);
    if u0.is_finite() {
        1.0 / (128.0 * u0).sqrt()
    } else {
        0.0
    }
}

/// Evaluates all gates and, when the smallness condition holds, the
/// (α, q) selection and the hardy-uncertainty consistency check at the
/// selected α on the default grid {0.1, 1, 10, 100}.
pub fn check_conditions(model: &SpectralModel, lip: &LipschitzSpec) -> ConditionReport {
    let dalang_ok = model.upsilon(0.0, 1.0).is_finite();
    let upsilon0 = model.upsilon(0.0, 0.0);
    let dalang00_ok = upsilon0.is_finite();
    let lo = 128.0 * lip.l_b * lip.l_b * upsilon0;
    let lip_ok = lo < 1.0;
    let selection = select_alpha_q(model, lip);
    let (alpha_star, q_star) = match selection.pair() {
        Some((a, q)) => (Some(a), Some(q)),
        None => (None, None),
    };
    let statement_window_ok = alpha_star.map(|a| {
        let (wlo, whi) = model.upsilon_alpha_window();
        lo < a && a < 1.0 && wlo < a && a < whi
    });
    let hua_ok = match alpha_star {
        Some(a) => hua_check(model, a, &[0.1, 1.0, 10.0, 100.0]).ok,
        None => false,
    };
    ConditionReport {
        dalang_ok,
        upsilon0,
        dalang00_ok,
        lip_ok,
        interval: (lo, 1.0),
        alpha_star,
        q_star,
        statement_window_ok,
        hua_ok,
    }
}

/// Midpoint-α / geometric-mean-q selection inside the proof-level
/// windows 64 L_b² Υ(0) < 1/q < α < α_max, where α_max caps α at 1/2
/// and at the finiteness boundary of Υ_{2α}(0). For the
/// correlation-side Bessel family this reproduces
/// α_max = 1/2 − (d−s)₊/4.
pub fn select_alpha_q(model: &SpectralModel, lip: &LipschitzSpec) -> AlphaQSelection {
    let u0 = model.upsilon(0.0, 0.0);
    if !u0.is_finite() {
        return AlphaQSelection::Empty {
            binding_constraint: "Upsilon(0) = infinity: smallness condition unsatisfiable".into(),
        };
    }
    let lo_lip = 64.0 * lip.l_b * lip.l_b * u0;
    // Υ_{2α}(0) < ∞ ⟺ 2α in the model's symbolic window.
    let (wlo, whi) = model.upsilon_alpha_window();
    let alpha_lo = lo_lip.max(wlo / 2.0);
    let alpha_hi = (whi / 2.0).min(0.5);
    if !(alpha_lo < alpha_hi) {
        let binding = if lo_lip >= alpha_hi {
            format!(
                "64*L_b^2*Upsilon(0) = {lo_lip:.6} >= alpha_max = {alpha_hi:.6}: noise too strong"
            )
        } else {
            format!(
                "Upsilon_2a(0) finite only for alpha in ({:.6}, {:.6}): window empty",
                wlo / 2.0,
                whi / 2.0
            )
        };
        return AlphaQSelection::Empty { binding_constraint: binding };
    }
    let alpha = 0.5 * (alpha_lo + alpha_hi);
    // q between 1/α and 1/(64 L_b² Υ(0)); the upper end is +∞ in the
    // degenerate L_b = 0 case, where doubling the lower end is the
    // deterministic stand-in for the geometric mean.
    let q = if lo_lip > 0.0 {
        ((1.0 / alpha) * (1.0 / lo_lip)).sqrt()
    } else {
        2.0 / alpha
    };
    AlphaQSelection::Pair { alpha, q }
}

/// Consistency report for the two-sided comparison between H_α and
/// Υ_{2α}(0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuaReport {
    pub ok: bool,
    /// (2π)^d Γ(1−2α) Υ_{2α}(0), the t → ∞ limit of H_α(t).
    pub h_limit: f64,
    /// Worst relative slack of (2π)^{−d} H_α(t) ≤ Γ(1−2α) Υ_{2α}(0).
    pub worst_upper_slack: f64,
    pub worst_upper_t: f64,
    /// Worst relative slack of
    /// Υ_{2α}(0) ≤ (2π)^{−d} H_α(t)/Γ(1−2α) + Υ(0)/(Γ(1−2α) t^{2α}).
    pub worst_lower_slack: f64,
    pub worst_lower_t: f64,
    /// H_α(max t)/h_limit, approaching 1 from below for large grids.
    pub ratio_at_last_t: f64,
}

/// Checks both inequalities relating H_α(t) to Υ_{2α}(0) on a time
/// grid. Slack below −1e−6 (relative to the limit scale) marks
/// failure; the report carries the worst offender of each side.
///
/// α = 1/2 is excluded: H_{1/2} diverges logarithmically at the lower
/// endpoint and the comparison degenerates.
pub fn hua_check(model: &SpectralModel, alpha: f64, t_grid: &[f64]) -> HuaReport {
    assert!(alpha > 0.0 && alpha < 0.5, "hua_check requires alpha in (0, 1/2)");
    let d = model.d as f64;
    let g1 = gamma(1.0 - 2.0 * alpha);
    let ups2a = model.upsilon(2.0 * alpha, 0.0);
    let ups0 = model.upsilon(0.0, 0.0);
    let norm = (2.0 * PI).powf(-d);
    let scale = g1 * ups2a;
    let mut worst_upper = f64::INFINITY;
    let mut worst_upper_t = f64::NAN;
    let mut worst_lower = f64::INFINITY;
    let mut worst_lower_t = f64::NAN;
    let mut last_ratio = f64::NAN;
    for &t in t_grid {
        let h = model.h_alpha(alpha, t);
        let upper_slack = (scale - norm * h) / scale;
        if upper_slack < worst_upper {
            worst_upper = upper_slack;
            worst_upper_t = t;
        }
        let rhs = norm * h / g1 + ups0 / (g1 * t.powf(2.0 * alpha));
        let lower_slack = (rhs - ups2a) / ups2a;
        if lower_slack < worst_lower {
            worst_lower = lower_slack;
            worst_lower_t = t;
        }
        last_ratio = norm * h / scale;
    }
    HuaReport {
        ok: worst_upper >= -1e-6 && worst_lower >= -1e-6,
        h_limit: scale / norm,
        worst_upper_slack: worst_upper,
        worst_upper_t,
        worst_lower_slack: worst_lower,
        worst_lower_t,
        ratio_at_last_t: last_ratio,
    }
}
