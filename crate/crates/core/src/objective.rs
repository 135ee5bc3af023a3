//! Thermodynamic evaluation function and its bounded maximizer.
//!
//! ```text
//! G(u)     = 1 − exp(−γ u)
//! Φ(u, D)  = κ D (exp(β u) − 1)
//! TΔS(u,D) = T s0 D (1 − u²)
//! J(u)     = α G(u) − Φ(u, D) − TΔS(u, D)
//! ```
//!
//! All terms are power (energy per unit time). The entropy penalty uses a
//! quadratic rectification profile: residual entropy is removed only where a
//! fluctuation is both observed and acted upon, each in proportion to `u`.
//! With a linear profile `J(u) − J(0)` is strictly concave and the optimum
//! could only decay continuously to zero; the quadratic profile makes the
//! loss of control a genuine jump.

use serde::{Deserialize, Serialize};

use crate::error::{check_control, check_noise, domain, Result};

/// Coarse grid size used to capture the global maximum before refinement.
pub const GRID_POINTS: usize = 1024;

/// Interior optima within this margin of `J(0)` count as abandonment.
pub const TIE_EPS: f64 = 1e-12;

/// Default resolution in `u` for [`optimize_u`].
pub const DEFAULT_TOL: f64 = 1e-9;

/// Thermodynamic and economic coefficients of one router.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RouterParams {
    /// Value of energy quality per unit gain (power).
    pub alpha: f64,
    /// Gain saturation rate.
    pub gamma: f64,
    /// Dissipation constant per unit noise intensity (power).
    pub kappa: f64,
    /// Computational-complexity exponent.
    pub beta: f64,
    /// Effective temperature.
    pub temperature: f64,
    /// Residual-entropy coefficient `s0`, per unit noise intensity.
    pub entropy_coeff: f64,
}

impl Default for RouterParams {
    /// Calibrated so that the single-router critical noise sits at `D_c ≈ 2.21`.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma: 5.0,
            kappa: 0.46,
            beta: 5.0,
            temperature: 1.0,
            entropy_coeff: 12.05,
        }
    }
}

impl RouterParams {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(domain(name, v, "must be finite and non-negative"))
            }
        };
        let finite_pos = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(domain(name, v, "must be finite and positive"))
            }
        };
        finite_nonneg("alpha", self.alpha)?;
        finite_pos("gamma", self.gamma)?;
        finite_nonneg("kappa", self.kappa)?;
        finite_pos("beta", self.beta)?;
        finite_nonneg("temperature", self.temperature)?;
        finite_nonneg("entropy_coeff", self.entropy_coeff)?;
        Ok(())
    }

    /// `J(u)` without domain checks. Callers guarantee valid inputs.
    #[inline]
    pub(crate) fn j_raw(&self, u: f64, d: f64) -> f64 {
        self.alpha * gain_raw(u, self.gamma)
            - info_cost_raw(u, d, self.kappa, self.beta)
            - entropy_raw(u, d, self)
    }
}

#[inline]
fn gain_raw(u: f64, gamma: f64) -> f64 {
    1.0 - (-gamma * u).exp()
}

#[inline]
pub(crate) fn info_cost_raw(u: f64, d: f64, kappa: f64, beta: f64) -> f64 {
    kappa * d * (beta * u).exp_m1()
}

#[inline]
pub(crate) fn entropy_raw(u: f64, d: f64, params: &RouterParams) -> f64 {
    params.temperature * params.entropy_coeff * d * (1.0 - u * u)
}

/// Demand-satisfaction gain `1 − exp(−γ u)`.
pub fn gain(u: f64, gamma: f64) -> Result<f64> {
    check_control(u)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(domain("gamma", gamma, "must be finite and positive"));
    }
    Ok(gain_raw(u, gamma))
}

/// Information-processing dissipation `κ D (exp(β u) − 1)`.
pub fn info_cost(u: f64, d: f64, kappa: f64, beta: f64) -> Result<f64> {
    check_control(u)?;
    check_noise(d)?;
    Ok(info_cost_raw(u, d, kappa, beta))
}

/// Residual-entropy quality loss `T s0 D (1 − u²)`.
pub fn entropy_penalty(u: f64, d: f64, params: &RouterParams) -> Result<f64> {
    check_control(u)?;
    check_noise(d)?;
    Ok(entropy_raw(u, d, params))
}

/// Evaluation function `J(u) = α G(u) − Φ(u, D) − TΔS(u, D)`.
pub fn evaluate_j(u: f64, d: f64, params: &RouterParams) -> Result<f64> {
    check_control(u)?;
    check_noise(d)?;
    params.validate()?;
    Ok(params.j_raw(u, d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub u_star: f64,
    pub j_star: f64,
    pub j_at_zero: f64,
    /// `u_star = 0` because no positive effort strictly beats the origin.
    pub abandoned: bool,
}

/// Maximizes `J` over `u ∈ [0, 1]` for noise intensity `d`.
///
/// A 1024-point grid locates the global maximum (J can be bimodal near the
/// transition: the origin versus an interior peak), then golden-section search
/// refines inside the neighbouring grid cells until the bracket is narrower
/// than `tol`. If the best positive effort does not beat `J(0)` by more than
/// [`TIE_EPS`], the result is `u = 0` with `abandoned = true`.
pub fn optimize_u(d: f64, params: &RouterParams, tol: f64) -> Result<OptimizationResult> {
    check_noise(d)?;
    params.validate()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(domain("tol", tol, "must be finite and positive"));
    }
    Ok(optimize_raw(d, params, tol))
}

pub(crate) fn optimize_raw(d: f64, params: &RouterParams, tol: f64) -> OptimizationResult {
    let j = |u: f64| params.j_raw(u, d);
    let j_at_zero = j(0.0);
    let step = 1.0 / (GRID_POINTS - 1) as f64;

    // Best positive grid point; the origin is handled separately. The grid
    // only picks the bracket, so exponentials advance by recurrence.
    let decay = (-params.gamma * step).exp();
    let growth = (params.beta * step).exp();
    let ts = params.temperature * params.entropy_coeff * d;
    let cost = params.kappa * d;
    let (mut e_gain, mut e_cost) = (1.0, 1.0);
    let (mut best_i, mut best_j) = (1, f64::NEG_INFINITY);
    for i in 1..GRID_POINTS {
        e_gain *= decay;
        e_cost *= growth;
        let u = i as f64 * step;
        let v = params.alpha * (1.0 - e_gain) - cost * (e_cost - 1.0) - ts * (1.0 - u * u);
        if v > best_j {
            best_i = i;
            best_j = v;
        }
    }
    let mut best_u = best_i as f64 * step;
    best_j = j(best_u);

    let lo = (best_i - 1) as f64 * step;
    let hi = ((best_i + 1) as f64 * step).min(1.0);
    let (gu, gj) = golden_max(&j, lo, hi, tol);
    if gu > 0.0 && gj > best_j {
        best_u = gu;
        best_j = gj;
    }

    if best_j - j_at_zero > TIE_EPS {
        OptimizationResult {
            u_star: best_u,
            j_star: best_j,
            j_at_zero,
            abandoned: false,
        }
    } else {
        OptimizationResult {
            u_star: 0.0,
            j_star: j_at_zero,
            j_at_zero,
            abandoned: true,
        }
    }
}

/// Golden-section maximization on `[lo, hi]`; returns the best evaluated point.
fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut e = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fe = f(e);
    let mut best = if fc >= fe { (c, fc) } else { (e, fe) };
    for (u, v) in [(lo, f(lo)), (hi, f(hi))] {
        if v > best.1 {
            best = (u, v);
        }
    }
    while hi - lo > tol {
        if fc >= fe {
            hi = e;
            e = c;
            fe = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + INV_PHI * (hi - lo);
            fe = f(e);
            if fe > best.1 {
                best = (e, fe);
            }
        }
    }
    best
}
