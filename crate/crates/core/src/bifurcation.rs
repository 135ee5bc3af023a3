//! `u*(D)` sweeps and location of the abandonment transition.
//!
//! The critical point is the boundary of the abandonment indicator of
//! [`optimize_u`](crate::objective::optimize_u): below it an interior effort
//! beats the origin, above it nothing does. Because `u*` is a memoryless
//! argmax there is no hysteresis; upward and downward sweeps coincide.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_noise, domain, ModelError, Result};
use crate::objective::{optimize_raw, RouterParams, DEFAULT_TOL};

pub const DEFAULT_JUMP_THRESHOLD: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub d_min: f64,
    pub d_max: f64,
    pub n_points: usize,
    #[serde(skip)]
    pub params: RouterParams,
    /// Smallest drop in `u*` between neighbours reported as a discontinuity.
    pub jump_threshold: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            d_min: 0.0,
            d_max: 4.0,
            n_points: 401,
            params: RouterParams::default(),
            jump_threshold: DEFAULT_JUMP_THRESHOLD,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        check_noise(self.d_min)?;
        if !(self.d_max.is_finite() && self.d_max > self.d_min) {
            return Err(domain("d_max", self.d_max, "must exceed d_min"));
        }
        if self.n_points < 2 {
            return Err(domain("n_points", self.n_points as f64, "must be at least 2"));
        }
        if !(self.jump_threshold.is_finite() && self.jump_threshold > 0.0) {
            return Err(domain("jump_threshold", self.jump_threshold, "must be positive"));
        }
        self.params.validate()
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let step = (self.d_max - self.d_min) / (self.n_points - 1) as f64;
        (0..self.n_points).map(move |i| {
            if i + 1 == self.n_points {
                self.d_max
            } else {
                self.d_min + i as f64 * step
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub d: f64,
    pub u_star: f64,
    pub j_star: f64,
    pub abandoned: bool,
}

/// Evaluates the optimizer on the ascending `D` grid. Grid points run in
/// parallel on the current rayon pool; output order follows the grid.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let grid: Vec<f64> = spec.grid().collect();
    Ok(grid
        .par_iter()
        .map(|&d| {
            let r = optimize_raw(d, &spec.params, DEFAULT_TOL);
            SweepPoint {
                d,
                u_star: r.u_star,
                j_star: r.j_star,
                abandoned: r.abandoned,
            }
        })
        .collect())
}

/// A drop in `u*` between adjacent sweep points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub index: usize,
    pub d_before: f64,
    pub d_after: f64,
    pub u_before: f64,
    pub u_after: f64,
}

pub fn detect_jumps(curve: &[SweepPoint], threshold: f64) -> Vec<Jump> {
    curve
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].u_star - w[1].u_star >= threshold)
        .map(|(i, w)| Jump {
            index: i,
            d_before: w[0].d,
            d_after: w[1].d,
            u_before: w[0].u_star,
            u_after: w[1].u_star,
        })
        .collect()
}

/// Width below which a surviving drop counts as a true discontinuity.
const REFINE_WIDTH: f64 = 1e-9;

/// Candidate jumps from [`detect_jumps`] that survive refinement: each cell is
/// bisected toward the half carrying the larger drop until it is narrower than
/// `1e-9`. Steep but continuous stretches shrink away; genuine jumps keep a
/// drop of at least `spec.jump_threshold`. Reported `u_before`/`u_after` are
/// the limits at the refined cell.
pub fn discontinuities(spec: &SweepSpec, curve: &[SweepPoint]) -> Vec<Jump> {
    let u_at = |d: f64| optimize_raw(d, &spec.params, DEFAULT_TOL).u_star;
    detect_jumps(curve, spec.jump_threshold)
        .into_iter()
        .filter_map(|j| {
            let (mut lo, mut hi) = (j.d_before, j.d_after);
            let (mut u_lo, mut u_hi) = (j.u_before, j.u_after);
            while hi - lo > REFINE_WIDTH {
                let mid = 0.5 * (lo + hi);
                let u_mid = u_at(mid);
                if u_lo - u_mid >= u_mid - u_hi {
                    hi = mid;
                    u_hi = u_mid;
                } else {
                    lo = mid;
                    u_lo = u_mid;
                }
            }
            (u_lo - u_hi >= spec.jump_threshold).then_some(Jump {
                u_before: u_lo,
                u_after: u_hi,
                ..j
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionOrder {
    FirstOrder,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub d_c: f64,
    pub u_before: f64,
    pub u_after: f64,
    pub order: TransitionOrder,
}

/// Generic bisection on a monotone boolean indicator: `at(lo) = false`,
/// `at(hi) = true`. Returns the final bracket.
pub fn bisect_indicator(
    mut at: impl FnMut(f64) -> Result<bool>,
    d_lo: f64,
    d_hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(domain("tol", tol, "must be finite and positive"));
    }
    if !(d_lo.is_finite() && d_hi.is_finite() && d_lo < d_hi) {
        return Err(domain("d_hi", d_hi, "bracket must satisfy d_lo < d_hi"));
    }
    let (at_lo, at_hi) = (at(d_lo)?, at(d_hi)?);
    if at_lo || !at_hi {
        return Err(ModelError::NotBracketed {
            lo: d_lo,
            hi: d_hi,
            at_lo,
            at_hi,
        });
    }
    let (mut lo, mut hi) = (d_lo, d_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Bisects the abandonment indicator of the optimizer on `[d_lo, d_hi]`.
pub fn find_critical(params: &RouterParams, d_lo: f64, d_hi: f64, tol: f64) -> Result<CriticalPoint> {
    params.validate()?;
    check_noise(d_lo)?;
    let abandoned = |d: f64| Ok(optimize_raw(d, params, DEFAULT_TOL).abandoned);
    let (lo, hi) = bisect_indicator(abandoned, d_lo, d_hi, tol)?;
    let u_before = optimize_raw(lo, params, DEFAULT_TOL).u_star;
    let u_after = optimize_raw(hi, params, DEFAULT_TOL).u_star;
    let order = if u_before - u_after >= DEFAULT_JUMP_THRESHOLD {
        TransitionOrder::FirstOrder
    } else {
        TransitionOrder::None
    };
    Ok(CriticalPoint {
        d_c: 0.5 * (lo + hi),
        u_before,
        u_after,
        order,
    })
}
