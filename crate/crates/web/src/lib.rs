//! wasm-bindgen entry points for `www/index.html`.
//!
//! Results cross the boundary as flat `Float64Array`s with a fixed stride so
//! the page can plot them without any deserialization layer.

use ratchet::bifurcation::{discontinuities, sweep, SweepSpec};
use ratchet::estimator::EstimatorConfig;
use ratchet::io::landscape;
use ratchet::router::{pseudo_solar, run_single, SimConfig, SolarConfig};
use ratchet::RouterParams;
use wasm_bindgen::prelude::*;

fn params(kappa: f64, entropy_coeff: f64) -> RouterParams {
    RouterParams {
        kappa,
        entropy_coeff,
        ..RouterParams::default()
    }
}

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// `J(u)` on `n_u` points of `[0, 1]`; stride 2: `u, J`.
#[wasm_bindgen]
pub fn landscape_curve(d: f64, kappa: f64, entropy_coeff: f64, n_u: usize) -> Result<Vec<f64>, JsValue> {
    let curve = landscape(&params(kappa, entropy_coeff), d, n_u.max(2)).map_err(js_err)?;
    Ok(curve.points.iter().flat_map(|p| [p[0], p[1]]).collect())
}

/// `u*(D)` on `n_points` of `[0, d_max]`; stride 2: `D, u*`.
#[wasm_bindgen]
pub fn sweep_curve(d_max: f64, n_points: usize, kappa: f64, entropy_coeff: f64) -> Result<Vec<f64>, JsValue> {
    let spec = SweepSpec {
        d_max,
        n_points,
        params: params(kappa, entropy_coeff),
        ..SweepSpec::default()
    };
    let curve = sweep(&spec).map_err(js_err)?;
    Ok(curve.iter().flat_map(|p| [p.d, p.u_star]).collect())
}

/// Noise intensity of the refined first jump of the sweep, or NaN if none.
#[wasm_bindgen]
pub fn jump_location(d_max: f64, n_points: usize, kappa: f64, entropy_coeff: f64) -> Result<f64, JsValue> {
    let spec = SweepSpec {
        d_max,
        n_points,
        params: params(kappa, entropy_coeff),
        ..SweepSpec::default()
    };
    let curve = sweep(&spec).map_err(js_err)?;
    Ok(discontinuities(&spec, &curve)
        .first()
        .map_or(f64::NAN, |j| 0.5 * (j.d_before + j.d_after)))
}

/// One router under a pseudo-solar day; stride 4: `t, x, u*, D_true`.
#[wasm_bindgen]
pub fn simulate_day(d_cloud: f64, t_end: f64, seed: u64) -> Result<Vec<f64>, JsValue> {
    let sim = SimConfig {
        t_end,
        record_every: 50,
        ..SimConfig::default()
    };
    let solar = SolarConfig {
        d_cloud,
        day_length: t_end,
        horizon: t_end,
        ..SolarConfig::default()
    };
    let schedule = pseudo_solar(&solar, seed).map_err(js_err)?;
    let recs = run_single(&RouterParams::default(), &EstimatorConfig::default(), &schedule, &sim, seed)
        .map_err(js_err)?;
    Ok(recs.iter().flat_map(|r| [r.t, r.x, r.u_star, r.d_true]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_and_jump() {
        let p = RouterParams::default();
        assert_eq!(landscape_curve(1.0, p.kappa, p.entropy_coeff, 11).unwrap().len(), 22);
        assert_eq!(sweep_curve(4.0, 41, p.kappa, p.entropy_coeff).unwrap().len(), 82);
        let d = jump_location(4.0, 401, p.kappa, p.entropy_coeff).unwrap();
        assert!((d - 2.21).abs() < 0.05, "{d}");
        assert_eq!(simulate_day(3.0, 1.0, 0).unwrap().len() % 4, 0);
    }
}
