//! Experiment orchestration and file emission.
//!
//! Each experiment writes its CSV data files, the effective config
//! (`effective_config.json`) and a `manifest.json` into the output directory.
//! Floats are written in shortest round-trip decimal form, so CSVs reload
//! bit-exactly and identical runs produce identical bytes.

mod config;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    load_config, ConfigError, CriticalConfig, ExperimentConfig, ExperimentKind, LandscapeConfig,
    NetworkCriticalConfig, NetworkRunConfig, ScheduleConfig,
};

use crate::bifurcation::{find_critical, sweep, SweepSpec};
use crate::error::ModelError;
use crate::network::{network_critical, run_network, BurstScenario, NodeRecord};
use crate::objective::{entropy_penalty, gain, info_cost, RouterParams};
use crate::router::{run_single, TrajectoryRecord};

pub const TRAJECTORY_COLUMNS: [&str; 8] = [
    "t",
    "x",
    "u_star",
    "d_true",
    "d_hat",
    "phi_loss",
    "entropy_loss",
    "j_value",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub started: String,
    pub finished: String,
    /// Output files relative to the output directory.
    pub outputs: Vec<String>,
}

/// Collects output files written into one directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_owned(),
            files: Vec::new(),
        })
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.files.push(name.to_owned());
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_owned());
        Ok(())
    }
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn trajectory_row(r: &TrajectoryRecord) -> Vec<String> {
    [r.t, r.x, r.u_star, r.d_true, r.d_hat, r.phi_loss, r.entropy_loss, r.j_value]
        .into_iter()
        .map(fmt_f64)
        .collect()
}

fn node_row(r: &NodeRecord) -> Vec<String> {
    let mut row = trajectory_row(&r.base);
    row.push(fmt_f64(r.coupling_flux));
    row
}

/// One `J(u)` curve on an even grid of `n_u` points, with its grid argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeCurve {
    pub d: f64,
    /// `(u, J, G, Φ, TΔS)` per grid point.
    pub points: Vec<[f64; 5]>,
    pub u_argmax: f64,
    pub j_max: f64,
}

pub fn landscape(params: &RouterParams, d: f64, n_u: usize) -> Result<LandscapeCurve, ModelError> {
    params.validate()?;
    let mut points = Vec::with_capacity(n_u);
    let (mut u_argmax, mut j_max) = (0.0, f64::NEG_INFINITY);
    for i in 0..n_u {
        let u = if i + 1 == n_u { 1.0 } else { i as f64 / (n_u - 1) as f64 };
        let g = gain(u, params.gamma)?;
        let phi = info_cost(u, d, params.kappa, params.beta)?;
        let ts = entropy_penalty(u, d, params)?;
        let j = params.alpha * g - phi - ts;
        if j > j_max {
            u_argmax = u;
            j_max = j;
        }
        points.push([u, j, g, phi, ts]);
    }
    Ok(LandscapeCurve {
        d,
        points,
        u_argmax,
        j_max,
    })
}

/// Runs the configured experiment and writes all outputs into `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest, ExperimentError> {
    config.validate()?;
    let started = chrono::Utc::now().to_rfc3339();
    let mut out = Outputs::new(&config.output)?;

    match config.experiment {
        ExperimentKind::Single => {
            let schedule = config.schedule.build(&config.sim, config.seed)?;
            let recs = run_single(&config.params, &config.estimator, &schedule, &config.sim, config.seed)?;
            out.csv("trajectory.csv", &TRAJECTORY_COLUMNS, recs.iter().map(trajectory_row))?;
        }
        ExperimentKind::Sweep => {
            let spec = SweepSpec {
                params: config.params,
                ..config.sweep
            };
            let curve = sweep(&spec)?;
            out.csv(
                "bifurcation.csv",
                &["D", "u_star", "j_star", "abandoned"],
                curve.iter().map(|p| {
                    vec![
                        fmt_f64(p.d),
                        fmt_f64(p.u_star),
                        fmt_f64(p.j_star),
                        p.abandoned.to_string(),
                    ]
                }),
            )?;
        }
        ExperimentKind::Critical => {
            let c = &config.critical;
            let cp = find_critical(&config.params, c.d_lo, c.d_hi, c.tol)?;
            let order = serde_json::to_value(cp.order).expect("enum serializes");
            out.csv(
                "critical.csv",
                &["d_c", "u_before", "u_after", "order"],
                [vec![
                    fmt_f64(cp.d_c),
                    fmt_f64(cp.u_before),
                    fmt_f64(cp.u_after),
                    order.as_str().unwrap_or_default().to_owned(),
                ]],
            )?;
        }
        ExperimentKind::Landscape => {
            let l = &config.landscape;
            let curves = l
                .d_values
                .iter()
                .map(|&d| landscape(&config.params, d, l.n_u))
                .collect::<Result<Vec<_>, _>>()?;
            out.csv(
                "landscape.csv",
                &["D", "u", "j", "gain", "info_cost", "entropy_penalty"],
                curves.iter().flat_map(|c| {
                    c.points.iter().map(move |p| {
                        std::iter::once(c.d).chain(p.iter().copied()).map(fmt_f64).collect()
                    })
                }),
            )?;
            out.csv(
                "landscape_peaks.csv",
                &["D", "u_argmax", "j_max"],
                curves
                    .iter()
                    .map(|c| vec![fmt_f64(c.d), fmt_f64(c.u_argmax), fmt_f64(c.j_max)]),
            )?;
        }
        ExperimentKind::Network => {
            let n = &config.network;
            let d_burst = n.d_burst.unwrap_or(n.scenario.d_base);
            let spec = n.scenario.network(&config.params, d_burst)?;
            let per_node = run_network(&spec, &n.estimator, &n.sim, config.seed)?;
            let mut header = TRAJECTORY_COLUMNS.to_vec();
            header.push("coupling_flux");
            for (i, recs) in per_node.iter().enumerate() {
                out.csv(&format!("node_{i}.csv"), &header, recs.iter().map(node_row))?;
            }
        }
        ExperimentKind::NetworkCritical => {
            let nc = &config.network_critical;
            let mut rows = Vec::new();
            let mut summary = Vec::new();
            for &g in &nc.g_values {
                let scenario = BurstScenario {
                    g,
                    ..nc.scenario.clone()
                };
                let res = network_critical(&scenario, &config.params, &nc.estimator, &nc.sim, nc.d_lo, nc.d_hi, nc.tol)?;
                for (seed, d_c) in scenario.seeds.iter().zip(&res.per_seed) {
                    rows.push(vec![fmt_f64(g), seed.to_string(), fmt_f64(*d_c)]);
                }
                summary.push(vec![fmt_f64(g), fmt_f64(res.median)]);
            }
            out.csv("network_critical.csv", &["g", "seed", "d_c"], rows)?;
            out.csv("network_critical_summary.csv", &["g", "median_d_c"], summary)?;
        }
    }

    out.text("effective_config.json", &config.to_json())?;
    let mut manifest = RunManifest {
        config_hash: config.hash(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        experiment: config.experiment,
        seed: config.seed,
        started,
        finished: String::new(),
        outputs: Vec::new(),
    };
    manifest.finished = chrono::Utc::now().to_rfc3339();
    out.files.push("manifest.json".to_owned());
    manifest.outputs = out.files.clone();
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(config.output.join("manifest.json"), body)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.2121e-17, -0.0, 12.05, f64::MAX] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn landscape_peak_moves_left() {
        let p = RouterParams::default();
        let peaks: Vec<f64> = [0.5, 1.5, 2.5]
            .iter()
            .map(|&d| landscape(&p, d, 1001).unwrap().u_argmax)
            .collect();
        assert!(peaks[0] > peaks[1] && peaks[1] > peaks[2], "{peaks:?}");
    }

    #[test]
    fn landscape_components_compose() {
        let c = landscape(&RouterParams::default(), 1.0, 11).unwrap();
        assert_eq!(c.points.len(), 11);
        for [_, j, g, phi, ts] in c.points {
            assert_eq!(j, g - phi - ts);
        }
    }
}
