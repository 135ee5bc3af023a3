//! Diffusively coupled routers.
//!
//! Each node runs the single-router loop and additionally exchanges energy
//! with its neighbours at rate `g Σ_{j∈N_i} (x_j − x_i)`. Updates are
//! synchronous: every coupling term is evaluated on the pre-step state, which
//! keeps the exchange exactly antisymmetric. Node `i` draws its noise from RNG
//! stream `i` of the run seed, so coupling never perturbs the draws.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifurcation::bisect_indicator;
use crate::error::{domain, ModelError, Result};
use crate::estimator::EstimatorConfig;
use crate::objective::{info_cost_raw, RouterParams};
use crate::router::{advance, NoiseSchedule, Router, RouterState, SimConfig, TrajectoryRecord};

/// Graph shape used to build an edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    Line { n: usize },
    Ring { n: usize },
    /// Node 0 is the hub.
    Star { n: usize },
    Complete { n: usize },
    Edges { n: usize, edges: Vec<(usize, usize)> },
    /// Edge-list file, see [`parse_edge_list`].
    EdgeFile { n: usize, path: PathBuf },
}

impl Topology {
    pub fn n_nodes(&self) -> usize {
        match self {
            Self::Line { n } | Self::Ring { n } | Self::Star { n } | Self::Complete { n } => *n,
            Self::Edges { n, .. } | Self::EdgeFile { n, .. } => *n,
        }
    }

    pub fn edges(&self) -> Result<Vec<(usize, usize)>> {
        Ok(match *self {
            Self::Line { n } => (1..n).map(|i| (i - 1, i)).collect(),
            Self::Ring { n } => match n {
                0 | 1 => vec![],
                2 => vec![(0, 1)],
                _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            },
            Self::Star { n } => (1..n).map(|i| (0, i)).collect(),
            Self::Complete { n } => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect(),
            Self::Edges { ref edges, .. } => edges.clone(),
            Self::EdgeFile { ref path, .. } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    ModelError::Config(format!("cannot read edge list {}: {e}", path.display()))
                })?;
                parse_edge_list(&text)?
            }
        })
    }
}

/// Parses an edge list: one `i j` pair per line, 0-indexed, `#` starts a comment.
pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| {
                ModelError::Config(format!("edge list line {}: bad node index {s:?}", lineno + 1))
            })
        };
        match fields.as_slice() {
            [a, b] => edges.push((parse(a)?, parse(b)?)),
            _ => {
                return Err(ModelError::Config(format!(
                    "edge list line {}: expected two indices, got {:?}",
                    lineno + 1,
                    body
                )))
            }
        }
    }
    Ok(edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub n_nodes: usize,
    /// Undirected edges, no self-loops or duplicates.
    pub edges: Vec<(usize, usize)>,
    pub g: f64,
    pub node_params: Vec<RouterParams>,
    pub schedules: Vec<NoiseSchedule>,
}

impl NetworkSpec {
    /// All nodes share `params` and `schedule`.
    pub fn uniform(topology: &Topology, g: f64, params: RouterParams, schedule: NoiseSchedule) -> Result<Self> {
        let n = topology.n_nodes();
        let spec = Self {
            n_nodes: n,
            edges: topology.edges()?,
            g,
            node_params: vec![params; n],
            schedules: vec![schedule; n],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(ModelError::Config("network needs at least one node".into()));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(domain("g", self.g, "coupling must be non-negative"));
        }
        if self.node_params.len() != self.n_nodes || self.schedules.len() != self.n_nodes {
            return Err(ModelError::Config(format!(
                "expected {} node params and schedules, got {} and {}",
                self.n_nodes,
                self.node_params.len(),
                self.schedules.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.edges {
            for i in [a, b] {
                if i >= self.n_nodes {
                    return Err(ModelError::NodeIndex {
                        index: i,
                        n_nodes: self.n_nodes,
                    });
                }
            }
            if a == b {
                return Err(ModelError::Config(format!("self-loop at node {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(ModelError::Config(format!("duplicate edge {a}-{b}")));
            }
        }
        for p in &self.node_params {
            p.validate()?;
        }
        Ok(())
    }

    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

#[inline]
fn coupling_at(xs: &[f64], adj: &[usize], i: usize, g: f64) -> f64 {
    g * adj.iter().map(|&j| xs[j] - xs[i]).sum::<f64>()
}

fn coupling_all(xs: &[f64], adj: &[Vec<usize>], g: f64) -> Vec<f64> {
    (0..xs.len()).map(|i| coupling_at(xs, &adj[i], i, g)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub nodes: Vec<RouterState>,
    pub t: f64,
}

/// Energy flux into node `i` from its neighbours, `g Σ_{j∈N_i} (x_j − x_i)`.
pub fn coupling_term(state: &NetworkState, spec: &NetworkSpec, i: usize) -> Result<f64> {
    if i >= spec.n_nodes || i >= state.nodes.len() {
        return Err(ModelError::NodeIndex {
            index: i,
            n_nodes: spec.n_nodes,
        });
    }
    let xs: Vec<f64> = state.nodes.iter().map(|n| n.x).collect();
    let adj = spec.neighbours();
    Ok(coupling_at(&xs, &adj[i], i, spec.g))
}

/// Synchronous update of all buffers at fixed controls. `rngs[i]` feeds node `i`.
pub fn network_step<R: Rng>(
    state: &mut NetworkState,
    spec: &NetworkSpec,
    sim: &SimConfig,
    rngs: &mut [R],
) -> Result<()> {
    if rngs.len() != spec.n_nodes || state.nodes.len() != spec.n_nodes {
        return Err(ModelError::Config("state, spec and rng counts differ".into()));
    }
    let xs: Vec<f64> = state.nodes.iter().map(|n| n.x).collect();
    let flux = coupling_all(&xs, &spec.neighbours(), spec.g);
    let t = state.t;
    for (i, node) in state.nodes.iter_mut().enumerate() {
        let p = &spec.node_params[i];
        let sched = &spec.schedules[i];
        let own = node.u * sched.p_mean(t) - sim.p_load - info_cost_raw(node.u, node.d_hat, p.kappa, p.beta);
        let amp = if sim.gate_noise { node.u } else { 1.0 };
        let z: f64 = rngs[i].sample(StandardNormal);
        node.x = advance(node.x, own + flux[i], amp, sched.d_of_t(t), sim.dt, z, sim.x_max);
        node.estimator.push_sample(node.x)?;
    }
    state.t += sim.dt;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    #[serde(flatten)]
    pub base: TrajectoryRecord,
    /// Net energy flux from neighbours at the record time.
    pub coupling_flux: f64,
}

/// Closed-loop network simulation: per-node routers plus coupling.
#[derive(Debug, Clone)]
pub struct NetworkSim {
    routers: Vec<Router>,
    adj: Vec<Vec<usize>>,
    g: f64,
    xs: Vec<f64>,
}

impl NetworkSim {
    /// Node `i` uses RNG stream `i` of `seed`.
    pub fn new(spec: &NetworkSpec, est: EstimatorConfig, sim: SimConfig, seed: u64) -> Result<Self> {
        Self::with_streams(spec, est, sim, seed, &(0..spec.n_nodes as u64).collect::<Vec<_>>())
    }

    pub fn with_streams(
        spec: &NetworkSpec,
        est: EstimatorConfig,
        sim: SimConfig,
        seed: u64,
        streams: &[u64],
    ) -> Result<Self> {
        spec.validate()?;
        if streams.len() != spec.n_nodes {
            return Err(ModelError::Config("one RNG stream per node required".into()));
        }
        let routers = (0..spec.n_nodes)
            .map(|i| {
                Router::new(
                    spec.node_params[i],
                    est,
                    spec.schedules[i].clone(),
                    sim,
                    seed,
                    streams[i],
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            routers,
            adj: spec.neighbours(),
            g: spec.g,
            xs: vec![0.0; spec.n_nodes],
        })
    }

    pub fn routers(&self) -> &[Router] {
        &self.routers
    }

    pub fn time(&self) -> f64 {
        self.routers[0].time()
    }

    /// Control updates, records (if due), then one synchronous step.
    pub fn step(&mut self) -> Result<Option<Vec<NodeRecord>>> {
        for r in &mut self.routers {
            r.maybe_update_control();
        }
        for (x, r) in self.xs.iter_mut().zip(&self.routers) {
            *x = r.state.x;
        }
        let flux = coupling_all(&self.xs, &self.adj, self.g);
        let recs = self.routers[0].should_record().then(|| {
            self.routers
                .iter()
                .zip(&flux)
                .map(|(r, &f)| NodeRecord {
                    base: r.record(),
                    coupling_flux: f,
                })
                .collect()
        });
        for (r, f) in self.routers.iter_mut().zip(flux) {
            r.integrate(f)?;
        }
        Ok(recs)
    }
}

/// Runs the network for `sim.t_end`; returns one record list per node.
pub fn run_network(
    spec: &NetworkSpec,
    est: &EstimatorConfig,
    sim: &SimConfig,
    seed: u64,
) -> Result<Vec<Vec<NodeRecord>>> {
    let mut net = NetworkSim::new(spec, *est, *sim, seed)?;
    let mut out = vec![Vec::with_capacity(sim.n_steps() / sim.record_every + 1); spec.n_nodes];
    for _ in 0..sim.n_steps() {
        if let Some(recs) = net.step()? {
            for (o, r) in out.iter_mut().zip(recs) {
                o.push(r);
            }
        }
    }
    Ok(out)
}

/// Noise burst applied to one node of an otherwise uniform network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BurstScenario {
    pub topology: Topology,
    pub g: f64,
    pub p_mean: f64,
    /// Background noise intensity at every node.
    pub d_base: f64,
    pub node: usize,
    pub t_start: f64,
    pub duration: f64,
    /// Burst time excluded from the indicator while the estimator adapts.
    pub settle: f64,
    /// Abandonment floor on the burst node's time-averaged control.
    pub floor: f64,
    pub seeds: Vec<u64>,
}

impl Default for BurstScenario {
    /// Five-router ring reference scenario.
    fn default() -> Self {
        Self {
            topology: Topology::Ring { n: 5 },
            g: 0.5,
            p_mean: 1.0,
            d_base: 0.5,
            node: 0,
            t_start: 2.0,
            duration: 60.0,
            settle: 20.0,
            floor: 1e-3,
            seeds: (0..8).collect(),
        }
    }
}

impl BurstScenario {
    pub fn validate(&self) -> Result<()> {
        if self.node >= self.topology.n_nodes() {
            return Err(ModelError::NodeIndex {
                index: self.node,
                n_nodes: self.topology.n_nodes(),
            });
        }
        for (name, v) in [("t_start", self.t_start), ("settle", self.settle)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(name, v, "must be non-negative"));
            }
        }
        if !(self.duration.is_finite() && self.duration > self.settle) {
            return Err(domain("duration", self.duration, "must exceed settle"));
        }
        if !(self.floor.is_finite() && self.floor > 0.0) {
            return Err(domain("floor", self.floor, "must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(ModelError::Config("at least one seed required".into()));
        }
        Ok(())
    }

    /// Network with the burst node's noise raised to `d_burst`.
    pub fn network(&self, params: &RouterParams, d_burst: f64) -> Result<NetworkSpec> {
        let base = NoiseSchedule::constant(self.p_mean, self.d_base)?;
        let mut spec = NetworkSpec::uniform(&self.topology, self.g, *params, base)?;
        spec.schedules[self.node] =
            NoiseSchedule::burst(self.p_mean, self.d_base, d_burst, self.t_start, self.duration)?;
        Ok(spec)
    }

    /// Time-averaged control of the burst node over the settled burst window.
    pub fn burst_control(
        &self,
        params: &RouterParams,
        est: &EstimatorConfig,
        sim: &SimConfig,
        d_burst: f64,
        seed: u64,
    ) -> Result<f64> {
        let spec = self.network(params, d_burst)?;
        let mut net = NetworkSim::new(&spec, *est, *sim, seed)?;
        let t_from = self.t_start + self.settle;
        let t_to = self.t_start + self.duration;
        let (mut sum, mut count) = (0.0, 0usize);
        while net.time() < t_to - 0.5 * sim.dt {
            let t = net.time();
            net.step()?;
            if t >= t_from - 0.5 * sim.dt {
                // Control held during the step just taken.
                sum += net.routers()[self.node].state.u;
                count += 1;
            }
        }
        Ok(if count == 0 { 0.0 } else { sum / count as f64 })
    }
}

/// Estimator for the reference scenario: the router samples its buffer once
/// per control period and averages over 200 samples. Increments over a full
/// period feel the neighbours' pull, which is how coupling lowers `D̂`.
pub fn reference_estimator() -> EstimatorConfig {
    EstimatorConfig {
        window_len: 200,
        dt: 0.1,
    }
}

/// Integration settings for the reference scenario. The buffer is wide enough
/// that clamping never truncates increments during a run.
pub fn reference_sim() -> SimConfig {
    SimConfig {
        x_max: 1000.0,
        x0: 500.0,
        ..SimConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCritical {
    pub g: f64,
    /// Located burst intensity per seed, in `seeds` order.
    pub per_seed: Vec<f64>,
    pub median: f64,
}

/// Bisects, per seed, the burst intensity at which the burst node abandons
/// control, and reports the median over seeds. Seeds run in parallel.
pub fn network_critical(
    scenario: &BurstScenario,
    params: &RouterParams,
    est: &EstimatorConfig,
    sim: &SimConfig,
    d_lo: f64,
    d_hi: f64,
    tol: f64,
) -> Result<NetworkCritical> {
    scenario.validate()?;
    let per_seed = scenario
        .seeds
        .par_iter()
        .map(|&seed| {
            let abandoned = |d: f64| {
                scenario
                    .burst_control(params, est, sim, d, seed)
                    .map(|u| u < scenario.floor)
            };
            bisect_indicator(abandoned, d_lo, d_hi, tol).map(|(lo, hi)| 0.5 * (lo + hi))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkCritical {
        g: scenario.g,
        median: median(&per_seed),
        per_seed,
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
