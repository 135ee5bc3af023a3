//! Single-router closed-loop simulation.
//!
//! The buffer evolves as
//!
//! ```text
//! dx = [u P̄(t) − P_load − Φ(u, D̂)] dt + a(u) √(2 D(t)) dW,   x ∈ [0, x_max]
//! ```
//!
//! where `a(u) = 1` (ungated supply noise, the default) or `a(u) = u` when
//! `gate_noise` is set. Every `control_interval` steps the router reads its
//! estimate `D̂`, re-optimizes `u`, and pays `Φ(u, D̂)` out of the buffer until
//! the next update. The integrator itself uses the true `D(t)` of the schedule.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_control, check_noise, domain, ModelError, Result};
use crate::estimator::{EstimatorConfig, NoiseEstimator};
use crate::objective::{entropy_raw, info_cost, info_cost_raw, optimize_raw, RouterParams};
use crate::rng::{stream_rng, SCHEDULE_STREAM_BASE};

/// Integration and buffer settings shared by single and network runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Integration steps between control updates.
    pub control_interval: usize,
    /// Integration steps between trajectory records.
    pub record_every: usize,
    /// Constant demand drawn from the buffer.
    pub p_load: f64,
    /// Buffer capacity; `x` is clamped to `[0, x_max]`.
    pub x_max: f64,
    pub x0: f64,
    /// Control applied before the first estimate is available.
    pub u_init: f64,
    /// Scale supply noise by `u` (closed switch admits the fluctuation).
    pub gate_noise: bool,
    /// Resolution of the per-update optimizer.
    pub opt_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 10.0,
            control_interval: 100,
            record_every: 10,
            p_load: 0.3,
            x_max: 10.0,
            x0: 5.0,
            u_init: 0.0,
            gate_noise: false,
            opt_tol: 1e-9,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(domain(name, v, "must be finite and positive"))
            }
        };
        pos("dt", self.dt)?;
        pos("t_end", self.t_end)?;
        pos("x_max", self.x_max)?;
        pos("opt_tol", self.opt_tol)?;
        if self.control_interval < 1 {
            return Err(domain("control_interval", 0.0, "must be at least 1"));
        }
        if self.record_every < 1 {
            return Err(domain("record_every", 0.0, "must be at least 1"));
        }
        if !(self.p_load.is_finite() && self.p_load >= 0.0) {
            return Err(domain("p_load", self.p_load, "must be non-negative"));
        }
        if !(0.0..=self.x_max).contains(&self.x0) {
            return Err(domain("x0", self.x0, "must lie in [0, x_max]"));
        }
        check_control(self.u_init).map_err(|_| domain("u_init", self.u_init, "must lie in [0, 1]"))
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Integration steps per estimator sample.
    pub fn sample_stride(&self, est: &EstimatorConfig) -> Result<usize> {
        let ratio = est.dt / self.dt;
        let stride = ratio.round();
        if stride < 1.0 || (ratio - stride).abs() > 1e-6 * ratio {
            return Err(ModelError::Config(format!(
                "estimator dt {} is not a whole multiple of integration dt {}",
                est.dt, self.dt
            )));
        }
        Ok(stride as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub t_start: f64,
    pub p_mean: f64,
    pub d: f64,
}

/// Parameters of the pseudo-solar supply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolarConfig {
    /// Peak mean supply `P0`.
    pub p0: f64,
    pub day_length: f64,
    /// Clear-sky noise intensity.
    pub d_base: f64,
    /// Extra noise intensity under full cloud cover.
    pub d_cloud: f64,
    /// Time span covered by the sampled cloud envelope.
    pub horizon: f64,
    /// Envelope sampling interval (normally the integration step).
    pub dt: f64,
    /// Envelope relaxation time as a fraction of `day_length`.
    pub relax_frac: f64,
    /// Stationary standard deviation of the unclipped envelope.
    pub cloud_std: f64,
}

impl Default for SolarConfig {
    fn default() -> Self {
        Self {
            p0: 1.0,
            day_length: 10.0,
            d_base: 0.5,
            d_cloud: 3.0,
            horizon: 10.0,
            dt: 1e-3,
            relax_frac: 0.05,
            cloud_std: 0.5,
        }
    }
}

impl SolarConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("day_length", self.day_length),
            ("horizon", self.horizon),
            ("dt", self.dt),
            ("relax_frac", self.relax_frac),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(name, v, "must be finite and positive"));
            }
        }
        for (name, v) in [
            ("p0", self.p0),
            ("d_base", self.d_base),
            ("d_cloud", self.d_cloud),
            ("cloud_std", self.cloud_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(name, v, "must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// Time-dependent mean supply `P̄(t)` and noise intensity `D(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSchedule {
    Constant {
        p_mean: f64,
        d: f64,
    },
    /// Step function; segment `i` holds from its `t_start` until the next one.
    Piecewise(Vec<Segment>),
    PseudoSolar {
        cfg: SolarConfig,
        seed: u64,
        /// Clipped cloud envelope `c(t) ∈ [0, 1]` on a grid of spacing `cfg.dt`.
        cloud: Vec<f64>,
    },
}

impl NoiseSchedule {
    pub fn constant(p_mean: f64, d: f64) -> Result<Self> {
        check_noise(d)?;
        if !(p_mean.is_finite() && p_mean >= 0.0) {
            return Err(domain("p_mean", p_mean, "must be non-negative"));
        }
        Ok(Self::Constant { p_mean, d })
    }

    pub fn piecewise(mut segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(ModelError::Config("piecewise schedule needs a segment".into()));
        }
        for s in &segments {
            check_noise(s.d)?;
            if !(s.p_mean.is_finite() && s.p_mean >= 0.0) {
                return Err(domain("p_mean", s.p_mean, "must be non-negative"));
            }
            if !s.t_start.is_finite() {
                return Err(domain("t_start", s.t_start, "must be finite"));
            }
        }
        segments.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        Ok(Self::Piecewise(segments))
    }

    /// Constant `(p_mean, d_base)` with `d_burst` on `[t_start, t_start + duration)`.
    pub fn burst(p_mean: f64, d_base: f64, d_burst: f64, t_start: f64, duration: f64) -> Result<Self> {
        Self::piecewise(vec![
            Segment { t_start: f64::MIN, p_mean, d: d_base },
            Segment { t_start, p_mean, d: d_burst },
            Segment { t_start: t_start + duration, p_mean, d: d_base },
        ])
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Piecewise(_) => "piecewise",
            Self::PseudoSolar { .. } => "pseudo_solar",
        }
    }

    pub fn p_mean(&self, t: f64) -> f64 {
        match self {
            Self::Constant { p_mean, .. } => *p_mean,
            Self::Piecewise(segs) => segment_at(segs, t).p_mean,
            Self::PseudoSolar { cfg, .. } => {
                (cfg.p0 * (std::f64::consts::TAU * t / cfg.day_length).sin()).max(0.0)
            }
        }
    }

    pub fn d_of_t(&self, t: f64) -> f64 {
        match self {
            Self::Constant { d, .. } => *d,
            Self::Piecewise(segs) => segment_at(segs, t).d,
            Self::PseudoSolar { cfg, cloud, .. } => {
                let idx = ((t / cfg.dt) + 1e-9).floor().max(0.0) as usize;
                cfg.d_base + cfg.d_cloud * cloud[idx.min(cloud.len() - 1)]
            }
        }
    }
}

fn segment_at(segs: &[Segment], t: f64) -> &Segment {
    // First segment also covers times before its start.
    let i = segs.partition_point(|s| s.t_start <= t);
    &segs[i.saturating_sub(1)]
}

/// Pseudo-solar supply: `P̄(t) = max(0, P0 sin(2π t / T_day))` and
/// `D(t) = D_base + D_cloud c(t)` with `c` a clipped Ornstein–Uhlenbeck
/// envelope started at zero.
pub fn pseudo_solar(cfg: &SolarConfig, seed: u64) -> Result<NoiseSchedule> {
    cfg.validate()?;
    let n = (cfg.horizon / cfg.dt).ceil() as usize + 1;
    let tau = cfg.relax_frac * cfg.day_length;
    let decay = (-cfg.dt / tau).exp();
    let kick = cfg.cloud_std * (1.0 - decay * decay).sqrt();
    let mut rng = stream_rng(seed, SCHEDULE_STREAM_BASE);
    let mut level = 0.0f64;
    let mut cloud = Vec::with_capacity(n);
    for _ in 0..n {
        cloud.push(level.clamp(0.0, 1.0));
        let z: f64 = rng.sample(StandardNormal);
        level = level * decay + kick * z;
    }
    Ok(NoiseSchedule::PseudoSolar {
        cfg: *cfg,
        seed,
        cloud,
    })
}

/// Net power into the buffer, `u P̄ − P_load − Φ(u, D̂)`.
pub fn drift(x: f64, u: f64, p_mean: f64, d_hat: f64, params: &RouterParams, p_load: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain("x", x, "must be finite"));
    }
    Ok(u * p_mean - p_load - info_cost(u, d_hat, params.kappa, params.beta)?)
}

#[inline]
fn drift_raw(u: f64, p_mean: f64, d_hat: f64, params: &RouterParams, p_load: f64) -> f64 {
    u * p_mean - p_load - info_cost_raw(u, d_hat, params.kappa, params.beta)
}

/// One clamped Euler–Maruyama update.
#[inline]
pub(crate) fn advance(x: f64, drift: f64, amp: f64, d: f64, dt: f64, z: f64, x_max: f64) -> f64 {
    (x + drift * dt + amp * (2.0 * d * dt).sqrt() * z).clamp(0.0, x_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouterState {
    pub x: f64,
    pub u: f64,
    /// Estimate the current control was optimized for.
    pub d_hat: f64,
    pub estimator: NoiseEstimator,
}

impl RouterState {
    pub fn new(x: f64, u: f64, est: EstimatorConfig) -> Result<Self> {
        check_control(u)?;
        let mut estimator = NoiseEstimator::new(est)?;
        estimator.push_sample(x)?;
        Ok(Self {
            x,
            u,
            d_hat: 0.0,
            estimator,
        })
    }
}

/// Advances the buffer by one step at fixed control and feeds `x'` to the estimator.
pub fn em_step<R: Rng + ?Sized>(
    state: &mut RouterState,
    t: f64,
    schedule: &NoiseSchedule,
    params: &RouterParams,
    sim: &SimConfig,
    rng: &mut R,
) -> Result<()> {
    let f = drift_raw(state.u, schedule.p_mean(t), state.d_hat, params, sim.p_load);
    let amp = if sim.gate_noise { state.u } else { 1.0 };
    let z: f64 = rng.sample(StandardNormal);
    state.x = advance(state.x, f, amp, schedule.d_of_t(t), sim.dt, z, sim.x_max);
    state.estimator.push_sample(state.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub x: f64,
    pub u_star: f64,
    pub d_true: f64,
    pub d_hat: f64,
    /// Information-processing dissipation `Φ(u*, D̂)`.
    pub phi_loss: f64,
    /// Residual-entropy quality loss `TΔS(u*, D̂)`.
    pub entropy_loss: f64,
    pub j_value: f64,
}

/// One router's closed loop: estimate, optimize, apply.
#[derive(Debug, Clone)]
pub struct Router {
    pub state: RouterState,
    params: RouterParams,
    schedule: NoiseSchedule,
    sim: SimConfig,
    stride: usize,
    rng: ChaCha8Rng,
    step: usize,
}

impl Router {
    /// Router drawing noise from RNG stream `stream` of `seed`.
    pub fn new(
        params: RouterParams,
        est: EstimatorConfig,
        schedule: NoiseSchedule,
        sim: SimConfig,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        params.validate()?;
        sim.validate()?;
        let stride = sim.sample_stride(&est)?;
        Ok(Self {
            state: RouterState::new(sim.x0, sim.u_init, est)?,
            params,
            schedule,
            sim,
            stride,
            rng: stream_rng(seed, stream),
            step: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.sim.dt
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn params(&self) -> &RouterParams {
        &self.params
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    /// Re-optimizes control if this step is a control instant.
    pub(crate) fn maybe_update_control(&mut self) {
        if !self.step.is_multiple_of(self.sim.control_interval) {
            return;
        }
        if let Ok(d_hat) = self.state.estimator.current_estimate() {
            self.state.d_hat = d_hat;
            self.state.u = optimize_raw(d_hat, &self.params, self.sim.opt_tol).u_star;
        }
    }

    pub(crate) fn record(&self) -> TrajectoryRecord {
        let (u, d_hat) = (self.state.u, self.state.d_hat);
        let p = &self.params;
        TrajectoryRecord {
            t: self.time(),
            x: self.state.x,
            u_star: u,
            d_true: self.schedule.d_of_t(self.time()),
            d_hat,
            phi_loss: info_cost_raw(u, d_hat, p.kappa, p.beta),
            entropy_loss: entropy_raw(u, d_hat, p),
            j_value: p.j_raw(u, d_hat),
        }
    }

    pub(crate) fn should_record(&self) -> bool {
        self.step.is_multiple_of(self.sim.record_every)
    }

    /// Integrates one step with `extra_drift` added to the router's own drift.
    pub(crate) fn integrate(&mut self, extra_drift: f64) -> Result<()> {
        let t = self.time();
        let f = drift_raw(
            self.state.u,
            self.schedule.p_mean(t),
            self.state.d_hat,
            &self.params,
            self.sim.p_load,
        );
        let amp = if self.sim.gate_noise { self.state.u } else { 1.0 };
        let z: f64 = self.rng.sample(StandardNormal);
        self.state.x = advance(
            self.state.x,
            f + extra_drift,
            amp,
            self.schedule.d_of_t(t),
            self.sim.dt,
            z,
            self.sim.x_max,
        );
        self.step += 1;
        if self.step.is_multiple_of(self.stride) {
            self.state.estimator.push_sample(self.state.x)?;
        }
        Ok(())
    }

    /// Control update, optional record, then one integration step.
    pub fn step(&mut self) -> Result<Option<TrajectoryRecord>> {
        self.maybe_update_control();
        let rec = self.should_record().then(|| self.record());
        self.integrate(0.0)?;
        Ok(rec)
    }
}

/// Runs one router for `sim.t_end` on RNG stream 0 of `seed`.
pub fn run_single(
    params: &RouterParams,
    est: &EstimatorConfig,
    schedule: &NoiseSchedule,
    sim: &SimConfig,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    run_single_stream(params, est, schedule, sim, seed, 0)
}

pub fn run_single_stream(
    params: &RouterParams,
    est: &EstimatorConfig,
    schedule: &NoiseSchedule,
    sim: &SimConfig,
    seed: u64,
    stream: u64,
) -> Result<Vec<TrajectoryRecord>> {
    let mut router = Router::new(*params, *est, schedule.clone(), *sim, seed, stream)?;
    let n = sim.n_steps();
    let mut out = Vec::with_capacity(n / sim.record_every + 1);
    for _ in 0..n {
        if let Some(r) = router.step()? {
            out.push(r);
        }
    }
    Ok(out)
}
