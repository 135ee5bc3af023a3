//! Sliding-window noise-intensity estimator.
//!
//! `D̂ = ⟨(x_k − x_{k−1})²⟩_W / (2 Δt)`, averaged over the last `W`
//! increments. Before the window fills, all available increments are used.
//! Drift is not subtracted, so `D̂` overestimates `D` by `drift² Δt / 2`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ModelError, Result};

/// Pushes between exact recomputations of the running sum.
const RESUM_EVERY: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    /// Number of increments `W` in the moving average.
    pub window_len: usize,
    /// Sampling interval `Δt` between pushed samples.
    pub dt: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            window_len: 100,
            dt: 1e-3,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 1 {
            return Err(domain("window_len", self.window_len as f64, "must be at least 1"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(domain("dt", self.dt, "sampling interval must be positive"));
        }
        Ok(())
    }
}

/// Ring of the last `W + 1` samples and the current estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimator {
    cfg: EstimatorConfig,
    samples: VecDeque<f64>,
    sum_sq: f64,
    since_resum: usize,
    d_hat: f64,
}

impl NoiseEstimator {
    pub fn new(cfg: EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            samples: VecDeque::with_capacity(cfg.window_len + 1),
            sum_sq: 0.0,
            since_resum: 0,
            d_hat: 0.0,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// True once at least one increment is available.
    pub fn is_ready(&self) -> bool {
        self.samples.len() >= 2
    }

    pub fn push_sample(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(ModelError::NonFinite(x));
        }
        if let Some(&last) = self.samples.back() {
            let inc = x - last;
            self.sum_sq += inc * inc;
        }
        self.samples.push_back(x);
        if self.samples.len() > self.cfg.window_len + 1 {
            let old = self.samples.pop_front().unwrap();
            let inc = self.samples[0] - old;
            self.sum_sq -= inc * inc;
        }

        self.since_resum += 1;
        if self.since_resum >= RESUM_EVERY {
            self.resum();
        }

        let n = self.samples.len() - 1;
        if n > 0 {
            self.d_hat = (self.sum_sq / n as f64 / (2.0 * self.cfg.dt)).max(0.0);
        }
        Ok(())
    }

    /// Current `D̂`; fails before two samples have been pushed.
    pub fn current_estimate(&self) -> Result<f64> {
        if self.is_ready() {
            Ok(self.d_hat)
        } else {
            Err(ModelError::InsufficientSamples {
                have: self.samples.len(),
            })
        }
    }

    // The running sum drifts under repeated add/subtract; recompute it exactly.
    fn resum(&mut self) {
        self.sum_sq = self
            .samples
            .iter()
            .zip(self.samples.iter().skip(1))
            .map(|(a, b)| (b - a) * (b - a))
            .sum();
        self.since_resum = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn est(window_len: usize, dt: f64) -> NoiseEstimator {
        NoiseEstimator::new(EstimatorConfig { window_len, dt }).unwrap()
    }

    /// Direct evaluation over the stored window.
    fn brute(samples: &[f64], w: usize, dt: f64) -> f64 {
        let start = samples.len().saturating_sub(w + 1);
        let s = &samples[start..];
        let incs: Vec<f64> = s.windows(2).map(|p| (p[1] - p[0]).powi(2)).collect();
        incs.iter().sum::<f64>() / incs.len() as f64 / (2.0 * dt)
    }

    #[test]
    fn constant_series_is_zero() {
        let mut e = est(10, 0.01);
        for _ in 0..50 {
            e.push_sample(5.0).unwrap();
        }
        assert_eq!(e.current_estimate().unwrap(), 0.0);
    }

    #[test]
    fn alternating_increments() {
        let mut e = est(20, 0.01);
        let mut x = 0.0;
        for k in 0..100 {
            e.push_sample(x).unwrap();
            x += if k % 2 == 0 { 0.1 } else { -0.1 };
        }
        assert_relative_eq!(e.current_estimate().unwrap(), 0.5, max_relative = 1e-9);
    }

    #[test]
    fn single_increment() {
        let mut e = est(5, 0.5);
        e.push_sample(0.0).unwrap();
        e.push_sample(1.0).unwrap();
        assert_eq!(e.current_estimate().unwrap(), 1.0);
    }

    #[test]
    fn needs_two_samples() {
        let mut e = est(5, 0.5);
        assert!(matches!(
            e.current_estimate(),
            Err(ModelError::InsufficientSamples { have: 0 })
        ));
        e.push_sample(1.0).unwrap();
        assert!(matches!(
            e.current_estimate(),
            Err(ModelError::InsufficientSamples { have: 1 })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let mut e = est(5, 0.5);
        assert!(e.push_sample(f64::NAN).is_err());
        assert!(e.push_sample(f64::INFINITY).is_err());
        assert!(e.is_empty());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(NoiseEstimator::new(EstimatorConfig { window_len: 0, dt: 1.0 }).is_err());
        assert!(NoiseEstimator::new(EstimatorConfig { window_len: 3, dt: 0.0 }).is_err());
    }

    #[test]
    fn warm_up_uses_available_increments() {
        let mut e = est(100, 1.0);
        e.push_sample(0.0).unwrap();
        e.push_sample(2.0).unwrap();
        e.push_sample(2.0).unwrap();
        // (4 + 0) / 2 / 2
        assert_eq!(e.current_estimate().unwrap(), 1.0);
    }

    #[test]
    fn recovers_diffusion_coefficient() {
        let (d, dt) = (1.0, 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut e = est(10_000, dt);
        let mut x = 0.0;
        e.push_sample(x).unwrap();
        for _ in 0..10_000 {
            let z: f64 = StandardNormal.sample(&mut rng);
            x += (2.0 * d * dt).sqrt() * z;
            e.push_sample(x).unwrap();
        }
        let got = e.current_estimate().unwrap();
        assert!((got - 1.0).abs() < 0.05, "D̂ = {got}");
    }

    #[test]
    fn error_shrinks_with_window() {
        let (d, dt) = (1.0, 1e-3);
        let mean_abs_err = |w: usize| {
            let mut total = 0.0;
            for seed in 0..20 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut e = est(w, dt);
                let mut x = 0.0;
                e.push_sample(x).unwrap();
                for _ in 0..w {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x += (2.0 * d * dt).sqrt() * z;
                    e.push_sample(x).unwrap();
                }
                total += (e.current_estimate().unwrap() - d).abs();
            }
            total / 20.0
        };
        assert!(mean_abs_err(100_000) < mean_abs_err(1_000));
    }

    proptest! {
        #[test]
        fn matches_direct_window_average(
            xs in prop::collection::vec(-100.0f64..100.0, 2..300),
            w in 1usize..50,
        ) {
            let dt = 0.01;
            let mut e = est(w, dt);
            for &x in &xs {
                e.push_sample(x).unwrap();
            }
            let expect = brute(&xs, w, dt);
            let got = e.current_estimate().unwrap();
            prop_assert!((got - expect).abs() <= 1e-9 * (1.0 + expect));
            prop_assert!(got >= 0.0);
        }

        #[test]
        fn shift_and_scale(
            xs in prop::collection::vec(-10.0f64..10.0, 2..200),
            shift in -100.0f64..100.0,
            scale in 0.1f64..10.0,
        ) {
            let run = |f: &dyn Fn(f64) -> f64| {
                let mut e = est(32, 0.1);
                for &x in &xs {
                    e.push_sample(f(x)).unwrap();
                }
                e.current_estimate().unwrap()
            };
            let base = run(&|x| x);
            let shifted = run(&|x| x + shift);
            let scaled = run(&|x| scale * x);
            prop_assert!((shifted - base).abs() <= 1e-9 * (1.0 + base));
            prop_assert!((scaled - scale * scale * base).abs() <= 1e-9 * (1.0 + scale * scale * base));
        }
    }
}
