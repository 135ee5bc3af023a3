//! Power-packet routers modeled as information ratchets.
//!
//! A router holds a buffer of energy `x` fed by a fluctuating supply. It
//! estimates the local noise intensity from its own buffer increments, picks
//! a control effort `u` by maximizing a thermodynamic evaluation function, and
//! pays an information-processing cost that grows exponentially in `u`. Past a
//! critical noise intensity the optimal effort jumps to zero: the router
//! abandons regulation.
//!
//! Modules, bottom-up:
//!
//! - [`objective`]: gain, information cost, entropy penalty, `J(u)` and its maximizer.
//! - [`estimator`]: sliding-window quadratic-variation noise estimate.
//! - [`router`]: Euler–Maruyama closed-loop simulation of a single router.
//! - [`bifurcation`]: `u*(D)` sweeps and critical-point bisection.
//! - [`network`]: diffusively coupled routers and the collective critical point.
//! - [`io`]: JSON experiment configs, CSV/manifest emission, experiment dispatch.

pub mod bifurcation;
pub mod error;
pub mod estimator;
pub mod io;
pub mod network;
pub mod objective;
pub mod rng;
pub mod router;

pub use error::{ModelError, Result};
pub use objective::{OptimizationResult, RouterParams};
