//! Numerical laboratory for the simple random walk in i.i.d. nonnegative
//! random potentials on Z^d: travel costs, Lyapunov exponents,
//! large-deviation rate functions, and coupled comparison experiments
//! between potential laws.
//!
//! Module map:
//!
//! | module | contents |
//! |---|---|
//! | [`dist`] | CDFs on `[0,∞)`, pseudo-inverses, Laplace transforms, strict dominance and its witness |
//! | [`field`] | counter-based uniform fields, coupled potential realizations |
//! | [`walk`] | walk traces, hitting times, local times, box crossings, lattice animals |
//! | [`quenched`] | the two-point solver, quenched costs, per-distance exponent estimates |
//! | [`annealed`] | the two annealed Monte Carlo routes and the upper-bound sequence for β |
//! | [`rates`] | Lyapunov curves, rate functions, slope thresholds, the d=1 DP check |
//! | [`compare`] | coupled gap experiments, white/good box statistics, d=1 criteria |
//! | [`perc`] | level-set site percolation, chemical distances, norm estimates |
//!
//! All Monte Carlo drivers are deterministic in `(seed, replica index)` and
//! reduce in index order, so results do not depend on the worker count.

pub mod annealed;
pub mod compare;
pub mod dist;
pub mod error;
pub mod exec;
pub mod field;
pub mod perc;
pub mod quenched;
pub mod rates;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};

/// Format a float with round-trip precision and fixed "inf"/"nan" sentinels.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{v}")
    }
}
