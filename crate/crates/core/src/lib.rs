//! Model checking and strategy synthesis for two-coalition concurrent
//! stochastic games (CSGs).
//!
//! The crate is organised around an explicit-state game representation
//! ([`game`]), parsers for the model and property languages ([`lang`]),
//! two one-shot game solvers (a simplex-backed matrix-game solver in
//! [`matrix`] and a support-enumeration bimatrix solver in [`bimatrix`]),
//! qualitative graph analysis ([`graph`]), MDP verification ([`mdp`]),
//! the rPATL-style evaluation engine ([`verify`]) and strategy assembly,
//! certification and export ([`strategy`]).

pub mod bimatrix;
pub mod diag;
pub mod game;
pub mod graph;
pub mod lang;
pub mod linalg;
pub mod matrix;
pub mod mdp;
pub mod models;
pub mod strategy;
pub mod verify;

/// Tolerance used when validating probability distributions at load time.
pub const DIST_TOLERANCE: f64 = 1e-9;

/// Pivot tolerance for the simplex kernel.
pub const PIVOT_TOLERANCE: f64 = 1e-9;

/// Tolerance for verifying solver output (optimality, equilibrium conditions).
pub const VERIFY_TOLERANCE: f64 = 1e-7;

/// Tolerance at which equilibria are considered duplicates.
pub const DEDUP_TOLERANCE: f64 = 1e-6;

/// Default value-iteration convergence threshold.
pub const DEFAULT_EPSILON_VI: f64 = 1e-6;

/// Default value-iteration sweep cap.
pub const DEFAULT_MAX_ITERS: usize = 500_000;

/// Relative difference between successive iterates, as used by the
/// convergence criterion of every value-iteration loop in this crate.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a.is_infinite() || b.is_infinite() {
        return if a == b { 0.0 } else { f64::INFINITY };
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}
