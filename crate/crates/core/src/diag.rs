//! Machine-readable diagnostics emitted by verification: assumption
//! reports, oscillation/divergence reports and iteration counts. Each
//! diagnostic renders as a single line for the CLI's diagnostics stream.

use std::fmt;

/// Report of an assumption check over a coalition game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssumptionReport {
    /// Which assumption (1 for zero-sum reachability rewards, 2 for
    /// nonzero-sum until objectives, 3 for nonzero-sum reward objectives).
    pub assumption: u8,
    /// Objective index (0 or 1) for nonzero-sum checks.
    pub objective: Option<usize>,
    /// States violating the assumption; empty means the check passed.
    pub violating: Vec<usize>,
}

impl AssumptionReport {
    pub fn holds(&self) -> bool {
        self.violating.is_empty()
    }
}

/// A detected value-iteration cycle (or unbounded growth).
#[derive(Debug, Clone)]
pub struct OscillationReport {
    pub op: &'static str,
    /// Cycle period in sweeps; 0 for divergence without a cycle.
    pub period: usize,
    /// Peak-to-peak amplitude at the witness state.
    pub amplitude: f64,
    /// State with the largest oscillation.
    pub witness_state: usize,
    /// The witness state's values over one cycle.
    pub witness_cycle: Vec<f64>,
    /// For nonzero-sum checks, the witness state's value pairs.
    pub witness_cycle_pairs: Option<Vec<(f64, f64)>>,
    /// All states whose values still move across the cycle window.
    pub oscillating_states: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum Diagnostic {
    Assumption(AssumptionReport),
    Oscillation(OscillationReport),
    Iterations {
        op: &'static str,
        count: usize,
        converged: bool,
    },
    Warning(String),
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Assumption(r) => {
                write!(
                    f,
                    "assumption id={} objective={} holds={} violating=[{}]",
                    r.assumption,
                    r.objective.map_or("-".into(), |o| (o + 1).to_string()),
                    r.holds(),
                    join(&r.violating)
                )
            }
            Diagnostic::Oscillation(r) => {
                write!(
                    f,
                    "oscillation op={} period={} amplitude={:.9} state={} cycle=[{}]",
                    r.op,
                    r.period,
                    r.amplitude,
                    r.witness_state,
                    join(&r.witness_cycle)
                )?;
                if let Some(pairs) = &r.witness_cycle_pairs {
                    let rendered: Vec<String> = pairs
                        .iter()
                        .map(|(a, b)| format!("({a},{b})"))
                        .collect();
                    write!(f, " pairs=[{}]", rendered.join(","))?;
                }
                write!(f, " states=[{}]", join(&r.oscillating_states))
            }
            Diagnostic::Iterations {
                op,
                count,
                converged,
            } => write!(f, "iterations op={op} count={count} converged={converged}"),
            Diagnostic::Warning(msg) => write!(f, "warning {msg}"),
        }
    }
}
