//! Bayesian optimization for deterministic, expensive objectives.
//!
//! The crate is organised bottom-up:
//!
//! * [`kriging`]: ordinary/universal Kriging with a Matérn 5/2 correlation,
//!   analytic prediction gradients and adaptive Cholesky jitter.
//! * [`hyperfit`]: concentrated likelihood, multistart MLE, slice sampling of
//!   the length-scale parameters and score-level ensemble averaging.
//! * [`policies`]: closed forms for Expected Improvement, Expected Decrement,
//!   the deterministic knowledge gradient (hard and soft) and UCB.
//! * [`acquisition`]: Monte-Carlo screening plus pattern-search refinement of
//!   a policy over a box.
//! * [`design`]: maximin Latin hypercube initial designs.
//! * [`benchmarks`]: Branin, Hartmann-6, Schwefel and Eggholder (negated so
//!   that everything maximizes) and the opportunity-cost metric.
//! * [`harness`]: the sequential sampling loop, replication, aggregation,
//!   external objectives and result files.
//!
//! Everything maximizes. Minimization problems are negated before they reach
//! the engine.

pub mod acquisition;
pub mod benchmarks;
pub mod design;
mod error;
pub mod harness;
pub mod hyperfit;
pub mod kriging;
mod linalg;
pub mod policies;
pub mod search;

pub use error::{Error, Result};

/// Axis-aligned box `[lower, upper]` in decision space.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidArgument(format!(
                "domain bounds must be nonempty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidArgument(format!(
                    "degenerate domain in dimension {k}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Unit hypercube `[0, 1]^d`.
    pub fn unit(d: usize) -> Self {
        Self {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[k], self.upper[k]);
        }
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, v)| (v - self.lower[k]) / self.width(k))
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(k, v)| self.lower[k] + v * self.width(k))
            .collect()
    }
}
