//! Bounded coordinate pattern search (maximization).

use serde::{Deserialize, Serialize};

use crate::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSearchOptions {
    /// Initial step as a fraction of each domain width.
    pub initial_step: f64,
    /// Stop once the step fraction falls below this.
    pub min_step: f64,
    /// Maximum number of objective evaluations, including the start point.
    pub budget: usize,
}

impl Default for PatternSearchOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            min_step: 1e-6,
            budget: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Maximize `f` from `start` inside `domain`.
///
/// Each sweep polls `x ± step·width` along every coordinate and moves to the
/// first strict improvement; a sweep without improvement halves the step.
/// Non-finite values count as `-inf`. The returned value is never below
/// `f(start)`.
pub fn pattern_search<F>(mut f: F, start: &[f64], domain: &Domain, opts: &PatternSearchOptions) -> SearchResult
where
    F: FnMut(&[f64]) -> f64,
{
    let finite = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let mut x = start.to_vec();
    domain.clip(&mut x);
    let mut best = finite(f(&x));
    let mut evals = 1;
    let mut step = opts.initial_step;
    let mut trial = x.clone();
    'outer: while step >= opts.min_step && evals < opts.budget {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                let candidate = (x[k] + dir * step * domain.width(k)).clamp(domain.lower[k], domain.upper[k]);
                if candidate == x[k] {
                    continue;
                }
                trial.copy_from_slice(&x);
                trial[k] = candidate;
                let v = finite(f(&trial));
                evals += 1;
                if v > best {
                    best = v;
                    x.copy_from_slice(&trial);
                    improved = true;
                    break;
                }
                if evals >= opts.budget {
                    break 'outer;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    SearchResult {
        x,
        value: best,
        evaluations: evals,
    }
}
