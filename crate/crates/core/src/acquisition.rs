//! Maximization of an acquisition score over a box: uniform Monte-Carlo
//! screening followed by pattern-search refinement of the best candidates.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hyperfit::{ensemble_policy_score, ModelEnsemble};
use crate::policies::{PolicyContext, PolicySpec};
use crate::search::{pattern_search, PatternSearchOptions};
use crate::{Domain, Error, Result};

/// Proposals closer than this (normalized, max-norm) to a training decision
/// count as duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub mc_candidates: usize,
    pub local_refine_count: usize,
    pub local_budget: usize,
    pub seed: u64,
    /// Initial pattern-search step as a fraction of the domain width.
    pub initial_step: f64,
    /// Relative step at which refinement stops.
    pub min_step: f64,
}

impl AcquisitionConfig {
    /// Defaults for a `d`-dimensional domain: `1000·d` candidates, 10 refined,
    /// 200 evaluations each.
    pub fn for_dim(d: usize) -> Self {
        Self {
            mc_candidates: 1000 * d,
            local_refine_count: 10,
            local_budget: 200,
            seed: 0,
            initial_step: 0.05,
            min_step: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.local_refine_count == 0 || self.mc_candidates < self.local_refine_count {
            return Err(Error::Config(format!(
                "need mc_candidates ({}) >= local_refine_count ({}) >= 1",
                self.mc_candidates, self.local_refine_count
            )));
        }
        Ok(())
    }

    fn search(&self) -> PatternSearchOptions {
        PatternSearchOptions {
            initial_step: self.initial_step,
            min_step: self.min_step,
            budget: self.local_budget,
        }
    }
}

/// Best decision found and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub x: Vec<f64>,
    pub score: f64,
}

fn is_duplicate(domain: &Domain, x: &[f64], existing: &[Vec<f64>]) -> bool {
    existing.iter().any(|e| {
        (0..x.len()).all(|k| ((x[k] - e[k]) / domain.width(k)).abs() <= DUPLICATE_TOLERANCE)
    })
}

/// Maximize an arbitrary score over `domain`.
///
/// Points within [`DUPLICATE_TOLERANCE`] of `exclude` are replaced by the best
/// non-duplicate refined point, falling back to the raw candidates.
/// Equal scores keep the earliest candidate in generation order.
pub fn maximize<F, R>(score: F, domain: &Domain, cfg: &AcquisitionConfig, exclude: &[Vec<f64>], rng: &mut R) -> Result<Proposal>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let d = domain.dim();
    let candidates: Vec<Vec<f64>> = (0..cfg.mc_candidates)
        .map(|_| {
            (0..d)
                .map(|k| domain.lower[k] + rng.gen::<f64>() * domain.width(k))
                .collect()
        })
        .collect();
    let raw: Vec<f64> = candidates
        .par_iter()
        .map(|x| score(x).map(|v| if v.is_nan() { f64::NEG_INFINITY } else { v }))
        .collect::<Result<_>>()?;
    if raw.iter().all(|v| !v.is_finite()) {
        return Err(Error::AcquisitionFailed);
    }

    let mut order: Vec<usize> = (0..candidates.len()).filter(|&i| raw[i].is_finite()).collect();
    // Stable: equal scores stay in generation order.
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));

    let search = cfg.search();
    let refined: Vec<Proposal> = order
        .iter()
        .take(cfg.local_refine_count)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&i| {
            let r = pattern_search(
                |x| score(x).unwrap_or(f64::NEG_INFINITY),
                &candidates[i],
                domain,
                &search,
            );
            Proposal { x: r.x, score: r.value }
        })
        .collect();

    let pick = |pool: &mut dyn Iterator<Item = Proposal>| -> Option<Proposal> {
        let mut best: Option<Proposal> = None;
        for p in pool {
            if is_duplicate(domain, &p.x, exclude) {
                continue;
            }
            if best.as_ref().is_none_or(|b| p.score > b.score) {
                best = Some(p);
            }
        }
        best
    };
    pick(&mut refined.into_iter())
        .or_else(|| {
            pick(&mut order.iter().map(|&i| Proposal {
                x: candidates[i].clone(),
                score: raw[i],
            }))
        })
        .ok_or(Error::AcquisitionFailed)
}

/// Decision maximizing the ensemble-averaged policy score.
pub fn propose<R: Rng + ?Sized>(
    ensemble: &ModelEnsemble,
    policy: PolicySpec,
    ctx: &PolicyContext,
    domain: &Domain,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Result<Proposal> {
    let existing: Vec<Vec<f64>> = ensemble.data().rows().map(<[f64]>::to_vec).collect();
    maximize(
        |x| Ok(ensemble_policy_score(ensemble, policy, x, ctx, false)?.value),
        domain,
        cfg,
        &existing,
        rng,
    )
}

/// Decision maximizing the ensemble-averaged prediction mean.
pub fn model_argmax<R: Rng + ?Sized>(
    ensemble: &ModelEnsemble,
    domain: &Domain,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(maximize(|x| ensemble.mean(x), domain, cfg, &[], rng)?.x)
}
