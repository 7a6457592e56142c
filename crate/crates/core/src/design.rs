//! Maximin Latin hypercube designs.
//!
//! The design is the best (largest minimum pairwise distance) of `K` random
//! Latin hypercubes whose points sit at stratum centers.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Domain, Error, Result};

/// Number of random hypercubes compared by [`maximin_lhs`].
pub const DEFAULT_CANDIDATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

/// One random Latin hypercube on `[0, 1]^d` with points at stratum centers.
pub fn random_lhs<R: rand::Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..d {
        perm.shuffle(rng);
        for (i, &stratum) in perm.iter().enumerate() {
            pts[i][k] = (stratum as f64 + 0.5) / n as f64;
        }
    }
    pts
}

/// Smallest pairwise Euclidean distance; `+inf` for fewer than two points.
pub fn min_distance(points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 1..points.len() {
        for j in 0..i {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = best.min(d2);
        }
    }
    best.sqrt()
}

/// Maximin Latin hypercube of `spec.n` points mapped onto `domain`.
pub fn maximin_lhs(spec: &DesignSpec, domain: &Domain) -> Result<Vec<Vec<f64>>> {
    maximin_lhs_with(spec, domain, DEFAULT_CANDIDATES)
}

pub fn maximin_lhs_with(spec: &DesignSpec, domain: &Domain, candidates: usize) -> Result<Vec<Vec<f64>>> {
    if spec.n == 0 || spec.d == 0 || spec.d != domain.dim() {
        return Err(Error::InvalidArgument(format!(
            "invalid design spec n = {}, d = {} for a {}-dimensional domain",
            spec.n,
            spec.d,
            domain.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..candidates.max(1) {
        let pts = random_lhs(spec.n, spec.d, &mut rng);
        let score = min_distance(&pts);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, pts));
        }
    }
    let (_, pts) = best.expect("at least one candidate");
    Ok(pts.iter().map(|u| domain.from_unit(u)).collect())
}
