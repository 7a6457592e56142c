//! Length-scale selection: concentrated likelihood, multistart maximum
//! likelihood, slice sampling and score-level ensemble averaging.
//!
//! All searches work in `log10(theta)` over a box (by default `[-3, 3]^d`,
//! in normalized input units).

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kriging::{gls, BasisSet, Dataset, FitOptions, Hyperparameters, KrigingModel, Prepared};
use crate::policies::{self, PolicyContext, PolicyScore, PolicySpec};
use crate::search::{pattern_search, PatternSearchOptions};
use crate::{Domain, Error, Result};

/// One evaluation of the negative concentrated log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodEvaluation {
    pub theta: Hyperparameters,
    /// `½(n ln σ² + ln|Ψ|)` on standardized outputs; `+inf` when invalid.
    pub neg_log_lik: f64,
    pub valid: bool,
}

/// Negative concentrated log-likelihood `½(n ln σ² + ln|Ψ|)`, minimized by MLE.
///
/// Outputs are standardized first, which shifts the value by a constant that
/// does not depend on `theta`. A failed factorization yields `valid = false`.
pub fn neg_concentrated_log_likelihood(
    data: &Dataset,
    basis: &BasisSet,
    theta: &Hyperparameters,
    options: &FitOptions,
) -> Result<LikelihoodEvaluation> {
    let prep = Prepared::new(data, basis)?;
    Ok(likelihood(&prep, theta, options))
}

fn likelihood(prep: &Prepared, theta: &Hyperparameters, options: &FitOptions) -> LikelihoodEvaluation {
    let invalid = || LikelihoodEvaluation {
        theta: theta.clone(),
        neg_log_lik: f64::INFINITY,
        valid: false,
    };
    let Ok(chol) = prep.factor(theta, &options.ladder) else {
        return invalid();
    };
    let Some(g) = gls(prep, &chol) else {
        return invalid();
    };
    // A vanishing residual (constant data) would send ln σ² to -inf.
    let sigma2 = g.sigma2.max(f64::MIN_POSITIVE);
    let value = 0.5 * (prep.n as f64 * sigma2.ln() + chol.log_det());
    if !value.is_finite() {
        return invalid();
    }
    LikelihoodEvaluation {
        theta: theta.clone(),
        neg_log_lik: value,
        valid: true,
    }
}

/// Default search box `[-3, 3]^d` in `log10(theta)`.
pub fn default_log10_bounds(d: usize) -> Domain {
    Domain {
        lower: vec![-3.0; d],
        upper: vec![3.0; d],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub starts: usize,
    pub search: PatternSearchOptions,
    pub fit: FitOptions,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            starts: 20,
            search: PatternSearchOptions {
                initial_step: 0.1,
                min_step: 1e-6,
                budget: 500,
            },
            fit: FitOptions::default(),
        }
    }
}

fn likelihood_at(prep: &Prepared, log_theta: &[f64], fit: &FitOptions) -> f64 {
    match Hyperparameters::from_log10(log_theta) {
        Ok(th) => likelihood(prep, &th, fit).neg_log_lik,
        Err(_) => f64::INFINITY,
    }
}

/// Multistart maximum-likelihood fit.
///
/// `bounds` is a box in `log10(theta)`. Starts are drawn uniformly from it and
/// each is refined by pattern search. The lowest likelihood wins; exact ties go
/// to the lexicographically smallest `theta`.
pub fn mle_fit<R: Rng + ?Sized>(
    data: Arc<Dataset>,
    basis: &BasisSet,
    bounds: &Domain,
    options: &MleOptions,
    rng: &mut R,
) -> Result<KrigingModel> {
    if bounds.dim() != data.dim() {
        return Err(Error::InvalidArgument(format!(
            "{}-dimensional likelihood bounds for {}-dimensional data",
            bounds.dim(),
            data.dim()
        )));
    }
    let prep = Prepared::new(&data, basis)?;
    let starts: Vec<Vec<f64>> = (0..options.starts.max(1))
        .map(|_| {
            (0..bounds.dim())
                .map(|k| rng.gen_range(bounds.lower[k]..=bounds.upper[k]))
                .collect()
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in &starts {
        let r = pattern_search(
            |t| -likelihood_at(&prep, t, &options.fit),
            start,
            bounds,
            &options.search,
        );
        let nll = -r.value;
        if !nll.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, bt)) => nll < *b || (nll == *b && lex_less(&r.x, bt)),
        };
        if better {
            best = Some((nll, r.x));
        }
    }
    let (_, log_theta) = best.ok_or(Error::NoValidStart {
        starts: starts.len(),
    })?;
    let theta = Hyperparameters::from_log10(&log_theta)?;
    KrigingModel::from_prepared(data, basis, &theta, &prep, &options.fit)
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .find(|(x, y)| x != y)
        .is_some_and(|(x, y)| x < y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceOptions {
    /// Initial bracket width in decades of `theta`.
    pub width: f64,
    pub max_doublings: usize,
    /// Shrinkage steps allowed per coordinate update before giving up.
    pub max_shrinks: usize,
    pub fit: FitOptions,
}

impl Default for SliceOptions {
    fn default() -> Self {
        Self {
            width: 1.0,
            max_doublings: 10,
            max_shrinks: 200,
            fit: FitOptions::default(),
        }
    }
}

/// How an ensemble's hyperparameters were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnsembleOrigin {
    Mle,
    SliceSampling { h: usize, seed: u64 },
    Fixture,
}

/// Models sharing one dataset, each with its own `theta`.
#[derive(Debug, Clone)]
pub struct ModelEnsemble {
    models: Vec<KrigingModel>,
    origin: EnsembleOrigin,
}

impl ModelEnsemble {
    pub fn new(models: Vec<KrigingModel>, origin: EnsembleOrigin) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::InvalidArgument("ensemble must not be empty".into()))?;
        let data = first.data();
        if models
            .iter()
            .any(|m| !Arc::ptr_eq(m.data(), data) && **m.data() != **data)
        {
            return Err(Error::InvalidArgument("ensemble members fitted on different data".into()));
        }
        Ok(Self { models, origin })
    }

    pub fn single(model: KrigingModel) -> Self {
        Self {
            models: vec![model],
            origin: EnsembleOrigin::Mle,
        }
    }

    pub fn models(&self) -> &[KrigingModel] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn origin(&self) -> &EnsembleOrigin {
        &self.origin
    }

    pub fn data(&self) -> &Arc<Dataset> {
        self.models[0].data()
    }

    /// Ensemble-averaged prediction mean.
    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for m in &self.models {
            total += m.predict_mean(x)?;
        }
        Ok(total / self.models.len() as f64)
    }
}

/// Coordinate-wise slice sampling of `log10(theta)` targeting
/// `exp(-neg_log_lik)` restricted to `bounds`.
///
/// Uses Neal's doubling procedure for bracketing and shrinkage for the draw;
/// one retained sample per full sweep, no burn-in, no thinning.
pub fn slice_sample(
    data: Arc<Dataset>,
    basis: &BasisSet,
    theta_start: &Hyperparameters,
    h: usize,
    bounds: &Domain,
    options: &SliceOptions,
    seed: u64,
) -> Result<ModelEnsemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    if h == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let prep = Prepared::new(&data, basis)?;
    let mut current = theta_start.log10();
    if !bounds.contains(&current) {
        return Err(Error::InvalidArgument(format!(
            "starting theta {:?} outside the sampling bounds",
            theta_start.values()
        )));
    }
    let log_density = |t: &[f64]| {
        if !bounds.contains(t) {
            return f64::NEG_INFINITY;
        }
        -likelihood_at(&prep, t, &options.fit)
    };
    let mut current_lp = log_density(&current);
    if !current_lp.is_finite() {
        return Err(Error::InvalidArgument("starting theta has zero likelihood".into()));
    }

    let mut models = Vec::with_capacity(h);
    for _ in 0..h {
        for k in 0..current.len() {
            let (x, lp) = slice_coordinate(&log_density, &current, current_lp, k, options, rng)?;
            current[k] = x;
            current_lp = lp;
        }
        let theta = Hyperparameters::from_log10(&current)?;
        models.push(KrigingModel::from_prepared(data.clone(), basis, &theta, &prep, &options.fit)?);
    }
    Ok(ModelEnsemble {
        models,
        origin: EnsembleOrigin::SliceSampling { h, seed },
    })
}

fn slice_coordinate<F, R>(
    log_density: &F,
    point: &[f64],
    point_lp: f64,
    k: usize,
    opts: &SliceOptions,
    rng: &mut R,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let mut probe = point.to_vec();
    let mut f = |v: f64| {
        probe[k] = v;
        log_density(&probe)
    };
    let x0 = point[k];
    let level = point_lp - sample_exp1(rng);
    let w = opts.width;

    let mut left = x0 - w * rng.gen::<f64>();
    let mut right = left + w;
    let (mut f_left, mut f_right) = (f(left), f(right));
    for _ in 0..opts.max_doublings {
        if !(level < f_left || level < f_right) {
            break;
        }
        if rng.gen::<bool>() {
            left -= right - left;
            f_left = f(left);
        } else {
            right += right - left;
            f_right = f(right);
        }
    }

    let (mut lo, mut hi) = (left, right);
    for _ in 0..opts.max_shrinks {
        let x1 = lo + rng.gen::<f64>() * (hi - lo);
        let f1 = f(x1);
        if level < f1 && doubling_accepts(&mut f, x0, x1, level, left, right, w) {
            return Ok((x1, f1));
        }
        if x1 < x0 {
            lo = x1;
        } else {
            hi = x1;
        }
    }
    Err(Error::SamplingStalled {
        coordinate: k,
        attempts: opts.max_shrinks,
    })
}

/// Neal's acceptance test guaranteeing reversibility of the doubling bracket.
fn doubling_accepts<F: FnMut(f64) -> f64>(
    f: &mut F,
    x0: f64,
    x1: f64,
    level: f64,
    mut left: f64,
    mut right: f64,
    w: f64,
) -> bool {
    let mut differ = false;
    let (mut f_left, mut f_right) = (None, None);
    while right - left > 1.1 * w {
        let mid = 0.5 * (left + right);
        if (x0 < mid) != (x1 < mid) {
            differ = true;
        }
        if x1 < mid {
            right = mid;
            f_right = None;
        } else {
            left = mid;
            f_left = None;
        }
        if differ {
            let fl = *f_left.get_or_insert_with(|| f(left));
            let fr = *f_right.get_or_insert_with(|| f(right));
            if level >= fl && level >= fr {
                return false;
            }
        }
    }
    true
}

fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln()
}

/// Arithmetic mean of per-member scores (and of gradients when all have one).
pub fn average_scores<I: IntoIterator<Item = PolicyScore>>(scores: I) -> Option<PolicyScore> {
    let scores: Vec<PolicyScore> = scores.into_iter().collect();
    if scores.is_empty() {
        return None;
    }
    let n = scores.len() as f64;
    let value = scores.iter().map(|s| s.value).sum::<f64>() / n;
    let gradient = scores
        .iter()
        .map(|s| s.gradient.as_deref())
        .collect::<Option<Vec<&[f64]>>>()
        .map(|grads| {
            let mut acc = vec![0.0; grads[0].len()];
            for g in grads {
                acc.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
            acc.into_iter().map(|v| v / n).collect()
        });
    Some(PolicyScore { value, gradient })
}

/// Score one member model.
pub fn model_policy_score(
    model: &KrigingModel,
    policy: PolicySpec,
    x: &[f64],
    ctx: &PolicyContext,
    with_gradient: bool,
) -> Result<PolicyScore> {
    let p = model.predict(x)?;
    let s = p.std_dev();
    if !with_gradient {
        return policies::score(policy, p.mean, s, ctx, None);
    }
    if s == 0.0 {
        return Err(Error::UndefinedGradient);
    }
    let g = model.predict_gradient(x)?;
    let ds: Vec<f64> = g.variance.iter().map(|v| v / (2.0 * s)).collect();
    policies::score(policy, p.mean, s, ctx, Some((&g.mean, &ds)))
}

/// Policy score averaged over the members of an ensemble.
///
/// Averaging happens on the scores, never on the predictions.
pub fn ensemble_policy_score(
    ensemble: &ModelEnsemble,
    policy: PolicySpec,
    x: &[f64],
    ctx: &PolicyContext,
    with_gradient: bool,
) -> Result<PolicyScore> {
    if ensemble.len() == 1 {
        return model_policy_score(&ensemble.models[0], policy, x, ctx, with_gradient);
    }
    let scores = ensemble
        .models
        .iter()
        .map(|m| model_policy_score(m, policy, x, ctx, with_gradient))
        .collect::<Result<Vec<_>>>()?;
    Ok(average_scores(scores).expect("ensemble is nonempty"))
}
