//! Synthetic test problems, negated so that the engine maximizes, and the
//! opportunity-cost metric.

use std::f64::consts::PI;

use crate::{Domain, Error, Result};

/// OC values down to this far below zero are rounding noise and clamp to 0.
pub const OC_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Problem {
    pub name: &'static str,
    pub domain: Domain,
    evaluate: fn(&[f64]) -> f64,
    /// Maximum of the (negated) objective over the domain.
    pub true_optimum: f64,
    pub true_optimizer: Vec<f64>,
    /// Default number of evaluations.
    pub budget: usize,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.evaluate)(x)
    }

    pub fn by_name(name: &str) -> Option<Problem> {
        match name.to_ascii_lowercase().as_str() {
            "branin" => Some(branin()),
            "hartmann6" | "hartmann" => Some(hartmann6()),
            "schwefel" | "schwefel2" => Some(schwefel2()),
            "eggholder" => Some(eggholder()),
            _ => None,
        }
    }

    pub const NAMES: [&'static str; 4] = ["branin", "hartmann6", "schwefel", "eggholder"];
}

fn branin_min(x: &[f64]) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x[1] - b * x[0] * x[0] + c * x[0] - 6.0).powi(2) + 10.0 * (1.0 - t) * x[0].cos() + 10.0
}

/// Branin on `[-5, 10] x [0, 15]`, three global optima.
pub fn branin() -> Problem {
    Problem {
        name: "branin",
        domain: Domain {
            lower: vec![-5.0, 0.0],
            upper: vec![10.0, 15.0],
        },
        evaluate: |x| -branin_min(x),
        true_optimum: -0.397_887_357_729_738_16,
        true_optimizer: vec![PI, 2.275],
        budget: 20,
    }
}

const H6_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const H6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const H6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

fn hartmann6_max(x: &[f64]) -> f64 {
    (0..4)
        .map(|i| {
            let inner: f64 = (0..6).map(|j| H6_A[i][j] * (x[j] - H6_P[i][j]).powi(2)).sum();
            H6_ALPHA[i] * (-inner).exp()
        })
        .sum()
}

/// Hartmann-6 on `[0, 1]^6`.
pub fn hartmann6() -> Problem {
    Problem {
        name: "hartmann6",
        domain: Domain::unit(6),
        evaluate: hartmann6_max,
        true_optimum: 3.322_368_011_415_515,
        true_optimizer: vec![
            0.201_689_509_093_657_46,
            0.150_010_693_541_113_74,
            0.476_873_972_925_099_8,
            0.275_332_427_522_078_2,
            0.311_651_617_239_568_6,
            0.657_300_534_553_670_2,
        ],
        budget: 40,
    }
}

fn schwefel_min(x: &[f64]) -> f64 {
    418.9829 * x.len() as f64 - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
}

/// Schwefel on `[-500, 500]^2`; optimum near `(420.9687, 420.9687)`.
pub fn schwefel2() -> Problem {
    let xs = 420.968_746_576_449_2;
    Problem {
        name: "schwefel",
        domain: Domain {
            lower: vec![-500.0; 2],
            upper: vec![500.0; 2],
        },
        evaluate: |x| -schwefel_min(x),
        true_optimum: -2.545_513_234_508_689_5e-5,
        true_optimizer: vec![xs, xs],
        budget: 100,
    }
}

fn eggholder_min(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    -(x2 + 47.0) * (x2 + x1 / 2.0 + 47.0).abs().sqrt().sin() - x1 * (x1 - (x2 + 47.0)).abs().sqrt().sin()
}

/// Eggholder on `[-512, 512]^2`; optimum on the boundary at `(512, 404.2319)`.
pub fn eggholder() -> Problem {
    Problem {
        name: "eggholder",
        domain: Domain {
            lower: vec![-512.0; 2],
            upper: vec![512.0; 2],
        },
        evaluate: |x| -eggholder_min(x),
        true_optimum: 959.640_662_720_850_9,
        true_optimizer: vec![512.0, 404.231_804_828_897_96],
        budget: 100,
    }
}

/// `true_optimum - value`, clamped to zero inside [`OC_TOLERANCE`].
pub fn opportunity_cost_from_value(true_optimum: f64, value: f64) -> Result<f64> {
    let oc = true_optimum - value;
    if !oc.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite objective value {value}")));
    }
    if oc < -OC_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "value {value} exceeds the stated optimum {true_optimum}"
        )));
    }
    Ok(oc.max(0.0))
}

/// Gap between the true optimum and the objective at `x_hat`.
pub fn opportunity_cost(problem: &Problem, x_hat: &[f64]) -> Result<f64> {
    if !problem.domain.contains(x_hat) {
        return Err(Error::InvalidArgument(format!("{x_hat:?} lies outside the domain")));
    }
    opportunity_cost_from_value(problem.true_optimum, problem.evaluate(x_hat))
}
