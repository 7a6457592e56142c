//! Dense row-major helpers for the small symmetric systems Kriging needs.

/// Geometric jitter schedule added to the diagonal before factorization.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JitterLadder {
    pub initial: f64,
    pub factor: f64,
    pub max: f64,
}

impl Default for JitterLadder {
    fn default() -> Self {
        Self {
            initial: 1e-10,
            factor: 10.0,
            max: 1e-4,
        }
    }
}

impl JitterLadder {
    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        let mut next = Some(self.initial);
        std::iter::from_fn(move || {
            let cur = next?;
            let upcoming = cur * self.factor;
            next = (upcoming > cur && upcoming <= self.max * (1.0 + 1e-12)).then_some(upcoming);
            Some(cur)
        })
    }
}

/// Lower-triangular Cholesky factor of an `n x n` matrix, stored row-major.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
    jitter: f64,
}

impl Cholesky {
    /// Factor `a + jitter * I`, walking the ladder until the factorization succeeds.
    pub fn with_ladder(a: &[f64], n: usize, ladder: &JitterLadder) -> Option<Self> {
        let mut work = vec![0.0; n * n];
        for jitter in ladder.steps() {
            if factor_into(a, n, jitter, &mut work) {
                return Some(Self { n, l: work, jitter });
            }
        }
        None
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn factor(&self) -> &[f64] {
        &self.l
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>()
    }

    /// In place `b <- L^{-1} b`.
    pub fn solve_lower(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(a, c)| a * c).sum();
            b[i] = (b[i] - s) / self.l[i * n + i];
        }
    }

    /// In place `b <- L^{-T} b`.
    pub fn solve_upper(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            b[i] /= self.l[i * n + i];
            let bi = b[i];
            let row = &self.l[i * n..i * n + i];
            for (bj, lij) in b[..i].iter_mut().zip(row) {
                *bj -= lij * bi;
            }
        }
    }

    /// `b <- A^{-1} b`.
    #[cfg(test)]
    pub fn solve(&self, b: &mut [f64]) {
        self.solve_lower(b);
        self.solve_upper(b);
    }
}

fn factor_into(a: &[f64], n: usize, jitter: f64, l: &mut [f64]) -> bool {
    l.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (i * n, j * n);
            let s: f64 = (0..j).map(|k| l[ri + k] * l[rj + k]).sum();
            if i == j {
                let pivot = a[ri + i] + jitter - s;
                if !(pivot > 0.0) || !pivot.is_finite() {
                    return false;
                }
                l[ri + i] = pivot.sqrt();
            } else {
                l[ri + j] = (a[ri + j] - s) / l[rj + j];
            }
        }
    }
    true
}

/// Solve the small dense system `a x = b` by Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))?;
        if a[piv * n + col] == 0.0 || !a[piv * n + col].is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r * n + k] * b[k]).sum();
        b[r] = (b[r] - s) / a[r * n + r];
    }
    Some(b)
}
