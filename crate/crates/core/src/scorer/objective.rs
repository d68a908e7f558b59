//! L2-regularized mean log loss for logistic regression.
//!
//! Weight layout is `[intercept, w_1, .., w_d]`; the intercept is not
//! penalized. Sums run over rows in input order so results are bit-reproducible.

/// Design matrix (already standardized) plus targets.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    l2: f64,
}

impl LogisticObjective {
    pub fn new(rows: Vec<Vec<f64>>, targets: Vec<bool>, l2: f64) -> Self {
        debug_assert_eq!(rows.len(), targets.len());
        Self {
            rows,
            targets: targets.into_iter().map(|t| f64::from(u8::from(t))).collect(),
            l2,
        }
    }

    /// Number of weights including the intercept.
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(1, |r| r.len() + 1)
    }

    fn margin(w: &[f64], x: &[f64]) -> f64 {
        w[0] + w[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn loss(&self, w: &[f64]) -> f64 {
        let n = self.rows.len() as f64;
        let data: f64 = self
            .rows
            .iter()
            .zip(&self.targets)
            .map(|(x, &y)| {
                let z = Self::margin(w, x);
                softplus(z) - y * z
            })
            .sum();
        let penalty: f64 = w[1..].iter().map(|v| v * v).sum();
        data / n + 0.5 * self.l2 * penalty
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let n = self.rows.len() as f64;
        let mut g = vec![0.0; w.len()];
        for (x, &y) in self.rows.iter().zip(&self.targets) {
            let r = sigmoid(Self::margin(w, x)) - y;
            g[0] += r;
            for (gj, xj) in g[1..].iter_mut().zip(x) {
                *gj += r * xj;
            }
        }
        for gj in &mut g {
            *gj /= n;
        }
        for (gj, wj) in g[1..].iter_mut().zip(&w[1..]) {
            *gj += self.l2 * wj;
        }
        g
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
