//! One-vs-rest linear max-margin classifier.
//!
//! Each binary problem minimises
//! `½‖w̄‖² + C Σᵢ max(0, 1 − yᵢ w̄ᵀx̄ᵢ)²` over `w̄ = [w; b]` with the bias
//! folded in as a constant feature, using a generalised Newton method with
//! Armijo backtracking. Inputs are standardised with training statistics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Standardizer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Loss weight `C`.
    pub cost: f64,
    pub grad_tol: f64,
    pub max_newton_iter: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            cost: 1.0,
            grad_tol: 1e-6,
            max_newton_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    /// `C × d`
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub scaler: Standardizer,
    /// Final gradient norm of each binary problem.
    pub grad_norms: Vec<f64>,
}

/// Solution of one binary squared-hinge problem.
#[derive(Debug, Clone)]
pub struct BinarySolution {
    pub w: DVector<f64>,
    pub b: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// `½(‖w‖² + b²) + C Σ max(0, 1 − yᵢ(wᵀxᵢ + b))²` for labels `yᵢ ∈ {−1, +1}`.
pub fn squared_hinge_objective(x: &DMatrix<f64>, y: &[f64], w: &DVector<f64>, b: f64, cost: f64) -> f64 {
    let mut loss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let margin = 1.0 - yi * (x.column(i).dot(w) + b);
        if margin > 0.0 {
            loss += margin * margin;
        }
    }
    0.5 * (w.norm_squared() + b * b) + cost * loss
}

/// Binary squared-hinge SVM on the columns of `x` (`d × n`).
pub fn train_binary(x: &DMatrix<f64>, y: &[f64], config: &ClassifierConfig) -> Result<BinarySolution> {
    let (d, n) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            what: "binary labels",
            expected: n,
            got: y.len(),
        });
    }
    let cost = config.cost;
    // augmented design: last coordinate is the bias
    let dim = d + 1;
    let mut xa = DMatrix::from_element(dim, n, 1.0);
    xa.view_mut((0, 0), (d, n)).copy_from(x);

    let value = |v: &DVector<f64>| -> f64 {
        let mut loss = 0.0;
        for i in 0..n {
            let m = 1.0 - y[i] * xa.column(i).dot(v);
            if m > 0.0 {
                loss += m * m;
            }
        }
        0.5 * v.norm_squared() + cost * loss
    };

    let mut v = DVector::zeros(dim);
    let mut f = value(&v);
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..config.max_newton_iter {
        let mut grad = v.clone();
        let mut hess = DMatrix::identity(dim, dim);
        for i in 0..n {
            let xi = xa.column(i);
            let m = 1.0 - y[i] * xi.dot(&v);
            if m > 0.0 {
                grad.axpy(-2.0 * cost * y[i] * m, &xi, 1.0);
                hess.ger(2.0 * cost, &xi, &xi, 1.0);
            }
        }
        grad_norm = grad.norm();
        if grad_norm <= config.grad_tol {
            break;
        }
        iterations += 1;
        let step = hess
            .cholesky()
            .ok_or(Error::Singular("classifier Hessian"))?
            .solve(&(-&grad));
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let cand = &v + &step * t;
            let fc = value(&cand);
            if fc <= f + 1e-4 * t * slope {
                v = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(BinarySolution {
        w: v.rows(0, d).into_owned(),
        b: v[d],
        grad_norm,
        iterations,
    })
}

impl LinearClassifier {
    /// Trains on `features` (`d × n`) with labels in `0..num_classes`.
    pub fn train(
        features: &DMatrix<f64>,
        labels: &[usize],
        num_classes: usize,
        config: &ClassifierConfig,
    ) -> Result<Self> {
        if labels.len() != features.ncols() {
            return Err(Error::DimensionMismatch {
                what: "classifier labels",
                expected: features.ncols(),
                got: labels.len(),
            });
        }
        let mut counts = vec![0usize; num_classes];
        for &l in labels {
            if l >= num_classes {
                return Err(Error::LabelOutOfRange {
                    label: l,
                    num_classes,
                });
            }
            counts[l] += 1;
        }
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::Degenerate("classifier needs at least two classes".into()));
        }
        let scaler = Standardizer::fit(features);
        let x = scaler.apply(features)?;
        let d = x.nrows();
        let mut weights = DMatrix::zeros(num_classes, d);
        let mut bias = DVector::zeros(num_classes);
        let mut grad_norms = Vec::with_capacity(num_classes);
        for c in 0..num_classes {
            if counts[c] == 0 {
                // absent class can never win
                bias[c] = f64::NEG_INFINITY;
                grad_norms.push(0.0);
                continue;
            }
            let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            let sol = train_binary(&x, &y, config)?;
            weights.set_row(c, &sol.w.transpose());
            bias[c] = sol.b;
            grad_norms.push(sol.grad_norm);
        }
        Ok(Self {
            weights,
            bias,
            scaler,
            grad_norms,
        })
    }

    pub fn num_features(&self) -> usize {
        self.weights.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    /// Class scores `C × n`.
    pub fn scores(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let x = self.scaler.apply(features)?;
        let mut s = &self.weights * x;
        for (c, mut row) in s.row_iter_mut().enumerate() {
            row.add_scalar_mut(self.bias[c]);
        }
        Ok(s)
    }

    pub fn predict(&self, features: &DMatrix<f64>) -> Result<Vec<usize>> {
        Ok(crate::data::argmax_columns(&self.scores(features)?))
    }
}
