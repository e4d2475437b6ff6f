//! Objective evaluation for both penalty variants.

use nalgebra::DMatrix;

use crate::data::{PenaltyKind, StackedSystem};
use crate::error::{Error, Result};

/// Individual terms of the joint objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// `½‖Ỹ − PΘX̃‖²_F`
    pub fit: f64,
    /// `(α/2)‖P‖²_F` or `α‖P‖₁,₁`
    pub regression: f64,
    /// `(β/2) tr(ΘX̃ L (ΘX̃)ᵀ)`
    pub graph: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.fit + self.regression + self.graph
    }
}

/// Entrywise l1 norm.
pub fn l1_norm(p: &DMatrix<f64>) -> f64 {
    p.iter().map(|v| v.abs()).sum()
}

pub(crate) fn penalty_value(p: &DMatrix<f64>, alpha: f64, kind: PenaltyKind) -> f64 {
    match kind {
        PenaltyKind::Ridge => 0.5 * alpha * p.norm_squared(),
        PenaltyKind::Sparse => alpha * l1_norm(p),
    }
}

fn check_shapes(system: &StackedSystem, theta: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<()> {
    if theta.ncols() != system.total_features() {
        return Err(Error::DimensionMismatch {
            what: "theta columns",
            expected: system.total_features(),
            got: theta.ncols(),
        });
    }
    if p.ncols() != theta.nrows() {
        return Err(Error::DimensionMismatch {
            what: "p columns",
            expected: theta.nrows(),
            got: p.ncols(),
        });
    }
    if p.nrows() != system.num_classes() {
        return Err(Error::DimensionMismatch {
            what: "p rows",
            expected: system.num_classes(),
            got: p.nrows(),
        });
    }
    Ok(())
}

/// Evaluates every term directly from the stacked system.
pub fn objective_terms(
    system: &StackedSystem,
    theta: &DMatrix<f64>,
    p: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    kind: PenaltyKind,
) -> Result<ObjectiveTerms> {
    check_shapes(system, theta, p)?;
    let q = theta * system.x_tilde();
    let fit = 0.5 * (system.y_tilde() - p * &q).norm_squared();
    let regression = penalty_value(p, alpha, kind);
    let graph = 0.5 * beta * (&q * system.laplacian()).component_mul(&q).sum();
    let terms = ObjectiveTerms {
        fit,
        regression,
        graph,
    };
    if !fit.is_finite() {
        return Err(Error::NonFiniteTerm("fit term"));
    }
    if !regression.is_finite() {
        return Err(Error::NonFiniteTerm("regression penalty"));
    }
    if !graph.is_finite() {
        return Err(Error::NonFiniteTerm("graph term"));
    }
    Ok(terms)
}

/// Ridge-penalised objective.
pub fn objective_l2(
    system: &StackedSystem,
    theta: &DMatrix<f64>,
    p: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    objective_terms(system, theta, p, alpha, beta, PenaltyKind::Ridge).map(|t| t.total())
}

/// l1-penalised objective.
pub fn objective_l1(
    system: &StackedSystem,
    theta: &DMatrix<f64>,
    p: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    objective_terms(system, theta, p, alpha, beta, PenaltyKind::Sparse).map(|t| t.total())
}

/// Quadratic forms of the stacked data that stay fixed across iterations.
///
/// With `A = X̃X̃ᵀ`, `M = X̃LX̃ᵀ` and `B = ỸX̃ᵀ` every objective and
/// gradient evaluation costs `O(d·D²)` instead of touching all 2N samples.
#[derive(Debug, Clone)]
pub struct GramForms {
    pub(crate) a: DMatrix<f64>,
    pub(crate) m: DMatrix<f64>,
    pub(crate) b: DMatrix<f64>,
    pub(crate) yy: f64,
}

impl GramForms {
    pub fn new(system: &StackedSystem) -> Self {
        let x = system.x_tilde();
        let a = x * x.transpose();
        let xl = x * system.laplacian();
        let m = &xl * x.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let b = system.y_tilde() * x.transpose();
        let yy = system.y_tilde().norm_squared();
        Self { a, m, b, yy }
    }

    /// Smooth part in Θ: `½‖Ỹ − PΘX̃‖² + (β/2) tr(ΘMΘᵀ)`.
    pub fn smooth(&self, theta: &DMatrix<f64>, p: &DMatrix<f64>, beta: f64) -> f64 {
        let pt = p * theta;
        let cross = pt.component_mul(&self.b).sum();
        let quad = (&pt * &self.a).component_mul(&pt).sum();
        let fit = (0.5 * (self.yy - 2.0 * cross + quad)).max(0.0);
        let graph = 0.5 * beta * (theta * &self.m).component_mul(theta).sum();
        fit + graph
    }

    pub fn objective(
        &self,
        theta: &DMatrix<f64>,
        p: &DMatrix<f64>,
        alpha: f64,
        beta: f64,
        kind: PenaltyKind,
    ) -> f64 {
        self.smooth(theta, p, beta) + penalty_value(p, alpha, kind)
    }

    /// Gradient of [`GramForms::smooth`] with respect to Θ:
    /// `PᵀPΘA − PᵀB + βΘM`.
    pub fn smooth_gradient(&self, theta: &DMatrix<f64>, p: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
        let ptp = p.transpose() * p;
        &ptp * theta * &self.a - p.transpose() * &self.b + theta * &self.m * beta
    }

    /// `QQᵀ` and `ỸQᵀ` for `Q = ΘX̃`.
    pub fn p_step_inputs(&self, theta: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let qqt = theta * &self.a * theta.transpose();
        let qqt = (&qqt + qqt.transpose()) * 0.5;
        let yqt = &self.b * theta.transpose();
        (qqt, yqt)
    }

    pub fn total_features(&self) -> usize {
        self.a.nrows()
    }
}
