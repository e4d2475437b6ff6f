//! Regression-matrix updates with Θ fixed.

use nalgebra::DMatrix;

use super::AdmmConfig;
use crate::error::{Error, Result};
use crate::linalg::solve_right_spd;

/// `sign(x)·max(|x| − λ, 0)`.
pub fn soft_threshold(x: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::param("lambda", format!("must be non-negative, got {lambda}")));
    }
    Ok(shrink(x, lambda))
}

#[inline]
fn shrink(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// Elementwise soft threshold.
pub fn soft_threshold_matrix(x: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::param("lambda", format!("must be non-negative, got {lambda}")));
    }
    Ok(x.map(|v| shrink(v, lambda)))
}

/// Closed-form ridge update `P = ỸQᵀ (QQᵀ + αI)⁻¹`.
pub fn solve_p_ridge(q: &DMatrix<f64>, y_tilde: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    check_q_y(q, y_tilde)?;
    let qqt = q * q.transpose();
    let yqt = y_tilde * q.transpose();
    ridge_from_gram(&qqt, &yqt, alpha)
}

fn check_q_y(q: &DMatrix<f64>, y_tilde: &DMatrix<f64>) -> Result<()> {
    if q.ncols() != y_tilde.ncols() {
        return Err(Error::DimensionMismatch {
            what: "stacked sample count of Q",
            expected: y_tilde.ncols(),
            got: q.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn ridge_from_gram(qqt: &DMatrix<f64>, yqt: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha", format!("must be non-negative, got {alpha}")));
    }
    let d = qqt.nrows();
    let h = qqt + DMatrix::identity(d, d) * alpha;
    match solve_right_spd(&h, yqt) {
        Ok(p) => Ok(p),
        Err(_) if alpha == 0.0 => Err(Error::Singular("QQᵀ is singular and alpha = 0")),
        Err(e) => Err(e),
    }
}

/// Outcome of the sparse P-step.
#[derive(Debug, Clone)]
pub struct SparseStep {
    pub p: DMatrix<f64>,
    /// Both ADMM residuals fell below `inner_tol`.
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `½‖Ỹ − PQ‖² + α‖P‖₁,₁` at the returned P, up to the constant `½‖Ỹ‖²`
    /// when computed from Gram inputs.
    pub objective: f64,
}

/// l1-penalised P update by ADMM with the splitting `P = Z`:
///
/// ```text
/// P ← (ỸQᵀ + ρ(Z − U)) (QQᵀ + ρI)⁻¹
/// Z ← soft(P + U, α/ρ)
/// U ← U + P − Z
/// ```
///
/// The returned matrix is the sparse iterate `Z`.
pub fn solve_p_sparse(
    q: &DMatrix<f64>,
    y_tilde: &DMatrix<f64>,
    alpha: f64,
    admm: &AdmmConfig,
) -> Result<SparseStep> {
    check_q_y(q, y_tilde)?;
    let qqt = q * q.transpose();
    let yqt = y_tilde * q.transpose();
    let mut step = sparse_from_gram(&qqt, &yqt, alpha, admm, None)?;
    step.objective += 0.5 * y_tilde.norm_squared();
    Ok(step)
}

/// P-subproblem objective without the constant `½‖Ỹ‖²`.
pub(crate) fn sparse_subproblem_value(qqt: &DMatrix<f64>, yqt: &DMatrix<f64>, alpha: f64, p: &DMatrix<f64>) -> f64 {
    let cross = p.component_mul(yqt).sum();
    let quad = (p * qqt).component_mul(p).sum();
    0.5 * quad - cross + alpha * super::objective::l1_norm(p)
}

pub(crate) fn sparse_from_gram(
    qqt: &DMatrix<f64>,
    yqt: &DMatrix<f64>,
    alpha: f64,
    admm: &AdmmConfig,
    warm: Option<&DMatrix<f64>>,
) -> Result<SparseStep> {
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha", format!("must be non-negative, got {alpha}")));
    }
    admm.validate()?;
    let (c, d) = (yqt.nrows(), qqt.nrows());
    let rho = admm.rho;
    let h = qqt + DMatrix::identity(d, d) * rho;
    let chol = h
        .cholesky()
        .ok_or(Error::Singular("QQᵀ + ρI is not positive definite"))?;
    let lambda = alpha / rho;

    let mut z = warm.cloned().unwrap_or_else(|| DMatrix::zeros(c, d));
    let mut u = DMatrix::zeros(c, d);
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..admm.inner_iter {
        iterations += 1;
        let rhs = yqt + (&z - &u) * rho;
        let p = chol.solve(&rhs.transpose()).transpose();
        let z_prev = std::mem::replace(&mut z, (&p + &u).map(|v| shrink(v, lambda)));
        u += &p - &z;
        primal = (&p - &z).norm();
        dual = rho * (&z - &z_prev).norm();
        if primal <= admm.inner_tol && dual <= admm.inner_tol {
            converged = true;
            break;
        }
    }
    let mut objective = sparse_subproblem_value(qqt, yqt, alpha, &z);

    // Never return something worse than the trivial candidates.
    let mut candidates = vec![DMatrix::zeros(c, d)];
    if let Some(w) = warm {
        candidates.push(w.clone());
    }
    if let Ok(r) = ridge_from_gram(qqt, yqt, alpha) {
        candidates.push(r);
    }
    for cand in candidates {
        let v = sparse_subproblem_value(qqt, yqt, alpha, &cand);
        if v < objective {
            objective = v;
            z = cand;
        }
    }
    Ok(SparseStep {
        p: z,
        converged,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        objective,
    })
}
