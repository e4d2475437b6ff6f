//! Projection update with P fixed, under the row-orthonormality constraint.
//!
//! The constraint is split off onto an auxiliary copy `G`:
//!
//! ```text
//! min f(Θ) + ι(G ∈ St)   s.t. Θ = G
//! Θ ← argmin f(Θ) + ρ/2 ‖Θ − G + U‖²        (linear solve)
//! G ← UVᵀ  from the SVD of Θ + U             (Procrustes projection)
//! U ← U + Θ − G
//! ```
//!
//! The Θ-update's normal equations `PᵀP Θ A + Θ(βM + ρI) = PᵀB + ρ(G − U)`
//! decouple once `PᵀP = V S Vᵀ` is diagonalised: each row of `VᵀΘ` solves
//! a `D × D` system with matrix `sᵢA + βM + ρI`.

use nalgebra::{Cholesky, DMatrix, Dyn};

use super::objective::GramForms;
use super::AdmmConfig;
use crate::data::StackedSystem;
use crate::error::{Error, Result};
use crate::linalg::{orthogonality_error, project_rows_orthonormal, sym_eigen_ascending};

/// Outcome of one Θ-step.
#[derive(Debug, Clone)]
pub struct ThetaStep {
    /// Always row-orthonormal.
    pub theta: DMatrix<f64>,
    /// Smooth objective at `theta`.
    pub objective: f64,
    /// Smooth objective at the warm start.
    pub start_objective: f64,
    /// Residuals reached `inner_tol` before `inner_iter` ran out.
    pub converged: bool,
    pub iterations: usize,
    /// No feasible iterate beat the warm start; `theta` is the warm start.
    pub stagnated: bool,
}

/// Θ-step on a stacked system. Builds the Gram forms on every call; the
/// alternating solver reuses them through [`solve_theta_gram`].
pub fn solve_theta(
    system: &StackedSystem,
    p: &DMatrix<f64>,
    beta: f64,
    current_theta: &DMatrix<f64>,
    admm: &AdmmConfig,
) -> Result<ThetaStep> {
    let forms = GramForms::new(system);
    solve_theta_gram(&forms, p, beta, current_theta, admm)
}

pub(crate) fn solve_theta_gram(
    forms: &GramForms,
    p: &DMatrix<f64>,
    beta: f64,
    current_theta: &DMatrix<f64>,
    admm: &AdmmConfig,
) -> Result<ThetaStep> {
    admm.validate()?;
    if !(beta >= 0.0) {
        return Err(Error::param("beta", format!("must be non-negative, got {beta}")));
    }
    let total = forms.total_features();
    let d = current_theta.nrows();
    if current_theta.ncols() != total {
        return Err(Error::DimensionMismatch {
            what: "theta columns",
            expected: total,
            got: current_theta.ncols(),
        });
    }
    if p.ncols() != d {
        return Err(Error::DimensionMismatch {
            what: "p columns",
            expected: d,
            got: p.ncols(),
        });
    }
    if orthogonality_error(current_theta) > 1e-6 {
        return Err(Error::param("current_theta", "warm start is not row-orthonormal"));
    }

    let rho = admm.rho;
    let (s, v) = sym_eigen_ascending(&(p.transpose() * p));
    let base = &forms.m * beta + DMatrix::identity(total, total) * rho;
    let factors: Vec<Cholesky<f64, Dyn>> = (0..d)
        .map(|i| {
            (&forms.a * s[i].max(0.0) + &base)
                .cholesky()
                .ok_or(Error::Singular("theta-step system is not positive definite"))
        })
        .collect::<Result<_>>()?;
    let ptb_rot = v.transpose() * (p.transpose() * &forms.b);

    let start_objective = forms.smooth(current_theta, p, beta);
    let mut best = current_theta.clone();
    let mut best_value = start_objective;

    let mut g = current_theta.clone();
    let mut u = DMatrix::zeros(d, total);
    let mut theta_rot = DMatrix::zeros(d, total);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..admm.inner_iter {
        iterations += 1;
        let rhs = &ptb_rot + v.transpose() * (&g - &u) * rho;
        for (i, chol) in factors.iter().enumerate() {
            // row system: θᵢ H = rᵢ  <=>  H θᵢᵀ = rᵢᵀ
            let row = chol.solve(&rhs.row(i).transpose());
            theta_rot.set_row(i, &row.transpose());
        }
        let theta = &v * &theta_rot;
        let g_prev = std::mem::replace(&mut g, project_rows_orthonormal(&(&theta + &u))?);
        u += &theta - &g;

        let value = forms.smooth(&g, p, beta);
        if value < best_value {
            best_value = value;
            best.copy_from(&g);
        }
        let primal = (&theta - &g).norm();
        let dual = rho * (&g - &g_prev).norm();
        if primal <= admm.inner_tol && dual <= admm.inner_tol {
            converged = true;
            break;
        }
    }
    let stagnated = best_value >= start_objective;
    Ok(ThetaStep {
        theta: best,
        objective: best_value,
        start_objective,
        converged,
        iterations,
        stagnated,
    })
}
