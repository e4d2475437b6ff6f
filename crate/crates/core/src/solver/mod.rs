//! Alternating minimisation of the shared-subspace objective
//!
//! ```text
//! ½‖Ỹ − PΘX̃‖²_F + R_α(P) + (β/2) tr(ΘX̃ L (ΘX̃)ᵀ)   s.t. ΘΘᵀ = I
//! ```
//!
//! where `R_α` is `(α/2)‖P‖²_F` (ridge) or `α‖P‖₁,₁` (sparse). Each outer
//! iteration updates P with Θ fixed, then Θ with P fixed, and stops once the
//! relative change of the objective drops below `zeta`.

mod objective;
mod pstep;
mod theta;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use objective::{l1_norm, objective_l1, objective_l2, objective_terms, GramForms, ObjectiveTerms};
pub use pstep::{soft_threshold, soft_threshold_matrix, solve_p_ridge, solve_p_sparse, SparseStep};
pub use theta::{solve_theta, ThetaStep};

use crate::data::{
    build_stacked_system, CoSpaceModel, Hyperparams, LabelEncoding, ModalityMatrix, PenaltyKind,
    StackedSystem,
};
use crate::error::{Error, Result};
use crate::graph::{build_joint_supervised_adjacency, build_laplacian};
use crate::linalg::top_eigenvectors_as_rows;

/// Inner ADMM controls shared by the sparse P-step and the Θ-step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub rho: f64,
    pub inner_iter: usize,
    pub inner_tol: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            inner_iter: 50,
            inner_tol: 1e-6,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::param("rho", format!("must be positive, got {}", self.rho)));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::param("inner_tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
    pub penalty: PenaltyKind,
    /// Stop when `|E⁺ − E| / max(E, 1e-12) < zeta`.
    pub zeta: f64,
    pub max_iter: usize,
    pub admm: AdmmConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.1,
            dim: 10,
            penalty: PenaltyKind::Ridge,
            zeta: 1e-4,
            max_iter: 200,
            admm: AdmmConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn ridge(dim: usize, alpha: f64, beta: f64) -> Self {
        Self {
            dim,
            alpha,
            beta,
            ..Self::default()
        }
    }

    pub fn sparse(dim: usize, alpha: f64, beta: f64) -> Self {
        Self {
            penalty: PenaltyKind::Sparse,
            ..Self::ridge(dim, alpha, beta)
        }
    }

    pub fn validate(&self, total_features: usize) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if self.dim > total_features {
            return Err(Error::param(
                "dim",
                format!("{} exceeds total feature count {total_features}", self.dim),
            ));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::param("alpha", format!("must be non-negative, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::param("beta", format!("must be non-negative, got {}", self.beta)));
        }
        if !(self.zeta > 0.0) {
            return Err(Error::param("zeta", format!("must be positive, got {}", self.zeta)));
        }
        self.admm.validate()
    }
}

/// Builds the stacked system with the joint supervised Laplacian.
pub fn supervised_system(
    x1: &ModalityMatrix,
    x2: &ModalityMatrix,
    labels: &LabelEncoding,
) -> Result<StackedSystem> {
    if x1.num_samples() != x2.num_samples() {
        return Err(Error::SampleCountMismatch {
            n1: x1.num_samples(),
            n2: x2.num_samples(),
        });
    }
    if labels.len() != x1.num_samples() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: x1.num_samples(),
            got: labels.len(),
        });
    }
    let w = build_joint_supervised_adjacency(labels)?;
    let l = build_laplacian(&w)?;
    build_stacked_system(x1, x2, labels, l.into_matrix())
}

/// Deterministic starting point: Θ₀ spans the top-`d` left singular vectors
/// of X̃, and P₀ is the ridge solution against it.
pub fn initialize(forms: &GramForms, config: &SolverConfig) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (_, theta) = top_eigenvectors_as_rows(&forms.a, config.dim);
    let (qqt, yqt) = forms.p_step_inputs(&theta);
    // alpha = 0 may leave QQᵀ singular on rank-deficient data
    let alpha = if config.alpha > 0.0 { config.alpha } else { 1e-8 };
    let p = pstep::ridge_from_gram(&qqt, &yqt, alpha)?;
    Ok((theta, p))
}

/// Per-iteration diagnostics beyond the objective history.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitLog {
    /// Sparse P-steps whose ADMM residuals did not reach `inner_tol`.
    pub p_step_unconverged: usize,
    /// Θ-steps that could not improve on their warm start.
    pub theta_step_stagnated: usize,
    pub theta_inner_iterations: Vec<usize>,
}

/// Runs the alternating solver on two co-registered modalities.
pub fn fit_cospace(
    x1: &ModalityMatrix,
    x2: &ModalityMatrix,
    labels: &LabelEncoding,
    config: &SolverConfig,
) -> Result<CoSpaceModel> {
    fit_cospace_logged(x1, x2, labels, config).map(|(m, _)| m)
}

pub fn fit_cospace_logged(
    x1: &ModalityMatrix,
    x2: &ModalityMatrix,
    labels: &LabelEncoding,
    config: &SolverConfig,
) -> Result<(CoSpaceModel, FitLog)> {
    if labels.num_classes() < 2 {
        return Err(Error::Degenerate("at least two classes are required".into()));
    }
    config.validate(x1.num_features() + x2.num_features())?;
    let system = supervised_system(x1, x2, labels)?;
    fit_system(&system, config)
}

/// Alternating solver on a prebuilt stacked system (any Laplacian).
pub fn fit_system(system: &StackedSystem, config: &SolverConfig) -> Result<(CoSpaceModel, FitLog)> {
    config.validate(system.total_features())?;
    let forms = GramForms::new(system);
    let (mut theta, mut p) = initialize(&forms, config)?;
    let (alpha, beta, kind) = (config.alpha, config.beta, config.penalty);

    let mut energy = forms.objective(&theta, &p, alpha, beta, kind);
    if !energy.is_finite() {
        return Err(Error::NonFiniteTerm("initial objective"));
    }
    let mut history = vec![energy];
    let mut log = FitLog::default();
    let mut converged = false;
    let mut iterations_used = 0;

    for _ in 0..config.max_iter {
        let (qqt, yqt) = forms.p_step_inputs(&theta);
        p = match kind {
            PenaltyKind::Ridge => pstep::ridge_from_gram(&qqt, &yqt, alpha)?,
            PenaltyKind::Sparse => {
                let step = pstep::sparse_from_gram(&qqt, &yqt, alpha, &config.admm, Some(&p))?;
                if !step.converged {
                    log.p_step_unconverged += 1;
                }
                step.p
            }
        };

        let step = theta::solve_theta_gram(&forms, &p, beta, &theta, &config.admm)?;
        if step.stagnated {
            log.theta_step_stagnated += 1;
        }
        log.theta_inner_iterations.push(step.iterations);
        theta = step.theta;

        let next = forms.objective(&theta, &p, alpha, beta, kind);
        if !next.is_finite() {
            return Err(Error::NonFiniteTerm("objective"));
        }
        history.push(next);
        iterations_used += 1;
        let change = (next - energy).abs() / energy.max(1e-12);
        energy = next;
        if change < config.zeta {
            converged = true;
            break;
        }
    }

    let model = CoSpaceModel {
        theta,
        p,
        d1: system.d1(),
        d2: system.d2(),
        penalty_kind: kind,
        hyperparams: Hyperparams {
            dim: config.dim,
            alpha,
            beta,
        },
        history,
        converged,
        iterations_used,
    };
    Ok((model, log))
}
