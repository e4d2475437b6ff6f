//! Comparison projections: joint PCA and locality-preserving alignment
//! (unsupervised kNN graph or supervised same-class graph).
//!
//! All three operate on the stacked block-diagonal system and return a
//! `d × (d1 + d2)` projection partitioned per modality.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{LabelEncoding, ModalityMatrix};
use crate::error::{Error, Result};
use crate::graph::{
    build_joint_supervised_adjacency, build_knn_gaussian_adjacency, build_laplacian, AdjacencyMatrix,
};
use crate::linalg::{generalized_sym_eigen, sym_eigen_ascending, top_eigenvectors_as_rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    Pjdr,
    Lusma,
    Lsma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub theta: DMatrix<f64>,
    pub d1: usize,
    pub d2: usize,
    pub method: BaselineMethod,
    pub dim: usize,
    pub k: Option<usize>,
    pub sigma: Option<f64>,
    /// Eigenvalues of the selected directions, in row order.
    pub eigenvalues: Vec<f64>,
    /// `X̃DX̃ᵀ` was singular and got a `1e-8·I` ridge.
    pub regularized: bool,
}

impl BaselineModel {
    pub fn theta1(&self) -> DMatrix<f64> {
        self.theta.columns(0, self.d1).into_owned()
    }

    pub fn theta2(&self) -> DMatrix<f64> {
        self.theta.columns(self.d1, self.d2).into_owned()
    }
}

const NULL_EIGENVALUE: f64 = 1e-10;
const DEGREE_RIDGE: f64 = 1e-8;

/// Block-diagonal `[X₁ 0; 0 X₂]`.
pub fn stack_block_diagonal(x1: &ModalityMatrix, x2: &ModalityMatrix) -> Result<DMatrix<f64>> {
    let n = x1.num_samples();
    if x2.num_samples() != n {
        return Err(Error::SampleCountMismatch {
            n1: n,
            n2: x2.num_samples(),
        });
    }
    let (d1, d2) = (x1.num_features(), x2.num_features());
    let mut x = DMatrix::zeros(d1 + d2, 2 * n);
    x.view_mut((0, 0), (d1, n)).copy_from(x1.data());
    x.view_mut((d1, n), (d2, n)).copy_from(x2.data());
    Ok(x)
}

fn check_dim(dim: usize, total: usize) -> Result<()> {
    if dim == 0 || dim > total {
        return Err(Error::param("dim", format!("need 1 <= dim <= {total}, got {dim}")));
    }
    Ok(())
}

/// Joint PCA: top-`d` principal directions of the column-centred stacked data.
pub fn fit_pjdr(x1: &ModalityMatrix, x2: &ModalityMatrix, dim: usize) -> Result<BaselineModel> {
    let x = stack_block_diagonal(x1, x2)?;
    check_dim(dim, x.nrows())?;
    let mean = x.column_mean();
    let mut centered = x;
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let m = centered.ncols() as f64;
    let cov = &centered * centered.transpose() / (m - 1.0).max(1.0);
    let (values, theta) = top_eigenvectors_as_rows(&cov, cov.nrows());
    let top = values[0].max(0.0);
    let rank = values.iter().filter(|v| **v > 1e-10 * top.max(1e-300)).count();
    if dim > rank {
        return Err(Error::param(
            "dim",
            format!("{dim} exceeds the rank {rank} of the stacked data"),
        ));
    }
    Ok(BaselineModel {
        theta: theta.rows(0, dim).into_owned(),
        d1: x1.num_features(),
        d2: x2.num_features(),
        method: BaselineMethod::Pjdr,
        dim,
        k: None,
        sigma: None,
        eigenvalues: values.iter().take(dim).copied().collect(),
        regularized: false,
    })
}

/// Locality-preserving projection over the stacked system:
/// `X̃LX̃ᵀ v = λ X̃DX̃ᵀ v`, keeping the `d` smallest non-null eigenvalues.
fn fit_lpp(
    x: &DMatrix<f64>,
    w: &AdjacencyMatrix,
    dim: usize,
) -> Result<(DMatrix<f64>, Vec<f64>, bool)> {
    let total = x.nrows();
    check_dim(dim, total)?;
    let lap = build_laplacian(w)?;
    let a = x * lap.matrix() * x.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let degrees = lap.degrees();
    let mut xd = x.clone();
    for (j, mut col) in xd.column_iter_mut().enumerate() {
        col *= degrees[j];
    }
    let b = &xd * x.transpose();
    let mut b = (&b + b.transpose()) * 0.5;

    let (b_vals, _) = sym_eigen_ascending(&b);
    let b_max = b_vals[total - 1].abs().max(1e-300);
    let mut regularized = false;
    if b_vals[0] <= 1e-12 * b_max {
        b += DMatrix::identity(total, total) * DEGREE_RIDGE;
        regularized = true;
    }
    let (values, vectors) = generalized_sym_eigen(&a, &b)?;
    let keep: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] > NULL_EIGENVALUE)
        .take(dim)
        .collect();
    if keep.len() < dim {
        return Err(Error::Degenerate(format!(
            "only {} non-trivial locality-preserving directions, {dim} requested",
            keep.len()
        )));
    }
    let mut theta = DMatrix::zeros(dim, total);
    for (row, &i) in keep.iter().enumerate() {
        theta.set_row(row, &vectors.column(i).transpose());
    }
    Ok((theta, keep.iter().map(|&i| values[i]).collect(), regularized))
}

/// Unsupervised alignment: Gaussian kNN graph on the stacked samples.
pub fn fit_lusma(
    x1: &ModalityMatrix,
    x2: &ModalityMatrix,
    dim: usize,
    k: usize,
    sigma: f64,
) -> Result<BaselineModel> {
    let x = stack_block_diagonal(x1, x2)?;
    let w = build_knn_gaussian_adjacency(&x, k, sigma)?;
    let (theta, eigenvalues, regularized) = fit_lpp(&x, &w, dim)?;
    Ok(BaselineModel {
        theta,
        d1: x1.num_features(),
        d2: x2.num_features(),
        method: BaselineMethod::Lusma,
        dim,
        k: Some(k),
        sigma: Some(sigma),
        eigenvalues,
        regularized,
    })
}

/// Supervised alignment: same-class graph on the stacked samples.
pub fn fit_lsma(
    x1: &ModalityMatrix,
    x2: &ModalityMatrix,
    labels: &LabelEncoding,
    dim: usize,
) -> Result<BaselineModel> {
    let x = stack_block_diagonal(x1, x2)?;
    if labels.len() != x1.num_samples() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: x1.num_samples(),
            got: labels.len(),
        });
    }
    let w = build_joint_supervised_adjacency(labels)?;
    let (theta, eigenvalues, regularized) = fit_lpp(&x, &w, dim)?;
    Ok(BaselineModel {
        theta,
        d1: x1.num_features(),
        d2: x2.num_features(),
        method: BaselineMethod::Lsma,
        dim,
        k: None,
        sigma: None,
        eigenvalues,
        regularized,
    })
}

/// Residual `‖X̃LX̃ᵀv − λX̃DX̃ᵀv‖` for every returned direction, given the
/// graph the model was built with.
pub fn lpp_residuals(x: &DMatrix<f64>, w: &AdjacencyMatrix, model: &BaselineModel) -> Result<Vec<f64>> {
    let lap = build_laplacian(w)?;
    let a = x * lap.matrix() * x.transpose();
    let b = x * lap.degree_matrix() * x.transpose();
    let b = if model.regularized {
        b + DMatrix::identity(x.nrows(), x.nrows()) * DEGREE_RIDGE
    } else {
        b
    };
    Ok((0..model.theta.nrows())
        .map(|i| {
            let v = model.theta.row(i).transpose();
            (&a * &v - (&b * &v) * model.eigenvalues[i]).norm()
        })
        .collect())
}
