//! Dataset and model value types shared across the crate.
//!
//! Matrices follow a features × samples orientation: each column is one
//! sample (pixel), each row one band/feature. Two co-registered modalities
//! share the same sample order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One modality's feature matrix (features × samples).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityMatrix {
    data: DMatrix<f64>,
    modality_id: u8,
}

impl ModalityMatrix {
    pub fn new(data: DMatrix<f64>, modality_id: u8) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::Degenerate("modality has no features".into()));
        }
        if data.ncols() == 0 {
            return Err(Error::Degenerate("modality has no samples".into()));
        }
        check_finite(&data)?;
        Ok(Self { data, modality_id })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn modality_id(&self) -> u8 {
        self.modality_id
    }

    pub fn num_features(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.data.ncols()
    }

    /// Columns `indices`, in the given order.
    pub fn select_samples(&self, indices: &[usize]) -> Result<Self> {
        let n = self.num_samples();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::DimensionMismatch {
                what: "sample index",
                expected: n,
                got: bad,
            });
        }
        Ok(Self {
            data: self.data.select_columns(indices),
            modality_id: self.modality_id,
        })
    }
}

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Class-index labels together with their one-hot matrix and per-class counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEncoding {
    labels: Vec<usize>,
    num_classes: usize,
    onehot: DMatrix<f64>,
    class_counts: Vec<usize>,
}

/// One-hot encode `labels` over `num_classes` classes. Every class must
/// occur at least once because the supervised graph weights divide by the
/// class size.
pub fn onehot_encode(labels: &[usize], num_classes: usize) -> Result<LabelEncoding> {
    if labels.is_empty() {
        return Err(Error::Degenerate("empty label vector".into()));
    }
    if num_classes == 0 {
        return Err(Error::param("num_classes", "must be at least 1"));
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
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass { class });
    }
    let mut onehot = DMatrix::zeros(num_classes, labels.len());
    for (i, &l) in labels.iter().enumerate() {
        onehot[(l, i)] = 1.0;
    }
    Ok(LabelEncoding {
        labels: labels.to_vec(),
        num_classes,
        onehot,
        class_counts: counts,
    })
}

impl LabelEncoding {
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn onehot(&self) -> &DMatrix<f64> {
        &self.onehot
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Argmax over each one-hot column.
    pub fn decode(&self) -> Vec<usize> {
        argmax_columns(&self.onehot)
    }

    /// Re-encodes a subset of samples, keeping the class inventory.
    pub fn select(&self, indices: &[usize]) -> Result<LabelEncoding> {
        let sub: Vec<usize> = indices
            .iter()
            .map(|&i| {
                self.labels.get(i).copied().ok_or(Error::DimensionMismatch {
                    what: "label index",
                    expected: self.labels.len(),
                    got: i,
                })
            })
            .collect::<Result<_>>()?;
        onehot_encode(&sub, self.num_classes)
    }
}

/// Row index of the largest entry in each column; the first wins on ties.
pub fn argmax_columns(m: &DMatrix<f64>) -> Vec<usize> {
    (0..m.ncols())
        .map(|c| {
            let col = m.column(c);
            let mut best = 0;
            for r in 1..col.len() {
                if col[r] > col[best] {
                    best = r;
                }
            }
            best
        })
        .collect()
}

/// Two co-registered modalities with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    pub x1: ModalityMatrix,
    pub x2: ModalityMatrix,
    pub labels: LabelEncoding,
}

impl PairedDataset {
    pub fn new(x1: ModalityMatrix, x2: ModalityMatrix, labels: LabelEncoding) -> Result<Self> {
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
        Ok(Self { x1, x2, labels })
    }

    pub fn num_samples(&self) -> usize {
        self.x1.num_samples()
    }

    pub fn modality(&self, id: u8) -> Result<&ModalityMatrix> {
        match id {
            1 => Ok(&self.x1),
            2 => Ok(&self.x2),
            _ => Err(Error::param("modality", format!("must be 1 or 2, got {id}"))),
        }
    }

    /// Subset of samples; the class inventory is kept even if a class
    /// vanishes from the subset, in which case this fails.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            x1: self.x1.select_samples(indices)?,
            x2: self.x2.select_samples(indices)?,
            labels: self.labels.select(indices)?,
        })
    }
}

/// The joint optimization problem over 2N stacked samples.
///
/// Columns `0..N` hold modality-1 samples and columns `N..2N` modality-2
/// samples, in the same sample order. Rows `0..d1` of `x_tilde` belong to
/// modality 1 and rows `d1..d1+d2` to modality 2.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSystem {
    x_tilde: DMatrix<f64>,
    y_tilde: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    d1: usize,
    d2: usize,
    n: usize,
}

/// Builds the block-diagonal feature matrix and duplicated label matrix.
pub fn build_stacked_system(
    x1: &ModalityMatrix,
    x2: &ModalityMatrix,
    labels: &LabelEncoding,
    laplacian: DMatrix<f64>,
) -> Result<StackedSystem> {
    let n = x1.num_samples();
    if x2.num_samples() != n {
        return Err(Error::SampleCountMismatch {
            n1: n,
            n2: x2.num_samples(),
        });
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: n,
            got: labels.len(),
        });
    }
    if laplacian.nrows() != 2 * n {
        return Err(Error::DimensionMismatch {
            what: "laplacian rows",
            expected: 2 * n,
            got: laplacian.nrows(),
        });
    }
    if laplacian.ncols() != 2 * n {
        return Err(Error::DimensionMismatch {
            what: "laplacian columns",
            expected: 2 * n,
            got: laplacian.ncols(),
        });
    }
    let (d1, d2) = (x1.num_features(), x2.num_features());
    let mut x_tilde = DMatrix::zeros(d1 + d2, 2 * n);
    x_tilde.view_mut((0, 0), (d1, n)).copy_from(x1.data());
    x_tilde.view_mut((d1, n), (d2, n)).copy_from(x2.data());

    let y = labels.onehot();
    let mut y_tilde = DMatrix::zeros(y.nrows(), 2 * n);
    y_tilde.columns_mut(0, n).copy_from(y);
    y_tilde.columns_mut(n, n).copy_from(y);

    Ok(StackedSystem {
        x_tilde,
        y_tilde,
        laplacian,
        d1,
        d2,
        n,
    })
}

impl StackedSystem {
    pub fn x_tilde(&self) -> &DMatrix<f64> {
        &self.x_tilde
    }

    pub fn y_tilde(&self) -> &DMatrix<f64> {
        &self.y_tilde
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    /// Samples per modality (half the stacked column count).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_classes(&self) -> usize {
        self.y_tilde.nrows()
    }

    pub fn total_features(&self) -> usize {
        self.d1 + self.d2
    }
}

/// Regression penalty applied to P.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    /// Squared Frobenius norm; closed-form P-step.
    Ridge,
    /// Entrywise l1 norm; soft-threshold ADMM P-step.
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// A fitted shared-subspace model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoSpaceModel {
    /// `d × (d1 + d2)`, row-orthonormal.
    pub theta: DMatrix<f64>,
    /// `C × d` regression matrix.
    pub p: DMatrix<f64>,
    pub d1: usize,
    pub d2: usize,
    pub penalty_kind: PenaltyKind,
    pub hyperparams: Hyperparams,
    /// Objective value before the first iteration followed by one value per
    /// completed iteration.
    pub history: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
}

impl CoSpaceModel {
    pub fn theta1(&self) -> DMatrix<f64> {
        self.theta.columns(0, self.d1).into_owned()
    }

    pub fn theta2(&self) -> DMatrix<f64> {
        self.theta.columns(self.d1, self.d2).into_owned()
    }

    /// `‖ΘΘᵀ − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        crate::linalg::orthogonality_error(&self.theta)
    }
}

/// Per-feature standardization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
}

impl Standardizer {
    /// Zero-mean, unit-variance per row. Constant rows keep scale 1.
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.ncols() as f64;
        let mean = x.column_mean();
        let mut scale = DVector::from_element(x.nrows(), 1.0);
        for r in 0..x.nrows() {
            let var = x.row(r).iter().map(|v| (v - mean[r]).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 {
                scale[r] = sd;
            }
        }
        Self { mean, scale }
    }

    /// Identity transform for `dim` features.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: DVector::zeros(dim),
            scale: DVector::from_element(dim, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "standardizer features",
                expected: self.dim(),
                got: x.nrows(),
            });
        }
        let mut out = x.clone();
        for r in 0..out.nrows() {
            let (m, s) = (self.mean[r], self.scale[r]);
            out.row_mut(r).apply(|v| *v = (*v - m) / s);
        }
        Ok(out)
    }

    pub fn apply_modality(&self, x: &ModalityMatrix) -> Result<ModalityMatrix> {
        ModalityMatrix::new(self.apply(x.data())?, x.modality_id())
    }
}
