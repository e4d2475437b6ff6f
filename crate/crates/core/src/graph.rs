//! Sample graphs and their Laplacians.
//!
//! Two adjacency kinds are supported: the supervised same-class graph with
//! weights `1/N_k`, and a symmetric kNN graph with Gaussian weights used by
//! the locality-preserving baselines.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::LabelEncoding;
use crate::error::{Error, Result};
use crate::linalg::asymmetry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjacencyKind {
    Supervised,
    KnnGaussian,
    Custom,
}

/// Symmetric, non-negative, zero-diagonal weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    w: DMatrix<f64>,
    kind: AdjacencyKind,
}

impl AdjacencyMatrix {
    /// Validates a user-supplied weight matrix.
    pub fn from_matrix(w: DMatrix<f64>) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::DimensionMismatch {
                what: "adjacency columns",
                expected: w.nrows(),
                got: w.ncols(),
            });
        }
        let asym = asymmetry(&w);
        if asym > 0.0 {
            return Err(Error::NotSymmetric(asym));
        }
        for i in 0..w.nrows() {
            if w[(i, i)] != 0.0 {
                return Err(Error::param("adjacency", format!("diagonal entry {i} is non-zero")));
            }
        }
        if let Some(bad) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::param("adjacency", format!("invalid weight {bad}")));
        }
        Ok(Self {
            w,
            kind: AdjacencyKind::Custom,
        })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn kind(&self) -> AdjacencyKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.w.nrows()
    }
}

/// `L = D − W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    l: DMatrix<f64>,
    degrees: Vec<f64>,
}

impl LaplacianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.l
    }

    /// Diagonal of the degree matrix `D`.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.degrees))
    }
}

/// Same-class weights `1/N_k` where `N_k` counts class `k` in `labels`
/// itself. The diagonal is left at zero.
pub fn build_supervised_adjacency(labels: &[usize], num_classes: usize) -> Result<AdjacencyMatrix> {
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
    let m = labels.len();
    let mut w = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in 0..m {
            if i != j && labels[i] == labels[j] {
                w[(i, j)] = 1.0 / counts[labels[i]] as f64;
            }
        }
    }
    Ok(AdjacencyMatrix {
        w,
        kind: AdjacencyKind::Supervised,
    })
}

/// Supervised adjacency over the 2N stacked samples: the labels repeated
/// once per modality, so cross-modal same-class pairs are connected too.
pub fn build_joint_supervised_adjacency(labels: &LabelEncoding) -> Result<AdjacencyMatrix> {
    let stacked: Vec<usize> = labels.labels().iter().chain(labels.labels()).copied().collect();
    build_supervised_adjacency(&stacked, labels.num_classes())
}

/// Gaussian-weighted kNN graph over the columns of `x`.
///
/// An edge `i–j` exists when either endpoint lists the other among its `k`
/// nearest neighbours (Euclidean, ties broken by lower index); its weight is
/// `exp(−‖xᵢ − xⱼ‖² / (2σ²))`.
pub fn build_knn_gaussian_adjacency(
    x: &DMatrix<f64>,
    k: usize,
    sigma: f64,
) -> Result<AdjacencyMatrix> {
    let m = x.ncols();
    if k == 0 || k >= m {
        return Err(Error::param("k", format!("need 1 <= k < {m}, got {k}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    let dist = pairwise_sq_distances(x);
    if let Some(pos) = dist.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: pos % m,
            col: pos / m,
        });
    }
    let denom = 2.0 * sigma * sigma;
    let mut w = DMatrix::zeros(m, m);
    let mut order: Vec<usize> = Vec::with_capacity(m);
    for i in 0..m {
        order.clear();
        order.extend((0..m).filter(|&j| j != i));
        order.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        for &j in &order[..k] {
            let v = (-dist[(i, j)] / denom).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(AdjacencyMatrix {
        w,
        kind: AdjacencyKind::KnnGaussian,
    })
}

fn pairwise_sq_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let m = x.ncols();
    let mut d = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in (j + 1)..m {
            let v = (x.column(i) - x.column(j)).norm_squared();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// `L = D − W` with `D` the diagonal of row sums.
pub fn build_laplacian(w: &AdjacencyMatrix) -> Result<LaplacianMatrix> {
    let asym = asymmetry(&w.w);
    if asym > 0.0 {
        return Err(Error::NotSymmetric(asym));
    }
    let degrees: Vec<f64> = w.w.row_iter().map(|r| r.sum()).collect();
    let mut l = -w.w.clone();
    for (i, d) in degrees.iter().enumerate() {
        l[(i, i)] += d;
    }
    Ok(LaplacianMatrix { l, degrees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn supervised_examples() {
        let w = build_supervised_adjacency(&[0, 0], 1).unwrap();
        assert_eq!(w.weights(), &DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));

        let w = build_supervised_adjacency(&[0, 1], 2).unwrap();
        assert_eq!(w.weights(), &DMatrix::zeros(2, 2));

        let w = build_supervised_adjacency(&[0, 0, 1], 2).unwrap();
        let mut expected = DMatrix::zeros(3, 3);
        expected[(0, 1)] = 0.5;
        expected[(1, 0)] = 0.5;
        assert_eq!(w.weights(), &expected);
        assert_eq!(w.kind(), AdjacencyKind::Supervised);
    }

    #[test]
    fn supervised_rejects_empty_class() {
        assert_eq!(
            build_supervised_adjacency(&[0, 0, 2], 3).unwrap_err(),
            Error::EmptyClass { class: 1 }
        );
    }

    #[test]
    fn joint_graph_is_block_structured() {
        let labels = crate::data::onehot_encode(&[0, 1, 0, 2, 1], 3).unwrap();
        let w = build_joint_supervised_adjacency(&labels).unwrap();
        let n = 5;
        let w = w.weights();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert_eq!(w[(i, j + n)], w[(i, j)]);
                    assert_eq!(w[(i + n, j + n)], w[(i, j)]);
                }
            }
        }
        // class 0 occurs twice per modality, four times stacked
        assert_eq!(w[(0, 2)], 0.25);
        assert_eq!(w[(0, n)], 0.25);
    }

    #[test]
    fn knn_identical_points() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let w = build_knn_gaussian_adjacency(&x, 1, 0.3).unwrap();
        assert_eq!(w.weights()[(0, 1)], 1.0);
        assert_eq!(w.weights()[(1, 0)], 1.0);
    }

    #[test]
    fn knn_wide_kernel_tends_to_one() {
        let x = DMatrix::from_row_slice(1, 2, &[0.0, 5.0]);
        let w = build_knn_gaussian_adjacency(&x, 1, 1e6).unwrap();
        assert!((w.weights()[(0, 1)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn knn_collinear_points() {
        // Points 0, 1, 3: nn(0)=1, nn(1)=0, nn(2)=1.
        let x = DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 3.0]);
        let w = build_knn_gaussian_adjacency(&x, 1, 1.0).unwrap();
        let w = w.weights();
        assert!((w[(0, 1)] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((w[(1, 0)] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((w[(1, 2)] - (-2.0f64).exp()).abs() < 1e-15);
        assert!((w[(2, 1)] - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(w[(0, 2)], 0.0);
        assert_eq!(w[(2, 0)], 0.0);
    }

    #[test]
    fn knn_rejects_bad_params() {
        let x = DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 3.0]);
        assert!(build_knn_gaussian_adjacency(&x, 3, 1.0).is_err());
        assert!(build_knn_gaussian_adjacency(&x, 1, 0.0).is_err());
        let mut bad = x.clone();
        bad[(0, 1)] = f64::INFINITY;
        assert!(build_knn_gaussian_adjacency(&bad, 1, 1.0).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let w = AdjacencyMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]))
            .unwrap();
        let l = build_laplacian(&w).unwrap();
        assert_eq!(
            l.matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5])
        );
        let z = AdjacencyMatrix::from_matrix(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(build_laplacian(&z).unwrap().matrix(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn laplacian_rejects_asymmetric() {
        let w = AdjacencyMatrix {
            w: DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.4, 0.0]),
            kind: AdjacencyKind::Custom,
        };
        assert!(matches!(build_laplacian(&w), Err(Error::NotSymmetric(_))));
        assert!(AdjacencyMatrix::from_matrix(w.w.clone()).is_err());
    }

    fn random_labels(rng: &mut ChaCha8Rng, m: usize) -> (Vec<usize>, usize) {
        let c = rng.gen_range(1..=4.min(m));
        let mut labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..c)).collect();
        for k in 0..c {
            labels[k] = k;
        }
        (labels, c)
    }

    proptest! {
        #[test]
        fn supervised_laplacian_properties(seed in 0u64..1000, m in 2usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (labels, c) = random_labels(&mut rng, m);
            let w = build_supervised_adjacency(&labels, c).unwrap();
            let l = build_laplacian(&w).unwrap();
            let l = l.matrix();
            prop_assert_eq!(asymmetry(l), 0.0);
            for r in l.row_iter() {
                prop_assert!(r.sum().abs() <= 1e-10);
            }
            let ones = nalgebra::DVector::from_element(m, 1.0);
            prop_assert!((l * &ones).norm() <= 1e-10);
            for _ in 0..20 {
                let x = nalgebra::DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
                prop_assert!(x.dot(&(l * &x)) >= -1e-10);
            }
        }

        #[test]
        fn trace_matches_pairwise_identity(seed in 0u64..1000, m in 2usize..20, rows in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = DMatrix::from_fn(2, m, |_, _| rng.gen_range(-1.0..1.0));
            let w = build_knn_gaussian_adjacency(&x, 1.max(m / 3), 0.7).unwrap();
            let l = build_laplacian(&w).unwrap();
            let z = DMatrix::from_fn(rows, m, |_, _| rng.gen_range(-2.0..2.0));
            let tr = (&z * l.matrix() * z.transpose()).trace();
            let mut pairwise = 0.0;
            for i in 0..m {
                for j in 0..m {
                    pairwise += w.weights()[(i, j)] * (z.column(i) - z.column(j)).norm_squared();
                }
            }
            pairwise *= 0.5;
            prop_assert!((tr - pairwise).abs() <= 1e-8 * pairwise.abs().max(1e-12));
        }
    }
}
