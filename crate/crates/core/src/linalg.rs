//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// `‖M Mᵀ − I‖_F` for a row-orthonormal candidate `M`.
pub fn orthogonality_error(m: &DMatrix<f64>) -> f64 {
    let g = m * m.transpose();
    (g - DMatrix::identity(m.nrows(), m.nrows())).norm()
}

/// Largest asymmetry `max |a_ij − a_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Flips `v` so its largest-magnitude entry is positive (first one on ties).
pub fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Symmetric eigendecomposition with eigenvalues in ascending order and
/// sign-normalised eigenvectors (columns).
pub fn sym_eigen_ascending(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let SymmetricEigen {
        eigenvalues,
        eigenvectors,
    } = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]).then(a.cmp(&b)));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eigenvalues[i]));
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (k, &i) in order.iter().enumerate() {
        let mut v: DVector<f64> = eigenvectors.column(i).into_owned();
        fix_sign(&mut v);
        vectors.set_column(k, &v);
    }
    (values, vectors)
}

/// Rows of the result are the top-`d` eigenvectors of symmetric `m`, by
/// descending eigenvalue.
pub fn top_eigenvectors_as_rows(m: &DMatrix<f64>, d: usize) -> (DVector<f64>, DMatrix<f64>) {
    let (values, vectors) = sym_eigen_ascending(m);
    let n = values.len();
    let d = d.min(n);
    let mut rows = DMatrix::zeros(d, m.nrows());
    let mut top = DVector::zeros(d);
    for k in 0..d {
        let idx = n - 1 - k;
        top[k] = values[idx];
        rows.set_row(k, &vectors.column(idx).transpose());
    }
    (top, rows)
}

/// Nearest row-orthonormal matrix in Frobenius norm: `U Vᵀ` from the thin
/// SVD of `m` (`d × D`, `d ≤ D`).
pub fn project_rows_orthonormal(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() > m.ncols() {
        return Err(Error::DimensionMismatch {
            what: "orthonormal rows exceed columns",
            expected: m.ncols(),
            got: m.nrows(),
        });
    }
    let svd = m.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Singular("svd failed to converge")),
    };
    Ok(u * vt)
}

/// Solves `X · A = B` for `X` with `A` symmetric positive definite.
pub fn solve_right_spd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or(Error::Singular("matrix is not positive definite"))?;
    // X A = B  <=>  A Xᵀ = Bᵀ
    Ok(chol.solve(&b.transpose()).transpose())
}

/// Generalised symmetric-definite eigenproblem `A v = λ B v` with `B`
/// positive definite. Eigenvalues ascend; eigenvectors are `B`-orthonormal
/// columns (`Vᵀ B V = I`).
pub fn generalized_sym_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or(Error::Singular("B is not positive definite"))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(Error::Singular("cholesky factor not invertible"))?;
    let c = &l_inv * a * l_inv.transpose();
    let (values, u) = sym_eigen_ascending(&c);
    let mut v = l_inv.transpose() * u;
    for k in 0..v.ncols() {
        let mut col: DVector<f64> = v.column(k).into_owned();
        fix_sign(&mut col);
        v.set_column(k, &col);
    }
    Ok((values, v))
}
