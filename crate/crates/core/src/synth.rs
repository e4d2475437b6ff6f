//! Paired-modality synthetic data with a shared latent class structure.
//!
//! Each sample has a latent vector `z = μ_c + ε` (unit Gaussian `ε`), and
//! modality `m` observes `x_m = A_m z + τ_m η` through a map `A_m` with
//! orthonormal columns. Both modalities see the same `z` sample-for-sample.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{onehot_encode, LabelEncoding, ModalityMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub latent_dim: usize,
    pub d1: usize,
    pub d2: usize,
    pub num_classes: usize,
    pub per_class: usize,
    /// Minimum pairwise distance between class means in latent space.
    pub separation: f64,
    pub noise1: f64,
    pub noise2: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            latent_dim: 5,
            d1: 12,
            d2: 9,
            num_classes: 4,
            per_class: 300,
            separation: 3.0,
            noise1: 0.5,
            noise2: 0.5,
            seed: 0,
        }
    }
}

const MEAN_RETRIES: usize = 1000;

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::param("latent_dim", "must be at least 1"));
        }
        if self.latent_dim > self.d1.min(self.d2) {
            return Err(Error::param(
                "latent_dim",
                format!("{} exceeds min(d1, d2) = {}", self.latent_dim, self.d1.min(self.d2)),
            ));
        }
        if self.num_classes == 0 || self.per_class == 0 {
            return Err(Error::param("num_classes/per_class", "must be at least 1"));
        }
        if !(self.separation > 0.0) || !self.separation.is_finite() {
            return Err(Error::param("separation", "must be positive"));
        }
        for (name, t) in [("noise1", self.noise1), ("noise2", self.noise2)] {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub x1: ModalityMatrix,
    pub x2: ModalityMatrix,
    pub labels: LabelEncoding,
    /// `latent_dim × N`
    pub latent: DMatrix<f64>,
    /// `d1 × latent_dim`, orthonormal columns.
    pub map1: DMatrix<f64>,
    /// `d2 × latent_dim`, orthonormal columns.
    pub map2: DMatrix<f64>,
    /// `latent_dim × C`
    pub class_means: DMatrix<f64>,
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn orthonormal_columns(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let qr = gaussian(rows, cols, rng).qr();
    let q = qr.q();
    let r = qr.r();
    // fix the sign ambiguity of QR so the map is a deterministic function of the draw
    let mut q = q.columns(0, cols).into_owned();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn draw_means(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let k = spec.latent_dim;
    let scale = spec.separation / std::f64::consts::SQRT_2;
    let mut means = DMatrix::zeros(k, spec.num_classes);
    for c in 0..spec.num_classes {
        let mut placed = false;
        for _ in 0..MEAN_RETRIES {
            let cand: DVector<f64> = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal)) * scale;
            let ok = (0..c).all(|j| (means.column(j) - &cand).norm() >= spec.separation);
            if ok {
                means.set_column(c, &cand);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Degenerate(format!(
                "could not place {} class means at separation {} in {} latent dimensions",
                spec.num_classes, spec.separation, k
            )));
        }
    }
    Ok(means)
}

/// Generates a dataset; identical specs give identical output.
pub fn generate(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let map1 = orthonormal_columns(spec.d1, spec.latent_dim, &mut rng);
    let map2 = orthonormal_columns(spec.d2, spec.latent_dim, &mut rng);
    let class_means = draw_means(spec, &mut rng)?;

    let n = spec.num_classes * spec.per_class;
    let labels: Vec<usize> = (0..n).map(|i| i / spec.per_class).collect();
    let mut latent = gaussian(spec.latent_dim, n, &mut rng);
    for (i, &c) in labels.iter().enumerate() {
        let mut col = latent.column_mut(i);
        col += class_means.column(c);
    }
    let x1 = &map1 * &latent + gaussian(spec.d1, n, &mut rng) * spec.noise1;
    let x2 = &map2 * &latent + gaussian(spec.d2, n, &mut rng) * spec.noise2;

    Ok(SynthDataset {
        x1: ModalityMatrix::new(x1, 1)?,
        x2: ModalityMatrix::new(x2, 2)?,
        labels: onehot_encode(&labels, spec.num_classes)?,
        latent,
        map1,
        map2,
        class_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let spec = SynthSpec {
            per_class: 20,
            ..SynthSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.x1, b.x1);
        assert_eq!(a.x2, b.x2);
        assert_eq!(a.labels, b.labels);
        let c = generate(&SynthSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.x1, c.x1);
    }

    #[test]
    fn maps_are_orthonormal_and_means_separated() {
        let spec = SynthSpec {
            per_class: 5,
            separation: 4.0,
            ..SynthSpec::default()
        };
        let ds = generate(&spec).unwrap();
        for map in [&ds.map1, &ds.map2] {
            let g = map.transpose() * map;
            assert!((g - DMatrix::identity(spec.latent_dim, spec.latent_dim)).norm() < 1e-12);
        }
        for i in 0..spec.num_classes {
            for j in 0..i {
                assert!((ds.class_means.column(i) - ds.class_means.column(j)).norm() >= 4.0);
            }
        }
        assert_eq!(ds.labels.class_counts(), &[5, 5, 5, 5]);
    }

    #[test]
    fn noiseless_modalities_share_latent() {
        let spec = SynthSpec {
            per_class: 10,
            noise1: 0.0,
            noise2: 0.0,
            ..SynthSpec::default()
        };
        let ds = generate(&spec).unwrap();
        let z1 = ds.map1.transpose() * ds.x1.data();
        let z2 = ds.map2.transpose() * ds.x2.data();
        assert!((&z1 - &ds.latent).amax() < 1e-12);
        assert!((&z2 - &ds.latent).amax() < 1e-12);
        assert!((z1 - z2).amax() < 1e-12);
    }

    #[test]
    fn noiseless_covariance_has_latent_rank() {
        let spec = SynthSpec {
            per_class: 50,
            noise1: 0.0,
            noise2: 0.0,
            ..SynthSpec::default()
        };
        let ds = generate(&spec).unwrap();
        for x in [ds.x1.data(), ds.x2.data()] {
            let mean = x.column_mean();
            let mut centered = x.clone();
            for mut col in centered.column_iter_mut() {
                col -= &mean;
            }
            let cov = &centered * centered.transpose() / (x.ncols() as f64 - 1.0);
            let sv = cov.singular_values();
            assert_eq!(sv.iter().filter(|s| **s > 1e-8).count(), spec.latent_dim);
        }
    }

    #[test]
    fn infeasible_separation_rejected() {
        let spec = SynthSpec {
            latent_dim: 1,
            d1: 2,
            d2: 2,
            num_classes: 50,
            per_class: 1,
            separation: 10.0,
            ..SynthSpec::default()
        };
        assert!(matches!(generate(&spec), Err(Error::Degenerate(_))));
    }

    #[test]
    fn invalid_spec_rejected() {
        let bad = SynthSpec {
            latent_dim: 10,
            ..SynthSpec::default()
        };
        assert!(generate(&bad).is_err());
        let bad = SynthSpec {
            noise1: -1.0,
            ..SynthSpec::default()
        };
        assert!(generate(&bad).is_err());
    }
}
