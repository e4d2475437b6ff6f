//! Evaluation under the cross-modality protocol: fit on both modalities,
//! classify samples of a single modality.

mod classifier;
mod cv;
mod experiment;
mod metrics;
mod split;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use classifier::{squared_hinge_objective, train_binary, BinarySolution, ClassifierConfig, LinearClassifier};
pub use cv::{cross_validate, CvGrid, CvOutcome, CvRow};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentOutcome};
pub use metrics::{aggregate, compute_metrics, ConfusionMatrix, EvaluationReport, ReplicationStats, Spread};
pub use split::{stratified_folds, stratified_split, Split};

use crate::baselines::{fit_lsma, fit_lusma, fit_pjdr, BaselineModel};
use crate::data::{CoSpaceModel, ModalityMatrix, PairedDataset, Standardizer};
use crate::error::{Error, Result};
use crate::solver::{fit_cospace_logged, AdmmConfig, FitLog, SolverConfig};

/// `theta_m · x_m`.
pub fn project_modality(theta_m: &DMatrix<f64>, x_m: &ModalityMatrix) -> Result<DMatrix<f64>> {
    if theta_m.ncols() != x_m.num_features() {
        return Err(Error::DimensionMismatch {
            what: "projection columns vs modality features",
            expected: x_m.num_features(),
            got: theta_m.ncols(),
        });
    }
    Ok(theta_m * x_m.data())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "cospace-l2")]
    CospaceL2,
    #[serde(rename = "cospace-l1")]
    CospaceL1,
    #[serde(rename = "pjdr")]
    Pjdr,
    #[serde(rename = "lusma")]
    Lusma,
    #[serde(rename = "lsma")]
    Lsma,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Raw,
        Method::CospaceL2,
        Method::CospaceL1,
        Method::Pjdr,
        Method::Lusma,
        Method::Lsma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::CospaceL2 => "cospace-l2",
            Method::CospaceL1 => "cospace-l1",
            Method::Pjdr => "pjdr",
            Method::Lusma => "lusma",
            Method::Lsma => "lsma",
        }
    }

    pub fn uses_dim(self) -> bool {
        self != Method::Raw
    }

    pub fn uses_alpha_beta(self) -> bool {
        matches!(self, Method::CospaceL2 | Method::CospaceL1)
    }

    pub fn uses_knn(self) -> bool {
        self == Method::Lusma
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param("method", format!("unknown method {s:?}")))
    }
}

/// Hyperparameters for any method; each method reads the ones it uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub sigma: f64,
    pub max_iter: usize,
    pub zeta: f64,
    pub admm: AdmmConfig,
}

impl Default for MethodParams {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            dim: solver.dim,
            alpha: solver.alpha,
            beta: solver.beta,
            k: 10,
            sigma: 1.0,
            max_iter: solver.max_iter,
            zeta: solver.zeta,
            admm: solver.admm,
        }
    }
}

impl MethodParams {
    pub fn solver_config(&self, method: Method) -> SolverConfig {
        let base = match method {
            Method::CospaceL1 => SolverConfig::sparse(self.dim, self.alpha, self.beta),
            _ => SolverConfig::ridge(self.dim, self.alpha, self.beta),
        };
        SolverConfig {
            max_iter: self.max_iter,
            zeta: self.zeta,
            admm: self.admm,
            ..base
        }
    }
}

/// Learned map from each modality into the shared space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Projection {
    /// Raw features, no shared space.
    Identity,
    CoSpace(CoSpaceModel),
    Baseline(BaselineModel),
}

impl Projection {
    /// The block of Θ acting on modality `m`, if the projection has one.
    pub fn theta_block(&self, modality: u8) -> Option<DMatrix<f64>> {
        match (self, modality) {
            (Projection::Identity, _) => None,
            (Projection::CoSpace(m), 1) => Some(m.theta1()),
            (Projection::CoSpace(m), 2) => Some(m.theta2()),
            (Projection::Baseline(m), 1) => Some(m.theta1()),
            (Projection::Baseline(m), 2) => Some(m.theta2()),
            _ => None,
        }
    }

    pub fn cospace(&self) -> Option<&CoSpaceModel> {
        match self {
            Projection::CoSpace(m) => Some(m),
            _ => None,
        }
    }
}

/// Classifier head(s) on top of the projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Head {
    /// One classifier on the shared space, trained on both modalities'
    /// projected training samples.
    Shared { classifier: LinearClassifier },
    /// Raw features: one classifier per modality.
    PerModality {
        modality1: LinearClassifier,
        modality2: LinearClassifier,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Standardise each modality with training statistics before fitting.
    pub standardize: bool,
    pub classifier: ClassifierConfig,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            standardize: true,
            classifier: ClassifierConfig::default(),
        }
    }
}

/// Everything needed to classify a single-modality sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub method: Method,
    pub params: MethodParams,
    pub num_classes: usize,
    pub d1: usize,
    pub d2: usize,
    pub scaler1: Standardizer,
    pub scaler2: Standardizer,
    pub projection: Projection,
    pub head: Head,
    #[serde(default)]
    pub fit_log: Option<FitLog>,
}

/// Fits `method` on both modalities of `data` and trains the classifier.
pub fn fit_model(
    data: &PairedDataset,
    method: Method,
    params: &MethodParams,
    options: &PipelineOptions,
) -> Result<FittedModel> {
    let (scaler1, scaler2) = if options.standardize {
        (Standardizer::fit(data.x1.data()), Standardizer::fit(data.x2.data()))
    } else {
        (
            Standardizer::identity(data.x1.num_features()),
            Standardizer::identity(data.x2.num_features()),
        )
    };
    let x1 = scaler1.apply_modality(&data.x1)?;
    let x2 = scaler2.apply_modality(&data.x2)?;
    let labels = &data.labels;
    let c = labels.num_classes();

    let mut fit_log = None;
    let projection = match method {
        Method::Raw => Projection::Identity,
        Method::CospaceL2 | Method::CospaceL1 => {
            let (model, log) = fit_cospace_logged(&x1, &x2, labels, &params.solver_config(method))?;
            fit_log = Some(log);
            Projection::CoSpace(model)
        }
        Method::Pjdr => Projection::Baseline(fit_pjdr(&x1, &x2, params.dim)?),
        Method::Lusma => Projection::Baseline(fit_lusma(&x1, &x2, params.dim, params.k, params.sigma)?),
        Method::Lsma => Projection::Baseline(fit_lsma(&x1, &x2, labels, params.dim)?),
    };

    let head = match &projection {
        Projection::Identity => Head::PerModality {
            modality1: LinearClassifier::train(x1.data(), labels.labels(), c, &options.classifier)?,
            modality2: LinearClassifier::train(x2.data(), labels.labels(), c, &options.classifier)?,
        },
        p => {
            let z1 = project_modality(&p.theta_block(1).expect("projection block"), &x1)?;
            let z2 = project_modality(&p.theta_block(2).expect("projection block"), &x2)?;
            let n = z1.ncols();
            let mut z = DMatrix::zeros(z1.nrows(), 2 * n);
            z.columns_mut(0, n).copy_from(&z1);
            z.columns_mut(n, n).copy_from(&z2);
            let stacked: Vec<usize> = labels.labels().iter().chain(labels.labels()).copied().collect();
            Head::Shared {
                classifier: LinearClassifier::train(&z, &stacked, c, &options.classifier)?,
            }
        }
    };

    Ok(FittedModel {
        method,
        params: *params,
        num_classes: c,
        d1: data.x1.num_features(),
        d2: data.x2.num_features(),
        scaler1,
        scaler2,
        projection,
        head,
        fit_log,
    })
}

impl FittedModel {
    /// Shared-space (or raw, standardised) features of modality `m`. Reads
    /// only `x` and the modality-`m` parameters.
    pub fn features(&self, modality: u8, x: &ModalityMatrix) -> Result<DMatrix<f64>> {
        let scaler = match modality {
            1 => &self.scaler1,
            2 => &self.scaler2,
            _ => return Err(Error::param("modality", format!("must be 1 or 2, got {modality}"))),
        };
        let xs = scaler.apply_modality(x)?;
        match self.projection.theta_block(modality) {
            Some(theta) => project_modality(&theta, &xs),
            None => Ok(xs.into_data()),
        }
    }

    /// Predicted labels for samples of a single modality.
    pub fn predict(&self, modality: u8, x: &ModalityMatrix) -> Result<Vec<usize>> {
        let z = self.features(modality, x)?;
        match &self.head {
            Head::Shared { classifier } => classifier.predict(&z),
            Head::PerModality { modality1, modality2 } => {
                if modality == 1 {
                    modality1.predict(&z)
                } else {
                    modality2.predict(&z)
                }
            }
        }
    }

    /// Metrics of single-modality predictions against `truth`.
    pub fn evaluate(&self, modality: u8, x: &ModalityMatrix, truth: &[usize]) -> Result<(EvaluationReport, Vec<usize>)> {
        let pred = self.predict(modality, x)?;
        let cm = ConfusionMatrix::from_predictions(truth, &pred, self.num_classes)?;
        Ok((compute_metrics(&cm)?, pred))
    }
}
