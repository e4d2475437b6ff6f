//! Stratified k-fold grid search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_model, split::stratified_folds, Method, MethodParams, PipelineOptions};
use crate::data::PairedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub dims: Vec<usize>,
    pub ks: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub folds: usize,
}

impl Default for CvGrid {
    fn default() -> Self {
        let logs = vec![1e-2, 1e-1, 1.0, 1e1, 1e2];
        Self {
            dims: vec![10, 20, 30, 40, 50],
            ks: vec![10, 20, 30, 40, 50],
            sigmas: logs.clone(),
            alphas: logs.clone(),
            betas: logs,
            folds: 10,
        }
    }
}

impl CvGrid {
    pub fn validate(&self) -> Result<()> {
        let sets = [
            ("dims", self.dims.len()),
            ("ks", self.ks.len()),
            ("sigmas", self.sigmas.len()),
            ("alphas", self.alphas.len()),
            ("betas", self.betas.len()),
        ];
        if let Some((name, _)) = sets.iter().find(|(_, n)| *n == 0) {
            return Err(Error::param("grid", format!("{name} is empty")));
        }
        if self.folds < 2 {
            return Err(Error::param("folds", format!("need at least 2, got {}", self.folds)));
        }
        Ok(())
    }

    /// Grid points relevant to `method`, sorted by the tie-break order
    /// (smaller d, α, β, k, σ first). Parameters the method ignores keep
    /// the values of `base`.
    pub fn points(&self, method: Method, base: &MethodParams) -> Vec<MethodParams> {
        let one = |v: &[f64], keep: bool, default: f64| if keep { v.to_vec() } else { vec![default] };
        let dims = if method.uses_dim() { self.dims.clone() } else { vec![base.dim] };
        let ks = if method.uses_knn() { self.ks.clone() } else { vec![base.k] };
        let sigmas = one(&self.sigmas, method.uses_knn(), base.sigma);
        let alphas = one(&self.alphas, method.uses_alpha_beta(), base.alpha);
        let betas = one(&self.betas, method.uses_alpha_beta(), base.beta);
        let mut out = Vec::new();
        for &dim in &dims {
            for &alpha in &alphas {
                for &beta in &betas {
                    for &k in &ks {
                        for &sigma in &sigmas {
                            out.push(MethodParams {
                                dim,
                                alpha,
                                beta,
                                k,
                                sigma,
                                ..*base
                            });
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| {
            a.dim
                .cmp(&b.dim)
                .then(a.alpha.total_cmp(&b.alpha))
                .then(a.beta.total_cmp(&b.beta))
                .then(a.k.cmp(&b.k))
                .then(a.sigma.total_cmp(&b.sigma))
        });
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub params: MethodParams,
    /// Held-out modality-2 OA per fold; empty when the point was skipped.
    pub fold_scores: Vec<f64>,
    pub mean_oa: Option<f64>,
    /// Why the point could not be scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub method: Method,
    pub best: MethodParams,
    pub best_mean_oa: f64,
    pub table: Vec<CvRow>,
    /// Sample indices of each held-out fold.
    pub folds: Vec<Vec<usize>>,
}

fn score_fold(
    data: &PairedDataset,
    held_out: &[usize],
    method: Method,
    params: &MethodParams,
    options: &PipelineOptions,
) -> Result<f64> {
    let n = data.num_samples();
    let mut in_fold = vec![false; n];
    for &i in held_out {
        in_fold[i] = true;
    }
    let train: Vec<usize> = (0..n).filter(|&i| !in_fold[i]).collect();
    let model = fit_model(&data.select(&train)?, method, params, options)?;
    let test = data.x2.select_samples(held_out)?;
    let truth: Vec<usize> = held_out.iter().map(|&i| data.labels.labels()[i]).collect();
    let pred = model.predict(2, &test)?;
    let hits = pred.iter().zip(&truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// k-fold CV of `method` over `grid`, fitting on both modalities and scoring
/// OA on the held-out fold's modality-2 samples. The best point maximises
/// the mean OA; ties go to the earliest point in [`CvGrid::points`] order.
pub fn cross_validate(
    data: &PairedDataset,
    method: Method,
    grid: &CvGrid,
    base: &MethodParams,
    options: &PipelineOptions,
    seed: u64,
) -> Result<CvOutcome> {
    grid.validate()?;
    let folds = stratified_folds(data.labels.labels(), grid.folds, seed)?;
    let total = data.x1.num_features() + data.x2.num_features();
    let points = grid.points(method, base);

    let table: Vec<CvRow> = points
        .par_iter()
        .map(|params| {
            if method.uses_dim() && params.dim > total {
                return CvRow {
                    params: *params,
                    fold_scores: Vec::new(),
                    mean_oa: None,
                    skipped: Some(format!("dim {} exceeds {total} features", params.dim)),
                };
            }
            let scores: Result<Vec<f64>> = folds
                .par_iter()
                .map(|held| score_fold(data, held, method, params, options))
                .collect();
            match scores {
                Ok(s) => CvRow {
                    params: *params,
                    mean_oa: Some(s.iter().sum::<f64>() / s.len() as f64),
                    fold_scores: s,
                    skipped: None,
                },
                Err(e) => CvRow {
                    params: *params,
                    fold_scores: Vec::new(),
                    mean_oa: None,
                    skipped: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, row) in table.iter().enumerate() {
        if let Some(oa) = row.mean_oa {
            if best.is_none_or(|(_, b)| oa > b) {
                best = Some((i, oa));
            }
        }
    }
    let (idx, best_mean_oa) = best.ok_or_else(|| {
        Error::Degenerate(format!(
            "no grid point could be evaluated ({})",
            table
                .iter()
                .filter_map(|r| r.skipped.as_deref())
                .next()
                .unwrap_or("empty grid")
        ))
    })?;
    Ok(CvOutcome {
        method,
        best: table[idx].params,
        best_mean_oa,
        table,
        folds,
    })
}
