//! Stratified train/test splits and k-fold partitions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Ascending sample indices.
    pub train: Vec<usize>,
    /// Ascending sample indices, disjoint from `train`.
    pub test: Vec<usize>,
    /// One message per class that was too small for `per_class`.
    pub warnings: Vec<String>,
}

fn indices_by_class(labels: &[usize]) -> Vec<Vec<usize>> {
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); c];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    by_class
}

/// Draws `per_class` training samples from every class uniformly without
/// replacement; the rest form the test set. A class with at most
/// `per_class` samples contributes all but one to training and is reported
/// in `warnings`.
pub fn stratified_split(labels: &[usize], per_class: usize, seed: u64) -> Result<Split> {
    if per_class == 0 {
        return Err(Error::param("per_class", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut warnings = Vec::new();
    for (class, mut idx) in indices_by_class(labels).into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::Degenerate(format!(
                "class {class} has {} sample(s); a split needs at least 2",
                idx.len()
            )));
        }
        let take = if idx.len() > per_class {
            per_class
        } else {
            warnings.push(format!(
                "class {class} has {} samples, training on {} and testing on 1",
                idx.len(),
                idx.len() - 1
            ));
            idx.len() - 1
        };
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..take]);
        test.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train,
        test,
        warnings,
    })
}

/// Assigns every sample to one of `folds` folds so each fold holds every
/// class. Returns the fold membership lists (ascending indices).
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::param("folds", format!("need at least 2, got {folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    for (class, mut idx) in indices_by_class(labels).into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        if idx.len() < folds {
            return Err(Error::Degenerate(format!(
                "class {class} has {} samples, fewer than {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            out[k % folds].push(i);
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}
