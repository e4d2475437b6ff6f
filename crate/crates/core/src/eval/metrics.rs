//! Confusion matrices, OA / AA / κ, and replication aggregates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                what: "prediction count",
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        let mut counts = vec![vec![0u64; num_classes]; num_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            for l in [t, p] {
                if l >= num_classes {
                    return Err(Error::LabelOutOfRange {
                        label: l,
                        num_classes,
                    });
                }
            }
            counts[t][p] += 1;
        }
        Ok(Self { counts })
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if let Some(bad) = counts.iter().find(|r| r.len() != c) {
            return Err(Error::DimensionMismatch {
                what: "confusion row length",
                expected: c,
                got: bad.len(),
            });
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.counts.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }
}

/// Mean and standard deviation of a statistic across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
}

impl Spread {
    /// Population standard deviation; summation in the given order.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStats {
    pub replications: usize,
    pub oa: Spread,
    pub aa: Spread,
    pub kappa: Spread,
    pub per_class_accuracy: Vec<Spread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    pub per_class_accuracy: Vec<f64>,
    pub confusion: ConfusionMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replication: Option<ReplicationStats>,
}

/// OA, per-class accuracy, AA and Cohen's κ from a confusion matrix.
///
/// κ is evaluated as `(T·tr − Σ r_c k_c) / (T² − Σ r_c k_c)` in integer
/// arithmetic before the final division, and is 0 when chance agreement is 1.
pub fn compute_metrics(confusion: &ConfusionMatrix) -> Result<EvaluationReport> {
    let total = confusion.total();
    if total == 0 {
        return Err(Error::Degenerate("confusion matrix is empty".into()));
    }
    let rows = confusion.row_sums();
    let cols = confusion.col_sums();
    if let Some(class) = rows.iter().position(|&r| r == 0) {
        return Err(Error::EmptyClass { class });
    }
    let trace = confusion.trace();
    let oa = trace as f64 / total as f64;
    let per_class_accuracy: Vec<f64> = (0..confusion.num_classes())
        .map(|c| confusion.counts()[c][c] as f64 / rows[c] as f64)
        .collect();
    let aa = per_class_accuracy.iter().sum::<f64>() / per_class_accuracy.len() as f64;

    let t = total as u128;
    let chance: u128 = rows.iter().zip(&cols).map(|(&r, &c)| r as u128 * c as u128).sum();
    let denom = t * t - chance;
    let kappa = if denom == 0 {
        0.0
    } else {
        (t as f64 * trace as f64 - chance as f64) / denom as f64
    };
    Ok(EvaluationReport {
        oa,
        aa,
        kappa,
        per_class_accuracy,
        confusion: confusion.clone(),
        replication: None,
    })
}

/// Aggregates replication reports: the headline numbers become the means,
/// the confusion matrix the elementwise sum.
pub fn aggregate(reports: &[EvaluationReport]) -> Result<EvaluationReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Degenerate("no replications to aggregate".into()))?;
    let c = first.per_class_accuracy.len();
    let mut summed = vec![vec![0u64; c]; c];
    for r in reports {
        if r.confusion.num_classes() != c {
            return Err(Error::DimensionMismatch {
                what: "replication class count",
                expected: c,
                got: r.confusion.num_classes(),
            });
        }
        for (i, row) in r.confusion.counts().iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                summed[i][j] += v;
            }
        }
    }
    let pick = |f: fn(&EvaluationReport) -> f64| Spread::of(&reports.iter().map(f).collect::<Vec<_>>());
    let oa = pick(|r| r.oa);
    let aa = pick(|r| r.aa);
    let kappa = pick(|r| r.kappa);
    let per_class: Vec<Spread> = (0..c)
        .map(|k| Spread::of(&reports.iter().map(|r| r.per_class_accuracy[k]).collect::<Vec<_>>()))
        .collect();
    Ok(EvaluationReport {
        oa: oa.mean,
        aa: aa.mean,
        kappa: kappa.mean,
        per_class_accuracy: per_class.iter().map(|s| s.mean).collect(),
        confusion: ConfusionMatrix { counts: summed },
        replication: Some(ReplicationStats {
            replications: reports.len(),
            oa,
            aa,
            kappa,
            per_class_accuracy: per_class,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_class_hand_example() {
        let cm = ConfusionMatrix::from_counts(vec![vec![40, 10], vec![20, 30]]).unwrap();
        let r = compute_metrics(&cm).unwrap();
        assert_eq!(r.oa, 0.7);
        assert_eq!(r.aa, 0.7);
        assert_eq!(r.kappa, 0.4);
        assert_eq!(r.per_class_accuracy, vec![0.8, 0.6]);
    }

    /// Independent κ from floating-point marginal probabilities.
    fn kappa_oracle(counts: &[Vec<u64>]) -> f64 {
        let total: f64 = counts.iter().flatten().map(|&v| v as f64).sum();
        let c = counts.len();
        let po = (0..c).map(|i| counts[i][i] as f64).sum::<f64>() / total;
        let pe = (0..c)
            .map(|i| {
                let r: f64 = counts[i].iter().map(|&v| v as f64).sum();
                let k: f64 = counts.iter().map(|row| row[i] as f64).sum();
                r * k
            })
            .sum::<f64>()
            / (total * total);
        (po - pe) / (1.0 - pe)
    }

    #[test]
    fn perfect_diagonal() {
        for c in 1..6 {
            let counts: Vec<Vec<u64>> = (0..c)
                .map(|i| (0..c).map(|j| if i == j { 3 + i as u64 } else { 0 }).collect())
                .collect();
            let r = compute_metrics(&ConfusionMatrix::from_counts(counts).unwrap()).unwrap();
            assert_eq!(r.oa, 1.0);
            assert_eq!(r.aa, 1.0);
            // one class: chance agreement is 1, κ defined as 0
            assert_eq!(r.kappa, if c == 1 { 0.0 } else { 1.0 });
        }
    }

    #[test]
    fn uniform_confusion_has_zero_kappa() {
        let cm = ConfusionMatrix::from_counts(vec![vec![5; 4]; 4]).unwrap();
        let r = compute_metrics(&cm).unwrap();
        assert_eq!(r.kappa, 0.0);
        assert_eq!(r.oa, 0.25);
    }

    #[test]
    fn empty_true_class_rejected() {
        let cm = ConfusionMatrix::from_counts(vec![vec![3, 1], vec![0, 0]]).unwrap();
        assert_eq!(compute_metrics(&cm).unwrap_err(), Error::EmptyClass { class: 1 });
        let cm = ConfusionMatrix::from_counts(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(compute_metrics(&cm).is_err());
    }

    #[test]
    fn from_predictions_counts() {
        let cm = ConfusionMatrix::from_predictions(&[0, 0, 1, 2], &[0, 1, 1, 0], 3).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 1, 0], vec![0, 1, 0], vec![1, 0, 0]]);
        assert!(ConfusionMatrix::from_predictions(&[0, 3], &[0, 0], 3).is_err());
    }

    #[test]
    fn single_replication_has_zero_spread() {
        let cm = ConfusionMatrix::from_counts(vec![vec![4, 1], vec![2, 3]]).unwrap();
        let r = compute_metrics(&cm).unwrap();
        let agg = aggregate(std::slice::from_ref(&r)).unwrap();
        let stats = agg.replication.unwrap();
        assert_eq!(stats.oa.std, 0.0);
        assert_eq!(stats.oa.mean, r.oa);
    }

    fn confusion_strategy() -> impl Strategy<Value = Vec<Vec<u64>>> {
        (2usize..6).prop_flat_map(|c| {
            prop::collection::vec(prop::collection::vec(0u64..50, c), c).prop_map(|mut m| {
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] += 1;
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn metric_ranges_and_identities(counts in confusion_strategy()) {
            let cm = ConfusionMatrix::from_counts(counts.clone()).unwrap();
            let r = compute_metrics(&cm).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.oa));
            prop_assert!((0.0..=1.0).contains(&r.aa));
            prop_assert!((-1.0..=1.0).contains(&r.kappa));
            let mean = r.per_class_accuracy.iter().sum::<f64>() / r.per_class_accuracy.len() as f64;
            prop_assert!((r.aa - mean).abs() < 1e-15);
            prop_assert!((r.oa - cm.trace() as f64 / cm.total() as f64).abs() < 1e-15);
            let oracle = kappa_oracle(&counts);
            if oracle.is_finite() {
                prop_assert!((r.kappa - oracle).abs() < 1e-12);
            }
        }

        #[test]
        fn metrics_invariant_under_relabeling(counts in confusion_strategy(), rot in 0usize..5) {
            let c = counts.len();
            let perm: Vec<usize> = (0..c).map(|i| (i + rot) % c).collect();
            let mut permuted = vec![vec![0u64; c]; c];
            for i in 0..c {
                for j in 0..c {
                    permuted[perm[i]][perm[j]] = counts[i][j];
                }
            }
            let a = compute_metrics(&ConfusionMatrix::from_counts(counts).unwrap()).unwrap();
            let b = compute_metrics(&ConfusionMatrix::from_counts(permuted).unwrap()).unwrap();
            prop_assert_eq!(a.oa, b.oa);
            prop_assert!((a.aa - b.aa).abs() < 1e-15);
            prop_assert!((a.kappa - b.kappa).abs() < 1e-15);
        }
    }
}
