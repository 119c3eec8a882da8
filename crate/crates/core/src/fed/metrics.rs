use serde::{Deserialize, Serialize};

use crate::data::EmbeddingDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{argmax_predictions, ClassifierModel, ClientOneHot, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Accuracy,
    /// Area under the ROC curve; binary tasks only.
    Auc,
}

impl Metric {
    pub fn check_task(&self, task: Task) -> Result<()> {
        match (self, task) {
            (Metric::Auc, Task::Multiclass(_)) => {
                Err(Error::config("AUC is only defined for binary tasks"))
            }
            _ => Ok(()),
        }
    }

    /// Scores a logit matrix against labels.
    pub fn score(&self, logits: &Matrix, labels: &[usize], task: Task) -> Result<f64> {
        self.check_task(task)?;
        match self {
            Metric::Accuracy => accuracy(&argmax_predictions(logits, task), labels),
            Metric::Auc => auc(&logits.column(0), labels),
        }
    }
}

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::dim("prediction and label counts differ"));
    }
    if labels.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty set".into()));
    }
    let hits = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mann–Whitney AUC: the probability that a random positive outscores a
/// random negative, ties counting one half. Labels must be 0 or 1.
pub fn auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::dim("score and label counts differ"));
    }
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
        return Err(Error::Label {
            index,
            label,
            num_classes: 2,
        });
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs both positive and negative samples".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average 1-based ranks over tied runs
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64 * avg;
        i = j + 1;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// Logits for every sample, each evaluated with its own client's one-hot
/// code. Unconditioned models ignore the client ids.
pub fn predict_dataset(model: &ClassifierModel, ds: &EmbeddingDataset) -> Result<Matrix> {
    let Some(k) = model.num_clients() else {
        return model.predict(ds.features(), ClientOneHot::new(0, 1)?);
    };
    let clients = ds
        .clients()
        .ok_or_else(|| Error::config("conditioned model needs client ids for every sample"))?;
    let mut groups = vec![Vec::new(); k];
    for (i, &c) in clients.iter().enumerate() {
        if c >= k {
            return Err(Error::config(format!(
                "sample {i} has client {c}, model has {k} clients"
            )));
        }
        groups[c].push(i);
    }
    let mut logits = Matrix::zeros(ds.len(), model.task().output_dim());
    for (c, idx) in groups.iter().enumerate().filter(|(_, g)| !g.is_empty()) {
        let out = model.predict(&ds.features().select_rows(idx), ClientOneHot::new(c, k)?)?;
        for (r, &i) in idx.iter().enumerate() {
            logits.row_mut(i).copy_from_slice(out.row(r));
        }
    }
    Ok(logits)
}

/// Metric of `model` on a dataset, using each sample's client id for
/// conditioned models.
pub fn evaluate(model: &ClassifierModel, ds: &EmbeddingDataset, metric: Metric) -> Result<f64> {
    let logits = predict_dataset(model, ds)?;
    metric.score(&logits, ds.labels(), model.task())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        // positives {0.9, 0.4}, negatives {0.6, 0.1}: 3 of 4 pairs ordered
        assert_eq!(auc(&[0.9, 0.4, 0.6, 0.1], &[1, 1, 0, 0]).unwrap(), 0.75);
        assert_eq!(auc(&[0.5; 4], &[1, 0, 1, 0]).unwrap(), 0.5);
        assert!(matches!(
            auc(&[0.1, 0.2], &[1, 1]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn auc_matches_pair_count() {
        let scores = [0.3, 0.3, 0.7, 0.1, 0.7, 0.5, 0.3];
        let labels = [1, 0, 1, 0, 0, 1, 1];
        let mut wins = 0.0;
        let mut pairs = 0.0;
        let pos = scores.iter().zip(&labels).filter(|(_, &l)| l == 1);
        for (&si, _) in pos {
            let neg = scores.iter().zip(&labels).filter(|(_, &l)| l == 0);
            for (&sj, _) in neg {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
        assert!((auc(&scores, &labels).unwrap() - wins / pairs).abs() < 1e-15);
    }

    #[test]
    fn equal_predictions_give_majority_fraction() {
        let logits = Matrix::zeros(5, 3);
        let labels = [0, 0, 0, 1, 2];
        let acc = Metric::Accuracy
            .score(&logits, &labels, Task::Multiclass(3))
            .unwrap();
        assert_eq!(acc, 0.6);
    }

    #[test]
    fn auc_rejects_multiclass() {
        assert!(Metric::Auc.check_task(Task::Multiclass(3)).is_err());
    }
}
